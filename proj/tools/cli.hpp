#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "weylwalk/io.hpp"

namespace weylwalk::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailed = 1;  // assertion failed or fatal numerical flag
inline constexpr int kExitConfig = 2;
inline constexpr int kExitRuntime = 3;

struct Diagnostic {
  std::string field;
  std::string message;
};

/// Typed access to the "params" object. Problems are recorded as diagnostics
/// and the default is returned, so a dry run reports every bad field at once.
class Params {
 public:
  Params(const Json& obj, std::vector<Diagnostic>& diags);

  int integer(const std::string& key, int def, int min = 1);
  std::int64_t integer64(const std::string& key, std::int64_t def, std::int64_t min = 1);
  double number(const std::string& key, double def, double min = -1e300, bool strict = false);
  /// An array, or {"from": a, "to": b, "step": h}.
  std::vector<double> numbers(const std::string& key, const std::vector<double>& def, double min = -1e300);
  std::vector<int> integers(const std::string& key, const std::vector<int>& def, int min = 1);
  std::string choice(const std::string& key, const std::string& def, const std::vector<std::string>& options);
  Point point(const std::string& key, Point def);
  std::vector<Point> points(const std::string& key);
  bool flag(const std::string& key, bool def);

  void fail(const std::string& key, const std::string& message);
  /// Reports keys that were never read.
  void finish();
  /// Every parameter with its effective value.
  const Json& effective() const { return effective_; }

 private:
  const Json* lookup(const std::string& key);
  Json obj_;
  std::vector<Diagnostic>& diags_;
  Json effective_ = Json::object();
  std::vector<std::string> seen_;
};

struct Context {
  Json config;
  std::filesystem::path config_dir;
  std::filesystem::path out;
  std::uint64_t seed = 1;
  bool dry_run = false;
  bool conjecture_band = false;
  std::vector<Diagnostic>* diags = nullptr;

  /// Loaded from the "measure" key: a path relative to the config, or inline.
  const MeasureSpec& measure();
  const FuchsianGroup& group();
  Json measure_json() const { return measure_ ? measure_to_json(*measure_) : Json(); }
  Json group_json() const { return group_ ? group_to_json(*group_) : Json(); }

 private:
  std::optional<MeasureSpec> measure_;
  std::optional<FuchsianGroup> group_;
};

struct Outcome {
  Json metrics = Json::object();
  std::vector<std::string> warnings;
  std::vector<std::string> files;
};

struct Experiment {
  std::function<Outcome(Context&, Params&)> run;
  std::vector<std::string> metrics;
};

const std::map<std::string, Experiment>& experiments();

struct Options {
  std::string kind;  // empty for validate
  std::filesystem::path config;
  std::optional<std::filesystem::path> out;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> jobs;
  bool conjecture_band = false;
  bool validate_only = false;
};

/// Loads, validates and runs; returns the process exit code.
int run(const Options& opt);

int main_entry(int argc, char** argv);

}  // namespace weylwalk::cli
