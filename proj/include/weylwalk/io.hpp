#pragma once

// JSON files for measures and groups, and CSV output with shortest round-trip
// numbers.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "weylwalk/quotient.hpp"
#include "weylwalk/walk.hpp"

namespace weylwalk {

using Json = nlohmann::json;

/// Malformed or out-of-range configuration; field is a JSON pointer such as
/// /params/n_traj.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& message)
      : std::runtime_error(field + ": " + message), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

Json read_json_file(const std::filesystem::path& path);

Json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const Json& j, const std::string& field);

/// {"dim": d, "atoms": [{"matrix": [[...]], "weight": w}, ...]}
MeasureSpec measure_from_json(const Json& j, const std::string& field = "");
Json measure_to_json(const MeasureSpec& mu);

/// {"name": ..., "generators": [...], "reduction_mode": ..., "basepoint": [x, y]}.
/// Inverses may be listed; they are dropped before the group adds its own.
FuchsianGroup group_from_json(const Json& j, const std::string& field = "");
Json group_to_json(const FuchsianGroup& g);

std::string format_double(double v);
std::string hex64(std::uint64_t v);

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header);

  CsvWriter& operator<<(double v);
  CsvWriter& operator<<(std::int64_t v);
  CsvWriter& operator<<(int v) { return *this << static_cast<std::int64_t>(v); }
  CsvWriter& operator<<(const std::string& v);
  void end_row();

 private:
  void separate();
  std::ofstream out_;
  std::size_t columns_ = 0;
  std::size_t filled_ = 0;
};

/// CSV with step, t_1..t_d and optionally the k entries (row-major), plus
/// a JSON sidecar at path + ".json" with seed, step count and measure hash.
void write_trajectory(const TrajectoryRecord& rec, const MeasureSpec& mu, const std::filesystem::path& path);

}  // namespace weylwalk
