#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "cli.hpp"

using namespace weylwalk;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("weylwalk_test_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

fs::path write_config(const fs::path& dir, const Json& j) {
  const fs::path p = dir / "config.json";
  std::ofstream(p) << j.dump(2);
  return p;
}

Json reference_measure_json() { return measure_to_json(reference_measure()); }

struct Result {
  int code;
  std::string err;
};

Result invoke(const cli::Options& opt) {
  std::ostringstream err;
  std::ostringstream out;
  auto* old_err = std::cerr.rdbuf(err.rdbuf());
  auto* old_out = std::cout.rdbuf(out.rdbuf());
  const int code = cli::run(opt);
  std::cerr.rdbuf(old_err);
  std::cout.rdbuf(old_out);
  return {code, err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int count_lines(const std::string& s, const std::string& needle) {
  int n = 0;
  for (std::size_t pos = s.find(needle); pos != std::string::npos; pos = s.find(needle, pos + 1)) ++n;
  return n;
}

}  // namespace

TEST_CASE("cartan-selftest with defaults") {
  const fs::path dir = scratch("selftest");
  cli::Options opt;
  opt.kind = "cartan-selftest";
  opt.config = write_config(dir, {{"params", {{"samples", 50}}}});
  opt.out = dir / "out";
  const Result r = invoke(opt);
  CHECK(r.code == cli::kExitOk);
  CHECK(fs::exists(dir / "out" / "manifest.json"));
  CHECK(fs::exists(dir / "out" / "selftest.csv"));
  const Json manifest = read_json_file(dir / "out" / "manifest.json");
  CHECK(manifest["params"]["samples"] == 50);
  CHECK(manifest["params"]["dims"].size() == 5);
  CHECK(manifest["metrics"]["max_reconstruction_error"].get<double>() < 1e-9);
  CHECK(slurp(dir / "out" / "summary.txt").find("result: PASS") != std::string::npos);
}

TEST_CASE("validation diagnostics") {
  const fs::path dir = scratch("validate");
  cli::Options opt;
  opt.validate_only = true;

  opt.config = write_config(dir, {{"experiment", "deviation"}, {"measure", reference_measure_json()}});
  CHECK(invoke(opt).code == cli::kExitOk);

  opt.config = write_config(
      dir, {{"experiment", "deviation"}, {"measure", reference_measure_json()}, {"params", {{"n_traj", -3}}}});
  Result r = invoke(opt);
  CHECK(r.code == cli::kExitConfig);
  CHECK(count_lines(r.err, "config error") == 1);
  CHECK(r.err.find("/params/n_traj") != std::string::npos);

  Json skewed = reference_measure_json();
  skewed["atoms"][1]["weight"] = 0.4;
  opt.config = write_config(dir, {{"experiment", "deviation"}, {"measure", skewed}});
  r = invoke(opt);
  CHECK(r.code == cli::kExitConfig);
  CHECK(r.err.find("sum to 0.9") != std::string::npos);

  opt.config = write_config(dir, {{"experiment", "volume-check"}, {"params", {{"radius", 6}}}});
  r = invoke(opt);
  CHECK(r.code == cli::kExitConfig);
  CHECK(r.err.find("/params/radius: unknown key") != std::string::npos);

  opt.config = write_config(dir, {{"experiment", "volume-check"}, {"colour", "red"}});
  CHECK(invoke(opt).code == cli::kExitConfig);

  opt.config = write_config(dir, {{"experiment", "dichotomy"}, {"measure", reference_measure_json()},
                                  {"group", "groups/missing.json"}});
  r = invoke(opt);
  CHECK(r.code == cli::kExitConfig);
  CHECK(r.err.find("/group") != std::string::npos);

  opt.config = write_config(
      dir, {{"experiment", "volume-check"}, {"assertions", {{{"metric", "nope"}, {"op", "<"}, {"value", 1}}}}});
  r = invoke(opt);
  CHECK(r.code == cli::kExitConfig);
  CHECK(r.err.find("/assertions/0/metric") != std::string::npos);

  std::ofstream(dir / "broken.json") << "{\"experiment\": \n\"volume-check\",,}";
  opt.config = dir / "broken.json";
  r = invoke(opt);
  CHECK(r.code == cli::kExitConfig);
  CHECK(r.err.find("line 2") != std::string::npos);
}

TEST_CASE("assertions decide the exit code") {
  const fs::path dir = scratch("assert");
  cli::Options opt;
  opt.kind = "volume-check";
  opt.out = dir / "out";
  opt.config = write_config(dir, {{"params", {{"samples", 20000}}},
                                  {"assertions", {{{"metric", "mc_relative_error"}, {"op", "<", }, {"value", -1.0}}}}});
  CHECK(invoke(opt).code == cli::kExitFailed);
  CHECK(slurp(dir / "out" / "summary.txt").find("FAIL mc_relative_error < -1") != std::string::npos);
  opt.config = write_config(dir, {{"params", {{"samples", 20000}}},
                                  {"assertions", {{{"metric", "exact_volume"}, {"op", ">"}, {"value", 600.0}}}}});
  CHECK(invoke(opt).code == cli::kExitOk);
}

TEST_CASE("identical config and seed give identical CSV bytes") {
  const fs::path dir = scratch("repro");
  cli::Options opt;
  opt.kind = "deviation";
  opt.config = write_config(dir, {{"measure", reference_measure_json()},
                                  {"params", {{"n", 300}, {"n_traj", 6}, {"burn", 200}, {"r_grid", {1.0, 2.0, 4.0}}}}});
  opt.seed = 42;
  opt.out = dir / "a";
  opt.jobs = 1;
  REQUIRE(invoke(opt).code == cli::kExitOk);
  opt.out = dir / "b";
  opt.jobs = 4;
  REQUIRE(invoke(opt).code == cli::kExitOk);
  for (const char* f : {"density.csv", "deviation.csv"}) CHECK(slurp(dir / "a" / f) == slurp(dir / "b" / f));
  opt.seed = 43;
  opt.out = dir / "c";
  REQUIRE(invoke(opt).code == cli::kExitOk);
  CHECK(slurp(dir / "a" / "deviation.csv") != slurp(dir / "c" / "deviation.csv"));
  const Json manifest = read_json_file(dir / "a" / "manifest.json");
  CHECK(manifest["seed"] == 42);
  CHECK(manifest["mu_hash"] == hex64(reference_measure().hash()));
}

TEST_CASE("output directory from the environment") {
  const fs::path dir = scratch("env");
  setenv("WEYLWALK_OUT", (dir / "env_out").c_str(), 1);
  cli::Options opt;
  opt.kind = "volume-check";
  opt.config = write_config(dir, {{"params", {{"samples", 1000}}}});
  CHECK(invoke(opt).code == cli::kExitOk);
  CHECK(fs::exists(dir / "env_out" / "volume-check" / "volume.csv"));
  unsetenv("WEYLWALK_OUT");
}

TEST_CASE("dichotomy report for the modular group") {
  const fs::path dir = scratch("dichotomy");
  const FuchsianGroup modular = FuchsianGroup::modular();
  cli::Options opt;
  opt.kind = "dichotomy";
  opt.out = dir / "out";
  opt.config = write_config(dir, {{"measure", reference_measure_json()},
                                  {"group", group_to_json(modular)},
                                  {"params", {{"n_traj", 40}, {"starts", 4}}}});
  REQUIRE(invoke(opt).code == cli::kExitOk);
  const Json report = read_json_file(dir / "out" / "dichotomy.json");
  CHECK(report["verdict"] == "both_recurrent_signature");
  CHECK(report["mu_hash"] == hex64(reference_measure().hash()));
  CHECK(report["lambda"]["reduction_mode"] == "modular_exact");
  CHECK(report["evidence"]["walk"]["tail_flag"] == true);
}

TEST_CASE("measure and group files round-trip") {
  const MeasureSpec mu = reference_measure();
  const MeasureSpec back = measure_from_json(Json::parse(measure_to_json(mu).dump()));
  CHECK(back.hash() == mu.hash());

  // Listing inverses is allowed; they are dropped.
  Json g = group_to_json(FuchsianGroup::modular());
  g["generators"].push_back(matrix_to_json(Mat2(FuchsianGroup::modular().generators()[3])));
  CHECK(group_from_json(g).generator_count() == 2);
  Json bad = g;
  bad["generators"][0] = Json::array({Json::array({2.0, 0.0}), Json::array({0.0, 1.0})});
  CHECK_THROWS_AS(group_from_json(bad), ConfigError);
  bad = g;
  bad["reduction_mode"] = "cyclic_exact";
  CHECK_THROWS_AS(group_from_json(bad), ConfigError);
}

TEST_CASE("trajectory export") {
  const fs::path dir = scratch("trajectory");
  const MeasureSpec mu = reference_measure();
  const TrajectoryRecord rec = trajectory(mu, 25, 9);
  write_trajectory(rec, mu, dir / "traj.csv");
  const std::string csv = slurp(dir / "traj.csv");
  CHECK(count_lines(csv, "\n") == 26);
  CHECK(csv.rfind("step,t_1,t_2,k_11,k_12,k_21,k_22\n", 0) == 0);
  const Json side = read_json_file(dir / "traj.csv.json");
  CHECK(side["seed"] == 9);
  CHECK(side["n_steps"] == 25);
  CHECK(side["mu_hash"] == hex64(mu.hash()));
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(1.0 / 3.0) == "0.3333333333333333");
}
