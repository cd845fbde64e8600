#include "cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <iostream>
#include <set>

#include "CLI11.hpp"
#include "weylwalk/parallel.hpp"

namespace weylwalk::cli {

// Params ----------------------------------------------------------------------

Params::Params(const Json& obj, std::vector<Diagnostic>& diags) : obj_(obj), diags_(diags) {
  if (!obj_.is_null() && !obj_.is_object()) {
    diags_.push_back({"/params", "expected an object"});
    obj_ = Json::object();
  }
}

const Json* Params::lookup(const std::string& key) {
  seen_.push_back(key);
  if (obj_.is_null() || !obj_.contains(key)) return nullptr;
  return &obj_[key];
}

void Params::fail(const std::string& key, const std::string& message) { diags_.push_back({"/params/" + key, message}); }

int Params::integer(const std::string& key, int def, int min) {
  return static_cast<int>(integer64(key, def, min));
}

std::int64_t Params::integer64(const std::string& key, std::int64_t def, std::int64_t min) {
  std::int64_t v = def;
  if (const Json* j = lookup(key)) {
    if (!j->is_number_integer()) {
      fail(key, "expected an integer");
    } else if (j->get<std::int64_t>() < min) {
      fail(key, "must be >= " + std::to_string(min) + ", got " + std::to_string(j->get<std::int64_t>()));
    } else {
      v = j->get<std::int64_t>();
    }
  }
  effective_[key] = v;
  return v;
}

double Params::number(const std::string& key, double def, double min, bool strict) {
  double v = def;
  if (const Json* j = lookup(key)) {
    if (!j->is_number()) {
      fail(key, "expected a number");
    } else {
      const double x = j->get<double>();
      if (!std::isfinite(x) || x < min || (strict && x == min))
        fail(key, std::string("must be ") + (strict ? "> " : ">= ") + format_double(min) + ", got " + format_double(x));
      else
        v = x;
    }
  }
  effective_[key] = v;
  return v;
}

std::vector<double> Params::numbers(const std::string& key, const std::vector<double>& def, double min) {
  std::vector<double> v = def;
  if (const Json* j = lookup(key)) {
    std::vector<double> got;
    bool ok = true;
    if (j->is_array()) {
      for (const auto& x : *j) {
        if (!x.is_number()) {
          ok = false;
          break;
        }
        got.push_back(x.get<double>());
      }
    } else if (j->is_object() && j->size() == 3 && j->contains("from") && j->contains("to") && j->contains("step") &&
               (*j)["from"].is_number() && (*j)["to"].is_number() && (*j)["step"].is_number() &&
               (*j)["step"].get<double>() > 0.0) {
      const double from = (*j)["from"], to = (*j)["to"], step = (*j)["step"];
      const auto count = static_cast<long>(std::floor((to - from) / step + 1e-9));
      if (count > 1000000) ok = false;
      for (long i = 0; ok && i <= count; ++i) got.push_back(from + step * static_cast<double>(i));
    } else {
      ok = false;
    }
    if (!ok || got.empty()) {
      fail(key, "expected a non-empty array of numbers or {\"from\", \"to\", \"step\"}");
    } else if (*std::min_element(got.begin(), got.end()) < min) {
      fail(key, "entries must be >= " + format_double(min));
    } else {
      v = got;
    }
  }
  effective_[key] = v;
  return v;
}

std::vector<int> Params::integers(const std::string& key, const std::vector<int>& def, int min) {
  std::vector<int> v = def;
  if (const Json* j = lookup(key)) {
    std::vector<int> got;
    bool ok = j->is_array() && !j->empty();
    if (ok)
      for (const auto& x : *j) {
        if (!x.is_number_integer()) {
          ok = false;
          break;
        }
        got.push_back(x.get<int>());
      }
    if (!ok)
      fail(key, "expected a non-empty array of integers");
    else if (*std::min_element(got.begin(), got.end()) < min)
      fail(key, "entries must be >= " + std::to_string(min));
    else
      v = got;
  }
  effective_[key] = v;
  return v;
}

std::string Params::choice(const std::string& key, const std::string& def, const std::vector<std::string>& options) {
  std::string v = def;
  if (const Json* j = lookup(key)) {
    if (!j->is_string() || std::find(options.begin(), options.end(), j->get<std::string>()) == options.end()) {
      std::string all;
      for (const auto& o : options) all += (all.empty() ? "" : ", ") + o;
      fail(key, "expected one of: " + all);
    } else {
      v = j->get<std::string>();
    }
  }
  effective_[key] = v;
  return v;
}

namespace {

std::optional<Point> parse_point(const Json& j) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) return std::nullopt;
  const Point p(j[0].get<double>(), j[1].get<double>());
  if (!(p.imag() > 0.0) || !std::isfinite(p.real()) || !std::isfinite(p.imag())) return std::nullopt;
  return p;
}

}  // namespace

Point Params::point(const std::string& key, Point def) {
  Point v = def;
  if (const Json* j = lookup(key)) {
    if (auto p = parse_point(*j))
      v = *p;
    else
      fail(key, "expected [x, y] with y > 0");
  }
  effective_[key] = {v.real(), v.imag()};
  return v;
}

std::vector<Point> Params::points(const std::string& key) {
  std::vector<Point> v;
  if (const Json* j = lookup(key)) {
    bool ok = j->is_array();
    if (ok)
      for (const auto& x : *j) {
        auto p = parse_point(x);
        if (!p) {
          ok = false;
          break;
        }
        v.push_back(*p);
      }
    if (!ok) {
      fail(key, "expected an array of [x, y] with y > 0");
      v.clear();
    }
  }
  Json e = Json::array();
  for (const auto& p : v) e.push_back({p.real(), p.imag()});
  effective_[key] = e;
  return v;
}

bool Params::flag(const std::string& key, bool def) {
  bool v = def;
  if (const Json* j = lookup(key)) {
    if (!j->is_boolean())
      fail(key, "expected true or false");
    else
      v = j->get<bool>();
  }
  effective_[key] = v;
  return v;
}

void Params::finish() {
  if (!obj_.is_object()) return;
  for (const auto& [key, value] : obj_.items())
    if (std::find(seen_.begin(), seen_.end(), key) == seen_.end()) fail(key, "unknown key");
}

// Context ---------------------------------------------------------------------

namespace {

Json resolve(const Json& config, const std::string& key, const std::filesystem::path& dir) {
  if (!config.contains(key)) throw ConfigError("/" + key, "required by this experiment");
  const Json& v = config[key];
  if (v.is_string()) {
    std::filesystem::path p = v.get<std::string>();
    if (p.is_relative()) p = dir / p;
    if (!std::filesystem::exists(p)) throw ConfigError("/" + key, "file not found: " + p.string());
    return read_json_file(p);
  }
  if (v.is_object()) return v;
  throw ConfigError("/" + key, "expected a file path or an inline object");
}

}  // namespace

const MeasureSpec& Context::measure() {
  if (!measure_) measure_ = measure_from_json(resolve(config, "measure", config_dir), "/measure");
  return *measure_;
}

const FuchsianGroup& Context::group() {
  if (!group_) group_ = group_from_json(resolve(config, "group", config_dir), "/group");
  return *group_;
}

// Assertions ------------------------------------------------------------------

namespace {

const std::set<std::string> kTopLevel{"experiment", "description", "measure", "group",      "seed",
                                      "jobs",       "output",      "params",  "assertions", "fatal_flags"};
const std::vector<std::string> kOps{"<", "<=", ">", ">=", "==", "!="};

void check_assertions(const Json& config, const Experiment& exp, std::vector<Diagnostic>& diags) {
  if (!config.contains("assertions")) return;
  const Json& list = config["assertions"];
  if (!list.is_array()) {
    diags.push_back({"/assertions", "expected an array"});
    return;
  }
  for (std::size_t i = 0; i < list.size(); ++i) {
    const std::string f = "/assertions/" + std::to_string(i);
    const Json& a = list[i];
    if (!a.is_object()) {
      diags.push_back({f, "expected an object"});
      continue;
    }
    for (const auto& [key, value] : a.items())
      if (key != "metric" && key != "op" && key != "value") diags.push_back({f + "/" + key, "unknown key"});
    if (!a.contains("metric") || !a["metric"].is_string() ||
        std::find(exp.metrics.begin(), exp.metrics.end(), a["metric"].get<std::string>()) == exp.metrics.end()) {
      std::string all;
      for (const auto& m : exp.metrics) all += (all.empty() ? "" : ", ") + m;
      diags.push_back({f + "/metric", "expected one of: " + all});
    }
    if (!a.contains("op") || !a["op"].is_string() ||
        std::find(kOps.begin(), kOps.end(), a["op"].get<std::string>()) == kOps.end())
      diags.push_back({f + "/op", "expected one of < <= > >= == !="});
    if (!a.contains("value") || !(a["value"].is_number() || a["value"].is_string() || a["value"].is_boolean()))
      diags.push_back({f + "/value", "expected a number, string or boolean"});
  }
}

bool compare(const Json& actual, const std::string& op, const Json& expected) {
  if (actual.is_number() && expected.is_number()) {
    const double a = actual.get<double>(), e = expected.get<double>();
    if (op == "<") return a < e;
    if (op == "<=") return a <= e;
    if (op == ">") return a > e;
    if (op == ">=") return a >= e;
    if (op == "==") return a == e;
    return a != e;
  }
  if (op == "==") return actual == expected;
  if (op == "!=") return actual != expected;
  return false;
}

std::string show(const Json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); }

}  // namespace

// Run -------------------------------------------------------------------------

int run(const Options& opt) {
  std::vector<Diagnostic> diags;
  auto report = [&](int code) {
    for (const auto& d : diags) std::cerr << "config error: " << (d.field.empty() ? "/" : d.field) << ": " << d.message << '\n';
    return code;
  };

  Json config;
  try {
    config = read_json_file(opt.config);
  } catch (const ConfigError& e) {
    diags.push_back({e.field(), e.what()});
    return report(kExitConfig);
  }
  if (!config.is_object()) {
    diags.push_back({"/", "config must be a JSON object"});
    return report(kExitConfig);
  }
  for (const auto& [key, value] : config.items())
    if (!kTopLevel.count(key)) diags.push_back({"/" + key, "unknown key"});

  std::string kind = opt.kind;
  if (config.contains("experiment")) {
    if (!config["experiment"].is_string()) {
      diags.push_back({"/experiment", "expected a string"});
    } else if (kind.empty()) {
      kind = config["experiment"].get<std::string>();
    } else if (config["experiment"].get<std::string>() != kind) {
      diags.push_back({"/experiment", "config is for '" + config["experiment"].get<std::string>() +
                                          "' but the subcommand is '" + kind + "'"});
    }
  }
  const auto it = experiments().find(kind);
  if (it == experiments().end()) {
    diags.push_back({"/experiment", kind.empty() ? "missing" : "unknown experiment '" + kind + "'"});
    return report(kExitConfig);
  }
  const Experiment& exp = it->second;

  std::uint64_t seed = 1;
  if (config.contains("seed")) {
    if (!config["seed"].is_number_unsigned())
      diags.push_back({"/seed", "expected a non-negative integer"});
    else
      seed = config["seed"].get<std::uint64_t>();
  }
  if (opt.seed) seed = *opt.seed;
  unsigned jobs = 0;
  if (config.contains("jobs")) {
    if (!config["jobs"].is_number_unsigned())
      diags.push_back({"/jobs", "expected a non-negative integer"});
    else
      jobs = config["jobs"].get<unsigned>();
  }
  if (opt.jobs) jobs = *opt.jobs;
  bool fatal_flags = false;
  if (config.contains("fatal_flags")) {
    if (!config["fatal_flags"].is_boolean())
      diags.push_back({"/fatal_flags", "expected true or false"});
    else
      fatal_flags = config["fatal_flags"].get<bool>();
  }
  std::filesystem::path out;
  if (opt.out) {
    out = *opt.out;
  } else if (config.contains("output")) {
    if (!config["output"].is_string())
      diags.push_back({"/output", "expected a directory path"});
    else
      out = config["output"].get<std::string>();
  } else if (const char* env = std::getenv("WEYLWALK_OUT"); env && *env) {
    out = std::filesystem::path(env) / kind;
  } else {
    out = std::filesystem::path("weylwalk-out") / kind;
  }
  check_assertions(config, exp, diags);

  auto make_context = [&](bool dry) {
    Context ctx;
    ctx.config = config;
    ctx.config_dir = opt.config.parent_path();
    ctx.out = out;
    ctx.seed = seed;
    ctx.dry_run = dry;
    ctx.conjecture_band = opt.conjecture_band;
    ctx.diags = &diags;
    return ctx;
  };

  // Dry run: parses everything, computes nothing.
  {
    Context ctx = make_context(true);
    Params params(config.value("params", Json::object()), diags);
    try {
      exp.run(ctx, params);
    } catch (const ConfigError& e) {
      diags.push_back({e.field(), e.what()});
    }
    params.finish();
  }
  if (!diags.empty()) return report(kExitConfig);
  if (opt.validate_only) {
    std::cout << opt.config.string() << ": ok (" << kind << ")\n";
    return kExitOk;
  }

  set_jobs(jobs);
  Context ctx = make_context(false);
  Params params(config.value("params", Json::object()), diags);
  Outcome outcome;
  const auto start = std::chrono::steady_clock::now();
  try {
    std::filesystem::create_directories(out);
    outcome = exp.run(ctx, params);
  } catch (const ConfigError& e) {
    diags.push_back({e.field(), e.what()});
    return report(kExitConfig);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  bool passed = true;
  Json assertion_log = Json::array();
  std::string assertion_text;
  for (const Json& a : config.value("assertions", Json::array())) {
    const std::string metric = a["metric"].get<std::string>();
    const std::string op = a["op"].get<std::string>();
    const Json actual = outcome.metrics.value(metric, Json());
    const bool ok = !actual.is_null() && compare(actual, op, a["value"]);
    passed = passed && ok;
    assertion_log.push_back({{"metric", metric}, {"op", op}, {"value", a["value"]}, {"actual", actual}, {"passed", ok}});
    assertion_text += std::string(ok ? "PASS " : "FAIL ") + metric + " " + op + " " + show(a["value"]) + " (actual " +
                      (actual.is_null() ? "missing" : show(actual)) + ")\n";
  }
  const bool flags_fail = fatal_flags && !outcome.warnings.empty();

  Json manifest{{"experiment", kind},
                {"version", WEYLWALK_VERSION},
                {"seed", seed},
                {"jobs", jobs == 0 ? weylwalk::jobs() : jobs},
                {"config", config},
                {"params", params.effective()},
                {"wall_time_s", wall},
                {"files", outcome.files},
                {"metrics", outcome.metrics},
                {"warnings", outcome.warnings},
                {"assertions", assertion_log},
                {"passed", passed && !flags_fail}};
  if (Json m = ctx.measure_json(); !m.is_null()) {
    manifest["measure"] = m;
    manifest["mu_hash"] = hex64(ctx.measure().hash());
  }
  if (Json g = ctx.group_json(); !g.is_null()) manifest["group"] = g;
  std::ofstream(out / "manifest.json") << manifest.dump(2) << '\n';

  std::ofstream summary(out / "summary.txt");
  summary << "experiment: " << kind << "\nseed: " << seed << "\nwall time: " << format_double(wall) << " s\n\nmetrics:\n";
  for (const auto& [key, value] : outcome.metrics.items()) summary << "  " << key << " = " << show(value) << '\n';
  if (!outcome.warnings.empty()) {
    summary << "\nwarnings" << (fatal_flags ? " (fatal)" : "") << ":\n";
    for (const auto& w : outcome.warnings) summary << "  " << w << '\n';
  }
  if (!assertion_text.empty()) summary << "\nassertions:\n" << assertion_text;
  summary << "\nresult: " << (passed && !flags_fail ? "PASS" : "FAIL") << '\n';

  for (const auto& w : outcome.warnings) std::cerr << "warning: " << w << '\n';
  std::cout << kind << ": " << (passed && !flags_fail ? "PASS" : "FAIL") << " (" << out.string() << ")\n";
  return passed && !flags_fail ? kExitOk : kExitFailed;
}

int main_entry(int argc, char** argv) {
  CLI::App app{"Random walks on SL_d(R): Cartan projections, deviations, renewal and quotient experiments"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(WEYLWALK_VERSION));

  Options opt;
  std::string out;
  std::uint64_t seed = 0;
  unsigned jobs = 0;
  for (const auto& [name, exp] : experiments()) {
    CLI::App* sub = app.add_subcommand(name, "run the " + name + " experiment");
    sub->add_option("--config", opt.config, "experiment config (JSON)")->required();
    sub->add_option("--out", out, "output directory (default $WEYLWALK_OUT/<experiment>)");
    sub->add_option("--seed", seed, "master seed, overrides the config");
    sub->add_option("--jobs", jobs, "worker threads, 0 for all cores");
    if (name == "renewal")
      sub->add_flag("--conjecture-band", opt.conjecture_band, "report against the wider +-30% band");
  }
  CLI::App* validate = app.add_subcommand("validate", "check a config without running it");
  validate->add_option("--config", opt.config, "experiment config (JSON)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }
  CLI::App* chosen = app.get_subcommands().front();
  if (chosen == validate) {
    opt.validate_only = true;
  } else {
    opt.kind = chosen->get_name();
    if (chosen->count("--out")) opt.out = out;
    if (chosen->count("--seed")) opt.seed = seed;
    if (chosen->count("--jobs")) opt.jobs = jobs;
  }
  return run(opt);
}

}  // namespace weylwalk::cli
