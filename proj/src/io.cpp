#include "weylwalk/io.hpp"

#include <charconv>
#include <cmath>
#include <set>

namespace weylwalk {

namespace {

void reject_unknown(const Json& j, const std::string& field, const std::set<std::string>& allowed) {
  for (const auto& [key, value] : j.items())
    if (!allowed.count(key)) throw ConfigError(field + "/" + key, "unknown key");
}

const Json& require(const Json& j, const std::string& field, const std::string& key) {
  if (!j.contains(key)) throw ConfigError(field + "/" + key, "missing");
  return j.at(key);
}

bool same_up_to_sign(const Matrix& a, const Matrix& b) {
  return (a - b).cwiseAbs().maxCoeff() < 1e-12 || (a + b).cwiseAbs().maxCoeff() < 1e-12;
}

}  // namespace

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string(), "cannot open file");
  try {
    return Json::parse(in, nullptr, true, true);
  } catch (const Json::parse_error& e) {
    throw ConfigError(path.string(), e.what());
  }
}

Json matrix_to_json(const Matrix& m) {
  Json rows = Json::array();
  for (int i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

Matrix matrix_from_json(const Json& j, const std::string& field) {
  if (!j.is_array() || j.empty()) throw ConfigError(field, "expected a non-empty array of rows");
  const auto d = static_cast<int>(j.size());
  Matrix m(d, d);
  for (int r = 0; r < d; ++r) {
    const Json& row = j[r];
    if (!row.is_array() || static_cast<int>(row.size()) != d)
      throw ConfigError(field + "/" + std::to_string(r), "expected a row of length " + std::to_string(d));
    for (int c = 0; c < d; ++c) {
      if (!row[c].is_number()) throw ConfigError(field + "/" + std::to_string(r) + "/" + std::to_string(c), "not a number");
      m(r, c) = row[c].get<double>();
    }
  }
  return m;
}

namespace {

GroupElement unimodular_from_json(const Json& j, const std::string& field) {
  const Matrix m = matrix_from_json(j, field);
  const double det = m.determinant();
  if (!(std::abs(det - 1.0) <= 1e-9))
    throw ConfigError(field, "determinant " + format_double(det) + " is not 1");
  try {
    return GroupElement::from_unimodular(m);
  } catch (const InvalidInput& e) {
    throw ConfigError(field, e.what());
  }
}

}  // namespace

MeasureSpec measure_from_json(const Json& j, const std::string& field) {
  if (!j.is_object()) throw ConfigError(field, "measure must be an object");
  reject_unknown(j, field, {"dim", "atoms", "name", "description"});
  const Json& dim = require(j, field, "dim");
  if (!dim.is_number_integer() || dim.get<int>() < 2 || dim.get<int>() > 6)
    throw ConfigError(field + "/dim", "expected an integer in [2, 6]");
  const int d = dim.get<int>();
  const Json& atoms = require(j, field, "atoms");
  if (!atoms.is_array() || atoms.empty()) throw ConfigError(field + "/atoms", "expected a non-empty array");
  std::vector<Atom> out;
  double total = 0.0;
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    const std::string f = field + "/atoms/" + std::to_string(i);
    const Json& a = atoms[i];
    if (!a.is_object()) throw ConfigError(f, "atom must be an object");
    reject_unknown(a, f, {"matrix", "weight"});
    const GroupElement g = unimodular_from_json(require(a, f, "matrix"), f + "/matrix");
    if (g.dim() != d) throw ConfigError(f + "/matrix", "dimension differs from dim");
    const Json& w = require(a, f, "weight");
    if (!w.is_number() || !(w.get<double>() > 0.0)) throw ConfigError(f + "/weight", "expected a positive number");
    total += w.get<double>();
    out.push_back({g, w.get<double>()});
  }
  if (std::abs(total - 1.0) > 1e-12) throw ConfigError(field + "/atoms", "weights sum to " + format_double(total) + ", not 1");
  return MeasureSpec(std::move(out));
}

Json measure_to_json(const MeasureSpec& mu) {
  Json atoms = Json::array();
  for (const Atom& a : mu.atoms()) atoms.push_back({{"matrix", matrix_to_json(a.element.matrix())}, {"weight", a.weight}});
  return {{"dim", mu.dim()}, {"atoms", atoms}};
}

FuchsianGroup group_from_json(const Json& j, const std::string& field) {
  if (!j.is_object()) throw ConfigError(field, "group must be an object");
  reject_unknown(j, field, {"name", "generators", "reduction_mode", "basepoint", "description"});
  const Json& gens = require(j, field, "generators");
  if (!gens.is_array()) throw ConfigError(field + "/generators", "expected an array of 2x2 matrices");
  std::vector<GroupElement> kept;
  for (std::size_t i = 0; i < gens.size(); ++i) {
    const std::string f = field + "/generators/" + std::to_string(i);
    const GroupElement g = unimodular_from_json(gens[i], f);
    if (g.dim() != 2) throw ConfigError(f, "generators must be 2x2");
    const Matrix inv = g.inverse().matrix();
    bool listed = false;
    for (const auto& k : kept) listed = listed || same_up_to_sign(k.matrix(), inv) || same_up_to_sign(k.matrix(), g.matrix());
    if (!listed) kept.push_back(g);
  }
  const Json& mode = require(j, field, "reduction_mode");
  if (!mode.is_string()) throw ConfigError(field + "/reduction_mode", "expected a string");
  Point base(0.0, 1.0);
  if (j.contains("basepoint")) {
    const Json& b = j["basepoint"];
    if (!b.is_array() || b.size() != 2 || !b[0].is_number() || !b[1].is_number())
      throw ConfigError(field + "/basepoint", "expected [x, y]");
    base = Point(b[0].get<double>(), b[1].get<double>());
  }
  try {
    return FuchsianGroup(j.value("name", std::string("group")), kept,
                         reduction_mode_from_string(mode.get<std::string>()), base);
  } catch (const InvalidInput& e) {
    throw ConfigError(field, e.what());
  }
}

Json group_to_json(const FuchsianGroup& g) {
  Json gens = Json::array();
  for (int i = 0; i < g.generator_count(); ++i) gens.push_back(matrix_to_json(g.generators()[i]));
  return {{"name", g.name()},
          {"generators", gens},
          {"reduction_mode", to_string(g.mode())},
          {"basepoint", {g.basepoint().real(), g.basepoint().imag()}}};
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, 16);
  std::string s(buf, res.ptr);
  return std::string(16 - s.size(), '0') + s;
}

CsvWriter::CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header)
    : out_(path), columns_(header.size()) {
  if (!out_) throw std::runtime_error("cannot write " + path.string());
  for (const auto& h : header) *this << h;
  end_row();
}

void CsvWriter::separate() {
  if (filled_ > 0) out_ << ',';
  ++filled_;
}

CsvWriter& CsvWriter::operator<<(double v) {
  separate();
  out_ << format_double(v);
  return *this;
}

CsvWriter& CsvWriter::operator<<(std::int64_t v) {
  separate();
  out_ << v;
  return *this;
}

CsvWriter& CsvWriter::operator<<(const std::string& v) {
  separate();
  out_ << v;
  return *this;
}

void CsvWriter::end_row() {
  if (filled_ != columns_) throw std::logic_error("CSV row has the wrong number of cells");
  out_ << '\n';
  filled_ = 0;
}

void write_trajectory(const TrajectoryRecord& rec, const MeasureSpec& mu, const std::filesystem::path& path) {
  const int d = mu.dim();
  const bool with_k = !rec.k_seq.empty();
  std::vector<std::string> header{"step"};
  for (int i = 1; i <= d; ++i) header.push_back("t_" + std::to_string(i));
  if (with_k)
    for (int r = 1; r <= d; ++r)
      for (int c = 1; c <= d; ++c) header.push_back("k_" + std::to_string(r) + std::to_string(c));
  CsvWriter csv(path, header);
  for (std::size_t n = 0; n < rec.t_seq.size(); ++n) {
    csv << static_cast<std::int64_t>(n + 1);
    for (int i = 0; i < d; ++i) csv << rec.t_seq[n][i];
    if (with_k)
      for (int r = 0; r < d; ++r)
        for (int c = 0; c < d; ++c) csv << rec.k_seq[n](r, c);
    csv.end_row();
  }
  const Json meta{{"seed", rec.seed}, {"n_steps", rec.n_steps}, {"dim", d}, {"mu_hash", hex64(mu.hash())},
                  {"stream", "CounterRng(seed, 0)"}, {"columns", header}};
  std::ofstream side(path.string() + ".json");
  side << meta.dump(2) << '\n';
}

}  // namespace weylwalk
