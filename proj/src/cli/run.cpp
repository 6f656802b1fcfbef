#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "frango/cli.hpp"
#include "frango/constcurv.hpp"
#include "frango/dconnection.hpp"
#include "frango/expr.hpp"
#include "frango/format.hpp"
#include "frango/fraccalc.hpp"
#include "frango/lagrange.hpp"
#include "frango/solutions.hpp"

namespace frango::cli {

namespace {

using json = nlohmann::json;

[[noreturn]] void usage(const std::string& what) { throw UsageError(what); }

const std::vector<std::string> kCommands = {"fracderiv", "geometry", "solve", "lagrange", "constcurv", "curveflow"};

void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) usage(where + ": expected an object");
  for (const auto& [k, v] : obj.items()) {
    (void)v;
    if (!allowed.count(k)) usage(where + ": unknown key '" + k + "'");
  }
}

const json& require(const json& obj, const std::string& key, const std::string& where) {
  if (!obj.contains(key)) usage(where + ": missing '" + key + "'");
  return obj.at(key);
}

double number(const json& v, const std::string& where) {
  if (!v.is_number()) usage(where + ": expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) usage(where + ": not finite");
  return x;
}

int integer(const json& v, const std::string& where, int lo) {
  if (!v.is_number_integer()) usage(where + ": expected an integer");
  const auto x = v.get<long long>();
  if (x < lo || x > 1000000) usage(where + ": out of range");
  return static_cast<int>(x);
}

bool boolean(const json& v, const std::string& where) {
  if (!v.is_boolean()) usage(where + ": expected true or false");
  return v.get<bool>();
}

std::vector<double> numbers(const json& v, const std::string& where, std::optional<std::size_t> size = {}) {
  if (!v.is_array()) usage(where + ": expected an array of numbers");
  if (size && v.size() != *size) usage(where + ": expected " + std::to_string(*size) + " entries");
  std::vector<double> out;
  for (std::size_t k = 0; k < v.size(); ++k) out.push_back(number(v[k], where + "[" + std::to_string(k) + "]"));
  return out;
}

// Coordinate names plus the base point expressions are shifted by.
struct Names {
  std::vector<std::string> names;
  std::vector<double> base;
};

Names names_for(const json& cfg, std::vector<std::string> defaults, std::vector<double> base) {
  if (cfg.contains("names")) {
    const auto& v = cfg.at("names");
    if (!v.is_array() || v.size() != defaults.size()) usage("names: expected " + std::to_string(defaults.size()) + " strings");
    std::set<std::string> seen;
    for (std::size_t k = 0; k < v.size(); ++k) {
      if (!v[k].is_string()) usage("names: expected strings");
      defaults[k] = v[k].get<std::string>();
      if (defaults[k].empty() || !seen.insert(defaults[k]).second) usage("names: empty or repeated name");
    }
  }
  return {std::move(defaults), std::move(base)};
}

std::vector<std::string> numbered(const std::string& prefix, std::size_t count, std::size_t first = 1) {
  std::vector<std::string> out;
  for (std::size_t k = 0; k < count; ++k) out.push_back(prefix + std::to_string(first + k));
  return out;
}

// number | expression | {"poly": [[c, p...], ...]} | {"grid": {"axes": [...], "values": [...]}}
ScalarField field(const json& v, const Names& nm, const std::string& where) {
  if (v.is_number()) return number(v, where);
  if (v.is_string()) {
    try {
      return parse_expression(v.get<std::string>(), nm.names, nm.base);
    } catch (const ParseError& e) {
      usage(where + ": " + e.what());
    }
  }
  if (v.is_object() && v.contains("poly")) {
    check_keys(v, {"poly"}, where);
    const auto& terms = v.at("poly");
    if (!terms.is_array()) usage(where + ".poly: expected an array of terms");
    const std::size_t d = nm.names.size();
    FracPoly p(d);
    for (std::size_t t = 0; t < terms.size(); ++t) {
      const auto row = numbers(terms[t], where + ".poly[" + std::to_string(t) + "]", d + 1);
      FracPoly::Exponents e(row.begin() + 1, row.end());
      for (double x : e)
        if (x < 0) usage(where + ".poly: negative exponent");
      p.add_term(row[0], e);
    }
    return ScalarField::poly(std::move(p), nm.base);
  }
  if (v.is_object() && v.contains("grid")) {
    check_keys(v, {"grid"}, where);
    const auto& g = v.at("grid");
    check_keys(g, {"axes", "values"}, where + ".grid");
    GridData data;
    const auto& axes = require(g, "axes", where + ".grid");
    if (!axes.is_array() || axes.size() != nm.names.size())
      usage(where + ".grid.axes: expected " + std::to_string(nm.names.size()) + " axes");
    for (std::size_t k = 0; k < axes.size(); ++k)
      data.axes.push_back(numbers(axes[k], where + ".grid.axes[" + std::to_string(k) + "]"));
    data.values = numbers(require(g, "values", where + ".grid"), where + ".grid.values");
    try {
      data.validate();
    } catch (const Error& e) {
      usage(where + ".grid: " + e.what());
    }
    return ScalarField::grid(std::move(data));
  }
  usage(where + ": expected a number, an expression, {\"poly\": ...} or {\"grid\": ...}");
}

// [[row...], ...] or {"diag": [...]}
FieldMatrix field_matrix(const json& v, std::size_t rows, std::size_t cols, const Names& nm,
                         const std::string& where) {
  FieldMatrix out(rows, cols);
  if (v.is_object()) {
    check_keys(v, {"diag"}, where);
    if (rows != cols) usage(where + ": diag form needs a square block");
    const auto& d = v.at("diag");
    if (!d.is_array() || d.size() != rows) usage(where + ".diag: expected " + std::to_string(rows) + " entries");
    for (std::size_t i = 0; i < rows; ++i) out(i, i) = field(d[i], nm, where + ".diag[" + std::to_string(i) + "]");
    return out;
  }
  if (!v.is_array() || v.size() != rows) usage(where + ": expected " + std::to_string(rows) + " rows");
  for (std::size_t i = 0; i < rows; ++i) {
    if (!v[i].is_array() || v[i].size() != cols) usage(where + ": expected " + std::to_string(cols) + " columns");
    for (std::size_t j = 0; j < cols; ++j)
      out(i, j) = field(v[i][j], nm, where + "[" + std::to_string(i) + "][" + std::to_string(j) + "]");
  }
  return out;
}

Eigen::MatrixXd constant_matrix_of(const json& v, std::size_t rows, std::size_t cols, const std::string& where) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  if (v.is_object()) {
    check_keys(v, {"diag"}, where);
    const auto d = numbers(v.at("diag"), where + ".diag", rows);
    for (std::size_t i = 0; i < rows; ++i) out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = d[i];
    return out;
  }
  if (!v.is_array() || v.size() != rows) usage(where + ": expected " + std::to_string(rows) + " rows");
  for (std::size_t i = 0; i < rows; ++i) {
    const auto r = numbers(v[i], where + "[" + std::to_string(i) + "]", cols);
    for (std::size_t j = 0; j < cols; ++j) out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = r[j];
  }
  return out;
}

Box box_of(const json& v, std::optional<std::size_t> dim, const std::string& where) {
  if (!v.is_array() || v.empty()) usage(where + ": expected [[lower, upper], ...]");
  if (dim && v.size() != *dim) usage(where + ": expected " + std::to_string(*dim) + " intervals");
  std::vector<Interval> axes;
  for (std::size_t k = 0; k < v.size(); ++k) {
    const auto iv = numbers(v[k], where + "[" + std::to_string(k) + "]", 2);
    if (!(iv[0] < iv[1])) usage(where + "[" + std::to_string(k) + "]: lower must be below upper");
    axes.push_back({iv[0], iv[1]});
  }
  return Box(std::move(axes));
}

Chart chart_of(const json& cfg) {
  const auto& c = require(cfg, "chart", "config");
  check_keys(c, {"n", "m", "box"}, "chart");
  const auto n = static_cast<std::size_t>(integer(require(c, "n", "chart"), "chart.n", 1));
  const auto m = static_cast<std::size_t>(integer(require(c, "m", "chart"), "chart.m", 1));
  auto box = box_of(require(c, "box", "chart"), n + m, "chart.box");
  try {
    return Chart(n, m, std::move(box));
  } catch (const DomainError& e) {
    usage(std::string("chart: ") + e.what());
  }
}

FracOrder order_of(const json& cfg, std::optional<double> from_file = {}) {
  double alpha = from_file.value_or(1.0);
  if (cfg.contains("alpha")) {
    alpha = number(cfg.at("alpha"), "alpha");
    if (from_file && alpha != *from_file) usage("alpha differs from the metric file");
  }
  try {
    return FracOrder(alpha);
  } catch (const DomainError& e) {
    usage(std::string("alpha: ") + e.what());
  }
}

QuadratureOptions quadrature_of(const json& cfg) {
  QuadratureOptions q;
  if (!cfg.contains("quadrature")) return q;
  const auto& v = cfg.at("quadrature");
  check_keys(v, {"nodes"}, "quadrature");
  if (v.contains("nodes")) q.nodes = integer(v.at("nodes"), "quadrature.nodes", 8);
  return q;
}

LatticeSpec lattice_of(const json& cfg, std::size_t dim, int default_count, FracOrder order) {
  LatticeSpec spec = LatticeSpec::uniform(dim, default_count, !order.classical());
  if (!cfg.contains("lattice")) return spec;
  const auto& v = cfg.at("lattice");
  check_keys(v, {"count", "counts", "exclude_base"}, "lattice");
  if (v.contains("count") && v.contains("counts")) usage("lattice: give either count or counts");
  if (v.contains("count")) spec.counts.assign(dim, integer(v.at("count"), "lattice.count", 1));
  if (v.contains("counts")) {
    const auto& c = v.at("counts");
    if (!c.is_array() || c.size() != dim) usage("lattice.counts: expected " + std::to_string(dim) + " entries");
    for (std::size_t k = 0; k < dim; ++k) spec.counts[k] = integer(c[k], "lattice.counts", 1);
  }
  if (v.contains("exclude_base")) spec.exclude_base = boolean(v.at("exclude_base"), "lattice.exclude_base");
  return spec;
}

// Rows are rounded on insertion so the structured form round-trips exactly.
void add_row(Report& r, std::string metric, std::string component, double max, double mean) {
  r.residuals.push_back({std::move(metric), std::move(component), round12(max), round12(mean), {}, {}});
}

void add_stats(Report& r, const std::string& metric, const std::vector<FamilyStat>& stats) {
  for (const auto& s : stats) add_row(r, metric, s.name, s.max_abs, s.mean_abs);
}

void add_table(Report& r, std::string name, std::vector<std::string> columns,
               std::vector<std::vector<double>> rows) {
  for (auto& row : rows)
    for (double& x : row) x = round12(x);
  r.tables.push_back({std::move(name), std::move(columns), std::move(rows)});
}

void apply_tolerances(const json& cfg, Report& r) {
  if (!cfg.contains("tolerances")) return;
  const auto& tol = cfg.at("tolerances");
  if (!tol.is_object()) usage("tolerances: expected an object");
  std::map<std::string, double> table;
  for (const auto& [k, v] : tol.items()) {
    const double t = number(v, "tolerances." + k);
    if (!(t > 0)) usage("tolerances." + k + ": must be positive");
    table[k] = round12(t);
  }
  std::set<std::string> used;
  for (auto& row : r.residuals) {
    auto it = table.find(row.metric + ":" + row.component);
    if (it == table.end()) it = table.find(row.metric);
    if (it == table.end()) continue;
    used.insert(it->first);
    row.tolerance = it->second;
    row.pass = row.lattice_max <= it->second;  // NaN fails
  }
  for (const auto& [k, v] : table) {
    (void)v;
    if (!used.count(k)) usage("tolerances: '" + k + "' matches no residual row");
  }
}

std::vector<std::vector<double>> points_of(const json& v, std::size_t dim, const std::string& where) {
  if (!v.is_array() || v.empty()) usage(where + ": expected a non-empty array of points");
  std::vector<std::vector<double>> out;
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (dim == 1 && v[k].is_number()) out.push_back({number(v[k], where)});
    else out.push_back(numbers(v[k], where + "[" + std::to_string(k) + "]", dim));
  }
  return out;
}

std::vector<std::string> chart_names(const Chart& c) {
  auto out = numbered("x", c.n());
  for (auto& y : numbered("y", c.m())) out.push_back(std::move(y));
  return out;
}

NamedComponent single(std::string family, ScalarField f) { return {std::move(family), {}, std::move(f)}; }

// ---- fracderiv ----

void run_fracderiv(const json& cfg, Report& r) {
  check_keys(cfg, {"schema_version", "command", "alpha", "box", "names", "field", "operator", "axis", "points",
                   "expected", "quadrature", "tolerances"},
             "config");
  const FracOrder order = order_of(cfg);
  const Box box = box_of(require(cfg, "box", "config"), {}, "box");
  const std::size_t d = box.dim();
  const Names nm = names_for(cfg, d == 1 ? std::vector<std::string>{"x"} : numbered("u", d), box.base());
  const ScalarField f = field(require(cfg, "field", "config"), nm, "field");
  const std::string op = cfg.value("operator", std::string("caputo"));
  using Op = double (*)(const ScalarField&, FracOrder, std::size_t, std::span<const double>, const Box&,
                        const QuadratureOptions&);
  const std::map<std::string, Op> ops = {{"caputo", &caputo_left},
                                         {"caputo_quadrature", &caputo_left_quadrature},
                                         {"caputo_right", &caputo_right},
                                         {"rl_integral", &rl_integral}};
  const auto it = ops.find(op);
  if (it == ops.end()) usage("operator: expected caputo, caputo_quadrature, caputo_right or rl_integral");
  const int axis = cfg.contains("axis") ? integer(cfg.at("axis"), "axis", 1) : 1;
  if (static_cast<std::size_t>(axis) > d) usage("axis: beyond the box dimension");
  const auto pts = points_of(require(cfg, "points", "config"), d, "points");
  std::vector<double> expected;
  if (cfg.contains("expected")) expected = numbers(cfg.at("expected"), "expected", pts.size());
  const QuadratureOptions q = quadrature_of(cfg);

  const bool compare = op == "caputo";
  auto columns = nm.names;
  columns.push_back("value");
  if (compare) columns.push_back("quadrature");
  std::vector<std::vector<double>> rows;
  std::vector<double> values, rel, err;
  for (const auto& p : pts) {
    const double v = it->second(f, order, static_cast<std::size_t>(axis - 1), p, box, q);
    auto row = p;
    row.push_back(v);
    if (compare) {
      const double w = caputo_left_quadrature(f, order, static_cast<std::size_t>(axis - 1), p, box, q);
      row.push_back(w);
      rel.push_back(v == 0.0 ? std::abs(w) : std::abs(v - w) / std::abs(v));
    }
    if (!expected.empty()) err.push_back(std::abs(v - expected[values.size()]));
    values.push_back(v);
    rows.push_back(std::move(row));
  }
  add_table(r, "values", std::move(columns), std::move(rows));
  auto stat = [](const std::vector<double>& xs) {
    double mx = 0, sum = 0;
    for (double x : xs) {
      mx = std::isnan(x) ? INFINITY : std::max(mx, x);
      sum += x;
    }
    return std::pair{mx, sum / static_cast<double>(xs.size())};
  };
  for (std::size_t k = 0; k < values.size(); ++k)
    add_row(r, "fracderiv", "p" + std::to_string(k + 1), values[k], values[k]);
  if (compare) {
    auto [mx, mean] = stat(rel);
    add_row(r, "backend_agreement", "relative", mx, mean);
  }
  if (!err.empty()) {
    auto [mx, mean] = stat(err);
    add_row(r, "expected", "abs", mx, mean);
  }
}

// ---- shared metric loading ----

struct LoadedMetric {
  Chart chart;
  DMetric metric;
  FracOrder order;
};

LoadedMetric metric_of(const json& cfg, const std::filesystem::path& base_dir) {
  if (cfg.contains("metric_file")) {
    if (cfg.contains("metric") || cfg.contains("chart")) usage("metric_file excludes metric and chart");
    const auto& p = cfg.at("metric_file");
    if (!p.is_string()) usage("metric_file: expected a path");
    const auto path = base_dir / p.get<std::string>();
    std::ifstream is(path);
    if (!is) throw Error("cannot read metric file '" + path.string() + "'");
    std::ostringstream ss;
    ss << is.rdbuf();
    try {
      auto mf = parse_dmetric(ss.str());
      const FracOrder order = order_of(cfg, mf.order.value());
      return {mf.metric.chart(), std::move(mf.metric), order};
    } catch (const ParseError& e) {
      usage("metric_file '" + path.string() + "': " + e.what());
    }
  }
  const Chart chart = chart_of(cfg);
  const FracOrder order = order_of(cfg);
  const Names nm = names_for(cfg, chart_names(chart), chart.box().base());
  const auto& m = require(cfg, "metric", "config");
  check_keys(m, {"g", "h", "N"}, "metric");
  auto g = field_matrix(require(m, "g", "metric"), chart.n(), chart.n(), nm, "metric.g");
  auto h = field_matrix(require(m, "h", "metric"), chart.m(), chart.m(), nm, "metric.h");
  FieldMatrix N(chart.m(), chart.n());
  if (m.contains("N")) N = field_matrix(m.at("N"), chart.m(), chart.n(), nm, "metric.N");
  return {chart, DMetric(std::move(g), std::move(h), NConnection(chart, std::move(N))), order};
}

// ---- geometry ----

void run_geometry(const json& cfg, const std::filesystem::path& base_dir, Report& r) {
  check_keys(cfg, {"schema_version", "command", "alpha", "chart", "names", "metric", "metric_file", "lattice",
                   "quadrature", "curvature", "tolerances"},
             "config");
  const auto lm = metric_of(cfg, base_dir);
  const auto& metric = lm.metric;
  r.alpha = round12(lm.order.value());
  const LatticeSpec lat = lattice_of(cfg, lm.chart.dim(), 3, lm.order);
  r.lattice = lat.counts;
  r.exclude_base = lat.exclude_base;
  const bool with_curvature = cfg.contains("curvature") ? boolean(cfg.at("curvature"), "curvature") : true;

  ConnectionOptions opts;
  opts.quadrature = quadrature_of(cfg);
  const DConnection conn = canonical_dconnection(metric, lm.order, opts);
  const auto pts = lattice_points(lm.chart.box(), lat);

  add_stats(r, "compatibility", family_stats(metric_compatibility(conn, metric), pts));
  add_stats(r, "torsion", family_stats(torsion(conn).components(), pts));
  if (with_curvature) {
    const CurvatureData curv = curvature(conn, metric);
    const std::size_t n = lm.chart.n(), m = lm.chart.m(), D = n + m;
    const FieldMatrix gi = inverse(metric.g()), hi = inverse(metric.h());
    ScalarField trace;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) trace += gi(i, j) * curv.einstein(i, j);
    for (std::size_t a = 0; a < m; ++a)
      for (std::size_t b = 0; b < m; ++b) trace += hi(a, b) * curv.einstein(n + a, n + b);
    trace -= (1.0 - static_cast<double>(D) / 2.0) * curv.scalar();
    add_stats(r, "einstein_trace", family_stats({single("trace", trace)}, pts));
    add_stats(r, "scalar_curvature", family_stats({single("sR", curv.scalar())}, pts));
  }
  add_stats(r, "lc_constraints", family_stats(lc_constraint_fields(metric, conn), pts));
}

// ---- solve ----

void run_solve(const json& cfg, Report& r) {
  check_keys(cfg, {"schema_version", "command", "alpha", "box", "names", "ansatz", "source", "form", "lattice",
                   "ricci_level", "lc_extraction", "shrink_region", "quadrature", "tolerances"},
             "config");
  const FracOrder order = order_of(cfg);
  const Chart chart(2, 2, box_of(require(cfg, "box", "config"), 4, "box"));
  const Names nm = names_for(cfg, {"x1", "x2", "v", "y4"}, chart.box().base());
  const QuadratureOptions q = quadrature_of(cfg);

  const auto& a = require(cfg, "ansatz", "config");
  check_keys(a, {"psi", "phi", "h4_0", "n1", "n2", "sign3", "sign4", "omega", "degenerate", "h3", "w"}, "ansatz");
  SolutionAnsatz ans;
  auto opt_field = [&](const char* key, double dflt) {
    return a.contains(key) ? field(a.at(key), nm, std::string("ansatz.") + key) : ScalarField(dflt);
  };
  auto pair = [&](const char* key) {
    std::array<ScalarField, 2> out{};
    if (!a.contains(key)) return out;
    const auto& v = a.at(key);
    if (!v.is_array() || v.size() != 2) usage(std::string("ansatz.") + key + ": expected two entries");
    for (std::size_t k = 0; k < 2; ++k) out[k] = field(v[k], nm, std::string("ansatz.") + key);
    return out;
  };
  auto sign = [&](const char* key) {
    if (!a.contains(key)) return 1;
    const int s = a.at(key).is_number_integer() ? a.at(key).get<int>() : 0;
    if (s != 1 && s != -1) usage(std::string("ansatz.") + key + ": expected 1 or -1");
    return s;
  };
  ans.degenerate = a.contains("degenerate") && boolean(a.at("degenerate"), "ansatz.degenerate");
  ans.psi = opt_field("psi", 0.0);
  ans.h4_0 = opt_field("h4_0", 1.0);
  if (ans.degenerate) {
    ans.phi = opt_field("phi", 0.0);
    ans.h3 = field(require(a, "h3", "ansatz"), nm, "ansatz.h3");
    ans.w = pair("w");
  } else {
    ans.phi = field(require(a, "phi", "ansatz"), nm, "ansatz.phi");
    if (a.contains("h3") || a.contains("w")) usage("ansatz: h3 and w are only read with degenerate = true");
  }
  ans.n1 = pair("n1");
  ans.n2 = pair("n2");
  ans.sign3 = sign("sign3");
  ans.sign4 = sign("sign4");
  if (a.contains("omega")) ans.omega = field(a.at("omega"), nm, "ansatz.omega");

  GeneratorOptions gen;
  gen.quadrature = q;
  const std::string form = cfg.value("form", std::string("consistent"));
  if (form == "consistent") gen.form = GeneratorForm::consistent;
  else if (form == "printed") gen.form = GeneratorForm::printed;
  else usage("form: expected consistent or printed");
  if (cfg.contains("lattice")) {
    check_keys(cfg.at("lattice"), {"count"}, "lattice");
    gen.lattice_count = integer(require(cfg.at("lattice"), "count", "lattice"), "lattice.count", 2);
  }
  if (cfg.contains("shrink_region")) gen.shrink_region = boolean(cfg.at("shrink_region"), "shrink_region");

  const auto& s = require(cfg, "source", "config");
  check_keys(s, {"upsilon2", "upsilon4"}, "source");
  SourceSpec src;
  src.upsilon2 = field(require(s, "upsilon2", "source"), nm, "source.upsilon2");
  SourceScaling scaling = SourceScaling::consistent;
  bool manufacture = true;
  if (s.contains("upsilon4")) {
    const auto& u = s.at("upsilon4");
    if (u.is_object() && u.contains("manufacture")) {
      check_keys(u, {"manufacture"}, "source.upsilon4");
      const auto sc = u.at("manufacture");
      if (sc == "consistent") scaling = SourceScaling::consistent;
      else if (sc == "printed") scaling = SourceScaling::printed;
      else usage("source.upsilon4.manufacture: expected consistent or printed");
    } else {
      src.upsilon4 = field(u, nm, "source.upsilon4");
      manufacture = false;
    }
  }
  if (manufacture) src.upsilon4 = manufacture_source(chart, ans.psi, order, scaling, q);

  const GeneratedMetric gm = generate_solution(chart, ans, src, order, gen);
  ResidualOptions ro;
  ro.lattice_count = gen.lattice_count;
  ro.quadrature = q;
  if (cfg.contains("ricci_level")) ro.ricci_level = boolean(cfg.at("ricci_level"), "ricci_level");
  const ResidualReport rep = einstein_residuals(gm, src, ro);
  r.lattice = rep.lattice.counts;
  r.exclude_base = rep.lattice.exclude_base;

  add_stats(r, "formula", rep.formula);
  add_stats(r, "ricci", rep.ricci);
  add_stats(r, "agreement", rep.agreement);
  if (!ans.degenerate)
    add_stats(r, "algebraic",
              family_stats(algebraic_identity_fields(gm, ans.phi, q), lattice_points(rep.region, rep.lattice)));
  const bool lc = cfg.contains("lc_extraction") && boolean(cfg.at("lc_extraction"), "lc_extraction");
  if (lc) add_stats(r, "lc_extraction", lc_extraction_check(gm, gen.lattice_count, q));
  if (ans.omega) {
    const double w = omega_condition(gm, *ans.omega, gen.lattice_count, q);
    add_row(r, "omega_condition", "max", w, w);
  }
  std::vector<std::vector<double>> region;
  for (std::size_t k = 0; k < 4; ++k) region.push_back({static_cast<double>(k + 1), gm.region.lower(k), gm.region.upper(k)});
  add_table(r, "region", {"axis", "lower", "upper"}, std::move(region));
  r.notes = rep.notes;
}

// ---- lagrange ----

void run_lagrange(const json& cfg, Report& r) {
  check_keys(cfg, {"schema_version", "command", "alpha", "chart", "names", "lagrangian", "points", "curve",
                   "sasaki_check", "lattice", "quadrature", "tolerances"},
             "config");
  const FracOrder order = order_of(cfg);
  const auto& c = require(cfg, "chart", "config");
  check_keys(c, {"n", "box"}, "chart");
  const auto n = static_cast<std::size_t>(integer(require(c, "n", "chart"), "chart.n", 1));
  const Chart chart = Chart::tangent(n, box_of(require(c, "box", "chart"), 2 * n, "chart.box"));
  const Names nm = names_for(cfg, chart_names(chart), chart.box().base());
  const auto& lv = require(cfg, "lagrangian", "config");
  ScalarField L;
  if (lv.is_object() && lv.contains("builtin")) {
    check_keys(lv, {"builtin"}, "lagrangian");
    const auto& b = lv.at("builtin");
    if (!b.is_string() || (b != "quadratic" && b != "oscillator")) usage("lagrangian.builtin: expected quadratic or oscillator");
    L = builtin_lagrangian(b.get<std::string>(), chart);
  } else {
    L = field(lv, nm, "lagrangian");
  }
  LagrangeOptions lo;
  lo.quadrature = quadrature_of(cfg);
  const LagrangeSpace space(chart, L, order, lo);

  if (cfg.contains("points")) {
    const auto pts = points_of(cfg.at("points"), chart.dim(), "points");
    for (const auto& p : pts) chart.box().require_contains(p);
    std::vector<std::string> hcols = nm.names, scols = nm.names;
    for (std::size_t i = 0; i < n; ++i) {
      scols.push_back("G" + std::to_string(i + 1));
      for (std::size_t j = 0; j < n; ++j) hcols.push_back("g" + std::to_string(i + 1) + std::to_string(j + 1));
    }
    std::vector<std::vector<double>> hrows, srows;
    for (const auto& p : pts) {
      auto hr = p, sr = p;
      for (std::size_t i = 0; i < n; ++i) {
        sr.push_back(space.spray()[i](p));
        for (std::size_t j = 0; j < n; ++j) hr.push_back(space.hessian()(i, j)(p));
      }
      hrows.push_back(std::move(hr));
      srows.push_back(std::move(sr));
    }
    add_table(r, "hessian", std::move(hcols), std::move(hrows));
    add_table(r, "spray", std::move(scols), std::move(srows));
  }

  if (cfg.contains("curve")) {
    const auto& cv = cfg.at("curve");
    check_keys(cv, {"tau", "intervals", "x"}, "curve");
    const auto tau = numbers(require(cv, "tau", "curve"), "curve.tau", 2);
    if (!(tau[0] < tau[1])) usage("curve.tau: expected increasing ends");
    const int intervals = integer(require(cv, "intervals", "curve"), "curve.intervals", 4);
    const auto& xs = require(cv, "x", "curve");
    if (!xs.is_array() || xs.size() != n) usage("curve.x: expected " + std::to_string(n) + " expressions");
    const Names tn{{"t"}, {tau[0]}};
    std::vector<std::function<double(double)>> comps;
    for (std::size_t k = 0; k < n; ++k) {
      const ScalarField f = field(xs[k], tn, "curve.x");
      comps.emplace_back([f](double t) { return f({t}); });
    }
    const auto el = euler_lagrange_residual(space, sample_curve(tau[0], tau[1], intervals, comps));
    for (std::size_t k = 0; k < n; ++k) {
      double mx = 0, sum = 0;
      for (const auto& row : el.residual) {
        const double a = std::isnan(row[k]) ? INFINITY : std::abs(row[k]);
        mx = std::max(mx, a);
        sum += a;
      }
      add_row(r, "euler_lagrange", nm.names[k], mx, el.residual.empty() ? 0.0 : sum / static_cast<double>(el.residual.size()));
    }
  }

  const bool sasaki = cfg.contains("sasaki_check") && boolean(cfg.at("sasaki_check"), "sasaki_check");
  if (sasaki) {
    const LatticeSpec lat = lattice_of(cfg, chart.dim(), 3, order);
    r.lattice = lat.counts;
    r.exclude_base = lat.exclude_base;
    const DMetric metric = space.sasaki();
    ConnectionOptions opts;
    opts.quadrature = lo.quadrature;
    const DConnection conn = canonical_dconnection(metric, order, opts);
    add_stats(r, "sasaki_compatibility", family_stats(metric_compatibility(conn, metric), lattice_points(chart.box(), lat)));
  } else if (cfg.contains("lattice")) {
    usage("lattice: only used by sasaki_check");
  }
}

// ---- constcurv ----

ConstantCurvatureSpec constcurv_spec(const json& v, const Chart& chart, const std::string& where) {
  check_keys(v, {"g0", "h0", "L0"}, where);
  ConstantCurvatureSpec spec{chart, {}, {}, {}};
  if (v.contains("g0")) spec.g0 = constant_matrix_of(v.at("g0"), chart.n(), chart.n(), where + ".g0");
  spec.h0 = constant_matrix_of(require(v, "h0", where), chart.m(), chart.m(), where + ".h0");
  const auto& L0 = require(v, "L0", where);
  if (!L0.is_array() || L0.size() != chart.n()) usage(where + ".L0: expected " + std::to_string(chart.n()) + " matrices");
  for (std::size_t k = 0; k < chart.n(); ++k)
    spec.L0.push_back(constant_matrix_of(L0[k], chart.m(), chart.m(), where + ".L0[" + std::to_string(k) + "]"));
  try {
    validate(spec);
  } catch (const DomainError& e) {
    usage(where + ": " + e.what());
  }
  return spec;
}

void run_constcurv(const json& cfg, Report& r) {
  check_keys(cfg, {"schema_version", "command", "alpha", "chart", "g0", "h0", "L0", "lattice", "quadrature",
                   "tolerances"},
             "config");
  const FracOrder order = order_of(cfg);
  const Chart chart = chart_of(cfg);
  json block = json::object();
  for (const char* k : {"g0", "h0", "L0"})
    if (cfg.contains(k)) block[k] = cfg.at(k);
  const auto spec = constcurv_spec(block, chart, "config");
  const auto sol = solve_auxf1_system(spec, order);
  const LatticeSpec lat = lattice_of(cfg, chart.dim(), 9, order);
  r.lattice = lat.counts;
  r.exclude_base = lat.exclude_base;
  const auto rep = constant_curvature_report(spec, sol.N, order, lat);

  double spread_sum = 0;
  for (const auto& c : rep.components) spread_sum += c.spread();
  const double spread_mean = rep.components.empty() ? 0.0 : spread_sum / static_cast<double>(rep.components.size());
  add_row(r, "auxf1", "residual", rep.auxf1_residual, rep.auxf1_residual);
  add_row(r, "curvature_spread", "max", rep.max_spread, spread_mean);
  add_row(r, "scalar_spread", "sR", rep.scalar_spread, rep.scalar_spread);
  add_row(r, "other_families", "max", rep.other_families_max, rep.other_families_max);
  add_row(r, "product_formula", "max", rep.product_formula_error, rep.product_formula_error);

  const std::size_t n = chart.n(), m = chart.m();
  std::vector<std::vector<double>> mrows, rrows;
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t a = 0; a < m; ++a)
      for (std::size_t b = 0; b < m; ++b)
        mrows.push_back({double(a + 1), double(b + 1), double(k + 1),
                         sol.M[k](static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b))});
  for (const auto& c : rep.components) {
    if (c.family != "R" || c.index.size() != 4) continue;
    if (c.index[0] < n || c.index[1] < n || c.index[2] >= n || c.index[3] >= n) continue;
    rrows.push_back({double(c.index[0] - n + 1), double(c.index[1] - n + 1), double(c.index[2] + 1),
                     double(c.index[3] + 1), c.mean, c.spread()});
  }
  add_table(r, "M", {"a", "b", "k", "value"}, std::move(mrows));
  add_table(r, "R_vertical", {"a", "b", "j", "k", "value", "spread"}, std::move(rrows));
}

// ---- curveflow ----

void run_curveflow(const json& cfg, Report& r) {
  check_keys(cfg, {"schema_version", "command", "alpha", "chart", "names", "metric", "constcurv", "curve", "flow",
                   "commutator_check", "quadrature", "tolerances"},
             "config");
  if (cfg.contains("metric") == cfg.contains("constcurv")) usage("curveflow: give exactly one of metric, constcurv");
  const QuadratureOptions q = quadrature_of(cfg);
  std::optional<LoadedMetric> lm;
  std::optional<DConnection> conn;
  if (cfg.contains("metric")) {
    lm = metric_of(cfg, ".");
    ConnectionOptions opts;
    opts.quadrature = q;
    conn = canonical_dconnection(lm->metric, lm->order, opts);
  } else {
    const Chart chart = chart_of(cfg);
    const FracOrder order = order_of(cfg);
    const auto spec = constcurv_spec(cfg.at("constcurv"), chart, "constcurv");
    const NConnection N = solve_auxf1(spec, order);
    lm = LoadedMetric{chart, constant_metric(spec, N), order};
    conn = constant_connection(spec, N, order, q);
  }
  const Chart& chart = lm->chart;

  const auto& cv = require(cfg, "curve", "config");
  check_keys(cv, {"l", "intervals", "x"}, "curve");
  const auto lr = numbers(require(cv, "l", "curve"), "curve.l", 2);
  if (!(lr[0] < lr[1])) usage("curve.l: expected increasing ends");
  const int intervals = integer(require(cv, "intervals", "curve"), "curve.intervals", 4);
  double tau0 = 0, tau1 = 0;
  int tau_intervals = 0;
  if (cfg.contains("flow")) {
    const auto& fl = cfg.at("flow");
    check_keys(fl, {"tau", "intervals"}, "flow");
    const auto t = numbers(require(fl, "tau", "flow"), "flow.tau", 2);
    if (!(t[0] < t[1])) usage("flow.tau: expected increasing ends");
    tau0 = t[0];
    tau1 = t[1];
    tau_intervals = integer(require(fl, "intervals", "flow"), "flow.intervals", 1);
  }
  const auto& xs = require(cv, "x", "curve");
  if (!xs.is_array() || xs.size() != chart.dim()) usage("curve.x: expected " + std::to_string(chart.dim()) + " expressions");
  const Names ln{{"l", "tau"}, {lr[0], tau0}};
  std::vector<ScalarField> xf;
  for (std::size_t k = 0; k < xs.size(); ++k) xf.push_back(field(xs[k], ln, "curve.x[" + std::to_string(k) + "]"));

  FlowSurface surface;
  surface.tau0 = tau0;
  surface.tau_step = tau_intervals ? (tau1 - tau0) / tau_intervals : 0.0;
  for (int t = 0; t <= tau_intervals; ++t) {
    const double tau = tau0 + t * surface.tau_step;
    std::vector<std::function<double(double)>> comps;
    for (const auto& f : xf) comps.emplace_back([f, tau](double l) { return f({l, tau}); });
    auto c = sample_chart_curve(lr[0], lr[1], intervals, comps);
    c.tau = tau;
    surface.curves.push_back(std::move(c));
  }
  r.lattice = {tau_intervals + 1, intervals + 1};
  r.exclude_base = false;

  std::vector<FlowFrameData> frames;
  std::optional<FlowMatrices> fm;
  if (tau_intervals > 0) {
    const bool check = cfg.contains("commutator_check") ? boolean(cfg.at("commutator_check"), "commutator_check") : true;
    std::optional<CurvatureData> ref;
    if (check) ref = curvature(*conn, lm->metric);
    fm = flow_connection_matrices(lm->metric, *conn, surface, ref ? &*ref : nullptr);
    frames = fm->frames;
  } else {
    if (cfg.contains("commutator_check")) usage("commutator_check: needs a flow block");
    frames.push_back(curve_flow_frame(lm->metric, *conn, surface.curves[0]));
  }

  auto over_frames = [&](const char* comp, double (FlowFrameData::*f)() const) {
    double mx = 0, sum = 0;
    for (const auto& fr : frames) {
      const double e = (fr.*f)();
      mx = std::max(mx, e);
      sum += e;
    }
    add_row(r, "frame", comp, mx, sum / static_cast<double>(frames.size()));
  };
  over_frames("orthonormality", &FlowFrameData::orthonormality_error);
  over_frames("parallel", &FlowFrameData::parallel_error);
  over_frames("skew", &FlowFrameData::skew_error);

  if (fm) {
    auto over_nodes = [&](const char* metric, const char* comp, auto norm) {
      double mx = 0, sum = 0;
      std::size_t count = 0;
      for (std::size_t t = 0; t < fm->tau.size(); ++t)
        for (std::size_t j = 0; j < frames[t].l.size(); ++j) {
          const double e = norm(t, j);
          mx = std::isnan(e) ? INFINITY : std::max(mx, e);
          sum += e;
          ++count;
        }
      add_row(r, metric, comp, mx, count ? sum / static_cast<double>(count) : 0.0);
    };
    over_nodes("torsion", "T", [&](std::size_t t, std::size_t j) { return fm->torsion[t][j].cwiseAbs().maxCoeff(); });
    over_nodes("curvature", "R", [&](std::size_t t, std::size_t j) { return fm->curvature[t][j].cwiseAbs().maxCoeff(); });
    if (frames[0].h_moving)
      over_nodes("normalization", "e_hX", [&](std::size_t t, std::size_t j) {
        Eigen::VectorXd e = fm->e_hX[t][j];
        e(0) -= 1.0;
        return e.cwiseAbs().maxCoeff();
      });
    if (fm->commutator_error) add_row(r, "commutator", "R", *fm->commutator_error, *fm->commutator_error);
  }

  // per-node dump: tau, l, speed, rho_h, rho_v
  std::ostringstream os;
  os << "tau,l,speed";
  for (std::size_t i = 0; i < chart.n(); ++i) os << ",rho_h" << i + 1;
  for (std::size_t a = 0; a < chart.m(); ++a) os << ",rho_v" << a + 1;
  os << '\n';
  for (std::size_t t = 0; t < frames.size(); ++t) {
    const double tau = tau0 + static_cast<double>(t) * surface.tau_step;
    const auto& fr = frames[t];
    for (std::size_t j = 0; j < fr.l.size(); ++j) {
      os << format_number(tau) << ',' << format_number(fr.l[j]) << ',' << format_number(fr.speed[j]);
      for (Eigen::Index i = 0; i < fr.rho_h[j].size(); ++i) os << ',' << format_number(fr.rho_h[j](i));
      for (Eigen::Index a = 0; a < fr.rho_v[j].size(); ++a) os << ',' << format_number(fr.rho_v[j](a));
      os << '\n';
    }
  }
  r.artifacts.push_back({"frames.csv", os.str()});
}

}  // namespace

Report run(const nlohmann::json& config, const std::filesystem::path& base_dir) {
  if (!config.is_object()) usage("config: expected a JSON object");
  const auto& sv = require(config, "schema_version", "config");
  if (!sv.is_number_integer() || sv.get<long long>() != kSchemaVersion)
    usage("schema_version: expected " + std::to_string(kSchemaVersion));
  const auto& cmd = require(config, "command", "config");
  if (!cmd.is_string() || cmd.get<std::string>().empty()) usage("command: empty");
  const std::string command = cmd.get<std::string>();
  if (std::find(kCommands.begin(), kCommands.end(), command) == kCommands.end())
    usage("command: unknown '" + command + "'");

  Report r;
  r.command = command;
  r.config_hash = config_hash(config);
  try {
    if (config.contains("alpha")) r.alpha = round12(number(config.at("alpha"), "alpha"));
    if (command == "fracderiv") run_fracderiv(config, r);
    else if (command == "geometry") run_geometry(config, base_dir, r);
    else if (command == "solve") run_solve(config, r);
    else if (command == "lagrange") run_lagrange(config, r);
    else if (command == "constcurv") run_constcurv(config, r);
    else run_curveflow(config, r);
  } catch (const json::exception& e) {
    usage(std::string("config: ") + e.what());
  }
  apply_tolerances(config, r);
  return r;
}

}  // namespace frango::cli
