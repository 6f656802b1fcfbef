#include "frango/frames.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>

#include <Eigen/Dense>

#include "frango/error.hpp"
#include "frango/parallel.hpp"

namespace frango {

namespace {

std::string point_text(std::span<const double> x) {
  std::string s = "(";
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (k) s += ", ";
    s += format_exact(x[k]);
  }
  return s + ")";
}

// Interior probe points for numerical symmetry checks.
std::vector<std::vector<double>> probe_points(const Box& box) {
  std::vector<std::vector<double>> pts;
  for (double t : {0.5, 0.27, 0.81}) {
    std::vector<double> x(box.dim());
    for (std::size_t k = 0; k < box.dim(); ++k) {
      // stagger per axis so the probes are not all on the diagonal
      double s = std::fmod(t + 0.13 * static_cast<double>(k), 1.0);
      x[k] = box.lower(k) + s * (box.upper(k) - box.lower(k));
    }
    pts.push_back(std::move(x));
  }
  return pts;
}

FieldMatrix symmetrized(FieldMatrix a, const Box& box, const char* name) {
  if (a.rows() != a.cols()) throw DomainError(std::string(name) + " block must be square");
  const auto probes = probe_points(box);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = i + 1; j < a.cols(); ++j) {
      if (a(i, j).node() != a(j, i).node() && !a(j, i).is_zero() && !a(i, j).is_zero()) {
        for (const auto& x : probes) {
          double u = a(i, j)(x), v = a(j, i)(x);
          if (std::abs(u - v) > 1e-10 * (1.0 + std::abs(u)))
            throw DomainError(std::string(name) + " block is not symmetric at " + point_text(x));
        }
      }
      // a lone lower entry is taken as the symmetric pair
      if (a(i, j).is_zero()) a(i, j) = a(j, i);
      a(j, i) = a(i, j);
    }
  }
  return a;
}

std::vector<int> signs_at(const FieldMatrix& a, std::span<const double> x) {
  Eigen::MatrixXd v = a.evaluate(x);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(v, Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();
  double scale = ev.cwiseAbs().maxCoeff();
  std::vector<int> s;
  for (Eigen::Index k = 0; k < ev.size(); ++k)
    s.push_back(std::abs(ev(k)) <= 1e-14 * scale ? 0 : (ev(k) > 0 ? 1 : -1));
  return s;
}

}  // namespace

NConnection::NConnection(Chart chart, FieldMatrix coefficients)
    : chart_(std::move(chart)), N_(std::move(coefficients)) {
  if (N_.rows() != chart_.m() || N_.cols() != chart_.n())
    throw DomainError("N-connection must be m x n (" + std::to_string(chart_.m()) + " x " +
                      std::to_string(chart_.n()) + ")");
  for (const auto& f : N_.data())
    if (f.dim() != 0 && f.dim() != chart_.dim())
      throw DomainError("N-connection coefficient has the wrong number of coordinates");
}

NConnection NConnection::zero(const Chart& chart) {
  return NConnection(chart, FieldMatrix(chart.m(), chart.n()));
}

bool NConnection::is_zero() const {
  return std::all_of(N_.data().begin(), N_.data().end(), [](const ScalarField& f) { return f.is_zero(); });
}

DMetric::DMetric(FieldMatrix g, FieldMatrix h, NConnection N)
    : g_(symmetrized(std::move(g), N.chart().box(), "g")),
      h_(symmetrized(std::move(h), N.chart().box(), "h")),
      N_(std::move(N)) {
  if (g_.rows() != n()) throw DomainError("g block must be n x n");
  if (h_.rows() != m()) throw DomainError("h block must be m x m");
  for (const auto* blk : {&g_, &h_})
    for (const auto& f : blk->data())
      if (f.dim() != 0 && f.dim() != chart().dim())
        throw DomainError("metric coefficient has the wrong number of coordinates");
  auto c = chart().box().center();
  signature_.g = signs_at(g_, c);
  signature_.h = signs_at(h_, c);
}

ScalarField DMetric::block(std::size_t alpha, std::size_t beta) const {
  const std::size_t nn = n();
  if (alpha < nn && beta < nn) return g_(alpha, beta);
  if (alpha >= nn && beta >= nn) return h_(alpha - nn, beta - nn);
  return 0.0;
}

LatticeSpec default_lattice(const Chart& chart, FracOrder order, int count) {
  return LatticeSpec::uniform(chart.dim(), count, !order.classical());
}

void check_nondegenerate(const DMetric& metric, const LatticeSpec& lattice, double eps) {
  auto pts = lattice_points(metric.chart().box(), lattice);
  std::vector<ScalarField> fields = metric.g().data();
  const auto& hd = metric.h().data();
  fields.insert(fields.end(), hd.begin(), hd.end());
  CompiledFields prog(fields);
  const auto n = static_cast<Eigen::Index>(metric.n());
  const auto m = static_cast<Eigen::Index>(metric.m());
  std::vector<double> v(fields.size());
  for (const auto& x : pts) {
    prog.evaluate(x, v);
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> g(v.data(), n, n);
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> h(
        v.data() + n * n, m, m);
    if (!(std::abs(g.determinant()) >= eps))
      throw InversionError("horizontal metric block is degenerate at " + point_text(x));
    if (!(std::abs(h.determinant()) >= eps))
      throw InversionError("vertical metric block is degenerate at " + point_text(x));
  }
}

Derivations::Derivations(NConnection N, FracOrder order, QuadratureOptions opts)
    : N_(std::move(N)), order_(order), calc_(N_.chart().box().base(), opts) {}

ScalarField Derivations::partial(std::size_t axis, const ScalarField& f) const {
  return calc_.caputo(f, axis, order_);
}

ScalarField Derivations::e(std::size_t alpha, const ScalarField& f) const {
  const std::size_t n = chart().n();
  ScalarField r = partial(alpha, f);
  if (alpha >= n) return r;
  for (std::size_t a = 0; a < chart().m(); ++a) {
    const auto& Na = N_(a, alpha);
    if (Na.is_zero()) continue;
    r -= Na * partial(n + a, f);
  }
  return r;
}

FrameCoefficients build_frames(const NConnection& N) {
  const std::size_t n = N.chart().n(), m = N.chart().m();
  FrameCoefficients fc{FieldMatrix::identity(n + m), FieldMatrix::identity(n + m)};
  for (std::size_t a = 0; a < m; ++a) {
    for (std::size_t i = 0; i < n; ++i) {
      fc.frame(i, n + a) = -N(a, i);
      fc.coframe(i, n + a) = N(a, i);
    }
  }
  return fc;
}

FrameCoefficients build_frames(const DMetric& metric) { return build_frames(metric.N()); }

AnholonomyData::AnholonomyData(std::size_t n, std::size_t m)
    : n_(n), m_(m), W_((n + m) * (n + m) * (n + m)), Omega_(m * n * n) {}

const ScalarField& AnholonomyData::W(std::size_t gamma, std::size_t alpha, std::size_t beta) const {
  const std::size_t d = dim();
  return W_.at((gamma * d + alpha) * d + beta);
}

ScalarField& AnholonomyData::W_at(std::size_t gamma, std::size_t alpha, std::size_t beta) {
  const std::size_t d = dim();
  return W_.at((gamma * d + alpha) * d + beta);
}

const ScalarField& AnholonomyData::Omega(std::size_t a, std::size_t k, std::size_t l) const {
  return Omega_.at((a * n_ + k) * n_ + l);
}

AnholonomyData anholonomy(const Derivations& d) {
  const std::size_t n = d.chart().n(), m = d.chart().m();
  const auto& N = d.N();
  AnholonomyData out(n, m);
  for (std::size_t a = 0; a < m; ++a) {
    for (std::size_t k = 0; k < n; ++k) {
      for (std::size_t l = k + 1; l < n; ++l) {
        ScalarField om = d.e(k, N(a, l)) - d.e(l, N(a, k));
        out.Omega_[(a * n + k) * n + l] = om;
        out.Omega_[(a * n + l) * n + k] = -om;
        // [e_k, e_l] = W^a_kl e_a with W^a_kl = Omega^a_lk
        out.W_at(n + a, l, k) = om;
        out.W_at(n + a, k, l) = -om;
      }
      for (std::size_t b = 0; b < m; ++b) {
        ScalarField w = d.partial(n + b, N(a, k));
        out.W_at(n + a, k, n + b) = w;
        out.W_at(n + a, n + b, k) = -w;
      }
    }
  }
  return out;
}

AnholonomyData anholonomy(const NConnection& N, FracOrder order, QuadratureOptions opts) {
  return anholonomy(Derivations(N, order, opts));
}

FieldMatrix assemble(const DMetric& metric) {
  const std::size_t n = metric.n(), m = metric.m();
  const auto& N = metric.N().coefficients();
  FieldMatrix hN = metric.h() * N;  // m x n
  FieldMatrix NthN = N.transpose() * hN;
  FieldMatrix full(n + m, n + m);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) full(i, j) = metric.g()(i, j) + NthN(i, j);
  for (std::size_t a = 0; a < m; ++a) {
    for (std::size_t i = 0; i < n; ++i) {
      full(n + a, i) = hN(a, i);
      full(i, n + a) = hN(a, i);
    }
    for (std::size_t b = 0; b < m; ++b) full(n + a, n + b) = metric.h()(a, b);
  }
  return full;
}

DMetric split_offdiagonal(const Chart& chart, const FieldMatrix& full, const LatticeSpec& lattice) {
  const std::size_t n = chart.n(), m = chart.m();
  if (full.rows() != n + m || full.cols() != n + m)
    throw DomainError("full metric must be (n+m) x (n+m)");
  FieldMatrix h = full.block(n, n, m, m);
  FieldMatrix G = full.block(n, 0, m, n);  // entries g_{b j}
  for (const auto& x : lattice_points(chart.box(), lattice)) {
    Eigen::MatrixXd hv = h.evaluate(x);
    if (!(std::abs(hv.determinant()) >= 1e-8))
      throw DecompositionError("vertical block is singular at " + point_text(x));
  }
  FieldMatrix hinv;
  try {
    hinv = inverse(h);
  } catch (const InversionError&) {
    throw DecompositionError("vertical block is singular");
  }
  FieldMatrix N = hinv * G;  // N^e_j = h^{eb} g_{bj}
  FieldMatrix g(n, n);
  FieldMatrix NthN = N.transpose() * (h * N);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) g(i, j) = full(i, j) - NthN(i, j);
  return DMetric(std::move(g), std::move(h), NConnection(chart, std::move(N)));
}

DMetric split_offdiagonal(const Chart& chart, const FieldMatrix& full) {
  return split_offdiagonal(chart, full, LatticeSpec::uniform(chart.dim(), 5, false));
}

FrameTransform::FrameTransform(FieldMatrix A, FieldMatrix inv, bool adapted)
    : A_(std::move(A)), inv_(std::move(inv)), n_adapted_(adapted) {}

FrameTransform::FrameTransform(const Chart& chart, FieldMatrix A, const LatticeSpec& lattice)
    : A_(std::move(A)) {
  const std::size_t n = chart.n(), d = chart.dim();
  if (A_.rows() != d || A_.cols() != d) throw DomainError("frame transform must be (n+m) x (n+m)");
  n_adapted_ = true;
  for (const auto& x : lattice_points(chart.box(), lattice)) {
    Eigen::MatrixXd a = A_.evaluate(x);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
    const auto& s = svd.singularValues();
    if (!(s(s.size() - 1) > 1e-12 * s(0)))
      throw SingularTransformError("frame transform is not invertible at " + point_text(x));
    if (a.topRightCorner(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d - n)).cwiseAbs().maxCoeff() >
        1e-10)
      n_adapted_ = false;
  }
  try {
    inv_ = frango::inverse(A_);
  } catch (const InversionError&) {
    throw SingularTransformError("frame transform is singular");
  }
}

FrameTransform::FrameTransform(const Chart& chart, FieldMatrix A)
    : FrameTransform(chart, std::move(A), LatticeSpec::uniform(chart.dim(), 5, false)) {}

FrameTransform FrameTransform::inverted() const { return FrameTransform(inv_, A_, n_adapted_); }

TransformResult transform_frames(const DMetric& metric, const FrameTransform& T, const LatticeSpec& lattice) {
  FieldMatrix full = assemble(metric);
  const FieldMatrix& Ai = T.inverse();
  FieldMatrix transformed = Ai.transpose() * full * Ai;
  return {split_offdiagonal(metric.chart(), transformed, lattice), T.n_adapted()};
}

TransformResult transform_frames(const DMetric& metric, const FrameTransform& T) {
  return transform_frames(metric, T, LatticeSpec::uniform(metric.chart().dim(), 5, false));
}

// ---- text format ----

namespace {

std::string trim(std::string s) {
  auto hash = s.find('#');
  if (hash != std::string::npos) s.erase(hash);
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& tok, int line) {
  try {
    std::size_t used = 0;
    double v = std::stod(tok, &used);
    if (used != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw ParseError("line " + std::to_string(line) + ": bad number '" + tok + "'");
  }
}

std::vector<std::string> split_ws(const std::string& s) {
  std::istringstream is(s);
  std::vector<std::string> out;
  std::string t;
  while (is >> t) out.push_back(t);
  return out;
}

void write_field(std::ostringstream& os, const char* kind, std::size_t i, std::size_t j,
                 const ScalarField& f, const std::vector<double>& base, std::size_t dim) {
  if (f.is_zero()) return;
  os << "component " << kind << ' ' << i + 1 << ' ' << j + 1;
  if (auto c = f.constant_value()) {
    os << " poly\n" << format_exact(*c);
    for (std::size_t k = 0; k < dim; ++k) os << " 0";
    os << "\nend\n";
    return;
  }
  std::vector<double> pb;
  if (const FracPoly* p = f.as_poly(&pb)) {
    if (pb != base)
      throw DomainError(std::string("component ") + kind + " is a polynomial about a point other than the base");
    os << " poly\n" << p->to_text();
    if (!p->to_text().empty() && p->to_text().back() != '\n') os << '\n';
    os << "end\n";
    return;
  }
  if (const GridData* g = f.as_grid()) {
    os << " grid\n";
    for (const auto& ax : g->axes) {
      os << "axis";
      for (double v : ax) os << ' ' << format_exact(v);
      os << '\n';
    }
    os << "values";
    for (double v : g->values) os << ' ' << format_exact(v);
    os << "\nend\n";
    return;
  }
  throw DomainError(std::string("component ") + kind + " " + std::to_string(i + 1) + " " +
                    std::to_string(j + 1) + " is neither a polynomial nor a grid");
}

}  // namespace

std::string dmetric_to_text(const DMetric& metric, FracOrder order) {
  const auto& chart = metric.chart();
  const std::size_t n = chart.n(), m = chart.m(), d = chart.dim();
  auto base = chart.box().base();
  std::ostringstream os;
  os << "dmetric " << n << ' ' << m << '\n';
  os << "alpha " << format_exact(order.value()) << '\n';
  os << "domain";
  for (std::size_t k = 0; k < d; ++k) os << ' ' << format_exact(chart.box().lower(k)) << ' ' << format_exact(chart.box().upper(k));
  os << "\nbase";
  for (double b : base) os << ' ' << format_exact(b);
  os << '\n';
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) write_field(os, "g", i, j, metric.g()(i, j), base, d);
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t b = a; b < m; ++b) write_field(os, "h", n + a, n + b, metric.h()(a, b), base, d);
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t i = 0; i < n; ++i) write_field(os, "N", n + a, i, metric.N()(a, i), base, d);
  return os.str();
}

MetricFile parse_dmetric(const std::string& text) {
  std::istringstream is(text);
  std::string raw;
  int lineno = 0;
  std::size_t n = 0, m = 0;
  std::optional<double> alpha;
  std::vector<Interval> domain;
  std::vector<double> base;
  struct Comp {
    char kind;
    std::size_t i, j;
    ScalarField f;
  };
  std::vector<Comp> comps;

  auto need_header = [&](int line) {
    if (n == 0 || domain.empty())
      throw ParseError("line " + std::to_string(line) + ": component before dmetric/domain header");
  };

  while (std::getline(is, raw)) {
    ++lineno;
    std::string line = trim(raw);
    if (line.empty()) continue;
    auto tok = split_ws(line);
    const std::string& key = tok[0];
    if (key == "dmetric") {
      if (tok.size() != 3) throw ParseError("line " + std::to_string(lineno) + ": expected 'dmetric n m'");
      n = static_cast<std::size_t>(parse_double(tok[1], lineno));
      m = static_cast<std::size_t>(parse_double(tok[2], lineno));
    } else if (key == "alpha") {
      if (tok.size() != 2) throw ParseError("line " + std::to_string(lineno) + ": expected 'alpha a'");
      alpha = parse_double(tok[1], lineno);
    } else if (key == "domain") {
      if (tok.size() % 2 != 1) throw ParseError("line " + std::to_string(lineno) + ": domain needs lower/upper pairs");
      for (std::size_t k = 1; k + 1 < tok.size(); k += 2)
        domain.push_back({parse_double(tok[k], lineno), parse_double(tok[k + 1], lineno)});
    } else if (key == "base") {
      for (std::size_t k = 1; k < tok.size(); ++k) base.push_back(parse_double(tok[k], lineno));
    } else if (key == "component") {
      need_header(lineno);
      if (tok.size() != 5) throw ParseError("line " + std::to_string(lineno) + ": expected 'component kind i j poly|grid'");
      const int start = lineno;
      Comp c{tok[1].size() == 1 ? tok[1][0] : '?', 0, 0, {}};
      int i1 = static_cast<int>(parse_double(tok[2], lineno));
      int j1 = static_cast<int>(parse_double(tok[3], lineno));
      const int nn = static_cast<int>(n), dd = static_cast<int>(n + m);
      bool ok = false;
      if (c.kind == 'g') ok = i1 >= 1 && i1 <= nn && j1 >= 1 && j1 <= nn;
      if (c.kind == 'h') ok = i1 > nn && i1 <= dd && j1 > nn && j1 <= dd;
      if (c.kind == 'N') ok = i1 > nn && i1 <= dd && j1 >= 1 && j1 <= nn;
      if (!ok) throw ParseError("line " + std::to_string(lineno) + ": bad component '" + line + "'");
      c.i = static_cast<std::size_t>(c.kind == 'g' ? i1 - 1 : i1 - 1 - nn);
      c.j = static_cast<std::size_t>(c.kind == 'N' || c.kind == 'g' ? j1 - 1 : j1 - 1 - nn);
      std::string body;
      bool closed = false;
      while (std::getline(is, raw)) {
        ++lineno;
        std::string l = trim(raw);
        if (l == "end") {
          closed = true;
          break;
        }
        body += l + "\n";
      }
      if (!closed) throw ParseError("line " + std::to_string(start) + ": component block without 'end'");
      const std::size_t d = n + m;
      auto lower = [&] {
        std::vector<double> b;
        for (const auto& iv : domain) b.push_back(iv.lower);
        return b;
      }();
      if (tok[4] == "poly") {
        try {
          c.f = ScalarField::poly(FracPoly::parse(body, d), lower);
        } catch (const ParseError& e) {
          throw ParseError("line " + std::to_string(start) + ": " + e.what());
        }
      } else if (tok[4] == "grid") {
        GridData g;
        std::istringstream bs(body);
        std::string bl;
        while (std::getline(bs, bl)) {
          auto bt = split_ws(bl);
          if (bt.empty()) continue;
          std::vector<double> vals;
          for (std::size_t k = 1; k < bt.size(); ++k) vals.push_back(parse_double(bt[k], start));
          if (bt[0] == "axis") {
            g.axes.push_back(std::move(vals));
          } else if (bt[0] == "values") {
            g.values.insert(g.values.end(), vals.begin(), vals.end());
          } else {
            // continuation of the values list
            g.values.push_back(parse_double(bt[0], start));
            g.values.insert(g.values.end(), vals.begin(), vals.end());
          }
        }
        if (g.axes.size() != d) throw ParseError("line " + std::to_string(start) + ": grid needs one axis line per coordinate");
        g.validate();
        c.f = ScalarField::grid(std::move(g));
      } else {
        throw ParseError("line " + std::to_string(start) + ": unknown component kind '" + tok[4] + "'");
      }
      comps.push_back(std::move(c));
    } else {
      throw ParseError("line " + std::to_string(lineno) + ": unknown keyword '" + key + "'");
    }
  }
  if (n == 0 || m == 0) throw ParseError("missing 'dmetric n m' header");
  if (!alpha) throw ParseError("missing 'alpha' header");
  if (domain.size() != n + m) throw ParseError("domain must list n+m intervals");
  if (!base.empty()) {
    if (base.size() != n + m) throw ParseError("base must have n+m coordinates");
    for (std::size_t k = 0; k < base.size(); ++k)
      if (base[k] != domain[k].lower) throw ParseError("base point must be the lower corner of the domain");
  }
  Chart chart(n, m, Box(domain));
  FieldMatrix g(n, n), h(m, m), N(m, n);
  for (auto& c : comps) {
    FieldMatrix& target = c.kind == 'g' ? g : (c.kind == 'h' ? h : N);
    target(c.i, c.j) = c.f;
  }
  return {DMetric(std::move(g), std::move(h), NConnection(chart, std::move(N))), FracOrder(*alpha)};
}

MetricFile read_dmetric(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open metric file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_dmetric(ss.str());
}

}  // namespace frango
