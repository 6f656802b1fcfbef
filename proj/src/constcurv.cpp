#include "frango/constcurv.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "frango/error.hpp"
#include "frango/format.hpp"
#include "frango/fraccalc.hpp"

namespace frango {

namespace {

double max_abs(const Eigen::MatrixXd& a) { return a.size() ? a.cwiseAbs().maxCoeff() : 0.0; }

Eigen::MatrixXd horizontal_block(const ConstantCurvatureSpec& spec) {
  const auto n = static_cast<Eigen::Index>(spec.chart.n());
  return spec.g0.size() ? spec.g0 : Eigen::MatrixXd::Identity(n, n);
}

void check_symmetric_invertible(const Eigen::MatrixXd& a, Eigen::Index size, const char* name) {
  if (a.rows() != size || a.cols() != size)
    throw DomainError(std::string(name) + " must be " + std::to_string(size) + " x " + std::to_string(size));
  if (!a.allFinite()) throw DomainError(std::string(name) + " has non-finite entries");
  if (max_abs(a - a.transpose()) > 1e-12 * std::max(1.0, max_abs(a)))
    throw DomainError(std::string(name) + " is not symmetric");
  Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
  if (!lu.isInvertible()) throw InversionError(std::string(name) + " is singular");
}

// row-major index of (a, b) in an m x m matrix
Eigen::Index vec_index(Eigen::Index a, Eigen::Index b, Eigen::Index m) { return a * m + b; }

// Gram-Schmidt in one block: first (optional), then prev (the previous node's vectors,
// keeps the frame continuous along the curve), then the coordinate axes.
void gram_schmidt(const Eigen::MatrixXd& B, const Eigen::VectorXd* first, const std::vector<Eigen::VectorXd>& prev,
                  std::vector<Eigen::VectorXd>& out, std::vector<double>& eta) {
  const auto k = B.rows();
  std::vector<Eigen::VectorXd> seeds;
  if (first) seeds.push_back(*first);
  for (std::size_t i = first ? 1 : 0; i < prev.size(); ++i) seeds.push_back(prev[i]);
  for (Eigen::Index i = 0; i < k; ++i) seeds.push_back(Eigen::VectorXd::Unit(k, i));
  for (const auto& s : seeds) {
    if (static_cast<Eigen::Index>(out.size()) == k) break;
    Eigen::VectorXd w = s;
    for (std::size_t p = 0; p < out.size(); ++p) w -= eta[p] * out[p].dot(B * s) * out[p];
    const double nn = w.dot(B * w);
    if (std::abs(nn) < 1e-10 * std::max(1.0, s.dot(s))) continue;  // degenerate seed
    out.push_back(w / std::sqrt(std::abs(nn)));
    eta.push_back(nn > 0 ? 1.0 : -1.0);
  }
  if (static_cast<Eigen::Index>(out.size()) != k) throw CurveError("Gram-Schmidt could not complete the frame");
}

// derivative of a sequence of matrices entrywise
std::vector<Eigen::MatrixXd> derivative(const std::vector<Eigen::MatrixXd>& seq, double step, FracOrder order) {
  std::vector<Eigen::MatrixXd> out(seq.size(), Eigen::MatrixXd::Zero(seq[0].rows(), seq[0].cols()));
  std::vector<double> f(seq.size());
  for (Eigen::Index r = 0; r < seq[0].rows(); ++r)
    for (Eigen::Index c = 0; c < seq[0].cols(); ++c) {
      for (std::size_t j = 0; j < seq.size(); ++j) f[j] = seq[j](r, c);
      auto d = sampled_derivative(f, step, order);
      for (std::size_t j = 0; j < seq.size(); ++j) out[j](r, c) = d[j];
    }
  return out;
}

std::vector<Eigen::VectorXd> derivative(const std::vector<Eigen::VectorXd>& seq, double step, FracOrder order) {
  std::vector<Eigen::MatrixXd> tmp(seq.begin(), seq.end());
  auto d = derivative(tmp, step, order);
  return {d.begin(), d.end()};
}

// D_V e for frame rows: out(beta', tau) = dE(beta', tau) + Gamma^tau_{beta gamma} E(beta', beta) V^gamma
Eigen::MatrixXd covariant_rows(const Eigen::MatrixXd& E, const Eigen::MatrixXd& dE, const std::vector<double>& G,
                               const Eigen::VectorXd& V) {
  const auto D = E.rows();
  Eigen::MatrixXd A(D, D);  // A(beta, tau) = Gamma^tau_{beta gamma} V^gamma
  for (Eigen::Index t = 0; t < D; ++t)
    for (Eigen::Index b = 0; b < D; ++b) {
      double s = 0.0;
      for (Eigen::Index c = 0; c < D; ++c) s += G[static_cast<std::size_t>((t * D + b) * D + c)] * V(c);
      A(b, t) = s;
    }
  return dE + E * A;
}

// (beta', alpha') = eta_alpha' E_alpha' g (rows of DE)_beta'
Eigen::MatrixXd frame_components(const Eigen::MatrixXd& E, const Eigen::VectorXd& eta, const Eigen::MatrixXd& g,
                                 const Eigen::MatrixXd& DE) {
  Eigen::MatrixXd out = DE * g * E.transpose();
  for (Eigen::Index a = 0; a < out.cols(); ++a) out.col(a) *= eta(a);
  return out;
}

Eigen::VectorXd lower_in_frame(const Eigen::MatrixXd& E, const Eigen::VectorXd& eta, const Eigen::MatrixXd& g,
                               const Eigen::VectorXd& v) {
  return (E * (g * v)).cwiseProduct(eta);
}

Eigen::VectorXd adapted(const Eigen::VectorXd& coord, const Eigen::MatrixXd& N, std::size_t n) {
  Eigen::VectorXd out = coord;
  const auto nn = static_cast<Eigen::Index>(n);
  out.tail(N.rows()) += N * coord.head(nn);
  return out;
}

}  // namespace

void validate(const ConstantCurvatureSpec& spec) {
  const auto n = static_cast<Eigen::Index>(spec.chart.n());
  const auto m = static_cast<Eigen::Index>(spec.chart.m());
  check_symmetric_invertible(spec.h0, m, "h0");
  if (spec.g0.size()) check_symmetric_invertible(spec.g0, n, "g0");
  if (static_cast<Eigen::Index>(spec.L0.size()) != n)
    throw DomainError("L0 needs one m x m matrix per horizontal direction (" + std::to_string(n) + ")");
  for (const auto& l : spec.L0) {
    if (l.rows() != m || l.cols() != m) throw DomainError("L0 blocks must be m x m");
    if (!l.allFinite()) throw DomainError("L0 has non-finite entries");
  }
}

Auxf1Solution solve_auxf1_system(const ConstantCurvatureSpec& spec, FracOrder order, double tol) {
  validate(spec);
  const auto m = static_cast<Eigen::Index>(spec.chart.m());
  const std::size_t n = spec.chart.n();
  const Eigen::MatrixXd& H = spec.h0;
  const Eigen::MatrixXd Hinv = H.inverse();
  // T(X)_ab = X_ab - Hinv_ac X_dc H_db
  Eigen::MatrixXd A = Eigen::MatrixXd::Identity(m * m, m * m);
  for (Eigen::Index a = 0; a < m; ++a)
    for (Eigen::Index b = 0; b < m; ++b)
      for (Eigen::Index c = 0; c < m; ++c)
        for (Eigen::Index d = 0; d < m; ++d) A(vec_index(a, b, m), vec_index(d, c, m)) -= Hinv(a, c) * H(d, b);
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(A);

  Auxf1Solution out{{}, NConnection::zero(spec.chart), 0.0};
  for (std::size_t k = 0; k < n; ++k) {
    Eigen::VectorXd rhs(m * m);
    for (Eigen::Index a = 0; a < m; ++a)
      for (Eigen::Index b = 0; b < m; ++b) rhs(vec_index(a, b, m)) = 2.0 * spec.L0[k](a, b);
    Eigen::VectorXd x = cod.solve(rhs);
    const double r = (A * x - rhs).cwiseAbs().maxCoeff();
    if (r > tol * std::max(1.0, rhs.cwiseAbs().maxCoeff()))
      throw NoSolutionError("L0 in direction " + std::to_string(k + 1) +
                                " is outside the range of the constant-curvature system; best residual " +
                                format_number(r),
                            r);
    out.residual = std::max(out.residual, r);
    Eigen::MatrixXd M(m, m);
    for (Eigen::Index a = 0; a < m; ++a)
      for (Eigen::Index b = 0; b < m; ++b) M(a, b) = x(vec_index(a, b, m));
    out.M.push_back(M);
  }

  const Chart& chart = spec.chart;
  const auto base = chart.box().base();
  const double a = order.value();
  std::vector<ScalarField> phi;
  for (Eigen::Index b = 0; b < m; ++b) {
    FracPoly::Exponents e(chart.dim(), 0.0);
    e[chart.y_axis(static_cast<std::size_t>(b))] = a;
    phi.push_back(ScalarField::poly(FracPoly::monomial(chart.dim(), 1.0 / std::tgamma(1.0 + a), e), base));
  }
  FieldMatrix N(static_cast<std::size_t>(m), n);
  for (std::size_t k = 0; k < n; ++k)
    for (Eigen::Index r = 0; r < m; ++r) {
      ScalarField s;
      for (Eigen::Index b = 0; b < m; ++b)
        if (std::abs(out.M[k](r, b)) > 1e-15) s += out.M[k](r, b) * phi[static_cast<std::size_t>(b)];
      N(static_cast<std::size_t>(r), k) = s;
    }
  out.N = NConnection(chart, std::move(N));
  return out;
}

NConnection solve_auxf1(const ConstantCurvatureSpec& spec, FracOrder order, double tol) {
  return solve_auxf1_system(spec, order, tol).N;
}

std::vector<NamedComponent> auxf1_residual_fields(const ConstantCurvatureSpec& spec, const NConnection& N,
                                                  FracOrder order, QuadratureOptions q) {
  validate(spec);
  const Chart& chart = spec.chart;
  const std::size_t n = chart.n(), m = chart.m();
  const Eigen::MatrixXd& H = spec.h0;
  const Eigen::MatrixXd Hinv = H.inverse();
  Calculus calc(chart.box().base(), q);
  // dN[(a * m + b) * n + k] = d_b N^a_k
  std::vector<ScalarField> dN(m * m * n);
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t b = 0; b < m; ++b)
      for (std::size_t k = 0; k < n; ++k) dN[(a * m + b) * n + k] = calc.caputo(N(a, k), chart.y_axis(b), order);
  std::vector<NamedComponent> out;
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t b = 0; b < m; ++b)
      for (std::size_t k = 0; k < n; ++k) {
        ScalarField s = dN[(a * m + b) * n + k];
        for (std::size_t c = 0; c < m; ++c)
          for (std::size_t d = 0; d < m; ++d) {
            const double w = Hinv(a, c) * H(d, b);
            if (w != 0.0) s -= w * dN[(d * m + c) * n + k];
          }
        out.push_back({"auxf1", {a, b, k}, 2.0 * spec.L0[k](a, b) - s});
      }
  return out;
}

DMetric constant_metric(const ConstantCurvatureSpec& spec, const NConnection& N) {
  validate(spec);
  return DMetric(constant_matrix(horizontal_block(spec)), constant_matrix(spec.h0), N);
}

DConnection constant_connection(const ConstantCurvatureSpec& spec, const NConnection& N, FracOrder order,
                                QuadratureOptions q) {
  validate(spec);
  DConnection conn(Derivations(N, order, q));
  for (std::size_t k = 0; k < conn.n(); ++k)
    for (std::size_t a = 0; a < conn.m(); ++a)
      for (std::size_t b = 0; b < conn.m(); ++b)
        conn.Lv(a, b, k) = spec.L0[k](static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
  return conn;
}

const ComponentSpread* ConstantCurvatureReport::find(const std::string& family,
                                                     const std::vector<std::size_t>& index) const {
  for (const auto& c : components)
    if (c.family == family && c.index == index) return &c;
  return nullptr;
}

ConstantCurvatureReport constant_curvature_report(const ConstantCurvatureSpec& spec, const NConnection& N,
                                                  FracOrder order, std::optional<LatticeSpec> lattice) {
  validate(spec);
  const Chart& chart = spec.chart;
  const std::size_t n = chart.n();
  const auto metric = constant_metric(spec, N);
  const auto conn = constant_connection(spec, N, order);
  const auto comps = curvature(conn, metric).components();
  const auto residual = auxf1_residual_fields(spec, N, order);
  const auto spec_lattice = lattice ? *lattice : LatticeSpec::uniform(chart.dim(), 9, !order.classical());
  const auto points = lattice_points(chart.box(), spec_lattice);

  std::vector<ScalarField> fields;
  for (const auto& c : comps) fields.push_back(c.field);
  for (const auto& c : residual) fields.push_back(c.field);
  const auto values = evaluate_on_points(fields, points);

  ConstantCurvatureReport rep;
  rep.points = points.size();
  const double P = static_cast<double>(points.size());
  for (std::size_t f = 0; f < comps.size(); ++f) {
    ComponentSpread s{comps[f].family, comps[f].index, 0.0, std::numeric_limits<double>::infinity(),
                      -std::numeric_limits<double>::infinity(), 0.0};
    double sum = 0.0, sq = 0.0;
    for (const auto& row : values) {
      const double v = row[f];
      sum += v;
      s.min = std::min(s.min, v);
      s.max = std::max(s.max, v);
    }
    s.mean = sum / P;
    for (const auto& row : values) sq += (row[f] - s.mean) * (row[f] - s.mean);
    s.stddev = std::sqrt(sq / P);
    if (std::isnan(sum)) s.min = -(s.max = std::numeric_limits<double>::infinity());
    rep.max_spread = std::max(rep.max_spread, s.spread());
    rep.max_stddev = std::max(rep.max_stddev, std::isnan(s.stddev) ? INFINITY : s.stddev);

    const auto& ix = comps[f].index;
    const bool vertical_h2 = s.family == "R" && ix[0] >= n && ix[1] >= n && ix[2] < n && ix[3] < n;
    const double peak = std::max(std::abs(s.min), std::abs(s.max));
    if (vertical_h2) {
      const auto a = static_cast<Eigen::Index>(ix[0] - n), b = static_cast<Eigen::Index>(ix[1] - n);
      const Eigen::MatrixXd prod = spec.L0[ix[3]] * spec.L0[ix[2]] - spec.L0[ix[2]] * spec.L0[ix[3]];
      rep.product_formula_error =
          std::max({rep.product_formula_error, std::abs(s.max - prod(a, b)), std::abs(s.min - prod(a, b))});
    } else {
      rep.other_families_max = std::max(rep.other_families_max, peak);
    }
    if (s.family == "sR") {
      rep.scalar_mean = s.mean;
      rep.scalar_spread = s.spread();
    }
    rep.components.push_back(std::move(s));
  }
  for (std::size_t f = comps.size(); f < fields.size(); ++f)
    for (const auto& row : values)
      rep.auxf1_residual = std::max(rep.auxf1_residual, std::isnan(row[f]) ? INFINITY : std::abs(row[f]));
  return rep;
}

// ---- curve flows ----

CurveSample sample_chart_curve(double l0, double l1, int intervals,
                               const std::vector<std::function<double(double)>>& coordinates) {
  if (intervals < 1 || !(l1 > l0)) throw DomainError("bad curve sampling interval");
  CurveSample c;
  c.l0 = l0;
  c.step = (l1 - l0) / intervals;
  for (int j = 0; j <= intervals; ++j) {
    const double l = l0 + c.step * j;
    std::vector<double> p;
    for (const auto& f : coordinates) p.push_back(f(l));
    c.nodes.push_back(std::move(p));
  }
  return c;
}

double FlowFrameData::orthonormality_error() const {
  double err = 0.0;
  for (std::size_t j = 0; j < frame.size(); ++j) {
    Eigen::MatrixXd gram = frame[j] * metric[j] * frame[j].transpose();
    gram -= Eigen::MatrixXd(eta[j].asDiagonal());
    err = std::max(err, max_abs(gram));
  }
  return err;
}

double FlowFrameData::parallel_error() const {
  double err = 0.0;
  const auto nn = static_cast<Eigen::Index>(n), mm = static_cast<Eigen::Index>(m);
  for (std::size_t j = 0; j < frame.size(); ++j) {
    Eigen::VectorXd hX = Eigen::VectorXd::Zero(nn + mm), vX = Eigen::VectorXd::Zero(nn + mm);
    hX.head(nn) = tangent[j].head(nn);
    vX.tail(mm) = tangent[j].tail(mm);
    Eigen::VectorXd ph = frame[j] * metric[j] * hX, pv = frame[j] * metric[j] * vX;
    for (Eigen::Index i = 1; i < nn; ++i) err = std::max(err, std::abs(ph(i)));
    for (Eigen::Index a = nn + 1; a < nn + mm; ++a) err = std::max(err, std::abs(pv(a)));
  }
  return err;
}

double FlowFrameData::skew_error() const {
  double err = 0.0;
  for (const auto& g : gamma_hX) err = std::max(err, max_abs(g + g.transpose()));
  for (const auto& g : gamma_vX) err = std::max(err, max_abs(g + g.transpose()));
  return err;
}

FlowFrameData curve_flow_frame(const DMetric& metric, const DConnection& conn, const CurveSample& curve) {
  const std::size_t n = metric.n(), m = metric.m(), D = n + m;
  const auto nn = static_cast<Eigen::Index>(n), mm = static_cast<Eigen::Index>(m), DD = nn + mm;
  const FracOrder order = conn.derivations().order();
  const std::size_t M = curve.nodes.size();
  if (!(curve.step > 0.0)) throw CurveError("curve step must be positive");
  if (M < (order.classical() ? 5u : 2u)) throw ResolutionError("curve has too few nodes");
  for (std::size_t j = 0; j < M; ++j) {
    if (curve.nodes[j].size() != D) throw CurveError("curve nodes must have " + std::to_string(D) + " coordinates");
    try {
      metric.chart().box().require_contains(curve.nodes[j]);
    } catch (const DomainError& e) {
      throw CurveError("curve node " + std::to_string(j + 1) + " leaves the chart: " + e.what());
    }
  }

  // coordinate tangent
  std::vector<Eigen::VectorXd> dot(M, Eigen::VectorXd(DD));
  std::vector<double> f(M);
  for (std::size_t mu = 0; mu < D; ++mu) {
    for (std::size_t j = 0; j < M; ++j) f[j] = curve.nodes[j][mu];
    auto d = sampled_derivative(f, curve.step, order);
    for (std::size_t j = 0; j < M; ++j) dot[j](static_cast<Eigen::Index>(mu)) = d[j];
  }

  std::vector<ScalarField> fields;
  for (const auto& e : metric.g().data()) fields.push_back(e);
  for (const auto& e : metric.h().data()) fields.push_back(e);
  for (const auto& e : metric.N().coefficients().data()) fields.push_back(e);
  const auto gt = conn.gamma_tensor();
  for (const auto& e : gt.data()) fields.push_back(e);
  const auto values = evaluate_on_points(fields, curve.nodes);

  FlowFrameData out;
  out.n = n;
  out.m = m;
  const std::size_t first = order.classical() ? 0 : 1;
  std::vector<int> h_state, v_state;
  for (std::size_t j = 0; j < M; ++j) {
    const auto& row = values[j];
    std::size_t at = 0;
    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(DD, DD), N(mm, nn);
    for (Eigen::Index r = 0; r < nn; ++r)
      for (Eigen::Index c = 0; c < nn; ++c) G(r, c) = row[at++];
    for (Eigen::Index r = 0; r < mm; ++r)
      for (Eigen::Index c = 0; c < mm; ++c) G(nn + r, nn + c) = row[at++];
    for (Eigen::Index r = 0; r < mm; ++r)
      for (Eigen::Index c = 0; c < nn; ++c) N(r, c) = row[at++];
    out.metric.push_back(G);
    out.elongation.push_back(N);
    out.connection.emplace_back(row.begin() + static_cast<std::ptrdiff_t>(at), row.end());
    out.l.push_back(curve.l0 + curve.step * static_cast<double>(j));
    if (j < first) {
      out.speed.push_back(0.0);
      out.tangent.emplace_back(Eigen::VectorXd::Zero(DD));
      continue;
    }
    Eigen::VectorXd X = adapted(dot[j], N, n);
    const double s = std::sqrt(std::abs(X.dot(G * X)));
    if (!(s > 1e-12)) throw CurveError("degenerate tangent at l = " + format_number(out.l.back()));
    out.speed.push_back(s);
    out.tangent.emplace_back(X / s);
    const Eigen::VectorXd& Xu = out.tangent.back();
    const double hh = Xu.head(nn).dot(G.topLeftCorner(nn, nn) * Xu.head(nn));
    const double vv = Xu.tail(mm).dot(G.bottomRightCorner(mm, mm) * Xu.tail(mm));
    h_state.push_back(std::abs(hh) > 1e-12 ? 1 : 0);
    v_state.push_back(std::abs(vv) > 1e-12 ? 1 : 0);
  }
  auto uniform_state = [](const std::vector<int>& st, const char* name) {
    for (int s : st)
      if (s != st.front())
        throw CurveError(std::string(name) + " velocity vanishes at some nodes but not others");
    return st.front() == 1;
  };
  out.h_moving = uniform_state(h_state, "horizontal");
  out.v_moving = uniform_state(v_state, "vertical");

  // frame at a node from the block metric G, the tangent X and the previous node's vectors
  auto build = [&](const Eigen::MatrixXd& G, const Eigen::VectorXd& X, std::vector<Eigen::VectorXd>& hprev,
                   std::vector<Eigen::VectorXd>& vprev) {
    std::vector<Eigen::VectorXd> hv, vv;
    std::vector<double> he, ve;
    Eigen::VectorXd hX = X.head(nn), vX = X.tail(mm);
    gram_schmidt(G.topLeftCorner(nn, nn), out.h_moving ? &hX : nullptr, hprev, hv, he);
    gram_schmidt(G.bottomRightCorner(mm, mm), out.v_moving ? &vX : nullptr, vprev, vv, ve);
    hprev = hv;
    vprev = vv;
    Eigen::MatrixXd E = Eigen::MatrixXd::Zero(DD, DD);
    Eigen::VectorXd eta(DD);
    for (Eigen::Index i = 0; i < nn; ++i) {
      E.row(i).head(nn) = hv[static_cast<std::size_t>(i)].transpose();
      eta(i) = he[static_cast<std::size_t>(i)];
    }
    for (Eigen::Index a = 0; a < mm; ++a) {
      E.row(nn + a).tail(mm) = vv[static_cast<std::size_t>(a)].transpose();
      eta(nn + a) = ve[static_cast<std::size_t>(a)];
    }
    out.frame.push_back(E);
    out.eta.push_back(eta);
  };
  std::vector<Eigen::VectorXd> hprev, vprev, hfirst, vfirst;
  for (std::size_t j = first; j < M; ++j) {
    build(out.metric[j], out.tangent[j], hprev, vprev);
    if (j == first) {
      hfirst = hprev;
      vfirst = vprev;
    }
  }
  if (first == 1) {
    // the Caputo tangent vanishes at the base node: borrow the next node's directions,
    // orthonormalized under this node's metric
    build(out.metric[0], out.tangent[1], hfirst, vfirst);
    std::rotate(out.frame.rbegin(), out.frame.rbegin() + 1, out.frame.rend());
    std::rotate(out.eta.rbegin(), out.eta.rbegin() + 1, out.eta.rend());
  }

  const auto dE = derivative(out.frame, curve.step, order);
  for (std::size_t j = 0; j < M; ++j) {
    const double s = out.speed[j];
    Eigen::MatrixXd gx = Eigen::MatrixXd::Zero(DD, DD);
    if (s > 0.0) {
      Eigen::MatrixXd DE = covariant_rows(out.frame[j], dE[j] / s, out.connection[j], out.tangent[j]);
      gx = frame_components(out.frame[j], out.eta[j], out.metric[j], DE);
    }
    out.gamma_X.push_back(gx);
    Eigen::VectorXd rh = Eigen::VectorXd::Zero(nn), rv = Eigen::VectorXd::Zero(mm);
    if (out.h_moving) rh = gx.row(0).head(nn).transpose();
    if (out.v_moving) rv = gx.row(nn).tail(mm).transpose();
    out.rho_h.push_back(rh);
    out.rho_v.push_back(rv);
    auto block = [](const Eigen::VectorXd& rho) {
      const auto k = rho.size();
      Eigen::MatrixXd b = Eigen::MatrixXd::Zero(k, k);
      for (Eigen::Index i = 1; i < k; ++i) {
        b(0, i) = rho(i);
        b(i, 0) = -rho(i);
      }
      return b;
    };
    out.gamma_hX.push_back(block(rh));
    out.gamma_vX.push_back(block(rv));
  }
  return out;
}

FlowFrameData curve_flow_frame(const DMetric& metric, const CurveSample& curve, FracOrder order) {
  return curve_flow_frame(metric, canonical_dconnection(metric, order), curve);
}

FlowMatrices flow_connection_matrices(const DMetric& metric, const DConnection& conn, const FlowSurface& surface,
                                      const CurvatureData* reference) {
  const FracOrder order = conn.derivations().order();
  const std::size_t T = surface.curves.size();
  if (T < (order.classical() ? 5u : 2u))
    throw ResolutionError("flow needs at least " + std::string(order.classical() ? "5" : "2") + " tau samples");
  if (!(surface.tau_step > 0.0)) throw ResolutionError("tau step must be positive");
  const std::size_t M = surface.curves[0].nodes.size();
  for (const auto& c : surface.curves)
    if (c.nodes.size() != M || c.step != surface.curves[0].step)
      throw CurveError("all curves of a flow must share the l grid");
  const std::size_t n = metric.n(), D = n + metric.m();
  const auto nn = static_cast<Eigen::Index>(n), DD = static_cast<Eigen::Index>(D);
  const double lstep = surface.curves[0].step;

  FlowMatrices out;
  for (std::size_t t = 0; t < T; ++t) {
    out.tau.push_back(surface.tau0 + surface.tau_step * static_cast<double>(t));
    out.frames.push_back(curve_flow_frame(metric, conn, surface.curves[t]));
  }

  std::vector<std::vector<double>> Rvals;
  std::vector<std::vector<double>> all_nodes;
  if (reference) {
    for (const auto& c : surface.curves) all_nodes.insert(all_nodes.end(), c.nodes.begin(), c.nodes.end());
    std::vector<ScalarField> rf;
    for (std::size_t a = 0; a < D; ++a)
      for (std::size_t b = 0; b < D; ++b)
        for (std::size_t c = 0; c < D; ++c)
          for (std::size_t d = 0; d < D; ++d) rf.push_back(reference->R(a, b, c, d));
    Rvals = evaluate_on_points(rf, all_nodes);
  }

  // tau derivatives at fixed l node j
  std::vector<std::vector<Eigen::VectorXd>> Y(T, std::vector<Eigen::VectorXd>(M));
  std::vector<std::vector<Eigen::MatrixXd>> dEt(T, std::vector<Eigen::MatrixXd>(M));
  for (std::size_t j = 0; j < M; ++j) {
    std::vector<Eigen::VectorXd> pos(T);
    std::vector<Eigen::MatrixXd> Es(T);
    for (std::size_t t = 0; t < T; ++t) {
      pos[t] = Eigen::Map<const Eigen::VectorXd>(surface.curves[t].nodes[j].data(), DD);
      Es[t] = out.frames[t].frame[j];
    }
    auto dp = derivative(pos, surface.tau_step, order);
    auto de = derivative(Es, surface.tau_step, order);
    for (std::size_t t = 0; t < T; ++t) {
      Y[t][j] = adapted(dp[t], out.frames[t].elongation[j], n);
      dEt[t][j] = de[t];
    }
  }

  out.e_X.resize(T);
  out.e_Y.resize(T);
  out.e_hX.resize(T);
  out.e_vX.resize(T);
  out.gamma_Y.resize(T);
  for (std::size_t t = 0; t < T; ++t) {
    const auto& fr = out.frames[t];
    for (std::size_t j = 0; j < M; ++j) {
      const auto& E = fr.frame[j];
      const auto& G = fr.metric[j];
      Eigen::MatrixXd DE = covariant_rows(E, dEt[t][j], fr.connection[j], Y[t][j]);
      out.gamma_Y[t].push_back(frame_components(E, fr.eta[j], G, DE));
      out.e_X[t].push_back(lower_in_frame(E, fr.eta[j], G, fr.tangent[j]));
      out.e_Y[t].push_back(lower_in_frame(E, fr.eta[j], G, Y[t][j]));
      Eigen::VectorXd hX = Eigen::VectorXd::Zero(DD), vX = Eigen::VectorXd::Zero(DD);
      hX.head(nn) = fr.tangent[j].head(nn);
      vX.tail(DD - nn) = fr.tangent[j].tail(DD - nn);
      auto unit = [&](Eigen::VectorXd v) {
        const double q = std::sqrt(std::abs(v.dot(G * v)));
        return q > 1e-12 ? Eigen::VectorXd(v / q) : v;
      };
      out.e_hX[t].push_back(lower_in_frame(E, fr.eta[j], G, unit(hX)).head(nn));
      out.e_vX[t].push_back(lower_in_frame(E, fr.eta[j], G, unit(vX)).tail(DD - nn));
    }
  }

  // X-derivatives along l at fixed tau, Y-derivatives along tau at fixed l
  out.torsion.resize(T);
  out.curvature.resize(T);
  std::vector<std::vector<Eigen::MatrixXd>> dGY(T), dGX(T, std::vector<Eigen::MatrixXd>(M));
  std::vector<std::vector<Eigen::VectorXd>> deY(T), deX(T, std::vector<Eigen::VectorXd>(M));
  for (std::size_t t = 0; t < T; ++t) {
    dGY[t] = derivative(out.gamma_Y[t], lstep, order);
    deY[t] = derivative(out.e_Y[t], lstep, order);
  }
  for (std::size_t j = 0; j < M; ++j) {
    std::vector<Eigen::MatrixXd> gx(T);
    std::vector<Eigen::VectorXd> ex(T);
    for (std::size_t t = 0; t < T; ++t) {
      gx[t] = out.frames[t].gamma_X[j];
      ex[t] = out.e_X[t][j];
    }
    auto dg = derivative(gx, surface.tau_step, order);
    auto dx = derivative(ex, surface.tau_step, order);
    for (std::size_t t = 0; t < T; ++t) {
      dGX[t][j] = dg[t];
      deX[t][j] = dx[t];
    }
  }

  double cerr = 0.0;
  for (std::size_t t = 0; t < T; ++t) {
    const auto& fr = out.frames[t];
    for (std::size_t j = 0; j < M; ++j) {
      const double s = fr.speed[j];
      const double inv = s > 0.0 ? 1.0 / s : 0.0;
      const Eigen::MatrixXd& GX = fr.gamma_X[j];
      const Eigen::MatrixXd& GY = out.gamma_Y[t][j];
      out.curvature[t].push_back(inv * dGY[t][j] - dGX[t][j] + GY * GX - GX * GY);
      // row-vector contraction e^beta' Gamma(beta', alpha')
      Eigen::VectorXd tor = inv * deY[t][j] - deX[t][j] + GX.transpose() * out.e_Y[t][j] -
                            GY.transpose() * out.e_X[t][j];
      out.torsion[t].push_back(tor);
      if (reference && s > 0.0) {
        const auto& R = Rvals[t * M + j];
        const Eigen::VectorXd& X = fr.tangent[j];
        const Eigen::VectorXd& Yv = Y[t][j];
        // B(beta, tau) = R^tau_{beta gamma delta} X^gamma Y^delta
        Eigen::MatrixXd B = Eigen::MatrixXd::Zero(DD, DD);
        for (Eigen::Index a = 0; a < DD; ++a)
          for (Eigen::Index b = 0; b < DD; ++b) {
            double acc = 0.0;
            for (Eigen::Index c = 0; c < DD; ++c)
              for (Eigen::Index d = 0; d < DD; ++d)
                acc += R[static_cast<std::size_t>(((a * DD + b) * DD + c) * DD + d)] * X(c) * Yv(d);
            B(b, a) = acc;
          }
        Eigen::MatrixXd expected = -frame_components(fr.frame[j], fr.eta[j], fr.metric[j], fr.frame[j] * B);
        if (t > 0 || order.classical()) cerr = std::max(cerr, max_abs(out.curvature[t].back() - expected));
      }
    }
  }
  if (reference) out.commutator_error = cerr;
  return out;
}

}  // namespace frango
