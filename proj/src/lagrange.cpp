#include "frango/lagrange.hpp"

#include <cmath>
#include <functional>

#include "frango/error.hpp"
#include "frango/format.hpp"
#include "frango/fraccalc.hpp"

namespace frango {

namespace {

void require_lagrange_chart(const Chart& chart) {
  if (chart.n() != chart.m()) throw DomainError("Lagrange chart needs as many y as x coordinates");
}

void check_regular(const Chart& chart, const FieldMatrix& g, FracOrder order, const LagrangeOptions& opts) {
  bool all_zero = true;
  for (const auto& e : g.data()) all_zero = all_zero && e.is_zero();
  if (all_zero) throw RegularityError("Hessian vanishes identically: L does not depend on y");
  const Box& box = opts.region ? *opts.region : chart.box();
  const auto points = lattice_points(box, LatticeSpec::uniform(chart.dim(), opts.lattice_count, !order.classical()));
  const auto values = evaluate_on_points(g.data(), points);
  const auto n = static_cast<Eigen::Index>(g.rows());
  for (std::size_t p = 0; p < points.size(); ++p) {
    Eigen::Map<const Eigen::MatrixXd> m(values[p].data(), n, n);
    double det = m.determinant();
    if (!(std::abs(det) >= opts.eps)) {
      std::string at;
      for (double v : points[p]) at += (at.empty() ? "" : " ") + format_number(v);
      throw RegularityError("Hessian degenerate at (" + at + "), det = " + format_number(det));
    }
  }
}

}  // namespace

FieldMatrix hessian(const Chart& chart, const ScalarField& L, FracOrder order, const LagrangeOptions& opts) {
  require_lagrange_chart(chart);
  const std::size_t n = chart.n();
  Calculus calc(chart.box().base(), opts.quadrature);
  FieldMatrix g(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    auto di = calc.caputo(L, chart.y_axis(i), order);
    for (std::size_t j = i; j < n; ++j) {
      auto dij = calc.caputo(di, chart.y_axis(j), order);
      auto dj = calc.caputo(L, chart.y_axis(j), order);
      auto dji = calc.caputo(dj, chart.y_axis(i), order);
      g(i, j) = 0.25 * (dij + dji);
      g(j, i) = g(i, j);
    }
  }
  check_regular(chart, g, order, opts);
  return g;
}

SemiSpray semi_spray(const Chart& chart, const ScalarField& L, const FieldMatrix& g, FracOrder order,
                     QuadratureOptions q) {
  require_lagrange_chart(chart);
  const std::size_t n = chart.n();
  Calculus calc(chart.box().base(), q);
  const FieldMatrix ginv = inverse(g);
  const auto base = chart.box().base();
  std::vector<ScalarField> bracket(n);
  for (std::size_t j = 0; j < n; ++j) {
    ScalarField s;
    for (std::size_t i = 0; i < n; ++i) {
      auto mixed = calc.caputo(calc.caputo(L, chart.x_axis(i), order), chart.y_axis(j), order);
      if (!mixed.is_zero()) s += ScalarField::coordinate(base, chart.y_axis(i)) * mixed;
    }
    bracket[j] = s - calc.caputo(L, chart.x_axis(j), order);
  }
  std::vector<ScalarField> G(n);
  FieldMatrix N(n, n);
  for (std::size_t k = 0; k < n; ++k) {
    ScalarField s;
    for (std::size_t j = 0; j < n; ++j)
      if (!bracket[j].is_zero()) s += ginv(k, j) * bracket[j];
    G[k] = 0.25 * s;
    for (std::size_t j = 0; j < n; ++j) N(k, j) = calc.caputo(G[k], chart.y_axis(j), order);
  }
  return SemiSpray{std::move(G), NConnection(chart, std::move(N))};
}

LagrangeSpace::LagrangeSpace(Chart chart, ScalarField L, FracOrder order, LagrangeOptions opts)
    : chart_(std::move(chart)),
      L_(std::move(L)),
      order_(order),
      opts_(std::move(opts)),
      g_(frango::hessian(chart_, L_, order_, opts_)),
      spray_(semi_spray(chart_, L_, g_, order_, opts_.quadrature)) {}

DMetric LagrangeSpace::sasaki() const { return DMetric(g_, g_, spray_.N); }

EulerLagrangeResidual euler_lagrange_residual(const LagrangeSpace& space, const SampledCurve& curve) {
  const std::size_t n = space.n();
  const std::size_t M1 = curve.x.size();
  if (!(curve.step > 0.0)) throw DomainError("curve step must be positive");
  for (const auto& p : curve.x)
    if (p.size() != n) throw DomainError("curve points must have " + std::to_string(n) + " components");
  const bool classical = space.order().classical();
  if (M1 < (classical ? 5u : 2u)) throw ResolutionError("curve has too few samples");

  // velocity and acceleration per component
  std::vector<std::vector<double>> vel(n, std::vector<double>(M1)), acc(n, std::vector<double>(M1));
  std::size_t first = 0, last = 0;
  const double h = curve.step;
  for (std::size_t k = 0; k < n; ++k) {
    std::vector<double> f(M1);
    for (std::size_t j = 0; j < M1; ++j) f[j] = curve.x[j][k];
    if (classical) {
      for (std::size_t j = 2; j + 2 < M1; ++j) {
        vel[k][j] = (f[j - 2] - 8 * f[j - 1] + 8 * f[j + 1] - f[j + 2]) / (12 * h);
        acc[k][j] = (-f[j - 2] + 16 * f[j - 1] - 30 * f[j] + 16 * f[j + 1] - f[j + 2]) / (12 * h * h);
      }
      first = 2;
      last = M1 - 3;
    } else {
      vel[k] = sampled_derivative(f, h, space.order());
      acc[k] = sampled_derivative(vel[k], h, space.order());
      first = 1;
      last = M1 - 1;
    }
  }

  std::vector<std::vector<double>> pts;
  EulerLagrangeResidual out;
  for (std::size_t j = first; j <= last; ++j) {
    std::vector<double> p(2 * n);
    for (std::size_t k = 0; k < n; ++k) {
      p[k] = curve.x[j][k];
      p[n + k] = vel[k][j];
    }
    try {
      space.chart().box().require_contains(p);
    } catch (const DomainError& e) {
      throw DomainError("curve leaves the chart at tau = " + format_number(curve.tau0 + h * j) + ": " + e.what());
    }
    pts.push_back(std::move(p));
    out.tau.push_back(curve.tau0 + h * static_cast<double>(j));
  }
  const auto G = evaluate_on_points(space.spray(), pts);
  for (std::size_t q = 0; q < pts.size(); ++q) {
    std::vector<double> r(n);
    for (std::size_t k = 0; k < n; ++k) {
      r[k] = acc[k][first + q] + 2.0 * G[q][k];
      out.max_abs = std::max(out.max_abs, std::isnan(r[k]) ? INFINITY : std::abs(r[k]));
    }
    out.residual.push_back(std::move(r));
  }
  return out;
}

SampledCurve sample_curve(double tau0, double tau1, int intervals,
                          const std::vector<std::function<double(double)>>& components) {
  if (intervals < 1 || !(tau1 > tau0)) throw DomainError("bad curve sampling interval");
  SampledCurve c;
  c.tau0 = tau0;
  c.step = (tau1 - tau0) / intervals;
  for (int j = 0; j <= intervals; ++j) {
    double t = tau0 + c.step * j;
    std::vector<double> p;
    for (const auto& f : components) p.push_back(f(t));
    c.x.push_back(std::move(p));
  }
  return c;
}

ScalarField builtin_lagrangian(const std::string& name, const Chart& chart) {
  require_lagrange_chart(chart);
  const auto base = chart.box().base();
  ScalarField L;
  for (std::size_t i = 0; i < chart.n(); ++i) {
    auto y = ScalarField::coordinate(base, chart.y_axis(i));
    auto x = ScalarField::coordinate(base, chart.x_axis(i));
    if (name == "quadratic") L += y * y;
    else if (name == "oscillator") L += y * y - x * x;
    else throw ParseError("unknown built-in Lagrangian '" + name + "'");
  }
  return L;
}

}  // namespace frango
