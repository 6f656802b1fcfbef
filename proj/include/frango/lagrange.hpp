#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "frango/frames.hpp"

namespace frango {

struct LagrangeOptions {
  QuadratureOptions quadrature;
  // Regularity of the Hessian is checked on this box (defaults to the chart) with
  // lattice_count nodes per axis; base nodes are skipped for alpha < 1.
  std::optional<Box> region;
  int lattice_count = 5;
  double eps = 1e-8;
};

// g_ij = (D_{y^i} D_{y^j} + D_{y^j} D_{y^i}) L / 4. Chart must be n + n.
// Throws RegularityError when |det g| < eps somewhere on the check lattice.
FieldMatrix hessian(const Chart& chart, const ScalarField& L, FracOrder order, const LagrangeOptions& opts = {});

struct SemiSpray {
  std::vector<ScalarField> G;  // G^k
  NConnection N;               // N^k_j = D_{y^j} G^k
};

// G^k = g^{kj} (y^i D_{y^j} D_{x^i} L - D_{x^j} L) / 4.
SemiSpray semi_spray(const Chart& chart, const ScalarField& L, const FieldMatrix& hessian, FracOrder order,
                     QuadratureOptions q = {});

// Lagrange space on a 2n-chart (x, y) with all derived objects built eagerly.
class LagrangeSpace {
 public:
  LagrangeSpace(Chart chart, ScalarField L, FracOrder order, LagrangeOptions opts = {});

  const Chart& chart() const { return chart_; }
  std::size_t n() const { return chart_.n(); }
  FracOrder order() const { return order_; }
  const ScalarField& lagrangian() const { return L_; }
  const LagrangeOptions& options() const { return opts_; }
  const FieldMatrix& hessian() const { return g_; }
  const std::vector<ScalarField>& spray() const { return spray_.G; }
  const NConnection& nconnection() const { return spray_.N; }
  // Both blocks are the Hessian (vertical index n + i identified with i), frames elongated by N.
  DMetric sasaki() const;

 private:
  Chart chart_;
  ScalarField L_;
  FracOrder order_;
  LagrangeOptions opts_;
  FieldMatrix g_;
  SemiSpray spray_;
};

// Curve x(tau) sampled on a uniform grid tau_j = tau0 + j step; the base terminal of the
// tau derivatives is tau0.
struct SampledCurve {
  double tau0 = 0.0;
  double step = 0.0;
  std::vector<std::vector<double>> x;  // x[j][k]
};

struct EulerLagrangeResidual {
  std::vector<double> tau;                     // nodes where the residual is evaluated
  std::vector<std::vector<double>> residual;   // (D_tau)^2 x^k + 2 G^k(x, D_tau x)
  double max_abs = 0.0;
};

// Order 1: fourth-order central differences, interior nodes j = 2 .. M-2.
// Order < 1: L1 scheme for both Caputo derivatives, nodes j = 1 .. M.
// Throws DomainError when (x, D_tau x) leaves the chart.
EulerLagrangeResidual euler_lagrange_residual(const LagrangeSpace& space, const SampledCurve& curve);

SampledCurve sample_curve(double tau0, double tau1, int intervals,
                          const std::vector<std::function<double(double)>>& components);

// Named Lagrangians on an n + n chart: "quadratic" = sum y^2, "oscillator" = sum (y^2 - x^2).
ScalarField builtin_lagrangian(const std::string& name, const Chart& chart);

}  // namespace frango
