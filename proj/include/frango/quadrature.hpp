#pragma once

#include <memory>
#include <vector>

namespace frango {

struct QuadratureOptions {
  // Graded product-trapezoid nodes for weakly singular kernels.
  int nodes = 2048;
  // Composite Gauss-Legendre for smooth (order 1) integrals.
  int gauss_panels = 16;
  int gauss_points = 8;
  // Relative step of the numerical differentiation stencil.
  double fd_step = 1e-3;
};

// Rule on [0, 1] for  int_0^1 (1 - t)^{beta-1} / Gamma(beta) g(t) dt  ~  sum_j w_j g(t_j).
// The singular end of the kernel is t = 1 (the evaluation point).
struct LineRule {
  std::vector<double> t;
  std::vector<double> w;
};

// Product trapezoid on cosine-graded nodes (first panel by product midpoint so
// that an integrand singular at t = 0 is never sampled there).
LineRule product_trapezoid_rule(double beta, int nodes);
LineRule gauss_legendre_rule(int panels, int points);
// Gauss-Legendre when beta == 1, product trapezoid otherwise. Results are cached.
std::shared_ptr<const LineRule> abel_rule(double beta, const QuadratureOptions& opts);

// Gauss-Legendre nodes and weights on [-1, 1].
void gauss_legendre(int points, std::vector<double>& x, std::vector<double>& w);

}  // namespace frango
