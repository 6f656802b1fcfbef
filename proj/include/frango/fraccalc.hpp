#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "frango/calculus.hpp"
#include "frango/chart.hpp"
#include "frango/field.hpp"
#include "frango/order.hpp"
#include "frango/quadrature.hpp"

namespace frango {

// Left Caputo derivative at a point; base terminals are the box lower ends.
// Exact for fractional polynomials, quadrature otherwise.
double caputo_left(const ScalarField& f, FracOrder order, std::size_t axis,
                   std::span<const double> point, const Box& box, const QuadratureOptions& q = {});

// Same operator, always through the product-trapezoid quadrature of a numerically
// differentiated integrand (the callback/grid backend), whatever f's representation.
double caputo_left_quadrature(const ScalarField& f, FracOrder order, std::size_t axis,
                              std::span<const double> point, const Box& box,
                              const QuadratureOptions& q = {});

// Right Caputo derivative with upper terminal box.upper(axis). Order 1 returns the
// classical derivative.
double caputo_right(const ScalarField& f, FracOrder order, std::size_t axis,
                    std::span<const double> point, const Box& box, const QuadratureOptions& q = {});

// Riemann-Liouville integral of the given order.
double rl_integral(const ScalarField& f, FracOrder order, std::size_t axis,
                   std::span<const double> point, const Box& box, const QuadratureOptions& q = {});

struct MittagLefflerOptions {
  double tolerance = 1e-14;
  int max_terms = 10000;
  double radius = 50.0;
};

// E_alpha(z) = sum_k z^k / Gamma(alpha k + 1) by direct summation.
double mittag_leffler(FracOrder order, double z, const MittagLefflerOptions& opts = {});

// Gamma(2 - alpha) (u - base)^{alpha - 1}: weight between (du)^alpha and d^alpha u.
double frac_differential_coefficient(FracOrder order, std::size_t axis,
                                     std::span<const double> point, const Box& box);

// Derivative of samples f_j = f(t0 + j step) with base t0. Order 1: five-point
// fourth-order stencils (one-sided near the ends, needs 5 samples). Order < 1: L1
// scheme for the Caputo derivative, 0 at the base.
std::vector<double> sampled_derivative(const std::vector<double>& f, double step, FracOrder order);

}  // namespace frango
