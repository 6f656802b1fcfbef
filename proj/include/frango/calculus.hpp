#pragma once

#include <cstddef>
#include <memory>
#include <vector>

#include "frango/field.hpp"
#include "frango/order.hpp"
#include "frango/quadrature.hpp"

namespace frango {

// Symbolic application of derivatives and integrals to fields, relative to fixed
// base terminals. Exact rules are used where they exist (fractional polynomials,
// powers, integral/derivative compositions, factors independent of the axis);
// everything else lowers to a quadrature node. Results are memoized so that
// repeated derivatives of shared subexpressions stay shared.
class Calculus {
 public:
  explicit Calculus(std::vector<double> base, QuadratureOptions opts = {});

  const std::vector<double>& base() const;
  const QuadratureOptions& options() const;
  std::size_t dim() const { return base().size(); }

  // Left Caputo derivative along axis; order 1 is the classical partial derivative.
  ScalarField caputo(const ScalarField& f, std::size_t axis, FracOrder order) const;
  ScalarField classical(const ScalarField& f, std::size_t axis) const;
  // Riemann-Liouville integral of order beta > 0 along axis.
  ScalarField integral(const ScalarField& f, std::size_t axis, double beta) const;
  // f with coordinate axis fixed at its base terminal.
  ScalarField at_base(const ScalarField& f, std::size_t axis) const;

 private:
  struct Impl;
  std::shared_ptr<Impl> impl_;
};

}  // namespace frango
