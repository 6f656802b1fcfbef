#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "frango/frac_poly.hpp"

namespace frango {

using AxisMask = std::uint64_t;
constexpr std::size_t kMaxAxes = 64;

inline AxisMask axis_bit(std::size_t k) { return AxisMask{1} << k; }
inline AxisMask all_axes(std::size_t dim) {
  return dim >= kMaxAxes ? ~AxisMask{0} : (AxisMask{1} << dim) - 1;
}

using Callback = std::function<double(std::span<const double>)>;

// Samples on a tensor-product grid; values are row-major with the last axis fastest.
struct GridData {
  std::vector<std::vector<double>> axes;
  std::vector<double> values;

  std::size_t dim() const { return axes.size(); }
  // Throws ParseError / DomainError on non-increasing axes or size mismatch.
  void validate() const;
  static GridData sample(std::vector<std::vector<double>> axes, const Callback& f);
};

namespace detail {
struct Node;
class Program;
}  // namespace detail
using NodePtr = std::shared_ptr<const detail::Node>;

// Immutable scalar function of the chart coordinates. Internally an expression
// DAG whose leaves are fractional polynomials, grids or callbacks.
class ScalarField {
 public:
  ScalarField();  // the constant 0
  ScalarField(double c);  // NOLINT(google-explicit-constructor): constants mix freely

  // Polynomial in shifted coordinates (u - base).
  static ScalarField poly(FracPoly p, std::vector<double> base);
  // The coordinate function u_axis, as a polynomial shifted by base.
  static ScalarField coordinate(const std::vector<double>& base, std::size_t axis);
  static ScalarField grid(GridData g);
  // deps: axes the callback actually reads (defaults to all).
  static ScalarField callback(std::size_t dim, Callback fn, std::optional<AxisMask> deps = {});
  static ScalarField from_node(NodePtr node);

  double operator()(std::span<const double> x) const;
  double operator()(std::initializer_list<double> x) const;

  // 0 for dimension-free constants.
  std::size_t dim() const;
  AxisMask deps() const;
  bool depends_on(std::size_t axis) const { return (deps() & axis_bit(axis)) != 0; }
  std::optional<double> constant_value() const;
  bool is_zero() const;
  // Non-null when the field is an exact polynomial; base returned through out-param.
  const FracPoly* as_poly(std::vector<double>* base = nullptr) const;
  // Non-null when the field is plain grid samples (no derivative applied).
  const GridData* as_grid() const;
  const NodePtr& node() const { return node_; }
  // Number of distinct expression nodes (diagnostics).
  std::size_t node_count() const;

 private:
  explicit ScalarField(NodePtr node);

  struct Cache;
  NodePtr node_;
  std::shared_ptr<Cache> cache_;
};

ScalarField operator+(const ScalarField& a, const ScalarField& b);
ScalarField operator-(const ScalarField& a, const ScalarField& b);
ScalarField operator*(const ScalarField& a, const ScalarField& b);
ScalarField operator/(const ScalarField& a, const ScalarField& b);
ScalarField operator-(const ScalarField& a);
ScalarField& operator+=(ScalarField& a, const ScalarField& b);
ScalarField& operator-=(ScalarField& a, const ScalarField& b);
ScalarField& operator*=(ScalarField& a, const ScalarField& b);

ScalarField exp(const ScalarField& f);
ScalarField log(const ScalarField& f);
ScalarField abs(const ScalarField& f);
ScalarField sqrt(const ScalarField& f);
ScalarField pow(const ScalarField& f, double c);
ScalarField sin(const ScalarField& f);
ScalarField cos(const ScalarField& f);

// Several fields compiled into one evaluation tape sharing common subexpressions.
class CompiledFields {
 public:
  explicit CompiledFields(const std::vector<ScalarField>& fields);
  std::size_t size() const { return count_; }
  std::size_t instructions() const;
  void evaluate(std::span<const double> x, std::span<double> out) const;
  std::vector<double> evaluate(std::span<const double> x) const;

 private:
  std::shared_ptr<const detail::Program> program_;
  std::size_t count_;
};

// values[p][f]: field f at point p, evaluated in parallel over points.
std::vector<std::vector<double>> evaluate_on_points(const std::vector<ScalarField>& fields,
                                                    const std::vector<std::vector<double>>& points);

}  // namespace frango
