#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace frango {

// Finite sum of shifted monomials c * prod_k (u_k - base_k)^{p_k} with p_k >= 0.
// Exponents are relative to the chart base point, which the polynomial does not store.
class FracPoly {
 public:
  using Exponents = std::vector<double>;
  using Terms = std::map<Exponents, double>;

  FracPoly() = default;
  explicit FracPoly(std::size_t dim) : dim_(dim) {}

  static FracPoly constant(std::size_t dim, double c);
  static FracPoly monomial(std::size_t dim, double coeff, Exponents exps);
  // (u_axis - base_axis)^power
  static FracPoly shifted(std::size_t dim, std::size_t axis, double power = 1.0);

  // Adds coeff * monomial, merging equal exponents and dropping zeros.
  void add_term(double coeff, Exponents exps);

  std::size_t dim() const { return dim_; }
  const Terms& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }
  bool is_constant() const;
  double constant_term() const;
  bool depends_on(std::size_t axis) const;
  double max_exponent(std::size_t axis) const;

  // Evaluates at a point given in shifted coordinates (u - base).
  double evaluate_shifted(std::span<const double> shifted) const;
  double evaluate(std::span<const double> x, std::span<const double> base) const;

  // Left Caputo derivative along axis (order 1 = classical). Throws CarrierError when a
  // term would acquire a negative exponent.
  FracPoly caputo_left(std::size_t axis, double order) const;
  // Riemann-Liouville integral of order beta > 0 along axis.
  FracPoly rl_integral(std::size_t axis, double beta) const;
  // Substitutes u_axis = base_axis.
  FracPoly at_base(std::size_t axis) const;

  FracPoly operator-() const;
  FracPoly& operator+=(const FracPoly& o);
  FracPoly& operator-=(const FracPoly& o);
  FracPoly& operator*=(double s);
  friend FracPoly operator+(FracPoly a, const FracPoly& b) { return a += b; }
  friend FracPoly operator-(FracPoly a, const FracPoly& b) { return a -= b; }
  friend FracPoly operator*(FracPoly a, double s) { return a *= s; }
  friend FracPoly operator*(double s, FracPoly a) { return a *= s; }
  friend FracPoly operator*(const FracPoly& a, const FracPoly& b);
  friend bool operator==(const FracPoly& a, const FracPoly& b) {
    return a.dim_ == b.dim_ && a.terms_ == b.terms_;
  }

  // Text form: one `coeff p1 ... p_dim` line per term. Round-trips exactly.
  std::string to_text() const;
  static FracPoly parse(std::string_view text, std::size_t dim);

 private:
  void check_dim(const Exponents& exps) const;

  std::size_t dim_ = 0;
  Terms terms_;
};

// Canonical exponent: integers within 1e-12 are snapped to the integer.
double snap_exponent(double p);

// Shortest round-trip decimal rendering of a double (locale independent).
std::string format_exact(double v);

}  // namespace frango
