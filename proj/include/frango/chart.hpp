#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace frango {

struct Interval {
  double lower = 0.0;
  double upper = 1.0;
};

// Axis-aligned coordinate box; lower ends double as Caputo base terminals.
class Box {
 public:
  Box() = default;
  explicit Box(std::vector<Interval> axes);

  std::size_t dim() const { return axes_.size(); }
  const Interval& axis(std::size_t k) const { return axes_.at(k); }
  const std::vector<Interval>& axes() const { return axes_; }
  double lower(std::size_t k) const { return axes_.at(k).lower; }
  double upper(std::size_t k) const { return axes_.at(k).upper; }
  std::vector<double> base() const;
  std::vector<double> center() const;

  bool contains(std::span<const double> x, double tol = 1e-12) const;
  // Throws DomainError naming the first offending coordinate.
  void require_contains(std::span<const double> x, double tol = 1e-12) const;

 private:
  std::vector<Interval> axes_;
};

// Coordinates (x^1..x^n, y^1..y^m) over a box; axis k < n is horizontal.
class Chart {
 public:
  Chart(std::size_t n, std::size_t m, Box box);
  // (x, y) chart of a Lagrange space; allows n = 1.
  static Chart tangent(std::size_t n, Box box);
  // Same split over another box.
  Chart with_box(Box box) const;

  std::size_t n() const { return n_; }
  std::size_t m() const { return m_; }
  std::size_t dim() const { return n_ + m_; }
  const Box& box() const { return box_; }
  std::size_t x_axis(std::size_t i) const { return i; }
  std::size_t y_axis(std::size_t a) const { return n_ + a; }

 private:
  Chart(std::size_t n, std::size_t m, Box box, std::size_t min_n);
  std::size_t n_;
  std::size_t m_;
  Box box_;
};

// Tensor lattice of sample points. A count of 1 puts the axis at its midpoint.
struct LatticeSpec {
  std::vector<int> counts;
  bool exclude_base = false;

  static LatticeSpec uniform(std::size_t dim, int count, bool exclude_base);
};

std::vector<double> lattice_axis(const Interval& iv, int count, bool exclude_base);

// Points in lexicographic order, last axis fastest.
std::vector<std::vector<double>> lattice_points(const Box& box, const LatticeSpec& spec);

}  // namespace frango
