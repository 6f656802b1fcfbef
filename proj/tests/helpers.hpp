#pragma once

#include <random>
#include <vector>

#include "frango/chart.hpp"
#include "frango/field.hpp"

namespace testing_helpers {

inline frango::Chart unit_chart(std::size_t n, std::size_t m, double lo = 0.0, double hi = 1.0) {
  return frango::Chart(n, m, frango::Box(std::vector<frango::Interval>(n + m, {lo, hi})));
}

// Coordinate u^k of a chart (absolute, not shifted).
inline frango::ScalarField u(const frango::Chart& c, std::size_t k) {
  return frango::ScalarField::coordinate(c.box().base(), k);
}

inline std::vector<std::vector<double>> random_points(const frango::Chart& c, int count, unsigned seed,
                                                      double margin = 0.1) {
  std::mt19937 rng(seed);
  std::vector<std::vector<double>> pts;
  for (int p = 0; p < count; ++p) {
    std::vector<double> x(c.dim());
    for (std::size_t k = 0; k < c.dim(); ++k) {
      double lo = c.box().lower(k), hi = c.box().upper(k), w = hi - lo;
      std::uniform_real_distribution<double> d(lo + margin * w, hi - margin * w);
      x[k] = d(rng);
    }
    pts.push_back(std::move(x));
  }
  return pts;
}

// Central difference of a plain function along axis k.
template <class F>
double central_diff(const F& f, std::vector<double> x, std::size_t k, double h = 1e-4) {
  auto xp = x, xm = x, xp2 = x, xm2 = x;
  xp[k] += h;
  xm[k] -= h;
  xp2[k] += 2 * h;
  xm2[k] -= 2 * h;
  return (-f(xp2) + 8 * f(xp) - 8 * f(xm) + f(xm2)) / (12 * h);
}

}  // namespace testing_helpers
