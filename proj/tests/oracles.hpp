#pragma once

// Reference computations used only by the tests. They share no code with the
// library: singular kernels are removed by substitution and the remaining smooth
// integrals are done with composite Simpson.

#include <cmath>
#include <functional>
#include <vector>

namespace oracle {

inline double simpson(const std::function<double(double)>& g, double a, double b, int n) {
  if (n % 2) ++n;
  double h = (b - a) / n;
  double s = g(a) + g(b);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * g(a + i * h);
  return s * h / 3.0;
}

// (1/Gamma(beta)) int_base^x (x - s)^{beta-1} f(s) ds, substituting u = (x - s)^beta / beta.
inline double rl_integral(const std::function<double(double)>& f, double base, double x, double beta,
                          int n = 10000) {
  double top = std::pow(x - base, beta) / beta;
  auto g = [&](double u) { return f(x - std::pow(beta * u, 1.0 / beta)); };
  return simpson(g, 0.0, top, n) / std::tgamma(beta);
}

// Left Caputo derivative of order alpha in (0,1) given the classical derivative fp.
inline double caputo_left(const std::function<double(double)>& fp, double base, double x, double alpha,
                          int n = 10000) {
  return rl_integral(fp, base, x, 1.0 - alpha, n);
}

// Right Caputo derivative: (1/Gamma(1-alpha)) int_x^top (s - x)^{-alpha} (-f'(s)) ds.
inline double caputo_right(const std::function<double(double)>& fp, double x, double top, double alpha,
                           int n = 10000) {
  double beta = 1.0 - alpha;
  double upper = std::pow(top - x, beta) / beta;
  auto g = [&](double u) { return -fp(x + std::pow(beta * u, 1.0 / beta)); };
  return simpson(g, 0.0, upper, n) / std::tgamma(beta);
}

inline double mittag_leffler_series(double alpha, double z, int terms = 400) {
  double s = 0.0;
  for (int k = 0; k < terms; ++k) {
    double t = std::pow(z, k) / std::tgamma(alpha * k + 1.0);
    if (!std::isfinite(t)) break;
    s += t;
  }
  return s;
}

// Five-point central difference.
inline double diff(const std::function<double(double)>& f, double x, double h = 1e-3) {
  return (f(x - 2 * h) - 8 * f(x - h) + 8 * f(x + h) - f(x + 2 * h)) / (12 * h);
}

}  // namespace oracle
