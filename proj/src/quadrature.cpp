#include "frango/quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <tuple>

#include "frango/error.hpp"

namespace frango {

namespace {

// A^q - B^q for A > B >= 0 without cancellation when B is close to A.
double power_gap(double a, double b, double q) {
  if (b <= 0.0) return std::pow(a, q);
  return -std::pow(a, q) * std::expm1(q * std::log1p(-(a - b) / a));
}

}  // namespace

void gauss_legendre(int points, std::vector<double>& x, std::vector<double>& w) {
  if (points < 1) throw DomainError("Gauss-Legendre rule needs at least one point");
  x.assign(static_cast<std::size_t>(points), 0.0);
  w.assign(static_cast<std::size_t>(points), 0.0);
  const int n = points;
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int k = 1; k <= n; ++k) {
        double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p2) / k;
      }
      dp = n * (z * p0 - p1) / (z * z - 1.0);
      double dz = p0 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    // recompute derivative at the converged root
    double p0 = 1.0, p1 = 0.0;
    for (int k = 1; k <= n; ++k) {
      double p2 = p1;
      p1 = p0;
      p0 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p2) / k;
    }
    dp = n * (z * p0 - p1) / (z * z - 1.0);
    double wi = 2.0 / ((1.0 - z * z) * dp * dp);
    x[static_cast<std::size_t>(i)] = -z;
    x[static_cast<std::size_t>(n - 1 - i)] = z;
    w[static_cast<std::size_t>(i)] = wi;
    w[static_cast<std::size_t>(n - 1 - i)] = wi;
  }
}

LineRule product_trapezoid_rule(double beta, int nodes) {
  if (!(beta > 0.0)) throw DomainError("kernel order must be positive");
  if (nodes < 2) throw ResolutionError("product trapezoid needs at least two panels");
  const int n = nodes;
  std::vector<double> grid(static_cast<std::size_t>(n) + 1);
  for (int j = 0; j <= n; ++j) {
    grid[static_cast<std::size_t>(j)] = 0.5 * (1.0 - std::cos(std::numbers::pi * j / n));
  }
  grid[0] = 0.0;
  grid[static_cast<std::size_t>(n)] = 1.0;
  double inv_gamma = 1.0 / std::tgamma(beta);

  LineRule r;
  // node 0: midpoint of the first panel, nodes 1..n: grid points t_1..t_n
  r.t.resize(static_cast<std::size_t>(n) + 1);
  r.w.assign(static_cast<std::size_t>(n) + 1, 0.0);
  r.t[0] = 0.5 * grid[1];
  for (int j = 1; j <= n; ++j) r.t[static_cast<std::size_t>(j)] = grid[static_cast<std::size_t>(j)];

  {
    double a = 1.0, b = 1.0 - grid[1];
    r.w[0] = power_gap(a, b, beta) / beta;
  }
  for (int j = 1; j < n; ++j) {
    double a = 1.0 - grid[static_cast<std::size_t>(j)];
    double b = 1.0 - grid[static_cast<std::size_t>(j) + 1];
    double h = a - b;
    double gb = power_gap(a, b, beta);
    double gb1 = power_gap(a, b, beta + 1.0);
    // int_b^a tau^{beta-1} (tau - b) and int_b^a tau^{beta-1} (a - tau)
    double left = gb1 / (beta + 1.0) - b * gb / beta;
    double right = a * gb / beta - gb1 / (beta + 1.0);
    r.w[static_cast<std::size_t>(j)] += left / h;
    r.w[static_cast<std::size_t>(j) + 1] += right / h;
  }
  for (double& w : r.w) w *= inv_gamma;
  return r;
}

LineRule gauss_legendre_rule(int panels, int points) {
  if (panels < 1) throw ResolutionError("Gauss-Legendre rule needs at least one panel");
  std::vector<double> x, w;
  gauss_legendre(points, x, w);
  LineRule r;
  double h = 1.0 / panels;
  for (int p = 0; p < panels; ++p) {
    double mid = (p + 0.5) * h;
    for (std::size_t i = 0; i < x.size(); ++i) {
      r.t.push_back(mid + 0.5 * h * x[i]);
      r.w.push_back(0.5 * h * w[i]);
    }
  }
  return r;
}

std::shared_ptr<const LineRule> abel_rule(double beta, const QuadratureOptions& opts) {
  static std::mutex mutex;
  static std::map<std::tuple<double, int, int, int>, std::shared_ptr<const LineRule>> cache;
  auto key = beta == 1.0 ? std::make_tuple(beta, 0, opts.gauss_panels, opts.gauss_points)
                         : std::make_tuple(beta, opts.nodes, 0, 0);
  std::lock_guard<std::mutex> lock(mutex);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  auto rule = std::make_shared<const LineRule>(
      beta == 1.0 ? gauss_legendre_rule(opts.gauss_panels, opts.gauss_points)
                  : product_trapezoid_rule(beta, opts.nodes));
  cache.emplace(key, rule);
  return rule;
}

}  // namespace frango
