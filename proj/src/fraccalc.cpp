#include "frango/fraccalc.hpp"

#include <cmath>
#include <unordered_set>

#include "frango/error.hpp"
#include "node.hpp"

namespace frango {

namespace {

void check_point(std::span<const double> point, std::size_t axis, const Box& box) {
  if (axis >= box.dim()) throw DomainError("axis out of range");
  box.require_contains(point);
}

// Smallest node count along axis over all grid leaves of f (SIZE_MAX if none).
std::size_t min_grid_nodes(const ScalarField& f, std::size_t axis) {
  std::size_t best = static_cast<std::size_t>(-1);
  std::unordered_set<const detail::Node*> seen;
  std::vector<const detail::Node*> stack{f.node().get()};
  while (!stack.empty()) {
    const detail::Node* n = stack.back();
    stack.pop_back();
    if (!seen.insert(n).second) continue;
    if (n->op == detail::Op::Grid && axis < n->grid->dim()) best = std::min(best, n->grid->axes[axis].size());
    for (const auto& k : n->kids) stack.push_back(k.get());
  }
  return best;
}

void check_grid_resolution(const ScalarField& f, std::size_t axis) {
  if (!f.depends_on(axis)) return;
  std::size_t nodes = min_grid_nodes(f, axis);
  if (nodes < 4) {
    throw ResolutionError("grid has " + std::to_string(nodes) + " nodes on axis " +
                          std::to_string(axis) + ", at least 4 are needed");
  }
}

}  // namespace

double caputo_left(const ScalarField& f, FracOrder order, std::size_t axis,
                   std::span<const double> point, const Box& box, const QuadratureOptions& q) {
  check_point(point, axis, box);
  check_grid_resolution(f, axis);
  Calculus calc(box.base(), q);
  return calc.caputo(f, axis, order)(point);
}

double caputo_left_quadrature(const ScalarField& f, FracOrder order, std::size_t axis,
                              std::span<const double> point, const Box& box,
                              const QuadratureOptions& q) {
  check_point(point, axis, box);
  check_grid_resolution(f, axis);
  const std::size_t dim = box.dim();
  ScalarField opaque = ScalarField::callback(dim, [f](std::span<const double> x) { return f(x); }, f.deps());
  NodePtr df = detail::make_numderiv(opaque.node(), static_cast<int>(axis), q.fd_step, box.lower(axis));
  if (order.classical()) return ScalarField::from_node(df)(point);
  NodePtr integral = detail::make_rlint(df, static_cast<int>(axis), box.lower(axis), 1.0 - order.value(), q);
  return ScalarField::from_node(integral)(point);
}

double caputo_right(const ScalarField& f, FracOrder order, std::size_t axis,
                    std::span<const double> point, const Box& box, const QuadratureOptions& q) {
  check_point(point, axis, box);
  check_grid_resolution(f, axis);
  Calculus calc(box.base(), q);
  ScalarField df = calc.classical(f, axis);
  if (order.classical()) return df(point);
  const double alpha = order.value();
  const double upper = box.upper(axis);
  const double len = upper - point[axis];
  if (len <= 0.0) return 0.0;

  std::vector<double> base;
  if (const FracPoly* p = f.as_poly(&base); p && base[axis] == box.lower(axis)) {
    bool integer = true;
    for (const auto& [e, c] : p->terms()) integer = integer && e[axis] == std::floor(e[axis]);
    if (integer) {
      // (u - lo)^p = sum_k C(p,k) (hi - lo)^{p-k} (-1)^k (hi - u)^k and the mirror
      // monomial rule maps (hi - u)^k to Gamma(k+1)/Gamma(k+1-alpha) (hi - u)^{k-alpha}.
      const double width = upper - box.lower(axis);
      double sum = 0.0;
      for (const auto& [e, c] : p->terms()) {
        double rest = c;
        for (std::size_t k = 0; k < e.size(); ++k) {
          if (k != axis && e[k] != 0.0) rest *= std::pow(point[k] - base[k], e[k]);
        }
        const int deg = static_cast<int>(e[axis]);
        double binom = 1.0;
        for (int k = 0; k <= deg; ++k) {
          if (k > 0) binom = binom * (deg - k + 1) / k;
          if (k == 0) continue;
          double sign = (k % 2 == 0) ? 1.0 : -1.0;
          sum += rest * binom * std::pow(width, deg - k) * sign * std::tgamma(k + 1.0) /
                 std::tgamma(k + 1.0 - alpha) * std::pow(len, k - alpha);
        }
      }
      return sum;
    }
  }

  auto rule = abel_rule(1.0 - alpha, q);
  CompiledFields prog({df});
  std::vector<double> xp(point.begin(), point.end());
  double sum = 0.0;
  for (std::size_t j = 0; j < rule->t.size(); ++j) {
    xp[axis] = upper - len * rule->t[j];
    sum += rule->w[j] * -prog.evaluate(xp)[0];
  }
  return sum * std::pow(len, 1.0 - alpha);
}

double rl_integral(const ScalarField& f, FracOrder order, std::size_t axis,
                   std::span<const double> point, const Box& box, const QuadratureOptions& q) {
  check_point(point, axis, box);
  Calculus calc(box.base(), q);
  return calc.integral(f, axis, order.value())(point);
}

double mittag_leffler(FracOrder order, double z, const MittagLefflerOptions& opts) {
  if (!(std::abs(z) <= opts.radius)) {
    throw DomainError("|z| = " + std::to_string(std::abs(z)) + " exceeds the series radius guard " +
                      std::to_string(opts.radius));
  }
  if (z == 0.0) return 1.0;
  const double alpha = order.value();
  const double logz = std::log(std::abs(z));
  double sum = 1.0;
  for (int k = 1; k < opts.max_terms; ++k) {
    double mag = std::exp(k * logz - std::lgamma(alpha * k + 1.0));
    double term = (z < 0.0 && k % 2 == 1) ? -mag : mag;
    sum += term;
    // stop once the series has turned over and the term is negligible
    double prev = std::exp((k - 1) * logz - std::lgamma(alpha * (k - 1) + 1.0));
    if (mag <= prev && mag <= opts.tolerance * std::abs(sum)) return sum;
  }
  throw TruncationError("Mittag-Leffler series did not converge in " + std::to_string(opts.max_terms) +
                            " terms",
                        sum, opts.max_terms);
}

double frac_differential_coefficient(FracOrder order, std::size_t axis,
                                     std::span<const double> point, const Box& box) {
  check_point(point, axis, box);
  if (order.classical()) return 1.0;
  double s = point[axis] - box.lower(axis);
  if (s <= 0.0) throw SingularityError("fractional differential weight is singular at the base terminal");
  return std::tgamma(2.0 - order.value()) * std::pow(s, order.value() - 1.0);
}

std::vector<double> sampled_derivative(const std::vector<double>& f, double step, FracOrder order) {
  const std::size_t M = f.size();
  if (!(step > 0.0)) throw DomainError("sample step must be positive");
  std::vector<double> out(M, 0.0);
  if (order.classical()) {
    if (M < 5) throw ResolutionError("five samples needed for the derivative stencil");
    const double c = 1.0 / (12.0 * step);
    out[0] = c * (-25 * f[0] + 48 * f[1] - 36 * f[2] + 16 * f[3] - 3 * f[4]);
    out[1] = c * (-3 * f[0] - 10 * f[1] + 18 * f[2] - 6 * f[3] + f[4]);
    for (std::size_t j = 2; j + 2 < M; ++j) out[j] = c * (f[j - 2] - 8 * f[j - 1] + 8 * f[j + 1] - f[j + 2]);
    const std::size_t e = M - 1;
    out[e - 1] = -c * (-3 * f[e] - 10 * f[e - 1] + 18 * f[e - 2] - 6 * f[e - 3] + f[e - 4]);
    out[e] = -c * (-25 * f[e] + 48 * f[e - 1] - 36 * f[e - 2] + 16 * f[e - 3] - 3 * f[e - 4]);
    return out;
  }
  if (M < 2) throw ResolutionError("two samples needed for the L1 scheme");
  const double a = order.value();
  std::vector<double> b(M);
  for (std::size_t l = 0; l < M; ++l)
    b[l] = std::pow(static_cast<double>(l + 1), 1.0 - a) - std::pow(static_cast<double>(l), 1.0 - a);
  const double scale = std::pow(step, -a) / std::tgamma(2.0 - a);
  for (std::size_t j = 1; j < M; ++j) {
    double s = 0.0;
    for (std::size_t k = 0; k < j; ++k) s += b[j - 1 - k] * (f[k + 1] - f[k]);
    out[j] = scale * s;
  }
  return out;
}

}  // namespace frango
