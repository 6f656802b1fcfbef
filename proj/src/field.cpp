#include <algorithm>
#include <array>
#include <cmath>
#include <mutex>
#include <unordered_map>

#include <Eigen/Dense>

#include "frango/error.hpp"
#include "frango/parallel.hpp"
#include "node.hpp"

namespace frango {

namespace detail {

namespace {

std::size_t merge_dim(std::size_t a, std::size_t b) {
  if (a == 0) return b;
  if (b == 0 || a == b) return a;
  throw DomainError("fields of dimension " + std::to_string(a) + " and " + std::to_string(b) +
                    " cannot be combined");
}

std::shared_ptr<Node> fresh(Op op, std::size_t dim, AxisMask deps) {
  auto n = std::make_shared<Node>();
  n->op = op;
  n->dim = dim;
  n->deps = deps;
  return n;
}

const NodePtr& zero_node() {
  static const NodePtr z = [] {
    auto n = std::make_shared<Node>();
    n->op = Op::Const;
    return NodePtr(n);
  }();
  return z;
}

const NodePtr& one_node() {
  static const NodePtr o = [] {
    auto n = std::make_shared<Node>();
    n->op = Op::Const;
    n->value = 1.0;
    return NodePtr(n);
  }();
  return o;
}

bool same_base(const Node& a, const Node& b) { return a.poly_base == b.poly_base; }

NodePtr binary(Op op, const NodePtr& a, const NodePtr& b) {
  auto n = fresh(op, merge_dim(a->dim, b->dim), a->deps | b->deps);
  n->kids = {a, b};
  return n;
}

}  // namespace

bool is_const(const NodePtr& a, double* value) {
  if (a->op != Op::Const) return false;
  if (value) *value = a->value;
  return true;
}

NodePtr make_const(double c) {
  if (c == 0.0 && !std::signbit(c)) return zero_node();
  if (c == 1.0) return one_node();
  auto n = fresh(Op::Const, 0, 0);
  n->value = c;
  return n;
}

NodePtr make_poly(FracPoly p, std::vector<double> base) {
  if (p.is_zero()) return make_const(0.0);
  if (p.is_constant()) return make_const(p.constant_term());
  if (base.size() != p.dim()) {
    throw DomainError("polynomial base point has " + std::to_string(base.size()) +
                      " coordinates, polynomial dimension is " + std::to_string(p.dim()));
  }
  if (p.dim() > kMaxAxes) throw DomainError("too many coordinates");
  AxisMask deps = 0;
  for (std::size_t k = 0; k < p.dim(); ++k)
    if (p.depends_on(k)) deps |= axis_bit(k);
  auto n = fresh(Op::Poly, p.dim(), deps);
  n->poly = std::make_shared<const FracPoly>(std::move(p));
  n->poly_base = std::move(base);
  return n;
}

NodePtr make_power(std::size_t dim, int axis, double base, double p) {
  p = snap_exponent(p);
  if (p == 0.0) return make_const(1.0);
  auto n = fresh(Op::Power, dim, axis_bit(static_cast<std::size_t>(axis)));
  n->axis = axis;
  n->base = base;
  n->value = p;
  return n;
}

NodePtr make_grid(std::shared_ptr<const GridData> g, std::vector<int> orders) {
  AxisMask deps = 0;
  for (std::size_t k = 0; k < g->dim(); ++k) {
    std::size_t cnt = g->axes[k].size();
    int degree = static_cast<int>(std::min<std::size_t>(4, cnt)) - 1;
    if (orders[k] > degree) return make_const(0.0);
    if (cnt > 1) deps |= axis_bit(k);
  }
  auto n = fresh(Op::Grid, g->dim(), deps);
  n->grid = std::move(g);
  n->grid_order = std::move(orders);
  return n;
}

NodePtr make_callback(std::size_t dim, std::shared_ptr<const Callback> fn, AxisMask deps) {
  auto n = fresh(Op::Callback, dim, deps & all_axes(dim));
  n->fn = std::move(fn);
  return n;
}

NodePtr make_neg(const NodePtr& a) {
  double c;
  if (is_const(a, &c)) return make_const(-c);
  if (a->op == Op::Neg) return a->kids[0];
  if (a->op == Op::Poly) return make_poly(-*a->poly, a->poly_base);
  auto n = fresh(Op::Neg, a->dim, a->deps);
  n->kids = {a};
  return n;
}

NodePtr make_add(const NodePtr& a, const NodePtr& b) {
  double ca, cb;
  bool ka = is_const(a, &ca), kb = is_const(b, &cb);
  if (ka && kb) return make_const(ca + cb);
  if (ka && ca == 0.0) return b;
  if (kb && cb == 0.0) return a;
  if (a->op == Op::Poly && b->op == Op::Poly && same_base(*a, *b))
    return make_poly(*a->poly + *b->poly, a->poly_base);
  if (a->op == Op::Poly && kb) return make_poly(*a->poly + FracPoly::constant(a->dim, cb), a->poly_base);
  if (b->op == Op::Poly && ka) return make_poly(*b->poly + FracPoly::constant(b->dim, ca), b->poly_base);
  if (b->op == Op::Neg) return make_sub(a, b->kids[0]);
  return binary(Op::Add, a, b);
}

NodePtr make_sub(const NodePtr& a, const NodePtr& b) {
  double ca, cb;
  bool ka = is_const(a, &ca), kb = is_const(b, &cb);
  if (ka && kb) return make_const(ca - cb);
  if (kb && cb == 0.0) return a;
  if (ka && ca == 0.0) return make_neg(b);
  if (a == b) return make_const(0.0);
  if (a->op == Op::Poly && b->op == Op::Poly && same_base(*a, *b))
    return make_poly(*a->poly - *b->poly, a->poly_base);
  if (a->op == Op::Poly && kb) return make_poly(*a->poly - FracPoly::constant(a->dim, cb), a->poly_base);
  if (b->op == Op::Poly && ka) return make_poly(FracPoly::constant(b->dim, ca) - *b->poly, b->poly_base);
  if (b->op == Op::Neg) return make_add(a, b->kids[0]);
  return binary(Op::Sub, a, b);
}

NodePtr make_mul(const NodePtr& a, const NodePtr& b) {
  double ca, cb;
  bool ka = is_const(a, &ca), kb = is_const(b, &cb);
  if (ka && kb) return make_const(ca * cb);
  if ((ka && ca == 0.0) || (kb && cb == 0.0)) return make_const(0.0);
  if (ka && ca == 1.0) return b;
  if (kb && cb == 1.0) return a;
  if (ka && ca == -1.0) return make_neg(b);
  if (kb && cb == -1.0) return make_neg(a);
  if (a->op == Op::Poly && b->op == Op::Poly && same_base(*a, *b))
    return make_poly(*a->poly * *b->poly, a->poly_base);
  if (a->op == Op::Poly && kb) return make_poly(*a->poly * cb, a->poly_base);
  if (b->op == Op::Poly && ka) return make_poly(*b->poly * ca, b->poly_base);
  if (a->op == Op::Power && b->op == Op::Power && a->axis == b->axis && a->base == b->base)
    return make_power(merge_dim(a->dim, b->dim), a->axis, a->base, a->value + b->value);
  if (a->op == Op::Neg) return make_neg(make_mul(a->kids[0], b));
  if (b->op == Op::Neg) return make_neg(make_mul(a, b->kids[0]));
  // keep constants on the left so that c1*(c2*x) folds
  if (kb) return make_mul(b, a);
  if (ka && b->op == Op::Mul && b->kids[0]->op == Op::Const)
    return make_mul(make_const(ca * b->kids[0]->value), b->kids[1]);
  return binary(Op::Mul, a, b);
}

NodePtr make_div(const NodePtr& a, const NodePtr& b) {
  double ca, cb;
  bool ka = is_const(a, &ca), kb = is_const(b, &cb);
  if (kb) {
    if (cb == 0.0) throw DomainError("division by the constant zero");
    return make_mul(make_const(1.0 / cb), a);
  }
  if (ka && ca == 0.0) return make_const(0.0);
  if (a == b) return make_const(1.0);
  return binary(Op::Div, a, b);
}

NodePtr make_unary(Op op, const NodePtr& a) {
  double c;
  if (is_const(a, &c)) {
    switch (op) {
      case Op::Exp: return make_const(std::exp(c));
      case Op::Log:
        if (c <= 0.0) throw DomainError("log of a nonpositive constant");
        return make_const(std::log(c));
      case Op::Abs: return make_const(std::abs(c));
      case Op::Sqrt:
        if (c < 0.0) throw DomainError("sqrt of a negative constant");
        return make_const(std::sqrt(c));
      case Op::Sign: return make_const(c > 0.0 ? 1.0 : (c < 0.0 ? -1.0 : 0.0));
      case Op::Sin: return make_const(std::sin(c));
      case Op::Cos: return make_const(std::cos(c));
      default: break;
    }
  }
  if (op == Op::Log && a->op == Op::Exp) return a->kids[0];
  auto n = fresh(op, a->dim, a->deps);
  n->kids = {a};
  return n;
}

NodePtr make_powc(const NodePtr& a, double c) {
  double v;
  if (c == 0.0) return make_const(1.0);
  if (c == 1.0) return a;
  if (is_const(a, &v)) return make_const(std::pow(v, c));
  if (c == 0.5) return make_unary(Op::Sqrt, a);
  if (c == -1.0) return make_div(make_const(1.0), a);
  if (c == 2.0) return make_mul(a, a);
  auto n = fresh(Op::PowC, a->dim, a->deps);
  n->kids = {a};
  n->value = c;
  return n;
}

NodePtr make_restrict(const NodePtr& a, int axis, double value) {
  AxisMask bit = axis_bit(static_cast<std::size_t>(axis));
  if (!(a->deps & bit)) return a;
  if (a->op == Op::Poly) {
    double s = value - a->poly_base[static_cast<std::size_t>(axis)];
    FracPoly out(a->dim);
    for (const auto& [e, c] : a->poly->terms()) {
      double p = e[static_cast<std::size_t>(axis)];
      double f = p == 0.0 ? 1.0 : std::pow(s, p);
      auto e2 = e;
      e2[static_cast<std::size_t>(axis)] = 0.0;
      out.add_term(c * f, std::move(e2));
    }
    return make_poly(std::move(out), a->poly_base);
  }
  if (a->op == Op::Power) {
    double s = value - a->base;
    if (s == 0.0 && a->value < 0.0) throw SingularityError("singular power restricted to its base");
    return make_const(std::pow(s, a->value));
  }
  if (a->op == Op::Restrict && a->axis == axis) return a;
  auto n = fresh(Op::Restrict, a->dim, a->deps & ~bit);
  n->kids = {a};
  n->axis = axis;
  n->value = value;
  n->sub = std::make_shared<const Program>(std::vector<NodePtr>{a});
  return n;
}

NodePtr make_rlint(const NodePtr& a, int axis, double base, double beta,
                   const QuadratureOptions& opts) {
  if (!(beta > 0.0)) throw DomainError("integral order must be positive");
  const auto ax = static_cast<std::size_t>(axis);
  AxisMask bit = axis_bit(ax);
  double g1 = std::tgamma(beta + 1.0);
  if (!(a->deps & bit)) {
    if (a->op == Op::Poly && a->poly_base[ax] == base) {
      auto e = FracPoly::Exponents(a->dim, 0.0);
      e[ax] = beta;
      return make_poly(*a->poly * FracPoly::monomial(a->dim, 1.0 / g1, e), a->poly_base);
    }
    return make_mul(a, make_mul(make_const(1.0 / g1), make_power(a->dim, axis, base, beta)));
  }
  if (a->op == Op::Poly && a->poly_base[ax] == base)
    return make_poly(a->poly->rl_integral(ax, beta), a->poly_base);
  if (a->op == Op::Power && a->axis == axis && a->base == base && a->value > -1.0) {
    double p = a->value;
    double c = std::tgamma(p + 1.0) / std::tgamma(p + 1.0 + beta);
    return make_mul(make_const(c), make_power(a->dim, axis, base, p + beta));
  }
  if (a->op == Op::RLInt && a->axis == axis && a->base == base)
    return make_rlint(a->kids[0], axis, base, beta + a->value, opts);
  if (a->op == Op::Deriv && a->axis == axis && beta >= 1.0) {
    // I^1 of dF/du is F - F(base); the remainder of the order integrates that.
    const NodePtr& f = a->kids[0];
    NodePtr diff = make_sub(f, make_restrict(f, axis, base));
    if (beta == 1.0) return diff;
    return make_rlint(diff, axis, base, beta - 1.0, opts);
  }
  auto n = fresh(Op::RLInt, a->dim, a->deps | bit);
  n->kids = {a};
  n->axis = axis;
  n->base = base;
  n->value = beta;
  n->sub = std::make_shared<const Program>(std::vector<NodePtr>{a});
  n->rule = abel_rule(beta, opts);
  return n;
}

NodePtr make_numderiv(const NodePtr& a, int axis, double step, double lower) {
  if (!(a->deps & axis_bit(static_cast<std::size_t>(axis)))) return make_const(0.0);
  auto n = fresh(Op::NumDeriv, a->dim, a->deps);
  n->kids = {a};
  n->axis = axis;
  n->step = step;
  n->base = lower;
  n->sub = std::make_shared<const Program>(std::vector<NodePtr>{a});
  return n;
}

NodePtr make_deriv_marker(const NodePtr& f, const NodePtr& df, int axis) {
  if (is_const(df)) return df;
  auto n = fresh(Op::Deriv, merge_dim(f->dim, df->dim), df->deps);
  n->kids = {f, df};
  n->axis = axis;
  return n;
}

std::shared_ptr<InverseFamily> make_inverse_family(int n, std::vector<NodePtr> entries) {
  if (static_cast<int>(entries.size()) != n * n) throw DomainError("inverse family needs n*n entries");
  auto fam = std::make_shared<InverseFamily>();
  fam->n = n;
  fam->entries = std::move(entries);
  fam->inverse.resize(static_cast<std::size_t>(n * n));
  return fam;
}

NodePtr make_inverse_entry(const std::shared_ptr<InverseFamily>& fam, int i, int j) {
  const int n = fam->n;
  bool all_const = true;
  for (const auto& e : fam->entries) all_const = all_const && is_const(e);
  if (all_const) {
    Eigen::MatrixXd m(n, n);
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < n; ++c) m(r, c) = fam->entries[static_cast<std::size_t>(r * n + c)]->value;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(m);
    if (!lu.isInvertible()) throw InversionError("constant matrix is singular");
    return make_const(lu.inverse()(i, j));
  }
  if (n == 1) return make_div(make_const(1.0), fam->entries[0]);
  std::lock_guard<std::mutex> lock(fam->mutex);
  auto& slot = fam->inverse[static_cast<std::size_t>(i * n + j)];
  if (auto existing = slot.lock()) return existing;
  std::size_t dim = 0;
  AxisMask deps = 0;
  for (const auto& e : fam->entries) {
    dim = merge_dim(dim, e->dim);
    deps |= e->deps;
  }
  auto node = fresh(Op::InvEntry, dim, deps);
  node->kids = fam->entries;
  node->family = fam;
  node->inv_i = i;
  node->inv_j = j;
  slot = node;
  return node;
}

// ---------------------------------------------------------------------------
// grid interpolation

namespace {

// Weights w_i such that sum_i w_i f(z_i) is the order-th derivative at x of the
// Lagrange interpolant through nodes z.
void lagrange_weights(const double* z, int s, double x, int order, double* w) {
  for (int i = 0; i < s; ++i) {
    // numerator prod_{j != i} (t - (z_j - x)) as coefficients in t
    std::array<double, 5> c{1.0, 0.0, 0.0, 0.0, 0.0};
    int deg = 0;
    double denom = 1.0;
    for (int j = 0; j < s; ++j) {
      if (j == i) continue;
      double r = z[j] - x;
      for (int d = deg + 1; d >= 1; --d) c[static_cast<std::size_t>(d)] = c[static_cast<std::size_t>(d - 1)] - r * c[static_cast<std::size_t>(d)];
      c[0] = -r * c[0];
      ++deg;
      denom *= z[i] - z[j];
    }
    double fact = 1.0;
    for (int k = 2; k <= order; ++k) fact *= k;
    w[i] = order <= deg ? fact * c[static_cast<std::size_t>(order)] / denom : 0.0;
  }
}

}  // namespace

double grid_evaluate(const GridData& g, const std::vector<int>& orders, std::span<const double> x) {
  const std::size_t d = g.dim();
  std::array<std::array<double, 4>, kMaxAxes> w{};
  std::array<std::size_t, kMaxAxes> start{}, size{}, stride{};
  std::size_t st = 1;
  for (std::size_t k = d; k-- > 0;) {
    stride[k] = st;
    st *= g.axes[k].size();
  }
  for (std::size_t k = 0; k < d; ++k) {
    const auto& ax = g.axes[k];
    std::size_t cnt = ax.size();
    if (cnt == 1) {
      start[k] = 0;
      size[k] = 1;
      w[k][0] = orders[k] == 0 ? 1.0 : 0.0;
      continue;
    }
    std::size_t s = std::min<std::size_t>(4, cnt);
    auto it = std::upper_bound(ax.begin(), ax.end(), x[k]);
    std::size_t i = it == ax.begin() ? 0 : static_cast<std::size_t>(it - ax.begin()) - 1;
    i = std::min(i, cnt - 2);
    std::size_t lo = i >= 1 ? i - 1 : 0;
    lo = std::min(lo, cnt - s);
    start[k] = lo;
    size[k] = s;
    lagrange_weights(ax.data() + lo, static_cast<int>(s), x[k], orders[k], w[k].data());
  }
  std::array<std::size_t, kMaxAxes> idx{};
  double sum = 0.0;
  for (;;) {
    double weight = 1.0;
    std::size_t off = 0;
    for (std::size_t k = 0; k < d; ++k) {
      weight *= w[k][idx[k]];
      off += (start[k] + idx[k]) * stride[k];
    }
    if (weight != 0.0) sum += weight * g.values[off];
    std::size_t k = d;
    while (k-- > 0) {
      if (++idx[k] < size[k]) break;
      idx[k] = 0;
    }
    if (k == static_cast<std::size_t>(-1)) break;
  }
  return sum;
}

// ---------------------------------------------------------------------------
// program

Program::Program(const std::vector<NodePtr>& roots) {
  keep_ = roots;
  std::unordered_map<const Node*, std::uint32_t> slot;
  std::size_t max_dim = 0;
  struct Frame {
    const Node* node;
    std::size_t next;
  };
  for (const auto& root : roots) {
    if (slot.count(root.get())) {
      roots_.push_back(slot[root.get()]);
      continue;
    }
    std::vector<Frame> stack{{root.get(), 0}};
    while (!stack.empty()) {
      Frame& f = stack.back();
      const Node* n = f.node;
      // InvEntry, Restrict, RLInt and NumDeriv read their children through `sub`
      // or gather them directly; only InvEntry and plain ops need kid slots.
      bool uses_kids = n->op != Op::Restrict && n->op != Op::RLInt && n->op != Op::NumDeriv;
      std::size_t kid_count = uses_kids ? n->kids.size() : 0;
      if (n->op == Op::Deriv) kid_count = 2;
      if (f.next < kid_count) {
        const Node* k = n->kids[f.next++].get();
        if (n->op == Op::Deriv && f.next == 1) continue;  // value lives in kids[1]
        if (!slot.count(k)) stack.push_back({k, 0});
        continue;
      }
      Instr in{n, static_cast<std::uint32_t>(kid_slots_.size()), 0};
      if (n->op == Op::Deriv) {
        kid_slots_.push_back(slot.at(n->kids[1].get()));
        in.kid_count = 1;
      } else if (uses_kids) {
        for (const auto& k : n->kids) kid_slots_.push_back(slot.at(k.get()));
        in.kid_count = static_cast<std::uint32_t>(n->kids.size());
      }
      slot[n] = static_cast<std::uint32_t>(instr_.size());
      instr_.push_back(in);
      max_dim = std::max(max_dim, n->dim);
      stack.pop_back();
    }
    roots_.push_back(slot.at(root.get()));
  }
  by_axis_.resize(max_dim);
  for (std::uint32_t i = 0; i < instr_.size(); ++i) {
    AxisMask deps = instr_[i].node->deps;
    for (std::size_t k = 0; k < max_dim; ++k)
      if (deps & axis_bit(k)) by_axis_[k].push_back(i);
  }
}

void Program::run(std::span<const double> x, double* slots) const {
  for (std::size_t i = 0; i < instr_.size(); ++i) slots[i] = exec(instr_[i], x, slots);
}

void Program::rerun(std::span<const double> x, std::size_t axis, double* slots) const {
  if (axis >= by_axis_.size()) return;
  for (std::uint32_t i : by_axis_[axis]) slots[i] = exec(instr_[i], x, slots);
}

double Program::value(std::span<const double> x) const {
  std::vector<double> slots(instr_.size());
  run(x, slots.data());
  return slots[roots_[0]];
}

double Program::exec(const Instr& in, std::span<const double> x, const double* slots) const {
  const Node& n = *in.node;
  const std::uint32_t* k = kid_slots_.data() + in.first_kid;
  switch (n.op) {
    case Op::Const:
      return n.value;
    case Op::Poly: {
      std::array<double, kMaxAxes> s;
      for (std::size_t i = 0; i < n.dim; ++i) s[i] = x[i] - n.poly_base[i];
      return n.poly->evaluate_shifted(std::span<const double>(s.data(), n.dim));
    }
    case Op::Power: {
      double s = x[static_cast<std::size_t>(n.axis)] - n.base;
      if (s < 0.0) {
        if (s > -1e-12 * std::max(1.0, std::abs(n.base))) {
          s = 0.0;
        } else {
          throw DomainError("coordinate below its base terminal");
        }
      }
      if (s == 0.0 && n.value < 0.0) throw SingularityError("singular power at the base terminal");
      return std::pow(s, n.value);
    }
    case Op::Grid:
      return grid_evaluate(*n.grid, n.grid_order, x);
    case Op::Callback:
      return (*n.fn)(x);
    case Op::Neg:
      return -slots[k[0]];
    case Op::Add:
      return slots[k[0]] + slots[k[1]];
    case Op::Sub:
      return slots[k[0]] - slots[k[1]];
    case Op::Mul:
      return slots[k[0]] * slots[k[1]];
    case Op::Div:
      return slots[k[0]] / slots[k[1]];
    case Op::Exp:
      return std::exp(slots[k[0]]);
    case Op::Log: {
      double v = slots[k[0]];
      if (!(v > 0.0)) throw DomainError("log of a nonpositive value");
      return std::log(v);
    }
    case Op::Abs:
      return std::abs(slots[k[0]]);
    case Op::Sqrt: {
      double v = slots[k[0]];
      if (v < 0.0) throw DomainError("sqrt of a negative value");
      return std::sqrt(v);
    }
    case Op::PowC:
      return std::pow(slots[k[0]], n.value);
    case Op::Sign: {
      double v = slots[k[0]];
      return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0);
    }
    case Op::Sin:
      return std::sin(slots[k[0]]);
    case Op::Cos:
      return std::cos(slots[k[0]]);
    case Op::Restrict: {
      std::vector<double> xp(x.begin(), x.end());
      xp[static_cast<std::size_t>(n.axis)] = n.value;
      return n.sub->value(xp);
    }
    case Op::RLInt: {
      const auto ax = static_cast<std::size_t>(n.axis);
      double len = x[ax] - n.base;
      if (len < 0.0) {
        if (len > -1e-12 * std::max(1.0, std::abs(n.base))) return 0.0;
        throw DomainError("fractional integral evaluated below its base terminal");
      }
      if (len == 0.0) return 0.0;
      const LineRule& rule = *n.rule;
      std::vector<double> xp(x.begin(), x.end());
      std::vector<double> buf(n.sub->size());
      const std::size_t root = n.sub->root_slot(0);
      double sum = 0.0;
      for (std::size_t j = 0; j < rule.t.size(); ++j) {
        xp[ax] = n.base + len * rule.t[j];
        if (j == 0) {
          n.sub->run(xp, buf.data());
        } else {
          n.sub->rerun(xp, ax, buf.data());
        }
        sum += rule.w[j] * buf[root];
      }
      return n.value == 1.0 ? sum * len : sum * std::pow(len, n.value);
    }
    case Op::NumDeriv: {
      const auto ax = static_cast<std::size_t>(n.axis);
      double h = n.step * std::max(1.0, std::abs(x[ax]));
      std::vector<double> xp(x.begin(), x.end());
      std::vector<double> buf(n.sub->size());
      const std::size_t root = n.sub->root_slot(0);
      static const double central_off[5] = {-2.0, -1.0, 1.0, 2.0, 0.0};
      static const double central_c[5] = {1.0, -8.0, 8.0, -1.0, 0.0};
      static const double forward_off[5] = {0.0, 1.0, 2.0, 3.0, 4.0};
      static const double forward_c[5] = {-25.0, 48.0, -36.0, 16.0, -3.0};
      bool forward = x[ax] - 2.0 * h < n.base;
      const double* offsets = forward ? forward_off : central_off;
      const double* coeff = forward ? forward_c : central_c;
      const int count = forward ? 5 : 4;
      double sum = 0.0;
      for (int j = 0; j < count; ++j) {
        xp[ax] = x[ax] + offsets[j] * h;
        if (j == 0) {
          n.sub->run(xp, buf.data());
        } else {
          n.sub->rerun(xp, ax, buf.data());
        }
        sum += coeff[j] * buf[root];
      }
      return sum / (12.0 * h);
    }
    case Op::InvEntry: {
      const int dim = n.family->n;
      if (dim == 2) {
        double a = slots[k[0]], b = slots[k[1]], c = slots[k[2]], d = slots[k[3]];
        double det = a * d - b * c;
        double scale = std::max({std::abs(a * d), std::abs(b * c), 1e-300});
        if (std::abs(det) <= 1e-14 * scale) throw InversionError("singular 2x2 matrix");
        const double inv[4] = {d / det, -b / det, -c / det, a / det};
        return inv[n.inv_i * 2 + n.inv_j];
      }
      Eigen::MatrixXd m(dim, dim);
      for (int r = 0; r < dim; ++r)
        for (int c = 0; c < dim; ++c) m(r, c) = slots[k[r * dim + c]];
      Eigen::PartialPivLU<Eigen::MatrixXd> lu(m);
      Eigen::VectorXd e = Eigen::VectorXd::Zero(dim);
      e(n.inv_j) = 1.0;
      Eigen::VectorXd col = lu.solve(e);
      if (!std::isfinite(col(n.inv_i))) throw InversionError("singular matrix");
      double mmax = m.cwiseAbs().maxCoeff();
      if (std::abs(lu.determinant()) <= 1e-14 * std::pow(std::max(mmax, 1e-300), dim))
        throw InversionError("singular matrix");
      return col(n.inv_i);
    }
    case Op::Deriv:
      return slots[k[0]];
  }
  return 0.0;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// GridData

void GridData::validate() const {
  if (axes.empty()) throw ParseError("grid has no axes");
  std::size_t total = 1;
  for (std::size_t k = 0; k < axes.size(); ++k) {
    if (axes[k].empty()) throw ParseError("grid axis " + std::to_string(k) + " is empty");
    for (std::size_t j = 1; j < axes[k].size(); ++j) {
      if (!(axes[k][j] > axes[k][j - 1]))
        throw ParseError("grid axis " + std::to_string(k) + " is not strictly increasing");
    }
    total *= axes[k].size();
  }
  if (values.size() != total) {
    throw ParseError("grid has " + std::to_string(values.size()) + " samples, expected " +
                     std::to_string(total));
  }
}

GridData GridData::sample(std::vector<std::vector<double>> axes, const Callback& f) {
  GridData g;
  g.axes = std::move(axes);
  std::size_t total = 1;
  for (const auto& a : g.axes) total *= a.size();
  g.values.resize(total);
  std::vector<std::size_t> idx(g.axes.size(), 0);
  std::vector<double> x(g.axes.size());
  for (std::size_t p = 0; p < total; ++p) {
    for (std::size_t k = 0; k < g.axes.size(); ++k) x[k] = g.axes[k][idx[k]];
    g.values[p] = f(x);
    for (std::size_t k = g.axes.size(); k-- > 0;) {
      if (++idx[k] < g.axes[k].size()) break;
      idx[k] = 0;
    }
  }
  g.validate();
  return g;
}

// ---------------------------------------------------------------------------
// ScalarField

struct ScalarField::Cache {
  std::once_flag once;
  std::shared_ptr<const detail::Program> program;
};

ScalarField::ScalarField() : ScalarField(detail::make_const(0.0)) {}
ScalarField::ScalarField(double c) : ScalarField(detail::make_const(c)) {}
ScalarField::ScalarField(NodePtr node) : node_(std::move(node)), cache_(std::make_shared<Cache>()) {}

ScalarField ScalarField::poly(FracPoly p, std::vector<double> base) {
  return ScalarField(detail::make_poly(std::move(p), std::move(base)));
}

ScalarField ScalarField::coordinate(const std::vector<double>& base, std::size_t axis) {
  FracPoly p = FracPoly::shifted(base.size(), axis) + FracPoly::constant(base.size(), base.at(axis));
  return ScalarField(detail::make_poly(std::move(p), base));
}

ScalarField ScalarField::grid(GridData g) {
  g.validate();
  std::size_t d = g.dim();
  return ScalarField(
      detail::make_grid(std::make_shared<const GridData>(std::move(g)), std::vector<int>(d, 0)));
}

ScalarField ScalarField::callback(std::size_t dim, Callback fn, std::optional<AxisMask> deps) {
  if (dim == 0 || dim > kMaxAxes) throw DomainError("callback dimension out of range");
  return ScalarField(detail::make_callback(dim, std::make_shared<const Callback>(std::move(fn)),
                                           deps.value_or(all_axes(dim))));
}

ScalarField ScalarField::from_node(NodePtr node) { return ScalarField(std::move(node)); }

double ScalarField::operator()(std::span<const double> x) const {
  if (node_->op == detail::Op::Const) return node_->value;
  if (x.size() < node_->dim) {
    throw DomainError("point has " + std::to_string(x.size()) + " coordinates, field needs " +
                      std::to_string(node_->dim));
  }
  std::call_once(cache_->once, [this] {
    cache_->program = std::make_shared<const detail::Program>(std::vector<NodePtr>{node_});
  });
  return cache_->program->value(x);
}

double ScalarField::operator()(std::initializer_list<double> x) const {
  return (*this)(std::span<const double>(x.begin(), x.size()));
}

std::size_t ScalarField::dim() const { return node_->dim; }
AxisMask ScalarField::deps() const { return node_->deps; }

std::optional<double> ScalarField::constant_value() const {
  if (node_->op == detail::Op::Const) return node_->value;
  return std::nullopt;
}

bool ScalarField::is_zero() const {
  return node_->op == detail::Op::Const && node_->value == 0.0;
}

const FracPoly* ScalarField::as_poly(std::vector<double>* base) const {
  if (node_->op != detail::Op::Poly) return nullptr;
  if (base) *base = node_->poly_base;
  return node_->poly.get();
}

const GridData* ScalarField::as_grid() const {
  if (node_->op != detail::Op::Grid) return nullptr;
  for (int o : node_->grid_order)
    if (o != 0) return nullptr;
  return node_->grid.get();
}

std::size_t ScalarField::node_count() const {
  detail::Program p({node_});
  return p.size();
}

ScalarField operator+(const ScalarField& a, const ScalarField& b) {
  return ScalarField::from_node(detail::make_add(a.node(), b.node()));
}
ScalarField operator-(const ScalarField& a, const ScalarField& b) {
  return ScalarField::from_node(detail::make_sub(a.node(), b.node()));
}
ScalarField operator*(const ScalarField& a, const ScalarField& b) {
  return ScalarField::from_node(detail::make_mul(a.node(), b.node()));
}
ScalarField operator/(const ScalarField& a, const ScalarField& b) {
  return ScalarField::from_node(detail::make_div(a.node(), b.node()));
}
ScalarField operator-(const ScalarField& a) { return ScalarField::from_node(detail::make_neg(a.node())); }
ScalarField& operator+=(ScalarField& a, const ScalarField& b) { return a = a + b; }
ScalarField& operator-=(ScalarField& a, const ScalarField& b) { return a = a - b; }
ScalarField& operator*=(ScalarField& a, const ScalarField& b) { return a = a * b; }

ScalarField exp(const ScalarField& f) { return ScalarField::from_node(detail::make_unary(detail::Op::Exp, f.node())); }
ScalarField log(const ScalarField& f) { return ScalarField::from_node(detail::make_unary(detail::Op::Log, f.node())); }
ScalarField abs(const ScalarField& f) { return ScalarField::from_node(detail::make_unary(detail::Op::Abs, f.node())); }
ScalarField sqrt(const ScalarField& f) { return ScalarField::from_node(detail::make_unary(detail::Op::Sqrt, f.node())); }
ScalarField pow(const ScalarField& f, double c) { return ScalarField::from_node(detail::make_powc(f.node(), c)); }
ScalarField sin(const ScalarField& f) { return ScalarField::from_node(detail::make_unary(detail::Op::Sin, f.node())); }
ScalarField cos(const ScalarField& f) { return ScalarField::from_node(detail::make_unary(detail::Op::Cos, f.node())); }

CompiledFields::CompiledFields(const std::vector<ScalarField>& fields) : count_(fields.size()) {
  std::vector<NodePtr> roots;
  roots.reserve(fields.size());
  for (const auto& f : fields) roots.push_back(f.node());
  program_ = std::make_shared<const detail::Program>(roots);
}

std::size_t CompiledFields::instructions() const { return program_->size(); }

void CompiledFields::evaluate(std::span<const double> x, std::span<double> out) const {
  std::vector<double> slots(program_->size());
  program_->run(x, slots.data());
  for (std::size_t r = 0; r < count_; ++r) out[r] = slots[program_->root_slot(r)];
}

std::vector<double> CompiledFields::evaluate(std::span<const double> x) const {
  std::vector<double> out(count_);
  evaluate(x, out);
  return out;
}

std::vector<std::vector<double>> evaluate_on_points(const std::vector<ScalarField>& fields,
                                                    const std::vector<std::vector<double>>& points) {
  CompiledFields prog(fields);
  std::vector<std::vector<double>> values(points.size());
  parallel_for(points.size(), [&](std::size_t p) { values[p] = prog.evaluate(points[p]); });
  return values;
}

}  // namespace frango
