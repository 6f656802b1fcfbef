#include "frango/calculus.hpp"

#include <cmath>
#include <mutex>
#include <unordered_map>

#include "frango/error.hpp"
#include "node.hpp"

namespace frango {

using detail::InverseFamily;
using detail::make_add;
using detail::make_const;
using detail::make_div;
using detail::make_mul;
using detail::make_neg;
using detail::make_sub;
using detail::Node;
using detail::Op;

namespace {

enum class Kind : int { Classical, Caputo, Integral };

struct Key {
  const Node* node;
  int axis;
  Kind kind;
  double order;
  bool operator==(const Key& o) const {
    return node == o.node && axis == o.axis && kind == o.kind && order == o.order;
  }
};

struct KeyHash {
  std::size_t operator()(const Key& k) const {
    std::size_t h = std::hash<const void*>()(k.node);
    h ^= std::hash<int>()(k.axis) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    h ^= std::hash<int>()(static_cast<int>(k.kind)) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    h ^= std::hash<double>()(k.order) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    return h;
  }
};

bool depends(const NodePtr& f, int axis) { return (f->deps & axis_bit(static_cast<std::size_t>(axis))) != 0; }

bool exact_result(const NodePtr& f) { return f->op == Op::Const || f->op == Op::Poly || f->op == Op::Power; }

}  // namespace

struct Calculus::Impl {
  std::vector<double> base;
  QuadratureOptions opts;
  std::mutex mutex;
  std::unordered_map<Key, std::pair<NodePtr, NodePtr>, KeyHash> memo;

  bool lookup(const Key& k, NodePtr& out) {
    std::lock_guard<std::mutex> lock(mutex);
    auto it = memo.find(k);
    if (it == memo.end()) return false;
    out = it->second.second;
    return true;
  }
  NodePtr store(const Key& k, const NodePtr& src, NodePtr res) {
    std::lock_guard<std::mutex> lock(mutex);
    memo.emplace(k, std::make_pair(src, res));
    return res;
  }

  double base_of(int axis) const { return base.at(static_cast<std::size_t>(axis)); }

  // True when f contains a negative power of (u_axis - b), i.e. may blow up at the base.
  std::unordered_map<Key, bool, KeyHash> singular_memo;
  bool singular_at_base(const NodePtr& f, int axis, double b) {
    if (!depends(f, axis)) return false;
    Key key{f.get(), axis, Kind::Integral, b};
    {
      std::lock_guard<std::mutex> lock(mutex);
      auto it = singular_memo.find(key);
      if (it != singular_memo.end()) return it->second;
    }
    bool s = false;
    if (f->op == Op::Power) {
      s = f->axis == axis && f->base == b && f->value < 0.0;
    } else {
      for (const auto& k : f->kids) s = s || singular_at_base(k, axis, b);
      if (f->family)
        for (const auto& e : f->family->entries) s = s || singular_at_base(e, axis, b);
    }
    std::lock_guard<std::mutex> lock(mutex);
    singular_memo.emplace(key, s);
    return s;
  }

  // ---- classical partial derivative --------------------------------------
  NodePtr d(const NodePtr& f, int axis) {
    if (!depends(f, axis)) return make_const(0.0);
    Key key{f.get(), axis, Kind::Classical, 1.0};
    NodePtr cached;
    if (lookup(key, cached)) return cached;
    return store(key, f, d_raw(f, axis));
  }

  NodePtr d_raw(const NodePtr& f, int axis) {
    const auto ax = static_cast<std::size_t>(axis);
    const auto& k = f->kids;
    switch (f->op) {
      case Op::Const:
        return make_const(0.0);
      case Op::Poly: {
        FracPoly regular(f->dim);
        NodePtr singular = make_const(0.0);
        for (const auto& [e, c] : f->poly->terms()) {
          double p = e[ax];
          if (p == 0.0) continue;
          auto e2 = e;
          if (p >= 1.0) {
            e2[ax] = p - 1.0;
            regular.add_term(c * p, std::move(e2));
          } else {
            e2[ax] = 0.0;
            NodePtr rest = detail::make_poly(FracPoly::monomial(f->dim, c * p, e2), f->poly_base);
            singular = make_add(singular, make_mul(rest, detail::make_power(f->dim, axis, f->poly_base[ax], p - 1.0)));
          }
        }
        return make_add(detail::make_poly(std::move(regular), f->poly_base), singular);
      }
      case Op::Power:
        return make_mul(make_const(f->value), detail::make_power(f->dim, axis, f->base, f->value - 1.0));
      case Op::Grid: {
        auto orders = f->grid_order;
        orders[ax] += 1;
        if (f->grid->axes[ax].size() < 2) return make_const(0.0);
        return detail::make_grid(f->grid, std::move(orders));
      }
      case Op::Callback:
      case Op::NumDeriv:
        return detail::make_numderiv(f, axis, opts.fd_step, base_of(axis));
      case Op::Neg:
        return make_neg(d(k[0], axis));
      case Op::Add:
        return make_add(d(k[0], axis), d(k[1], axis));
      case Op::Sub:
        return make_sub(d(k[0], axis), d(k[1], axis));
      case Op::Mul:
        return make_add(make_mul(d(k[0], axis), k[1]), make_mul(k[0], d(k[1], axis)));
      case Op::Div: {
        NodePtr da = d(k[0], axis), db = d(k[1], axis);
        NodePtr first = make_div(da, k[1]);
        double dbc;
        if (detail::is_const(db, &dbc) && dbc == 0.0) return first;
        return make_sub(first, make_div(make_mul(f, db), k[1]));
      }
      case Op::Exp:
        return make_mul(f, d(k[0], axis));
      case Op::Log:
        return make_div(d(k[0], axis), k[0]);
      case Op::Abs:
        return make_mul(detail::make_unary(Op::Sign, k[0]), d(k[0], axis));
      case Op::Sqrt:
        return make_div(d(k[0], axis), make_mul(make_const(2.0), f));
      case Op::PowC:
        return make_mul(make_mul(make_const(f->value), detail::make_powc(k[0], f->value - 1.0)),
                        d(k[0], axis));
      case Op::Sign:
        return make_const(0.0);
      case Op::Sin:
        return make_mul(detail::make_unary(Op::Cos, k[0]), d(k[0], axis));
      case Op::Cos:
        return make_neg(make_mul(detail::make_unary(Op::Sin, k[0]), d(k[0], axis)));
      case Op::Restrict:
        return detail::make_restrict(d(k[0], axis), f->axis, f->value);
      case Op::RLInt: {
        if (f->axis != axis) return detail::make_rlint(d(k[0], axis), f->axis, f->base, f->value, opts);
        if (f->value == 1.0) return k[0];
        // g singular at the base: g(base) is undefined and I^b g' diverges
        if (singular_at_base(k[0], axis, f->base)) return detail::make_numderiv(f, axis, opts.fd_step, f->base);
        // d/du I^b g = I^b g' + g(base) (u - base)^{b-1} / Gamma(b)
        NodePtr inner = detail::make_rlint(d(k[0], axis), axis, f->base, f->value, opts);
        NodePtr g0 = detail::make_restrict(k[0], axis, f->base);
        NodePtr tail = make_mul(make_mul(make_const(1.0 / std::tgamma(f->value)), g0),
                                detail::make_power(f->dim, axis, f->base, f->value - 1.0));
        return make_add(inner, tail);
      }
      case Op::InvEntry: {
        const auto& fam = f->family;
        const int n = fam->n;
        NodePtr sum = make_const(0.0);
        for (int p = 0; p < n; ++p) {
          for (int q = 0; q < n; ++q) {
            NodePtr da = d(fam->entries[static_cast<std::size_t>(p * n + q)], axis);
            double dc;
            if (detail::is_const(da, &dc) && dc == 0.0) continue;
            NodePtr term = make_mul(make_mul(detail::make_inverse_entry(fam, f->inv_i, p), da),
                                    detail::make_inverse_entry(fam, q, f->inv_j));
            sum = make_sub(sum, term);
          }
        }
        return sum;
      }
      case Op::Deriv:
        return d(k[1], axis);
    }
    throw Error("unhandled node in differentiation");
  }

  // Derivative wrapped so that later integrals along the same axis undo it exactly.
  NodePtr marked_d(const NodePtr& f, int axis) {
    NodePtr df = d(f, axis);
    if (exact_result(df)) return df;
    Key key{f.get(), axis, Kind::Classical, 2.0};
    NodePtr cached;
    if (lookup(key, cached)) return cached;
    return store(key, f, detail::make_deriv_marker(f, df, axis));
  }

  // ---- left Caputo derivative of order alpha < 1 ---------------------------
  NodePtr caputo(const NodePtr& f, int axis, double alpha) {
    if (alpha == 1.0) return d(f, axis);
    if (!depends(f, axis)) return make_const(0.0);
    Key key{f.get(), axis, Kind::Caputo, alpha};
    NodePtr cached;
    if (lookup(key, cached)) return cached;
    return store(key, f, caputo_raw(f, axis, alpha));
  }

  NodePtr caputo_generic(const NodePtr& f, int axis, double alpha) {
    NodePtr df = d(f, axis);
    NodePtr marked = exact_result(df) ? df : detail::make_deriv_marker(f, df, axis);
    return detail::make_rlint(marked, axis, base_of(axis), 1.0 - alpha, opts);
  }

  NodePtr caputo_raw(const NodePtr& f, int axis, double alpha) {
    const auto ax = static_cast<std::size_t>(axis);
    const double b = base_of(axis);
    const auto& k = f->kids;
    switch (f->op) {
      case Op::Poly:
        if (f->poly_base[ax] == b) return detail::make_poly(f->poly->caputo_left(ax, alpha), f->poly_base);
        break;
      case Op::Power:
        if (f->base == b && f->value > 0.0) {
          double p = f->value;
          double c = std::tgamma(p + 1.0) / std::tgamma(p + 1.0 - alpha);
          return make_mul(make_const(c), detail::make_power(f->dim, axis, b, p - alpha));
        }
        break;
      case Op::Neg:
        return make_neg(caputo(k[0], axis, alpha));
      case Op::Add:
        return make_add(caputo(k[0], axis, alpha), caputo(k[1], axis, alpha));
      case Op::Sub:
        return make_sub(caputo(k[0], axis, alpha), caputo(k[1], axis, alpha));
      case Op::Mul:
        if (!depends(k[0], axis)) return make_mul(k[0], caputo(k[1], axis, alpha));
        if (!depends(k[1], axis)) return make_mul(caputo(k[0], axis, alpha), k[1]);
        break;
      case Op::Div:
        if (!depends(k[1], axis)) return make_div(caputo(k[0], axis, alpha), k[1]);
        break;
      case Op::Restrict:
        return detail::make_restrict(caputo(k[0], axis, alpha), f->axis, f->value);
      case Op::RLInt:
        if (f->axis != axis) {
          return detail::make_rlint(caputo(k[0], axis, alpha), f->axis, f->base, f->value, opts);
        }
        if (f->base == b && f->value >= alpha) {
          if (f->value == alpha) return k[0];
          return detail::make_rlint(k[0], axis, b, f->value - alpha, opts);
        }
        break;
      case Op::Deriv:
        return caputo(k[1], axis, alpha);
      default:
        break;
    }
    return caputo_generic(f, axis, alpha);
  }

  // ---- Riemann-Liouville integral ------------------------------------------
  NodePtr integ(const NodePtr& f, int axis, double beta) {
    Key key{f.get(), axis, Kind::Integral, beta};
    NodePtr cached;
    if (lookup(key, cached)) return cached;
    return store(key, f, integ_raw(f, axis, beta));
  }

  NodePtr integ_raw(const NodePtr& f, int axis, double beta) {
    const double b = base_of(axis);
    const auto& k = f->kids;
    if (depends(f, axis)) {
      switch (f->op) {
        case Op::Neg:
          return make_neg(integ(k[0], axis, beta));
        case Op::Add:
          return make_add(integ(k[0], axis, beta), integ(k[1], axis, beta));
        case Op::Sub:
          return make_sub(integ(k[0], axis, beta), integ(k[1], axis, beta));
        case Op::Mul:
          if (!depends(k[0], axis)) return make_mul(k[0], integ(k[1], axis, beta));
          if (!depends(k[1], axis)) return make_mul(integ(k[0], axis, beta), k[1]);
          break;
        case Op::Div:
          if (!depends(k[1], axis)) return make_div(integ(k[0], axis, beta), k[1]);
          break;
        case Op::Restrict:
          return detail::make_restrict(integ(k[0], axis, beta), f->axis, f->value);
        case Op::Deriv:
          if (f->axis != axis || beta < 1.0) return integ(k[1], axis, beta);
          break;
        default:
          break;
      }
    }
    return detail::make_rlint(f, axis, b, beta, opts);
  }
};

Calculus::Calculus(std::vector<double> base, QuadratureOptions opts) : impl_(std::make_shared<Impl>()) {
  if (base.empty() || base.size() > kMaxAxes) throw DomainError("calculus base point has bad dimension");
  impl_->base = std::move(base);
  impl_->opts = opts;
}

const std::vector<double>& Calculus::base() const { return impl_->base; }
const QuadratureOptions& Calculus::options() const { return impl_->opts; }

namespace {

void check_axis(std::size_t axis, std::size_t dim) {
  if (axis >= dim) {
    throw DomainError("axis " + std::to_string(axis) + " out of range for dimension " + std::to_string(dim));
  }
}

}  // namespace

ScalarField Calculus::caputo(const ScalarField& f, std::size_t axis, FracOrder order) const {
  check_axis(axis, dim());
  const int ax = static_cast<int>(axis);
  if (order.classical()) return ScalarField::from_node(impl_->marked_d(f.node(), ax));
  return ScalarField::from_node(impl_->caputo(f.node(), ax, order.value()));
}

ScalarField Calculus::classical(const ScalarField& f, std::size_t axis) const {
  check_axis(axis, dim());
  const int ax = static_cast<int>(axis);
  return ScalarField::from_node(impl_->marked_d(f.node(), ax));
}

ScalarField Calculus::integral(const ScalarField& f, std::size_t axis, double beta) const {
  check_axis(axis, dim());
  if (!(beta > 0.0)) throw DomainError("integral order must be positive");
  return ScalarField::from_node(impl_->integ(f.node(), static_cast<int>(axis), beta));
}

ScalarField Calculus::at_base(const ScalarField& f, std::size_t axis) const {
  check_axis(axis, dim());
  return ScalarField::from_node(detail::make_restrict(f.node(), static_cast<int>(axis), impl_->base[axis]));
}

}  // namespace frango
