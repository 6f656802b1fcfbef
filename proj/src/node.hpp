#pragma once

#include <cstdint>
#include <memory>
#include <mutex>
#include <span>
#include <vector>

#include "frango/field.hpp"
#include "frango/quadrature.hpp"

namespace frango::detail {

enum class Op : std::uint8_t {
  Const,
  Poly,      // FracPoly in shifted coordinates
  Power,     // (u_axis - base)^value, value may be negative (integrable singularity)
  Grid,      // interpolated samples, grid_order = derivative orders per axis
  Callback,
  Neg,
  Add,
  Sub,
  Mul,
  Div,
  Exp,
  Log,
  Abs,
  Sqrt,
  PowC,      // kid^value
  Sign,
  Sin,
  Cos,
  Restrict,  // kid with u_axis := value
  RLInt,     // Riemann-Liouville integral of order value along axis from base
  NumDeriv,  // central-difference derivative of kid along axis
  InvEntry,  // entry (inv_i, inv_j) of the inverse of the matrix in family
  Deriv,     // classical derivative of kids[0] along axis, expanded form in kids[1]
};

class Program;
struct InverseFamily;

struct Node {
  Op op = Op::Const;
  std::size_t dim = 0;
  AxisMask deps = 0;
  double value = 0.0;
  double base = 0.0;
  int axis = -1;
  std::vector<NodePtr> kids;

  std::shared_ptr<const FracPoly> poly;
  std::vector<double> poly_base;

  std::shared_ptr<const GridData> grid;
  std::vector<int> grid_order;

  std::shared_ptr<const Callback> fn;

  // Child program for nodes that evaluate their child at other points.
  std::shared_ptr<const Program> sub;
  std::shared_ptr<const LineRule> rule;
  double step = 0.0;

  std::shared_ptr<InverseFamily> family;
  int inv_i = 0;
  int inv_j = 0;
};

// Matrix whose inverse entries are shared nodes. Holds the entries strongly and the
// inverse nodes weakly so that no ownership cycle forms.
struct InverseFamily {
  int n = 0;
  std::vector<NodePtr> entries;  // row-major n*n
  std::mutex mutex;
  std::vector<std::weak_ptr<const Node>> inverse;
};

NodePtr make_const(double c);
NodePtr make_poly(FracPoly p, std::vector<double> base);
NodePtr make_power(std::size_t dim, int axis, double base, double p);
NodePtr make_grid(std::shared_ptr<const GridData> g, std::vector<int> orders);
NodePtr make_callback(std::size_t dim, std::shared_ptr<const Callback> fn, AxisMask deps);
NodePtr make_neg(const NodePtr& a);
NodePtr make_add(const NodePtr& a, const NodePtr& b);
NodePtr make_sub(const NodePtr& a, const NodePtr& b);
NodePtr make_mul(const NodePtr& a, const NodePtr& b);
NodePtr make_div(const NodePtr& a, const NodePtr& b);
NodePtr make_unary(Op op, const NodePtr& a);
NodePtr make_powc(const NodePtr& a, double c);
NodePtr make_restrict(const NodePtr& a, int axis, double value);
NodePtr make_rlint(const NodePtr& a, int axis, double base, double beta,
                   const QuadratureOptions& opts);
// lower: coordinate below which the stencil must not sample (one-sided near it).
NodePtr make_numderiv(const NodePtr& a, int axis, double step, double lower);
NodePtr make_deriv_marker(const NodePtr& f, const NodePtr& df, int axis);
// Inverse entry (i, j) of the n x n matrix of entries; folds constant matrices.
NodePtr make_inverse_entry(const std::shared_ptr<InverseFamily>& fam, int i, int j);
std::shared_ptr<InverseFamily> make_inverse_family(int n, std::vector<NodePtr> entries);

bool is_const(const NodePtr& a, double* value = nullptr);

// Compiled evaluation tape over a DAG.
class Program {
 public:
  explicit Program(const std::vector<NodePtr>& roots);

  std::size_t size() const { return instr_.size(); }
  std::size_t root_slot(std::size_t r) const { return roots_[r]; }
  std::size_t root_count() const { return roots_.size(); }

  // Evaluates all instructions into slots (size() doubles).
  void run(std::span<const double> x, double* slots) const;
  // Re-evaluates only instructions that depend on axis (after run at a point that
  // differs from x only in that coordinate).
  void rerun(std::span<const double> x, std::size_t axis, double* slots) const;
  double value(std::span<const double> x) const;

 private:
  struct Instr {
    const Node* node;
    std::uint32_t first_kid;
    std::uint32_t kid_count;
  };
  double exec(const Instr& in, std::span<const double> x, const double* slots) const;

  std::vector<Instr> instr_;
  std::vector<std::uint32_t> kid_slots_;
  std::vector<std::uint32_t> roots_;
  std::vector<std::vector<std::uint32_t>> by_axis_;
  std::vector<NodePtr> keep_;
};

double grid_evaluate(const GridData& g, const std::vector<int>& orders, std::span<const double> x);

}  // namespace frango::detail
