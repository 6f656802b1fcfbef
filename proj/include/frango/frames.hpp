#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "frango/calculus.hpp"
#include "frango/chart.hpp"
#include "frango/field_matrix.hpp"
#include "frango/order.hpp"

namespace frango {

// Coefficients N^a_i stored as an m x n matrix: row a (vertical), column i (horizontal).
class NConnection {
 public:
  NConnection(Chart chart, FieldMatrix coefficients);
  static NConnection zero(const Chart& chart);

  const Chart& chart() const { return chart_; }
  const FieldMatrix& coefficients() const { return N_; }
  // a is a vertical index in [0, m), i horizontal in [0, n).
  const ScalarField& operator()(std::size_t a, std::size_t i) const { return N_(a, i); }
  bool is_zero() const;

 private:
  Chart chart_;
  FieldMatrix N_;
};

struct MetricSignature {
  std::vector<int> g;  // eigenvalue signs of the horizontal block at the chart center
  std::vector<int> h;
};

// Block metric g (n x n), h (m x m) with elongation N. Off-diagonal pairs that are
// given separately must agree numerically; the stored blocks are exactly symmetric.
class DMetric {
 public:
  DMetric(FieldMatrix g, FieldMatrix h, NConnection N);

  const Chart& chart() const { return N_.chart(); }
  std::size_t n() const { return chart().n(); }
  std::size_t m() const { return chart().m(); }
  const FieldMatrix& g() const { return g_; }
  const FieldMatrix& h() const { return h_; }
  const NConnection& N() const { return N_; }
  const MetricSignature& signature() const { return signature_; }
  // Full d-metric component in the adapted basis, block-diagonal (alpha, beta < n+m).
  ScalarField block(std::size_t alpha, std::size_t beta) const;

 private:
  FieldMatrix g_;
  FieldMatrix h_;
  NConnection N_;
  MetricSignature signature_;
};

// Default sampling lattice: 9 nodes per axis, base nodes dropped when alpha < 1.
LatticeSpec default_lattice(const Chart& chart, FracOrder order, int count = 9);

// Throws InversionError at the first sample point where |det g| or |det h| < eps.
void check_nondegenerate(const DMetric& metric, const LatticeSpec& lattice, double eps = 1e-8);

// Derivations along the adapted frame: e_i = d_i - N^a_i d_a, e_a = d_a, with d the
// Caputo derivative of the given order taken from the chart base.
class Derivations {
 public:
  Derivations(NConnection N, FracOrder order, QuadratureOptions opts = {});

  const Chart& chart() const { return N_.chart(); }
  const NConnection& N() const { return N_; }
  FracOrder order() const { return order_; }
  const Calculus& calculus() const { return calc_; }

  ScalarField partial(std::size_t axis, const ScalarField& f) const;
  ScalarField e(std::size_t alpha, const ScalarField& f) const;

 private:
  NConnection N_;
  FracOrder order_;
  Calculus calc_;
};

struct FrameCoefficients {
  // frame(alpha, mu): component of e_alpha along d_mu.
  FieldMatrix frame;
  // coframe(mu, alpha): component of e^alpha along du^mu, so frame * coframe = 1.
  FieldMatrix coframe;
};

FrameCoefficients build_frames(const DMetric& metric);
FrameCoefficients build_frames(const NConnection& N);

// [e_alpha, e_beta] = W^gamma_{alpha beta} e_gamma. Omega^a_{kl} = e_k N^a_l - e_l N^a_k,
// so W^a_{ij} = Omega^a_{ji} and W^a_{ib} = d_b N^a_i.
class AnholonomyData {
 public:
  AnholonomyData(std::size_t n, std::size_t m);

  std::size_t n() const { return n_; }
  std::size_t m() const { return m_; }
  std::size_t dim() const { return n_ + m_; }
  const ScalarField& W(std::size_t gamma, std::size_t alpha, std::size_t beta) const;
  // a vertical in [0, m); k, l horizontal.
  const ScalarField& Omega(std::size_t a, std::size_t k, std::size_t l) const;
  std::vector<ScalarField> all_fields() const { return W_; }

 private:
  friend AnholonomyData anholonomy(const Derivations& d);
  ScalarField& W_at(std::size_t gamma, std::size_t alpha, std::size_t beta);

  std::size_t n_;
  std::size_t m_;
  std::vector<ScalarField> W_;
  std::vector<ScalarField> Omega_;
};

AnholonomyData anholonomy(const Derivations& d);
AnholonomyData anholonomy(const NConnection& N, FracOrder order, QuadratureOptions opts = {});

// Full (n+m)^2 metric in coordinate co-basis: [[g + N^T h N, N^T h], [h N, h]].
FieldMatrix assemble(const DMetric& metric);

// Inverse of assemble. Throws DecompositionError when h is singular at a sample point.
DMetric split_offdiagonal(const Chart& chart, const FieldMatrix& full, const LatticeSpec& lattice);
DMetric split_offdiagonal(const Chart& chart, const FieldMatrix& full);

// Co-basis transform du' = A du, so the metric transforms as G' = A^{-T} G A^{-1}.
class FrameTransform {
 public:
  // Checks invertibility on the lattice (SingularTransformError) and records whether
  // the vertical-into-horizontal block A_hv vanishes there (tolerance 1e-10).
  FrameTransform(const Chart& chart, FieldMatrix A, const LatticeSpec& lattice);
  FrameTransform(const Chart& chart, FieldMatrix A);

  const FieldMatrix& matrix() const { return A_; }
  const FieldMatrix& inverse() const { return inv_; }
  bool n_adapted() const { return n_adapted_; }
  FrameTransform inverted() const;

 private:
  FrameTransform(FieldMatrix A, FieldMatrix inv, bool adapted);
  FieldMatrix A_;
  FieldMatrix inv_;
  bool n_adapted_ = false;
};

struct TransformResult {
  DMetric metric;
  bool n_adapted;
};

// Decomposition of the transformed metric is checked on the lattice (default: 5 nodes
// per axis including the base).
TransformResult transform_frames(const DMetric& metric, const FrameTransform& T);
TransformResult transform_frames(const DMetric& metric, const FrameTransform& T,
                                 const LatticeSpec& lattice);

// Text format. Header lines `dmetric <n> <m>`, `alpha <a>`, `domain <lo hi>...`,
// `base <u>...`, then `component <g|h|N> <i> <j> <poly|grid>` blocks closed by `end`.
// Indices are 1-based over all n+m coordinates (h and the row of N use n+1..n+m).
struct MetricFile {
  DMetric metric;
  FracOrder order;
};

MetricFile parse_dmetric(const std::string& text);
MetricFile read_dmetric(const std::string& path);
std::string dmetric_to_text(const DMetric& metric, FracOrder order);

}  // namespace frango
