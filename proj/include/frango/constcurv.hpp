#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "frango/dconnection.hpp"

namespace frango {

// Constant blocks of a d-metric together with constant vertical connection
// coefficients L0^a_{bk}, stored as L0[k](a, b).
struct ConstantCurvatureSpec {
  Chart chart;
  Eigen::MatrixXd g0;  // n x n; empty means identity
  Eigen::MatrixXd h0;  // m x m, symmetric and invertible
  std::vector<Eigen::MatrixXd> L0;
};

// Throws DomainError on wrong shapes, asymmetric or singular h0, non-finite entries.
void validate(const ConstantCurvatureSpec& spec);

// N^a_k = M^a_{bk} phi(y^b) with phi(y) = (y - y_base)^alpha / Gamma(1 + alpha), so the
// Caputo y-derivatives of N are the constants M. Each k solves
// M_k - h0^{-1} M_k^T h0 = 2 L0_k in the least-squares sense, minimum norm.
struct Auxf1Solution {
  std::vector<Eigen::MatrixXd> M;  // M[k](a, b)
  NConnection N;
  double residual = 0.0;  // max |M_k - h0^{-1} M_k^T h0 - 2 L0_k|
};

// NoSolutionError (carrying the best least-squares residual) when some L0_k is outside
// the range of the map.
Auxf1Solution solve_auxf1_system(const ConstantCurvatureSpec& spec, FracOrder order, double tol = 1e-10);
NConnection solve_auxf1(const ConstantCurvatureSpec& spec, FracOrder order, double tol = 1e-10);

// 2 L0^a_{bk} - (d_b N^a_k - h^{ac} h_{db} d_c N^d_k), family "auxf1", index (a, b, k).
std::vector<NamedComponent> auxf1_residual_fields(const ConstantCurvatureSpec& spec, const NConnection& N,
                                                  FracOrder order, QuadratureOptions q = {});

DMetric constant_metric(const ConstantCurvatureSpec& spec, const NConnection& N);
// L^i_jk = 0, L^a_bk = L0^a_bk, C = 0 over the frames of N.
DConnection constant_connection(const ConstantCurvatureSpec& spec, const NConnection& N, FracOrder order,
                                QuadratureOptions q = {});

struct ComponentSpread {
  std::string family;  // "R", "Ric", "sR", "G"
  std::vector<std::size_t> index;
  double mean = 0.0;
  double min = 0.0;
  double max = 0.0;
  double stddev = 0.0;
  double spread() const { return max - min; }
};

struct ConstantCurvatureReport {
  std::vector<ComponentSpread> components;  // every curvature, Ricci, scalar, Einstein component
  double max_spread = 0.0;
  double max_stddev = 0.0;
  // max |R| over components outside R^a_{bjk}; zero by construction
  double other_families_max = 0.0;
  // max |R^a_{bjk} - (L0^c_bj L0^a_ck - L0^c_bk L0^a_cj)|
  double product_formula_error = 0.0;
  double scalar_mean = 0.0;
  double scalar_spread = 0.0;
  double auxf1_residual = 0.0;
  std::size_t points = 0;
  const ComponentSpread* find(const std::string& family, const std::vector<std::size_t>& index) const;
};

// Defaults to 9 nodes per axis (base nodes dropped for alpha < 1).
ConstantCurvatureReport constant_curvature_report(const ConstantCurvatureSpec& spec, const NConnection& N,
                                                  FracOrder order, std::optional<LatticeSpec> lattice = {});

// ---- curve flows ----

// Curve sampled at l_j = l0 + j step; nodes[j] is a chart point.
struct CurveSample {
  double l0 = 0.0;
  double step = 0.0;
  std::vector<std::vector<double>> nodes;
  std::optional<double> tau;
};

CurveSample sample_chart_curve(double l0, double l1, int intervals,
                               const std::vector<std::function<double(double)>>& coordinates);

struct FlowFrameData {
  std::size_t n = 0, m = 0;
  std::vector<double> l;
  std::vector<double> speed;                  // sqrt|g(gamma_l, gamma_l)| before normalization
  std::vector<Eigen::VectorXd> tangent;       // X in the adapted basis, g(X, X) = +-1
  std::vector<Eigen::MatrixXd> frame;         // frame[j](row mu', col tau): e_mu' along e_tau
  std::vector<Eigen::VectorXd> eta;           // g(e_mu', e_mu')
  std::vector<Eigen::VectorXd> rho_h;         // g(e^i', D_X e_1), entry 0 ~ 0
  std::vector<Eigen::VectorXd> rho_v;         // g(e^a', D_X e_{n+1})
  std::vector<Eigen::MatrixXd> gamma_hX;      // n x n, 2 e_hX^[i' rho^j']
  std::vector<Eigen::MatrixXd> gamma_vX;      // m x m
  std::vector<Eigen::MatrixXd> gamma_X;       // (beta', alpha') = g(e^alpha', D_X e_beta'), measured
  std::vector<Eigen::MatrixXd> metric;       // block-diagonal d-metric at the node
  std::vector<Eigen::MatrixXd> elongation;   // N^a_i at the node (m x n)
  std::vector<std::vector<double>> connection;  // Gamma^tau_{beta gamma}, (tau D + beta) D + gamma
  bool h_moving = true;  // false when the curve has no horizontal velocity
  bool v_moving = true;

  // max |g(e_mu, e_nu) - eta_mu delta_mu nu| over nodes
  double orthonormality_error() const;
  // max |g(hX, e^i')| (i' > 1) and |g(vX, e^a')| (a' > n+1)
  double parallel_error() const;
  double skew_error() const;  // max |Gamma + Gamma^T| over the block-form matrices
};

// Adapted frame along the curve: e_1 = hX, e_{n+1} = vX, complements by Gram-Schmidt
// under the d-metric, seeded from the coordinate axes at the first node and from the
// previous node's frame afterwards. l-derivatives use
// sampled_derivative with base at the curve start; for alpha < 1 the frame at the
// start node (where the Caputo tangent vanishes) takes the next node's directions,
// orthonormalized under the start node's metric.
FlowFrameData curve_flow_frame(const DMetric& metric, const DConnection& conn, const CurveSample& curve);
FlowFrameData curve_flow_frame(const DMetric& metric, const CurveSample& curve, FracOrder order);

// Family of curves gamma(tau_t, l) sharing the l grid, tau_t = tau0 + t tau_step.
struct FlowSurface {
  double tau0 = 0.0;
  double tau_step = 0.0;
  std::vector<CurveSample> curves;
};

struct FlowMatrices {
  std::vector<double> tau;
  std::vector<FlowFrameData> frames;                   // per tau
  std::vector<std::vector<Eigen::VectorXd>> e_X;       // [t][j], g(X, e^alpha')
  std::vector<std::vector<Eigen::VectorXd>> e_Y;
  std::vector<std::vector<Eigen::VectorXd>> e_hX;      // unit hX against e^i', [1, 0, ..., 0]
  std::vector<std::vector<Eigen::VectorXd>> e_vX;
  std::vector<std::vector<Eigen::MatrixXd>> gamma_Y;   // (beta', alpha') = g(e^alpha', D_Y e_beta')
  std::vector<std::vector<Eigen::VectorXd>> torsion;   // T^alpha'
  std::vector<std::vector<Eigen::MatrixXd>> curvature; // R(beta', alpha')
  // max |R - (-R^tau_{beta gamma delta} X^gamma Y^delta in the frame)| over all nodes,
  // when a curvature tensor was supplied
  std::optional<double> commutator_error;
};

// X(f) = speed^-1 d_l f, Y(f) = d_tau f, both through sampled_derivative;
// R = X(Gamma_Y) - Y(Gamma_X) + Gamma_Y Gamma_X - Gamma_X Gamma_Y,
// T = X(e_Y) - Y(e_X) + e_Y Gamma_X - e_X Gamma_Y.
// ResolutionError when tau has too few samples for the derivative order.
// The curvature comparison assumes [X, Y] = 0, i.e. a speed that does not change with tau.
FlowMatrices flow_connection_matrices(const DMetric& metric, const DConnection& conn, const FlowSurface& surface,
                                      const CurvatureData* reference = nullptr);

}  // namespace frango
