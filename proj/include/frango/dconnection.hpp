#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "frango/frames.hpp"

namespace frango {

// One named component of a tensor family; index is 0-based over all n+m coordinates.
struct NamedComponent {
  std::string family;
  std::vector<std::size_t> index;
  ScalarField field;
};

// Rank-3 array over D = n+m adapted indices, T(tau, beta, gamma).
class Tensor3 {
 public:
  Tensor3() = default;
  explicit Tensor3(std::size_t d) : d_(d), v_(d * d * d) {}
  std::size_t dim() const { return d_; }
  ScalarField& operator()(std::size_t a, std::size_t b, std::size_t c) { return v_[(a * d_ + b) * d_ + c]; }
  const ScalarField& operator()(std::size_t a, std::size_t b, std::size_t c) const {
    return v_[(a * d_ + b) * d_ + c];
  }
  const std::vector<ScalarField>& data() const { return v_; }

 private:
  std::size_t d_ = 0;
  std::vector<ScalarField> v_;
};

// d-connection in the adapted basis, D_{e_gamma} e_beta = Gamma^tau_{beta gamma} e_tau.
// Local indices: i, j, k in [0, n), a, b, c in [0, m).
class DConnection {
 public:
  explicit DConnection(Derivations d);

  const Derivations& derivations() const { return d_; }
  const Chart& chart() const { return d_.chart(); }
  std::size_t n() const { return chart().n(); }
  std::size_t m() const { return chart().m(); }

  ScalarField& L(std::size_t i, std::size_t j, std::size_t k) { return Lh_[(i * n() + j) * n() + k]; }
  ScalarField& Lv(std::size_t a, std::size_t b, std::size_t k) { return Lv_[(a * m() + b) * n() + k]; }
  ScalarField& C(std::size_t i, std::size_t j, std::size_t c) { return Ch_[(i * n() + j) * m() + c]; }
  ScalarField& Cv(std::size_t a, std::size_t b, std::size_t c) { return Cv_[(a * m() + b) * m() + c]; }
  const ScalarField& L(std::size_t i, std::size_t j, std::size_t k) const { return Lh_[(i * n() + j) * n() + k]; }
  const ScalarField& Lv(std::size_t a, std::size_t b, std::size_t k) const { return Lv_[(a * m() + b) * n() + k]; }
  const ScalarField& C(std::size_t i, std::size_t j, std::size_t c) const { return Ch_[(i * n() + j) * m() + c]; }
  const ScalarField& Cv(std::size_t a, std::size_t b, std::size_t c) const { return Cv_[(a * m() + b) * m() + c]; }

  // Gamma^tau_{beta gamma} over all n+m indices; zero across blocks.
  ScalarField gamma(std::size_t tau, std::size_t beta, std::size_t gamma) const;
  Tensor3 gamma_tensor() const;
  std::vector<NamedComponent> components() const;

 private:
  Derivations d_;
  std::vector<ScalarField> Lh_, Lv_, Ch_, Cv_;
};

struct ConnectionOptions {
  QuadratureOptions quadrature;
  int lattice_count = 9;  // nondegeneracy check lattice, per axis
  double eps = 1e-8;
  // Sub-box the nondegeneracy check runs on (defaults to the whole chart).
  std::optional<Box> check_region;
};

DConnection canonical_dconnection(const DMetric& metric, FracOrder order, const ConnectionOptions& opts = {});

// T^tau_{beta gamma} = Gamma^tau_{gamma beta} - Gamma^tau_{beta gamma} - W^tau_{beta gamma}.
class TorsionData {
 public:
  explicit TorsionData(Tensor3 T, std::size_t n) : T_(std::move(T)), n_(n) {}
  const Tensor3& tensor() const { return T_; }
  const ScalarField& T(std::size_t tau, std::size_t beta, std::size_t gamma) const { return T_(tau, beta, gamma); }
  // Families T^i_jk, T^a_bc, T^i_ja, T^a_ji, T^a_bi (independent lower pairs only).
  std::vector<NamedComponent> components() const;

 private:
  Tensor3 T_;
  std::size_t n_;
};

TorsionData torsion(const DConnection& conn);

// R^tau_{beta gamma delta} with the sign of the curvature 2-form,
// R = e_delta Gamma^tau_{beta gamma} - e_gamma Gamma^tau_{beta delta}
//   + Gamma^phi_{beta gamma} Gamma^tau_{phi delta} - Gamma^phi_{beta delta} Gamma^tau_{phi gamma}
//   + W^phi_{gamma delta} Gamma^tau_{beta phi};
// Ricci R_{ab} = R^tau_{a b tau}.
class CurvatureData {
 public:
  CurvatureData(std::size_t n, std::size_t m);

  std::size_t dim() const { return d_; }
  const ScalarField& R(std::size_t tau, std::size_t beta, std::size_t gamma, std::size_t delta) const {
    return R_[((tau * d_ + beta) * d_ + gamma) * d_ + delta];
  }
  const ScalarField& ricci(std::size_t a, std::size_t b) const { return ricci_[a * d_ + b]; }
  const ScalarField& scalar() const { return scalar_; }
  const ScalarField& einstein(std::size_t a, std::size_t b) const { return einstein_[a * d_ + b]; }
  // R (gamma < delta), Ricci, scalar, Einstein.
  std::vector<NamedComponent> components() const;

 private:
  friend CurvatureData curvature(const DConnection&, const DMetric&);
  std::size_t n_, d_;
  std::vector<ScalarField> R_, ricci_, einstein_;
  ScalarField scalar_;
};

CurvatureData curvature(const DConnection& conn, const DMetric& metric);

// Single Ricci component R_{ab} without building the full curvature tensor.
ScalarField ricci_component(const DConnection& conn, const AnholonomyData& W, std::size_t a, std::size_t b);

// D_gamma g_{alpha beta} for every gamma and alpha <= beta in the same block.
std::vector<NamedComponent> metric_compatibility(const DConnection& conn, const DMetric& metric);

class DistortionData {
 public:
  DistortionData(Tensor3 Z, Tensor3 lc) : Z_(std::move(Z)), lc_(std::move(lc)) {}
  const Tensor3& Z() const { return Z_; }
  // Levi-Civita coefficients in the adapted basis, canonical + Z.
  const Tensor3& lc() const { return lc_; }

 private:
  Tensor3 Z_;
  Tensor3 lc_;
};

DistortionData distortion(const DMetric& metric, const DConnection& conn);

struct ConstraintViolation {
  std::string name;  // "L-eN", "C", "Omega"
  double max_abs = 0.0;
};

struct ConstraintReport {
  std::vector<ConstraintViolation> entries;
  double worst() const;
};

// Fields whose vanishing makes canonical and Levi-Civita coincide:
// L^c_{aj} - e_a N^c_j, C^i_{jb} and Omega^a_{ji}.
std::vector<NamedComponent> lc_constraint_fields(const DMetric& metric, const DConnection& conn);
ConstraintReport check_lc_constraints(const DMetric& metric, const DConnection& conn, const LatticeSpec& lattice);
ConstraintReport check_lc_constraints(const DMetric& metric, const DConnection& conn);

struct FamilyStat {
  std::string name;
  double max_abs = 0.0;
  double mean_abs = 0.0;
};

// Max and mean of |field| per family (in order of first appearance) over the points.
// NaN values count as infinite.
std::vector<FamilyStat> family_stats(const std::vector<NamedComponent>& comps,
                                     const std::vector<std::vector<double>>& points);

// Rows `name,i j k,u1 u2 ...,value` (1-based indices, 12 significant digits).
void write_component_dump(std::ostream& os, const std::vector<NamedComponent>& comps,
                          const std::vector<std::vector<double>>& points);

}  // namespace frango
