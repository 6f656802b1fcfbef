#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "frango/dconnection.hpp"
#include "frango/frames.hpp"

namespace frango {

// Coordinates of the 2+2 solution chart: (x1, x2, v, y4); y4 is the Killing direction.
inline constexpr std::size_t kX1 = 0, kX2 = 1, kV = 2, kY4 = 3;

struct SourceSpec {
  ScalarField upsilon2;  // of (x, v)
  ScalarField upsilon4;  // of x
};

// printed: h3 = sign3 |phi*| / Y2, h4 = h4_0 + sign4 2 I_v[(e^{2phi})* / Y2],
//          w_i = -d_i phi / phi*, n_k = n1_k + n2_k I_v[h3 / |h4|^{3/2}].
// consistent: h4 = h4_0 + sign4 I_v[(e^{2phi})* / Y2] / 4, h3 = h4* phi* / (2 h4 Y2),
//          w_i = +d_i phi / phi*, n_k = n1_k + n2_k I_v[sqrt|h3| / |h4|^{3/2}];
//          this family solves eq1-eq4 at alpha = 1.
enum class GeneratorForm { printed, consistent };

// printed: Y4 = (psi.. + psi'') / 2. consistent: Y4 = e^{-psi} (psi.. + psi'') / 2, the
// value eq1 actually requires for g1 = g2 = e^psi.
enum class SourceScaling { printed, consistent };

struct SolutionAnsatz {
  ScalarField psi;   // of x
  ScalarField phi;   // generating function of (x, v)
  ScalarField h4_0;  // of x
  std::array<ScalarField, 2> n1, n2;
  int sign3 = 1;  // printed form only
  int sign4 = 1;
  std::optional<ScalarField> omega;  // non-Killing conformal factor
  // phi = const branch: h3 and w are free and taken from here.
  bool degenerate = false;
  ScalarField h3;
  std::array<ScalarField, 2> w;
};

struct GeneratorOptions {
  GeneratorForm form = GeneratorForm::consistent;
  QuadratureOptions quadrature;
  int lattice_count = 17;     // per axis over (x1, x2, v); y4 sits at its midpoint
  bool shrink_region = true;  // otherwise a sign change of h3 or h4 is a SignatureError
};

struct GeneratedMetric {
  Chart chart;
  FracOrder order;
  Box region;  // sign-constant evaluation region
  ScalarField psi, h3, h4;
  std::array<ScalarField, 2> w, n;
  std::optional<ScalarField> omega;
  GeneratorForm form = GeneratorForm::consistent;

  // Killing d-metric: g = e^psi diag(1, 1), h = diag(h3, h4), N^3_i = w_i, N^4_i = n_i.
  DMetric metric() const;
  // Same with h scaled by omega^2 (equals metric() without omega).
  DMetric metric_with_omega() const;
  // Default residual lattice over the region.
  LatticeSpec lattice(int count = 17) const;
};

ScalarField manufacture_source(const Chart& chart, const ScalarField& psi, FracOrder order,
                               SourceScaling scaling = SourceScaling::printed, QuadratureOptions q = {});

GeneratedMetric generate_solution(const Chart& chart, const SolutionAnsatz& ansatz, const SourceSpec& source,
                                  FracOrder order, const GeneratorOptions& opts = {});

using ResidualStat = FamilyStat;

struct ResidualReport {
  std::vector<ResidualStat> formula;      // eq1..eq4 from the separated equations
  std::vector<ResidualStat> ricci;        // eq1..eq4 from the canonical Ricci tensor
  std::vector<ResidualStat> agreement;    // |formula - ricci| per equation
  std::vector<ResidualStat> algebraic;    // beta w_i + alpha_i
  Box region;
  LatticeSpec lattice;
  std::size_t points = 0;
  std::vector<std::string> notes;

  const ResidualStat* find(const std::vector<ResidualStat>& v, const std::string& name) const;
};

struct ResidualOptions {
  int lattice_count = 17;
  // Ricci-level cross-evaluation; skipped for alpha < 1 (see notes in the report): there
  // h3 ~ phi* vanishes at the v base and Caputo derivatives of h^{33} and w diverge.
  bool ricci_level = true;
  QuadratureOptions quadrature;
};

// Residual fields, each paired with its family name. Formula level: eq1, eq2, eq3
// (k = 1, 2) and eq4 (k = 1, 2) with the corrected n-coefficient.
std::vector<NamedComponent> formula_residual_fields(const GeneratedMetric& gm, const SourceSpec& source,
                                                    QuadratureOptions q = {});
std::vector<NamedComponent> ricci_residual_fields(const GeneratedMetric& gm, const SourceSpec& source,
                                                  QuadratureOptions q = {});

ResidualReport einstein_residuals(const GeneratedMetric& gm, const SourceSpec& source,
                                  const ResidualOptions& opts = {});

// beta w_i + alpha_i with alpha_i = h4* d_i phi and beta = h4* phi* for the printed form;
// beta w_i - alpha_i (the combination eq3 reduces to) for the consistent form.
std::vector<NamedComponent> algebraic_identity_fields(const GeneratedMetric& gm, const ScalarField& phi,
                                                      QuadratureOptions q = {});

// Conditions under which the canonical connection of the ansatz is Levi-Civita:
// w*_i - e_i ln|h4|, e_k w_i - e_i w_k, n*_i, d_i n_k - d_k n_i, and the two phi-functional
// conditions as printed: (w_i)* + w_i h4* + d_i h4 and d_i w_k - d_k w_i.
std::vector<NamedComponent> lc_extraction_fields(const GeneratedMetric& gm, QuadratureOptions q = {});
std::vector<ResidualStat> lc_extraction_check(const GeneratedMetric& gm, int lattice_count = 17,
                                              QuadratureOptions q = {});

// d_k omega + w_k omega* + n_k d_{y4} omega, max over the region lattice.
ScalarField omega_condition_field(const GeneratedMetric& gm, const ScalarField& omega, std::size_t k,
                                  QuadratureOptions q = {});
double omega_condition(const GeneratedMetric& gm, const ScalarField& omega, int lattice_count = 17,
                       QuadratureOptions q = {});

}  // namespace frango
