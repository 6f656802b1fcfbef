#include "frango/solutions.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "frango/error.hpp"
#include "frango/format.hpp"

namespace frango {

namespace {

constexpr AxisMask kXMask = (AxisMask{1} << kX1) | (AxisMask{1} << kX2);
constexpr AxisMask kXVMask = kXMask | (AxisMask{1} << kV);

void require_chart(const Chart& chart) {
  if (chart.n() != 2 || chart.m() != 2)
    throw DomainError("solution chart must be 2+2 (x1, x2, v, y4)");
}

void require_deps(const ScalarField& f, AxisMask allowed, const std::string& what) {
  if (f.deps() & ~allowed) throw DomainError(what + " depends on a coordinate outside its allowed set");
}

LatticeSpec region_lattice(FracOrder order, int count) {
  return LatticeSpec{{count, count, count, 1}, !order.classical()};
}

Calculus calculus_for(const Chart& chart, QuadratureOptions q) { return Calculus(chart.box().base(), q); }

std::vector<double> evaluate_one(const ScalarField& f, const std::vector<std::vector<double>>& points) {
  auto rows = evaluate_on_points({f}, points);
  std::vector<double> out(rows.size());
  for (std::size_t p = 0; p < rows.size(); ++p) out[p] = rows[p][0];
  return out;
}

std::string point_text(const std::vector<double>& x) {
  std::string s = "(";
  for (std::size_t k = 0; k < x.size(); ++k) s += (k ? ", " : "") + format_number(x[k]);
  return s + ")";
}

int majority_sign(const std::vector<double>& v) {
  std::size_t pos = 0, neg = 0;
  for (double x : v) {
    if (x > 0) ++pos;
    else if (x < 0) ++neg;
  }
  return pos >= neg ? 1 : -1;
}

// Greedy shrink of the (x1, x2, v) index box: repeatedly drop the face holding the most
// points where h3 or h4 has the wrong sign (or is too small).
Box shrink_region(const Chart& chart, FracOrder order, int count, const ScalarField& h3, const ScalarField& h4,
                  bool allow_shrink) {
  const Box& box = chart.box();
  const bool skip_base = !order.classical();
  std::array<std::vector<double>, 3> nodes;
  for (std::size_t k = 0; k < 3; ++k) nodes[k] = lattice_axis(box.axis(k), count, skip_base);
  const LatticeSpec spec = region_lattice(order, count);
  const auto points = lattice_points(box, spec);
  auto rows = evaluate_on_points({h3, h4}, points);
  std::vector<double> v3(rows.size()), v4(rows.size());
  for (std::size_t p = 0; p < rows.size(); ++p) {
    v3[p] = rows[p][0];
    v4[p] = rows[p][1];
  }
  const int s3 = majority_sign(v3), s4 = majority_sign(v4);
  const std::size_t c = static_cast<std::size_t>(count);
  std::vector<char> bad(points.size());
  std::size_t first_bad = points.size();
  for (std::size_t p = 0; p < points.size(); ++p) {
    bool ok = v3[p] * s3 > 1e-10 && v4[p] * s4 > 1e-10 && std::isfinite(v3[p]) && std::isfinite(v4[p]);
    bad[p] = !ok;
    if (!ok && first_bad == points.size()) first_bad = p;
  }
  if (first_bad == points.size()) return box;
  if (!allow_shrink)
    throw SignatureError("h3 or h4 changes sign or vanishes at " + point_text(points[first_bad]));

  std::array<std::size_t, 3> lo{0, 0, 0}, hi{c - 1, c - 1, c - 1};
  auto idx = [&](std::size_t i, std::size_t j, std::size_t k) { return (i * c + j) * c + k; };
  for (;;) {
    // bad counts on the six faces of the current index box
    std::array<std::size_t, 6> face{};
    std::size_t total = 0;
    for (std::size_t i = lo[0]; i <= hi[0]; ++i)
      for (std::size_t j = lo[1]; j <= hi[1]; ++j)
        for (std::size_t k = lo[2]; k <= hi[2]; ++k) {
          if (!bad[idx(i, j, k)]) continue;
          ++total;
          const std::array<std::size_t, 3> at{i, j, k};
          for (std::size_t a = 0; a < 3; ++a) {
            if (at[a] == lo[a]) ++face[2 * a];
            if (at[a] == hi[a]) ++face[2 * a + 1];
          }
        }
    if (total == 0) break;
    std::size_t best = 6;
    for (std::size_t f = 0; f < 6; ++f) {
      if (lo[f / 2] == hi[f / 2] || face[f] == 0) continue;
      if (best == 6 || face[f] > face[best]) best = f;
    }
    if (best == 6) throw SignatureError("no sign-constant region for h3 and h4 on the chart");
    if (best % 2 == 0) ++lo[best / 2];
    else --hi[best / 2];
  }
  std::vector<Interval> axes(4);
  for (std::size_t a = 0; a < 3; ++a) {
    axes[a].lower = lo[a] == 0 ? box.lower(a) : nodes[a][lo[a]];
    axes[a].upper = hi[a] == c - 1 ? box.upper(a) : nodes[a][hi[a]];
    if (!(axes[a].upper > axes[a].lower))
      throw SignatureError("sign-constant region for h3 and h4 collapses along axis " + std::to_string(a + 1));
  }
  axes[3] = box.axis(kY4);
  // Caputo bases stay at the chart corner; a shrunk lower face only limits sampling.
  return Box(axes);
}

std::vector<std::vector<double>> region_points(const GeneratedMetric& gm, int count) {
  return lattice_points(gm.region, region_lattice(gm.order, count));
}

}  // namespace

DMetric GeneratedMetric::metric() const {
  FieldMatrix g(2, 2), h(2, 2), N(2, 2);
  auto e = exp(psi);
  g(0, 0) = e;
  g(1, 1) = e;
  h(0, 0) = h3;
  h(1, 1) = h4;
  for (std::size_t i = 0; i < 2; ++i) {
    N(0, i) = w[i];
    N(1, i) = n[i];
  }
  return DMetric(g, h, NConnection(chart, N));
}

DMetric GeneratedMetric::metric_with_omega() const {
  DMetric base = metric();
  if (!omega) return base;
  auto o2 = (*omega) * (*omega);
  FieldMatrix h(2, 2);
  h(0, 0) = o2 * h3;
  h(1, 1) = o2 * h4;
  return DMetric(base.g(), h, base.N());
}

LatticeSpec GeneratedMetric::lattice(int count) const { return region_lattice(order, count); }

ScalarField manufacture_source(const Chart& chart, const ScalarField& psi, FracOrder order, SourceScaling scaling,
                               QuadratureOptions q) {
  require_chart(chart);
  require_deps(psi, kXMask, "psi");
  auto calc = calculus_for(chart, q);
  auto d1 = calc.caputo(calc.caputo(psi, kX1, order), kX1, order);
  auto d2 = calc.caputo(calc.caputo(psi, kX2, order), kX2, order);
  ScalarField y4 = 0.5 * (d1 + d2);
  if (scaling == SourceScaling::consistent) y4 = exp(-psi) * y4;
  return y4;
}

GeneratedMetric generate_solution(const Chart& chart, const SolutionAnsatz& ans, const SourceSpec& source,
                                  FracOrder order, const GeneratorOptions& opts) {
  require_chart(chart);
  require_deps(ans.psi, kXMask, "psi");
  require_deps(ans.h4_0, kXMask, "h4_0");
  require_deps(source.upsilon4, kXMask, "Upsilon4");
  require_deps(source.upsilon2, kXVMask, "Upsilon2");
  for (std::size_t k = 0; k < 2; ++k) {
    require_deps(ans.n1[k], kXMask, "n1");
    require_deps(ans.n2[k], kXMask, "n2");
  }
  if (ans.sign3 != 1 && ans.sign3 != -1) throw DomainError("sign3 must be +1 or -1");
  if (ans.sign4 != 1 && ans.sign4 != -1) throw DomainError("sign4 must be +1 or -1");
  if (opts.lattice_count < 2) throw DomainError("generator lattice needs at least 2 nodes per axis");

  const Calculus calc = calculus_for(chart, opts.quadrature);
  auto star = [&](const ScalarField& f) { return calc.caputo(f, kV, order); };
  const double a = order.value();
  const bool printed = opts.form == GeneratorForm::printed;
  const auto points = lattice_points(chart.box(), region_lattice(order, opts.lattice_count));

  const auto& Y2 = source.upsilon2;
  {
    auto y2v = evaluate_one(Y2, points);
    for (std::size_t p = 0; p < points.size(); ++p)
      if (!(std::abs(y2v[p]) > 1e-12)) throw GeneratorError("Upsilon2 vanishes at " + point_text(points[p]));
  }

  GeneratedMetric gm{chart, order, chart.box(), ans.psi, {}, {}, {}, {}, ans.omega, opts.form};
  if (ans.degenerate) {
    require_deps(ans.h3, kXVMask, "h3");
    gm.h3 = ans.h3;
    gm.h4 = ans.h4_0;
    gm.w = ans.w;
  } else {
    require_deps(ans.phi, kXVMask, "phi");
    auto phis = star(ans.phi);
    auto pv = evaluate_one(phis, points);
    for (std::size_t p = 0; p < points.size(); ++p)
      if (!(std::abs(pv[p]) > 1e-12))
        throw GeneratorError("phi* vanishes at " + point_text(points[p]) + " (use the degenerate branch)");
    auto source_term = calc.integral(star(exp(2.0 * ans.phi)) / Y2, kV, a);
    if (printed) {
      gm.h4 = ans.h4_0 + (2.0 * ans.sign4) * source_term;
      gm.h3 = ans.sign3 * abs(phis) / Y2;
    } else {
      gm.h4 = ans.h4_0 + (0.25 * ans.sign4) * source_term;
      gm.h3 = star(gm.h4) * phis / (2.0 * gm.h4 * Y2);
    }
    const double ws = printed ? -1.0 : 1.0;
    for (std::size_t i = 0; i < 2; ++i) gm.w[i] = ws * calc.caputo(ans.phi, i, order) / phis;
  }
  const ScalarField numer = printed ? gm.h3 : sqrt(abs(gm.h3));
  const ScalarField integrand = numer / pow(abs(gm.h4), 1.5);
  for (std::size_t k = 0; k < 2; ++k) {
    gm.n[k] = ans.n1[k];
    if (!ans.n2[k].is_zero()) gm.n[k] = gm.n[k] + ans.n2[k] * calc.integral(integrand, kV, a);
  }
  gm.region = shrink_region(chart, order, opts.lattice_count, gm.h3, gm.h4, opts.shrink_region);
  return gm;
}

const ResidualStat* ResidualReport::find(const std::vector<ResidualStat>& v, const std::string& name) const {
  for (const auto& s : v)
    if (s.name == name) return &s;
  return nullptr;
}

std::vector<NamedComponent> formula_residual_fields(const GeneratedMetric& gm, const SourceSpec& source,
                                                    QuadratureOptions q) {
  const auto calc = calculus_for(gm.chart, q);
  const FracOrder o = gm.order;
  auto D = [&](const ScalarField& f, std::size_t axis) { return calc.caputo(f, axis, o); };
  std::vector<NamedComponent> out;

  // eq1 with g1 = g2 = e^psi
  const auto g = exp(gm.psi);
  const auto g1 = D(g, kX1), g2 = D(g, kX2);
  auto bracket1 = D(g1, kX1) - g1 * g1 / (2.0 * g) - g1 * g1 / (2.0 * g) + D(g2, kX2) - g2 * g2 / (2.0 * g) -
                  g2 * g2 / (2.0 * g);
  out.push_back({"eq1", {}, -bracket1 / (2.0 * g * g) + source.upsilon4});

  const auto& h3 = gm.h3;
  const auto& h4 = gm.h4;
  const auto h3s = D(h3, kV), h4s = D(h4, kV);
  const auto H = D(h4s, kV) - h4s * h4s / (2.0 * h4) - h3s * h4s / (2.0 * h3);
  out.push_back({"eq2", {}, -H / (2.0 * h3 * h4) + source.upsilon2});
  for (std::size_t k = 0; k < 2; ++k) {
    auto f = gm.w[k] * H / (2.0 * h4) + h4s / (4.0 * h4) * (D(h3, k) / h3 + D(h4, k) / h4) - D(h4s, k) / (2.0 * h4);
    out.push_back({"eq3", {k}, f});
  }
  for (std::size_t k = 0; k < 2; ++k) {
    const auto ns = D(gm.n[k], kV);
    auto f = -h4 / (2.0 * h3) * (D(ns, kV) + (1.5 * h4s / h4 - 0.5 * h3s / h3) * ns);
    out.push_back({"eq4", {k}, f});
  }
  return out;
}

std::vector<NamedComponent> ricci_residual_fields(const GeneratedMetric& gm, const SourceSpec& source,
                                                  QuadratureOptions q) {
  const DMetric metric = gm.metric();
  ConnectionOptions copts;
  copts.quadrature = q;
  copts.check_region = gm.region;
  const DConnection conn = canonical_dconnection(metric, gm.order, copts);
  const AnholonomyData W = anholonomy(conn.derivations());
  const auto einv = exp(-gm.psi);
  std::vector<NamedComponent> out;
  out.push_back({"eq1", {0}, einv * ricci_component(conn, W, 0, 0) + source.upsilon4});
  out.push_back({"eq1", {1}, einv * ricci_component(conn, W, 1, 1) + source.upsilon4});
  out.push_back({"eq2", {2}, ricci_component(conn, W, 2, 2) / gm.h3 + source.upsilon2});
  out.push_back({"eq2", {3}, ricci_component(conn, W, 3, 3) / gm.h4 + source.upsilon2});
  for (std::size_t k = 0; k < 2; ++k) out.push_back({"eq3", {k}, ricci_component(conn, W, 2, k)});
  for (std::size_t k = 0; k < 2; ++k) out.push_back({"eq4", {k}, ricci_component(conn, W, 3, k)});
  return out;
}

std::vector<NamedComponent> algebraic_identity_fields(const GeneratedMetric& gm, const ScalarField& phi,
                                                      QuadratureOptions q) {
  const auto calc = calculus_for(gm.chart, q);
  const auto h4s = calc.caputo(gm.h4, kV, gm.order);
  const auto beta = h4s * calc.caputo(phi, kV, gm.order);
  std::vector<NamedComponent> out;
  for (std::size_t i = 0; i < 2; ++i) {
    auto alpha_i = h4s * calc.caputo(phi, i, gm.order);
    if (gm.form == GeneratorForm::printed) out.push_back({"beta_w_alpha", {i}, beta * gm.w[i] + alpha_i});
    else out.push_back({"beta_w_alpha", {i}, beta * gm.w[i] - alpha_i});
  }
  return out;
}

ResidualReport einstein_residuals(const GeneratedMetric& gm, const SourceSpec& source, const ResidualOptions& opts) {
  ResidualReport rep;
  rep.region = gm.region;
  rep.lattice = gm.lattice(opts.lattice_count);
  const auto points = region_points(gm, opts.lattice_count);
  rep.points = points.size();

  auto formula = formula_residual_fields(gm, source, opts.quadrature);
  std::vector<NamedComponent> all = formula;
  std::vector<NamedComponent> ricci, agree;
  const bool ricci_level = opts.ricci_level && gm.order.classical();
  if (opts.ricci_level && !ricci_level)
    rep.notes.push_back(
        "ricci-level residuals skipped for alpha < 1: h3 and phi* vanish at the v base terminal, so Caputo "
        "derivatives of h^33 and w are not integrable");
  if (ricci_level) {
    ricci = ricci_residual_fields(gm, source, opts.quadrature);
    for (auto& c : ricci) c.family = "ricci:" + c.family;
    // eq1/eq2 formula residual against each of the two Ricci components it stands for
    for (const auto& r : ricci) {
      const std::string fam = r.family.substr(6);
      for (const auto& f : formula) {
        if (f.family != fam) continue;
        if ((fam == "eq3" || fam == "eq4") && f.index != r.index) continue;
        agree.push_back({"agree:" + fam, r.index, f.field - r.field});
      }
    }
    all.insert(all.end(), ricci.begin(), ricci.end());
    all.insert(all.end(), agree.begin(), agree.end());
  }
  auto stats = family_stats(all, points);
  for (auto& s : stats) {
    if (s.name.rfind("ricci:", 0) == 0) {
      s.name = s.name.substr(6);
      rep.ricci.push_back(s);
    } else if (s.name.rfind("agree:", 0) == 0) {
      s.name = s.name.substr(6);
      rep.agreement.push_back(s);
    } else {
      rep.formula.push_back(s);
    }
  }
  return rep;
}

std::vector<NamedComponent> lc_extraction_fields(const GeneratedMetric& gm, QuadratureOptions q) {
  FieldMatrix N(2, 2);
  for (std::size_t i = 0; i < 2; ++i) {
    N(0, i) = gm.w[i];
    N(1, i) = gm.n[i];
  }
  const Derivations d(NConnection(gm.chart, N), gm.order, q);
  auto D = [&](const ScalarField& f, std::size_t axis) { return d.partial(axis, f); };
  const auto lnh4 = log(abs(gm.h4));
  const auto h4s = D(gm.h4, kV);
  std::vector<NamedComponent> out;
  for (std::size_t i = 0; i < 2; ++i) out.push_back({"w_star", {i}, D(gm.w[i], kV) - d.e(i, lnh4)});
  out.push_back({"ew_curl", {0, 1}, d.e(0, gm.w[1]) - d.e(1, gm.w[0])});
  for (std::size_t i = 0; i < 2; ++i) out.push_back({"n_star", {i}, D(gm.n[i], kV)});
  out.push_back({"n_curl", {0, 1}, D(gm.n[1], kX1) - D(gm.n[0], kX2)});
  for (std::size_t i = 0; i < 2; ++i)
    out.push_back({"auxc1_w", {i}, D(gm.w[i], kV) + gm.w[i] * h4s + D(gm.h4, i)});
  out.push_back({"auxc1_curl", {0, 1}, D(gm.w[1], kX1) - D(gm.w[0], kX2)});
  return out;
}

std::vector<ResidualStat> lc_extraction_check(const GeneratedMetric& gm, int lattice_count, QuadratureOptions q) {
  return family_stats(lc_extraction_fields(gm, q), region_points(gm, lattice_count));
}

ScalarField omega_condition_field(const GeneratedMetric& gm, const ScalarField& omega, std::size_t k,
                                  QuadratureOptions q) {
  if (k > 1) throw DomainError("omega condition index must be 0 or 1");
  const auto calc = calculus_for(gm.chart, q);
  auto D = [&](const ScalarField& f, std::size_t axis) { return calc.caputo(f, axis, gm.order); };
  return D(omega, k) + gm.w[k] * D(omega, kV) + gm.n[k] * D(omega, kY4);
}

double omega_condition(const GeneratedMetric& gm, const ScalarField& omega, int lattice_count, QuadratureOptions q) {
  std::vector<NamedComponent> comps;
  for (std::size_t k = 0; k < 2; ++k) comps.push_back({"omega", {k}, omega_condition_field(gm, omega, k, q)});
  auto stats = family_stats(comps, region_points(gm, lattice_count));
  return stats.front().max_abs;
}

}  // namespace frango
