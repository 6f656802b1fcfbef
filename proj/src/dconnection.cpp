#include "frango/dconnection.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "frango/error.hpp"
#include "frango/format.hpp"

namespace frango {

namespace {

bool same_block(std::size_t a, std::size_t b, std::size_t n) { return (a < n) == (b < n); }

}  // namespace

DConnection::DConnection(Derivations d)
    : d_(std::move(d)),
      Lh_(n() * n() * n()),
      Lv_(m() * m() * n()),
      Ch_(n() * n() * m()),
      Cv_(m() * m() * m()) {}

ScalarField DConnection::gamma(std::size_t tau, std::size_t beta, std::size_t g) const {
  const std::size_t nn = n();
  if (!same_block(tau, beta, nn)) return 0.0;
  if (tau < nn) return g < nn ? L(tau, beta, g) : C(tau, beta, g - nn);
  return g < nn ? Lv(tau - nn, beta - nn, g) : Cv(tau - nn, beta - nn, g - nn);
}

Tensor3 DConnection::gamma_tensor() const {
  const std::size_t d = n() + m();
  Tensor3 t(d);
  for (std::size_t a = 0; a < d; ++a)
    for (std::size_t b = 0; b < d; ++b)
      for (std::size_t c = 0; c < d; ++c) t(a, b, c) = gamma(a, b, c);
  return t;
}

std::vector<NamedComponent> DConnection::components() const {
  const std::size_t nn = n(), mm = m();
  std::vector<NamedComponent> out;
  for (std::size_t i = 0; i < nn; ++i)
    for (std::size_t j = 0; j < nn; ++j)
      for (std::size_t k = 0; k < nn; ++k) out.push_back({"L_h", {i, j, k}, L(i, j, k)});
  for (std::size_t a = 0; a < mm; ++a)
    for (std::size_t b = 0; b < mm; ++b)
      for (std::size_t k = 0; k < nn; ++k) out.push_back({"L_v", {nn + a, nn + b, k}, Lv(a, b, k)});
  for (std::size_t i = 0; i < nn; ++i)
    for (std::size_t j = 0; j < nn; ++j)
      for (std::size_t c = 0; c < mm; ++c) out.push_back({"C_h", {i, j, nn + c}, C(i, j, c)});
  for (std::size_t a = 0; a < mm; ++a)
    for (std::size_t b = 0; b < mm; ++b)
      for (std::size_t c = 0; c < mm; ++c) out.push_back({"C_v", {nn + a, nn + b, nn + c}, Cv(a, b, c)});
  return out;
}

DConnection canonical_dconnection(const DMetric& metric, FracOrder order, const ConnectionOptions& opts) {
  if (opts.check_region) {
    Chart sub = metric.chart().with_box(*opts.check_region);
    DMetric view(metric.g(), metric.h(), NConnection(sub, metric.N().coefficients()));
    check_nondegenerate(view, default_lattice(sub, order, opts.lattice_count), opts.eps);
  } else {
    check_nondegenerate(metric, default_lattice(metric.chart(), order, opts.lattice_count), opts.eps);
  }
  Derivations d(metric.N(), order, opts.quadrature);
  DConnection conn(d);
  const std::size_t n = metric.n(), m = metric.m();
  const FieldMatrix& g = metric.g();
  const FieldMatrix& h = metric.h();
  const auto& N = metric.N();
  FieldMatrix gi = inverse(g), hi = inverse(h);

  // eg[k][j][r] = e_k g_jr, dg[c][j][r] = e_c g_jr
  std::vector<ScalarField> eg(n * n * n), dg(m * n * n), eh(n * m * m), dh(m * m * m), eN(m * m * n);
  auto EG = [&](std::size_t k, std::size_t j, std::size_t r) -> ScalarField& { return eg[(k * n + j) * n + r]; };
  auto DG = [&](std::size_t c, std::size_t j, std::size_t r) -> ScalarField& { return dg[(c * n + j) * n + r]; };
  auto EH = [&](std::size_t k, std::size_t b, std::size_t c) -> ScalarField& { return eh[(k * m + b) * m + c]; };
  auto DH = [&](std::size_t e, std::size_t b, std::size_t c) -> ScalarField& { return dh[(e * m + b) * m + c]; };
  // eN(b, d, k) = e_b N^d_k
  auto EN = [&](std::size_t b, std::size_t dd, std::size_t k) -> ScalarField& { return eN[(b * m + dd) * n + k]; };

  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t r = j; r < n; ++r) {
      for (std::size_t k = 0; k < n; ++k) EG(k, j, r) = EG(k, r, j) = d.e(k, g(j, r));
      for (std::size_t c = 0; c < m; ++c) DG(c, j, r) = DG(c, r, j) = d.e(n + c, g(j, r));
    }
  }
  for (std::size_t b = 0; b < m; ++b) {
    for (std::size_t c = b; c < m; ++c) {
      for (std::size_t k = 0; k < n; ++k) EH(k, b, c) = EH(k, c, b) = d.e(k, h(b, c));
      for (std::size_t e = 0; e < m; ++e) DH(e, b, c) = DH(e, c, b) = d.e(n + e, h(b, c));
    }
  }
  for (std::size_t b = 0; b < m; ++b)
    for (std::size_t dd = 0; dd < m; ++dd)
      for (std::size_t k = 0; k < n; ++k) EN(b, dd, k) = d.e(n + b, N(dd, k));

  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t k = j; k < n; ++k) {
        ScalarField s;
        for (std::size_t r = 0; r < n; ++r) s += gi(i, r) * (EG(k, j, r) + EG(j, k, r) - EG(r, j, k));
        conn.L(i, j, k) = conn.L(i, k, j) = 0.5 * s;
      }
      for (std::size_t c = 0; c < m; ++c) {
        ScalarField s;
        for (std::size_t k = 0; k < n; ++k) s += gi(i, k) * DG(c, j, k);
        conn.C(i, j, c) = 0.5 * s;
      }
    }
  }
  for (std::size_t a = 0; a < m; ++a) {
    for (std::size_t b = 0; b < m; ++b) {
      for (std::size_t k = 0; k < n; ++k) {
        ScalarField s;
        for (std::size_t c = 0; c < m; ++c) {
          ScalarField t = EH(k, b, c);
          for (std::size_t dd = 0; dd < m; ++dd) t -= h(dd, c) * EN(b, dd, k) + h(dd, b) * EN(c, dd, k);
          s += hi(a, c) * t;
        }
        conn.Lv(a, b, k) = EN(b, a, k) + 0.5 * s;
      }
      for (std::size_t c = b; c < m; ++c) {
        ScalarField s;
        for (std::size_t dd = 0; dd < m; ++dd) s += hi(a, dd) * (DH(c, b, dd) + DH(b, c, dd) - DH(dd, b, c));
        conn.Cv(a, b, c) = conn.Cv(a, c, b) = 0.5 * s;
      }
    }
  }
  return conn;
}

// ---- torsion ----

TorsionData torsion(const DConnection& conn) {
  const std::size_t n = conn.n(), D = n + conn.m();
  AnholonomyData W = anholonomy(conn.derivations());
  Tensor3 T(D);
  for (std::size_t t = 0; t < D; ++t) {
    for (std::size_t b = 0; b < D; ++b) {
      for (std::size_t c = b + 1; c < D; ++c) {
        ScalarField v = conn.gamma(t, c, b) - conn.gamma(t, b, c) - W.W(t, b, c);
        T(t, b, c) = v;
        T(t, c, b) = -v;
      }
    }
  }
  return TorsionData(std::move(T), n);
}

std::vector<NamedComponent> TorsionData::components() const {
  const std::size_t n = n_, D = T_.dim();
  std::vector<NamedComponent> out;
  for (std::size_t t = 0; t < D; ++t) {
    for (std::size_t b = 0; b < D; ++b) {
      for (std::size_t c = b + 1; c < D; ++c) {
        const bool th = t < n, bh = b < n, ch = c < n;
        std::string name;
        if (th && bh && ch) name = "T_hhh";        // T^i_jk
        else if (!th && !bh && !ch) name = "T_vvv";  // T^a_bc
        else if (th && bh != ch) name = "T_hhv";     // T^i_ja
        else if (!th && bh && ch) name = "T_vhh";    // T^a_ji
        else if (!th && bh != ch) name = "T_vvh";    // T^a_bi
        else continue;                               // T^i_ab, not a d-tensor family
        out.push_back({name, {t, b, c}, T_(t, b, c)});
      }
    }
  }
  return out;
}

// ---- curvature ----

namespace {

ScalarField riemann(const DConnection& conn, const AnholonomyData& W, std::size_t t, std::size_t b, std::size_t c,
                    std::size_t dl) {
  const std::size_t n = conn.n(), D = n + conn.m();
  if (!same_block(t, b, n) || c == dl) return 0.0;
  const auto& d = conn.derivations();
  ScalarField r = d.e(dl, conn.gamma(t, b, c)) - d.e(c, conn.gamma(t, b, dl));
  for (std::size_t f = 0; f < D; ++f) {
    if (!same_block(f, b, n)) continue;
    r += conn.gamma(f, b, c) * conn.gamma(t, f, dl) - conn.gamma(f, b, dl) * conn.gamma(t, f, c);
  }
  for (std::size_t f = 0; f < D; ++f) {
    const ScalarField& w = W.W(f, c, dl);
    if (w.is_zero()) continue;
    r += w * conn.gamma(t, b, f);
  }
  return r;
}

}  // namespace

CurvatureData::CurvatureData(std::size_t n, std::size_t m)
    : n_(n), d_(n + m), R_(d_ * d_ * d_ * d_), ricci_(d_ * d_), einstein_(d_ * d_) {}

CurvatureData curvature(const DConnection& conn, const DMetric& metric) {
  const std::size_t n = conn.n(), m = conn.m(), D = n + m;
  AnholonomyData W = anholonomy(conn.derivations());
  CurvatureData cd(n, m);
  auto at = [&](std::size_t t, std::size_t b, std::size_t c, std::size_t dl) -> ScalarField& {
    return cd.R_[((t * D + b) * D + c) * D + dl];
  };
  for (std::size_t t = 0; t < D; ++t) {
    for (std::size_t b = 0; b < D; ++b) {
      if (!same_block(t, b, n)) continue;
      for (std::size_t c = 0; c < D; ++c) {
        for (std::size_t dl = c + 1; dl < D; ++dl) {
          ScalarField r = riemann(conn, W, t, b, c, dl);
          at(t, b, c, dl) = r;
          at(t, b, dl, c) = -r;
        }
      }
    }
  }
  for (std::size_t a = 0; a < D; ++a) {
    for (std::size_t b = 0; b < D; ++b) {
      ScalarField s;
      for (std::size_t t = 0; t < D; ++t) s += cd.R(t, a, b, t);
      cd.ricci_[a * D + b] = s;
    }
  }
  FieldMatrix gi = inverse(metric.g()), hi = inverse(metric.h());
  ScalarField sR;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) sR += gi(i, j) * cd.ricci(i, j);
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t b = 0; b < m; ++b) sR += hi(a, b) * cd.ricci(n + a, n + b);
  cd.scalar_ = sR;
  for (std::size_t a = 0; a < D; ++a)
    for (std::size_t b = 0; b < D; ++b)
      cd.einstein_[a * D + b] = cd.ricci(a, b) - 0.5 * metric.block(a, b) * sR;
  return cd;
}

ScalarField ricci_component(const DConnection& conn, const AnholonomyData& W, std::size_t a, std::size_t b) {
  const std::size_t D = conn.n() + conn.m();
  ScalarField s;
  for (std::size_t t = 0; t < D; ++t) s += riemann(conn, W, t, a, b, t);
  return s;
}

std::vector<NamedComponent> CurvatureData::components() const {
  std::vector<NamedComponent> out;
  const std::size_t D = d_;
  for (std::size_t t = 0; t < D; ++t)
    for (std::size_t b = 0; b < D; ++b)
      for (std::size_t c = 0; c < D; ++c)
        for (std::size_t dl = c + 1; dl < D; ++dl)
          if (same_block(t, b, n_)) out.push_back({"R", {t, b, c, dl}, R(t, b, c, dl)});
  for (std::size_t a = 0; a < D; ++a)
    for (std::size_t b = 0; b < D; ++b) out.push_back({"Ric", {a, b}, ricci(a, b)});
  out.push_back({"sR", {}, scalar_});
  for (std::size_t a = 0; a < D; ++a)
    for (std::size_t b = 0; b < D; ++b) out.push_back({"G", {a, b}, einstein(a, b)});
  return out;
}

std::vector<NamedComponent> metric_compatibility(const DConnection& conn, const DMetric& metric) {
  const std::size_t n = conn.n(), D = n + conn.m();
  const auto& d = conn.derivations();
  std::vector<NamedComponent> out;
  for (std::size_t c = 0; c < D; ++c) {
    for (std::size_t a = 0; a < D; ++a) {
      for (std::size_t b = a; b < D; ++b) {
        if (!same_block(a, b, n)) continue;
        ScalarField q = d.e(c, metric.block(a, b));
        for (std::size_t e = 0; e < D; ++e) {
          if (!same_block(e, a, n)) continue;
          q -= conn.gamma(e, a, c) * metric.block(e, b) + conn.gamma(e, b, c) * metric.block(a, e);
        }
        out.push_back({"Dg", {c, a, b}, q});
      }
    }
  }
  return out;
}

// ---- distortion ----

DistortionData distortion(const DMetric& metric, const DConnection& conn) {
  const std::size_t n = conn.n(), m = conn.m(), D = n + m;
  const auto& d = conn.derivations();
  const FieldMatrix& g = metric.g();
  const FieldMatrix& h = metric.h();
  FieldMatrix gi = inverse(g), hi = inverse(h);
  AnholonomyData W = anholonomy(d);
  const auto& N = metric.N();

  // K^c_dk = L^c_dk - e_d N^c_k
  std::vector<ScalarField> K(m * m * n);
  auto KK = [&](std::size_t c, std::size_t dd, std::size_t k) -> ScalarField& { return K[(c * m + dd) * n + k]; };
  for (std::size_t c = 0; c < m; ++c)
    for (std::size_t dd = 0; dd < m; ++dd)
      for (std::size_t k = 0; k < n; ++k) KK(c, dd, k) = conn.Lv(c, dd, k) - d.e(n + dd, N(c, k));

  Tensor3 Z(D);
  // Z^a_jk = -C^i_jb g_ik h^ab + 1/2 Omega^a_jk
  for (std::size_t a = 0; a < m; ++a) {
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t k = 0; k < n; ++k) {
        ScalarField s = 0.5 * W.Omega(a, j, k);
        for (std::size_t b = 0; b < m; ++b) {
          if (hi(a, b).is_zero()) continue;
          ScalarField t;
          for (std::size_t i = 0; i < n; ++i) t += conn.C(i, j, b) * g(i, k);
          s -= t * hi(a, b);
        }
        Z(n + a, j, k) = s;
      }
    }
  }
  // Z^i_bk and Z^i_kb share -1/2 Omega^c_jk h_cb g^ji and differ in the sign of
  // 1/2 g_jk g^ih C^j_hb.
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t b = 0; b < m; ++b) {
      for (std::size_t k = 0; k < n; ++k) {
        ScalarField om;
        for (std::size_t j = 0; j < n; ++j) {
          if (gi(j, i).is_zero()) continue;
          ScalarField t;
          for (std::size_t c = 0; c < m; ++c) t += W.Omega(c, j, k) * h(c, b);
          om += t * gi(j, i);
        }
        ScalarField gc;
        for (std::size_t j = 0; j < n; ++j) {
          ScalarField t;
          for (std::size_t hh = 0; hh < n; ++hh) t += gi(i, hh) * conn.C(j, hh, b);
          gc += g(j, k) * t;
        }
        ScalarField direct = conn.C(i, k, b);
        Z(i, n + b, k) = -0.5 * om + 0.5 * (direct + gc);
        Z(i, k, n + b) = -0.5 * om + 0.5 * (direct - gc);
      }
    }
  }
  // Z^a_bk = 1/2 (K^a_bk - h_cb h^ad K^c_dk), Z^a_jb = 1/2 (K^a_bj + h_cb h^ad K^c_dj)
  for (std::size_t a = 0; a < m; ++a) {
    for (std::size_t b = 0; b < m; ++b) {
      for (std::size_t k = 0; k < n; ++k) {
        ScalarField hk;
        for (std::size_t c = 0; c < m; ++c) {
          ScalarField t;
          for (std::size_t dd = 0; dd < m; ++dd) t += hi(a, dd) * KK(c, dd, k);
          hk += h(c, b) * t;
        }
        Z(n + a, n + b, k) = 0.5 * (KK(a, b, k) - hk);
        Z(n + a, k, n + b) = 0.5 * (KK(a, b, k) + hk);
      }
    }
  }
  // Z^i_ab = -1/2 g^ij (K^c_aj h_cb + K^c_bj h_ca)
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t a = 0; a < m; ++a) {
      for (std::size_t b = a; b < m; ++b) {
        ScalarField s;
        for (std::size_t j = 0; j < n; ++j) {
          ScalarField t;
          for (std::size_t c = 0; c < m; ++c) t += KK(c, a, j) * h(c, b) + KK(c, b, j) * h(c, a);
          s += gi(i, j) * t;
        }
        Z(i, n + a, n + b) = Z(i, n + b, n + a) = -0.5 * s;
      }
    }
  }

  Tensor3 lc(D);
  for (std::size_t t = 0; t < D; ++t)
    for (std::size_t b = 0; b < D; ++b)
      for (std::size_t c = 0; c < D; ++c) lc(t, b, c) = conn.gamma(t, b, c) + Z(t, b, c);
  return DistortionData(std::move(Z), std::move(lc));
}

// ---- LC constraints ----

std::vector<NamedComponent> lc_constraint_fields(const DMetric& metric, const DConnection& conn) {
  const std::size_t n = conn.n(), m = conn.m();
  const auto& d = conn.derivations();
  const auto& N = metric.N();
  AnholonomyData W = anholonomy(d);
  std::vector<NamedComponent> out;
  for (std::size_t c = 0; c < m; ++c)
    for (std::size_t a = 0; a < m; ++a)
      for (std::size_t j = 0; j < n; ++j)
        out.push_back({"L-eN", {n + c, n + a, j}, conn.Lv(c, a, j) - d.e(n + a, N(c, j))});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t b = 0; b < m; ++b) out.push_back({"C", {i, j, n + b}, conn.C(i, j, b)});
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t i = j + 1; i < n; ++i) out.push_back({"Omega", {n + a, j, i}, W.Omega(a, j, i)});
  return out;
}

double ConstraintReport::worst() const {
  double w = 0.0;
  for (const auto& e : entries) w = std::max(w, e.max_abs);
  return w;
}

ConstraintReport check_lc_constraints(const DMetric& metric, const DConnection& conn, const LatticeSpec& lattice) {
  auto comps = lc_constraint_fields(metric, conn);
  std::vector<ScalarField> fields;
  for (const auto& c : comps) fields.push_back(c.field);
  auto values = evaluate_on_points(fields, lattice_points(metric.chart().box(), lattice));
  ConstraintReport rep;
  for (const char* name : {"L-eN", "C", "Omega"}) rep.entries.push_back({name, 0.0});
  for (const auto& row : values) {
    for (std::size_t f = 0; f < comps.size(); ++f) {
      for (auto& e : rep.entries) {
        if (e.name != comps[f].family) continue;
        double v = std::abs(row[f]);
        // NaN must not pass as a small violation
        if (std::isnan(v) || v > e.max_abs) e.max_abs = std::isnan(v) ? INFINITY : v;
      }
    }
  }
  return rep;
}

ConstraintReport check_lc_constraints(const DMetric& metric, const DConnection& conn) {
  return check_lc_constraints(metric, conn, default_lattice(metric.chart(), conn.derivations().order()));
}

std::vector<FamilyStat> family_stats(const std::vector<NamedComponent>& comps,
                                     const std::vector<std::vector<double>>& points) {
  std::vector<FamilyStat> out;
  std::vector<std::size_t> slot(comps.size());
  std::vector<std::size_t> count;
  for (std::size_t f = 0; f < comps.size(); ++f) {
    auto it = std::find_if(out.begin(), out.end(), [&](const FamilyStat& s) { return s.name == comps[f].family; });
    if (it == out.end()) {
      out.push_back({comps[f].family, 0.0, 0.0});
      count.push_back(0);
      it = out.end() - 1;
    }
    slot[f] = static_cast<std::size_t>(it - out.begin());
  }
  std::vector<ScalarField> fields;
  for (const auto& c : comps) fields.push_back(c.field);
  auto values = evaluate_on_points(fields, points);
  for (const auto& row : values) {
    for (std::size_t f = 0; f < comps.size(); ++f) {
      double v = std::isnan(row[f]) ? INFINITY : std::abs(row[f]);
      auto& st = out[slot[f]];
      st.max_abs = std::max(st.max_abs, v);
      st.mean_abs += v;
      ++count[slot[f]];
    }
  }
  for (std::size_t s = 0; s < out.size(); ++s)
    if (count[s]) out[s].mean_abs /= static_cast<double>(count[s]);
  return out;
}

void write_component_dump(std::ostream& os, const std::vector<NamedComponent>& comps,
                          const std::vector<std::vector<double>>& points) {
  std::vector<ScalarField> fields;
  for (const auto& c : comps) fields.push_back(c.field);
  auto values = evaluate_on_points(fields, points);
  for (std::size_t f = 0; f < comps.size(); ++f) {
    std::string idx;
    for (std::size_t k = 0; k < comps[f].index.size(); ++k) {
      if (k) idx += ' ';
      idx += std::to_string(comps[f].index[k] + 1);
    }
    for (std::size_t p = 0; p < points.size(); ++p) {
      os << comps[f].family << ',' << idx << ',';
      for (std::size_t k = 0; k < points[p].size(); ++k) os << (k ? " " : "") << format_number(points[p][k]);
      os << ',' << format_number(values[p][f]) << '\n';
    }
  }
}

}  // namespace frango
