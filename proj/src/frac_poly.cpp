#include "frango/frac_poly.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

#include "frango/error.hpp"

namespace frango {

double snap_exponent(double p) {
  double r = std::round(p);
  if (std::abs(p - r) < 1e-12) return r == 0.0 ? 0.0 : r;
  return p;
}

std::string format_exact(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace {

// Integer powers by multiplication keep FracPoly evaluation exact for small degrees.
double shifted_pow(double s, double p) {
  if (p == 0.0) return 1.0;
  if (p == 1.0) return s;
  if (p == 2.0) return s * s;
  if (p == 3.0) return s * s * s;
  if (p == 4.0) {
    double s2 = s * s;
    return s2 * s2;
  }
  return std::pow(s, p);
}

}  // namespace

FracPoly FracPoly::constant(std::size_t dim, double c) {
  FracPoly p(dim);
  p.add_term(c, Exponents(dim, 0.0));
  return p;
}

FracPoly FracPoly::monomial(std::size_t dim, double coeff, Exponents exps) {
  FracPoly p(dim);
  p.add_term(coeff, std::move(exps));
  return p;
}

FracPoly FracPoly::shifted(std::size_t dim, std::size_t axis, double power) {
  Exponents e(dim, 0.0);
  if (axis >= dim) throw DomainError("axis out of range in FracPoly::shifted");
  e[axis] = power;
  return monomial(dim, 1.0, std::move(e));
}

void FracPoly::check_dim(const Exponents& exps) const {
  if (exps.size() != dim_) {
    throw DomainError("exponent tuple has " + std::to_string(exps.size()) +
                      " entries, polynomial dimension is " + std::to_string(dim_));
  }
}

void FracPoly::add_term(double coeff, Exponents exps) {
  check_dim(exps);
  for (double& p : exps) {
    if (!std::isfinite(p) || p < 0.0) {
      throw CarrierError("FracPoly exponents must be finite and nonnegative");
    }
    p = snap_exponent(p);
  }
  if (!std::isfinite(coeff)) throw DomainError("FracPoly coefficient is not finite");
  if (coeff == 0.0) return;
  auto it = terms_.find(exps);
  if (it == terms_.end()) {
    terms_.emplace(std::move(exps), coeff);
    return;
  }
  it->second += coeff;
  if (it->second == 0.0) terms_.erase(it);
}

bool FracPoly::is_constant() const {
  for (const auto& [e, c] : terms_) {
    for (double p : e)
      if (p != 0.0) return false;
  }
  return true;
}

double FracPoly::constant_term() const {
  auto it = terms_.find(Exponents(dim_, 0.0));
  return it == terms_.end() ? 0.0 : it->second;
}

bool FracPoly::depends_on(std::size_t axis) const {
  for (const auto& [e, c] : terms_)
    if (e[axis] != 0.0) return true;
  return false;
}

double FracPoly::max_exponent(std::size_t axis) const {
  double m = 0.0;
  for (const auto& [e, c] : terms_) m = std::max(m, e[axis]);
  return m;
}

double FracPoly::evaluate_shifted(std::span<const double> s) const {
  double sum = 0.0;
  for (const auto& [e, c] : terms_) {
    double v = c;
    for (std::size_t k = 0; k < dim_; ++k) {
      if (e[k] != 0.0) v *= shifted_pow(s[k], e[k]);
    }
    sum += v;
  }
  return sum;
}

double FracPoly::evaluate(std::span<const double> x, std::span<const double> base) const {
  std::vector<double> s(dim_);
  for (std::size_t k = 0; k < dim_; ++k) s[k] = x[k] - base[k];
  return evaluate_shifted(s);
}

FracPoly FracPoly::caputo_left(std::size_t axis, double order) const {
  if (axis >= dim_) throw DomainError("axis out of range in FracPoly::caputo_left");
  FracPoly out(dim_);
  for (const auto& [e, c] : terms_) {
    double p = e[axis];
    if (p == 0.0) continue;
    double q = snap_exponent(p - order);
    if (q < 0.0) {
      std::ostringstream os;
      os << "Caputo derivative of order " << order << " maps exponent " << p
         << " to a negative exponent (outside the FracPoly carrier)";
      throw CarrierError(os.str());
    }
    Exponents f = e;
    f[axis] = q;
    double factor = order == 1.0 ? p : std::tgamma(p + 1.0) / std::tgamma(p + 1.0 - order);
    out.add_term(c * factor, std::move(f));
  }
  return out;
}

FracPoly FracPoly::rl_integral(std::size_t axis, double beta) const {
  if (axis >= dim_) throw DomainError("axis out of range in FracPoly::rl_integral");
  if (!(beta > 0.0)) throw DomainError("integral order must be positive");
  FracPoly out(dim_);
  for (const auto& [e, c] : terms_) {
    double p = e[axis];
    Exponents f = e;
    f[axis] = p + beta;
    out.add_term(c * std::tgamma(p + 1.0) / std::tgamma(p + 1.0 + beta), std::move(f));
  }
  return out;
}

FracPoly FracPoly::at_base(std::size_t axis) const {
  FracPoly out(dim_);
  for (const auto& [e, c] : terms_) {
    if (e[axis] != 0.0) continue;
    out.add_term(c, e);
  }
  return out;
}

FracPoly FracPoly::operator-() const {
  FracPoly out = *this;
  for (auto& [e, c] : out.terms_) c = -c;
  return out;
}

FracPoly& FracPoly::operator+=(const FracPoly& o) {
  if (o.dim_ != dim_) throw DomainError("FracPoly dimension mismatch");
  for (const auto& [e, c] : o.terms_) add_term(c, e);
  return *this;
}

FracPoly& FracPoly::operator-=(const FracPoly& o) {
  if (o.dim_ != dim_) throw DomainError("FracPoly dimension mismatch");
  for (const auto& [e, c] : o.terms_) add_term(-c, e);
  return *this;
}

FracPoly& FracPoly::operator*=(double s) {
  if (s == 0.0) {
    terms_.clear();
    return *this;
  }
  for (auto& [e, c] : terms_) c *= s;
  return *this;
}

FracPoly operator*(const FracPoly& a, const FracPoly& b) {
  if (a.dim_ != b.dim_) throw DomainError("FracPoly dimension mismatch");
  FracPoly out(a.dim_);
  for (const auto& [ea, ca] : a.terms_) {
    for (const auto& [eb, cb] : b.terms_) {
      FracPoly::Exponents e(a.dim_);
      for (std::size_t k = 0; k < a.dim_; ++k) e[k] = ea[k] + eb[k];
      out.add_term(ca * cb, std::move(e));
    }
  }
  return out;
}

std::string FracPoly::to_text() const {
  std::string s;
  for (const auto& [e, c] : terms_) {
    s += format_exact(c);
    for (double p : e) {
      s += ' ';
      s += format_exact(p);
    }
    s += '\n';
  }
  return s;
}

FracPoly FracPoly::parse(std::string_view text, std::size_t dim) {
  FracPoly out(dim);
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    std::vector<double> nums;
    std::size_t i = 0;
    while (i < line.size()) {
      while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
      if (i >= line.size()) break;
      std::size_t j = i;
      while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
      double v = 0.0;
      auto res = std::from_chars(line.data() + i, line.data() + j, v);
      if (res.ec != std::errc() || res.ptr != line.data() + j) {
        throw ParseError("FracPoly line " + std::to_string(line_no) + ": bad number '" +
                         std::string(line.substr(i, j - i)) + "'");
      }
      nums.push_back(v);
      i = j;
    }
    if (nums.empty()) continue;
    if (nums.size() != dim + 1) {
      throw ParseError("FracPoly line " + std::to_string(line_no) + ": expected " +
                       std::to_string(dim + 1) + " numbers, got " + std::to_string(nums.size()));
    }
    out.add_term(nums[0], Exponents(nums.begin() + 1, nums.end()));
  }
  return out;
}

}  // namespace frango
