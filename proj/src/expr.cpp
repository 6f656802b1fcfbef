#include "frango/expr.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <numbers>

#include "frango/error.hpp"

namespace frango {

namespace {

class Parser {
 public:
  Parser(std::string_view s, const std::vector<std::string>& names, const std::vector<double>& base)
      : s_(s), names_(names), base_(base) {}

  ScalarField parse() {
    auto f = sum();
    skip();
    if (pos_ != s_.size()) fail("unexpected '" + std::string(1, s_[pos_]) + "'");
    return f;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError("expression '" + std::string(s_) + "', column " + std::to_string(pos_ + 1) + ": " + what);
  }

  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  bool eat(char c) {
    skip();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  ScalarField sum() {
    auto f = product();
    for (;;) {
      if (eat('+')) f = f + product();
      else if (eat('-')) f = f - product();
      else return f;
    }
  }

  ScalarField product() {
    auto f = unary();
    for (;;) {
      if (eat('*')) f = f * unary();
      else if (eat('/')) f = f / unary();
      else return f;
    }
  }

  ScalarField unary() {
    if (eat('-')) return -unary();
    if (eat('+')) return unary();
    return power();
  }

  ScalarField power() {
    auto b = atom();
    if (!eat('^')) return b;
    const std::size_t at = pos_;
    auto e = unary();  // right associative
    auto c = e.constant_value();
    if (!c) {
      pos_ = at;
      fail("exponent must be a constant");
    }
    return raise(b, *c);
  }

  static ScalarField raise(const ScalarField& b, double p) {
    if (p >= 0 && p == std::floor(p) && p <= 64) {
      ScalarField out = 1.0, sq = b;
      for (auto k = static_cast<unsigned>(p); k; k >>= 1) {
        if (k & 1u) out = out * sq;
        if (k > 1) sq = sq * sq;
      }
      return out;
    }
    return pow(b, p);
  }

  std::string name() {
    skip();
    const std::size_t start = pos_;
    while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) ++pos_;
    return std::string(s_.substr(start, pos_ - start));
  }

  std::size_t axis_of(const std::string& id) const {
    for (std::size_t k = 0; k < names_.size(); ++k)
      if (names_[k] == id) return k;
    return names_.size();
  }

  ScalarField atom() {
    skip();
    if (pos_ >= s_.size()) fail("unexpected end");
    const char c = s_[pos_];
    if (c == '(') {
      ++pos_;
      auto f = sum();
      if (!eat(')')) fail("missing ')'");
      return f;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(s_.data() + pos_, s_.data() + s_.size(), v);
      if (ec != std::errc()) fail("bad number");
      pos_ = static_cast<std::size_t>(ptr - s_.data());
      return v;
    }
    if (!std::isalpha(static_cast<unsigned char>(c))) fail("unexpected '" + std::string(1, c) + "'");
    const std::size_t at = pos_;
    const std::string id = name();
    if (id == "pi") return std::numbers::pi;
    if (const auto k = axis_of(id); k < names_.size()) return ScalarField::coordinate(base_, k);
    if (!eat('(')) {
      pos_ = at;
      fail("unknown name '" + id + "'");
    }
    if (id == "mono") {
      const std::string var = name();
      const auto k = axis_of(var);
      if (k == names_.size()) fail("mono needs a coordinate name, got '" + var + "'");
      if (!eat(',')) fail("expected ',' in mono");
      auto p = sum().constant_value();
      if (!p || *p < 0) fail("mono exponent must be a non-negative constant");
      if (!eat(')')) fail("missing ')'");
      FracPoly::Exponents e(names_.size(), 0.0);
      e[k] = *p;
      return ScalarField::poly(FracPoly::monomial(names_.size(), 1.0, e), base_);
    }
    auto arg = sum();
    if (!eat(')')) fail("missing ')'");
    if (id == "exp") return exp(arg);
    if (id == "log") return log(arg);
    if (id == "sin") return sin(arg);
    if (id == "cos") return cos(arg);
    if (id == "sqrt") return sqrt(arg);
    if (id == "abs") return abs(arg);
    pos_ = at;
    fail("unknown function '" + id + "'");
  }

  std::string_view s_;
  const std::vector<std::string>& names_;
  const std::vector<double>& base_;
  std::size_t pos_ = 0;
};

}  // namespace

ScalarField parse_expression(std::string_view text, const std::vector<std::string>& names,
                             const std::vector<double>& base) {
  if (names.size() != base.size()) throw ParseError("expression names and base differ in length");
  return Parser(text, names, base).parse();
}

}  // namespace frango
