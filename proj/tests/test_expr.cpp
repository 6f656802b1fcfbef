#include <cmath>

#include <gtest/gtest.h>

#include "frango/error.hpp"
#include "frango/expr.hpp"

using frango::parse_expression;

namespace {

const std::vector<std::string> kNames = {"x", "y"};
const std::vector<double> kBase = {0.0, 0.5};

double at(const std::string& text, double x, double y) { return parse_expression(text, kNames, kBase)({x, y}); }

}  // namespace

TEST(Expression, Arithmetic) {
  EXPECT_DOUBLE_EQ(at("1 + 2*3 - 4/8", 0, 0), 6.5);
  EXPECT_DOUBLE_EQ(at("-(x - y)^2", 2, 0.5), -2.25);
  EXPECT_DOUBLE_EQ(at("2^3^2", 0, 0), 512.0);  // right associative
  EXPECT_DOUBLE_EQ(at("-2^2", 0, 0), -4.0);
  EXPECT_DOUBLE_EQ(at("1e-3*x", 2, 0), 2e-3);
}

TEST(Expression, Functions) {
  EXPECT_NEAR(at("exp(x) + log(y) + sin(pi/2) + cos(0) + sqrt(4) + abs(-3)", 1, 2),
              std::exp(1.0) + std::log(2.0) + 7.0, 1e-14);
  EXPECT_NEAR(at("x^0.5", 2, 0), std::sqrt(2.0), 1e-15);
}

TEST(Expression, IntegerPowersStayPolynomial) {
  auto f = parse_expression("x^2*y + 3*x - 1", kNames, kBase);
  ASSERT_NE(f.as_poly(), nullptr);
  EXPECT_DOUBLE_EQ(f({2, 3}), 4 * 3 + 6 - 1);
}

TEST(Expression, MonoIsShiftedMonomial) {
  auto f = parse_expression("mono(y, 0.5)", kNames, kBase);
  ASSERT_NE(f.as_poly(), nullptr);
  EXPECT_NEAR(f({0, 1.5}), 1.0, 1e-15);
  EXPECT_NEAR(f({0, 2.5}), std::sqrt(2.0), 1e-15);
}

TEST(Expression, ErrorsNameTheColumn) {
  auto column_of = [](const std::string& text) {
    try {
      parse_expression(text, kNames, kBase);
    } catch (const frango::ParseError& e) {
      return std::string(e.what());
    }
    return std::string("no error");
  };
  EXPECT_NE(column_of("x + z").find("column 5"), std::string::npos);
  EXPECT_NE(column_of("x ^ y").find("constant"), std::string::npos);
  EXPECT_NE(column_of("(x + 1").find("')'"), std::string::npos);
  EXPECT_NE(column_of("foo(x)").find("unknown function"), std::string::npos);
  EXPECT_NE(column_of("x $").find("column 3"), std::string::npos);
  EXPECT_NE(column_of("").find("unexpected end"), std::string::npos);
}
