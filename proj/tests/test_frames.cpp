#include <gtest/gtest.h>

#include <cmath>

#include "frango/error.hpp"
#include "frango/frames.hpp"
#include "helpers.hpp"

using frango::Chart;
using frango::DMetric;
using frango::FieldMatrix;
using frango::FracOrder;
using frango::FracPoly;
using frango::NConnection;
using frango::ScalarField;
using testing_helpers::random_points;
using testing_helpers::u;
using testing_helpers::unit_chart;

namespace {

double max_abs_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) { return (a - b).cwiseAbs().maxCoeff(); }

// A nondegenerate polynomial d-metric on a 2+2 chart with nonzero N.
DMetric sample_metric(const Chart& c) {
  FieldMatrix g(2, 2), h(2, 2), N(2, 2);
  g(0, 0) = 2.0 + u(c, 0) * u(c, 2);
  g(0, 1) = 0.3 * u(c, 1);
  g(1, 1) = 1.5 + u(c, 3) * u(c, 3);
  h(0, 0) = 3.0 + u(c, 0);
  h(0, 1) = 0.2 * u(c, 2) * u(c, 1);
  h(1, 1) = 2.0 + u(c, 3);
  N(0, 0) = u(c, 1) * u(c, 3) + u(c, 0) * u(c, 0);
  N(0, 1) = u(c, 2) * u(c, 0);
  N(1, 0) = u(c, 2) * u(c, 2);
  N(1, 1) = u(c, 0) * u(c, 1) * u(c, 3);
  return DMetric(g, h, NConnection(c, N));
}

}  // namespace

TEST(Frames, ZeroConnectionGivesIdentityFrame) {
  auto c = unit_chart(2, 2);
  auto fc = frango::build_frames(NConnection::zero(c));
  std::vector<double> x{0.3, 0.4, 0.5, 0.6};
  EXPECT_EQ(max_abs_diff(fc.frame.evaluate(x), Eigen::MatrixXd::Identity(4, 4)), 0.0);
  EXPECT_EQ(max_abs_diff(fc.coframe.evaluate(x), Eigen::MatrixXd::Identity(4, 4)), 0.0);
}

TEST(Frames, ElongatedRowCarriesMinusN) {
  auto c = unit_chart(2, 2);
  FieldMatrix N(2, 2);
  N(0, 0) = ScalarField::poly(FracPoly::monomial(4, 1.0, {0, 0, 3, 0}), c.box().base());
  auto fc = frango::build_frames(NConnection(c, N));
  std::vector<double> x{0.3, 0.4, 0.5, 0.6};
  EXPECT_DOUBLE_EQ(fc.frame(0, 2)(x), -0.125);
  EXPECT_TRUE(fc.frame(0, 3).is_zero());
  EXPECT_TRUE(fc.frame(1, 2).is_zero());
}

TEST(Frames, FrameAndCoframeAreDual) {
  auto c = unit_chart(2, 2);
  auto m = sample_metric(c);
  auto fc = frango::build_frames(m);
  for (const auto& x : random_points(c, 20, 7)) {
    Eigen::MatrixXd f = fc.frame.evaluate(x), cf = fc.coframe.evaluate(x);
    EXPECT_LT(max_abs_diff(f * cf, Eigen::MatrixXd::Identity(4, 4)), 1e-10);
    EXPECT_LT(max_abs_diff(cf * f, Eigen::MatrixXd::Identity(4, 4)), 1e-10);
  }
}

TEST(Anholonomy, ZeroConnectionHasNoAnholonomy) {
  auto c = unit_chart(2, 2);
  auto W = frango::anholonomy(NConnection::zero(c), FracOrder(0.5));
  for (const auto& f : W.all_fields()) EXPECT_TRUE(f.is_zero());
}

TEST(Anholonomy, CurvatureOfLinearConnection) {
  auto c = unit_chart(2, 2);
  FieldMatrix N(2, 2);
  N(0, 0) = u(c, 1);  // N^3_1 = x^2
  auto W = frango::anholonomy(NConnection(c, N), FracOrder(1.0));
  std::vector<double> x{0.3, 0.4, 0.5, 0.6};
  EXPECT_DOUBLE_EQ(W.Omega(0, 1, 0)(x), 1.0);  // Omega^3_21
  EXPECT_DOUBLE_EQ(W.Omega(0, 0, 1)(x), -1.0);
  EXPECT_DOUBLE_EQ(W.W(2, 0, 1)(x), 1.0);  // W^3_12 = Omega^3_21
  EXPECT_DOUBLE_EQ(W.W(2, 1, 0)(x), -1.0);
}

TEST(Anholonomy, MixedBlockIsVerticalDerivative) {
  auto c = unit_chart(2, 2);
  FieldMatrix N(2, 2);
  N(0, 0) = u(c, 2);  // N^3_1 = y^3
  auto W = frango::anholonomy(NConnection(c, N), FracOrder(1.0));
  std::vector<double> x{0.3, 0.4, 0.5, 0.6};
  EXPECT_DOUBLE_EQ(W.W(2, 0, 2)(x), 1.0);
  EXPECT_DOUBLE_EQ(W.W(2, 2, 0)(x), -1.0);
}

TEST(Anholonomy, AntisymmetricInLowerPair) {
  auto c = unit_chart(2, 2);
  auto m = sample_metric(c);
  auto W = frango::anholonomy(m.N(), FracOrder(0.5));
  std::vector<double> x{0.3, 0.4, 0.5, 0.6};
  for (std::size_t g = 0; g < 4; ++g)
    for (std::size_t a = 0; a < 4; ++a)
      for (std::size_t b = 0; b < 4; ++b) EXPECT_EQ(W.W(g, a, b)(x), -W.W(g, b, a)(x));
}

TEST(Anholonomy, FractionalOrderUsesCaputoDerivations) {
  auto c = unit_chart(2, 2);
  FieldMatrix N(2, 2);
  N(0, 0) = u(c, 1);  // N^3_1 = x^2
  auto W = frango::anholonomy(NConnection(c, N), FracOrder(0.5));
  std::vector<double> x{0.3, 0.4, 0.5, 0.6};
  // e_2 (x^2) = (x^2)^{1/2} / Gamma(3/2)
  EXPECT_NEAR(W.Omega(0, 1, 0)(x), std::sqrt(0.4) / std::tgamma(1.5), 1e-13);
}

// [e_a, e_b]^mu = e_a^nu d_nu e_b^mu - e_b^nu d_nu e_a^mu by finite differences.
TEST(Anholonomy, CommutatorConsistency) {
  auto c = unit_chart(2, 2);
  auto m = sample_metric(c);
  auto fc = frango::build_frames(m);
  auto W = frango::anholonomy(m.N(), FracOrder(1.0));
  for (const auto& x : random_points(c, 8, 11)) {
    Eigen::MatrixXd E = fc.frame.evaluate(x);
    for (std::size_t a = 0; a < 4; ++a) {
      for (std::size_t b = 0; b < 4; ++b) {
        for (std::size_t mu = 0; mu < 4; ++mu) {
          double lie = 0.0;
          for (std::size_t nu = 0; nu < 4; ++nu) {
            auto Eb = [&](const std::vector<double>& p) { return fc.frame(b, mu)(p); };
            auto Ea = [&](const std::vector<double>& p) { return fc.frame(a, mu)(p); };
            lie += E(a, nu) * testing_helpers::central_diff(Eb, x, nu) -
                   E(b, nu) * testing_helpers::central_diff(Ea, x, nu);
          }
          double expect = 0.0;
          for (std::size_t g = 0; g < 4; ++g) expect += W.W(g, a, b)(x) * E(g, mu);
          EXPECT_NEAR(lie, expect, 1e-6) << a << b << mu;
        }
      }
    }
  }
}

TEST(Split, BlockDiagonalGivesZeroConnection) {
  auto c = unit_chart(2, 2);
  FieldMatrix full(4, 4);
  full(0, 0) = 1.0 + u(c, 0);
  full(1, 1) = 2.0;
  full(2, 2) = 3.0;
  full(3, 3) = 1.0 + u(c, 3);
  auto m = frango::split_offdiagonal(c, full);
  std::vector<double> x{0.3, 0.4, 0.5, 0.6};
  EXPECT_EQ(m.N().coefficients().evaluate(x).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_DOUBLE_EQ(m.g()(0, 0)(x), 1.3);
  EXPECT_DOUBLE_EQ(m.h()(1, 1)(x), 1.6);
}

TEST(Split, ConstantOffDiagonalEntry) {
  auto c = unit_chart(2, 2);
  FieldMatrix full = FieldMatrix::identity(4);
  full(0, 2) = 0.5;
  full(2, 0) = 0.5;
  auto m = frango::split_offdiagonal(c, full);
  std::vector<double> x{0.3, 0.4, 0.5, 0.6};
  EXPECT_DOUBLE_EQ(m.N()(0, 0)(x), 0.5);
  EXPECT_DOUBLE_EQ(m.g()(0, 0)(x), 0.75);
}

TEST(Split, AssembleThenSplitRoundTrips) {
  auto c = unit_chart(2, 2);
  auto m = sample_metric(c);
  auto back = frango::split_offdiagonal(c, frango::assemble(m));
  for (const auto& x : random_points(c, 10, 3)) {
    EXPECT_LT(max_abs_diff(back.g().evaluate(x), m.g().evaluate(x)), 1e-12);
    EXPECT_LT(max_abs_diff(back.h().evaluate(x), m.h().evaluate(x)), 1e-12);
    EXPECT_LT(max_abs_diff(back.N().coefficients().evaluate(x), m.N().coefficients().evaluate(x)), 1e-12);
  }
}

TEST(Split, RandomNondegenerateInputsRoundTrip) {
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    auto c = unit_chart(3, 2);
    FieldMatrix g(3, 3), h(2, 2), N(2, 3);
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = i; j < 3; ++j) g(i, j) = (i == j ? 4.0 : 0.0) + d(rng) * u(c, (i + j) % 5);
    for (std::size_t a = 0; a < 2; ++a)
      for (std::size_t b = a; b < 2; ++b) h(a, b) = (a == b ? -3.0 : 0.0) + d(rng) * u(c, a + 3);
    for (std::size_t a = 0; a < 2; ++a)
      for (std::size_t i = 0; i < 3; ++i) N(a, i) = d(rng) + d(rng) * u(c, i) * u(c, a + 3);
    DMetric m(g, h, NConnection(c, N));
    auto back = frango::split_offdiagonal(c, frango::assemble(m));
    for (const auto& x : random_points(c, 3, 100 + trial)) {
      EXPECT_LT(max_abs_diff(back.g().evaluate(x), m.g().evaluate(x)), 1e-12);
      EXPECT_LT(max_abs_diff(back.N().coefficients().evaluate(x), m.N().coefficients().evaluate(x)), 1e-12);
    }
  }
}

TEST(Split, SingularVerticalBlockIsDecompositionError) {
  auto c = unit_chart(2, 2);
  FieldMatrix full = FieldMatrix::identity(4);
  full(3, 3) = u(c, 3) - 0.5;  // vanishes inside the domain
  EXPECT_THROW(frango::split_offdiagonal(c, full), frango::DecompositionError);
  FieldMatrix zero = FieldMatrix::identity(4);
  zero(3, 3) = 0.0;
  EXPECT_THROW(frango::split_offdiagonal(c, zero), frango::DecompositionError);
}

TEST(Transform, IdentityLeavesMetricUnchanged) {
  auto c = unit_chart(2, 2);
  auto m = sample_metric(c);
  frango::FrameTransform T(c, FieldMatrix::identity(4));
  auto r = frango::transform_frames(m, T);
  EXPECT_TRUE(r.n_adapted);
  for (const auto& x : random_points(c, 5, 9)) {
    EXPECT_LT(max_abs_diff(r.metric.g().evaluate(x), m.g().evaluate(x)), 1e-12);
    EXPECT_LT(max_abs_diff(r.metric.N().coefficients().evaluate(x), m.N().coefficients().evaluate(x)), 1e-12);
  }
}

TEST(Transform, BlockOrthogonalConjugatesBlocks) {
  auto c = unit_chart(2, 2);
  auto m = sample_metric(c);
  const double a = 0.7, b = -1.1;
  Eigen::Matrix2d P, Q;
  P << std::cos(a), -std::sin(a), std::sin(a), std::cos(a);
  Q << std::cos(b), -std::sin(b), std::sin(b), std::cos(b);
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(4, 4);
  A.topLeftCorner(2, 2) = P;
  A.bottomRightCorner(2, 2) = Q;
  frango::FrameTransform T(c, frango::constant_matrix(A));
  auto r = frango::transform_frames(m, T);
  EXPECT_TRUE(r.n_adapted);
  for (const auto& x : random_points(c, 5, 13)) {
    Eigen::MatrixXd g = m.g().evaluate(x), h = m.h().evaluate(x), N = m.N().coefficients().evaluate(x);
    // du' = A du: g' = P^{-T} g P^{-1}, h' = Q^{-T} h Q^{-1}, N' = Q N P^{-1}
    Eigen::MatrixXd g2 = P.inverse().transpose() * g * P.inverse();
    Eigen::MatrixXd h2 = Q.inverse().transpose() * h * Q.inverse();
    Eigen::MatrixXd N2 = Q * N * P.inverse();
    EXPECT_LT(max_abs_diff(r.metric.g().evaluate(x), g2), 1e-12);
    EXPECT_LT(max_abs_diff(r.metric.h().evaluate(x), h2), 1e-12);
    EXPECT_LT(max_abs_diff(r.metric.N().coefficients().evaluate(x), N2), 1e-12);
  }
}

TEST(Transform, InverseTransformRestoresMetric) {
  auto c = unit_chart(2, 2);
  auto m = sample_metric(c);
  FieldMatrix A = FieldMatrix::identity(4);
  A(0, 1) = 0.3 * u(c, 2);
  A(2, 0) = u(c, 0);
  A(3, 3) = 2.0 + u(c, 1);
  A(0, 3) = 0.25;  // mixes dy into dx': not N-adapted
  frango::FrameTransform T(c, A);
  EXPECT_FALSE(T.n_adapted());
  auto there = frango::transform_frames(m, T);
  EXPECT_FALSE(there.n_adapted);
  auto back = frango::transform_frames(there.metric, T.inverted());
  for (const auto& x : random_points(c, 5, 17)) {
    EXPECT_LT(max_abs_diff(back.metric.g().evaluate(x), m.g().evaluate(x)), 1e-10);
    EXPECT_LT(max_abs_diff(back.metric.h().evaluate(x), m.h().evaluate(x)), 1e-10);
    EXPECT_LT(max_abs_diff(back.metric.N().coefficients().evaluate(x), m.N().coefficients().evaluate(x)), 1e-10);
  }
}

TEST(Transform, SingularTransformIsRejected) {
  auto c = unit_chart(2, 2);
  FieldMatrix A = FieldMatrix::identity(4);
  A(1, 1) = u(c, 1) - 0.5;
  EXPECT_THROW(frango::FrameTransform(c, A), frango::SingularTransformError);
  FieldMatrix Z = FieldMatrix::identity(4);
  Z(2, 2) = 0.0;
  EXPECT_THROW(frango::FrameTransform(c, Z), frango::SingularTransformError);
}

TEST(DMetricTest, AsymmetricInputIsRejected) {
  auto c = unit_chart(2, 2);
  FieldMatrix g = FieldMatrix::identity(2), h = FieldMatrix::identity(2);
  g(0, 1) = u(c, 0);
  g(1, 0) = u(c, 1);
  EXPECT_THROW(DMetric(g, h, NConnection::zero(c)), frango::DomainError);
}

TEST(DMetricTest, LoneOffDiagonalEntryIsSymmetrized) {
  auto c = unit_chart(2, 2);
  FieldMatrix g = FieldMatrix::identity(2), h = FieldMatrix::identity(2);
  g(1, 0) = 0.25;
  DMetric m(g, h, NConnection::zero(c));
  EXPECT_EQ(m.g()(0, 1)({0.1, 0.1, 0.1, 0.1}), 0.25);
}

TEST(DMetricTest, SignatureAtCenter) {
  auto c = unit_chart(2, 2);
  FieldMatrix g = FieldMatrix::identity(2), h = FieldMatrix::identity(2);
  h(1, 1) = -1.0;
  DMetric m(g, h, NConnection::zero(c));
  EXPECT_EQ(m.signature().g, (std::vector<int>{1, 1}));
  EXPECT_EQ(m.signature().h, (std::vector<int>{-1, 1}));
}

TEST(DMetricTest, DegenerateBlockIsDetected) {
  auto c = unit_chart(2, 2);
  FieldMatrix g = FieldMatrix::identity(2), h = FieldMatrix::identity(2);
  g(0, 0) = u(c, 0);  // zero on the base face
  DMetric m(g, h, NConnection::zero(c));
  EXPECT_THROW(frango::check_nondegenerate(m, frango::default_lattice(c, FracOrder(1.0))), frango::InversionError);
  // dropping the base nodes (alpha < 1) keeps the lattice away from x^1 = 0
  EXPECT_NO_THROW(frango::check_nondegenerate(m, frango::default_lattice(c, FracOrder(0.5))));
}

TEST(DMetricText, PolynomialRoundTrip) {
  auto c = unit_chart(2, 2);
  auto m = sample_metric(c);
  std::string text = frango::dmetric_to_text(m, FracOrder(0.5));
  auto back = frango::parse_dmetric(text);
  EXPECT_EQ(back.order.value(), 0.5);
  EXPECT_EQ(frango::dmetric_to_text(back.metric, back.order), text);
  for (const auto& x : random_points(c, 5, 21)) {
    EXPECT_LT(max_abs_diff(back.metric.g().evaluate(x), m.g().evaluate(x)), 1e-14);
    EXPECT_LT(max_abs_diff(back.metric.N().coefficients().evaluate(x), m.N().coefficients().evaluate(x)), 1e-14);
  }
}

TEST(DMetricText, GridComponent) {
  std::string text =
      "# sample\n"
      "dmetric 2 1\n"
      "alpha 1\n"
      "domain 0 1 0 1 0 2\n"
      "base 0 0 0\n"
      "component g 1 1 poly\n"
      "1 0 0 0\n"
      "end\n"
      "component g 2 2 poly\n"
      "2 0 0 0\n"
      "end\n"
      "component h 3 3 grid\n"
      "axis 0 1\n"
      "axis 0 1\n"
      "axis 0 1 2\n"
      "values 1 1 1 1 1 1\n"
      "2 2 2 2 2 2\n"
      "end\n"
      "component N 3 1 poly\n"
      "0.5 0 1 0\n"
      "end\n";
  auto f = frango::parse_dmetric(text);
  EXPECT_EQ(f.metric.n(), 2u);
  EXPECT_EQ(f.metric.m(), 1u);
  EXPECT_NEAR(f.metric.h()(0, 0)({0.9, 0.5, 1.0}), 1.9, 1e-12);  // values vary along x^1 only
  EXPECT_DOUBLE_EQ(f.metric.N()(0, 0)({0.1, 0.5, 1.0}), 0.25);
  auto again = frango::parse_dmetric(frango::dmetric_to_text(f.metric, f.order));
  EXPECT_DOUBLE_EQ(again.metric.h()(0, 0)({0.2, 0.7, 1.3}), f.metric.h()(0, 0)({0.2, 0.7, 1.3}));
}

TEST(DMetricText, MalformedInputIsParseError) {
  EXPECT_THROW(frango::parse_dmetric("dmetric 2 2\nalpha 0.5\n"), frango::ParseError);
  EXPECT_THROW(frango::parse_dmetric("dmetric 1 1\nalpha 1\ndomain 0 1 0 1\ncomponent g 1 1 poly\n1 0 0\n"),
               frango::ParseError);
  EXPECT_THROW(frango::parse_dmetric("dmetric 1 1\nalpha 1\ndomain 0 1 0 1\ncomponent q 1 1 poly\nend\n"),
               frango::ParseError);
  EXPECT_THROW(frango::parse_dmetric("dmetric 1 1\nalpha 1\ndomain 0 1 0 1\nbase 0.5 0\n"), frango::ParseError);
}
