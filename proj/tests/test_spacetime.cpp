#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "seqwarp/spacetime.hpp"

using namespace seqwarp;

namespace {

SSSTSpec basic_ssst() {
  return {euclidean_factor("M1", {"x"}), euclidean_factor("M2", {"u"}), Expr::constant(1.0), parse("cosh(x)", {"x"}),
          "t", {-1.0, 1.0}};
}

GRWSpec exponential_grw() {
  return {"t", {-1.0, 1.0}, euclidean_factor("M2", {"u1", "u2"}), euclidean_factor("M3", {"v"}),
          parse("1+exp(t)", {"t"}), parse("1+exp(t)", {"t", "u1", "u2"})};
}

const IdentityReport& find(const std::vector<IdentityReport>& rs, const std::string& name) {
  for (const auto& r : rs)
    if (r.name == name) return r;
  throw std::out_of_range(name);
}

}  // namespace

TEST(Static, FlatProductIsRicciFlat) {
  SSSTSpec s{euclidean_factor("M1", {"x"}), euclidean_factor("M2", {"u"}), Expr::constant(1.0), Expr::constant(1.0),
             "t", {-1, 1}};
  const auto w = build_ssst(s);
  const auto b = curvature_at(flatten_to_chart(w), {0.2, 0.3, 0.4});
  EXPECT_EQ(max_abs(b.ricci.data()), 0.0);
}

TEST(Static, SignatureAtRandomPoints) {
  const auto w = build_ssst(basic_ssst());
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int k = 0; k < 20; ++k) {
    const auto p = split_point(w, {u(rng), u(rng), u(rng)});
    EXPECT_NO_THROW(check_spacetime_signature(w, p, 2));
    EXPECT_EQ(negative_eigenvalues(ambient_metric_at(w, p)), 1);
  }
}

TEST(Static, TimelikeRicciMatchesHLaplacianUpToOneSign) {
  const auto w = build_ssst(basic_ssst());
  const auto chart = flatten_to_chart(w);
  const int sigma = ssst_timelike_sign();
  EXPECT_TRUE(sigma == 1 || sigma == -1);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int k = 0; k < 20; ++k) {
    const double x = u(rng);
    const auto b = curvature_at(chart, {x, u(rng), u(rng)});
    const double h = std::cosh(x);
    EXPECT_NEAR(std::abs(b.ricci(2, 2)), std::abs(h * h), 1e-12);
    EXPECT_NEAR(b.ricci(2, 2), sigma * h * h, 1e-12);
  }
}

TEST(Static, TheoremCheckOnBasicExample) {
  const auto s = basic_ssst();
  const auto w = build_ssst(s);
  const auto p = split_point(w, {0.3, -0.2, 0.5});
  const auto b = curvature_at(flatten_to_chart(w), p.flat());
  const auto qe = fit_quasi_einstein(b.g, b.ricci, 1e-6);
  ASSERT_EQ(qe.verdict, Verdict::quasi_einstein);
  EXPECT_NEAR(qe.alpha, -1.0, 1e-12);
  EXPECT_NEAR(qe.beta, 1.0, 1e-12);
  const auto rs = ssst_theorem_check(s, std::nullopt, qe, p, 1e-7);
  for (const char* n : {"ssst.d1", "ssst.d2", "ssst.d3"}) EXPECT_TRUE(find(rs, n).pass) << n;
  EXPECT_EQ(find(rs, "ssst.i").status, "not applicable");
}

TEST(Static, RejectsLorentzianSpatialFactor) {
  auto s = basic_ssst();
  s.m1 = diagonal_factor("M1", {"x"}, {"-1"}, Signature::lorentzian);
  EXPECT_THROW(build_ssst(s), SignatureError);
}

TEST(RobertsonWalker, StaticCaseIsBlockProduct) {
  GRWSpec s{"t", {-1, 1}, diagonal_factor("M2", {"u"}, {"1"}),
            diagonal_factor("M3", {"th", "ph"}, {"1", "sin(th)^2"}), Expr::constant(1.0), Expr::constant(1.0)};
  const auto w = build_grw(s);
  const auto b = curvature_at(flatten_to_chart(w), {0.1, 0.2, 1.0, 0.3});
  EXPECT_NEAR(b.ricci(0, 0), 0.0, 1e-14);
  EXPECT_NEAR(b.ricci(2, 2), 1.0, 1e-13);
}

TEST(RobertsonWalker, TimelikeSignAgainstTwo) {
  GRWSpec s{"t", {-1, 1}, euclidean_factor("M2", {"u1", "u2"}), euclidean_factor("M3", {"v"}), parse("exp(t)", {"t"}),
            Expr::constant(1.0)};
  const auto w = build_grw(s);
  const int sigma = grw_timelike_sign();
  for (double t : {-0.5, 0.0, 0.7}) {
    const auto b = curvature_at(flatten_to_chart(w), {t, 0.0, 0.0, 0.0});
    EXPECT_NEAR(b.ricci(0, 0), sigma * 2.0, 1e-12);
    EXPECT_NO_THROW(check_spacetime_signature(w, split_point(w, {t, 0, 0, 0}), 0));
  }
}

TEST(RobertsonWalker, SphereFibreIsEinstein) {
  GRWSpec s{"t", {-1, 1}, euclidean_factor("M2", {"u"}), diagonal_factor("M3", {"th", "ph"}, {"1", "sin(th)^2"}),
            parse("exp(t)", {"t"}), Expr::constant(1.0)};
  const auto w = build_grw(s);
  const auto p = split_point(w, {0.2, 0.1, 1.2, 0.4});
  const auto c3 = curvature_at(w.m3(), p.p3);
  const auto f = fit_quasi_einstein(c3.g, c3.ricci, 1e-6);
  EXPECT_EQ(f.verdict, Verdict::einstein);
  EXPECT_NEAR(f.alpha, 1.0, 1e-12);
  EXPECT_LE(std::abs(f.beta), 1e-12);
}

TEST(RobertsonWalker, ExactlyOneBetaMinusAlphaVariantHolds) {
  const auto s = exponential_grw();
  const auto w = build_grw(s);
  const auto chart = flatten_to_chart(w);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int k = 0; k < 10; ++k) {
    const auto p = split_point(w, {u(rng), u(rng), u(rng), u(rng)});
    const auto b = curvature_at(chart, p.flat());
    const auto qe = fit_quasi_einstein(b.g, b.ricci, 1e-6);
    ASSERT_TRUE(qe.ok());
    const double e = std::exp(p.p1[0]), f = 1 + e;
    EXPECT_NEAR(qe.beta, -2 * e / (f * f), 1e-12);
    std::optional<QCCFit> qcc = check_quasi_constant_curvature(b.g, b.riemann, 1e-6);
    const auto rs = grw_theorem_check(s, qcc, qe, p, 1e-6);
    EXPECT_TRUE(find(rs, "grw.e1").pass);
    EXPECT_NE(find(rs, "grw.i.statement").pass, find(rs, "grw.i.proof").pass);
  }
}

TEST(RobertsonWalker, FMustDependOnTimeOnly) {
  auto s = exponential_grw();
  s.f = parse("1+u1^2", {"u1"});
  EXPECT_THROW(build_grw(s), std::invalid_argument);
}
