#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "seqwarp/classify.hpp"

using namespace seqwarp;

namespace {

Matrix<double> from(const Eigen::MatrixXd& m) {
  Matrix<double> out(m.rows(), m.cols());
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) out(i, j) = m(i, j);
  return out;
}

struct Planted {
  Matrix<double> g, ric;
  double alpha, beta;
  std::vector<double> U;
};

// Random SPD metric, random unit U, ric = alpha g + beta A (x) A.
Planted plant(std::mt19937_64& rng, std::size_t n, bool einstein = false) {
  std::normal_distribution<double> nd;
  std::uniform_real_distribution<double> ud(0.5, 2.0), sd(0, 1);
  Eigen::MatrixXd B(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) B(i, j) = nd(rng);
  Eigen::MatrixXd g = B * B.transpose() + static_cast<double>(n) * Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd U(n);
  for (std::size_t i = 0; i < n; ++i) U(i) = nd(rng);
  U /= std::sqrt(U.dot(g * U));
  const Eigen::VectorXd A = g * U;
  Planted p;
  p.alpha = (sd(rng) < 0.5 ? -1 : 1) * ud(rng);
  p.beta = einstein ? 0.0 : (sd(rng) < 0.5 ? -1 : 1) * ud(rng);
  p.g = from(g);
  p.ric = from(p.alpha * g + p.beta * A * A.transpose());
  p.U.assign(U.data(), U.data() + n);
  return p;
}

Tensor4<double> planted_qcc(const Matrix<double>& g, const std::vector<double>& A, double a, double b) {
  return qcc_tensor(g, A, a, b);
}

}  // namespace

TEST(QEFit, PlantedIdentityExample) {
  Matrix<double> g = Matrix<double>::identity(3), ric = Matrix<double>::identity(3);
  for (std::size_t i = 0; i < 3; ++i) ric(i, i) = 2.0;
  ric(0, 0) += 3.0;
  const auto f = fit_quasi_einstein(g, ric, 1e-6);
  EXPECT_EQ(f.verdict, Verdict::quasi_einstein);
  EXPECT_NEAR(f.alpha, 2.0, 1e-12);
  EXPECT_NEAR(f.beta, 3.0, 1e-12);
  EXPECT_NEAR(std::abs(f.U[0]), 1.0, 1e-12);
  EXPECT_NEAR(f.U[1], 0.0, 1e-12);
  EXPECT_LE(f.residual, 1e-12);
}

TEST(QEFit, EinsteinInput) {
  Matrix<double> g = Matrix<double>::identity(2);
  const auto f = fit_quasi_einstein(g, g, 1e-6);
  EXPECT_EQ(f.verdict, Verdict::einstein);
  EXPECT_NEAR(f.alpha, 1.0, 1e-14);
  EXPECT_EQ(f.beta, 0.0);
}

TEST(QEFit, TwoGroupsOfTwoIsNeither) {
  Matrix<double> g = Matrix<double>::identity(4), ric(4, 4);
  ric(0, 0) = ric(1, 1) = 1.0;
  ric(2, 2) = ric(3, 3) = 3.0;
  EXPECT_EQ(fit_quasi_einstein(g, ric, 1e-6).verdict, Verdict::neither);
}

TEST(QEFit, PlantedRoundTripInDimensionsThreeToSix) {
  std::mt19937_64 rng(2024);
  for (int k = 0; k < 200; ++k) {
    const std::size_t n = 3 + static_cast<std::size_t>(k % 4);
    const auto p = plant(rng, n);
    const auto f = fit_quasi_einstein(p.g, p.ric, 1e-6);
    ASSERT_EQ(f.verdict, Verdict::quasi_einstein);
    EXPECT_NEAR(f.alpha, p.alpha, 1e-8);
    EXPECT_NEAR(f.beta, p.beta, 1e-8);
    const double s = f.U[0] * p.U[0] >= 0 ? 1.0 : -1.0;
    for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(f.U[i], s * p.U[i], 1e-8);
  }
}

TEST(QEFit, PlantedEinsteinHasNoBetaPart) {
  std::mt19937_64 rng(99);
  for (int k = 0; k < 50; ++k) {
    const auto p = plant(rng, 3 + static_cast<std::size_t>(k % 4), true);
    const auto f = fit_quasi_einstein(p.g, p.ric, 1e-6);
    EXPECT_EQ(f.verdict, Verdict::einstein);
    EXPECT_LE(std::abs(f.beta), 1e-8);
    EXPECT_NEAR(f.alpha, p.alpha, 1e-10);
  }
}

TEST(QEFit, LorentzianMetricWithTimelikeU) {
  Matrix<double> g = Matrix<double>::identity(3);
  g(0, 0) = -1.0;
  Matrix<double> ric(3, 3);
  for (std::size_t i = 0; i < 3; ++i) ric(i, i) = 0.5 * g(i, i);
  ric(0, 0) += 2.0;  // beta A A with A = -dt, U = d_t
  const auto f = fit_quasi_einstein(g, ric, 1e-6);
  EXPECT_EQ(f.verdict, Verdict::quasi_einstein);
  EXPECT_NEAR(f.alpha, 0.5, 1e-12);
  EXPECT_NEAR(f.beta, 2.0, 1e-12);
  EXPECT_EQ(f.causal, -1);
}

TEST(QCC, SphereIsConstantCurvature) {
  const auto b = curvature_at(diagonal_factor("S2", {"th", "ph"}, {"1", "sin(th)^2"}), {1.0, 0.3});
  const auto q = check_quasi_constant_curvature(b.g, b.riemann, 1e-9);
  EXPECT_TRUE(q.pass);
  EXPECT_NEAR(q.a, 1.0, 1e-12);
  EXPECT_NEAR(q.b, 0.0, 1e-12);
  EXPECT_LE(q.residual, 1e-9);
}

TEST(QCC, FlatSpace) {
  const Matrix<double> g = Matrix<double>::identity(3);
  const auto q = check_quasi_constant_curvature(g, Tensor4<double>(3), 1e-9);
  EXPECT_TRUE(q.pass);
  EXPECT_EQ(q.a, 0.0);
  EXPECT_EQ(q.b, 0.0);
}

TEST(QCC, PlantedRecovered) {
  const Matrix<double> g = Matrix<double>::identity(4);
  const std::vector<double> A{1, 0, 0, 0};
  const auto q = check_quasi_constant_curvature(g, planted_qcc(g, A, 2.0, 0.5), 1e-9);
  EXPECT_TRUE(q.pass);
  EXPECT_NEAR(q.a, 2.0, 1e-10);
  EXPECT_NEAR(q.b, 0.5, 1e-10);
  EXPECT_NEAR(std::abs(q.A[0]), 1.0, 1e-10);
  for (std::size_t i = 1; i < 4; ++i) EXPECT_NEAR(q.A[i], 0.0, 1e-10);
}

TEST(QCC, PlantedTensorHasCurvatureSymmetries) {
  std::mt19937_64 rng(5);
  const auto p = plant(rng, 4);
  std::vector<double> A(4, 0.0);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) A[i] += p.g(i, j) * p.U[j];
  EXPECT_LT(curvature_symmetry_defect(qcc_tensor(p.g, A, 1.3, -0.7)), 1e-13);
}

TEST(QCC, NonCurvatureTensorIsRejected) {
  const Matrix<double> g = Matrix<double>::identity(3);
  Tensor4<double> R(3);
  R(0, 1, 0, 1) = 1.0;  // missing its antisymmetric partners
  EXPECT_THROW(check_quasi_constant_curvature(g, R, 1e-9), FitError);
}

TEST(QCC, ImpliesQuasiEinsteinOnPlantedInstances) {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> ud(0.3, 2.0);
  for (int k = 0; k < 100; ++k) {
    const std::size_t n = 3 + static_cast<std::size_t>(k % 4);
    const auto p = plant(rng, n);
    std::vector<double> A(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) A[i] += p.g(i, j) * p.U[j];
    const double a = ud(rng), b = (k % 2 ? -1 : 1) * ud(rng);
    const auto q = check_quasi_constant_curvature(p.g, qcc_tensor(p.g, A, a, b), 1e-6);
    ASSERT_TRUE(q.pass);
    EXPECT_TRUE(fit_quasi_einstein(p.g, ricci_contraction(p.g, qcc_tensor(p.g, A, a, b)), 1e-6).ok());
    EXPECT_NEAR(q.a, a, 1e-8);
    EXPECT_NEAR(q.b, b, 1e-8);
  }
}

TEST(IdentityReport, StatusTransitions) {
  IdentityReport r("x", 1e-6);
  r.add(1e-8);
  EXPECT_TRUE(r.pass);
  EXPECT_EQ(r.status, "pass");
  r.add(1e-3);
  EXPECT_FALSE(r.pass);
  EXPECT_EQ(r.status, "fail");
  IdentityReport info("y", 1e-6, true);
  info.add(1.0);
  EXPECT_EQ(info.status, "not satisfied");
  IdentityReport nan("z", 1e-6);
  nan.add(std::nan(""));
  EXPECT_FALSE(nan.pass);
}

namespace {

SequentialWarpedProduct planted_product() {
  return {euclidean_factor("M1", {"x1"}), euclidean_factor("M2", {"u1"}), euclidean_factor("M3", {"v1"}),
          parse("cosh(x1)", {"x1"}), parse("cosh(x1)", {"x1", "u1"})};
}

}  // namespace

TEST(Proposition1, PlantedProductFitFeedsBack) {
  const auto w = planted_product();
  const auto chart = flatten_to_chart(w);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int k = 0; k < 20; ++k) {
    const Point p{u(rng), u(rng), u(rng)};
    const auto b = curvature_at(chart, p);
    const auto f = fit_quasi_einstein(b.g, b.ricci, 1e-6);
    ASSERT_EQ(f.verdict, Verdict::quasi_einstein);
    const double t = std::tanh(p[0]), c = std::cosh(p[0]);
    EXPECT_NEAR(f.alpha, -(1 + t * t), 1e-10);
    EXPECT_NEAR(f.beta, -1 / (c * c), 1e-10);
    const auto reps = proposition1_residuals(w, split_point(w, p), {f.alpha, f.beta, split_vector(w, f.U)}, 1e-6);
    for (const auto& r : reps) EXPECT_LE(r.max_abs_residual, 1e-10) << r.name;
  }
}

TEST(Proposition1, TrivialProductAllZero) {
  SequentialWarpedProduct w(euclidean_factor("M1", {"x"}), euclidean_factor("M2", {"u"}), euclidean_factor("M3", {"v"}),
                            parse("1", {}), parse("1", {}));
  const auto reps = proposition1_residuals(w, split_point(w, {0.1, 0.2, 0.3}), {0, 0, split_vector(w, {0, 0, 0})}, 1e-6);
  for (const auto& r : reps) EXPECT_EQ(r.max_abs_residual, 0.0);
}

TEST(Corollary, PredictedScalarsMatchFactorCharts) {
  const auto w = planted_product();
  const auto chart = flatten_to_chart(w);
  const Point p{0.4, -0.2, 0.7};
  const auto b = curvature_at(chart, p);
  const auto f = fit_quasi_einstein(b.g, b.ricci, 1e-6);
  const auto direct = factor_scalars_closed(w, split_point(w, p));
  const auto pred = factor_scalars_closed(w, split_point(w, p), QEParameters{f.alpha, f.beta, split_vector(w, f.U)});
  EXPECT_NEAR(pred.scal1, direct.scal1, 1e-10);
  EXPECT_NEAR(pred.scal2, direct.scal2, 1e-10);
  EXPECT_NEAR(pred.scal3, direct.scal3, 1e-10);
}

TEST(TorusAverage, SineOnTheCircle) {
  auto circle = euclidean_factor("S1", {"x"});
  circle.periods = {2 * M_PI};
  const auto t = torus_average(circle, parse("sin(x)", {"x"}), 1.0, 2, 256);
  EXPECT_NEAR(t.mean_divergence, 0.0, 1e-14);
  EXPECT_NEAR(t.volume, 256.0, 1e-12);
  // mean(f Lap f) = -1/2 and mean(|grad f|^2) = 1/2 separately
  double flap = 0, grad2 = 0;
  for (int k = 0; k < 256; ++k) {
    const double x = 2 * M_PI * k / 256;
    flap += -std::sin(x) * std::sin(x);
    grad2 += std::cos(x) * std::cos(x);
  }
  EXPECT_NEAR(flap / 256, -0.5, 1e-14);
  EXPECT_NEAR(grad2 / 256, 0.5, 1e-14);
}

TEST(TorusAverage, IdentityOnCircleAndTorus) {
  auto circle = euclidean_factor("S1", {"x"});
  circle.periods = {2 * M_PI};
  for (const char* f : {"sin(x)", "2+sin(x)", "sin(x)*cos(x)"}) {
    const auto r = torus_average_identity(circle, parse(f, {"x"}), 1.0, 3, 256, 1e-10);
    EXPECT_TRUE(r.pass) << f << " " << r.max_abs_residual;
  }
  auto torus = diagonal_factor("T2", {"x", "y"}, {"1", "(2+cos(x))^2"});
  torus.periods = {2 * M_PI, 2 * M_PI};
  const auto r = torus_average_identity(torus, parse("2+sin(x)*cos(y)", {"x", "y"}), 0.5, 2, 64, 1e-10);
  EXPECT_TRUE(r.pass) << r.max_abs_residual;
}

TEST(TorusAverage, ConstantFunction) {
  auto circle = euclidean_factor("S1", {"x"});
  circle.periods = {2 * M_PI};
  const auto t = torus_average(circle, parse("3", {}), 0.7, 2, 16);
  EXPECT_DOUBLE_EQ(t.mean_lambda, 0.7 * 9);
  EXPECT_DOUBLE_EQ(t.mean_rhs, 0.7 * 9);
}

TEST(Conditions, ConstantWarpingsAreTrivial) {
  SequentialWarpedProduct w(euclidean_factor("M1", {"x"}), euclidean_factor("M2", {"u"}), euclidean_factor("M3", {"v"}),
                            parse("2", {}), parse("3", {}));
  const auto c = condition_values(w, split_point(w, {0.1, 0.2, 0.3}), {0.4, 0.0, split_vector(w, {0, 0, 0})});
  EXPECT_EQ(max_abs(c.condition1), 0.0);
  EXPECT_EQ(max_abs(c.condition2), 0.0);
  EXPECT_EQ(max_abs(c.dlambda), 0.0);
}

TEST(Conditions, CircleExampleReducesToLaplacianTerm) {
  SequentialWarpedProduct w(euclidean_factor("M1", {"x"}), euclidean_factor("M2", {"u1", "u2"}),
                            euclidean_factor("M3", {"v"}), parse("2+sin(x)", {"x"}), parse("1", {}));
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0, 6.28);
  for (int k = 0; k < 10; ++k) {
    const double x = u(rng);
    const auto c = condition_values(w, split_point(w, {x, 0, 0, 0}), {0, 0, split_vector(w, {0, 0, 0, 0})});
    // f''' = -cos x, so d(Lap f) = -cos x and the residual is -(2 m2 / f) d(Lap f)
    EXPECT_NEAR(c.condition1[0], 2.0 * 2.0 / (2 + std::sin(x)) * std::cos(x), 1e-12);
    // contrapositive: where d(lambda) != 0 the hypothesis fails
    if (std::abs(c.dlambda[0]) > 1e-6) { EXPECT_GT(std::abs(c.condition1[0]), 0.0); }
  }
}

TEST(Theorem2, ConstantWarpingsWithPositiveAlphaAreVacuous) {
  SequentialWarpedProduct w(euclidean_factor("M1", {"x"}), euclidean_factor("M2", {"u1", "u2"}),
                            euclidean_factor("M3", {"v1", "v2"}), parse("2", {}), parse("3", {}));
  const auto g = product_geometry_at(w, split_point(w, {0, 0, 0, 0, 0}));
  const std::vector<Theorem2Sample> s{theorem2_sample(w, g, {1.0, 0.5, split_vector(w, {0, 0, 0, 0, 0})})};
  const auto r = theorem2_conditions(w, s, 1e-9);
  EXPECT_EQ(r[2].status, "not applicable");
}
