#pragma once

// Einstein / quasi-Einstein / quasi-constant-curvature fits of curvature data,
// and residual checks of the factor identities a quasi-Einstein sequential warped
// product must satisfy.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "seqwarp/chart.hpp"
#include "seqwarp/product.hpp"
#include "seqwarp/tensor.hpp"

namespace seqwarp {

class FitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Verdict { einstein, quasi_einstein, neither };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::einstein:
      return "einstein";
    case Verdict::quasi_einstein:
      return "quasi-einstein";
    case Verdict::neither:
      return "neither";
  }
  return "neither";
}

inline constexpr double kEinsteinThreshold = 1e-8;

struct QEFit {
  double alpha = 0.0;
  double beta = 0.0;
  std::vector<double> A;  // covector, A_i = g_ij U^j
  std::vector<double> U;
  int causal = 0;  // g(U, U) = causal; 0 when no U is reported
  double residual = 0.0;
  std::size_t cluster_size = 0;
  Verdict verdict = Verdict::neither;

  bool ok() const { return verdict != Verdict::neither; }
};

struct QCCFit {
  double a = 0.0;
  double b = 0.0;
  std::vector<double> A;
  double residual = 0.0;
  bool pass = false;
  QEFit qe;
};

namespace detail {

inline double max_abs(const Matrix<double>& m) { return seqwarp::max_abs(m.data()); }

inline std::vector<double> eigenvalues_of(const Matrix<double>& g, const Matrix<double>& ric) {
  const Eigen::MatrixXd G = to_eigen(g), R = to_eigen(ric);
  std::vector<double> ev;
  Eigen::LLT<Eigen::MatrixXd> llt(G);
  if (llt.info() == Eigen::Success) {
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(R, G, Eigen::EigenvaluesOnly);
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) ev.push_back(es.eigenvalues()(i));
  } else {
    Eigen::EigenSolver<Eigen::MatrixXd> es(G.inverse() * R, false);
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) ev.push_back(es.eigenvalues()(i).real());
  }
  std::sort(ev.begin(), ev.end());
  return ev;
}

struct Cluster {
  std::size_t size = 0;
  double mean = 0.0;
};

// Single-linkage clusters of sorted values; the largest one wins, ties going to
// the larger mean.
inline Cluster dominant_cluster(const std::vector<double>& sorted, double gap) {
  Cluster best;
  std::size_t start = 0;
  for (std::size_t i = 1; i <= sorted.size(); ++i) {
    if (i < sorted.size() && sorted[i] - sorted[i - 1] <= gap) continue;
    Cluster c;
    c.size = i - start;
    for (std::size_t k = start; k < i; ++k) c.mean += sorted[k];
    c.mean /= static_cast<double>(c.size);
    if (c.size > best.size || (c.size == best.size && c.mean > best.mean)) best = c;
    start = i;
  }
  return best;
}

inline double frob(const Matrix<double>& a, const Matrix<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.data().size(); ++i) s += a.data()[i] * b.data()[i];
  return s;
}

}  // namespace detail

// Ric = alpha g + beta A (x) A with g(U, U) = +-1 and A = g(U, .).
inline QEFit fit_quasi_einstein(const Matrix<double>& g, const Matrix<double>& ric, double tol) {
  const std::size_t m = g.rows();
  if (m == 0 || g.cols() != m || ric.rows() != m || ric.cols() != m)
    throw std::invalid_argument("metric and Ricci must be square matrices of the same size");
  const auto [ginv, det] = inverse_and_det(g);
  if (!(std::abs(det) > kDegeneracyThreshold)) throw FitError("degenerate metric");

  const auto ev = detail::eigenvalues_of(g, ric);
  double radius = 0.0;
  for (double v : ev) radius = std::max(radius, std::abs(v));
  const auto cluster = detail::dominant_cluster(ev, 1e-6 * (1.0 + radius));
  const double scale = 1.0 + detail::max_abs(ric);

  QEFit fit;
  fit.cluster_size = cluster.size;
  fit.A.assign(m, 0.0);
  fit.U.assign(m, 0.0);

  if (cluster.size == m) {
    fit.alpha = detail::frob(ric, g) / detail::frob(g, g);
    double r = 0.0;
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < m; ++j) r = std::max(r, std::abs(ric(i, j) - fit.alpha * g(i, j)));
    fit.residual = r;
    fit.verdict = r <= tol * scale ? Verdict::einstein : Verdict::neither;
    return fit;
  }
  if (cluster.size + 1 != m) return fit;

  Matrix<double> rest(m, m);
  std::size_t col = 0;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) rest(i, j) = ric(i, j) - cluster.mean * g(i, j);
    if (std::abs(rest(i, i)) > std::abs(rest(col, col))) col = i;
  }
  if (rest(col, col) == 0.0) return fit;
  std::vector<double> A(m), U(m, 0.0);
  for (std::size_t i = 0; i < m; ++i) A[i] = rest(i, col);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) U[i] += ginv(i, j) * A[j];
  double norm = 0.0, a2 = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    norm += A[i] * U[i];
    a2 += A[i] * A[i];
  }
  if (!(std::abs(norm) > 1e-12 * a2)) return fit;  // null direction
  const double s = 1.0 / std::sqrt(std::abs(norm));
  std::size_t big = 0;
  for (std::size_t i = 0; i < m; ++i)
    if (std::abs(U[i]) > std::abs(U[big])) big = i;
  const double flip = U[big] < 0.0 ? -1.0 : 1.0;
  for (std::size_t i = 0; i < m; ++i) {
    A[i] *= s * flip;
    U[i] *= s * flip;
  }

  // alpha and beta by joint least squares against g and A (x) A.
  Matrix<double> aa(m, m);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) aa(i, j) = A[i] * A[j];
  const double gg = detail::frob(g, g), ga = detail::frob(g, aa), a4 = detail::frob(aa, aa);
  const double rg = detail::frob(ric, g), ra = detail::frob(ric, aa);
  const double den = gg * a4 - ga * ga;
  if (std::abs(den) > 1e-14 * gg * a4) {
    fit.alpha = (rg * a4 - ra * ga) / den;
    fit.beta = (gg * ra - ga * rg) / den;
  } else {
    fit.alpha = cluster.mean;
    fit.beta = detail::frob(rest, aa) / a4;
  }
  fit.A = A;
  fit.U = U;
  fit.causal = norm > 0.0 ? 1 : -1;
  double r = 0.0;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j)
      r = std::max(r, std::abs(ric(i, j) - fit.alpha * g(i, j) - fit.beta * aa(i, j)));
  fit.residual = r;
  if (r > tol * scale)
    fit.verdict = Verdict::neither;
  else if (std::abs(fit.beta) <= kEinsteinThreshold)
    fit.verdict = Verdict::einstein;
  else
    fit.verdict = Verdict::quasi_einstein;
  return fit;
}

inline Matrix<double> ricci_contraction(const Matrix<double>& g, const Tensor4<double>& R) {
  const std::size_t m = g.rows();
  const auto ginv = inverse_and_det(g).first;
  Matrix<double> ric(m, m);
  for (std::size_t j = 0; j < m; ++j)
    for (std::size_t k = 0; k < m; ++k) {
      double s = 0.0;
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t l = 0; l < m; ++l) s += ginv(i, l) * R(i, j, k, l);
      ric(j, k) = s;
    }
  return ric;
}

// Largest violation of the algebraic curvature symmetries and first Bianchi.
inline double curvature_symmetry_defect(const Tensor4<double>& R) {
  const std::size_t m = R.dim();
  double d = 0.0;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j)
      for (std::size_t k = 0; k < m; ++k)
        for (std::size_t l = 0; l < m; ++l) {
          const double r = R(i, j, k, l);
          d = std::max({d, std::abs(r + R(j, i, k, l)), std::abs(r + R(i, j, l, k)), std::abs(r - R(k, l, i, j)),
                        std::abs(r + R(i, k, l, j) + R(i, l, j, k))});
        }
  return d;
}

inline Tensor4<double> qcc_tensor(const Matrix<double>& g, const std::vector<double>& A, double a, double b) {
  const std::size_t m = g.rows();
  Tensor4<double> T(m);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j)
      for (std::size_t k = 0; k < m; ++k)
        for (std::size_t l = 0; l < m; ++l) {
          const double p = g(j, k) * g(i, l) - g(i, k) * g(j, l);
          const double q = g(i, l) * A[j] * A[k] - g(i, k) * A[j] * A[l] + g(j, k) * A[i] * A[l] -
                           g(j, l) * A[i] * A[k];
          T(i, j, k, l) = a * p + b * q;
        }
  return T;
}

// R(X,Y,Z,W) = a[g(Y,Z)g(X,W) - g(X,Z)g(Y,W)]
//            + b[g(X,W)A(Y)A(Z) - g(X,Z)A(Y)A(W) + g(Y,Z)A(X)A(W) - g(Y,W)A(X)A(Z)]
inline QCCFit check_quasi_constant_curvature(const Matrix<double>& g, const Tensor4<double>& R, double tol) {
  const std::size_t m = g.rows();
  if (R.dim() != m) throw std::invalid_argument("curvature tensor and metric sizes differ");
  const double scale = 1.0 + max_abs(R.data());
  if (curvature_symmetry_defect(R) > 1e-9 * scale) throw FitError("tensor lacks the symmetries of a curvature tensor");

  QCCFit fit;
  fit.qe = fit_quasi_einstein(g, ricci_contraction(g, R), tol);
  if (!fit.qe.ok()) throw FitError("quasi-Einstein prerequisite failed: Ricci contraction is " +
                                   std::string(to_string(fit.qe.verdict)));
  fit.A = fit.qe.verdict == Verdict::einstein ? std::vector<double>(m, 0.0) : fit.qe.A;
  const auto P = qcc_tensor(g, fit.A, 1.0, 0.0);
  const auto Q = qcc_tensor(g, fit.A, 0.0, 1.0);
  double pp = 0, pq = 0, qq = 0, rp = 0, rq = 0;
  for (std::size_t i = 0; i < R.data().size(); ++i) {
    const double p = P.data()[i], q = Q.data()[i], r = R.data()[i];
    pp += p * p;
    pq += p * q;
    qq += q * q;
    rp += r * p;
    rq += r * q;
  }
  const double den = pp * qq - pq * pq;
  if (qq > 0.0 && std::abs(den) > 1e-14 * pp * qq) {
    fit.a = (rp * qq - rq * pq) / den;
    fit.b = (pp * rq - pq * rp) / den;
  } else {
    fit.a = pp > 0.0 ? rp / pp : 0.0;
    fit.b = 0.0;
  }
  const auto T = qcc_tensor(g, fit.A, fit.a, fit.b);
  fit.residual = max_abs_diff(R, T);
  fit.pass = fit.residual <= tol * scale;
  return fit;
}

// ---------------------------------------------------------------------------
// Identity reports

struct IdentityReport {
  std::string name;
  std::size_t points = 0;
  double max_abs_residual = 0.0;
  double tolerance = 0.0;
  bool pass = true;
  bool informational = false;
  std::string status = "pass";
  std::string note;

  IdentityReport() = default;
  IdentityReport(std::string n, double tol, bool info = false)
      : name(std::move(n)), tolerance(tol), informational(info) {}

  void add(double residual) {
    ++points;
    if (std::isnan(residual) || residual > max_abs_residual) max_abs_residual = residual;
    finish();
  }
  void merge(const IdentityReport& other) {
    points += other.points;
    if (std::isnan(other.max_abs_residual) || other.max_abs_residual > max_abs_residual)
      max_abs_residual = other.max_abs_residual;
    if (note.empty()) note = other.note;
    if (other.status == "not applicable" && status == "not applicable") return;
    finish();
  }
  void finish() {
    pass = max_abs_residual <= tolerance;
    status = pass ? "pass" : (informational ? "not satisfied" : "fail");
  }
  void not_applicable(std::string why) {
    pass = true;
    status = "not applicable";
    note = std::move(why);
  }
};

inline std::array<IdentityReport, 3> proposition1_residuals(const SequentialWarpedProduct& w, const ProductGeometry& g,
                                                            const QEParameters& qe, double tol) {
  const double m2 = static_cast<double>(w.dim(1)), m3 = static_cast<double>(w.dim(2));
  const double f4 = std::pow(g.f, 4), h4 = std::pow(g.h, 4);
  auto lowered = [](const Matrix<double>& gm, const std::vector<double>& u) {
    std::vector<double> out(u.size(), 0.0);
    for (std::size_t i = 0; i < u.size(); ++i)
      for (std::size_t j = 0; j < u.size(); ++j) out[i] += gm(i, j) * u[j];
    return out;
  };
  const auto a1 = lowered(g.c1.g, qe.U.x1), a2 = lowered(g.c2.g, qe.U.x2), a3 = lowered(g.c3.g, qe.U.x3);
  std::array<IdentityReport, 3> out{IdentityReport("proposition1.i1", tol), IdentityReport("proposition1.i2", tol),
                                    IdentityReport("proposition1.i3", tol)};
  double r1 = 0.0;
  for (std::size_t i = 0; i < g.n1; ++i)
    for (std::size_t j = 0; j < g.n1; ++j) {
      const double rhs = qe.alpha * g.c1.g(i, j) + qe.beta * a1[i] * a1[j] + m2 / g.f * g.f1.hess(i, j) +
                         m3 / g.h * g.hb.hess(i, j);
      r1 = std::max(r1, std::abs(g.c1.ricci(i, j) - rhs));
    }
  const double lam = lambda_value(g, qe.alpha, w.dim(1));
  double r2 = 0.0;
  for (std::size_t a = 0; a < g.n2; ++a)
    for (std::size_t b = 0; b < g.n2; ++b) {
      const double rhs = lam * g.c2.g(a, b) + qe.beta * f4 * a2[a] * a2[b] + m3 / g.h * g.hb.hess(g.n1 + a, g.n1 + b);
      r2 = std::max(r2, std::abs(g.c2.ricci(a, b) - rhs));
    }
  const double nu = nu_value(g, qe.alpha, w.dim(2));
  double r3 = 0.0;
  for (std::size_t p = 0; p < g.n3; ++p)
    for (std::size_t q = 0; q < g.n3; ++q) {
      const double rhs = nu * g.c3.g(p, q) + qe.beta * h4 * a3[p] * a3[q];
      r3 = std::max(r3, std::abs(g.c3.ricci(p, q) - rhs));
    }
  out[0].add(r1);
  out[1].add(r2);
  out[2].add(r3);
  return out;
}

inline std::array<IdentityReport, 3> proposition1_residuals(const SequentialWarpedProduct& w, const ProductPoint& p,
                                                            const QEParameters& qe, double tol = 1e-6) {
  return proposition1_residuals(w, product_geometry_at(w, p), qe, tol);
}

inline double lambda_at(const SequentialWarpedProduct& w, const ProductPoint& p, double alpha) {
  detail::check_dims(w, p);
  const auto c1 = curvature_at(w.m1(), p.p1);
  const auto f = scalar_field(c1, eval_jet(w.f(), w.m1().coords, p.p1, 2));
  return alpha * f.value * f.value + f.value * f.laplacian + (static_cast<double>(w.dim(1)) - 1.0) * f.grad_norm2;
}

inline double nu_at(const SequentialWarpedProduct& w, const ProductPoint& p, double alpha) {
  detail::check_dims(w, p);
  check_warpings(w, p);
  const auto b = base_chart(w);
  const Point pb = p.base();
  const auto h = scalar_field(curvature_at(b, pb), eval_jet(w.h(), b.coords, pb, 2));
  return alpha * h.value * h.value + h.value * h.laplacian + (static_cast<double>(w.dim(2)) - 1.0) * h.grad_norm2;
}

// Volume-weighted trapezoid means over a fully periodic chart of
//   phi Lap phi + |grad phi|^2                               (integrates to zero)
//   lambda = alpha phi^2 + phi Lap phi + (m - 1)|grad phi|^2
//   alpha phi^2 + (m - 2)|grad phi|^2                        (same mean as lambda)
struct TorusAverage {
  std::size_t nodes = 0;
  double volume = 0.0;
  double mean_divergence = 0.0;
  double mean_lambda = 0.0;
  double mean_rhs = 0.0;

  double residual() const { return std::max(std::abs(mean_divergence), std::abs(mean_lambda - mean_rhs)); }
};

inline TorusAverage torus_average(const FactorManifold& chart, const Expr& phi, double alpha, std::size_t m_fiber,
                                  std::size_t nodes, const std::vector<double>& origin = {}) {
  if (!chart.fully_periodic()) throw std::invalid_argument(chart.name + " is not fully periodic");
  if (nodes == 0) throw std::invalid_argument("quadrature needs at least one node per coordinate");
  const std::size_t n = chart.dim();
  std::size_t total = 1;
  for (std::size_t i = 0; i < n; ++i) total *= nodes;
  TorusAverage out;
  out.nodes = total;
  double sw = 0, sdiv = 0, slam = 0, srhs = 0;
  const double m = static_cast<double>(m_fiber);
  std::vector<std::size_t> idx(n, 0);
  Point p(n);
  for (std::size_t k = 0; k < total; ++k) {
    for (std::size_t i = 0; i < n; ++i)
      p[i] = (origin.empty() ? 0.0 : origin[i]) + static_cast<double>(idx[i]) * *chart.periods[i] / nodes;
    const auto b = curvature_at(chart, p);
    const auto s = scalar_field(b, eval_jet(phi, chart.coords, p, 2));
    const double w = std::sqrt(std::abs(b.det));
    sw += w;
    sdiv += w * (s.value * s.laplacian + s.grad_norm2);
    slam += w * (alpha * s.value * s.value + s.value * s.laplacian + (m - 1.0) * s.grad_norm2);
    srhs += w * (alpha * s.value * s.value + (m - 2.0) * s.grad_norm2);
    for (std::size_t i = 0; i < n; ++i) {
      if (++idx[i] < nodes) break;
      idx[i] = 0;
    }
  }
  out.volume = sw;
  out.mean_divergence = sdiv / sw;
  out.mean_lambda = slam / sw;
  out.mean_rhs = srhs / sw;
  return out;
}

inline IdentityReport torus_average_identity(const FactorManifold& chart, const Expr& phi, double alpha,
                                             std::size_t m_fiber, std::size_t nodes, double tol,
                                             const std::string& name = "torus.average") {
  IdentityReport r(name, tol);
  const auto t = torus_average(chart, phi, alpha, m_fiber, nodes);
  r.add(t.residual());
  r.points = t.nodes;
  r.note = "mean(phi Lap phi + |grad phi|^2) over the torus, with f Lap f read as div(f grad f)";
  return r;
}

// lambda version over M1 with f.
inline IdentityReport torus_average_identity(const SequentialWarpedProduct& w, double alpha, std::size_t nodes,
                                             double tol) {
  if (!w.m1().fully_periodic()) throw std::invalid_argument("M1 is not fully periodic");
  return torus_average_identity(w.m1(), w.f(), alpha, w.dim(1), nodes, tol, "theorem1.lambda_average");
}

// nu version over M1 x_f M2 with h.
inline IdentityReport torus_average_identity_nu(const SequentialWarpedProduct& w, double alpha, std::size_t nodes,
                                                double tol) {
  const auto b = base_chart(w);
  if (!b.fully_periodic()) throw std::invalid_argument("M1 x M2 is not fully periodic");
  return torus_average_identity(b, w.h(), alpha, w.dim(2), nodes, tol, "theorem1.nu_average");
}

// LHS - RHS of the two hypotheses under which lambda resp. nu are constant,
// per coordinate direction. The h-quantities of the first condition live on
// M1 with the M2 coordinates frozen; the second one runs over all directions of
// M1 x M2, with Lap h the g2-trace of the M2 block of Hess_B h.
struct ConditionResiduals {
  std::vector<double> condition1;  // one per M1 direction
  std::vector<double> condition2;  // one per M1 x M2 direction
  std::vector<double> dlambda;     // d(lambda) along M1
  std::vector<double> dnu;         // d(nu) along M1 x M2
};

inline ConditionResiduals condition_values(const SequentialWarpedProduct& w, const ProductPoint& p,
                                           const QEParameters& qe) {
  const auto g = product_geometry_at(w, p);
  const std::size_t n1 = g.n1, n2 = g.n2, nb = n1 + n2;
  const double m2 = static_cast<double>(w.dim(1)), m3 = static_cast<double>(w.dim(2));
  const double f = g.f, h = g.h, beta = qe.beta;
  ConditionResiduals out;

  // condition 1
  const EvalPoint frozen = bind_coords(w.m2().coords, p.p2);
  const auto f_geo = differentiated_geometry_at(w.m1(), p.p1, w.f());
  const auto h_geo = differentiated_geometry_at(w.m1(), p.p1, w.h(), frozen);
  const auto& F = *f_geo.field;
  const auto& H = *h_geo.field;
  const auto div_hess_h = covariant_divergence(h_geo.bundle, H.hess, h_geo.dhess);
  const auto& g1 = g.c1.g;
  double gradf_u1 = 0.0;
  std::vector<double> u1_low(n1, 0.0);
  for (std::size_t i = 0; i < n1; ++i)
    for (std::size_t j = 0; j < n1; ++j) u1_low[i] += g1(i, j) * qe.U.x1[j];
  for (std::size_t i = 0; i < n1; ++i) gradf_u1 += F.grad[i] * u1_low[i];
  for (std::size_t i = 0; i < n1; ++i) {
    double hess_gradf = 0.0, hess_gradh = 0.0;
    for (std::size_t k = 0; k < n1; ++k) {
      hess_gradf += F.grad[k] * H.hess(k, i);
      hess_gradh += H.grad[k] * H.hess(k, i);
    }
    const double div_hess_over_h = div_hess_h[i] / h - hess_gradh / (h * h);
    const double lhs = m2 * beta / f * gradf_u1 * u1_low[i] + m2 * m3 / (f * h) * hess_gradf + m3 * div_hess_over_h;
    const double d_lap_over_h = h_geo.dlaplacian[i] / h - H.laplacian * H.d[i] / (h * h);
    const double rhs = m3 / 2.0 * d_lap_over_h + 2.0 * m2 / f * f_geo.dlaplacian[i];
    out.condition1.push_back(lhs - rhs);
  }

  // d(lambda) along M1: lambda = alpha f^2 + f Lap f + (m2 - 1)|grad f|^2, and
  // d|grad f|^2 = 2 Hess f(grad f, .)
  for (std::size_t i = 0; i < n1; ++i) {
    double hg = 0.0;
    for (std::size_t k = 0; k < n1; ++k) hg += F.hess(i, k) * F.grad[k];
    out.dlambda.push_back(2.0 * qe.alpha * f * F.d[i] + F.d[i] * F.laplacian + f * f_geo.dlaplacian[i] +
                          (m2 - 1.0) * 2.0 * hg);
  }

  // condition 2
  const auto b = base_chart(w);
  const Point pb = p.base();
  const auto hb_geo = differentiated_geometry_at(b, pb, w.h());
  const auto& HB = *hb_geo.field;
  const auto g2jet_point = p.p2;
  Matrix<double> g2 = g.c2.g, g2inv = g.c2.ginv;
  Tensor3<double> dg2(n2);  // d_a (g2)_bc along M2
  for (std::size_t i = 0; i < n2; ++i)
    for (std::size_t j = 0; j < n2; ++j) {
      const auto jet = eval_jet(w.m2().entry(i, j), w.m2().coords, g2jet_point, 1);
      for (std::size_t a = 0; a < n2; ++a) dg2(a, i, j) = jet.gradient()[a];
    }
  std::vector<double> dlap2(nb, 0.0);
  for (std::size_t k = 0; k < nb; ++k) {
    double s = 0.0;
    for (std::size_t a = 0; a < n2; ++a)
      for (std::size_t c = 0; c < n2; ++c) {
        double dinv = 0.0;
        if (k >= n1)
          for (std::size_t e = 0; e < n2; ++e)
            for (std::size_t q = 0; q < n2; ++q) dinv -= g2inv(a, e) * dg2(k - n1, e, q) * g2inv(q, c);
        s += dinv * HB.hess(n1 + a, n1 + c) + g2inv(a, c) * hb_geo.dhess(k, n1 + a, n1 + c);
      }
    dlap2[k] = s;
  }
  std::vector<double> u2_low(n2, 0.0);
  for (std::size_t a = 0; a < n2; ++a)
    for (std::size_t c = 0; c < n2; ++c) u2_low[a] += g2(a, c) * qe.U.x2[c];
  double u2u2 = 0.0, gradh_u2 = 0.0;
  for (std::size_t a = 0; a < n2; ++a) {
    u2u2 += qe.U.x2[a] * u2_low[a];
    gradh_u2 += HB.grad[n1 + a] * u2_low[a];
  }
  const double lam = lambda_value(g, qe.alpha, w.dim(1));
  const double f3 = f * f * f, f4 = f3 * f;
  for (std::size_t k = 0; k < nb; ++k) {
    const double df = k < n1 ? F.d[k] : 0.0;
    const double x_u2 = k >= n1 ? u2_low[k - n1] : 0.0;
    const double lhs = m3 / h * (lam - qe.alpha) * HB.d[k] + beta * 4.0 * f3 * df * u2u2 +
                       m3 * beta / h * f4 * gradh_u2 * x_u2;
    const double rhs = 2.0 * m3 / h * dlap2[k] + 2.0 * beta * f3 * df * u2u2;
    out.condition2.push_back(lhs - rhs);
  }

  // d(nu) along B: nu = alpha h^2 + h Lap h + (m3 - 1)|grad h|^2
  for (std::size_t k = 0; k < nb; ++k) {
    double hg = 0.0;
    for (std::size_t q = 0; q < nb; ++q) hg += HB.hess(k, q) * HB.grad[q];
    out.dnu.push_back(2.0 * qe.alpha * h * HB.d[k] + HB.d[k] * HB.laplacian + h * hb_geo.dlaplacian[k] +
                      (m3 - 1.0) * 2.0 * hg);
  }
  return out;
}

inline std::array<IdentityReport, 2> condition_residuals(const SequentialWarpedProduct& w, const ProductPoint& p,
                                                         const QEParameters& qe, double tol) {
  const auto v = condition_values(w, p, qe);
  std::array<IdentityReport, 2> out{IdentityReport("proposition2.condition1", tol, true),
                                    IdentityReport("proposition3.condition2", tol, true)};
  out[0].add(max_abs(v.condition1));
  out[1].add(max_abs(v.condition2));
  out[0].note = "hypothesis for constant lambda; a non-zero residual means the hypothesis does not hold here";
  out[1].note = "hypothesis for constant nu; a non-zero residual means the hypothesis does not hold here";
  return out;
}

// Sample-wide data for the three Riemannian-product criteria.
struct Theorem2Sample {
  double alpha = 0.0, beta = 0.0;
  double scal3 = 0.0;
  double lap_h = 0.0;
  double f = 0.0, h = 0.0;
  double lambda = 0.0, nu = 0.0;
  double grad_f2 = 0.0, grad_h2 = 0.0;
};

inline Theorem2Sample theorem2_sample(const SequentialWarpedProduct& w, const ProductGeometry& g,
                                      const QEParameters& qe) {
  Theorem2Sample s;
  s.alpha = qe.alpha;
  s.beta = qe.beta;
  s.scal3 = g.c3.scalar;
  s.lap_h = g.hb.laplacian;
  s.f = g.f;
  s.h = g.h;
  s.lambda = lambda_value(g, qe.alpha, w.dim(1));
  s.nu = nu_value(g, qe.alpha, w.dim(2));
  s.grad_f2 = g.f1.grad_norm2;
  s.grad_h2 = g.hb.grad_norm2;
  return s;
}

inline std::array<IdentityReport, 3> theorem2_conditions(const SequentialWarpedProduct& w,
                                                         const std::vector<Theorem2Sample>& samples, double tol) {
  std::array<IdentityReport, 3> out{IdentityReport("theorem2.i", tol, true), IdentityReport("theorem2.ii", tol, true),
                                    IdentityReport("theorem2.iii", tol, true)};
  auto all = [&](auto pred) { return !samples.empty() && std::all_of(samples.begin(), samples.end(), pred); };
  auto conclude = [&](IdentityReport& r, auto residual) {
    for (const auto& s : samples) r.add(residual(s));
  };
  const auto grad_h = [](const Theorem2Sample& s) { return std::sqrt(std::max(0.0, s.grad_h2)); };
  const auto grad_f = [](const Theorem2Sample& s) { return std::sqrt(std::max(0.0, s.grad_f2)); };

  if (all([&](const Theorem2Sample& s) {
        return s.scal3 <= tol && s.alpha > 0.0 && s.beta > 0.0 && s.lap_h >= -tol;
      }))
    conclude(out[0], grad_h);
  else
    out[0].not_applicable("hypotheses scal3 <= 0, alpha > 0, beta > 0, Lap h >= 0 do not hold on the sample");

  const bool above = all([&](const Theorem2Sample& s) { return s.lambda > s.alpha * s.f * s.f + tol; });
  const bool below = all([&](const Theorem2Sample& s) { return s.lambda < s.alpha * s.f * s.f - tol; });
  if (w.dim(1) == 1 && (above || below))
    conclude(out[1], grad_f);
  else
    out[1].not_applicable(w.dim(1) != 1 ? "requires dim M2 = 1"
                                        : "lambda - alpha f^2 does not keep a strict sign on the sample");

  const double m2 = static_cast<double>(w.dim(1)), m3 = static_cast<double>(w.dim(2));
  if (w.dim(1) >= 2 && w.dim(2) >= 2 && all([&](const Theorem2Sample& s) {
        return s.alpha > 0.0 && s.lambda >= 0.0 && s.nu >= 0.0 && (m2 - 1.0) * s.grad_f2 >= s.lambda - tol &&
               (m3 - 1.0) * s.grad_h2 >= s.nu - tol;
      }))
    conclude(out[2], [&](const Theorem2Sample& s) { return std::max(grad_f(s), grad_h(s)); });
  else
    out[2].not_applicable("gradient lower bounds with alpha > 0 do not hold on the sample");
  return out;
}

}  // namespace seqwarp
