#pragma once

// Sequential standard static spacetimes (M1 x_f M2) x_h I with metric
// g1 + f^2 g2 - h^2 dt^2, and sequential generalized Robertson-Walker spacetimes
// (I x_f M2) x_h M3 with metric -dt^2 + f^2 g2 + h^2 g3, plus residual checks of
// their quasi-constant-curvature characterisations.

#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "seqwarp/chart.hpp"
#include "seqwarp/classify.hpp"
#include "seqwarp/product.hpp"

namespace seqwarp {

class SignatureError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct SSSTSpec {
  FactorManifold m1, m2;
  Expr f, h;
  std::string t = "t";
  std::pair<double, double> interval{-1.0, 1.0};
};

struct GRWSpec {
  std::string t = "t";
  std::pair<double, double> interval{-1.0, 1.0};
  FactorManifold m2, m3;
  Expr f, h;
};

inline FactorManifold time_factor(const std::string& t) {
  return make_factor("I", {t}, {{"-1"}}, Signature::lorentzian);
}

inline SequentialWarpedProduct build_ssst(const SSSTSpec& s) {
  if (s.m1.signature != Signature::riemannian || s.m2.signature != Signature::riemannian)
    throw SignatureError("the spatial factors of a static spacetime must be Riemannian");
  if (!(s.interval.first < s.interval.second)) throw std::invalid_argument("time interval is empty");
  return SequentialWarpedProduct(s.m1, s.m2, time_factor(s.t), s.f, s.h);
}

inline SequentialWarpedProduct build_grw(const GRWSpec& s) {
  if (s.m2.signature != Signature::riemannian || s.m3.signature != Signature::riemannian)
    throw SignatureError("the spatial factors of a Robertson-Walker spacetime must be Riemannian");
  if (!(s.interval.first < s.interval.second)) throw std::invalid_argument("time interval is empty");
  for (const auto& v : s.f.free_variables())
    if (v != s.t) throw std::invalid_argument("f must depend on the time coordinate only, found '" + v + "'");
  return SequentialWarpedProduct(time_factor(s.t), s.m2, s.m3, s.f, s.h);
}

// Exactly one negative direction, and it is the time direction.
inline void check_spacetime_signature(const SequentialWarpedProduct& w, const ProductPoint& p,
                                      std::size_t time_index) {
  const auto g = ambient_metric_at(w, p);
  const std::string where = format_point(w.coords(), p.flat());
  if (negative_eigenvalues(g) != 1) throw GeometryError("metric is not Lorentzian", where);
  if (!(g(time_index, time_index) < 0.0)) throw GeometryError("time direction is not timelike", where);
}

// Ratio sign between the oracle's Ric(d_t, d_t) and the timelike Ricci formulas
// as printed for each family, measured on fixed reference configurations:
//   static:          Ric(d_t, d_t) = sign * h Lap h        (m1 = m2 = 1, f = 1, h = cosh x)
//   Robertson-Walker: Ric(d_t, d_t) = sign * (m2/f) f''    (f = e^t, h = 1, flat M2 of dim 2)
inline int ssst_timelike_sign() {
  SSSTSpec s{euclidean_factor("M1", {"x"}), euclidean_factor("M2", {"y"}), Expr::constant(1.0),
             parse("cosh(x)", {"x"}), "t", {-1.0, 1.0}};
  const auto w = build_ssst(s);
  const ProductPoint p{{0.4}, {0.2}, {0.1}};
  const auto oracle = curvature_at(flatten_to_chart(w), p.flat()).ricci;
  const double h = std::cosh(0.4);
  const double formula = h * h;  // h Lap h with Lap h = cosh x on the flat plane
  return oracle(2, 2) * formula > 0.0 ? 1 : -1;
}

inline int grw_timelike_sign() {
  GRWSpec s{"t", {-1.0, 1.0}, euclidean_factor("M2", {"y1", "y2"}), euclidean_factor("M3", {"z"}),
            parse("exp(t)", {"t"}), Expr::constant(1.0)};
  const auto w = build_grw(s);
  const ProductPoint p{{0.3}, {0.1, 0.2}, {0.0}};
  const auto oracle = curvature_at(flatten_to_chart(w), p.flat()).ricci;
  const double formula = 2.0;  // (m2/f) f'' for f = e^t
  return oracle(0, 0) * formula > 0.0 ? 1 : -1;
}

namespace detail {

inline std::vector<double> lower(const Matrix<double>& g, const std::vector<double>& v) {
  std::vector<double> out(v.size(), 0.0);
  for (std::size_t i = 0; i < v.size(); ++i)
    for (std::size_t j = 0; j < v.size(); ++j) out[i] += g(i, j) * v[j];
  return out;
}

inline double ricci_block_residual(const Matrix<double>& oracle, const Matrix<double>& formula, std::size_t lo,
                                   std::size_t hi) {
  double r = 0.0;
  for (std::size_t i = lo; i < hi; ++i)
    for (std::size_t j = lo; j < hi; ++j) r = std::max(r, std::abs(oracle(i, j) - formula(i, j)));
  return r;
}

// Quasi-Einstein data rescaled so the time component of U is 1 (the form
// U = U_1 + d_t resp. d_t + U_2 used by the characterisations).
struct TimeNormalized {
  bool ok = false;
  double alpha = 0.0, beta = 0.0, a = 0.0, b = 0.0;
  std::vector<double> U;
};

inline TimeNormalized time_normalized(const QEFit& qe, const std::optional<QCCFit>& qcc, std::size_t t) {
  TimeNormalized out;
  if (!qe.ok() || qe.U.empty()) return out;
  out.alpha = qe.alpha;
  if (qe.verdict == Verdict::einstein) {
    out.ok = true;
    out.U.assign(qe.U.size(), 0.0);
    out.U[t] = 1.0;
    if (qcc) out.a = -qcc->a;
    return out;
  }
  const double ut = qe.U[t];
  if (std::abs(ut) < 1e-12) return out;
  out.ok = true;
  out.beta = qe.beta * ut * ut;
  out.U = qe.U;
  for (double& x : out.U) x /= ut;
  if (qcc) {
    // the characterisations use the opposite sign for the curvature 4-tensor
    out.a = -qcc->a;
    out.b = -qcc->b * ut * ut;
  }
  return out;
}

}  // namespace detail

// Residual reports for the static-spacetime characterisation at one point.
inline std::vector<IdentityReport> ssst_theorem_check(const SSSTSpec& s, const std::optional<QCCFit>& qcc,
                                                      const QEFit& qe, const ProductPoint& p, double tol) {
  const auto w = build_ssst(s);
  const auto g = product_geometry_at(w, p);
  const std::size_t n1 = g.n1, n2 = g.n2, t = n1 + n2;
  const auto oracle = curvature_at(flatten_to_chart(w), p.flat()).ricci;
  const auto closed = ricci_closed(w, g);
  const int sigma = ssst_timelike_sign();
  std::vector<IdentityReport> out;

  IdentityReport d1("ssst.d1", tol), d2("ssst.d2", tol), d3("ssst.d3", tol);
  d1.add(detail::ricci_block_residual(oracle, closed, 0, n1));
  d2.add(detail::ricci_block_residual(oracle, closed, n1, t));
  d3.add(std::abs(oracle(t, t) - sigma * g.h * g.hb.laplacian));
  d3.note = "Ric(d_t, d_t) = " + std::string(sigma > 0 ? "+" : "-") + "h Lap h under the chart conventions";
  out.push_back(d1);
  out.push_back(d2);
  out.push_back(d3);

  const auto tn = detail::time_normalized(qe, qcc, t);
  IdentityReport d4("ssst.d4", tol, true), ci("ssst.i", tol, true), cii_f("ssst.ii.hessian_f", tol, true),
      cii_h("ssst.ii.hessian_h", tol, true), ciii("ssst.iii.hessian_h", tol, true), m1qe("ssst.ii.m1_quasi_einstein", tol, true),
      m2e("ssst.iii.m2_einstein", tol, true);
  if (!tn.ok) {
    const std::string why = qe.ok() ? "U has no time component" : "ambient quasi-Einstein fit failed";
    for (auto* r : {&d4, &ci, &cii_f, &cii_h, &ciii}) r->not_applicable(why);
  } else {
    const double h = g.h, f = g.f, h2 = h * h;
    d4.add(std::abs(oracle(t, t) - (-tn.alpha * h2 + tn.beta * h2 * h2)));
    ci.add(std::abs(tn.alpha - tn.beta * h2 + sigma * g.hb.laplacian / h));
    if (!qcc) {
      for (auto* r : {&cii_f, &cii_h, &ciii}) r->not_applicable("no quasi-constant-curvature fit");
    } else {
      const std::vector<double> u1(tn.U.begin(), tn.U.begin() + static_cast<long>(n1));
      const auto a1 = detail::lower(g.c1.g, u1);
      double rf = 0.0, rh = 0.0;
      for (std::size_t i = 0; i < n1; ++i)
        for (std::size_t j = 0; j < n1; ++j) {
          rf = std::max(rf, std::abs(g.f1.hess(i, j) - (tn.a * f * g.c1.g(i, j) + tn.b * f * a1[i] * a1[j])));
          rh = std::max(rh, std::abs(g.hb.hess(i, j) - ((-tn.a + h2) * h * g.c1.g(i, j) - tn.b * h * a1[i] * a1[j])));
        }
      double r3 = 0.0;
      for (std::size_t a = 0; a < n2; ++a)
        for (std::size_t b = 0; b < n2; ++b)
          r3 = std::max(r3, std::abs(g.hb.hess(n1 + a, n1 + b) - (-tn.a + h2) * f * f * h * g.c2.g(a, b)));
      cii_f.add(rf);
      cii_h.add(rh);
      ciii.add(r3);
      if (std::abs(qcc->b) <= kEinsteinThreshold)
        for (auto* r : {&cii_f, &cii_h, &ciii}) r->note = "b = 0: constant curvature, the characterisation is vacuous";
    }
  }
  const auto f1 = fit_quasi_einstein(g.c1.g, g.c1.ricci, tol);
  const auto f2 = fit_quasi_einstein(g.c2.g, g.c2.ricci, tol);
  m1qe.add(f1.ok() ? 0.0 : f1.residual);
  m1qe.note = std::string("M1 fit: ") + to_string(f1.verdict);
  m2e.add(f2.verdict == Verdict::einstein ? 0.0 : std::max(f2.residual, std::abs(f2.beta)));
  m2e.note = std::string("M2 fit: ") + to_string(f2.verdict);
  for (auto* r : {&d4, &ci, &cii_f, &cii_h, &ciii, &m1qe, &m2e}) out.push_back(*r);
  return out;
}

// Residual reports for the Robertson-Walker characterisation at one point. Both
// printed forms of the beta - alpha relation are evaluated.
inline std::vector<IdentityReport> grw_theorem_check(const GRWSpec& s, const std::optional<QCCFit>& qcc,
                                                     const QEFit& qe, const ProductPoint& p, double tol) {
  const auto w = build_grw(s);
  const auto g = product_geometry_at(w, p);
  const std::size_t n2 = g.n2, nb = 1 + n2;
  const auto oracle = curvature_at(flatten_to_chart(w), p.flat()).ricci;
  const int sigma = grw_timelike_sign();
  const double m2 = static_cast<double>(w.dim(1)), m3 = static_cast<double>(w.dim(2));
  const double f = g.f, h = g.h;
  const double fpp = g.f1.dd(0, 0);
  const double htt = g.hb.hess(0, 0);
  const double e1_formula = m2 / f * fpp + m3 / h * htt;
  std::vector<IdentityReport> out;

  IdentityReport e1("grw.e1", tol);
  e1.add(std::abs(oracle(0, 0) - sigma * e1_formula));
  e1.note = "Ric(d_t, d_t) = " + std::string(sigma > 0 ? "+" : "-") +
            "((m2/f) f'' + (m3/h) h_tt) under the chart conventions";
  out.push_back(e1);

  const auto tn = detail::time_normalized(qe, qcc, 0);
  IdentityReport statement("grw.i.statement", tol, true), proof("grw.i.proof", tol, true),
      e5("grw.e5", tol, true), m2qe("grw.ii.m2_quasi_einstein", tol, true), m3e("grw.iii.m3_einstein", tol, true);
  if (!tn.ok) {
    const std::string why = qe.ok() ? "U has no time component" : "ambient quasi-Einstein fit failed";
    for (auto* r : {&statement, &proof, &e5}) r->not_applicable(why);
  } else {
    const double lhs = tn.beta - tn.alpha;
    statement.add(std::abs(lhs - sigma * (m2 / f * fpp - m3 / h * htt)));
    proof.add(std::abs(lhs - sigma * (m2 / f * fpp + m3 / h * htt)));
    statement.note = "beta - alpha = (m2/f) f'' - (m3/h) h_tt";
    proof.note = "beta - alpha = (m2/f) f'' + (m3/h) h_tt";
    if (!qcc) {
      e5.not_applicable("no quasi-constant-curvature fit");
    } else {
      const std::vector<double> u2(tn.U.begin() + 1, tn.U.begin() + static_cast<long>(nb));
      const auto a2 = detail::lower(g.c2.g, u2);
      double r = 0.0;
      for (std::size_t a = 0; a < n2; ++a)
        for (std::size_t b = 0; b < n2; ++b)
          r = std::max(r, std::abs(g.hb.hess(1 + a, 1 + b) - (tn.a * h * f * f * g.c2.g(a, b) +
                                                               tn.b * h * f * f * f * f * a2[a] * a2[b])));
      e5.add(r);
    }
  }
  const auto f2 = fit_quasi_einstein(g.c2.g, g.c2.ricci, tol);
  const auto f3 = fit_quasi_einstein(g.c3.g, g.c3.ricci, tol);
  m2qe.add(f2.ok() ? 0.0 : f2.residual);
  m2qe.note = std::string("M2 fit: ") + to_string(f2.verdict);
  m3e.add(f3.verdict == Verdict::einstein ? 0.0 : std::max(f3.residual, std::abs(f3.beta)));
  m3e.note = std::string("M3 fit: ") + to_string(f3.verdict);
  for (auto* r : {&statement, &proof, &e5, &m2qe, &m3e}) out.push_back(*r);
  return out;
}

}  // namespace seqwarp
