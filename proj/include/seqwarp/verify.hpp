#pragma once

// The verification workflow behind the command-line tool: sample a spec,
// compare every closed form against the chart oracle, fit quasi-Einstein and
// quasi-constant-curvature structure, and assemble a deterministic JSON report.

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "seqwarp/chart.hpp"
#include "seqwarp/classify.hpp"
#include "seqwarp/product.hpp"
#include "seqwarp/spacetime.hpp"
#include "seqwarp/spec_file.hpp"

namespace seqwarp {

inline constexpr const char* kToolVersion = "1.0.0";

enum ExitCode : int { exit_pass = 0, exit_identity_failure = 1, exit_input_error = 2 };

inline std::map<std::string, double> default_tolerances() {
  return {{"oracle", 1e-7},       {"symmetry", 1e-9},   {"fit", 1e-6},     {"bianchi", 1e-7},
          {"cross_block", 1e-10}, {"quadrature", 1e-10}, {"planted", 1e-8}, {"reduction", 1e-12}};
}

struct VerifyOptions {
  std::optional<std::size_t> points;
  std::optional<std::uint64_t> seed;
  std::map<std::string, double> tolerances;  // command-line overrides
};

struct VerificationReport {
  nlohmann::ordered_json document;
  int exit_code = exit_pass;
  bool pass = true;
  std::vector<IdentityReport> identities;

  std::string dump() const { return document.dump(2) + "\n"; }
};

// Uniform doubles in [0, 1) built from the top 53 bits, so the stream is the
// same on every platform.
inline std::vector<Point> sample_points(const ManifoldSpec& spec, const std::vector<std::string>& coords,
                                        std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Point> out;
  out.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    Point p(coords.size());
    for (std::size_t i = 0; i < coords.size(); ++i) {
      const auto [lo, hi] = spec.box(coords[i]);
      const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
      p[i] = lo + u * (hi - lo);
    }
    out.push_back(std::move(p));
  }
  return out;
}

namespace detail {

inline nlohmann::ordered_json number(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

inline nlohmann::ordered_json to_json(const IdentityReport& r) {
  nlohmann::ordered_json j;
  j["name"] = r.name;
  j["points"] = r.points;
  j["max_abs_residual"] = number(r.max_abs_residual);
  j["tolerance"] = r.tolerance;
  j["pass"] = r.pass;
  j["informational"] = r.informational;
  j["status"] = r.status;
  if (!r.note.empty()) j["note"] = r.note;
  return j;
}

inline double normalized_diff(const std::vector<double>& closed, const std::vector<double>& oracle) {
  double diff = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < closed.size(); ++i) {
    diff = std::max(diff, std::abs(closed[i] - oracle[i]));
    scale = std::max(scale, std::abs(oracle[i]));
  }
  return diff / (1.0 + scale);
}

// Accumulates per-point reports under a fixed name order.
class ReportSet {
 public:
  IdentityReport& get(const std::string& name, double tol, bool informational = false) {
    auto it = index_.find(name);
    if (it == index_.end()) {
      index_[name] = reports_.size();
      reports_.emplace_back(name, tol, informational);
      reports_.back().points = 0;
      return reports_.back();
    }
    return reports_[it->second];
  }
  void add(const std::string& name, double tol, double residual, bool informational = false) {
    get(name, tol, informational).add(residual);
  }
  void merge(const IdentityReport& r) {
    auto it = index_.find(r.name);
    if (it == index_.end()) {
      index_[r.name] = reports_.size();
      reports_.push_back(r);
      return;
    }
    reports_[it->second].merge(r);
  }
  std::vector<IdentityReport>& all() { return reports_; }

 private:
  std::map<std::string, std::size_t> index_;
  std::vector<IdentityReport> reports_;
};

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  void add(double v) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  nlohmann::ordered_json json() const {
    nlohmann::ordered_json j;
    j["min"] = number(lo);
    j["max"] = number(hi);
    return j;
  }
};

inline EvalPoint as_eval_point(const std::vector<std::string>& coords, const Point& p) {
  return bind_coords(coords, p);
}

inline double tol_of(const std::map<std::string, double>& t, const std::string& key) { return t.at(key); }

}  // namespace detail

inline std::map<std::string, double> effective_tolerances(const ManifoldSpec& spec, const VerifyOptions& opt) {
  auto tol = default_tolerances();
  for (const auto& [k, v] : spec.tolerances) tol[k] = v;
  for (const auto& [k, v] : opt.tolerances) tol[k] = v;
  return tol;
}

// Check every sample point before any identity is evaluated, so input problems
// surface as input errors with the offending point.
inline void validate_samples(const SequentialWarpedProduct& w, const FactorManifold& chart,
                             const std::vector<Point>& pts) {
  for (const auto& p : pts) {
    const auto pp = split_point(w, p);
    try {
      check_warpings(w, pp);
      validate_at(w.m1(), pp.p1);
      validate_at(w.m2(), pp.p2);
      validate_at(w.m3(), pp.p3);
      validate_at(chart, p);
    } catch (const GeometryError& e) {
      throw GeometryError(std::string(e.what()) + "; sample point", format_point(w.coords(), p));
    } catch (const DomainError& e) {
      throw GeometryError(std::string(e.what()) + "; sample point", format_point(w.coords(), p));
    }
  }
}

inline VerificationReport run_verify(const ManifoldSpec& spec, const VerifyOptions& opt = {}) {
  using detail::tol_of;
  const auto tol = effective_tolerances(spec, opt);
  const std::size_t npoints = opt.points.value_or(spec.points);
  const std::uint64_t seed = opt.seed.value_or(spec.seed);
  const auto w = spec.product();
  const auto chart = flatten_to_chart(w);
  const auto coords = w.coords();
  const auto pts = sample_points(spec, coords, npoints, seed);
  validate_samples(w, chart, pts);

  const std::size_t n = w.dim(), n1 = w.dim(0), n2 = w.dim(1), nb = n1 + n2;
  const FactorManifold base = base_chart(w);
  detail::ReportSet rs;
  const double t_or = tol_of(tol, "oracle"), t_sym = tol_of(tol, "symmetry"), t_fit = tol_of(tol, "fit"),
               t_bi = tol_of(tol, "bianchi"), t_cross = tol_of(tol, "cross_block"),
               t_quad = tol_of(tol, "quadrature"), t_pl = tol_of(tol, "planted"), t_red = tol_of(tol, "reduction");
  const bool trivial_warping = !w.f().has_variables() && !w.h().has_variables();

  std::map<std::string, std::size_t> verdicts{{"einstein", 0}, {"quasi-einstein", 0}, {"neither", 0}};
  detail::Range alpha_range, beta_range, a_range, b_range;
  double qe_max_residual = 0.0, qcc_max_residual = 0.0;
  std::size_t qcc_pass = 0, qcc_fail = 0, qcc_unfitted = 0;
  std::vector<Theorem2Sample> t2;
  std::optional<double> first_alpha;
  IdentityReport qcc_qe("qcc_implies_qe", 0.0);
  qcc_qe.note = "every passing QCC fit has a passing QE fit on its Ricci contraction";

  for (const auto& p : pts) {
    const auto pp = split_point(w, p);
    const auto oracle = curvature_at(chart, p);
    const auto g = product_geometry_at(w, pp);

    // closed forms against the oracle
    const auto G = christoffel_closed(g);
    const auto R = riemann_closed(g);
    const auto ric = ricci_closed(w, g);
    rs.add("lemma1.christoffel", t_or, detail::normalized_diff(G.data(), oracle.gamma.data()));
    rs.add("lemma2.riemann", t_or, detail::normalized_diff(R.data(), oracle.riemann.data()));
    rs.add("lemma3.ricci", t_or, detail::normalized_diff(ric.data(), oracle.ricci.data()));
    rs.add("lemma3.scalar", t_or, std::abs(scalar_closed(w, g) - oracle.scalar) / (1.0 + std::abs(oracle.scalar)));
    double cross = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (w.block_of(i) != w.block_of(j)) cross = std::max(cross, std::abs(oracle.ricci(i, j)));
    rs.add("lemma3.cross_blocks", t_cross, cross);
    {
      auto& r = rs.get("lemma3.cross_hessian", t_cross, true);
      r.add(max_abs(ricci_mixed_hessian_term(g, w.dim(2)).data()));
      r.note = "(m3/h) Hess h on mixed M1/M2 pairs; the block Ricci formulas assume it vanishes";
    }

    // symmetries and Bianchi identities of the oracle
    double gsym = 0.0;
    for (std::size_t k = 0; k < n; ++k)
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) gsym = std::max(gsym, std::abs(oracle.gamma(k, i, j) - oracle.gamma(k, j, i)));
    rs.add("symmetry.christoffel", t_sym, gsym);
    rs.add("symmetry.riemann", t_sym,
           curvature_symmetry_defect(oracle.riemann) / (1.0 + max_abs(oracle.riemann.data())));
    double rsym = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) rsym = std::max(rsym, std::abs(oracle.ricci(i, j) - oracle.ricci(j, i)));
    rs.add("symmetry.ricci", t_sym, rsym);

    auto bianchi = [](const FactorManifold& m, const Point& x) {
      const auto dg = differentiated_geometry_at(m, x);
      const auto div = covariant_divergence(dg.bundle, dg.bundle.ricci, dg.dricci);
      double r = 0.0;
      for (std::size_t j = 0; j < div.size(); ++j) r = std::max(r, std::abs(div[j] - 0.5 * dg.dscalar[j]));
      return r;
    };
    rs.add("bianchi.contracted", t_bi,
           std::max({bianchi(chart, p), bianchi(w.m1(), pp.p1), bianchi(w.m2(), pp.p2), bianchi(w.m3(), pp.p3)}));

    auto hessian_divergence = [](const FactorManifold& m, const Point& x, const Expr& phi) {
      const auto dg = differentiated_geometry_at(m, x, phi);
      const auto div = covariant_divergence(dg.bundle, dg.field->hess, dg.dhess);
      double r = 0.0;
      for (std::size_t j = 0; j < div.size(); ++j) {
        double ric_grad = 0.0;
        for (std::size_t k = 0; k < div.size(); ++k) ric_grad += dg.bundle.ricci(j, k) * dg.field->grad[k];
        r = std::max(r, std::abs(div[j] - ric_grad - dg.dlaplacian[j]));
      }
      return r;
    };
    {
      auto& r = rs.get("lemma4.hessian_divergence", t_bi);
      r.add(std::max(hessian_divergence(w.m1(), pp.p1, w.f()), hessian_divergence(base, pp.base(), w.h())));
      r.note = "div Hess(phi) = Ric(grad phi, .) + d(Lap phi) with Lap = trace Hess, for f on M1 and h on M1 x M2";
    }

    if (trivial_warping) {
      double red = 0.0;
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
          double expect = 0.0;
          const std::size_t bi = w.block_of(i), bj = w.block_of(j);
          if (bi == bj) {
            const auto& c = bi == 0 ? g.c1 : bi == 1 ? g.c2 : g.c3;
            expect = c.ricci(i - w.offset(bi), j - w.offset(bi));
          }
          red = std::max(red, std::abs(oracle.ricci(i, j) - expect));
        }
      rs.add("reduction.trivial_warping", t_red, red);
    }

    // structure fits
    const auto qe = fit_quasi_einstein(oracle.g, oracle.ricci, t_fit);
    ++verdicts[to_string(qe.verdict)];
    qe_max_residual = std::max(qe_max_residual, qe.residual);
    if (qe.ok()) {
      alpha_range.add(qe.alpha);
      beta_range.add(qe.beta);
      if (!first_alpha) first_alpha = qe.alpha;
    }
    std::optional<QCCFit> qcc;
    try {
      qcc = check_quasi_constant_curvature(oracle.g, oracle.riemann, t_fit);
    } catch (const FitError&) {
      ++qcc_unfitted;
    }
    if (qcc) {
      qcc_max_residual = std::max(qcc_max_residual, qcc->residual);
      if (qcc->pass) {
        ++qcc_pass;
        a_range.add(qcc->a);
        b_range.add(qcc->b);
        qcc_qe.add(qcc->qe.ok() ? 0.0 : 1.0);
      } else {
        ++qcc_fail;
      }
    }

    const QEParameters params{qe.ok() ? qe.alpha : 0.0, qe.ok() ? qe.beta : 0.0,
                              split_vector(w, qe.ok() ? qe.U : std::vector<double>(n, 0.0))};
    if (qe.ok()) {
      for (const auto& r : proposition1_residuals(w, g, params, t_fit)) rs.merge(r);
      const auto direct = factor_scalars_closed(w, g);
      const auto predicted = factor_scalars_closed(w, g, params);
      rs.add("corollary1.scalars", t_fit,
             std::max({std::abs(direct.scal1 - predicted.scal1), std::abs(direct.scal2 - predicted.scal2),
                       std::abs(direct.scal3 - predicted.scal3)}));
    } else {
      for (const char* name : {"proposition1.i1", "proposition1.i2", "proposition1.i3", "corollary1.scalars"})
        rs.get(name, t_fit);
    }

    if (spec.planted) {
      const auto at = detail::as_eval_point(coords, p);
      rs.add("planted.alpha", t_pl, std::abs(qe.alpha - evaluate(spec.planted->alpha, at)));
      rs.add("planted.beta", t_pl, std::abs(qe.beta - evaluate(spec.planted->beta, at)));
    }

    const auto cond = condition_values(w, pp, params);
    {
      auto& r = rs.get("proposition2.condition1", t_fit, true);
      r.add(max_abs(cond.condition1));
      r.note = "hypothesis under which lambda is constant; evaluated with the pointwise fit (alpha = beta = 0 when it fails)";
      auto& l = rs.get("proposition2.dlambda", t_fit, true);
      l.add(max_abs(cond.dlambda));
      l.note = "d(lambda) along M1";
      auto& c2 = rs.get("proposition3.condition2", t_fit, true);
      c2.add(max_abs(cond.condition2));
      c2.note = "hypothesis under which nu is constant; Lap h is the g2-trace of Hess h on M2 pairs";
      auto& nu = rs.get("proposition3.dnu", t_fit, true);
      nu.add(max_abs(cond.dnu));
      nu.note = "d(nu) along M1 x M2";
    }
    t2.push_back(theorem2_sample(w, g, params));

    if (spec.kind == SpecKind::ssst)
      for (const auto& r : ssst_theorem_check(spec.ssst(), qcc, qe, pp, t_fit)) rs.merge(r);
    if (spec.kind == SpecKind::grw)
      for (const auto& r : grw_theorem_check(spec.grw(), qcc, qe, pp, t_fit)) rs.merge(r);
  }

  // quadrature identities on periodic factors
  const double alpha0 = first_alpha.value_or(0.0);
  if (w.m1().fully_periodic()) {
    const std::size_t nodes = n1 == 1 ? 256 : 64;
    rs.merge(torus_average_identity(w.m1(), w.f(), alpha0, w.dim(1), nodes, t_quad, "theorem1.lambda_average"));
  }
  if (base.fully_periodic()) {
    const std::size_t nodes = nb == 1 ? 256 : nb == 2 ? 64 : 16;
    rs.merge(torus_average_identity(base, w.h(), alpha0, w.dim(2), nodes, t_quad, "theorem1.nu_average"));
  }
  for (const auto& r : theorem2_conditions(w, t2, t_fit)) rs.merge(r);
  rs.merge(qcc_qe);

  VerificationReport out;
  out.identities = rs.all();
  for (auto& r : out.identities)
    if (r.points == 0 && r.status != "not applicable") r.not_applicable("no sample point met the hypotheses");
  for (const auto& r : out.identities)
    if (!r.informational && !r.pass) out.pass = false;
  out.exit_code = out.pass ? exit_pass : exit_identity_failure;

  nlohmann::ordered_json doc;
  doc["tool"] = "seqwarp";
  doc["version"] = kToolVersion;
  doc["spec"] = {{"name", spec.name}, {"kind", to_string(spec.kind)}, {"digest", digest_hex(spec.source)}};
  doc["sampling"] = {{"points", npoints}, {"seed", seed}};
  nlohmann::ordered_json tj;
  for (const auto& [k, v] : tol) tj[k] = v;
  doc["tolerances"] = tj;

  nlohmann::ordered_json conv;
  conv["riemann"] = "R(X,Y)Z = nabla_X nabla_Y Z - nabla_Y nabla_X Z - nabla_[X,Y] Z; R_ijkl = g_lm R^m_ijk; Ric_jk = R^i_ijk";
  conv["closed_form_curvature"] = "block curvature formulas give the negative of this operator; compared after the sign flip";
  conv["hessian_divergence"] = "div Hess(phi) = Ric(grad phi, .) + d(Lap phi), Lap = trace of the Hessian";
  conv["h_geometry"] = "grad h, Hess h, Lap h taken on M1 x M2 with metric g1 + f^2 g2";
  conv["factor_scalar_h_terms"] = "h-Laplacian terms in the factor scalar curvatures are g1- resp. g2-traces of Hess h";
  conv["average_identity"] = "f Lap f read as div(f grad f) in the averaged lambda and nu identities";
  conv["qe_parameters"] = "alpha, beta are fitted per point; U is never renormalised blockwise";
  if (spec.kind == SpecKind::ssst) conv["ssst_timelike_sign"] = ssst_timelike_sign();
  if (spec.kind == SpecKind::grw) {
    conv["grw_timelike_sign"] = grw_timelike_sign();
    const IdentityReport* st = nullptr;
    const IdentityReport* pr = nullptr;
    for (const auto& r : out.identities) {
      if (r.name == "grw.i.statement") st = &r;
      if (r.name == "grw.i.proof") pr = &r;
    }
    std::string variant = "not applicable";
    if (st && pr && st->status != "not applicable" && st->points > 0) {
      if (st->pass && pr->pass)
        variant = "both";
      else if (pr->pass)
        variant = "proof";
      else if (st->pass)
        variant = "statement";
      else
        variant = "neither";
    }
    conv["grw_beta_minus_alpha_variant"] = variant;
  }
  doc["conventions"] = conv;

  nlohmann::ordered_json ids = nlohmann::ordered_json::array();
  for (const auto& r : out.identities) ids.push_back(detail::to_json(r));
  doc["identities"] = ids;

  nlohmann::ordered_json fits;
  nlohmann::ordered_json qej;
  for (const char* k : {"einstein", "quasi-einstein", "neither"}) qej[k] = verdicts[k];
  qej["alpha"] = alpha_range.json();
  qej["beta"] = beta_range.json();
  qej["max_residual"] = detail::number(qe_max_residual);
  fits["quasi_einstein"] = qej;
  nlohmann::ordered_json qccj;
  qccj["pass"] = qcc_pass;
  qccj["fail"] = qcc_fail;
  qccj["not_fitted"] = qcc_unfitted;
  qccj["a"] = a_range.json();
  qccj["b"] = b_range.json();
  qccj["max_residual"] = detail::number(qcc_max_residual);
  fits["quasi_constant_curvature"] = qccj;
  doc["fits"] = fits;
  doc["pass"] = out.pass;
  out.document = std::move(doc);
  return out;
}

// ---------------------------------------------------------------------------
// classification at chosen points

inline Point classification_point(const ManifoldSpec& spec, const std::vector<std::string>& coords,
                                  const EvalPoint& overrides) {
  Point p(coords.size());
  for (std::size_t i = 0; i < coords.size(); ++i) {
    if (auto it = overrides.find(coords[i]); it != overrides.end())
      p[i] = it->second;
    else if (auto jt = spec.classify_at.find(coords[i]); jt != spec.classify_at.end())
      p[i] = jt->second;
    else {
      const auto [lo, hi] = spec.box(coords[i]);
      p[i] = 0.5 * (lo + hi);
    }
  }
  for (const auto& [k, v] : overrides)
    if (std::find(coords.begin(), coords.end(), k) == coords.end())
      throw SpecError("--at", "unknown coordinate '" + k + "'");
  return p;
}

namespace detail {

inline nlohmann::ordered_json qe_json(const QEFit& f, const Matrix<double>& g) {
  nlohmann::ordered_json j;
  j["verdict"] = to_string(f.verdict);
  j["alpha"] = f.ok() ? number(f.alpha) : nullptr;
  j["beta"] = f.ok() ? number(f.beta) : nullptr;
  double a2 = 0.0;
  if (!f.A.empty()) {
    const auto ginv = inverse_and_det(g).first;
    for (std::size_t i = 0; i < f.A.size(); ++i)
      for (std::size_t k = 0; k < f.A.size(); ++k) a2 += ginv(i, k) * f.A[i] * f.A[k];
  }
  j["A_norm"] = std::sqrt(std::abs(a2));
  j["causal"] = f.causal;
  j["U"] = f.U;
  j["residual"] = number(f.residual);
  return j;
}

}  // namespace detail

inline nlohmann::ordered_json run_classify(const ManifoldSpec& spec, const EvalPoint& at = {}) {
  const auto tol = effective_tolerances(spec, {});
  const double t_fit = tol.at("fit");
  const auto w = spec.product();
  const auto chart = flatten_to_chart(w);
  const auto coords = w.coords();
  const Point p = classification_point(spec, coords, at);
  validate_samples(w, chart, {p});
  const auto pp = split_point(w, p);
  const auto b = curvature_at(chart, p);

  nlohmann::ordered_json doc;
  doc["spec"] = spec.name;
  nlohmann::ordered_json pj;
  for (std::size_t i = 0; i < coords.size(); ++i) pj[coords[i]] = p[i];
  doc["point"] = pj;
  doc["ambient"] = detail::qe_json(fit_quasi_einstein(b.g, b.ricci, t_fit), b.g);
  nlohmann::ordered_json qj;
  try {
    const auto q = check_quasi_constant_curvature(b.g, b.riemann, t_fit);
    qj["a"] = detail::number(q.a);
    qj["b"] = detail::number(q.b);
    qj["residual"] = detail::number(q.residual);
    qj["pass"] = q.pass;
  } catch (const FitError& e) {
    qj["error"] = e.what();
    qj["pass"] = false;
  }
  doc["quasi_constant_curvature"] = qj;
  nlohmann::ordered_json fj = nlohmann::ordered_json::array();
  const Point* parts[3] = {&pp.p1, &pp.p2, &pp.p3};
  for (std::size_t k = 0; k < 3; ++k) {
    const auto c = curvature_at(w.factor(k), *parts[k]);
    auto j = detail::qe_json(fit_quasi_einstein(c.g, c.ricci, t_fit), c.g);
    nlohmann::ordered_json e;
    e["factor"] = w.factor(k).name;
    e["scalar"] = detail::number(c.scalar);
    for (auto& [key, val] : j.items()) e[key] = val;
    fj.push_back(e);
  }
  doc["factors"] = fj;
  return doc;
}

}  // namespace seqwarp
