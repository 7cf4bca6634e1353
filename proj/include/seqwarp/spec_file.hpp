#pragma once

// JSON manifold specs: three factors (or two plus a time line), warping
// functions, sampling boxes and tolerance overrides.

#include "json.hpp"

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "seqwarp/chart.hpp"
#include "seqwarp/expr.hpp"
#include "seqwarp/product.hpp"
#include "seqwarp/spacetime.hpp"

namespace seqwarp {

// Schema or content error, located by a JSON-ish field path such as
// "factors[1].coords" or "warpings.f".
class SpecError : public std::runtime_error {
 public:
  SpecError(std::string path, const std::string& what)
      : std::runtime_error(path.empty() ? what : path + ": " + what), path_(std::move(path)) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

enum class SpecKind { swp, ssst, grw };

inline const char* to_string(SpecKind k) {
  switch (k) {
    case SpecKind::swp:
      return "swp";
    case SpecKind::ssst:
      return "ssst";
    case SpecKind::grw:
      return "grw";
  }
  return "swp";
}

struct PlantedQE {
  Expr alpha, beta;
};

struct ManifoldSpec {
  std::string name;
  SpecKind kind = SpecKind::swp;
  std::vector<FactorManifold> factors;  // as listed in the file
  Expr f, h;
  std::string time_coord;
  std::pair<double, double> interval{-1.0, 1.0};
  std::map<std::string, std::pair<double, double>> boxes;
  std::size_t points = 30;
  std::uint64_t seed = 1;
  std::map<std::string, double> tolerances;
  EvalPoint classify_at;
  std::optional<PlantedQE> planted;
  std::string source;  // raw file text, for the digest

  SequentialWarpedProduct product() const {
    switch (kind) {
      case SpecKind::swp:
        return SequentialWarpedProduct(factors.at(0), factors.at(1), factors.at(2), f, h);
      case SpecKind::ssst:
        return build_ssst(ssst());
      case SpecKind::grw:
        return build_grw(grw());
    }
    throw std::logic_error("unknown spec kind");
  }
  SSSTSpec ssst() const { return {factors.at(0), factors.at(1), f, h, time_coord, interval}; }
  GRWSpec grw() const { return {time_coord, interval, factors.at(0), factors.at(1), f, h}; }

  // Sampling interval of an ambient coordinate.
  std::pair<double, double> box(const std::string& coord) const {
    if (auto it = boxes.find(coord); it != boxes.end()) return it->second;
    if (kind != SpecKind::swp && coord == time_coord) return interval;
    for (const auto& m : factors)
      for (std::size_t i = 0; i < m.dim(); ++i)
        if (m.coords[i] == coord && i < m.periods.size() && m.periods[i]) return {0.0, *m.periods[i]};
    return {-1.0, 1.0};
  }
};

inline std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

inline std::string digest_hex(const std::string& bytes) {
  std::ostringstream os;
  os << "fnv1a64:" << std::hex;
  os.width(16);
  os.fill('0');
  os << fnv1a64(bytes);
  return os.str();
}

namespace detail {

using nlohmann::json;

inline const json& require(const json& j, const std::string& key, const std::string& path) {
  if (!j.is_object() || !j.contains(key)) throw SpecError(path, "missing field '" + key + "'");
  return j.at(key);
}

inline std::string require_string(const json& j, const std::string& path) {
  if (!j.is_string()) throw SpecError(path, "expected a string");
  return j.get<std::string>();
}

inline double require_number(const json& j, const std::string& path) {
  if (!j.is_number()) throw SpecError(path, "expected a number");
  return j.get<double>();
}

inline Expr parse_field(const json& j, const std::string& path, const std::vector<std::string>& coords) {
  std::string text;
  if (j.is_number())
    text = j.dump();
  else
    text = require_string(j, path);
  try {
    return parse(text, coords);
  } catch (const ParseError& e) {
    throw SpecError(path, e.what());
  }
}

inline std::pair<double, double> parse_interval(const json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 2) throw SpecError(path, "expected [lo, hi]");
  const double lo = require_number(j[0], path + "[0]"), hi = require_number(j[1], path + "[1]");
  if (!(lo < hi)) throw SpecError(path, "empty interval");
  return {lo, hi};
}

inline FactorManifold parse_factor(const json& j, const std::string& path) {
  if (!j.is_object()) throw SpecError(path, "expected an object");
  FactorManifold m;
  m.name = require_string(require(j, "name", path), path + ".name");
  const auto& cj = require(j, "coords", path);
  if (!cj.is_array() || cj.empty()) throw SpecError(path + ".coords", "expected a non-empty array of names");
  for (std::size_t i = 0; i < cj.size(); ++i) {
    const std::string c = require_string(cj[i], path + ".coords[" + std::to_string(i) + "]");
    if (c.empty() || fn_from_name(c)) throw SpecError(path + ".coords[" + std::to_string(i) + "]", "invalid name");
    for (const auto& prev : m.coords)
      if (prev == c) throw SpecError(path + ".coords", "coordinate collision: '" + c + "'");
    m.coords.push_back(c);
  }
  const std::size_t n = m.coords.size();
  if (j.contains("dim")) {
    const auto& d = j.at("dim");
    if (!d.is_number_integer() || d.get<long long>() != static_cast<long long>(n))
      throw SpecError(path + ".dim", "does not match the number of coordinates");
  }
  if (j.contains("metric") == j.contains("metric_diag"))
    throw SpecError(path, "exactly one of 'metric' and 'metric_diag' is required");
  m.metric.assign(n * n, Expr::constant(0.0));
  if (j.contains("metric")) {
    const auto& g = j.at("metric");
    if (!g.is_array() || g.size() != n) throw SpecError(path + ".metric", "expected " + std::to_string(n) + " rows");
    for (std::size_t r = 0; r < n; ++r) {
      const std::string rp = path + ".metric[" + std::to_string(r) + "]";
      if (!g[r].is_array() || g[r].size() != n) throw SpecError(rp, "expected " + std::to_string(n) + " entries");
      for (std::size_t c = 0; c < n; ++c)
        m.metric[r * n + c] = parse_field(g[r][c], rp + "[" + std::to_string(c) + "]", m.coords);
    }
  } else {
    const auto& g = j.at("metric_diag");
    if (!g.is_array() || g.size() != n)
      throw SpecError(path + ".metric_diag", "expected " + std::to_string(n) + " entries");
    for (std::size_t r = 0; r < n; ++r)
      m.metric[r * n + r] = parse_field(g[r], path + ".metric_diag[" + std::to_string(r) + "]", m.coords);
  }
  if (j.contains("signature")) {
    const std::string s = require_string(j.at("signature"), path + ".signature");
    if (s == "riemannian")
      m.signature = Signature::riemannian;
    else if (s == "lorentzian")
      m.signature = Signature::lorentzian;
    else
      throw SpecError(path + ".signature", "expected 'riemannian' or 'lorentzian'");
  }
  if (j.contains("periodic")) {
    const auto& pj = j.at("periodic");
    if (!pj.is_object()) throw SpecError(path + ".periodic", "expected an object of coordinate periods");
    m.periods.assign(n, std::nullopt);
    for (const auto& [key, val] : pj.items()) {
      const std::string pp = path + ".periodic." + key;
      std::size_t idx = n;
      for (std::size_t i = 0; i < n; ++i)
        if (m.coords[i] == key) idx = i;
      if (idx == n) throw SpecError(pp, "not a coordinate of this factor");
      const double period = require_number(val, pp);
      if (!(period > 0.0)) throw SpecError(pp, "period must be positive");
      m.periods[idx] = period;
    }
  }
  return m;
}

}  // namespace detail

inline ManifoldSpec parse_spec(const std::string& text) {
  using nlohmann::json;
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw SpecError("", std::string("malformed JSON: ") + e.what());
  }
  if (!j.is_object()) throw SpecError("", "top level must be an object");
  ManifoldSpec s;
  s.source = text;
  s.name = j.contains("name") ? detail::require_string(j.at("name"), "name") : std::string("unnamed");
  const std::string kind = j.contains("kind") ? detail::require_string(j.at("kind"), "kind") : std::string("swp");
  if (kind == "swp")
    s.kind = SpecKind::swp;
  else if (kind == "ssst")
    s.kind = SpecKind::ssst;
  else if (kind == "grw")
    s.kind = SpecKind::grw;
  else
    throw SpecError("kind", "expected 'swp', 'ssst' or 'grw'");

  const auto& fj = detail::require(j, "factors", "");
  const std::size_t expected = s.kind == SpecKind::swp ? 3 : 2;
  if (!fj.is_array() || fj.size() != expected)
    throw SpecError("factors", "expected " + std::to_string(expected) + " factors for kind " + kind);
  for (std::size_t i = 0; i < fj.size(); ++i)
    s.factors.push_back(detail::parse_factor(fj[i], "factors[" + std::to_string(i) + "]"));

  if (s.kind != SpecKind::swp) {
    const auto& tj = detail::require(j, "time", "");
    s.time_coord = detail::require_string(detail::require(tj, "coord", "time"), "time.coord");
    if (tj.contains("interval")) s.interval = detail::parse_interval(tj.at("interval"), "time.interval");
  }

  // coordinate disjointness across the whole ambient chart
  std::vector<std::string> all;
  if (s.kind == SpecKind::grw) all.push_back(s.time_coord);
  for (std::size_t i = 0; i < s.factors.size(); ++i)
    for (const auto& c : s.factors[i].coords) {
      for (const auto& prev : all)
        if (prev == c) throw SpecError("factors[" + std::to_string(i) + "].coords", "coordinate collision: '" + c + "'");
      all.push_back(c);
    }
  if (s.kind == SpecKind::ssst) {
    for (const auto& prev : all)
      if (prev == s.time_coord) throw SpecError("time.coord", "coordinate collision: '" + s.time_coord + "'");
    all.push_back(s.time_coord);
  }

  std::vector<std::string> f_coords, h_coords;
  if (s.kind == SpecKind::grw) {
    f_coords = {s.time_coord};
    h_coords = {s.time_coord};
    h_coords.insert(h_coords.end(), s.factors[0].coords.begin(), s.factors[0].coords.end());
  } else {
    f_coords = s.factors[0].coords;
    h_coords = f_coords;
    h_coords.insert(h_coords.end(), s.factors[1].coords.begin(), s.factors[1].coords.end());
  }
  const auto& wj = detail::require(j, "warpings", "");
  s.f = detail::parse_field(detail::require(wj, "f", "warpings"), "warpings.f", f_coords);
  s.h = detail::parse_field(detail::require(wj, "h", "warpings"), "warpings.h", h_coords);

  if (j.contains("sampling")) {
    const auto& sj = j.at("sampling");
    if (!sj.is_object()) throw SpecError("sampling", "expected an object");
    if (sj.contains("boxes")) {
      const auto& bj = sj.at("boxes");
      if (!bj.is_object()) throw SpecError("sampling.boxes", "expected an object");
      for (const auto& [key, val] : bj.items()) {
        if (std::find(all.begin(), all.end(), key) == all.end())
          throw SpecError("sampling.boxes." + key, "unknown coordinate");
        s.boxes[key] = detail::parse_interval(val, "sampling.boxes." + key);
      }
    }
    if (sj.contains("points")) {
      const auto& pj = sj.at("points");
      if (!pj.is_number_integer() || pj.get<long long>() <= 0)
        throw SpecError("sampling.points", "expected a positive integer");
      s.points = pj.get<std::size_t>();
    }
    if (sj.contains("seed")) {
      const auto& pj = sj.at("seed");
      if (!pj.is_number_integer() || pj.get<long long>() < 0)
        throw SpecError("sampling.seed", "expected a non-negative integer");
      s.seed = pj.get<std::uint64_t>();
    }
  }
  if (j.contains("tolerances")) {
    const auto& tj = j.at("tolerances");
    if (!tj.is_object()) throw SpecError("tolerances", "expected an object");
    for (const auto& [key, val] : tj.items()) {
      const double v = detail::require_number(val, "tolerances." + key);
      if (!(v > 0.0)) throw SpecError("tolerances." + key, "must be positive");
      s.tolerances[key] = v;
    }
  }
  if (j.contains("classify_at")) {
    const auto& cj = j.at("classify_at");
    if (!cj.is_object()) throw SpecError("classify_at", "expected an object");
    for (const auto& [key, val] : cj.items()) {
      if (std::find(all.begin(), all.end(), key) == all.end())
        throw SpecError("classify_at." + key, "unknown coordinate");
      s.classify_at[key] = detail::require_number(val, "classify_at." + key);
    }
  }
  if (j.contains("planted")) {
    const auto& pj = j.at("planted");
    PlantedQE p;
    p.alpha = detail::parse_field(detail::require(pj, "alpha", "planted"), "planted.alpha", all);
    p.beta = detail::parse_field(detail::require(pj, "beta", "planted"), "planted.beta", all);
    s.planted = p;
  }

  try {
    (void)s.product();
  } catch (const std::invalid_argument& e) {
    throw SpecError("factors", e.what());
  }
  return s;
}

inline ManifoldSpec load_spec(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SpecError("", "cannot open spec file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_spec(ss.str());
}

}  // namespace seqwarp
