#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/special_functions/trigamma.hpp>

#include "pcbd/error.hpp"
#include "pcbd/estimation.hpp"
#include "pcbd/geometry.hpp"

namespace pcbd {

// Substitute for a zero source distance in the ratio statistics.
inline constexpr double kMinSourceDistance = 1e-9;
// p-values below this are reported as underflow ("u.f.").
inline constexpr double kUnderflowPValue = 1e-323;

// ---------------------------------------------------------------------------
// Per-class statistics

inline double mean_cloud_distance(const Point3& c, std::span<const PointCloud> clouds) {
  if (clouds.empty()) throw InvalidInput("mean distance over an empty clean set");
  double total = 0.0;
  for (const auto& x : clouds) total += point_to_cloud_distance(c, x);
  return total / static_cast<double>(clouds.size());
}

// Mean distance from the group estimate to the source class's clean clouds.
inline double compute_r_s(const Point3& center, std::span<const PointCloud> source_clouds) {
  return mean_cloud_distance(center, source_clouds);
}

// Mean distance from the group estimate to the voted target class's clean clouds.
inline double compute_r_t(const Point3& center, std::span<const PointCloud> target_clouds) {
  return mean_cloud_distance(center, target_clouds);
}

// Mean cosine similarity between the group estimate and the sample-wise
// estimates. FAILED samples contribute 0.
inline double compute_z(const Point3& group_center, const SampleWiseEstimate& samplewise) {
  if (samplewise.centers.empty()) return 0.0;
  double total = 0.0;
  for (const auto& c : samplewise.centers) {
    if (c) total += cosine_similarity(group_center, *c);
  }
  return total / static_cast<double>(samplewise.centers.size());
}

// Min-max normalization into [0, 1]; a degenerate range maps everything to 1.
inline std::vector<double> compute_w(std::span<const double> z) {
  if (z.empty()) throw InvalidInput("compute_w: no values");
  const auto [lo, hi] = std::minmax_element(z.begin(), z.end());
  const double range = *hi - *lo;
  std::vector<double> w(z.size(), 1.0);
  if (range < 1e-12) return w;
  for (std::size_t i = 0; i < z.size(); ++i) {
    w[i] = std::clamp((z[i] - *lo) / range, 0.0, 1.0);
  }
  return w;
}

inline double combined_statistic(double w, double r_t, double r_s) {
  return w * r_t / std::max(r_s, kMinSourceDistance);
}

struct ClassStatistics {
  std::size_t source = 0;
  std::optional<std::size_t> target;  // empty when the group estimate FAILED
  double r_s = 0.0;
  double r_t = 0.0;
  double z = 0.0;
  double w = 0.0;
  double r = 0.0;

  bool failed() const noexcept { return !target.has_value(); }
};

struct AblationStatistics {
  double inv_rs = 0.0;
  double rt_over_rs = 0.0;
  double w_over_rs = 0.0;
  double r = 0.0;
};

// The three simplified statistics alongside r, for reporting only.
inline AblationStatistics ablation_statistics(const ClassStatistics& s) {
  if (s.failed()) return {};
  const double rs = std::max(s.r_s, kMinSourceDistance);
  return {1.0 / rs, s.r_t / rs, s.w / rs, s.r};
}

// Assembles per-class statistics from estimation results. clean_sets[k] is
// the clean detection set of class k. A FAILED class gets r = 0 and takes
// no part in the z min-max normalization.
inline std::vector<ClassStatistics> compute_statistics(
    std::span<const std::vector<PointCloud>> clean_sets, std::span<const GroupEstimate> groups,
    std::span<const SampleWiseEstimate> samplewise) {
  const std::size_t K = clean_sets.size();
  if (groups.size() != K || samplewise.size() != K) {
    throw InvalidInput("compute_statistics: need one estimate per class");
  }
  std::vector<ClassStatistics> stats(K);
  std::vector<double> z_values;
  std::vector<std::size_t> active;
  for (std::size_t k = 0; k < K; ++k) {
    auto& s = stats[k];
    s.source = k;
    const auto& g = groups[k];
    if (g.failed()) continue;
    if (!g.target || *g.target >= K) throw InvalidInput("group estimate without a valid target");
    s.target = g.target;
    s.r_s = compute_r_s(*g.center, clean_sets[k]);
    s.r_t = compute_r_t(*g.center, clean_sets[*g.target]);
    s.z = compute_z(*g.center, samplewise[k]);
    z_values.push_back(s.z);
    active.push_back(k);
  }
  if (active.empty()) return stats;
  const std::vector<double> w = compute_w(z_values);
  for (std::size_t i = 0; i < active.size(); ++i) {
    auto& s = stats[active[i]];
    s.w = w[i];
    s.r = combined_statistic(s.w, s.r_t, s.r_s);
  }
  return stats;
}

// ---------------------------------------------------------------------------
// Collateral-damage exclusion

struct Exclusion {
  std::size_t s_max = 0;
  std::vector<std::size_t> excluded;  // ascending, always contains s_max
};

inline std::size_t argmax_statistic(std::span<const ClassStatistics> stats) {
  if (stats.empty()) throw InvalidInput("no statistics");
  std::size_t best = 0;
  for (std::size_t k = 1; k < stats.size(); ++k) {
    if (stats[k].r > stats[best].r) best = k;
  }
  return best;
}

// Every class voting for the same target as the class with the largest r.
inline Exclusion exclusion_set(std::span<const ClassStatistics> stats) {
  Exclusion ex;
  ex.s_max = argmax_statistic(stats);
  const auto& target = stats[ex.s_max].target;
  for (std::size_t k = 0; k < stats.size(); ++k) {
    if (k == ex.s_max || (target && stats[k].target == target)) ex.excluded.push_back(k);
  }
  return ex;
}

// ---------------------------------------------------------------------------
// Gamma null

struct GammaFit {
  double shape = 1.0;
  double scale = 1.0;
};

inline constexpr double kMinNullValue = 1e-12;

// Method-of-moments estimate: shape = m^2 / v, scale = v / m (population variance).
inline GammaFit gamma_moment_estimate(std::span<const double> values) {
  if (values.empty()) throw DegenerateFit("no values to fit");
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  var /= static_cast<double>(values.size());
  if (!(mean > 0.0) || !(var > 0.0) || var <= 1e-300) {
    throw DegenerateFit("all null values are identical");
  }
  return {mean * mean / var, var / mean};
}

// Maximum-likelihood Gamma fit. Values are clamped below at 1e-12, the shape
// starts at its moment estimate and is refined by Newton's method on
// log(k) - digamma(k) = log(mean) - mean(log x).
inline GammaFit fit_gamma(std::span<const double> raw_values) {
  if (raw_values.size() < 2) throw DegenerateFit("need at least two values");
  std::vector<double> values(raw_values.begin(), raw_values.end());
  for (auto& v : values) {
    if (!std::isfinite(v) || v < 0.0) throw InvalidInput("null values must be finite and >= 0");
    v = std::max(v, kMinNullValue);
  }
  const GammaFit init = gamma_moment_estimate(values);

  double mean = 0.0, mean_log = 0.0;
  for (double v : values) {
    mean += v;
    mean_log += std::log(v);
  }
  mean /= static_cast<double>(values.size());
  mean_log /= static_cast<double>(values.size());
  const double s = std::log(mean) - mean_log;
  if (!(s > 0.0)) throw DegenerateFit("all null values are identical");

  double k = init.shape;
  for (int it = 0; it < 100; ++it) {
    const double f = std::log(k) - boost::math::digamma(k) - s;
    const double df = 1.0 / k - boost::math::trigamma(k);
    double next = k - f / df;
    if (!(next > 0.0)) next = k / 2.0;  // stay in the domain
    const double change = std::abs(next - k);
    k = next;
    if (change < 1e-10) break;
  }
  return {k, mean / k};
}

inline double gamma_cdf(const GammaFit& fit, double x) {
  if (x <= 0.0) return 0.0;
  return boost::math::gamma_p(fit.shape, x / fit.scale);
}

namespace detail {

// log of the upper regularized incomplete gamma Q(a, x), usable where Q
// itself underflows (large x): Q ~ x^(a-1) e^-x / Gamma(a) * (1 + (a-1)/x + ...).
inline double log_gamma_q(double a, double x) {
  const double q = boost::math::gamma_q(a, x);
  if (q > std::numeric_limits<double>::min()) return std::log(q);
  double series = 1.0, term = 1.0;
  for (int i = 1; i < 30; ++i) {
    const double next = term * (a - i) / x;
    if (std::abs(next) >= std::abs(term)) break;
    term = next;
    series += term;
  }
  return (a - 1.0) * std::log(x) - x - std::lgamma(a) + std::log(std::max(series, 1e-300));
}

}  // namespace detail

struct PValue {
  double pv = 1.0;
  double log_pv = 0.0;    // natural log; valid below the double range
  bool underflow = false;  // pv < 1e-323

  std::string display() const {
    if (underflow) return "u.f.";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2g", pv);
    return buf;
  }
};

// pv = 1 - cdf^m, where cdf = 1 - complement. Works from the complement so
// tails far beyond double precision stay accurate.
inline PValue order_statistic_pvalue_from_complement(double complement, double log_complement,
                                                     std::size_t m) {
  if (m < 1) throw InvalidInput("order statistic p-value needs at least one null draw");
  const double md = static_cast<double>(m);
  PValue out;
  if (complement >= 1.0) return {1.0, 0.0, false};
  out.pv = -std::expm1(md * std::log1p(-complement));
  if (out.pv > 0.0) {
    out.log_pv = std::log(out.pv);
  } else {
    // 1 - (1 - q)^m ~ m q as q -> 0
    out.log_pv = std::log(md) + log_complement;
  }
  out.pv = std::clamp(out.pv, 0.0, 1.0);
  out.underflow = out.pv < kUnderflowPValue;
  return out;
}

// Maximum order statistic p-value for a null cdf value G(r_max).
inline PValue order_statistic_pvalue(double cdf, std::size_t m) {
  const double q = 1.0 - cdf;
  return order_statistic_pvalue_from_complement(q, q > 0.0 ? std::log(q) : -INFINITY, m);
}

inline PValue order_statistic_pvalue(const GammaFit& fit, double r_max, std::size_t m) {
  if (r_max <= 0.0) return order_statistic_pvalue(0.0, m);
  const double x = r_max / fit.scale;
  const double q = boost::math::gamma_q(fit.shape, x);
  return order_statistic_pvalue_from_complement(q, detail::log_gamma_q(fit.shape, x), m);
}

// Null over [0, inf): a point mass at zero plus a Gamma on the positive part.
// Exact zeros are produced by convention (the min-z class has w = 0, FAILED
// classes have r = 0) and carry no scale information, so they are counted
// rather than clamped into the likelihood. With no zeros this is fit_gamma.
struct NullFit {
  double zero_mass = 0.0;
  GammaFit gamma;

  double cdf(double x) const {
    if (x < 0.0) return 0.0;
    return zero_mass + (1.0 - zero_mass) * gamma_cdf(gamma, x);
  }
};

inline NullFit fit_null(std::span<const double> values) {
  std::vector<double> positive;
  for (double v : values) {
    if (!std::isfinite(v) || v < 0.0) throw InvalidInput("null values must be finite and >= 0");
    if (v > kMinNullValue) positive.push_back(v);
  }
  if (positive.size() < 2) throw DegenerateFit("fewer than two positive null values");
  NullFit out;
  out.zero_mass = static_cast<double>(values.size() - positive.size()) /
                  static_cast<double>(values.size());
  out.gamma = fit_gamma(positive);
  return out;
}

inline PValue order_statistic_pvalue(const NullFit& fit, double r_max, std::size_t m) {
  if (r_max <= 0.0) return order_statistic_pvalue(fit.zero_mass, m);
  const double x = r_max / fit.gamma.scale;
  const double keep = 1.0 - fit.zero_mass;
  const double q = keep * boost::math::gamma_q(fit.gamma.shape, x);
  return order_statistic_pvalue_from_complement(
      q, std::log(keep) + detail::log_gamma_q(fit.gamma.shape, x), m);
}

// ---------------------------------------------------------------------------
// Verdict

enum class Verdict { kClean, kAttacked, kInconclusive };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::kClean: return "clean";
    case Verdict::kAttacked: return "attacked";
    case Verdict::kInconclusive: return "inconclusive";
  }
  return "?";
}

// Attacked iff pv < phi.
inline Verdict verdict_for(double pv, double phi) {
  return pv < phi ? Verdict::kAttacked : Verdict::kClean;
}

// Smallest number of statistics a two-parameter null is fitted to.
inline constexpr std::size_t kMinNullSize = 4;

struct DetectionReport {
  std::vector<ClassStatistics> stats;
  std::vector<std::size_t> excluded;
  std::vector<double> null_values;
  std::optional<NullFit> fit;
  std::size_t s_max = 0;
  double r_max = 0.0;
  PValue pv;
  double phi = 0.05;
  Verdict verdict = Verdict::kInconclusive;
  std::optional<std::size_t> inferred_target;
  std::string note;

  std::size_t K() const { return stats.size(); }
  std::size_t J() const { return excluded.size(); }
  bool is_excluded(std::size_t k) const {
    return std::find(excluded.begin(), excluded.end(), k) != excluded.end();
  }
};

inline DetectionReport detect(std::vector<ClassStatistics> stats, double phi = 0.05) {
  if (stats.size() < 2) throw InvalidInput("detect: need statistics for at least 2 classes");
  if (!(phi > 0.0 && phi < 1.0)) throw InvalidInput("detect: phi must lie in (0, 1)");
  DetectionReport rep;
  rep.stats = std::move(stats);
  rep.phi = phi;

  const std::size_t K = rep.stats.size();
  Exclusion ex = exclusion_set(rep.stats);
  rep.s_max = ex.s_max;
  rep.r_max = rep.stats[ex.s_max].r;
  if (K - ex.excluded.size() < kMinNullSize) {
    ex.excluded = {ex.s_max};
    rep.note = "exclusion reduced to s_max: too few statistics left for the null";
  }
  rep.excluded = ex.excluded;
  if (K - rep.J() < kMinNullSize) {
    rep.note = "too few classes to fit a null distribution";
    return rep;
  }

  for (std::size_t k = 0; k < K; ++k) {
    if (!rep.is_excluded(k)) rep.null_values.push_back(rep.stats[k].r);
  }
  try {
    rep.fit = fit_null(rep.null_values);
  } catch (const DegenerateFit& e) {
    rep.note = std::string("degenerate null fit: ") + e.what();
    return rep;
  }

  rep.pv = order_statistic_pvalue(*rep.fit, rep.r_max, K - rep.J());
  rep.verdict = verdict_for(rep.pv.pv, phi);
  if (rep.verdict == Verdict::kAttacked) rep.inferred_target = rep.stats[rep.s_max].target;
  return rep;
}

}  // namespace pcbd
