#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

#include "pcbd/attack.hpp"
#include "pcbd/classifier.hpp"
#include "pcbd/error.hpp"
#include "pcbd/geometry.hpp"
#include "pcbd/rng.hpp"

namespace pcbd {

// Reverse engineering of the insertion location. For a putative source class
// we look for the location closest to the class's clouds at which a single
// inserted point flips at least a fraction pi of them, by gradient descent on
// margin + lambda * distance with lambda adapted to the constraint.

struct EstimationParams {
  double pi = 0.9;        // required misclassification fraction
  double delta = 0.1;     // step size
  std::size_t tau_max = 3000;
  double alpha = 1.5;     // lambda scaling factor
  double lambda0 = 1e-5;  // initial penalty
  std::size_t restarts = 10;
  // Gradient norm cap; each step moves c by at most delta * grad_clip.
  // Infinity gives unclipped steps.
  double grad_clip = 1.0;
};

inline void validate(const EstimationParams& p) {
  if (!(p.pi > 0.0 && p.pi <= 1.0)) throw InvalidInput("pi must lie in (0, 1]");
  if (!(p.delta > 0.0)) throw InvalidInput("delta must be > 0");
  if (!(p.alpha > 1.0)) throw InvalidInput("alpha must be > 1");
  if (p.tau_max < 1) throw InvalidInput("tau_max must be >= 1");
  if (!(p.lambda0 > 0.0)) throw InvalidInput("lambda0 must be > 0");
  if (p.restarts < 1) throw InvalidInput("restarts must be >= 1");
  if (!(p.grad_clip > 0.0)) throw InvalidInput("grad_clip must be > 0");
}

inline Point3 clip_norm(const Point3& g, double max_norm) {
  const double n = norm(g);
  return n > max_norm ? g * (max_norm / n) : g;
}

struct GroupEstimate {
  std::size_t source = 0;
  std::optional<Point3> center;       // empty: FAILED
  std::optional<std::size_t> target;  // voted target, set when center is
  double rho = 0.0;                   // misclassification fraction at center
  double mean_source_distance = std::numeric_limits<double>::infinity();

  bool failed() const noexcept { return !center.has_value(); }
};

struct SampleWiseEstimate {
  std::vector<std::optional<Point3>> centers;  // one per cloud; empty: FAILED

  std::size_t failed_count() const {
    return static_cast<std::size_t>(
        std::count_if(centers.begin(), centers.end(), [](const auto& c) { return !c; }));
  }
};

// One row per iteration: loss at c(tau), lambda(tau), and rho at c(tau+1).
struct TraceRow {
  std::size_t restart = 0;
  std::size_t iter = 0;
  double loss = 0.0;
  double rho = 0.0;
  double lambda = 0.0;
  Point3 c;
};

inline void write_trace_csv(std::ostream& out, std::span<const TraceRow> rows) {
  out << "restart,iter,loss,rho,lambda,cx,cy,cz\n";
  for (const auto& r : rows) {
    out << r.restart << ',' << r.iter << ',' << format_real(r.loss) << ',' << format_real(r.rho)
        << ',' << format_real(r.lambda) << ',' << format_real(r.c.x) << ',' << format_real(r.c.y)
        << ',' << format_real(r.c.z) << '\n';
  }
}

// Penalty update after an iterate with misclassification fraction rho.
// Clamped to a finite positive range so lambda never reaches 0 or inf.
inline double update_penalty(double lambda, double rho, const EstimationParams& p) {
  constexpr double kMin = 1e-300;
  constexpr double kMax = 1e300;
  const double next = rho >= p.pi ? lambda * p.alpha : lambda / p.alpha;
  return std::clamp(next, kMin, kMax);
}

struct Candidate {
  Point3 c;
  double total_distance = std::numeric_limits<double>::infinity();
};

// Smallest-total-distance candidate that passes `accept`, earlier entries
// winning ties. Candidates are re-checked instead of trusting loop state.
template <typename Accept>
std::optional<Candidate> select_best_candidate(std::vector<Candidate> candidates, Accept&& accept) {
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const Candidate& a, const Candidate& b) {
                     return a.total_distance < b.total_distance;
                   });
  for (const auto& cand : candidates) {
    if (accept(cand.c)) return cand;
  }
  return std::nullopt;
}

namespace detail {

// A set of clouds with cached pooled features, plus the margin to push down
// and the success test used for rho.
class InsertionProblem {
 public:
  InsertionProblem(const ClassifierWeights& w, std::span<const PointCloud> clouds,
                   MarginSpec spec)
      : w_(w), clouds_(clouds), spec_(spec) {
    pools_.reserve(clouds.size());
    for (const auto& x : clouds) pools_.push_back(cloud_pool(w, x));
  }

  std::size_t size() const { return clouds_.size(); }

  bool succeeded(std::span<const double> logits) const {
    const std::size_t pred = argmax_class(logits);
    return spec_.kind == MarginSpec::Kind::kUntargeted ? pred != spec_.source
                                                       : pred == spec_.target;
  }

  // Loss and its gradient at c for penalty lambda.
  double loss_and_gradient(const Point3& c, double lambda, Point3& grad) const {
    const PointFeatures feat = point_features(w_, c);
    double loss = 0.0;
    grad = {};
    for (std::size_t i = 0; i < clouds_.size(); ++i) {
      double margin = 0.0;
      grad += insertion_margin_gradient(w_, pools_[i], feat, spec_, &margin);
      loss += margin;
    }
    for (const auto& x : clouds_) {
      loss += lambda * point_to_cloud_distance(c, x);
      grad += lambda * distance_gradient(c, x);
    }
    return loss;
  }

  double success_fraction(const Point3& c) const {
    const PointFeatures feat = point_features(w_, c);
    std::size_t hits = 0;
    for (const auto& pool : pools_) hits += succeeded(insertion_logits(w_, pool, feat));
    return static_cast<double>(hits) / static_cast<double>(clouds_.size());
  }

  // Same fraction, recomputed with full forward passes on X ∪ {c}.
  double success_fraction_from_scratch(const Point3& c) const {
    std::size_t hits = 0;
    for (const auto& x : clouds_) {
      PointCloud with = x;
      with.points.push_back(c);
      hits += succeeded(forward_logits(w_, with));
    }
    return static_cast<double>(hits) / static_cast<double>(clouds_.size());
  }

  double total_distance(const Point3& c) const {
    double total = 0.0;
    for (const auto& x : clouds_) total += point_to_cloud_distance(c, x);
    return total;
  }

 private:
  const ClassifierWeights& w_;
  std::span<const PointCloud> clouds_;
  MarginSpec spec_;
  std::vector<std::vector<double>> pools_;
};

// Independent descent trajectories from N(0, I) starts. Each returns its
// best constraint-satisfying iterate, if it found any.
inline std::vector<Candidate> run_trajectories(const InsertionProblem& problem,
                                               const EstimationParams& params,
                                               std::uint64_t seed,
                                               std::vector<TraceRow>* trace) {
  std::vector<Candidate> found;
  for (std::size_t r = 0; r < params.restarts; ++r) {
    Rng rng(mix_seed(seed, r));
    Point3 c{rng.normal(), rng.normal(), rng.normal()};
    double lambda = params.lambda0;
    Candidate best;
    bool have_best = false;

    for (std::size_t tau = 0; tau < params.tau_max; ++tau) {
      Point3 grad;
      const double loss = problem.loss_and_gradient(c, lambda, grad);
      const Point3 next = c - params.delta * clip_norm(grad, params.grad_clip);
      if (!is_finite(next)) break;  // diverged; this restart is over
      c = next;
      const double rho = problem.success_fraction(c);
      if (trace) trace->push_back({r, tau, loss, rho, lambda, c});
      if (rho >= params.pi) {
        const double dist = problem.total_distance(c);
        if (dist < best.total_distance) {
          best = {c, dist};
          have_best = true;
        }
      }
      lambda = update_penalty(lambda, rho, params);
    }
    if (have_best) found.push_back(best);
  }
  return found;
}

}  // namespace detail

// Margin sum plus lambda-weighted total distance for the group problem.
inline double group_loss(const ClassifierWeights& w, std::span<const PointCloud> clouds,
                         std::size_t source, const Point3& c, double lambda) {
  check_dimensions(w);
  if (clouds.empty()) throw InvalidInput("group_loss: no clouds");
  if (source >= w.num_classes()) throw InvalidInput("group_loss: source out of range");
  double loss = 0.0;
  const auto spec = MarginSpec::untargeted(source);
  for (const auto& x : clouds) {
    PointCloud with = x;
    with.points.push_back(c);
    loss += margin_value(forward_logits(w, with), spec);
    loss += lambda * point_to_cloud_distance(c, x);
  }
  return loss;
}

// Argmax over k != source of the vote counts, lowest index on ties.
inline std::size_t vote_from_predictions(std::span<const std::size_t> predictions,
                                         std::size_t source, std::size_t num_classes) {
  if (num_classes < 2 || source >= num_classes) throw InvalidInput("vote: bad class range");
  std::vector<std::size_t> votes(num_classes, 0);
  for (std::size_t p : predictions) {
    if (p >= num_classes) throw InvalidInput("vote: prediction out of range");
    ++votes[p];
  }
  std::size_t best = source == 0 ? 1 : 0;
  for (std::size_t k = 0; k < num_classes; ++k) {
    if (k != source && votes[k] > votes[best]) best = k;
  }
  return best;
}

inline std::size_t vote_target_class(const ClassifierWeights& w,
                                     std::span<const PointCloud> clouds, std::size_t source,
                                     const std::optional<Point3>& center) {
  if (!center) throw InvalidInput("vote_target_class: estimate FAILED");
  check_dimensions(w);
  std::vector<std::size_t> preds;
  preds.reserve(clouds.size());
  for (const auto& x : clouds) {
    PointCloud with = x;
    with.points.push_back(*center);
    preds.push_back(predict(w, with));
  }
  return vote_from_predictions(preds, source, w.num_classes());
}

// Common insertion location for class `source` (untargeted group problem).
inline GroupEstimate estimate_group_location(const ClassifierWeights& w,
                                             std::span<const PointCloud> clouds,
                                             std::size_t source, const EstimationParams& params,
                                             std::uint64_t seed,
                                             std::vector<TraceRow>* trace = nullptr) {
  validate(params);
  check_dimensions(w);
  if (clouds.empty()) throw InvalidInput("estimate_group_location: no clouds");
  if (source >= w.num_classes()) throw InvalidInput("estimate_group_location: bad source");

  const detail::InsertionProblem problem(w, clouds, MarginSpec::untargeted(source));
  GroupEstimate est;
  est.source = source;
  double rho = 0.0;
  auto chosen = select_best_candidate(
      detail::run_trajectories(problem, params, seed, trace), [&](const Point3& c) {
        rho = problem.success_fraction_from_scratch(c);
        return rho >= params.pi;
      });
  if (!chosen) return est;

  est.center = chosen->c;
  est.rho = rho;
  est.mean_source_distance = chosen->total_distance / static_cast<double>(clouds.size());
  est.target = vote_target_class(w, clouds, source, est.center);
  return est;
}

// Location for one cloud that flips it from `source` to `target`
// (targeted margin, success means predicting `target`).
inline std::optional<Point3> estimate_samplewise_location(
    const ClassifierWeights& w, const PointCloud& cloud, std::size_t source, std::size_t target,
    const EstimationParams& params, std::uint64_t seed, std::vector<TraceRow>* trace = nullptr) {
  validate(params);
  check_dimensions(w);
  if (source == target) throw InvalidInput("sample-wise estimation needs target != source");
  if (source >= w.num_classes() || target >= w.num_classes()) {
    throw InvalidInput("sample-wise estimation: class out of range");
  }
  require_nonempty(cloud, "estimate_samplewise_location");

  const std::span<const PointCloud> one(&cloud, 1);
  const detail::InsertionProblem problem(w, one, MarginSpec::targeted(source, target));
  auto chosen = select_best_candidate(
      detail::run_trajectories(problem, params, seed, trace), [&](const Point3& c) {
        return problem.success_fraction_from_scratch(c) >= params.pi;
      });
  if (!chosen) return std::nullopt;
  return chosen->c;
}

inline SampleWiseEstimate estimate_samplewise(const ClassifierWeights& w,
                                              std::span<const PointCloud> clouds,
                                              std::size_t source, std::size_t target,
                                              const EstimationParams& params,
                                              std::uint64_t seed) {
  SampleWiseEstimate out;
  out.centers.reserve(clouds.size());
  for (std::size_t i = 0; i < clouds.size(); ++i) {
    out.centers.push_back(
        estimate_samplewise_location(w, clouds[i], source, target, params, mix_seed(seed, i)));
  }
  return out;
}

}  // namespace pcbd
