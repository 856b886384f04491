#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "pcbd/error.hpp"
#include "pcbd/geometry.hpp"
#include "pcbd/rng.hpp"
#include "pcbd/text_io.hpp"

namespace pcbd {

// Fixed PointNet-style architecture: shared per-point MLP 3 -> 64 -> 128,
// max-pool over points, head 128 -> 64 -> K. ReLU everywhere except logits.
inline constexpr std::size_t kPointHidden = 64;
inline constexpr std::size_t kFeatureDim = 128;
inline constexpr std::size_t kHeadHidden = 64;

struct DenseLayer {
  std::size_t in = 0;
  std::size_t out = 0;
  std::vector<double> weight;  // out x in, row-major
  std::vector<double> bias;    // out

  DenseLayer() = default;
  DenseLayer(std::size_t in_dim, std::size_t out_dim)
      : in(in_dim), out(out_dim), weight(in_dim * out_dim, 0.0), bias(out_dim, 0.0) {}

  double w(std::size_t o, std::size_t i) const { return weight[o * in + i]; }

  bool consistent() const { return weight.size() == in * out && bias.size() == out; }

  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

struct ClassifierWeights {
  DenseLayer point1;  // 3 -> 64
  DenseLayer point2;  // 64 -> 128
  DenseLayer head1;   // 128 -> 64
  DenseLayer head2;   // 64 -> K

  ClassifierWeights() = default;
  explicit ClassifierWeights(std::size_t num_classes)
      : point1(3, kPointHidden),
        point2(kPointHidden, kFeatureDim),
        head1(kFeatureDim, kHeadHidden),
        head2(kHeadHidden, num_classes) {}

  std::size_t num_classes() const noexcept { return head2.out; }

  template <typename F>
  void for_each_layer(F&& f) {
    f(point1);
    f(point2);
    f(head1);
    f(head2);
  }
  template <typename F>
  void for_each_layer(F&& f) const {
    f(point1);
    f(point2);
    f(head1);
    f(head2);
  }

  // He-uniform initialization of all weights, zero biases.
  static ClassifierWeights random(std::size_t num_classes, std::uint64_t seed) {
    if (num_classes < 2) throw InvalidInput("classifier needs at least 2 classes");
    ClassifierWeights w(num_classes);
    Rng rng(seed);
    w.for_each_layer([&](DenseLayer& layer) {
      const double bound = std::sqrt(6.0 / static_cast<double>(layer.in));
      for (auto& v : layer.weight) v = rng.uniform(-bound, bound);
    });
    return w;
  }

  friend bool operator==(const ClassifierWeights&, const ClassifierWeights&) = default;
};

// Throws InvalidInput unless every layer has the fixed architecture's shape.
inline void check_dimensions(const ClassifierWeights& w) {
  const bool ok = w.point1.in == 3 && w.point1.out == kPointHidden &&
                  w.point2.in == kPointHidden && w.point2.out == kFeatureDim &&
                  w.head1.in == kFeatureDim && w.head1.out == kHeadHidden &&
                  w.head2.in == kHeadHidden && w.head2.out >= 2 && w.point1.consistent() &&
                  w.point2.consistent() && w.head1.consistent() && w.head2.consistent();
  if (!ok) throw InvalidInput("classifier weights have inconsistent dimensions");
}

inline void check_compatible(const ClassifierWeights& w, std::size_t num_classes) {
  check_dimensions(w);
  if (w.num_classes() != num_classes) {
    throw InvalidInput("classifier has " + std::to_string(w.num_classes()) +
                       " classes but the data has " + std::to_string(num_classes));
  }
}

// Post-ReLU per-point activations in channel-major layout
// (hidden[j * n + p], features[k * n + p]). Each point goes through exactly
// the same sequence of floating-point operations regardless of its index or
// of n, so a point's features do not depend on the rest of the cloud.
struct PointFeatures {
  std::size_t n = 0;
  std::vector<double> hidden;
  std::vector<double> features;

  double feature(std::size_t k, std::size_t p) const { return features[k * n + p]; }
};

inline PointFeatures point_features(const ClassifierWeights& w, std::span<const Point3> pts) {
  const std::size_t n = pts.size();
  PointFeatures f;
  f.n = n;
  f.hidden.assign(kPointHidden * n, 0.0);
  f.features.assign(kFeatureDim * n, 0.0);

  for (std::size_t j = 0; j < kPointHidden; ++j) {
    const double wx = w.point1.w(j, 0), wy = w.point1.w(j, 1), wz = w.point1.w(j, 2);
    const double b = w.point1.bias[j];
    double* row = f.hidden.data() + j * n;
    for (std::size_t p = 0; p < n; ++p) {
      double h = b;
      h += wx * pts[p].x;
      h += wy * pts[p].y;
      h += wz * pts[p].z;
      row[p] = h > 0.0 ? h : 0.0;
    }
  }

  for (std::size_t k = 0; k < kFeatureDim; ++k) {
    double* row = f.features.data() + k * n;
    const double b = w.point2.bias[k];
    for (std::size_t p = 0; p < n; ++p) row[p] = b;
    for (std::size_t j = 0; j < kPointHidden; ++j) {
      const double wkj = w.point2.w(k, j);
      const double* hid = f.hidden.data() + j * n;
      for (std::size_t p = 0; p < n; ++p) row[p] += wkj * hid[p];
    }
    for (std::size_t p = 0; p < n; ++p) row[p] = row[p] > 0.0 ? row[p] : 0.0;
  }
  return f;
}

inline PointFeatures point_features(const ClassifierWeights& w, const Point3& p) {
  return point_features(w, std::span<const Point3>(&p, 1));
}

// Channel-wise max over points; the winning index is the lowest among ties.
struct PooledFeatures {
  std::vector<double> value;
  std::vector<std::size_t> winner;
};

inline PooledFeatures max_pool(const PointFeatures& f) {
  PooledFeatures pooled;
  pooled.value.resize(kFeatureDim);
  pooled.winner.resize(kFeatureDim);
  for (std::size_t k = 0; k < kFeatureDim; ++k) {
    const double* row = f.features.data() + k * f.n;
    std::size_t best = 0;
    for (std::size_t p = 1; p < f.n; ++p) {
      if (row[p] > row[best]) best = p;
    }
    pooled.value[k] = row[best];
    pooled.winner[k] = best;
  }
  return pooled;
}

struct HeadActivations {
  std::vector<double> hidden;  // post-ReLU, kHeadHidden
  std::vector<double> logits;  // K
};

inline HeadActivations head_forward(const ClassifierWeights& w, std::span<const double> pooled) {
  HeadActivations a;
  a.hidden.resize(kHeadHidden);
  for (std::size_t o = 0; o < kHeadHidden; ++o) {
    double h = w.head1.bias[o];
    for (std::size_t i = 0; i < kFeatureDim; ++i) h += w.head1.w(o, i) * pooled[i];
    a.hidden[o] = h > 0.0 ? h : 0.0;
  }
  const std::size_t K = w.num_classes();
  a.logits.resize(K);
  for (std::size_t o = 0; o < K; ++o) {
    double h = w.head2.bias[o];
    for (std::size_t i = 0; i < kHeadHidden; ++i) h += w.head2.w(o, i) * a.hidden[i];
    a.logits[o] = h;
  }
  return a;
}

// Pre-softmax outputs h(k|X).
inline std::vector<double> forward_logits(const ClassifierWeights& w, const PointCloud& cloud) {
  check_dimensions(w);
  require_nonempty(cloud, "forward_logits");
  const PooledFeatures pooled = max_pool(point_features(w, cloud.view()));
  return head_forward(w, pooled.value).logits;
}

// Argmax with ties resolved toward the lowest class index.
inline std::size_t argmax_class(std::span<const double> logits) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < logits.size(); ++k) {
    if (logits[k] > logits[best]) best = k;
  }
  return best;
}

inline std::size_t predict(const ClassifierWeights& w, const PointCloud& cloud) {
  return argmax_class(forward_logits(w, cloud));
}

inline double accuracy(const ClassifierWeights& w, const Dataset& data) {
  check_compatible(w, data.num_classes);
  if (data.samples.empty()) throw InvalidInput("accuracy: empty dataset");
  std::size_t correct = 0;
  for (const auto& s : data.samples) correct += (predict(w, s.cloud) == s.label);
  return static_cast<double>(correct) / static_cast<double>(data.samples.size());
}

// ---------------------------------------------------------------------------
// Single-point insertion. With X's pooled features cached, the logits of
// X ∪ {c} only need c's own features: c is appended last, so it takes a
// channel only when strictly above X's maximum.

// Which scalar margin of the logits a detection loss uses.
struct MarginSpec {
  enum class Kind { kUntargeted, kTargeted };

  Kind kind = Kind::kUntargeted;
  std::size_t source = 0;
  std::size_t target = 0;  // used by kTargeted only

  static MarginSpec untargeted(std::size_t source) { return {Kind::kUntargeted, source, 0}; }
  static MarginSpec targeted(std::size_t source, std::size_t target) {
    return {Kind::kTargeted, source, target};
  }
};

// h(s) minus the competing logit. For the untargeted margin the competitor is
// the current argmax over k != s (lowest index on ties).
inline double margin_value(std::span<const double> logits, const MarginSpec& spec,
                           std::size_t* competitor = nullptr) {
  if (spec.source >= logits.size() ||
      (spec.kind == MarginSpec::Kind::kTargeted && spec.target >= logits.size())) {
    throw InvalidInput("margin spec class out of range");
  }
  std::size_t other = spec.target;
  if (spec.kind == MarginSpec::Kind::kUntargeted) {
    other = spec.source == 0 ? 1 : 0;
    for (std::size_t k = 0; k < logits.size(); ++k) {
      if (k != spec.source && logits[k] > logits[other]) other = k;
    }
  }
  if (competitor) *competitor = other;
  return logits[spec.source] - logits[other];
}

inline std::vector<double> pool_with_point(std::span<const double> cloud_pool,
                                           const PointFeatures& point) {
  std::vector<double> pooled(cloud_pool.begin(), cloud_pool.end());
  for (std::size_t k = 0; k < kFeatureDim; ++k) {
    if (point.features[k] > pooled[k]) pooled[k] = point.features[k];
  }
  return pooled;
}

inline std::vector<double> insertion_logits(const ClassifierWeights& w,
                                            std::span<const double> cloud_pool,
                                            const PointFeatures& point) {
  return head_forward(w, pool_with_point(cloud_pool, point)).logits;
}

// Gradient of margin_value(logits(X ∪ {c})) with respect to c. Max-pool
// routes gradient only through channels c wins; the untargeted max routes it
// only to the current competitor.
inline Point3 insertion_margin_gradient(const ClassifierWeights& w,
                                        std::span<const double> cloud_pool,
                                        const PointFeatures& point, const MarginSpec& spec,
                                        double* value = nullptr) {
  const std::vector<double> pooled = pool_with_point(cloud_pool, point);
  const HeadActivations head = head_forward(w, pooled);
  std::size_t competitor = 0;
  const double margin = margin_value(head.logits, spec, &competitor);
  if (value) *value = margin;

  std::vector<double> d_hidden(kHeadHidden, 0.0);
  for (std::size_t i = 0; i < kHeadHidden; ++i) {
    if (head.hidden[i] > 0.0) {
      d_hidden[i] = w.head2.w(spec.source, i) - w.head2.w(competitor, i);
    }
  }

  std::vector<double> d_feature(kFeatureDim, 0.0);
  bool any = false;
  for (std::size_t k = 0; k < kFeatureDim; ++k) {
    if (!(point.features[k] > cloud_pool[k])) continue;
    double g = 0.0;
    for (std::size_t i = 0; i < kHeadHidden; ++i) g += w.head1.w(i, k) * d_hidden[i];
    d_feature[k] = g;
    any = true;
  }
  if (!any) return {};

  Point3 grad;
  for (std::size_t j = 0; j < kPointHidden; ++j) {
    if (!(point.hidden[j] > 0.0)) continue;
    double g = 0.0;
    for (std::size_t k = 0; k < kFeatureDim; ++k) g += w.point2.w(k, j) * d_feature[k];
    grad.x += g * w.point1.w(j, 0);
    grad.y += g * w.point1.w(j, 1);
    grad.z += g * w.point1.w(j, 2);
  }
  return grad;
}

inline std::vector<double> cloud_pool(const ClassifierWeights& w, const PointCloud& cloud) {
  require_nonempty(cloud, "cloud_pool");
  return max_pool(point_features(w, cloud.view())).value;
}

// Gradient with respect to the inserted point c of the margin term of the
// detection losses, evaluated on X ∪ {c}.
inline Point3 loss_gradient_wrt_point(const ClassifierWeights& w, const PointCloud& cloud,
                                      const Point3& c, const MarginSpec& spec) {
  check_dimensions(w);
  if (spec.source >= w.num_classes() ||
      (spec.kind == MarginSpec::Kind::kTargeted && spec.target >= w.num_classes())) {
    throw InvalidInput("loss_gradient_wrt_point: class index out of range");
  }
  return insertion_margin_gradient(w, cloud_pool(w, cloud), point_features(w, c), spec);
}

// ---------------------------------------------------------------------------
// Training

// Stray points added to a training cloud at a random direction and radius,
// label unchanged. Teaches the network to ignore isolated points near the
// shape; probability 0 disables it.
struct OutlierAugmentation {
  double probability = 0.0;
  std::size_t max_points = 3;
  double radius_min = 1.0;
  double radius_max = 2.0;
};

struct TrainConfig {
  std::size_t epochs = 40;
  std::size_t batch_size = 16;
  double learning_rate = 0.01;
  double momentum = 0.9;
  std::uint64_t seed = 1;
  OutlierAugmentation outliers;
};

namespace detail {

inline ClassifierWeights zeros_like(const ClassifierWeights& w) {
  return ClassifierWeights(w.num_classes());
}

// Adds d(cross-entropy)/d(weights) for one labeled cloud into grad and
// returns the loss.
inline double accumulate_gradient(const ClassifierWeights& w, const LabeledCloud& sample,
                                  ClassifierWeights& grad) {
  const auto& pts = sample.cloud.points;
  const std::size_t n = pts.size();
  const PointFeatures feats = point_features(w, sample.cloud.view());
  const PooledFeatures pooled = max_pool(feats);
  const HeadActivations head = head_forward(w, pooled.value);
  const std::size_t K = w.num_classes();

  const double top = *std::max_element(head.logits.begin(), head.logits.end());
  std::vector<double> prob(K);
  double total = 0.0;
  for (std::size_t k = 0; k < K; ++k) total += prob[k] = std::exp(head.logits[k] - top);
  for (auto& p : prob) p /= total;
  const double loss = -(head.logits[sample.label] - top - std::log(total));

  std::vector<double> d_logits = prob;
  d_logits[sample.label] -= 1.0;

  std::vector<double> d_hidden(kHeadHidden, 0.0);
  for (std::size_t o = 0; o < K; ++o) {
    grad.head2.bias[o] += d_logits[o];
    for (std::size_t i = 0; i < kHeadHidden; ++i) {
      grad.head2.weight[o * kHeadHidden + i] += d_logits[o] * head.hidden[i];
      d_hidden[i] += w.head2.w(o, i) * d_logits[o];
    }
  }

  std::vector<double> d_pool(kFeatureDim, 0.0);
  for (std::size_t o = 0; o < kHeadHidden; ++o) {
    if (!(head.hidden[o] > 0.0)) continue;
    const double g = d_hidden[o];
    grad.head1.bias[o] += g;
    for (std::size_t i = 0; i < kFeatureDim; ++i) {
      grad.head1.weight[o * kFeatureDim + i] += g * pooled.value[i];
      d_pool[i] += w.head1.w(o, i) * g;
    }
  }

  // Only channel winners with positive activation receive gradient.
  std::vector<double> d_point_hidden(kPointHidden * n, 0.0);
  std::vector<char> touched(n, 0);
  for (std::size_t k = 0; k < kFeatureDim; ++k) {
    const std::size_t p = pooled.winner[k];
    if (!(pooled.value[k] > 0.0)) continue;
    const double g = d_pool[k];
    grad.point2.bias[k] += g;
    touched[p] = 1;
    for (std::size_t j = 0; j < kPointHidden; ++j) {
      grad.point2.weight[k * kPointHidden + j] += g * feats.hidden[j * n + p];
      d_point_hidden[j * n + p] += w.point2.w(k, j) * g;
    }
  }
  for (std::size_t p = 0; p < n; ++p) {
    if (!touched[p]) continue;
    for (std::size_t j = 0; j < kPointHidden; ++j) {
      if (!(feats.hidden[j * n + p] > 0.0)) continue;
      const double g = d_point_hidden[j * n + p];
      grad.point1.bias[j] += g;
      grad.point1.weight[j * 3 + 0] += g * pts[p].x;
      grad.point1.weight[j * 3 + 1] += g * pts[p].y;
      grad.point1.weight[j * 3 + 2] += g * pts[p].z;
    }
  }
  return loss;
}

}  // namespace detail

// Minibatch SGD with momentum on softmax cross-entropy. Initialization and
// shuffling both derive from cfg.seed, so the result is reproducible.
// If loss_history is given, it receives the mean training loss per epoch.
namespace detail {

inline LabeledCloud with_outliers(const LabeledCloud& sample, const OutlierAugmentation& aug,
                                  Rng& rng) {
  LabeledCloud out = sample;
  const std::size_t count = 1 + rng.below(aug.max_points);
  for (std::size_t j = 0; j < count; ++j) {
    Point3 dir{rng.normal(), rng.normal(), rng.normal()};
    const double len = norm(dir);
    if (len < 1e-12) continue;
    out.cloud.points.push_back(dir / len * rng.uniform(aug.radius_min, aug.radius_max));
  }
  return out;
}

}  // namespace detail

inline ClassifierWeights train(const Dataset& data, const TrainConfig& cfg,
                               std::vector<double>* loss_history = nullptr) {
  validate(data);
  if (data.num_classes < 2) throw InvalidInput("train: need at least 2 classes");
  for (std::size_t k = 0; k < data.num_classes; ++k) {
    if (data.count_of(k) == 0) {
      throw InvalidInput("train: class " + std::to_string(k) + " has no samples");
    }
  }
  if (cfg.epochs < 1) throw InvalidInput("train: epochs must be >= 1");
  if (!(cfg.learning_rate > 0.0)) throw InvalidInput("train: learning rate must be > 0");
  if (cfg.batch_size < 1) throw InvalidInput("train: batch size must be >= 1");
  const auto& aug = cfg.outliers;
  if (!(aug.probability >= 0.0 && aug.probability <= 1.0)) {
    throw InvalidInput("train: outlier probability must lie in [0, 1]");
  }
  if (aug.probability > 0.0 &&
      (aug.max_points < 1 || !(aug.radius_min >= 0.0) || !(aug.radius_max >= aug.radius_min))) {
    throw InvalidInput("train: bad outlier augmentation settings");
  }

  ClassifierWeights w = ClassifierWeights::random(data.num_classes, mix_seed(cfg.seed, 1));
  ClassifierWeights velocity = detail::zeros_like(w);
  Rng shuffle_rng(mix_seed(cfg.seed, 2));
  Rng outlier_rng(mix_seed(cfg.seed, 3));
  std::vector<std::size_t> order(data.samples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      ClassifierWeights grad = detail::zeros_like(w);
      for (std::size_t i = start; i < stop; ++i) {
        const LabeledCloud& sample = data.samples[order[i]];
        if (aug.probability > 0.0 && outlier_rng.uniform() < aug.probability) {
          epoch_loss += detail::accumulate_gradient(
              w, detail::with_outliers(sample, aug, outlier_rng), grad);
        } else {
          epoch_loss += detail::accumulate_gradient(w, sample, grad);
        }
      }
      const double scale = 1.0 / static_cast<double>(stop - start);
      auto step = [&](DenseLayer& param, DenseLayer& vel, const DenseLayer& g) {
        for (std::size_t i = 0; i < param.weight.size(); ++i) {
          vel.weight[i] = cfg.momentum * vel.weight[i] + g.weight[i] * scale;
          param.weight[i] -= cfg.learning_rate * vel.weight[i];
        }
        for (std::size_t i = 0; i < param.bias.size(); ++i) {
          vel.bias[i] = cfg.momentum * vel.bias[i] + g.bias[i] * scale;
          param.bias[i] -= cfg.learning_rate * vel.bias[i];
        }
      };
      step(w.point1, velocity.point1, grad.point1);
      step(w.point2, velocity.point2, grad.point2);
      step(w.head1, velocity.head1, grad.head1);
      step(w.head2, velocity.head2, grad.head2);
    }
    if (loss_history) {
      loss_history->push_back(epoch_loss / static_cast<double>(order.size()));
    }
  }
  return w;
}

// ---------------------------------------------------------------------------
// Weight files
//
//   pcbd-classifier-weights 1
//   classes K
//   layer <name> <out> <in>
//   <out lines of <in> weights, row-major>
//   bias <out values>
//   ... (point1, point2, head1, head2)
//   end
//
// Values are shortest round-trip decimal text, so loading is bit-exact.

inline constexpr int kWeightFormatVersion = 1;

inline void write_weights(std::ostream& out, const ClassifierWeights& w) {
  check_dimensions(w);
  out << "pcbd-classifier-weights " << kWeightFormatVersion << '\n';
  out << "classes " << w.num_classes() << '\n';
  const char* names[] = {"point1", "point2", "head1", "head2"};
  int idx = 0;
  w.for_each_layer([&](const DenseLayer& layer) {
    out << "layer " << names[idx++] << ' ' << layer.out << ' ' << layer.in << '\n';
    for (std::size_t o = 0; o < layer.out; ++o) {
      for (std::size_t i = 0; i < layer.in; ++i) {
        out << (i ? " " : "") << format_real(layer.w(o, i));
      }
      out << '\n';
    }
    out << "bias";
    for (double b : layer.bias) out << ' ' << format_real(b);
    out << '\n';
  });
  out << "end\n";
}

inline ClassifierWeights read_weights(std::istream& in) {
  LineReader reader(in);
  auto fail = [&](const std::string& what) -> LoadError {
    return LoadError("weights line " + std::to_string(reader.line()) + ": " + what);
  };
  auto next = [&]() {
    auto t = reader.next_tokens();
    if (!t) throw LoadError("weights file is truncated");
    return *t;
  };

  auto head = next();
  if (head.size() != 2 || head[0] != "pcbd-classifier-weights") throw fail("not a weight file");
  if (parse_int(head[1]) != kWeightFormatVersion) {
    throw fail("unsupported format version " + std::string(head[1]));
  }
  auto classes = next();
  const auto K = classes.size() == 2 && classes[0] == "classes" ? parse_int(classes[1]) : std::nullopt;
  if (!K || *K < 2) throw fail("bad class count");

  ClassifierWeights w(static_cast<std::size_t>(*K));
  const char* names[] = {"point1", "point2", "head1", "head2"};
  int idx = 0;
  std::string error;
  w.for_each_layer([&](DenseLayer& layer) {
    const std::string name = names[idx++];
    auto t = next();
    if (t.size() != 4 || t[0] != "layer" || t[1] != name ||
        parse_int(t[2]) != static_cast<long long>(layer.out) ||
        parse_int(t[3]) != static_cast<long long>(layer.in)) {
      throw fail("expected layer " + name + " " + std::to_string(layer.out) + " " +
                 std::to_string(layer.in));
    }
    for (std::size_t o = 0; o < layer.out; ++o) {
      auto row = next();
      if (row.size() != layer.in) throw fail("row has wrong length");
      for (std::size_t i = 0; i < layer.in; ++i) {
        auto v = parse_real(row[i]);
        if (!v || !std::isfinite(*v)) throw fail("bad weight value");
        layer.weight[o * layer.in + i] = *v;
      }
    }
    auto bias = next();
    if (bias.size() != layer.out + 1 || bias[0] != "bias") throw fail("bad bias line");
    for (std::size_t o = 0; o < layer.out; ++o) {
      auto v = parse_real(bias[o + 1]);
      if (!v || !std::isfinite(*v)) throw fail("bad bias value");
      layer.bias[o] = *v;
    }
  });
  auto end = next();
  if (end.size() != 1 || end[0] != "end") throw fail("expected end marker");
  return w;
}

inline void save_weights(const ClassifierWeights& w, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot write " + path.string());
  write_weights(out, w);
  if (!out) throw InvalidInput("write failed for " + path.string());
}

inline ClassifierWeights load_weights(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open weight file " + path.string());
  return read_weights(in);
}

}  // namespace pcbd
