#pragma once

#include <cstdint>
#include <istream>
#include <limits>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "pcbd/classifier.hpp"
#include "pcbd/error.hpp"
#include "pcbd/geometry.hpp"
#include "pcbd/rng.hpp"
#include "pcbd/text_io.hpp"

namespace pcbd {

// Inserted points V = {u_j + c}: a center plus a small local geometry.
struct BackdoorPattern {
  Point3 center;
  std::vector<Point3> offsets;

  std::vector<Point3> points() const {
    std::vector<Point3> out;
    out.reserve(offsets.size());
    for (const auto& u : offsets) out.push_back(u + center);
    return out;
  }

  friend bool operator==(const BackdoorPattern&, const BackdoorPattern&) = default;
};

struct AttackConfig {
  std::size_t source = 0;
  std::size_t target = 1;
  std::size_t poison_count = 15;
  std::size_t pattern_points = 3;
  double pattern_radius = 0.05;  // offsets lie in a ball of this radius
  double standoff = 0.3;
  std::size_t candidates = 200;
  std::uint64_t seed = 1;
};

inline void validate(const BackdoorPattern& v, double max_radius) {
  if (v.offsets.empty()) throw InvalidInput("backdoor pattern has no points");
  if (!is_finite(v.center)) throw InvalidInput("backdoor pattern center is not finite");
  for (const auto& u : v.offsets) {
    if (!is_finite(u) || norm(u) > max_radius) {
      throw InvalidInput("backdoor pattern offset outside the geometry radius");
    }
  }
}

inline void validate(const AttackConfig& cfg) {
  if (cfg.source == cfg.target) throw InvalidInput("attack source and target must differ");
  if (cfg.poison_count < 1) throw InvalidInput("poison count must be >= 1");
  if (cfg.pattern_points < 1) throw InvalidInput("pattern needs at least one point");
  if (!(cfg.standoff > 0.0)) throw InvalidInput("standoff must be > 0");
  if (cfg.candidates < 1) throw InvalidInput("need at least one center candidate");
}

// Offsets drawn uniformly from the ball of radius cfg.pattern_radius.
inline BackdoorPattern make_pattern(const Point3& center, const AttackConfig& cfg) {
  Rng rng(mix_seed(cfg.seed, 0x0ff5e7));
  BackdoorPattern v;
  v.center = center;
  while (v.offsets.size() < cfg.pattern_points) {
    const Point3 u{rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
    if (dot(u, u) <= 1.0) v.offsets.push_back(u * cfg.pattern_radius);
  }
  return v;
}

// X followed by the pattern points; X itself is untouched.
inline PointCloud embed_pattern(const PointCloud& cloud, const BackdoorPattern& v) {
  PointCloud out = cloud;
  out.points.reserve(cloud.size() + v.offsets.size());
  for (const auto& u : v.offsets) out.points.push_back(u + v.center);
  return out;
}

inline double mean_distance(const Point3& c, std::span<const PointCloud> clouds) {
  if (clouds.empty()) throw InvalidInput("mean_distance: no clouds");
  double total = 0.0;
  for (const auto& x : clouds) total += point_to_cloud_distance(c, x);
  return total / static_cast<double>(clouds.size());
}

// Attacker's insertion center: among `candidates` random unit directions u,
// the point (1 + standoff) u with the smallest mean distance to the source
// clouds. Stands in for the attacker's own location optimization.
inline Point3 choose_center(std::span<const PointCloud> source_clouds, double standoff,
                            std::size_t candidates, std::uint64_t seed) {
  if (source_clouds.empty()) throw InvalidInput("choose_center: no source clouds");
  if (!(standoff > 0.0)) throw InvalidInput("choose_center: standoff must be > 0");
  if (candidates < 1) throw InvalidInput("choose_center: need at least one candidate");

  Rng rng(mix_seed(seed, 0xce47e4));
  Point3 best;
  double best_dist = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < candidates; ++i) {
    Point3 dir{rng.normal(), rng.normal(), rng.normal()};
    if (norm(dir) < 1e-12) continue;
    const Point3 candidate = dir / norm(dir) * (1.0 + standoff);
    const double d = mean_distance(candidate, source_clouds);
    if (d < best_dist) {
      best_dist = d;
      best = candidate;
    }
  }
  return best;
}

// Appends cfg.poison_count distinct source-class training clouds carrying
// the pattern and relabeled to the target class.
inline Dataset poison_dataset(const Dataset& train, const AttackConfig& cfg,
                              const BackdoorPattern& v) {
  validate(cfg);
  if (cfg.source >= train.num_classes || cfg.target >= train.num_classes) {
    throw InvalidInput("attack classes out of range");
  }
  std::vector<std::size_t> source_idx;
  for (std::size_t i = 0; i < train.samples.size(); ++i) {
    if (train.samples[i].label == cfg.source) source_idx.push_back(i);
  }
  if (source_idx.size() < cfg.poison_count) {
    throw InvalidInput("poison_dataset: only " + std::to_string(source_idx.size()) +
                       " source samples for " + std::to_string(cfg.poison_count) + " poisons");
  }
  Rng rng(mix_seed(cfg.seed, 0x9015011));
  rng.shuffle(source_idx);

  Dataset out = train;
  for (std::size_t i = 0; i < cfg.poison_count; ++i) {
    out.samples.push_back({embed_pattern(train.samples[source_idx[i]].cloud, v), cfg.target});
  }
  return out;
}

inline double attack_success_rate(const ClassifierWeights& w,
                                  std::span<const PointCloud> held_out_source,
                                  const BackdoorPattern& v, std::size_t target) {
  if (held_out_source.empty()) throw InvalidInput("attack_success_rate: no clouds");
  std::size_t hits = 0;
  for (const auto& x : held_out_source) hits += (predict(w, embed_pattern(x, v)) == target);
  return static_cast<double>(hits) / static_cast<double>(held_out_source.size());
}

// Audit text block:
//   pattern n'
//   center x y z
//   offset x y z   (n' lines)
inline void write_pattern(std::ostream& out, const BackdoorPattern& v) {
  auto xyz = [](const Point3& p) {
    return format_real(p.x) + ' ' + format_real(p.y) + ' ' + format_real(p.z);
  };
  out << "pattern " << v.offsets.size() << '\n';
  out << "center " << xyz(v.center) << '\n';
  for (const auto& u : v.offsets) out << "offset " << xyz(u) << '\n';
}

inline BackdoorPattern read_pattern(std::istream& in) {
  LineReader reader(in);
  auto read_point = [&](std::string_view key) {
    auto t = reader.require_tokens(std::string(key).c_str());
    if (t.size() != 4 || t[0] != key) throw ParseError(reader.line(), "expected " + std::string(key));
    const auto x = parse_real(t[1]), y = parse_real(t[2]), z = parse_real(t[3]);
    if (!x || !y || !z) throw ParseError(reader.line(), "bad coordinate");
    return Point3{*x, *y, *z};
  };
  auto head = reader.require_tokens("pattern header");
  const auto n = head.size() == 2 && head[0] == "pattern" ? parse_int(head[1]) : std::nullopt;
  if (!n || *n < 1) throw ParseError(reader.line(), "expected \"pattern n\"");
  BackdoorPattern v;
  v.center = read_point("center");
  for (long long i = 0; i < *n; ++i) v.offsets.push_back(read_point("offset"));
  return v;
}

}  // namespace pcbd
