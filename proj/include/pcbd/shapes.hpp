#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>
#include <vector>

#include "pcbd/geometry.hpp"
#include "pcbd/rng.hpp"

namespace pcbd {

// Built-in synthetic shape families, used as class labels in that order.
enum class ShapeFamily : std::size_t {
  kSphere,
  kCube,
  kCylinder,
  kCone,
  kTorus,
  kPyramid,
  kParallelPlanes,
  kHelixTube,
};

inline constexpr std::size_t kNumShapeFamilies = 8;

// Per-coordinate jitter applied after the first normalization, in unit-ball scale.
inline constexpr double kShapeJitter = 0.02;

inline constexpr std::array<std::string_view, kNumShapeFamilies> kShapeNames = {
    "sphere", "cube", "cylinder", "cone", "torus", "pyramid", "planes", "helix"};

struct Triangle {
  Point3 a, b, c;

  double area() const { return 0.5 * norm(cross(b - a, c - a)); }

  // Uniform sample over the triangle.
  Point3 sample(Rng& rng) const {
    const double r1 = std::sqrt(rng.uniform());
    const double r2 = rng.uniform();
    return a * (1.0 - r1) + b * (r1 * (1.0 - r2)) + c * (r1 * r2);
  }
};

namespace detail {

// Area-weighted selection over a fixed list of triangles.
class TriangleSampler {
 public:
  explicit TriangleSampler(std::vector<Triangle> tris) : tris_(std::move(tris)) {
    double total = 0.0;
    cumulative_.reserve(tris_.size());
    for (const auto& t : tris_) {
      total += t.area();
      cumulative_.push_back(total);
    }
  }

  double total_area() const { return cumulative_.empty() ? 0.0 : cumulative_.back(); }

  Point3 sample(Rng& rng) const {
    const double target = rng.uniform() * total_area();
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), target);
    if (it == cumulative_.end()) --it;
    return tris_[static_cast<std::size_t>(it - cumulative_.begin())].sample(rng);
  }

 private:
  std::vector<Triangle> tris_;
  std::vector<double> cumulative_;
};

inline std::vector<Triangle> quad(Point3 a, Point3 b, Point3 c, Point3 d) {
  return {{a, b, c}, {a, c, d}};
}

inline std::vector<Triangle> box_faces(double hx, double hy, double hz) {
  std::vector<Triangle> out;
  auto add = [&](std::vector<Triangle> q) { out.insert(out.end(), q.begin(), q.end()); };
  for (double s : {-1.0, 1.0}) {
    add(quad({s * hx, -hy, -hz}, {s * hx, hy, -hz}, {s * hx, hy, hz}, {s * hx, -hy, hz}));
    add(quad({-hx, s * hy, -hz}, {hx, s * hy, -hz}, {hx, s * hy, hz}, {-hx, s * hy, hz}));
    add(quad({-hx, -hy, s * hz}, {hx, -hy, s * hz}, {hx, hy, s * hz}, {-hx, hy, s * hz}));
  }
  return out;
}

inline Point3 unit_disk(Rng& rng, double radius) {
  const double r = radius * std::sqrt(rng.uniform());
  const double t = 2.0 * std::numbers::pi * rng.uniform();
  return {r * std::cos(t), r * std::sin(t), 0.0};
}

inline std::vector<Point3> sample_family(ShapeFamily family, std::size_t n, Rng& rng) {
  std::vector<Point3> pts;
  pts.reserve(n);
  constexpr double kTau = 2.0 * std::numbers::pi;

  switch (family) {
    case ShapeFamily::kSphere:
      for (std::size_t i = 0; i < n; ++i) {
        Point3 p{rng.normal(), rng.normal(), rng.normal()};
        while (norm(p) < 1e-12) p = {rng.normal(), rng.normal(), rng.normal()};
        pts.push_back(p / norm(p));
      }
      break;

    case ShapeFamily::kCube: {
      const TriangleSampler sampler(box_faces(rng.uniform(0.8, 1.2), rng.uniform(0.8, 1.2),
                                              rng.uniform(0.8, 1.2)));
      for (std::size_t i = 0; i < n; ++i) pts.push_back(sampler.sample(rng));
      break;
    }

    case ShapeFamily::kCylinder: {
      const double radius = rng.uniform(0.4, 0.6);
      const double half_h = rng.uniform(0.8, 1.2);
      const double side = kTau * radius * 2.0 * half_h;
      const double caps = 2.0 * std::numbers::pi * radius * radius;
      for (std::size_t i = 0; i < n; ++i) {
        if (rng.uniform() * (side + caps) < side) {
          const double t = kTau * rng.uniform();
          pts.push_back({radius * std::cos(t), radius * std::sin(t), rng.uniform(-half_h, half_h)});
        } else {
          Point3 p = unit_disk(rng, radius);
          p.z = rng.uniform() < 0.5 ? -half_h : half_h;
          pts.push_back(p);
        }
      }
      break;
    }

    case ShapeFamily::kCone: {
      const double radius = rng.uniform(0.5, 0.7);
      const double height = rng.uniform(1.4, 1.8);
      const double slant = std::hypot(radius, height);
      const double lateral = std::numbers::pi * radius * slant;
      const double base = std::numbers::pi * radius * radius;
      for (std::size_t i = 0; i < n; ++i) {
        if (rng.uniform() * (lateral + base) < lateral) {
          // Distance from apex is distributed with density proportional to it.
          const double s = std::sqrt(rng.uniform());
          const double t = kTau * rng.uniform();
          pts.push_back({s * radius * std::cos(t), s * radius * std::sin(t), height * (1.0 - s)});
        } else {
          pts.push_back(unit_disk(rng, radius));
        }
      }
      break;
    }

    case ShapeFamily::kTorus: {
      const double major = 1.0;
      const double minor = rng.uniform(0.25, 0.4);
      while (pts.size() < n) {
        const double u = kTau * rng.uniform();
        const double v = kTau * rng.uniform();
        // Rejection keeps the density uniform in surface area.
        if (rng.uniform() * (major + minor) > major + minor * std::cos(v)) continue;
        const double ring = major + minor * std::cos(v);
        pts.push_back({ring * std::cos(u), ring * std::sin(u), minor * std::sin(v)});
      }
      break;
    }

    case ShapeFamily::kPyramid: {
      const double half = rng.uniform(0.7, 1.0);
      const double height = rng.uniform(1.0, 1.6);
      const Point3 apex{0.0, 0.0, height};
      const Point3 c0{-half, -half, 0.0}, c1{half, -half, 0.0}, c2{half, half, 0.0},
          c3{-half, half, 0.0};
      std::vector<Triangle> tris = quad(c0, c1, c2, c3);
      tris.push_back({c0, c1, apex});
      tris.push_back({c1, c2, apex});
      tris.push_back({c2, c3, apex});
      tris.push_back({c3, c0, apex});
      const TriangleSampler sampler(std::move(tris));
      for (std::size_t i = 0; i < n; ++i) pts.push_back(sampler.sample(rng));
      break;
    }

    case ShapeFamily::kParallelPlanes: {
      const double gap = rng.uniform(0.3, 0.6);
      const double hx = rng.uniform(0.8, 1.2);
      const double hy = rng.uniform(0.8, 1.2);
      for (std::size_t i = 0; i < n; ++i) {
        const double z = (i % 2 == 0) ? -gap : gap;
        pts.push_back({rng.uniform(-hx, hx), rng.uniform(-hy, hy), z});
      }
      break;
    }

    case ShapeFamily::kHelixTube: {
      const double turns = 2.0;
      const double pitch = rng.uniform(0.25, 0.4);
      const double tube = 0.12;
      for (std::size_t i = 0; i < n; ++i) {
        const double t = kTau * turns * rng.uniform();
        const double a = kTau * rng.uniform();
        const Point3 center{std::cos(t), std::sin(t), pitch * t};
        const Point3 tangent = Point3{-std::sin(t), std::cos(t), pitch} / std::hypot(1.0, pitch);
        const Point3 normal{std::cos(t), std::sin(t), 0.0};
        const Point3 binormal = cross(tangent, normal);
        pts.push_back(center + tube * (std::cos(a) * normal + std::sin(a) * binormal));
      }
      break;
    }
  }
  return pts;
}

// Rotation by a uniformly random axis and an angle of at most max_angle radians.
inline void random_tilt(std::vector<Point3>& pts, Rng& rng, double max_angle) {
  Point3 axis{rng.normal(), rng.normal(), rng.normal()};
  if (norm(axis) < 1e-12) return;
  axis = axis / norm(axis);
  const double angle = rng.uniform(-max_angle, max_angle);
  const double cs = std::cos(angle);
  const double sn = std::sin(angle);
  for (auto& p : pts) {
    // Rodrigues' rotation formula.
    p = p * cs + cross(axis, p) * sn + axis * (dot(axis, p) * (1.0 - cs));
  }
}

}  // namespace detail

// Draws n surface points of one built-in family with per-sample shape
// variation, a small random tilt and Gaussian jitter. Deterministic in
// (class_id, n, seed); output is normalized to the unit ball.
inline PointCloud generate_shape(std::size_t class_id, std::size_t n, std::uint64_t seed) {
  if (class_id >= kNumShapeFamilies) {
    throw InvalidInput("generate_shape: unknown shape class " + std::to_string(class_id));
  }
  if (n < 16) throw InvalidInput("generate_shape: need at least 16 points");

  Rng rng(mix_seed(seed, class_id, n));
  std::vector<Point3> pts = detail::sample_family(static_cast<ShapeFamily>(class_id), n, rng);
  detail::random_tilt(pts, rng, 15.0 * std::numbers::pi / 180.0);

  PointCloud cloud = normalize_cloud(PointCloud(std::move(pts)));
  for (auto& p : cloud.points) {
    p += Point3{rng.normal(), rng.normal(), rng.normal()} * kShapeJitter;
  }
  return normalize_cloud(cloud);
}

}  // namespace pcbd
