#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "pcbd/error.hpp"

namespace pcbd {

struct Point3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  constexpr Point3& operator+=(const Point3& o) {
    x += o.x;
    y += o.y;
    z += o.z;
    return *this;
  }
  constexpr Point3& operator-=(const Point3& o) {
    x -= o.x;
    y -= o.y;
    z -= o.z;
    return *this;
  }
  constexpr Point3& operator*=(double s) {
    x *= s;
    y *= s;
    z *= s;
    return *this;
  }

  friend constexpr Point3 operator+(Point3 a, const Point3& b) { return a += b; }
  friend constexpr Point3 operator-(Point3 a, const Point3& b) { return a -= b; }
  friend constexpr Point3 operator*(Point3 a, double s) { return a *= s; }
  friend constexpr Point3 operator*(double s, Point3 a) { return a *= s; }
  friend constexpr Point3 operator/(Point3 a, double s) {
    return {a.x / s, a.y / s, a.z / s};
  }
  friend constexpr bool operator==(const Point3&, const Point3&) = default;
};

constexpr double dot(const Point3& a, const Point3& b) {
  return a.x * b.x + a.y * b.y + a.z * b.z;
}

constexpr Point3 cross(const Point3& a, const Point3& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

inline double norm(const Point3& p) { return std::sqrt(dot(p, p)); }

inline bool is_finite(const Point3& p) {
  return std::isfinite(p.x) && std::isfinite(p.y) && std::isfinite(p.z);
}

// Cosine of the angle between a and b; 0 when either is (numerically) zero.
inline double cosine_similarity(const Point3& a, const Point3& b) {
  const double na = norm(a);
  const double nb = norm(b);
  if (na < 1e-12 || nb < 1e-12) return 0.0;
  return dot(a, b) / (na * nb);
}

// A finite set of points. Stored as a list, but no operation in this library
// attaches meaning to the order.
struct PointCloud {
  std::vector<Point3> points;

  PointCloud() = default;
  explicit PointCloud(std::vector<Point3> pts) : points(std::move(pts)) {}
  PointCloud(std::initializer_list<Point3> pts) : points(pts) {}

  std::size_t size() const noexcept { return points.size(); }
  bool empty() const noexcept { return points.empty(); }
  const Point3& operator[](std::size_t i) const { return points[i]; }
  Point3& operator[](std::size_t i) { return points[i]; }
  auto begin() const noexcept { return points.begin(); }
  auto end() const noexcept { return points.end(); }
  std::span<const Point3> view() const noexcept { return points; }

  friend bool operator==(const PointCloud&, const PointCloud&) = default;
};

struct LabeledCloud {
  PointCloud cloud;
  std::size_t label = 0;

  friend bool operator==(const LabeledCloud&, const LabeledCloud&) = default;
};

struct Dataset {
  std::vector<LabeledCloud> samples;
  std::size_t num_classes = 0;

  std::size_t count_of(std::size_t label) const {
    std::size_t n = 0;
    for (const auto& s : samples) n += (s.label == label);
    return n;
  }

  std::vector<PointCloud> clouds_of(std::size_t label) const {
    std::vector<PointCloud> out;
    for (const auto& s : samples) {
      if (s.label == label) out.push_back(s.cloud);
    }
    return out;
  }
};

inline void require_nonempty(const PointCloud& cloud, const char* what) {
  if (cloud.empty()) throw InvalidInput(std::string(what) + ": empty point cloud");
}

// Throws unless the dataset's labels are in range and every point is finite.
inline void validate(const Dataset& data) {
  if (data.num_classes == 0) throw InvalidInput("dataset has zero classes");
  for (const auto& s : data.samples) {
    if (s.label >= data.num_classes) {
      throw InvalidInput("label " + std::to_string(s.label) + " out of range");
    }
    require_nonempty(s.cloud, "dataset");
    for (const auto& p : s.cloud) {
      if (!is_finite(p)) throw InvalidInput("dataset contains a non-finite point");
    }
  }
}

namespace detail {

// Index of the nearest point; ties resolve to the lowest index.
inline std::size_t nearest_index(const Point3& c, const PointCloud& cloud,
                                 double& best_sq) {
  best_sq = std::numeric_limits<double>::infinity();
  std::size_t best = 0;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Point3 d = c - cloud[i];
    const double sq = dot(d, d);
    if (sq < best_sq) {
      best_sq = sq;
      best = i;
    }
  }
  return best;
}

}  // namespace detail

// d(c, X): Euclidean distance from c to the closest point of X.
inline double point_to_cloud_distance(const Point3& c, const PointCloud& cloud) {
  require_nonempty(cloud, "point_to_cloud_distance");
  double best_sq;
  detail::nearest_index(c, cloud, best_sq);
  return std::sqrt(best_sq);
}

// Subgradient of d(c, X) with respect to c. Zero when c sits on a point.
inline Point3 distance_gradient(const Point3& c, const PointCloud& cloud) {
  require_nonempty(cloud, "distance_gradient");
  double best_sq;
  const std::size_t i = detail::nearest_index(c, cloud, best_sq);
  const double dist = std::sqrt(best_sq);
  if (dist < 1e-12) return {};
  return (c - cloud[i]) / dist;
}

inline Point3 centroid(const PointCloud& cloud) {
  require_nonempty(cloud, "centroid");
  Point3 sum;
  for (const auto& p : cloud) sum += p;
  return sum / static_cast<double>(cloud.size());
}

// Centers the cloud at the origin and scales it into the unit ball.
inline PointCloud normalize_cloud(const PointCloud& cloud) {
  const Point3 center = centroid(cloud);
  PointCloud out = cloud;
  double max_norm = 0.0;
  for (auto& p : out.points) {
    p -= center;
    max_norm = std::max(max_norm, norm(p));
  }
  if (max_norm >= 1e-9) {
    for (auto& p : out.points) p = p / max_norm;
  }
  return out;
}

}  // namespace pcbd
