#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <string>
#include <vector>

#include "pcbd/geometry.hpp"
#include "pcbd/rng.hpp"
#include "pcbd/shapes.hpp"
#include "pcbd/text_io.hpp"

namespace pcbd {

struct TriangleMesh {
  std::vector<Point3> vertices;
  std::vector<std::array<std::size_t, 3>> faces;
};

// ASCII OFF reader: "OFF", then "V F E", V vertex lines, F lines "3 i j k".
// Lines starting with '#' are comments.
inline TriangleMesh parse_off(std::istream& in) {
  LineReader reader(in);
  auto next = [&](const char* what) {
    for (;;) {
      auto tokens = reader.require_tokens(what);
      if (tokens.front().front() != '#') return tokens;
    }
  };

  auto header = next("OFF header");
  if (header.size() != 1 || header[0] != "OFF") {
    throw ParseError(reader.line(), "expected header \"OFF\"");
  }

  auto counts = next("vertex/face counts");
  if (counts.size() < 2 || counts.size() > 3) {
    throw ParseError(reader.line(), "expected \"V F E\" counts");
  }
  const auto nv = parse_int(counts[0]);
  const auto nf = parse_int(counts[1]);
  if (!nv || !nf || *nv < 0 || *nf < 0) throw ParseError(reader.line(), "bad vertex/face counts");

  TriangleMesh mesh;
  mesh.vertices.reserve(static_cast<std::size_t>(*nv));
  for (long long i = 0; i < *nv; ++i) {
    auto t = next("vertex");
    if (t.size() != 3) throw ParseError(reader.line(), "vertex needs 3 coordinates");
    Point3 p;
    double* dst[3] = {&p.x, &p.y, &p.z};
    for (int k = 0; k < 3; ++k) {
      auto v = parse_real(t[k]);
      if (!v || !std::isfinite(*v)) throw ParseError(reader.line(), "bad vertex coordinate");
      *dst[k] = *v;
    }
    mesh.vertices.push_back(p);
  }

  mesh.faces.reserve(static_cast<std::size_t>(*nf));
  for (long long i = 0; i < *nf; ++i) {
    auto t = next("face");
    const auto arity = parse_int(t[0]);
    if (!arity) throw ParseError(reader.line(), "bad face vertex count");
    if (*arity != 3 || t.size() < 4) throw ParseError(reader.line(), "only triangular faces are supported");
    std::array<std::size_t, 3> face{};
    for (int k = 0; k < 3; ++k) {
      auto idx = parse_int(t[1 + k]);
      if (!idx || *idx < 0 || *idx >= *nv) throw ParseError(reader.line(), "vertex index out of range");
      face[k] = static_cast<std::size_t>(*idx);
    }
    mesh.faces.push_back(face);
  }
  return mesh;
}

inline TriangleMesh load_off_mesh(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open OFF file " + path.string());
  return parse_off(in);
}

// Area-weighted uniform surface sampling. With normalize=false the raw
// surface points are returned, which is mainly useful for checking them.
inline PointCloud sample_mesh(const TriangleMesh& mesh, std::size_t n, std::uint64_t seed,
                              bool normalize = true) {
  if (mesh.faces.empty()) throw InvalidInput("sample_mesh: mesh has no faces");
  if (n == 0) throw InvalidInput("sample_mesh: n must be positive");
  std::vector<Triangle> tris;
  tris.reserve(mesh.faces.size());
  for (const auto& f : mesh.faces) {
    tris.push_back({mesh.vertices[f[0]], mesh.vertices[f[1]], mesh.vertices[f[2]]});
  }
  const detail::TriangleSampler sampler(std::move(tris));
  if (!(sampler.total_area() > 0.0)) throw InvalidInput("sample_mesh: mesh has zero area");

  Rng rng(seed);
  std::vector<Point3> pts;
  pts.reserve(n);
  for (std::size_t i = 0; i < n; ++i) pts.push_back(sampler.sample(rng));
  PointCloud cloud(std::move(pts));
  return normalize ? normalize_cloud(cloud) : cloud;
}

}  // namespace pcbd
