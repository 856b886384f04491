#pragma once

#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "pcbd/geometry.hpp"
#include "pcbd/text_io.hpp"

namespace pcbd {

// Split file layout:
//   classes K
//   label n        (one block per sample)
//   x y z          (n lines, shortest round-trip decimal text)
inline void write_dataset(std::ostream& out, const Dataset& data) {
  out << "classes " << data.num_classes << '\n';
  for (const auto& s : data.samples) {
    out << s.label << ' ' << s.cloud.size() << '\n';
    for (const auto& p : s.cloud) {
      out << format_real(p.x) << ' ' << format_real(p.y) << ' ' << format_real(p.z) << '\n';
    }
  }
}

inline Dataset read_dataset(std::istream& in) {
  LineReader reader(in);
  Dataset data;
  auto head = reader.require_tokens("classes header");
  const auto k = head.size() == 2 && head[0] == "classes" ? parse_int(head[1]) : std::nullopt;
  if (!k || *k <= 0) throw ParseError(reader.line(), "expected \"classes K\"");
  data.num_classes = static_cast<std::size_t>(*k);

  while (auto tokens = reader.next_tokens()) {
    if (tokens->size() != 2) throw ParseError(reader.line(), "expected \"label n\"");
    const auto label = parse_int((*tokens)[0]);
    const auto n = parse_int((*tokens)[1]);
    if (!label || *label < 0 || *label >= *k) throw ParseError(reader.line(), "label out of range");
    if (!n || *n <= 0) throw ParseError(reader.line(), "bad point count");
    LabeledCloud sample;
    sample.label = static_cast<std::size_t>(*label);
    sample.cloud.points.reserve(static_cast<std::size_t>(*n));
    for (long long i = 0; i < *n; ++i) {
      auto t = reader.require_tokens("point");
      if (t.size() != 3) throw ParseError(reader.line(), "point needs 3 coordinates");
      const auto x = parse_real(t[0]), y = parse_real(t[1]), z = parse_real(t[2]);
      if (!x || !y || !z) throw ParseError(reader.line(), "bad coordinate");
      sample.cloud.points.push_back({*x, *y, *z});
    }
    data.samples.push_back(std::move(sample));
  }
  return data;
}

inline void save_dataset(const std::filesystem::path& path, const Dataset& data) {
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot write " + path.string());
  write_dataset(out, data);
  if (!out) throw InvalidInput("write failed for " + path.string());
}

inline Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open dataset " + path.string());
  return read_dataset(in);
}

}  // namespace pcbd
