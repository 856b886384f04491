#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "pcbd/error.hpp"
#include "pcbd/inference.hpp"
#include "pcbd/text_io.hpp"

namespace pcbd {

inline constexpr const char* kStatsHeader =
    "class,t_hat,r_s,r_t,z,w,r,inv_rs,rt_over_rs,w_over_rs,excluded";

// One row per class. A FAILED class has t_hat "FAILED", nan for the
// undefined r_s, r_t, z, w, and 0 for r and the ablation statistics.
inline void write_stats_csv(std::ostream& out, const DetectionReport& rep) {
  out << kStatsHeader << '\n';
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (const auto& s : rep.stats) {
    const auto a = ablation_statistics(s);
    const bool f = s.failed();
    out << s.source << ',' << (f ? std::string("FAILED") : std::to_string(*s.target)) << ','
        << format_real(f ? nan : s.r_s) << ',' << format_real(f ? nan : s.r_t) << ','
        << format_real(f ? nan : s.z) << ',' << format_real(f ? nan : s.w) << ','
        << format_real(s.r) << ',' << format_real(a.inv_rs) << ','
        << format_real(a.rt_over_rs) << ',' << format_real(a.w_over_rs) << ','
        << (rep.is_excluded(s.source) ? 1 : 0) << '\n';
  }
}

// Reads back the per-class statistics; the excluded column is recomputed by
// detect() and ignored here.
inline std::vector<ClassStatistics> read_stats_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line)) throw ParseError(1, "empty statistics file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kStatsHeader) throw ParseError(1, "unexpected statistics header");
  std::vector<ClassStatistics> out;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
    if (f.size() != 11) throw ParseError(line_no, "expected 11 columns");
    auto real = [&](const std::string& s) {
      const auto v = parse_real(s);
      if (!v) throw ParseError(line_no, "bad number \"" + s + "\"");
      return *v;
    };
    ClassStatistics s;
    const auto cls = parse_int(f[0]);
    if (!cls || *cls != static_cast<long long>(out.size())) {
      throw ParseError(line_no, "class ids must be 0, 1, 2, ... in order");
    }
    s.source = static_cast<std::size_t>(*cls);
    if (f[1] != "FAILED") {
      const auto t = parse_int(f[1]);
      if (!t || *t < 0) throw ParseError(line_no, "bad t_hat");
      s.target = static_cast<std::size_t>(*t);
      s.r_s = real(f[2]);
      s.r_t = real(f[3]);
      s.z = real(f[4]);
      s.w = real(f[5]);
    }
    s.r = real(f[6]);
    out.push_back(s);
  }
  return out;
}

inline nlohmann::ordered_json report_json(const DetectionReport& rep) {
  nlohmann::ordered_json j;
  j["verdict"] = to_string(rep.verdict);
  j["pv"] = rep.pv.pv;
  j["pv_display"] = rep.pv.display();
  j["log_pv"] = rep.pv.log_pv;
  j["phi"] = rep.phi;
  j["s_max"] = rep.s_max;
  j["r_max"] = rep.r_max;
  j["inferred_target"] =
      rep.inferred_target ? nlohmann::ordered_json(*rep.inferred_target) : nlohmann::ordered_json();
  if (rep.fit) {
    j["gamma_shape"] = rep.fit->gamma.shape;
    j["gamma_scale"] = rep.fit->gamma.scale;
    j["zero_mass"] = rep.fit->zero_mass;
  } else {
    j["gamma_shape"] = nullptr;
    j["gamma_scale"] = nullptr;
    j["zero_mass"] = nullptr;
  }
  j["J"] = rep.J();
  j["K"] = rep.K();
  j["excluded"] = rep.excluded;
  if (!rep.note.empty()) j["note"] = rep.note;
  return j;
}

inline void write_report_json(std::ostream& out, const DetectionReport& rep) {
  out << report_json(rep).dump(2) << '\n';
}

// Histogram of the r statistics. Null values are grey, excluded classes red.
inline void write_histogram_svg(std::ostream& out, const DetectionReport& rep,
                                std::size_t bins = 20) {
  if (bins < 1) bins = 1;
  constexpr double W = 640, H = 360, left = 50, right = 20, top = 30, bottom = 50;
  double hi = 0.0;
  for (const auto& s : rep.stats) hi = std::max(hi, s.r);
  if (!(hi > 0.0)) hi = 1.0;
  const double width = hi / static_cast<double>(bins);

  std::vector<std::size_t> null_count(bins, 0), excl_count(bins, 0);
  for (const auto& s : rep.stats) {
    const auto b = std::min(bins - 1, static_cast<std::size_t>(s.r / width));
    (rep.is_excluded(s.source) ? excl_count : null_count)[b]++;
  }
  std::size_t peak = 1;
  for (std::size_t b = 0; b < bins; ++b) peak = std::max(peak, null_count[b] + excl_count[b]);

  auto fmt = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return std::string(buf);
  };
  const double plot_w = W - left - right, plot_h = H - top - bottom;
  const double bar_w = plot_w / static_cast<double>(bins);
  const double unit = plot_h / static_cast<double>(peak);

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
      << "\" viewBox=\"0 0 " << W << ' ' << H << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << left << "\" y=\"20\" font-family=\"sans-serif\" font-size=\"14\">"
      << "r statistics: verdict " << to_string(rep.verdict) << ", pv " << rep.pv.display()
      << "</text>\n";
  for (std::size_t b = 0; b < bins; ++b) {
    const double x = left + bar_w * static_cast<double>(b);
    const double h_null = unit * static_cast<double>(null_count[b]);
    const double h_excl = unit * static_cast<double>(excl_count[b]);
    const double base = top + plot_h;
    if (null_count[b] > 0) {
      out << "<rect x=\"" << fmt(x + 1) << "\" y=\"" << fmt(base - h_null) << "\" width=\""
          << fmt(bar_w - 2) << "\" height=\"" << fmt(h_null) << "\" fill=\"#8c8c8c\"/>\n";
    }
    if (excl_count[b] > 0) {
      out << "<rect x=\"" << fmt(x + 1) << "\" y=\"" << fmt(base - h_null - h_excl)
          << "\" width=\"" << fmt(bar_w - 2) << "\" height=\"" << fmt(h_excl)
          << "\" fill=\"#d62728\" class=\"excluded\"/>\n";
    }
  }
  const double axis_y = top + plot_h;
  out << "<line x1=\"" << left << "\" y1=\"" << axis_y << "\" x2=\"" << W - right << "\" y2=\""
      << axis_y << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << axis_y
      << "\" stroke=\"black\"/>\n";
  for (std::size_t t = 0; t <= 4; ++t) {
    const double v = hi * static_cast<double>(t) / 4.0;
    const double x = left + plot_w * static_cast<double>(t) / 4.0;
    out << "<text x=\"" << fmt(x) << "\" y=\"" << axis_y + 18
        << "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">" << fmt(v)
        << "</text>\n";
  }
  out << "<text x=\"" << left + plot_w / 2 << "\" y=\"" << H - 10
      << "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">r</text>\n";
  out << "<text x=\"" << left - 10 << "\" y=\"" << top + 10
      << "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">" << peak
      << "</text>\n";
  out << "</svg>\n";
}

// Plain-text summary for the terminal.
inline std::string summary(const DetectionReport& rep) {
  std::ostringstream s;
  s << "verdict: " << to_string(rep.verdict) << "\n";
  s << "pv: " << rep.pv.display() << " (log " << format_real(rep.pv.log_pv) << ", phi "
    << format_real(rep.phi) << ")\n";
  s << "s_max: " << rep.s_max << ", r_max: " << format_real(rep.r_max) << ", J: " << rep.J()
    << ", K: " << rep.K() << "\n";
  if (rep.inferred_target) s << "inferred target: " << *rep.inferred_target << "\n";
  if (!rep.note.empty()) s << "note: " << rep.note << "\n";
  return s.str();
}

}  // namespace pcbd
