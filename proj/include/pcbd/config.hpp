#pragma once

#include <cstdint>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <type_traits>
#include <ostream>
#include <string>

#include "pcbd/attack.hpp"
#include "pcbd/classifier.hpp"
#include "pcbd/error.hpp"
#include "pcbd/estimation.hpp"
#include "pcbd/shapes.hpp"
#include "pcbd/text_io.hpp"

namespace pcbd {

struct DataConfig {
  std::size_t classes = 8;
  std::size_t train_per_class = 100;
  std::size_t test_per_class = 20;
  std::size_t clean_per_class = 10;
  std::size_t reserve_per_class = 10;
  std::size_t points = 256;
  std::uint64_t seed = 1;
};

// Victim training used by the tools: shorter than the library default and
// with stray-point augmentation on.
inline TrainConfig default_run_training() {
  TrainConfig t;
  t.epochs = 60;
  t.outliers.probability = 0.15;
  return t;
}

struct RunConfig {
  DataConfig data;
  TrainConfig train = default_run_training();
  AttackConfig attack;
  EstimationParams estimation;
  std::uint64_t detect_seed = 1;
  std::size_t min_clean = 5;
  double phi = 0.05;
  std::string data_dir = "data";
  std::string out = "run";
};

inline void validate(const RunConfig& cfg) {
  const auto& d = cfg.data;
  if (d.classes < 2 || d.classes > kShapeNames.size()) {
    throw InvalidInput("classes must lie in [2, " + std::to_string(kShapeNames.size()) + "]");
  }
  if (d.train_per_class < 1 || d.test_per_class < 1 || d.clean_per_class < 1) {
    throw InvalidInput("train, test and clean splits need at least one cloud per class");
  }
  if (d.points < 16) throw InvalidInput("points per cloud must be >= 16");
  if (cfg.min_clean < 1 || cfg.min_clean > d.clean_per_class) {
    throw InvalidInput("min_clean must lie in [1, clean_per_class]");
  }
  if (!(cfg.phi > 0.0 && cfg.phi < 1.0)) throw InvalidInput("phi must lie in (0, 1)");
  if (cfg.train.epochs < 1) throw InvalidInput("epochs must be >= 1");
  if (!(cfg.train.learning_rate > 0.0)) throw InvalidInput("lr must be > 0");
  validate(cfg.attack);
  validate(cfg.estimation);
}

namespace detail {

using Setter = std::function<void(RunConfig&, std::string_view)>;

template <class T>
Setter count_field(T RunConfig::*group, std::size_t T::*field) {
  return [=](RunConfig& c, std::string_view v) {
    const auto x = parse_int(v);
    if (!x || *x < 0) throw InvalidInput("expected a nonnegative integer");
    c.*group.*field = static_cast<std::size_t>(*x);
  };
}

template <class T>
Setter seed_field(T RunConfig::*group, std::uint64_t T::*field) {
  return [=](RunConfig& c, std::string_view v) {
    const auto x = parse_int(v);
    if (!x || *x < 0) throw InvalidInput("expected a nonnegative integer");
    c.*group.*field = static_cast<std::uint64_t>(*x);
  };
}

template <class T>
Setter real_field(T RunConfig::*group, double T::*field) {
  return [=](RunConfig& c, std::string_view v) {
    const auto x = parse_real(v);
    if (!x) throw InvalidInput("expected a number");
    c.*group.*field = *x;
  };
}

inline Setter real_field_in(double& (*get)(RunConfig&)) {
  return [=](RunConfig& c, std::string_view v) {
    const auto x = parse_real(v);
    if (!x) throw InvalidInput("expected a number");
    get(c) = *x;
  };
}

inline const std::map<std::string, Setter, std::less<>>& config_setters() {
  using C = RunConfig;
  static const std::map<std::string, Setter, std::less<>> table = {
      {"classes", count_field(&C::data, &DataConfig::classes)},
      {"train_per_class", count_field(&C::data, &DataConfig::train_per_class)},
      {"test_per_class", count_field(&C::data, &DataConfig::test_per_class)},
      {"clean_per_class", count_field(&C::data, &DataConfig::clean_per_class)},
      {"reserve_per_class", count_field(&C::data, &DataConfig::reserve_per_class)},
      {"points", count_field(&C::data, &DataConfig::points)},
      {"data_seed", seed_field(&C::data, &DataConfig::seed)},
      {"epochs", count_field(&C::train, &TrainConfig::epochs)},
      {"batch", count_field(&C::train, &TrainConfig::batch_size)},
      {"lr", real_field(&C::train, &TrainConfig::learning_rate)},
      {"train_seed", seed_field(&C::train, &TrainConfig::seed)},
      {"outlier_prob",
       real_field_in([](C& c) -> double& { return c.train.outliers.probability; })},
      {"outlier_radius_min",
       real_field_in([](C& c) -> double& { return c.train.outliers.radius_min; })},
      {"outlier_radius_max",
       real_field_in([](C& c) -> double& { return c.train.outliers.radius_max; })},
      {"outlier_max_points",
       [](C& c, std::string_view v) {
         const auto x = parse_int(v);
         if (!x || *x < 1) throw InvalidInput("expected a positive integer");
         c.train.outliers.max_points = static_cast<std::size_t>(*x);
       }},
      {"source", count_field(&C::attack, &AttackConfig::source)},
      {"target", count_field(&C::attack, &AttackConfig::target)},
      {"poison", count_field(&C::attack, &AttackConfig::poison_count)},
      {"pattern_points", count_field(&C::attack, &AttackConfig::pattern_points)},
      {"pattern_radius", real_field(&C::attack, &AttackConfig::pattern_radius)},
      {"standoff", real_field(&C::attack, &AttackConfig::standoff)},
      {"candidates", count_field(&C::attack, &AttackConfig::candidates)},
      {"attack_seed", seed_field(&C::attack, &AttackConfig::seed)},
      {"pi", real_field(&C::estimation, &EstimationParams::pi)},
      {"delta", real_field(&C::estimation, &EstimationParams::delta)},
      {"tau_max", count_field(&C::estimation, &EstimationParams::tau_max)},
      {"alpha", real_field(&C::estimation, &EstimationParams::alpha)},
      {"lambda0", real_field(&C::estimation, &EstimationParams::lambda0)},
      {"restarts", count_field(&C::estimation, &EstimationParams::restarts)},
      {"grad_clip", real_field(&C::estimation, &EstimationParams::grad_clip)},
      {"detect_seed",
       [](C& c, std::string_view v) {
         const auto x = parse_int(v);
         if (!x || *x < 0) throw InvalidInput("expected a nonnegative integer");
         c.detect_seed = static_cast<std::uint64_t>(*x);
       }},
      {"min_clean",
       [](C& c, std::string_view v) {
         const auto x = parse_int(v);
         if (!x || *x < 1) throw InvalidInput("expected a positive integer");
         c.min_clean = static_cast<std::size_t>(*x);
       }},
      {"phi", real_field_in([](C& c) -> double& { return c.phi; })},
      {"data_dir", [](C& c, std::string_view v) { c.data_dir = std::string(v); }},
      {"out", [](C& c, std::string_view v) { c.out = std::string(v); }},
  };
  return table;
}

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace detail

// Flat `key = value` lines; `#` starts a comment. Keys not listed keep
// their defaults. Unknown keys and bad values are errors with a line number.
inline RunConfig parse_config(std::istream& in, RunConfig cfg = {}) {
  const auto& setters = detail::config_setters();
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    std::string_view text(raw);
    if (const auto hash = text.find('#'); hash != std::string_view::npos) {
      text = text.substr(0, hash);
    }
    text = detail::trim(text);
    if (text.empty()) continue;
    const auto eq = text.find('=');
    if (eq == std::string_view::npos) throw ParseError(line, "expected key = value");
    const auto key = detail::trim(text.substr(0, eq));
    const auto value = detail::trim(text.substr(eq + 1));
    const auto it = setters.find(key);
    if (it == setters.end()) throw ParseError(line, "unknown key \"" + std::string(key) + "\"");
    if (value.empty()) throw ParseError(line, "missing value for \"" + std::string(key) + "\"");
    try {
      it->second(cfg, value);
    } catch (const InvalidInput& e) {
      throw ParseError(line, std::string(key) + ": " + e.what());
    }
  }
  return cfg;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open config " + path);
  return parse_config(in);
}

// Every key with its current value, in a fixed order, parseable by parse_config.
inline void write_config(std::ostream& out, const RunConfig& c) {
  auto kv = [&](const char* k, const auto& v) {
    if constexpr (std::is_floating_point_v<std::decay_t<decltype(v)>>) {
      out << k << " = " << format_real(v) << '\n';
    } else {
      out << k << " = " << v << '\n';
    }
  };
  kv("classes", c.data.classes);
  kv("train_per_class", c.data.train_per_class);
  kv("test_per_class", c.data.test_per_class);
  kv("clean_per_class", c.data.clean_per_class);
  kv("reserve_per_class", c.data.reserve_per_class);
  kv("points", c.data.points);
  kv("data_seed", c.data.seed);
  kv("epochs", c.train.epochs);
  kv("batch", c.train.batch_size);
  kv("lr", c.train.learning_rate);
  kv("train_seed", c.train.seed);
  kv("outlier_prob", c.train.outliers.probability);
  kv("outlier_max_points", c.train.outliers.max_points);
  kv("outlier_radius_min", c.train.outliers.radius_min);
  kv("outlier_radius_max", c.train.outliers.radius_max);
  kv("source", c.attack.source);
  kv("target", c.attack.target);
  kv("poison", c.attack.poison_count);
  kv("pattern_points", c.attack.pattern_points);
  kv("pattern_radius", c.attack.pattern_radius);
  kv("standoff", c.attack.standoff);
  kv("candidates", c.attack.candidates);
  kv("attack_seed", c.attack.seed);
  kv("pi", c.estimation.pi);
  kv("delta", c.estimation.delta);
  kv("tau_max", c.estimation.tau_max);
  kv("alpha", c.estimation.alpha);
  kv("lambda0", c.estimation.lambda0);
  kv("restarts", c.estimation.restarts);
  kv("grad_clip", c.estimation.grad_clip);
  kv("detect_seed", c.detect_seed);
  kv("min_clean", c.min_clean);
  kv("phi", c.phi);
  kv("data_dir", c.data_dir);
  kv("out", c.out);
}

}  // namespace pcbd
