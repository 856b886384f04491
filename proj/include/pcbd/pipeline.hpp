#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "pcbd/attack.hpp"
#include "pcbd/classifier.hpp"
#include "pcbd/config.hpp"
#include "pcbd/dataset_io.hpp"
#include "pcbd/estimation.hpp"
#include "pcbd/inference.hpp"
#include "pcbd/report.hpp"
#include "pcbd/shapes.hpp"

// End-to-end commands behind the pcbd tool. Each reads and writes plain
// files so stages can be rerun independently.
namespace pcbd {

namespace fs = std::filesystem;

using Progress = std::function<void(const std::string&)>;

namespace files {
inline constexpr const char* kTrain = "train.txt";
inline constexpr const char* kTest = "test.txt";
inline constexpr const char* kClean = "clean.txt";
inline constexpr const char* kReserve = "reserve.txt";
inline constexpr const char* kManifest = "manifest.txt";
inline constexpr const char* kWeights = "weights.txt";
inline constexpr const char* kTrainLog = "train_log.csv";
inline constexpr const char* kTrainMetrics = "train_metrics.txt";
inline constexpr const char* kPattern = "pattern.txt";
inline constexpr const char* kAttackedWeights = "attacked_weights.txt";
inline constexpr const char* kAttackMetrics = "attack_metrics.txt";
inline constexpr const char* kStats = "stats.csv";
inline constexpr const char* kReport = "report.json";
inline constexpr const char* kHistogram = "histogram.svg";
}  // namespace files

namespace detail {

inline void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw InvalidInput("cannot create output directory " + dir.string());
  }
}

inline std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot write " + path.string());
  return out;
}

inline void require_file(const fs::path& path, const char* what) {
  if (!fs::is_regular_file(path)) {
    throw InvalidInput(std::string("missing ") + what + ": " + path.string());
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// gen-data
//
// Every cloud has a per-class sample id; ids are allotted to the splits in
// consecutive blocks (train, test, clean, reserve), so the splits are
// disjoint by construction. The cloud with id i of class k is
// generate_shape(k, points, mix_seed(data_seed, i)).

struct SplitLayout {
  const char* name;
  std::size_t per_class;
  std::size_t first_id;
};

inline std::vector<SplitLayout> split_layout(const DataConfig& d) {
  std::vector<SplitLayout> out;
  std::size_t next = 0;
  for (auto [name, n] : {std::pair{"train", d.train_per_class}, std::pair{"test", d.test_per_class},
                         std::pair{"clean", d.clean_per_class},
                         std::pair{"reserve", d.reserve_per_class}}) {
    out.push_back({name, n, next});
    next += n;
  }
  return out;
}

inline Dataset generate_split(const DataConfig& d, const SplitLayout& split) {
  Dataset out{{}, d.classes};
  for (std::size_t k = 0; k < d.classes; ++k) {
    for (std::size_t i = 0; i < split.per_class; ++i) {
      const std::uint64_t id = split.first_id + i;
      out.samples.push_back({generate_shape(k, d.points, mix_seed(d.seed, id)), k});
    }
  }
  return out;
}

struct GeneratedData {
  Dataset train, test, clean, reserve;
};

inline GeneratedData generate_data(const DataConfig& d) {
  const auto layout = split_layout(d);
  return {generate_split(d, layout[0]), generate_split(d, layout[1]),
          generate_split(d, layout[2]), generate_split(d, layout[3])};
}

inline void write_manifest(std::ostream& out, const DataConfig& d) {
  const auto layout = split_layout(d);
  out << "pcbd-manifest 1\n";
  out << "data_seed " << d.seed << "\n";
  out << "classes " << d.classes << "\n";
  out << "points " << d.points << "\n";
  std::vector<std::set<std::size_t>> ids;
  for (const auto& s : layout) {
    out << "split " << s.name << " per_class " << s.per_class << " total "
        << s.per_class * d.classes;
    if (s.per_class > 0) out << " ids " << s.first_id << '-' << s.first_id + s.per_class - 1;
    out << "\n";
    std::set<std::size_t> these;
    for (std::size_t i = 0; i < s.per_class; ++i) these.insert(s.first_id + i);
    ids.push_back(std::move(these));
  }
  bool disjoint = true;
  for (std::size_t a = 0; a < ids.size(); ++a) {
    for (std::size_t b = a + 1; b < ids.size(); ++b) {
      for (auto id : ids[a]) disjoint = disjoint && !ids[b].contains(id);
    }
  }
  out << "disjoint " << (disjoint ? "yes" : "no") << "\n";
}

inline void cmd_gen_data(const RunConfig& cfg, const fs::path& out_dir) {
  validate(cfg);
  detail::ensure_dir(out_dir);
  const auto data = generate_data(cfg.data);
  save_dataset(out_dir / files::kTrain, data.train);
  save_dataset(out_dir / files::kTest, data.test);
  save_dataset(out_dir / files::kClean, data.clean);
  save_dataset(out_dir / files::kReserve, data.reserve);
  auto manifest = detail::open_out(out_dir / files::kManifest);
  write_manifest(manifest, cfg.data);
}

// ---------------------------------------------------------------------------
// train

struct TrainResult {
  ClassifierWeights weights;
  std::vector<double> loss;
  double test_accuracy = 0.0;
};

inline TrainResult cmd_train(const RunConfig& cfg, const fs::path& data_dir,
                             const fs::path& weights_path) {
  validate(cfg);
  detail::require_file(data_dir / files::kTrain, "training split");
  detail::require_file(data_dir / files::kTest, "test split");
  const Dataset train_set = load_dataset(data_dir / files::kTrain);
  const Dataset test_set = load_dataset(data_dir / files::kTest);

  TrainResult res;
  res.weights = train(train_set, cfg.train, &res.loss);
  res.test_accuracy = accuracy(res.weights, test_set);

  const fs::path dir = weights_path.parent_path();
  if (!dir.empty()) detail::ensure_dir(dir);
  save_weights(res.weights, weights_path);
  auto log = detail::open_out(dir / files::kTrainLog);
  log << "epoch,loss\n";
  for (std::size_t e = 0; e < res.loss.size(); ++e) log << e + 1 << ',' << format_real(res.loss[e]) << '\n';
  auto metrics = detail::open_out(dir / files::kTrainMetrics);
  metrics << "test_accuracy " << format_real(res.test_accuracy) << "\n";
  return res;
}

// ---------------------------------------------------------------------------
// attack

struct AttackResult {
  BackdoorPattern pattern;
  ClassifierWeights weights;
  double asr = 0.0;
  double clean_accuracy = 0.0;     // clean-trained model on the test split
  double attacked_accuracy = 0.0;  // poisoned model on the test split
  double accuracy_drop() const { return clean_accuracy - attacked_accuracy; }
};

inline void write_attack_metrics(std::ostream& out, const AttackConfig& a, const AttackResult& r) {
  out << "source " << a.source << "\n";
  out << "target " << a.target << "\n";
  out << "poison " << a.poison_count << "\n";
  out << "asr " << format_real(r.asr) << "\n";
  out << "clean_accuracy " << format_real(r.clean_accuracy) << "\n";
  out << "attacked_accuracy " << format_real(r.attacked_accuracy) << "\n";
  out << "accuracy_drop " << format_real(r.accuracy_drop()) << "\n";
}

// Poisons the training split and retrains with the same training config as
// the clean model at clean_weights_path, which is only used for the
// clean-accuracy comparison.
inline AttackResult cmd_attack(const RunConfig& cfg, const fs::path& data_dir,
                               const fs::path& clean_weights_path, const fs::path& out_dir) {
  validate(cfg);
  const auto& a = cfg.attack;
  if (a.source >= cfg.data.classes || a.target >= cfg.data.classes) {
    throw InvalidInput("attack source/target outside the class range");
  }
  detail::require_file(data_dir / files::kTrain, "training split");
  detail::require_file(data_dir / files::kTest, "test split");
  detail::require_file(clean_weights_path, "clean weights");
  const Dataset train_set = load_dataset(data_dir / files::kTrain);
  const Dataset test_set = load_dataset(data_dir / files::kTest);
  const ClassifierWeights clean = load_weights(clean_weights_path);
  check_compatible(clean, train_set.num_classes);

  AttackResult res;
  const auto source_clouds = train_set.clouds_of(a.source);
  res.pattern = make_pattern(choose_center(source_clouds, a.standoff, a.candidates, a.seed), a);
  res.weights = train(poison_dataset(train_set, a, res.pattern), cfg.train);
  res.asr = attack_success_rate(res.weights, test_set.clouds_of(a.source), res.pattern, a.target);
  res.clean_accuracy = accuracy(clean, test_set);
  res.attacked_accuracy = accuracy(res.weights, test_set);

  detail::ensure_dir(out_dir);
  auto pattern = detail::open_out(out_dir / files::kPattern);
  write_pattern(pattern, res.pattern);
  save_weights(res.weights, out_dir / files::kAttackedWeights);
  auto metrics = detail::open_out(out_dir / files::kAttackMetrics);
  write_attack_metrics(metrics, a, res);
  return res;
}

// ---------------------------------------------------------------------------
// detect

// Per class: the clean clouds the model classifies correctly, topped up
// from the reserve pool to clean_per_class. Fewer than min_clean is an error.
inline std::vector<std::vector<PointCloud>> select_clean_sets(const ClassifierWeights& w,
                                                              const Dataset& clean,
                                                              const Dataset& reserve,
                                                              std::size_t per_class,
                                                              std::size_t min_clean) {
  check_compatible(w, clean.num_classes);
  std::vector<std::vector<PointCloud>> sets(clean.num_classes);
  for (const Dataset* pool : {&clean, &reserve}) {
    for (const auto& s : pool->samples) {
      if (s.label >= sets.size()) throw InvalidInput("clean sample label out of range");
      auto& set = sets[s.label];
      if (set.size() < per_class && predict(w, s.cloud) == s.label) set.push_back(s.cloud);
    }
  }
  for (std::size_t k = 0; k < sets.size(); ++k) {
    if (sets[k].size() < min_clean) {
      throw InvalidInput("class " + std::to_string(k) + ": only " +
                         std::to_string(sets[k].size()) +
                         " correctly classified clean clouds, need " + std::to_string(min_clean));
    }
  }
  return sets;
}

inline DetectionReport run_detection(const ClassifierWeights& w,
                                     const std::vector<std::vector<PointCloud>>& clean_sets,
                                     const EstimationParams& params, std::uint64_t seed, double phi,
                                     const Progress& progress = {}) {
  const std::size_t K = clean_sets.size();
  std::vector<GroupEstimate> groups;
  std::vector<SampleWiseEstimate> samplewise;
  for (std::size_t k = 0; k < K; ++k) {
    groups.push_back(estimate_group_location(w, clean_sets[k], k, params, mix_seed(seed, k, 0)));
    const auto& g = groups.back();
    if (g.failed()) {
      samplewise.emplace_back();
    } else {
      samplewise.push_back(
          estimate_samplewise(w, clean_sets[k], k, *g.target, params, mix_seed(seed, k, 1)));
    }
    if (progress) {
      progress("class " + std::to_string(k) +
               (g.failed() ? ": FAILED"
                           : ": target " + std::to_string(*g.target) + ", r_s " +
                                 format_real(g.mean_source_distance)));
    }
  }
  return detect(compute_statistics(clean_sets, groups, samplewise), phi);
}

inline void write_detection_outputs(const fs::path& out_dir, const DetectionReport& rep) {
  detail::ensure_dir(out_dir);
  auto stats = detail::open_out(out_dir / files::kStats);
  write_stats_csv(stats, rep);
  auto report = detail::open_out(out_dir / files::kReport);
  write_report_json(report, rep);
  auto svg = detail::open_out(out_dir / files::kHistogram);
  write_histogram_svg(svg, rep);
}

// Reads only the weights and the clean/reserve splits, never the training data.
inline DetectionReport cmd_detect(const RunConfig& cfg, const fs::path& weights_path,
                                  const fs::path& data_dir, const fs::path& out_dir,
                                  const Progress& progress = {}) {
  validate(cfg);
  detail::require_file(weights_path, "weights");
  detail::require_file(data_dir / files::kClean, "clean split");
  const ClassifierWeights w = load_weights(weights_path);
  const Dataset clean = load_dataset(data_dir / files::kClean);
  const fs::path reserve_path = data_dir / files::kReserve;
  const Dataset reserve =
      fs::is_regular_file(reserve_path) ? load_dataset(reserve_path) : Dataset{{}, clean.num_classes};
  const auto sets =
      select_clean_sets(w, clean, reserve, cfg.data.clean_per_class, cfg.min_clean);
  DetectionReport rep = run_detection(w, sets, cfg.estimation, cfg.detect_seed, cfg.phi, progress);
  write_detection_outputs(out_dir, rep);
  return rep;
}

// ---------------------------------------------------------------------------
// report

// Re-derives the verdict from a statistics CSV (possibly with a new phi) and
// re-renders report.json and histogram.svg next to it.
inline DetectionReport cmd_report(const fs::path& out_dir, double phi) {
  detail::require_file(out_dir / files::kStats, "statistics file");
  std::ifstream in(out_dir / files::kStats);
  DetectionReport rep = detect(read_stats_csv(in), phi);
  in.close();
  write_detection_outputs(out_dir, rep);
  return rep;
}

inline int exit_code(Verdict v) { return v == Verdict::kAttacked ? 2 : 0; }

}  // namespace pcbd
