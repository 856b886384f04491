// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails. Every tolerance is fixed below.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "pcbd/pipeline.hpp"
#include "reference_network.hpp"

namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

// Pinned tolerances.
constexpr double kFdStep = 1e-4;
constexpr double kFdRelTol = 1e-3;
constexpr std::size_t kGradientProbes = 100;
constexpr double kGradientSeconds = 60.0;
constexpr std::size_t kInvarianceProbes = 100;
constexpr double kMinTestAccuracy = 0.90;
constexpr double kTrainSeconds = 600.0;
constexpr double kMinAsr = 0.80;
constexpr double kMaxAccuracyDrop = 0.02;
constexpr std::size_t kRequiredPairs = 2;
constexpr double kPhi = 0.05;
constexpr double kDetectSeconds = 1800.0;
constexpr double kPvArithmeticTol = 1e-6;
constexpr double kRoundingTol = 1e-12;  // "exact" examples, up to double rounding
constexpr double kKsTol = 0.06;
constexpr std::size_t kNumPairs = 3;
constexpr std::uint64_t kPairSeed = 2024;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v, int digits = 4) {
  std::ostringstream s;
  s.precision(digits);
  s << v;
  return s.str();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

struct Result {
  int id;
  std::string name;
  bool pass;
  std::string detail;
};

std::vector<Result> results;

void record(int id, const std::string& name, bool pass, const std::string& detail) {
  results.push_back({id, name, pass, detail});
  std::cout << (pass ? "PASS" : "FAIL") << "  [" << id << "] " << name << ": " << detail
            << std::endl;
}

void progress(const std::string& s) { std::cerr << "  .. " << s << std::endl; }

// ---------------------------------------------------------------------------

void criterion_gradient(const pcbd::ClassifierWeights& w, const pcbd::Dataset& test) {
  const auto t0 = Clock::now();
  pcbd::Rng rng(7001);
  const std::size_t K = w.num_classes();
  auto margin = [&](const pcbd::PointCloud& x, const pcbd::Point3& c,
                    const pcbd::MarginSpec& spec) {
    pcbd::PointCloud with = x;
    with.points.push_back(c);
    return pcbd::margin_value(pcbd::forward_logits(w, with), spec);
  };
  std::size_t checked = 0, kinked = 0, attempts = 0;
  double worst = 0.0;
  while (checked < kGradientProbes && attempts < 100000) {
    ++attempts;
    const auto& sample = test.samples[rng.below(test.samples.size())];
    const pcbd::Point3 c{1.2 * rng.normal(), 1.2 * rng.normal(), 1.2 * rng.normal()};
    if (pcbd::testing::channels_won(w, sample.cloud, c) == 0) continue;
    const std::size_t other = (sample.label + 1 + rng.below(K - 1)) % K;
    const auto spec = checked % 2 ? pcbd::MarginSpec::untargeted(sample.label)
                                  : pcbd::MarginSpec::targeted(sample.label, other);
    const double f0 = margin(sample.cloud, c, spec);
    const pcbd::Point3 axes[3] = {{kFdStep, 0, 0}, {0, kFdStep, 0}, {0, 0, kFdStep}};
    double fd[3];
    bool smooth = true;
    for (int k = 0; k < 3; ++k) {
      const double fp = margin(sample.cloud, c + axes[k], spec);
      const double fm = margin(sample.cloud, c - axes[k], spec);
      fd[k] = (fp - fm) / (2 * kFdStep);
      // A ReLU, pool-winner or competitor switch inside the stencil makes
      // the one-sided slopes disagree; such points are not differentiable probes.
      const double fwd = (fp - f0) / kFdStep, bwd = (f0 - fm) / kFdStep;
      if (std::abs(fwd - bwd) > 1e-6 * std::max(1.0, std::abs(fd[k]))) smooth = false;
    }
    if (!smooth) {
      ++kinked;
      continue;
    }
    const pcbd::Point3 g = pcbd::loss_gradient_wrt_point(w, sample.cloud, c, spec);
    const pcbd::Point3 f{fd[0], fd[1], fd[2]};
    const double rel = pcbd::norm(g - f) / std::max({pcbd::norm(f), pcbd::norm(g), 1e-12});
    worst = std::max(worst, rel);
    ++checked;
  }
  const double secs = seconds_since(t0);
  record(1, "gradient vs central differences",
         checked == kGradientProbes && worst <= kFdRelTol && secs < kGradientSeconds,
         std::to_string(checked) + " probes winning >= 1 channel (" + std::to_string(kinked) +
             " kinked stencils skipped), max rel err " + fmt(worst, 3) + " (tol " +
             fmt(kFdRelTol) + "), " + fmt(secs, 3) + " s (limit " + fmt(kGradientSeconds) + " s)");
}

void criterion_invariance(const pcbd::ClassifierWeights& w, const pcbd::Dataset& test) {
  pcbd::Rng rng(7002);
  std::size_t perm_ok = 0, dup_ok = 0;
  for (std::size_t i = 0; i < kInvarianceProbes; ++i) {
    const auto& x = test.samples[rng.below(test.samples.size())].cloud;
    const auto base = pcbd::forward_logits(w, x);
    pcbd::PointCloud permuted = x;
    rng.shuffle(permuted.points);
    perm_ok += pcbd::forward_logits(w, permuted) == base;
    pcbd::PointCloud dup = x;
    dup.points.push_back(x.points[rng.below(x.size())]);
    dup.points.insert(dup.points.begin(), x.points[rng.below(x.size())]);
    dup_ok += pcbd::forward_logits(w, dup) == base;
  }
  record(2, "permutation and duplicate invariance",
         perm_ok == kInvarianceProbes && dup_ok == kInvarianceProbes,
         "bit-identical logits: permutation " + std::to_string(perm_ok) + "/" +
             std::to_string(kInvarianceProbes) + ", duplicate " + std::to_string(dup_ok) + "/" +
             std::to_string(kInvarianceProbes));
}

void criterion_arithmetic() {
  std::vector<std::string> failed;
  auto check = [&](bool ok, const char* what) {
    if (!ok) failed.push_back(what);
  };
  const auto w = pcbd::compute_w(std::vector{0.2, 0.8, 0.5});
  check(w[0] == 0.0 && w[1] == 1.0 && std::abs(w[2] - 0.5) <= kRoundingTol, "w [0.2,0.8,0.5]");
  check(pcbd::compute_w(std::vector{0.4, 0.4, 0.4}) == std::vector{1.0, 1.0, 1.0}, "w all equal");
  check(pcbd::compute_w(std::vector{-1.0, 1.0}) == std::vector{0.0, 1.0}, "w [-1,1]");
  check(std::abs(pcbd::combined_statistic(0.5, 0.2, 0.1) - 1.0) <= kRoundingTol, "r 0.5*0.2/0.1");
  check(pcbd::combined_statistic(0.0, 3.0, 0.2) == 0.0, "r w=0");
  check(pcbd::combined_statistic(1.0, 0.7, 0.7) == 1.0, "r r_t=r_s");

  const std::vector<pcbd::PointCloud> two{pcbd::PointCloud{{{0.1, 0, 0}}},
                                          pcbd::PointCloud{{{0, 0.3, 0}}}};
  check(std::abs(pcbd::compute_r_s({0, 0, 0}, two) - 0.2) < 1e-15, "r_s {0.1,0.3}");
  const std::vector<pcbd::PointCloud> three{pcbd::PointCloud{{{1, 0, 0}}},
                                            pcbd::PointCloud{{{0, 1, 0}}},
                                            pcbd::PointCloud{{{0, 0, 4}}}};
  check(pcbd::compute_r_t({0, 0, 0}, three) == 2.0, "r_t {1,1,4}");
  check(pcbd::compute_z({1, 0, 0}, {{pcbd::Point3{1, 0, 0}, pcbd::Point3{-1, 0, 0}}}) == 0.0,
        "z {1,-1}");
  check(pcbd::compute_z({1, 0, 0}, {{pcbd::Point3{2, 0, 0}, std::nullopt}}) == 0.5,
        "z {1,FAILED}");

  pcbd::ClassStatistics s;
  s.target = 1;
  s.r_s = 0.5;
  s.r_t = 1.0;
  s.w = 0.4;
  s.r = pcbd::combined_statistic(s.w, s.r_t, s.r_s);
  const auto a = pcbd::ablation_statistics(s);
  check(a.inv_rs == 2.0 && a.rt_over_rs == 2.0 && std::abs(a.w_over_rs - 0.8) < 1e-15 &&
            std::abs(a.r - 0.8) < 1e-15,
        "ablation {2,2,0.8,0.8}");

  const double pv = pcbd::order_statistic_pvalue(0.99, 38).pv;
  const long double exact = 1.0L - std::pow(0.99L, 38);
  check(std::abs(pv - static_cast<double>(exact)) <= kPvArithmeticTol &&
            std::abs(pv - 0.3174) < 5e-5,
        "pv 1-0.99^38");
  const auto uf = pcbd::order_statistic_pvalue(1.0, 38);
  check(uf.pv == 0.0 && uf.display() == "u.f.", "pv G=1 underflow");

  record(7, "statistic arithmetic examples", failed.empty(),
         failed.empty() ? "w, r, r_s, r_t, z, ablation and p-value examples exact; pv(0.99, 38) = " +
                              fmt(pv, 10)
                        : "failed: " + [&] {
                            std::string s;
                            for (const auto& f : failed) s += f + "; ";
                            return s;
                          }());
}

double gamma_draw(std::mt19937_64& gen, double shape, double scale) {
  // Marsaglia and Tsang, shape >= 1.
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  const double d = shape - 1.0 / 3.0, c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = normal(gen);
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    if (std::log(uniform(gen)) < 0.5 * x * x + d - d * v + d * std::log(v)) return d * v * scale;
  }
}

void criterion_gamma() {
  std::mt19937_64 gen(8001);
  std::exponential_distribution<double> expo(1.0);
  std::vector<double> v(1000);
  for (auto& x : v) x = expo(gen) + expo(gen);
  const auto fit = pcbd::fit_gamma(v);
  const bool recovered =
      fit.shape >= 1.8 && fit.shape <= 2.2 && fit.scale >= 0.9 && fit.scale <= 1.1;

  // Calibration: K - J = 7 null statistics per trial drawn from the null itself.
  const pcbd::GammaFit null{2.0, 0.5};
  const std::size_t m = 7;
  std::vector<double> pvs;
  for (int t = 0; t < 1000; ++t) {
    double r_max = 0.0;
    for (std::size_t i = 0; i < m; ++i) r_max = std::max(r_max, gamma_draw(gen, null.shape, null.scale));
    pvs.push_back(pcbd::order_statistic_pvalue(null, r_max, m).pv);
  }
  std::sort(pvs.begin(), pvs.end());
  double ks = 0.0;
  for (std::size_t i = 0; i < pvs.size(); ++i) {
    const double n = static_cast<double>(pvs.size());
    ks = std::max({ks, std::abs((i + 1) / n - pvs[i]), std::abs(pvs[i] - i / n)});
  }
  record(8, "Gamma fit recovery and p-value calibration", recovered && ks <= kKsTol,
         "shape " + fmt(fit.shape) + " in [1.8, 2.2], scale " + fmt(fit.scale) +
             " in [0.9, 1.1]; KS " + fmt(ks, 3) + " over 1000 null trials (tol " + fmt(kKsTol) +
             ")");
}

void criterion_ablation_csv(const fs::path& stats_path, std::size_t K) {
  std::ifstream in(stats_path);
  std::string header;
  std::getline(in, header);
  bool ok = header == pcbd::kStatsHeader;
  std::size_t rows = 0, failed_rows = 0;
  std::string problem;
  for (std::string line; std::getline(in, line);) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
    if (f.size() != 11) {
      ok = false;
      problem = "row with " + std::to_string(f.size()) + " columns";
      continue;
    }
    ++rows;
    auto num = [&](std::size_t i) { return pcbd::parse_real(f[i]).value_or(NAN); };
    const double inv_rs = num(7), rt_rs = num(8), w_rs = num(9), r = num(6);
    if (f[1] == "FAILED") {
      ++failed_rows;
      if (!(r == 0 && inv_rs == 0 && rt_rs == 0 && w_rs == 0)) {
        ok = false;
        problem = "FAILED row not zeroed";
      }
      continue;
    }
    const double rs = std::max(num(2), pcbd::kMinSourceDistance), rt = num(3), w = num(5);
    auto close = [](double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(b)); };
    if (!(close(inv_rs, 1 / rs) && close(rt_rs, rt / rs) && close(w_rs, w / rs) &&
          close(r, w * rt / rs))) {
      ok = false;
      problem = "class " + f[0] + " inconsistent";
    }
  }
  ok = ok && rows == K;
  record(9, "ablation statistics emitted", ok,
         std::to_string(rows) + "/" + std::to_string(K) + " class rows with 1/r_s, r_t/r_s, " +
             "w/r_s and r (" + std::to_string(failed_rows) + " FAILED)" +
             (problem.empty() ? "" : "; " + problem));
}

pcbd::RunConfig small_config(const pcbd::RunConfig& base) {
  pcbd::RunConfig c = base;
  c.data.classes = 4;
  c.data.train_per_class = 40;
  c.data.test_per_class = 5;
  c.data.clean_per_class = 4;
  c.data.reserve_per_class = 4;
  c.data.points = 64;
  c.train.epochs = 20;
  c.attack.poison_count = 5;
  c.attack.source = 0;
  c.attack.target = 1;
  c.estimation.tau_max = 60;
  c.estimation.restarts = 2;
  c.min_clean = 1;
  return c;
}

void criterion_determinism(const pcbd::RunConfig& base, const fs::path& root) {
  const pcbd::RunConfig c = small_config(base);
  std::vector<fs::path> runs;
  for (const char* name : {"det_a", "det_b"}) {
    const fs::path dir = root / name;
    fs::remove_all(dir);
    const fs::path data = dir / "data", out = dir / "out";
    pcbd::cmd_gen_data(c, data);
    pcbd::cmd_train(c, data, out / pcbd::files::kWeights);
    pcbd::cmd_attack(c, data, out / pcbd::files::kWeights, out);
    pcbd::cmd_detect(c, out / pcbd::files::kWeights, data, out / "detect_clean");
    pcbd::cmd_detect(c, out / pcbd::files::kAttackedWeights, data, out / "detect_attacked");
    pcbd::cmd_report(out / "detect_attacked", 0.1);
    runs.push_back(dir);
  }
  std::size_t compared = 0;
  std::vector<std::string> differing;
  for (const auto& entry : fs::recursive_directory_iterator(runs[0])) {
    if (!entry.is_regular_file()) continue;
    const fs::path rel = fs::relative(entry.path(), runs[0]);
    ++compared;
    if (!fs::exists(runs[1] / rel) || slurp(entry.path()) != slurp(runs[1] / rel)) {
      differing.push_back(rel.string());
    }
  }
  std::string detail = std::to_string(compared) +
                       " files from gen-data, train, attack, detect and report compared";
  for (const auto& d : differing) detail += "; differs: " + d;
  record(10, "stage determinism", compared > 0 && differing.empty(), detail);
}

struct Pair {
  std::size_t source, target;
  std::uint64_t train_seed;
};

std::vector<Pair> seeded_pairs(std::size_t K, std::uint64_t base_train_seed) {
  pcbd::Rng rng(kPairSeed);
  std::vector<Pair> out;
  while (out.size() < kNumPairs) {
    const std::size_t s = rng.below(K);
    const std::size_t t = (s + 1 + rng.below(K - 1)) % K;
    const bool dup = std::any_of(out.begin(), out.end(), [&](const Pair& p) {
      return p.source == s && p.target == t;
    });
    if (!dup) out.push_back({s, t, base_train_seed + out.size()});
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance suite"};
  std::string workdir = "acceptance_run";
  std::string config = PCBD_DEFAULT_CONFIG;
  app.add_option("--workdir", workdir, "scratch directory");
  app.add_option("--config", config, "run configuration")->check(CLI::ExistingFile);
  CLI11_PARSE(app, argc, argv);

  const auto t_all = Clock::now();
  const fs::path root(workdir);
  fs::create_directories(root);
  const pcbd::RunConfig base = pcbd::load_config(config);
  std::cout << "acceptance: config " << config << ", workdir " << root.string() << std::endl;

  criterion_arithmetic();
  criterion_gamma();
  try {
    criterion_determinism(base, root);
  } catch (const std::exception& e) {
    record(10, "stage determinism", false, std::string("stage threw: ") + e.what());
  }

  // Shared synthetic data.
  const fs::path data = root / "data";
  pcbd::cmd_gen_data(base, data);
  const pcbd::Dataset test = pcbd::load_dataset(data / pcbd::files::kTest);
  const auto pairs = seeded_pairs(base.data.classes, base.train.seed);

  struct PairOutcome {
    Pair pair;
    double clean_acc = 0, train_secs = 0;
    pcbd::AttackResult attack;
    bool attack_ok = false;
    std::optional<pcbd::DetectionReport> attacked_report, clean_report;
    double attacked_secs = 0, clean_secs = 0;
  };
  std::vector<PairOutcome> outcomes;

  for (std::size_t i = 0; i < pairs.size(); ++i) {
    PairOutcome o;
    o.pair = pairs[i];
    pcbd::RunConfig c = base;
    c.train.seed = o.pair.train_seed;
    c.attack.source = o.pair.source;
    c.attack.target = o.pair.target;
    const fs::path dir = root / ("pair" + std::to_string(i));
    progress("pair " + std::to_string(i) + ": source " + std::to_string(o.pair.source) +
             " -> target " + std::to_string(o.pair.target) + ", train seed " +
             std::to_string(o.pair.train_seed));

    auto t0 = Clock::now();
    const auto trained = pcbd::cmd_train(c, data, dir / pcbd::files::kWeights);
    o.train_secs = seconds_since(t0);
    o.clean_acc = trained.test_accuracy;
    progress("clean model: test accuracy " + fmt(o.clean_acc) + " in " + fmt(o.train_secs, 3) + " s");

    if (i == 0) {
      record(3, "clean training accuracy",
             o.clean_acc >= kMinTestAccuracy && o.train_secs <= kTrainSeconds,
             "test accuracy " + fmt(o.clean_acc) + " (min " + fmt(kMinTestAccuracy) + "), " +
                 fmt(o.train_secs, 3) + " s (limit " + fmt(kTrainSeconds) + " s), " +
                 std::to_string(base.data.classes) + " classes x " +
                 std::to_string(base.data.train_per_class) + " train / " +
                 std::to_string(base.data.test_per_class) + " test, " +
                 std::to_string(base.data.points) + " points");
      criterion_gradient(trained.weights, test);
      criterion_invariance(trained.weights, test);
    }

    o.attack = pcbd::cmd_attack(c, data, dir / pcbd::files::kWeights, dir);
    o.attack_ok = o.attack.asr >= kMinAsr && o.attack.accuracy_drop() <= kMaxAccuracyDrop;
    progress("attack: asr " + fmt(o.attack.asr) + ", accuracy drop " +
             fmt(o.attack.accuracy_drop()));

    t0 = Clock::now();
    o.attacked_report = pcbd::cmd_detect(c, dir / pcbd::files::kAttackedWeights, data,
                                         dir / "detect_attacked", progress);
    o.attacked_secs = seconds_since(t0);
    progress("attacked model: " + std::string(pcbd::to_string(o.attacked_report->verdict)) +
             ", pv " + o.attacked_report->pv.display() + " in " + fmt(o.attacked_secs, 3) + " s");

    t0 = Clock::now();
    o.clean_report =
        pcbd::cmd_detect(c, dir / pcbd::files::kWeights, data, dir / "detect_clean", progress);
    o.clean_secs = seconds_since(t0);
    progress("clean model: " + std::string(pcbd::to_string(o.clean_report->verdict)) + ", pv " +
             o.clean_report->pv.display() + " in " + fmt(o.clean_secs, 3) + " s");

    if (i == 0) criterion_ablation_csv(dir / "detect_attacked" / pcbd::files::kStats, base.data.classes);
    outcomes.push_back(std::move(o));
  }

  {
    std::size_t ok = 0;
    std::string detail;
    for (const auto& o : outcomes) {
      ok += o.attack_ok;
      detail += std::to_string(o.pair.source) + "->" + std::to_string(o.pair.target) + ": asr " +
                fmt(o.attack.asr) + ", drop " + fmt(o.attack.accuracy_drop()) + "; ";
    }
    record(4, "attack effectiveness", ok >= kRequiredPairs,
           std::to_string(ok) + "/" + std::to_string(outcomes.size()) + " pairs with asr >= " +
               fmt(kMinAsr) + " and drop <= " + fmt(kMaxAccuracyDrop) + " (" + detail + ")");
  }
  {
    std::size_t detected = 0;
    std::string detail;
    for (const auto& o : outcomes) {
      const auto& r = *o.attacked_report;
      const bool hit = o.attack_ok && r.pv.pv < kPhi && r.inferred_target == o.pair.target &&
                       o.attacked_secs <= kDetectSeconds;
      detected += hit;
      detail += std::to_string(o.pair.source) + "->" + std::to_string(o.pair.target) + ": pv " +
                r.pv.display() + ", target " +
                (r.inferred_target ? std::to_string(*r.inferred_target) : std::string("-")) +
                ", " + fmt(o.attacked_secs, 3) + " s" + (o.attack_ok ? "" : " (attack failed)") +
                "; ";
    }
    record(5, "detection of attacked models", detected >= kRequiredPairs,
           std::to_string(detected) + "/" + std::to_string(outcomes.size()) +
               " with pv < " + fmt(kPhi) + ", correct target, <= " + fmt(kDetectSeconds) +
               " s (" + detail + ")");
  }
  {
    std::size_t clean = 0;
    std::string detail;
    for (const auto& o : outcomes) {
      const auto& r = *o.clean_report;
      clean += r.pv.pv >= kPhi;
      detail += "seed " + std::to_string(o.pair.train_seed) + ": pv " + r.pv.display() + "; ";
    }
    record(6, "no false detections on clean models", clean == outcomes.size(),
           std::to_string(clean) + "/" + std::to_string(outcomes.size()) + " with pv >= " +
               fmt(kPhi) + " (" + detail + ")");
  }

  std::sort(results.begin(), results.end(),
            [](const Result& a, const Result& b) { return a.id < b.id; });
  std::size_t passed = 0;
  std::cout << "\nsummary (" << fmt(seconds_since(t_all), 4) << " s):\n";
  for (const auto& r : results) {
    passed += r.pass;
    std::cout << (r.pass ? "PASS" : "FAIL") << "  [" << r.id << "] " << r.name << '\n';
  }
  std::cout << passed << "/" << results.size() << " criteria passed" << std::endl;
  return passed == results.size() ? 0 : 1;
}
