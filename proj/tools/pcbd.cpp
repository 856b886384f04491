// pcbd: synthetic data, victim training, backdoor poisoning and detection.
//
// Exit codes: 0 clean (or any successful non-detect command), 2 attacked,
// 1 error.

#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "pcbd/pipeline.hpp"

namespace {

struct Options {
  std::string config;
  std::string weights;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<double> phi;
};

pcbd::RunConfig load(const Options& o) {
  pcbd::RunConfig cfg = o.config.empty() ? pcbd::RunConfig{} : pcbd::load_config(o.config);
  if (o.phi) cfg.phi = *o.phi;
  return cfg;
}

void add_common(CLI::App* cmd, Options& o) {
  cmd->add_option("--config", o.config, "run configuration file")->check(CLI::ExistingFile);
  cmd->add_option("--out", o.out, "output directory");
  cmd->add_option("--seed", o.seed, "overrides the stage's seed from the config");
}

void log_line(const std::string& s) { std::cerr << s << '\n'; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Point-cloud backdoor detection by trigger location reverse engineering"};
  app.require_subcommand(1);
  Options o;

  auto* gen = app.add_subcommand("gen-data", "generate train/test/clean/reserve splits");
  add_common(gen, o);
  auto* trn = app.add_subcommand("train", "train a classifier on the training split");
  add_common(trn, o);
  trn->add_option("--weights", o.weights, "weight file to write");
  auto* atk = app.add_subcommand("attack", "poison the training split and retrain");
  add_common(atk, o);
  atk->add_option("--weights", o.weights, "clean weights, for the accuracy comparison");
  auto* det = app.add_subcommand("detect", "run detection on a trained classifier");
  add_common(det, o);
  det->add_option("--weights", o.weights, "weights to inspect")->required();
  det->add_option("--phi", o.phi, "significance threshold");
  auto* rep = app.add_subcommand("report", "re-render report and histogram from stats.csv");
  add_common(rep, o);
  rep->add_option("--phi", o.phi, "significance threshold");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    pcbd::RunConfig cfg = load(o);
    const pcbd::fs::path run_dir = o.out.empty() ? pcbd::fs::path(cfg.out) : pcbd::fs::path(o.out);

    if (gen->parsed()) {
      if (o.seed) cfg.data.seed = *o.seed;
      const pcbd::fs::path dir = o.out.empty() ? pcbd::fs::path(cfg.data_dir) : run_dir;
      pcbd::cmd_gen_data(cfg, dir);
      std::cout << "wrote splits and manifest to " << dir.string() << '\n';
      return 0;
    }
    if (trn->parsed()) {
      if (o.seed) cfg.train.seed = *o.seed;
      const pcbd::fs::path weights =
          o.weights.empty() ? run_dir / pcbd::files::kWeights : pcbd::fs::path(o.weights);
      const auto res = pcbd::cmd_train(cfg, cfg.data_dir, weights);
      std::cout << "test accuracy " << res.test_accuracy << ", weights " << weights.string()
                << '\n';
      return 0;
    }
    if (atk->parsed()) {
      if (o.seed) cfg.attack.seed = *o.seed;
      const pcbd::fs::path clean =
          o.weights.empty() ? run_dir / pcbd::files::kWeights : pcbd::fs::path(o.weights);
      const auto res = pcbd::cmd_attack(cfg, cfg.data_dir, clean, run_dir);
      std::cout << "asr " << res.asr << ", clean accuracy " << res.clean_accuracy
                << ", attacked accuracy " << res.attacked_accuracy << '\n';
      return 0;
    }
    if (det->parsed()) {
      if (o.seed) cfg.detect_seed = *o.seed;
      const auto report = pcbd::cmd_detect(cfg, o.weights, cfg.data_dir, run_dir, log_line);
      std::cout << pcbd::summary(report);
      return pcbd::exit_code(report.verdict);
    }
    if (rep->parsed()) {
      const auto report = pcbd::cmd_report(run_dir, cfg.phi);
      std::cout << pcbd::summary(report);
      return pcbd::exit_code(report.verdict);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
