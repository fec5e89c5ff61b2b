// Command-line driver: dataset generation, training, noise sweeps and
// gradient checks.
//
//   tvseg generate  --dataset data --seed 1
//   tvseg train     --dataset data --mode both --epochs 30 --out runs/a
//   tvseg sweep     --dataset data --out runs/a --svg
//   tvseg gradcheck --out runs/a
//   tvseg --config runs/a/manifest.ini      (replay a previous run)
//
// Exit status: 0 success, 1 usage/config error, 2 runtime failure,
// 3 gradient check failure.

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "tvseg/experiment.hpp"

namespace {

enum Exit { kOk = 0, kUsage = 1, kRuntime = 2, kGradcheck = 3 };

std::string timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  return buf;
}

void write_manifest(const CLI::App& app, const std::filesystem::path& out) {
  std::filesystem::create_directories(out);
  std::ofstream os(out / "manifest.ini");
  os << "# tvseg run manifest; replay with: tvseg --config " << (out / "manifest.ini").string() << "\n";
  os << "# created=" << timestamp() << "\n";
  os << app.config_to_str(true, false);
}

}  // namespace

int main(int argc, char** argv) {
  tvseg::ExperimentConfig cfg;
  std::string dataset, out = cfg.out.string();

  CLI::App app{"TV-regularized softmax segmentation experiments"};
  app.set_config("--config", "", "Replay a run from its manifest.ini");
  app.option_defaults()->always_capture_default();
  app.add_option("command", cfg.command, "generate | train | sweep | experiment | gradcheck")
      ->required()
      ->check(CLI::IsMember({"generate", "train", "sweep", "experiment", "gradcheck"}));
  app.add_flag("--generate", cfg.generate, "Generate the synthetic dataset (written to --dataset if given)");
  app.add_option("--dataset", dataset, "Dataset directory");
  app.add_option("--train-count", cfg.train_count, "Generated training images");
  app.add_option("--test-count", cfg.test_count, "Generated test images");
  app.add_option("--size", cfg.image_size, "Generated image side length");
  app.add_option("--mode", cfg.mode, "plain | regularized | both");
  app.add_option("--widths", cfg.widths, "Channel widths per network level")->delimiter(',');
  app.add_option("--lambda", cfg.lambda, "Initial regularization weight");
  app.add_option("--kappa", cfg.kappa, "Fixed one-step dual step");
  app.add_option("--tau", cfg.tau, "Dual step for test-time iterations");
  app.add_option("--iters", cfg.iterations, "Dual iterations at test time");
  app.add_option("--post-tv-lambda", cfg.post_tv_lambda, "Lambda of the post-TV baseline");
  app.add_option("--epochs", cfg.epochs, "Training epochs");
  app.add_option("--batch", cfg.batch, "Mini-batch size");
  app.add_option("--lr", cfg.learning_rate, "Learning rate");
  app.add_option("--tau-lambda", cfg.tau_lambda, "Learning rate of lambda");
  app.add_option("--seed", cfg.seed, "Seed for data, initialization and shuffling");
  app.add_option("--noise-train", cfg.noise_train, "none | paper");
  app.add_option("--noisy-subset", cfg.noisy_subset, "Training images corrupted with --noise-train paper");
  app.add_option("--sweep", cfg.sweep, "Noise grid, e.g. gauss:0.01..0.09:0.02,pepper:0.01,salt:0.01");
  app.add_option("--out", out, "Output directory");
  app.add_flag("--svg", cfg.svg, "Also write sweep.svg");
  app.add_option("--inject-fault", cfg.inject_fault, "Gradcheck test hook: sabotage the named check");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }
  cfg.dataset = dataset;
  cfg.out = out;

  const auto problems = cfg.problems();
  if (!problems.empty()) {
    for (const auto& p : problems) std::cerr << "error: " << p << "\n";
    std::cerr << "Run with --help for usage.\n";
    return kUsage;
  }

  try {
    write_manifest(app, cfg.out);
    if (cfg.command == "generate") {
      if (cfg.dataset.empty()) {
        std::cerr << "error: generate needs --dataset DIR\n";
        return kUsage;
      }
      cfg.generate = true;
      const auto ds = tvseg::obtain_dataset(cfg);
      std::cout << "wrote " << ds.train.size() << " train / " << ds.test.size() << " test samples to "
                << cfg.dataset.string() << "\n";
    }
    if (cfg.command == "train" || cfg.command == "experiment") {
      for (const auto& o : tvseg::run_train(cfg)) {
        std::cout << o.model << ": " << o.log.iterations << " iterations, final loss "
                  << o.log.losses.back() << ", lambda " << o.final_lambda << " -> "
                  << o.checkpoint.string() << "\n";
      }
    }
    if (cfg.command == "sweep" || cfg.command == "experiment") {
      std::cout << tvseg::metrics_csv_header() << "\n";
      for (const auto& row : tvseg::run_sweep(cfg)) std::cout << tvseg::to_csv_row(row) << "\n";
    }
    if (cfg.command == "gradcheck") {
      bool ok = true;
      std::cout << tvseg::grad_report_csv_header() << "\n";
      for (const auto& r : tvseg::run_gradcheck(cfg)) {
        std::cout << tvseg::to_csv_row(r) << "\n";
        ok = ok && r.pass;
      }
      if (!ok) return kGradcheck;
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const tvseg::TrainingError& e) {
    std::cerr << "training aborted at iteration " << e.iteration() << ": " << e.what() << "\n";
    return kRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntime;
  }
  return kOk;
}
