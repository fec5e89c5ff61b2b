#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tvseg/metrics.hpp"
#include "tvseg/mini_net.hpp"
#include "tvseg/reg_backward.hpp"
#include "tvseg/synth_data.hpp"

namespace tvseg {

/// One column of the robustness table: clean, gauss sigma, pepper or salt fraction.
struct NoisePoint {
  std::string kind = "clean";
  double level = 0.0;

  friend bool operator==(const NoisePoint&, const NoisePoint&) = default;
};

/// Parses "gauss:0.01..0.09:0.02,pepper:0.01,salt:0.01". The clean point is
/// always first and need not be listed.
std::vector<NoisePoint> parse_sweep(const std::string& text);

/// Default grid: clean, gauss 0.01..0.09 step 0.02, pepper 0.01, salt 0.01.
inline constexpr const char* kDefaultSweep = "gauss:0.01..0.09:0.02,pepper:0.01,salt:0.01";

/// Test image under a noise point; the seed depends on the image index and
/// the point only, so every model sees identical corrupted inputs.
Field3 corrupt_for_eval(const Field3& image, const NoisePoint& point, std::uint64_t seed,
                        std::size_t image_index);

/// How a trained network is turned into label maps.
struct EvalModel {
  std::string id;
  const MiniNet* net = nullptr;
  /// Post-TV processing of a plain network's logits with this lambda.
  std::optional<double> post_tv_lambda;
  int test_iterations = 100;
};

LabelMap predict_labels(const EvalModel& model, const Field3& image);

/// mIoU/accuracy on the aggregated confusion matrix, RE averaged over images.
MetricsRow evaluate(const EvalModel& model, const std::vector<Sample>& test,
                    const NoisePoint& point, std::uint64_t noise_seed);

std::vector<LabeledImage> to_labeled(const std::vector<Sample>& samples);

/// Fully resolved settings of one CLI invocation.
struct ExperimentConfig {
  std::string command;
  std::filesystem::path dataset;
  std::filesystem::path out = "out";
  bool generate = false;
  std::size_t train_count = 60;
  std::size_t test_count = 40;
  std::size_t image_size = 64;
  std::string mode = "both";  // plain | regularized | both
  std::vector<std::size_t> widths{16, 32};
  double lambda = 0.5;
  double kappa = 0.25;
  double tau = 0.125;
  int iterations = 100;
  double post_tv_lambda = 0.5;
  std::size_t epochs = 30;
  std::size_t batch = 8;
  double learning_rate = 0.01;
  double tau_lambda = 1e-3;
  std::uint64_t seed = 1;
  std::string noise_train = "none";  // none | paper
  std::size_t noisy_subset = 20;
  std::string sweep = kDefaultSweep;
  bool svg = false;
  std::string inject_fault;  // gradcheck row to sabotage (test hook)

  /// Every violated constraint, one message each.
  std::vector<std::string> problems() const;
};

/// Writes images/labels/manifest for a generated dataset.
Dataset obtain_dataset(const ExperimentConfig& cfg);

struct TrainOutcome {
  std::string model;
  std::filesystem::path checkpoint;
  TrainLog log;
  double final_lambda = 0.0;
};

/// Trains the requested variants and writes <model>.ckpt and <model>_log.csv
/// into cfg.out.
std::vector<TrainOutcome> run_train(const ExperimentConfig& cfg);

/// Writes metrics.csv (and sweep.svg with cfg.svg) into cfg.out; returns the
/// rows in file order.
std::vector<MetricsRow> run_sweep(const ExperimentConfig& cfg);

/// Runs the gradient validation suite and writes gradcheck.csv into cfg.out.
std::vector<GradReport> run_gradcheck(const ExperimentConfig& cfg);

/// The validation suite itself: one-step, unrolled T in {1,3,5}, lambda
/// gradient and end-to-end network checks. `inject_fault` names a check
/// whose analytic gradient is deliberately scaled.
std::vector<GradReport> gradient_suite(std::uint64_t seed, const std::string& inject_fault = "");

std::string train_log_csv(const TrainLog& log);

/// Single-file SVG line chart of mIoU against gaussian sigma, one line per model.
std::string sweep_svg(const std::vector<MetricsRow>& rows);

}  // namespace tvseg
