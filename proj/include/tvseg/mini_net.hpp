#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "tvseg/field.hpp"
#include "tvseg/reg_activation.hpp"

namespace tvseg {

enum class FinalActivation { plain, regularized };

const char* to_string(FinalActivation a);

/// Architecture of the mini encoder-decoder.
///
/// `widths` holds one channel count per level. Each level is two 3x3
/// conv+ReLU blocks; levels are joined by 2x2 max-pooling on the way down and
/// nearest-neighbour upsampling plus skip concatenation on the way up. An
/// empty `widths` gives a single 1x1 convolution (per-pixel logistic
/// regression). Each input channel is standardized to zero mean and unit
/// variance over the image before the first convolution.
struct NetSpec {
  std::size_t in_channels = 3;
  std::size_t classes = 3;
  std::size_t height = 64;
  std::size_t width = 64;
  std::vector<std::size_t> widths{16, 32};
  FinalActivation activation = FinalActivation::plain;
  /// Final-layer regularization; lambda is trained, mode is forced to
  /// one_step during training and iterative at prediction time.
  RegActConfig reg{};

  void validate() const;
};

struct ConvParams {
  std::size_t out = 0;
  std::size_t in = 0;
  std::size_t kernel = 3;
  std::vector<double> weights;  // out x in x kernel x kernel
  std::vector<double> bias;     // out
  std::vector<double> weights_velocity;
  std::vector<double> bias_velocity;
};

struct ParamSet {
  std::vector<ConvParams> layers;
  double learning_rate = 0.01;
  double momentum = 0.9;

  std::size_t parameter_count() const;
};

struct ConvGrads {
  std::vector<double> weights;
  std::vector<double> bias;
};

struct Gradients {
  std::vector<ConvGrads> layers;
  double lambda = 0.0;

  /// Adds `other` into this; shapes must agree.
  Gradients& operator+=(const Gradients& other);
};

struct LayerTape {
  Shape input;
  std::vector<double> columns;  // im2col matrix, (in*k*k) x (height*width)
  Field3 output;                // post-ReLU output when `relu` is set
  bool relu = true;
};

/// Forward intermediates of one image, consumed by MiniNet::backward.
struct ForwardTape {
  std::uint64_t generation = 0;
  std::vector<LayerTape> convs;
  std::vector<std::vector<std::uint32_t>> pool_argmax;
  std::vector<Shape> pool_input_shapes;
  FinalActivation activation = FinalActivation::plain;
  RegActTape reg;
};

struct ForwardResult {
  Field3 logits;
  ProbField activation;
  ForwardTape tape;
};

class TrainingError : public std::runtime_error {
 public:
  TrainingError(const std::string& what, std::size_t iteration)
      : std::runtime_error(what), iteration_(iteration) {}
  std::size_t iteration() const { return iteration_; }

 private:
  std::size_t iteration_;
};

class MiniNet {
 public:
  /// He-style initialization (zero-mean normal, std sqrt(2/fan_in)), zero
  /// biases. Deterministic for a fixed seed.
  static MiniNet build(const NetSpec& spec, std::uint64_t seed);

  const NetSpec& spec() const { return spec_; }
  const ParamSet& params() const { return params_; }
  ParamSet& params() { return params_; }
  double lambda() const { return spec_.reg.lambda; }
  void set_lambda(double lambda);
  void set_activation(FinalActivation a) { spec_.activation = a; }
  std::uint64_t generation() const { return generation_; }

  /// Training-mode forward: the regularized activation runs one dual iteration.
  ForwardResult forward(const Field3& image) const;

  /// Parameter gradients (and dL/dlambda in regularized mode) for dL/dA.
  Gradients backward(const ForwardTape& tape, const Field3& dA) const;

  /// Momentum SGD on all parameters plus the clamped lambda update, in one step.
  /// tau_lambda = 0 keeps lambda fixed.
  void sgd_momentum_step(const Gradients& grads, double tau_lambda);

  Field3 logits(const Field3& image) const;

  void save(const std::filesystem::path& path) const;
  static MiniNet load(const std::filesystem::path& path);

  friend bool operator==(const MiniNet& a, const MiniNet& b);

 private:
  MiniNet(NetSpec spec, ParamSet params) : spec_(std::move(spec)), params_(std::move(params)) {}

  Field3 run_convs(const Field3& image, ForwardTape* tape) const;

  NetSpec spec_;
  ParamSet params_;
  std::uint64_t generation_ = 0;
};

struct CrossEntropy {
  double loss = 0.0;
  Field3 grad;
};

/// -(1/normalizer) * sum over pixels of log A[target]; grad is dloss/dA.
/// A normalizer of 0 means "pixels in this image".
CrossEntropy cross_entropy(const ProbField& a, const LabelMap& target, double normalizer = 0.0);

struct LabeledImage {
  Field3 image;
  LabelMap label;
};

struct TrainOptions {
  std::size_t epochs = 30;
  std::size_t batch_size = 8;
  std::uint64_t seed = 1;
  double tau_lambda = 1e-3;  // 0 freezes lambda
};

struct TrainLog {
  std::vector<double> losses;          // one per iteration
  std::vector<double> lambdas;         // lambda after each iteration
  std::vector<double> epoch_lambdas;   // lambda after each epoch
  std::size_t iterations = 0;
  std::uint64_t seed = 0;

  friend bool operator==(const TrainLog&, const TrainLog&) = default;
};

TrainLog train(MiniNet& net, const std::vector<LabeledImage>& data, const TrainOptions& options);

struct Prediction {
  ProbField probabilities;
  LabelMap labels;
};

/// Regularized networks run `test_iterations` dual iterations with the trained
/// lambda; plain networks use softmax.
Prediction predict(const MiniNet& net, const Field3& image, int test_iterations = 100);

}  // namespace tvseg
