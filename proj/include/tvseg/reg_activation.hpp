#pragma once

#include <vector>

#include "tvseg/field.hpp"

namespace tvseg {

/// Per-pixel probability vectors over channels. Produced by softmax and the
/// regularized softmax variants; entries lie in [0,1] and sum to one per pixel.
using ProbField = Field3;

enum class RegMode { one_step, iterative };

const char* to_string(RegMode mode);

struct RegActConfig {
  double lambda = 0.5;   // trainable regularization weight
  double kappa = 0.25;   // fixed scaled dual step used by the one-step scheme
  double tau = 0.125;    // dual step of the iterative scheme
  int iterations = 100;  // dual iterations in iterative mode
  RegMode mode = RegMode::iterative;

  /// Throws std::invalid_argument listing the first violated constraint.
  void validate() const;
};

/// Saved forward state for the regularized softmax backward passes.
struct RegActTape {
  RegActConfig config;
  Field3 logits;

  /// softmax(logits); A^0 of the iteration.
  ProbField initial;
  /// One-step mode: single-entry vectors. Iterative mode: entry k holds
  /// A^k for k = 0..T and xi^k for k = 1..T (xi[0] is the zero start).
  std::vector<ProbField> activations;
  std::vector<DualField> xi;
  /// Final projected dual eta^T.
  DualField eta;
  /// max |A^T - A^{T-1}| of the last iteration (0 for one-step).
  double residual = 0.0;
};

ProbField softmax(const Field3& o);

Field3 relu(const Field3& o);

struct RegSoftmaxResult {
  ProbField activation;
  DualField eta;
  RegActTape tape;
};

/// Runs cfg.iterations dual iterations starting from A^0 = softmax(o), xi^0 = 0:
///   xi^{t+1} = xi^t - tau*lambda*grad(A^t)
///   eta^{t+1} = P(xi^{t+1})
///   A^{t+1}  = softmax(o - lambda*div(eta^{t+1}))
/// The tape keeps the full history for the unrolled backward pass.
RegSoftmaxResult reg_softmax_iterative(const Field3& o, const RegActConfig& cfg);

/// Training-time single iteration from zero duals:
///   xi = -kappa*grad(softmax(o)), eta = P(xi), A = softmax(o - lambda*div(eta)).
/// kappa is independent of lambda.
RegSoftmaxResult reg_softmax_onestep(const Field3& o, const RegActConfig& cfg);

struct RegReluResult {
  Field3 activation;
  DualField eta;
  double residual = 0.0;
};

/// Nonnegative ROF iteration; A^{t+1} = max(0, o - lambda*div(eta^{t+1})).
RegReluResult reg_relu_iterative(const Field3& o, const RegActConfig& cfg);

/// Test-time TV post-processing of plain-network logits.
ProbField post_tv(const Field3& o, double lambda, int iterations = 100, double tau = 0.125);

}  // namespace tvseg
