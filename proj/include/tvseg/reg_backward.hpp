#pragma once

#include <cstddef>
#include <functional>
#include <string>

#include "tvseg/field.hpp"
#include "tvseg/reg_activation.hpp"

namespace tvseg {

/// Applies the per-pixel softmax Jacobian (diag(s) - s s^T) at probabilities
/// `a` to `g`. The Jacobian is symmetric, so this is both the JVP and the VJP.
Field3 softmax_jvp(const ProbField& a, const Field3& g);

/// dL/do for the one-step regularized softmax, including the path through eta.
Field3 reg_softmax_onestep_backward(const RegActTape& tape, const Field3& dA);

/// dL/do by exact reverse-mode over the executed T-iteration graph.
Field3 reg_softmax_unrolled_backward(const RegActTape& tape, const Field3& dA);

/// dL/dlambda for a one-step tape, where eta does not depend on lambda.
double lambda_gradient(const RegActTape& tape, const Field3& dA);

/// lambda <- max(0, lambda - tau_lambda*grad).
double update_lambda(double lambda, double grad, double tau_lambda);

struct GradReport {
  std::string name;
  double max_relative_error = 0.0;
  double max_absolute_error = 0.0;
  std::size_t probes = 0;
  std::size_t non_finite = 0;
  double tolerance = 0.0;
  bool pass = false;
};

/// Header and row for the gradcheck CSV.
std::string grad_report_csv_header();
std::string to_csv_row(const GradReport& r);

/// Central-difference check of `analytic` against `forward` at `point`.
///
/// Every coordinate is probed when the field has at most 64 entries;
/// otherwise `sampled_probes` coordinates are drawn with `seed`. The relative
/// error is max|analytic - numeric| / max|numeric| over the probed set.
GradReport finite_diff_check(const std::function<double(const Field3&)>& forward,
                             const Field3& point, const Field3& analytic, double epsilon,
                             double tolerance, std::size_t sampled_probes = 200,
                             unsigned seed = 0);

}  // namespace tvseg
