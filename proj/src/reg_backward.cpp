#include "tvseg/reg_backward.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

#include "tvseg/grid_calculus.hpp"

namespace tvseg {

Field3 softmax_jvp(const ProbField& a, const Field3& g) {
  require_same_shape(a.shape(), g.shape(), "softmax_jvp");
  const std::size_t plane = a.shape().plane();
  const std::size_t channels = a.channels();
  Field3 out(a.shape());
  for (std::size_t p = 0; p < plane; ++p) {
    double sg = 0.0;
    for (std::size_t c = 0; c < channels; ++c) sg += a[c * plane + p] * g[c * plane + p];
    for (std::size_t c = 0; c < channels; ++c) {
      const std::size_t k = c * plane + p;
      out[k] = a[k] * (g[k] - sg);
    }
  }
  return out;
}

namespace {

// Transposed Jacobian of the unit-disc projection applied to `upstream`.
// Inside the disc and on its boundary the Jacobian is the identity; outside it
// is (I - y y^T/|y|^2)/|y|, which is symmetric.
DualField projection_vjp(const DualField& xi, const DualField& upstream) {
  DualField out = upstream;
  for (std::size_t k = 0; k < xi.size(); ++k) {
    const double y1 = xi.row(k);
    const double y2 = xi.col(k);
    const double n = std::hypot(y1, y2);
    if (n > 1.0) {
      const double g1 = upstream.row(k);
      const double g2 = upstream.col(k);
      const double along = (y1 * g1 + y2 * g2) / (n * n);
      out.row(k) = (g1 - along * y1) / n;
      out.col(k) = (g2 - along * y2) / n;
    }
  }
  return out;
}

void check_tape(const RegActTape& tape, const Field3& dA, RegMode expected, const char* who) {
  if (tape.config.mode != expected) {
    throw std::invalid_argument(std::string(who) + ": tape was produced in " +
                                to_string(tape.config.mode) + " mode");
  }
  require_same_shape(tape.logits.shape(), dA.shape(), who);
  if (tape.activations.empty() || tape.xi.empty()) {
    throw std::invalid_argument(std::string(who) + ": empty tape");
  }
}

// Gradient reaching A^{k-1} through xi^k = xi^{k-1} - step*grad(A^{k-1}):
// -step * grad^T(g_xi) = step * div(g_xi).
Field3 through_dual_step(const DualField& g_xi, double step) {
  Field3 g = grid::div(g_xi);
  g *= step;
  return g;
}

// Gradient reaching eta through z = o - lambda*div(eta):
// -lambda * div^T(g_z) = lambda * grad(g_z).
DualField through_shift(const Field3& g_z, double lambda) {
  DualField g = grid::grad(g_z);
  g *= lambda;
  return g;
}

}  // namespace

Field3 reg_softmax_onestep_backward(const RegActTape& tape, const Field3& dA) {
  check_tape(tape, dA, RegMode::one_step, "reg_softmax_onestep_backward");
  const RegActConfig& cfg = tape.config;
  // A = S(z), z = o - lambda*div(eta)
  const Field3 g_z = softmax_jvp(tape.activations.back(), dA);
  // eta = P(xi), xi = -kappa*grad(S(o))
  const DualField g_xi = projection_vjp(tape.xi.back(), through_shift(g_z, cfg.lambda));
  const Field3 g_s0 = through_dual_step(g_xi, cfg.kappa);
  return g_z + softmax_jvp(tape.initial, g_s0);
}

Field3 reg_softmax_unrolled_backward(const RegActTape& tape, const Field3& dA) {
  check_tape(tape, dA, RegMode::iterative, "reg_softmax_unrolled_backward");
  const RegActConfig& cfg = tape.config;
  const std::size_t steps = tape.activations.size() - 1;
  if (tape.xi.size() != steps + 1 || steps == 0) {
    throw std::invalid_argument("reg_softmax_unrolled_backward: tape history is inconsistent");
  }
  const double step = cfg.tau * cfg.lambda;

  Field3 g_o(dA.shape());
  Field3 g_a = dA;                // dL/dA^k
  DualField g_xi(dA.shape());     // dL/dxi^{k+1}, carried backwards
  for (std::size_t k = steps; k >= 1; --k) {
    const Field3 g_z = softmax_jvp(tape.activations[k], g_a);
    g_o += g_z;
    DualField g_xi_k = projection_vjp(tape.xi[k], through_shift(g_z, cfg.lambda));
    g_xi_k += g_xi;
    g_xi = std::move(g_xi_k);
    g_a = through_dual_step(g_xi, step);
  }
  g_o += softmax_jvp(tape.activations[0], g_a);
  return g_o;
}

double lambda_gradient(const RegActTape& tape, const Field3& dA) {
  check_tape(tape, dA, RegMode::one_step, "lambda_gradient");
  const Field3 g_z = softmax_jvp(tape.activations.back(), dA);
  // dz/dlambda = -div(eta)
  return -dot(g_z, grid::div(tape.eta));
}

double update_lambda(double lambda, double grad, double tau_lambda) {
  if (!(tau_lambda > 0.0)) throw std::invalid_argument("update_lambda: tau_lambda must be > 0");
  return std::max(0.0, lambda - tau_lambda * grad);
}

std::string grad_report_csv_header() {
  return "check,max_rel_error,max_abs_error,probes,non_finite,tolerance,pass";
}

std::string to_csv_row(const GradReport& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%s,%.6e,%.6e,%zu,%zu,%.1e,%s", r.name.c_str(),
                r.max_relative_error, r.max_absolute_error, r.probes, r.non_finite, r.tolerance,
                r.pass ? "pass" : "fail");
  return buf;
}

GradReport finite_diff_check(const std::function<double(const Field3&)>& forward,
                             const Field3& point, const Field3& analytic, double epsilon,
                             double tolerance, std::size_t sampled_probes, unsigned seed) {
  require_same_shape(point.shape(), analytic.shape(), "finite_diff_check");
  if (!(epsilon >= 1e-7 && epsilon <= 1e-3)) {
    throw std::invalid_argument("finite_diff_check: epsilon must lie in [1e-7, 1e-3]");
  }
  std::vector<std::size_t> coords(point.size());
  std::iota(coords.begin(), coords.end(), std::size_t{0});
  if (point.size() > 64 && sampled_probes < point.size()) {
    std::mt19937 rng(seed);
    for (std::size_t k = 0; k < sampled_probes; ++k) {
      std::uniform_int_distribution<std::size_t> pick(k, coords.size() - 1);
      std::swap(coords[k], coords[pick(rng)]);
    }
    coords.resize(sampled_probes);
    std::sort(coords.begin(), coords.end());
  }

  GradReport report;
  report.tolerance = tolerance;
  report.probes = coords.size();
  double scale = 0.0;
  Field3 x = point;
  for (std::size_t k : coords) {
    const double saved = x[k];
    x[k] = saved + epsilon;
    const double up = forward(x);
    x[k] = saved - epsilon;
    const double down = forward(x);
    x[k] = saved;
    const double numeric = (up - down) / (2.0 * epsilon);
    if (!std::isfinite(numeric)) {
      ++report.non_finite;
      continue;
    }
    scale = std::max(scale, std::abs(numeric));
    report.max_absolute_error = std::max(report.max_absolute_error, std::abs(numeric - analytic[k]));
  }
  if (report.max_absolute_error > 0.0) {
    report.max_relative_error =
        scale > 0.0 ? report.max_absolute_error / scale : std::numeric_limits<double>::infinity();
  }
  if (report.non_finite > 0) report.max_relative_error = std::numeric_limits<double>::infinity();
  report.pass = report.max_relative_error <= tolerance;
  return report;
}

}  // namespace tvseg
