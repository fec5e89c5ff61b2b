#include "tvseg/reg_activation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "tvseg/grid_calculus.hpp"

namespace tvseg {

const char* to_string(RegMode mode) {
  return mode == RegMode::one_step ? "one_step" : "iterative";
}

void RegActConfig::validate() const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw std::invalid_argument("lambda must be finite and >= 0, got " + std::to_string(lambda));
  }
  if (!(kappa > 0.0) || !std::isfinite(kappa)) {
    throw std::invalid_argument("kappa must be finite and > 0, got " + std::to_string(kappa));
  }
  if (!(tau > 0.0) || tau > 0.125) {
    throw std::invalid_argument("tau must lie in (0, 1/8], got " + std::to_string(tau));
  }
  if (iterations < 1) {
    throw std::invalid_argument("iterations must be >= 1, got " + std::to_string(iterations));
  }
}

ProbField softmax(const Field3& o) {
  const Shape s = o.shape();
  const std::size_t plane = s.plane();
  ProbField a(s);
  for (std::size_t p = 0; p < plane; ++p) {
    double m = o[p];
    for (std::size_t c = 1; c < s.channels; ++c) m = std::max(m, o[c * plane + p]);
    double sum = 0.0;
    for (std::size_t c = 0; c < s.channels; ++c) {
      const double e = std::exp(o[c * plane + p] - m);
      a[c * plane + p] = e;
      sum += e;
    }
    const double inv = 1.0 / sum;
    for (std::size_t c = 0; c < s.channels; ++c) a[c * plane + p] *= inv;
  }
  return a;
}

Field3 relu(const Field3& o) {
  Field3 a = o;
  for (double& v : a.values()) v = std::max(0.0, v);
  return a;
}

namespace {

// o - lambda*div(eta)
Field3 shifted_logits(const Field3& o, double lambda, const DualField& eta) {
  Field3 z = grid::div(eta);
  for (std::size_t k = 0; k < z.size(); ++k) z[k] = o[k] - lambda * z[k];
  return z;
}

// xi -= step*grad(a)
void dual_step(DualField& xi, double step, const Field3& a) {
  const DualField g = grid::grad(a);
  for (std::size_t k = 0; k < xi.size(); ++k) {
    xi.row(k) -= step * g.row(k);
    xi.col(k) -= step * g.col(k);
  }
}

void require_mode(const RegActConfig& cfg, RegMode expected, const char* who) {
  cfg.validate();
  if (cfg.mode != expected) {
    throw std::invalid_argument(std::string(who) + " requires mode " + to_string(expected));
  }
}

}  // namespace

RegSoftmaxResult reg_softmax_iterative(const Field3& o, const RegActConfig& cfg) {
  require_mode(cfg, RegMode::iterative, "reg_softmax_iterative");
  RegActTape tape;
  tape.config = cfg;
  tape.logits = o;
  tape.initial = softmax(o);
  tape.activations.reserve(static_cast<std::size_t>(cfg.iterations) + 1);
  tape.xi.reserve(static_cast<std::size_t>(cfg.iterations) + 1);
  tape.activations.push_back(tape.initial);
  tape.xi.emplace_back(o.shape());

  const double step = cfg.tau * cfg.lambda;
  DualField eta(o.shape());
  for (int t = 0; t < cfg.iterations; ++t) {
    DualField xi = tape.xi.back();
    dual_step(xi, step, tape.activations.back());
    eta = grid::project_unit_disc(xi);
    tape.xi.push_back(std::move(xi));
    tape.activations.push_back(softmax(shifted_logits(o, cfg.lambda, eta)));
  }
  const auto n = tape.activations.size();
  tape.residual = max_abs_diff(tape.activations[n - 1], tape.activations[n - 2]);
  tape.eta = eta;
  RegSoftmaxResult out{tape.activations.back(), eta, {}};
  out.tape = std::move(tape);
  return out;
}

RegSoftmaxResult reg_softmax_onestep(const Field3& o, const RegActConfig& cfg) {
  require_mode(cfg, RegMode::one_step, "reg_softmax_onestep");
  RegActTape tape;
  tape.config = cfg;
  tape.logits = o;
  tape.initial = softmax(o);

  DualField xi(o.shape());
  dual_step(xi, cfg.kappa, tape.initial);
  DualField eta = grid::project_unit_disc(xi);
  ProbField a = softmax(shifted_logits(o, cfg.lambda, eta));

  tape.xi.push_back(std::move(xi));
  tape.activations.push_back(a);
  tape.eta = eta;
  RegSoftmaxResult out{std::move(a), std::move(eta), {}};
  out.tape = std::move(tape);
  return out;
}

RegReluResult reg_relu_iterative(const Field3& o, const RegActConfig& cfg) {
  require_mode(cfg, RegMode::iterative, "reg_relu_iterative");
  Field3 a = relu(o);
  DualField xi(o.shape());
  DualField eta(o.shape());
  const double step = cfg.tau * cfg.lambda;
  double residual = 0.0;
  for (int t = 0; t < cfg.iterations; ++t) {
    dual_step(xi, step, a);
    eta = grid::project_unit_disc(xi);
    Field3 next = relu(shifted_logits(o, cfg.lambda, eta));
    residual = max_abs_diff(next, a);
    a = std::move(next);
  }
  return {std::move(a), std::move(eta), residual};
}

ProbField post_tv(const Field3& o, double lambda, int iterations, double tau) {
  RegActConfig cfg;
  cfg.lambda = lambda;
  cfg.tau = tau;
  cfg.iterations = iterations;
  cfg.mode = RegMode::iterative;
  cfg.validate();
  // Same iteration as reg_softmax_iterative without keeping the history.
  ProbField a = softmax(o);
  DualField xi(o.shape());
  for (int t = 0; t < iterations; ++t) {
    dual_step(xi, tau * lambda, a);
    a = softmax(shifted_logits(o, lambda, grid::project_unit_disc(xi)));
  }
  return a;
}

}  // namespace tvseg
