#include "tvseg/mini_net.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <random>

#include "tvseg/reg_backward.hpp"

namespace tvseg {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMat>;
using MutMap = Eigen::Map<RowMat>;

std::size_t level_count(const NetSpec& s) { return s.widths.size(); }

std::size_t final_layer_index(const NetSpec& s) {
  const std::size_t levels = level_count(s);
  return levels == 0 ? 0 : 4 * levels - 2;
}

// im2col for a square kernel with "same" zero padding and stride 1.
std::vector<double> im2col(const Field3& x, std::size_t kernel) {
  const std::size_t h = x.height(), w = x.width(), plane = h * w;
  if (kernel == 1) return {x.values().begin(), x.values().end()};
  const std::size_t kk = kernel * kernel;
  const auto pad = static_cast<std::ptrdiff_t>(kernel / 2);
  std::vector<double> col(x.channels() * kk * plane, 0.0);
  for (std::size_t c = 0; c < x.channels(); ++c) {
    const double* src = x.values().data() + c * plane;
    for (std::size_t di = 0; di < kernel; ++di) {
      for (std::size_t dj = 0; dj < kernel; ++dj) {
        double* row = col.data() + ((c * kk) + di * kernel + dj) * plane;
        const std::ptrdiff_t oi = static_cast<std::ptrdiff_t>(di) - pad;
        const std::ptrdiff_t oj = static_cast<std::ptrdiff_t>(dj) - pad;
        for (std::size_t i = 0; i < h; ++i) {
          const std::ptrdiff_t si = static_cast<std::ptrdiff_t>(i) + oi;
          if (si < 0 || si >= static_cast<std::ptrdiff_t>(h)) continue;
          const std::size_t j0 = oj < 0 ? static_cast<std::size_t>(-oj) : 0;
          const std::size_t j1 = oj > 0 ? w - static_cast<std::size_t>(oj) : w;
          for (std::size_t j = j0; j < j1; ++j) {
            row[i * w + j] = src[static_cast<std::size_t>(si) * w + j + oj];
          }
        }
      }
    }
  }
  return col;
}

void col2im_add(const std::vector<double>& col, std::size_t kernel, Field3& dx) {
  const std::size_t h = dx.height(), w = dx.width(), plane = h * w;
  if (kernel == 1) {
    for (std::size_t k = 0; k < dx.size(); ++k) dx[k] += col[k];
    return;
  }
  const std::size_t kk = kernel * kernel;
  const auto pad = static_cast<std::ptrdiff_t>(kernel / 2);
  for (std::size_t c = 0; c < dx.channels(); ++c) {
    double* dst = dx.values().data() + c * plane;
    for (std::size_t di = 0; di < kernel; ++di) {
      for (std::size_t dj = 0; dj < kernel; ++dj) {
        const double* row = col.data() + ((c * kk) + di * kernel + dj) * plane;
        const std::ptrdiff_t oi = static_cast<std::ptrdiff_t>(di) - pad;
        const std::ptrdiff_t oj = static_cast<std::ptrdiff_t>(dj) - pad;
        for (std::size_t i = 0; i < h; ++i) {
          const std::ptrdiff_t si = static_cast<std::ptrdiff_t>(i) + oi;
          if (si < 0 || si >= static_cast<std::ptrdiff_t>(h)) continue;
          const std::size_t j0 = oj < 0 ? static_cast<std::size_t>(-oj) : 0;
          const std::size_t j1 = oj > 0 ? w - static_cast<std::size_t>(oj) : w;
          for (std::size_t j = j0; j < j1; ++j) {
            dst[static_cast<std::size_t>(si) * w + j + oj] += row[i * w + j];
          }
        }
      }
    }
  }
}

Field3 conv_forward(const ConvParams& p, const Field3& x, bool relu, LayerTape* tape) {
  if (x.channels() != p.in) {
    throw std::invalid_argument("conv: expected " + std::to_string(p.in) + " input channels, got " +
                                std::to_string(x.channels()));
  }
  const std::size_t plane = x.shape().plane();
  const std::size_t k = p.in * p.kernel * p.kernel;
  std::vector<double> col = im2col(x, p.kernel);
  Field3 out(Shape{p.out, x.height(), x.width()});
  MutMap y(out.values().data(), static_cast<Eigen::Index>(p.out), static_cast<Eigen::Index>(plane));
  y.noalias() = ConstMap(p.weights.data(), static_cast<Eigen::Index>(p.out),
                         static_cast<Eigen::Index>(k)) *
                ConstMap(col.data(), static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(plane));
  for (std::size_t o = 0; o < p.out; ++o) {
    double* row = out.values().data() + o * plane;
    for (std::size_t q = 0; q < plane; ++q) {
      row[q] += p.bias[o];
      if (relu && row[q] < 0.0) row[q] = 0.0;
    }
  }
  if (tape) {
    tape->input = x.shape();
    tape->columns = std::move(col);
    tape->output = out;
    tape->relu = relu;
  }
  return out;
}

// Accumulates weight/bias gradients and returns the input gradient.
Field3 conv_backward(const ConvParams& p, const LayerTape& tape, Field3 g_out, ConvGrads& grads) {
  const std::size_t plane = tape.input.plane();
  const std::size_t k = p.in * p.kernel * p.kernel;
  if (tape.relu) {
    for (std::size_t q = 0; q < g_out.size(); ++q) {
      if (tape.output[q] <= 0.0) g_out[q] = 0.0;
    }
  }
  const auto rows = static_cast<Eigen::Index>(p.out);
  const auto cols = static_cast<Eigen::Index>(plane);
  const auto kdim = static_cast<Eigen::Index>(k);
  ConstMap g(g_out.values().data(), rows, cols);
  ConstMap col(tape.columns.data(), kdim, cols);
  MutMap(grads.weights.data(), rows, kdim).noalias() += g * col.transpose();
  for (std::size_t o = 0; o < p.out; ++o) {
    const double* row = g_out.values().data() + o * plane;
    grads.bias[o] += std::accumulate(row, row + plane, 0.0);
  }
  std::vector<double> g_col(k * plane);
  MutMap(g_col.data(), kdim, cols).noalias() = ConstMap(p.weights.data(), rows, kdim).transpose() * g;
  Field3 g_in(tape.input);
  col2im_add(g_col, p.kernel, g_in);
  return g_in;
}

Field3 max_pool(const Field3& x, std::vector<std::uint32_t>& argmax_out) {
  const std::size_t h = x.height() / 2, w = x.width() / 2;
  Field3 out(Shape{x.channels(), h, w});
  argmax_out.assign(out.size(), 0);
  for (std::size_t c = 0; c < x.channels(); ++c) {
    for (std::size_t i = 0; i < h; ++i) {
      for (std::size_t j = 0; j < w; ++j) {
        std::size_t best = (c * x.height() + 2 * i) * x.width() + 2 * j;
        for (std::size_t di = 0; di < 2; ++di) {
          for (std::size_t dj = 0; dj < 2; ++dj) {
            const std::size_t idx = (c * x.height() + 2 * i + di) * x.width() + 2 * j + dj;
            if (x[idx] > x[best]) best = idx;
          }
        }
        const std::size_t o = (c * h + i) * w + j;
        out[o] = x[best];
        argmax_out[o] = static_cast<std::uint32_t>(best);
      }
    }
  }
  return out;
}

Field3 max_pool_backward(const Field3& g, const std::vector<std::uint32_t>& argmax_idx,
                         const Shape& input) {
  Field3 out(input);
  for (std::size_t o = 0; o < g.size(); ++o) out[argmax_idx[o]] += g[o];
  return out;
}

Field3 upsample2(const Field3& x) {
  const std::size_t h = x.height() * 2, w = x.width() * 2;
  Field3 out(Shape{x.channels(), h, w});
  for (std::size_t c = 0; c < x.channels(); ++c) {
    for (std::size_t i = 0; i < h; ++i) {
      for (std::size_t j = 0; j < w; ++j) out(c, i, j) = x(c, i / 2, j / 2);
    }
  }
  return out;
}

Field3 upsample2_backward(const Field3& g) {
  Field3 out(Shape{g.channels(), g.height() / 2, g.width() / 2});
  for (std::size_t c = 0; c < g.channels(); ++c) {
    for (std::size_t i = 0; i < g.height(); ++i) {
      for (std::size_t j = 0; j < g.width(); ++j) out(c, i / 2, j / 2) += g(c, i, j);
    }
  }
  return out;
}

Field3 concat(const Field3& a, const Field3& b) {
  std::vector<double> v;
  v.reserve(a.size() + b.size());
  v.insert(v.end(), a.values().begin(), a.values().end());
  v.insert(v.end(), b.values().begin(), b.values().end());
  return Field3(Shape{a.channels() + b.channels(), a.height(), a.width()}, std::move(v));
}

std::pair<Field3, Field3> split_channels(const Field3& g, std::size_t first) {
  const std::size_t plane = g.shape().plane();
  std::vector<double> va(g.values().begin(), g.values().begin() + first * plane);
  std::vector<double> vb(g.values().begin() + first * plane, g.values().end());
  return {Field3(Shape{first, g.height(), g.width()}, std::move(va)),
          Field3(Shape{g.channels() - first, g.height(), g.width()}, std::move(vb))};
}

ConvParams make_conv(std::size_t out, std::size_t in, std::size_t kernel, std::mt19937_64& rng) {
  ConvParams p;
  p.out = out;
  p.in = in;
  p.kernel = kernel;
  const std::size_t n = out * in * kernel * kernel;
  std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / static_cast<double>(in * kernel * kernel)));
  p.weights.resize(n);
  for (double& v : p.weights) v = dist(rng);
  p.bias.assign(out, 0.0);
  p.weights_velocity.assign(n, 0.0);
  p.bias_velocity.assign(out, 0.0);
  return p;
}

// Zero mean, unit variance per channel; the floor keeps flat channels bounded.
constexpr double kStandardizeFloor = 1e-3;

Field3 standardize(const Field3& image) {
  Field3 x = image;
  const double n = static_cast<double>(x.shape().plane());
  for (std::size_t c = 0; c < x.channels(); ++c) {
    auto ch = x.channel(c);
    double mean = 0.0;
    for (double v : ch) mean += v;
    mean /= n;
    double var = 0.0;
    for (double v : ch) var += (v - mean) * (v - mean);
    const double scale = 1.0 / std::sqrt(var / n + kStandardizeFloor);
    for (double& v : ch) v = (v - mean) * scale;
  }
  return x;
}

Gradients zero_gradients(const ParamSet& params) {
  Gradients g;
  g.layers.reserve(params.layers.size());
  for (const ConvParams& p : params.layers) {
    g.layers.push_back({std::vector<double>(p.weights.size(), 0.0), std::vector<double>(p.bias.size(), 0.0)});
  }
  return g;
}

RegActConfig one_step_config(const NetSpec& spec) {
  RegActConfig cfg = spec.reg;
  cfg.mode = RegMode::one_step;
  return cfg;
}

}  // namespace

const char* to_string(FinalActivation a) {
  return a == FinalActivation::plain ? "plain" : "regularized";
}

void NetSpec::validate() const {
  if (in_channels == 0) throw std::invalid_argument("NetSpec: in_channels must be positive");
  if (classes < 2) throw std::invalid_argument("NetSpec: classes must be >= 2");
  if (classes > 255) throw std::invalid_argument("NetSpec: classes must fit a label byte");
  if (height == 0 || width == 0) throw std::invalid_argument("NetSpec: empty input size");
  for (std::size_t w : widths) {
    if (w == 0) throw std::invalid_argument("NetSpec: level widths must be positive");
  }
  if (!widths.empty()) {
    const std::size_t factor = std::size_t{1} << (widths.size() - 1);
    if (height % factor != 0 || width % factor != 0) {
      throw std::invalid_argument("NetSpec: input " + std::to_string(height) + "x" +
                                  std::to_string(width) + " is not divisible by the pooling factor " +
                                  std::to_string(factor));
    }
  }
  reg.validate();
}

std::size_t ParamSet::parameter_count() const {
  std::size_t n = 0;
  for (const ConvParams& p : layers) n += p.weights.size() + p.bias.size();
  return n;
}

Gradients& Gradients::operator+=(const Gradients& other) {
  if (layers.size() != other.layers.size()) throw std::invalid_argument("Gradients: layer count mismatch");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    auto& a = layers[l];
    const auto& b = other.layers[l];
    if (a.weights.size() != b.weights.size() || a.bias.size() != b.bias.size()) {
      throw std::invalid_argument("Gradients: layer shape mismatch");
    }
    for (std::size_t k = 0; k < a.weights.size(); ++k) a.weights[k] += b.weights[k];
    for (std::size_t k = 0; k < a.bias.size(); ++k) a.bias[k] += b.bias[k];
  }
  lambda += other.lambda;
  return *this;
}

MiniNet MiniNet::build(const NetSpec& spec, std::uint64_t seed) {
  spec.validate();
  std::mt19937_64 rng(seed);
  ParamSet params;
  const std::size_t levels = level_count(spec);
  if (levels == 0) {
    params.layers.push_back(make_conv(spec.classes, spec.in_channels, 1, rng));
    return MiniNet(spec, std::move(params));
  }
  std::size_t in = spec.in_channels;
  for (std::size_t l = 0; l < levels; ++l) {
    params.layers.push_back(make_conv(spec.widths[l], in, 3, rng));
    params.layers.push_back(make_conv(spec.widths[l], spec.widths[l], 3, rng));
    in = spec.widths[l];
  }
  for (std::size_t l = levels - 1; l-- > 0;) {
    params.layers.push_back(make_conv(spec.widths[l], spec.widths[l + 1] + spec.widths[l], 3, rng));
    params.layers.push_back(make_conv(spec.widths[l], spec.widths[l], 3, rng));
  }
  params.layers.push_back(make_conv(spec.classes, spec.widths[0], 1, rng));
  return MiniNet(spec, std::move(params));
}

void MiniNet::set_lambda(double lambda) {
  RegActConfig cfg = spec_.reg;
  cfg.lambda = lambda;
  cfg.validate();
  spec_.reg = cfg;
}

Field3 MiniNet::run_convs(const Field3& image, ForwardTape* tape) const {
  const Shape expected{spec_.in_channels, spec_.height, spec_.width};
  require_same_shape(expected, image.shape(), "MiniNet::forward");
  const auto& layers = params_.layers;
  const std::size_t levels = level_count(spec_);
  if (tape) {
    tape->convs.assign(layers.size(), LayerTape{});
    tape->pool_argmax.assign(levels > 0 ? levels - 1 : 0, {});
    tape->pool_input_shapes.assign(levels > 0 ? levels - 1 : 0, Shape{});
  }
  auto layer_tape = [&](std::size_t idx) { return tape ? &tape->convs[idx] : nullptr; };

  Field3 x = standardize(image);
  std::vector<Field3> skips;
  std::size_t li = 0;
  for (std::size_t l = 0; l < levels; ++l) {
    x = conv_forward(layers[li], x, true, layer_tape(li));
    ++li;
    x = conv_forward(layers[li], x, true, layer_tape(li));
    ++li;
    if (l + 1 < levels) {
      skips.push_back(x);
      std::vector<std::uint32_t> idx;
      if (tape) tape->pool_input_shapes[l] = x.shape();
      x = max_pool(x, idx);
      if (tape) tape->pool_argmax[l] = std::move(idx);
    }
  }
  for (std::size_t l = levels - 1; levels > 0 && l-- > 0;) {
    x = concat(upsample2(x), skips[l]);
    x = conv_forward(layers[li], x, true, layer_tape(li));
    ++li;
    x = conv_forward(layers[li], x, true, layer_tape(li));
    ++li;
  }
  return conv_forward(layers[li], x, false, layer_tape(li));
}

Field3 MiniNet::logits(const Field3& image) const { return run_convs(image, nullptr); }

ForwardResult MiniNet::forward(const Field3& image) const {
  ForwardResult r;
  r.tape.generation = generation_;
  r.tape.activation = spec_.activation;
  r.logits = run_convs(image, &r.tape);
  if (spec_.activation == FinalActivation::plain) {
    r.activation = softmax(r.logits);
  } else {
    RegSoftmaxResult reg = reg_softmax_onestep(r.logits, one_step_config(spec_));
    r.activation = std::move(reg.activation);
    r.tape.reg = std::move(reg.tape);
  }
  return r;
}

Gradients MiniNet::backward(const ForwardTape& tape, const Field3& dA) const {
  if (tape.generation != generation_ || tape.convs.size() != params_.layers.size()) {
    throw std::logic_error("MiniNet::backward: tape is stale (parameters changed since forward)");
  }
  if (tape.activation != spec_.activation) {
    throw std::logic_error("MiniNet::backward: tape activation does not match the network");
  }
  const auto& layers = params_.layers;
  Gradients grads = zero_gradients(params_);

  Field3 g;
  if (spec_.activation == FinalActivation::plain) {
    require_same_shape(tape.convs.back().output.shape(), dA.shape(), "MiniNet::backward");
    g = softmax_jvp(softmax(tape.convs.back().output), dA);
  } else {
    g = reg_softmax_onestep_backward(tape.reg, dA);
    grads.lambda = lambda_gradient(tape.reg, dA);
  }

  const std::size_t levels = level_count(spec_);
  std::size_t li = final_layer_index(spec_);
  g = conv_backward(layers[li], tape.convs[li], std::move(g), grads.layers[li]);
  if (levels == 0) return grads;

  std::vector<Field3> skip_grads(levels - 1);
  for (std::size_t l = 0; l + 1 < levels; ++l) {
    --li;
    g = conv_backward(layers[li], tape.convs[li], std::move(g), grads.layers[li]);
    --li;
    g = conv_backward(layers[li], tape.convs[li], std::move(g), grads.layers[li]);
    auto [g_up, g_skip] = split_channels(g, spec_.widths[l + 1]);
    skip_grads[l] = std::move(g_skip);
    g = upsample2_backward(g_up);
  }
  for (std::size_t l = levels; l-- > 0;) {
    if (l + 1 < levels) {
      g = max_pool_backward(g, tape.pool_argmax[l], tape.pool_input_shapes[l]);
      g += skip_grads[l];
    }
    --li;
    g = conv_backward(layers[li], tape.convs[li], std::move(g), grads.layers[li]);
    --li;
    g = conv_backward(layers[li], tape.convs[li], std::move(g), grads.layers[li]);
  }
  return grads;
}

void MiniNet::sgd_momentum_step(const Gradients& grads, double tau_lambda) {
  if (grads.layers.size() != params_.layers.size()) {
    throw std::invalid_argument("sgd_momentum_step: gradient layer count mismatch");
  }
  const double mu = params_.momentum;
  const double lr = params_.learning_rate;
  for (std::size_t l = 0; l < params_.layers.size(); ++l) {
    ConvParams& p = params_.layers[l];
    const ConvGrads& g = grads.layers[l];
    if (g.weights.size() != p.weights.size() || g.bias.size() != p.bias.size()) {
      throw std::invalid_argument("sgd_momentum_step: gradient shape mismatch");
    }
    for (std::size_t k = 0; k < p.weights.size(); ++k) {
      p.weights_velocity[k] = mu * p.weights_velocity[k] + g.weights[k];
      p.weights[k] -= lr * p.weights_velocity[k];
    }
    for (std::size_t k = 0; k < p.bias.size(); ++k) {
      p.bias_velocity[k] = mu * p.bias_velocity[k] + g.bias[k];
      p.bias[k] -= lr * p.bias_velocity[k];
    }
  }
  if (spec_.activation == FinalActivation::regularized && tau_lambda > 0.0) {
    spec_.reg.lambda = update_lambda(spec_.reg.lambda, grads.lambda, tau_lambda);
  }
  ++generation_;
}

bool operator==(const MiniNet& a, const MiniNet& b) {
  if (a.params_.layers.size() != b.params_.layers.size()) return false;
  if (a.spec_.reg.lambda != b.spec_.reg.lambda) return false;
  for (std::size_t l = 0; l < a.params_.layers.size(); ++l) {
    if (a.params_.layers[l].weights != b.params_.layers[l].weights) return false;
    if (a.params_.layers[l].bias != b.params_.layers[l].bias) return false;
  }
  return true;
}

// Checkpoint layout (all little-endian):
//   "TVSEGNET" | u32 version | u64 in_channels, classes, height, width, levels,
//   widths[levels] | u64 activation | f64 lambda, kappa, tau | u64 iterations |
//   f64 learning_rate, momentum | u64 parameter count | f64 parameters
//   (per layer: weights then bias, in declaration order)
namespace {

constexpr char kMagic[8] = {'T', 'V', 'S', 'E', 'G', 'N', 'E', 'T'};
constexpr std::uint32_t kVersion = 1;

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

template <class T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
T get(std::istream& is) {
  T v{};
  if (!is.read(reinterpret_cast<char*>(&v), sizeof v)) {
    throw std::runtime_error("checkpoint: truncated file");
  }
  return v;
}

}  // namespace

void MiniNet::save(const std::filesystem::path& path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write checkpoint " + path.string());
  os.write(kMagic, sizeof kMagic);
  put<std::uint32_t>(os, kVersion);
  put<std::uint64_t>(os, spec_.in_channels);
  put<std::uint64_t>(os, spec_.classes);
  put<std::uint64_t>(os, spec_.height);
  put<std::uint64_t>(os, spec_.width);
  put<std::uint64_t>(os, spec_.widths.size());
  for (std::size_t w : spec_.widths) put<std::uint64_t>(os, w);
  put<std::uint64_t>(os, spec_.activation == FinalActivation::plain ? 0 : 1);
  put<double>(os, spec_.reg.lambda);
  put<double>(os, spec_.reg.kappa);
  put<double>(os, spec_.reg.tau);
  put<std::uint64_t>(os, static_cast<std::uint64_t>(spec_.reg.iterations));
  put<double>(os, params_.learning_rate);
  put<double>(os, params_.momentum);
  put<std::uint64_t>(os, params_.parameter_count());
  for (const ConvParams& p : params_.layers) {
    os.write(reinterpret_cast<const char*>(p.weights.data()),
             static_cast<std::streamsize>(p.weights.size() * sizeof(double)));
    os.write(reinterpret_cast<const char*>(p.bias.data()),
             static_cast<std::streamsize>(p.bias.size() * sizeof(double)));
  }
  if (!os) throw std::runtime_error("failed writing checkpoint " + path.string());
}

MiniNet MiniNet::load(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open checkpoint " + path.string());
  char magic[8];
  if (!is.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof magic) != 0) {
    throw std::runtime_error("checkpoint: bad magic in " + path.string());
  }
  const auto version = get<std::uint32_t>(is);
  if (version != kVersion) {
    throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version));
  }
  NetSpec spec;
  spec.in_channels = get<std::uint64_t>(is);
  spec.classes = get<std::uint64_t>(is);
  spec.height = get<std::uint64_t>(is);
  spec.width = get<std::uint64_t>(is);
  const auto levels = get<std::uint64_t>(is);
  if (levels > 16) throw std::runtime_error("checkpoint: implausible level count");
  spec.widths.resize(levels);
  for (auto& w : spec.widths) w = get<std::uint64_t>(is);
  spec.activation = get<std::uint64_t>(is) == 0 ? FinalActivation::plain : FinalActivation::regularized;
  spec.reg.lambda = get<double>(is);
  spec.reg.kappa = get<double>(is);
  spec.reg.tau = get<double>(is);
  spec.reg.iterations = static_cast<int>(get<std::uint64_t>(is));
  const double lr = get<double>(is);
  const double momentum = get<double>(is);

  MiniNet net = build(spec, 0);
  net.params_.learning_rate = lr;
  net.params_.momentum = momentum;
  if (get<std::uint64_t>(is) != net.params_.parameter_count()) {
    throw std::runtime_error("checkpoint: parameter count does not match the architecture");
  }
  for (ConvParams& p : net.params_.layers) {
    for (double& v : p.weights) v = get<double>(is);
    for (double& v : p.bias) v = get<double>(is);
  }
  return net;
}

CrossEntropy cross_entropy(const ProbField& a, const LabelMap& target, double normalizer) {
  if (a.height() != target.height() || a.width() != target.width()) {
    throw std::invalid_argument("cross_entropy: shape mismatch");
  }
  const std::size_t plane = a.shape().plane();
  const double m = normalizer > 0.0 ? normalizer : static_cast<double>(plane);
  CrossEntropy ce{0.0, Field3(a.shape())};
  for (std::size_t p = 0; p < plane; ++p) {
    const std::size_t c = target[p];
    if (c >= a.channels()) throw std::invalid_argument("cross_entropy: label out of range");
    const double v = a[c * plane + p];
    ce.loss -= std::log(v);
    ce.grad[c * plane + p] = -1.0 / (m * v);
  }
  ce.loss /= m;
  return ce;
}

TrainLog train(MiniNet& net, const std::vector<LabeledImage>& data, const TrainOptions& options) {
  if (data.empty()) throw std::invalid_argument("train: empty dataset");
  if (options.batch_size == 0) throw std::invalid_argument("train: batch size must be positive");
  TrainLog log;
  log.seed = options.seed;
  std::mt19937_64 rng(options.seed);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += options.batch_size) {
      const std::size_t end = std::min(order.size(), start + options.batch_size);
      double pixels = 0.0;
      for (std::size_t b = start; b < end; ++b) pixels += static_cast<double>(data[order[b]].label.size());
      Gradients total = zero_gradients(net.params());
      double loss = 0.0;
      for (std::size_t b = start; b < end; ++b) {
        const LabeledImage& sample = data[order[b]];
        ForwardResult fwd = net.forward(sample.image);
        const CrossEntropy ce = cross_entropy(fwd.activation, sample.label, pixels);
        loss += ce.loss;
        total += net.backward(fwd.tape, ce.grad);
      }
      if (!std::isfinite(loss)) {
        throw TrainingError("train: non-finite loss at iteration " + std::to_string(log.iterations),
                            log.iterations);
      }
      net.sgd_momentum_step(total, options.tau_lambda);
      log.losses.push_back(loss);
      log.lambdas.push_back(net.lambda());
      ++log.iterations;
    }
    log.epoch_lambdas.push_back(net.lambda());
  }
  return log;
}

Prediction predict(const MiniNet& net, const Field3& image, int test_iterations) {
  Field3 o = net.logits(image);
  Prediction p;
  if (net.spec().activation == FinalActivation::regularized) {
    p.probabilities = post_tv(o, net.lambda(), test_iterations, net.spec().reg.tau);
  } else {
    p.probabilities = softmax(o);
  }
  p.labels = argmax(p.probabilities);
  return p;
}

}  // namespace tvseg
