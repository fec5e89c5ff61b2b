#include "tvseg/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <iterator>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include "tvseg/grid_calculus.hpp"
#include "tvseg/reg_activation.hpp"

namespace tvseg {

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) {
    if (!cur.empty()) out.push_back(cur);
  }
  return out;
}

double parse_double(const std::string& s, const std::string& context) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size() || !std::isfinite(v)) {
    throw std::invalid_argument("bad number '" + s + "' in " + context);
  }
  return v;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << text;
  if (!os) throw std::runtime_error("failed writing " + path.string());
}

std::uint64_t point_key(const NoisePoint& p) {
  std::uint64_t kind = 0;
  if (p.kind == "gauss") kind = 1;
  if (p.kind == "pepper") kind = 2;
  if (p.kind == "salt") kind = 3;
  return kind * 1'000'000 + static_cast<std::uint64_t>(std::llround(p.level * 1e5));
}

}  // namespace

std::vector<NoisePoint> parse_sweep(const std::string& text) {
  std::vector<NoisePoint> points{{"clean", 0.0}};
  for (const std::string& item : split(text, ',')) {
    const auto parts = split(item, ':');
    if (parts.empty()) continue;
    const std::string kind = parts[0] == "gaussian" ? "gauss" : parts[0];
    if (kind == "clean") continue;
    if (kind != "gauss" && kind != "pepper" && kind != "salt") {
      throw std::invalid_argument("sweep: unknown noise kind '" + parts[0] + "'");
    }
    if (parts.size() < 2 || parts.size() > 3) {
      throw std::invalid_argument("sweep: expected kind:level or kind:lo..hi:step, got '" + item + "'");
    }
    const auto range = parts[1].find("..");
    if (range == std::string::npos) {
      if (parts.size() != 2) throw std::invalid_argument("sweep: step given without a range in '" + item + "'");
      points.push_back({kind, parse_double(parts[1], item)});
      continue;
    }
    const double lo = parse_double(parts[1].substr(0, range), item);
    const double hi = parse_double(parts[1].substr(range + 2), item);
    const double step = parts.size() == 3 ? parse_double(parts[2], item) : 0.0;
    if (!(step > 0.0) || hi < lo) throw std::invalid_argument("sweep: bad range in '" + item + "'");
    const auto n = static_cast<long>(std::floor((hi - lo) / step + 1e-9));
    for (long k = 0; k <= n; ++k) {
      // round to the step's decimal grid so levels print and hash stably
      const double v = std::round((lo + static_cast<double>(k) * step) * 1e6) / 1e6;
      points.push_back({kind, v});
    }
  }
  for (const NoisePoint& p : points) {
    if (p.kind == "gauss" && p.level < 0.0) throw std::invalid_argument("sweep: negative sigma");
    if ((p.kind == "pepper" || p.kind == "salt") && (p.level < 0.0 || p.level > 1.0)) {
      throw std::invalid_argument("sweep: fraction outside [0,1]");
    }
  }
  return points;
}

Field3 corrupt_for_eval(const Field3& image, const NoisePoint& point, std::uint64_t seed,
                        std::size_t image_index) {
  const std::uint64_t s = derive_seed(derive_seed(seed, point_key(point)), image_index);
  if (point.kind == "clean") return image;
  if (point.kind == "gauss") return add_gaussian_noise(image, point.level, s);
  return add_salt_pepper(image, point.level, parse_noise_kind(point.kind), s);
}

LabelMap predict_labels(const EvalModel& model, const Field3& image) {
  if (model.post_tv_lambda) {
    return argmax(post_tv(model.net->logits(image), *model.post_tv_lambda, model.test_iterations,
                          model.net->spec().reg.tau));
  }
  return predict(*model.net, image, model.test_iterations).labels;
}

MetricsRow evaluate(const EvalModel& model, const std::vector<Sample>& test,
                    const NoisePoint& point, std::uint64_t noise_seed) {
  if (test.empty()) throw std::invalid_argument("evaluate: empty test set");
  Confusion cm(model.net->spec().classes);
  double re = 0.0;
  for (std::size_t k = 0; k < test.size(); ++k) {
    const LabelMap pred = predict_labels(model, corrupt_for_eval(test[k].image, point, noise_seed, k));
    cm.add(pred, test[k].label);
    re += regularization_effect(pred);
  }
  return {model.id, point.kind, point.level, cm.miou(), cm.accuracy(),
          re / static_cast<double>(test.size())};
}

std::vector<LabeledImage> to_labeled(const std::vector<Sample>& samples) {
  std::vector<LabeledImage> out;
  out.reserve(samples.size());
  for (const Sample& s : samples) out.push_back({s.image, s.label});
  return out;
}

std::vector<std::string> ExperimentConfig::problems() const {
  std::vector<std::string> p;
  if (mode != "plain" && mode != "regularized" && mode != "both") {
    p.push_back("--mode must be plain, regularized or both (got '" + mode + "')");
  }
  if (noise_train != "none" && noise_train != "paper") {
    p.push_back("--noise-train must be none or paper (got '" + noise_train + "')");
  }
  if (!(lambda >= 0.0)) p.push_back("--lambda must be >= 0");
  if (!(post_tv_lambda >= 0.0)) p.push_back("--post-tv-lambda must be >= 0");
  if (!(kappa > 0.0)) p.push_back("--kappa must be > 0");
  if (!(tau > 0.0 && tau <= 0.125)) p.push_back("--tau must lie in (0, 1/8]");
  if (iterations < 1) p.push_back("--iters must be >= 1");
  if (batch < 1) p.push_back("--batch must be >= 1");
  if (!(learning_rate > 0.0)) p.push_back("--lr must be > 0");
  if (!(tau_lambda >= 0.0)) p.push_back("--tau-lambda must be >= 0 (0 keeps lambda fixed)");
  if (image_size < 32 || image_size % 4 != 0) p.push_back("--size must be >= 32 and divisible by 4");
  if (train_count == 0 || test_count == 0) p.push_back("--train-count and --test-count must be positive");
  if (noise_train == "paper" && noisy_subset > train_count) {
    p.push_back("--noisy-subset exceeds the training set size");
  }
  if (!widths.empty() && image_size % (std::size_t{1} << (widths.size() - 1)) != 0) {
    p.push_back("--size is not divisible by the network's pooling factor");
  }
  for (std::size_t w : widths) {
    if (w == 0) p.push_back("--widths entries must be positive");
  }
  try {
    parse_sweep(sweep);
  } catch (const std::exception& e) {
    p.push_back(std::string("--sweep: ") + e.what());
  }
  if ((command == "train" || command == "sweep") && !generate && dataset.empty()) {
    p.push_back("--dataset DIR is required unless --generate is given");
  }
  return p;
}

Dataset obtain_dataset(const ExperimentConfig& cfg) {
  if (cfg.generate) {
    Dataset ds = make_dataset(cfg.train_count, cfg.test_count, cfg.image_size, cfg.seed);
    if (!cfg.dataset.empty()) save_dataset(cfg.dataset, ds);
    return ds;
  }
  if (!std::filesystem::exists(cfg.dataset / "manifest.txt")) {
    throw std::invalid_argument("dataset " + cfg.dataset.string() +
                                " not found (pass --generate to create it)");
  }
  return load_dataset(cfg.dataset);
}

std::string train_log_csv(const TrainLog& log) {
  std::string out = "iteration,loss,lambda\n";
  char buf[96];
  for (std::size_t k = 0; k < log.losses.size(); ++k) {
    std::snprintf(buf, sizeof buf, "%zu,%.12e,%.12e\n", k, log.losses[k], log.lambdas[k]);
    out += buf;
  }
  return out;
}

namespace {

NetSpec net_spec_for(const ExperimentConfig& cfg, FinalActivation activation, std::size_t size) {
  NetSpec spec;
  spec.in_channels = 3;
  spec.classes = kCellClasses;
  spec.height = size;
  spec.width = size;
  spec.widths = cfg.widths;
  spec.activation = activation;
  spec.reg.lambda = cfg.lambda;
  spec.reg.kappa = cfg.kappa;
  spec.reg.tau = cfg.tau;
  spec.reg.iterations = cfg.iterations;
  spec.reg.mode = RegMode::one_step;
  return spec;
}

std::vector<FinalActivation> requested_models(const std::string& mode) {
  if (mode == "plain") return {FinalActivation::plain};
  if (mode == "regularized") return {FinalActivation::regularized};
  return {FinalActivation::plain, FinalActivation::regularized};
}

}  // namespace

std::vector<TrainOutcome> run_train(const ExperimentConfig& cfg) {
  const Dataset ds = obtain_dataset(cfg);
  if (ds.train.empty()) throw std::invalid_argument("dataset has no training samples");
  std::vector<Sample> train_set = ds.train;
  if (cfg.noise_train == "paper") {
    train_set = corrupt_training_subset(std::move(train_set), cfg.noisy_subset, derive_seed(cfg.seed, 101));
  }
  const auto data = to_labeled(train_set);
  std::filesystem::create_directories(cfg.out);

  std::vector<TrainOutcome> outcomes;
  for (FinalActivation activation : requested_models(cfg.mode)) {
    const std::size_t size = ds.train.front().label.height();
    MiniNet net = MiniNet::build(net_spec_for(cfg, activation, size), cfg.seed);
    net.params().learning_rate = cfg.learning_rate;
    TrainOptions opts;
    opts.epochs = cfg.epochs;
    opts.batch_size = cfg.batch;
    opts.seed = cfg.seed;
    // lambda = 0 is the plain network; keep it there
    opts.tau_lambda = cfg.lambda > 0.0 ? cfg.tau_lambda : 0.0;
    TrainOutcome outcome;
    outcome.model = to_string(activation);
    outcome.log = train(net, data, opts);
    outcome.final_lambda = net.lambda();
    outcome.checkpoint = cfg.out / (outcome.model + ".ckpt");
    net.save(outcome.checkpoint);
    write_text(cfg.out / (outcome.model + "_log.csv"), train_log_csv(outcome.log));
    outcomes.push_back(std::move(outcome));
  }
  return outcomes;
}

std::vector<MetricsRow> run_sweep(const ExperimentConfig& cfg) {
  const Dataset ds = obtain_dataset(cfg);
  if (ds.test.empty()) throw std::invalid_argument("dataset has no test samples");
  const auto points = parse_sweep(cfg.sweep);
  std::filesystem::create_directories(cfg.out);

  struct Entry {
    std::string id;
    std::filesystem::path checkpoint;
    bool post_tv = false;
  };
  std::vector<Entry> entries;
  for (FinalActivation activation : requested_models(cfg.mode)) {
    const std::string name = to_string(activation);
    entries.push_back({name, cfg.out / (name + ".ckpt"), false});
    if (activation == FinalActivation::plain) entries.push_back({"plain+tv", cfg.out / "plain.ckpt", true});
  }

  std::vector<MetricsRow> rows;
  std::string csv = metrics_csv_header() + "\n";
  for (const Entry& e : entries) {
    std::optional<MiniNet> net;
    try {
      net = MiniNet::load(e.checkpoint);
    } catch (const std::exception& ex) {
      std::cerr << "sweep: model " << e.id << ": " << ex.what() << "\n";
    }
    for (const NoisePoint& point : points) {
      MetricsRow row;
      if (net) {
        EvalModel model{e.id, &*net, std::nullopt, cfg.iterations};
        if (e.post_tv) model.post_tv_lambda = cfg.post_tv_lambda;
        row = evaluate(model, ds.test, point, derive_seed(cfg.seed, 202));
      } else {
        std::cerr << "sweep: " << e.id << " " << point.kind << " " << point.level
                  << ": missing checkpoint " << e.checkpoint.string() << "\n";
        const double nan = std::numeric_limits<double>::quiet_NaN();
        row = {e.id, point.kind, point.level, nan, nan, nan};
      }
      csv += to_csv_row(row) + "\n";
      rows.push_back(row);
    }
  }
  write_text(cfg.out / "metrics.csv", csv);
  if (cfg.svg) write_text(cfg.out / "sweep.svg", sweep_svg(rows));
  return rows;
}

std::string sweep_svg(const std::vector<MetricsRow>& rows) {
  const double w = 640, h = 400, left = 60, right = 150, top = 30, bottom = 50;
  std::vector<std::string> models;
  double max_sigma = 0.0;
  for (const MetricsRow& r : rows) {
    if (std::find(models.begin(), models.end(), r.model) == models.end()) models.push_back(r.model);
    if (r.noise_kind == "gauss") max_sigma = std::max(max_sigma, r.level);
  }
  if (max_sigma <= 0.0) max_sigma = 0.1;
  auto sx = [&](double s) { return left + (w - left - right) * s / max_sigma; };
  auto sy = [&](double m) { return top + (h - top - bottom) * (1.0 - m / 100.0); };
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};

  std::ostringstream os;
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%.0f\" height=\"%.0f\" "
                "font-family=\"sans-serif\" font-size=\"12\">\n",
                w, h);
  os << buf;
  std::snprintf(buf, sizeof buf,
                "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"black\"/>\n"
                "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"black\"/>\n",
                left, sy(0), w - right, sy(0), left, sy(0), left, sy(100));
  os << buf;
  for (int k = 0; k <= 10; k += 2) {
    std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"end\">%d</text>\n",
                  left - 6, sy(k * 10.0) + 4, k * 10);
    os << buf;
  }
  for (int k = 0; k <= 4; ++k) {
    const double s = max_sigma * k / 4.0;
    std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"middle\">%.3g</text>\n",
                  sx(s), sy(0) + 18, s);
    os << buf;
  }
  std::snprintf(buf, sizeof buf,
                "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"middle\">gaussian sigma</text>\n"
                "<text x=\"14\" y=\"%.1f\" transform=\"rotate(-90 14 %.1f)\" "
                "text-anchor=\"middle\">mIoU (%%)</text>\n",
                (left + w - right) / 2, h - 10, (top + h - bottom) / 2, (top + h - bottom) / 2);
  os << buf;
  for (std::size_t m = 0; m < models.size(); ++m) {
    std::vector<std::pair<double, double>> pts;
    for (const MetricsRow& r : rows) {
      if (r.model != models[m] || !std::isfinite(r.miou)) continue;
      if (r.noise_kind == "clean") pts.emplace_back(0.0, r.miou);
      if (r.noise_kind == "gauss") pts.emplace_back(r.level, r.miou);
    }
    std::sort(pts.begin(), pts.end());
    const char* color = colors[m % 5];
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (std::size_t k = 0; k < pts.size(); ++k) {
      std::snprintf(buf, sizeof buf, "%s%.1f,%.1f", k ? " " : "", sx(pts[k].first), sy(pts[k].second));
      os << buf;
    }
    os << "\"/>\n";
    std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"%.1f\" fill=\"%s\">%s</text>\n",
                  w - right + 10, top + 16.0 * static_cast<double>(m + 1), color, models[m].c_str());
    os << buf;
  }
  os << "</svg>\n";
  return os.str();
}

// --- gradient validation suite ---------------------------------------------

namespace {

Field3 random_field(const Shape& s, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Field3 f(s);
  for (double& v : f.values()) v = n(rng);
  return f;
}

Shape random_shape(std::mt19937_64& rng, std::size_t min_side, std::size_t max_side,
                   std::size_t max_channels) {
  std::uniform_int_distribution<std::size_t> side(min_side, max_side);
  std::uniform_int_distribution<std::size_t> ch(2, max_channels);
  return {ch(rng), side(rng), side(rng)};
}

void merge(GradReport& total, const GradReport& r) {
  total.max_relative_error = std::max(total.max_relative_error, r.max_relative_error);
  total.max_absolute_error = std::max(total.max_absolute_error, r.max_absolute_error);
  total.probes += r.probes;
  total.non_finite += r.non_finite;
}

GradReport finish(GradReport total) {
  total.pass = total.max_relative_error <= total.tolerance;
  return total;
}

double fault_scale(const std::string& inject, const std::string& name) {
  return inject == name ? 2.0 : 1.0;
}

GradReport check_onestep(std::mt19937_64& rng, std::size_t instances, double scale) {
  GradReport total{"onestep", 0, 0, 0, 0, 1e-6, false};
  std::uniform_real_distribution<double> lam(0.1, 1.5);
  for (std::size_t n = 0; n < instances; ++n) {
    const Shape s = random_shape(rng, 2, 6, 4);
    RegActConfig cfg;
    cfg.mode = RegMode::one_step;
    cfg.lambda = lam(rng);
    // alternate the plain step with a large one so the projection is active
    cfg.kappa = n % 2 == 0 ? 0.25 : 3.0;
    const Field3 o = random_field(s, rng);
    const Field3 w = random_field(s, rng);
    auto loss = [&](const Field3& x) { return dot(w, reg_softmax_onestep(x, cfg).activation); };
    const auto fwd = reg_softmax_onestep(o, cfg);
    const Field3 analytic = scale * reg_softmax_onestep_backward(fwd.tape, w);
    merge(total, finite_diff_check(loss, o, analytic, 1e-5, total.tolerance, 200, static_cast<unsigned>(n)));
  }
  return finish(total);
}

GradReport check_lambda(std::mt19937_64& rng, std::size_t instances, double scale) {
  GradReport total{"lambda", 0, 0, 0, 0, 1e-6, false};
  std::uniform_real_distribution<double> lam(0.1, 1.5);
  for (std::size_t n = 0; n < instances; ++n) {
    const Shape s = random_shape(rng, 2, 6, 4);
    RegActConfig cfg;
    cfg.mode = RegMode::one_step;
    cfg.lambda = lam(rng);
    cfg.kappa = n % 2 == 0 ? 0.25 : 3.0;
    const Field3 o = random_field(s, rng);
    const Field3 w = random_field(s, rng);
    const auto fwd = reg_softmax_onestep(o, cfg);
    const Field3 div_eta = grid::div(fwd.eta);
    // eta frozen: A(lambda) = S(o - lambda*div(eta))
    auto loss = [&](const Field3& l) { return dot(w, softmax(o - l[0] * div_eta)); };
    const Field3 point(Shape{1, 1, 1}, cfg.lambda);
    const Field3 analytic(Shape{1, 1, 1}, scale * lambda_gradient(fwd.tape, w));
    merge(total, finite_diff_check(loss, point, analytic, 1e-5, total.tolerance));
  }
  return finish(total);
}

GradReport check_unrolled(std::mt19937_64& rng, int steps, std::size_t instances, double scale) {
  GradReport total{"unrolled_T" + std::to_string(steps), 0, 0, 0, 0, 1e-5, false};
  std::uniform_real_distribution<double> lam(0.2, 1.5);
  for (std::size_t n = 0; n < instances; ++n) {
    const Shape s = random_shape(rng, 2, 6, 4);
    RegActConfig cfg;
    cfg.mode = RegMode::iterative;
    cfg.lambda = lam(rng);
    cfg.tau = 0.125;
    cfg.iterations = steps;
    const Field3 o = random_field(s, rng);
    const Field3 w = random_field(s, rng);
    auto loss = [&](const Field3& x) { return dot(w, reg_softmax_iterative(x, cfg).activation); };
    const auto fwd = reg_softmax_iterative(o, cfg);
    const Field3 analytic = scale * reg_softmax_unrolled_backward(fwd.tape, w);
    merge(total, finite_diff_check(loss, o, analytic, 1e-5, total.tolerance, 200, static_cast<unsigned>(n)));
  }
  return finish(total);
}

// Packs sampled network parameters into a 1 x 1 x n field for finite_diff_check.
GradReport check_network(std::uint64_t seed, FinalActivation activation, double scale) {
  GradReport total{std::string("network_") + to_string(activation), 0, 0, 0, 0, 1e-5, false};
  NetSpec spec;
  spec.height = 16;
  spec.width = 16;
  spec.widths = {4, 8};
  spec.activation = activation;
  spec.reg.lambda = 0.7;
  spec.reg.kappa = 0.25;
  MiniNet net = MiniNet::build(spec, seed);
  const auto samples = generate_cells(1, 32, seed);
  // 16x16 crop keeps the check fast
  Field3 image(Shape{3, 16, 16});
  LabelMap label(16, 16);
  for (std::size_t c = 0; c < 3; ++c) {
    for (std::size_t i = 0; i < 16; ++i) {
      for (std::size_t j = 0; j < 16; ++j) image(c, i, j) = samples[0].image(c, i + 8, j + 8);
    }
  }
  for (std::size_t i = 0; i < 16; ++i) {
    for (std::size_t j = 0; j < 16; ++j) label(i, j) = samples[0].label(i + 8, j + 8);
  }

  const auto fwd = net.forward(image);
  const auto ce = cross_entropy(fwd.activation, label);
  const Gradients grads = net.backward(fwd.tape, ce.grad);

  // every layer's weights and biases are probed
  std::mt19937_64 rng(seed);
  for (std::size_t l = 0; l < net.params().layers.size(); ++l) {
    std::vector<double*> slots;
    std::vector<double> analytic_values;
    auto& layer = net.params().layers[l];
    std::vector<std::size_t> all(layer.weights.size()), picks;
    std::iota(all.begin(), all.end(), std::size_t{0});
    std::sample(all.begin(), all.end(), std::back_inserter(picks), 6, rng);
    for (std::size_t idx : picks) {
      slots.push_back(&layer.weights[idx]);
      analytic_values.push_back(scale * grads.layers[l].weights[idx]);
    }
    slots.push_back(&layer.bias[0]);
    analytic_values.push_back(scale * grads.layers[l].bias[0]);

    Field3 point(Shape{1, 1, slots.size()});
    for (std::size_t k = 0; k < slots.size(); ++k) point[k] = *slots[k];
    const Field3 analytic(Shape{1, 1, slots.size()}, analytic_values);
    auto loss = [&](const Field3& x) {
      std::vector<double> saved(slots.size());
      for (std::size_t k = 0; k < slots.size(); ++k) {
        saved[k] = *slots[k];
        *slots[k] = x[k];
      }
      const double value = cross_entropy(net.forward(image).activation, label).loss;
      for (std::size_t k = slots.size(); k-- > 0;) *slots[k] = saved[k];
      return value;
    };
    merge(total, finite_diff_check(loss, point, analytic, 1e-6, total.tolerance));
  }
  return finish(total);
}

}  // namespace

std::vector<GradReport> gradient_suite(std::uint64_t seed, const std::string& inject_fault) {
  std::mt19937_64 rng(seed);
  std::vector<GradReport> out;
  out.push_back(check_onestep(rng, 60, fault_scale(inject_fault, "onestep")));
  out.push_back(check_lambda(rng, 60, fault_scale(inject_fault, "lambda")));
  for (int steps : {1, 3, 5}) {
    const std::string name = "unrolled_T" + std::to_string(steps);
    out.push_back(check_unrolled(rng, steps, 20, fault_scale(inject_fault, name)));
  }
  out.push_back(check_network(seed, FinalActivation::plain, fault_scale(inject_fault, "network_plain")));
  out.push_back(check_network(seed, FinalActivation::regularized,
                              fault_scale(inject_fault, "network_regularized")));
  return out;
}

std::vector<GradReport> run_gradcheck(const ExperimentConfig& cfg) {
  const auto reports = gradient_suite(cfg.seed, cfg.inject_fault);
  std::filesystem::create_directories(cfg.out);
  std::string csv = grad_report_csv_header() + "\n";
  for (const GradReport& r : reports) csv += to_csv_row(r) + "\n";
  write_text(cfg.out / "gradcheck.csv", csv);
  return reports;
}

}  // namespace tvseg
