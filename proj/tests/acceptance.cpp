// Acceptance gate: one PASS/FAIL line per criterion.
//
//   tvseg_acceptance            run everything
//   tvseg_acceptance 1 4        run selected criteria

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "tvseg/experiment.hpp"
#include "tvseg/grid_calculus.hpp"

using namespace tvseg;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

Field3 random_field(Shape s, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Field3 f(s);
  for (double& v : f.values()) v = n(rng);
  return f;
}

DualField random_dual(Shape s, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  DualField p(s);
  for (double& v : p.rows()) v = n(rng);
  for (double& v : p.cols()) v = n(rng);
  return p;
}

RegActConfig iterative(double lambda, int steps) {
  RegActConfig c;
  c.mode = RegMode::iterative;
  c.lambda = lambda;
  c.iterations = steps;
  return c;
}

// --- 1 ---------------------------------------------------------------------

Verdict gradient_exactness() {
  const auto t0 = Clock::now();
  const auto reports = gradient_suite(1);
  const double elapsed = seconds_since(t0);
  Verdict v{true, ""};
  for (const GradReport& r : reports) {
    v.pass = v.pass && r.pass;
    v.detail += r.name + " " + fmt("%.1e", r.max_relative_error) + "/" + fmt("%.0e", r.tolerance) + ", ";
  }
  const auto find = [&](const std::string& name) {
    return std::find_if(reports.begin(), reports.end(), [&](const GradReport& r) { return r.name == name; });
  };
  for (const char* name : {"onestep", "lambda", "unrolled_T1", "unrolled_T3", "unrolled_T5"}) {
    v.pass = v.pass && find(name) != reports.end();
  }
  // at least 50 instances each for the one-step and lambda checks
  v.pass = v.pass && find("lambda") != reports.end() && find("lambda")->probes >= 50;
  v.pass = v.pass && elapsed < 60.0;
  v.detail += fmt("%.1f s (limit 60 s)", elapsed);
  return v;
}

// --- 2 ---------------------------------------------------------------------

Verdict oracle_equivalence() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(2024);
  const double lambdas[] = {0.25, 0.5, 1.0, 2.0};
  double worst_softmax = 0.0, worst_relu = 0.0;
  int instances = 0;
  for (const Shape s : {Shape{2, 2, 2}, Shape{2, 1, 3}}) {
    for (int k = 0; k < 8; ++k) {
      const double lambda = lambdas[k % 4];
      const Field3 o = random_field(s, rng, 1.5);
      // the dual step acts as tau * lambda^2; keep it at 1/8
      RegActConfig cfg = iterative(lambda, 5000);
      cfg.tau = std::min(0.125, 0.125 / (lambda * lambda));
      const ProbField ref = oracle::reg_softmax_minimizer(o, lambda);
      worst_softmax = std::max(worst_softmax, max_abs_diff(reg_softmax_iterative(o, cfg).activation, ref));
      const Field3 r = random_field(s, rng, 1.0);
      const Field3 rref = oracle::reg_relu_minimizer(r, lambda);
      worst_relu = std::max(worst_relu, max_abs_diff(reg_relu_iterative(r, cfg).activation, rref));
      instances += 2;
    }
  }
  const double elapsed = seconds_since(t0);
  Verdict v;
  v.pass = worst_softmax <= 1e-3 && worst_relu <= 1e-3 && elapsed < 120.0;
  v.detail = std::to_string(instances) + " instances, softmax max err " + fmt("%.1e", worst_softmax) +
             ", relu max err " + fmt("%.1e", worst_relu) + " (tol 1e-3), " + fmt("%.1f s (limit 120 s)", elapsed);
  return v;
}

// --- 3 ---------------------------------------------------------------------

Verdict exact_reductions() {
  std::mt19937_64 rng(3);
  double act = 0.0;
  for (int k = 0; k < 20; ++k) {
    const Field3 o = random_field({3, 6, 7}, rng, 3.0);
    act = std::max(act, max_abs_diff(reg_softmax_iterative(o, iterative(0.0, 100)).activation, softmax(o)));
    RegActConfig one;
    one.mode = RegMode::one_step;
    one.lambda = 0.0;
    one.kappa = 3.0;
    act = std::max(act, max_abs_diff(reg_softmax_onestep(o, one).activation, softmax(o)));
    act = std::max(act, max_abs_diff(reg_relu_iterative(o, iterative(0.0, 100)).activation, relu(o)));
  }

  const fs::path out = fs::temp_directory_path() / "tvseg_accept_c3";
  fs::remove_all(out);
  ExperimentConfig cfg;
  cfg.command = "train";
  cfg.generate = true;
  cfg.train_count = 8;
  cfg.test_count = 1;
  cfg.image_size = 32;
  cfg.epochs = 2;
  cfg.batch = 4;
  cfg.lambda = 0.0;
  cfg.out = out;
  const auto outcomes = run_train(cfg);
  double loss = 0.0;
  const auto& lp = outcomes.at(0).log.losses;
  const auto& lr = outcomes.at(1).log.losses;
  bool same_length = lp.size() == lr.size();
  for (std::size_t k = 0; same_length && k < lp.size(); ++k) loss = std::max(loss, std::abs(lp[k] - lr[k]));
  fs::remove_all(out);

  Verdict v;
  v.pass = act <= 1e-12 && same_length && loss <= 1e-10;
  v.detail = "activations max diff " + fmt("%.1e", act) + " (tol 1e-12), network losses max diff " +
             fmt("%.1e", loss) + " over " + std::to_string(lp.size()) + " iterations (tol 1e-10)";
  return v;
}

// --- 4 ---------------------------------------------------------------------

Verdict calculus_invariants() {
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<std::size_t> side(1, 9), ch(1, 4);
  double adjoint = 0.0, idempotent = 0.0, expansion = 0.0, simplex = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const Shape s{ch(rng), side(rng), side(rng)};
    const Field3 u = random_field(s, rng);
    const DualField p = random_dual(s, rng);
    const double a = dot(grid::grad(u), p), b = dot(u, grid::div(p));
    adjoint = std::max(adjoint, std::abs(a + b) / std::max({std::abs(a), std::abs(b), 1.0}));

    const DualField q = random_dual(s, rng, 2.0);
    const DualField pp = grid::project_unit_disc(p), pq = grid::project_unit_disc(q);
    const DualField ppp = grid::project_unit_disc(pp);
    for (std::size_t k = 0; k < p.size(); ++k) {
      idempotent = std::max({idempotent, std::abs(ppp.row(k) - pp.row(k)), std::abs(ppp.col(k) - pp.col(k))});
      const double before = std::hypot(p.row(k) - q.row(k), p.col(k) - q.col(k));
      const double after = std::hypot(pp.row(k) - pq.row(k), pp.col(k) - pq.col(k));
      expansion = std::max(expansion, after - before);
    }
  }
  for (int trial = 0; trial < 20; ++trial) {
    const Field3 o = random_field({4, 6, 6}, rng, 2.0);
    const auto r = reg_softmax_iterative(o, iterative(1.0 + 0.1 * trial, 60));
    for (const ProbField& a : r.tape.activations) {
      for (std::size_t p = 0; p < a.shape().plane(); ++p) {
        double sum = 0.0;
        for (std::size_t c = 0; c < a.channels(); ++c) sum += a[c * a.shape().plane() + p];
        simplex = std::max(simplex, std::abs(sum - 1.0));
      }
    }
  }
  Verdict v;
  v.pass = adjoint <= 1e-12 && idempotent <= 1e-15 && expansion <= 1e-14 && simplex <= 1e-12;
  v.detail = "adjointness " + fmt("%.1e", adjoint) + " (tol 1e-12), idempotence " + fmt("%.1e", idempotent) +
             ", expansion " + fmt("%.1e", expansion) + ", simplex " + fmt("%.1e", simplex) + " (tol 1e-12)";
  return v;
}

// --- 5, 6, 7: shared desk-scale experiment ---------------------------------

struct SeedRun {
  std::uint64_t seed = 0;
  std::vector<MetricsRow> rows;
  TrainLog regularized_log;
  double final_lambda = 0.0;
};

struct Experiment {
  std::vector<SeedRun> runs;
  std::vector<NoisePoint> points;
  double seconds = 0.0;
};

const Experiment& desk_experiment() {
  static Experiment ex = [] {
    Experiment e;
    const auto t0 = Clock::now();
    for (std::uint64_t seed : {1, 2, 3}) {
      ExperimentConfig cfg;
      cfg.command = "experiment";
      cfg.generate = true;
      cfg.seed = seed;
      cfg.out = fs::temp_directory_path() / ("tvseg_accept_seed" + std::to_string(seed));
      fs::remove_all(cfg.out);
      SeedRun run;
      run.seed = seed;
      for (const TrainOutcome& o : run_train(cfg)) {
        if (o.model == "regularized") {
          run.regularized_log = o.log;
          run.final_lambda = o.final_lambda;
        }
      }
      run.rows = run_sweep(cfg);
      e.points = parse_sweep(cfg.sweep);
      std::fprintf(stderr, "  seed %llu done after %.0f s\n", static_cast<unsigned long long>(seed),
                   seconds_since(t0));
      fs::remove_all(cfg.out);
      e.runs.push_back(std::move(run));
    }
    e.seconds = seconds_since(t0);
    return e;
  }();
  return ex;
}

const MetricsRow& row_of(const SeedRun& run, const std::string& model, const NoisePoint& p) {
  for (const MetricsRow& r : run.rows) {
    if (r.model == model && r.noise_kind == p.kind && std::abs(r.level - p.level) < 1e-9) return r;
  }
  throw std::runtime_error("missing row " + model + " " + p.kind);
}

std::string point_name(const NoisePoint& p) {
  return p.kind == "clean" ? "clean" : p.kind + fmt("%.2f", p.level);
}

// Counts the seeds for which `holds` is true; majority is 2 of 3.
bool majority(const Experiment& ex, const std::function<bool(const SeedRun&)>& holds, int* wins = nullptr) {
  int n = 0;
  for (const SeedRun& r : ex.runs) n += holds(r);
  if (wins) *wins = n;
  return 2 * n > static_cast<int>(ex.runs.size());
}

Verdict directional_reproduction() {
  const Experiment& ex = desk_experiment();
  Verdict v{true, ""};
  std::string failed;
  for (const NoisePoint& p : ex.points) {
    int wins = 0;
    const bool re_ok = majority(
        ex, [&](const SeedRun& r) { return row_of(r, "regularized", p).re < row_of(r, "plain", p).re; }, &wins);
    v.detail += point_name(p) + " RE " + std::to_string(wins) + "/3";
    if (!re_ok) failed += " RE@" + point_name(p);
    v.pass = v.pass && re_ok;
    if (p.kind == "gauss" && p.level >= 0.05 - 1e-9) {
      const bool miou_ok = majority(
          ex, [&](const SeedRun& r) { return row_of(r, "regularized", p).miou >= row_of(r, "plain", p).miou; },
          &wins);
      v.detail += " mIoU " + std::to_string(wins) + "/3";
      if (!miou_ok) failed += " mIoU@" + point_name(p);
      v.pass = v.pass && miou_ok;
    }
    v.detail += ", ";
  }
  v.pass = v.pass && ex.seconds < 1800.0;
  v.detail += fmt("%.0f s (limit 1800 s)", ex.seconds);
  if (!failed.empty()) v.detail += "; failing:" + failed;
  return v;
}

Verdict post_tv_ordering() {
  const Experiment& ex = desk_experiment();
  Verdict v{true, ""};
  for (const NoisePoint& p : ex.points) {
    int wins = 0;
    const bool ok = majority(
        ex, [&](const SeedRun& r) { return row_of(r, "plain+tv", p).re < row_of(r, "plain", p).re; }, &wins);
    v.detail += point_name(p) + " " + std::to_string(wins) + "/3, ";
    v.pass = v.pass && ok;
  }
  const NoisePoint worst{"gauss", 0.09};
  int wins = 0;
  const bool miou_ok = majority(
      ex, [&](const SeedRun& r) { return row_of(r, "regularized", worst).miou >= row_of(r, "plain+tv", worst).miou; },
      &wins);
  v.detail += "mIoU@gauss0.09 regularized >= plain+tv " + std::to_string(wins) + "/3";
  v.pass = v.pass && miou_ok;
  return v;
}

Verdict lambda_sanity() {
  const Experiment& ex = desk_experiment();
  Verdict v{true, ""};
  for (const SeedRun& r : ex.runs) {
    bool lambda_ok = std::isfinite(r.final_lambda) && r.final_lambda >= 0.0;
    for (double l : r.regularized_log.lambdas) lambda_ok = lambda_ok && std::isfinite(l) && l >= 0.0;
    const auto& loss = r.regularized_log.losses;
    std::size_t rises = 0;
    double worst_rise = 0.0, previous = 0.0;
    for (std::size_t k = 20; k <= loss.size(); ++k) {
      double avg = 0.0;
      for (std::size_t j = k - 20; j < k; ++j) avg += loss[j];
      avg /= 20.0;
      if (k > 20 && avg > previous) {
        ++rises;
        worst_rise = std::max(worst_rise, avg - previous);
      }
      previous = avg;
    }
    v.pass = v.pass && lambda_ok && rises == 0;
    v.detail += "seed " + std::to_string(r.seed) + ": lambda " + fmt("%.4f", r.final_lambda) +
                (lambda_ok ? "" : " INVALID") + ", moving-average rises " + std::to_string(rises) +
                " (largest " + fmt("%.1e", worst_rise) + "); ";
  }
  return v;
}

// --- 8 ---------------------------------------------------------------------

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> files;
  if (!fs::exists(dir)) return files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file() || e.path().filename() == "manifest.ini") continue;
    std::ifstream in(e.path(), std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    files[fs::relative(e.path(), dir).string()] = os.str();
  }
  return files;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(TVSEG_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Verdict reproducibility() {
  const fs::path root = fs::temp_directory_path() / "tvseg_accept_c8";
  fs::remove_all(root);
  fs::create_directories(root);
  const std::string data = (root / "data").string();
  const std::string small = " --train-count 6 --test-count 3 --size 32 --epochs 2 --batch 3 --iters 20 --seed 5";
  const std::vector<std::pair<std::string, std::string>> commands = {
      {"generate", "generate --dataset " + data + small},
      {"train", "train --dataset " + data + small},
      {"sweep", "sweep --dataset " + data + small + " --svg"},
      {"experiment", "experiment --generate --noise-train paper --noisy-subset 2" + small},
      {"gradcheck", "gradcheck --seed 5"},
  };
  Verdict v{true, ""};
  fs::path previous_out;
  for (const auto& [name, args] : commands) {
    // sweep reads the checkpoints written by train
    const fs::path out = name == "sweep" ? previous_out : root / name;
    previous_out = out;
    const auto before = snapshot(out);
    if (run_cli(args + " --out " + out.string()) != 0) {
      v.pass = false;
      v.detail += name + ": first run failed; ";
      continue;
    }
    const auto first = snapshot(out);
    const auto first_data = snapshot(root / "data");
    std::size_t csv = 0;
    // only the CSVs this command wrote; sweep shares its directory with train
    std::vector<std::string> written;
    for (const auto& [file, bytes] : first) {
      const auto it = before.find(file);
      if (file.ends_with(".csv") && (it == before.end() || it->second != bytes)) written.push_back(file);
    }
    csv = written.size();
    const fs::path replay = root / (name + "_manifest.ini");
    fs::copy_file(out / "manifest.ini", replay, fs::copy_options::overwrite_existing);
    for (const auto& file : written) fs::remove(out / file);
    if (name == "generate") fs::remove_all(root / "data");
    const int code = run_cli("--config " + replay.string());
    const bool same = code == 0 && snapshot(out) == first && snapshot(root / "data") == first_data;
    v.pass = v.pass && same;
    v.detail += name + (same ? " identical" : " DIFFERS") + " (" + std::to_string(first.size()) + " files, " +
                std::to_string(csv) + " csv); ";
  }
  fs::remove_all(root);
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
      {"gradient exactness", gradient_exactness},
      {"oracle equivalence", oracle_equivalence},
      {"exact reductions", exact_reductions},
      {"calculus invariants", calculus_invariants},
      {"directional reproduction (RE, mIoU vs plain)", directional_reproduction},
      {"post-TV baseline ordering", post_tv_ordering},
      {"lambda training sanity", lambda_sanity},
      {"manifest reproducibility", reproducibility},
  };
  std::set<int> selected;
  for (int k = 1; k < argc; ++k) selected.insert(std::atoi(argv[k]));

  int failures = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const int id = static_cast<int>(k) + 1;
    if (!selected.empty() && !selected.count(id)) continue;
    Verdict v;
    try {
      v = criteria[k].second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    failures += !v.pass;
    std::printf("[%s] %d %s: %s\n", v.pass ? "PASS" : "FAIL", id, criteria[k].first.c_str(), v.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
