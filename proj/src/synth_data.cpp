#include "tvseg/synth_data.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <random>
#include <stdexcept>

#include "tvseg/netpbm.hpp"

namespace tvseg {

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
  // splitmix64 over the combined value
  std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

namespace {

using Rgb = std::array<double, 3>;

struct Blob {
  double cx, cy;  // column, row centre
  double a, b;    // semi-axes
  double theta;
  double wobble_amp, wobble_phase;
  int wobble_freq;

  // Normalised radius; < 1 inside.
  double radius(double x, double y) const {
    const double dx = x - cx, dy = y - cy;
    const double c = std::cos(theta), s = std::sin(theta);
    const double u = (c * dx + s * dy) / a;
    const double v = (-s * dx + c * dy) / b;
    const double r = std::hypot(u, v);
    const double phi = std::atan2(v, u);
    return r / (1.0 + wobble_amp * std::sin(wobble_freq * phi + wobble_phase));
  }

  // Point on the boundary at angle phi (in the blob frame), scaled by `scale`.
  std::pair<double, double> boundary(double phi, double scale) const {
    const double r = scale * (1.0 + wobble_amp * std::sin(wobble_freq * phi + wobble_phase));
    const double u = r * std::cos(phi) * a, v = r * std::sin(phi) * b;
    const double c = std::cos(theta), s = std::sin(theta);
    return {cx + c * u - s * v, cy + s * u + c * v};
  }
};

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

// Sum of a few random low-frequency cosines in roughly [-1, 1].
struct SmoothField {
  std::array<double, 4> fx{}, fy{}, ph{}, amp{};

  SmoothField(std::mt19937_64& rng, double size, double max_freq) {
    for (std::size_t k = 0; k < fx.size(); ++k) {
      fx[k] = uniform(rng, -max_freq, max_freq) * 2.0 * std::numbers::pi / size;
      fy[k] = uniform(rng, -max_freq, max_freq) * 2.0 * std::numbers::pi / size;
      ph[k] = uniform(rng, 0.0, 2.0 * std::numbers::pi);
      amp[k] = uniform(rng, 0.5, 1.0) / static_cast<double>(fx.size());
    }
  }
  double operator()(double x, double y) const {
    double v = 0.0;
    for (std::size_t k = 0; k < fx.size(); ++k) v += amp[k] * std::cos(fx[k] * x + fy[k] * y + ph[k]);
    return v;
  }
};

bool nucleus_fits(const Blob& cyto, const Blob& nuc, double size) {
  for (int k = 0; k < 72; ++k) {
    const double phi = 2.0 * std::numbers::pi * k / 72.0;
    const auto [x, y] = nuc.boundary(phi, 1.0);
    if (cyto.radius(x, y) > 0.8) return false;
    const auto [cxp, cyp] = cyto.boundary(phi, 1.0);
    if (cxp < 2.0 || cyp < 2.0 || cxp > size - 3.0 || cyp > size - 3.0) return false;
  }
  return true;
}

Sample generate_one(std::size_t size, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const double s = static_cast<double>(size);

  Blob cyto{}, nuc{};
  for (int attempt = 0;; ++attempt) {
    if (attempt > 1000) throw std::logic_error("generate_cells: geometry sampling failed");
    cyto = Blob{uniform(rng, 0.38 * s, 0.62 * s), uniform(rng, 0.38 * s, 0.62 * s),
                uniform(rng, 0.20 * s, 0.30 * s), uniform(rng, 0.18 * s, 0.28 * s),
                uniform(rng, 0.0, std::numbers::pi), uniform(rng, 0.0, 0.08),
                uniform(rng, 0.0, 6.3), static_cast<int>(uniform(rng, 2.0, 5.0))};
    const double scale = uniform(rng, 0.40, 0.62);
    nuc = Blob{cyto.cx + uniform(rng, -0.15, 0.15) * cyto.a,
               cyto.cy + uniform(rng, -0.15, 0.15) * cyto.b,
               scale * cyto.a * uniform(rng, 0.85, 1.1), scale * cyto.b * uniform(rng, 0.85, 1.1),
               cyto.theta + uniform(rng, -0.5, 0.5), uniform(rng, 0.0, 0.15),
               uniform(rng, 0.0, 6.3), static_cast<int>(uniform(rng, 2.0, 4.0))};
    if (nucleus_fits(cyto, nuc, s)) break;
  }

  // Red-cell distractors outside the white cell.
  std::vector<Blob> reds;
  const int red_count = static_cast<int>(uniform(rng, 2.0, 6.0));
  for (int k = 0, tries = 0; k < red_count && tries < 200; ++tries) {
    const double r = uniform(rng, 0.07 * s, 0.11 * s);
    Blob red{uniform(rng, 0.0, s), uniform(rng, 0.0, s), r, r * uniform(rng, 0.85, 1.0),
             uniform(rng, 0.0, std::numbers::pi), 0.0, 0.0, 1};
    bool clear = true;
    for (int q = 0; q < 36 && clear; ++q) {
      const auto [x, y] = red.boundary(2.0 * std::numbers::pi * q / 36.0, 1.0);
      if (cyto.radius(x, y) < 1.15) clear = false;
    }
    if (!clear) continue;
    reds.push_back(red);
    ++k;
  }

  const Rgb background{0.93, 0.86, 0.84};
  const Rgb red_cell{0.86, 0.58, 0.62};
  const Rgb cytoplasm{0.85, 0.76, 0.86};
  const Rgb nucleus{0.60, 0.44, 0.70};

  const SmoothField illumination(rng, s, 1.5);
  const SmoothField texture(rng, s, 8.0);
  std::normal_distribution<double> grain(0.0, 0.012);

  Sample out{Field3(Shape{3, size, size}), LabelMap(size, size)};
  const std::size_t plane = size * size;
  for (std::size_t i = 0; i < size; ++i) {
    for (std::size_t j = 0; j < size; ++j) {
      const double x = static_cast<double>(j) + 0.5, y = static_cast<double>(i) + 0.5;
      const double rc = cyto.radius(x, y);
      const double rn = nuc.radius(x, y);
      Rgb col = background;
      std::uint8_t label = kBackground;
      double shade = 1.0 + 0.03 * texture(x, y);
      if (rn < 1.0) {
        col = nucleus;
        label = kNucleus;
        shade = 1.0 + 0.12 * (rn * rn - 0.5) + 0.04 * texture(x, y);
      } else if (rc < 1.0) {
        col = cytoplasm;
        label = kCytoplasm;
        shade = 1.0 - 0.06 * (1.0 - rc * rc) + 0.03 * texture(x, y);
      } else {
        for (const Blob& red : reds) {
          const double rr = red.radius(x, y);
          if (rr < 1.0) {
            col = red_cell;
            // pale centre of a biconcave disc
            shade = 1.0 + 0.08 * std::exp(-6.0 * rr * rr);
            break;
          }
        }
      }
      shade *= 1.0 + 0.04 * illumination(x, y);
      const std::size_t p = i * size + j;
      for (std::size_t c = 0; c < 3; ++c) {
        out.image[c * plane + p] = std::clamp(col[c] * shade + grain(rng), 0.0, 1.0);
      }
      out.label[p] = label;
    }
  }
  return out;
}

}  // namespace

std::vector<Sample> generate_cells(std::size_t count, std::size_t size, std::uint64_t seed) {
  if (size < 32 || size % 4 != 0) {
    throw std::invalid_argument("generate_cells: size must be >= 32 and divisible by 4, got " +
                                std::to_string(size));
  }
  std::vector<Sample> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) out.push_back(generate_one(size, derive_seed(seed, k)));
  return out;
}

const char* to_string(NoiseKind k) {
  switch (k) {
    case NoiseKind::gaussian: return "gauss";
    case NoiseKind::salt: return "salt";
    case NoiseKind::pepper: return "pepper";
    case NoiseKind::both: return "saltpepper";
  }
  return "?";
}

NoiseKind parse_noise_kind(const std::string& s) {
  if (s == "gauss" || s == "gaussian") return NoiseKind::gaussian;
  if (s == "salt") return NoiseKind::salt;
  if (s == "pepper") return NoiseKind::pepper;
  if (s == "saltpepper" || s == "both" || s == "sp") return NoiseKind::both;
  throw std::invalid_argument("unknown noise kind '" + s + "'");
}

void NoiseSpec::validate() const {
  if (!(sigma >= 0.0)) throw std::invalid_argument("noise sigma must be >= 0");
  if (!(fraction >= 0.0 && fraction <= 1.0)) throw std::invalid_argument("noise fraction must lie in [0,1]");
}

Field3 add_gaussian_noise(const Field3& image, double sigma, std::uint64_t seed) {
  if (!(sigma >= 0.0)) throw std::invalid_argument("add_gaussian_noise: sigma must be >= 0");
  Field3 out = image;
  if (sigma == 0.0) return out;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, sigma);
  for (double& v : out.values()) v = std::clamp(v + n(rng), 0.0, 1.0);
  return out;
}

Field3 add_salt_pepper(const Field3& image, double fraction, NoiseKind kind, std::uint64_t seed) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) {
    throw std::invalid_argument("add_salt_pepper: fraction must lie in [0,1]");
  }
  if (kind == NoiseKind::gaussian) throw std::invalid_argument("add_salt_pepper: kind must be salt/pepper/both");
  Field3 out = image;
  const std::size_t plane = image.shape().plane();
  const auto count = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(plane)));
  std::vector<std::size_t> idx(plane);
  for (std::size_t k = 0; k < plane; ++k) idx[k] = k;
  std::mt19937_64 rng(seed);
  for (std::size_t k = 0; k < count; ++k) {
    std::uniform_int_distribution<std::size_t> pick(k, plane - 1);
    std::swap(idx[k], idx[pick(rng)]);
  }
  for (std::size_t k = 0; k < count; ++k) {
    double v = kind == NoiseKind::salt ? 1.0 : 0.0;
    if (kind == NoiseKind::both) v = k < count / 2 ? 0.0 : 1.0;
    for (std::size_t c = 0; c < image.channels(); ++c) out[c * plane + idx[k]] = v;
  }
  return out;
}

Field3 apply_noise(const Field3& image, const NoiseSpec& spec) {
  spec.validate();
  if (spec.kind == NoiseKind::gaussian) return add_gaussian_noise(image, spec.sigma, spec.seed);
  return add_salt_pepper(image, spec.fraction, spec.kind, spec.seed);
}

std::vector<Sample> corrupt_training_subset(std::vector<Sample> dataset, std::size_t subset_count,
                                            std::uint64_t seed) {
  if (subset_count > dataset.size()) {
    throw std::invalid_argument("corrupt_training_subset: subset larger than dataset");
  }
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> idx(dataset.size());
  for (std::size_t k = 0; k < idx.size(); ++k) idx[k] = k;
  for (std::size_t k = 0; k < subset_count; ++k) {
    std::uniform_int_distribution<std::size_t> pick(k, idx.size() - 1);
    std::swap(idx[k], idx[pick(rng)]);
  }
  for (std::size_t k = 0; k < subset_count; ++k) {
    Sample& s = dataset[idx[k]];
    const bool gaussian = std::bernoulli_distribution(0.5)(rng);
    const std::uint64_t noise_seed = derive_seed(seed, idx[k]);
    s.image = gaussian ? add_gaussian_noise(s.image, 0.05, noise_seed)
                       : add_salt_pepper(s.image, 0.01, NoiseKind::both, noise_seed);
  }
  return dataset;
}

Dataset make_dataset(std::size_t train_count, std::size_t test_count, std::size_t size,
                     std::uint64_t seed) {
  Dataset ds;
  auto all = generate_cells(train_count + test_count, size, seed);
  ds.train.assign(std::make_move_iterator(all.begin()),
                  std::make_move_iterator(all.begin() + static_cast<std::ptrdiff_t>(train_count)));
  ds.test.assign(std::make_move_iterator(all.begin() + static_cast<std::ptrdiff_t>(train_count)),
                 std::make_move_iterator(all.end()));
  ds.manifest["generator"] = "cells";
  ds.manifest["seed"] = std::to_string(seed);
  ds.manifest["size"] = std::to_string(size);
  ds.manifest["train_count"] = std::to_string(train_count);
  ds.manifest["test_count"] = std::to_string(test_count);
  return ds;
}

namespace {

std::string sample_name(std::size_t k) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04zu", k);
  return buf;
}

}  // namespace

void save_dataset(const std::filesystem::path& dir, const Dataset& ds) {
  namespace fs = std::filesystem;
  fs::create_directories(dir / "images");
  fs::create_directories(dir / "labels");
  std::ofstream manifest(dir / "manifest.txt");
  if (!manifest) throw std::runtime_error("cannot write " + (dir / "manifest.txt").string());
  for (const auto& [k, v] : ds.manifest) {
    if (k.rfind("split.", 0) == 0 || k.rfind("seed.", 0) == 0) continue;
    manifest << k << "=" << v << "\n";
  }
  const std::uint64_t base = ds.manifest.count("seed") ? std::stoull(ds.manifest.at("seed")) : 0;
  std::size_t k = 0;
  auto emit = [&](const std::vector<Sample>& part, const char* split) {
    for (const Sample& s : part) {
      const std::string name = sample_name(k);
      netpbm::write_ppm(dir / "images" / (name + ".ppm"), s.image);
      netpbm::write_pgm(dir / "labels" / (name + ".pgm"), s.label);
      manifest << "split." << name << "=" << split << "\n";
      manifest << "seed." << name << "=" << derive_seed(base, k) << "\n";
      ++k;
    }
  };
  emit(ds.train, "train");
  emit(ds.test, "test");
}

Dataset load_dataset(const std::filesystem::path& dir) {
  std::ifstream manifest(dir / "manifest.txt");
  if (!manifest) throw std::runtime_error("no dataset manifest in " + dir.string());
  Dataset ds;
  std::string line;
  while (std::getline(manifest, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw std::runtime_error("malformed manifest line: " + line);
    ds.manifest[line.substr(0, eq)] = line.substr(eq + 1);
  }
  for (const auto& [key, split] : ds.manifest) {
    if (key.rfind("split.", 0) != 0) continue;
    const std::string name = key.substr(6);
    Sample s{netpbm::read_ppm(dir / "images" / (name + ".ppm")),
             netpbm::read_pgm(dir / "labels" / (name + ".pgm"))};
    if (split == "train") {
      ds.train.push_back(std::move(s));
    } else if (split == "test") {
      ds.test.push_back(std::move(s));
    } else {
      throw std::runtime_error("unknown split '" + split + "' for sample " + name);
    }
  }
  return ds;
}

}  // namespace tvseg
