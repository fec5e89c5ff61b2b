#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "tvseg/field.hpp"

namespace tvseg {

enum CellClass : std::uint8_t { kBackground = 0, kCytoplasm = 1, kNucleus = 2 };
inline constexpr std::size_t kCellClasses = 3;

/// RGB image in [0,1] with its ground-truth label map.
struct Sample {
  Field3 image;
  LabelMap label;
};

/// Stained white-blood-cell-like images: a nucleus ellipse inside a larger
/// cytoplasm ellipse on a textured background with red-cell distractors.
/// `size` must be >= 32 and divisible by 4.
std::vector<Sample> generate_cells(std::size_t count, std::size_t size, std::uint64_t seed);

enum class NoiseKind { gaussian, salt, pepper, both };

const char* to_string(NoiseKind k);
NoiseKind parse_noise_kind(const std::string& s);

struct NoiseSpec {
  NoiseKind kind = NoiseKind::gaussian;
  double sigma = 0.0;     // gaussian
  double fraction = 0.0;  // salt / pepper / both
  std::uint64_t seed = 0;

  void validate() const;
};

/// i.i.d. N(0, sigma^2) per channel and pixel, then clipped to [0,1].
Field3 add_gaussian_noise(const Field3& image, double sigma, std::uint64_t seed);

/// Sets floor(fraction*N1*N2) distinct pixels, all channels, to 1 (salt), 0
/// (pepper), or half each (both: the first half of the drawn pixels pepper).
Field3 add_salt_pepper(const Field3& image, double fraction, NoiseKind kind, std::uint64_t seed);

Field3 apply_noise(const Field3& image, const NoiseSpec& spec);

/// Picks `subset_count` samples and gives each, with equal probability,
/// gaussian noise (sigma 0.05) or salt-and-pepper noise on 1% of pixels.
std::vector<Sample> corrupt_training_subset(std::vector<Sample> dataset, std::size_t subset_count,
                                            std::uint64_t seed);

/// Derives an independent stream seed from a base seed and an index.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index);

/// On-disk dataset: images/NNNN.ppm, labels/NNNN.pgm and manifest.txt with
/// key=value lines.
struct Dataset {
  std::vector<Sample> train;
  std::vector<Sample> test;
  std::map<std::string, std::string> manifest;
};

Dataset make_dataset(std::size_t train_count, std::size_t test_count, std::size_t size,
                     std::uint64_t seed);
void save_dataset(const std::filesystem::path& dir, const Dataset& ds);
Dataset load_dataset(const std::filesystem::path& dir);

}  // namespace tvseg
