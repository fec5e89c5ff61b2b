#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include "tvseg/field.hpp"

namespace tvseg::netpbm {

class Error : public std::runtime_error {
 public:
  enum class Kind { io, header, maxval, payload };
  Error(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

/// Binary P6, maxval 255; values scaled by 255 and rounded to nearest.
void write_ppm(const std::filesystem::path& path, const Field3& rgb);
Field3 read_ppm(const std::filesystem::path& path);

/// Binary P5, maxval 255, raw class indices.
void write_pgm(const std::filesystem::path& path, const LabelMap& labels);
LabelMap read_pgm(const std::filesystem::path& path);

}  // namespace tvseg::netpbm
