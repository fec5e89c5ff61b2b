#include "tvseg/netpbm.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>
#include <vector>

namespace tvseg::netpbm {

namespace {

struct Header {
  std::size_t width = 0;
  std::size_t height = 0;
  std::size_t payload_offset = 0;
};

std::vector<unsigned char> slurp(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(Error::Kind::io, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

void spit(const std::filesystem::path& path, const std::string& header,
          const std::vector<unsigned char>& payload) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(Error::Kind::io, "cannot write " + path.string());
  os << header;
  os.write(reinterpret_cast<const char*>(payload.data()), static_cast<std::streamsize>(payload.size()));
  if (!os) throw Error(Error::Kind::io, "failed writing " + path.string());
}

Header parse_header(const std::vector<unsigned char>& bytes, const char* magic,
                    const std::filesystem::path& path) {
  if (bytes.size() < 2 || bytes[0] != magic[0] || bytes[1] != magic[1]) {
    throw Error(Error::Kind::header, path.string() + ": expected magic " + magic);
  }
  std::size_t pos = 2;
  auto next_number = [&]() -> std::size_t {
    for (;;) {
      while (pos < bytes.size() && std::isspace(bytes[pos])) ++pos;
      if (pos < bytes.size() && bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
        continue;
      }
      break;
    }
    if (pos >= bytes.size() || !std::isdigit(bytes[pos])) {
      throw Error(Error::Kind::header, path.string() + ": malformed header");
    }
    std::size_t v = 0;
    while (pos < bytes.size() && std::isdigit(bytes[pos])) {
      v = v * 10 + static_cast<std::size_t>(bytes[pos] - '0');
      if (v > 1u << 24) throw Error(Error::Kind::header, path.string() + ": header value too large");
      ++pos;
    }
    return v;
  };
  Header h;
  h.width = next_number();
  h.height = next_number();
  const std::size_t maxval = next_number();
  if (h.width == 0 || h.height == 0) throw Error(Error::Kind::header, path.string() + ": empty image");
  if (maxval != 255) {
    throw Error(Error::Kind::maxval, path.string() + ": maxval " + std::to_string(maxval) + " != 255");
  }
  if (pos >= bytes.size() || !std::isspace(bytes[pos])) {
    throw Error(Error::Kind::header, path.string() + ": missing whitespace after maxval");
  }
  h.payload_offset = pos + 1;
  return h;
}

void require_payload(const std::vector<unsigned char>& bytes, const Header& h, std::size_t n,
                     const std::filesystem::path& path) {
  if (bytes.size() - h.payload_offset < n) {
    throw Error(Error::Kind::payload, path.string() + ": truncated payload (" +
                                          std::to_string(bytes.size() - h.payload_offset) + " of " +
                                          std::to_string(n) + " bytes)");
  }
}

}  // namespace

void write_ppm(const std::filesystem::path& path, const Field3& rgb) {
  if (rgb.channels() != 3) throw std::invalid_argument("write_ppm: expected 3 channels");
  const std::size_t plane = rgb.shape().plane();
  std::vector<unsigned char> payload(plane * 3);
  for (std::size_t p = 0; p < plane; ++p) {
    for (std::size_t c = 0; c < 3; ++c) {
      const double v = std::clamp(rgb[c * plane + p], 0.0, 1.0);
      payload[p * 3 + c] = static_cast<unsigned char>(std::lround(v * 255.0));
    }
  }
  spit(path,
       "P6\n" + std::to_string(rgb.width()) + " " + std::to_string(rgb.height()) + "\n255\n",
       payload);
}

Field3 read_ppm(const std::filesystem::path& path) {
  const auto bytes = slurp(path);
  const Header h = parse_header(bytes, "P6", path);
  const std::size_t plane = h.width * h.height;
  require_payload(bytes, h, plane * 3, path);
  Field3 out(Shape{3, h.height, h.width});
  for (std::size_t p = 0; p < plane; ++p) {
    for (std::size_t c = 0; c < 3; ++c) {
      out[c * plane + p] = bytes[h.payload_offset + p * 3 + c] / 255.0;
    }
  }
  return out;
}

void write_pgm(const std::filesystem::path& path, const LabelMap& labels) {
  std::vector<unsigned char> payload(labels.labels().begin(), labels.labels().end());
  spit(path,
       "P5\n" + std::to_string(labels.width()) + " " + std::to_string(labels.height()) + "\n255\n",
       payload);
}

LabelMap read_pgm(const std::filesystem::path& path) {
  const auto bytes = slurp(path);
  const Header h = parse_header(bytes, "P5", path);
  require_payload(bytes, h, h.width * h.height, path);
  LabelMap out(h.height, h.width);
  std::copy_n(bytes.begin() + static_cast<std::ptrdiff_t>(h.payload_offset), out.size(),
              out.labels().begin());
  return out;
}

}  // namespace tvseg::netpbm
