#include "rbmad/pgm.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace rbmad {

namespace {

class HeaderReader {
 public:
  HeaderReader(const std::string& bytes, const std::string& name) : bytes_(bytes), name_(name) {}

  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      const char c = bytes_[pos_];
      if (c == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  std::uint64_t number() {
    skip_space_and_comments();
    if (pos_ >= bytes_.size() || !std::isdigit(static_cast<unsigned char>(bytes_[pos_]))) {
      fail("expected a number");
    }
    std::uint64_t value = 0;
    while (pos_ < bytes_.size() && std::isdigit(static_cast<unsigned char>(bytes_[pos_]))) {
      value = value * 10 + static_cast<std::uint64_t>(bytes_[pos_++] - '0');
      if (value > 0xFFFFFFFFULL) fail("number too large");
    }
    return value;
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw std::runtime_error(name_ + ": " + what);
  }

  std::size_t pos_ = 0;

 private:
  const std::string& bytes_;
  const std::string& name_;
};

}  // namespace

GrayImage parse_pgm(const std::string& bytes, const std::string& name) {
  HeaderReader in(bytes, name);
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '2')) {
    in.fail("not a P5/P2 graymap");
  }
  const bool binary = bytes[1] == '5';
  in.pos_ = 2;
  const std::uint64_t width = in.number();
  const std::uint64_t height = in.number();
  const std::uint64_t max_value = in.number();
  if (width == 0 || height == 0) in.fail("empty image");
  if (max_value == 0 || max_value > 65535) in.fail("max value must be in [1,65535]");

  GrayImage img;
  img.max_value = static_cast<std::uint32_t>(max_value);
  img.samples.resize(static_cast<Eigen::Index>(height), static_cast<Eigen::Index>(width));
  const std::size_t count = width * height;

  if (binary) {
    // Exactly one whitespace byte separates the header from the raster.
    if (in.pos_ >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[in.pos_]))) {
      in.fail("malformed header");
    }
    ++in.pos_;
    const std::size_t bytes_per = max_value > 255 ? 2 : 1;
    if (bytes.size() - in.pos_ < count * bytes_per) in.fail("truncated raster");
    const auto* raster = reinterpret_cast<const unsigned char*>(bytes.data() + in.pos_);
    for (std::size_t k = 0; k < count; ++k) {
      std::uint32_t v = bytes_per == 2 ? (std::uint32_t{raster[2 * k]} << 8) | raster[2 * k + 1]
                                       : raster[k];
      if (v > max_value) in.fail("sample exceeds max value");
      img.samples.data()[k] = v;
    }
  } else {
    for (std::size_t k = 0; k < count; ++k) {
      const std::uint64_t v = in.number();
      if (v > max_value) in.fail("sample exceeds max value");
      img.samples.data()[k] = static_cast<std::uint32_t>(v);
    }
  }
  return img;
}

GrayImage read_pgm(const std::filesystem::path& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << file.rdbuf();
  return parse_pgm(buffer.str(), path.string());
}

std::string encode_pgm(const GrayImage& image) {
  if (image.max_value == 0 || image.max_value > 65535) {
    throw std::invalid_argument("encode_pgm: max value must be in [1,65535]");
  }
  std::string out = "P5\n" + std::to_string(image.samples.cols()) + " " +
                    std::to_string(image.samples.rows()) + "\n" +
                    std::to_string(image.max_value) + "\n";
  const bool wide = image.max_value > 255;
  out.reserve(out.size() + static_cast<std::size_t>(image.samples.size()) * (wide ? 2 : 1));
  for (Eigen::Index k = 0; k < image.samples.size(); ++k) {
    const std::uint32_t v = std::min(image.samples.data()[k], image.max_value);
    if (wide) out.push_back(static_cast<char>((v >> 8) & 0xFF));
    out.push_back(static_cast<char>(v & 0xFF));
  }
  return out;
}

void write_pgm(const std::filesystem::path& path, const GrayImage& image) {
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw std::runtime_error("cannot write " + path.string());
  const std::string bytes = encode_pgm(image);
  file.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!file) throw std::runtime_error("write failed: " + path.string());
}

GrayImage quantize(const Image& values, std::uint32_t max_value) {
  GrayImage img;
  img.max_value = max_value;
  img.samples.resize(values.rows(), values.cols());
  for (Eigen::Index k = 0; k < values.size(); ++k) {
    const double v = std::clamp(values.data()[k], 0.0, 1.0);
    img.samples.data()[k] = static_cast<std::uint32_t>(std::lround(v * max_value));
  }
  return img;
}

}  // namespace rbmad
