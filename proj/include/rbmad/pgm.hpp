#pragma once

// Portable graymap (PGM) reading and writing. Binary (P5) and plain (P2)
// files with 8- or 16-bit samples are accepted; output is always P5.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "rbmad/patches.hpp"

namespace rbmad {

using RawImage = Eigen::Matrix<std::uint32_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct GrayImage {
  RawImage samples;
  std::uint32_t max_value = 255;
};

GrayImage read_pgm(const std::filesystem::path& path);
GrayImage parse_pgm(const std::string& bytes, const std::string& name = "<memory>");

void write_pgm(const std::filesystem::path& path, const GrayImage& image);
std::string encode_pgm(const GrayImage& image);

// Quantizes [0,1] values (clamped) to 0..max_value with rounding.
GrayImage quantize(const Image& values, std::uint32_t max_value = 255);

}  // namespace rbmad
