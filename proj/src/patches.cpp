#include "rbmad/patches.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace rbmad {

namespace {

int integer_stride(int patch, double overlap) {
  const double raw = patch * (1.0 - overlap);
  const double rounded = std::round(raw);
  if (std::abs(raw - rounded) > 1e-9 || rounded < 1.0) {
    throw std::invalid_argument("overlap " + std::to_string(overlap) + " on patch extent " +
                                std::to_string(patch) + " does not give a positive integer stride");
  }
  return static_cast<int>(rounded);
}

}  // namespace

void ScaleConfig::validate() const {
  if (ratios.empty()) throw std::invalid_argument("scale config: no ratios");
  for (double r : ratios) {
    if (!(r > 0.0 && r <= 1.0)) {
      throw std::invalid_argument("scale config: ratio must be in (0,1], got " + std::to_string(r));
    }
  }
  if (patch_h < 1 || patch_w < 1) throw std::invalid_argument("scale config: patch must be >= 1x1");
  if (!(overlap_fraction >= 0.0 && overlap_fraction < 1.0)) {
    throw std::invalid_argument("scale config: overlap must be in [0,1)");
  }
  integer_stride(patch_h, overlap_fraction);
  integer_stride(patch_w, overlap_fraction);
}

int ScaleConfig::stride_rows() const { return integer_stride(patch_h, overlap_fraction); }
int ScaleConfig::stride_cols() const { return integer_stride(patch_w, overlap_fraction); }

Frame normalize_frame(const Eigen::Matrix<std::uint32_t, Eigen::Dynamic, Eigen::Dynamic,
                                          Eigen::RowMajor>& raw,
                      std::uint32_t max_value, std::size_t index) {
  if (max_value == 0) throw std::invalid_argument("normalize_frame: max_value must be positive");
  Frame frame;
  frame.index = index;
  frame.pixels.resize(raw.rows(), raw.cols());
  for (Eigen::Index r = 0; r < raw.rows(); ++r) {
    for (Eigen::Index c = 0; c < raw.cols(); ++c) {
      const std::uint32_t value = raw(r, c);
      if (value > max_value) {
        throw std::out_of_range("normalize_frame: value " + std::to_string(value) + " at (" +
                                std::to_string(r) + "," + std::to_string(c) + ") exceeds " +
                                std::to_string(max_value));
      }
      frame.pixels(r, c) = static_cast<double>(value) / static_cast<double>(max_value);
    }
  }
  return frame;
}

Image resize_bilinear(const Image& src, Eigen::Index out_h, Eigen::Index out_w) {
  if (src.size() == 0) throw std::invalid_argument("resize_bilinear: empty source");
  if (out_h < 1 || out_w < 1) throw std::invalid_argument("resize_bilinear: empty target");
  if (out_h == src.rows() && out_w == src.cols()) return src;

  struct Tap {
    Eigen::Index lo, hi;
    double frac;
  };
  auto taps = [](Eigen::Index n_out, Eigen::Index n_in) {
    std::vector<Tap> out(static_cast<std::size_t>(n_out));
    const double step = static_cast<double>(n_in) / static_cast<double>(n_out);
    for (Eigen::Index o = 0; o < n_out; ++o) {
      double x = (static_cast<double>(o) + 0.5) * step - 0.5;
      x = std::clamp(x, 0.0, static_cast<double>(n_in - 1));
      const auto lo = static_cast<Eigen::Index>(std::floor(x));
      const Eigen::Index hi = std::min(lo + 1, n_in - 1);
      out[static_cast<std::size_t>(o)] = {lo, hi, x - static_cast<double>(lo)};
    }
    return out;
  };
  const auto ty = taps(out_h, src.rows());
  const auto tx = taps(out_w, src.cols());

  Image out(out_h, out_w);
  for (Eigen::Index r = 0; r < out_h; ++r) {
    const Tap& y = ty[static_cast<std::size_t>(r)];
    for (Eigen::Index c = 0; c < out_w; ++c) {
      const Tap& x = tx[static_cast<std::size_t>(c)];
      const double top = (1.0 - x.frac) * src(y.lo, x.lo) + x.frac * src(y.lo, x.hi);
      const double bottom = (1.0 - x.frac) * src(y.hi, x.lo) + x.frac * src(y.hi, x.hi);
      out(r, c) = (1.0 - y.frac) * top + y.frac * bottom;
    }
  }
  return out;
}

Eigen::Index scaled_extent(Eigen::Index extent, double ratio) {
  return static_cast<Eigen::Index>(std::llround(static_cast<double>(extent) * ratio));
}

Frame rescale_frame(const Frame& frame, double ratio) {
  if (!(ratio > 0.0 && ratio <= 1.0)) {
    throw std::invalid_argument("rescale_frame: ratio must be in (0,1], got " +
                                std::to_string(ratio));
  }
  const Eigen::Index h = scaled_extent(frame.height(), ratio);
  const Eigen::Index w = scaled_extent(frame.width(), ratio);
  if (h < 1 || w < 1) throw std::invalid_argument("rescale_frame: scaled frame is empty");
  Frame out;
  out.index = frame.index;
  out.pixels = resize_bilinear(frame.pixels, h, w).cwiseMax(0.0).cwiseMin(1.0);
  return out;
}

std::vector<Eigen::Index> patch_offsets(Eigen::Index extent, int patch, int stride) {
  if (patch < 1 || stride < 1) throw std::invalid_argument("patch_offsets: non-positive size");
  if (extent < patch) {
    throw std::invalid_argument("frame extent " + std::to_string(extent) +
                                " is smaller than patch extent " + std::to_string(patch));
  }
  std::vector<Eigen::Index> offsets;
  for (Eigen::Index pos = 0; pos + patch <= extent; pos += stride) offsets.push_back(pos);
  if (offsets.back() + patch < extent) offsets.push_back(extent - patch);
  return offsets;
}

PatchGrid extract_patches(const Frame& scaled, const ScaleConfig& cfg, double scale) {
  cfg.validate();
  PatchGrid grid;
  grid.scale = scale;
  grid.patch_h = cfg.patch_h;
  grid.patch_w = cfg.patch_w;
  grid.stride_r = cfg.stride_rows();
  grid.stride_c = cfg.stride_cols();
  grid.frame_h = scaled.height();
  grid.frame_w = scaled.width();
  grid.row_offsets = patch_offsets(grid.frame_h, grid.patch_h, grid.stride_r);
  grid.col_offsets = patch_offsets(grid.frame_w, grid.patch_w, grid.stride_c);

  grid.patches.resize(grid.n_patches(), cfg.patch_size());
  for (Eigen::Index i = 0; i < grid.n_rows(); ++i) {
    const Eigen::Index top = grid.row_offsets[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < grid.n_cols(); ++j) {
      const Eigen::Index left = grid.col_offsets[static_cast<std::size_t>(j)];
      double* dst = grid.patches.row(grid.location(i, j)).data();
      for (int r = 0; r < grid.patch_h; ++r) {
        const double* src = scaled.pixels.row(top + r).data() + left;
        std::copy(src, src + grid.patch_w, dst + static_cast<std::ptrdiff_t>(r) * grid.patch_w);
      }
    }
  }
  return grid;
}

PatchGrid extract_patches_at_scale(const Frame& frame, const ScaleConfig& cfg, double scale) {
  if (scale == 1.0) return extract_patches(frame, cfg, scale);
  return extract_patches(rescale_frame(frame, scale), cfg, scale);
}

namespace {

template <typename ValueAt>
Image accumulate(const PatchGrid& grid, ValueAt value_at) {
  Image sum = Image::Zero(grid.frame_h, grid.frame_w);
  Image count = Image::Zero(grid.frame_h, grid.frame_w);
  for (Eigen::Index i = 0; i < grid.n_rows(); ++i) {
    const Eigen::Index top = grid.row_offsets[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < grid.n_cols(); ++j) {
      const Eigen::Index left = grid.col_offsets[static_cast<std::size_t>(j)];
      const Eigen::Index loc = grid.location(i, j);
      for (int r = 0; r < grid.patch_h; ++r) {
        for (int c = 0; c < grid.patch_w; ++c) {
          sum(top + r, left + c) += value_at(loc, r * grid.patch_w + c);
          count(top + r, left + c) += 1.0;
        }
      }
    }
  }
  if ((count.array() == 0.0).any()) {
    throw std::invalid_argument("assemble: some pixels are not covered by any patch");
  }
  return sum.cwiseQuotient(count);
}

}  // namespace

Image assemble_map(std::span<const double> values, const PatchGrid& grid) {
  if (static_cast<Eigen::Index>(values.size()) != grid.n_patches()) {
    throw std::invalid_argument("assemble_map: expected " + std::to_string(grid.n_patches()) +
                                " values, got " + std::to_string(values.size()));
  }
  return accumulate(grid, [&](Eigen::Index loc, int) {
    return values[static_cast<std::size_t>(loc)];
  });
}

Image assemble_blocks(const RowMatrix& blocks, const PatchGrid& grid) {
  if (blocks.rows() != grid.n_patches() ||
      blocks.cols() != Eigen::Index{grid.patch_h} * grid.patch_w) {
    throw std::invalid_argument("assemble_blocks: block matrix does not match the grid");
  }
  return accumulate(grid, [&](Eigen::Index loc, int k) { return blocks(loc, k); });
}

Image upsample_map(const Image& map, Eigen::Index out_h, Eigen::Index out_w) {
  if (out_h < map.rows() || out_w < map.cols()) {
    throw std::invalid_argument("upsample_map: target " + std::to_string(out_h) + "x" +
                                std::to_string(out_w) + " is smaller than source " +
                                std::to_string(map.rows()) + "x" + std::to_string(map.cols()));
  }
  if (map.size() == 0) throw std::invalid_argument("upsample_map: empty source");
  if (out_h == map.rows() && out_w == map.cols()) return map;
  Image out(out_h, out_w);
  for (Eigen::Index r = 0; r < out_h; ++r) {
    const Eigen::Index sr = r * map.rows() / out_h;
    for (Eigen::Index c = 0; c < out_w; ++c) out(r, c) = map(sr, c * map.cols() / out_w);
  }
  return out;
}

Image fuse_scales_max(std::span<const Image> maps) {
  if (maps.empty()) throw std::invalid_argument("fuse_scales_max: no maps");
  Image out = maps.front();
  for (std::size_t k = 1; k < maps.size(); ++k) {
    if (maps[k].rows() != out.rows() || maps[k].cols() != out.cols()) {
      throw std::invalid_argument("fuse_scales_max: shape mismatch");
    }
    out = out.cwiseMax(maps[k]);
  }
  return out;
}

}  // namespace rbmad
