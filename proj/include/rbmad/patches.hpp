#pragma once

// Frames, multi-scale rescaling, overlapping patch grids and the inverse
// assembly of per-patch quantities into pixel maps.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "rbmad/rbm.hpp"

namespace rbmad {

using Image = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Frame {
  Image pixels;  // values in [0,1]
  std::size_t index = 0;

  Eigen::Index height() const { return pixels.rows(); }
  Eigen::Index width() const { return pixels.cols(); }
};

struct ScaleConfig {
  std::vector<double> ratios{1.0, 0.5, 0.25};
  int patch_h = 12;
  int patch_w = 18;
  double overlap_fraction = 0.5;

  // Throws unless ratios are in (0,1] and the overlap gives integer strides.
  void validate() const;
  int stride_rows() const;
  int stride_cols() const;
  Eigen::Index patch_size() const { return Eigen::Index{patch_h} * patch_w; }

  bool operator==(const ScaleConfig&) const = default;
};

struct PatchGrid {
  double scale = 1.0;
  int patch_h = 0;
  int patch_w = 0;
  int stride_r = 0;
  int stride_c = 0;
  Eigen::Index frame_h = 0;  // scaled frame size the grid was cut from
  Eigen::Index frame_w = 0;
  std::vector<Eigen::Index> row_offsets;  // top pixel row of patch row i
  std::vector<Eigen::Index> col_offsets;  // left pixel col of patch column j
  RowMatrix patches;  // one row-major flattened patch per row, location i*n_cols()+j

  Eigen::Index n_rows() const { return static_cast<Eigen::Index>(row_offsets.size()); }
  Eigen::Index n_cols() const { return static_cast<Eigen::Index>(col_offsets.size()); }
  Eigen::Index n_patches() const { return n_rows() * n_cols(); }
  Eigen::Index location(Eigen::Index i, Eigen::Index j) const { return i * n_cols() + j; }
};

// Throws if an entry exceeds max_value.
Frame normalize_frame(const Eigen::Matrix<std::uint32_t, Eigen::Dynamic, Eigen::Dynamic,
                                          Eigen::RowMajor>& raw,
                      std::uint32_t max_value, std::size_t index = 0);

// Bilinear resampling with pixel-centre alignment and edge clamping.
Image resize_bilinear(const Image& src, Eigen::Index out_h, Eigen::Index out_w);

// Scaled size is (round(H*ratio), round(W*ratio)).
Eigen::Index scaled_extent(Eigen::Index extent, double ratio);
Frame rescale_frame(const Frame& frame, double ratio);

// Top-left offsets along one axis. A final flush patch is added when the
// stride does not reach the edge exactly.
std::vector<Eigen::Index> patch_offsets(Eigen::Index extent, int patch, int stride);

// Cuts patches from an already-scaled frame; `scale` is recorded only.
PatchGrid extract_patches(const Frame& scaled, const ScaleConfig& cfg, double scale);
// Rescales first, then cuts.
PatchGrid extract_patches_at_scale(const Frame& frame, const ScaleConfig& cfg, double scale);

// Each pixel receives the mean of the scalar values of all patches covering it.
Image assemble_map(std::span<const double> values, const PatchGrid& grid);
// Each pixel receives the mean of the matching entries of all covering blocks.
Image assemble_blocks(const RowMatrix& blocks, const PatchGrid& grid);

// Nearest-neighbour upsampling; throws if the target is smaller than the source.
Image upsample_map(const Image& map, Eigen::Index out_h, Eigen::Index out_w);

// Element-wise maximum; throws on shape mismatch or an empty list.
Image fuse_scales_max(std::span<const Image> maps);

}  // namespace rbmad
