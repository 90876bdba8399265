#pragma once

// Dense L x H x W volumes and 3D connected-component filtering.

#include <cstdint>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

namespace rbmad {

template <typename T>
struct Volume {
  Eigen::Index frames = 0;
  Eigen::Index height = 0;
  Eigen::Index width = 0;
  std::vector<T> data;  // frame-major, then row-major

  Volume() = default;
  Volume(Eigen::Index l, Eigen::Index h, Eigen::Index w, T fill = T{})
      : frames(l), height(h), width(w), data(static_cast<std::size_t>(l * h * w), fill) {}

  std::size_t offset(Eigen::Index t, Eigen::Index i, Eigen::Index j) const {
    return static_cast<std::size_t>((t * height + i) * width + j);
  }
  T& at(Eigen::Index t, Eigen::Index i, Eigen::Index j) { return data[offset(t, i, j)]; }
  const T& at(Eigen::Index t, Eigen::Index i, Eigen::Index j) const { return data[offset(t, i, j)]; }
  std::size_t frame_size() const { return static_cast<std::size_t>(height * width); }
  bool same_shape(const auto& other) const {
    return frames == other.frames && height == other.height && width == other.width;
  }

  bool operator==(const Volume&) const = default;
};

// Appends the frames of src to dst; an empty dst takes src's frame size.
template <typename T>
void append_frames(Volume<T>& dst, const Volume<T>& src) {
  if (dst.frames == 0) {
    dst.height = src.height;
    dst.width = src.width;
  } else if (dst.height != src.height || dst.width != src.width) {
    throw std::invalid_argument("append_frames: frame size mismatch");
  }
  dst.data.insert(dst.data.end(), src.data.begin(), src.data.end());
  dst.frames += src.frames;
}

using ErrorTensor = Volume<double>;           // fused average patch errors
using IndicatorTensor = Volume<std::uint8_t>;  // Z, entries 0/1

struct Voxel {
  Eigen::Index t = 0, i = 0, j = 0;
  bool operator==(const Voxel&) const = default;
  auto operator<=>(const Voxel&) const = default;
};

using Component = std::vector<Voxel>;

// z = 1 where error >= beta.
IndicatorTensor threshold_errors(const ErrorTensor& errors, double beta);

// 26-connected components of the 1-voxels. Voxels inside a component are in
// raster order; components are ordered by their first voxel.
std::vector<Component> connected_components_3d(const IndicatorTensor& z);

// Length of the longest run of consecutive frame indices touched by the component.
Eigen::Index longest_frame_run(const Component& component);

// Keeps components whose longest frame run is >= gamma; all other voxels become 0.
IndicatorTensor filter_components(const std::vector<Component>& components, int gamma,
                                  const IndicatorTensor& z);

// Convenience: components + filtering.
IndicatorTensor filter_by_span(const IndicatorTensor& z, int gamma);

// errors where z = 1, else 0.
ErrorTensor mask_errors(const ErrorTensor& errors, const IndicatorTensor& z);

}  // namespace rbmad
