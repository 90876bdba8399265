#pragma once

// Binary persistence. All integers and reals are little-endian; reals are
// IEEE-754 binary64.
//
// RBM file:
//   "RBMADRBM"  u32 version
//   record: u64 M, u64 K, f64 a[M], f64 b[K], f64 W[M*K] (row-major)
//
// Detector model file:
//   "RBMADMDL"  u32 version
//   u64 H, u64 W
//   u32 n_scales, f64 ratio[n_scales]
//   u32 patch_h, u32 patch_w, f64 overlap
//   u32 cluster_hidden, u32 detect_hidden
//   f64 learning_rate, u32 cd_steps, u32 epochs, u32 batch_size,
//   f64 init_weight_std, u8 persistent, f64 momentum, f64 weight_decay
//   f64 beta, u32 gamma, u32 chunk_length, u32 update_epochs, u64 seed
//   u32 len, char kernel[len]          interpolation kernel name
//   per scale:
//     f64 ratio, clustering RBM record
//     u32 rows, u32 cols, i32 labels[rows*cols] (row-major)
//     u32 n_clusters, then per cluster in ascending label order:
//       i32 label, RBM record
//
// Volume files (detections / fused errors):
//   "RBMADIND" or "RBMADERR"  u32 version
//   u64 L, u64 H, u64 W, u32 chunk_length, u32 gamma
//   u8 z[L*H*W]  or  f64 e[L*H*W]

#include <cstdint>
#include <filesystem>
#include <string>

#include "rbmad/detector.hpp"
#include "rbmad/rbm.hpp"
#include "rbmad/volume.hpp"

namespace rbmad {

inline constexpr std::uint32_t kFormatVersion = 1;

std::string serialize_rbm(const RbmParams& params);
RbmParams deserialize_rbm(const std::string& bytes);
void save_rbm(const std::filesystem::path& path, const RbmParams& params);
RbmParams load_rbm(const std::filesystem::path& path);

std::string serialize_model(const DetectorModel& model);
DetectorModel deserialize_model(const std::string& bytes);
void save_model(const std::filesystem::path& path, const DetectorModel& model);
DetectorModel load_model(const std::filesystem::path& path);

// Throws if the model's patch size differs from the given configuration.
void ensure_patch_compatible(const DetectorModel& model, const ScaleConfig& scales);

struct VolumeHeader {
  std::uint32_t chunk_length = 0;
  std::uint32_t gamma = 0;
};

void save_indicator(const std::filesystem::path& path, const IndicatorTensor& z,
                    const VolumeHeader& header);
IndicatorTensor load_indicator(const std::filesystem::path& path, VolumeHeader* header = nullptr);
void save_errors(const std::filesystem::path& path, const ErrorTensor& e,
                 const VolumeHeader& header);
ErrorTensor load_errors(const std::filesystem::path& path, VolumeHeader* header = nullptr);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& bytes);

}  // namespace rbmad
