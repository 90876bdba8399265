#pragma once

// Two-phase anomaly detector. Training clusters patch locations per scale
// and fits one RBM per cluster; detection scores chunks of frames by average
// patch reconstruction error, fuses scales by max, thresholds at beta and
// removes components that do not span gamma consecutive frames.

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "rbmad/clustering.hpp"
#include "rbmad/patches.hpp"
#include "rbmad/rbm.hpp"
#include "rbmad/volume.hpp"

namespace rbmad {

struct DetectorConfig {
  ScaleConfig scales;
  int cluster_hidden = 4;
  int detect_hidden = 100;
  TrainConfig train;  // shared by the clustering and detection RBMs; seed is ignored
  double beta = 0.003;
  int gamma = 10;
  int chunk_length = 20;
  int update_epochs = 20;
  std::uint64_t seed = 0;

  void validate() const;
  bool operator==(const DetectorConfig&) const = default;
};

struct ScaleModel {
  double ratio = 1.0;
  RbmParams cluster_rbm;
  ClusterMap cluster_map;
  std::map<int, RbmParams> detectors;  // cluster label -> psi_c

  bool operator==(const ScaleModel&) const = default;
};

struct DetectorModel {
  Eigen::Index frame_h = 0;
  Eigen::Index frame_w = 0;
  DetectorConfig config;
  std::string interpolation = "bilinear";
  std::vector<ScaleModel> scales;

  // Throws if a cluster lacks an RBM or dimensions disagree.
  void validate() const;
  bool operator==(const DetectorModel&) const = default;
};

// Mixes a base seed with stream coordinates (splitmix64 finalizer).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0);

DetectorModel train_detector(std::span<const Frame> frames, const DetectorConfig& config);

struct PatchError {
  Vector error_block;  // |x - x~|
  double average = 0;  // ||error_block||_2 / (h*w)
};

PatchError patch_error(const Vector& patch, const RbmParams& params);
// Average errors of every row.
Vector patch_errors(const RowMatrix& patches, const RbmParams& params);

// Fused per-pixel average error map of one frame at the model resolution.
Image score_frame(const Frame& frame, const DetectorModel& model);

struct ChunkScores {
  ErrorTensor errors;     // fused average errors
  IndicatorTensor raw;    // errors >= beta
};

ChunkScores score_chunk(std::span<const Frame> chunk, const DetectorModel& model);
ChunkScores score_chunk(std::span<const Frame> chunk, const DetectorModel& model, double beta);

// Per scale, per cluster label: pooled patches of the chunk.
using ClusterPatches = std::vector<std::map<int, RowMatrix>>;

ClusterPatches collect_cluster_patches(std::span<const Frame> chunk, const DetectorModel& model);

// Continues CD training of each psi_c on its new patches for `epochs` passes.
void incremental_update(DetectorModel& model, const ClusterPatches& patches, int epochs,
                        std::uint64_t seed);

enum class DetectMode { offline, streaming };

struct ChunkResult {
  std::size_t first_frame = 0;
  ErrorTensor errors;
  IndicatorTensor raw;
  IndicatorTensor filtered;

  // Fused error where the filtered indicator is set, else 0.
  ErrorTensor final_scores() const { return mask_errors(errors, filtered); }
};

// Splits frames into non-overlapping chunks of config.chunk_length (the last
// may be shorter). Streaming mode updates `model` after scoring each chunk.
std::vector<ChunkResult> detect_stream(std::span<const Frame> frames, DetectorModel& model,
                                       DetectMode mode);

// The chunk results laid end to end over the whole sequence.
struct StreamVolumes {
  ErrorTensor errors;
  IndicatorTensor raw;
  IndicatorTensor filtered;
};
StreamVolumes stitch_chunks(const std::vector<ChunkResult>& chunks);

}  // namespace rbmad
