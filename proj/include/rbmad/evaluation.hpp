#pragma once

// Frame-level, pixel-level and dual-pixel ROC evaluation.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "rbmad/patches.hpp"
#include "rbmad/volume.hpp"

namespace rbmad {

struct GroundTruth {
  std::vector<std::uint8_t> frame_labels;  // 1 = anomalous frame
  std::optional<IndicatorTensor> masks;    // per-pixel anomaly masks

  void validate() const;
};

// Points ordered by threshold descending; the first threshold is +inf.
struct RocCurve {
  std::vector<double> thresholds;
  std::vector<double> fpr;
  std::vector<double> tpr;

  std::size_t size() const { return fpr.size(); }
};

struct RocResult {
  RocCurve curve;
  double auc = 0.0;
  std::optional<double> eer;  // absent when the curve never reaches FPR = 1 - TPR
};

inline constexpr double kCoverageFraction = 0.4;

double frame_score(const Image& map);
// Per-frame maxima of a volume.
std::vector<double> frame_scores(const ErrorTensor& errors);

// Trapezoidal area in curve order.
double trapezoid_auc(const RocCurve& curve);
// FPR at the first crossing of FPR = 1 - TPR, interpolated linearly.
std::optional<double> equal_error_rate(const RocCurve& curve);

// Sweeps every distinct score; equal scores enter together. Labels are 0/1
// and both classes must be present.
RocResult roc_auc_eer(std::span<const double> scores, std::span<const std::uint8_t> labels);

RocResult frame_level_eval(std::span<const double> frame_scores,
                           std::span<const std::uint8_t> frame_labels);
// Binary variant: a frame scores 1 if any voxel is set.
RocResult frame_level_eval(const IndicatorTensor& detections,
                           std::span<const std::uint8_t> frame_labels);

struct FrameOverlap {
  std::int64_t detected = 0;   // detected pixels
  std::int64_t truth = 0;      // ground-truth anomaly pixels
  std::int64_t overlap = 0;    // detected and true

  double coverage() const;     // overlap / truth, 0 if truth is empty
  double precision() const;    // overlap / detected, 0 if nothing detected
};

FrameOverlap frame_overlap(const IndicatorTensor& detections, const IndicatorTensor& masks,
                           Eigen::Index t);

// Anomalous frame: TP iff coverage >= 40% and precision >= alpha.
bool localized_true_positive(const FrameOverlap& overlap, double alpha);

struct RatePoint {
  double fpr = 0.0;
  double tpr = 0.0;
};

// One operating point from a detection volume covering the whole sequence.
// Normal frames are false positives if anything is detected.
RatePoint localization_point(const IndicatorTensor& detections, const GroundTruth& gt,
                             double alpha);

struct SweepOptions {
  int gamma = 10;
  int chunk_length = 20;
  std::vector<double> thresholds;  // empty: quantile_thresholds(errors, 64)
};

// Descending thresholds: +inf, quantiles of the error values, and the minimum.
std::vector<double> quantile_thresholds(const ErrorTensor& errors, int count);

// Re-thresholds the fused errors at every sweep value, re-applies gamma
// filtering chunk by chunk, and collects localization operating points.
RocResult pixel_level_eval(const ErrorTensor& errors, const GroundTruth& gt,
                           const SweepOptions& options);
// As pixel_level_eval with the extra precision rule; the EER is not reported.
RocResult dual_pixel_eval(const ErrorTensor& errors, const GroundTruth& gt,
                          const SweepOptions& options, double alpha = 0.05);

// Shared sweep behind the two localization levels.
RocResult localization_sweep(const ErrorTensor& errors, const GroundTruth& gt,
                             const SweepOptions& options, double alpha);

}  // namespace rbmad
