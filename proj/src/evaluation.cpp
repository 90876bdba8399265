#include "rbmad/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace rbmad {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_labels(std::span<const std::uint8_t> labels, std::size_t expected) {
  if (labels.size() != expected) {
    throw std::invalid_argument("evaluation: " + std::to_string(labels.size()) + " labels for " +
                                std::to_string(expected) + " frames");
  }
}

}  // namespace

void GroundTruth::validate() const {
  if (masks && masks->frames != static_cast<Eigen::Index>(frame_labels.size())) {
    throw std::invalid_argument("ground truth: mask count does not match label count");
  }
}

double frame_score(const Image& map) {
  if (map.size() == 0) return 0.0;
  return map.maxCoeff();
}

std::vector<double> frame_scores(const ErrorTensor& errors) {
  std::vector<double> out(static_cast<std::size_t>(errors.frames), 0.0);
  const std::size_t n = errors.frame_size();
  for (Eigen::Index t = 0; t < errors.frames; ++t) {
    const auto first = errors.data.begin() + static_cast<std::ptrdiff_t>(t * n);
    if (n > 0) out[static_cast<std::size_t>(t)] = *std::max_element(first, first + static_cast<std::ptrdiff_t>(n));
  }
  return out;
}

double trapezoid_auc(const RocCurve& curve) {
  double area = 0.0;
  for (std::size_t k = 1; k < curve.size(); ++k) {
    area += (curve.fpr[k] - curve.fpr[k - 1]) * (curve.tpr[k] + curve.tpr[k - 1]) * 0.5;
  }
  return area;
}

std::optional<double> equal_error_rate(const RocCurve& curve) {
  auto gap = [&](std::size_t k) { return curve.fpr[k] - (1.0 - curve.tpr[k]); };
  for (std::size_t k = 0; k < curve.size(); ++k) {
    const double g = gap(k);
    if (g < 0.0) continue;
    if (k == 0 || g == 0.0) return curve.fpr[k];
    const double g0 = gap(k - 1);
    const double s = -g0 / (g - g0);
    return curve.fpr[k - 1] + s * (curve.fpr[k] - curve.fpr[k - 1]);
  }
  return std::nullopt;
}

RocResult roc_auc_eer(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  check_labels(labels, scores.size());
  const auto positives = static_cast<double>(std::count_if(labels.begin(), labels.end(),
                                                           [](std::uint8_t l) { return l != 0; }));
  const double negatives = static_cast<double>(labels.size()) - positives;
  if (positives == 0.0 || negatives == 0.0) {
    throw std::invalid_argument("roc_auc_eer: both classes must be present");
  }

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  RocResult result;
  RocCurve& c = result.curve;
  c.thresholds.push_back(kInf);
  c.fpr.push_back(0.0);
  c.tpr.push_back(0.0);
  double tp = 0.0;
  double fp = 0.0;
  for (std::size_t k = 0; k < order.size();) {
    const double threshold = scores[order[k]];
    while (k < order.size() && scores[order[k]] == threshold) {
      (labels[order[k]] ? tp : fp) += 1.0;
      ++k;
    }
    c.thresholds.push_back(threshold);
    c.fpr.push_back(fp / negatives);
    c.tpr.push_back(tp / positives);
  }
  result.auc = trapezoid_auc(c);
  result.eer = equal_error_rate(c);
  return result;
}

RocResult frame_level_eval(std::span<const double> scores,
                           std::span<const std::uint8_t> frame_labels) {
  check_labels(frame_labels, scores.size());
  return roc_auc_eer(scores, frame_labels);
}

RocResult frame_level_eval(const IndicatorTensor& detections,
                           std::span<const std::uint8_t> frame_labels) {
  std::vector<double> scores(static_cast<std::size_t>(detections.frames), 0.0);
  const std::size_t n = detections.frame_size();
  for (Eigen::Index t = 0; t < detections.frames; ++t) {
    const auto first = detections.data.begin() + static_cast<std::ptrdiff_t>(t * n);
    scores[static_cast<std::size_t>(t)] =
        std::any_of(first, first + static_cast<std::ptrdiff_t>(n), [](std::uint8_t z) { return z != 0; })
            ? 1.0
            : 0.0;
  }
  return frame_level_eval(scores, frame_labels);
}

double FrameOverlap::coverage() const {
  return truth == 0 ? 0.0 : static_cast<double>(overlap) / static_cast<double>(truth);
}

double FrameOverlap::precision() const {
  return detected == 0 ? 0.0 : static_cast<double>(overlap) / static_cast<double>(detected);
}

FrameOverlap frame_overlap(const IndicatorTensor& detections, const IndicatorTensor& masks,
                           Eigen::Index t) {
  if (detections.height != masks.height || detections.width != masks.width) {
    throw std::invalid_argument("frame_overlap: detection and mask sizes differ");
  }
  FrameOverlap o;
  const std::size_t n = detections.frame_size();
  const std::uint8_t* d = detections.data.data() + t * static_cast<Eigen::Index>(n);
  const std::uint8_t* m = masks.data.data() + t * static_cast<Eigen::Index>(n);
  for (std::size_t k = 0; k < n; ++k) {
    o.detected += d[k] != 0;
    o.truth += m[k] != 0;
    o.overlap += (d[k] != 0 && m[k] != 0);
  }
  return o;
}

bool localized_true_positive(const FrameOverlap& overlap, double alpha) {
  return overlap.truth > 0 && overlap.coverage() >= kCoverageFraction &&
         overlap.precision() >= alpha;
}

RatePoint localization_point(const IndicatorTensor& detections, const GroundTruth& gt,
                             double alpha) {
  gt.validate();
  if (!gt.masks) throw std::invalid_argument("localization evaluation requires pixel masks");
  if (!detections.same_shape(*gt.masks)) {
    throw std::invalid_argument("localization evaluation: detections and masks differ in shape");
  }
  double tp = 0, fp = 0, pos = 0, neg = 0;
  for (Eigen::Index t = 0; t < detections.frames; ++t) {
    const FrameOverlap o = frame_overlap(detections, *gt.masks, t);
    if (gt.frame_labels[static_cast<std::size_t>(t)]) {
      pos += 1;
      tp += localized_true_positive(o, alpha) ? 1 : 0;
    } else {
      neg += 1;
      fp += o.detected > 0 ? 1 : 0;
    }
  }
  if (pos == 0 || neg == 0) {
    throw std::invalid_argument("localization evaluation: both classes must be present");
  }
  return {fp / neg, tp / pos};
}

std::vector<double> quantile_thresholds(const ErrorTensor& errors, int count) {
  if (errors.data.empty()) throw std::invalid_argument("quantile_thresholds: empty errors");
  std::vector<double> values = errors.data;
  std::sort(values.begin(), values.end());
  std::vector<double> out;
  out.push_back(kInf);
  for (int q = count; q >= 1; --q) {
    const double pos = static_cast<double>(q) / static_cast<double>(count + 1) *
                       static_cast<double>(values.size() - 1);
    out.push_back(values[static_cast<std::size_t>(std::llround(pos))]);
  }
  out.push_back(values.front());
  std::sort(out.begin(), out.end(), std::greater<>());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

RocResult localization_sweep(const ErrorTensor& errors, const GroundTruth& gt,
                             const SweepOptions& options, double alpha) {
  if (options.chunk_length < 1) throw std::invalid_argument("sweep: chunk_length must be >= 1");
  std::vector<double> thresholds =
      options.thresholds.empty() ? quantile_thresholds(errors, 64) : options.thresholds;
  std::sort(thresholds.begin(), thresholds.end(), std::greater<>());

  RocResult result;
  for (double beta : thresholds) {
    IndicatorTensor z = threshold_errors(errors, beta);
    // Components never cross chunk boundaries.
    for (Eigen::Index start = 0; start < z.frames; start += options.chunk_length) {
      const Eigen::Index len = std::min<Eigen::Index>(options.chunk_length, z.frames - start);
      IndicatorTensor chunk(len, z.height, z.width);
      const auto first = z.data.begin() + static_cast<std::ptrdiff_t>(z.offset(start, 0, 0));
      std::copy(first, first + static_cast<std::ptrdiff_t>(chunk.data.size()), chunk.data.begin());
      chunk = filter_by_span(chunk, options.gamma);
      std::copy(chunk.data.begin(), chunk.data.end(), first);
    }
    const RatePoint p = localization_point(z, gt, alpha);
    result.curve.thresholds.push_back(beta);
    result.curve.fpr.push_back(p.fpr);
    result.curve.tpr.push_back(p.tpr);
  }
  result.auc = trapezoid_auc(result.curve);
  result.eer = equal_error_rate(result.curve);
  return result;
}

RocResult pixel_level_eval(const ErrorTensor& errors, const GroundTruth& gt,
                           const SweepOptions& options) {
  return localization_sweep(errors, gt, options, 0.0);
}

RocResult dual_pixel_eval(const ErrorTensor& errors, const GroundTruth& gt,
                          const SweepOptions& options, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("dual_pixel_eval: alpha in [0,1]");
  RocResult result = localization_sweep(errors, gt, options, alpha);
  result.eer.reset();
  return result;
}

}  // namespace rbmad
