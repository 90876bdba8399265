#include "rbmad/report.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "rbmad/config.hpp"

namespace rbmad {

void write_scores_csv(std::ostream& out, const ErrorTensor& errors,
                      const IndicatorTensor& detections) {
  if (!errors.same_shape(detections)) throw std::invalid_argument("scores csv: shape mismatch");
  const std::vector<double> scores = frame_scores(errors);
  out << "frame_index,frame_score,n_abnormal_pixels\n";
  const std::size_t n = detections.frame_size();
  for (Eigen::Index t = 0; t < errors.frames; ++t) {
    const auto first = detections.data.begin() + static_cast<std::ptrdiff_t>(t * n);
    const auto count = std::count(first, first + static_cast<std::ptrdiff_t>(n), std::uint8_t{1});
    out << t << ',' << format_double(scores[static_cast<std::size_t>(t)]) << ',' << count << '\n';
  }
}

void write_roc_header(std::ostream& out) { out << "level,threshold,fpr,tpr\n"; }

void write_roc_rows(std::ostream& out, const std::string& level, const RocResult& roc) {
  for (std::size_t k = 0; k < roc.curve.size(); ++k) {
    const double th = roc.curve.thresholds[k];
    out << level << ',' << (std::isinf(th) ? std::string("inf") : format_double(th)) << ','
        << format_double(roc.curve.fpr[k]) << ',' << format_double(roc.curve.tpr[k]) << '\n';
  }
}

void write_summary_header(std::ostream& out) { out << "level,auc,eer\n"; }

void write_summary_row(std::ostream& out, const std::string& level, const RocResult& roc) {
  out << level << ',' << format_double(roc.auc) << ',';
  if (roc.eer) out << format_double(*roc.eer);
  out << '\n';
}

GrayImage detection_overlay(const Image& frame, const IndicatorTensor& detections,
                            Eigen::Index t) {
  if (frame.rows() != detections.height || frame.cols() != detections.width) {
    throw std::invalid_argument("overlay: frame and detections differ in size");
  }
  Image shaded = frame * 0.75;
  for (Eigen::Index i = 0; i < frame.rows(); ++i) {
    for (Eigen::Index j = 0; j < frame.cols(); ++j) {
      if (detections.at(t, i, j)) shaded(i, j) = 1.0;
    }
  }
  return quantize(shaded);
}

GrayImage cluster_map_image(const ClusterMap& map) {
  GrayImage img;
  img.max_value = 255;
  img.samples.resize(map.labels.rows(), map.labels.cols());
  const auto n = static_cast<double>(std::max<Eigen::Index>(1, map.n_clusters() - 1));
  for (Eigen::Index k = 0; k < map.labels.size(); ++k) {
    const auto rank = std::lower_bound(map.unique_labels.begin(), map.unique_labels.end(),
                                       map.labels.data()[k]) -
                      map.unique_labels.begin();
    img.samples.data()[k] = static_cast<std::uint32_t>(std::lround(255.0 * static_cast<double>(rank) / n));
  }
  return img;
}

}  // namespace rbmad
