#pragma once

// Text and image outputs of detection and evaluation runs.

#include <ostream>
#include <string>
#include <vector>

#include "rbmad/clustering.hpp"
#include "rbmad/evaluation.hpp"
#include "rbmad/pgm.hpp"
#include "rbmad/volume.hpp"

namespace rbmad {

// Header: frame_index,frame_score,n_abnormal_pixels
void write_scores_csv(std::ostream& out, const ErrorTensor& errors,
                      const IndicatorTensor& detections);

// Header: level,threshold,fpr,tpr
void write_roc_header(std::ostream& out);
void write_roc_rows(std::ostream& out, const std::string& level, const RocResult& roc);

// Header: level,auc,eer (eer empty when absent)
void write_summary_header(std::ostream& out);
void write_summary_row(std::ostream& out, const std::string& level, const RocResult& roc);

// Detected pixels white, everything else the dimmed frame.
GrayImage detection_overlay(const Image& frame, const IndicatorTensor& detections, Eigen::Index t);

// Cluster labels spread evenly over 0..255 in ascending label order.
GrayImage cluster_map_image(const ClusterMap& map);

}  // namespace rbmad
