#pragma once

// Region clustering: a small RBM hashes each patch into a pseudo-label by
// binarizing its hidden posterior; each grid location takes the modal label
// over the training frames.

#include <cstdint>
#include <set>
#include <span>
#include <vector>

#include "rbmad/patches.hpp"
#include "rbmad/rbm.hpp"

namespace rbmad {

using LabelMatrix = Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct ClusterMap {
  double scale = 1.0;
  LabelMatrix labels;          // N_h x N_w, entry c^{i,j}
  std::vector<int> unique_labels;  // ascending

  Eigen::Index n_clusters() const { return static_cast<Eigen::Index>(unique_labels.size()); }
  // Recomputes unique_labels from labels.
  void refresh_unique();
  bool operator==(const ClusterMap&) const = default;
};

// First posterior is the most significant bit; a bit is set iff p > 0.5.
int pseudo_label_from_posterior(const Vector& posterior);
int pseudo_label(const Vector& patch, const RbmParams& small_rbm);
std::vector<int> pseudo_labels(const RowMatrix& patches, const RbmParams& small_rbm);

// Modal label; ties go to the smallest label. Throws on an empty sequence.
int vote_location_labels(std::span<const int> labels_over_time);

// Votes per location over per-frame label vectors (each of length n_rows*n_cols).
LabelMatrix vote_label_grid(const std::vector<std::vector<int>>& labels_per_frame,
                            Eigen::Index n_rows, Eigen::Index n_cols);

struct ClusteringOptions {
  int hidden_units = 4;
  TrainConfig train;
  // Clusters whose pooled training patch count falls below this are merged
  // into the cluster covering the most locations. Zero disables merging.
  std::int64_t min_cluster_patches = 0;
};

struct ClusteringResult {
  RbmParams small_rbm;
  ClusterMap map;
};

// `grids` are the per-frame grids of one scale; all must share a layout.
ClusteringResult build_cluster_map(std::span<const PatchGrid> grids,
                                   const ClusteringOptions& options);

// Applies the small-cluster merge rule in place. `n_frames` multiplies the
// per-location count to give pooled patch counts.
void merge_small_clusters(ClusterMap& map, std::int64_t n_frames,
                          std::int64_t min_cluster_patches);

struct KMeansResult {
  std::vector<int> assignment;  // per point
  RowMatrix centroids;
  int iterations = 0;
};

// Lloyd's algorithm from k distinct random data points; stops at an
// assignment fixpoint or after max_iterations.
KMeansResult kmeans(const RowMatrix& points, int k, std::uint64_t seed, int max_iterations = 100);

// Pools all patches of all grids, clusters them, and votes per location.
ClusterMap kmeans_baseline(std::span<const PatchGrid> grids, int k, std::uint64_t seed);

}  // namespace rbmad
