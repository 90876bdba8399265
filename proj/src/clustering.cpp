#include "rbmad/clustering.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>
#include <string>

namespace rbmad {

void ClusterMap::refresh_unique() {
  std::set<int> seen(labels.data(), labels.data() + labels.size());
  unique_labels.assign(seen.begin(), seen.end());
}

int pseudo_label_from_posterior(const Vector& posterior) {
  if (posterior.size() > 30) throw std::invalid_argument("pseudo_label: too many hidden units");
  int label = 0;
  for (Eigen::Index k = 0; k < posterior.size(); ++k) {
    label = (label << 1) | (posterior[k] > 0.5 ? 1 : 0);
  }
  return label;
}

int pseudo_label(const Vector& patch, const RbmParams& small_rbm) {
  return pseudo_label_from_posterior(hidden_conditional(patch, small_rbm));
}

std::vector<int> pseudo_labels(const RowMatrix& patches, const RbmParams& small_rbm) {
  const RowMatrix posterior = hidden_conditional_batch(patches, small_rbm);
  std::vector<int> out(static_cast<std::size_t>(patches.rows()));
  for (Eigen::Index r = 0; r < patches.rows(); ++r) {
    out[static_cast<std::size_t>(r)] = pseudo_label_from_posterior(posterior.row(r).transpose());
  }
  return out;
}

int vote_location_labels(std::span<const int> labels_over_time) {
  if (labels_over_time.empty()) throw std::invalid_argument("vote_location_labels: no labels");
  std::map<int, std::size_t> counts;
  for (int label : labels_over_time) ++counts[label];
  // std::map iterates ascending, so the first maximum is the smallest label.
  auto best = counts.begin();
  for (auto it = counts.begin(); it != counts.end(); ++it) {
    if (it->second > best->second) best = it;
  }
  return best->first;
}

LabelMatrix vote_label_grid(const std::vector<std::vector<int>>& labels_per_frame,
                            Eigen::Index n_rows, Eigen::Index n_cols) {
  if (labels_per_frame.empty()) throw std::invalid_argument("vote_label_grid: no frames");
  const auto n_loc = static_cast<std::size_t>(n_rows * n_cols);
  for (const auto& frame : labels_per_frame) {
    if (frame.size() != n_loc) throw std::invalid_argument("vote_label_grid: grid size mismatch");
  }
  LabelMatrix out(n_rows, n_cols);
  std::vector<int> history(labels_per_frame.size());
  for (std::size_t loc = 0; loc < n_loc; ++loc) {
    for (std::size_t t = 0; t < labels_per_frame.size(); ++t) history[t] = labels_per_frame[t][loc];
    out.data()[loc] = vote_location_labels(history);
  }
  return out;
}

namespace {

void check_same_layout(std::span<const PatchGrid> grids) {
  if (grids.empty()) throw std::invalid_argument("clustering: no frames");
  const PatchGrid& first = grids.front();
  for (const PatchGrid& g : grids) {
    if (g.row_offsets != first.row_offsets || g.col_offsets != first.col_offsets ||
        g.patches.cols() != first.patches.cols()) {
      throw std::invalid_argument("clustering: frames have different patch layouts");
    }
  }
}

RowMatrix pool_patches(std::span<const PatchGrid> grids) {
  Eigen::Index total = 0;
  for (const PatchGrid& g : grids) total += g.patches.rows();
  RowMatrix pooled(total, grids.front().patches.cols());
  Eigen::Index row = 0;
  for (const PatchGrid& g : grids) {
    pooled.middleRows(row, g.patches.rows()) = g.patches;
    row += g.patches.rows();
  }
  return pooled;
}

}  // namespace

void merge_small_clusters(ClusterMap& map, std::int64_t n_frames,
                          std::int64_t min_cluster_patches) {
  if (min_cluster_patches <= 0) return;
  std::map<int, std::int64_t> locations;
  for (Eigen::Index k = 0; k < map.labels.size(); ++k) ++locations[map.labels.data()[k]];
  auto dominant = locations.begin();
  for (auto it = locations.begin(); it != locations.end(); ++it) {
    if (it->second > dominant->second) dominant = it;
  }
  const int target = dominant->first;
  for (Eigen::Index k = 0; k < map.labels.size(); ++k) {
    int& label = map.labels.data()[k];
    if (locations[label] * n_frames < min_cluster_patches) label = target;
  }
  map.refresh_unique();
}

ClusteringResult build_cluster_map(std::span<const PatchGrid> grids,
                                   const ClusteringOptions& options) {
  check_same_layout(grids);
  if (options.hidden_units < 1 || options.hidden_units > 30) {
    throw std::invalid_argument("clustering: hidden units must be in [1,30]");
  }
  ClusteringResult result;
  result.small_rbm = train(pool_patches(grids), options.hidden_units, options.train);

  std::vector<std::vector<int>> per_frame;
  per_frame.reserve(grids.size());
  for (const PatchGrid& g : grids) per_frame.push_back(pseudo_labels(g.patches, result.small_rbm));

  const PatchGrid& first = grids.front();
  result.map.scale = first.scale;
  result.map.labels = vote_label_grid(per_frame, first.n_rows(), first.n_cols());
  result.map.refresh_unique();
  merge_small_clusters(result.map, static_cast<std::int64_t>(grids.size()),
                       options.min_cluster_patches);
  return result;
}

KMeansResult kmeans(const RowMatrix& points, int k, std::uint64_t seed, int max_iterations) {
  if (k < 1) throw std::invalid_argument("kmeans: k must be >= 1");
  if (points.rows() < k) {
    throw std::invalid_argument("kmeans: k=" + std::to_string(k) + " exceeds sample count " +
                                std::to_string(points.rows()));
  }
  Rng rng(seed);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(points.rows()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::shuffle(order.begin(), order.end(), rng);

  KMeansResult result;
  result.centroids.resize(k, points.cols());
  int chosen = 0;
  for (Eigen::Index idx : order) {
    bool duplicate = false;
    for (int c = 0; c < chosen && !duplicate; ++c) {
      duplicate = result.centroids.row(c) == points.row(idx);
    }
    if (duplicate) continue;
    result.centroids.row(chosen++) = points.row(idx);
    if (chosen == k) break;
  }
  if (chosen < k) {
    throw std::invalid_argument("kmeans: k=" + std::to_string(k) + " exceeds the number of " +
                                "distinct points " + std::to_string(chosen));
  }

  result.assignment.assign(static_cast<std::size_t>(points.rows()), -1);
  for (result.iterations = 0; result.iterations < max_iterations; ++result.iterations) {
    bool changed = false;
    for (Eigen::Index r = 0; r < points.rows(); ++r) {
      int best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (int c = 0; c < k; ++c) {
        const double d = (points.row(r) - result.centroids.row(c)).squaredNorm();
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      int& slot = result.assignment[static_cast<std::size_t>(r)];
      if (slot != best) {
        slot = best;
        changed = true;
      }
    }
    if (!changed) break;
    RowMatrix sums = RowMatrix::Zero(k, points.cols());
    std::vector<Eigen::Index> counts(static_cast<std::size_t>(k), 0);
    for (Eigen::Index r = 0; r < points.rows(); ++r) {
      const int c = result.assignment[static_cast<std::size_t>(r)];
      sums.row(c) += points.row(r);
      ++counts[static_cast<std::size_t>(c)];
    }
    for (int c = 0; c < k; ++c) {
      // An emptied cluster keeps its previous centroid.
      if (counts[static_cast<std::size_t>(c)] > 0) {
        result.centroids.row(c) = sums.row(c) / static_cast<double>(counts[static_cast<std::size_t>(c)]);
      }
    }
  }
  return result;
}

ClusterMap kmeans_baseline(std::span<const PatchGrid> grids, int k, std::uint64_t seed) {
  check_same_layout(grids);
  const KMeansResult km = kmeans(pool_patches(grids), k, seed);
  const auto n_loc = static_cast<std::size_t>(grids.front().n_patches());
  std::vector<std::vector<int>> per_frame(grids.size());
  for (std::size_t t = 0; t < grids.size(); ++t) {
    per_frame[t].assign(km.assignment.begin() + static_cast<std::ptrdiff_t>(t * n_loc),
                        km.assignment.begin() + static_cast<std::ptrdiff_t>((t + 1) * n_loc));
  }
  ClusterMap map;
  map.scale = grids.front().scale;
  map.labels = vote_label_grid(per_frame, grids.front().n_rows(), grids.front().n_cols());
  map.refresh_unique();
  return map;
}

}  // namespace rbmad
