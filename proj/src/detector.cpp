#include "rbmad/detector.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace rbmad {

void DetectorConfig::validate() const {
  scales.validate();
  train.validate();
  if (cluster_hidden < 1 || cluster_hidden > 30) {
    throw std::invalid_argument("cluster_hidden must be in [1,30]");
  }
  if (detect_hidden < 1) throw std::invalid_argument("detect_hidden must be >= 1");
  if (!(beta > 0.0)) throw std::invalid_argument("beta must be > 0");
  if (gamma < 1) throw std::invalid_argument("gamma must be >= 1");
  if (chunk_length < 1) throw std::invalid_argument("chunk_length must be >= 1");
  if (update_epochs < 0) throw std::invalid_argument("update_epochs must be >= 0");
}

void DetectorModel::validate() const {
  config.validate();
  if (scales.size() != config.scales.ratios.size()) {
    throw std::invalid_argument("detector model: scale count does not match configuration");
  }
  const Eigen::Index m = config.scales.patch_size();
  for (const ScaleModel& s : scales) {
    s.cluster_rbm.check_consistent();
    if (s.cluster_rbm.n_visible() != m) {
      throw std::invalid_argument("detector model: clustering RBM has " +
                                  std::to_string(s.cluster_rbm.n_visible()) +
                                  " visible units, patch has " + std::to_string(m) + " pixels");
    }
    for (int label : s.cluster_map.unique_labels) {
      auto it = s.detectors.find(label);
      if (it == s.detectors.end()) {
        throw std::invalid_argument("detector model: no RBM for cluster " + std::to_string(label));
      }
      it->second.check_consistent();
      if (it->second.n_visible() != m) {
        throw std::invalid_argument("detector model: cluster RBM visible size mismatch");
      }
    }
  }
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b) {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return mix(mix(mix(base) ^ a) ^ b);
}

namespace {

constexpr std::uint64_t kClusterStream = 0xC1;
constexpr std::uint64_t kDetectStream = 0xD7;

void check_frame_size(const Frame& frame, const DetectorModel& model) {
  if (frame.height() != model.frame_h || frame.width() != model.frame_w) {
    throw std::invalid_argument("frame " + std::to_string(frame.index) + " is " +
                                std::to_string(frame.height()) + "x" +
                                std::to_string(frame.width()) + ", model expects " +
                                std::to_string(model.frame_h) + "x" +
                                std::to_string(model.frame_w));
  }
}

// Location indices of each cluster label, in ascending location order.
std::map<int, std::vector<Eigen::Index>> locations_by_label(const ClusterMap& map) {
  std::map<int, std::vector<Eigen::Index>> out;
  for (Eigen::Index k = 0; k < map.labels.size(); ++k) out[map.labels.data()[k]].push_back(k);
  return out;
}

RowMatrix gather_rows(const RowMatrix& src, const std::vector<Eigen::Index>& rows) {
  RowMatrix out(static_cast<Eigen::Index>(rows.size()), src.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    out.row(static_cast<Eigen::Index>(r)) = src.row(rows[r]);
  }
  return out;
}

}  // namespace

DetectorModel train_detector(std::span<const Frame> frames, const DetectorConfig& config) {
  config.validate();
  if (frames.empty()) throw std::invalid_argument("train_detector: no training frames");
  DetectorModel model;
  model.frame_h = frames.front().height();
  model.frame_w = frames.front().width();
  model.config = config;
  for (const Frame& f : frames) check_frame_size(f, model);

  for (std::size_t s = 0; s < config.scales.ratios.size(); ++s) {
    const double ratio = config.scales.ratios[s];
    std::vector<PatchGrid> grids;
    grids.reserve(frames.size());
    for (const Frame& f : frames) grids.push_back(extract_patches_at_scale(f, config.scales, ratio));

    ClusteringOptions copts;
    copts.hidden_units = config.cluster_hidden;
    copts.train = config.train;
    copts.train.seed = derive_seed(config.seed, kClusterStream, s);
    copts.min_cluster_patches = 2 * static_cast<std::int64_t>(config.train.batch_size);
    ClusteringResult clustering = build_cluster_map(grids, copts);

    ScaleModel scale_model;
    scale_model.ratio = ratio;
    scale_model.cluster_rbm = std::move(clustering.small_rbm);
    scale_model.cluster_map = std::move(clustering.map);

    const auto by_label = locations_by_label(scale_model.cluster_map);
    std::map<int, RowMatrix> pools;
    for (const auto& [label, locs] : by_label) {
      RowMatrix pool(static_cast<Eigen::Index>(locs.size() * grids.size()),
                     config.scales.patch_size());
      Eigen::Index row = 0;
      for (const PatchGrid& g : grids) {
        for (Eigen::Index loc : locs) pool.row(row++) = g.patches.row(loc);
      }
      pools.emplace(label, std::move(pool));
    }
    grids.clear();
    grids.shrink_to_fit();

    for (auto& [label, pool] : pools) {
      TrainConfig tc = config.train;
      tc.seed = derive_seed(config.seed, kDetectStream * 1000003ULL + s,
                            static_cast<std::uint64_t>(label));
      scale_model.detectors.emplace(label, train(pool, config.detect_hidden, tc));
      pool.resize(0, 0);
    }
    model.scales.push_back(std::move(scale_model));
  }
  return model;
}

PatchError patch_error(const Vector& patch, const RbmParams& params) {
  if (patch.size() != params.n_visible()) {
    throw std::invalid_argument("patch_error: patch has " + std::to_string(patch.size()) +
                                " pixels, model expects " + std::to_string(params.n_visible()));
  }
  PatchError out;
  out.error_block = (patch - reconstruct(patch, params)).cwiseAbs();
  out.average = out.error_block.norm() / static_cast<double>(patch.size());
  return out;
}

Vector patch_errors(const RowMatrix& patches, const RbmParams& params) {
  if (patches.cols() != params.n_visible()) {
    throw std::invalid_argument("patch_errors: dimension mismatch");
  }
  const RowMatrix diff = patches - reconstruct_batch(patches, params);
  return diff.rowwise().norm() / static_cast<double>(patches.cols());
}

Image score_frame(const Frame& frame, const DetectorModel& model) {
  check_frame_size(frame, model);
  std::vector<Image> maps;
  maps.reserve(model.scales.size());
  for (const ScaleModel& s : model.scales) {
    const PatchGrid grid = extract_patches_at_scale(frame, model.config.scales, s.ratio);
    if (grid.n_rows() != s.cluster_map.labels.rows() ||
        grid.n_cols() != s.cluster_map.labels.cols()) {
      throw std::invalid_argument("score_frame: patch grid does not match cluster map");
    }
    std::vector<double> averages(static_cast<std::size_t>(grid.n_patches()), 0.0);
    for (const auto& [label, locs] : locations_by_label(s.cluster_map)) {
      const Vector errs = patch_errors(gather_rows(grid.patches, locs), s.detectors.at(label));
      for (std::size_t r = 0; r < locs.size(); ++r) {
        averages[static_cast<std::size_t>(locs[r])] = errs[static_cast<Eigen::Index>(r)];
      }
    }
    maps.push_back(upsample_map(assemble_map(averages, grid), model.frame_h, model.frame_w));
  }
  return fuse_scales_max(maps);
}

ChunkScores score_chunk(std::span<const Frame> chunk, const DetectorModel& model) {
  return score_chunk(chunk, model, model.config.beta);
}

ChunkScores score_chunk(std::span<const Frame> chunk, const DetectorModel& model, double beta) {
  if (chunk.empty()) throw std::invalid_argument("score_chunk: empty chunk");
  ChunkScores out;
  out.errors = ErrorTensor(static_cast<Eigen::Index>(chunk.size()), model.frame_h, model.frame_w);
  for (std::size_t t = 0; t < chunk.size(); ++t) {
    const Image map = score_frame(chunk[t], model);
    std::copy(map.data(), map.data() + map.size(),
              out.errors.data.begin() + static_cast<std::ptrdiff_t>(t * out.errors.frame_size()));
  }
  out.raw = threshold_errors(out.errors, beta);
  return out;
}

ClusterPatches collect_cluster_patches(std::span<const Frame> chunk, const DetectorModel& model) {
  ClusterPatches out(model.scales.size());
  if (chunk.empty()) return out;
  for (std::size_t s = 0; s < model.scales.size(); ++s) {
    const ScaleModel& sm = model.scales[s];
    const auto by_label = locations_by_label(sm.cluster_map);
    for (const auto& [label, locs] : by_label) {
      out[s].emplace(label, RowMatrix(static_cast<Eigen::Index>(locs.size() * chunk.size()),
                                      model.config.scales.patch_size()));
    }
    for (std::size_t t = 0; t < chunk.size(); ++t) {
      check_frame_size(chunk[t], model);
      const PatchGrid grid = extract_patches_at_scale(chunk[t], model.config.scales, sm.ratio);
      for (const auto& [label, locs] : by_label) {
        RowMatrix& pool = out[s].at(label);
        const auto base = static_cast<Eigen::Index>(t * locs.size());
        for (std::size_t r = 0; r < locs.size(); ++r) {
          pool.row(base + static_cast<Eigen::Index>(r)) = grid.patches.row(locs[r]);
        }
      }
    }
  }
  return out;
}

void incremental_update(DetectorModel& model, const ClusterPatches& patches, int epochs,
                        std::uint64_t seed) {
  if (epochs <= 0) return;
  if (patches.size() != model.scales.size()) {
    throw std::invalid_argument("incremental_update: patch sets do not match model scales");
  }
  for (std::size_t s = 0; s < model.scales.size(); ++s) {
    for (const auto& [label, pool] : patches[s]) {
      if (pool.rows() == 0) continue;
      auto it = model.scales[s].detectors.find(label);
      if (it == model.scales[s].detectors.end()) {
        throw std::invalid_argument("incremental_update: unknown cluster " + std::to_string(label));
      }
      TrainConfig tc = model.config.train;
      tc.epochs = epochs;
      tc.seed = derive_seed(seed, s, static_cast<std::uint64_t>(label));
      it->second = continue_training(it->second, pool, tc);
    }
  }
}

std::vector<ChunkResult> detect_stream(std::span<const Frame> frames, DetectorModel& model,
                                       DetectMode mode) {
  model.validate();
  std::vector<ChunkResult> results;
  const auto chunk_len = static_cast<std::size_t>(model.config.chunk_length);
  for (std::size_t start = 0, chunk_index = 0; start < frames.size();
       start += chunk_len, ++chunk_index) {
    const auto chunk = frames.subspan(start, std::min(chunk_len, frames.size() - start));
    ChunkScores scores = score_chunk(chunk, model);
    ChunkResult result;
    result.first_frame = start;
    result.filtered = filter_by_span(scores.raw, model.config.gamma);
    result.errors = std::move(scores.errors);
    result.raw = std::move(scores.raw);
    results.push_back(std::move(result));

    if (mode == DetectMode::streaming) {
      incremental_update(model, collect_cluster_patches(chunk, model), model.config.update_epochs,
                         derive_seed(model.config.seed, 0x5EED, chunk_index));
    }
  }
  return results;
}

StreamVolumes stitch_chunks(const std::vector<ChunkResult>& chunks) {
  StreamVolumes out;
  for (const ChunkResult& c : chunks) {
    if (static_cast<Eigen::Index>(c.first_frame) != out.errors.frames) {
      throw std::invalid_argument("stitch_chunks: chunks are not contiguous");
    }
    append_frames(out.errors, c.errors);
    append_frames(out.raw, c.raw);
    append_frames(out.filtered, c.filtered);
  }
  return out;
}

}  // namespace rbmad
