#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "rbmad/dataset.hpp"
#include "rbmad/detector.hpp"
#include "rbmad/model_io.hpp"

using namespace rbmad;

namespace {

DetectorConfig small_config() {
  DetectorConfig cfg;
  cfg.scales.ratios = {1.0, 0.5};
  cfg.detect_hidden = 24;
  cfg.train.epochs = 8;
  cfg.train.batch_size = 32;
  cfg.chunk_length = 20;
  cfg.gamma = 10;
  cfg.update_epochs = 2;
  cfg.seed = 5;
  return cfg;
}

SynthSpec small_scene(int n_frames, std::uint64_t noise_seed) {
  SynthSpec spec;
  spec.height = 48;
  spec.width = 72;
  spec.n_frames = n_frames;
  spec.seed = noise_seed;
  spec.base_level = 0.25;
  spec.contrast = 0.15;
  return spec;
}

// Every RBM zero: reconstructions are 0.5 everywhere.
DetectorModel zero_model(Eigen::Index h, Eigen::Index w, const DetectorConfig& cfg) {
  DetectorModel m;
  m.frame_h = h;
  m.frame_w = w;
  m.config = cfg;
  Frame probe;
  probe.pixels = Image::Zero(h, w);
  for (double ratio : cfg.scales.ratios) {
    const PatchGrid g = extract_patches_at_scale(probe, cfg.scales, ratio);
    ScaleModel s;
    s.ratio = ratio;
    s.cluster_rbm = RbmParams(cfg.scales.patch_size(), cfg.cluster_hidden);
    s.cluster_map.scale = ratio;
    s.cluster_map.labels = LabelMatrix::Zero(g.n_rows(), g.n_cols());
    s.cluster_map.refresh_unique();
    s.detectors.emplace(0, RbmParams(cfg.scales.patch_size(), cfg.detect_hidden));
    m.scales.push_back(std::move(s));
  }
  return m;
}

std::vector<Frame> constant_frames(int n, Eigen::Index h, Eigen::Index w, double value) {
  std::vector<Frame> frames(static_cast<std::size_t>(n));
  for (int t = 0; t < n; ++t) {
    frames[static_cast<std::size_t>(t)].pixels = Image::Constant(h, w, value);
    frames[static_cast<std::size_t>(t)].index = static_cast<std::size_t>(t);
  }
  return frames;
}

double quantile(std::vector<double> values, double q) {
  std::sort(values.begin(), values.end());
  return values[static_cast<std::size_t>(q * static_cast<double>(values.size() - 1))];
}

// Trained once and shared by the tests that need a fitted model.
struct Fitted {
  DetectorModel model;
  double beta = 0;
};

const Fitted& fitted() {
  static const Fitted f = [] {
    Fitted out;
    const SynthVideo train = synth_video(small_scene(40, 1));
    out.model = train_detector(train.frames, small_config());
    const SynthVideo val = synth_video(small_scene(20, 2));
    out.beta = 1.05 * quantile(score_chunk(val.frames, out.model).errors.data, 0.999);
    out.model.config.beta = out.beta;
    return out;
  }();
  return f;
}

}  // namespace

TEST(PatchError, Examples) {
  const RbmParams zero(216, 10);
  EXPECT_EQ(patch_error(Vector::Constant(216, 0.5), zero).average, 0.0);
  RbmParams dark(216, 10);
  dark.visible_bias.setConstant(-50);
  const PatchError e = patch_error(Vector::Ones(216), dark);
  EXPECT_NEAR(e.average, 1.0 / std::sqrt(216.0), 1e-15);
  EXPECT_NEAR(e.average, 0.06804, 1e-5);
  EXPECT_THROW(patch_error(Vector::Ones(10), dark), std::invalid_argument);
}

TEST(PatchError, PermutationInvariant) {
  RbmParams p(12, 5);
  p.visible_bias = Vector::LinSpaced(12, -2, 2);
  Vector x = Vector::LinSpaced(12, 0.0, 1.0);
  std::vector<int> perm(12);
  std::iota(perm.begin(), perm.end(), 0);
  std::reverse(perm.begin(), perm.end());
  RbmParams q = p;
  Vector y = x;
  for (int k = 0; k < 12; ++k) {
    q.visible_bias(k) = p.visible_bias(perm[k]);
    y(k) = x(perm[k]);
  }
  EXPECT_NEAR(patch_error(x, p).average, patch_error(y, q).average, 1e-15);
}

TEST(PatchError, BatchMatchesSingle) {
  RbmParams p(216, 7);
  p.weights.setConstant(0.01);
  p.visible_bias.setConstant(0.3);
  RowMatrix rows(3, 216);
  rows.row(0).setConstant(0.2);
  rows.row(1).setConstant(0.9);
  rows.row(2) = Vector::LinSpaced(216, 0, 1).transpose();
  const Vector batch = patch_errors(rows, p);
  for (int r = 0; r < 3; ++r) EXPECT_NEAR(batch(r), patch_error(rows.row(r).transpose(), p).average, 1e-14);
}

TEST(Scoring, ZeroModelClosedForm) {
  const DetectorConfig cfg = small_config();
  const DetectorModel m = zero_model(48, 72, cfg);
  const auto half = constant_frames(2, 48, 72, 0.5);
  const ChunkScores a = score_chunk(half, m);
  EXPECT_TRUE(std::all_of(a.errors.data.begin(), a.errors.data.end(), [](double e) { return e == 0.0; }));
  EXPECT_TRUE(std::all_of(a.raw.data.begin(), a.raw.data.end(), [](std::uint8_t z) { return z == 0; }));

  const auto white = constant_frames(2, 48, 72, 1.0);
  const ChunkScores b = score_chunk(white, m);
  const double expected = 0.5 * std::sqrt(216.0) / 216.0;
  for (double e : b.errors.data) EXPECT_NEAR(e, expected, 1e-15);
  EXPECT_TRUE(std::all_of(b.raw.data.begin(), b.raw.data.end(), [](std::uint8_t z) { return z == 1; }));
}

TEST(Scoring, InfiniteBetaGivesNoDetections) {
  const DetectorModel m = zero_model(48, 72, small_config());
  const ChunkScores s = score_chunk(constant_frames(3, 48, 72, 0.9), m, std::numeric_limits<double>::infinity());
  EXPECT_TRUE(std::all_of(s.raw.data.begin(), s.raw.data.end(), [](std::uint8_t z) { return z == 0; }));
}

TEST(Scoring, FrameSizeMismatchThrows) {
  const DetectorModel m = zero_model(48, 72, small_config());
  EXPECT_THROW(score_chunk(constant_frames(1, 48, 70, 0.5), m), std::invalid_argument);
  EXPECT_THROW(score_chunk(std::span<const Frame>{}, m), std::invalid_argument);
}

TEST(Scoring, MonotoneInBeta) {
  const Fitted& f = fitted();
  SynthSpec spec = small_scene(6, 9);
  spec.plants.push_back({1, 4, 10, 20, 14, 20, 0.95});
  const SynthVideo v = synth_video(spec);
  const ChunkScores lo = score_chunk(v.frames, f.model, f.beta * 0.5);
  const ChunkScores hi = score_chunk(v.frames, f.model, f.beta * 2.0);
  EXPECT_EQ(lo.errors, hi.errors);
  for (std::size_t k = 0; k < lo.raw.data.size(); ++k) EXPECT_LE(hi.raw.data[k], lo.raw.data[k]);
}

TEST(Scoring, SideEffectFree) {
  const Fitted& f = fitted();
  const SynthVideo v = synth_video(small_scene(4, 3));
  const DetectorModel before = f.model;
  const ChunkScores a = score_chunk(v.frames, f.model);
  const ChunkScores b = score_chunk(v.frames, f.model);
  EXPECT_EQ(a.errors, b.errors);
  EXPECT_EQ(a.raw, b.raw);
  EXPECT_EQ(f.model, before);
}

TEST(Scoring, TrainingDistributionMostlyQuiet) {
  const Fitted& f = fitted();
  const SynthVideo v = synth_video(small_scene(20, 3));
  const ChunkScores s = score_chunk(v.frames, f.model);
  const double on = static_cast<double>(std::count(s.raw.data.begin(), s.raw.data.end(), 1));
  EXPECT_LT(on / static_cast<double>(s.raw.data.size()), 0.05);
}

TEST(Scoring, WhiteBlockInDarkSceneIsFlagged) {
  const Fitted& f = fitted();
  SynthSpec spec = small_scene(3, 4);
  spec.plants.push_back({0, 2, 12, 24, 18, 24, 1.0});
  const SynthVideo v = synth_video(spec);
  const ChunkScores s = score_chunk(v.frames, f.model);
  const IndicatorTensor& mask = *v.truth.masks;
  double inside = 0, hit = 0;
  for (std::size_t k = 0; k < mask.data.size(); ++k) {
    if (!mask.data[k]) continue;
    ++inside;
    hit += s.raw.data[k];
  }
  EXPECT_GE(hit / inside, 0.6);
}

TEST(Training, ConstantSceneGivesOneClusterPerScale) {
  const DetectorConfig cfg = small_config();
  const DetectorModel m = train_detector(constant_frames(4, 48, 72, 0.3), cfg);
  ASSERT_EQ(m.scales.size(), 2u);
  for (const ScaleModel& s : m.scales) {
    EXPECT_EQ(s.cluster_map.n_clusters(), 1);
    EXPECT_EQ(s.detectors.size(), 1u);
    EXPECT_EQ(s.cluster_rbm.n_hidden(), 4);
    EXPECT_EQ(s.detectors.begin()->second.n_hidden(), 24);
  }
  EXPECT_NO_THROW(m.validate());
}

TEST(Training, OneDetectorPerCluster) {
  std::vector<Frame> frames(10);
  for (int t = 0; t < 10; ++t) {
    frames[t].pixels = Image::Constant(48, 72, 0.1);
    frames[t].pixels.rightCols(36).setConstant(0.9);
    frames[t].pixels(t, t) = 0.5;
  }
  DetectorConfig cfg = small_config();
  cfg.scales.ratios = {1.0};
  cfg.scales.overlap_fraction = 0.0;
  cfg.train.batch_size = 4;
  cfg.train.epochs = 20;
  const DetectorModel m = train_detector(frames, cfg);
  const ScaleModel& s = m.scales.front();
  EXPECT_EQ(static_cast<Eigen::Index>(s.detectors.size()), s.cluster_map.n_clusters());
  for (int label : s.cluster_map.unique_labels) EXPECT_TRUE(s.detectors.count(label));
}

TEST(Training, SeedDeterminism) {
  const SynthVideo v = synth_video(small_scene(6, 1));
  DetectorConfig cfg = small_config();
  cfg.train.epochs = 2;
  const std::string a = serialize_model(train_detector(v.frames, cfg));
  const std::string b = serialize_model(train_detector(v.frames, cfg));
  EXPECT_EQ(a, b);
  cfg.seed = 6;
  EXPECT_NE(serialize_model(train_detector(v.frames, cfg)), a);
}

TEST(Stream, ChunksAreContiguous) {
  DetectorModel m = zero_model(48, 72, small_config());
  const auto frames = constant_frames(45, 48, 72, 0.5);
  const auto chunks = detect_stream(frames, m, DetectMode::offline);
  ASSERT_EQ(chunks.size(), 3u);
  EXPECT_EQ(chunks[0].first_frame, 0u);
  EXPECT_EQ(chunks[1].first_frame, 20u);
  EXPECT_EQ(chunks[2].first_frame, 40u);
  EXPECT_EQ(chunks[2].errors.frames, 5);
  const StreamVolumes vol = stitch_chunks(chunks);
  EXPECT_EQ(vol.errors.frames, 45);
  EXPECT_EQ(vol.filtered.frames, 45);
}

TEST(Stream, FinalScoresAreMaskedErrors) {
  DetectorModel m = zero_model(48, 72, small_config());
  m.config.gamma = 1;
  const auto chunks = detect_stream(constant_frames(3, 48, 72, 0.9), m, DetectMode::offline);
  const ErrorTensor fin = chunks[0].final_scores();
  EXPECT_EQ(fin, chunks[0].errors);
  m.config.gamma = 4;
  const auto filtered = detect_stream(constant_frames(3, 48, 72, 0.9), m, DetectMode::offline);
  for (double e : filtered[0].final_scores().data) EXPECT_EQ(e, 0.0);
}

TEST(Stream, StreamingFirstChunkMatchesOffline) {
  DetectorModel offline = fitted().model, streaming = fitted().model;
  const SynthVideo v = synth_video(small_scene(40, 7));
  const auto a = detect_stream(v.frames, offline, DetectMode::offline);
  const auto b = detect_stream(v.frames, streaming, DetectMode::streaming);
  EXPECT_EQ(a[0].errors, b[0].errors);
  EXPECT_EQ(a[0].filtered, b[0].filtered);
  EXPECT_EQ(offline, fitted().model);
  EXPECT_FALSE(streaming == fitted().model);
  EXPECT_NE(a[1].errors, b[1].errors);
}

TEST(Stream, MonotoneInGamma) {
  const Fitted& f = fitted();
  SynthSpec spec = small_scene(20, 8);
  spec.plants.push_back({2, 8, 10, 20, 14, 20, 0.95});
  spec.plants.push_back({5, 17, 20, 44, 14, 20, 0.9});
  const SynthVideo v = synth_video(spec);
  IndicatorTensor prev;
  for (int gamma : {1, 5, 10}) {
    DetectorModel m = f.model;
    m.config.gamma = gamma;
    const IndicatorTensor z = detect_stream(v.frames, m, DetectMode::offline)[0].filtered;
    if (gamma > 1) {
      for (std::size_t k = 0; k < z.data.size(); ++k) EXPECT_LE(z.data[k], prev.data[k]);
    }
    prev = z;
  }
}

TEST(Stream, SpanFilterKeepsLongAnomalyAndDropsFlicker) {
  const Fitted& f = fitted();
  SynthSpec spec = small_scene(20, 10);
  spec.plants.push_back({0, 11, 0, 0, 12, 16, 0.95});    // 12 frames
  spec.plants.push_back({14, 18, 36, 56, 12, 16, 0.95});  // 5 frames, two quiet frames later
  const SynthVideo v = synth_video(spec);
  DetectorModel m = f.model;
  const auto chunks = detect_stream(v.frames, m, DetectMode::offline);
  const IndicatorTensor& raw = chunks[0].raw;
  const IndicatorTensor& z = chunks[0].filtered;
  auto count_in = [](const IndicatorTensor& t, int top, int left, int h, int w) {
    int n = 0;
    for (Eigen::Index f = 0; f < t.frames; ++f)
      for (int i = top; i < top + h; ++i)
        for (int j = left; j < left + w; ++j) n += t.at(f, i, j);
    return n;
  };
  EXPECT_GT(count_in(raw, 36, 56, 12, 16), 0);
  EXPECT_EQ(count_in(z, 36, 56, 12, 16), 0);
  EXPECT_GT(count_in(z, 0, 0, 12, 16), 0);
}

TEST(Update, EmptyChunkLeavesModelUnchanged) {
  DetectorModel m = fitted().model;
  incremental_update(m, collect_cluster_patches(std::span<const Frame>{}, m), 5, 1);
  EXPECT_EQ(m, fitted().model);
  incremental_update(m, collect_cluster_patches(synth_video(small_scene(2, 1)).frames, m), 0, 1);
  EXPECT_EQ(m, fitted().model);
}

TEST(Update, Deterministic) {
  const SynthVideo v = synth_video(small_scene(4, 12));
  DetectorModel a = fitted().model, b = fitted().model;
  incremental_update(a, collect_cluster_patches(v.frames, a), 2, 99);
  incremental_update(b, collect_cluster_patches(v.frames, b), 2, 99);
  EXPECT_EQ(a, b);
  EXPECT_FALSE(a == fitted().model);
}

TEST(Update, CollectsEveryPatchOfEachCluster) {
  const DetectorModel& m = fitted().model;
  const SynthVideo v = synth_video(small_scene(3, 12));
  const ClusterPatches p = collect_cluster_patches(v.frames, m);
  ASSERT_EQ(p.size(), m.scales.size());
  for (std::size_t s = 0; s < p.size(); ++s) {
    Eigen::Index total = 0;
    for (const auto& [label, pool] : p[s]) total += pool.rows();
    EXPECT_EQ(total, 3 * m.scales[s].cluster_map.labels.size());
  }
}

TEST(Seeds, DeriveSeedSeparatesStreams) {
  EXPECT_EQ(derive_seed(1, 2, 3), derive_seed(1, 2, 3));
  EXPECT_NE(derive_seed(1, 2, 3), derive_seed(1, 3, 2));
  EXPECT_NE(derive_seed(1, 2, 3), derive_seed(2, 2, 3));
}

TEST(Defaults, PublishedHyperparameters) {
  const DetectorConfig cfg;
  EXPECT_EQ(cfg.scales.ratios, (std::vector<double>{1.0, 0.5, 0.25}));
  EXPECT_EQ(cfg.scales.patch_h, 12);
  EXPECT_EQ(cfg.scales.patch_w, 18);
  EXPECT_EQ(cfg.scales.patch_size(), 216);
  EXPECT_EQ(cfg.scales.overlap_fraction, 0.5);
  EXPECT_EQ(cfg.cluster_hidden, 4);
  EXPECT_EQ(cfg.detect_hidden, 100);
  EXPECT_EQ(cfg.train.learning_rate, 0.1);
  EXPECT_EQ(cfg.train.cd_steps, 1);
  EXPECT_EQ(cfg.chunk_length, 20);
  EXPECT_EQ(cfg.update_epochs, 20);
  EXPECT_EQ(cfg.beta, 0.003);
  EXPECT_EQ(cfg.gamma, 10);
}
