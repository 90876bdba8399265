#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "rbmad/patches.hpp"
#include "rbmad/pgm.hpp"

using namespace rbmad;

namespace {

Image random_image(Eigen::Index h, Eigen::Index w, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Image img(h, w);
  for (Eigen::Index k = 0; k < img.size(); ++k) img.data()[k] = unit(rng);
  return img;
}

// Separable triangle kernel over every source pixel, pixel-centre sample positions.
Image triangle_resize(const Image& src, Eigen::Index out_h, Eigen::Index out_w) {
  auto position = [](Eigen::Index o, Eigen::Index n_out, Eigen::Index n_in) {
    const double x = (o + 0.5) * static_cast<double>(n_in) / static_cast<double>(n_out) - 0.5;
    return std::min(std::max(x, 0.0), static_cast<double>(n_in - 1));
  };
  auto tri = [](double d) { return std::max(0.0, 1.0 - std::abs(d)); };
  Image out(out_h, out_w);
  for (Eigen::Index r = 0; r < out_h; ++r) {
    const double sy = position(r, out_h, src.rows());
    for (Eigen::Index c = 0; c < out_w; ++c) {
      const double sx = position(c, out_w, src.cols());
      double acc = 0;
      for (Eigen::Index y = 0; y < src.rows(); ++y)
        for (Eigen::Index x = 0; x < src.cols(); ++x) acc += tri(y - sy) * tri(x - sx) * src(y, x);
      out(r, c) = acc;
    }
  }
  return out;
}

Frame frame_of(Image pixels) {
  Frame f;
  f.pixels = std::move(pixels);
  return f;
}

ScaleConfig config(int ph, int pw, double overlap) {
  ScaleConfig cfg;
  cfg.ratios = {1.0};
  cfg.patch_h = ph;
  cfg.patch_w = pw;
  cfg.overlap_fraction = overlap;
  return cfg;
}

}  // namespace

TEST(Normalize, Examples) {
  RawImage raw = RawImage::Zero(3, 4);
  EXPECT_TRUE(normalize_frame(raw, 255).pixels.isZero(0));
  raw.setConstant(255);
  EXPECT_TRUE(normalize_frame(raw, 255).pixels.isOnes(0));
  raw(1, 2) = 128;
  const Frame f = normalize_frame(raw, 255, 7);
  EXPECT_EQ(f.pixels(1, 2), 128.0 / 255.0);
  EXPECT_NEAR(f.pixels(1, 2), 0.50196, 1e-5);
  EXPECT_EQ(f.index, 7u);
  raw(0, 0) = 256;
  EXPECT_THROW(normalize_frame(raw, 255), std::out_of_range);
}

TEST(Rescale, UnitRatioIsIdentity) {
  const Frame f = frame_of(random_image(17, 23, 1));
  EXPECT_EQ(rescale_frame(f, 1.0).pixels, f.pixels);
}

TEST(Rescale, ConstantStaysConstant) {
  const Frame f = frame_of(Image::Constant(40, 60, 0.37));
  for (double ratio : {0.5, 0.25, 0.3, 0.77}) {
    const Frame g = rescale_frame(f, ratio);
    EXPECT_EQ(g.height(), std::lround(40 * ratio));
    EXPECT_EQ(g.width(), std::lround(60 * ratio));
    EXPECT_NEAR((g.pixels.array() - 0.37).abs().maxCoeff(), 0.0, 1e-15);
  }
}

TEST(Rescale, TwoColumnsToOne) {
  Image src(2, 2);
  src << 0, 1, 0, 1;
  const Image out = resize_bilinear(src, 2, 1);
  ASSERT_EQ(out.rows(), 2);
  ASSERT_EQ(out.cols(), 1);
  EXPECT_DOUBLE_EQ(out(0, 0), 0.5);
  EXPECT_DOUBLE_EQ(out(1, 0), 0.5);
  EXPECT_TRUE(out.isApprox(triangle_resize(src, 2, 1)));
}

TEST(Rescale, MatchesTriangleKernelOracle) {
  const Image src = random_image(13, 19, 4);
  for (auto [h, w] : {std::pair{7, 10}, {4, 5}, {13, 9}, {3, 19}, {1, 1}, {20, 30}}) {
    const Image fast = resize_bilinear(src, h, w);
    const Image slow = triangle_resize(src, h, w);
    EXPECT_LT((fast - slow).cwiseAbs().maxCoeff(), 1e-12) << h << "x" << w;
  }
}

TEST(Rescale, RangeAndErrors) {
  const Frame f = frame_of(random_image(30, 40, 2));
  const Frame g = rescale_frame(f, 0.35);
  EXPECT_GE(g.pixels.minCoeff(), 0.0);
  EXPECT_LE(g.pixels.maxCoeff(), 1.0);
  EXPECT_THROW(rescale_frame(f, 0.0), std::invalid_argument);
  EXPECT_THROW(rescale_frame(f, 1.5), std::invalid_argument);
  ScaleConfig cfg = config(12, 18, 0.5);
  EXPECT_THROW(extract_patches_at_scale(f, cfg, 0.25), std::invalid_argument);
}

TEST(Grid, PaperSizeGivesThirtyNineSquared) {
  const ScaleConfig cfg = config(12, 18, 0.5);
  EXPECT_EQ(cfg.stride_rows(), 6);
  EXPECT_EQ(cfg.stride_cols(), 9);
  const PatchGrid g = extract_patches(frame_of(random_image(240, 360, 3)), cfg, 1.0);
  EXPECT_EQ(g.n_rows(), (240 - 12) / 6 + 1);
  EXPECT_EQ(g.n_cols(), (360 - 18) / 9 + 1);
  EXPECT_EQ(g.n_rows(), 39);
  EXPECT_EQ(g.n_cols(), 39);
  // Enumerate every top-left corner that fits on the stride lattice.
  std::vector<Eigen::Index> rows, cols;
  for (Eigen::Index r = 0; r + 12 <= 240; r += 6) rows.push_back(r);
  for (Eigen::Index c = 0; c + 18 <= 360; c += 9) cols.push_back(c);
  EXPECT_EQ(g.row_offsets, rows);
  EXPECT_EQ(g.col_offsets, cols);
  EXPECT_EQ(g.patches.rows(), 39 * 39);
  EXPECT_EQ(g.patches.cols(), 216);
}

TEST(Grid, NoOverlapTiles) {
  const Image img = random_image(24, 36, 5);
  const PatchGrid g = extract_patches(frame_of(img), config(12, 18, 0.0), 1.0);
  ASSERT_EQ(g.n_rows(), 2);
  ASSERT_EQ(g.n_cols(), 2);
  for (Eigen::Index i = 0; i < 2; ++i) {
    for (Eigen::Index j = 0; j < 2; ++j) {
      const Eigen::Index loc = g.location(i, j);
      for (int r = 0; r < 12; ++r)
        for (int c = 0; c < 18; ++c) EXPECT_EQ(g.patches(loc, r * 18 + c), img(12 * i + r, 18 * j + c));
    }
  }
}

TEST(Grid, FlushFinalRowAndColumn) {
  EXPECT_EQ(patch_offsets(25, 12, 6), (std::vector<Eigen::Index>{0, 6, 12, 13}));
  EXPECT_EQ(patch_offsets(24, 12, 6), (std::vector<Eigen::Index>{0, 6, 12}));
  EXPECT_EQ(patch_offsets(12, 12, 6), (std::vector<Eigen::Index>{0}));
  EXPECT_THROW(patch_offsets(11, 12, 6), std::invalid_argument);
}

TEST(Grid, EveryPixelCovered) {
  std::mt19937_64 rng(6);
  std::uniform_int_distribution<int> size(18, 70);
  for (int trial = 0; trial < 50; ++trial) {
    const int h = size(rng), w = size(rng);
    for (double overlap : {0.0, 0.5, 2.0 / 3.0}) {
      const PatchGrid g = extract_patches(frame_of(Image::Zero(h, w)), config(6, 12, overlap), 1.0);
      std::vector<int> count(static_cast<std::size_t>(h * w), 0);
      for (Eigen::Index r0 : g.row_offsets)
        for (Eigen::Index c0 : g.col_offsets)
          for (int r = 0; r < 6; ++r)
            for (int c = 0; c < 12; ++c) {
              ASSERT_LT(r0 + r, h);
              ASSERT_LT(c0 + c, w);
              ++count[static_cast<std::size_t>((r0 + r) * w + c0 + c)];
            }
      EXPECT_EQ(*std::min_element(count.begin(), count.end()) > 0, true) << h << "x" << w;
    }
  }
}

TEST(Grid, InvalidOverlapRejected) {
  EXPECT_THROW(config(12, 18, 0.25).validate(), std::invalid_argument);
  EXPECT_THROW(config(12, 18, 1.0).validate(), std::invalid_argument);
  EXPECT_NO_THROW(config(12, 18, 0.5).validate());
  ScaleConfig bad = config(12, 18, 0.5);
  bad.ratios = {1.0, 0.0};
  EXPECT_THROW(bad.validate(), std::invalid_argument);
}

TEST(Assemble, BlocksReproduceFrame) {
  for (double overlap : {0.0, 0.5, 2.0 / 3.0}) {
    for (auto [h, w] : {std::pair{24, 36}, {31, 47}, {60, 90}}) {
      const Image img = random_image(h, w, static_cast<std::uint64_t>(h * w));
      const PatchGrid g = extract_patches(frame_of(img), config(6, 12, overlap), 1.0);
      EXPECT_LT((assemble_blocks(g.patches, g) - img).cwiseAbs().maxCoeff(), 1e-12);
    }
  }
  const Image big = random_image(240, 360, 8);
  const PatchGrid g = extract_patches(frame_of(big), config(12, 18, 0.5), 1.0);
  EXPECT_LT((assemble_blocks(g.patches, g) - big).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Assemble, NonOverlappingPaste) {
  const PatchGrid g = extract_patches(frame_of(Image::Zero(24, 36)), config(12, 18, 0.0), 1.0);
  const std::vector<double> values{1, 2, 3, 4};
  const Image m = assemble_map(values, g);
  EXPECT_EQ(m(0, 0), 1);
  EXPECT_EQ(m(0, 35), 2);
  EXPECT_EQ(m(23, 0), 3);
  EXPECT_EQ(m(23, 35), 4);
}

TEST(Assemble, OverlapAverages) {
  // Width 27 with 18-wide patches and stride 9: columns 9..17 are covered twice.
  const PatchGrid g = extract_patches(frame_of(Image::Zero(12, 27)), config(12, 18, 0.5), 1.0);
  ASSERT_EQ(g.n_patches(), 2);
  const std::vector<double> values{0.0, 1.0};
  const Image m = assemble_map(values, g);
  EXPECT_EQ(m(5, 0), 0.0);
  EXPECT_EQ(m(5, 12), 0.5);
  EXPECT_EQ(m(5, 26), 1.0);
}

TEST(Assemble, MatchesAccumulatorOracle) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> unit;
  for (int trial = 0; trial < 10; ++trial) {
    const int h = 20 + trial * 3, w = 30 + trial * 5;
    const PatchGrid g = extract_patches(frame_of(Image::Zero(h, w)), config(6, 12, 0.5), 1.0);
    std::vector<double> values(static_cast<std::size_t>(g.n_patches()));
    for (double& v : values) v = unit(rng);
    Image sum = Image::Zero(h, w), count = Image::Zero(h, w);
    for (Eigen::Index i = 0; i < g.n_rows(); ++i)
      for (Eigen::Index j = 0; j < g.n_cols(); ++j) {
        sum.block(g.row_offsets[i], g.col_offsets[j], 6, 12).array() += values[g.location(i, j)];
        count.block(g.row_offsets[i], g.col_offsets[j], 6, 12).array() += 1.0;
      }
    const Image oracle = sum.cwiseQuotient(count);
    EXPECT_LT((assemble_map(values, g) - oracle).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Assemble, CoverageGapAndSizeMismatchThrow) {
  PatchGrid g = extract_patches(frame_of(Image::Zero(24, 36)), config(12, 18, 0.0), 1.0);
  g.col_offsets = {0};
  g.patches.conservativeResize(2, Eigen::NoChange);
  const std::vector<double> two{1, 2};
  EXPECT_THROW(assemble_map(two, g), std::invalid_argument);
  const PatchGrid ok = extract_patches(frame_of(Image::Zero(24, 36)), config(12, 18, 0.0), 1.0);
  EXPECT_THROW(assemble_map(two, ok), std::invalid_argument);
}

TEST(Upsample, Examples) {
  const Image m = random_image(3, 5, 10);
  EXPECT_EQ(upsample_map(m, 3, 5), m);
  Image one(1, 1);
  one << 0.42;
  EXPECT_TRUE(upsample_map(one, 6, 7).isApproxToConstant(0.42, 0));
  Image two(2, 2);
  two << 1, 2, 3, 4;
  const Image up = upsample_map(two, 4, 4);
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) EXPECT_EQ(up(r, c), two(r / 2, c / 2));
  EXPECT_THROW(upsample_map(two, 1, 4), std::invalid_argument);
}

TEST(Upsample, NonIntegerFactorKeepsMaximaAndValues) {
  const Image m = random_image(30, 45, 11);
  const Image up = upsample_map(m, 120, 180);
  EXPECT_EQ(up.maxCoeff(), m.maxCoeff());
  std::set<double> src(m.data(), m.data() + m.size());
  for (Eigen::Index k = 0; k < up.size(); ++k) EXPECT_TRUE(src.count(up.data()[k]));
  const Image odd = upsample_map(m, 97, 131);
  EXPECT_EQ(odd.maxCoeff(), m.maxCoeff());
}

TEST(Fuse, ElementwiseMaxProperties) {
  const Image a = random_image(6, 8, 1), b = random_image(6, 8, 2), c = random_image(6, 8, 3);
  const std::vector<Image> one{a};
  EXPECT_EQ(fuse_scales_max(one), a);
  const std::vector<Image> with_zero{a, Image::Zero(6, 8)};
  EXPECT_EQ(fuse_scales_max(with_zero), a);
  const std::vector<Image> three{a, b, c};
  const Image f = fuse_scales_max(three);
  for (Eigen::Index k = 0; k < f.size(); ++k) {
    EXPECT_EQ(f.data()[k], std::max({a.data()[k], b.data()[k], c.data()[k]}));
  }
  const std::vector<Image> swapped{c, a, b};
  EXPECT_EQ(fuse_scales_max(swapped), f);
  const std::vector<Image> twice{f, f};
  EXPECT_EQ(fuse_scales_max(twice), f);
  const Image bigger = (a.array() + 0.1).matrix();
  const std::vector<Image> raised{bigger, b, c};
  EXPECT_TRUE((fuse_scales_max(raised).array() >= f.array()).all());
  const std::vector<Image> mismatch{a, Image::Zero(5, 8)};
  EXPECT_THROW(fuse_scales_max(mismatch), std::invalid_argument);
  EXPECT_THROW(fuse_scales_max(std::span<const Image>{}), std::invalid_argument);
}
