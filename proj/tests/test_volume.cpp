#include <gtest/gtest.h>

#include <functional>
#include <map>
#include <random>
#include <set>

#include "rbmad/volume.hpp"

using namespace rbmad;

namespace {

IndicatorTensor random_indicator(Eigen::Index l, Eigen::Index h, Eigen::Index w, double density,
                                 std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution on(density);
  IndicatorTensor z(l, h, w);
  for (auto& v : z.data) v = on(rng) ? 1 : 0;
  return z;
}

// Recursive flood fill; returns a label per voxel (-1 for background).
std::vector<int> flood_fill_labels(const IndicatorTensor& z) {
  std::vector<int> label(z.data.size(), -1);
  int next = 0;
  std::function<void(Eigen::Index, Eigen::Index, Eigen::Index)> fill = [&](Eigen::Index t, Eigen::Index i,
                                                                           Eigen::Index j) {
    label[z.offset(t, i, j)] = next;
    for (int dt = -1; dt <= 1; ++dt)
      for (int di = -1; di <= 1; ++di)
        for (int dj = -1; dj <= 1; ++dj) {
          const Eigen::Index a = t + dt, b = i + di, c = j + dj;
          if (a < 0 || b < 0 || c < 0 || a >= z.frames || b >= z.height || c >= z.width) continue;
          if (z.at(a, b, c) && label[z.offset(a, b, c)] < 0) fill(a, b, c);
        }
  };
  for (Eigen::Index t = 0; t < z.frames; ++t)
    for (Eigen::Index i = 0; i < z.height; ++i)
      for (Eigen::Index j = 0; j < z.width; ++j)
        if (z.at(t, i, j) && label[z.offset(t, i, j)] < 0) {
          fill(t, i, j);
          ++next;
        }
  return label;
}

std::vector<int> component_labels(const std::vector<Component>& comps, const IndicatorTensor& z) {
  std::vector<int> label(z.data.size(), -1);
  for (std::size_t c = 0; c < comps.size(); ++c)
    for (const Voxel& v : comps[c]) {
      EXPECT_EQ(label[z.offset(v.t, v.i, v.j)], -1) << "voxel in two components";
      label[z.offset(v.t, v.i, v.j)] = static_cast<int>(c);
    }
  return label;
}

bool same_partition(const std::vector<int>& a, const std::vector<int>& b) {
  std::map<int, int> ab, ba;
  for (std::size_t k = 0; k < a.size(); ++k) {
    if ((a[k] < 0) != (b[k] < 0)) return false;
    if (a[k] < 0) continue;
    if (ab.emplace(a[k], b[k]).first->second != b[k]) return false;
    if (ba.emplace(b[k], a[k]).first->second != a[k]) return false;
  }
  return true;
}

int run_oracle(const std::set<Eigen::Index>& frames) {
  int best = 0, run = 0;
  Eigen::Index prev = -2;
  for (Eigen::Index t : frames) {
    run = (t == prev + 1) ? run + 1 : 1;
    best = std::max(best, run);
    prev = t;
  }
  return best;
}

}  // namespace

TEST(Threshold, InclusiveComparison) {
  ErrorTensor e(1, 1, 3);
  e.data = {0.1, 0.3, 0.5};
  EXPECT_EQ(threshold_errors(e, 0.3).data, (std::vector<std::uint8_t>{0, 1, 1}));
  EXPECT_EQ(threshold_errors(e, std::numeric_limits<double>::infinity()).data,
            (std::vector<std::uint8_t>{0, 0, 0}));
}

TEST(Components, EmptyAndDiagonal) {
  EXPECT_TRUE(connected_components_3d(IndicatorTensor(3, 4, 4)).empty());
  IndicatorTensor z(3, 3, 3);
  z.at(0, 0, 0) = 1;
  z.at(1, 1, 1) = 1;
  z.at(2, 2, 2) = 1;
  const auto comps = connected_components_3d(z);
  ASSERT_EQ(comps.size(), 1u);
  EXPECT_EQ(comps[0].size(), 3u);
  z.at(1, 1, 1) = 0;
  EXPECT_EQ(connected_components_3d(z).size(), 2u);
}

TEST(Components, MatchFloodFillOracle) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const IndicatorTensor z = random_indicator(8, 16, 16, 0.2, seed);
    const auto comps = connected_components_3d(z);
    EXPECT_TRUE(same_partition(component_labels(comps, z), flood_fill_labels(z))) << seed;
  }
}

TEST(Components, OrderedAndSorted) {
  const IndicatorTensor z = random_indicator(5, 10, 10, 0.15, 3);
  const auto comps = connected_components_3d(z);
  for (std::size_t c = 0; c < comps.size(); ++c) {
    EXPECT_TRUE(std::is_sorted(comps[c].begin(), comps[c].end()));
    if (c > 0) {
      EXPECT_LT(comps[c - 1].front(), comps[c].front());
    }
  }
}

TEST(SpanFilter, Examples) {
  IndicatorTensor z(8, 2, 2);
  for (int t : {0, 1, 2}) z.at(t, 0, 0) = 1;
  EXPECT_EQ(filter_by_span(z, 4), IndicatorTensor(8, 2, 2));
  EXPECT_EQ(filter_by_span(z, 1), z);
  EXPECT_EQ(filter_by_span(z, 3), z);

  // Frames {0,1,2,3,7}: the run 0-3 keeps everything, including the frame-7 voxel,
  // once frame 7 joins the same component.
  Component comp;
  for (Eigen::Index t : {0, 1, 2, 3, 7}) comp.push_back({t, 0, 0});
  EXPECT_EQ(longest_frame_run(comp), 4);
  IndicatorTensor y(8, 2, 2);
  for (const Voxel& v : comp) y.at(v.t, v.i, v.j) = 1;
  EXPECT_EQ(filter_components({comp}, 4, y), y);
  EXPECT_EQ(filter_components({comp}, 5, y), IndicatorTensor(8, 2, 2));
  EXPECT_THROW(filter_by_span(z, 0), std::invalid_argument);
}

TEST(SpanFilter, MatchesRunLengthOracle) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const IndicatorTensor z = random_indicator(20, 6, 6, 0.12 + 0.002 * static_cast<double>(seed), seed + 1000);
    const auto comps = connected_components_3d(z);
    for (int gamma : {1, 2, 3, 5, 10}) {
      IndicatorTensor expected(z.frames, z.height, z.width);
      for (const Component& c : comps) {
        std::set<Eigen::Index> frames;
        for (const Voxel& v : c) frames.insert(v.t);
        EXPECT_EQ(longest_frame_run(c), run_oracle(frames));
        if (run_oracle(frames) >= gamma)
          for (const Voxel& v : c) expected.at(v.t, v.i, v.j) = 1;
      }
      EXPECT_EQ(filter_components(comps, gamma, z), expected) << seed << " gamma " << gamma;
    }
  }
}

TEST(SpanFilter, MonotoneAndNeverAdds) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const IndicatorTensor z = random_indicator(20, 8, 8, 0.2, seed + 77);
    IndicatorTensor prev = z;
    for (int gamma : {1, 5, 10}) {
      const IndicatorTensor f = filter_by_span(z, gamma);
      for (std::size_t k = 0; k < z.data.size(); ++k) {
        EXPECT_LE(f.data[k], prev.data[k]);
        EXPECT_LE(f.data[k], z.data[k]);
      }
      prev = f;
    }
  }
}

TEST(MaskErrors, KeepsOnlyDetected) {
  ErrorTensor e(1, 1, 3);
  e.data = {0.1, 0.2, 0.3};
  IndicatorTensor z(1, 1, 3);
  z.data = {0, 1, 1};
  EXPECT_EQ(mask_errors(e, z).data, (std::vector<double>{0.0, 0.2, 0.3}));
  EXPECT_THROW(mask_errors(e, IndicatorTensor(1, 1, 2)), std::invalid_argument);
}

TEST(AppendFrames, ConcatenatesAndChecksShape) {
  IndicatorTensor a;
  IndicatorTensor b(2, 3, 4, 1);
  append_frames(a, b);
  append_frames(a, IndicatorTensor(1, 3, 4, 0));
  EXPECT_EQ(a.frames, 3);
  EXPECT_EQ(a.at(1, 2, 3), 1);
  EXPECT_EQ(a.at(2, 2, 3), 0);
  EXPECT_THROW(append_frames(a, IndicatorTensor(1, 3, 5)), std::invalid_argument);
}
