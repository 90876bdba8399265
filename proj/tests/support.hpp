#pragma once

// Shared fixtures for the unit tests.

#include <atomic>
#include <filesystem>
#include <random>
#include <string>

#include <unistd.h>

#include "rbmad/rbm.hpp"

namespace rbmad::testing {

inline RbmParams random_params(Eigen::Index m, Eigen::Index k, std::uint64_t seed, double stddev = 1.0) {
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, stddev);
  RbmParams p(m, k);
  for (Eigen::Index i = 0; i < m; ++i) p.visible_bias(i) = normal(rng);
  for (Eigen::Index j = 0; j < k; ++j) p.hidden_bias(j) = normal(rng);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < k; ++j) p.weights(i, j) = normal(rng);
  return p;
}

// Removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("rbmad_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace rbmad::testing
