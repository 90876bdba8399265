#include "rbmad/volume.hpp"

#include <algorithm>
#include <deque>

namespace rbmad {

IndicatorTensor threshold_errors(const ErrorTensor& errors, double beta) {
  IndicatorTensor z(errors.frames, errors.height, errors.width);
  for (std::size_t k = 0; k < errors.data.size(); ++k) z.data[k] = errors.data[k] >= beta ? 1 : 0;
  return z;
}

std::vector<Component> connected_components_3d(const IndicatorTensor& z) {
  std::vector<Component> components;
  std::vector<std::uint8_t> visited(z.data.size(), 0);
  std::deque<Voxel> queue;

  for (Eigen::Index t = 0; t < z.frames; ++t) {
    for (Eigen::Index i = 0; i < z.height; ++i) {
      for (Eigen::Index j = 0; j < z.width; ++j) {
        const std::size_t seed = z.offset(t, i, j);
        if (!z.data[seed] || visited[seed]) continue;
        Component comp;
        visited[seed] = 1;
        queue.push_back({t, i, j});
        while (!queue.empty()) {
          const Voxel v = queue.front();
          queue.pop_front();
          comp.push_back(v);
          for (Eigen::Index dt = -1; dt <= 1; ++dt) {
            const Eigen::Index nt = v.t + dt;
            if (nt < 0 || nt >= z.frames) continue;
            for (Eigen::Index di = -1; di <= 1; ++di) {
              const Eigen::Index ni = v.i + di;
              if (ni < 0 || ni >= z.height) continue;
              for (Eigen::Index dj = -1; dj <= 1; ++dj) {
                const Eigen::Index nj = v.j + dj;
                if (nj < 0 || nj >= z.width) continue;
                const std::size_t n = z.offset(nt, ni, nj);
                if (z.data[n] && !visited[n]) {
                  visited[n] = 1;
                  queue.push_back({nt, ni, nj});
                }
              }
            }
          }
        }
        std::sort(comp.begin(), comp.end());
        components.push_back(std::move(comp));
      }
    }
  }
  return components;
}

Eigen::Index longest_frame_run(const Component& component) {
  std::vector<Eigen::Index> frames;
  frames.reserve(component.size());
  for (const Voxel& v : component) frames.push_back(v.t);
  std::sort(frames.begin(), frames.end());
  frames.erase(std::unique(frames.begin(), frames.end()), frames.end());
  Eigen::Index best = 0;
  Eigen::Index run = 0;
  for (std::size_t k = 0; k < frames.size(); ++k) {
    run = (k > 0 && frames[k] == frames[k - 1] + 1) ? run + 1 : 1;
    best = std::max(best, run);
  }
  return best;
}

IndicatorTensor filter_components(const std::vector<Component>& components, int gamma,
                                  const IndicatorTensor& z) {
  if (gamma < 1) throw std::invalid_argument("filter_components: gamma must be >= 1");
  IndicatorTensor out = z;
  for (const Component& comp : components) {
    if (longest_frame_run(comp) >= gamma) continue;
    for (const Voxel& v : comp) out.at(v.t, v.i, v.j) = 0;
  }
  return out;
}

IndicatorTensor filter_by_span(const IndicatorTensor& z, int gamma) {
  if (gamma == 1) return z;
  return filter_components(connected_components_3d(z), gamma, z);
}

ErrorTensor mask_errors(const ErrorTensor& errors, const IndicatorTensor& z) {
  if (!errors.same_shape(z)) throw std::invalid_argument("mask_errors: shape mismatch");
  ErrorTensor out = errors;
  for (std::size_t k = 0; k < out.data.size(); ++k) {
    if (!z.data[k]) out.data[k] = 0.0;
  }
  return out;
}

}  // namespace rbmad
