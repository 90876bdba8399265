#include "rbmad/rbm_exact.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace rbmad {

namespace {

void guard_size(const RbmParams& params) {
  params.check_consistent();
  if (params.n_visible() + params.n_hidden() > kMaxEnumeratedUnits) {
    throw std::length_error("exact enumeration limited to M + K <= " +
                            std::to_string(kMaxEnumeratedUnits) + ", got " +
                            std::to_string(params.n_visible() + params.n_hidden()));
  }
}

long double softplus(long double x) {
  if (x > 0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

long double negative_free_energy(const Vector& v, const RbmParams& params) {
  long double total = 0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    total += static_cast<long double>(params.visible_bias[i]) * v[i];
  }
  for (Eigen::Index j = 0; j < params.n_hidden(); ++j) {
    long double pre = params.hidden_bias[j];
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      pre += static_cast<long double>(params.weights(i, j)) * v[i];
    }
    total += softplus(pre);
  }
  return total;
}

std::uint64_t state_count(Eigen::Index n) { return std::uint64_t{1} << n; }

long double log_partition_ld(const RbmParams& params) {
  const std::uint64_t n_states = state_count(params.n_visible());
  std::vector<long double> terms(n_states);
  long double peak = -std::numeric_limits<long double>::infinity();
  for (std::uint64_t s = 0; s < n_states; ++s) {
    terms[s] = negative_free_energy(binary_state(s, params.n_visible()), params);
    peak = std::max(peak, terms[s]);
  }
  long double sum = 0;
  for (long double t : terms) sum += std::exp(t - peak);
  return peak + std::log(sum);
}

}  // namespace

Vector binary_state(std::uint64_t state, Eigen::Index n_units) {
  Vector v(n_units);
  for (Eigen::Index k = 0; k < n_units; ++k) v[k] = ((state >> k) & 1U) ? 1.0 : 0.0;
  return v;
}

double free_energy(const Vector& v, const RbmParams& params) {
  params.check_consistent();
  if (v.size() != params.n_visible()) throw std::invalid_argument("free_energy: dimension mismatch");
  return static_cast<double>(-negative_free_energy(v, params));
}

double exact_log_partition(const RbmParams& params) {
  guard_size(params);
  return static_cast<double>(log_partition_ld(params));
}

double exact_log_likelihood(const Vector& v, const RbmParams& params) {
  guard_size(params);
  if (v.size() != params.n_visible()) {
    throw std::invalid_argument("exact_log_likelihood: dimension mismatch");
  }
  return static_cast<double>(negative_free_energy(v, params) - log_partition_ld(params));
}

double exact_mean_log_likelihood(const RowMatrix& data, const RbmParams& params) {
  guard_size(params);
  if (data.rows() == 0) throw std::invalid_argument("exact_mean_log_likelihood: empty data");
  if (data.cols() != params.n_visible()) {
    throw std::invalid_argument("exact_mean_log_likelihood: dimension mismatch");
  }
  const long double log_z = log_partition_ld(params);
  long double total = 0;
  for (Eigen::Index r = 0; r < data.rows(); ++r) {
    total += negative_free_energy(data.row(r).transpose(), params) - log_z;
  }
  return static_cast<double>(total / data.rows());
}

double exact_log_joint(const Vector& v, const Vector& h, const RbmParams& params) {
  guard_size(params);
  return -energy(v, h, params) - exact_log_partition(params);
}

std::vector<double> exact_visible_distribution(const RbmParams& params) {
  guard_size(params);
  const long double log_z = log_partition_ld(params);
  const std::uint64_t n_states = state_count(params.n_visible());
  std::vector<double> probs(n_states);
  for (std::uint64_t s = 0; s < n_states; ++s) {
    probs[s] = static_cast<double>(
        std::exp(negative_free_energy(binary_state(s, params.n_visible()), params) - log_z));
  }
  return probs;
}

PhaseStatistics exact_negative_statistics(const RbmParams& params) {
  guard_size(params);
  const Eigen::Index m = params.n_visible();
  const Eigen::Index k = params.n_hidden();
  const std::vector<double> probs = exact_visible_distribution(params);

  using LVector = Eigen::Matrix<long double, Eigen::Dynamic, 1>;
  using LMatrix = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
  LVector v_mean = LVector::Zero(m);
  LVector h_mean = LVector::Zero(k);
  LMatrix vh = LMatrix::Zero(m, k);
  for (std::uint64_t s = 0; s < probs.size(); ++s) {
    const Vector v = binary_state(s, m);
    const Vector hp = hidden_conditional(v, params);
    const long double p = probs[s];
    for (Eigen::Index i = 0; i < m; ++i) {
      if (v[i] == 0.0) continue;
      v_mean[i] += p;
      for (Eigen::Index j = 0; j < k; ++j) vh(i, j) += p * hp[j];
    }
    for (Eigen::Index j = 0; j < k; ++j) h_mean[j] += p * hp[j];
  }
  PhaseStatistics stats;
  stats.visible_mean = v_mean.cast<double>();
  stats.hidden_mean = h_mean.cast<double>();
  stats.visible_hidden = vh.cast<double>();
  return stats;
}

RbmGradient exact_gradient(const Vector& v, const RbmParams& params) {
  RowMatrix batch(1, v.size());
  batch.row(0) = v.transpose();
  return exact_batch_gradient(batch, params);
}

RbmGradient exact_batch_gradient(const RowMatrix& batch, const RbmParams& params) {
  guard_size(params);
  if (batch.cols() != params.n_visible()) {
    throw std::invalid_argument("exact_gradient: dimension mismatch");
  }
  return gradient_from_statistics(positive_statistics(batch, params),
                                  exact_negative_statistics(params));
}

}  // namespace rbmad
