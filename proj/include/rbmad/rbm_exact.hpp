#pragma once

// Exact quantities for small RBMs by enumerating visible configurations.
// Hidden units are summed out analytically. Accumulation runs in long double.

#include <cstdint>
#include <vector>

#include "rbmad/rbm.hpp"

namespace rbmad {

inline constexpr Eigen::Index kMaxEnumeratedUnits = 24;

// Bit k of `state` becomes unit k.
Vector binary_state(std::uint64_t state, Eigen::Index n_units);

// F(v) = -a^T v - sum_j log(1 + exp(b_j + v^T w_j)), so p(v) = exp(-F(v)) / Z.
double free_energy(const Vector& v, const RbmParams& params);

// log Z over all (v, h). Throws std::length_error if M + K exceeds the guard.
double exact_log_partition(const RbmParams& params);

double exact_log_likelihood(const Vector& v, const RbmParams& params);
double exact_mean_log_likelihood(const RowMatrix& data, const RbmParams& params);

// log p(v, h) = -E(v, h) - log Z.
double exact_log_joint(const Vector& v, const Vector& h, const RbmParams& params);

// p(v) for every visible state, indexed as in binary_state.
std::vector<double> exact_visible_distribution(const RbmParams& params);

// Model expectations <v>, <p(h|v)>, <v p(h|v)^T> under p(v).
PhaseStatistics exact_negative_statistics(const RbmParams& params);

// Exact gradient of log p(v).
RbmGradient exact_gradient(const Vector& v, const RbmParams& params);

// Exact gradient of the mean log-likelihood of a batch.
RbmGradient exact_batch_gradient(const RowMatrix& batch, const RbmParams& params);

}  // namespace rbmad
