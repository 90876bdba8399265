#pragma once

// Binary restricted Boltzmann machine with Bernoulli visible and hidden units.
//
// Visible values may be real numbers in [0,1]; they are treated as Bernoulli
// means in the positive phase. Batches are row-major: one sample per row.

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include <Eigen/Core>

namespace rbmad {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Rng = std::mt19937_64;

struct RbmParams {
  Vector visible_bias;  // a, length M
  Vector hidden_bias;   // b, length K
  Matrix weights;       // W, M x K

  RbmParams() = default;
  RbmParams(Eigen::Index n_visible, Eigen::Index n_hidden);

  Eigen::Index n_visible() const { return visible_bias.size(); }
  Eigen::Index n_hidden() const { return hidden_bias.size(); }

  // Throws std::invalid_argument if the bias lengths disagree with W.
  void check_consistent() const;
  bool all_finite() const;

  bool operator==(const RbmParams& other) const;
};

struct RbmGradient {
  Vector d_visible_bias;
  Vector d_hidden_bias;
  Matrix d_weights;

  RbmGradient() = default;
  RbmGradient(Eigen::Index n_visible, Eigen::Index n_hidden);

  double squared_norm() const;
};

struct TrainConfig {
  double learning_rate = 0.1;
  int cd_steps = 1;
  int epochs = 50;
  int batch_size = 64;
  std::uint64_t seed = 0;
  double init_weight_std = 0.01;
  bool persistent = false;
  double momentum = 0.0;
  double weight_decay = 0.0;

  void validate() const;
  bool operator==(const TrainConfig&) const = default;
};

// Sufficient statistics of one phase: batch means of v, h and v h^T.
struct PhaseStatistics {
  Vector visible_mean;
  Vector hidden_mean;
  Matrix visible_hidden;
};

// Persistent Gibbs chains for PCD. Empty until the first gradient call seeds
// them from the batch.
struct PersistentChains {
  RowMatrix visible;
};

double sigmoid(double x);

// -(a^T v + b^T h + v^T W h)
double energy(const Vector& v, const Vector& h, const RbmParams& params);

// Sigmoid of the hidden pre-activations b + W^T v.
Vector hidden_conditional(const Vector& v, const RbmParams& params);
// Sigmoid of the visible pre-activations a + W h.
Vector visible_conditional(const Vector& h, const RbmParams& params);

// Row-wise batched forms of the conditionals.
RowMatrix hidden_conditional_batch(const RowMatrix& v, const RbmParams& params);
RowMatrix visible_conditional_batch(const RowMatrix& h, const RbmParams& params);

Vector sample_bernoulli(const Vector& probs, Rng& rng);
RowMatrix sample_bernoulli(const RowMatrix& probs, Rng& rng);

struct GibbsResult {
  Vector visible;       // final binary visible sample
  Vector hidden_probs;  // p(h = 1 | visible)
};

GibbsResult gibbs_chain(const Vector& v0, int steps, const RbmParams& params, Rng& rng);

// Runs `steps` rounds of h ~ p(h|v), v ~ p(v|h) on every row.
RowMatrix gibbs_steps_batch(const RowMatrix& v0, int steps, const RbmParams& params, Rng& rng);

// Data-dependent statistics, computed analytically from p(h|v).
PhaseStatistics positive_statistics(const RowMatrix& batch, const RbmParams& params);

// Model statistics from Gibbs chains: chains start at the batch (CD-m) or
// continue from `chains` (PCD) and are advanced `cd_steps` rounds.
PhaseStatistics sampled_negative_statistics(const RowMatrix& batch, const RbmParams& params,
                                            int cd_steps, Rng& rng,
                                            PersistentChains* chains = nullptr);

// positive - negative, shaped as a gradient.
RbmGradient gradient_from_statistics(const PhaseStatistics& positive,
                                     const PhaseStatistics& negative);

RbmGradient cd_gradient(const RowMatrix& batch, const RbmParams& params, int cd_steps, Rng& rng,
                        PersistentChains* chains = nullptr);

// psi + learning_rate * gradient. Throws on non-positive rate or non-finite result.
RbmParams apply_update(const RbmParams& params, const RbmGradient& gradient,
                       double learning_rate);

// Normal(0, init_weight_std^2) weights, zero biases.
RbmParams initialize_params(Eigen::Index n_visible, Eigen::Index n_hidden,
                            const TrainConfig& config);

// Epoch loop over shuffled minibatches starting from `initial`.
RbmParams continue_training(const RbmParams& initial, const RowMatrix& patches,
                            const TrainConfig& config);

RbmParams train(const RowMatrix& patches, Eigen::Index n_hidden, const TrainConfig& config);

// Packs vectors into rows. Throws if the lengths differ.
RowMatrix stack_rows(const std::vector<Vector>& rows);

// Mean-field reconstruction: p(v | h = p(h|v)).
Vector reconstruct(const Vector& v, const RbmParams& params);
RowMatrix reconstruct_batch(const RowMatrix& v, const RbmParams& params);

// Sampling reconstruction: h ~ p(h|v), v ~ p(v|h).
Vector reconstruct_sampled(const Vector& v, const RbmParams& params, Rng& rng);

}  // namespace rbmad
