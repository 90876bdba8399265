#include "rbmad/rbm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace rbmad {

namespace {

void require_length(Eigen::Index actual, Eigen::Index expected, const char* what) {
  if (actual != expected) {
    throw std::invalid_argument(std::string(what) + ": expected length " +
                                std::to_string(expected) + ", got " + std::to_string(actual));
  }
}

// exp(-x) saturates to inf or 0 at the extremes, which still gives 0 or 1.
RowMatrix sigmoid_rows(RowMatrix pre) {
  pre = (1.0 + (-pre.array()).exp()).inverse().matrix();
  return pre;
}

}  // namespace

RbmParams::RbmParams(Eigen::Index n_visible, Eigen::Index n_hidden)
    : visible_bias(Vector::Zero(n_visible)),
      hidden_bias(Vector::Zero(n_hidden)),
      weights(Matrix::Zero(n_visible, n_hidden)) {}

void RbmParams::check_consistent() const {
  if (weights.rows() != visible_bias.size() || weights.cols() != hidden_bias.size()) {
    throw std::invalid_argument("rbm params: weight matrix is " + std::to_string(weights.rows()) +
                                "x" + std::to_string(weights.cols()) + " but biases are " +
                                std::to_string(visible_bias.size()) + "/" +
                                std::to_string(hidden_bias.size()));
  }
}

bool RbmParams::all_finite() const {
  return visible_bias.allFinite() && hidden_bias.allFinite() && weights.allFinite();
}

bool RbmParams::operator==(const RbmParams& other) const {
  return visible_bias.size() == other.visible_bias.size() &&
         hidden_bias.size() == other.hidden_bias.size() && visible_bias == other.visible_bias &&
         hidden_bias == other.hidden_bias && weights == other.weights;
}

RbmGradient::RbmGradient(Eigen::Index n_visible, Eigen::Index n_hidden)
    : d_visible_bias(Vector::Zero(n_visible)),
      d_hidden_bias(Vector::Zero(n_hidden)),
      d_weights(Matrix::Zero(n_visible, n_hidden)) {}

double RbmGradient::squared_norm() const {
  return d_visible_bias.squaredNorm() + d_hidden_bias.squaredNorm() + d_weights.squaredNorm();
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be > 0");
  if (cd_steps < 1) throw std::invalid_argument("cd_steps must be >= 1");
  if (epochs < 0) throw std::invalid_argument("epochs must be >= 0");
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (!(init_weight_std >= 0.0)) throw std::invalid_argument("init_weight_std must be >= 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw std::invalid_argument("momentum must be in [0,1)");
  if (!(weight_decay >= 0.0)) throw std::invalid_argument("weight_decay must be >= 0");
}

double sigmoid(double x) {
  // Split on sign so exp never overflows.
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double energy(const Vector& v, const Vector& h, const RbmParams& params) {
  params.check_consistent();
  require_length(v.size(), params.n_visible(), "energy visible");
  require_length(h.size(), params.n_hidden(), "energy hidden");
  return -(params.visible_bias.dot(v) + params.hidden_bias.dot(h) + v.dot(params.weights * h));
}

Vector hidden_conditional(const Vector& v, const RbmParams& params) {
  params.check_consistent();
  require_length(v.size(), params.n_visible(), "hidden_conditional");
  Vector pre = params.hidden_bias + params.weights.transpose() * v;
  return pre.unaryExpr([](double x) { return sigmoid(x); });
}

Vector visible_conditional(const Vector& h, const RbmParams& params) {
  params.check_consistent();
  require_length(h.size(), params.n_hidden(), "visible_conditional");
  Vector pre = params.visible_bias + params.weights * h;
  return pre.unaryExpr([](double x) { return sigmoid(x); });
}

RowMatrix hidden_conditional_batch(const RowMatrix& v, const RbmParams& params) {
  params.check_consistent();
  require_length(v.cols(), params.n_visible(), "hidden_conditional_batch");
  RowMatrix pre = v * params.weights;
  pre.rowwise() += params.hidden_bias.transpose();
  return sigmoid_rows(std::move(pre));
}

RowMatrix visible_conditional_batch(const RowMatrix& h, const RbmParams& params) {
  params.check_consistent();
  require_length(h.cols(), params.n_hidden(), "visible_conditional_batch");
  RowMatrix pre = h * params.weights.transpose();
  pre.rowwise() += params.visible_bias.transpose();
  return sigmoid_rows(std::move(pre));
}

Vector sample_bernoulli(const Vector& probs, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Vector out(probs.size());
  for (Eigen::Index k = 0; k < probs.size(); ++k) {
    const double p = probs[k];
    if (!(p >= 0.0 && p <= 1.0)) {
      throw std::invalid_argument("sample_bernoulli: probability out of [0,1]: " +
                                  std::to_string(p));
    }
    out[k] = unit(rng) < p ? 1.0 : 0.0;
  }
  return out;
}

RowMatrix sample_bernoulli(const RowMatrix& probs, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  RowMatrix out(probs.rows(), probs.cols());
  const double* src = probs.data();
  double* dst = out.data();
  for (Eigen::Index k = 0; k < probs.size(); ++k) {
    const double p = src[k];
    if (!(p >= 0.0 && p <= 1.0)) {
      throw std::invalid_argument("sample_bernoulli: probability out of [0,1]: " +
                                  std::to_string(p));
    }
    dst[k] = unit(rng) < p ? 1.0 : 0.0;
  }
  return out;
}

GibbsResult gibbs_chain(const Vector& v0, int steps, const RbmParams& params, Rng& rng) {
  if (steps < 1) throw std::invalid_argument("gibbs_chain: steps must be >= 1");
  require_length(v0.size(), params.n_visible(), "gibbs_chain");
  Vector v = v0;
  for (int s = 0; s < steps; ++s) {
    const Vector h = sample_bernoulli(hidden_conditional(v, params), rng);
    v = sample_bernoulli(visible_conditional(h, params), rng);
  }
  Vector hp = hidden_conditional(v, params);
  return {std::move(v), std::move(hp)};
}

namespace {

// Gibbs steps whose first hidden draw uses already computed p(h | v0).
RowMatrix gibbs_from_hidden(const RowMatrix& hidden_probs, int steps, const RbmParams& params,
                            Rng& rng) {
  RowMatrix v = sample_bernoulli(visible_conditional_batch(sample_bernoulli(hidden_probs, rng), params), rng);
  for (int s = 1; s < steps; ++s) {
    const RowMatrix h = sample_bernoulli(hidden_conditional_batch(v, params), rng);
    v = sample_bernoulli(visible_conditional_batch(h, params), rng);
  }
  return v;
}

PhaseStatistics statistics_with(const RowMatrix& v, const RowMatrix& hp) {
  const double inv_n = 1.0 / static_cast<double>(v.rows());
  PhaseStatistics s;
  s.visible_mean = v.colwise().sum().transpose() * inv_n;
  s.hidden_mean = hp.colwise().sum().transpose() * inv_n;
  s.visible_hidden = (v.transpose() * hp) * inv_n;
  return s;
}

PhaseStatistics statistics_at(const RowMatrix& v, const RbmParams& params) {
  return statistics_with(v, hidden_conditional_batch(v, params));
}

}  // namespace

RowMatrix gibbs_steps_batch(const RowMatrix& v0, int steps, const RbmParams& params, Rng& rng) {
  if (steps < 1) throw std::invalid_argument("gibbs_steps_batch: steps must be >= 1");
  return gibbs_from_hidden(hidden_conditional_batch(v0, params), steps, params, rng);
}

PhaseStatistics positive_statistics(const RowMatrix& batch, const RbmParams& params) {
  if (batch.rows() == 0) throw std::invalid_argument("positive_statistics: empty batch");
  return statistics_at(batch, params);
}

PhaseStatistics sampled_negative_statistics(const RowMatrix& batch, const RbmParams& params,
                                            int cd_steps, Rng& rng, PersistentChains* chains) {
  if (batch.rows() == 0) throw std::invalid_argument("negative statistics: empty batch");
  if (chains == nullptr) {
    return statistics_at(gibbs_steps_batch(batch, cd_steps, params, rng), params);
  }
  if (chains->visible.rows() == 0) {
    chains->visible = sample_bernoulli(batch, rng);
  } else if (chains->visible.cols() != batch.cols()) {
    throw std::invalid_argument("persistent chains have the wrong visible size");
  }
  chains->visible = gibbs_steps_batch(chains->visible, cd_steps, params, rng);
  return statistics_at(chains->visible, params);
}

RbmGradient gradient_from_statistics(const PhaseStatistics& positive,
                                     const PhaseStatistics& negative) {
  RbmGradient g;
  g.d_visible_bias = positive.visible_mean - negative.visible_mean;
  g.d_hidden_bias = positive.hidden_mean - negative.hidden_mean;
  g.d_weights = positive.visible_hidden - negative.visible_hidden;
  return g;
}

RbmGradient cd_gradient(const RowMatrix& batch, const RbmParams& params, int cd_steps, Rng& rng,
                        PersistentChains* chains) {
  if (batch.rows() == 0) throw std::invalid_argument("cd_gradient: empty batch");
  params.check_consistent();
  require_length(batch.cols(), params.n_visible(), "cd_gradient");
  if (chains != nullptr) {
    return gradient_from_statistics(positive_statistics(batch, params),
                                    sampled_negative_statistics(batch, params, cd_steps, rng, chains));
  }
  if (cd_steps < 1) throw std::invalid_argument("cd_gradient: cd_steps must be >= 1");
  // The data's hidden probabilities serve the positive phase and the first Gibbs draw.
  const RowMatrix hp = hidden_conditional_batch(batch, params);
  const PhaseStatistics pos = statistics_with(batch, hp);
  return gradient_from_statistics(pos, statistics_at(gibbs_from_hidden(hp, cd_steps, params, rng), params));
}

RbmParams apply_update(const RbmParams& params, const RbmGradient& gradient,
                       double learning_rate) {
  if (!(learning_rate > 0.0)) throw std::invalid_argument("apply_update: learning rate must be > 0");
  params.check_consistent();
  if (gradient.d_visible_bias.size() != params.n_visible() ||
      gradient.d_hidden_bias.size() != params.n_hidden() ||
      gradient.d_weights.rows() != params.weights.rows() ||
      gradient.d_weights.cols() != params.weights.cols()) {
    throw std::invalid_argument("apply_update: gradient shape does not match params");
  }
  RbmParams out = params;
  out.visible_bias += learning_rate * gradient.d_visible_bias;
  out.hidden_bias += learning_rate * gradient.d_hidden_bias;
  out.weights += learning_rate * gradient.d_weights;
  if (!out.all_finite()) throw std::runtime_error("apply_update: non-finite parameters");
  return out;
}

RbmParams initialize_params(Eigen::Index n_visible, Eigen::Index n_hidden,
                            const TrainConfig& config) {
  RbmParams params(n_visible, n_hidden);
  if (config.init_weight_std > 0.0) {
    Rng rng(config.seed);
    std::normal_distribution<double> normal(0.0, config.init_weight_std);
    // Column-major fill order is part of the reproducibility contract.
    for (Eigen::Index j = 0; j < n_hidden; ++j) {
      for (Eigen::Index i = 0; i < n_visible; ++i) params.weights(i, j) = normal(rng);
    }
  }
  return params;
}

RbmParams continue_training(const RbmParams& initial, const RowMatrix& patches,
                            const TrainConfig& config) {
  config.validate();
  initial.check_consistent();
  if (patches.rows() > 0) {
    require_length(patches.cols(), initial.n_visible(), "train patches");
    if (!patches.allFinite() || patches.minCoeff() < 0.0 || patches.maxCoeff() > 1.0) {
      throw std::invalid_argument("train: patch values must lie in [0,1]");
    }
  }

  RbmParams params = initial;
  if (config.epochs == 0 || patches.rows() == 0) return params;

  // Offset so initialization and training draws come from distinct streams.
  Rng rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(patches.rows()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});

  PersistentChains chains;
  RbmGradient velocity(params.n_visible(), params.n_hidden());
  const Eigen::Index batch = config.batch_size;
  RowMatrix minibatch;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (Eigen::Index start = 0; start < patches.rows(); start += batch) {
      const Eigen::Index n = std::min(batch, patches.rows() - start);
      minibatch.resize(n, patches.cols());
      for (Eigen::Index r = 0; r < n; ++r) {
        minibatch.row(r) = patches.row(order[static_cast<std::size_t>(start + r)]);
      }
      RbmGradient grad = cd_gradient(minibatch, params, config.cd_steps, rng,
                                     config.persistent ? &chains : nullptr);
      if (config.weight_decay > 0.0) grad.d_weights -= config.weight_decay * params.weights;
      if (config.momentum > 0.0) {
        velocity.d_visible_bias = config.momentum * velocity.d_visible_bias + grad.d_visible_bias;
        velocity.d_hidden_bias = config.momentum * velocity.d_hidden_bias + grad.d_hidden_bias;
        velocity.d_weights = config.momentum * velocity.d_weights + grad.d_weights;
        params = apply_update(params, velocity, config.learning_rate);
      } else {
        params = apply_update(params, grad, config.learning_rate);
      }
    }
  }
  return params;
}

RbmParams train(const RowMatrix& patches, Eigen::Index n_hidden, const TrainConfig& config) {
  config.validate();
  if (n_hidden < 1) throw std::invalid_argument("train: n_hidden must be >= 1");
  if (patches.cols() == 0) throw std::invalid_argument("train: patches have zero length");
  return continue_training(initialize_params(patches.cols(), n_hidden, config), patches, config);
}

RowMatrix stack_rows(const std::vector<Vector>& rows) {
  if (rows.empty()) return {};
  RowMatrix out(static_cast<Eigen::Index>(rows.size()), rows.front().size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != out.cols()) {
      throw std::invalid_argument("stack_rows: row " + std::to_string(r) + " has length " +
                                  std::to_string(rows[r].size()) + ", expected " +
                                  std::to_string(out.cols()));
    }
    out.row(static_cast<Eigen::Index>(r)) = rows[r].transpose();
  }
  return out;
}

Vector reconstruct(const Vector& v, const RbmParams& params) {
  return visible_conditional(hidden_conditional(v, params), params);
}

RowMatrix reconstruct_batch(const RowMatrix& v, const RbmParams& params) {
  return visible_conditional_batch(hidden_conditional_batch(v, params), params);
}

Vector reconstruct_sampled(const Vector& v, const RbmParams& params, Rng& rng) {
  const Vector h = sample_bernoulli(hidden_conditional(v, params), rng);
  return sample_bernoulli(visible_conditional(h, params), rng);
}

}  // namespace rbmad
