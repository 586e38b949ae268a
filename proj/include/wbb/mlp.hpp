#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <span>
#include <vector>

#include "wbb/rng.hpp"

namespace wbb {

struct MlpShape {
  Eigen::Index input = 784;
  Eigen::Index hidden1 = 128;
  Eigen::Index hidden2 = 64;
  Eigen::Index output = 10;

  bool operator==(const MlpShape&) const = default;
};

/// Weights and biases of input -> ReLU -> ReLU -> softmax.
struct MlpParams {
  Eigen::MatrixXd W0;  // hidden1 x input
  Eigen::VectorXd b0;
  Eigen::MatrixXd W1;  // hidden2 x hidden1
  Eigen::VectorXd b1;
  Eigen::MatrixXd W2;  // output x hidden2
  Eigen::VectorXd b2;

  static MlpParams zeros(const MlpShape& shape = {});
  MlpShape shape() const;
  std::size_t size() const;
  bool all_finite() const;

  /// Concatenation W0, b0, W1, b1, W2, b2, matrices column-major.
  std::vector<double> flatten() const;
  static MlpParams unflatten(std::span<const double> values, const MlpShape& shape = {});

  /// this += a * other
  void axpy(double a, const MlpParams& other);

  bool operator==(const MlpParams&) const = default;
};

/// One example per column; targets are one-hot columns.
struct LabeledSet {
  Eigen::MatrixXd inputs;   // features x n
  Eigen::MatrixXd targets;  // classes x n

  std::size_t size() const { return static_cast<std::size_t>(inputs.cols()); }
  std::vector<int> labels() const;
  /// First `count` examples.
  LabeledSet head(std::size_t count) const;
  LabeledSet gather(std::span<const std::size_t> indices) const;

  static LabeledSet from_labels(Eigen::MatrixXd inputs, std::span<const int> labels, int classes = 10);
};

/// Throws DomainError unless every column of `targets` is one-hot.
void validate_one_hot(const Eigen::MatrixXd& targets);

Eigen::VectorXd forward(const MlpParams& params, const Eigen::VectorXd& x);
Eigen::MatrixXd forward_batch(const MlpParams& params, const Eigen::MatrixXd& inputs);

/// sum_i w_i * CE(y_i, yhat(x_i)) + lambda * w_p * sum_l ||W^(l)||_F^2,
/// with CE the usual -sum_k y_k log yhat_k.
double loss(const MlpParams& params, const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets,
            std::span<const double> weights, double lambda, double prior_weight);

struct LossGradient {
  double value = 0.0;
  MlpParams gradient;
};

/// Analytic gradient of `loss` by back-propagation.
LossGradient loss_and_gradient(const MlpParams& params, const Eigen::MatrixXd& inputs,
                               const Eigen::MatrixXd& targets, std::span<const double> weights, double lambda,
                               double prior_weight);

MlpParams backward(const MlpParams& params, const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets,
                   std::span<const double> weights, double lambda, double prior_weight);

struct SgdSchedule {
  enum class Kind { Constant, ExpDecay };
  Kind kind = Kind::Constant;
  double rate = 3e-4;   // t for Constant, a for ExpDecay
  double decay = 0.0;   // ExpDecay: t_k = a exp(-k * decay)
  std::size_t batch_size = 32;
  std::size_t epochs = 20;

  static SgdSchedule constant(double rate, std::size_t batch_size, std::size_t epochs);
  static SgdSchedule exp_decay(double a, double decay, std::size_t batch_size, std::size_t epochs);
  double step_size(std::size_t k) const;
  void validate() const;
};

/// Glorot-uniform weights on +-sqrt(6 / (fan_in + fan_out)), zero biases,
/// drawn from the solver substream of `rng`.
MlpParams init_params(const MlpShape& shape, const RngConfig& rng);

/// Indices of minibatch k: b consecutive examples starting at k*b, cycling mod n.
std::vector<std::size_t> cyclic_batch(std::size_t step, std::size_t n, std::size_t batch_size);

/// g^k = (n/b) [ sum_{i in E_k} w_i grad l_i + lambda w_p grad phi ].
LossGradient minibatch_gradient(const MlpParams& params, const LabeledSet& data, const WeightDraw& w,
                                double lambda, std::size_t step, std::size_t batch_size);

struct SgdResult {
  MlpParams params;
  std::size_t steps = 0;
  double final_loss = 0.0;  // full-data weighted objective
};

/// theta^{k+1} = theta^k - t_k g^k over epochs * ceil(n / b) steps.
/// Throws NumericalError when a minibatch loss becomes non-finite.
/// `initial` replaces the seeded initialization when given.
SgdResult sgd_fit(const LabeledSet& data, const WeightDraw& w, double lambda, const SgdSchedule& schedule,
                  const RngConfig& rng, const MlpShape& shape = {}, const MlpParams* initial = nullptr);

/// Fraction of argmax predictions equal to the label; ties go to the lowest class.
double evaluate_accuracy(const MlpParams& params, const LabeledSet& test);

}  // namespace wbb
