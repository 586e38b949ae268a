#include "wbb/mlp.hpp"

#include <cmath>
#include <string>

#include "wbb/error.hpp"

namespace wbb {
namespace {

Eigen::MatrixXd relu(const Eigen::MatrixXd& m) { return m.cwiseMax(0.0); }

// Column-wise log-softmax.
Eigen::MatrixXd log_softmax(const Eigen::MatrixXd& logits) {
  Eigen::MatrixXd out(logits.rows(), logits.cols());
  for (Eigen::Index c = 0; c < logits.cols(); ++c) {
    const double mx = logits.col(c).maxCoeff();
    const double lse = mx + std::log((logits.col(c).array() - mx).exp().sum());
    out.col(c) = logits.col(c).array() - lse;
  }
  return out;
}

struct Activations {
  Eigen::MatrixXd h1;
  Eigen::MatrixXd h2;
  Eigen::MatrixXd log_probs;
};

Activations run_forward(const MlpParams& p, const Eigen::MatrixXd& x) {
  if (x.rows() != p.W0.cols()) throw DomainError("mlp: input dimension mismatch");
  Activations a;
  a.h1 = relu((p.W0 * x).colwise() + p.b0);
  a.h2 = relu((p.W1 * a.h1).colwise() + p.b1);
  a.log_probs = log_softmax((p.W2 * a.h2).colwise() + p.b2);
  return a;
}

void check_batch(const MlpParams& p, const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                 std::span<const double> w, double lambda, double prior_weight) {
  if (x.cols() != y.cols()) throw DomainError("mlp: input and target counts differ");
  if (static_cast<std::size_t>(x.cols()) != w.size()) throw DomainError("mlp: weight count differs from batch size");
  if (y.rows() != p.W2.rows()) throw DomainError("mlp: target dimension mismatch");
  if (!(lambda >= 0.0)) throw DomainError("mlp: lambda must be >= 0");
  if (!(prior_weight > 0.0)) throw DomainError("mlp: prior weight must be positive");
  validate_one_hot(y);
}

double penalty(const MlpParams& p) { return p.W0.squaredNorm() + p.W1.squaredNorm() + p.W2.squaredNorm(); }

double data_term(const Eigen::MatrixXd& log_probs, const Eigen::MatrixXd& y, std::span<const double> w) {
  double s = 0.0;
  for (Eigen::Index c = 0; c < y.cols(); ++c) {
    s -= w[static_cast<std::size_t>(c)] * y.col(c).dot(log_probs.col(c));
  }
  return s;
}

}  // namespace

MlpParams MlpParams::zeros(const MlpShape& s) {
  return MlpParams{Eigen::MatrixXd::Zero(s.hidden1, s.input), Eigen::VectorXd::Zero(s.hidden1),
                   Eigen::MatrixXd::Zero(s.hidden2, s.hidden1), Eigen::VectorXd::Zero(s.hidden2),
                   Eigen::MatrixXd::Zero(s.output, s.hidden2),  Eigen::VectorXd::Zero(s.output)};
}

MlpShape MlpParams::shape() const { return MlpShape{W0.cols(), W0.rows(), W1.rows(), W2.rows()}; }

std::size_t MlpParams::size() const {
  return static_cast<std::size_t>(W0.size() + b0.size() + W1.size() + b1.size() + W2.size() + b2.size());
}

bool MlpParams::all_finite() const {
  return W0.allFinite() && b0.allFinite() && W1.allFinite() && b1.allFinite() && W2.allFinite() && b2.allFinite();
}

std::vector<double> MlpParams::flatten() const {
  std::vector<double> out;
  out.reserve(size());
  auto append = [&](const auto& m) { out.insert(out.end(), m.data(), m.data() + m.size()); };
  append(W0);
  append(b0);
  append(W1);
  append(b1);
  append(W2);
  append(b2);
  return out;
}

MlpParams MlpParams::unflatten(std::span<const double> values, const MlpShape& shape) {
  MlpParams p = zeros(shape);
  if (values.size() != p.size()) throw DomainError("mlp: flattened parameter length mismatch");
  std::size_t at = 0;
  auto take = [&](auto& m) {
    std::copy_n(values.begin() + static_cast<std::ptrdiff_t>(at), m.size(), m.data());
    at += static_cast<std::size_t>(m.size());
  };
  take(p.W0);
  take(p.b0);
  take(p.W1);
  take(p.b1);
  take(p.W2);
  take(p.b2);
  return p;
}

void MlpParams::axpy(double a, const MlpParams& o) {
  W0 += a * o.W0;
  b0 += a * o.b0;
  W1 += a * o.W1;
  b1 += a * o.b1;
  W2 += a * o.W2;
  b2 += a * o.b2;
}

std::vector<int> LabeledSet::labels() const {
  std::vector<int> out(size());
  for (Eigen::Index c = 0; c < targets.cols(); ++c) {
    Eigen::Index k = 0;
    targets.col(c).maxCoeff(&k);
    out[static_cast<std::size_t>(c)] = static_cast<int>(k);
  }
  return out;
}

LabeledSet LabeledSet::head(std::size_t count) const {
  if (count > size()) throw DomainError("labeled set: subset larger than data");
  const auto c = static_cast<Eigen::Index>(count);
  return LabeledSet{inputs.leftCols(c), targets.leftCols(c)};
}

LabeledSet LabeledSet::gather(std::span<const std::size_t> indices) const {
  LabeledSet out{Eigen::MatrixXd(inputs.rows(), static_cast<Eigen::Index>(indices.size())),
                 Eigen::MatrixXd(targets.rows(), static_cast<Eigen::Index>(indices.size()))};
  for (std::size_t k = 0; k < indices.size(); ++k) {
    const auto src = static_cast<Eigen::Index>(indices[k]);
    out.inputs.col(static_cast<Eigen::Index>(k)) = inputs.col(src);
    out.targets.col(static_cast<Eigen::Index>(k)) = targets.col(src);
  }
  return out;
}

LabeledSet LabeledSet::from_labels(Eigen::MatrixXd inputs, std::span<const int> labels, int classes) {
  if (static_cast<std::size_t>(inputs.cols()) != labels.size()) throw DomainError("labeled set: label count mismatch");
  Eigen::MatrixXd targets = Eigen::MatrixXd::Zero(classes, inputs.cols());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= classes) {
      throw DomainError("labeled set: label " + std::to_string(labels[i]) + " out of range");
    }
    targets(labels[i], static_cast<Eigen::Index>(i)) = 1.0;
  }
  return LabeledSet{std::move(inputs), std::move(targets)};
}

void validate_one_hot(const Eigen::MatrixXd& targets) {
  for (Eigen::Index c = 0; c < targets.cols(); ++c) {
    int ones = 0;
    for (Eigen::Index k = 0; k < targets.rows(); ++k) {
      const double v = targets(k, c);
      if (v == 1.0) ++ones;
      else if (v != 0.0) ones = -1000;
    }
    if (ones != 1) throw DomainError("mlp: target column " + std::to_string(c) + " is not one-hot");
  }
}

Eigen::VectorXd forward(const MlpParams& params, const Eigen::VectorXd& x) {
  return run_forward(params, x).log_probs.col(0).array().exp();
}

Eigen::MatrixXd forward_batch(const MlpParams& params, const Eigen::MatrixXd& inputs) {
  return run_forward(params, inputs).log_probs.array().exp();
}

double loss(const MlpParams& params, const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets,
            std::span<const double> weights, double lambda, double prior_weight) {
  check_batch(params, inputs, targets, weights, lambda, prior_weight);
  const Activations a = run_forward(params, inputs);
  return data_term(a.log_probs, targets, weights) + lambda * prior_weight * penalty(params);
}

LossGradient loss_and_gradient(const MlpParams& p, const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                               std::span<const double> w, double lambda, double prior_weight) {
  check_batch(p, x, y, w, lambda, prior_weight);
  const Activations a = run_forward(p, x);
  LossGradient out;
  out.value = data_term(a.log_probs, y, w) + lambda * prior_weight * penalty(p);

  const Eigen::Map<const Eigen::RowVectorXd> wrow(w.data(), static_cast<Eigen::Index>(w.size()));
  // d/dlogits of w_i * CE is w_i (softmax - y).
  Eigen::MatrixXd delta = (a.log_probs.array().exp().matrix() - y).array().rowwise() * wrow.array();
  auto& g = out.gradient;
  const double ridge = 2.0 * lambda * prior_weight;
  g.W2 = delta * a.h2.transpose() + ridge * p.W2;
  g.b2 = delta.rowwise().sum();
  delta = (p.W2.transpose() * delta).cwiseProduct((a.h2.array() > 0.0).cast<double>().matrix());
  g.W1 = delta * a.h1.transpose() + ridge * p.W1;
  g.b1 = delta.rowwise().sum();
  delta = (p.W1.transpose() * delta).cwiseProduct((a.h1.array() > 0.0).cast<double>().matrix());
  g.W0 = delta * x.transpose() + ridge * p.W0;
  g.b0 = delta.rowwise().sum();
  return out;
}

MlpParams backward(const MlpParams& params, const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets,
                   std::span<const double> weights, double lambda, double prior_weight) {
  return loss_and_gradient(params, inputs, targets, weights, lambda, prior_weight).gradient;
}

SgdSchedule SgdSchedule::constant(double rate, std::size_t batch_size, std::size_t epochs) {
  SgdSchedule s{Kind::Constant, rate, 0.0, batch_size, epochs};
  s.validate();
  return s;
}

SgdSchedule SgdSchedule::exp_decay(double a, double decay, std::size_t batch_size, std::size_t epochs) {
  SgdSchedule s{Kind::ExpDecay, a, decay, batch_size, epochs};
  s.validate();
  return s;
}

double SgdSchedule::step_size(std::size_t k) const {
  return kind == Kind::Constant ? rate : rate * std::exp(-static_cast<double>(k) * decay);
}

void SgdSchedule::validate() const {
  if (!(rate > 0.0) || !std::isfinite(rate)) throw DomainError("sgd: step size must be positive");
  if (kind == Kind::ExpDecay && !(decay > 0.0)) throw DomainError("sgd: decay must be positive");
  if (batch_size == 0 || epochs == 0) throw DomainError("sgd: batch size and epochs must be positive");
}

MlpParams init_params(const MlpShape& shape, const RngConfig& rng) {
  Stream s(rng, Substream::Solver);
  MlpParams p = MlpParams::zeros(shape);
  for (Eigen::MatrixXd* m : {&p.W0, &p.W1, &p.W2}) {
    const double limit = std::sqrt(6.0 / static_cast<double>(m->rows() + m->cols()));
    for (Eigen::Index j = 0; j < m->cols(); ++j) {
      for (Eigen::Index i = 0; i < m->rows(); ++i) (*m)(i, j) = limit * (2.0 * s.uniform() - 1.0);
    }
  }
  return p;
}

std::vector<std::size_t> cyclic_batch(std::size_t step, std::size_t n, std::size_t batch_size) {
  if (n == 0 || batch_size == 0) throw DomainError("cyclic_batch: n and batch size must be positive");
  std::vector<std::size_t> idx(batch_size);
  const std::size_t start = (step % n) * (batch_size % n) % n;
  for (std::size_t j = 0; j < batch_size; ++j) idx[j] = (start + j) % n;
  return idx;
}

LossGradient minibatch_gradient(const MlpParams& params, const LabeledSet& data, const WeightDraw& w, double lambda,
                                std::size_t step, std::size_t batch_size) {
  const std::size_t n = data.size();
  if (w.size() != n) throw DomainError("sgd: weight count differs from example count");
  const auto idx = cyclic_batch(step, n, batch_size);
  std::vector<double> wb(idx.size());
  for (std::size_t j = 0; j < idx.size(); ++j) wb[j] = w.obs_weights[idx[j]];
  LossGradient lg;
  if (batch_size == n && idx.front() == 0) {
    lg = loss_and_gradient(params, data.inputs, data.targets, wb, lambda, w.prior_weight);
  } else {
    const LabeledSet batch = data.gather(idx);
    lg = loss_and_gradient(params, batch.inputs, batch.targets, wb, lambda, w.prior_weight);
  }
  const double scale = static_cast<double>(n) / static_cast<double>(batch_size);
  MlpParams scaled = MlpParams::zeros(params.shape());
  scaled.axpy(scale, lg.gradient);
  lg.gradient = std::move(scaled);
  return lg;
}

SgdResult sgd_fit(const LabeledSet& data, const WeightDraw& w, double lambda, const SgdSchedule& schedule,
                  const RngConfig& rng, const MlpShape& shape, const MlpParams* initial) {
  schedule.validate();
  validate(w);
  const std::size_t n = data.size();
  if (n < schedule.batch_size) throw DomainError("sgd: batch size exceeds example count");
  if (w.size() != n) throw DomainError("sgd: weight count differs from example count");
  SgdResult out;
  out.params = initial ? *initial : init_params(shape, rng);
  const std::size_t steps = schedule.epochs * ((n + schedule.batch_size - 1) / schedule.batch_size);
  for (std::size_t k = 0; k < steps; ++k) {
    const LossGradient lg = minibatch_gradient(out.params, data, w, lambda, k, schedule.batch_size);
    if (!std::isfinite(lg.value) || !lg.gradient.all_finite()) {
      throw NumericalError("sgd: non-finite loss at step " + std::to_string(k) + " (step size too large?)");
    }
    out.params.axpy(-schedule.step_size(k), lg.gradient);
    out.steps = k + 1;
  }
  out.final_loss = loss(out.params, data.inputs, data.targets, w.obs_weights, lambda, w.prior_weight);
  if (!std::isfinite(out.final_loss)) throw NumericalError("sgd: non-finite final loss");
  return out;
}

double evaluate_accuracy(const MlpParams& params, const LabeledSet& test) {
  if (test.size() == 0) throw DomainError("accuracy: empty test set");
  const Eigen::MatrixXd probs = forward_batch(params, test.inputs);
  const auto labels = test.labels();
  std::size_t hits = 0;
  for (Eigen::Index c = 0; c < probs.cols(); ++c) {
    Eigen::Index best = 0;
    for (Eigen::Index k = 1; k < probs.rows(); ++k) {
      if (probs(k, c) > probs(best, c)) best = k;
    }
    if (best == labels[static_cast<std::size_t>(c)]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(test.size());
}

}  // namespace wbb
