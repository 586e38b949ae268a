#include "wbb/objectives.hpp"

#include <cmath>
#include <limits>

#include "wbb/error.hpp"

namespace wbb {

void Dataset::validate() const {
  if (design.rows() != response.size()) {
    throw DomainError("dataset: design has " + std::to_string(design.rows()) + " rows but response has " +
                      std::to_string(response.size()));
  }
  if (feature_names.size() != cols()) throw DomainError("dataset: feature name count differs from column count");
  if (!design.allFinite() || !response.allFinite()) throw DomainError("dataset: non-finite entry");
}

Dataset make_dataset(Eigen::MatrixXd design, Eigen::VectorXd response, std::vector<std::string> names) {
  if (names.empty()) {
    for (Eigen::Index j = 0; j < design.cols(); ++j) names.push_back("x" + std::to_string(j + 1));
  }
  Dataset d{std::move(design), std::move(response), std::move(names)};
  d.validate();
  return d;
}

PenaltySpec PenaltySpec::l1(double lambda) {
  PenaltySpec s{PenaltyFamily::L1, 1, lambda};
  s.validate();
  return s;
}

PenaltySpec PenaltySpec::generalized_l1(int diff_order, double lambda) {
  PenaltySpec s{PenaltyFamily::GeneralizedL1, diff_order, lambda};
  s.validate();
  return s;
}

PenaltySpec PenaltySpec::squared_l2(double lambda) {
  PenaltySpec s{PenaltyFamily::SquaredL2OnMatrices, 1, lambda};
  s.validate();
  return s;
}

void PenaltySpec::validate() const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw DomainError("penalty: lambda must be finite and >= 0");
  if (family == PenaltyFamily::GeneralizedL1 && diff_order < 1) {
    throw DomainError("penalty: generalized L1 order must be >= 1");
  }
}

DiffMatrix::DiffMatrix(int order, std::size_t p) : order_(order), p_(p) {
  if (order < 1) throw DomainError("diff matrix: order must be >= 1");
  // C(62, 31) is the largest central binomial that fits in int64.
  if (order > 62) throw DomainError("diff matrix: order exceeds exact integer range");
  if (p <= static_cast<std::size_t>(order)) {
    throw DomainError("diff matrix: p = " + std::to_string(p) + " must exceed order " + std::to_string(order));
  }
  stencil_ = {-1, 1};
  for (int m = 1; m < order; ++m) {
    // (D1 * Dm) row i = Dm row (i+1) - Dm row i.
    std::vector<std::int64_t> next(stencil_.size() + 1, 0);
    for (std::size_t j = 0; j < stencil_.size(); ++j) {
      next[j + 1] += stencil_[j];
      next[j] -= stencil_[j];
    }
    stencil_ = std::move(next);
  }
}

Eigen::VectorXd DiffMatrix::apply(const Eigen::VectorXd& x) const {
  if (static_cast<std::size_t>(x.size()) != p_) throw DomainError("diff matrix: vector length mismatch");
  const auto m = static_cast<Eigen::Index>(rows());
  Eigen::VectorXd out = Eigen::VectorXd::Zero(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < stencil_.size(); ++j) {
      acc += static_cast<double>(stencil_[j]) * x[i + static_cast<Eigen::Index>(j)];
    }
    out[i] = acc;
  }
  return out;
}

Eigen::VectorXd DiffMatrix::apply_transpose(const Eigen::VectorXd& v) const {
  if (static_cast<std::size_t>(v.size()) != rows()) throw DomainError("diff matrix: vector length mismatch");
  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p_));
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    for (std::size_t j = 0; j < stencil_.size(); ++j) {
      out[i + static_cast<Eigen::Index>(j)] += static_cast<double>(stencil_[j]) * v[i];
    }
  }
  return out;
}

Eigen::MatrixXd DiffMatrix::dense() const {
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows()), static_cast<Eigen::Index>(p_));
  for (Eigen::Index i = 0; i < d.rows(); ++i) {
    for (std::size_t j = 0; j < stencil_.size(); ++j) {
      d(i, i + static_cast<Eigen::Index>(j)) = static_cast<double>(stencil_[j]);
    }
  }
  return d;
}

std::vector<std::int64_t> DiffMatrix::row(std::size_t i) const {
  if (i >= rows()) throw DomainError("diff matrix: row index out of range");
  std::vector<std::int64_t> r(p_, 0);
  for (std::size_t j = 0; j < stencil_.size(); ++j) r[i + j] = stencil_[j];
  return r;
}

DiffMatrix build_diff_matrix(int order, std::size_t p) { return DiffMatrix(order, p); }

double penalty_value(const PenaltySpec& spec, std::span<const double> theta) {
  spec.validate();
  switch (spec.family) {
    case PenaltyFamily::L1: {
      double s = 0.0;
      for (double t : theta) s += std::abs(t);
      return s;
    }
    case PenaltyFamily::GeneralizedL1: {
      const DiffMatrix d(spec.diff_order, theta.size());
      const Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(theta.data(), static_cast<Eigen::Index>(theta.size()));
      return d.apply(x).lpNorm<1>();
    }
    case PenaltyFamily::SquaredL2OnMatrices:
      break;
  }
  throw DomainError("penalty: squared L2 penalty expects a list of matrices");
}

double penalty_value(const PenaltySpec& spec, std::span<const Eigen::MatrixXd> matrices) {
  spec.validate();
  if (spec.family != PenaltyFamily::SquaredL2OnMatrices) {
    throw DomainError("penalty: L1 penalties expect a parameter vector");
  }
  double s = 0.0;
  for (const auto& m : matrices) s += m.squaredNorm();
  return s;
}

Eigen::VectorXd observation_losses(const Dataset& data, std::span<const double> theta, LossKind loss) {
  const auto n = static_cast<Eigen::Index>(data.rows());
  const auto d = static_cast<Eigen::Index>(data.cols());
  if (loss == LossKind::CrossEntropy) {
    if (d == 0 || theta.empty() || theta.size() % static_cast<std::size_t>(d) != 0) {
      throw DomainError("objective: cross-entropy theta must be d x K");
    }
    const auto k = static_cast<Eigen::Index>(theta.size()) / d;
    const Eigen::Map<const Eigen::MatrixXd> coef(theta.data(), d, k);
    const Eigen::MatrixXd logits = data.design * coef;
    Eigen::VectorXd out(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double label = data.response[i];
      if (label != std::floor(label) || label < 0 || label >= static_cast<double>(k)) {
        throw DomainError("objective: class label out of range at row " + std::to_string(i));
      }
      const double mx = logits.row(i).maxCoeff();
      const double lse = mx + std::log((logits.row(i).array() - mx).exp().sum());
      out[i] = lse - logits(i, static_cast<Eigen::Index>(label));
    }
    return out;
  }
  if (theta.size() != static_cast<std::size_t>(d)) throw DomainError("objective: theta length must equal d");
  const Eigen::Map<const Eigen::VectorXd> beta(theta.data(), d);
  const Eigen::VectorXd r = data.response - data.design * beta;
  const double scale = loss == LossKind::GaussianSquaredError ? 0.5 : 1.0;
  return scale * r.array().square().matrix();
}

double weighted_objective(std::span<const double> losses, const WeightDraw& w, double lambda, double penalty) {
  if (losses.size() != w.size()) throw DomainError("objective: weight count differs from observation count");
  double s = 0.0;
  for (std::size_t i = 0; i < losses.size(); ++i) s += w.obs_weights[i] * losses[i];
  return s + lambda * w.prior_weight * penalty;
}

double weighted_objective(const Dataset& data, const WeightDraw& w, std::span<const double> theta, LossKind loss,
                          const PenaltySpec& spec) {
  const Eigen::VectorXd l = observation_losses(data, theta, loss);
  const double phi = penalty_value(spec, theta);
  return weighted_objective(as_span(l), w, spec.lambda, phi);
}

}  // namespace wbb
