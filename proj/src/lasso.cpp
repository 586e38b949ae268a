#include "wbb/lasso.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "wbb/error.hpp"
#include "wbb/univariate.hpp"

namespace wbb {
namespace {

Eigen::VectorXd weight_vector(const WeightDraw& w) {
  return Eigen::Map<const Eigen::VectorXd>(w.obs_weights.data(), static_cast<Eigen::Index>(w.size()));
}

void check_shapes(const Dataset& data, const WeightDraw& w, double lambda) {
  data.validate();
  validate(w);
  if (w.size() != data.rows()) throw DomainError("lasso: weight count differs from row count");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw DomainError("lasso: lambda must be finite and >= 0");
}

Dataset subset_rows(const Dataset& data, const std::vector<Eigen::Index>& rows) {
  Dataset out;
  out.design.resize(static_cast<Eigen::Index>(rows.size()), data.design.cols());
  out.response.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t k = 0; k < rows.size(); ++k) {
    out.design.row(static_cast<Eigen::Index>(k)) = data.design.row(rows[k]);
    out.response[static_cast<Eigen::Index>(k)] = data.response[rows[k]];
  }
  out.feature_names = data.feature_names;
  return out;
}

}  // namespace

double lasso_objective(const Dataset& data, const WeightDraw& w, double lambda, const Eigen::VectorXd& beta) {
  const Eigen::VectorXd r = data.response - data.design * beta;
  return (weight_vector(w).array() * r.array().square()).sum() + lambda * w.prior_weight * beta.lpNorm<1>();
}

double check_kkt(const Dataset& data, const WeightDraw& w, double lambda, const Eigen::VectorXd& beta) {
  check_shapes(data, w, lambda);
  if (static_cast<std::size_t>(beta.size()) != data.cols()) throw DomainError("check_kkt: beta length mismatch");
  const Eigen::VectorXd r = data.response - data.design * beta;
  const Eigen::VectorXd g = -2.0 * data.design.transpose() * (weight_vector(w).array() * r.array()).matrix();
  const double t = lambda * w.prior_weight;
  double worst = 0.0;
  for (Eigen::Index j = 0; j < beta.size(); ++j) {
    const double v = beta[j] != 0.0 ? std::abs(g[j] + t * (beta[j] > 0 ? 1.0 : -1.0))
                                    : std::max(0.0, std::abs(g[j]) - t);
    worst = std::max(worst, v);
  }
  return worst;
}

double lambda_max(const Dataset& data, const WeightDraw& w) {
  check_shapes(data, w, 0.0);
  const Eigen::VectorXd c = data.design.transpose() * (weight_vector(w).array() * data.response.array()).matrix();
  return c.lpNorm<Eigen::Infinity>() * 2.0 / w.prior_weight;
}

LassoFit fit_weighted_lasso(const Dataset& data, const WeightDraw& w, double lambda, const SolverOptions& opts,
                            std::optional<Eigen::VectorXd> warm_start) {
  check_shapes(data, w, lambda);
  if (!(opts.tolerance > 0.0)) throw DomainError("lasso: tolerance must be positive");
  const auto d = data.design.cols();
  const Eigen::VectorXd wt = weight_vector(w);
  const double threshold = 0.5 * lambda * w.prior_weight;

  LassoFit fit;
  fit.coefficients = warm_start ? *warm_start : Eigen::VectorXd::Zero(d);
  if (fit.coefficients.size() != d) throw DomainError("lasso: warm start length mismatch");

  Eigen::VectorXd curvature(d);
  for (Eigen::Index j = 0; j < d; ++j) {
    curvature[j] = (wt.array() * data.design.col(j).array().square()).sum();
    if (curvature[j] == 0.0) {
      fit.degenerate_columns.push_back(static_cast<std::size_t>(j));
      fit.coefficients[j] = 0.0;
    }
  }

  // At or above lambda_max (up to rounding in the threshold) zero is optimal.
  if (lambda >= lambda_max(data, w) * (1.0 - 1e-12)) {
    fit.coefficients.setZero();
    fit.max_kkt_violation = check_kkt(data, w, lambda, fit.coefficients);
    fit.converged = fit.max_kkt_violation <= opts.kkt_tolerance;
    fit.objective = lasso_objective(data, w, lambda, fit.coefficients);
    if (opts.trace_objective) fit.objective_trace.push_back(fit.objective);
    return fit;
  }

  Eigen::VectorXd resid = data.response - data.design * fit.coefficients;
  bool kkt_ok = false;
  while (fit.iterations < opts.max_sweeps) {
    ++fit.iterations;
    double max_change = 0.0;
    for (Eigen::Index j = 0; j < d; ++j) {
      if (curvature[j] == 0.0) continue;
      const double old = fit.coefficients[j];
      // sum_i w_i x_ij r_i^(-j), with r^(-j) = r + x_j * old.
      const double z = (wt.array() * data.design.col(j).array() * resid.array()).sum() + curvature[j] * old;
      const double fresh = soft_threshold(z, threshold) / curvature[j];
      if (fresh != old) {
        resid -= (fresh - old) * data.design.col(j);
        fit.coefficients[j] = fresh;
        max_change = std::max(max_change, std::abs(fresh - old));
      }
    }
    if (opts.trace_objective) fit.objective_trace.push_back(lasso_objective(data, w, lambda, fit.coefficients));
    if (max_change < opts.tolerance) {
      // Refresh the running residual before judging optimality.
      resid = data.response - data.design * fit.coefficients;
      fit.max_kkt_violation = check_kkt(data, w, lambda, fit.coefficients);
      if (fit.max_kkt_violation <= opts.kkt_tolerance || max_change == 0.0) {
        kkt_ok = fit.max_kkt_violation <= opts.kkt_tolerance;
        break;
      }
    }
  }
  fit.max_kkt_violation = check_kkt(data, w, lambda, fit.coefficients);
  fit.converged = kkt_ok && fit.max_kkt_violation <= opts.kkt_tolerance;
  fit.objective = lasso_objective(data, w, lambda, fit.coefficients);
  return fit;
}

std::vector<double> lambda_grid(double lmax, std::size_t count, double min_ratio) {
  if (count == 0) throw DomainError("lambda_grid: count must be positive");
  if (!(lmax > 0.0) || !(min_ratio > 0.0 && min_ratio < 1.0)) throw DomainError("lambda_grid: bad range");
  std::vector<double> grid(count);
  for (std::size_t k = 0; k < count; ++k) {
    const double frac = count == 1 ? 0.0 : static_cast<double>(k) / static_cast<double>(count - 1);
    grid[k] = lmax * std::pow(min_ratio, frac);
  }
  return grid;
}

std::vector<std::size_t> assign_folds(std::size_t n, std::size_t folds, std::uint64_t seed) {
  if (folds < 2) throw DomainError("cross-validation: folds must be >= 2");
  if (n < folds) throw DomainError("cross-validation: fewer rows than folds");
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Stream s(RngConfig{seed, 0}, Substream::Folds);
  for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[s.below(i)]);
  std::vector<std::size_t> fold_of(n);
  for (std::size_t k = 0; k < n; ++k) fold_of[perm[k]] = k % folds;
  return fold_of;
}

CvResult cross_validate(const Dataset& data, std::span<const std::size_t> fold_of, std::span<const double> grid,
                        const SolverOptions& opts) {
  data.validate();
  if (grid.empty()) throw DomainError("cross-validation: empty lambda grid");
  if (fold_of.size() != data.rows()) throw DomainError("cross-validation: fold ids must cover every row");
  const std::size_t folds = *std::max_element(fold_of.begin(), fold_of.end()) + 1;
  if (folds < 2) throw DomainError("cross-validation: folds must be >= 2");

  std::vector<std::size_t> order(grid.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return grid[a] > grid[b]; });

  CvResult out;
  out.grid.assign(grid.begin(), grid.end());
  out.cv_error.assign(grid.size(), 0.0);
  for (std::size_t f = 0; f < folds; ++f) {
    std::vector<Eigen::Index> train;
    std::vector<Eigen::Index> test;
    for (std::size_t i = 0; i < fold_of.size(); ++i) {
      (fold_of[i] == f ? test : train).push_back(static_cast<Eigen::Index>(i));
    }
    if (train.empty() || test.empty()) throw DomainError("cross-validation: empty fold");
    const Dataset tr = subset_rows(data, train);
    const Dataset te = subset_rows(data, test);
    const WeightDraw ones = unit_weights(tr.rows());
    std::optional<Eigen::VectorXd> warm;
    for (std::size_t k : order) {
      const LassoFit fit = fit_weighted_lasso(tr, ones, grid[k], opts, warm);
      warm = fit.coefficients;
      const Eigen::VectorXd r = te.response - te.design * fit.coefficients;
      out.cv_error[k] += r.squaredNorm() / static_cast<double>(data.rows());
    }
  }
  out.best_index = static_cast<std::size_t>(std::min_element(out.cv_error.begin(), out.cv_error.end()) -
                                            out.cv_error.begin());
  return out;
}

double cross_validate_lambda(const Dataset& data, std::size_t folds, std::span<const double> grid,
                             std::uint64_t seed, const SolverOptions& opts) {
  if (grid.empty()) throw DomainError("cross-validation: empty lambda grid");
  if (folds < 2) throw DomainError("cross-validation: folds must be >= 2");
  if (data.rows() < folds) throw DomainError("cross-validation: fewer rows than folds");
  if (grid.size() == 1) return grid.front();
  const auto fold_of = assign_folds(data.rows(), folds, seed);
  return cross_validate(data, fold_of, grid, opts).best_lambda();
}

Standardization fit_standardization(const Dataset& raw) {
  raw.validate();
  Standardization s;
  const auto n = static_cast<double>(raw.rows());
  s.feature_mean = raw.design.colwise().mean().transpose();
  s.feature_scale.resize(raw.design.cols());
  for (Eigen::Index j = 0; j < raw.design.cols(); ++j) {
    const double var = (raw.design.col(j).array() - s.feature_mean[j]).square().sum() / n;
    s.feature_scale[j] = var > 0.0 ? std::sqrt(var) : 1.0;
  }
  s.response_mean = raw.response.mean();
  return s;
}

Dataset Standardization::apply(const Dataset& raw) const {
  Dataset out = raw;
  for (Eigen::Index j = 0; j < out.design.cols(); ++j) {
    out.design.col(j) = (out.design.col(j).array() - feature_mean[j]) / feature_scale[j];
  }
  out.response.array() -= response_mean;
  return out;
}

Eigen::VectorXd Standardization::to_original(const Eigen::VectorXd& beta_std) const {
  return beta_std.cwiseQuotient(feature_scale);
}

double Standardization::intercept(const Eigen::VectorXd& beta_original) const {
  return response_mean - feature_mean.dot(beta_original);
}

Dataset simulate_regression(std::size_t n, std::size_t d, std::size_t active, double noise_sd, const RngConfig& rng) {
  if (n == 0 || d == 0 || active > d) throw DomainError("simulate_regression: bad dimensions");
  Stream s(rng, Substream::Noise);
  Eigen::MatrixXd x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    for (Eigen::Index i = 0; i < x.rows(); ++i) x(i, j) = s.normal();
  }
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d));
  for (std::size_t j = 0; j < active; ++j) {
    beta[static_cast<Eigen::Index>(j)] = (j % 2 == 0 ? 1.0 : -1.0) * (2.0 + static_cast<double>(j));
  }
  Eigen::VectorXd y = x * beta;
  for (Eigen::Index i = 0; i < y.size(); ++i) y[i] += noise_sd * s.normal();
  return make_dataset(std::move(x), std::move(y));
}

}  // namespace wbb
