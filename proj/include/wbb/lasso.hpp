#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "wbb/objectives.hpp"
#include "wbb/rng.hpp"

namespace wbb {

// Weighted lasso in the convention
//   minimize  sum_i w_i (y_i - x_i' beta)^2 + lambda * w_p * sum_j |beta_j|
// (no 1/2 on the loss). The normal-means problem with 1/2 on the loss maps
// onto this one by lambda -> lambda / 2.

struct SolverOptions {
  double tolerance = 1e-8;       // max |delta beta_j| over one full sweep
  int max_sweeps = 10000;
  double kkt_tolerance = 1e-6;   // required on exit for converged = true
  bool trace_objective = false;  // record the objective after every sweep
};

struct LassoFit {
  Eigen::VectorXd coefficients;
  int iterations = 0;
  bool converged = false;
  double objective = 0.0;
  double max_kkt_violation = 0.0;
  std::vector<std::size_t> degenerate_columns;  // sum_i w_i x_ij^2 == 0; held at 0
  std::vector<double> objective_trace;
};

/// Cyclic coordinate descent with exact scalar updates
///   beta_j <- S(sum_i w_i x_ij r_i^(-j), lambda w_p / 2) / sum_i w_i x_ij^2.
LassoFit fit_weighted_lasso(const Dataset& data, const WeightDraw& w, double lambda,
                            const SolverOptions& opts = {},
                            std::optional<Eigen::VectorXd> warm_start = std::nullopt);

/// Max subgradient-condition violation of the weighted objective at beta.
double check_kkt(const Dataset& data, const WeightDraw& w, double lambda, const Eigen::VectorXd& beta);

/// Smallest lambda with the all-zero solution: max_j |sum_i w_i x_ij y_i| * 2 / w_p.
double lambda_max(const Dataset& data, const WeightDraw& w);

/// Objective in the weighted-lasso convention.
double lasso_objective(const Dataset& data, const WeightDraw& w, double lambda, const Eigen::VectorXd& beta);

/// Geometric grid from lambda_max down to lambda_max * min_ratio, descending.
std::vector<double> lambda_grid(double lambda_max, std::size_t count, double min_ratio = 1e-3);

/// Random balanced fold ids in [0, folds), deterministic in the seed.
std::vector<std::size_t> assign_folds(std::size_t n, std::size_t folds, std::uint64_t seed);

struct CvResult {
  std::vector<double> grid;      // as supplied
  std::vector<double> cv_error;  // mean held-out squared error per grid value
  std::size_t best_index = 0;
  double best_lambda() const { return grid.at(best_index); }
};

/// Unweighted K-fold cross-validation with caller-supplied fold ids.
/// Fits run along the grid in descending lambda order with warm starts.
CvResult cross_validate(const Dataset& data, std::span<const std::size_t> fold_of,
                        std::span<const double> grid, const SolverOptions& opts = {});

/// Grid value minimizing held-out error; folds assigned from the seed.
double cross_validate_lambda(const Dataset& data, std::size_t folds, std::span<const double> grid,
                             std::uint64_t seed = 0, const SolverOptions& opts = {});

/// Column standardization used by the CLI: centered response, features scaled
/// to unit (population) variance; maps coefficients back to the raw scale.
struct Standardization {
  Eigen::VectorXd feature_mean;
  Eigen::VectorXd feature_scale;
  double response_mean = 0.0;

  Dataset apply(const Dataset& raw) const;
  Eigen::VectorXd to_original(const Eigen::VectorXd& beta_std) const;
  double intercept(const Eigen::VectorXd& beta_original) const;
};

Standardization fit_standardization(const Dataset& raw);

/// Synthetic regression with standardized Gaussian features and a sparse
/// coefficient vector; same shape as the 442 x 10 diabetes data by default.
Dataset simulate_regression(std::size_t n, std::size_t d, std::size_t active, double noise_sd,
                            const RngConfig& rng);

}  // namespace wbb
