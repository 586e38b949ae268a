#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "wbb/rng.hpp"

namespace wbb {

/// Design matrix (n x d), response (n) and column names (d).
struct Dataset {
  Eigen::MatrixXd design;
  Eigen::VectorXd response;
  std::vector<std::string> feature_names;

  std::size_t rows() const { return static_cast<std::size_t>(design.rows()); }
  std::size_t cols() const { return static_cast<std::size_t>(design.cols()); }

  /// Shape and finiteness checks; throws DomainError.
  void validate() const;
};

/// Builds and validates; names default to x1..xd when empty.
Dataset make_dataset(Eigen::MatrixXd design, Eigen::VectorXd response,
                     std::vector<std::string> names = {});

enum class PenaltyFamily { L1, GeneralizedL1, SquaredL2OnMatrices };

struct PenaltySpec {
  PenaltyFamily family = PenaltyFamily::L1;
  int diff_order = 1;  // GeneralizedL1 only: penalize ||D^(diff_order) theta||_1
  double lambda = 0.0;

  static PenaltySpec l1(double lambda);
  static PenaltySpec generalized_l1(int diff_order, double lambda);
  static PenaltySpec squared_l2(double lambda);

  void validate() const;
};

/// Discrete-derivative operator D^(order) of shape (p - order) x p.
///
/// Row i is the integer stencil placed at column offset i. The stencil is
/// built by the recursion D^(m+1) = D^(1) D^(m) starting from (-1, 1), so it
/// is exact in integers; conversion to double happens only on application.
class DiffMatrix {
 public:
  DiffMatrix(int order, std::size_t p);

  int order() const { return order_; }
  std::size_t rows() const { return p_ - static_cast<std::size_t>(order_); }
  std::size_t cols() const { return p_; }
  std::span<const std::int64_t> stencil() const { return stencil_; }

  Eigen::VectorXd apply(const Eigen::VectorXd& x) const;
  Eigen::VectorXd apply_transpose(const Eigen::VectorXd& v) const;
  /// Dense copy, for tests and small problems.
  Eigen::MatrixXd dense() const;
  /// Row i as an exact integer vector of length p.
  std::vector<std::int64_t> row(std::size_t i) const;

 private:
  int order_;
  std::size_t p_;
  std::vector<std::int64_t> stencil_;
};

/// Throws DomainError when p <= order (empty penalty) or order < 1.
DiffMatrix build_diff_matrix(int order, std::size_t p);

/// phi(theta) without the lambda factor: sum |theta_j| for L1,
/// ||D^(k) theta||_1 for GeneralizedL1.
double penalty_value(const PenaltySpec& spec, std::span<const double> theta);
/// sum_l ||W^(l)||_F^2 for SquaredL2OnMatrices.
double penalty_value(const PenaltySpec& spec, std::span<const Eigen::MatrixXd> matrices);

enum class LossKind {
  GaussianSquaredError,  // l_i = 0.5 (y_i - x_i' theta)^2
  SumOfSquares,          // l_i = (y_i - x_i' theta)^2, the weighted-lasso convention
  CrossEntropy,          // linear softmax: theta is d x K column-major, y_i holds the class
};

/// Per-observation losses l_i(theta).
Eigen::VectorXd observation_losses(const Dataset& data, std::span<const double> theta, LossKind loss);

/// sum_i w_i l_i + lambda * w_p * phi, given precomputed l_i and phi.
double weighted_objective(std::span<const double> losses, const WeightDraw& w, double lambda,
                          double penalty);

/// sum_i w_i l_i(theta) + lambda * w_p * phi(theta).
double weighted_objective(const Dataset& data, const WeightDraw& w, std::span<const double> theta,
                          LossKind loss, const PenaltySpec& spec);

inline std::span<const double> as_span(const Eigen::VectorXd& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

}  // namespace wbb
