#pragma once

#include <Eigen/Dense>
#include <cstddef>

#include "wbb/objectives.hpp"
#include "wbb/rng.hpp"

namespace wbb {

/// Cholesky factor of a symmetric positive-definite banded matrix.
///
/// Only the lower band is stored: entry (i, i - k) for k = 0..bandwidth lives
/// at band[i * (bandwidth + 1) + k]. Factor and solve are O(p * bandwidth^2)
/// and O(p * bandwidth).
class BandedCholesky {
 public:
  BandedCholesky() = default;
  BandedCholesky(std::size_t p, std::size_t bandwidth);

  double& lower(std::size_t i, std::size_t j) { return band_[i * (bw_ + 1) + (i - j)]; }
  double lower(std::size_t i, std::size_t j) const { return band_[i * (bw_ + 1) + (i - j)]; }
  std::size_t size() const { return p_; }
  std::size_t bandwidth() const { return bw_; }

  /// In-place factorization of the stored lower band. Throws NumericalError
  /// if a pivot is not positive.
  void factorize();
  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const;

 private:
  std::size_t p_ = 0;
  std::size_t bw_ = 0;
  std::vector<double> band_;
  bool factored_ = false;
};

/// Diagonal rescaling that turns the weighted problem
///   0.5 sum_i w_i (y_i - beta_i)^2 + lambda w_p ||D beta||_1
/// into the unit-weight form 0.5 ||y~ - beta~||^2 + lambda ||D~ beta~||_1
/// with W = diag(sqrt(w_i / w_p)), y~ = W y, beta~ = W beta, D~ = D W^-1.
struct Reweighting {
  Eigen::VectorXd scale;    // diagonal of W
  Eigen::VectorXd y_tilde;  // W y

  Eigen::VectorXd to_tilde(const Eigen::VectorXd& beta) const { return scale.cwiseProduct(beta); }
  Eigen::VectorXd from_tilde(const Eigen::VectorXd& beta_tilde) const { return beta_tilde.cwiseQuotient(scale); }
  /// Dense D W^-1.
  Eigen::MatrixXd penalty_matrix(const DiffMatrix& d) const;
};

Reweighting reweight_transform(const Eigen::VectorXd& y, const WeightDraw& w);

/// Variable split used by the operator-splitting solver.
/// FusedProx splits at D^(k) and applies an exact fused-lasso prox;
/// Elementwise splits at D^(k+1) and soft-thresholds.
enum class AdmmSplit { FusedProx, Elementwise };

struct AdmmOptions {
  double abs_tolerance = 1e-6;  // on both primal and dual residual norms
  int max_iterations = 5000;
  double rho = 0.0;             // <= 0 selects lambda clamped to [rho_min, rho_max]
  double rho_min = 1e-4;
  double rho_max = 1e4;
  int adapt_every = 0;          // residual balancing period; 0 disables
  AdmmSplit split = AdmmSplit::FusedProx;
};

struct TrendFilterFit {
  Eigen::VectorXd beta;
  /// u with ||u||_inf <= lambda w_p and diag(w)(beta - y) + D' u = 0 at the optimum.
  Eigen::VectorXd dual;
  int iterations = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double rho = 0.0;
  bool converged = false;
};

/// argmin_b 0.5 ||y - b||^2 + lambda sum_i |b_{i+1} - b_i|, solved exactly.
Eigen::VectorXd fused_lasso_prox(const Eigen::VectorXd& y, double lambda);

/// Weighted trend filtering of polynomial degree k: penalizes ||D^(k+1) beta||_1.
/// degree 0 is the fused lasso, degree 3 is cubic trend filtering.
TrendFilterFit fit_trend_filter(const Eigen::VectorXd& y, const WeightDraw& w, int degree, double lambda,
                                const AdmmOptions& opts = {});

struct GeneralizedLassoKkt {
  double stationarity = 0.0;   // ||diag(w)(beta - y) + D' u||_inf
  double box_violation = 0.0;  // max(0, ||u||_inf - lambda w_p)
  double sign_violation = 0.0; // max over (D beta)_i != 0 of |u_i - lambda w_p sign((D beta)_i)|
};

GeneralizedLassoKkt generalized_lasso_kkt(const Eigen::VectorXd& y, const WeightDraw& w, const DiffMatrix& d,
                                          double lambda, const Eigen::VectorXd& beta, const Eigen::VectorXd& dual,
                                          double zero_tolerance = 1e-8);

/// 0.5 sum_i w_i (y_i - beta_i)^2 + lambda w_p ||D beta||_1.
double trend_filter_objective(const Eigen::VectorXd& y, const WeightDraw& w, const DiffMatrix& d, double lambda,
                              const Eigen::VectorXd& beta);

/// sin(4 pi i / n) exp(3 i / n) for i = 1..n.
Eigen::VectorXd fourier_signal(std::size_t n);

/// fourier_signal(n) plus i.i.d. N(0, noise_sd^2) noise.
Eigen::VectorXd simulate_fourier(std::size_t n, double noise_sd, const RngConfig& rng);

}  // namespace wbb
