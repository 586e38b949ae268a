#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"
#include "wbb/error.hpp"
#include "wbb/trend_filter.hpp"

using namespace wbb;

namespace {

// Subgradient check of the direct weighted objective at beta: some u in the
// box with diag(w)(beta - y) + D'u = 0 and u_i = bound sign((D beta)_i) off zero.
// Rows with (D beta)_i != 0 fix u_i; the rest are recovered by least squares.
double subgradient_residual(const Eigen::VectorXd& y, const WeightDraw& w, const Eigen::MatrixXd& d, double lambda,
                            const Eigen::VectorXd& beta) {
  const Eigen::Map<const Eigen::VectorXd> wt(w.obs_weights.data(), y.size());
  const double bound = lambda * w.prior_weight;
  const Eigen::VectorXd db = d * beta;
  Eigen::VectorXd rhs = -wt.cwiseProduct(beta - y);
  std::vector<Eigen::Index> free;
  for (Eigen::Index i = 0; i < db.size(); ++i) {
    if (std::abs(db[i]) > 1e-7) rhs -= d.row(i).transpose() * (bound * (db[i] > 0 ? 1.0 : -1.0));
    else free.push_back(i);
  }
  Eigen::MatrixXd a(y.size(), static_cast<Eigen::Index>(free.size()));
  for (std::size_t j = 0; j < free.size(); ++j) a.col(static_cast<Eigen::Index>(j)) = d.row(free[j]).transpose();
  Eigen::VectorXd uf = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(free.size()));
  if (!free.empty()) uf = a.completeOrthogonalDecomposition().solve(rhs);
  double box = 0.0;
  for (Eigen::Index j = 0; j < uf.size(); ++j) box = std::max(box, std::abs(uf[j]) - bound);
  return std::max((a * uf - rhs).lpNorm<Eigen::Infinity>(), box);
}

Eigen::VectorXd random_signal(Stream& s, Eigen::Index p, double scale) {
  Eigen::VectorXd y(p);
  for (Eigen::Index i = 0; i < p; ++i) y[i] = scale * s.normal();
  return y;
}

}  // namespace

TEST_CASE("reweighting with unit and constant weights") {
  const Eigen::VectorXd y = Eigen::Vector3d(1.0, -2.0, 0.5);
  const Reweighting id = reweight_transform(y, unit_weights(3));
  CHECK(id.scale == Eigen::VectorXd::Ones(3));
  CHECK(id.y_tilde == y);
  WeightDraw w = unit_weights(3);
  for (double& v : w.obs_weights) v = 4.0;
  const Reweighting two = reweight_transform(y, w);
  CHECK(two.scale == Eigen::VectorXd::Constant(3, 2.0));
  CHECK(two.y_tilde == 2.0 * y);
  CHECK(two.from_tilde(two.to_tilde(y)) == y);
  const DiffMatrix d(1, 3);
  CHECK((two.penalty_matrix(d) - 0.5 * d.dense()).cwiseAbs().maxCoeff() == 0.0);
  CHECK_THROWS_AS(reweight_transform(y, unit_weights(2)), DomainError);
}

TEST_CASE("fused lasso prox matches the dual oracle") {
  Stream s(RngConfig{31, 0});
  for (int t = 0; t < 100; ++t) {
    const Eigen::Index n = 1 + t % 12;
    const Eigen::VectorXd y = random_signal(s, n, 3.0);
    const double lambda = 2.0 * s.uniform();
    const Eigen::VectorXd b = fused_lasso_prox(y, lambda);
    if (n == 1) {
      CHECK(b == y);
      continue;
    }
    const Eigen::VectorXd ref = oracle::generalized_lasso_dual(y, unit_weights(static_cast<std::size_t>(n)), oracle::dense_difference(1, n), lambda);
    CHECK((b - ref).cwiseAbs().maxCoeff() < 1e-10);
  }
  CHECK_THROWS_AS(fused_lasso_prox(Eigen::VectorXd::Zero(3), -1.0), DomainError);
}

TEST_CASE("zero lambda returns the data") {
  Stream s(RngConfig{32, 0});
  const Eigen::VectorXd y = random_signal(s, 30, 1.0);
  const TrendFilterFit fit = fit_trend_filter(y, sample_weights(30, RngConfig{1, 0}, PriorMode::Weighted), 2, 0.0);
  CHECK((fit.beta - y).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(fit.converged);
}

TEST_CASE("constant data is a fixed point for every degree") {
  const Eigen::VectorXd y = Eigen::VectorXd::Constant(40, 3.25);
  for (int degree = 0; degree <= 4; ++degree) {
    for (double lambda : {0.1, 10.0, 1e4}) {
      const WeightDraw w = sample_weights(40, RngConfig{static_cast<std::uint64_t>(degree), 2}, PriorMode::Weighted);
      const TrendFilterFit fit = fit_trend_filter(y, w, degree, lambda);
      CHECK((fit.beta - y).cwiseAbs().maxCoeff() < 1e-8);
    }
  }
}

TEST_CASE("huge lambda fused lasso collapses to the mean") {
  Stream s(RngConfig{33, 0});
  const Eigen::VectorXd y = random_signal(s, 25, 2.0);
  const TrendFilterFit fit = fit_trend_filter(y, unit_weights(25), 0, 1e6 * y.norm());
  CHECK((fit.beta.array() - y.mean()).abs().maxCoeff() < 1e-4);
}

TEST_CASE("transformed solve equals the direct weighted solve") {
  Stream s(RngConfig{34, 0});
  int checked = 0;
  for (int t = 0; t < 50; ++t) {
    const int degree = t % 3;
    const Eigen::Index p = degree + 3 + static_cast<Eigen::Index>(s.below(static_cast<std::uint64_t>(8 - degree)));
    REQUIRE(p <= 10);
    const Eigen::VectorXd y = random_signal(s, p, 2.0);
    const WeightDraw w = sample_weights(static_cast<std::size_t>(p), RngConfig{34, static_cast<std::uint64_t>(t)},
                                        PriorMode::Weighted);
    const double lambda = std::exp(4.0 * s.uniform() - 2.0);
    const Eigen::MatrixXd d = oracle::dense_difference(degree + 1, p);
    const Eigen::VectorXd direct = oracle::generalized_lasso_dual(y, w, d, lambda);
    REQUIRE(subgradient_residual(y, w, d, lambda, direct) < 1e-8);
    AdmmOptions opts;
    opts.abs_tolerance = 1e-10;
    opts.max_iterations = 100000;
    const TrendFilterFit fit = fit_trend_filter(y, w, degree, lambda, opts);
    CAPTURE(t);
    CHECK(fit.converged);
    CHECK((fit.beta - direct).cwiseAbs().maxCoeff() < 1e-6);
    ++checked;
  }
  CHECK(checked == 50);
}

TEST_CASE("returned dual certifies optimality") {
  Stream s(RngConfig{35, 0});
  for (int degree : {0, 1, 3}) {
    const Eigen::VectorXd y = simulate_fourier(200, 1.0, RngConfig{35, static_cast<std::uint64_t>(degree)});
    const WeightDraw w = sample_weights(200, RngConfig{35, 10}, PriorMode::Weighted);
    const double lambda = degree == 3 ? 200.0 : 5.0;
    const TrendFilterFit fit = fit_trend_filter(y, w, degree, lambda);
    CHECK(fit.converged);
    const DiffMatrix d(degree + 1, 200);
    const Eigen::Map<const Eigen::VectorXd> wt(w.obs_weights.data(), 200);
    // W^2 (beta - y) + D' u / w_p with W^2 = diag(w) / w_p.
    const Eigen::VectorXd residual =
        (wt.cwiseProduct(fit.beta - y) + d.apply_transpose(fit.dual)) / w.prior_weight;
    CHECK(residual.norm() < 1e-5);
    CHECK(fit.dual.lpNorm<Eigen::Infinity>() <= lambda * w.prior_weight * (1.0 + 1e-12));
    const GeneralizedLassoKkt k = generalized_lasso_kkt(y, w, d, lambda, fit.beta, fit.dual, 1e-4);
    CHECK(k.box_violation < 1e-9);
    CHECK(k.sign_violation < 1e-3 * lambda * w.prior_weight);
  }
}

TEST_CASE("low-degree polynomials pass through unchanged") {
  for (int degree = 0; degree <= 3; ++degree) {
    for (int poly = 0; poly <= degree; ++poly) {
      Eigen::VectorXd y(30);
      for (Eigen::Index i = 0; i < 30; ++i) y[i] = std::pow(static_cast<double>(i + 1) / 30.0, poly) * 5.0 - 1.0;
      const WeightDraw w = sample_weights(30, RngConfig{36, static_cast<std::uint64_t>(poly)}, PriorMode::Weighted);
      for (double lambda : {1.0, 1000.0}) {
        const TrendFilterFit fit = fit_trend_filter(y, w, degree, lambda);
        CHECK((fit.beta - y).cwiseAbs().maxCoeff() < 1e-8);
      }
    }
  }
}

TEST_CASE("both splits reach the same minimizer") {
  Stream s(RngConfig{37, 0});
  const Eigen::VectorXd y = random_signal(s, 40, 1.0);
  const WeightDraw w = sample_weights(40, RngConfig{37, 1}, PriorMode::Weighted);
  AdmmOptions fused;
  fused.abs_tolerance = 1e-9;
  AdmmOptions elementwise = fused;
  elementwise.split = AdmmSplit::Elementwise;
  elementwise.adapt_every = 10;
  elementwise.max_iterations = 200000;
  const TrendFilterFit a = fit_trend_filter(y, w, 1, 2.0, fused);
  const TrendFilterFit b = fit_trend_filter(y, w, 1, 2.0, elementwise);
  CHECK(a.converged);
  CHECK(b.converged);
  CHECK((a.beta - b.beta).cwiseAbs().maxCoeff() < 1e-6);
  const DiffMatrix d(2, 40);
  CHECK(trend_filter_objective(y, w, d, 2.0, a.beta) <= trend_filter_objective(y, w, d, 2.0, b.beta) + 1e-8);
}

TEST_CASE("scaling all weights leaves the fit unchanged") {
  const Eigen::VectorXd y = simulate_fourier(100, 2.0, RngConfig{38, 0});
  const WeightDraw w = sample_weights(100, RngConfig{38, 1}, PriorMode::Weighted);
  AdmmOptions opts;
  opts.abs_tolerance = 1e-9;
  opts.max_iterations = 50000;
  const TrendFilterFit a = fit_trend_filter(y, w, 2, 50.0, opts);
  const TrendFilterFit b = fit_trend_filter(y, w.scaled(10.0), 2, 50.0, opts);
  CHECK((a.beta - b.beta).cwiseAbs().maxCoeff() < 1e-7);
}

TEST_CASE("non-convergence is reported rather than thrown") {
  const Eigen::VectorXd y = simulate_fourier(200, 2.0, RngConfig{39, 0});
  AdmmOptions opts;
  opts.max_iterations = 3;
  const TrendFilterFit fit = fit_trend_filter(y, unit_weights(200), 3, 1000.0, opts);
  CHECK_FALSE(fit.converged);
  CHECK(fit.iterations == 3);
  CHECK(fit.primal_residual + fit.dual_residual > 0.0);
  CHECK(fit.beta.allFinite());
}

TEST_CASE("trend filter input validation") {
  const Eigen::VectorXd y = Eigen::VectorXd::Zero(4);
  CHECK_THROWS_AS(fit_trend_filter(y, unit_weights(4), 3, 1.0), DomainError);
  CHECK_THROWS_AS(fit_trend_filter(y, unit_weights(4), -1, 1.0), DomainError);
  CHECK_THROWS_AS(fit_trend_filter(y, unit_weights(4), 1, -1.0), DomainError);
  CHECK_THROWS_AS(fit_trend_filter(y, unit_weights(3), 1, 1.0), DomainError);
}

TEST_CASE("banded Cholesky solves like a dense factorization") {
  const Eigen::Index p = 30;
  const DiffMatrix d(3, static_cast<std::size_t>(p));
  const Eigen::MatrixXd a = Eigen::MatrixXd::Identity(p, p) + 7.0 * d.dense().transpose() * d.dense();
  BandedCholesky b(static_cast<std::size_t>(p), 3);
  for (Eigen::Index i = 0; i < p; ++i) {
    for (Eigen::Index j = std::max<Eigen::Index>(0, i - 3); j <= i; ++j) {
      b.lower(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) = a(i, j);
    }
  }
  b.factorize();
  Eigen::VectorXd rhs(p);
  for (Eigen::Index i = 0; i < p; ++i) rhs[i] = std::sin(0.3 * static_cast<double>(i));
  CHECK((b.solve(rhs) - a.ldlt().solve(rhs)).cwiseAbs().maxCoeff() < 1e-10);
  BandedCholesky neg(2, 1);
  neg.lower(0, 0) = -1.0;
  CHECK_THROWS_AS(neg.factorize(), NumericalError);
}

TEST_CASE("Fourier signal zeros and noise variance") {
  const Eigen::VectorXd f = fourier_signal(500);
  CHECK(std::abs(f[124]) < 1e-12);
  CHECK(std::abs(f[499]) < 1e-12);
  CHECK(f[61] == doctest::Approx(std::sin(4.0 * M_PI * 62.0 / 500.0) * std::exp(3.0 * 62.0 / 500.0)));
  const Eigen::VectorXd noiseless = simulate_fourier(500, 0.0, RngConfig{1, 0});
  CHECK(noiseless == f);
  const Eigen::Index n = 100000;
  const Eigen::VectorXd e = simulate_fourier(static_cast<std::size_t>(n), 2.0, RngConfig{40, 0}) -
                            fourier_signal(static_cast<std::size_t>(n));
  const double var = (e.array() - e.mean()).square().sum() / static_cast<double>(n - 1);
  CHECK(std::abs(var - 4.0) < 0.15);
  CHECK(simulate_fourier(50, 2.0, RngConfig{3, 3}) == simulate_fourier(50, 2.0, RngConfig{3, 3}));
}
