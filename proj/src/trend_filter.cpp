#include "wbb/trend_filter.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "wbb/error.hpp"
#include "wbb/univariate.hpp"

namespace wbb {

BandedCholesky::BandedCholesky(std::size_t p, std::size_t bandwidth)
    : p_(p), bw_(bandwidth), band_(p * (bandwidth + 1), 0.0) {}

void BandedCholesky::factorize() {
  for (std::size_t j = 0; j < p_; ++j) {
    const std::size_t k0 = j > bw_ ? j - bw_ : 0;
    double pivot = lower(j, j);
    for (std::size_t k = k0; k < j; ++k) pivot -= lower(j, k) * lower(j, k);
    if (!(pivot > 0.0)) throw NumericalError("banded Cholesky: matrix is not positive definite");
    const double ljj = std::sqrt(pivot);
    lower(j, j) = ljj;
    const std::size_t i_end = std::min(p_, j + bw_ + 1);
    for (std::size_t i = j + 1; i < i_end; ++i) {
      const std::size_t kk = i > bw_ ? i - bw_ : 0;
      double s = lower(i, j);
      for (std::size_t k = kk; k < j; ++k) s -= lower(i, k) * lower(j, k);
      lower(i, j) = s / ljj;
    }
  }
  factored_ = true;
}

Eigen::VectorXd BandedCholesky::solve(const Eigen::VectorXd& rhs) const {
  if (!factored_) throw NumericalError("banded Cholesky: solve before factorize");
  if (static_cast<std::size_t>(rhs.size()) != p_) throw DomainError("banded Cholesky: rhs length mismatch");
  Eigen::VectorXd x = rhs;
  for (std::size_t i = 0; i < p_; ++i) {
    const std::size_t k0 = i > bw_ ? i - bw_ : 0;
    double s = x[static_cast<Eigen::Index>(i)];
    for (std::size_t k = k0; k < i; ++k) s -= lower(i, k) * x[static_cast<Eigen::Index>(k)];
    x[static_cast<Eigen::Index>(i)] = s / lower(i, i);
  }
  for (std::size_t ii = p_; ii-- > 0;) {
    const std::size_t k_end = std::min(p_, ii + bw_ + 1);
    double s = x[static_cast<Eigen::Index>(ii)];
    for (std::size_t k = ii + 1; k < k_end; ++k) s -= lower(k, ii) * x[static_cast<Eigen::Index>(k)];
    x[static_cast<Eigen::Index>(ii)] = s / lower(ii, ii);
  }
  return x;
}

Eigen::MatrixXd Reweighting::penalty_matrix(const DiffMatrix& d) const {
  Eigen::MatrixXd m = d.dense();
  for (Eigen::Index j = 0; j < m.cols(); ++j) m.col(j) /= scale[j];
  return m;
}

Reweighting reweight_transform(const Eigen::VectorXd& y, const WeightDraw& w) {
  validate(w);
  if (w.size() != static_cast<std::size_t>(y.size())) throw DomainError("reweight: weight count differs from length");
  Reweighting r;
  r.scale.resize(y.size());
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    r.scale[i] = std::sqrt(w.obs_weights[static_cast<std::size_t>(i)] / w.prior_weight);
  }
  r.y_tilde = r.scale.cwiseProduct(y);
  return r;
}

namespace {

// Johnson's dynamic program for the 1-D fused lasso. The derivative of each
// partial objective is piecewise linear; knots x with slope/intercept
// increments (a, b) live in a window [lo, hi] of a buffer of size 2n.
void fused_lasso_dp(const double* y, std::size_t n, double lam, double* beta) {
  if (n == 0) return;
  if (n == 1 || lam == 0.0) {
    std::copy(y, y + n, beta);
    return;
  }
  std::vector<double> x(2 * n), a(2 * n), b(2 * n), tm(n - 1), tp(n - 1);
  std::ptrdiff_t left = static_cast<std::ptrdiff_t>(n) - 1;
  std::ptrdiff_t right = static_cast<std::ptrdiff_t>(n);
  tm[0] = y[0] - lam;
  tp[0] = y[0] + lam;
  x[left] = tm[0];
  x[right] = tp[0];
  a[left] = 1.0;
  b[left] = lam - y[0];
  a[right] = -1.0;
  b[right] = lam + y[0];
  for (std::size_t k = 1; k < n - 1; ++k) {
    double alo = 1.0, blo = -lam - y[k];
    std::ptrdiff_t lo = left;
    for (; lo <= right; ++lo) {
      if (alo * x[lo] + blo > -lam) break;
      alo += a[lo];
      blo += b[lo];
    }
    double ahi = -1.0, bhi = y[k] - lam;
    std::ptrdiff_t hi = right;
    for (; hi >= lo; --hi) {
      if (-ahi * x[hi] - bhi < lam) break;
      ahi += a[hi];
      bhi += b[hi];
    }
    tm[k] = (-lam - blo) / alo;
    tp[k] = (lam + bhi) / (-ahi);
    left = lo - 1;
    right = hi + 1;
    x[left] = tm[k];
    x[right] = tp[k];
    a[left] = alo;
    b[left] = blo + lam;
    a[right] = ahi;
    b[right] = bhi + lam;
  }
  double alo = 1.0, blo = -lam - y[n - 1];
  for (std::ptrdiff_t lo = left; lo <= right; ++lo) {
    if (alo * x[lo] + blo > 0.0) break;
    alo += a[lo];
    blo += b[lo];
  }
  beta[n - 1] = -blo / alo;
  for (std::size_t k = n - 1; k-- > 0;) beta[k] = std::clamp(beta[k + 1], tm[k], tp[k]);
}

// Banded operator x -> S (x ./ scale) for a row stencil S.
struct ScaledStencil {
  std::vector<double> st;
  Eigen::VectorXd inv_scale;
  std::size_t rows;

  Eigen::VectorXd apply(const Eigen::VectorXd& x) const {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(rows));
    for (std::size_t i = 0; i < rows; ++i) {
      double acc = 0.0;
      for (std::size_t s = 0; s < st.size(); ++s) {
        const auto j = static_cast<Eigen::Index>(i + s);
        acc += st[s] * x[j] * inv_scale[j];
      }
      out[static_cast<Eigen::Index>(i)] = acc;
    }
    return out;
  }

  Eigen::VectorXd apply_transpose(const Eigen::VectorXd& v) const {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(inv_scale.size());
    for (std::size_t i = 0; i < rows; ++i) {
      for (std::size_t s = 0; s < st.size(); ++s) {
        out[static_cast<Eigen::Index>(i + s)] += st[s] * v[static_cast<Eigen::Index>(i)];
      }
    }
    return out.cwiseProduct(inv_scale);
  }

  // I + rho * C' C in banded storage.
  BandedCholesky system(double rho) const {
    const std::size_t bw = st.size() - 1;
    const auto p = static_cast<std::size_t>(inv_scale.size());
    BandedCholesky a(p, bw);
    for (std::size_t i = 0; i < rows; ++i) {
      for (std::size_t s = 0; s <= bw; ++s) {
        for (std::size_t t = 0; t <= s; ++t) a.lower(i + s, i + t) += st[s] * st[t];
      }
    }
    for (std::size_t j = 0; j < p; ++j) {
      const std::size_t k0 = j > bw ? j - bw : 0;
      for (std::size_t k = k0; k <= j; ++k) {
        a.lower(j, k) *= rho * inv_scale[static_cast<Eigen::Index>(j)] * inv_scale[static_cast<Eigen::Index>(k)];
      }
      a.lower(j, j) += 1.0;
    }
    a.factorize();
    return a;
  }
};

ScaledStencil make_operator(int order, std::size_t p, const Eigen::VectorXd& scale) {
  ScaledStencil op;
  op.inv_scale = scale.cwiseInverse();
  if (order == 0) {
    op.st = {1.0};
    op.rows = p;
  } else {
    const DiffMatrix d(order, p);
    for (auto v : d.stencil()) op.st.push_back(static_cast<double>(v));
    op.rows = d.rows();
  }
  return op;
}

struct AdmmState {
  Eigen::VectorXd x;
  Eigen::VectorXd alpha;
  Eigen::VectorXd u;
};

// Residual balancing shared by both splits. Returns true when rho changed.
bool rebalance(const AdmmOptions& opts, TrendFilterFit& fit, double& rho, Eigen::VectorXd& u) {
  constexpr double kBalance = 10.0;
  constexpr double kStep = 2.0;
  if (opts.adapt_every <= 0 || fit.iterations % opts.adapt_every != 0) return false;
  double factor = 1.0;
  if (fit.primal_residual > kBalance * fit.dual_residual) factor = kStep;
  else if (fit.dual_residual > kBalance * fit.primal_residual) factor = 1.0 / kStep;
  const double next = std::clamp(rho * factor, opts.rho_min, opts.rho_max);
  if (next == rho) return false;
  u *= rho / next;
  rho = next;
  return true;
}

}  // namespace

Eigen::VectorXd fused_lasso_prox(const Eigen::VectorXd& y, double lambda) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw DomainError("fused lasso: lambda must be finite and >= 0");
  Eigen::VectorXd beta(y.size());
  fused_lasso_dp(y.data(), static_cast<std::size_t>(y.size()), lambda, beta.data());
  return beta;
}

TrendFilterFit fit_trend_filter(const Eigen::VectorXd& y, const WeightDraw& w, int degree, double lambda,
                                const AdmmOptions& opts) {
  if (degree < 0) throw DomainError("trend filter: degree must be >= 0");
  const auto p = static_cast<std::size_t>(y.size());
  if (p <= static_cast<std::size_t>(degree) + 1) throw DomainError("trend filter: need p > degree + 1");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw DomainError("trend filter: lambda must be finite and >= 0");
  if (!y.allFinite()) throw DomainError("trend filter: non-finite observation");
  const Reweighting rw = reweight_transform(y, w);
  const auto m = static_cast<Eigen::Index>(p - static_cast<std::size_t>(degree) - 1);

  TrendFilterFit fit;
  if (lambda == 0.0) {
    fit.beta = y;
    fit.dual = Eigen::VectorXd::Zero(m);
    fit.converged = true;
    return fit;
  }

  // Fused split: alpha = D^(k) W^-1 x carries a 1-D fused lasso penalty whose
  // prox is exact. Elementwise split: alpha = D^(k+1) W^-1 x with soft-thresholding.
  const bool fused = opts.split == AdmmSplit::FusedProx;
  const ScaledStencil op = make_operator(fused ? degree : degree + 1, p, rw.scale);

  double rho = opts.rho > 0.0 ? opts.rho : std::clamp(lambda, opts.rho_min, opts.rho_max);
  BandedCholesky system = op.system(rho);

  AdmmState st;
  st.x = rw.y_tilde;
  st.alpha = op.apply(st.x);
  st.u = Eigen::VectorXd::Zero(st.alpha.size());

  for (fit.iterations = 1; fit.iterations <= opts.max_iterations; ++fit.iterations) {
    st.x = system.solve(rw.y_tilde + rho * op.apply_transpose(st.alpha - st.u));
    const Eigen::VectorXd cx = op.apply(st.x);
    const Eigen::VectorXd alpha_old = st.alpha;
    const Eigen::VectorXd v = cx + st.u;
    if (fused) {
      st.alpha = fused_lasso_prox(v, lambda / rho);
    } else {
      for (Eigen::Index i = 0; i < v.size(); ++i) st.alpha[i] = soft_threshold(v[i], lambda / rho);
    }
    st.u = v - st.alpha;
    fit.primal_residual = (cx - st.alpha).norm();
    fit.dual_residual = rho * op.apply_transpose(st.alpha - alpha_old).norm();
    if (fit.primal_residual < opts.abs_tolerance && fit.dual_residual < opts.abs_tolerance) {
      fit.converged = true;
      break;
    }
    if (rebalance(opts, fit, rho, st.u)) system = op.system(rho);
  }
  fit.iterations = std::min(fit.iterations, opts.max_iterations);
  fit.rho = rho;
  fit.beta = rw.from_tilde(st.x);

  // Transformed multiplier v obeys |v| <= lambda; for the fused split it is
  // recovered from rho u = D1' v by a running sum. Scaling by w_p gives the
  // multiplier of the weighted problem.
  Eigen::VectorXd dual(m);
  if (fused) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
      acc += rho * st.u[i];
      dual[i] = -acc;
    }
  } else {
    dual = rho * st.u;
  }
  fit.dual = w.prior_weight * dual;
  return fit;
}

GeneralizedLassoKkt generalized_lasso_kkt(const Eigen::VectorXd& y, const WeightDraw& w, const DiffMatrix& d,
                                          double lambda, const Eigen::VectorXd& beta, const Eigen::VectorXd& dual,
                                          double zero_tolerance) {
  const Eigen::Map<const Eigen::VectorXd> wt(w.obs_weights.data(), static_cast<Eigen::Index>(w.size()));
  GeneralizedLassoKkt k;
  const Eigen::VectorXd station = wt.cwiseProduct(beta - y) + d.apply_transpose(dual);
  k.stationarity = station.lpNorm<Eigen::Infinity>();
  const double bound = lambda * w.prior_weight;
  k.box_violation = std::max(0.0, dual.lpNorm<Eigen::Infinity>() - bound);
  const Eigen::VectorXd db = d.apply(beta);
  for (Eigen::Index i = 0; i < db.size(); ++i) {
    if (std::abs(db[i]) > zero_tolerance) {
      k.sign_violation = std::max(k.sign_violation, std::abs(dual[i] - bound * (db[i] > 0 ? 1.0 : -1.0)));
    }
  }
  return k;
}

double trend_filter_objective(const Eigen::VectorXd& y, const WeightDraw& w, const DiffMatrix& d, double lambda,
                              const Eigen::VectorXd& beta) {
  const Eigen::Map<const Eigen::VectorXd> wt(w.obs_weights.data(), static_cast<Eigen::Index>(w.size()));
  return 0.5 * (wt.array() * (y - beta).array().square()).sum() + lambda * w.prior_weight * d.apply(beta).lpNorm<1>();
}

Eigen::VectorXd fourier_signal(std::size_t n) {
  if (n == 0) throw DomainError("fourier_signal: n must be >= 1");
  Eigen::VectorXd s(static_cast<Eigen::Index>(n));
  const double nn = static_cast<double>(n);
  for (std::size_t i = 1; i <= n; ++i) {
    const double t = static_cast<double>(i) / nn;
    s[static_cast<Eigen::Index>(i - 1)] = std::sin(4.0 * std::numbers::pi * t) * std::exp(3.0 * t);
  }
  return s;
}

Eigen::VectorXd simulate_fourier(std::size_t n, double noise_sd, const RngConfig& rng) {
  if (!(noise_sd >= 0.0)) throw DomainError("simulate_fourier: noise_sd must be >= 0");
  Eigen::VectorXd y = fourier_signal(n);
  Stream s(rng, Substream::Noise);
  for (Eigen::Index i = 0; i < y.size(); ++i) y[i] += noise_sd * s.normal();
  return y;
}

}  // namespace wbb
