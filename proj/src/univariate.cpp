#include "wbb/univariate.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <numbers>
#include <sstream>

#include "wbb/error.hpp"

namespace wbb {
namespace {

void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) throw DomainError(std::string(what) + " must be finite and positive");
}

constexpr double kQuadratureTolerance = 1e-10;

}  // namespace

double soft_threshold(double z, double t) {
  if (z > t) return z - t;
  if (z < -t) return z + t;
  return 0.0;
}

double soft_threshold_wbb(double y, double lambda, double w1, double w2) {
  require_positive(lambda, "lambda");
  require_positive(w1, "w1");
  require_positive(w2, "w2");
  return soft_threshold(y, lambda * w2 / w1);
}

double erfcx(double x) {
  if (x < 2.0) return std::exp(x * x) * std::erfc(x);
  // Continued fraction erfc(x) = exp(-x^2)/sqrt(pi) * 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + ...)))),
  // evaluated bottom-up; 60 levels is far past convergence for x >= 2.
  double tail = x;
  for (int k = 60; k >= 1; --k) tail = x + (0.5 * k) / tail;
  return 1.0 / (std::sqrt(std::numbers::pi) * tail);
}

double log_normal_cdf(double x) {
  if (x > 0.0) return std::log1p(-0.5 * std::erfc(x / std::numbers::sqrt2));
  const double t = -x / std::numbers::sqrt2;
  return std::log(0.5 * erfcx(t)) - t * t;
}

double exact_posterior_mean(double y, double lambda) {
  require_positive(lambda, "lambda");
  // Posterior mass splits into a negative part centered at y + lambda with
  // weight exp(lambda y) Phi(-y - lambda), and a positive part centered at
  // y - lambda with weight exp(-lambda y) Phi(y - lambda); the truncation
  // corrections of the two parts cancel.
  const double log_neg = lambda * y + log_normal_cdf(-y - lambda);
  const double log_pos = -lambda * y + log_normal_cdf(y - lambda);
  return y + lambda * std::tanh(0.5 * (log_neg - log_pos));
}

double wbb_mean_oracle(double y, double lambda) {
  require_positive(lambda, "lambda");
  if (y == 0.0) return 0.0;
  // r = t/(1-t) maps (0, inf) to (0, 1) and turns dr/(1+r)^2 into dt.
  // The integrand vanishes for r >= |y|/lambda, i.e. t >= |y|/(|y|+lambda).
  const double ay = std::abs(y);
  const double t_cut = ay / (ay + lambda);
  auto integrand = [&](double t) {
    const double r = t / (1.0 - t);
    return soft_threshold(y, lambda * r);
  };
  double err = 0.0;
  double l1 = 0.0;
  const double value = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
      integrand, 0.0, t_cut, 20, kQuadratureTolerance, &err, &l1);
  if (!std::isfinite(value) || err > kQuadratureTolerance * std::max(1.0, l1)) {
    std::ostringstream msg;
    msg << "wbb_mean_oracle: quadrature did not converge (y=" << y << ", lambda=" << lambda
        << ", error estimate=" << err << ", L1=" << l1 << ")";
    throw NumericalError(msg.str());
  }
  return value;
}

double zero_probability(double y, double lambda) {
  require_positive(lambda, "lambda");
  return lambda / (lambda + std::abs(y));
}

}  // namespace wbb
