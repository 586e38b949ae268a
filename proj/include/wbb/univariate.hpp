#pragma once

// Normal-means problem with a Laplace prior: y | theta ~ N(theta, 1),
// theta ~ Laplace(0, 1/lambda). The weighted posterior mode has a closed
// form, which makes this the reference case for checking the bootstrap.

namespace wbb {

/// argmin_theta { w1/2 (y - theta)^2 + lambda w2 |theta| }.
/// The boundary |y| = lambda w2 / w1 maps to 0.
double soft_threshold_wbb(double y, double lambda, double w1, double w2);

/// Plain soft-thresholding S(z, t) = sign(z) max(|z| - t, 0).
double soft_threshold(double z, double t);

/// exp(x^2) erfc(x), stable for large positive x.
double erfcx(double x);

/// log of the standard normal CDF, finite far into the left tail.
double log_normal_cdf(double x);

/// Exact posterior mean E(theta | y) under the Laplace prior, evaluated in
/// log space so it stays finite for |y| well beyond 40.
double exact_posterior_mean(double y, double lambda);

/// Mean of soft_threshold_wbb over independent Exp(1) weights, by adaptive
/// quadrature over the weight ratio r = w2/w1 (density 1/(1+r)^2).
/// Throws NumericalError if the quadrature error estimate exceeds tolerance.
double wbb_mean_oracle(double y, double lambda);

/// P(theta_w = 0) = lambda / (lambda + |y|).
double zero_probability(double y, double lambda);

}  // namespace wbb
