#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "wbb/error.hpp"
#include "wbb/rng.hpp"

using namespace wbb;

namespace {

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double correlation(const std::vector<double>& a, const std::vector<double>& b) {
  const double ma = mean(a), mb = mean(b);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

// Two-sided KS statistic against 1 - exp(-w).
double ks_exponential(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const double n = static_cast<double>(v.size());
  double d = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double f = 1.0 - std::exp(-v[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

}  // namespace

TEST_CASE("exp_from_uniform maps e^-k to k") {
  CHECK(exp_from_uniform(std::exp(-1.0)) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(exp_from_uniform(std::exp(-2.0)) == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("exp_from_uniform rejects the closed endpoints") {
  CHECK_THROWS_AS(exp_from_uniform(0.0), DomainError);
  CHECK_THROWS_AS(exp_from_uniform(1.0), DomainError);
  CHECK_THROWS_AS(exp_from_uniform(-0.5), DomainError);
  CHECK_THROWS_AS(exp_from_uniform(std::nan("")), DomainError);
}

TEST_CASE("converted uniforms have mean one") {
  Stream s(RngConfig{11, 0});
  double sum = 0.0;
  constexpr int n = 1000000;
  for (int i = 0; i < n; ++i) sum += exp_from_uniform(s.uniform());
  CHECK(std::abs(sum / n - 1.0) < 0.004);
}

TEST_CASE("uniforms stay strictly inside the unit interval") {
  Stream s(RngConfig{0, 0});
  for (int i = 0; i < 200000; ++i) {
    const double u = s.uniform();
    REQUIRE(u > 0.0);
    REQUIRE(u < 1.0);
  }
}

TEST_CASE("fixed prior mode sets the prior weight to exactly one") {
  for (std::uint64_t seed : {0ULL, 1ULL, 99ULL}) {
    const WeightDraw w = sample_weights(3, RngConfig{seed, 5}, PriorMode::Fixed);
    CHECK(w.prior_weight == 1.0);
    CHECK(w.size() == 3);
  }
}

TEST_CASE("identical stream identity reproduces the draw bit for bit") {
  const WeightDraw a = sample_weights(50, RngConfig{42, 7}, PriorMode::Weighted);
  const WeightDraw b = sample_weights(50, RngConfig{42, 7}, PriorMode::Weighted);
  CHECK(a.obs_weights == b.obs_weights);
  CHECK(a.prior_weight == b.prior_weight);
  CHECK(a.draw_id == 7);
  const WeightDraw c = sample_weights(50, RngConfig{42, 8}, PriorMode::Weighted);
  CHECK(a.obs_weights != c.obs_weights);
}

TEST_CASE("fixed and weighted modes share observation weights") {
  const WeightDraw a = sample_weights(20, RngConfig{3, 2}, PriorMode::Weighted);
  const WeightDraw b = sample_weights(20, RngConfig{3, 2}, PriorMode::Fixed);
  CHECK(a.obs_weights == b.obs_weights);
}

TEST_CASE("large draw has mean near one") {
  const WeightDraw w = sample_weights(100000, RngConfig{5, 0}, PriorMode::Weighted);
  const double m = mean(w.obs_weights);
  CHECK(m >= 0.99);
  CHECK(m <= 1.01);
  for (double x : w.obs_weights) REQUIRE((std::isfinite(x) && x > 0.0));
}

TEST_CASE("sample_weights rejects n = 0") {
  CHECK_THROWS_AS(sample_weights(0, RngConfig{}, PriorMode::Weighted), DomainError);
}

TEST_CASE("streams 0 and 1 are uncorrelated") {
  const WeightDraw a = sample_weights(100000, RngConfig{9, 0}, PriorMode::Weighted);
  const WeightDraw b = sample_weights(100000, RngConfig{9, 1}, PriorMode::Weighted);
  CHECK(std::abs(correlation(a.obs_weights, b.obs_weights)) < 0.01);
}

TEST_CASE("weights pass a Kolmogorov-Smirnov test against Exp(1)") {
  const WeightDraw w = sample_weights(100000, RngConfig{13, 4}, PriorMode::Weighted);
  CHECK(ks_exponential(w.obs_weights) < 0.01);
}

TEST_CASE("substreams are distinct") {
  Stream a(RngConfig{1, 1}, Substream::Weights);
  Stream b(RngConfig{1, 1}, Substream::Solver);
  CHECK(a.next_u64() != b.next_u64());
}

TEST_CASE("normal draws have unit variance") {
  Stream s(RngConfig{21, 0}, Substream::Noise);
  double sum = 0.0, sq = 0.0;
  constexpr int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double z = s.normal();
    sum += z;
    sq += z * z;
  }
  CHECK(std::abs(sum / n) < 0.01);
  CHECK(std::abs(sq / n - 1.0) < 0.02);
}

TEST_CASE("below stays in range and covers it") {
  Stream s(RngConfig{2, 0});
  std::vector<int> counts(7, 0);
  for (int i = 0; i < 70000; ++i) {
    const auto k = s.below(7);
    REQUIRE(k < 7);
    ++counts[k];
  }
  for (int c : counts) CHECK(std::abs(c - 10000) < 500);
}

TEST_CASE("validate rejects non-positive weights") {
  WeightDraw w = unit_weights(3);
  CHECK_NOTHROW(validate(w));
  w.obs_weights[1] = 0.0;
  CHECK_THROWS_AS(validate(w), DomainError);
  w = unit_weights(3);
  w.prior_weight = -1.0;
  CHECK_THROWS_AS(validate(w), DomainError);
}

TEST_CASE("scaled multiplies every component") {
  const WeightDraw w = sample_weights(4, RngConfig{1, 0}, PriorMode::Weighted);
  const WeightDraw s = w.scaled(10.0);
  for (std::size_t i = 0; i < 4; ++i) CHECK(s.obs_weights[i] == doctest::Approx(10.0 * w.obs_weights[i]));
  CHECK(s.prior_weight == doctest::Approx(10.0 * w.prior_weight));
}
