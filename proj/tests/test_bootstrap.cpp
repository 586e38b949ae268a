#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "wbb/bootstrap.hpp"
#include "wbb/error.hpp"
#include "wbb/univariate.hpp"

using namespace wbb;

namespace {

RunOptions options(std::size_t draws, std::uint64_t seed, std::size_t threads = 1) {
  RunOptions o;
  o.draws = draws;
  o.seed = seed;
  o.threads = threads;
  return o;
}

// Fails draws listed in `always`; draws in `once` fail on the first attempt only.
class FlakyBackend final : public Backend {
 public:
  FlakyBackend(std::vector<std::uint64_t> always, std::vector<std::uint64_t> once)
      : always_(std::move(always)), once_(std::move(once)) {}
  std::string name() const override { return "flaky"; }
  std::size_t observation_count() const override { return 2; }
  std::vector<std::string> coordinate_names() const override { return {"a", "b"}; }
  SolveOutcome solve(const WeightDraw& w, const RngConfig&, int attempt) const override {
    const auto has = [&](const std::vector<std::uint64_t>& v) {
      return std::find(v.begin(), v.end(), w.draw_id) != v.end();
    };
    if (has(always_)) throw NumericalError("always fails");
    if (has(once_) && attempt == 0) throw NumericalError("first attempt fails");
    SolveOutcome out;
    out.parameters = std::vector<double>{w.obs_weights[0], w.obs_weights[1] / w.prior_weight};
    return out;
  }

 private:
  std::vector<std::uint64_t> always_;
  std::vector<std::uint64_t> once_;
};

bool same_results(const std::vector<DrawResult>& a, const std::vector<DrawResult>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].draw_id != b[i].draw_id || a[i].parameters != b[i].parameters || a[i].diagnostics != b[i].diagnostics ||
        a[i].failed != b[i].failed) {
      return false;
    }
  }
  return true;
}

}  // namespace

TEST_CASE("a single all-ones draw is the ordinary regularized fit") {
  const Dataset data = simulate_regression(60, 5, 3, 1.0, RngConfig{1, 0});
  const LassoBackend backend(data, 3.0);
  RunOptions o = options(1, 0);
  o.prior = PriorMode::Fixed;
  o.weight_source = [](std::uint64_t k) { return unit_weights(60, k); };
  const auto draws = run_wbb(backend, o);
  REQUIRE(draws.size() == 1);
  const LassoFit ref = fit_weighted_lasso(data, unit_weights(60), 3.0);
  const auto& c = draws[0].coordinates();
  for (std::size_t j = 0; j < 5; ++j) CHECK(c[j] == ref.coefficients[static_cast<Eigen::Index>(j)]);
  CHECK(draws[0].diagnostics.at("prior_weight") == 1.0);
}

TEST_CASE("results do not depend on the number of threads") {
  const Dataset data = simulate_regression(80, 6, 3, 1.0, RngConfig{2, 0});
  const LassoBackend lasso(data, 5.0);
  const auto a = run_wbb(lasso, options(40, 9, 1));
  const auto b = run_wbb(lasso, options(40, 9, 8));
  CHECK(same_results(a, b));
  for (std::size_t k = 0; k < a.size(); ++k) {
    CHECK(a[k].draw_id == k);
    CHECK(a[k].stream_id == k);
  }
  const TrendFilterBackend tf(simulate_fourier(60, 1.0, RngConfig{2, 1}), 1, 5.0);
  CHECK(same_results(run_wbb(tf, options(12, 3, 1)), run_wbb(tf, options(12, 3, 5))));
  const auto c = run_wbb(lasso, options(40, 10, 1));
  CHECK_FALSE(same_results(a, c));
}

TEST_CASE("MLP draws are thread-count independent") {
  Stream s(RngConfig{3, 0}, Substream::Noise);
  Eigen::MatrixXd x(784, 30);
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    for (Eigen::Index i = 0; i < x.rows(); ++i) x(i, j) = s.uniform();
  }
  std::vector<int> labels(30);
  for (std::size_t i = 0; i < 30; ++i) labels[i] = static_cast<int>(i % 10);
  const LabeledSet set = LabeledSet::from_labels(x, labels);
  const MlpBackend backend(set, set, 1e-4, SgdSchedule::constant(1e-3, 10, 2), MlpShape{784, 8, 6, 10});
  const auto a = run_wbb(backend, options(6, 4, 1));
  const auto b = run_wbb(backend, options(6, 4, 3));
  CHECK(same_results(a, b));
  CHECK(std::holds_alternative<MlpParams>(a[0].parameters));
  CHECK_THROWS_AS(a[0].coordinates(), DomainError);
  const auto acc = diagnostic_samples(a, "test_accuracy");
  CHECK(acc.size() == 6);
  for (double v : acc) CHECK((v >= 0.0 && v <= 1.0));
  const MlpBackend slim(set, set, 1e-4, SgdSchedule::constant(1e-3, 10, 2), MlpShape{784, 8, 6, 10}, false);
  const auto c = run_wbb(slim, options(6, 4, 2));
  for (std::size_t k = 0; k < 6; ++k) CHECK(c[k].coordinates()[0] == acc[k]);
}

TEST_CASE("univariate draws average to the quadrature oracle") {
  const UnivariateBackend backend(2.0, 1.0);
  const auto draws = run_wbb(backend, options(50000, 11, 4));
  const auto v = coordinate_samples(draws, 0);
  const double m = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  const double se = std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
  CHECK(std::abs(m - wbb_mean_oracle(2.0, 1.0)) < 3.0 * se);
  const PosteriorSummary s = summarize(draws);
  CHECK(s.coordinates[0].zero_fraction == doctest::Approx(zero_probability(2.0, 1.0)).epsilon(0.03));
}

TEST_CASE("a draw that fails once is retried") {
  const FlakyBackend backend({}, {2, 5});
  const auto draws = run_wbb(backend, options(10, 1));
  for (const auto& d : draws) {
    CHECK_FALSE(d.failed);
    CHECK(d.attempts == ((d.draw_id == 2 || d.draw_id == 5) ? 2 : 1));
  }
}

TEST_CASE("failed draws are isolated and skipped by summaries") {
  const FlakyBackend backend({3}, {});
  const auto draws = run_wbb(backend, options(10, 1));
  const FlakyBackend clean({}, {});
  const auto ref = run_wbb(clean, options(10, 1));
  CHECK(draws[3].failed);
  CHECK(draws[3].attempts == 2);
  CHECK(draws[3].failure.find("always fails") != std::string::npos);
  for (std::size_t k = 0; k < 10; ++k) {
    if (k != 3) CHECK(draws[k].parameters == ref[k].parameters);
  }
  CHECK(coordinate_samples(draws, 0).size() == 9);
  CHECK(summarize(draws).draw_count == 9);
}

TEST_CASE("too many failures abort the run") {
  const FlakyBackend backend({0, 1}, {});
  CHECK_THROWS_AS(run_wbb(backend, options(10, 1)), NumericalError);
  CHECK_NOTHROW(run_wbb(backend, options(20, 1)));
  const FlakyBackend all({0}, {});
  CHECK_THROWS_AS(run_wbb(all, options(1, 1)), NumericalError);
}

TEST_CASE("run validation") {
  const UnivariateBackend backend(1.0, 1.0);
  CHECK_THROWS_AS(run_wbb(backend, options(0, 1)), DomainError);
  CHECK_THROWS_AS(UnivariateBackend(1.0, 0.0), DomainError);
}

TEST_CASE("summary of constant and two-point samples") {
  const PosteriorSummary c = summarize_samples({{2.5}, {2.5}, {2.5}}, {"v"});
  CHECK(c.coordinates[0].name == "v");
  CHECK(c.coordinates[0].mean == 2.5);
  CHECK(c.coordinates[0].sd == 0.0);
  CHECK(c.coordinates[0].q025 == 2.5);
  CHECK(c.coordinates[0].q50 == 2.5);
  CHECK(c.coordinates[0].q975 == 2.5);
  const PosteriorSummary t = summarize_samples({{0.0}, {1.0}});
  CHECK(t.coordinates[0].mean == 0.5);
  CHECK(t.coordinates[0].sd == doctest::Approx(std::sqrt(0.5)));
  CHECK(t.coordinates[0].zero_fraction == 0.5);
  CHECK(t.draw_count == 2);
  const PosteriorSummary one = summarize_samples({{4.0, 0.0}});
  CHECK(std::isnan(one.coordinates[0].sd));
  CHECK(one.coordinates[1].zero_fraction == 1.0);
}

TEST_CASE("summary is invariant to permutation") {
  std::vector<std::vector<double>> rows;
  Stream s(RngConfig{5, 0}, Substream::Noise);
  for (int k = 0; k < 101; ++k) rows.push_back({s.normal(), std::max(0.0, s.normal())});
  const PosteriorSummary a = summarize_samples(rows);
  std::reverse(rows.begin(), rows.end());
  std::rotate(rows.begin(), rows.begin() + 37, rows.end());
  const PosteriorSummary b = summarize_samples(rows);
  for (std::size_t j = 0; j < 2; ++j) {
    CHECK(a.coordinates[j].mean == doctest::Approx(b.coordinates[j].mean).epsilon(1e-14));
    CHECK(a.coordinates[j].sd == doctest::Approx(b.coordinates[j].sd).epsilon(1e-14));
    CHECK(a.coordinates[j].q025 == b.coordinates[j].q025);
    CHECK(a.coordinates[j].q50 == b.coordinates[j].q50);
    CHECK(a.coordinates[j].q975 == b.coordinates[j].q975);
    CHECK(a.coordinates[j].zero_fraction == b.coordinates[j].zero_fraction);
    CHECK(a.coordinates[j].q025 <= a.coordinates[j].q50);
    CHECK(a.coordinates[j].q50 <= a.coordinates[j].q975);
  }
}

TEST_CASE("type-7 quantiles and intervals") {
  std::vector<double> grid(100);
  std::iota(grid.begin(), grid.end(), 1.0);
  const auto [lo, hi] = credible_interval(grid, 0.9);
  CHECK(lo == doctest::Approx(5.95));
  CHECK(hi == doctest::Approx(95.05));
  CHECK(quantile_sorted(grid, 0.0) == 1.0);
  CHECK(quantile_sorted(grid, 1.0) == 100.0);
  CHECK(quantile_sorted(grid, 0.5) == 50.5);
  std::vector<double> shuffled = grid;
  std::rotate(shuffled.begin(), shuffled.begin() + 40, shuffled.end());
  CHECK(credible_interval(shuffled, 0.9) == credible_interval(grid, 0.9));
  for (double level : {0.1, 0.5, 0.99}) {
    const auto [a, b] = credible_interval(grid, level);
    CHECK(a <= 50.5);
    CHECK(b >= 50.5);
  }
  std::vector<double> sym;
  for (int i = 1; i <= 50; ++i) {
    sym.push_back(0.1 * i);
    sym.push_back(-0.1 * i);
  }
  const auto [sl, sh] = credible_interval(sym, 0.8);
  CHECK(sl == doctest::Approx(-sh).epsilon(1e-14));
  CHECK_THROWS_AS(credible_interval(grid, 1.0), DomainError);
  CHECK_THROWS_AS(credible_interval(std::vector<double>{1.0}, 0.5), DomainError);
}

TEST_CASE("histograms integrate to one") {
  Stream s(RngConfig{6, 0}, Substream::Noise);
  std::vector<double> v(5000);
  for (double& x : v) x = s.normal();
  for (std::size_t bins : {1, 7, 50}) {
    const Histogram h = histogram(v, bins);
    CHECK(h.edges.size() == bins + 1);
    CHECK(std::abs(h.integral() - 1.0) < 1e-9);
  }
  const Histogram flat = histogram(std::vector<double>(10, 0.3), 4);
  CHECK(std::abs(flat.integral() - 1.0) < 1e-9);
  CHECK_THROWS_AS(histogram(v, 0), DomainError);
}

TEST_CASE("thread count from the environment") {
  ::setenv("WBB_THREADS", "6", 1);
  CHECK(threads_from_env() == 6);
  ::setenv("WBB_THREADS", "abc", 1);
  CHECK(threads_from_env(2) == 2);
  ::unsetenv("WBB_THREADS");
  CHECK(threads_from_env(3) == 3);
}
