#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "wbb/lasso.hpp"
#include "wbb/mlp.hpp"
#include "wbb/rng.hpp"
#include "wbb/trend_filter.hpp"

namespace wbb {

using Payload = std::variant<std::vector<double>, MlpParams>;

/// One weighted posterior mode.
struct DrawResult {
  std::uint64_t draw_id = 0;
  std::uint64_t stream_id = 0;  // always equal to draw_id
  Payload parameters;
  std::map<std::string, double> diagnostics;
  bool failed = false;
  std::string failure;
  int attempts = 0;

  /// The vector payload; throws DomainError for MLP payloads.
  const std::vector<double>& coordinates() const;
};

struct SolveOutcome {
  Payload parameters;
  std::map<std::string, double> diagnostics;
  bool converged = true;
  std::string note;
};

/// A model whose weighted posterior mode can be computed for a given draw.
class Backend {
 public:
  virtual ~Backend() = default;
  virtual std::string name() const = 0;
  /// Number of observation weights per draw.
  virtual std::size_t observation_count() const = 0;
  virtual std::vector<std::string> coordinate_names() const = 0;
  /// attempt 0 uses the configured settings; attempt 1 is the single retry
  /// with tightened settings. May throw NumericalError.
  virtual SolveOutcome solve(const WeightDraw& w, const RngConfig& stream, int attempt) const = 0;
};

struct RunOptions {
  std::size_t draws = 1000;
  PriorMode prior = PriorMode::Weighted;
  std::size_t threads = 1;
  std::uint64_t seed = 0;
  /// Replaces sample_weights when set (test hook).
  std::function<WeightDraw(std::uint64_t draw_id)> weight_source;
  double max_failure_fraction = 0.1;
};

/// Runs K independent draws; draw k uses stream k. The result is sorted by
/// draw_id and does not depend on `threads`. Throws NumericalError when more
/// than max_failure_fraction of the draws fail after their retry.
std::vector<DrawResult> run_wbb(const Backend& backend, const RunOptions& opts);

/// Threads from the environment variable WBB_THREADS, else `fallback`.
std::size_t threads_from_env(std::size_t fallback = 1);

// ---------------------------------------------------------------------------
// Backends

/// Normal means with a Laplace prior; one observation, closed-form mode.
class UnivariateBackend final : public Backend {
 public:
  UnivariateBackend(double y, double lambda);
  std::string name() const override { return "univariate"; }
  std::size_t observation_count() const override { return 1; }
  std::vector<std::string> coordinate_names() const override { return {"theta"}; }
  SolveOutcome solve(const WeightDraw& w, const RngConfig& stream, int attempt) const override;

 private:
  double y_;
  double lambda_;
};

class LassoBackend final : public Backend {
 public:
  LassoBackend(Dataset data, double lambda, SolverOptions opts = {});
  std::string name() const override { return "lasso"; }
  std::size_t observation_count() const override { return data_.rows(); }
  std::vector<std::string> coordinate_names() const override { return data_.feature_names; }
  SolveOutcome solve(const WeightDraw& w, const RngConfig& stream, int attempt) const override;
  const Dataset& data() const { return data_; }

 private:
  Dataset data_;
  double lambda_;
  SolverOptions opts_;
};

class TrendFilterBackend final : public Backend {
 public:
  TrendFilterBackend(Eigen::VectorXd y, int degree, double lambda, AdmmOptions opts = {});
  std::string name() const override { return "trendfilter"; }
  std::size_t observation_count() const override { return static_cast<std::size_t>(y_.size()); }
  std::vector<std::string> coordinate_names() const override;
  SolveOutcome solve(const WeightDraw& w, const RngConfig& stream, int attempt) const override;

 private:
  Eigen::VectorXd y_;
  int degree_;
  double lambda_;
  AdmmOptions opts_;
};

/// Trains the MLP per draw; diagnostics carry "test_accuracy". With
/// keep_params = false the payload is the one-element vector {accuracy}.
class MlpBackend final : public Backend {
 public:
  MlpBackend(LabeledSet train, LabeledSet test, double lambda, SgdSchedule schedule, MlpShape shape = {},
             bool keep_params = true);
  std::string name() const override { return "mlp"; }
  std::size_t observation_count() const override { return train_.size(); }
  std::vector<std::string> coordinate_names() const override { return {"test_accuracy"}; }
  SolveOutcome solve(const WeightDraw& w, const RngConfig& stream, int attempt) const override;

 private:
  LabeledSet train_;
  LabeledSet test_;
  double lambda_;
  SgdSchedule schedule_;
  MlpShape shape_;
  bool keep_params_;
};

// ---------------------------------------------------------------------------
// Summaries

struct CoordinateSummary {
  std::string name;
  double mean = 0.0;
  double sd = 0.0;  // divisor K - 1; NaN when K = 1
  double q025 = 0.0;
  double q50 = 0.0;
  double q975 = 0.0;
  double zero_fraction = 0.0;
};

struct PosteriorSummary {
  std::vector<CoordinateSummary> coordinates;
  std::size_t draw_count = 0;
  static constexpr const char* kQuantileMethod = "type-7 (linear interpolation of order statistics)";
};

/// Type-7 quantile of an ascending-sorted sample.
double quantile_sorted(std::span<const double> sorted, double p);

/// Summary of a K x d sample given as rows.
PosteriorSummary summarize_samples(const std::vector<std::vector<double>>& rows,
                                   std::vector<std::string> names = {});

/// Summary of the successful vector-payload draws; throws if all failed.
PosteriorSummary summarize(std::span<const DrawResult> draws, std::vector<std::string> names = {});

/// Equal-tailed interval from the (1-level)/2 and (1+level)/2 quantiles.
std::pair<double, double> credible_interval(std::span<const double> draws, double level);

/// Coordinate j of every successful draw, in draw order.
std::vector<double> coordinate_samples(std::span<const DrawResult> draws, std::size_t j);

/// Diagnostic `key` of every successful draw, in draw order.
std::vector<double> diagnostic_samples(std::span<const DrawResult> draws, const std::string& key);

struct Histogram {
  std::vector<double> edges;    // bins + 1
  std::vector<double> density;  // bins, integrates to 1
  double integral() const;
};

Histogram histogram(std::span<const double> samples, std::size_t bins);

}  // namespace wbb
