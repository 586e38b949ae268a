#include "wbb/bootstrap.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <numeric>
#include <sstream>
#include <thread>

#include "wbb/error.hpp"
#include "wbb/univariate.hpp"

namespace wbb {

const std::vector<double>& DrawResult::coordinates() const {
  if (const auto* v = std::get_if<std::vector<double>>(&parameters)) return *v;
  throw DomainError("draw " + std::to_string(draw_id) + " carries MLP parameters, not a coordinate vector");
}

namespace {

DrawResult run_one(const Backend& backend, const RunOptions& opts, std::uint64_t k) {
  DrawResult r;
  r.draw_id = k;
  r.stream_id = k;
  const RngConfig stream{opts.seed, k};
  WeightDraw w = opts.weight_source ? opts.weight_source(k)
                                    : sample_weights(backend.observation_count(), stream, opts.prior);
  w.draw_id = k;
  for (int attempt = 0; attempt < 2; ++attempt) {
    r.attempts = attempt + 1;
    try {
      SolveOutcome out = backend.solve(w, stream, attempt);
      r.parameters = std::move(out.parameters);
      r.diagnostics = std::move(out.diagnostics);
      r.diagnostics["prior_weight"] = w.prior_weight;
      if (out.converged) {
        r.failed = false;
        r.failure.clear();
        return r;
      }
      r.failed = true;
      r.failure = out.note.empty() ? "solver did not converge" : out.note;
    } catch (const NumericalError& e) {
      r.failed = true;
      r.failure = e.what();
    }
  }
  return r;
}

}  // namespace

std::vector<DrawResult> run_wbb(const Backend& backend, const RunOptions& opts) {
  if (opts.draws == 0) throw DomainError("run_wbb: need at least one draw");
  if (backend.observation_count() == 0) throw DomainError("run_wbb: backend has no observations");
  std::vector<DrawResult> results(opts.draws);
  const std::size_t workers = std::clamp<std::size_t>(opts.threads, 1, opts.draws);
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(workers);
  auto work = [&](std::size_t id) {
    try {
      for (std::size_t k = next++; k < opts.draws; k = next++) results[k] = run_one(backend, opts, k);
    } catch (...) {
      errors[id] = std::current_exception();
      next = opts.draws;
    }
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t t = 0; t < workers; ++t) pool.emplace_back(work, t);
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  const auto failed = static_cast<std::size_t>(
      std::count_if(results.begin(), results.end(), [](const DrawResult& r) { return r.failed; }));
  if (static_cast<double>(failed) > opts.max_failure_fraction * static_cast<double>(opts.draws)) {
    std::ostringstream msg;
    msg << backend.name() << ": " << failed << " of " << opts.draws << " draws failed";
    for (const auto& r : results) {
      if (r.failed) {
        msg << " (first failure, draw " << r.draw_id << ": " << r.failure << ")";
        break;
      }
    }
    throw NumericalError(msg.str());
  }
  return results;
}

std::size_t threads_from_env(std::size_t fallback) {
  if (const char* s = std::getenv("WBB_THREADS")) {
    char* end = nullptr;
    const unsigned long v = std::strtoul(s, &end, 10);
    if (end != s && *end == '\0' && v > 0) return v;
  }
  return fallback;
}

// ---------------------------------------------------------------------------

UnivariateBackend::UnivariateBackend(double y, double lambda) : y_(y), lambda_(lambda) {
  if (!(lambda > 0.0)) throw DomainError("univariate backend: lambda must be positive");
  if (!std::isfinite(y)) throw DomainError("univariate backend: y must be finite");
}

SolveOutcome UnivariateBackend::solve(const WeightDraw& w, const RngConfig&, int) const {
  if (w.size() != 1) throw DomainError("univariate backend: expects one observation weight");
  return SolveOutcome{std::vector<double>{soft_threshold_wbb(y_, lambda_, w.obs_weights[0], w.prior_weight)}, {}, true, {}};
}

LassoBackend::LassoBackend(Dataset data, double lambda, SolverOptions opts)
    : data_(std::move(data)), lambda_(lambda), opts_(opts) {
  data_.validate();
  if (!(lambda >= 0.0)) throw DomainError("lasso backend: lambda must be >= 0");
}

SolveOutcome LassoBackend::solve(const WeightDraw& w, const RngConfig&, int attempt) const {
  SolverOptions o = opts_;
  if (attempt > 0) {
    o.max_sweeps *= 10;
    o.tolerance *= 0.1;
  }
  const LassoFit fit = fit_weighted_lasso(data_, w, lambda_, o);
  SolveOutcome out;
  out.parameters = std::vector<double>(fit.coefficients.data(), fit.coefficients.data() + fit.coefficients.size());
  out.diagnostics = {{"iterations", fit.iterations},
                     {"converged", fit.converged ? 1.0 : 0.0},
                     {"objective", fit.objective},
                     {"max_kkt_violation", fit.max_kkt_violation}};
  out.converged = fit.converged;
  if (!fit.converged) out.note = "coordinate descent hit max_sweeps";
  return out;
}

TrendFilterBackend::TrendFilterBackend(Eigen::VectorXd y, int degree, double lambda, AdmmOptions opts)
    : y_(std::move(y)), degree_(degree), lambda_(lambda), opts_(opts) {
  if (y_.size() <= degree + 1) throw DomainError("trend filter backend: need p > degree + 1");
}

std::vector<std::string> TrendFilterBackend::coordinate_names() const {
  std::vector<std::string> names;
  for (Eigen::Index i = 1; i <= y_.size(); ++i) names.push_back("beta" + std::to_string(i));
  return names;
}

SolveOutcome TrendFilterBackend::solve(const WeightDraw& w, const RngConfig&, int attempt) const {
  AdmmOptions o = opts_;
  if (attempt > 0) o.max_iterations *= 4;
  const TrendFilterFit fit = fit_trend_filter(y_, w, degree_, lambda_, o);
  SolveOutcome out;
  out.parameters = std::vector<double>(fit.beta.data(), fit.beta.data() + fit.beta.size());
  out.diagnostics = {{"iterations", fit.iterations},
                     {"converged", fit.converged ? 1.0 : 0.0},
                     {"primal_residual", fit.primal_residual},
                     {"dual_residual", fit.dual_residual},
                     {"objective", trend_filter_objective(y_, w, DiffMatrix(degree_ + 1, static_cast<std::size_t>(y_.size())),
                                                          lambda_, fit.beta)}};
  out.converged = fit.converged;
  if (!fit.converged) out.note = "ADMM hit max_iterations";
  return out;
}

MlpBackend::MlpBackend(LabeledSet train, LabeledSet test, double lambda, SgdSchedule schedule, MlpShape shape,
                       bool keep_params)
    : train_(std::move(train)),
      test_(std::move(test)),
      lambda_(lambda),
      schedule_(schedule),
      shape_(shape),
      keep_params_(keep_params) {
  schedule_.validate();
  validate_one_hot(train_.targets);
  validate_one_hot(test_.targets);
  if (train_.inputs.rows() != shape_.input || test_.inputs.rows() != shape_.input) {
    throw DomainError("mlp backend: input dimension differs from network shape");
  }
}

SolveOutcome MlpBackend::solve(const WeightDraw& w, const RngConfig& stream, int attempt) const {
  SgdSchedule s = schedule_;
  if (attempt > 0) s.rate *= 0.5;
  SgdResult fit = sgd_fit(train_, w, lambda_, s, stream, shape_);
  const double acc = evaluate_accuracy(fit.params, test_);
  SolveOutcome out;
  if (keep_params_) out.parameters = std::move(fit.params);
  else out.parameters = std::vector<double>{acc};
  out.diagnostics = {{"test_accuracy", acc},
                     {"steps", static_cast<double>(fit.steps)},
                     {"final_loss", fit.final_loss},
                     {"step_size", s.rate}};
  return out;
}

// ---------------------------------------------------------------------------

double quantile_sorted(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw DomainError("quantile: empty sample");
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("quantile: p must lie in [0, 1]");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

PosteriorSummary summarize_samples(const std::vector<std::vector<double>>& rows, std::vector<std::string> names) {
  if (rows.empty()) throw DomainError("summarize: no successful draws");
  const std::size_t d = rows.front().size();
  for (const auto& r : rows) {
    if (r.size() != d) throw DomainError("summarize: draws differ in dimension");
  }
  if (names.empty()) {
    for (std::size_t j = 0; j < d; ++j) names.push_back("theta" + std::to_string(j + 1));
  }
  if (names.size() != d) throw DomainError("summarize: coordinate name count mismatch");
  PosteriorSummary s;
  s.draw_count = rows.size();
  const auto k = static_cast<double>(rows.size());
  std::vector<double> col(rows.size());
  for (std::size_t j = 0; j < d; ++j) {
    for (std::size_t i = 0; i < rows.size(); ++i) col[i] = rows[i][j];
    CoordinateSummary c;
    c.name = names[j];
    c.mean = std::accumulate(col.begin(), col.end(), 0.0) / k;
    if (rows.size() > 1) {
      double ss = 0.0;
      for (double v : col) ss += (v - c.mean) * (v - c.mean);
      c.sd = std::sqrt(ss / (k - 1.0));
    } else {
      c.sd = std::numeric_limits<double>::quiet_NaN();
    }
    c.zero_fraction = static_cast<double>(std::count(col.begin(), col.end(), 0.0)) / k;
    std::sort(col.begin(), col.end());
    c.q025 = quantile_sorted(col, 0.025);
    c.q50 = quantile_sorted(col, 0.5);
    c.q975 = quantile_sorted(col, 0.975);
    s.coordinates.push_back(std::move(c));
  }
  return s;
}

PosteriorSummary summarize(std::span<const DrawResult> draws, std::vector<std::string> names) {
  std::vector<std::vector<double>> rows;
  for (const auto& d : draws) {
    if (!d.failed) rows.push_back(d.coordinates());
  }
  if (rows.empty()) throw NumericalError("summarize: every draw failed");
  return summarize_samples(rows, std::move(names));
}

std::pair<double, double> credible_interval(std::span<const double> draws, double level) {
  if (!(level > 0.0 && level < 1.0)) throw DomainError("credible_interval: level must lie in (0, 1)");
  if (draws.size() < 2) throw DomainError("credible_interval: need at least two draws");
  std::vector<double> sorted(draws.begin(), draws.end());
  std::sort(sorted.begin(), sorted.end());
  const double tail = 0.5 * (1.0 - level);
  return {quantile_sorted(sorted, tail), quantile_sorted(sorted, 1.0 - tail)};
}

std::vector<double> coordinate_samples(std::span<const DrawResult> draws, std::size_t j) {
  std::vector<double> out;
  for (const auto& d : draws) {
    if (!d.failed) out.push_back(d.coordinates().at(j));
  }
  return out;
}

std::vector<double> diagnostic_samples(std::span<const DrawResult> draws, const std::string& key) {
  std::vector<double> out;
  for (const auto& d : draws) {
    if (!d.failed) out.push_back(d.diagnostics.at(key));
  }
  return out;
}

double Histogram::integral() const {
  double s = 0.0;
  for (std::size_t b = 0; b < density.size(); ++b) s += density[b] * (edges[b + 1] - edges[b]);
  return s;
}

Histogram histogram(std::span<const double> samples, std::size_t bins) {
  if (samples.empty() || bins == 0) throw DomainError("histogram: need samples and at least one bin");
  auto [mn, mx] = std::minmax_element(samples.begin(), samples.end());
  double lo = *mn;
  double hi = *mx;
  if (hi == lo) {
    lo -= 0.5;
    hi += 0.5;
  }
  Histogram h;
  h.edges.resize(bins + 1);
  const double width = (hi - lo) / static_cast<double>(bins);
  for (std::size_t b = 0; b <= bins; ++b) h.edges[b] = lo + width * static_cast<double>(b);
  h.edges.back() = hi;
  std::vector<std::size_t> counts(bins, 0);
  for (double v : samples) {
    auto b = static_cast<std::size_t>((v - lo) / width);
    counts[std::min(b, bins - 1)]++;
  }
  h.density.resize(bins);
  const auto total = static_cast<double>(samples.size());
  for (std::size_t b = 0; b < bins; ++b) {
    h.density[b] = static_cast<double>(counts[b]) / (total * (h.edges[b + 1] - h.edges[b]));
  }
  return h;
}

}  // namespace wbb
