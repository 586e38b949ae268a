#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <string>
#include <vector>

#include "wbb/bootstrap.hpp"
#include "wbb/cli.hpp"
#include "wbb/error.hpp"
#include "wbb/lasso.hpp"
#include "wbb/rng.hpp"
#include "wbb/trend_filter.hpp"
#include "wbb/univariate.hpp"
#include "wbb/version.hpp"

namespace py = pybind11;
using namespace wbb;

namespace {

PriorMode parse_prior(const std::string& prior) {
  if (prior == "weighted") return PriorMode::Weighted;
  if (prior == "fixed") return PriorMode::Fixed;
  throw DomainError("prior must be 'weighted' or 'fixed'");
}

WeightDraw make_weights(const std::vector<double>& w, double prior_weight) {
  WeightDraw d;
  d.obs_weights = w;
  d.prior_weight = prior_weight;
  validate(d);
  return d;
}

RunOptions run_options(std::size_t draws, std::uint64_t seed, std::size_t threads, const std::string& prior) {
  RunOptions o;
  o.draws = draws;
  o.seed = seed;
  o.threads = threads;
  o.prior = parse_prior(prior);
  return o;
}

// Successful draws as a K x d matrix.
Eigen::MatrixXd sample_matrix(const Backend& backend, const RunOptions& opts) {
  std::vector<DrawResult> draws;
  {
    py::gil_scoped_release release;
    draws = run_wbb(backend, opts);
  }
  std::vector<const std::vector<double>*> rows;
  for (const auto& d : draws) {
    if (!d.failed) rows.push_back(&d.coordinates());
  }
  const auto cols = rows.empty() ? 0 : static_cast<Eigen::Index>(rows.front()->size());
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), cols);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) out(static_cast<Eigen::Index>(i), j) = (*rows[i])[j];
  }
  return out;
}

py::dict summary_dict(const CoordinateSummary& c) {
  py::dict d;
  d["name"] = c.name;
  d["mean"] = c.mean;
  d["sd"] = c.sd;
  d["q025"] = c.q025;
  d["q50"] = c.q50;
  d["q975"] = c.q975;
  d["zero_fraction"] = c.zero_fraction;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Weighted Bayesian bootstrap solvers and samplers";
  m.attr("__version__") = kVersion;

  m.def("soft_threshold_wbb", &soft_threshold_wbb, py::arg("y"), py::arg("lam"), py::arg("w1"), py::arg("w2"),
        "Weighted mode of the normal-Laplace problem.");
  m.def("exact_posterior_mean", &exact_posterior_mean, py::arg("y"), py::arg("lam"));
  m.def("wbb_mean_oracle", &wbb_mean_oracle, py::arg("y"), py::arg("lam"));
  m.def("zero_probability", &zero_probability, py::arg("y"), py::arg("lam"));

  m.def(
      "sample_weights",
      [](std::size_t n, std::uint64_t seed, std::uint64_t stream, const std::string& prior) {
        const WeightDraw w = sample_weights(n, RngConfig{seed, stream}, parse_prior(prior));
        return py::make_tuple(w.obs_weights, w.prior_weight);
      },
      py::arg("n"), py::arg("seed") = 0, py::arg("stream") = 0, py::arg("prior") = "weighted",
      "Returns (observation weights, prior weight).");

  m.def(
      "lambda_max",
      [](const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const std::vector<double>& w, double prior_weight) {
        return lambda_max(make_dataset(x, y), make_weights(w, prior_weight));
      },
      py::arg("x"), py::arg("y"), py::arg("w"), py::arg("prior_weight") = 1.0);

  m.def(
      "fit_weighted_lasso",
      [](const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const std::vector<double>& w, double prior_weight,
         double lam, double tolerance) {
        SolverOptions opts;
        opts.tolerance = tolerance;
        const LassoFit fit = fit_weighted_lasso(make_dataset(x, y), make_weights(w, prior_weight), lam, opts);
        py::dict d;
        d["coefficients"] = fit.coefficients;
        d["objective"] = fit.objective;
        d["iterations"] = fit.iterations;
        d["max_kkt_violation"] = fit.max_kkt_violation;
        d["converged"] = fit.converged;
        return d;
      },
      py::arg("x"), py::arg("y"), py::arg("w"), py::arg("prior_weight"), py::arg("lam"),
      py::arg("tolerance") = SolverOptions{}.tolerance,
      "Minimizes sum_i w_i (y_i - x_i b)^2 + lam * prior_weight * |b|_1 by coordinate descent.");

  m.def(
      "fit_trend_filter",
      [](const Eigen::VectorXd& y, const std::vector<double>& w, double prior_weight, int degree, double lam,
         double abs_tolerance, int max_iterations) {
        AdmmOptions opts;
        opts.abs_tolerance = abs_tolerance;
        opts.max_iterations = max_iterations;
        TrendFilterFit fit;
        {
          py::gil_scoped_release release;
          fit = fit_trend_filter(y, make_weights(w, prior_weight), degree, lam, opts);
        }
        py::dict d;
        d["beta"] = fit.beta;
        d["dual"] = fit.dual;
        d["iterations"] = fit.iterations;
        d["converged"] = fit.converged;
        return d;
      },
      py::arg("y"), py::arg("w"), py::arg("prior_weight"), py::arg("degree"), py::arg("lam"),
      py::arg("abs_tolerance") = AdmmOptions{}.abs_tolerance,
      py::arg("max_iterations") = AdmmOptions{}.max_iterations,
      "Weighted trend filter of the given polynomial degree (penalty on the (degree+1)-th difference).");

  m.def("fourier_signal", &fourier_signal, py::arg("n"));
  m.def(
      "simulate_fourier",
      [](std::size_t n, double noise_sd, std::uint64_t seed) { return simulate_fourier(n, noise_sd, RngConfig{seed, 0}); },
      py::arg("n"), py::arg("noise_sd"), py::arg("seed") = 0);

  m.def(
      "bootstrap_univariate",
      [](double y, double lam, std::size_t draws, std::uint64_t seed, std::size_t threads, const std::string& prior) {
        return sample_matrix(UnivariateBackend(y, lam), run_options(draws, seed, threads, prior)).col(0).eval();
      },
      py::arg("y"), py::arg("lam"), py::arg("draws") = 1000, py::arg("seed") = 0, py::arg("threads") = 1,
      py::arg("prior") = "weighted", "WBB draws of the normal-Laplace mode.");

  m.def(
      "bootstrap_lasso",
      [](const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double lam, std::size_t draws, std::uint64_t seed,
         std::size_t threads, const std::string& prior) {
        return sample_matrix(LassoBackend(make_dataset(x, y), lam), run_options(draws, seed, threads, prior));
      },
      py::arg("x"), py::arg("y"), py::arg("lam"), py::arg("draws") = 1000, py::arg("seed") = 0,
      py::arg("threads") = 1, py::arg("prior") = "weighted", "WBB draws of the lasso coefficients (draws x d).");

  m.def(
      "bootstrap_trend_filter",
      [](const Eigen::VectorXd& y, int degree, double lam, std::size_t draws, std::uint64_t seed, std::size_t threads,
         const std::string& prior) {
        return sample_matrix(TrendFilterBackend(y, degree, lam), run_options(draws, seed, threads, prior));
      },
      py::arg("y"), py::arg("degree"), py::arg("lam"), py::arg("draws") = 200, py::arg("seed") = 0,
      py::arg("threads") = 1, py::arg("prior") = "weighted", "WBB draws of the fitted trend (draws x n).");

  m.def(
      "summarize",
      [](const Eigen::MatrixXd& samples, std::vector<std::string> names) {
        std::vector<std::vector<double>> rows(static_cast<std::size_t>(samples.rows()));
        for (Eigen::Index i = 0; i < samples.rows(); ++i) {
          rows[static_cast<std::size_t>(i)].assign(samples.row(i).begin(), samples.row(i).end());
        }
        const PosteriorSummary s = summarize_samples(rows, std::move(names));
        py::list out;
        for (const auto& c : s.coordinates) out.append(summary_dict(c));
        return out;
      },
      py::arg("samples"), py::arg("names") = std::vector<std::string>{},
      "Per-column mean, sd, type-7 quantiles and zero fraction of a draws x d sample.");

  m.def(
      "credible_interval",
      [](std::vector<double> draws, double level) { return credible_interval(draws, level); }, py::arg("draws"),
      py::arg("level") = 0.95);

  m.def(
      "cli",
      [](std::vector<std::string> args) {
        args.insert(args.begin(), "wbb");
        std::vector<const char*> argv;
        for (const auto& a : args) argv.push_back(a.c_str());
        py::gil_scoped_release release;
        return cli::dispatch(static_cast<int>(argv.size()), argv.data());
      },
      py::arg("args"), "Runs the wbb command line with the given arguments; returns the exit code.");
}
