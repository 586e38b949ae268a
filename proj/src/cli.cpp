#include "wbb/cli.hpp"

#include <CLI11.hpp>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>

#include "wbb/bootstrap.hpp"
#include "wbb/error.hpp"
#include "wbb/io.hpp"
#include "wbb/lasso.hpp"
#include "wbb/mlp.hpp"
#include "wbb/trend_filter.hpp"
#include "wbb/univariate.hpp"
#include "wbb/version.hpp"

namespace wbb::cli {
namespace fs = std::filesystem;
using nlohmann::json;

std::vector<double> parse_grid(const std::string& spec) {
  std::vector<double> parts;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ':')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size()) throw DomainError("grid: cannot parse '" + item + "' in '" + spec + "'");
    parts.push_back(v);
  }
  if (parts.size() != 3) throw DomainError("grid: expected lo:hi:step, got '" + spec + "'");
  const double lo = parts[0];
  const double hi = parts[1];
  const double step = parts[2];
  if (!(step > 0.0) || hi < lo) throw DomainError("grid: need step > 0 and hi >= lo");
  const auto count = static_cast<std::size_t>(std::llround((hi - lo) / step)) + 1;
  std::vector<double> grid(count);
  for (std::size_t k = 0; k < count; ++k) grid[k] = lo + static_cast<double>(k) * step;
  return grid;
}

namespace {

struct Common {
  std::uint64_t seed = 0;
  std::size_t threads = 0;
  std::string out = ".";

  std::size_t resolved_threads() const { return threads > 0 ? threads : threads_from_env(1); }
  json meta(const std::string& cmd) const {
    return {{"tool", "wbb"}, {"version", kVersion}, {"subcommand", cmd}, {"seed", seed},
            {"threads", resolved_threads()}};
  }
};

PriorMode parse_prior(const std::string& s) {
  if (s == "weighted") return PriorMode::Weighted;
  if (s == "fixed") return PriorMode::Fixed;
  throw DomainError("--prior must be 'weighted' or 'fixed'");
}

RunOptions make_run(std::size_t draws, PriorMode prior, std::size_t threads, std::uint64_t seed) {
  RunOptions r;
  r.draws = draws;
  r.prior = prior;
  r.threads = threads;
  r.seed = seed;
  return r;
}

void report(const fs::path& p) { std::cout << "wrote " << p.string() << '\n'; }

void emit_csv(const fs::path& p, const std::vector<std::string>& header, const std::vector<std::vector<double>>& rows,
              const json& meta) {
  io::write_csv(p, header, rows);
  io::write_sidecar(p, meta);
  report(p);
}

// --- oracle ----------------------------------------------------------------

struct OracleArgs {
  double lambda = 1.0;
  std::string grid = "-6:6:0.1";
  std::size_t draws = 10000;
};

void run_oracle(const Common& c, const OracleArgs& a) {
  const auto grid = parse_grid(a.grid);
  std::vector<std::vector<double>> rows;
  for (double y : grid) {
    const UnivariateBackend backend(y, a.lambda);
    const auto draws = run_wbb(backend, make_run(a.draws, PriorMode::Weighted, c.resolved_threads(), c.seed));
    const auto s = summarize(draws);
    rows.push_back({y, s.coordinates[0].mean, wbb_mean_oracle(y, a.lambda), exact_posterior_mean(y, a.lambda),
                    zero_probability(y, a.lambda)});
  }
  json meta = c.meta("oracle");
  meta.update({{"lambda", a.lambda}, {"grid", a.grid}, {"draws", a.draws}, {"prior", "weighted"}});
  emit_csv(fs::path(c.out) / "oracle.csv",
           {"y", "wbb_mc_mean", "wbb_oracle_mean", "exact_posterior_mean", "zero_prob"}, rows, meta);
}

// --- simulate --------------------------------------------------------------

struct SimulateArgs {
  std::size_t n = 500;
  double sd = 2.0;
  std::string kind = "fourier";
  std::size_t d = 10;
  std::size_t active = 4;
};

void run_simulate(const Common& c, const SimulateArgs& a) {
  json meta = c.meta("simulate");
  meta.update({{"kind", a.kind}, {"n", a.n}, {"sd", a.sd}});
  if (a.kind == "fourier") {
    const Eigen::VectorXd y = simulate_fourier(a.n, a.sd, RngConfig{c.seed, 0});
    std::vector<std::vector<double>> rows;
    for (Eigen::Index i = 0; i < y.size(); ++i) rows.push_back({static_cast<double>(i + 1), y[i]});
    emit_csv(fs::path(c.out) / "simulate.csv", {"i", "y"}, rows, meta);
  } else if (a.kind == "regression") {
    const Dataset data = simulate_regression(a.n, a.d, a.active, a.sd, RngConfig{c.seed, 0});
    meta.update({{"d", a.d}, {"active", a.active}});
    const fs::path p = fs::path(c.out) / "simulate.csv";
    io::write_dataset_csv(p, data, "y");
    io::write_sidecar(p, meta);
    report(p);
  } else {
    throw DomainError("--kind must be 'fourier' or 'regression'");
  }
}

// --- lasso -----------------------------------------------------------------

struct LassoArgs {
  std::string data;
  std::string response;
  std::string lambda = "cv";
  std::size_t folds = 10;
  std::size_t grid_size = 100;
  std::size_t draws = 1000;
  std::string prior = "weighted";
  bool no_standardize = false;
  double tolerance = 1e-8;
  int max_sweeps = 10000;
  std::size_t hist_bins = 0;
};

void run_lasso(const Common& c, const LassoArgs& a) {
  const Dataset raw = io::read_csv(a.data, a.response);
  const Standardization st = a.no_standardize ? Standardization{Eigen::VectorXd::Zero(raw.design.cols()),
                                                                 Eigen::VectorXd::Ones(raw.design.cols()), 0.0}
                                              : fit_standardization(raw);
  const Dataset data = st.apply(raw);
  SolverOptions opts;
  opts.tolerance = a.tolerance;
  opts.max_sweeps = a.max_sweeps;

  double lambda = 0.0;
  json cv_meta = nullptr;
  if (a.lambda == "cv") {
    const auto grid = lambda_grid(lambda_max(data, unit_weights(data.rows())), a.grid_size);
    const auto folds = assign_folds(data.rows(), a.folds, c.seed);
    const CvResult cv = cross_validate(data, folds, grid, opts);
    lambda = cv.best_lambda();
    cv_meta = {{"folds", a.folds}, {"grid", cv.grid}, {"cv_error", cv.cv_error}, {"selected", lambda}};
  } else {
    std::size_t used = 0;
    lambda = std::stod(a.lambda, &used);
    if (used != a.lambda.size() || !(lambda >= 0.0)) throw DomainError("--lambda must be a number >= 0 or 'cv'");
  }

  const LassoBackend backend(data, lambda, opts);
  const RunOptions ro = make_run(a.draws, parse_prior(a.prior), c.resolved_threads(), c.seed);
  auto draws = run_wbb(backend, ro);
  for (auto& d : draws) {
    if (d.failed) continue;
    const auto& v = d.coordinates();
    const Eigen::VectorXd b = st.to_original(Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())));
    d.parameters = std::vector<double>(b.data(), b.data() + b.size());
  }

  json meta = c.meta("lasso");
  meta.update({{"data", a.data},
               {"response", a.response},
               {"lambda", lambda},
               {"lambda_source", a.lambda == "cv" ? "cross-validation" : "fixed"},
               {"cv", cv_meta},
               {"draws", a.draws},
               {"prior", a.prior},
               {"standardized", !a.no_standardize},
               {"solver", {{"tolerance", opts.tolerance}, {"max_sweeps", opts.max_sweeps}, {"kkt_tolerance", opts.kkt_tolerance}}},
               {"failed_draws", std::count_if(draws.begin(), draws.end(), [](auto& d) { return d.failed; })}});
  const fs::path out(c.out);
  io::write_draws_csv(out / "lasso_draws.csv", draws, raw.feature_names);
  io::write_sidecar(out / "lasso_draws.csv", meta);
  report(out / "lasso_draws.csv");
  const PosteriorSummary s = summarize(draws, raw.feature_names);
  io::write_json(out / "lasso_summary.json", io::summary_to_json(s));
  io::write_sidecar(out / "lasso_summary.json", meta);
  report(out / "lasso_summary.json");
  if (a.hist_bins > 0) {
    for (std::size_t j = 0; j < raw.feature_names.size(); ++j) {
      const auto p = out / ("lasso_histogram_" + raw.feature_names[j] + ".csv");
      io::write_histogram_csv(p, histogram(coordinate_samples(draws, j), a.hist_bins));
      io::write_sidecar(p, meta);
    }
  }
}

// --- trendfilter -----------------------------------------------------------

struct TrendArgs {
  int order = 3;
  double lambda = 1000.0;
  std::size_t draws = 200;
  std::string simulate;
  std::string data;
  std::string response = "y";
  std::string prior = "weighted";
  int max_iterations = 5000;
  double tolerance = 1e-6;
};

void run_trendfilter(const Common& c, const TrendArgs& a) {
  Eigen::VectorXd y;
  json source;
  if (!a.simulate.empty() == !a.data.empty()) throw DomainError("give exactly one of --simulate n,sd or --data <csv>");
  if (!a.simulate.empty()) {
    const auto comma = a.simulate.find(',');
    if (comma == std::string::npos) throw DomainError("--simulate expects n,sd");
    const auto n = static_cast<std::size_t>(std::stoul(a.simulate.substr(0, comma)));
    const double sd = std::stod(a.simulate.substr(comma + 1));
    y = simulate_fourier(n, sd, RngConfig{c.seed, 0});
    source = {{"simulate", {{"n", n}, {"sd", sd}}}};
  } else {
    const io::CsvTable t = io::read_csv_table(a.data);
    y = t.rows.col(static_cast<Eigen::Index>(t.column(a.response)));
    source = {{"data", a.data}, {"response", a.response}};
  }
  AdmmOptions opts;
  opts.max_iterations = a.max_iterations;
  opts.abs_tolerance = a.tolerance;

  const TrendFilterFit center = fit_trend_filter(y, unit_weights(static_cast<std::size_t>(y.size())), a.order,
                                                 a.lambda, opts);
  const TrendFilterBackend backend(y, a.order, a.lambda, opts);
  const auto draws = run_wbb(backend, make_run(a.draws, parse_prior(a.prior), c.resolved_threads(), c.seed));
  const PosteriorSummary s = summarize(draws, backend.coordinate_names());

  std::vector<std::vector<double>> rows;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const auto& cs = s.coordinates[static_cast<std::size_t>(i)];
    rows.push_back({static_cast<double>(i + 1), y[i], center.beta[i], cs.sd, cs.mean - 2.0 * cs.sd,
                    cs.mean + 2.0 * cs.sd});
  }
  json meta = c.meta("trendfilter");
  meta.update({{"source", source},
               {"order", a.order},
               {"penalty", "D^(order+1)"},
               {"lambda", a.lambda},
               {"draws", a.draws},
               {"prior", a.prior},
               {"band", "mean +- 2 sd over draws; fit is the unit-weight solution"},
               {"solver",
                {{"abs_tolerance", opts.abs_tolerance},
                 {"max_iterations", opts.max_iterations},
                 {"split", opts.split == AdmmSplit::FusedProx ? "fused" : "elementwise"},
                 {"rho", "lambda clamped to [1e-4, 1e4]"},
                 {"adapt_every", opts.adapt_every}}},
               {"center_fit", {{"converged", center.converged}, {"iterations", center.iterations}}},
               {"failed_draws", std::count_if(draws.begin(), draws.end(), [](auto& d) { return d.failed; })}});
  const fs::path out(c.out);
  emit_csv(out / "trendfilter.csv", {"i", "y", "fit", "sd", "lo", "hi"}, rows, meta);
  io::write_draws_csv(out / "trendfilter_draws.csv", draws, backend.coordinate_names());
  io::write_sidecar(out / "trendfilter_draws.csv", meta);
  report(out / "trendfilter_draws.csv");
  io::write_json(out / "trendfilter_summary.json", io::summary_to_json(s));
  io::write_sidecar(out / "trendfilter_summary.json", meta);
  report(out / "trendfilter_summary.json");
}

// --- mlp -------------------------------------------------------------------

struct MlpArgs {
  std::string train_images;
  std::string train_labels;
  std::string test_images;
  std::string test_labels;
  std::size_t subset = 500;
  std::size_t test_subset = 0;
  double lambda = 1e-4;
  std::size_t draws = 30;
  std::size_t epochs = 20;
  std::size_t batch = 32;
  double lr = 3e-4;
  double decay = 0.0;
  std::string prior = "weighted";
  std::size_t hist_bins = 20;
};

void run_mlp(const Common& c, const MlpArgs& a) {
  LabeledSet train = io::read_mnist(a.train_images, a.train_labels);
  LabeledSet test = io::read_mnist(a.test_images, a.test_labels);
  if (a.subset > 0) train = train.head(std::min(a.subset, train.size()));
  if (a.test_subset > 0) test = test.head(std::min(a.test_subset, test.size()));
  const SgdSchedule schedule = a.decay > 0.0 ? SgdSchedule::exp_decay(a.lr, a.decay, a.batch, a.epochs)
                                             : SgdSchedule::constant(a.lr, a.batch, a.epochs);
  const MlpBackend backend(train, test, a.lambda, schedule, MlpShape{}, false);
  const auto draws = run_wbb(backend, make_run(a.draws, parse_prior(a.prior), c.resolved_threads(), c.seed));
  const auto acc = diagnostic_samples(draws, "test_accuracy");
  const PosteriorSummary s = summarize(draws, {"test_accuracy"});

  json meta = c.meta("mlp");
  meta.update({{"train_examples", train.size()},
               {"test_examples", test.size()},
               {"lambda", a.lambda},
               {"draws", a.draws},
               {"prior", a.prior},
               {"architecture", {784, 128, 64, 10}},
               {"init", "glorot-uniform weights, zero biases"},
               {"schedule", {{"kind", a.decay > 0.0 ? "exp_decay" : "constant"}, {"rate", a.lr}, {"decay", a.decay},
                             {"batch_size", a.batch}, {"epochs", a.epochs}}},
               {"failed_draws", std::count_if(draws.begin(), draws.end(), [](auto& d) { return d.failed; })}});
  const fs::path out(c.out);
  std::vector<std::vector<double>> rows;
  for (const auto& d : draws) {
    if (d.failed) continue;
    rows.push_back({static_cast<double>(d.draw_id), d.diagnostics.at("test_accuracy"), d.diagnostics.at("final_loss"),
                    d.diagnostics.at("prior_weight")});
  }
  emit_csv(out / "mlp_draws.csv", {"draw_id", "test_accuracy", "final_loss", "prior_weight"}, rows, meta);

  json summary = io::summary_to_json(s);
  if (acc.size() >= 2) {
    const auto [lo, hi] = credible_interval(acc, 0.95);
    summary["interval95"] = {lo, hi};
  }
  summary["prob_accuracy_above_0.35"] =
      static_cast<double>(std::count_if(acc.begin(), acc.end(), [](double v) { return v > 0.35; })) /
      static_cast<double>(acc.size());
  io::write_json(out / "mlp_summary.json", summary);
  io::write_sidecar(out / "mlp_summary.json", meta);
  report(out / "mlp_summary.json");
  if (a.hist_bins > 0) {
    const auto p = out / "mlp_histogram.csv";
    io::write_histogram_csv(p, histogram(acc, a.hist_bins));
    io::write_sidecar(p, meta);
  }
}

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--seed", c.seed, "Master seed (u64)")->capture_default_str();
  sub->add_option("--threads", c.threads, "Worker threads (default: $WBB_THREADS or 1)");
  sub->add_option("--out", c.out, "Output directory")->capture_default_str();
}

}  // namespace

int dispatch(int argc, const char* const* argv) {
  CLI::App app{"Weighted Bayesian Bootstrap: posterior draws from randomly reweighted optimization"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  Common common;
  OracleArgs oracle;
  SimulateArgs sim;
  LassoArgs lasso;
  TrendArgs trend;
  MlpArgs mlp;

  auto* o = app.add_subcommand("oracle", "Normal-means lasso: Monte Carlo vs exact WBB mean and posterior mean");
  add_common(o, common);
  o->add_option("--lambda", oracle.lambda, "Prior rate lambda")->required();
  o->add_option("--grid", oracle.grid, "y grid lo:hi:step")->capture_default_str();
  o->add_option("--draws", oracle.draws, "Bootstrap draws per grid point")->capture_default_str();

  auto* s = app.add_subcommand("simulate", "Write simulated data as CSV");
  add_common(s, common);
  s->add_option("--n", sim.n, "Number of observations")->capture_default_str();
  s->add_option("--sd", sim.sd, "Noise standard deviation")->capture_default_str();
  s->add_option("--kind", sim.kind, "fourier | regression")->capture_default_str();
  s->add_option("--d", sim.d, "Features (regression)")->capture_default_str();
  s->add_option("--active", sim.active, "Nonzero coefficients (regression)")->capture_default_str();

  auto* l = app.add_subcommand("lasso", "Weighted lasso bootstrap");
  add_common(l, common);
  l->add_option("--data", lasso.data, "CSV file with header")->required();
  l->add_option("--response", lasso.response, "Response column name")->required();
  l->add_option("--lambda", lasso.lambda, "Penalty, or 'cv'")->capture_default_str();
  l->add_option("--cv-folds", lasso.folds, "Cross-validation folds")->capture_default_str();
  l->add_option("--cv-grid", lasso.grid_size, "Cross-validation grid size")->capture_default_str();
  l->add_option("--draws", lasso.draws, "Bootstrap draws")->capture_default_str();
  l->add_option("--prior", lasso.prior, "weighted | fixed")->capture_default_str();
  l->add_flag("--no-standardize", lasso.no_standardize, "Fit on raw columns");
  l->add_option("--tol", lasso.tolerance, "Coordinate-change tolerance")->capture_default_str();
  l->add_option("--max-sweeps", lasso.max_sweeps, "Sweep limit")->capture_default_str();
  l->add_option("--hist-bins", lasso.hist_bins, "Per-coefficient histogram bins (0 = none)");

  auto* t = app.add_subcommand("trendfilter", "Weighted trend-filtering bootstrap");
  add_common(t, common);
  t->add_option("--order", trend.order, "Polynomial degree k; penalizes D^(k+1)")->capture_default_str();
  t->add_option("--lambda", trend.lambda, "Penalty")->capture_default_str();
  t->add_option("--draws", trend.draws, "Bootstrap draws")->capture_default_str();
  t->add_option("--simulate", trend.simulate, "Simulate Fourier data: n,sd");
  t->add_option("--data", trend.data, "CSV input");
  t->add_option("--response", trend.response, "Column of --data to smooth")->capture_default_str();
  t->add_option("--prior", trend.prior, "weighted | fixed")->capture_default_str();
  t->add_option("--max-iter", trend.max_iterations, "ADMM iteration limit")->capture_default_str();
  t->add_option("--tol", trend.tolerance, "ADMM residual tolerance")->capture_default_str();

  auto* m = app.add_subcommand("mlp", "Two-hidden-layer MLP bootstrap on MNIST IDX files");
  add_common(m, common);
  m->add_option("--train-images", mlp.train_images)->required();
  m->add_option("--train-labels", mlp.train_labels)->required();
  m->add_option("--test-images", mlp.test_images)->required();
  m->add_option("--test-labels", mlp.test_labels)->required();
  m->add_option("--subset", mlp.subset, "Training examples used (0 = all)")->capture_default_str();
  m->add_option("--test-subset", mlp.test_subset, "Test examples used (0 = all)");
  m->add_option("--lambda", mlp.lambda, "L2 penalty on weight matrices")->capture_default_str();
  m->add_option("--draws", mlp.draws, "Bootstrap draws")->capture_default_str();
  m->add_option("--epochs", mlp.epochs)->capture_default_str();
  m->add_option("--batch", mlp.batch)->capture_default_str();
  m->add_option("--lr", mlp.lr, "Step size t (or a for --decay)")->capture_default_str();
  m->add_option("--decay", mlp.decay, "t_k = lr * exp(-k * decay); 0 keeps t constant");
  m->add_option("--prior", mlp.prior, "weighted | fixed")->capture_default_str();
  m->add_option("--hist-bins", mlp.hist_bins, "Accuracy histogram bins (0 = none)")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "wbb: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  try {
    if (*o) run_oracle(common, oracle);
    else if (*s) run_simulate(common, sim);
    else if (*l) run_lasso(common, lasso);
    else if (*t) run_trendfilter(common, trend);
    else if (*m) run_mlp(common, mlp);
  } catch (const std::exception& e) {
    std::cerr << "wbb: error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace wbb::cli
