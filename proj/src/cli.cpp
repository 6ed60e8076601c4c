#include "mlpf/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <CLI11.hpp>

#include "mlpf/config.hpp"
#include "mlpf/csv.hpp"
#include "mlpf/experiment.hpp"
#include "mlpf/multilevel.hpp"
#include "mlpf/oracle.hpp"
#include "mlpf/particle_filter.hpp"

namespace mlpf {

namespace {

namespace fs = std::filesystem;

std::string out_path(const ExperimentConfig& cfg, const std::string& file) {
  fs::create_directories(cfg.out_dir);
  return (fs::path(cfg.out_dir) / file).string();
}

ModelSpec config_model(const ExperimentConfig& cfg) {
  if (cfg.model.empty())
    throw std::invalid_argument("config does not name a model");
  return builtin_model(cfg.model, cfg.constant_overrides);
}

void run_simulate(const ExperimentConfig& cfg) {
  const auto m = config_model(cfg);
  const auto data = simulate_dataset(
      m, cfg.n, cfg.truth_level, rng::StreamKey{cfg.seed}.child(rng::kTagDataset));
  write_dataset_csv(out_path(cfg, "dataset.csv"), data, cfg.resolved_text());
}

void run_pf(const ExperimentConfig& cfg) {
  const auto m = config_model(cfg);
  const auto obs = load_observations(cfg, m);
  const auto run = pf_run(m, obs, LevelIndex{cfg.level}, cfg.particles,
                          cfg.ess_fraction, rng::StreamKey{cfg.seed});
  const std::string preamble = cfg.resolved_text();
  {
    csv::Writer w(out_path(cfg, "pf_steps.csv"), preamble);
    w.header({"step", "predictor", "filter", "ess", "resampled"});
    for (std::size_t k = 0; k < run.filter.size(); ++k)
      w.row({csv::fmt(k + 1), csv::fmt(run.predictor[k]),
             csv::fmt(run.filter[k]), csv::fmt(run.ess_trace[k]),
             csv::fmt(static_cast<int>(run.resampled[k]))});
  }
  {
    csv::Writer w(out_path(cfg, "pf_summary.csv"), preamble);
    w.header({"final_estimate", "log_normalizing_constant", "cost",
              "likelihood_floor_hits", "phi_cap_hits"});
    w.row({csv::fmt(run.final_filter_estimate()),
           csv::fmt(run.log_normalizing_constant), csv::fmt(run.cost_euler_steps),
           csv::fmt(run.likelihood_floor_hits), csv::fmt(run.phi_cap_hits)});
  }
}

void run_mlpf(const ExperimentConfig& cfg) {
  const auto m = config_model(cfg);
  const auto obs = load_observations(cfg, m);
  const auto alloc = level_allocation(cfg.level, m);
  const auto run =
      mlpf_run(m, obs, alloc, cfg.ess_fraction, rng::StreamKey{cfg.seed});
  const std::string preamble = cfg.resolved_text();
  {
    csv::Writer w(out_path(cfg, "mlpf_steps.csv"), preamble);
    w.header({"step", "estimate"});
    for (std::size_t k = 0; k < run.estimates.size(); ++k)
      w.row({csv::fmt(k + 1), csv::fmt(run.estimates[k])});
  }
  {
    csv::Writer w(out_path(cfg, "mlpf_levels.csv"), preamble);
    w.header({"level", "particles", "final_increment", "p_final", "p_mean",
              "cost"});
    w.row({csv::fmt(0), csv::fmt(alloc.particles[0]),
           csv::fmt(run.level0.filter.back()), csv::fmt(1.0), csv::fmt(1.0),
           csv::fmt(run.level0.cost_euler_steps)});
    for (std::size_t l = 0; l < run.coupled_levels.size(); ++l) {
      const auto& lvl = run.coupled_levels[l];
      w.row({csv::fmt(l + 1), csv::fmt(alloc.particles[l + 1]),
             csv::fmt(lvl.final_increment()),
             csv::fmt(lvl.final_coupled_fraction()),
             csv::fmt(lvl.mean_coupled_fraction()),
             csv::fmt(lvl.cost_euler_steps)});
    }
  }
  {
    csv::Writer w(out_path(cfg, "mlpf_summary.csv"), preamble);
    w.header({"final_estimate", "total_cost"});
    w.row({csv::fmt(run.final_estimate()), csv::fmt(run.total_cost_euler_steps)});
  }
}

void run_kalman(const ExperimentConfig& cfg) {
  const auto m = config_model(cfg);
  const auto obs = load_observations(cfg, m);
  KalmanOutput out;
  if (m.kind == ModelKind::OU) out = kalman_ou(m, obs);
  else if (m.kind == ModelKind::GBM) out = kalman_gbm(m, obs);
  else
    throw std::invalid_argument("kalman: no closed-form filter for model " +
                                m.name);
  csv::Writer w(out_path(cfg, "kalman.csv"), cfg.resolved_text());
  w.header({"step", "mean", "variance", "phi_estimate"});
  for (std::size_t k = 0; k < out.mean.size(); ++k)
    w.row({csv::fmt(k + 1), csv::fmt(out.mean[k]), csv::fmt(out.variance[k]),
           csv::fmt(out.phi_estimate[k])});
}

void run_rates(const ExperimentConfig& cfg) {
  const auto m = config_model(cfg);
  const auto obs = load_observations(cfg, m);
  const auto rates = estimate_strong_rates(
      m, obs, cfg.level_max, cfg.repetitions, cfg.rate_particles,
      cfg.ess_fraction, rng::StreamKey{cfg.seed});
  const std::string preamble = cfg.resolved_text();
  write_rates_csv(out_path(cfg, "rates.csv"), m.name, rates, preamble);
  write_slopes_csv(out_path(cfg, "slopes.csv"), {m.name, m.name},
                   {"rate_variance", "rate_coupling"},
                   {rates.variance_series.fit, rates.coupling_series.fit},
                   preamble);
}

std::vector<double> bench_truth(const ExperimentConfig& cfg, const ModelSpec& m,
                                std::span<const double> obs) {
  std::string source = cfg.truth;
  if (source == "auto")
    source = (m.kind == ModelKind::OU || m.kind == ModelKind::GBM)
                 ? "kalman"
                 : "reference";
  if (source == "kalman") {
    if (m.kind == ModelKind::OU) return kalman_ou(m, obs).phi_estimate;
    if (m.kind == ModelKind::GBM) return kalman_gbm(m, obs).phi_estimate;
    throw std::invalid_argument("truth = kalman needs an ou or gbm model");
  }
  const auto ref = reference_pf(m, obs, rng::StreamKey{cfg.seed},
                                cfg.reference_level, cfg.reference_particles,
                                cfg.reference_seeds);
  write_reference_csv(out_path(cfg, "reference.csv"), ref, cfg.resolved_text());
  return ref.value;
}

void run_bench(const ExperimentConfig& cfg) {
  const auto m = config_model(cfg);
  const auto obs = load_observations(cfg, m);
  const auto truth = bench_truth(cfg, m, obs);

  std::vector<ExperimentResult> results;
  if (cfg.method == "pf" || cfg.method == "both")
    results.push_back(mse_vs_cost(m, obs, Method::PF, cfg.level_min,
                                  cfg.level_max, cfg.repetitions, truth,
                                  cfg.ess_fraction, rng::StreamKey{cfg.seed},
                                  cfg.record_walltime));
  if (cfg.method == "mlpf" || cfg.method == "both")
    results.push_back(mse_vs_cost(m, obs, Method::MLPF, cfg.level_min,
                                  cfg.level_max, cfg.repetitions, truth,
                                  cfg.ess_fraction, rng::StreamKey{cfg.seed},
                                  cfg.record_walltime));

  const std::string preamble = cfg.resolved_text();
  write_cost_csv(out_path(cfg, "cost.csv"), results, preamble);
  write_mse_steps_csv(out_path(cfg, "mse_steps.csv"), results, preamble);
  std::vector<std::string> models, methods;
  std::vector<LogLogFit> fits;
  for (const auto& res : results) {
    models.push_back(res.model);
    methods.push_back(method_name(res.method));
    fits.push_back(res.fit);
  }
  write_slopes_csv(out_path(cfg, "slopes.csv"), models, methods, fits, preamble);
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
#ifdef _OPENMP
  if (const char* threads = std::getenv("MLPF_THREADS")) {
    const int t = std::atoi(threads);
    if (t > 0) omp_set_num_threads(t);
  }
#endif

  CLI::App app{"Multilevel particle filtering for discretely observed diffusions"};
  app.require_subcommand(1);

  struct Args {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
  };

  const std::vector<std::string> names = {"simulate", "pf",    "mlpf",
                                          "rates",    "bench", "kalman"};
  const std::vector<std::string> descriptions = {
      "synthesize an observation dataset",
      "single-level particle filter run",
      "multilevel particle filter run",
      "strong-rate study over levels",
      "cost-versus-MSE study",
      "closed-form filter run (ou, gbm)"};
  std::vector<Args> args(names.size());
  for (std::size_t i = 0; i < names.size(); ++i) {
    auto* sub = app.add_subcommand(names[i], descriptions[i]);
    sub->add_option("--config", args[i].config, "configuration file")->required();
    sub->add_option("--seed", args[i].seed, "override the config seed");
    sub->add_option("--out", args[i].out, "override the output directory");
  }

  try {
    app.parse(argc, const_cast<char**>(argv));
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    for (std::size_t i = 0; i < names.size(); ++i) {
      if (!app.get_subcommand(names[i])->parsed()) continue;
      ExperimentConfig cfg = parse_config_file(args[i].config);
      cfg.command = names[i];
      if (args[i].seed) cfg.seed = *args[i].seed;
      if (args[i].out) cfg.out_dir = *args[i].out;
      if (names[i] == "simulate") run_simulate(cfg);
      else if (names[i] == "pf") run_pf(cfg);
      else if (names[i] == "mlpf") run_mlpf(cfg);
      else if (names[i] == "rates") run_rates(cfg);
      else if (names[i] == "bench") run_bench(cfg);
      else run_kalman(cfg);
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace mlpf
