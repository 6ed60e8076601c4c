#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mlpf/model.hpp"
#include "mlpf/rng.hpp"

namespace mlpf {

/// Flat key-value experiment configuration. One grammar for every
/// subcommand: `key = value` lines, '#' comments, blank lines ignored.
/// Unknown keys are rejected; each subcommand additionally rejects keys
/// it does not use.
struct ExperimentConfig {
  std::string command;  // filled by the CLI, not a config key
  std::string model;
  std::map<std::string, double> constant_overrides;

  std::string method = "both";  // pf | mlpf | both (bench only)
  int level = 8;                // pf level, or L for mlpf
  int level_min = 1;
  int level_max = 5;
  int particles = 1000;
  int repetitions = 100;
  double ess_fraction = 0.25;
  std::uint64_t seed = 1;

  // Observations: either a data file, or a synthetic set of length n
  // simulated at truth_level.
  std::string data_file;
  int n = 100;
  int truth_level = 10;

  // Truth source for bench: kalman | reference | auto.
  std::string truth = "auto";
  int reference_level = 9;
  int reference_particles = 100000;
  int reference_seeds = 10;

  int rate_particles = 200;
  bool record_walltime = false;
  std::string out_dir = ".";

  /// Canonical `key = value` text of the resolved configuration, sorted
  /// by key; embedding it in an output file makes the file reproducible
  /// from its own header.
  std::string resolved_text() const;
};

ExperimentConfig parse_config_text(const std::string& text,
                                   const std::string& origin = "<config>");
ExperimentConfig parse_config_file(const std::string& path);

/// Daily log-return series normalized to unit population variance. Dates
/// are opaque labels kept in file order.
struct ReturnSeries {
  std::vector<std::string> dates;
  std::vector<double> values;
};

/// Ingest (date, price) or (date, log_return) CSV rows: prices become log
/// returns ln(p_k / p_{k-1}); the series is divided by its population
/// standard deviation. Errors name the offending row.
ReturnSeries ingest_returns(const std::string& path);

struct Dataset {
  std::vector<double> observations;
  std::vector<double> latent;
};

/// Synthesize n observations from the model: the latent path advances at
/// truth_level per interval and each y_k is drawn from G at the
/// observation time.
Dataset simulate_dataset(const ModelSpec& m, int n, int truth_level,
                         rng::StreamKey key);

void write_dataset_csv(const std::string& path, const Dataset& data,
                       const std::string& preamble = {});
Dataset read_dataset_csv(const std::string& path);

/// Observation loader shared by the CLI subcommands: a dataset file, a
/// returns file (detected by header), or a synthetic dataset derived from
/// the config's seed.
std::vector<double> load_observations(const ExperimentConfig& cfg,
                                      const ModelSpec& m);

}  // namespace mlpf
