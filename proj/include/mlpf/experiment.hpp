#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mlpf/model.hpp"
#include "mlpf/multilevel.hpp"
#include "mlpf/rng.hpp"

namespace mlpf {

struct LogLogFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
};

/// Ordinary least squares of ln(y) on ln(x). Needs at least 3 strictly
/// positive points.
LogLogFit fit_loglog_slope(std::span<const double> x, std::span<const double> y);

/// One abscissa/ordinate series over levels with its fitted log-log
/// slope. `annotation` records levels that failed or were dropped.
struct RateSeries {
  std::vector<int> levels;
  std::vector<double> h;
  std::vector<double> value;
  LogLogFit fit;
  int repetitions = 0;
  std::string annotation;
};

struct RatePair {
  RateSeries variance_series;  // sample variance of the final increment
  RateSeries coupling_series;  // mean of 1 - p_l(n)
};

/// Strong-rate diagnostics: for each level 1..max_level run `repetitions`
/// coupled filters with a fixed particle count on the given observations,
/// then fit both decay series against h_l. The particle count is held
/// constant across levels so the variance of the increment estimator
/// scales as its per-sample constant.
///
/// Two passes feed the two series. The variance of the increment
/// estimator is measured in the resample-every-step configuration,
/// matching the estimator whose variance the theory bounds; the
/// common-ancestry fraction is measured in the adaptive configuration at
/// `ess_fraction`, where it diagnoses the production algorithm (always
/// resampling saturates 1 - p at coarse levels).
RatePair estimate_strong_rates(const ModelSpec& m,
                               std::span<const double> observations,
                               int max_level, int repetitions, int particles,
                               double ess_fraction, rng::StreamKey key);

enum class Method { PF, MLPF };
std::string method_name(Method method);

struct CostRow {
  int max_level = 0;
  double mse = 0.0;
  std::uint64_t cost = 0;
  double walltime_seconds = 0.0;
  std::vector<double> per_step_mse;
};

struct ExperimentResult {
  std::string model;
  Method method = Method::PF;
  std::vector<CostRow> rows;
  LogLogFit fit;  // ln(cost) on ln(mse)
};

/// Cost-vs-MSE study over max levels L in [level_min, level_max]. The
/// single-level filter at L uses 8 * 2^{2L} particles so its variance
/// decays with the squared bias; the multilevel runs use
/// level_allocation. MSE is the mean over repetitions of the squared
/// error of the final-step estimate against `truth` (a per-step series;
/// the last entry is the target). Cost is the exact Euler-step count per
/// run.
ExperimentResult mse_vs_cost(const ModelSpec& m,
                             std::span<const double> observations,
                             Method method, int level_min, int level_max,
                             int repetitions, std::span<const double> truth,
                             double ess_fraction, rng::StreamKey key,
                             bool record_walltime = false);

/// Exact Euler-step count of one multilevel run with the given
/// allocation: n (N_0 + sum_{l>=1} N_l (2^l + 2^{l-1})).
std::uint64_t cost_model(const LevelAllocation& alloc, int n_steps);

// CSV emission (schemas shared by the CLI and the experiment tests).
void write_rates_csv(const std::string& path, const std::string& model,
                     const RatePair& rates, const std::string& preamble = {});
void write_cost_csv(const std::string& path,
                    const std::vector<ExperimentResult>& results,
                    const std::string& preamble = {});
void write_slopes_csv(const std::string& path,
                      const std::vector<std::string>& models,
                      const std::vector<std::string>& methods,
                      const std::vector<LogLogFit>& fits,
                      const std::string& preamble = {});
void write_mse_steps_csv(const std::string& path,
                         const std::vector<ExperimentResult>& results,
                         const std::string& preamble = {});

}  // namespace mlpf
