#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mlpf/model.hpp"
#include "mlpf/rng.hpp"

namespace mlpf {

/// Exact filtering recursion output for the linear-Gaussian oracles.
struct KalmanOutput {
  std::vector<double> mean;      // posterior mean of the filtered state
  std::vector<double> variance;  // posterior variance of the filtered state
  std::vector<double> phi_estimate;  // E[phi(X) | y_{1:k}]
  std::vector<double> predictor_mean;
  std::vector<double> predictor_variance;
};

/// Exact filter for the OU model. Transition over one interval: mean
/// mu + e^{-theta delta}(x - mu), variance sigma^2 (1 - e^{-2 theta
/// delta}) / (2 theta); observation noise tau2. Point-mass prior at x0.
KalmanOutput kalman_ou(const ModelSpec& m, std::span<const double> observations);

/// Exact filter for the GBM model on Z = log X: drift (mu - sigma^2/2)
/// delta, variance sigma^2 delta, observation N(z, tau2). phi_estimate is
/// E[X | y] recovered by the lognormal mean exp(mean + variance / 2).
KalmanOutput kalman_gbm(const ModelSpec& m, std::span<const double> observations);

/// High-level reference filter for models without closed forms: pf_run at
/// `level` with `particles`, averaged over `seeds` independent
/// replicates, with the Monte Carlo standard error of the average.
struct ReferenceOutput {
  std::vector<double> value;
  std::vector<double> standard_error;
  int level = 9;
  std::uint64_t particles = 100000;
  int seeds = 10;
};

ReferenceOutput reference_pf(const ModelSpec& m,
                             std::span<const double> observations,
                             rng::StreamKey key, int level = 9,
                             int particles = 100000, int seeds = 10);

/// CSV export (columns step, value, stderr) so references can be reused
/// across experiment runs.
void write_reference_csv(const std::string& path, const ReferenceOutput& ref,
                         const std::string& preamble = {});
ReferenceOutput read_reference_csv(const std::string& path);

}  // namespace mlpf
