#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mlpf/kernel.hpp"
#include "mlpf/model.hpp"
#include "mlpf/rng.hpp"

namespace mlpf {

/// Weighted particle ensemble at one filtering step. Weights are carried
/// in log scale and accumulate multiplicatively between resampling
/// events.
struct ParticleCloud {
  std::vector<double> states;
  std::vector<double> log_weights;
  LevelIndex level;
  int step = 0;
};

struct FilterOutput {
  std::vector<double> predictor;  // per-step predictor estimate of phi
  std::vector<double> filter;     // per-step filter estimate of phi
  std::vector<double> ess_trace;
  std::vector<std::uint8_t> resampled;
  double log_normalizing_constant = 0.0;
  std::uint64_t cost_euler_steps = 0;
  std::uint64_t likelihood_floor_hits = 0;
  std::uint64_t phi_cap_hits = 0;

  double final_filter_estimate() const { return filter.back(); }
};

/// Bootstrap particle filter over the discretized model at the given
/// level. Starts every particle at x0, mutates with the level kernel,
/// multiplies accumulated weights by G(y_m, .), and resamples
/// (multinomially) whenever the filter ESS drops below
/// ess_fraction * particles. Estimates are recorded from the weighted
/// cloud before resampling. The normalizing-constant estimate accumulates
/// the per-step mean unnormalized weight in log scale.
FilterOutput pf_run(const ModelSpec& m, std::span<const double> observations,
                    LevelIndex level, int particles, double ess_fraction,
                    rng::StreamKey key);

/// Weighted estimate sum_i w_i phi(U_i) with w combining the cloud's
/// accumulated weights and G(y, .) for the given observation. With
/// uniform accumulated weights this is exactly the one-step importance
/// estimate.
double filter_estimate(const ParticleCloud& cloud, const ModelSpec& m,
                       double y);

/// The normalizing-constant estimate of a completed run (natural scale).
double normalizing_constant(const FilterOutput& output);

}  // namespace mlpf
