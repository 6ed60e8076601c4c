#include "mlpf/multilevel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "mlpf/resampling.hpp"

namespace mlpf {

namespace {

// floor(2^(k/4)) for integer k >= 0, exact in the integer-exponent case.
std::uint64_t floor_pow2_quarter(int k) {
  const std::uint64_t whole = std::uint64_t{1} << (k / 4);
  const int rem = k % 4;
  if (rem == 0) return whole;
  // 2^(rem/4) is irrational, so the rounded product cannot sit on a floor
  // boundary at these magnitudes.
  return static_cast<std::uint64_t>(static_cast<double>(whole) *
                                    std::exp2(0.25 * rem));
}

std::vector<std::uint64_t> allocation_counts(int max_level, double n0,
                                             double decay_exponent) {
  std::vector<std::uint64_t> counts(static_cast<std::size_t>(max_level) + 1);
  for (int l = 0; l <= max_level; ++l) {
    const double n = n0 * std::exp2(-decay_exponent * l);
    counts[l] = std::max<std::uint64_t>(2, static_cast<std::uint64_t>(n));
  }
  return counts;
}

}  // namespace

LevelAllocation level_allocation(int max_level, const ModelSpec& m) {
  if (max_level < 1)
    throw std::invalid_argument("level_allocation: max level must be >= 1");
  LevelAllocation alloc;
  alloc.max_level = max_level;
  alloc.gamma = 1.0;
  alloc.alpha_rate = 1.0;
  if (m.constant_diffusion) {
    alloc.variant = AllocationVariant::constant_diffusion;
    alloc.beta = 2.0;
    // N_0L = 2^{2L} L, decay 2^{-l}: exact in integers.
    const std::uint64_t n0 =
        (std::uint64_t{1} << (2 * max_level)) * static_cast<std::uint64_t>(max_level);
    alloc.particles.resize(static_cast<std::size_t>(max_level) + 1);
    for (int l = 0; l <= max_level; ++l)
      alloc.particles[l] = std::max<std::uint64_t>(2, n0 >> l);
  } else {
    alloc.variant = AllocationVariant::general;
    alloc.beta = 1.0;
    // N_l = floor(2^{(9L - 3l)/4}).
    alloc.particles.resize(static_cast<std::size_t>(max_level) + 1);
    for (int l = 0; l <= max_level; ++l)
      alloc.particles[l] =
          std::max<std::uint64_t>(2, floor_pow2_quarter(9 * max_level - 3 * l));
  }
  return alloc;
}

LevelAllocation level_allocation_explicit(int max_level, double n0,
                                          double beta, double gamma) {
  if (max_level < 1)
    throw std::invalid_argument("level_allocation: max level must be >= 1");
  if (!(n0 >= 2.0)) throw std::invalid_argument("level_allocation: n0 must be >= 2");
  LevelAllocation alloc;
  alloc.max_level = max_level;
  alloc.beta = beta;
  alloc.gamma = gamma;
  alloc.variant = AllocationVariant::general;
  alloc.particles = allocation_counts(max_level, n0, (beta + 2.0 * gamma) / 4.0);
  return alloc;
}

double CoupledFilterOutput::mean_coupled_fraction() const {
  if (coupled_fraction.empty()) return 1.0;
  return std::accumulate(coupled_fraction.begin(), coupled_fraction.end(), 0.0) /
         static_cast<double>(coupled_fraction.size());
}

CoupledFilterOutput coupled_pf_run(const ModelSpec& m,
                                   std::span<const double> observations,
                                   LevelIndex level, int particles,
                                   double ess_fraction, rng::StreamKey key) {
  if (level.l < 1)
    throw std::invalid_argument("coupled_pf_run: level must be >= 1");
  if (particles < 2)
    throw std::invalid_argument("coupled_pf_run: need at least 2 particles");
  if (!(ess_fraction > 0.0 && ess_fraction <= 1.0))
    throw std::invalid_argument("coupled_pf_run: ess_fraction must be in (0, 1]");

  const std::size_t n = static_cast<std::size_t>(particles);
  std::vector<double> fine(n, m.c.x0), coarse(n, m.c.x0);
  std::vector<double> log_wf(n, 0.0), log_wc(n, 0.0);
  std::vector<double> log_wf_new(n), log_wc_new(n);
  std::vector<double> phi_f(n), phi_c(n);
  std::vector<std::uint8_t> in_common(n, 1);

  std::vector<rng::GaussianStream> mutation_streams;
  mutation_streams.reserve(n);
  const rng::StreamKey mutation_key = key.child(rng::kTagMutation);
  for (std::size_t i = 0; i < n; ++i)
    mutation_streams.emplace_back(mutation_key.child(i));
  rng::GaussianStream resample_stream(key.child(rng::kTagResample));

  const std::uint64_t steps_per_interval =
      static_cast<std::uint64_t>(level.steps()) +
      static_cast<std::uint64_t>(level.steps() / 2);

  CoupledFilterOutput out;
  for (std::size_t step = 0; step < observations.size(); ++step) {
    const double y = observations[step];

    mutate_coupled_cloud(m, level, fine, coarse, mutation_streams);
    out.cost_euler_steps += n * steps_per_interval;

    for (std::size_t i = 0; i < n; ++i) {
      if (likelihood_floor_active(m, fine[i]) ||
          likelihood_floor_active(m, coarse[i]))
        ++out.likelihood_floor_hits;
      if (phi_cap_active(m, fine[i]) || phi_cap_active(m, coarse[i]))
        ++out.phi_cap_hits;
      phi_f[i] = m.phi_fn(m, fine[i]);
      phi_c[i] = m.phi_fn(m, coarse[i]);
      log_wf_new[i] = log_wf[i] + obs_logdensity(m, y, fine[i]);
      log_wc_new[i] = log_wc[i] + obs_logdensity(m, y, coarse[i]);
    }

    std::vector<double> wf, wc;
    try {
      wf = normalize_log_weights(log_wf_new);
      wc = normalize_log_weights(log_wc_new);
    } catch (const std::runtime_error& e) {
      throw std::runtime_error("level " + std::to_string(level.l) + ", step " +
                               std::to_string(step + 1) + ": " + e.what());
    }

    // Self-normalizing ratios keep the increment exactly zero whenever
    // the two marginals agree term by term (and for constant phi).
    long double num_f = 0.0L, den_f = 0.0L, num_c = 0.0L, den_c = 0.0L;
    for (std::size_t i = 0; i < n; ++i) {
      num_f += wf[i] * phi_f[i];
      den_f += wf[i];
      num_c += wc[i] * phi_c[i];
      den_c += wc[i];
    }
    const double est_f = static_cast<double>(num_f / den_f);
    const double est_c = static_cast<double>(num_c / den_c);
    out.increments.push_back(est_f - est_c);
    out.fine_filter.push_back(est_f);
    out.coarse_filter.push_back(est_c);
    out.fine_ess.push_back(ess(wf));
    const double coarse_ess = ess(wc);
    out.coarse_ess.push_back(coarse_ess);

    const bool trigger =
        ess_fraction >= 1.0 ||
        coarse_ess < ess_fraction * static_cast<double>(particles);
    if (trigger) {
      const auto idx = coupled_resample(wf, wc, resample_stream);
      std::vector<double> fine_next(n), coarse_next(n);
      std::vector<std::uint8_t> common_next(n);
      for (std::size_t k = 0; k < n; ++k) {
        fine_next[k] = fine[idx.fine[k]];
        coarse_next[k] = coarse[idx.coarse[k]];
        common_next[k] = idx.coupled[k] && in_common[idx.fine[k]];
      }
      fine.swap(fine_next);
      coarse.swap(coarse_next);
      in_common.swap(common_next);
      std::fill(log_wf.begin(), log_wf.end(), 0.0);
      std::fill(log_wc.begin(), log_wc.end(), 0.0);
      out.resampled.push_back(1);
    } else {
      const double max_f =
          *std::max_element(log_wf_new.begin(), log_wf_new.end());
      const double max_c =
          *std::max_element(log_wc_new.begin(), log_wc_new.end());
      for (std::size_t i = 0; i < n; ++i) {
        log_wf[i] = log_wf_new[i] - max_f;
        log_wc[i] = log_wc_new[i] - max_c;
      }
      out.resampled.push_back(0);
    }

    const std::uint64_t common =
        std::accumulate(in_common.begin(), in_common.end(), std::uint64_t{0});
    out.coupled_fraction.push_back(static_cast<double>(common) /
                                   static_cast<double>(n));
  }
  return out;
}

rng::StreamKey mlpf_level_key(rng::StreamKey base, int level) {
  return base.child(rng::kTagLevel).child(static_cast<std::uint64_t>(level));
}

MLPFOutput mlpf_run(const ModelSpec& m, std::span<const double> observations,
                    const LevelAllocation& alloc, double ess_fraction,
                    rng::StreamKey key) {
  if (alloc.particles.size() != static_cast<std::size_t>(alloc.max_level) + 1)
    throw std::invalid_argument("mlpf_run: allocation size mismatch");
  MLPFOutput out;
  try {
    out.level0 = pf_run(m, observations, LevelIndex{0},
                        static_cast<int>(alloc.particles[0]), ess_fraction,
                        mlpf_level_key(key, 0));
  } catch (const std::exception& e) {
    throw std::runtime_error("mlpf level 0: " + std::string(e.what()));
  }
  out.total_cost_euler_steps = out.level0.cost_euler_steps;
  for (int l = 1; l <= alloc.max_level; ++l) {
    try {
      out.coupled_levels.push_back(
          coupled_pf_run(m, observations, LevelIndex{l},
                         static_cast<int>(alloc.particles[l]), ess_fraction,
                         mlpf_level_key(key, l)));
    } catch (const std::exception& e) {
      throw std::runtime_error("mlpf level " + std::to_string(l) + ": " +
                               std::string(e.what()));
    }
    out.total_cost_euler_steps += out.coupled_levels.back().cost_euler_steps;
  }
  // Fixed level-ascending summation for bit-reproducibility.
  out.estimates.resize(observations.size());
  for (std::size_t step = 0; step < observations.size(); ++step) {
    double acc = out.level0.filter[step];
    for (const auto& lvl : out.coupled_levels) acc += lvl.increments[step];
    out.estimates[step] = acc;
  }
  return out;
}

double increment_estimate(std::span<const double> fine_weights,
                          std::span<const double> coarse_weights,
                          std::span<const double> fine_states,
                          std::span<const double> coarse_states,
                          const ModelSpec& m) {
  const std::size_t n = fine_weights.size();
  if (coarse_weights.size() != n || fine_states.size() != n ||
      coarse_states.size() != n)
    throw std::invalid_argument("increment_estimate: length mismatch");
  long double acc = 0.0L;
  for (std::size_t i = 0; i < n; ++i)
    acc += fine_weights[i] * m.phi_fn(m, fine_states[i]) -
           coarse_weights[i] * m.phi_fn(m, coarse_states[i]);
  return static_cast<double>(acc);
}

}  // namespace mlpf
