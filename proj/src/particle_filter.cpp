#include "mlpf/particle_filter.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "mlpf/resampling.hpp"

namespace mlpf {

namespace {

double log_sum_exp(std::span<const double> v) {
  double max_v = -std::numeric_limits<double>::infinity();
  for (double x : v) max_v = std::max(max_v, x);
  if (!std::isfinite(max_v)) return max_v;
  long double sum = 0.0L;
  for (double x : v) sum += std::exp(x - max_v);
  return max_v + static_cast<double>(std::log(sum));
}

}  // namespace

FilterOutput pf_run(const ModelSpec& m, std::span<const double> observations,
                    LevelIndex level, int particles, double ess_fraction,
                    rng::StreamKey key) {
  if (particles < 2) throw std::invalid_argument("pf_run: need at least 2 particles");
  if (!(ess_fraction > 0.0 && ess_fraction <= 1.0))
    throw std::invalid_argument("pf_run: ess_fraction must be in (0, 1]");

  const std::size_t n = static_cast<std::size_t>(particles);
  std::vector<double> states(n, m.c.x0);
  std::vector<double> log_w(n, 0.0);
  std::vector<double> log_w_updated(n), phi_values(n);

  std::vector<rng::GaussianStream> mutation_streams;
  mutation_streams.reserve(n);
  const rng::StreamKey mutation_key = key.child(rng::kTagMutation);
  for (std::size_t i = 0; i < n; ++i)
    mutation_streams.emplace_back(mutation_key.child(i));
  rng::GaussianStream resample_stream(key.child(rng::kTagResample));

  FilterOutput out;
  out.predictor.reserve(observations.size());
  out.filter.reserve(observations.size());

  for (std::size_t step = 0; step < observations.size(); ++step) {
    const double y = observations[step];

    mutate_cloud(m, level, states, mutation_streams);
    out.cost_euler_steps += n * static_cast<std::uint64_t>(level.steps());

    for (std::size_t i = 0; i < n; ++i) {
      if (likelihood_floor_active(m, states[i])) ++out.likelihood_floor_hits;
      if (phi_cap_active(m, states[i])) ++out.phi_cap_hits;
      phi_values[i] = m.phi_fn(m, states[i]);
      log_w_updated[i] = log_w[i] + obs_logdensity(m, y, states[i]);
    }

    // Predictor estimate from the pre-update weights, filter estimate
    // from the post-update weights; the difference of the two log-scale
    // totals is the step's normalizing-constant factor.
    const double log_total_before = log_sum_exp(log_w);
    const double log_total_after = log_sum_exp(log_w_updated);
    if (!std::isfinite(log_total_after))
      throw std::runtime_error("degenerate weights at step " +
                               std::to_string(step + 1));
    out.log_normalizing_constant += log_total_after - log_total_before;

    const auto w_before = normalize_log_weights(log_w);
    const auto w_after = normalize_log_weights(log_w_updated);
    // Self-normalizing ratios: with phi constant the numerator equals the
    // denominator term by term, so the estimate is exact.
    long double pred_num = 0.0L, pred_den = 0.0L, filt_num = 0.0L,
                filt_den = 0.0L;
    for (std::size_t i = 0; i < n; ++i) {
      pred_num += w_before[i] * phi_values[i];
      pred_den += w_before[i];
      filt_num += w_after[i] * phi_values[i];
      filt_den += w_after[i];
    }
    out.predictor.push_back(static_cast<double>(pred_num / pred_den));
    out.filter.push_back(static_cast<double>(filt_num / filt_den));

    const double step_ess = ess(w_after);
    out.ess_trace.push_back(step_ess);

    // ess_fraction = 1 means the always-resample configuration; the
    // strict comparison alone would miss it when weights are uniform.
    const bool trigger = ess_fraction >= 1.0 ||
                         step_ess < ess_fraction * static_cast<double>(particles);
    if (trigger) {
      const auto indices = multinomial_resample(w_after, resample_stream);
      std::vector<double> selected(n);
      for (std::size_t k = 0; k < n; ++k) selected[k] = states[indices[k]];
      states.swap(selected);
      std::fill(log_w.begin(), log_w.end(), 0.0);
      out.resampled.push_back(1);
    } else {
      const double max_lw =
          *std::max_element(log_w_updated.begin(), log_w_updated.end());
      for (std::size_t i = 0; i < n; ++i) log_w[i] = log_w_updated[i] - max_lw;
      out.resampled.push_back(0);
    }
  }
  return out;
}

double filter_estimate(const ParticleCloud& cloud, const ModelSpec& m,
                       double y) {
  const std::size_t n = cloud.states.size();
  if (n == 0 || cloud.log_weights.size() != n)
    throw std::invalid_argument("filter_estimate: malformed cloud");
  std::vector<double> log_w(n);
  for (std::size_t i = 0; i < n; ++i)
    log_w[i] = cloud.log_weights[i] + obs_logdensity(m, y, cloud.states[i]);
  const auto w = normalize_log_weights(log_w);
  long double num = 0.0L, den = 0.0L;
  for (std::size_t i = 0; i < n; ++i) {
    num += w[i] * m.phi_fn(m, cloud.states[i]);
    den += w[i];
  }
  return static_cast<double>(num / den);
}

double normalizing_constant(const FilterOutput& output) {
  return std::exp(output.log_normalizing_constant);
}

}  // namespace mlpf
