#include "mlpf/resampling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace mlpf {

namespace {

constexpr double kDegenerateAlpha = 1e-12;

// Inclusive prefix sums accumulated in extended precision so that the
// normalization invariants hold at the 1e-12 scale for large N.
std::vector<double> cumulative(std::span<const double> w) {
  std::vector<double> cum(w.size());
  long double acc = 0.0L;
  for (std::size_t i = 0; i < w.size(); ++i) {
    acc += w[i];
    cum[i] = static_cast<double>(acc);
  }
  return cum;
}

std::uint32_t draw_index(const std::vector<double>& cum,
                         rng::GaussianStream& stream) {
  const double total = cum.back();
  const double u = stream.uniform() * total;
  const auto it = std::upper_bound(cum.begin(), cum.end(), u);
  const std::size_t i = static_cast<std::size_t>(it - cum.begin());
  return static_cast<std::uint32_t>(std::min(i, cum.size() - 1));
}

}  // namespace

std::vector<double> normalize_log_weights(std::span<const double> log_weights) {
  if (log_weights.empty())
    throw std::invalid_argument("normalize_log_weights: empty input");
  double max_log = -std::numeric_limits<double>::infinity();
  for (double lw : log_weights) max_log = std::max(max_log, lw);
  if (!std::isfinite(max_log))
    throw std::runtime_error("degenerate weights: no finite log-weight");
  std::vector<double> w(log_weights.size());
  long double sum = 0.0L;
  for (std::size_t i = 0; i < w.size(); ++i) {
    w[i] = std::exp(log_weights[i] - max_log);
    sum += w[i];
  }
  const double inv = static_cast<double>(1.0L / sum);
  for (double& x : w) x *= inv;
  return w;
}

double ess(std::span<const double> weights) {
  long double sum_sq = 0.0L;
  for (double w : weights) sum_sq += static_cast<long double>(w) * w;
  return static_cast<double>(1.0L / sum_sq);
}

std::vector<std::uint32_t> multinomial_resample(std::span<const double> weights,
                                                rng::GaussianStream& stream) {
  const auto cum = cumulative(weights);
  std::vector<std::uint32_t> indices(weights.size());
  for (auto& idx : indices) idx = draw_index(cum, stream);
  return indices;
}

double coupling_probability(std::span<const double> w1,
                            std::span<const double> w2) {
  if (w1.size() != w2.size())
    throw std::invalid_argument("coupling_probability: length mismatch");
  long double sum = 0.0L;
  for (std::size_t i = 0; i < w1.size(); ++i) sum += std::min(w1[i], w2[i]);
  return static_cast<double>(sum);
}

CoupledIndices coupled_resample(std::span<const double> w1,
                                std::span<const double> w2,
                                rng::GaussianStream& stream) {
  if (w1.size() != w2.size())
    throw std::invalid_argument("coupled_resample: length mismatch");
  const std::size_t n = w1.size();
  const double alpha = coupling_probability(w1, w2);

  std::vector<double> overlap(n), residual1(n), residual2(n);
  for (std::size_t i = 0; i < n; ++i) {
    overlap[i] = std::min(w1[i], w2[i]);
    residual1[i] = std::max(w1[i] - overlap[i], 0.0);
    residual2[i] = std::max(w2[i] - overlap[i], 0.0);
  }

  const bool always_common = alpha >= 1.0 - kDegenerateAlpha;
  const bool never_common = alpha <= kDegenerateAlpha;

  const auto cum_overlap = cumulative(overlap);
  const auto cum_res1 = cumulative(residual1);
  const auto cum_res2 = cumulative(residual2);

  CoupledIndices out;
  out.fine.resize(n);
  out.coarse.resize(n);
  out.coupled.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    bool common;
    if (always_common) common = true;
    else if (never_common) common = false;
    else common = stream.uniform() < alpha;
    if (common) {
      const std::uint32_t idx = draw_index(cum_overlap, stream);
      out.fine[k] = idx;
      out.coarse[k] = idx;
      out.coupled[k] = 1;
    } else {
      out.fine[k] = draw_index(cum_res1, stream);
      out.coarse[k] = draw_index(cum_res2, stream);
      out.coupled[k] = 0;
    }
  }
  return out;
}

}  // namespace mlpf
