#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mlpf/rng.hpp"

namespace mlpf {

/// Normalize log-scale unnormalized weights: subtract the maximum,
/// exponentiate, divide by the sum. Throws if every entry is -inf.
std::vector<double> normalize_log_weights(std::span<const double> log_weights);

/// Effective sample size 1 / sum(w_i^2) of a normalized weight vector.
double ess(std::span<const double> weights);

/// N i.i.d. categorical draws with P(i) = w_i.
std::vector<std::uint32_t> multinomial_resample(std::span<const double> weights,
                                                rng::GaussianStream& stream);

/// sum_i min(w1_i, w2_i), the total mass of the overlap measure.
double coupling_probability(std::span<const double> w1,
                            std::span<const double> w2);

/// Index pairs produced by the coupled resampler; coupled[k] != 0 marks
/// pairs drawn from the overlap branch (fine[k] == coarse[k] there).
struct CoupledIndices {
  std::vector<std::uint32_t> fine;
  std::vector<std::uint32_t> coarse;
  std::vector<std::uint8_t> coupled;
};

/// Maximal-coupling resampling of two normalized weight vectors. For each
/// slot independently: with probability alpha = sum min(w1, w2) a common
/// index is drawn from the overlap measure (w1 ^ w2)/alpha; otherwise the
/// fine and coarse indices are drawn independently from the residual
/// measures Z_j = (w_j - w1 ^ w2), each renormalized by its own computed
/// sum. The marginal law of the fine index is exactly w1, and of the
/// coarse index exactly w2. Alpha within 1e-12 of 0 or 1 short-circuits
/// to a single branch, since the residuals degenerate there.
CoupledIndices coupled_resample(std::span<const double> w1,
                                std::span<const double> w2,
                                rng::GaussianStream& stream);

}  // namespace mlpf
