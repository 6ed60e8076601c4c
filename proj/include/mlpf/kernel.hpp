#pragma once

#include <cstdint>
#include <span>
#include <utility>

#include "mlpf/model.hpp"
#include "mlpf/rng.hpp"

namespace mlpf {

/// Discretization level: step size delta * 2^-l, 2^l steps per
/// observation interval.
struct LevelIndex {
  int l = 0;

  std::int64_t steps() const { return std::int64_t{1} << l; }
  double step_size(double delta) const { return std::ldexp(delta, -l); }
};

/// One explicit Euler step: x + h a(x) + sqrt(h) b(x) xi.
double euler_step(const ModelSpec& m, double x, double h, double xi);

/// Advance one observation interval at the given level, consuming exactly
/// 2^l Gaussian draws. A non-finite intermediate state raises a
/// propagation error naming the failing substep.
double simulate_transition(const ModelSpec& m, double x, LevelIndex level,
                           rng::GaussianStream& stream);

/// Advance a fine/coarse pair over one observation interval with shared
/// Gaussian increments: the fine chain takes 2^l steps of size h_l, and
/// the m-th coarse step of size h_{l-1} uses sqrt(h_l) (xi_{2m} + xi_{2m+1})
/// built from the fine draws, so the coarse marginal is the level l-1
/// transition. Requires l >= 1. Consumes exactly 2^l Gaussian draws.
std::pair<double, double> simulate_coupled_transition(const ModelSpec& m,
                                                      double x_fine,
                                                      double x_coarse,
                                                      LevelIndex level,
                                                      rng::GaussianStream& stream);

// Cloud mutation kernels. Each particle slot owns its stream, so the
// parallel versions are bit-identical to the serial references for any
// thread count. The serial versions are kept as the reference
// implementation for tests and benchmarks.
void mutate_cloud(const ModelSpec& m, LevelIndex level,
                  std::span<double> states,
                  std::span<rng::GaussianStream> streams);
void mutate_cloud_serial(const ModelSpec& m, LevelIndex level,
                         std::span<double> states,
                         std::span<rng::GaussianStream> streams);
void mutate_coupled_cloud(const ModelSpec& m, LevelIndex level,
                          std::span<double> fine, std::span<double> coarse,
                          std::span<rng::GaussianStream> streams);
void mutate_coupled_cloud_serial(const ModelSpec& m, LevelIndex level,
                                 std::span<double> fine,
                                 std::span<double> coarse,
                                 std::span<rng::GaussianStream> streams);

}  // namespace mlpf
