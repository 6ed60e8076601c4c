#include "mlpf/kernel.hpp"

#include <cmath>
#include <exception>
#include <stdexcept>
#include <string>

namespace mlpf {

namespace {

[[noreturn]] void propagation_error(const char* what, int level,
                                    std::int64_t substep) {
  throw std::runtime_error(std::string(what) + " at level " +
                           std::to_string(level) + ", substep " +
                           std::to_string(substep));
}

}  // namespace

double euler_step(const ModelSpec& m, double x, double h, double xi) {
  if (!(h > 0.0)) throw std::invalid_argument("euler_step: h must be positive");
  return x + h * m.drift_fn(m, x) + std::sqrt(h) * m.diffusion_fn(m, x) * xi;
}

double simulate_transition(const ModelSpec& m, double x, LevelIndex level,
                           rng::GaussianStream& stream) {
  const double h = level.step_size(m.c.delta);
  const double sqrt_h = std::sqrt(h);
  const std::int64_t steps = level.steps();
  for (std::int64_t k = 0; k < steps; ++k) {
    x = x + h * m.drift_fn(m, x) + sqrt_h * m.diffusion_fn(m, x) * stream.normal();
    if (!std::isfinite(x)) propagation_error("non-finite state", level.l, k);
  }
  return x;
}

std::pair<double, double> simulate_coupled_transition(
    const ModelSpec& m, double x_fine, double x_coarse, LevelIndex level,
    rng::GaussianStream& stream) {
  if (level.l < 1)
    throw std::invalid_argument(
        "simulate_coupled_transition: level 0 has no coarse partner");
  const double h = level.step_size(m.c.delta);
  const double h_coarse = 2.0 * h;
  const double sqrt_h = std::sqrt(h);
  const std::int64_t pairs = level.steps() / 2;
  for (std::int64_t k = 0; k < pairs; ++k) {
    const double xi_a = stream.normal();
    x_fine = x_fine + h * m.drift_fn(m, x_fine) +
             sqrt_h * m.diffusion_fn(m, x_fine) * xi_a;
    const double xi_b = stream.normal();
    x_fine = x_fine + h * m.drift_fn(m, x_fine) +
             sqrt_h * m.diffusion_fn(m, x_fine) * xi_b;
    // Coarse Brownian increment over h_{l-1}: sqrt(h_l)(xi_a + xi_b),
    // variance 2 h_l = h_{l-1}. The two contributions are added separately
    // so a zero-drift constant-diffusion pair stays bit-identical to the
    // fine chain.
    const double scale = sqrt_h * m.diffusion_fn(m, x_coarse);
    x_coarse = x_coarse + h_coarse * m.drift_fn(m, x_coarse) + scale * xi_a +
               scale * xi_b;
    if (!std::isfinite(x_fine))
      propagation_error("non-finite fine state", level.l, 2 * k + 1);
    if (!std::isfinite(x_coarse))
      propagation_error("non-finite coarse state", level.l - 1, k);
  }
  return {x_fine, x_coarse};
}

void mutate_cloud_serial(const ModelSpec& m, LevelIndex level,
                         std::span<double> states,
                         std::span<rng::GaussianStream> streams) {
  for (std::size_t i = 0; i < states.size(); ++i)
    states[i] = simulate_transition(m, states[i], level, streams[i]);
}

void mutate_cloud(const ModelSpec& m, LevelIndex level,
                  std::span<double> states,
                  std::span<rng::GaussianStream> streams) {
  const std::int64_t n = static_cast<std::int64_t>(states.size());
  std::exception_ptr error;
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) {
    try {
      states[i] = simulate_transition(m, states[i], level, streams[i]);
    } catch (...) {
#pragma omp critical
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
}

void mutate_coupled_cloud_serial(const ModelSpec& m, LevelIndex level,
                                 std::span<double> fine,
                                 std::span<double> coarse,
                                 std::span<rng::GaussianStream> streams) {
  for (std::size_t i = 0; i < fine.size(); ++i) {
    auto [xf, xc] =
        simulate_coupled_transition(m, fine[i], coarse[i], level, streams[i]);
    fine[i] = xf;
    coarse[i] = xc;
  }
}

void mutate_coupled_cloud(const ModelSpec& m, LevelIndex level,
                          std::span<double> fine, std::span<double> coarse,
                          std::span<rng::GaussianStream> streams) {
  const std::int64_t n = static_cast<std::int64_t>(fine.size());
  std::exception_ptr error;
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) {
    try {
      auto [xf, xc] =
          simulate_coupled_transition(m, fine[i], coarse[i], level, streams[i]);
      fine[i] = xf;
      coarse[i] = xc;
    } catch (...) {
#pragma omp critical
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace mlpf
