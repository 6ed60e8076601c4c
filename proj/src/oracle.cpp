#include "mlpf/oracle.hpp"

#include <cmath>
#include <exception>
#include <stdexcept>

#include "mlpf/csv.hpp"
#include "mlpf/particle_filter.hpp"

namespace mlpf {

namespace {

KalmanOutput kalman_scalar(std::span<const double> observations,
                           double prior_mean, double transition_coeff,
                           double transition_drift, double transition_var,
                           double obs_var) {
  KalmanOutput out;
  double mean = prior_mean;
  double var = 0.0;  // point-mass prior
  for (double y : observations) {
    const double pred_mean = transition_drift + transition_coeff * mean;
    const double pred_var =
        transition_coeff * transition_coeff * var + transition_var;
    const double gain = pred_var / (pred_var + obs_var);
    mean = pred_mean + gain * (y - pred_mean);
    var = (1.0 - gain) * pred_var;
    out.predictor_mean.push_back(pred_mean);
    out.predictor_variance.push_back(pred_var);
    out.mean.push_back(mean);
    out.variance.push_back(var);
  }
  return out;
}

}  // namespace

KalmanOutput kalman_ou(const ModelSpec& m, std::span<const double> observations) {
  if (m.kind != ModelKind::OU)
    throw std::invalid_argument("kalman_ou: model is not OU");
  const double coeff = std::exp(-m.c.theta * m.c.delta);
  const double var =
      m.c.sigma * m.c.sigma * (1.0 - coeff * coeff) / (2.0 * m.c.theta);
  auto out = kalman_scalar(observations, m.c.x0, coeff,
                           m.c.mu * (1.0 - coeff), var, m.c.tau2);
  out.phi_estimate = out.mean;  // phi(x) = x
  return out;
}

KalmanOutput kalman_gbm(const ModelSpec& m, std::span<const double> observations) {
  if (m.kind != ModelKind::GBM)
    throw std::invalid_argument("kalman_gbm: model is not GBM");
  const double drift = (m.c.mu - 0.5 * m.c.sigma * m.c.sigma) * m.c.delta;
  const double var = m.c.sigma * m.c.sigma * m.c.delta;
  auto out =
      kalman_scalar(observations, std::log(m.c.x0), 1.0, drift, var, m.c.tau2);
  out.phi_estimate.resize(out.mean.size());
  for (std::size_t k = 0; k < out.mean.size(); ++k)
    out.phi_estimate[k] = std::exp(out.mean[k] + 0.5 * out.variance[k]);
  return out;
}

ReferenceOutput reference_pf(const ModelSpec& m,
                             std::span<const double> observations,
                             rng::StreamKey key, int level, int particles,
                             int seeds) {
  if (seeds < 1) throw std::invalid_argument("reference_pf: need seeds >= 1");
  const std::size_t n = observations.size();
  std::vector<std::vector<double>> estimates(static_cast<std::size_t>(seeds));
  const rng::StreamKey base = key.child(rng::kTagReference);
  std::exception_ptr error;
#pragma omp parallel for schedule(dynamic)
  for (int s = 0; s < seeds; ++s) {
    try {
      const auto out = pf_run(m, observations, LevelIndex{level}, particles,
                              0.25, base.child(static_cast<std::uint64_t>(s)));
      estimates[static_cast<std::size_t>(s)] = out.filter;
    } catch (...) {
#pragma omp critical
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
  ReferenceOutput ref;
  ref.level = level;
  ref.particles = static_cast<std::uint64_t>(particles);
  ref.seeds = seeds;
  ref.value.resize(n);
  ref.standard_error.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    double mean = 0.0;
    for (const auto& e : estimates) mean += e[k];
    mean /= seeds;
    double ss = 0.0;
    for (const auto& e : estimates) ss += (e[k] - mean) * (e[k] - mean);
    ref.value[k] = mean;
    ref.standard_error[k] =
        seeds > 1 ? std::sqrt(ss / (seeds - 1) / seeds) : 0.0;
  }
  return ref;
}

void write_reference_csv(const std::string& path, const ReferenceOutput& ref,
                         const std::string& preamble) {
  csv::Writer w(path, preamble);
  w.header({"step", "value", "stderr"});
  for (std::size_t k = 0; k < ref.value.size(); ++k)
    w.row({csv::fmt(k + 1), csv::fmt(ref.value[k]),
           csv::fmt(ref.standard_error[k])});
}

ReferenceOutput read_reference_csv(const std::string& path) {
  const auto table = csv::read(path, {"step", "value", "stderr"});
  ReferenceOutput ref;
  for (const auto& row : table) {
    ref.value.push_back(csv::to_double(row[1], path));
    ref.standard_error.push_back(csv::to_double(row[2], path));
  }
  return ref;
}

}  // namespace mlpf
