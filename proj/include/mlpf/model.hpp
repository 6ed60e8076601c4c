#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "mlpf/rng.hpp"

namespace mlpf {

enum class ModelKind { OU, GBM, Langevin, NLM };

/// Named scalar parameters of the built-in diffusion models. Every model
/// uses a subset; unused fields stay at their defaults.
struct ModelConstants {
  double theta = 0.0;  // mean-reversion rate (OU, NLM)
  double mu = 0.0;     // long-run mean (OU, NLM) or growth rate (GBM)
  double sigma = 0.0;  // diffusion scale
  double tau2 = 0.0;   // observation noise variance (OU, GBM, Langevin)
  double s = 0.0;      // Laplace observation scale (NLM)
  double nu = 0.0;     // Student-t degrees of freedom (Langevin)
  double x0 = 0.0;     // initial state
  double delta = 0.0;  // observation interval
};

/// A scalar diffusion dX = a(X)dt + b(X)dW observed at interval delta
/// through a log-density G(y, x), together with the quantity of interest
/// phi. Immutable after construction; safe to share across workers.
struct ModelSpec {
  ModelKind kind = ModelKind::OU;
  std::string name;
  int dimension = 1;
  ModelConstants c;
  bool constant_diffusion = false;

  // State floor applied when the GBM likelihood takes log(x); hits are
  // counted by the filters.
  double likelihood_state_floor = 1e-10;
  // States above this make phi overflow (Langevin phi = tau2 * e^x); the
  // exponent is capped there and the event is flagged in filter output.
  double phi_exponent_cap = 700.0;

  double (*drift_fn)(const ModelSpec&, double) = nullptr;
  double (*diffusion_fn)(const ModelSpec&, double) = nullptr;
  double (*obs_logdensity_fn)(const ModelSpec&, double, double) = nullptr;
  double (*obs_sample_fn)(const ModelSpec&, double, rng::GaussianStream&) = nullptr;
  double (*phi_fn)(const ModelSpec&, double) = nullptr;
};

// Checked evaluation of the model functions. Non-finite state input is a
// domain error.
double drift(const ModelSpec& m, double x);
double diffusion(const ModelSpec& m, double x);
double obs_logdensity(const ModelSpec& m, double y, double x);
double obs_sample(const ModelSpec& m, double x, rng::GaussianStream& stream);
double test_function(const ModelSpec& m, double x);

/// True when evaluating G at this state engages the GBM state floor.
bool likelihood_floor_active(const ModelSpec& m, double x);
/// True when evaluating phi at this state engages the exponent cap.
bool phi_cap_active(const ModelSpec& m, double x);

/// Build one of the four built-in models with its published constants,
/// then apply overrides keyed by symbol name (theta, mu, sigma, tau2, s,
/// nu, x0, delta). Unknown model names or constants not used by the model
/// are configuration errors.
ModelSpec builtin_model(ModelKind kind,
                        const std::map<std::string, double>& overrides = {});
ModelSpec builtin_model(std::string_view name,
                        const std::map<std::string, double>& overrides = {});

ModelKind model_kind_from_name(std::string_view name);
std::string model_name(ModelKind kind);

}  // namespace mlpf
