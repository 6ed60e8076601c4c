#include "mlpf/model.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>
#include <stdexcept>

namespace mlpf {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;  // ln(2*pi)

double gaussian_logpdf(double y, double mean, double variance) {
  const double d = y - mean;
  return -0.5 * (kLog2Pi + std::log(variance)) - d * d / (2.0 * variance);
}

// --- OU: dX = theta(mu - X)dt + sigma dW, Y ~ N(x, tau2), phi(x) = x ---

double ou_drift(const ModelSpec& m, double x) { return m.c.theta * (m.c.mu - x); }
double ou_diff(const ModelSpec& m, double) { return m.c.sigma; }
double ou_logg(const ModelSpec& m, double y, double x) {
  return gaussian_logpdf(y, x, m.c.tau2);
}
double ou_sample(const ModelSpec& m, double x, rng::GaussianStream& g) {
  return x + std::sqrt(m.c.tau2) * g.normal();
}
double identity_phi(const ModelSpec&, double x) { return x; }

// --- GBM: dX = mu X dt + sigma X dW, Y ~ N(log x, tau2), phi(x) = x ---

double gbm_drift(const ModelSpec& m, double x) { return m.c.mu * x; }
double gbm_diff(const ModelSpec& m, double x) { return m.c.sigma * x; }
double gbm_logg(const ModelSpec& m, double y, double x) {
  const double xf = std::max(x, m.likelihood_state_floor);
  return gaussian_logpdf(y, std::log(xf), m.c.tau2);
}
double gbm_sample(const ModelSpec& m, double x, rng::GaussianStream& g) {
  const double xf = std::max(x, m.likelihood_state_floor);
  return std::log(xf) + std::sqrt(m.c.tau2) * g.normal();
}

// --- Langevin: dX = (1/2) d/dx log pi(X) dt + sigma dW with pi the
// standardized Student-t(nu); Y ~ N(0, tau2 e^x), phi(x) = tau2 e^x ---

double langevin_drift(const ModelSpec& m, double x) {
  return -0.5 * (m.c.nu + 1.0) * x / (m.c.nu + x * x);
}
double langevin_logg(const ModelSpec& m, double y, double x) {
  const double xc = std::clamp(x, -m.phi_exponent_cap, m.phi_exponent_cap);
  const double v = m.c.tau2 * std::exp(xc);
  return -0.5 * (kLog2Pi + std::log(v)) - y * y / (2.0 * v);
}
double langevin_sample(const ModelSpec& m, double x, rng::GaussianStream& g) {
  const double xc = std::clamp(x, -m.phi_exponent_cap, m.phi_exponent_cap);
  return std::sqrt(m.c.tau2) * std::exp(0.5 * xc) * g.normal();
}
double langevin_phi(const ModelSpec& m, double x) {
  return m.c.tau2 * std::exp(std::min(x, m.phi_exponent_cap));
}

// --- NLM: dX = theta(mu - X)dt + sigma/sqrt(1+X^2) dW, Y ~ Laplace(x, s),
// phi(x) = x ---

double nlm_diff(const ModelSpec& m, double x) {
  return m.c.sigma / std::sqrt(1.0 + x * x);
}
double nlm_logg(const ModelSpec& m, double y, double x) {
  return -std::log(2.0 * m.c.s) - std::abs(y - x) / m.c.s;
}
double nlm_sample(const ModelSpec& m, double x, rng::GaussianStream& g) {
  const double p = g.uniform() - 0.5;  // inverse-CDF draw
  const double sign = p < 0.0 ? -1.0 : 1.0;
  return x - m.c.s * sign * std::log(1.0 - 2.0 * std::abs(p));
}

const std::set<std::string>& allowed_keys(ModelKind kind) {
  static const std::set<std::string> ou{"theta", "mu", "sigma", "tau2", "x0", "delta"};
  static const std::set<std::string> gbm{"mu", "sigma", "tau2", "x0", "delta"};
  static const std::set<std::string> lang{"sigma", "tau2", "nu", "x0", "delta"};
  static const std::set<std::string> nlm{"theta", "mu", "sigma", "s", "x0", "delta"};
  switch (kind) {
    case ModelKind::OU: return ou;
    case ModelKind::GBM: return gbm;
    case ModelKind::Langevin: return lang;
    case ModelKind::NLM: return nlm;
  }
  throw std::logic_error("unreachable model kind");
}

void apply_override(ModelConstants& c, const std::string& key, double value) {
  if (!std::isfinite(value))
    throw std::invalid_argument("model constant '" + key + "' must be finite");
  if (key == "theta") c.theta = value;
  else if (key == "mu") c.mu = value;
  else if (key == "sigma") c.sigma = value;
  else if (key == "tau2") c.tau2 = value;
  else if (key == "s") c.s = value;
  else if (key == "nu") c.nu = value;
  else if (key == "x0") c.x0 = value;
  else if (key == "delta") c.delta = value;
  else throw std::invalid_argument("unknown model constant '" + key + "'");
}

}  // namespace

double drift(const ModelSpec& m, double x) {
  if (!std::isfinite(x)) throw std::domain_error("drift: non-finite state");
  return m.drift_fn(m, x);
}

double diffusion(const ModelSpec& m, double x) {
  if (!std::isfinite(x)) throw std::domain_error("diffusion: non-finite state");
  return m.diffusion_fn(m, x);
}

double obs_logdensity(const ModelSpec& m, double y, double x) {
  return m.obs_logdensity_fn(m, y, x);
}

double obs_sample(const ModelSpec& m, double x, rng::GaussianStream& stream) {
  return m.obs_sample_fn(m, x, stream);
}

double test_function(const ModelSpec& m, double x) { return m.phi_fn(m, x); }

bool likelihood_floor_active(const ModelSpec& m, double x) {
  return m.kind == ModelKind::GBM && x <= m.likelihood_state_floor;
}

bool phi_cap_active(const ModelSpec& m, double x) {
  return x > m.phi_exponent_cap;
}

ModelSpec builtin_model(ModelKind kind,
                        const std::map<std::string, double>& overrides) {
  ModelSpec m;
  m.kind = kind;
  m.name = model_name(kind);
  switch (kind) {
    case ModelKind::OU:
      m.c = {.theta = 1.0, .mu = 0.0, .sigma = 0.5, .tau2 = 0.2,
             .s = 0.0, .nu = 0.0, .x0 = 0.0, .delta = 0.5};
      m.constant_diffusion = true;
      m.drift_fn = ou_drift;
      m.diffusion_fn = ou_diff;
      m.obs_logdensity_fn = ou_logg;
      m.obs_sample_fn = ou_sample;
      m.phi_fn = identity_phi;
      break;
    case ModelKind::GBM:
      m.c = {.theta = 0.0, .mu = 0.02, .sigma = 0.2, .tau2 = 0.01,
             .s = 0.0, .nu = 0.0, .x0 = 1.0, .delta = 0.001};
      m.constant_diffusion = false;
      m.drift_fn = gbm_drift;
      m.diffusion_fn = gbm_diff;
      m.obs_logdensity_fn = gbm_logg;
      m.obs_sample_fn = gbm_sample;
      m.phi_fn = identity_phi;
      break;
    case ModelKind::Langevin:
      m.c = {.theta = 0.0, .mu = 0.0, .sigma = 1.0, .tau2 = 1.0,
             .s = 0.0, .nu = 10.0, .x0 = 0.0, .delta = 1.0};
      m.constant_diffusion = true;
      m.drift_fn = langevin_drift;
      m.diffusion_fn = ou_diff;  // constant sigma
      m.obs_logdensity_fn = langevin_logg;
      m.obs_sample_fn = langevin_sample;
      m.phi_fn = langevin_phi;
      break;
    case ModelKind::NLM:
      m.c = {.theta = 1.0, .mu = 0.0, .sigma = 1.0, .tau2 = 0.0,
             .s = std::sqrt(0.1), .nu = 0.0, .x0 = 0.0, .delta = 0.5};
      m.constant_diffusion = false;
      m.drift_fn = ou_drift;  // same mean-reverting drift as OU
      m.diffusion_fn = nlm_diff;
      m.obs_logdensity_fn = nlm_logg;
      m.obs_sample_fn = nlm_sample;
      m.phi_fn = identity_phi;
      break;
  }
  const auto& allowed = allowed_keys(kind);
  for (const auto& [key, value] : overrides) {
    if (!allowed.count(key))
      throw std::invalid_argument("constant '" + key + "' is not used by model " + m.name);
    apply_override(m.c, key, value);
  }
  if (!(m.c.delta > 0.0))
    throw std::invalid_argument("observation interval delta must be positive");
  return m;
}

ModelSpec builtin_model(std::string_view name,
                        const std::map<std::string, double>& overrides) {
  return builtin_model(model_kind_from_name(name), overrides);
}

ModelKind model_kind_from_name(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char ch) { return std::tolower(ch); });
  if (lower == "ou") return ModelKind::OU;
  if (lower == "gbm") return ModelKind::GBM;
  if (lower == "langevin") return ModelKind::Langevin;
  if (lower == "nlm") return ModelKind::NLM;
  throw std::invalid_argument("unknown model '" + std::string(name) + "'");
}

std::string model_name(ModelKind kind) {
  switch (kind) {
    case ModelKind::OU: return "ou";
    case ModelKind::GBM: return "gbm";
    case ModelKind::Langevin: return "langevin";
    case ModelKind::NLM: return "nlm";
  }
  return "?";
}

}  // namespace mlpf
