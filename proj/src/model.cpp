#include "plantmf/model.hpp"

#include <sstream>

#include "plantmf/error.hpp"

namespace plantmf {

void ModelParams::validate() const {
  auto check = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw ConfigError(std::string("model parameter ") + name + " must be positive and finite");
    }
  };
  check(s_m, "s_m");
  check(R_M, "R_M");
  check(sigma_x, "sigma_x");
  check(sigma_r, "sigma_r");
}

double competition_potential(const ModelParams& p, double s, double s_prime, double dist) {
  if (!(s > 0.0) || !(s_prime > 0.0)) {
    throw DomainError("competition_potential: sizes must be positive");
  }
  if (!(dist >= 0.0)) {
    throw DomainError("competition_potential: distance must be non-negative");
  }
  const double spatial = 1.0 + dist * dist / (p.sigma_x * p.sigma_x);
  return std::log(s_prime / p.s_m) / (2.0 * p.R_M * spatial) *
         (1.0 + std::tanh(std::log(s_prime / s) / p.sigma_r));
}

double log_potential(const ModelParams& p, double r, double r_prime, double dist) {
  if (!(dist >= 0.0)) {
    throw DomainError("log_potential: distance must be non-negative");
  }
  return log_potential_weighted(p, r, r_prime, spatial_factor(p, dist * dist));
}

double gompertz_closed_form(const PlantTraits& traits, const ModelParams& p, double s0,
                            double t) {
  (void)p;
  if (!(s0 > 0.0)) throw DomainError("gompertz_closed_form: s0 must be positive");
  if (!(t >= 0.0)) throw DomainError("gompertz_closed_form: t must be non-negative");
  return traits.S * std::pow(s0 / traits.S, std::exp(-traits.gamma * t));
}

double gronwall_bound(const GronwallEnvelope& env, double t, BoundSide side) {
  (void)side;
  if (env.b == 0.0) throw DomainError("gronwall_bound: b must be nonzero");
  if (!(t >= 0.0)) throw DomainError("gronwall_bound: t must be non-negative");
  const double limit = env.a / env.b;
  return limit + (env.y0 - limit) * std::exp(-env.b * t);
}

double size_lower_envelope(const ModelParams& p, const PlantTraits& traits, double s0, double t) {
  return p.s_m * std::pow(s0 / p.s_m, std::exp(-traits.gamma * t));
}

double size_upper_envelope(const ModelParams& p, const PlantTraits& traits, double s0, double t) {
  return traits.S * std::pow(s0 / p.s_m, std::exp(-traits.gamma * t));
}

AdmissibilityVerdict validate_initial_config(const ModelParams& p,
                                             std::span<const PlantTraits> traits,
                                             std::span<const double> sizes0) {
  if (traits.size() != sizes0.size()) {
    throw ConfigError("validate_initial_config: traits and sizes differ in length");
  }
  if (traits.size() < 2) {
    throw ConfigError("validate_initial_config: at least two individuals are required");
  }
  const double upper = p.max_size();
  for (std::size_t i = 0; i < traits.size(); ++i) {
    const auto& th = traits[i];
    const double s0 = sizes0[i];
    std::string why;
    if (!(p.s_m < s0 && s0 < th.S)) {
      why = "initial size outside (s_m, S)";
    } else if (!(p.s_m < th.S && th.S < upper)) {
      why = "asymptotic size outside (s_m, s_m e^R_M)";
    } else if (!(th.gamma > 0.0)) {
      why = "growth rate not positive";
    }
    if (!why.empty()) {
      std::ostringstream os;
      os << "individual " << i << ": " << why;
      return {false, i, os.str()};
    }
  }
  return {};
}

}  // namespace plantmf
