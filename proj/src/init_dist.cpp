#include "plantmf/init_dist.hpp"

#include <algorithm>
#include <boost/math/special_functions/erf.hpp>
#include <cmath>
#include <limits>
#include <numbers>

#include "plantmf/error.hpp"

namespace plantmf {

namespace {

bool spd(const Mat2& h) {
  return h[1] == h[2] && h[0] > 0.0 && h[0] * h[3] - h[1] * h[2] > 0.0;
}

double quad_form(const Mat2& h, const Vec2& c, const Vec2& x) {
  const double dx = x[0] - c[0];
  const double dy = x[1] - c[1];
  return h[0] * dx * dx + (h[1] + h[2]) * dx * dy + h[3] * dy * dy;
}

// Per-coordinate counters inside a sample stream.
enum Coord : std::uint64_t { kX1 = 11, kX2 = 12, kS = 13, kGamma = 14, kS0 = 15 };

constexpr int kMaxRedraws = 64;

}  // namespace

void SurfaceParams::validate() const {
  if (!spd(H_peak) || !spd(H_trough)) {
    throw ConfigError("surface curvature matrices must be symmetric positive-definite");
  }
  if (!(trough_value <= offset && offset <= peak_value)) {
    throw ConfigError("surface values must satisfy trough <= offset <= peak");
  }
}

double surface_eval(const SurfaceParams& sp, const Vec2& x) {
  return sp.offset +
         (sp.peak_value - sp.offset) * std::exp(-0.5 * quad_form(sp.H_peak, sp.peak_center, x)) -
         (sp.offset - sp.trough_value) *
             std::exp(-0.5 * quad_form(sp.H_trough, sp.trough_center, x));
}

void Mu0Config::validate() const {
  params.validate();
  S_surface.validate();
  gamma_surface.validate();
  if (!(L > 0.0)) throw ConfigError("mu0: L must be positive");
  if (!(deltaS > 0.0) || !(deltaGamma > 0.0)) {
    throw ConfigError("mu0: conditional standard deviations must be positive");
  }
  if (!(params.s_m < S_lower() && S_lower() < S_upper())) {
    throw ConfigError("mu0: S truncation interval must satisfy s_m < S_m < s_m e^R_M");
  }
  if (!(gamma_upper() > 0.0)) throw ConfigError("mu0: gamma truncation bound must be positive");
  if (s0_law.kind == S0Law::Kind::uniform && !(s0_law.min < s0_law.max)) {
    throw ConfigError("mu0: uniform s0 law needs min < max");
  }
  if (!(params.s_m < s0_law.lower() && s0_law.upper() < S_lower())) {
    throw ConfigError("mu0: s0 support must lie inside (s_m, S_m)");
  }
}

Mu0Config Mu0Config::reference(std::uint64_t seed) {
  Mu0Config c;
  c.seed = seed;
  c.L = 1.0;
  const double h = 1.0 / (c.L * c.L);
  c.S_surface = {0.75, 1.0, 0.5, {-c.L, 0.0}, {c.L, 0.0}, scaled_identity(h), scaled_identity(h)};
  c.gamma_surface = {1.05, 2.0, 0.1, {0.0, c.L}, {0.0, -c.L}, scaled_identity(h),
                     scaled_identity(h)};
  c.deltaS = 0.1;
  c.deltaGamma = 0.1;
  c.params = ModelParams{0.05, 3.0, c.L / 2.0, 1.32};
  c.s0_law = S0Law::point(0.1);
  return c;
}

double std_normal_cdf(double z) {
  return 0.5 * boost::math::erfc(-z / std::numbers::sqrt2);
}

double std_normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("std_normal_quantile: p must lie in (0,1)");
  return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

double sample_truncated_normal(double mean, double sd, double lo, double hi, double u) {
  if (!(lo < hi)) throw DomainError("sample_truncated_normal: requires lo < hi");
  if (!(sd > 0.0)) throw DomainError("sample_truncated_normal: requires sd > 0");
  double a = (lo - mean) / sd;
  double b = (hi - mean) / sd;
  // Work on the side of the mean where CDF values keep their precision.
  const bool flip = a > 0.0;
  if (flip) {
    const double na = -b;
    b = -a;
    a = na;
    u = 1.0 - u;
  }
  const double fa = std::isinf(a) ? 0.0 : std_normal_cdf(a);
  const double fb = std::isinf(b) ? 1.0 : std_normal_cdf(b);
  double z;
  if (fb - fa > 0.0 && fb > std::numeric_limits<double>::min()) {
    double p = fa + u * (fb - fa);
    p = std::clamp(p, std::nextafter(0.0, 1.0), std::nextafter(1.0, 0.0));
    z = std_normal_quantile(p);
  } else {
    // Deep lower tail: exponential approximation of the density near b.
    const double c = -b;
    const double lo_w = std::exp(c * (a - b));
    z = b + std::log(lo_w + u * (1.0 - lo_w)) / c;
  }
  z = std::clamp(z, a, b);
  if (flip) z = -z;
  return std::clamp(mean + sd * z, lo, hi);
}

std::vector<Sample> sample_mu0(const Mu0Config& cfg, std::size_t n, SampleStream stream,
                               std::uint64_t stage) {
  cfg.validate();
  const CounterRng base(cfg.seed);
  const CounterRng rng =
      stream == SampleStream::population && stage == 0
          ? base
          : base.substream((static_cast<std::uint64_t>(stream) << 32) ^ stage);
  const double s_lo = cfg.S_lower();
  const double s_hi = cfg.S_upper();
  const double g_hi = cfg.gamma_upper();

  std::vector<Sample> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Sample smp;
    auto& th = smp.traits;
    th.x = {cfg.L * std_normal_quantile(rng.uniform(kX1, i)),
            cfg.L * std_normal_quantile(rng.uniform(kX2, i))};

    const double s_mean = surface_eval(cfg.S_surface, th.x);
    const double g_mean = surface_eval(cfg.gamma_surface, th.x);
    int k = 0;
    for (;; ++k) {
      if (k == kMaxRedraws) throw NumericalError("sample_mu0: S redraw budget exhausted");
      th.S = sample_truncated_normal(s_mean, cfg.deltaS, s_lo, s_hi, rng.uniform(kS, i, k));
      if (th.S > s_lo && th.S < s_hi) break;
    }
    for (k = 0;; ++k) {
      if (k == kMaxRedraws) throw NumericalError("sample_mu0: gamma redraw budget exhausted");
      th.gamma =
          sample_truncated_normal(g_mean, cfg.deltaGamma, 0.0, g_hi, rng.uniform(kGamma, i, k));
      if (th.gamma > 0.0) break;
    }
    smp.s0 = cfg.s0_law.kind == S0Law::Kind::point
                 ? cfg.s0_law.value
                 : cfg.s0_law.min + (cfg.s0_law.max - cfg.s0_law.min) * rng.uniform(kS0, i);
    out.push_back(smp);
  }
  return out;
}

}  // namespace plantmf
