#pragma once

// Parametric initial distribution: Gaussian positions, trait surfaces and
// truncated-normal traits conditioned on position.

#include <array>
#include <cstdint>
#include <vector>

#include "plantmf/model.hpp"
#include "plantmf/rng.hpp"

namespace plantmf {

// Symmetric 2x2 matrix stored row-major {a, b, b, d}.
using Mat2 = std::array<double, 4>;

inline constexpr Mat2 scaled_identity(double v) { return {v, 0.0, 0.0, v}; }

// offset + (peak - offset) exp(-q1/2) - (offset - trough) exp(-q2/2) with
// q_k = (x - center_k)^T H_k (x - center_k).
struct SurfaceParams {
  double offset = 0.0;
  double peak_value = 0.0;
  double trough_value = 0.0;
  Vec2 peak_center{0.0, 0.0};
  Vec2 trough_center{0.0, 0.0};
  Mat2 H_peak = scaled_identity(1.0);
  Mat2 H_trough = scaled_identity(1.0);

  void validate() const;
};

double surface_eval(const SurfaceParams& sp, const Vec2& x);

struct S0Law {
  enum class Kind { point, uniform };
  Kind kind = Kind::point;
  double value = 0.1;  // point mass
  double min = 0.1;    // uniform support
  double max = 0.3;

  static S0Law point(double v) { return {Kind::point, v, v, v}; }
  static S0Law uniform(double lo, double hi) { return {Kind::uniform, 0.5 * (lo + hi), lo, hi}; }

  double lower() const { return kind == Kind::point ? value : min; }
  double upper() const { return kind == Kind::point ? value : max; }
  double midpoint() const { return kind == Kind::point ? value : 0.5 * (min + max); }
};

struct Mu0Config {
  S0Law s0_law = S0Law::point(0.1);
  double L = 1.0;
  SurfaceParams S_surface;
  SurfaceParams gamma_surface;
  double deltaS = 0.1;
  double deltaGamma = 0.1;
  ModelParams params;
  std::uint64_t seed = 0;

  // S is truncated to [S_lower, s_m e^{R_M}] and gamma to [0, gamma_upper];
  // the bounds are the trough of the S surface and the peak of the gamma one.
  double S_lower() const { return S_surface.trough_value; }
  double S_upper() const { return params.max_size(); }
  double gamma_upper() const { return gamma_surface.peak_value; }

  // Throws ConfigError for inadmissible truncation intervals or supports.
  void validate() const;

  // Reference configuration: point-mass s0 = 0.1, L = 1, S surface
  // (0.75; 1.0 at (-L,0); 0.5 at (L,0)), gamma surface (1.05; 2 at (0,L);
  // 0.1 at (0,-L)), curvatures I/L^2, deltaS = deltaGamma = 0.1.
  static Mu0Config reference(std::uint64_t seed = 0);
};

struct Sample {
  double s0 = 0.0;
  PlantTraits traits;

  bool operator==(const Sample&) const = default;
};

double std_normal_cdf(double z);
double std_normal_quantile(double p);

// Inverse-CDF draw from N(mean, sd^2) conditioned on [lo, hi] using the single
// uniform u in (0,1). hi may be +infinity. Throws DomainError if lo >= hi or
// sd <= 0.
double sample_truncated_normal(double mean, double sd, double lo, double hi, double u);

// Named sub-streams of a configuration's seed.
enum class SampleStream : std::uint64_t {
  population = 0,
  cloud = 1,
  training = 2,
  testing = 3,
  probes = 4,
  reference = 5,
};

// n i.i.d. draws from mu0. Sample i depends only on (seed, stream, stage, i).
std::vector<Sample> sample_mu0(const Mu0Config& cfg, std::size_t n,
                               SampleStream stream = SampleStream::population,
                               std::uint64_t stage = 0);

}  // namespace plantmf
