#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "plantmf/error.hpp"
#include "plantmf/init_dist.hpp"
#include "plantmf/rng.hpp"

using namespace plantmf;

TEST_CASE("standard normal quantile and cdf") {
  CHECK(std_normal_quantile(0.5) == 0.0);
  CHECK(std_normal_quantile(0.975) == doctest::Approx(1.9599639845400542).epsilon(1e-14));
  CHECK(std_normal_cdf(1.9599639845400542) == doctest::Approx(0.975).epsilon(1e-14));
  CHECK(std_normal_quantile(1e-300) < -37.0);
}

TEST_CASE("truncated normal inverse cdf") {
  const double inf = std::numeric_limits<double>::infinity();
  // Half-normal median.
  CHECK(sample_truncated_normal(0.0, 1.0, 0.0, inf, 0.5) ==
        doctest::Approx(0.67448975019608174).epsilon(1e-13));
  // Monotone in u and inside the interval.
  double prev = -inf;
  for (double u = 0.001; u < 1.0; u += 0.01) {
    const double v = sample_truncated_normal(0.75, 0.1, 0.5, 1.00428, u);
    CHECK(v > prev);
    CHECK(v >= 0.5);
    CHECK(v <= 1.00428);
    prev = v;
  }
  // Deep tail stays finite and inside the interval.
  const double far = sample_truncated_normal(0.0, 1.0, 40.0, inf, 0.3);
  CHECK(std::isfinite(far));
  CHECK(far >= 40.0);
  CHECK_THROWS_AS(sample_truncated_normal(0.0, 1.0, 1.0, 1.0, 0.5), DomainError);
  CHECK_THROWS_AS(sample_truncated_normal(0.0, 0.0, 0.0, 1.0, 0.5), DomainError);
}

TEST_CASE("truncated normal agrees with a rejection sampler") {
  // Oracle: draw normals, keep those in [lo, hi]; compare sorted quantiles.
  const double mean = 1.05, sd = 0.1, lo = 0.0, hi = 2.0;
  const CounterRng rng(99);
  std::vector<double> inv, rej;
  for (std::uint64_t i = 0; rej.size() < 20000; ++i) {
    const double z = mean + sd * std_normal_quantile(rng.uniform(1, i));
    if (z >= lo && z <= hi) rej.push_back(z);
  }
  for (std::uint64_t i = 0; i < 20000; ++i) {
    inv.push_back(sample_truncated_normal(mean, sd, lo, hi, rng.uniform(2, i)));
  }
  std::sort(inv.begin(), inv.end());
  std::sort(rej.begin(), rej.end());
  for (double q : {0.05, 0.25, 0.5, 0.75, 0.95}) {
    const auto k = static_cast<std::size_t>(q * 20000);
    CHECK(std::abs(inv[k] - rej[k]) < 0.006);
  }
  // One-sided truncation close to the mode.
  inv.clear();
  rej.clear();
  for (std::uint64_t i = 0; rej.size() < 20000; ++i) {
    const double z = 2.0 + 0.1 * std_normal_quantile(rng.uniform(3, i));
    if (z <= 2.0 && z >= 0.0) rej.push_back(z);
  }
  for (std::uint64_t i = 0; i < 20000; ++i) {
    inv.push_back(sample_truncated_normal(2.0, 0.1, 0.0, 2.0, rng.uniform(4, i)));
  }
  std::sort(inv.begin(), inv.end());
  std::sort(rej.begin(), rej.end());
  for (double q : {0.1, 0.5, 0.9}) {
    const auto k = static_cast<std::size_t>(q * 20000);
    CHECK(std::abs(inv[k] - rej[k]) < 0.006);
  }
}

TEST_CASE("reference surfaces") {
  const auto c = Mu0Config::reference(0);
  CHECK(surface_eval(c.S_surface, {-1.0, 0.0}) ==
        doctest::Approx(0.9661661791908468).epsilon(1e-14));
  CHECK(surface_eval(c.S_surface, {1e3, 1e3}) == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(surface_eval(c.gamma_surface, {-1e3, 0.0}) == doctest::Approx(1.05).epsilon(1e-15));
  CHECK(c.S_upper() == doctest::Approx(0.05 * std::exp(3.0)));
  CHECK(c.gamma_upper() == 2.0);
  CHECK(c.params.sigma_x == 0.5);
}

TEST_CASE("samples respect the truncation bounds") {
  auto c = Mu0Config::reference(3);
  const auto xs = sample_mu0(c, 5000);
  for (const auto& s : xs) {
    CHECK(s.s0 == 0.1);
    CHECK(s.traits.S > c.S_lower());
    CHECK(s.traits.S < c.S_upper());
    CHECK(s.traits.gamma > 0.0);
    CHECK(s.traits.gamma <= c.gamma_upper());
  }
  c.s0_law = S0Law::uniform(0.1, 0.3);
  for (const auto& s : sample_mu0(c, 2000)) {
    CHECK(s.s0 >= 0.1);
    CHECK(s.s0 <= 0.3);
  }
}

TEST_CASE("positions follow the Gaussian spread") {
  const auto c = Mu0Config::reference(5);
  const auto xs = sample_mu0(c, 40000);
  double m = 0.0, v = 0.0;
  for (const auto& s : xs) m += s.traits.x[0];
  m /= static_cast<double>(xs.size());
  for (const auto& s : xs) v += (s.traits.x[0] - m) * (s.traits.x[0] - m);
  v /= static_cast<double>(xs.size() - 1);
  CHECK(std::abs(m) < 0.02);
  CHECK(std::abs(v - 1.0) < 0.03);
}

TEST_CASE("sampling is deterministic and nests as n grows") {
  const auto c = Mu0Config::reference(11);
  const auto a = sample_mu0(c, 50);
  const auto b = sample_mu0(c, 400);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
  CHECK(sample_mu0(c, 50) == a);
  const auto other = sample_mu0(c, 50, SampleStream::cloud);
  CHECK_FALSE(other[0] == a[0]);
  CHECK_FALSE(sample_mu0(c, 5, SampleStream::training, 1)[0] ==
              sample_mu0(c, 5, SampleStream::training, 2)[0]);
  CHECK_FALSE(sample_mu0(Mu0Config::reference(12), 1)[0] == a[0]);
}

TEST_CASE("configuration validation") {
  auto c = Mu0Config::reference(0);
  CHECK_NOTHROW(c.validate());
  c.S_surface.trough_value = 1.2;  // above the hard size bound
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = Mu0Config::reference(0);
  c.s0_law = S0Law::point(0.04);
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = Mu0Config::reference(0);
  c.deltaS = 0.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = Mu0Config::reference(0);
  c.L = -1.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}
