#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "plantmf/error.hpp"
#include "plantmf/meanfield.hpp"
#include "plantmf/rng.hpp"

using namespace plantmf;

namespace {

FeatureSpec spec3(std::size_t degree) {
  FeatureSpec s;
  s.arity = 3;
  s.degree = degree;
  return s;
}

MeanFieldModel zero_model(std::size_t stages, double dt) {
  MeanFieldModel m;
  m.dt = dt;
  m.T = dt * static_cast<double>(stages);
  m.mu0 = Mu0Config::reference(0);
  for (std::size_t k = 0; k < stages; ++k) {
    PotentialStage s;
    s.index = k;
    s.spec = spec3(2);
    s.spec.arity = k == 0 ? 3 : 5;
    s.spec.dt = dt;
    s.beta.assign(s.spec.dimension(), 0.0);
    m.stages.push_back(s);
  }
  return m;
}

}  // namespace

TEST_CASE("feature counts") {
  CHECK(feature_count(3, 5) == 56);
  CHECK(feature_count(5, 3) == 56);
  CHECK(feature_count(2, 2) == 6);
  CHECK(feature_count(5, 0) == 1);
  CHECK(feature_count(3, 1) == 4);
}

TEST_CASE("two-variable quadratic monomials in the documented order") {
  const std::vector<double> x{2.0, 3.0};
  const auto q = polynomial_features(x, 2);
  REQUIRE(q.size() == 6);
  CHECK(q == std::vector<double>{1.0, 2.0, 4.0, 3.0, 6.0, 9.0});
}

TEST_CASE("monomials are distinct and of bounded degree") {
  // Distinct primes make every monomial value unique.
  const std::vector<double> x{2.0, 3.0, 5.0, 7.0, 11.0};
  const auto q = polynomial_features(x, 3);
  REQUIRE(q.size() == 56);
  std::vector<double> sorted = q;
  std::sort(sorted.begin(), sorted.end());
  CHECK(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end());
  CHECK(sorted.back() == 11.0 * 11.0 * 11.0);
}

TEST_CASE("feature map transforms and damping") {
  auto s = spec3(1);
  s.center = {0.5, -0.5};
  s.length = {2.0, 1.0};
  const auto f = feature_map(s, 0.1, {1.5, 0.5});
  const double damp = 1.0 / (1.0 + 2.0 / 0.25);
  REQUIRE(f.size() == 4);
  CHECK(f[0] == doctest::Approx(damp));
  CHECK(f[1] == doctest::Approx(std::log(2.0) * damp));
  CHECK(f[2] == doctest::Approx(std::atan(0.5) * damp));
  CHECK(f[3] == doctest::Approx(std::atan(1.0) * damp));
  CHECK_THROWS_AS(feature_map(s, 0.1, {0, 0}, 0.8, 1.0), ConfigError);
  s.arity = 5;
  CHECK_THROWS_AS(feature_map(s, 0.1, {0, 0}), ConfigError);
  const auto g = feature_map(s, 0.1, {0.5, -0.5}, 0.8, 1.5);
  CHECK(g.size() == 6);
  CHECK(g[5] == doctest::Approx(std::exp(-1.5)));
}

TEST_CASE("Monte-Carlo potential") {
  const ModelParams p;
  std::vector<CloudAtom> cloud{{0.2, {0.5, 0.0}}, {0.3, {0.0, 1.0}}};
  const double v = mc_potential(p, 0.1, {0, 0}, cloud);
  CHECK(v == doctest::Approx(0.5 * (competition_potential(p, 0.1, 0.2, 0.5) +
                                    competition_potential(p, 0.1, 0.3, 1.0))));
  CHECK_THROWS_AS(mc_potential(p, 0.1, {0, 0}, {}), DomainError);
}

TEST_CASE("least-squares fit recovers an exact polynomial") {
  const CounterRng rng(1);
  auto spec = spec3(2);
  std::vector<TrainingRow> rows;
  std::vector<double> beta_true(spec.dimension());
  for (std::size_t j = 0; j < beta_true.size(); ++j) beta_true[j] = 0.002 * static_cast<double>(j + 1);
  PotentialStage truth;
  truth.spec = spec;
  truth.beta = beta_true;
  for (std::uint64_t i = 0; i < 300; ++i) {
    TrainingRow r;
    r.s = 0.06 + 0.9 * rng.uniform(0, i);
    r.theta.x = {rng.uniform(1, i), rng.uniform(2, i)};
    r.target = stage_linear_eval(truth, r.s, r.theta);
    REQUIRE(r.target > 0.0);
    REQUIRE(r.target < 1.0);
    rows.push_back(r);
  }
  const auto fit = fit_stage(spec, rows, rows);
  for (std::size_t j = 0; j < beta_true.size(); ++j) {
    CHECK(fit.beta[j] == doctest::Approx(beta_true[j]).epsilon(1e-8));
  }
  CHECK(fit.r2_train == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("residual is orthogonal to the feature columns") {
  const CounterRng rng(2);
  const auto spec = spec3(3);
  std::vector<TrainingRow> rows;
  for (std::uint64_t i = 0; i < 400; ++i) {
    TrainingRow r;
    r.s = 0.06 + 0.9 * rng.uniform(0, i);
    r.theta.x = {rng.uniform(1, i) - 0.5, rng.uniform(2, i) - 0.5};
    r.target = rng.uniform(3, i);
    rows.push_back(r);
  }
  const auto fit = fit_stage(spec, rows, {});
  Eigen::MatrixXd F(rows.size(), spec.dimension());
  Eigen::VectorXd y(rows.size()), b(spec.dimension());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const auto f = stage_features(fit, rows[k].s, rows[k].theta);
    for (std::size_t j = 0; j < f.size(); ++j) F(k, j) = f[j];
    y(k) = rows[k].target;
  }
  for (std::size_t j = 0; j < spec.dimension(); ++j) b(j) = fit.beta[j];
  const Eigen::VectorXd grad = F.transpose() * (y - F * b);
  const double scale = (F.transpose() * F).cwiseAbs().maxCoeff() * (1.0 + b.cwiseAbs().maxCoeff());
  CHECK(grad.cwiseAbs().maxCoeff() <= 1e-8 * scale);
}

TEST_CASE("degenerate design gives the minimum-norm solution") {
  // Every row identical: rank one, beta proportional to the feature row.
  auto spec = spec3(2);
  std::vector<TrainingRow> rows(20, TrainingRow{0.2, {{0.3, 0.1}, 0.8, 1.0}, 0.4});
  const auto fit = fit_stage(spec, rows, {});
  const auto f = stage_features(fit, 0.2, rows[0].theta);
  double ff = 0.0;
  for (double v : f) ff += v * v;
  for (std::size_t j = 0; j < f.size(); ++j) {
    CHECK(fit.beta[j] == doctest::Approx(0.4 * f[j] / ff).epsilon(1e-9));
  }
  CHECK(std::isnan(fit.r2_train));
}

TEST_CASE("degree zero fits a scaled damping profile") {
  // With one column w(x), the fit is beta = sum(C w) / sum(w^2).
  const auto spec = spec3(0);
  std::vector<TrainingRow> rows;
  double cw = 0.0, ww = 0.0;
  for (int i = 0; i < 10; ++i) {
    TrainingRow r{0.1, {{0.1 * i, 0.0}, 0.8, 1.0}, 0.05 * i};
    const double w = 1.0 / (1.0 + r.theta.x[0] * r.theta.x[0] / 0.25);
    cw += r.target * w;
    ww += w * w;
    rows.push_back(r);
  }
  const auto fit = fit_stage(spec, rows, {});
  REQUIRE(fit.beta.size() == 1);
  CHECK(fit.beta[0] == doctest::Approx(cw / ww).epsilon(1e-12));
}

TEST_CASE("predictions are clamped to the unit interval") {
  PotentialStage s;
  s.spec = spec3(0);
  s.beta = {5.0};
  CHECK(stage_potential_eval(s, 0.1, {{0, 0}, 0.8, 1}) == 1.0);
  s.beta = {-5.0};
  CHECK(stage_potential_eval(s, 0.1, {{0, 0}, 0.8, 1}) == 0.0);
}

TEST_CASE("zero potential reduces the flow to the closed form") {
  const auto m = zero_model(10, 1.0);
  const PlantTraits th{{0.2, 0.3}, 0.85, 1.7};
  for (double t : {0.0, 0.3, 1.0, 4.5, 10.0}) {
    CHECK(reconstructed_potential_integral(m, t, 0.1, th) == 0.0);
    CHECK(flow_eval(m, t, 0.1, th) ==
          doctest::Approx(gompertz_closed_form(th, m.params(), 0.1, t)).epsilon(1e-12));
  }
  CHECK_THROWS_AS(flow_eval(m, 10.5, 0.1, th), DomainError);
  CHECK_THROWS_AS(flow_eval(m, -0.1, 0.1, th), DomainError);
}

TEST_CASE("constant potential integrates in closed form") {
  auto m = zero_model(4, 0.5);
  for (auto& s : m.stages) {
    s.spec.arity = 3;
    s.spec.degree = 0;
    s.spec.center = {0.0, 0.0};
    s.beta = {0.3};
  }
  // At x = center the damping factor is 1, so C_k = 0.3 on every interval.
  const PlantTraits th{{0.0, 0.0}, 0.8, 1.2};
  for (double t : {0.2, 0.5, 1.3, 2.0}) {
    CHECK(reconstructed_potential_integral(m, t, 0.1, th) ==
          doctest::Approx(0.3 * -std::expm1(-1.2 * t)).epsilon(1e-14));
  }
  PlantTraits still = th;
  still.gamma = 0.0;
  CHECK(reconstructed_potential_integral(m, 1.3, 0.1, still) == 0.0);
}

TEST_CASE("training configuration validation") {
  TrainConfig c;
  CHECK(c.stage_count() == 10);
  c.dt = 0.3;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = TrainConfig{};
  c.train_size = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("small training run is deterministic and well calibrated") {
  auto mu0 = Mu0Config::reference(0);
  mu0.s0_law = S0Law::uniform(0.1, 0.3);
  TrainConfig c;
  c.T = 3.0;
  c.cloud_size = 300;
  c.train_size = 300;
  c.seed = 17;
  const auto a = train(mu0, mu0.params, c);
  const auto b = train(mu0, mu0.params, c);
  REQUIRE(a.stages.size() == 3);
  CHECK(a.stages[0].beta == b.stages[0].beta);
  CHECK(a.stages[2].beta == b.stages[2].beta);
  CHECK(a.stages[0].beta.size() == 56);
  CHECK(a.stages[1].beta.size() == 56);
  for (const auto& s : a.stages) CHECK(s.r2_test > 0.8);
  const PlantTraits th{{0.0, 0.0}, 0.8, 1.0};
  CHECK(flow_eval(a, 3.0, 0.2, th) < gompertz_closed_form(th, mu0.params, 0.2, 3.0));
}
