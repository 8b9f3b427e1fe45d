#include "plantmf/meanfield.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

#include "plantmf/error.hpp"
#include "plantmf/numeric.hpp"

namespace plantmf {

std::size_t feature_count(std::size_t k, std::size_t d) {
  // binom(k + d, k), computed incrementally so it stays exact for small k.
  std::size_t c = 1;
  for (std::size_t i = 1; i <= k; ++i) c = c * (d + i) / i;
  return c;
}

namespace {

void append_monomials(std::span<const double> x, std::size_t k, std::size_t d,
                      std::vector<double>& out) {
  // Monomials of the first k variables with degree <= d.
  if (k == 0) {
    out.push_back(1.0);
    return;
  }
  append_monomials(x, k - 1, d, out);
  double power = 1.0;
  for (std::size_t a = 1; a <= d; ++a) {
    power *= x[k - 1];
    const std::size_t before = out.size();
    append_monomials(x, k - 1, d - a, out);
    for (std::size_t i = before; i < out.size(); ++i) out[i] *= power;
  }
}

}  // namespace

std::vector<double> polynomial_features(std::span<const double> x, std::size_t d) {
  std::vector<double> out;
  out.reserve(feature_count(x.size(), d));
  append_monomials(x, x.size(), d, out);
  return out;
}

void FeatureSpec::validate() const {
  if (arity != 3 && arity != 5) throw ConfigError("feature spec: arity must be 3 or 5");
  if (!(length[0] > 0.0) || !(length[1] > 0.0)) {
    throw ConfigError("feature spec: lengths must be positive");
  }
  if (!(dt > 0.0)) throw ConfigError("feature spec: dt must be positive");
  params.validate();
}

std::vector<double> feature_map(const FeatureSpec& spec, double s, const Vec2& x,
                                std::optional<double> S, std::optional<double> gamma) {
  const bool with_traits = S.has_value() && gamma.has_value();
  if ((spec.arity == 5) != with_traits || (S.has_value() != gamma.has_value())) {
    throw ConfigError("feature_map: arity does not match the supplied variables");
  }
  const auto& p = spec.params;
  const double dx = x[0] - spec.center[0];
  const double dy = x[1] - spec.center[1];
  std::array<double, 5> z{std::log(s / p.s_m), std::atan(dx / spec.length[0]),
                          std::atan(dy / spec.length[1]), 0.0, 0.0};
  if (with_traits) {
    z[3] = std::log(*S / p.s_m);
    z[4] = std::exp(-*gamma * spec.dt);
  }
  auto f = polynomial_features(std::span<const double>(z.data(), spec.arity), spec.degree);
  const double damp = 1.0 / (1.0 + (dx * dx + dy * dy) / (p.sigma_x * p.sigma_x));
  for (double& v : f) v *= damp;
  return f;
}

double mc_potential(const ModelParams& p, double s, const Vec2& x,
                    std::span<const CloudAtom> cloud) {
  if (cloud.empty()) throw DomainError("mc_potential: empty cloud");
  CompensatedSum acc;
  for (const auto& a : cloud) acc.add(competition_potential(p, s, a.s, distance(x, a.x)));
  return acc.value() / static_cast<double>(cloud.size());
}

std::vector<double> stage_features(const PotentialStage& stage, double s,
                                   const PlantTraits& theta) {
  if (stage.spec.arity == 3) return feature_map(stage.spec, s, theta.x);
  return feature_map(stage.spec, s, theta.x, theta.S, theta.gamma);
}

double stage_linear_eval(const PotentialStage& stage, double s, const PlantTraits& theta) {
  const auto f = stage_features(stage, s, theta);
  if (f.size() != stage.beta.size()) {
    throw ConfigError("stage evaluation: coefficient count does not match the feature spec");
  }
  double v = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) v += stage.beta[i] * f[i];
  return v;
}

double stage_potential_eval(const PotentialStage& stage, double s, const PlantTraits& theta) {
  return std::clamp(stage_linear_eval(stage, s, theta), 0.0, 1.0);
}

namespace {

double r_squared(const PotentialStage& stage, std::span<const TrainingRow> rows) {
  if (rows.empty()) return std::numeric_limits<double>::quiet_NaN();
  CompensatedSum mean_acc;
  for (const auto& r : rows) mean_acc.add(r.target);
  const double mean = mean_acc.value() / static_cast<double>(rows.size());
  CompensatedSum ss_res, ss_tot;
  for (const auto& r : rows) {
    const double e = r.target - stage_potential_eval(stage, r.s, r.theta);
    ss_res.add(e * e);
    ss_tot.add((r.target - mean) * (r.target - mean));
  }
  if (ss_tot.value() == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return 1.0 - ss_res.value() / ss_tot.value();
}

}  // namespace

PotentialStage fit_stage(const FeatureSpec& spec, std::span<const TrainingRow> training,
                         std::span<const TrainingRow> testing) {
  spec.validate();
  if (training.empty()) throw ConfigError("fit_stage: training set is empty");
  PotentialStage stage;
  stage.spec = spec;
  const std::size_t n = spec.dimension();
  stage.beta.assign(n, 0.0);

  Eigen::MatrixXd F(training.size(), n);
  Eigen::VectorXd y(training.size());
  for (std::size_t k = 0; k < training.size(); ++k) {
    const auto f = stage_features(stage, training[k].s, training[k].theta);
    for (std::size_t j = 0; j < n; ++j) F(k, j) = f[j];
    y(k) = training[k].target;
  }
  // Rank-revealing complete orthogonal decomposition: minimum-norm solution
  // of the (possibly singular) normal equations F^T F beta = F^T y.
  const Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(F);
  const Eigen::VectorXd beta = cod.solve(y);
  for (std::size_t j = 0; j < n; ++j) stage.beta[j] = beta(j);
  for (double b : stage.beta) {
    if (!std::isfinite(b)) throw NumericalError("fit_stage: non-finite coefficient");
  }
  stage.r2_train = r_squared(stage, training);
  stage.r2_test = r_squared(stage, testing);
  return stage;
}

void TrainConfig::validate() const {
  if (!(dt > 0.0) || !(T > 0.0)) throw ConfigError("train: dt and T must be positive");
  (void)stage_count();
  if (cloud_size == 0 || train_size == 0) {
    throw ConfigError("train: cloud and training sizes must be positive");
  }
}

std::size_t TrainConfig::stage_count() const {
  const double m = T / dt;
  const double r = std::round(m);
  if (r < 1.0 || std::abs(m - r) > 1e-9 * std::max(1.0, m)) {
    throw ConfigError("train: T/dt must be a positive integer");
  }
  return static_cast<std::size_t>(r);
}

double partial_potential_integral(std::span<const PotentialStage> stages, double dt, double t,
                                  double s, const PlantTraits& theta) {
  const double span = static_cast<double>(stages.size()) * dt;
  if (!(t >= 0.0) || t > span * (1.0 + 1e-12)) {
    throw DomainError("reconstructed potential: t outside the modelled horizon");
  }
  const double g = theta.gamma;
  if (g == 0.0 || t == 0.0) return 0.0;
  double acc = 0.0;
  for (std::size_t k = 0; k < stages.size(); ++k) {
    const double tk = static_cast<double>(k) * dt;
    if (tk > t) break;
    const double tk1 = static_cast<double>(k + 1) * dt;
    const double a = g * (tk - t);  // <= 0
    double w;
    if (t < tk1) {
      w = -std::expm1(a);
    } else {
      // e^{g(tk1 - t)} - e^{g(tk - t)} = e^{g(tk1 - t)} (1 - e^{-g dt})
      w = std::exp(g * (tk1 - t)) * -std::expm1(-g * dt);
    }
    if (w == 0.0) continue;
    acc += stage_potential_eval(stages[k], s, theta) * w;
  }
  return acc;
}

double partial_flow_eval(const ModelParams& p, std::span<const PotentialStage> stages, double dt,
                         double t, double s0, const PlantTraits& theta) {
  const double c_hat = partial_potential_integral(stages, dt, t, s0, theta);
  const double decay = std::exp(-theta.gamma * t);
  const double r = p.log_size(s0) * decay + p.log_size(theta.S) * (-std::expm1(-theta.gamma * t) - c_hat);
  return p.size_from_log(r);
}

double reconstructed_potential_integral(const MeanFieldModel& model, double t, double s,
                                        const PlantTraits& theta) {
  if (!(t >= 0.0) || t > model.T * (1.0 + 1e-12)) {
    throw DomainError("reconstructed_potential_integral: t outside [0, T]");
  }
  return partial_potential_integral(model.stages, model.dt, t, s, theta);
}

double flow_eval(const MeanFieldModel& model, double t, double s0, const PlantTraits& theta) {
  if (!(t >= 0.0) || t > model.T * (1.0 + 1e-12)) {
    throw DomainError("flow_eval: t outside [0, T]");
  }
  if (t == 0.0) return s0;
  return partial_flow_eval(model.params(), model.stages, model.dt, t, s0, theta);
}

MeanFieldModel train(const Mu0Config& mu0_in, const ModelParams& params, const TrainConfig& cfg) {
  cfg.validate();
  Mu0Config mu0 = mu0_in;
  mu0.params = params;
  mu0.seed = cfg.seed;
  mu0.validate();

  const std::size_t M = cfg.stage_count();
  MeanFieldModel model;
  model.dt = cfg.dt;
  model.T = static_cast<double>(M) * cfg.dt;
  model.mu0 = mu0;
  model.train = cfg;

  const auto cloud0 = sample_mu0(mu0, cfg.cloud_size, SampleStream::cloud);

  // Feature centering on the cloud's mean position, scaled by its pooled spread.
  CompensatedSum mx, my;
  for (const auto& a : cloud0) {
    mx.add(a.traits.x[0]);
    my.add(a.traits.x[1]);
  }
  const double n_cloud = static_cast<double>(cloud0.size());
  const Vec2 center{mx.value() / n_cloud, my.value() / n_cloud};
  CompensatedSum var;
  for (const auto& a : cloud0) {
    const double dx = a.traits.x[0] - center[0];
    const double dy = a.traits.x[1] - center[1];
    var.add(0.5 * (dx * dx + dy * dy));
  }
  double spread = cloud0.size() > 1 ? std::sqrt(var.value() / (n_cloud - 1.0)) : 0.0;
  if (!(spread > 0.0)) spread = mu0.L;

  std::vector<CloudAtom> cloud(cloud0.size());
  auto to_rows = [](const std::vector<Sample>& xs) {
    std::vector<TrainingRow> rows(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) rows[i] = {xs[i].s0, xs[i].traits, 0.0};
    return rows;
  };

  for (std::size_t k = 0; k < M; ++k) {
    const double tk = static_cast<double>(k) * cfg.dt;
    const std::span<const PotentialStage> built(model.stages);
    auto flowed = [&](double s0, const PlantTraits& th) {
      return k == 0 ? s0 : partial_flow_eval(params, built, cfg.dt, tk, s0, th);
    };
    for (std::size_t i = 0; i < cloud0.size(); ++i) {
      cloud[i] = {flowed(cloud0[i].s0, cloud0[i].traits), cloud0[i].traits.x};
    }
    auto training = to_rows(sample_mu0(mu0, cfg.train_size, SampleStream::training, k));
    auto testing = to_rows(sample_mu0(mu0, cfg.train_size, SampleStream::testing, k));
    for (auto* rows : {&training, &testing}) {
      for (auto& row : *rows) {
        row.target = mc_potential(params, flowed(row.s, row.theta), row.theta.x, cloud);
      }
    }

    FeatureSpec spec;
    spec.arity = k == 0 ? 3 : 5;
    spec.degree = k == 0 ? cfg.degree_initial : cfg.degree_later;
    spec.center = center;
    spec.length = {spread, spread};
    spec.dt = cfg.dt;
    spec.params = params;
    auto stage = fit_stage(spec, training, testing);
    stage.index = k;
    model.stages.push_back(std::move(stage));
  }
  return model;
}

}  // namespace plantmf
