// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit status
// if any criterion fails. Tolerances are fixed below.

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "plantmf/app.hpp"
#include "plantmf/config.hpp"
#include "plantmf/io.hpp"
#include "plantmf/meanfield.hpp"
#include "plantmf/metrics.hpp"
#include "plantmf/population.hpp"
#include "plantmf/rng.hpp"

namespace fs = std::filesystem;
using namespace plantmf;

namespace {

constexpr std::uint64_t kSeed = 20240601;

constexpr double kIndexSlack = 1e-9;
constexpr double kRuntimeSimulate = 10.0;
constexpr double kDecoupledRel = 1e-5;
constexpr double kEnvelopeSlack = 1e-9;
constexpr double kProbeFactor = 10.0;
constexpr double kR2Floor = 0.95;
constexpr double kRuntimeTrain = 120.0;
constexpr double kTrendFactor = 1.5;
constexpr double kRuntimeConverge = 300.0;
constexpr double kMatchingTol = 1e-12;
constexpr double kQuadratureTol = 1e-9;
constexpr double kClosedFormRel = 1e-10;
constexpr double kDepressedShare = 0.90;

int failures = 0;

void report(int id, const std::string& name, bool pass, const std::string& detail) {
  std::printf("[%s] %2d %s: %s\n", pass ? "PASS" : "FAIL", id, name.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void run_guarded(int id, const std::string& name, const std::function<void()>& body) {
  try {
    body();
  } catch (const std::exception& e) {
    report(id, name, false, std::string("exception: ") + e.what());
  }
}

// At most one adjacent increase and an overall drop by the given factor.
bool trend_ok(const std::vector<double>& v, double factor, std::string& detail) {
  int inversions = 0;
  for (std::size_t k = 1; k < v.size(); ++k) {
    if (v[k] > v[k - 1]) ++inversions;
  }
  const double ratio = v.front() / v.back();
  detail = "";
  for (double x : v) detail += fmt("%.4g ", x);
  detail += fmt("ratio=%.2f", ratio) + " inversions=" + std::to_string(inversions);
  return inversions <= 1 && ratio >= factor;
}

bool same_files(const fs::path& a, const fs::path& b) {
  for (const auto& entry : fs::directory_iterator(a)) {
    const auto other = b / entry.path().filename();
    if (!fs::exists(other) || read_file(entry.path()) != read_file(other)) return false;
  }
  return true;
}

}  // namespace

int main() {
  const auto work = fs::temp_directory_path() / ("plantmf_acceptance_" + std::to_string(kSeed));
  fs::remove_all(work);
  fs::create_directories(work);

  ExperimentConfig cfg = parse_config("seed = " + std::to_string(kSeed) + "\n");
  const ModelParams& p = cfg.params;

  // Shared reference run for criteria 1, 3 and 4.
  const auto samples = sample_mu0(cfg.mu0, 50, SampleStream::population);
  const auto initial = PopulationState::from_samples(samples);
  std::optional<Trajectory> traj;
  double sim_seconds = 0.0;
  try {
    const auto t0 = std::chrono::steady_clock::now();
    traj.emplace(integrate(p, initial, cfg.solver));
    sim_seconds = seconds_since(t0);
  } catch (const std::exception& e) {
    std::printf("reference run failed: %s\n", e.what());
  }

  run_guarded(1, "population invariants", [&] {
    if (!traj) throw std::runtime_error("no reference trajectory");
    bool ok = true;
    double min_lower = INFINITY, min_upper = INFINITY, cmin = INFINITY, cmax = -INFINITY;
    for (const auto& st : traj->states()) {
      const auto c = competition_indices(p, st);
      for (std::size_t i = 0; i < st.size(); ++i) {
        min_lower = std::min(min_lower, st.sizes[i] - p.s_m);
        min_upper = std::min(min_upper, st.traits[i].S - st.sizes[i]);
        cmin = std::min(cmin, c[i]);
        cmax = std::max(cmax, c[i]);
        if (!(p.s_m < st.sizes[i] && st.sizes[i] < st.traits[i].S)) ok = false;
        if (c[i] < -kIndexSlack || c[i] > 1.0 + kIndexSlack) ok = false;
      }
    }
    ok = ok && sim_seconds < kRuntimeSimulate;
    report(1, "population invariants", ok,
           "N=50 snapshots=" + std::to_string(traj->size()) + fmt(" min(s-s_m)=%.3g", min_lower) +
               fmt(" min(S-s)=%.3g", min_upper) + fmt(" C in [%.4f,", cmin) +
               fmt("%.4f]", cmax) + fmt(" runtime=%.3fs", sim_seconds));
  });

  run_guarded(2, "decoupled closed form", [&] {
    PopulationState pair;
    pair.traits = {samples[0].traits, samples[1].traits};
    pair.traits[1].x = {pair.traits[0].x[0] + 1e6 * p.sigma_x, pair.traits[0].x[1]};
    pair.sizes = {samples[0].s0, samples[1].s0};
    SolverConfig sc = cfg.solver;
    sc.snapshot_times = SolverConfig::uniform_grid(10.0, 1001);
    const auto tr = integrate(p, pair, sc);
    double worst = 0.0;
    for (const auto& st : tr.states()) {
      for (std::size_t i = 0; i < 2; ++i) {
        const double exact = gompertz_closed_form(pair.traits[i], p, pair.sizes[i], st.t);
        worst = std::max(worst, std::abs(st.sizes[i] - exact) / exact);
      }
    }
    report(2, "decoupled closed form", worst < kDecoupledRel,
           fmt("max relative deviation=%.3e", worst) + fmt(" (limit %.0e)", kDecoupledRel));
  });

  run_guarded(3, "size envelopes", [&] {
    if (!traj) throw std::runtime_error("no reference trajectory");
    double worst = -INFINITY;
    for (const auto& st : traj->states()) {
      for (std::size_t i = 0; i < st.size(); ++i) {
        const double lo = size_lower_envelope(p, st.traits[i], initial.sizes[i], st.t);
        const double hi = size_upper_envelope(p, st.traits[i], initial.sizes[i], st.t);
        worst = std::max(worst, std::max(lo - st.sizes[i], st.sizes[i] - hi));
      }
    }
    report(3, "size envelopes", worst <= kEnvelopeSlack,
           fmt("max excess beyond envelope=%.3e", worst) + fmt(" (slack %.0e)", kEnvelopeSlack));
  });

  run_guarded(4, "empirical flow consistency", [&] {
    if (!traj) throw std::runtime_error("no reference trajectory");
    const CounterRng rng(kSeed);
    double worst = 0.0;
    std::string picked;
    bool ok = true;
    for (std::uint64_t k = 0; k < 5; ++k) {
      const auto i = static_cast<std::size_t>(rng.bits(0, k) % 50);
      picked += std::to_string(i) + " ";
      const auto probe = empirical_flow(p, *traj, initial.sizes[i], initial.traits[i], cfg.solver);
      for (std::size_t s = 0; s < probe.times.size(); ++s) {
        const double target = traj->states()[s].sizes[i];
        const double err = std::abs(probe.sizes[s] - target);
        const double tol = kProbeFactor * (cfg.solver.rel_tol * target + cfg.solver.abs_tol);
        worst = std::max(worst, err / tol);
        if (err > tol) ok = false;
      }
    }
    report(4, "empirical flow consistency", ok,
           "individuals " + picked + fmt("max error / (10 x tolerance)=%.3e", worst));
  });

  // Mean-field model shared by criteria 5, 6, 8 and 11.
  std::optional<MeanFieldModel> model;
  run_guarded(5, "mean-field training quality", [&] {
    const auto t0 = std::chrono::steady_clock::now();
    model = run_train(cfg, work / "train", std::cerr);
    const double secs = seconds_since(t0);
    double worst = INFINITY;
    std::string r2;
    for (const auto& s : model->stages) {
      worst = std::min(worst, s.r2_test);
      r2 += fmt("%.3f ", s.r2_test);
    }
    report(5, "mean-field training quality", worst >= kR2Floor && secs < kRuntimeTrain,
           "R2_test " + r2 + fmt("min=%.4f", worst) + fmt(" runtime=%.2fs", secs));
  });

  run_guarded(6, "convergence trend", [&] {
    if (!model) throw std::runtime_error("no trained model");
    const auto t0 = std::chrono::steady_clock::now();
    Mu0Config mu0 = model->mu0;
    mu0.seed = kSeed;
    auto opts = cfg.convergence_options(mu0);
    opts.N_list = {50, 100, 200, 400};
    const auto rows = convergence_experiment(mu0, model->params(), &*model, opts);
    const double secs = seconds_since(t0);
    std::vector<double> w1, gap;
    for (const auto& r : rows) {
      if (r.t == 10.0) {
        w1.push_back(r.w1_size);
        gap.push_back(r.flow_gap);
      }
    }
    std::string dw, dg;
    const bool ok_w = trend_ok(w1, kTrendFactor, dw);
    const bool ok_g = trend_ok(gap, kTrendFactor, dg);
    report(6, "convergence trend", ok_w && ok_g && secs < kRuntimeConverge,
           "t=10 W1(size): " + dw + " | flow gap: " + dg + fmt(" | runtime=%.2fs", secs));
  });

  run_guarded(7, "transport oracle", [&] {
    const CounterRng rng(kSeed + 7);
    const ZMetricWeights w = ZMetricWeights::defaults(cfg.mu0);
    double worst = 0.0;
    for (std::uint64_t trial = 0; trial < 200; ++trial) {
      const std::size_t n = 1 + rng.bits(100, trial) % 6;
      std::vector<ZAtom> a(n), b(n);
      auto fill = [&](std::vector<ZAtom>& v, std::uint64_t stream) {
        for (std::size_t i = 0; i < n; ++i) {
          const auto base = 8 * i;
          v[i].s = 0.05 + 0.95 * rng.uniform(stream, base);
          v[i].traits.S = 0.5 + 0.5 * rng.uniform(stream, base + 1);
          v[i].traits.x = {4.0 * rng.uniform(stream, base + 2) - 2.0,
                           4.0 * rng.uniform(stream, base + 3) - 2.0};
          v[i].traits.gamma = 2.0 * rng.uniform(stream, base + 4);
        }
      };
      fill(a, 2 * trial + 1000);
      fill(b, 2 * trial + 1001);
      std::vector<std::size_t> perm(n);
      std::iota(perm.begin(), perm.end(), 0);
      double best = INFINITY;
      do {
        double c = 0.0;
        for (std::size_t i = 0; i < n; ++i) c += z_distance(a[i], b[perm[i]], w);
        best = std::min(best, c / static_cast<double>(n));
      } while (std::next_permutation(perm.begin(), perm.end()));
      worst = std::max(worst, std::abs(w1_matching(a, b, w) - best));
    }
    report(7, "transport oracle", worst <= kMatchingTol,
           fmt("200 instances, max |matching - brute force|=%.3e", worst));
  });

  run_guarded(8, "scheme self-consistency", [&] {
    if (!model) throw std::runtime_error("no trained model");
    const CounterRng rng(kSeed + 8);
    const auto& m = *model;
    double worst_q = 0.0;
    for (std::uint64_t k = 0; k < 500; ++k) {
      const double t = m.T * rng.uniform(0, k);
      const double s = 0.06 + 0.9 * rng.uniform(1, k);
      PlantTraits th;
      th.x = {3.0 * rng.uniform(2, k) - 1.5, 3.0 * rng.uniform(3, k) - 1.5};
      th.S = 0.5 + 0.5 * rng.uniform(4, k);
      th.gamma = 2.0 * rng.uniform(5, k);
      // Integral of gamma e^{gamma (tau - t)} C(tau) over [0, t], split at the stage breaks.
      double quad = 0.0;
      for (std::size_t j = 0; j < m.stages.size(); ++j) {
        const double a = static_cast<double>(j) * m.dt;
        if (a >= t) break;
        const double b = std::min(t, a + m.dt);
        const double c = stage_potential_eval(m.stages[j], s, th);
        const auto f = [&](double tau) { return th.gamma * std::exp(th.gamma * (tau - t)) * c; };
        quad += boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 15, 1e-14);
      }
      worst_q = std::max(worst_q, std::abs(quad - reconstructed_potential_integral(m, t, s, th)));
    }
    MeanFieldModel zero = m;
    for (auto& st : zero.stages) std::fill(st.beta.begin(), st.beta.end(), 0.0);
    double worst_cf = 0.0;
    for (std::uint64_t k = 0; k < 500; ++k) {
      const double t = m.T * rng.uniform(10, k);
      const double s0 = 0.1 + 0.2 * rng.uniform(11, k);
      const PlantTraits th{{rng.uniform(12, k) - 0.5, rng.uniform(13, k) - 0.5},
                           0.5 + 0.5 * rng.uniform(14, k), 2.0 * rng.uniform(15, k)};
      const double exact = gompertz_closed_form(th, p, s0, t);
      worst_cf = std::max(worst_cf, std::abs(flow_eval(zero, t, s0, th) - exact) / exact);
    }
    report(8, "scheme self-consistency", worst_q < kQuadratureTol && worst_cf < kClosedFormRel,
           fmt("max |integral - quadrature|=%.3e", worst_q) +
               fmt(" zero-potential max rel dev=%.3e", worst_cf));
  });

  run_guarded(9, "feature combinatorics", [&] {
    const std::vector<double> x{2.0, 3.0};
    const auto q = polynomial_features(x, 2);
    const std::vector<double> expect{1.0, 2.0, 4.0, 3.0, 6.0, 9.0};  // 1, x1, x1^2, x2, x1x2, x2^2
    const bool ok = feature_count(3, 5) == 56 && feature_count(5, 3) == 56 && q == expect &&
                    polynomial_features(std::vector<double>{1, 1, 1}, 5).size() == 56 &&
                    polynomial_features(std::vector<double>{1, 1, 1, 1, 1}, 3).size() == 56;
    report(9, "feature combinatorics", ok,
           "n(3,5)=" + std::to_string(feature_count(3, 5)) +
               " n(5,3)=" + std::to_string(feature_count(5, 3)) + " q22 order (1,x1,x1^2,x2,x1x2,x2^2)");
  });

  run_guarded(10, "determinism", [&] {
    std::ostringstream sink;
    const auto a = work / "det_a", b = work / "det_b";
    const std::vector<std::size_t> Ns{50, 100};
    for (const auto& dir : {a, b}) {
      run_simulate(cfg, 50, dir / "simulate", sink);
      run_train(cfg, dir / "train", sink);
      run_converge(cfg, dir / "train" / "model.json", Ns, dir / "converge", sink);
      run_potential_dump(dir / "train" / "model.json", GridSpec::parse("-2,2,-2,2,21"),
                         dir / "dump", sink);
    }
    bool ok = true;
    std::string detail;
    for (const char* sub : {"simulate", "train", "converge", "dump"}) {
      const bool same = same_files(a / sub, b / sub);
      ok = ok && same;
      detail += std::string(sub) + (same ? "=identical " : "=DIFFERENT ");
    }
    report(10, "determinism", ok, detail);
  });

  run_guarded(11, "competition depresses final size", [&] {
    if (!model) throw std::runtime_error("no trained model");
    const auto rows = potential_surface(*model, GridSpec::parse("-3,3,-3,3,61"));
    // Inside the cloud: within the 95% mass ellipse of the Gaussian positions.
    const double radius = model->mu0.L * std::sqrt(-2.0 * std::log(0.05));
    std::size_t inside = 0, depressed = 0;
    for (const auto& r : rows) {
      if (std::hypot(r.x1, r.x2) > radius) continue;
      ++inside;
      if (r.s_T < r.S_bar) ++depressed;
    }
    const double share = inside ? static_cast<double>(depressed) / static_cast<double>(inside) : 0.0;
    report(11, "competition depresses final size", share >= kDepressedShare,
           std::to_string(depressed) + "/" + std::to_string(inside) +
               fmt(" grid points inside the cloud (share %.3f)", share));
  });

  std::printf("%d criteria failed\n", failures);
  fs::remove_all(work);
  return failures == 0 ? 0 : 1;
}
