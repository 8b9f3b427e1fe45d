#include "plantmf/app.hpp"

#include <algorithm>
#include <chrono>
#include <ostream>
#include <sstream>

#include "plantmf/error.hpp"
#include "plantmf/io.hpp"
#include "plantmf/serialize.hpp"

namespace plantmf {

namespace {

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

void ensure_directory(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw IoError("cannot create output directory: " + dir.string());
  }
}

struct EnvelopeCheck {
  bool pass = true;
  double worst = 0.0;  // largest violation beyond the envelope
};

EnvelopeCheck check_envelopes(const Trajectory& traj) {
  constexpr double kSlack = 1e-9;
  const auto& p = traj.params();
  const auto& s0 = traj.initial_sizes();
  EnvelopeCheck out;
  for (const auto& state : traj.states()) {
    const double t = state.t - traj.times().front();
    for (std::size_t i = 0; i < state.size(); ++i) {
      const double lo = size_lower_envelope(p, state.traits[i], s0[i], t);
      const double hi = size_upper_envelope(p, state.traits[i], s0[i], t);
      const double v = std::max(lo - state.sizes[i], state.sizes[i] - hi);
      out.worst = std::max(out.worst, v);
      if (v > kSlack) out.pass = false;
    }
  }
  return out;
}

}  // namespace

void run_simulate(const ExperimentConfig& cfg_in, std::size_t N, const fs::path& out,
                  std::ostream& log) {
  ExperimentConfig cfg = cfg_in;
  const auto seed = cfg.require_seed();
  cfg.mu0.seed = seed;
  cfg.simulate_n = N;
  cfg.validate();
  ensure_directory(out);
  const Stopwatch clock;

  const auto samples = sample_mu0(cfg.mu0, N, SampleStream::population);
  const auto initial = PopulationState::from_samples(samples);
  const auto verdict = validate_initial_config(cfg.params, initial.traits, initial.sizes);
  if (!verdict) throw std::logic_error("internal error: sampled state rejected: " + verdict.reason);
  const auto traj = integrate(cfg.params, initial, cfg.solver);

  const auto header = header_comment(cfg.hash(), seed);
  {
    std::ostringstream os;
    os << header;
    write_trajectory_csv(os, traj, cfg.solver.workers);
    write_file(out / "trajectory.csv", os.str());
  }
  {
    std::ostringstream os;
    os << header;
    write_samples_csv(os, samples);
    write_file(out / "samples.csv", os.str());
  }

  SnapshotDiagnostics total = traj.diagnostics().front();
  Json snaps = Json::array();
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const auto& d = traj.diagnostics()[k];
    Json j = to_json(d);
    j["t"] = traj.times()[k];
    snaps.push_back(j);
    total.min_size = std::min(total.min_size, d.min_size);
    total.max_size = std::max(total.max_size, d.max_size);
    total.min_index = std::min(total.min_index, d.min_index);
    total.max_index = std::max(total.max_index, d.max_index);
    total.min_lower_margin = std::min(total.min_lower_margin, d.min_lower_margin);
    total.min_upper_margin = std::min(total.min_upper_margin, d.min_upper_margin);
  }
  const auto env = check_envelopes(traj);
  const bool monitors = total.min_lower_margin > 0.0 && total.min_upper_margin > 0.0 &&
                        total.min_index >= -1e-9 && total.max_index <= 1.0 + 1e-9;
  Json diag = {{"config_hash", hex64(cfg.hash())},
               {"seed", seed},
               {"N", N},
               {"t_end", cfg.solver.t_end},
               {"extrema", to_json(total)},
               {"invariants_hold", monitors},
               {"envelopes_hold", env.pass},
               {"max_envelope_violation", env.worst},
               {"snapshots", snaps}};
  write_file(out / "diagnostics.json", dump(diag));
  log << "simulate: N=" << N << " snapshots=" << traj.size() << " runtime=" << clock.seconds()
      << "s\n";
}

MeanFieldModel run_train(const ExperimentConfig& cfg, const fs::path& out, std::ostream& log) {
  const auto seed = cfg.require_seed();
  ensure_directory(out);
  const Stopwatch clock;
  TrainConfig tc = cfg.train;
  tc.seed = seed;
  auto model = train(cfg.training_mu0(), cfg.params, tc);

  write_file(out / "model.json", dump(to_json(model)));
  std::ostringstream os;
  os << header_comment(cfg.hash(), seed) << "t,r2_train,r2_test\n";
  for (const auto& s : model.stages) {
    os << format_double(static_cast<double>(s.index) * model.dt) << ',' << format_double(s.r2_train)
       << ',' << format_double(s.r2_test) << '\n';
    if (!(s.r2_test >= 0.5)) {
      log << "warning: stage " << s.index << " fits poorly (test R^2 = " << s.r2_test << ")\n";
    }
  }
  write_file(out / "r2.csv", os.str());
  log << "train-meanfield: stages=" << model.stages.size() << " runtime=" << clock.seconds()
      << "s\n";
  return model;
}

MeanFieldModel load_model(const fs::path& path) {
  if (!fs::exists(path)) throw ConfigError("model file not found: " + path.string());
  return parse_model(read_file(path));
}

void run_converge(const ExperimentConfig& cfg, const std::optional<fs::path>& model_path,
                  const std::vector<std::size_t>& N_list, const fs::path& out, std::ostream& log) {
  const auto seed = cfg.require_seed();
  std::optional<MeanFieldModel> model;
  if (model_path) {
    model = load_model(*model_path);
  } else if (!cfg.self_compare) {
    throw ConfigError("converge: --model is required unless converge.self_compare = true");
  }
  Mu0Config mu0 = model ? model->mu0 : cfg.training_mu0();
  mu0.seed = seed;
  const ModelParams params = model ? model->params() : cfg.params;
  auto opts = cfg.convergence_options(mu0);
  opts.N_list = N_list;
  opts.validate();
  ensure_directory(out);

  const Stopwatch clock;
  const auto reports =
      convergence_experiment(mu0, params, model ? &*model : nullptr, opts);

  const auto header = header_comment(cfg.hash(), seed);
  std::ostringstream os;
  os << header;
  write_distances_csv(os, reports);
  write_file(out / "distances.csv", os.str());

  Json rows = Json::array();
  for (const auto& r : reports) rows.push_back(to_json(r));
  Json j = {{"config_hash", hex64(cfg.hash())},
            {"seed", seed},
            {"self_compare", cfg.self_compare},
            {"reports", rows}};
  write_file(out / "distances.json", dump(j));
  for (std::size_t k = 0; k < reports.size(); ++k) {
    if (k + 1 == reports.size() || reports[k + 1].N != reports[k].N) {
      log << "converge: N=" << reports[k].N << " runtime=" << reports[k].runtime_seconds << "s\n";
    }
  }
  log << "converge: total runtime=" << clock.seconds() << "s\n";
}

GridSpec GridSpec::parse(const std::string& text) {
  const auto v = parse_double_list(text);
  if (v.size() != 5) throw ConfigError("grid: expected x1min,x1max,x2min,x2max,steps");
  GridSpec g{v[0], v[1], v[2], v[3], 0};
  if (!(v[4] >= 0.0) || v[4] != std::floor(v[4]) || v[4] > 1e5) {
    throw ConfigError("grid: steps must be a non-negative integer");
  }
  g.steps = static_cast<std::size_t>(v[4]);
  if (!(g.x1_min <= g.x1_max) || !(g.x2_min <= g.x2_max)) {
    throw ConfigError("grid: minimum exceeds maximum");
  }
  return g;
}

std::vector<double> GridSpec::axis(double lo, double hi) const {
  std::vector<double> out(steps);
  for (std::size_t k = 0; k < steps; ++k) {
    out[k] = steps == 1 ? lo
                        : lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(steps - 1);
  }
  if (steps > 1) out.back() = hi;
  return out;
}

std::vector<SurfaceRow> potential_surface(const MeanFieldModel& model, const GridSpec& grid) {
  const auto& mu0 = model.mu0;
  const double s_bar = 0.5 * (mu0.s0_law.lower() + mu0.s0_law.upper());
  const auto& center = model.stages.front().spec.center;
  const double reach = 3.0 * mu0.L;
  std::vector<SurfaceRow> rows;
  rows.reserve(grid.steps * grid.steps);
  for (double x2 : grid.axis(grid.x2_min, grid.x2_max)) {
    for (double x1 : grid.axis(grid.x1_min, grid.x1_max)) {
      SurfaceRow r;
      r.x1 = x1;
      r.x2 = x2;
      const Vec2 x{x1, x2};
      r.S_bar = surface_eval(mu0.S_surface, x);
      r.gamma_bar = surface_eval(mu0.gamma_surface, x);
      r.in_range = std::abs(x1 - center[0]) <= reach && std::abs(x2 - center[1]) <= reach &&
                   r.S_bar >= mu0.S_lower() && r.S_bar <= mu0.S_upper() &&
                   r.gamma_bar > 0.0 && r.gamma_bar <= mu0.gamma_upper();
      r.s_T = flow_eval(model, model.T, s_bar, PlantTraits{x, r.S_bar, r.gamma_bar});
      rows.push_back(r);
    }
  }
  return rows;
}

void run_potential_dump(const fs::path& model_path, const GridSpec& grid, const fs::path& out,
                        std::ostream& log) {
  const auto text = read_file(model_path);
  const auto model = parse_model(text);
  ensure_directory(out);
  const auto rows = potential_surface(model, grid);
  std::ostringstream os;
  os << header_comment(fnv1a64(text), model.train.seed) << "x1,x2,S_bar,gamma_bar,s_T,in_range\n";
  std::size_t flagged = 0;
  for (const auto& r : rows) {
    os << format_double(r.x1) << ',' << format_double(r.x2) << ',' << format_double(r.S_bar) << ','
       << format_double(r.gamma_bar) << ',' << format_double(r.s_T) << ','
       << (r.in_range ? 1 : 0) << '\n';
    if (!r.in_range) ++flagged;
  }
  write_file(out / "surface.csv", os.str());
  log << "potential-dump: rows=" << rows.size() << " flagged=" << flagged << "\n";
}

}  // namespace plantmf
