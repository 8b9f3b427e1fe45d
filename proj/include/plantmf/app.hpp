#pragma once

// Subcommand drivers behind the command-line tool. Each writes its files
// into an output directory (created if needed) and reports progress and
// wall time on the log stream only, so output files stay reproducible.

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "plantmf/config.hpp"
#include "plantmf/meanfield.hpp"

namespace plantmf {

namespace fs = std::filesystem;

// trajectory.csv, samples.csv, diagnostics.json
void run_simulate(const ExperimentConfig& cfg, std::size_t N, const fs::path& out,
                  std::ostream& log);

// model.json, r2.csv
MeanFieldModel run_train(const ExperimentConfig& cfg, const fs::path& out, std::ostream& log);

// distances.csv, distances.json. The model file may be omitted only when the
// configuration asks for self-comparison.
void run_converge(const ExperimentConfig& cfg, const std::optional<fs::path>& model_path,
                  const std::vector<std::size_t>& N_list, const fs::path& out, std::ostream& log);

struct GridSpec {
  double x1_min = -2.0;
  double x1_max = 2.0;
  double x2_min = -2.0;
  double x2_max = 2.0;
  std::size_t steps = 41;  // points per axis

  // "x1min,x1max,x2min,x2max,steps"; throws ConfigError.
  static GridSpec parse(const std::string& text);
  std::vector<double> axis(double lo, double hi) const;
};

// One row of the final-time surface.
struct SurfaceRow {
  double x1 = 0.0;
  double x2 = 0.0;
  double S_bar = 0.0;
  double gamma_bar = 0.0;
  double s_T = 0.0;
  bool in_range = true;
};

// Mean-field size at T on the grid for s = (s0_min + s0_max)/2 and the
// surface traits at each x. Rows outside the trained range are flagged.
std::vector<SurfaceRow> potential_surface(const MeanFieldModel& model, const GridSpec& grid);

// surface.csv
void run_potential_dump(const fs::path& model_path, const GridSpec& grid, const fs::path& out,
                        std::ostream& log);

MeanFieldModel load_model(const fs::path& path);

}  // namespace plantmf
