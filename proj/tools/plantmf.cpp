// Command-line front end. Exit codes: 0 success, 2 configuration or usage
// error, 3 numerical failure, 1 anything else.

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>

#include "plantmf/app.hpp"
#include "plantmf/error.hpp"
#include "plantmf/io.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

plantmf::ExperimentConfig load_config(const std::string& path) {
  if (path.empty()) return plantmf::parse_config("");
  return plantmf::parse_config(plantmf::read_file(path));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Plant population growth with competition: simulation and mean-field surrogate"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::string model_path;
  std::string n_list;
  std::string grid;
  std::optional<std::size_t> n;
  std::optional<std::uint64_t> seed;

  auto* sim = app.add_subcommand("simulate", "Integrate a finite population");
  sim->add_option("--config", config_path, "Configuration file")->check(CLI::ExistingFile);
  sim->add_option("--n", n, "Population size");
  sim->add_option("--seed", seed, "Random seed (overrides the config)");
  sim->add_option("--out", out_dir, "Output directory")->required();

  auto* trn = app.add_subcommand("train-meanfield", "Fit the piecewise-constant potential scheme");
  trn->add_option("--config", config_path, "Configuration file")->check(CLI::ExistingFile);
  trn->add_option("--seed", seed, "Random seed (overrides the config)");
  trn->add_option("--out", out_dir, "Output directory")->required();

  auto* cnv = app.add_subcommand("converge", "Distances between populations and the surrogate");
  cnv->add_option("--config", config_path, "Configuration file")->check(CLI::ExistingFile);
  cnv->add_option("--model", model_path, "Trained model file");
  cnv->add_option("--n-list", n_list, "Increasing population sizes, comma separated")->required();
  cnv->add_option("--seed", seed, "Random seed (overrides the config)");
  cnv->add_option("--out", out_dir, "Output directory")->required();

  auto* dmp = app.add_subcommand("potential-dump", "Mean-field final size on a position grid");
  dmp->add_option("--model", model_path, "Trained model file")->required();
  dmp->add_option("--grid", grid, "x1min,x1max,x2min,x2max,steps")->required();
  dmp->add_option("--out", out_dir, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (dmp->parsed()) {
      plantmf::run_potential_dump(model_path, plantmf::GridSpec::parse(grid), out_dir, std::cerr);
      return 0;
    }
    auto cfg = load_config(config_path);
    if (seed) {
      cfg.seed = *seed;
      cfg.mu0.seed = *seed;
    }
    if (sim->parsed()) {
      plantmf::run_simulate(cfg, n.value_or(cfg.simulate_n), out_dir, std::cerr);
    } else if (trn->parsed()) {
      plantmf::run_train(cfg, out_dir, std::cerr);
    } else if (cnv->parsed()) {
      std::optional<std::filesystem::path> model;
      if (!model_path.empty()) model = model_path;
      plantmf::run_converge(cfg, model, plantmf::parse_size_list(n_list), out_dir, std::cerr);
    }
  } catch (const plantmf::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const plantmf::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const plantmf::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const plantmf::DomainError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
