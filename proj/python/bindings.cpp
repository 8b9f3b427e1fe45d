#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdio>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "plantmf/app.hpp"
#include "plantmf/config.hpp"
#include "plantmf/error.hpp"
#include "plantmf/io.hpp"
#include "plantmf/meanfield.hpp"
#include "plantmf/metrics.hpp"
#include "plantmf/population.hpp"
#include "plantmf/serialize.hpp"

namespace py = pybind11;
using namespace plantmf;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

// Rows of (s, x1, x2, S, gamma).
Array samples_to_array(const std::vector<Sample>& xs) {
  Array out({static_cast<py::ssize_t>(xs.size()), py::ssize_t{5}});
  auto a = out.mutable_unchecked<2>();
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const auto ii = static_cast<py::ssize_t>(i);
    a(ii, 0) = xs[i].s0;
    a(ii, 1) = xs[i].traits.x[0];
    a(ii, 2) = xs[i].traits.x[1];
    a(ii, 3) = xs[i].traits.S;
    a(ii, 4) = xs[i].traits.gamma;
  }
  return out;
}

std::vector<ZAtom> array_to_atoms(const Array& arr) {
  if (arr.ndim() != 2 || arr.shape(1) != 5) {
    throw ConfigError("expected an (n, 5) array of (s, x1, x2, S, gamma) rows");
  }
  const auto a = arr.unchecked<2>();
  std::vector<ZAtom> out(static_cast<std::size_t>(arr.shape(0)));
  for (py::ssize_t i = 0; i < arr.shape(0); ++i) {
    auto& z = out[static_cast<std::size_t>(i)];
    z.s = a(i, 0);
    z.traits = {{a(i, 1), a(i, 2)}, a(i, 3), a(i, 4)};
  }
  return out;
}

std::vector<double> to_vector(const Array& arr) {
  return {arr.data(), arr.data() + arr.size()};
}

SampleStream stream_from_name(const std::string& name) {
  if (name == "population") return SampleStream::population;
  if (name == "cloud") return SampleStream::cloud;
  if (name == "training") return SampleStream::training;
  if (name == "testing") return SampleStream::testing;
  if (name == "probes") return SampleStream::probes;
  if (name == "reference") return SampleStream::reference;
  throw ConfigError("unknown sample stream '" + name + "'");
}

ExperimentConfig with_seed(ExperimentConfig cfg, std::optional<std::uint64_t> seed) {
  if (seed) {
    cfg.seed = *seed;
    cfg.mu0.seed = *seed;
    cfg.train.seed = *seed;
  }
  return cfg;
}

py::dict report_to_dict(const DistanceReport& r) {
  py::dict d;
  d["N"] = r.N;
  d["t"] = r.t;
  d["w1_size"] = r.w1_size;
  d["w1_full"] = r.w1_full;
  d["flow_gap"] = r.flow_gap;
  d["bound_value"] = r.bound_value;
  return d;
}

}  // namespace

PYBIND11_MODULE(_plantmf, m) {
  m.doc() = "Spatially structured plant growth: particle system and mean-field scheme";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);

  py::class_<ModelParams>(m, "ModelParams")
      .def(py::init([](double s_m, double R_M, double sigma_x, double sigma_r) {
             ModelParams p{s_m, R_M, sigma_x, sigma_r};
             p.validate();
             return p;
           }),
           py::arg("s_m") = 0.05, py::arg("R_M") = 3.0, py::arg("sigma_x") = 0.5,
           py::arg("sigma_r") = 1.32)
      .def_readonly("s_m", &ModelParams::s_m)
      .def_readonly("R_M", &ModelParams::R_M)
      .def_readonly("sigma_x", &ModelParams::sigma_x)
      .def_readonly("sigma_r", &ModelParams::sigma_r)
      .def_property_readonly("max_size", &ModelParams::max_size)
      .def("__repr__", [](const ModelParams& p) {
        return "ModelParams(s_m=" + format_double(p.s_m) + ", R_M=" + format_double(p.R_M) +
               ", sigma_x=" + format_double(p.sigma_x) + ", sigma_r=" + format_double(p.sigma_r) +
               ")";
      });

  py::class_<ExperimentConfig>(m, "Config")
      .def(py::init([](const std::string& text) { return parse_config(text); }),
           py::arg("text") = "", "Parse key = value configuration text over the defaults.")
      .def_property_readonly("params", [](const ExperimentConfig& c) { return c.params; })
      .def_property_readonly("seed", [](const ExperimentConfig& c) { return c.seed; })
      .def_property_readonly("config_hash", [](const ExperimentConfig& c) { return hex64(c.hash()); })
      .def("canonical", &ExperimentConfig::canonical);

  m.def(
      "competition_potential",
      [](double s, double s_prime, double dist, const ModelParams& p) {
        return competition_potential(p, s, s_prime, dist);
      },
      py::arg("s"), py::arg("s_prime"), py::arg("dist"), py::arg("params") = ModelParams{});

  m.def(
      "gompertz",
      [](double s0, double t, double S, double gamma, const ModelParams& p) {
        return gompertz_closed_form({{0.0, 0.0}, S, gamma}, p, s0, t);
      },
      py::arg("s0"), py::arg("t"), py::arg("S"), py::arg("gamma"),
      py::arg("params") = ModelParams{}, "Uncoupled growth curve at time t.");

  m.def("feature_count", &feature_count, py::arg("k"), py::arg("d"));
  m.def(
      "polynomial_features",
      [](const Array& x, std::size_t d) { return polynomial_features(to_vector(x), d); },
      py::arg("x"), py::arg("d"));

  m.def(
      "sample_mu0",
      [](const ExperimentConfig& cfg, std::size_t n, std::optional<std::uint64_t> seed,
         const std::string& stream, bool training_law) {
        const auto c = with_seed(cfg, seed);
        c.require_seed();
        const auto mu0 = training_law ? c.training_mu0() : c.mu0;
        return samples_to_array(sample_mu0(mu0, n, stream_from_name(stream)));
      },
      py::arg("config"), py::arg("n"), py::arg("seed") = py::none(),
      py::arg("stream") = "population", py::arg("training_law") = false,
      "Draw n initial plants as rows (s0, x1, x2, S, gamma).");

  m.def(
      "simulate",
      [](const ExperimentConfig& cfg, std::optional<std::size_t> n,
         std::optional<std::uint64_t> seed) {
        const auto c = with_seed(cfg, seed);
        c.require_seed();
        const auto xs = sample_mu0(c.mu0, n.value_or(c.simulate_n));
        Trajectory traj = [&] {
          py::gil_scoped_release release;
          return integrate(c.params, PopulationState::from_samples(xs), c.solver);
        }();
        Array sizes({static_cast<py::ssize_t>(traj.size()),
                     static_cast<py::ssize_t>(traj.population())});
        Array index({static_cast<py::ssize_t>(traj.size()),
                     static_cast<py::ssize_t>(traj.population())});
        auto a = sizes.mutable_unchecked<2>();
        auto b = index.mutable_unchecked<2>();
        for (std::size_t k = 0; k < traj.size(); ++k) {
          const auto& st = traj.states()[k];
          const auto ci = competition_indices(c.params, st);
          for (std::size_t i = 0; i < st.size(); ++i) {
            a(static_cast<py::ssize_t>(k), static_cast<py::ssize_t>(i)) = st.sizes[i];
            b(static_cast<py::ssize_t>(k), static_cast<py::ssize_t>(i)) = ci[i];
          }
        }
        py::dict out;
        out["times"] = Array(static_cast<py::ssize_t>(traj.size()), traj.times().data());
        out["sizes"] = sizes;
        out["competition"] = index;
        out["samples"] = samples_to_array(xs);
        return out;
      },
      py::arg("config"), py::arg("n") = py::none(), py::arg("seed") = py::none(),
      "Integrate the coupled system; sizes and competition are (snapshots, N).");

  py::class_<MeanFieldModel>(m, "MeanFieldModel")
      .def_static("from_json", &parse_model, py::arg("text"))
      .def_static("load", [](const std::string& path) { return load_model(path); }, py::arg("path"))
      .def("to_json", [](const MeanFieldModel& mf) { return dump(to_json(mf)); })
      .def_readonly("dt", &MeanFieldModel::dt)
      .def_readonly("T", &MeanFieldModel::T)
      .def_property_readonly("stage_count", [](const MeanFieldModel& mf) { return mf.stages.size(); })
      .def_property_readonly("r2_train",
                             [](const MeanFieldModel& mf) {
                               std::vector<double> v;
                               for (const auto& s : mf.stages) v.push_back(s.r2_train);
                               return v;
                             })
      .def_property_readonly("r2_test",
                             [](const MeanFieldModel& mf) {
                               std::vector<double> v;
                               for (const auto& s : mf.stages) v.push_back(s.r2_test);
                               return v;
                             })
      .def(
          "potential",
          [](const MeanFieldModel& mf, std::size_t k, double s, double x1, double x2, double S,
             double gamma) {
            if (k >= mf.stages.size()) throw DomainError("stage index out of range");
            return stage_potential_eval(mf.stages[k], s, {{x1, x2}, S, gamma});
          },
          py::arg("k"), py::arg("s"), py::arg("x1"), py::arg("x2"), py::arg("S"),
          py::arg("gamma"), "Fitted competition index of stage k, clamped to [0, 1].")
      .def(
          "flow",
          [](const MeanFieldModel& mf, double t, double s0, double x1, double x2, double S,
             double gamma) { return flow_eval(mf, t, s0, {{x1, x2}, S, gamma}); },
          py::arg("t"), py::arg("s0"), py::arg("x1"), py::arg("x2"), py::arg("S"),
          py::arg("gamma"), "Mean-field size at time t of a plant started at s0.")
      .def(
          "surface",
          [](const MeanFieldModel& mf, const std::string& grid) {
            const auto rows = potential_surface(mf, GridSpec::parse(grid));
            Array out({static_cast<py::ssize_t>(rows.size()), py::ssize_t{6}});
            auto a = out.mutable_unchecked<2>();
            for (std::size_t i = 0; i < rows.size(); ++i) {
              const auto ii = static_cast<py::ssize_t>(i);
              a(ii, 0) = rows[i].x1;
              a(ii, 1) = rows[i].x2;
              a(ii, 2) = rows[i].S_bar;
              a(ii, 3) = rows[i].gamma_bar;
              a(ii, 4) = rows[i].s_T;
              a(ii, 5) = rows[i].in_range ? 1.0 : 0.0;
            }
            return out;
          },
          py::arg("grid"),
          "Rows (x1, x2, S_bar, gamma_bar, s_T, in_range) on 'x1min,x1max,x2min,x2max,steps'.");

  m.def(
      "train",
      [](const ExperimentConfig& cfg, std::optional<std::uint64_t> seed) {
        const auto c = with_seed(cfg, seed);
        c.require_seed();
        py::gil_scoped_release release;
        return train(c.training_mu0(), c.params, c.train);
      },
      py::arg("config"), py::arg("seed") = py::none(), "Fit the mean-field potential stages.");

  m.def(
      "converge",
      [](const ExperimentConfig& cfg, const MeanFieldModel* model,
         std::optional<std::vector<std::size_t>> n_list, std::optional<std::uint64_t> seed) {
        auto c = with_seed(cfg, seed);
        c.require_seed();
        Mu0Config mu0 = model ? model->mu0 : c.mu0;
        mu0.seed = *c.seed;
        auto opts = c.convergence_options(mu0);
        if (n_list) opts.N_list = *n_list;
        std::vector<DistanceReport> rows;
        {
          py::gil_scoped_release release;
          rows = convergence_experiment(mu0, c.params, model, opts);
        }
        py::list out;
        for (const auto& r : rows) out.append(report_to_dict(r));
        return out;
      },
      py::arg("config"), py::arg("model") = nullptr, py::arg("n_list") = py::none(),
      py::arg("seed") = py::none(),
      "Distances between particle and mean-field laws for each N and t.");

  m.def(
      "w1_sorted_1d",
      [](const Array& a, const Array& b) { return w1_sorted_1d(to_vector(a), to_vector(b)); },
      py::arg("a"), py::arg("b"));

  m.def(
      "w1_matching",
      [](const Array& a, const Array& b, double s_m, double ell, double tau_r) {
        const ZMetricWeights w{s_m, ell, tau_r};
        w.validate();
        return w1_matching(array_to_atoms(a), array_to_atoms(b), w);
      },
      py::arg("a"), py::arg("b"), py::arg("s_m") = 0.05, py::arg("ell") = 1.0,
      py::arg("tau_r") = 0.5, "Exact W1 between equal-size empirical measures on (s, x, S, gamma).");
}
