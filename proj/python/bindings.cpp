#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "lowrank/bench.hpp"
#include "lowrank/factorspace.hpp"
#include "lowrank/link.hpp"
#include "lowrank/models.hpp"
#include "lowrank/solver.hpp"
#include "lowrank/synthgen.hpp"

namespace py = pybind11;
using namespace lowrank;

namespace {

Observations to_observations(const py::handle& obj) {
  if (py::isinstance<LinearMeasurements>(obj)) return obj.cast<LinearMeasurements>();
  if (py::isinstance<SampledEntries>(obj)) return obj.cast<SampledEntries>();
  if (py::isinstance<BinaryEntries>(obj)) return obj.cast<BinaryEntries>();
  throw py::type_error("expected LinearMeasurements, SampledEntries or BinaryEntries");
}

LinkFunction make_link(const std::string& name, double scale) {
  return parse_link_kind(name) == LinkKind::Logistic ? LinkFunction::logistic()
                                                     : LinkFunction::probit(scale);
}

py::dict trace_record(const TraceRecord& r) {
  py::dict d;
  d["iter"] = r.iter;
  d["objective"] = r.objective;
  d["balance"] = r.balance;
  if (r.rel_change) d["rel_change"] = *r.rel_change;
  if (r.distance) d["distance"] = *r.distance;
  if (r.sq_rel_error) d["sq_rel_error"] = *r.sq_rel_error;
  return d;
}

py::dict trial_row(const TrialRow& row) {
  py::dict d;
  d["trial_id"] = row.trial_id;
  d["seed"] = row.seed;
  d["n_obs"] = row.n_obs;
  d["iterations"] = row.iterations;
  d["sq_rel_error"] = row.sq_rel_error;
  d["normalized_error"] = row.normalized_error;
  d["success"] = row.success;
  d["status"] = to_string(row.status);
  return d;
}

}  // namespace

PYBIND11_MODULE(_lowrank, m) {
  m.doc() = "Factored gradient descent for low-rank matrix estimation";

  py::register_exception<DimensionError>(m, "DimensionError", PyExc_ValueError);
  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);

  m.def(
      "rank_r_truncate",
      [](const Matrix& x, Index r) {
        TruncatedSvd s = rank_r_truncate(x, r);
        return py::make_tuple(s.u, s.sigma, s.v);
      },
      py::arg("x"), py::arg("r"), "Best rank-r approximation as (u, sigma, v).");

  m.def(
      "balanced_split",
      [](const Matrix& u, const Vector& sigma, const Matrix& v) {
        FactorPair z = balanced_split(u, sigma, v);
        return py::make_tuple(z.u, z.v);
      },
      py::arg("u"), py::arg("sigma"), py::arg("v"));

  m.def(
      "procrustes_align",
      [](const Matrix& u, const Matrix& v, const Matrix& u_star, const Matrix& v_star) {
        AlignmentResult a = procrustes_align(lift(u, v), lift(u_star, v_star));
        return py::make_tuple(a.rotation, a.distance);
      },
      py::arg("u"), py::arg("v"), py::arg("u_star"), py::arg("v_star"),
      "Optimal orthogonal R and min_R ||Z - Z* R||_F.");

  m.def(
      "balance_penalty",
      [](const Matrix& u, const Matrix& v) { return balance_penalty(lift(u, v)); },
      py::arg("u"), py::arg("v"));

  m.def("project_row_norm", &project_row_norm, py::arg("a"), py::arg("gamma"));

  m.def(
      "link_bounds",
      [](const std::string& link, double alpha, double scale) {
        LinkBounds b = link_bounds(make_link(link, scale), alpha);
        py::dict d;
        d["mu_alpha"] = b.mu_alpha;
        d["l_alpha"] = b.l_alpha;
        d["gamma_alpha"] = b.gamma_alpha;
        return d;
      },
      py::arg("link") = "logistic", py::arg("alpha") = 1.0, py::arg("scale") = 0.18);

  py::class_<GroundTruth>(m, "GroundTruth")
      .def_readonly("x_star", &GroundTruth::x_star)
      .def_readonly("sigma", &GroundTruth::sigma)
      .def_property_readonly("u_star", [](const GroundTruth& g) { return g.z_star.u; })
      .def_property_readonly("v_star", [](const GroundTruth& g) { return g.z_star.v; })
      .def_property_readonly("kappa", &GroundTruth::kappa);

  py::class_<LinearMeasurements>(m, "LinearMeasurements")
      .def(py::init([](const std::vector<Matrix>& mats, const Vector& y) {
             return LinearMeasurements::from_matrices(mats, y);
           }),
           py::arg("matrices"), py::arg("y"))
      .def_readonly("d1", &LinearMeasurements::d1)
      .def_readonly("d2", &LinearMeasurements::d2)
      .def_readonly("y", &LinearMeasurements::y)
      .def_property_readonly("count", &LinearMeasurements::count);

  py::class_<SampledEntries>(m, "SampledEntries")
      .def(py::init(&SampledEntries::make), py::arg("d1"), py::arg("d2"), py::arg("rows"),
           py::arg("cols"), py::arg("values"), py::arg("noise_level") = 0.0)
      .def_readonly("p", &SampledEntries::p)
      .def_property_readonly("count", &SampledEntries::count);

  py::class_<BinaryEntries>(m, "BinaryEntries")
      .def(py::init([](Index d1, Index d2, std::vector<Index> rows, std::vector<Index> cols,
                       std::vector<std::int8_t> signs, const std::string& link, double scale) {
             return BinaryEntries::make(d1, d2, std::move(rows), std::move(cols),
                                        std::move(signs), make_link(link, scale));
           }),
           py::arg("d1"), py::arg("d2"), py::arg("rows"), py::arg("cols"), py::arg("signs"),
           py::arg("link") = "logistic", py::arg("scale") = 0.18)
      .def_readonly("p", &BinaryEntries::p)
      .def_property_readonly("count", &BinaryEntries::count);

  m.def(
      "gen_ground_truth",
      [](Index d1, Index d2, Index r, std::uint64_t seed, const std::string& scheme, double alpha) {
        return gen_ground_truth(d1, d2, r, parse_factor_scheme(scheme), RngStream{seed, 0}, alpha);
      },
      py::arg("d1"), py::arg("d2"), py::arg("r"), py::arg("seed"),
      py::arg("scheme") = "gaussian", py::arg("alpha") = 1.0);

  m.def(
      "gen_regression",
      [](const GroundTruth& t, Index n, const std::string& noise, std::uint64_t seed) {
        return gen_regression(t, n, NoiseSpec::parse(noise), RngStream{seed, 0});
      },
      py::arg("truth"), py::arg("n"), py::arg("noise") = "none", py::arg("seed") = 0);

  m.def(
      "gen_completion",
      [](const GroundTruth& t, double p, const std::string& noise, std::uint64_t seed) {
        return gen_completion(t, p, NoiseSpec::parse(noise), RngStream{seed, 0});
      },
      py::arg("truth"), py::arg("p"), py::arg("noise") = "none", py::arg("seed") = 0);

  m.def(
      "gen_onebit",
      [](const GroundTruth& t, double p, const std::string& link, double scale,
         std::uint64_t seed) {
        return gen_onebit(t, p, make_link(link, scale), RngStream{seed, 0});
      },
      py::arg("truth"), py::arg("p"), py::arg("link") = "probit", py::arg("scale") = 0.18,
      py::arg("seed") = 0);

  m.def(
      "loss", [](const Matrix& x, const py::object& obs) { return loss(x, to_observations(obs)); },
      py::arg("x"), py::arg("obs"));
  m.def(
      "gradient",
      [](const Matrix& x, const py::object& obs) { return gradient(x, to_observations(obs)); },
      py::arg("x"), py::arg("obs"));

  m.def(
      "initialize",
      [](const py::object& obs, Index rank, int iters, std::optional<double> tau) {
        InitConfig cfg;
        cfg.rank = rank;
        cfg.iters = iters;
        cfg.tau = tau;
        InitResult res = initialize(to_observations(obs), cfg);
        return py::make_tuple(res.z.u, res.z.v);
      },
      py::arg("obs"), py::arg("rank"), py::arg("iters") = 3, py::arg("tau") = py::none());

  m.def(
      "run_gd",
      [](const Matrix& u0, const Matrix& v0, const py::object& obs, std::optional<double> eta,
         int max_iters, std::optional<double> radius, const GroundTruth* truth) {
        SolverConfig cfg;
        cfg.eta = eta;
        cfg.max_iters = max_iters;
        cfg.projection_radius = radius;
        const Observations o = to_observations(obs);
        RunResult res;
        {
          py::gil_scoped_release release;
          res = run_gd(lift(u0, v0), o, cfg, truth);
        }
        py::dict out;
        out["u"] = res.z.u;
        out["v"] = res.z.v;
        out["status"] = to_string(res.trace.status);
        out["iterations"] = res.trace.iterations;
        out["eta"] = res.trace.eta;
        py::list trace;
        for (const auto& r : res.trace.records) trace.append(trace_record(r));
        out["trace"] = trace;
        return out;
      },
      py::arg("u0"), py::arg("v0"), py::arg("obs"), py::arg("eta") = py::none(),
      py::arg("max_iters") = 500, py::arg("radius") = py::none(), py::arg("truth") = nullptr);

  py::class_<ExperimentConfig>(m, "ExperimentConfig")
      .def(py::init([](const std::map<std::string, std::string>& settings) {
             ExperimentConfig c;
             apply_settings(c, settings);
             c.validate();
             return c;
           }),
           py::arg("settings"), "Build from key=value settings (CLI flag names as keys).")
      .def_readonly("trials", &ExperimentConfig::trials)
      .def_readonly("base_seed", &ExperimentConfig::base_seed);

  m.def(
      "run_experiment",
      [](const ExperimentConfig& c) {
        std::vector<TrialRow> rows;
        {
          py::gil_scoped_release release;
          rows = run_experiment(c);
        }
        py::list out;
        for (const auto& r : rows) out.append(trial_row(r));
        return out;
      },
      py::arg("config"));
}
