#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "hmmforget/cli.hpp"
#include "hmmforget/contraction.hpp"
#include "hmmforget/errors.hpp"
#include "hmmforget/model_io.hpp"
#include "hmmforget/segmentation.hpp"

namespace py = pybind11;
using namespace hmmforget;

namespace {

py::dict cluster_dict(const Cluster& c) {
  py::dict d;
  d["states"] = c.states;
  d["common_support"] = c.common_support;
  d["eps_lower"] = c.eps_lower;
  d["density_ceiling"] = c.density_ceiling;
  d["r"] = c.primitivity_exponent ? py::cast(*c.primitivity_exponent) : py::none();
  d["rho"] = c.rho ? py::cast(*c.rho) : py::none();
  d["p_r"] = c.p_r ? py::cast(*c.p_r) : py::none();
  return d;
}

Cluster best_cluster(const HmmModel& m) {
  auto all = admissible_clusters(m);
  if (all.empty()) throw AssumptionAError("no cluster satisfies Assumption A");
  return all.front();
}

}  // namespace

PYBIND11_MODULE(_core, mod) {
  mod.doc() = "Forgetting and segmentation tools for finite hidden Markov models";
  mod.attr("__version__") = std::string(cli::kVersion);

  auto base = py::register_exception<Error>(mod, "Error");
  py::register_exception<ModelValidationError>(mod, "ModelValidationError", base.ptr());
  py::register_exception<DimensionMismatchError>(mod, "DimensionMismatchError", base.ptr());
  py::register_exception<AssumptionAError>(mod, "AssumptionAError", base.ptr());
  py::register_exception<ZeroLikelihoodError>(mod, "ZeroLikelihoodError", base.ptr());
  py::register_exception<ConfigParseError>(mod, "ConfigParseError", base.ptr());
  py::register_exception<IoError>(mod, "IoError", base.ptr());

  py::class_<HmmModel>(mod, "HmmModel")
      .def(py::init([](const Matrix& p, const Matrix& f, std::string name) {
             return build_model(p, f, std::move(name));
           }),
           py::arg("transition"), py::arg("emission"), py::arg("name") = "")
      // copies; the arrays do not alias the model
      .def_property_readonly("transition", [](const HmmModel& m) -> Matrix { return m.transition(); })
      .def_property_readonly("emission", [](const HmmModel& m) -> Matrix { return m.emission(); })
      .def_property_readonly("stationary", [](const HmmModel& m) -> Vector { return m.stationary(); })
      .def_property_readonly("name", &HmmModel::name)
      .def_property_readonly("num_states", &HmmModel::num_states)
      .def_property_readonly("num_symbols", &HmmModel::num_symbols)
      .def("to_json", [](const HmmModel& m) { return model_to_json(m); });

  mod.def("load_model", [](const std::string& path) { return load_model(path); });
  mod.def("parse_model_json", [](const std::string& text) { return parse_model_json(text); });
  mod.def("reverse_model", &reverse_model);

  mod.def("clusters", [](const HmmModel& m) {
    py::list out;
    for (const auto& c : detect_clusters(m)) {
      try {
        out.append(cluster_dict(verify_assumption_a(m, c)));
      } catch (const AssumptionAError&) {
        out.append(cluster_dict(c));
      }
    }
    return out;
  });
  mod.def("admissible_clusters", [](const HmmModel& m) {
    py::list out;
    for (const auto& c : admissible_clusters(m)) out.append(cluster_dict(c));
    return out;
  });

  mod.def(
      "simulate",
      [](const HmmModel& m, std::size_t length, std::int64_t origin, std::uint64_t seed) {
        auto p = simulate(m, length, origin, seed);
        return py::make_tuple(p.states, p.observations);
      },
      py::arg("model"), py::arg("length"), py::arg("origin") = 1, py::arg("seed") = 1);

  mod.def(
      "log_likelihood",
      [](const HmmModel& m, const std::vector<int>& x) {
        return log_likelihood(m, ObservationWindow{std::span<const int>(x), 1});
      },
      py::arg("model"), py::arg("x"));

  // rows are pi_t for t = first .. first + len(x) - 1
  mod.def(
      "smoothing",
      [](const HmmModel& m, const std::vector<int>& x, std::int64_t first) {
        Smoother s(m, {std::span<const int>(x), first});
        const auto vs = s.smoothing_vectors();
        Matrix out(static_cast<Eigen::Index>(vs.size()), m.num_states());
        for (std::size_t i = 0; i < vs.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = vs[i].probs.transpose();
        return out;
      },
      py::arg("model"), py::arg("x"), py::arg("first") = 1);

  mod.def(
      "forward_smoothing_matrix",
      [](const HmmModel& m, const std::vector<int>& x, std::int64_t k, std::int64_t first) {
        return Smoother(m, {std::span<const int>(x), first}).forward_smoothing_matrix(k).matrix;
      },
      py::arg("model"), py::arg("x"), py::arg("k"), py::arg("first") = 1);

  mod.def("tv_distance", &tv_distance);
  mod.def("dobrushin", &dobrushin);
  mod.def(
      "kappa",
      [](const HmmModel& m, const std::vector<int>& x) { return kappa(x, best_cluster(m)); },
      py::arg("model"), py::arg("x"));

  mod.def(
      "pmap",
      [](const HmmModel& m, const std::vector<int>& x, std::optional<Matrix> loss) {
        auto res = pmap_classify(m, x, loss ? LossMatrix(*loss) : LossMatrix::zero_one(m.num_states()));
        return py::make_tuple(res.labels, res.total_risk);
      },
      py::arg("model"), py::arg("x"), py::arg("loss") = py::none());
  mod.def(
      "viterbi", [](const HmmModel& m, const std::vector<int>& x) { return viterbi(m, x); },
      py::arg("model"), py::arg("x"));

  mod.def(
      "certified_margin",
      [](const HmmModel& m, double target) { return certified_margin(make_two_sided_context(m), target); },
      py::arg("model"), py::arg("target") = 1e-6);

  mod.def(
      "asymptotic_risk",
      [](const HmmModel& m, std::vector<std::size_t> n_grid, int replicates, std::uint64_t seed) {
        RiskConfig cfg;
        cfg.n_grid = std::move(n_grid);
        cfg.replicates = replicates;
        cfg.seed = seed;
        auto est = asymptotic_risk_estimate(m, LossMatrix::zero_one(m.num_states()), cfg);
        py::dict d;
        d["R_hat"] = est.risk_estimate;
        d["R_hat_ci"] = est.risk_ci;
        d["R_v_hat"] = est.viterbi_risk_estimate;
        d["R_v_hat_ci"] = est.viterbi_risk_ci;
        return d;
      },
      py::arg("model"), py::arg("n_grid") = std::vector<std::size_t>{1u << 10, 1u << 12},
      py::arg("replicates") = 16, py::arg("seed") = 1);
}
