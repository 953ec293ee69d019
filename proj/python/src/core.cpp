#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "embexp/pipeline.hpp"
#include "embexp/util.hpp"

namespace py = pybind11;
using namespace embexp;

namespace {

// Pipeline configs come in as a config file path plus optional overrides.
PipelineConfig make_config(const std::optional<std::filesystem::path>& config, std::optional<std::uint64_t> seed,
                           std::optional<unsigned> jobs, std::optional<std::filesystem::path> out) {
  auto cfg = config ? load_config(*config) : default_config();
  if (seed) cfg.seed = *seed;
  if (jobs) cfg.jobs = *jobs;
  if (out) cfg.out = *out;
  return cfg;
}

LoraAdapter adapter_from(const Matrix& B, const Matrix& A, double scaling) {
  LoraAdapter a;
  a.B = B;
  a.A = A;
  a.scaling = scaling;
  return a;
}

FisherDiag fisher_from(const Vector& values) { return {values, 1}; }

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Household experience pipeline, metrics and EWC-LoRA penalties";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<StageError>(m, "StageError", PyExc_RuntimeError);
  py::register_exception<OracleError>(m, "OracleError", PyExc_RuntimeError);
  py::register_exception<MetricError>(m, "MetricError", PyExc_ValueError);
  py::register_exception<EwcError>(m, "EwcError", PyExc_ValueError);

  m.def("rouge_tokens", &rouge_tokens, py::arg("text"));
  m.def("rouge_l", &rouge_l, py::arg("candidate"), py::arg("reference"));
  m.def(
      "lcs_normalized",
      [](const std::vector<std::string>& pred, const std::vector<std::string>& gold) {
        return lcs_normalized(pred, gold);
      },
      py::arg("pred"), py::arg("gold"));
  m.def("parse_path", &parse_path, py::arg("text"));
  m.def(
      "score_file",
      [](const std::string& predictions, const std::string& eval, unsigned jobs) {
        std::vector<std::string> out;
        for (const auto& r : score_file(predictions, eval, jobs)) out.push_back(to_json(r).dump());
        return out;
      },
      py::arg("predictions"), py::arg("eval"), py::arg("jobs") = 1,
      "Per-task reports as JSON strings, in task order.");

  m.def(
      "ewc_penalty",
      [](const Vector& theta, const Vector& theta_star, const Vector& fisher, double lambda) {
        return ewc_penalty(theta, theta_star, fisher_from(fisher), lambda);
      },
      py::arg("theta"), py::arg("theta_star"), py::arg("fisher"), py::arg("lam"));
  m.def(
      "ewc_lora_penalty",
      [](const Matrix& B, const Matrix& A, double scaling, const Vector& fisher, double lambda) {
        return ewc_lora_penalty(adapter_from(B, A, scaling), fisher_from(fisher), lambda);
      },
      py::arg("B"), py::arg("A"), py::arg("scaling"), py::arg("fisher"), py::arg("lam"));
  m.def(
      "ewc_lora_penalty_grad",
      [](const Matrix& B, const Matrix& A, double scaling, const Vector& fisher, double lambda) {
        const auto g = ewc_lora_penalty_grad(adapter_from(B, A, scaling), fisher_from(fisher), lambda);
        return py::make_tuple(g.dB, g.dA);
      },
      py::arg("B"), py::arg("A"), py::arg("scaling"), py::arg("fisher"), py::arg("lam"));
  m.def(
      "lora_reparam",
      [](const Matrix& w_star, const Matrix& B, const Matrix& A, double scaling) {
        return lora_reparam(w_star, adapter_from(B, A, scaling));
      },
      py::arg("w_star"), py::arg("B"), py::arg("A"), py::arg("scaling"),
      "Row-major flattening of W* + scaling * B @ A.");

  m.def(
      "toy_continual_demo",
      [](std::uint64_t seed, const std::vector<double>& lambdas) {
        DemoConfig cfg;
        cfg.seed = seed;
        return to_json(toy_continual_demo(cfg, lambdas)).dump();
      },
      py::arg("seed") = 0, py::arg("lambdas") = std::vector<double>{0.0, 0.5, 2.0}, "Demo report as JSON.");

  m.def("artifact_tree_hash", &artifact_tree_hash, py::arg("dir"));
  m.def("fnv1a64_hex", [](const py::bytes& data) { return hex64(fnv1a64(std::string(data))); }, py::arg("data"));

  auto with_log = [](auto&& fn) {
    std::ostringstream log;
    fn(log);
    return log.str();
  };
  m.def(
      "run_collect",
      [with_log](std::optional<std::filesystem::path> config, std::optional<std::uint64_t> seed,
                 std::optional<unsigned> jobs, std::optional<std::filesystem::path> out) {
        const auto cfg = make_config(config, seed, jobs, out);
        return with_log([&](std::ostream& log) { cmd_collect(cfg, log); });
      },
      py::arg("config") = py::none(), py::arg("seed") = py::none(), py::arg("jobs") = py::none(),
      py::arg("out") = py::none(), "Runs the collect stage; returns its log.");
  m.def(
      "run_compile",
      [with_log](std::optional<std::filesystem::path> config, std::optional<std::uint64_t> seed,
                 std::optional<unsigned> jobs, std::optional<std::filesystem::path> out) {
        const auto cfg = make_config(config, seed, jobs, out);
        return with_log([&](std::ostream& log) { cmd_compile(cfg, log); });
      },
      py::arg("config") = py::none(), py::arg("seed") = py::none(), py::arg("jobs") = py::none(),
      py::arg("out") = py::none(), "Runs the compile stage; returns its log.");
  m.def(
      "run_validate",
      [with_log](std::optional<std::filesystem::path> config, std::optional<std::filesystem::path> out) {
        const auto cfg = make_config(config, std::nullopt, std::nullopt, out);
        return with_log([&](std::ostream& log) { cmd_validate(cfg, log); });
      },
      py::arg("config") = py::none(), py::arg("out") = py::none());
}
