// Python bindings: kernels, shot estimators, MMR regression and whole-experiment runs.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <string>
#include <vector>

#include "qkde/config.hpp"
#include "qkde/error.hpp"
#include "qkde/experiment.hpp"
#include "qkde/kernels.hpp"
#include "qkde/mmr.hpp"
#include "qkde/problems.hpp"
#include "qkde/shots.hpp"

namespace py = pybind11;
using namespace qkde;

namespace {

kernels::DerivMethod method_from(const std::string& s) {
    if (s == "insertion") return kernels::DerivMethod::insertion;
    if (s == "shift") return kernels::DerivMethod::shift;
    if (s == "finite_diff") return kernels::DerivMethod::finite_diff;
    throw ConfigError("derivative method must be insertion, shift or finite_diff, got '" + s + "'");
}

py::dict report_dict(const app::SolveReport& r) {
    Matrix table(static_cast<Eigen::Index>(r.rows.size()), 6);
    for (std::size_t i = 0; i < r.rows.size(); ++i) {
        const auto& row = r.rows[i];
        table.row(static_cast<Eigen::Index>(i)) << row.x, row.f, row.f_prime, row.residual, row.reference, row.norm_error;
    }
    py::dict summary;
    for (const auto& [k, v] : r.summary) summary[py::str(k)] = v;
    py::dict out;
    out["columns"] = std::vector<std::string>{"x", "f", "f_prime", "residual", "reference", "norm_error"};
    out["solution"] = table;
    out["history"] = r.history;
    out["summary"] = summary;
    out["max_norm_error"] = r.max_norm_error;
    out["final_loss"] = r.final_loss;
    out["summary_text"] = app::summary_text(r);
    return out;
}

app::ExperimentConfig parse_config(const std::string& text) { return app::experiment_from(app::ConfigFile::parse(text)); }

}  // namespace

PYBIND11_MODULE(_qkde, m) {
    m.doc() = "Quantum-kernel solver for regression and differential equations";

    auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
    py::register_exception<UsageError>(m, "UsageError", base.ptr());
    py::register_exception<NumericalError>(m, "NumericalError", base.ptr());
    py::register_exception<IoError>(m, "IoError", base.ptr());
    py::register_exception<DataError>(m, "DataError", base.ptr());

    py::class_<kernels::KernelSpec>(m, "Kernel")
        .def_property_readonly("is_quantum", &kernels::KernelSpec::is_quantum)
        .def("__call__", [](const kernels::KernelSpec& k, double x, double y) { return kernels::kernel_value(k, x, y); })
        .def("__repr__", [](const kernels::KernelSpec& k) {
            if (!k.is_quantum()) return "Kernel(rbf, sigma=" + app::format_number(k.sigma()) + ")";
            return "Kernel(quantum, qubits=" + std::to_string(k.feature_map().qubit_count) + ")";
        });

    m.def(
        "quantum_kernel",
        [](int qubits, int layers, int hea_depth, std::uint64_t hea_seed, double divisor) {
            return kernels::KernelSpec::quantum(qsim::layered_feature_map(qubits, layers, hea_depth, hea_seed, divisor));
        },
        py::arg("qubits") = 8, py::arg("layers") = 2, py::arg("hea_depth") = 5, py::arg("hea_seed") = 1234,
        py::arg("encode_coeff_divisor") = 2.0, "Layered feature map: [HEA block; Rx(c_q x)] repeated, c_q = q / divisor.");
    m.def(
        "product_kernel",
        [](const std::vector<double>& coeffs) { return kernels::KernelSpec::quantum(qsim::product_feature_map(coeffs)); },
        py::arg("coefficients"), "Entangler-free map of one Rx(c_q x) per qubit.");
    m.def("rbf_kernel", &kernels::KernelSpec::rbf, py::arg("sigma"));

    m.def("kernel_value", &kernels::kernel_value, py::arg("kernel"), py::arg("x"), py::arg("y"));
    m.def(
        "kernel_derivative",
        [](const kernels::KernelSpec& k, int n, int mm, double x, double y, const std::string& method) {
            return kernels::kernel_derivative(k, {n, mm}, x, y, method_from(method));
        },
        py::arg("kernel"), py::arg("n"), py::arg("m"), py::arg("x"), py::arg("y"), py::arg("method") = "insertion",
        "d^(n+m) k(x, y) / dx^n dy^m.");
    m.def(
        "product_map_closed_form",
        [](const std::vector<double>& c, double x, double y, int n, int mm) {
            return kernels::product_map_closed_form(c, x, y, {n, mm});
        },
        py::arg("coefficients"), py::arg("x"), py::arg("y"), py::arg("n") = 0, py::arg("m") = 0);
    m.def(
        "gram",
        [](const kernels::KernelSpec& k, const std::vector<double>& grid, int n, int mm) {
            return kernels::gram_block(k, grid, {n, mm});
        },
        py::arg("kernel"), py::arg("grid"), py::arg("n") = 0, py::arg("m") = 0,
        "Matrix with entry (i, j) = d^(n+m) k(x_j, x_i) / dx^n dy^m.");

    m.def(
        "estimate_kernel",
        [](const kernels::KernelSpec& k, double x, double y, std::int64_t shots, std::uint64_t seed,
           const std::string& estimator) {
            return shots::estimate_kernel(k, x, y, {shots, seed, shots::estimator_from_string(estimator)});
        },
        py::arg("kernel"), py::arg("x"), py::arg("y"), py::arg("shots"), py::arg("seed") = 7,
        py::arg("estimator") = "naive");

    m.def(
        "fit_regression",
        [](const kernels::KernelSpec& k, const std::vector<double>& xs, const Vector& f, int epochs) {
            numerics::OptimizerConfig cfg;
            cfg.epochs = epochs;
            const auto fit = mmr::fit_mmr(mmr::MMRProblem::regression(xs, f), k, {}, cfg);
            py::dict out;
            out["alpha"] = fit.model.alpha;
            out["bias"] = fit.model.bias;
            out["history"] = fit.optimization.history;
            out["converged"] = fit.optimization.converged;
            return out;
        },
        py::arg("kernel"), py::arg("x"), py::arg("f"), py::arg("epochs") = 3,
        "MMR regression with Newton; anchors at the data points.");
    m.def(
        "predict",
        [](const kernels::KernelSpec& k, const std::vector<double>& anchors, const Vector& alpha, double bias,
           const std::vector<double>& xs, int deriv) {
            return mmr::mmr_predict(mmr::MMRModel{k, anchors, alpha, bias}, xs, deriv);
        },
        py::arg("kernel"), py::arg("anchors"), py::arg("alpha"), py::arg("bias"), py::arg("x"), py::arg("deriv") = 0,
        "b + sum_i alpha_i k(x, anchor_i), or its deriv-th derivative.");

    m.def(
        "reference_solution",
        [](const std::string& problem, const std::vector<double>& grid, const std::map<std::string, double>& params) {
            const auto r = app::reference_solution(app::make_problem(problem, params), grid);
            py::dict out;
            out["x"] = r.x;
            out["f"] = r.f;
            out["f_prime"] = r.df;
            return out;
        },
        py::arg("problem"), py::arg("grid"), py::arg("params") = std::map<std::string, double>{});
    m.def("problem_names", &app::problem_names);

    m.def(
        "run_config_text", [](const std::string& text) { return report_dict(app::run_experiment(parse_config(text))); },
        py::arg("text"), "Runs an experiment from config text; returns solution table, history and summary.");
    m.def(
        "run_config_file",
        [](const std::string& path) { return report_dict(app::run_experiment(app::load_experiment(path))); },
        py::arg("path"));
    m.def(
        "canonical_config", [](const std::string& text) { return app::to_config_text(parse_config(text)); },
        py::arg("text"), "Config text with every key spelled out, defaults included.");
}
