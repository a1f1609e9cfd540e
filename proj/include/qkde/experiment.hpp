#pragma once

// End-to-end runs: build kernel and problem from a config, train, evaluate, report.

#include <string>
#include <utility>
#include <vector>

#include "qkde/config.hpp"
#include "qkde/kernels.hpp"
#include "qkde/problems.hpp"
#include "qkde/table_io.hpp"

namespace qkde::app {

struct SolutionRow {
    double x = 0.0;
    double f = 0.0;
    double f_prime = 0.0;
    double residual = 0.0;  // DE residual, or f - reference for regression
    double reference = 0.0;
    double norm_error = 0.0;
};

struct SolveReport {
    std::vector<SolutionRow> rows;
    std::vector<double> history;
    /// Ordered key/value results, without the config echo.
    std::vector<std::pair<std::string, std::string>> summary;
    double max_norm_error = 0.0;
    double final_loss = 0.0;
    double wall_time_s = 0.0;
    ExperimentConfig config;
    /// Filled only when requested: the SVR linear system matrix, the SVR residual Jacobian at
    /// the solution, or the MMR loss Hessian at the fitted weights.
    Matrix system_matrix;
};

/// Quantum: `layers` repetitions of [HEA block; Rx encoder with c_q = q / divisor]. RBF otherwise.
[[nodiscard]] kernels::KernelSpec build_kernel(const ExperimentConfig& cfg);

/// Training points: dataset abscissae for regression, otherwise `count` uniform points on [start, end].
[[nodiscard]] std::vector<double> training_grid(const ExperimentConfig& cfg);

/// `density` times denser uniform grid over the training interval; contains the training points
/// when they are uniform.
[[nodiscard]] std::vector<double> dense_grid(const std::vector<double>& train, int density);

/// Piecewise-linear interpolation of a table (clamped outside its range).
[[nodiscard]] double interpolate(const std::vector<DataPoint>& table, double x);

/// Runs the configured experiment. Solver failures propagate as NumericalError.
[[nodiscard]] SolveReport run_experiment(const ExperimentConfig& cfg, bool dump_system = false);

/// Writes solution.csv, loss.csv and summary.txt into `dir`.
void write_report(const SolveReport& report, const std::string& dir);

/// summary.txt text: results, then the config echo under "config.".
[[nodiscard]] std::string summary_text(const SolveReport& report);

/// Reference solution on the dense grid (data for regression) as CSV `x,reference,reference_prime`.
[[nodiscard]] std::string reference_csv(const ExperimentConfig& cfg);

/// Shot-estimator scan as CSV `x,y,exact,estimator,shots,estimate,abs_error`.
[[nodiscard]] std::string kernel_scan_csv(const ExperimentConfig& cfg);

/// Gram blocks for every order up to gram.max_order as CSV `n,m,i,j,value`.
[[nodiscard]] std::string gram_dump_csv(const ExperimentConfig& cfg);

/// Dense matrix as CSV `row,col,value`.
[[nodiscard]] std::string matrix_csv(const Matrix& m);

}  // namespace qkde::app
