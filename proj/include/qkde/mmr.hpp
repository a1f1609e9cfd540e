#pragma once

// Mixed-model regression: f(x) = b + sum_i alpha_i k(x, y_i), fitted by minimizing a
// data or differential-equation residual loss.

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "qkde/kernels.hpp"
#include "qkde/numerics.hpp"

namespace qkde::mmr {

struct MMRModel {
    kernels::KernelSpec kernel;
    std::vector<double> anchors;
    Vector alpha;
    double bias = 0.0;
};

/// Order-`deriv` x-derivative of the model; the bias only enters at deriv = 0.
/// Throws UsageError for deriv > 2 or mismatched alpha/anchors.
[[nodiscard]] double mmr_predict(const MMRModel& model, double x, int deriv = 0);
[[nodiscard]] Vector mmr_predict(const MMRModel& model, std::span<const double> xs, int deriv = 0);

/// Right-hand side g(x, f) of f' = g or f'' = g and its f-derivatives.
struct OdeFunctions {
    std::function<double(double, double)> g;
    std::function<double(double, double)> g_f;
    std::function<double(double, double)> g_ff;
};

enum class ProblemKind { regression, first_order, second_order };

struct MMRProblem {
    ProblemKind kind = ProblemKind::regression;
    std::vector<double> grid;
    Vector targets;  // regression data at grid points
    OdeFunctions ode;
    double x0 = 0.0;
    double f0 = 0.0;
    double df0 = 0.0;
    double boundary_weight = 1.0;

    static MMRProblem regression(std::vector<double> grid, Vector targets);
    static MMRProblem first_order(std::vector<double> grid, OdeFunctions ode, double x0, double f0);
    static MMRProblem second_order(std::vector<double> grid, OdeFunctions ode, double x0, double f0, double df0);

    /// Throws DataError for a bad grid, UsageError for missing pieces.
    void validate() const;
    /// Kernel orders (n, 0) the loss needs.
    [[nodiscard]] int max_order() const noexcept;
};

/// k_n(i, a) = d^n k(x_i, y_a) / dx^n over grid x anchors, plus the rows at x0 needed by the
/// boundary terms.
struct KernelMatrices {
    std::vector<Matrix> grid;      // index n = 0..max_order
    std::vector<Vector> boundary;  // index n = 0..(0 or 1), empty for regression
};

/// Evaluates every needed matrix once. When x0 is a grid point its boundary rows are copied from
/// the grid matrices rather than re-evaluated.
[[nodiscard]] KernelMatrices precompute(const MMRProblem& problem, const kernels::KernelEvaluator& evaluator,
                                        std::span<const double> anchors);

enum class HessianMode { exact, gauss_newton };

struct LossEval {
    double loss = 0.0;
    Vector gradient;
    Matrix hessian;  // empty unless requested
};

/// Loss, gradient and optionally Hessian at weights = (alpha_1..alpha_A, b). Throws UsageError
/// when a required matrix order is missing.
[[nodiscard]] LossEval mmr_loss(const Vector& weights, const MMRProblem& problem, const KernelMatrices& mats,
                                bool want_hessian = true, HessianMode mode = HessianMode::exact);

struct FitResult {
    MMRModel model;
    numerics::OptimizationResult optimization;
    std::size_t kernel_evaluations = 0;
};

/// Precomputes kernel matrices once, then minimizes from alpha = 0, b = 0.
/// Empty anchors means anchors = grid.
[[nodiscard]] FitResult fit_mmr(const MMRProblem& problem, const kernels::KernelSpec& kernel,
                                std::vector<double> anchors, const numerics::OptimizerConfig& cfg,
                                HessianMode mode = HessianMode::exact);

/// Minimum over `samples` draws of the finite-difference d^2 L / d alpha_j^2 at random weights.
[[nodiscard]] double convexity_probe(const MMRProblem& problem, const kernels::KernelSpec& kernel,
                                     std::vector<double> anchors, int samples, std::uint64_t seed);

}  // namespace qkde::mmr
