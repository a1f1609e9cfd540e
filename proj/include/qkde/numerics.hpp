#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "qkde/linalg.hpp"

namespace qkde::numerics {

struct LinearSolution {
    Vector x;
    /// Set when the matrix was singular to working precision and a minimum-norm
    /// least-squares solution was returned instead.
    bool least_squares = false;
    double residual_inf = 0.0;
};

/// LU with partial pivoting; falls back to minimum-norm least squares when A is singular.
/// Throws UsageError for a non-square A or a size mismatch.
[[nodiscard]] LinearSolution solve_linear(const Matrix& a, const Vector& rhs);

enum class OptimizerKind { newton, adam };

struct OptimizerConfig {
    OptimizerKind kind = OptimizerKind::newton;
    int epochs = 100;
    double learning_rate = 0.003;  // adam
    double damping = 1e-8;         // newton: initial Levenberg mu
    double tolerance = 1e-10;      // newton: stop when max |grad| falls below

    void validate() const;
};

[[nodiscard]] std::string to_string(OptimizerKind kind);
[[nodiscard]] OptimizerKind optimizer_kind_from_string(const std::string& s);

using LossFn = std::function<double(const Vector&)>;
using GradFn = std::function<Vector(const Vector&)>;
using HessFn = std::function<Matrix(const Vector&)>;

struct OptimizationResult {
    Vector x;
    /// One entry per epoch run: the loss at the current iterate after that epoch (newton),
    /// or the loss at the iterate the epoch started from (adam).
    std::vector<double> history;
    bool converged = false;
    double gradient_inf = 0.0;
    int accepted_steps = 0;
};

/// Levenberg-damped Newton: v <- v - (H + mu I)^{-1} g. A step that increases the loss is
/// rejected and mu grows x10; an accepted step shrinks mu /10. mu stays within [1e-12, 1e6]
/// once positive. Loss changes below rounding are ties, accepted when they shrink max |g|.
/// Stops after cfg.epochs or when max |g| < cfg.tolerance.
[[nodiscard]] OptimizationResult newton_minimize(const LossFn& loss, const GradFn& grad, const HessFn& hess,
                                                 const Vector& init, const OptimizerConfig& cfg);

/// First-order ADAM, beta1 = 0.9, beta2 = 0.999, eps = 1e-8. Returns the lowest-loss iterate
/// visited (including the one after the last update); late ADAM steps of size ~lr can kick a
/// converged iterate off a sharp minimum once gradients fall below eps.
[[nodiscard]] OptimizationResult adam_minimize(const LossFn& loss, const GradFn& grad, const Vector& init,
                                               const OptimizerConfig& cfg);

using OdeRhs = std::function<Vector(double, const Vector&)>;

struct OdeTable {
    std::vector<double> x;
    std::vector<Vector> f;
    std::size_t steps = 0;
};

struct Rk45Options {
    double rtol = 1e-10;
    double atol = 1e-12;
    std::size_t max_steps = 10'000'000;
};

/// Adaptive Dormand-Prince 5(4) with its 4th-order continuous extension for output points.
/// The output grid must be ascending and start at x0.
[[nodiscard]] OdeTable rk45_integrate(const OdeRhs& rhs, double x0, const Vector& f0, std::span<const double> output_grid,
                                      const Rk45Options& opts = {});

/// Classical fixed-step RK4 to every output point (used as an independent reference).
[[nodiscard]] OdeTable rk4_fixed(const OdeRhs& rhs, double x0, const Vector& f0, std::span<const double> output_grid,
                                 double step);

/// Central difference of order 1 or 2 with one Richardson extrapolation (steps h and h/2).
[[nodiscard]] double central_diff(const std::function<double(double)>& fn, double x, int order, double h);

/// Jacobian of a vector map by central differences, column by column.
[[nodiscard]] Matrix fd_jacobian(const std::function<Vector(const Vector&)>& fn, const Vector& x, double h);

}  // namespace qkde::numerics
