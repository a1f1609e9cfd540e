#pragma once

// LS-SVR dual systems for regression and ODEs.
//
// Unknown vectors are laid out as
//   regression        alpha | b
//   linear ODE        alpha | beta | b                     (f' + g(x) f + r(x) = 0)
//   first-order NL    alpha | eta | beta | b | y           (f' = g(x, f))
//   second-order NL   alpha | eta | beta0 | beta1 | b | y  (f'' = g(x, f))

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qkde/kernels.hpp"
#include "qkde/mmr.hpp"
#include "qkde/numerics.hpp"

namespace qkde::svr {

enum class SvrClass { regression, linear_ode, first_order_nl, second_order_nl };

[[nodiscard]] std::string to_string(SvrClass c);

/// Offsets of each named block inside the unknown vector; size 0 when the block is absent.
struct Layout {
    struct Range {
        Eigen::Index start = 0;
        Eigen::Index size = 0;
    };
    Range alpha, eta, beta0, beta1, b, y;
    Eigen::Index total = 0;

    static Layout for_class(SvrClass c, Eigen::Index n);
};

/// Linear dual system A v = rhs.
struct SvrSystem {
    SvrClass cls = SvrClass::regression;
    Matrix a;
    Vector rhs;
    Layout layout;
    double gamma = 1.0;
    std::vector<double> grid;
    double x0 = 0.0;
    // Problem data kept for slack verification and prediction.
    Vector targets;  // regression
    Vector g;        // linear ODE: g(x_i)
    Vector r;        // linear ODE: r(x_i)
    double f0 = 0.0;
};

[[nodiscard]] SvrSystem assemble_regression(const kernels::GramBundle& gram, const Vector& targets, double gamma);

/// f' + g(x) f + r(x) = 0 with f(x0) = f0; x0 is taken from the bundle.
[[nodiscard]] SvrSystem assemble_linear_ode(const kernels::GramBundle& gram, const std::function<double(double)>& g,
                                            const std::function<double(double)>& r, double f0, double gamma);

/// Residual system R(v) = 0 for nonlinear ODEs, with its analytic Jacobian.
class NonlinearSvrSystem {
public:
    NonlinearSvrSystem(SvrClass cls, const kernels::GramBundle& gram, mmr::OdeFunctions ode, double f0, double df0,
                       double gamma);

    [[nodiscard]] SvrClass cls() const noexcept { return cls_; }
    [[nodiscard]] const Layout& layout() const noexcept { return layout_; }
    [[nodiscard]] Eigen::Index size() const noexcept { return layout_.total; }
    [[nodiscard]] double gamma() const noexcept { return gamma_; }
    [[nodiscard]] const std::vector<double>& grid() const noexcept { return grid_; }
    [[nodiscard]] double x0() const noexcept { return x0_; }
    [[nodiscard]] double f0() const noexcept { return f0_; }
    [[nodiscard]] double df0() const noexcept { return df0_; }
    [[nodiscard]] const mmr::OdeFunctions& ode() const noexcept { return ode_; }

    [[nodiscard]] Vector residual(const Vector& v) const;
    [[nodiscard]] Matrix jacobian(const Vector& v) const;
    /// Zeros except y_i = f0.
    [[nodiscard]] Vector initial_guess() const;

private:
    SvrClass cls_;
    Layout layout_;
    double gamma_;
    std::vector<double> grid_;
    double x0_;
    mmr::OdeFunctions ode_;
    double f0_;
    double df0_;
    // Constant part of the system: R(v) = lin * v - rhs + nonlinear terms.
    Matrix lin_;
    Vector rhs_;
};

[[nodiscard]] NonlinearSvrSystem assemble_first_order_nl(const kernels::GramBundle& gram, mmr::OdeFunctions ode,
                                                         double f0, double gamma);
[[nodiscard]] NonlinearSvrSystem assemble_second_order_nl(const kernels::GramBundle& gram, mmr::OdeFunctions ode,
                                                          double f0, double df0, double gamma);

struct DualSolution {
    SvrClass cls = SvrClass::regression;
    Vector alpha;
    Vector eta;
    double beta0 = 0.0;
    double beta1 = 0.0;
    double b = 0.0;
    Vector y;
    double gamma = 1.0;
    std::vector<double> grid;
    double x0 = 0.0;
    Vector g;  // linear ODE coefficients g(x_i), needed by its prediction formula
    Vector unknowns;
    bool least_squares = false;

    /// e_i = -alpha_i / gamma.
    [[nodiscard]] Vector slack_e() const { return -alpha / gamma; }
    /// xi_i = eta_i / gamma (nonlinear classes).
    [[nodiscard]] Vector slack_xi() const { return eta / gamma; }
};

[[nodiscard]] DualSolution unpack(SvrClass cls, const Layout& layout, const Vector& v, double gamma,
                                  std::vector<double> grid, double x0, Vector g = {});

enum class SolveMethod { direct, residual_adam };

struct SvrResult {
    DualSolution solution;
    std::vector<double> history;
    double final_loss = 0.0;
};

/// direct: LU solve. residual_adam: ADAM on ||A v - rhs||^2 from v = 0.
[[nodiscard]] SvrResult solve_svr(const SvrSystem& system, SolveMethod method,
                                  const numerics::OptimizerConfig& cfg = {},
                                  const std::optional<Vector>& init = std::nullopt);

/// ADAM on ||R(v)||^2 with gradient 2 J^T R, from initial_guess() unless init is given.
[[nodiscard]] SvrResult solve_svr(const NonlinearSvrSystem& system, const numerics::OptimizerConfig& cfg,
                                  const std::optional<Vector>& init = std::nullopt);

/// Class prediction formula; deriv differentiates every kernel term in its second argument.
[[nodiscard]] Vector svr_predict(const DualSolution& sol, const kernels::KernelSpec& kernel,
                                 std::span<const double> xs, int deriv = 0);
[[nodiscard]] double svr_predict(const DualSolution& sol, const kernels::KernelSpec& kernel, double x, int deriv = 0);

/// Max-abs residual of the block equations at sol.
[[nodiscard]] double kkt_residual(const DualSolution& sol, const SvrSystem& system);
[[nodiscard]] double kkt_residual(const DualSolution& sol, const NonlinearSvrSystem& system);

/// Max deviation between the primal constraint violations, recomputed from the model prediction,
/// and the slacks recovered from the duals (e = -alpha/gamma, xi = eta/gamma).
[[nodiscard]] double slack_mismatch(const DualSolution& sol, const kernels::KernelSpec& kernel,
                                    const SvrSystem& system);
[[nodiscard]] double slack_mismatch(const DualSolution& sol, const kernels::KernelSpec& kernel,
                                    const NonlinearSvrSystem& system);

/// Kernel orders each class needs in its Gram bundle.
[[nodiscard]] std::vector<kernels::DerivOrder> required_orders(SvrClass cls);

}  // namespace qkde::svr
