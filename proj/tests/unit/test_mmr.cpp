#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <cmath>

#include "qkde/error.hpp"
#include "qkde/mmr.hpp"
#include "qkde/seeding.hpp"

using namespace qkde;
using namespace qkde::mmr;
using kernels::KernelSpec;

namespace {

constexpr double kLam = 20.0;
constexpr double kKap = 0.1;

std::vector<double> linspace(double a, double b, int n) {
    std::vector<double> out;
    for (int i = 0; i < n; ++i) out.push_back(a + (b - a) * i / (n - 1));
    return out;
}

OdeFunctions fading() {
    return {[](double x, double f) { return -kLam * kKap * f - kLam * std::exp(-kLam * kKap * x) * std::sin(kLam * x); },
            [](double, double) { return -kLam * kKap; }, [](double, double) { return 0.0; }};
}

OdeFunctions duffing() {
    return {[](double x, double f) { return 3 * std::cos(3 * x) - f - f * f * f; },
            [](double, double f) { return -1 - 3 * f * f; }, [](double, double f) { return -6 * f; }};
}

KernelSpec quantum(int qubits, double divisor) {
    return KernelSpec::quantum(qsim::layered_feature_map(qubits, 2, 2, 1234, divisor));
}

numerics::OptimizerConfig newton(int epochs, double tol = 1e-12) {
    numerics::OptimizerConfig c;
    c.epochs = epochs;
    c.tolerance = tol;
    return c;
}

Vector random_weights(Rng& rng, Eigen::Index n) {
    Vector w(n);
    for (Eigen::Index i = 0; i < n; ++i) w(i) = 2 * uniform01(rng) - 1;
    return w;
}

// Residual Jacobian of the linear first-order loss, assembled from pointwise kernel derivatives.
// Rows: f'(x_i) - g(x_i, f(x_i)) = J_i w - t_i, then sqrt(w_b) (f(x0) - f0).
void linear_ode_system(const KernelSpec& k, const std::vector<double>& grid, double x0, double f0, double wb,
                       Matrix& j, Vector& t) {
    const auto n = static_cast<Eigen::Index>(grid.size());
    j = Matrix::Zero(n + 1, n + 1);
    t = Vector::Zero(n + 1);
    const double damp = kLam * kKap;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double x = grid[static_cast<std::size_t>(i)];
        for (Eigen::Index a = 0; a < n; ++a) {
            const double y = grid[static_cast<std::size_t>(a)];
            j(i, a) = kernels::kernel_derivative(k, {1, 0}, x, y) + damp * kernels::kernel_value(k, x, y);
        }
        j(i, n) = damp;
        t(i) = -kLam * std::exp(-damp * x) * std::sin(kLam * x);
    }
    const double s = std::sqrt(wb);
    for (Eigen::Index a = 0; a < n; ++a) j(n, a) = s * kernels::kernel_value(k, x0, grid[static_cast<std::size_t>(a)]);
    j(n, n) = s;
    t(n) = s * f0;
}

}  // namespace

TEST_CASE("mmr_predict examples") {
    const auto rbf = KernelSpec::rbf(0.3);
    MMRModel constant{rbf, {0.0, 0.5}, Vector::Zero(2), 2.5};
    for (double x : {-1.0, 0.2, 3.0}) {
        CHECK(mmr_predict(constant, x, 0) == 2.5);
        CHECK(mmr_predict(constant, x, 1) == 0.0);
        CHECK(mmr_predict(constant, x, 2) == 0.0);
    }
    MMRModel one{rbf, {0.4}, Vector::Ones(1), 0.0};
    CHECK(mmr_predict(one, 0.4) == 1.0);
    const double x = 0.55;
    CHECK(mmr_predict(one, x, 1) ==
          doctest::Approx(-((x - 0.4) / (0.3 * 0.3)) * std::exp(-(x - 0.4) * (x - 0.4) / (2 * 0.09))).epsilon(1e-14));
    CHECK_THROWS_AS((void)mmr_predict(one, x, 3), UsageError);
    MMRModel bad{rbf, {0.4, 0.5}, Vector::Ones(1), 0.0};
    CHECK_THROWS_AS((void)mmr_predict(bad, x), UsageError);
}

TEST_CASE("mmr_loss vanishes at interpolating weights") {
    const auto k = quantum(3, 2.0);
    const auto grid = linspace(0, 1, 5);
    Vector f(5);
    f << 0.3, -0.2, 0.7, 0.1, 0.4;
    const auto problem = MMRProblem::regression(grid, f);
    const kernels::KernelEvaluator ev(k);
    const auto mats = precompute(problem, ev, grid);
    Vector w(6);
    w.head(5) = mats.grid[0].fullPivLu().solve(f);
    w(5) = 0.0;
    CHECK(mmr_loss(w, problem, mats).loss < 1e-20);
}

TEST_CASE("mmr_loss requires its matrices") {
    const auto grid = linspace(0, 1, 4);
    const auto problem = MMRProblem::first_order(grid, fading(), 0.0, 1.0);
    KernelMatrices partial;
    partial.grid.push_back(Matrix::Zero(4, 4));
    CHECK_THROWS_AS((void)mmr_loss(Vector::Zero(5), problem, partial), UsageError);
}

TEST_CASE("property: analytic gradient and Hessian match finite differences") {
    Rng rng(3);
    const auto k = quantum(3, 4.0);
    const auto grid = linspace(0, 1, 6);
    Vector f = Vector::LinSpaced(6, -0.5, 0.8);
    const std::vector<MMRProblem> problems = {
        MMRProblem::regression(grid, f),
        MMRProblem::first_order(grid, fading(), 0.0, 1.0),
        MMRProblem::first_order(grid, fading(), -0.1, 1.0),
        MMRProblem::second_order(grid, duffing(), 0.0, 1.0, 1.0),
        MMRProblem::second_order(grid, duffing(), 0.05, 1.0, 1.0),
    };
    const kernels::KernelEvaluator ev(k);
    for (const auto& p : problems) {
        const auto mats = precompute(p, ev, grid);
        for (int t = 0; t < 5; ++t) {
            const Vector w = random_weights(rng, 7);
            const auto e = mmr_loss(w, p, mats);
            double worst_g = 0.0;
            double worst_h = 0.0;
            for (Eigen::Index j = 0; j < w.size(); ++j) {
                auto along = [&](double s) {
                    Vector v = w;
                    v(j) += s;
                    return mmr_loss(v, p, mats, false).loss;
                };
                worst_g = std::max(worst_g, std::abs(e.gradient(j) - numerics::central_diff(along, 0.0, 1, 1e-3)));
            }
            const Matrix fdh = numerics::fd_jacobian(
                [&](const Vector& v) { return mmr_loss(v, p, mats, false).gradient; }, w, 1e-4);
            worst_h = (fdh - e.hessian).cwiseAbs().maxCoeff() / (1 + e.hessian.cwiseAbs().maxCoeff());
            CHECK(worst_g < 1e-6 * (1 + e.gradient.cwiseAbs().maxCoeff()));
            CHECK(worst_h < 1e-6);
        }
    }
}

TEST_CASE("Gauss-Newton Hessian equals exact Hessian for linear problems") {
    const auto k = KernelSpec::rbf(0.2);
    const auto grid = linspace(0, 1, 8);
    const auto p = MMRProblem::first_order(grid, fading(), 0.0, 1.0);
    const kernels::KernelEvaluator ev(k);
    const auto mats = precompute(p, ev, grid);
    Rng rng(2);
    const Vector w = random_weights(rng, 9);
    const auto exact = mmr_loss(w, p, mats, true, HessianMode::exact);
    const auto gn = mmr_loss(w, p, mats, true, HessianMode::gauss_newton);
    CHECK((exact.hessian - gn.hessian).cwiseAbs().maxCoeff() < 1e-12 * exact.hessian.cwiseAbs().maxCoeff());
}

TEST_CASE("3-point regression matches the normal-equations solution") {
    const auto k = KernelSpec::rbf(0.5);
    const std::vector<double> grid = {0.0, 0.6, 1.3};
    Vector f(3);
    f << 1.0, -0.4, 0.25;
    const auto problem = MMRProblem::regression(grid, f);
    const auto fit = fit_mmr(problem, k, {}, newton(20));
    // The design [K 1] has full row rank, so the quadratic's minimizers form a line; damped
    // Newton from zero stays in the row space and reaches the minimum-norm solution
    // A^T (A A^T)^{-1} f.
    Matrix a(3, 4);
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) a(i, j) = std::exp(-(grid[i] - grid[j]) * (grid[i] - grid[j]) / (2 * 0.25));
        a(i, 3) = 1.0;
    }
    const Vector oracle = a.transpose() * (a * a.transpose()).inverse() * f;
    Vector got(4);
    got << fit.model.alpha, fit.model.bias;
    CHECK(fit.optimization.history.back() < 1e-10);
    CHECK((got - oracle).cwiseAbs().maxCoeff() < 1e-6);
    // And the normal equations A^T A w = A^T f hold.
    CHECK((a.transpose() * (a * got - f)).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("regression with Newton: gradient below 1e-8 within 3 epochs") {
    const auto k = KernelSpec::rbf(0.2);
    const auto grid = linspace(1, 10, 51);
    Vector f(51);
    for (int i = 0; i < 51; ++i) f(i) = std::exp(-0.2 * grid[i]) * std::cos(2.1 * grid[i]);
    const auto fit = fit_mmr(MMRProblem::regression(grid, f), k, {}, newton(3, 1e-8));
    CHECK(fit.optimization.gradient_inf < 1e-8);
    CHECK(fit.optimization.history.size() <= 3);
}

TEST_CASE("linear first-order ODE: monotone history and normal equations") {
    const auto k = KernelSpec::rbf(0.2);
    const auto grid = linspace(0, 1, 12);
    const auto p = MMRProblem::first_order(grid, fading(), 0.0, 1.0);
    const auto fit = fit_mmr(p, k, {}, newton(30));
    const auto& h = fit.optimization.history;
    for (std::size_t i = 1; i < h.size(); ++i) CHECK(h[i] <= h[i - 1]);

    Matrix j;
    Vector t;
    linear_ode_system(k, grid, 0.0, 1.0, 1.0, j, t);
    Vector w(13);
    w << fit.model.alpha, fit.model.bias;
    const Vector rhs = j.transpose() * t;
    CHECK((j.transpose() * j * w - rhs).norm() / rhs.norm() < 1e-6);
}

TEST_CASE("kernel matrices are evaluated once, independent of epochs") {
    const auto k = quantum(2, 2.0);
    const auto grid = linspace(0, 1, 7);
    const std::vector<double> anchors = {0.1, 0.4, 0.8};
    const auto p1 = MMRProblem::first_order(grid, fading(), 0.0, 1.0);
    const auto a = fit_mmr(p1, k, anchors, newton(1));
    const auto b = fit_mmr(p1, k, anchors, newton(15));
    CHECK(a.kernel_evaluations == 7 * 3 * 2);
    CHECK(b.kernel_evaluations == a.kernel_evaluations);

    const auto p2 = MMRProblem::second_order(grid, duffing(), 0.0, 1.0, 1.0);
    CHECK(fit_mmr(p2, k, anchors, newton(4)).kernel_evaluations == 7 * 3 * 3);
    const Vector f = Vector::Zero(7);
    CHECK(fit_mmr(MMRProblem::regression(grid, f), k, {}, newton(2)).kernel_evaluations == 7 * 7);
}

TEST_CASE("anchored regression Gram is symmetric PSD") {
    const auto k = quantum(4, 2.0);
    const auto grid = linspace(0, 2, 15);
    const auto p = MMRProblem::regression(grid, Vector::Zero(15));
    const kernels::KernelEvaluator ev(k);
    const auto mats = precompute(p, ev, grid);
    const Matrix& g = mats.grid[0];
    CHECK((g - g.transpose()).cwiseAbs().maxCoeff() < 1e-12);
    const Eigen::SelfAdjointEigenSolver<Matrix> eig(g);
    CHECK(eig.eigenvalues().minCoeff() >= -1e-9);
}

TEST_CASE("convexity probe") {
    const auto k = quantum(3, 2.0);
    const auto grid = linspace(0, 1, 10);
    Vector f = Vector::LinSpaced(10, 0, 1).array().sin();
    CHECK(convexity_probe(MMRProblem::regression(grid, f), k, {}, 100, 1) >= -1e-8);
    CHECK(convexity_probe(MMRProblem::first_order(grid, fading(), 0.0, 1.0), k, {}, 100, 2) >= -1e-8);
    const double duff = convexity_probe(MMRProblem::second_order(grid, duffing(), 0.0, 1.0, 1.0), k, {}, 100, 3);
    CHECK(std::isfinite(duff));
    CHECK(convexity_probe(MMRProblem::regression(grid, f), k, {}, 10, 9) ==
          convexity_probe(MMRProblem::regression(grid, f), k, {}, 10, 9));
    CHECK_THROWS_AS((void)convexity_probe(MMRProblem::regression(grid, f), k, {}, 0, 9), UsageError);
}

TEST_CASE("property: sampled curvature along alpha_j is non-negative for linear g") {
    Rng rng(13);
    const auto k = quantum(3, 2.0);
    const auto grid = linspace(0, 1, 8);
    const auto p = MMRProblem::first_order(grid, fading(), 0.0, 1.0);
    const kernels::KernelEvaluator ev(k);
    const auto mats = precompute(p, ev, grid);
    for (int t = 0; t < 100; ++t) {
        const Vector w = random_weights(rng, 9);
        const auto j = static_cast<Eigen::Index>(rng() % 8);
        CHECK(mmr_loss(w, p, mats).hessian(j, j) >= 0.0);
    }
}

TEST_CASE("problem validation") {
    CHECK_THROWS_AS(MMRProblem::regression({0.0, 0.0}, Vector::Zero(2)).validate(), DataError);
    CHECK_THROWS_AS(MMRProblem::regression({0.0, 1.0}, Vector::Zero(3)).validate(), UsageError);
    OdeFunctions missing;
    CHECK_THROWS_AS(MMRProblem::first_order({0.0, 1.0}, missing, 0.0, 1.0).validate(), UsageError);
}
