#include "qkde/mmr.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>

#include "qkde/error.hpp"
#include "qkde/seeding.hpp"

namespace qkde::mmr {

namespace {

struct Residuals {
    Vector r;
    Matrix jac;
    // Per-row curvature: r_i depends on f(x_i) through -g(x_i, f); d^2 r_i = curv_i * u_i u_i^T.
    Vector curv;
    Matrix u;
};

Eigen::Index weight_count(const KernelMatrices& mats) { return mats.grid.at(0).cols() + 1; }

Residuals residuals(const Vector& w, const MMRProblem& p, const KernelMatrices& mats) {
    const int need = p.max_order();
    if (static_cast<int>(mats.grid.size()) <= need) throw UsageError("kernel matrices lack a required derivative order");
    const Matrix& k0 = mats.grid[0];
    const Eigen::Index n = k0.rows();
    const Eigen::Index a = k0.cols();
    if (w.size() != a + 1) throw UsageError("mmr weight vector has wrong length");
    const auto alpha = w.head(a);
    const double b = w(a);
    const Vector f = k0 * alpha + Vector::Constant(n, b);

    Residuals out;
    if (p.kind == ProblemKind::regression) {
        out.r = f - p.targets;
        out.jac.resize(n, a + 1);
        out.jac.leftCols(a) = k0;
        out.jac.col(a).setOnes();
        return out;
    }
    const std::size_t extra = p.kind == ProblemKind::first_order ? 1 : 2;
    if (mats.boundary.size() < extra) throw UsageError("kernel matrices lack boundary rows");
    const Matrix& kd = mats.grid[static_cast<std::size_t>(need)];
    const Vector fd = kd * alpha;
    const auto rows = n + static_cast<Eigen::Index>(extra);
    out.r.resize(rows);
    out.jac.setZero(rows, a + 1);
    out.curv.setZero(rows);
    out.u.setZero(rows, a + 1);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double xi = p.grid[static_cast<std::size_t>(i)];
        const double gf = p.ode.g_f(xi, f(i));
        out.r(i) = fd(i) - p.ode.g(xi, f(i));
        out.jac.row(i).head(a) = kd.row(i) - gf * k0.row(i);
        out.jac(i, a) = -gf;
        out.curv(i) = p.ode.g_ff ? -p.ode.g_ff(xi, f(i)) : 0.0;
        out.u.row(i).head(a) = k0.row(i);
        out.u(i, a) = 1.0;
    }
    const double sw = std::sqrt(p.boundary_weight);
    const Vector& b0 = mats.boundary[0];
    out.r(n) = sw * (b0.dot(alpha) + b - p.f0);
    out.jac.row(n).head(a) = sw * b0.transpose();
    out.jac(n, a) = sw;
    if (extra == 2) {
        const Vector& b1 = mats.boundary[1];
        out.r(n + 1) = sw * (b1.dot(alpha) - p.df0);
        out.jac.row(n + 1).head(a) = sw * b1.transpose();
    }
    return out;
}

}  // namespace

double mmr_predict(const MMRModel& model, double x, int deriv) {
    const std::array<double, 1> xs{x};
    return mmr_predict(model, xs, deriv)(0);
}

Vector mmr_predict(const MMRModel& model, std::span<const double> xs, int deriv) {
    if (deriv < 0 || deriv > 2) throw UsageError("mmr_predict supports derivative orders 0..2");
    if (model.alpha.size() != static_cast<Eigen::Index>(model.anchors.size())) {
        throw UsageError("mmr model has " + std::to_string(model.alpha.size()) + " weights for " +
                         std::to_string(model.anchors.size()) + " anchors");
    }
    const kernels::KernelEvaluator ev(model.kernel);
    Vector out = ev.cross(xs, model.anchors, {deriv, 0}) * model.alpha;
    if (deriv == 0) out.array() += model.bias;
    return out;
}

MMRProblem MMRProblem::regression(std::vector<double> grid, Vector targets) {
    MMRProblem p;
    p.kind = ProblemKind::regression;
    p.grid = std::move(grid);
    p.targets = std::move(targets);
    return p;
}

MMRProblem MMRProblem::first_order(std::vector<double> grid, OdeFunctions ode, double x0, double f0) {
    MMRProblem p;
    p.kind = ProblemKind::first_order;
    p.grid = std::move(grid);
    p.ode = std::move(ode);
    p.x0 = x0;
    p.f0 = f0;
    return p;
}

MMRProblem MMRProblem::second_order(std::vector<double> grid, OdeFunctions ode, double x0, double f0, double df0) {
    MMRProblem p = first_order(std::move(grid), std::move(ode), x0, f0);
    p.kind = ProblemKind::second_order;
    p.df0 = df0;
    return p;
}

void MMRProblem::validate() const {
    kernels::validate_grid(grid);
    if (kind == ProblemKind::regression) {
        if (targets.size() != static_cast<Eigen::Index>(grid.size())) {
            throw UsageError("regression targets must match the grid size");
        }
        return;
    }
    if (!ode.g || !ode.g_f) throw UsageError("ODE problem needs g and dg/df");
    if (!(boundary_weight > 0.0)) throw ConfigError("boundary weight must be positive");
}

int MMRProblem::max_order() const noexcept {
    switch (kind) {
        case ProblemKind::regression:
            return 0;
        case ProblemKind::first_order:
            return 1;
        case ProblemKind::second_order:
            return 2;
    }
    return 0;
}

KernelMatrices precompute(const MMRProblem& problem, const kernels::KernelEvaluator& evaluator,
                          std::span<const double> anchors) {
    problem.validate();
    if (anchors.empty()) throw UsageError("mmr needs at least one anchor");
    const int top = problem.max_order();
    std::vector<kernels::DerivOrder> orders;
    for (int n = 0; n <= top; ++n) orders.push_back({n, 0});
    auto all = evaluator.cross_all(problem.grid, anchors, orders);
    KernelMatrices mats;
    for (int n = 0; n <= top; ++n) mats.grid.push_back(std::move(all.at({n, 0})));
    if (problem.kind == ProblemKind::regression) return mats;

    const int boundary_orders = problem.kind == ProblemKind::first_order ? 1 : 2;
    std::size_t at = problem.grid.size();
    for (std::size_t i = 0; i < problem.grid.size(); ++i) {
        if (problem.grid[i] == problem.x0) at = i;
    }
    if (at < problem.grid.size()) {
        for (int n = 0; n < boundary_orders; ++n) {
            mats.boundary.push_back(mats.grid[static_cast<std::size_t>(n)].row(static_cast<Eigen::Index>(at)).transpose());
        }
    } else {
        const std::array<double, 1> origin{problem.x0};
        for (int n = 0; n < boundary_orders; ++n) {
            mats.boundary.push_back(evaluator.cross(origin, anchors, {n, 0}).row(0).transpose());
        }
    }
    return mats;
}

LossEval mmr_loss(const Vector& weights, const MMRProblem& problem, const KernelMatrices& mats, bool want_hessian,
                  HessianMode mode) {
    const Residuals res = residuals(weights, problem, mats);
    LossEval out;
    out.loss = res.r.squaredNorm();
    out.gradient = 2.0 * res.jac.transpose() * res.r;
    if (want_hessian) {
        out.hessian = 2.0 * res.jac.transpose() * res.jac;
        if (mode == HessianMode::exact && res.curv.size() > 0) {
            const Vector scale = (2.0 * res.r.array() * res.curv.array()).matrix();
            out.hessian += res.u.transpose() * scale.asDiagonal() * res.u;
        }
    }
    return out;
}

FitResult fit_mmr(const MMRProblem& problem, const kernels::KernelSpec& kernel, std::vector<double> anchors,
                  const numerics::OptimizerConfig& cfg, HessianMode mode) {
    if (anchors.empty()) anchors = problem.grid;
    const kernels::KernelEvaluator ev(kernel);
    const KernelMatrices mats = precompute(problem, ev, anchors);
    const Vector init = Vector::Zero(weight_count(mats));
    auto loss = [&](const Vector& w) { return mmr_loss(w, problem, mats, false).loss; };
    auto grad = [&](const Vector& w) { return mmr_loss(w, problem, mats, false).gradient; };
    auto hess = [&](const Vector& w) { return mmr_loss(w, problem, mats, true, mode).hessian; };
    numerics::OptimizationResult opt = cfg.kind == numerics::OptimizerKind::newton
                                           ? numerics::newton_minimize(loss, grad, hess, init, cfg)
                                           : numerics::adam_minimize(loss, grad, init, cfg);
    const auto a = static_cast<Eigen::Index>(anchors.size());
    MMRModel model{kernel, anchors, opt.x.head(a), opt.x(a)};
    return {std::move(model), std::move(opt), ev.evaluations()};
}

double convexity_probe(const MMRProblem& problem, const kernels::KernelSpec& kernel, std::vector<double> anchors,
                       int samples, std::uint64_t seed) {
    if (samples < 1) throw UsageError("convexity_probe needs at least one sample");
    if (anchors.empty()) anchors = problem.grid;
    const kernels::KernelEvaluator ev(kernel);
    const KernelMatrices mats = precompute(problem, ev, anchors);
    const Eigen::Index nw = weight_count(mats);
    const auto na = static_cast<std::uint64_t>(anchors.size());
    Rng rng(seed);
    double lowest = std::numeric_limits<double>::infinity();
    for (int s = 0; s < samples; ++s) {
        Vector w(nw);
        for (Eigen::Index k = 0; k < nw; ++k) w(k) = 2.0 * uniform01(rng) - 1.0;
        const auto j = static_cast<Eigen::Index>(rng() % na);
        auto along = [&](double t) {
            Vector v = w;
            v(j) += t;
            return mmr_loss(v, problem, mats, false).loss;
        };
        lowest = std::min(lowest, numerics::central_diff(along, 0.0, 2, 1e-2));
    }
    return lowest;
}

}  // namespace qkde::mmr
