#include "qkde/svr.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "qkde/error.hpp"

namespace qkde::svr {

namespace {

using kernels::DerivOrder;
using Index = Eigen::Index;

void check_gamma(double gamma) {
    if (!(gamma > 0.0) || !std::isfinite(gamma)) throw ConfigError("gamma must be positive and finite");
}

Index grid_size(const kernels::GramBundle& gram) { return static_cast<Index>(gram.size()); }

Matrix identity(Index n) { return Matrix::Identity(n, n); }

template <typename Block>
void put(Matrix& m, const Layout::Range& rows, const Layout::Range& cols, const Block& block) {
    m.block(rows.start, cols.start, rows.size, cols.size) = block;
}

void put_scalar(Matrix& m, const Layout::Range& row, const Layout::Range& col, double value) {
    m(row.start, col.start) = value;
}

}  // namespace

std::string to_string(SvrClass c) {
    switch (c) {
        case SvrClass::regression:
            return "regression";
        case SvrClass::linear_ode:
            return "linear_ode";
        case SvrClass::first_order_nl:
            return "first_order_nl";
        case SvrClass::second_order_nl:
            return "second_order_nl";
    }
    return "regression";
}

Layout Layout::for_class(SvrClass c, Index n) {
    Layout l;
    Index at = 0;
    auto take = [&](Range& r, Index size) {
        r = {at, size};
        at += size;
    };
    take(l.alpha, n);
    switch (c) {
        case SvrClass::regression:
            take(l.b, 1);
            break;
        case SvrClass::linear_ode:
            take(l.beta0, 1);
            take(l.b, 1);
            break;
        case SvrClass::first_order_nl:
            take(l.eta, n);
            take(l.beta0, 1);
            take(l.b, 1);
            take(l.y, n);
            break;
        case SvrClass::second_order_nl:
            take(l.eta, n);
            take(l.beta0, 1);
            take(l.beta1, 1);
            take(l.b, 1);
            take(l.y, n);
            break;
    }
    l.total = at;
    return l;
}

std::vector<DerivOrder> required_orders(SvrClass cls) {
    switch (cls) {
        case SvrClass::regression:
            return {{0, 0}};
        case SvrClass::linear_ode:
        case SvrClass::first_order_nl:
            return kernels::orders_up_to(1);
        case SvrClass::second_order_nl:
            return kernels::orders_up_to(2);
    }
    return {{0, 0}};
}

SvrSystem assemble_regression(const kernels::GramBundle& gram, const Vector& targets, double gamma) {
    check_gamma(gamma);
    const Index n = grid_size(gram);
    if (targets.size() != n) throw UsageError("regression targets must match the grid size");
    SvrSystem s;
    s.cls = SvrClass::regression;
    s.layout = Layout::for_class(s.cls, n);
    s.gamma = gamma;
    s.grid = gram.grid;
    s.x0 = gram.x0;
    s.targets = targets;
    const auto& L = s.layout;
    s.a.setZero(L.total, L.total);
    s.rhs.setZero(L.total);
    put(s.a, L.alpha, L.alpha, gram.block({0, 0}) + identity(n) / gamma);
    put(s.a, L.alpha, L.b, Vector::Ones(n));
    put(s.a, L.b, L.alpha, Vector::Ones(n).transpose());
    s.rhs.segment(L.alpha.start, n) = targets;
    return s;
}

SvrSystem assemble_linear_ode(const kernels::GramBundle& gram, const std::function<double(double)>& g,
                              const std::function<double(double)>& r, double f0, double gamma) {
    check_gamma(gamma);
    if (!g || !r) throw UsageError("linear ODE needs g(x) and r(x)");
    const Index n = grid_size(gram);
    SvrSystem s;
    s.cls = SvrClass::linear_ode;
    s.layout = Layout::for_class(s.cls, n);
    s.gamma = gamma;
    s.grid = gram.grid;
    s.x0 = gram.x0;
    s.f0 = f0;
    s.g.resize(n);
    s.r.resize(n);
    for (Index i = 0; i < n; ++i) {
        s.g(i) = g(gram.grid[static_cast<std::size_t>(i)]);
        s.r(i) = r(gram.grid[static_cast<std::size_t>(i)]);
    }
    const auto d = s.g.asDiagonal();
    const Matrix m = gram.block({1, 1}) + gram.block({0, 1}) * d + d * gram.block({1, 0}) +
                     d * gram.block({0, 0}) * d + identity(n) / gamma;
    const Vector c = gram.h({0, 1}) + d * gram.h({0, 0});
    const auto& L = s.layout;
    s.a.setZero(L.total, L.total);
    s.rhs.setZero(L.total);
    put(s.a, L.alpha, L.alpha, m);
    put(s.a, L.alpha, L.beta0, c);
    put(s.a, L.alpha, L.b, s.g);
    put(s.a, L.beta0, L.alpha, c.transpose());
    put_scalar(s.a, L.beta0, L.beta0, gram.h_corner({0, 0}));
    put_scalar(s.a, L.beta0, L.b, 1.0);
    put(s.a, L.b, L.alpha, s.g.transpose());
    put_scalar(s.a, L.b, L.beta0, 1.0);
    s.rhs.segment(L.alpha.start, n) = -s.r;
    s.rhs(L.beta0.start) = f0;
    return s;
}

NonlinearSvrSystem::NonlinearSvrSystem(SvrClass cls, const kernels::GramBundle& gram, mmr::OdeFunctions ode, double f0,
                                       double df0, double gamma)
    : cls_(cls),
      layout_(Layout::for_class(cls, grid_size(gram))),
      gamma_(gamma),
      grid_(gram.grid),
      x0_(gram.x0),
      ode_(std::move(ode)),
      f0_(f0),
      df0_(df0) {
    check_gamma(gamma);
    if (cls != SvrClass::first_order_nl && cls != SvrClass::second_order_nl) {
        throw UsageError("nonlinear SVR system needs a nonlinear class");
    }
    if (!ode_.g || !ode_.g_f) throw UsageError("nonlinear SVR system needs g and dg/df");
    const Index n = grid_size(gram);
    const auto& L = layout_;
    const Matrix reg = identity(n) / gamma;
    const Vector ones = Vector::Ones(n);
    lin_.setZero(L.total, L.total);
    rhs_.setZero(L.total);
    if (cls == SvrClass::first_order_nl) {
        put(lin_, L.alpha, L.alpha, gram.block({1, 1}) + reg);
        put(lin_, L.alpha, L.eta, gram.block({0, 1}));
        put(lin_, L.alpha, L.beta0, gram.h({0, 1}));

        put(lin_, L.eta, L.alpha, gram.block({1, 0}));
        put(lin_, L.eta, L.beta0, gram.h({0, 0}));

        put(lin_, L.beta0, L.alpha, gram.h({0, 1}).transpose());
        put(lin_, L.beta0, L.eta, gram.h({0, 0}).transpose());
        put_scalar(lin_, L.beta0, L.beta0, gram.h_corner({0, 0}));
    } else {
        put(lin_, L.alpha, L.alpha, gram.block({2, 2}) + reg);
        put(lin_, L.alpha, L.eta, gram.block({0, 2}));
        put(lin_, L.alpha, L.beta0, gram.h({0, 2}));
        put(lin_, L.alpha, L.beta1, gram.h({1, 2}));

        put(lin_, L.eta, L.alpha, gram.block({2, 0}));
        put(lin_, L.eta, L.beta0, gram.h({0, 0}));
        put(lin_, L.eta, L.beta1, gram.h({1, 0}));

        put(lin_, L.beta0, L.alpha, gram.h({0, 2}).transpose());
        put(lin_, L.beta0, L.eta, gram.h({0, 0}).transpose());
        put_scalar(lin_, L.beta0, L.beta0, gram.h_corner({0, 0}));
        put_scalar(lin_, L.beta0, L.beta1, gram.h_corner({1, 0}));

        put(lin_, L.beta1, L.alpha, gram.h({1, 2}).transpose());
        put(lin_, L.beta1, L.eta, gram.h({1, 0}).transpose());
        put_scalar(lin_, L.beta1, L.beta0, gram.h_corner({0, 1}));
        put_scalar(lin_, L.beta1, L.beta1, gram.h_corner({1, 1}));
        rhs_(L.beta1.start) = df0;
    }
    put(lin_, L.eta, L.eta, gram.block({0, 0}) + reg);
    put(lin_, L.eta, L.b, ones);
    put(lin_, L.eta, L.y, -identity(n));
    put_scalar(lin_, L.beta0, L.b, 1.0);
    rhs_(L.beta0.start) = f0;
    put(lin_, L.b, L.eta, ones.transpose());
    put_scalar(lin_, L.b, L.beta0, 1.0);
    put(lin_, L.y, L.eta, identity(n));
}

Vector NonlinearSvrSystem::residual(const Vector& v) const {
    if (v.size() != layout_.total) throw UsageError("nonlinear SVR unknown vector has wrong length");
    Vector res = lin_ * v - rhs_;
    const auto& L = layout_;
    for (Index i = 0; i < L.alpha.size; ++i) {
        const double x = grid_[static_cast<std::size_t>(i)];
        const double yi = v(L.y.start + i);
        res(L.alpha.start + i) -= ode_.g(x, yi);
        res(L.y.start + i) += ode_.g_f(x, yi) * v(L.alpha.start + i);
    }
    return res;
}

Matrix NonlinearSvrSystem::jacobian(const Vector& v) const {
    if (v.size() != layout_.total) throw UsageError("nonlinear SVR unknown vector has wrong length");
    Matrix jac = lin_;
    const auto& L = layout_;
    for (Index i = 0; i < L.alpha.size; ++i) {
        const double x = grid_[static_cast<std::size_t>(i)];
        const double yi = v(L.y.start + i);
        const double gf = ode_.g_f(x, yi);
        const double gff = ode_.g_ff ? ode_.g_ff(x, yi) : 0.0;
        jac(L.alpha.start + i, L.y.start + i) -= gf;
        jac(L.y.start + i, L.alpha.start + i) += gf;
        jac(L.y.start + i, L.y.start + i) += gff * v(L.alpha.start + i);
    }
    return jac;
}

Vector NonlinearSvrSystem::initial_guess() const {
    Vector v = Vector::Zero(layout_.total);
    v.segment(layout_.y.start, layout_.y.size).setConstant(f0_);
    return v;
}

NonlinearSvrSystem assemble_first_order_nl(const kernels::GramBundle& gram, mmr::OdeFunctions ode, double f0,
                                           double gamma) {
    return {SvrClass::first_order_nl, gram, std::move(ode), f0, 0.0, gamma};
}

NonlinearSvrSystem assemble_second_order_nl(const kernels::GramBundle& gram, mmr::OdeFunctions ode, double f0,
                                            double df0, double gamma) {
    return {SvrClass::second_order_nl, gram, std::move(ode), f0, df0, gamma};
}

DualSolution unpack(SvrClass cls, const Layout& layout, const Vector& v, double gamma, std::vector<double> grid,
                    double x0, Vector g) {
    if (v.size() != layout.total) throw UsageError("unknown vector does not match the layout");
    DualSolution s;
    s.cls = cls;
    s.alpha = v.segment(layout.alpha.start, layout.alpha.size);
    s.eta = v.segment(layout.eta.start, layout.eta.size);
    s.y = v.segment(layout.y.start, layout.y.size);
    if (layout.beta0.size) s.beta0 = v(layout.beta0.start);
    if (layout.beta1.size) s.beta1 = v(layout.beta1.start);
    s.b = v(layout.b.start);
    s.gamma = gamma;
    s.grid = std::move(grid);
    s.x0 = x0;
    s.g = std::move(g);
    s.unknowns = v;
    return s;
}

SvrResult solve_svr(const SvrSystem& system, SolveMethod method, const numerics::OptimizerConfig& cfg,
                    const std::optional<Vector>& init) {
    SvrResult out;
    if (method == SolveMethod::direct) {
        const auto lin = numerics::solve_linear(system.a, system.rhs);
        out.solution = unpack(system.cls, system.layout, lin.x, system.gamma, system.grid, system.x0, system.g);
        out.solution.least_squares = lin.least_squares;
        out.final_loss = (system.a * lin.x - system.rhs).squaredNorm();
        return out;
    }
    const Vector start = init ? *init : Vector::Zero(system.layout.total);
    auto loss = [&](const Vector& v) { return (system.a * v - system.rhs).squaredNorm(); };
    auto grad = [&](const Vector& v) { return Vector(2.0 * system.a.transpose() * (system.a * v - system.rhs)); };
    auto opt = numerics::adam_minimize(loss, grad, start, cfg);
    out.solution = unpack(system.cls, system.layout, opt.x, system.gamma, system.grid, system.x0, system.g);
    out.history = std::move(opt.history);
    out.final_loss = loss(opt.x);
    return out;
}

SvrResult solve_svr(const NonlinearSvrSystem& system, const numerics::OptimizerConfig& cfg,
                    const std::optional<Vector>& init) {
    const Vector start = init ? *init : system.initial_guess();
    auto loss = [&](const Vector& v) { return system.residual(v).squaredNorm(); };
    auto grad = [&](const Vector& v) {
        return Vector(2.0 * system.jacobian(v).transpose() * system.residual(v));
    };
    auto opt = numerics::adam_minimize(loss, grad, start, cfg);
    SvrResult out;
    out.solution = unpack(system.cls(), system.layout(), opt.x, system.gamma(), system.grid(), system.x0());
    out.history = std::move(opt.history);
    out.final_loss = loss(opt.x);
    if (!std::isfinite(out.final_loss)) throw NumericalError("residual-adam ended at a non-finite loss");
    return out;
}

Vector svr_predict(const DualSolution& sol, const kernels::KernelSpec& kernel, std::span<const double> xs, int deriv) {
    if (deriv < 0 || deriv > 2) throw UsageError("svr_predict supports derivative orders 0..2");
    const auto n = static_cast<Index>(sol.grid.size());
    if (sol.alpha.size() != n) throw UsageError("dual solution does not match its grid");
    std::vector<double> points = sol.grid;
    points.push_back(sol.x0);
    std::vector<DerivOrder> orders{{0, deriv}};
    if (sol.cls != SvrClass::regression) orders.push_back({1, deriv});
    if (sol.cls == SvrClass::second_order_nl) orders.push_back({2, deriv});
    const kernels::KernelEvaluator ev(kernel);
    const auto k = ev.cross_all(points, xs, orders);
    // Rows 0..n-1 are grid points, row n is x0.
    const Matrix& k0 = k.at({0, deriv});
    Vector f = Vector::Zero(static_cast<Index>(xs.size()));
    switch (sol.cls) {
        case SvrClass::regression:
            f = k0.topRows(n).transpose() * sol.alpha;
            break;
        case SvrClass::linear_ode: {
            const Matrix& k1 = k.at({1, deriv});
            f = k1.topRows(n).transpose() * sol.alpha + k0.topRows(n).transpose() * sol.g.cwiseProduct(sol.alpha) +
                sol.beta0 * k0.row(n).transpose();
            break;
        }
        case SvrClass::first_order_nl: {
            const Matrix& k1 = k.at({1, deriv});
            f = k1.topRows(n).transpose() * sol.alpha + k0.topRows(n).transpose() * sol.eta +
                sol.beta0 * k0.row(n).transpose();
            break;
        }
        case SvrClass::second_order_nl: {
            const Matrix& k1 = k.at({1, deriv});
            const Matrix& k2 = k.at({2, deriv});
            f = k2.topRows(n).transpose() * sol.alpha + k0.topRows(n).transpose() * sol.eta +
                sol.beta0 * k0.row(n).transpose() + sol.beta1 * k1.row(n).transpose();
            break;
        }
    }
    if (deriv == 0) f.array() += sol.b;
    return f;
}

double svr_predict(const DualSolution& sol, const kernels::KernelSpec& kernel, double x, int deriv) {
    const std::array<double, 1> xs{x};
    return svr_predict(sol, kernel, xs, deriv)(0);
}

double kkt_residual(const DualSolution& sol, const SvrSystem& system) {
    if (sol.unknowns.size() != system.layout.total) throw UsageError("solution does not match the system");
    return (system.a * sol.unknowns - system.rhs).lpNorm<Eigen::Infinity>();
}

double kkt_residual(const DualSolution& sol, const NonlinearSvrSystem& system) {
    if (sol.unknowns.size() != system.size()) throw UsageError("solution does not match the system");
    return system.residual(sol.unknowns).lpNorm<Eigen::Infinity>();
}

double slack_mismatch(const DualSolution& sol, const kernels::KernelSpec& kernel, const SvrSystem& system) {
    const Vector f = svr_predict(sol, kernel, system.grid, 0);
    const Vector e = sol.slack_e();
    if (system.cls == SvrClass::regression) return (f - system.targets - e).lpNorm<Eigen::Infinity>();
    const Vector df = svr_predict(sol, kernel, system.grid, 1);
    const double ic = std::abs(svr_predict(sol, kernel, system.x0, 0) - system.f0);
    const Vector de = df + system.g.cwiseProduct(f) + system.r;
    return std::max((de - e).lpNorm<Eigen::Infinity>(), ic);
}

double slack_mismatch(const DualSolution& sol, const kernels::KernelSpec& kernel, const NonlinearSvrSystem& system) {
    const auto& grid = system.grid();
    const int order = system.cls() == SvrClass::first_order_nl ? 1 : 2;
    const Vector f = svr_predict(sol, kernel, grid, 0);
    const Vector fd = svr_predict(sol, kernel, grid, order);
    double worst = 0.0;
    const Vector e = sol.slack_e();
    const Vector xi = sol.slack_xi();
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const auto k = static_cast<Index>(i);
        worst = std::max(worst, std::abs(fd(k) - system.ode().g(grid[i], sol.y(k)) - e(k)));
        worst = std::max(worst, std::abs(sol.y(k) - f(k) - xi(k)));
    }
    worst = std::max(worst, std::abs(svr_predict(sol, kernel, system.x0(), 0) - system.f0()));
    if (order == 2) worst = std::max(worst, std::abs(svr_predict(sol, kernel, system.x0(), 1) - system.df0()));
    return worst;
}

}  // namespace qkde::svr
