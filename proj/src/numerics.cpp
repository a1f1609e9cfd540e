#include "qkde/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "qkde/error.hpp"

namespace qkde::numerics {

namespace {

constexpr double kMuMin = 1e-12;
constexpr double kMuMax = 1e6;

bool all_finite(const Vector& v) { return v.allFinite(); }

}  // namespace

LinearSolution solve_linear(const Matrix& a, const Vector& rhs) {
    if (a.rows() != a.cols()) throw UsageError("solve_linear: matrix is not square");
    if (a.rows() != rhs.size()) throw UsageError("solve_linear: rhs size does not match matrix");
    LinearSolution out;
    const double bound = 1e-8 * (1.0 + rhs.lpNorm<Eigen::Infinity>());
    const Eigen::PartialPivLU<Matrix> lu(a);
    const double rcond = lu.rcond();
    bool singular = !(rcond > std::numeric_limits<double>::epsilon());
    if (!singular) {
        out.x = lu.solve(rhs);
        // One step of iterative refinement.
        const Vector r = rhs - a * out.x;
        out.x += lu.solve(r);
        singular = !all_finite(out.x);
    }
    if (singular) {
        const Eigen::CompleteOrthogonalDecomposition<Matrix> cod(a);
        out.x = cod.solve(rhs);
        out.least_squares = true;
    }
    out.residual_inf = (a * out.x - rhs).lpNorm<Eigen::Infinity>();
    if (!out.least_squares && out.residual_inf > bound) {
        // Numerically rank-deficient despite a nonzero pivot estimate.
        const Eigen::CompleteOrthogonalDecomposition<Matrix> cod(a);
        Vector ls = cod.solve(rhs);
        const double ls_res = (a * ls - rhs).lpNorm<Eigen::Infinity>();
        if (ls_res < out.residual_inf) {
            out.x = std::move(ls);
            out.residual_inf = ls_res;
            out.least_squares = true;
        }
    }
    return out;
}

void OptimizerConfig::validate() const {
    if (epochs < 1) throw ConfigError("optimizer epochs must be >= 1");
    if (!(learning_rate > 0.0)) throw ConfigError("optimizer learning rate must be positive");
    if (damping < 0.0) throw ConfigError("Newton damping must be non-negative");
    if (tolerance < 0.0) throw ConfigError("optimizer tolerance must be non-negative");
}

std::string to_string(OptimizerKind kind) { return kind == OptimizerKind::newton ? "newton" : "adam"; }

OptimizerKind optimizer_kind_from_string(const std::string& s) {
    if (s == "newton") return OptimizerKind::newton;
    if (s == "adam") return OptimizerKind::adam;
    throw ConfigError("unknown optimizer kind '" + s + "'");
}

OptimizationResult newton_minimize(const LossFn& loss, const GradFn& grad, const HessFn& hess, const Vector& init,
                                   const OptimizerConfig& cfg) {
    cfg.validate();
    OptimizationResult out;
    Vector v = init;
    double current = loss(v);
    if (!std::isfinite(current)) throw NumericalError("newton: initial loss is not finite");
    double mu = std::min(cfg.damping, kMuMax);
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const Vector g = grad(v);
        if (!all_finite(g)) {
            throw NumericalError("newton: non-finite gradient at epoch " + std::to_string(epoch + 1) +
                                 " (loss " + std::to_string(current) + ")");
        }
        out.gradient_inf = g.lpNorm<Eigen::Infinity>();
        if (out.gradient_inf < cfg.tolerance) {
            out.converged = true;
            break;
        }
        Matrix h = hess(v);
        if (!h.allFinite()) throw NumericalError("newton: non-finite Hessian at epoch " + std::to_string(epoch + 1));
        h.diagonal().array() += mu;
        const auto step = solve_linear(h, -g);
        const Vector trial = v + step.x;
        const double trial_loss = all_finite(trial) ? loss(trial) : std::numeric_limits<double>::infinity();
        bool accept = std::isfinite(trial_loss) && trial_loss <= current;
        // Near the optimum the loss stops resolving progress; a change below rounding counts as
        // a tie, accepted only if the gradient shrinks. The recorded loss is not raised.
        bool tie = false;
        if (!accept && std::isfinite(trial_loss) &&
            trial_loss - current <= 16.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(current))) {
            const Vector gt = grad(trial);
            tie = all_finite(gt) && gt.lpNorm<Eigen::Infinity>() < out.gradient_inf;
            accept = tie;
        }
        if (accept) {
            v = trial;
            if (!tie) current = trial_loss;
            mu = mu / 10.0;
            if (mu > 0.0 && mu < kMuMin) mu = kMuMin;
            ++out.accepted_steps;
        } else {
            mu = std::clamp(mu * 10.0, kMuMin, kMuMax);
        }
        out.history.push_back(current);
    }
    if (!out.converged) {
        const Vector g = grad(v);
        if (!all_finite(g)) throw NumericalError("newton: non-finite gradient at final iterate");
        out.gradient_inf = g.lpNorm<Eigen::Infinity>();
        out.converged = out.gradient_inf < cfg.tolerance;
    }
    out.x = std::move(v);
    return out;
}

OptimizationResult adam_minimize(const LossFn& loss, const GradFn& grad, const Vector& init,
                                 const OptimizerConfig& cfg) {
    cfg.validate();
    constexpr double beta1 = 0.9;
    constexpr double beta2 = 0.999;
    constexpr double eps = 1e-8;
    OptimizationResult out;
    out.history.reserve(static_cast<std::size_t>(cfg.epochs));
    Vector v = init;
    Vector m1 = Vector::Zero(v.size());
    Vector m2 = Vector::Zero(v.size());
    double b1t = 1.0;
    double b2t = 1.0;
    Vector best = v;
    double best_loss = std::numeric_limits<double>::infinity();
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const double l = loss(v);
        const Vector g = grad(v);
        if (!std::isfinite(l) || !all_finite(g)) {
            throw NumericalError("adam: non-finite loss or gradient at epoch " + std::to_string(epoch + 1));
        }
        out.history.push_back(l);
        if (l < best_loss) {
            best_loss = l;
            best = v;
            out.gradient_inf = g.lpNorm<Eigen::Infinity>();
        }
        b1t *= beta1;
        b2t *= beta2;
        m1 = beta1 * m1 + (1.0 - beta1) * g;
        m2 = beta2 * m2 + (1.0 - beta2) * g.cwiseProduct(g);
        const Vector mhat = m1 / (1.0 - b1t);
        const Vector vhat = m2 / (1.0 - b2t);
        v.array() -= cfg.learning_rate * mhat.array() / (vhat.array().sqrt() + eps);
    }
    const double last = loss(v);
    if (std::isfinite(last) && last < best_loss) {
        best = v;
        const Vector g = grad(v);
        out.gradient_inf = g.lpNorm<Eigen::Infinity>();
    }
    out.accepted_steps = cfg.epochs;
    out.x = std::move(best);
    return out;
}

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784, a76 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200, e6 = 22.0 / 525,
                 e7 = -1.0 / 40;
// Continuous extension coefficients.
constexpr double d1 = -12715105075.0 / 11282082432, d3 = 87487479700.0 / 32700410799,
                 d4 = -10690763975.0 / 1880347072, d5 = 701980252875.0 / 199316789632,
                 d6 = -1453857185.0 / 822651844, d7 = 69997945.0 / 29380423;

void check_output_grid(double x0, std::span<const double> grid) {
    if (grid.empty()) throw UsageError("ODE output grid is empty");
    if (std::abs(grid.front() - x0) > 1e-14 * (1.0 + std::abs(x0))) throw UsageError("ODE output grid must start at x0");
    for (std::size_t i = 1; i < grid.size(); ++i) {
        if (grid[i] < grid[i - 1]) throw UsageError("ODE output grid must be ascending");
    }
}

}  // namespace

OdeTable rk45_integrate(const OdeRhs& rhs, double x0, const Vector& f0, std::span<const double> output_grid,
                        const Rk45Options& opts) {
    check_output_grid(x0, output_grid);
    OdeTable out;
    out.x.assign(output_grid.begin(), output_grid.end());
    out.f.reserve(output_grid.size());
    out.f.push_back(f0);
    const double x_end = output_grid.back();
    if (output_grid.size() == 1 || x_end == x0) {
        out.f.resize(output_grid.size(), f0);
        return out;
    }
    const auto dim = f0.size();
    double x = x0;
    Vector y = f0;
    Vector k1 = rhs(x, y);
    double h = std::min(1e-3 * (x_end - x0), 1e-2);
    std::size_t next = 1;
    Vector k2(dim), k3(dim), k4(dim), k5(dim), k6(dim), k7(dim), ynew(dim), err(dim);
    while (next < output_grid.size()) {
        if (out.steps++ > opts.max_steps) throw NumericalError("rk45: maximum step count exceeded");
        if (h < 1e-14 * std::max(1.0, std::abs(x))) throw NumericalError("rk45: step size underflow at x=" + std::to_string(x));
        h = std::min(h, x_end - x);
        k2 = rhs(x + c2 * h, y + h * (a21 * k1));
        k3 = rhs(x + c3 * h, y + h * (a31 * k1 + a32 * k2));
        k4 = rhs(x + c4 * h, y + h * (a41 * k1 + a42 * k2 + a43 * k3));
        k5 = rhs(x + c5 * h, y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
        k6 = rhs(x + h, y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
        ynew = y + h * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
        k7 = rhs(x + h, ynew);
        err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
        double acc = 0.0;
        for (Eigen::Index i = 0; i < dim; ++i) {
            const double sc = opts.atol + opts.rtol * std::max(std::abs(y(i)), std::abs(ynew(i)));
            acc += (err(i) / sc) * (err(i) / sc);
        }
        const double enorm = std::sqrt(acc / static_cast<double>(dim));
        if (!std::isfinite(enorm)) throw NumericalError("rk45: non-finite error estimate at x=" + std::to_string(x));
        if (enorm <= 1.0) {
            const double x_new = x + h;
            // Dense output on (x, x_new].
            const Vector ydiff = ynew - y;
            const Vector bspl = h * k1 - ydiff;
            const Vector r4 = ydiff - h * k7 - bspl;
            const Vector r5 = h * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * k7);
            while (next < output_grid.size() && output_grid[next] <= x_new) {
                const double theta = (output_grid[next] - x) / h;
                const double theta1 = 1.0 - theta;
                out.f.push_back(y + theta * (ydiff + theta1 * (bspl + theta * (r4 + theta1 * r5))));
                ++next;
            }
            x = x_new;
            y = ynew;
            k1 = k7;
            if (x >= x_end) {
                while (next < output_grid.size()) {
                    out.f.push_back(y);
                    ++next;
                }
            }
        }
        const double fac = enorm == 0.0 ? 5.0 : 0.9 * std::pow(enorm, -0.2);
        h *= std::clamp(fac, 0.2, enorm <= 1.0 ? 5.0 : 1.0);
    }
    return out;
}

OdeTable rk4_fixed(const OdeRhs& rhs, double x0, const Vector& f0, std::span<const double> output_grid,
                   double step) {
    check_output_grid(x0, output_grid);
    if (!(step > 0.0)) throw UsageError("rk4: step must be positive");
    OdeTable out;
    out.x.assign(output_grid.begin(), output_grid.end());
    out.f.push_back(f0);
    double x = x0;
    Vector y = f0;
    for (std::size_t i = 1; i < output_grid.size(); ++i) {
        const double target = output_grid[i];
        const auto n = static_cast<std::size_t>(std::ceil((target - x) / step - 1e-9));
        const double h = n == 0 ? 0.0 : (target - x) / static_cast<double>(n);
        for (std::size_t s = 0; s < n; ++s) {
            const Vector q1 = rhs(x, y);
            const Vector q2 = rhs(x + 0.5 * h, y + 0.5 * h * q1);
            const Vector q3 = rhs(x + 0.5 * h, y + 0.5 * h * q2);
            const Vector q4 = rhs(x + h, y + h * q3);
            y += (h / 6.0) * (q1 + 2.0 * q2 + 2.0 * q3 + q4);
            x += h;
            ++out.steps;
        }
        x = target;
        out.f.push_back(y);
    }
    return out;
}

double central_diff(const std::function<double(double)>& fn, double x, int order, double h) {
    if (!(h > 0.0)) throw UsageError("central_diff: step must be positive");
    if (order != 1 && order != 2) throw UsageError("central_diff: order must be 1 or 2");
    auto stencil = [&](double s) {
        if (order == 1) return (fn(x + s) - fn(x - s)) / (2.0 * s);
        return (fn(x + s) - 2.0 * fn(x) + fn(x - s)) / (s * s);
    };
    return (4.0 * stencil(0.5 * h) - stencil(h)) / 3.0;
}

Matrix fd_jacobian(const std::function<Vector(const Vector&)>& fn, const Vector& x, double h) {
    const Vector f0 = fn(x);
    Matrix jac(f0.size(), x.size());
    Vector xp = x;
    for (Eigen::Index j = 0; j < x.size(); ++j) {
        const double orig = xp(j);
        auto column = [&](double s) {
            xp(j) = orig + s;
            const Vector fp = fn(xp);
            xp(j) = orig - s;
            const Vector fm = fn(xp);
            xp(j) = orig;
            return Vector((fp - fm) / (2.0 * s));
        };
        jac.col(j) = (4.0 * column(0.5 * h) - column(h)) / 3.0;
    }
    return jac;
}

}  // namespace qkde::numerics
