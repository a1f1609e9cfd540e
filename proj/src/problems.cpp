#include "qkde/problems.hpp"

#include <cmath>

#include "qkde/error.hpp"
#include "qkde/numerics.hpp"

namespace qkde::app {

namespace {

using Params = std::map<std::string, double>;

Params resolve(const std::string& name, Params defaults, const Params& overrides) {
    for (const auto& [k, v] : overrides) {
        if (!defaults.count(k)) throw ConfigError("problem '" + name + "' has no parameter '" + k + "'");
        defaults[k] = v;
    }
    return defaults;
}

Problem linear_fading_oscillator(const Params& overrides) {
    Problem p;
    p.name = "linear_fading_oscillator";
    p.order = ProblemOrder::first;
    p.params = resolve(p.name, {{"lambda", 20.0}, {"kappa", 0.1}, {"f0", 1.0}, {"x0", 0.0}}, overrides);
    const double lam = p.params.at("lambda");
    const double kap = p.params.at("kappa");
    p.x0 = p.params.at("x0");
    p.f0 = p.params.at("f0");
    const double damp = lam * kap;
    p.lin_g = [damp](double) { return damp; };
    p.lin_r = [lam, damp](double x) { return lam * std::exp(-damp * x) * std::sin(lam * x); };
    p.ode.g = [lam, damp](double x, double f) { return -damp * f - lam * std::exp(-damp * x) * std::sin(lam * x); };
    p.ode.g_f = [damp](double, double) { return -damp; };
    p.ode.g_ff = [](double, double) { return 0.0; };
    // The closed form holds for f(0) = 1; other initial data fall back to integration.
    if (p.x0 == 0.0 && p.f0 == 1.0) {
        p.analytic = [lam, damp](double x) { return std::exp(-damp * x) * std::cos(lam * x); };
        p.analytic_prime = [lam, damp](double x) {
            return -std::exp(-damp * x) * (damp * std::cos(lam * x) + lam * std::sin(lam * x));
        };
    }
    return p;
}

Problem duffing(const Params& overrides) {
    Problem p;
    p.name = "duffing";
    p.order = ProblemOrder::second;
    p.params = resolve(p.name, {{"a", 1.0}, {"b", 1.0}, {"c", 3.0}, {"d", 3.0}, {"f0", 1.0}, {"df0", 1.0}, {"x0", 0.0}},
                       overrides);
    const double a = p.params.at("a");
    const double b = p.params.at("b");
    const double c = p.params.at("c");
    const double d = p.params.at("d");
    p.x0 = p.params.at("x0");
    p.f0 = p.params.at("f0");
    p.df0 = p.params.at("df0");
    p.ode.g = [a, b, c, d](double x, double f) { return c * std::cos(d * x) - a * f - b * f * f * f; };
    p.ode.g_f = [a, b](double, double f) { return -a - 3.0 * b * f * f; };
    p.ode.g_ff = [b](double, double f) { return -6.0 * b * f; };
    return p;
}

Problem custom_first_order(const Params& overrides) {
    Problem p;
    p.name = "custom_first_order";
    p.order = ProblemOrder::first;
    p.params = resolve(p.name,
                       {{"p_const", 0.0},
                        {"p_x", 0.0},
                        {"p_lin", 1.0},
                        {"p_quad", -1.0},
                        {"p_amp", 0.0},
                        {"p_freq", 1.0},
                        {"f0", 0.5},
                        {"x0", 0.0}},
                       overrides);
    const double k0 = p.params.at("p_const");
    const double kx = p.params.at("p_x");
    const double kl = p.params.at("p_lin");
    const double kq = p.params.at("p_quad");
    const double amp = p.params.at("p_amp");
    const double freq = p.params.at("p_freq");
    p.x0 = p.params.at("x0");
    p.f0 = p.params.at("f0");
    p.ode.g = [=](double x, double f) { return k0 + kx * x + kl * f + kq * f * f + amp * std::sin(freq * x); };
    p.ode.g_f = [=](double, double f) { return kl + 2.0 * kq * f; };
    p.ode.g_ff = [=](double, double) { return 2.0 * kq; };
    if (kq == 0.0) {
        p.lin_g = [kl](double) { return -kl; };
        p.lin_r = [=](double x) { return -(k0 + kx * x + amp * std::sin(freq * x)); };
    }
    return p;
}

}  // namespace

std::vector<std::string> problem_names() {
    return {"regression", "linear_fading_oscillator", "duffing", "custom_first_order"};
}

Problem make_problem(const std::string& name, const std::map<std::string, double>& overrides) {
    if (name == "regression") {
        Problem p;
        p.name = name;
        p.params = resolve(name, {}, overrides);
        return p;
    }
    if (name == "linear_fading_oscillator") return linear_fading_oscillator(overrides);
    if (name == "duffing") return duffing(overrides);
    if (name == "custom_first_order") return custom_first_order(overrides);
    throw ConfigError("unknown problem '" + name + "'");
}

ReferenceTable reference_solution(const Problem& problem, std::span<const double> grid) {
    if (problem.order == ProblemOrder::regression) throw UsageError("regression has no ODE reference");
    ReferenceTable out;
    out.x.assign(grid.begin(), grid.end());
    if (problem.analytic) {
        for (double x : grid) {
            out.f.push_back(problem.analytic(x));
            out.df.push_back(problem.analytic_prime(x));
        }
        return out;
    }
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (grid[i] < problem.x0 || (i > 0 && grid[i] < grid[i - 1])) {
            throw UsageError("reference grid must be ascending and start at or after x0");
        }
    }
    std::vector<double> pts;
    pts.push_back(problem.x0);
    const bool prepended = grid.empty() || grid.front() != problem.x0;
    if (prepended) pts.insert(pts.end(), grid.begin(), grid.end());
    else pts.insert(pts.end(), grid.begin() + 1, grid.end());

    numerics::OdeTable table;
    const auto& g = problem.ode.g;
    if (problem.order == ProblemOrder::first) {
        auto rhs = [&g](double x, const Vector& f) {
            Vector d(1);
            d(0) = g(x, f(0));
            return d;
        };
        Vector f0(1);
        f0 << problem.f0;
        table = numerics::rk45_integrate(rhs, problem.x0, f0, pts);
    } else {
        auto rhs = [&g](double x, const Vector& s) {
            Vector d(2);
            d << s(1), g(x, s(0));
            return d;
        };
        Vector s0(2);
        s0 << problem.f0, problem.df0;
        table = numerics::rk45_integrate(rhs, problem.x0, s0, pts);
    }
    for (std::size_t i = prepended ? 1 : 0; i < table.f.size(); ++i) {
        const Vector& s = table.f[i];
        out.f.push_back(s(0));
        out.df.push_back(problem.order == ProblemOrder::first ? g(table.x[i], s(0)) : s(1));
    }
    return out;
}

}  // namespace qkde::app
