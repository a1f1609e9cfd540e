#pragma once

// Built-in problems: regression data and the ODEs solved by the tool.

#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "qkde/mmr.hpp"

namespace qkde::app {

enum class ProblemOrder { regression, first, second };

struct Problem {
    std::string name;
    ProblemOrder order = ProblemOrder::regression;
    std::map<std::string, double> params;  // resolved, including defaults
    mmr::OdeFunctions ode;                 // f' = g(x, f) or f'' = g(x, f)
    double x0 = 0.0;
    double f0 = 0.0;
    double df0 = 0.0;
    /// Set for linear first-order problems written as f' + lin_g(x) f + lin_r(x) = 0.
    std::function<double(double)> lin_g;
    std::function<double(double)> lin_r;
    /// Closed-form solution and its derivative, when known.
    std::function<double(double)> analytic;
    std::function<double(double)> analytic_prime;

    [[nodiscard]] bool is_linear() const { return static_cast<bool>(lin_g); }
};

/// Names: regression, linear_fading_oscillator, duffing, custom_first_order.
/// Unknown names or parameter keys raise ConfigError.
[[nodiscard]] Problem make_problem(const std::string& name, const std::map<std::string, double>& overrides = {});

[[nodiscard]] std::vector<std::string> problem_names();

struct ReferenceTable {
    std::vector<double> x;
    std::vector<double> f;
    std::vector<double> df;
};

/// Analytic solution when registered, otherwise Dormand-Prince at rtol 1e-10. The grid must
/// be ascending with every point >= x0. Throws UsageError for the regression problem.
[[nodiscard]] ReferenceTable reference_solution(const Problem& problem, std::span<const double> grid);

}  // namespace qkde::app
