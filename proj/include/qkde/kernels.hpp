#pragma once

// Kernel values, kernel derivatives and Gram/boundary assembly.
//
// Derivative notation: DerivOrder{n, m} is d^(n+m) k(x, y) / dx^n dy^m, i.e. n derivatives
// in the FIRST argument and m in the SECOND.

#include <atomic>
#include <compare>
#include <map>
#include <span>
#include <variant>
#include <vector>

#include "qkde/linalg.hpp"
#include "qkde/qsim.hpp"

namespace qkde::kernels {

struct DerivOrder {
    int n = 0;  // order in the first argument
    int m = 0;  // order in the second argument

    /// Throws UsageError unless 0 <= n, m <= 2.
    void validate() const;
    [[nodiscard]] int total() const noexcept { return n + m; }
    [[nodiscard]] DerivOrder transposed() const noexcept { return {m, n}; }
    auto operator<=>(const DerivOrder&) const = default;
};

struct QuantumKernel {
    qsim::FeatureMapSpec map;
};

struct RbfKernel {
    double sigma = 1.0;
};

/// Fidelity kernel |<psi(x)|psi(y)>|^2 over a feature map, or exp(-(x-y)^2 / (2 sigma^2)).
class KernelSpec {
public:
    static KernelSpec quantum(qsim::FeatureMapSpec map);
    static KernelSpec rbf(double sigma);

    [[nodiscard]] bool is_quantum() const noexcept { return std::holds_alternative<QuantumKernel>(variant_); }
    [[nodiscard]] const qsim::FeatureMapSpec& feature_map() const;
    [[nodiscard]] double sigma() const;
    void validate() const;

private:
    explicit KernelSpec(std::variant<QuantumKernel, RbfKernel> v) : variant_(std::move(v)) {}
    std::variant<QuantumKernel, RbfKernel> variant_;
};

enum class DerivMethod { insertion, shift, finite_diff };

[[nodiscard]] double kernel_value(const KernelSpec& spec, double x, double y);

/// Insertion: Leibniz expansion of k = z conj(z), z = <psi(x)|psi(y)>, over derivative states.
/// Shift: two-point parameter-shift rule per encoded gate, composed for higher/mixed orders.
/// Finite-diff: nested central differences with one Richardson extrapolation.
[[nodiscard]] double kernel_derivative(const KernelSpec& spec, DerivOrder ord, double x, double y,
                                       DerivMethod method = DerivMethod::insertion);

/// Closed form of the entangler-free product map, prod_q cos^2(c_q (x - y) / 2), and its
/// partial derivatives up to total order 4. Independent of the simulator.
[[nodiscard]] double product_map_closed_form(std::span<const double> coeffs, double x, double y, DerivOrder ord);

/// d^(n+m) k / dx^n dy^m from precomputed derivative states of x and y.
[[nodiscard]] double kernel_derivative_from_states(const qsim::DerivativeStates& at_x,
                                                   const qsim::DerivativeStates& at_y, DerivOrder ord);

/// Closed-form RBF derivative.
[[nodiscard]] double rbf_derivative(double sigma, DerivOrder ord, double x, double y);

/// Derivative states psi^(0..2) for a fixed list of points, computed once.
class StateCache {
public:
    StateCache(const KernelSpec& spec, std::span<const double> points);
    [[nodiscard]] const qsim::DerivativeStates& at(std::size_t i) const { return states_.at(i); }
    [[nodiscard]] std::size_t size() const noexcept { return points_.size(); }
    [[nodiscard]] double point(std::size_t i) const { return points_.at(i); }

private:
    std::vector<double> points_;
    std::vector<qsim::DerivativeStates> states_;
};

/// Pairwise kernel-derivative matrices over point sets, with a per-instance evaluation counter.
/// States are cached per point set before any pair is evaluated.
class KernelEvaluator {
public:
    explicit KernelEvaluator(KernelSpec spec);

    [[nodiscard]] const KernelSpec& spec() const noexcept { return spec_; }

    /// Entry (r, c) = d^(n+m) k(first[r], second[c]).
    [[nodiscard]] Matrix cross(std::span<const double> first, std::span<const double> second, DerivOrder ord) const;
    /// One matrix per requested order, sharing the state caches.
    [[nodiscard]] std::map<DerivOrder, Matrix> cross_all(std::span<const double> first, std::span<const double> second,
                                                         std::span<const DerivOrder> orders) const;

    [[nodiscard]] std::size_t evaluations() const noexcept { return evaluations_.load(); }

private:
    KernelSpec spec_;
    mutable std::atomic<std::size_t> evaluations_{0};
};

/// Omega^m_n over a collocation grid: [Omega]_{i,j} = d^(n+m) k(x_j, x_i) (first argument is the
/// column point). Throws DataError for an empty or non-increasing grid.
[[nodiscard]] Matrix gram_block(const KernelSpec& spec, std::span<const double> grid, DerivOrder ord);

struct BoundaryTerms {
    Vector h;       // h_i = d^(n+m) k(x0, x_i)
    double corner;  // d^(n+m) k(x0, x0)
};

[[nodiscard]] BoundaryTerms boundary_terms(const KernelSpec& spec, std::span<const double> grid, double x0,
                                           DerivOrder ord);

/// Gram blocks, boundary vectors and corner scalars for every requested order; derivative states
/// are computed once for the grid and x0.
struct GramBundle {
    std::vector<double> grid;
    double x0 = 0.0;
    std::map<DerivOrder, Matrix> blocks;
    std::map<DerivOrder, Vector> boundary;
    std::map<DerivOrder, double> corner;

    [[nodiscard]] std::size_t size() const noexcept { return grid.size(); }
    /// Throws UsageError when the order was not assembled.
    [[nodiscard]] const Matrix& block(DerivOrder ord) const;
    [[nodiscard]] const Vector& h(DerivOrder ord) const;
    [[nodiscard]] double h_corner(DerivOrder ord) const;
};

[[nodiscard]] GramBundle build_gram_bundle(const KernelSpec& spec, std::span<const double> grid, double x0,
                                           std::span<const DerivOrder> orders);

/// Every order with n, m <= max_each.
[[nodiscard]] std::vector<DerivOrder> orders_up_to(int max_each);

/// Throws DataError unless the grid is nonempty and strictly increasing.
void validate_grid(std::span<const double> grid);

}  // namespace qkde::kernels
