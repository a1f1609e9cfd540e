#include "qkde/kernels.hpp"

#include <array>
#include <cmath>
#include <functional>
#include <numbers>
#include <string>

#include "qkde/error.hpp"

namespace qkde::kernels {

namespace {

constexpr std::array<std::array<double, 3>, 3> kBinomial{{{1, 0, 0}, {1, 1, 0}, {1, 2, 1}}};

// Probabilists' Hermite polynomial He_k(t), k <= 4.
double hermite(int k, double t) {
    switch (k) {
        case 0:
            return 1.0;
        case 1:
            return t;
        case 2:
            return t * t - 1.0;
        case 3:
            return t * t * t - 3.0 * t;
        case 4:
            return t * t * t * t - 6.0 * t * t + 3.0;
        default:
            throw UsageError("RBF derivative order too high");
    }
}

double fidelity(const qsim::FeatureMapSpec& map, double x, std::span<const double> ox, double y,
                std::span<const double> oy) {
    return std::norm(qsim::overlap(qsim::prepare_state(map, x, ox), qsim::prepare_state(map, y, oy)));
}

// Applies the two-point shift rule for each remaining derivative slot. `slots` holds 0 for an
// x-derivative and 1 for a y-derivative.
double shift_recursive(const qsim::FeatureMapSpec& map, const std::vector<qsim::GateOp>& gates, double x, double y,
                       std::vector<double>& ox, std::vector<double>& oy, std::span<const int> slots) {
    if (slots.empty()) return fidelity(map, x, ox, y, oy);
    auto& off = slots.front() == 0 ? ox : oy;
    const auto rest = slots.subspan(1);
    constexpr double half_pi = std::numbers::pi / 2.0;
    double total = 0.0;
    for (std::size_t k = 0; k < gates.size(); ++k) {
        const double c = gates[k].value;
        if (c == 0.0) continue;
        off[k] += half_pi;
        const double plus = shift_recursive(map, gates, x, y, ox, oy, rest);
        off[k] -= 2.0 * half_pi;
        const double minus = shift_recursive(map, gates, x, y, ox, oy, rest);
        off[k] += half_pi;
        total += c * 0.5 * (plus - minus);
    }
    return total;
}

double shift_derivative(const KernelSpec& spec, DerivOrder ord, double x, double y) {
    const auto& map = spec.feature_map();
    const auto gates = map.encoded_gates();
    std::vector<double> ox(gates.size(), 0.0);
    std::vector<double> oy(gates.size(), 0.0);
    std::vector<int> slots;
    slots.insert(slots.end(), static_cast<std::size_t>(ord.n), 0);
    slots.insert(slots.end(), static_cast<std::size_t>(ord.m), 1);
    return shift_recursive(map, gates, x, y, ox, oy, slots);
}

double central(const std::function<double(double)>& f, double t, int order, double h) {
    auto stencil = [&](double s) {
        if (order == 1) return (f(t + s) - f(t - s)) / (2.0 * s);
        return (f(t + s) - 2.0 * f(t) + f(t - s)) / (s * s);
    };
    return (4.0 * stencil(0.5 * h) - stencil(h)) / 3.0;
}

// Steps balancing truncation against roundoff (which grows like eps / h^order).
double fd_step(int total_order) {
    if (total_order <= 1) return 1e-3;
    if (total_order == 2) return 5e-3;
    if (total_order == 3) return 1e-2;
    return 2.5e-2;
}

double finite_diff_derivative(const KernelSpec& spec, DerivOrder ord, double x, double y) {
    const double h = fd_step(ord.total());
    // d^m/dy^m at fixed x, as a function of x.
    auto dy = [&](double xx) {
        std::function<double(double)> g = [&](double yy) { return kernel_value(spec, xx, yy); };
        return ord.m == 0 ? g(y) : central(g, y, ord.m, h);
    };
    if (ord.n == 0) return dy(x);
    std::function<double(double)> fx = dy;
    return central(fx, x, ord.n, h);
}

// k-th derivative (k <= 4) of cos^2(c d / 2) = (1 + cos(c d)) / 2 with respect to d.
double cos2_derivative(double c, double d, int k) {
    if (k == 0) return 0.5 * (1.0 + std::cos(c * d));
    return 0.5 * std::pow(c, k) * std::cos(c * d + k * std::numbers::pi / 2.0);
}

}  // namespace

void DerivOrder::validate() const {
    if (n < 0 || m < 0 || n > 2 || m > 2) {
        throw UsageError("derivative order (" + std::to_string(n) + "," + std::to_string(m) +
                         ") unsupported; each order must be in [0, 2]");
    }
}

KernelSpec KernelSpec::quantum(qsim::FeatureMapSpec map) {
    KernelSpec s{QuantumKernel{std::move(map)}};
    s.validate();
    return s;
}

KernelSpec KernelSpec::rbf(double sigma) {
    KernelSpec s{RbfKernel{sigma}};
    s.validate();
    return s;
}

const qsim::FeatureMapSpec& KernelSpec::feature_map() const {
    if (!is_quantum()) throw UsageError("RBF kernel has no feature map");
    return std::get<QuantumKernel>(variant_).map;
}

double KernelSpec::sigma() const {
    if (is_quantum()) throw UsageError("quantum kernel has no sigma");
    return std::get<RbfKernel>(variant_).sigma;
}

void KernelSpec::validate() const {
    if (is_quantum()) {
        feature_map().validate();
    } else if (!(sigma() > 0.0) || !std::isfinite(sigma())) {
        throw ConfigError("RBF sigma must be positive");
    }
}

double rbf_derivative(double sigma, DerivOrder ord, double x, double y) {
    const double d = x - y;
    const double t = d / sigma;
    const double base = std::exp(-0.5 * t * t);
    const int k = ord.total();
    // d/dx = d/dd, d/dy = -d/dd; d^k/dd^k exp(-d^2/2s^2) = (-1/s)^k He_k(d/s) exp(...).
    const double sign = ((ord.m % 2) == 0 ? 1.0 : -1.0) * ((k % 2) == 0 ? 1.0 : -1.0);
    return sign * std::pow(sigma, -k) * hermite(k, t) * base;
}

double kernel_value(const KernelSpec& spec, double x, double y) {
    if (!spec.is_quantum()) return rbf_derivative(spec.sigma(), {0, 0}, x, y);
    const auto& map = spec.feature_map();
    return std::norm(qsim::overlap(qsim::prepare_state(map, x), qsim::prepare_state(map, y)));
}

double kernel_derivative_from_states(const qsim::DerivativeStates& at_x, const qsim::DerivativeStates& at_y,
                                     DerivOrder ord) {
    ord.validate();
    std::complex<double> total{0.0};
    for (int a = 0; a <= ord.n; ++a) {
        for (int b = 0; b <= ord.m; ++b) {
            const auto z1 = qsim::overlap(at_x.order(a), at_y.order(b));
            const auto z2 = qsim::overlap(at_x.order(ord.n - a), at_y.order(ord.m - b));
            total += kBinomial[ord.n][a] * kBinomial[ord.m][b] * z1 * std::conj(z2);
        }
    }
    return total.real();
}

double kernel_derivative(const KernelSpec& spec, DerivOrder ord, double x, double y, DerivMethod method) {
    ord.validate();
    switch (method) {
        case DerivMethod::insertion: {
            if (!spec.is_quantum()) return rbf_derivative(spec.sigma(), ord, x, y);
            const auto& map = spec.feature_map();
            const auto sx = qsim::derivative_states(map, x, ord.n);
            const auto sy = qsim::derivative_states(map, y, ord.m);
            return kernel_derivative_from_states(sx, sy, ord);
        }
        case DerivMethod::shift:
            if (!spec.is_quantum()) throw UsageError("parameter-shift derivatives require a quantum kernel");
            return shift_derivative(spec, ord, x, y);
        case DerivMethod::finite_diff:
            return finite_diff_derivative(spec, ord, x, y);
    }
    throw UsageError("unknown derivative method");
}

double product_map_closed_form(std::span<const double> coeffs, double x, double y, DerivOrder ord) {
    const int k = ord.total();
    if (ord.n < 0 || ord.m < 0 || k > 4) throw UsageError("closed form supports total order <= 4");
    const double d = x - y;
    // Leibniz accumulation of d^j/dd^j prod_q g_q(d), j = 0..k.
    std::array<double, 5> prod{1.0, 0.0, 0.0, 0.0, 0.0};
    constexpr std::array<std::array<double, 5>, 5> binom{
        {{1, 0, 0, 0, 0}, {1, 1, 0, 0, 0}, {1, 2, 1, 0, 0}, {1, 3, 3, 1, 0}, {1, 4, 6, 4, 1}}};
    for (double c : coeffs) {
        std::array<double, 5> g{};
        for (int j = 0; j <= k; ++j) g[j] = cos2_derivative(c, d, j);
        std::array<double, 5> next{};
        for (int j = 0; j <= k; ++j) {
            for (int i = 0; i <= j; ++i) next[j] += binom[j][i] * prod[i] * g[j - i];
        }
        prod = next;
    }
    return ((ord.m % 2) == 0 ? 1.0 : -1.0) * prod[k];
}

StateCache::StateCache(const KernelSpec& spec, std::span<const double> points)
    : points_(points.begin(), points.end()) {
    if (!spec.is_quantum()) return;
    states_.reserve(points_.size());
    for (double p : points_) states_.push_back(qsim::derivative_states(spec.feature_map(), p, 2));
}

KernelEvaluator::KernelEvaluator(KernelSpec spec) : spec_(std::move(spec)) {}

std::map<DerivOrder, Matrix> KernelEvaluator::cross_all(std::span<const double> first, std::span<const double> second,
                                                        std::span<const DerivOrder> orders) const {
    for (const auto& o : orders) o.validate();
    std::map<DerivOrder, Matrix> out;
    const auto rows = static_cast<Eigen::Index>(first.size());
    const auto cols = static_cast<Eigen::Index>(second.size());
    if (!spec_.is_quantum()) {
        for (const auto& o : orders) {
            Matrix m(rows, cols);
            for (Eigen::Index r = 0; r < rows; ++r) {
                for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = rbf_derivative(spec_.sigma(), o, first[r], second[c]);
            }
            evaluations_ += static_cast<std::size_t>(rows * cols);
            out.emplace(o, std::move(m));
        }
        return out;
    }
    const StateCache cf(spec_, first);
    const StateCache cs(spec_, second);
    for (const auto& o : orders) {
        Matrix m(rows, cols);
        for (Eigen::Index r = 0; r < rows; ++r) {
            for (Eigen::Index c = 0; c < cols; ++c) {
                m(r, c) = kernel_derivative_from_states(cf.at(static_cast<std::size_t>(r)),
                                                        cs.at(static_cast<std::size_t>(c)), o);
            }
        }
        evaluations_ += static_cast<std::size_t>(rows * cols);
        out.emplace(o, std::move(m));
    }
    return out;
}

Matrix KernelEvaluator::cross(std::span<const double> first, std::span<const double> second, DerivOrder ord) const {
    const std::array<DerivOrder, 1> one{ord};
    return std::move(cross_all(first, second, one).at(ord));
}

void validate_grid(std::span<const double> grid) {
    if (grid.empty()) throw DataError("grid must be nonempty");
    for (std::size_t i = 1; i < grid.size(); ++i) {
        if (!(grid[i] > grid[i - 1])) {
            throw DataError("degenerate grid: points must be strictly increasing (index " + std::to_string(i) + ")");
        }
    }
}

Matrix gram_block(const KernelSpec& spec, std::span<const double> grid, DerivOrder ord) {
    validate_grid(grid);
    const KernelEvaluator ev(spec);
    // cross(r, c) = k(grid_r, grid_c); Omega(i, j) = k(grid_j, grid_i).
    return ev.cross(grid, grid, ord).transpose();
}

BoundaryTerms boundary_terms(const KernelSpec& spec, std::span<const double> grid, double x0, DerivOrder ord) {
    validate_grid(grid);
    const KernelEvaluator ev(spec);
    const std::array<double, 1> origin{x0};
    const Matrix row = ev.cross(origin, grid, ord);
    const Matrix corner = ev.cross(origin, origin, ord);
    return {row.row(0).transpose(), corner(0, 0)};
}

const Matrix& GramBundle::block(DerivOrder ord) const {
    const auto it = blocks.find(ord);
    if (it == blocks.end()) {
        throw UsageError("Gram bundle lacks order (" + std::to_string(ord.n) + "," + std::to_string(ord.m) + ")");
    }
    return it->second;
}

const Vector& GramBundle::h(DerivOrder ord) const {
    const auto it = boundary.find(ord);
    if (it == boundary.end()) {
        throw UsageError("Gram bundle lacks boundary order (" + std::to_string(ord.n) + "," + std::to_string(ord.m) +
                         ")");
    }
    return it->second;
}

double GramBundle::h_corner(DerivOrder ord) const {
    const auto it = corner.find(ord);
    if (it == corner.end()) {
        throw UsageError("Gram bundle lacks corner order (" + std::to_string(ord.n) + "," + std::to_string(ord.m) + ")");
    }
    return it->second;
}

GramBundle build_gram_bundle(const KernelSpec& spec, std::span<const double> grid, double x0,
                             std::span<const DerivOrder> orders) {
    validate_grid(grid);
    GramBundle bundle;
    bundle.grid.assign(grid.begin(), grid.end());
    bundle.x0 = x0;
    std::vector<double> points(grid.begin(), grid.end());
    points.push_back(x0);
    const std::size_t n = grid.size();
    for (const auto& o : orders) o.validate();

    auto eval = [&](const StateCache& cache, std::size_t a, std::size_t b, DerivOrder o) {
        if (!spec.is_quantum()) return rbf_derivative(spec.sigma(), o, points[a], points[b]);
        return kernel_derivative_from_states(cache.at(a), cache.at(b), o);
    };
    const StateCache cache(spec, points);
    for (const auto& o : orders) {
        Matrix m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = eval(cache, j, i, o);
            }
        }
        Vector h(static_cast<Eigen::Index>(n));
        for (std::size_t i = 0; i < n; ++i) h(static_cast<Eigen::Index>(i)) = eval(cache, n, i, o);
        bundle.blocks.emplace(o, std::move(m));
        bundle.boundary.emplace(o, std::move(h));
        bundle.corner.emplace(o, eval(cache, n, n, o));
    }
    return bundle;
}

std::vector<DerivOrder> orders_up_to(int max_each) {
    std::vector<DerivOrder> out;
    for (int n = 0; n <= max_each; ++n) {
        for (int m = 0; m <= max_each; ++m) out.push_back({n, m});
    }
    return out;
}

}  // namespace qkde::kernels
