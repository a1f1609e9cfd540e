#include "qkde/shots.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "qkde/error.hpp"
#include "qkde/seeding.hpp"

namespace qkde::shots {

namespace {

using qsim::Complex;

const qsim::FeatureMapSpec& quantum_map(const kernels::KernelSpec& spec) {
    if (!spec.is_quantum()) throw UsageError("shot estimators require a quantum kernel");
    return spec.feature_map();
}

std::int64_t bernoulli_count(Rng& rng, double p0, std::int64_t shots) {
    std::int64_t zeros = 0;
    for (std::int64_t s = 0; s < shots; ++s) {
        if (uniform01(rng) < p0) ++zeros;
    }
    return zeros;
}

double naive_estimate(const qsim::FeatureMapSpec& map, double x, std::span<const double> ox, double y,
                      std::span<const double> oy, std::int64_t shots, Rng& rng) {
    const auto phi = qsim::apply_adjoint(map, x, ox, qsim::prepare_state(map, y, oy));
    std::vector<double> cdf(phi.dimension());
    double acc = 0.0;
    for (std::size_t i = 0; i < phi.dimension(); ++i) {
        double p = std::norm(phi[i]);
        if (p < 1e-14) p = 0.0;
        acc += p;
        cdf[i] = acc;
    }
    std::int64_t zeros = 0;
    for (std::int64_t s = 0; s < shots; ++s) {
        const double u = uniform01(rng) * acc;
        const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
        if (it == cdf.begin()) ++zeros;
    }
    return static_cast<double>(zeros) / static_cast<double>(shots);
}

double estimate_at(const qsim::FeatureMapSpec& map, double x, std::span<const double> ox, double y,
                   std::span<const double> oy, std::int64_t shots, Estimator est, std::uint64_t seed) {
    Rng rng(seed);
    const auto n = static_cast<double>(shots);
    switch (est) {
        case Estimator::naive:
            return naive_estimate(map, x, ox, y, oy, shots, rng);
        case Estimator::swap: {
            const double k = std::norm(qsim::overlap(qsim::prepare_state(map, x, ox), qsim::prepare_state(map, y, oy)));
            const double p0 = std::clamp(0.5 * (1.0 + k), 0.0, 1.0);
            return 2.0 * static_cast<double>(bernoulli_count(rng, p0, shots)) / n - 1.0;
        }
        case Estimator::hadamard: {
            const Complex z = qsim::overlap(qsim::prepare_state(map, x, ox), qsim::prepare_state(map, y, oy));
            const double pr = std::clamp(0.5 * (1.0 + z.real()), 0.0, 1.0);
            const double pi = std::clamp(0.5 * (1.0 + z.imag()), 0.0, 1.0);
            const double re = 2.0 * static_cast<double>(bernoulli_count(rng, pr, shots)) / n - 1.0;
            const double im = 2.0 * static_cast<double>(bernoulli_count(rng, pi, shots)) / n - 1.0;
            return re * re + im * im;
        }
    }
    throw UsageError("unknown estimator");
}

struct ShiftState {
    const qsim::FeatureMapSpec& map;
    const std::vector<qsim::GateOp>& gates;
    double x;
    double y;
    const ShotConfig& cfg;
    std::vector<double> ox;
    std::vector<double> oy;
    std::uint64_t stream = 0;
};

double shift_estimate(ShiftState& st, std::span<const int> slots) {
    if (slots.empty()) {
        return estimate_at(st.map, st.x, st.ox, st.y, st.oy, st.cfg.shots, st.cfg.estimator,
                           derive_seed(st.cfg.seed, st.stream++));
    }
    auto& off = slots.front() == 0 ? st.ox : st.oy;
    const auto rest = slots.subspan(1);
    constexpr double half_pi = std::numbers::pi / 2.0;
    double total = 0.0;
    for (std::size_t k = 0; k < st.gates.size(); ++k) {
        const double c = st.gates[k].value;
        if (c == 0.0) continue;
        off[k] += half_pi;
        const double plus = shift_estimate(st, rest);
        off[k] -= 2.0 * half_pi;
        const double minus = shift_estimate(st, rest);
        off[k] += half_pi;
        total += c * 0.5 * (plus - minus);
    }
    return total;
}

}  // namespace

std::string to_string(Estimator e) {
    switch (e) {
        case Estimator::naive:
            return "naive";
        case Estimator::swap:
            return "swap";
        case Estimator::hadamard:
            return "hadamard";
    }
    return "naive";
}

Estimator estimator_from_string(const std::string& s) {
    if (s == "naive") return Estimator::naive;
    if (s == "swap") return Estimator::swap;
    if (s == "hadamard") return Estimator::hadamard;
    throw ConfigError("unknown shot estimator '" + s + "'");
}

void ShotConfig::validate() const {
    if (shots < 1) throw ConfigError("shots must be >= 1");
}

double estimate_kernel(const kernels::KernelSpec& spec, double x, double y, const ShotConfig& cfg) {
    cfg.validate();
    const auto& map = quantum_map(spec);
    return estimate_at(map, x, {}, y, {}, cfg.shots, cfg.estimator, cfg.seed);
}

double estimate_kernel_derivative_shift(const kernels::KernelSpec& spec, kernels::DerivOrder ord, double x, double y,
                                        const ShotConfig& cfg) {
    cfg.validate();
    ord.validate();
    const auto& map = quantum_map(spec);
    if (ord.total() > 2) throw UsageError("shot-based derivatives support total order <= 2");
    if (cfg.estimator == Estimator::hadamard) throw UsageError("shot-based derivatives use the naive or swap estimator");
    const auto gates = map.encoded_gates();
    ShiftState st{map, gates, x, y, cfg, std::vector<double>(gates.size(), 0.0), std::vector<double>(gates.size(), 0.0)};
    std::vector<int> slots(static_cast<std::size_t>(ord.n), 0);
    slots.insert(slots.end(), static_cast<std::size_t>(ord.m), 1);
    return shift_estimate(st, slots);
}

std::vector<VarianceRow> variance_scan(const kernels::KernelSpec& spec, double x, double y, Estimator estimator,
                                       std::span<const std::int64_t> shot_counts, int repeats, std::uint64_t seed) {
    if (repeats < 10) throw UsageError("variance_scan needs at least 10 repeats");
    quantum_map(spec);
    const double exact = kernels::kernel_value(spec, x, y);
    std::vector<VarianceRow> rows;
    for (std::size_t si = 0; si < shot_counts.size(); ++si) {
        const std::uint64_t base = derive_seed(seed, si);
        std::vector<double> samples(static_cast<std::size_t>(repeats));
        for (int r = 0; r < repeats; ++r) {
            samples[static_cast<std::size_t>(r)] =
                estimate_kernel(spec, x, y, {shot_counts[si], derive_seed(base, static_cast<std::uint64_t>(r)), estimator});
        }
        double mean = 0.0;
        for (double s : samples) mean += s;
        mean /= static_cast<double>(repeats);
        double var = 0.0;
        for (double s : samples) var += (s - mean) * (s - mean);
        var /= static_cast<double>(repeats - 1);
        rows.push_back({shot_counts[si], mean, std::sqrt(var), exact});
    }
    return rows;
}

}  // namespace qkde::shots
