#pragma once

// Finite-shot estimators of fidelity kernels.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "qkde/kernels.hpp"

namespace qkde::shots {

enum class Estimator { naive, swap, hadamard };

[[nodiscard]] std::string to_string(Estimator e);
/// Throws ConfigError for an unknown name.
[[nodiscard]] Estimator estimator_from_string(const std::string& s);

struct ShotConfig {
    std::int64_t shots = 1000;
    std::uint64_t seed = 0;
    Estimator estimator = Estimator::naive;

    void validate() const;
};

/// naive: frequency of the all-zeros outcome when sampling U^dagger(x) U(y)|0>.
/// swap: 2 freq(0) - 1 of an ancilla with P(0) = (1 + k) / 2.
/// hadamard: Re and Im quadratures of <psi(x)|psi(y)>, each sampled with `shots` shots,
/// combined as Re^2 + Im^2.
/// Throws UsageError for an RBF kernel.
[[nodiscard]] double estimate_kernel(const kernels::KernelSpec& spec, double x, double y, const ShotConfig& cfg);

/// Parameter-shift combination in which every shifted kernel value is a shot estimate with its
/// own sub-seed. Requires total order <= 2 and the naive or swap estimator.
[[nodiscard]] double estimate_kernel_derivative_shift(const kernels::KernelSpec& spec, kernels::DerivOrder ord,
                                                      double x, double y, const ShotConfig& cfg);

struct VarianceRow {
    std::int64_t shots = 0;
    double mean = 0.0;
    double stddev = 0.0;  // sample standard deviation over repeats
    double exact = 0.0;
};

/// Mean and spread of the estimator over `repeats` independent seeds for each shot count.
[[nodiscard]] std::vector<VarianceRow> variance_scan(const kernels::KernelSpec& spec, double x, double y,
                                                     Estimator estimator, std::span<const std::int64_t> shot_counts,
                                                     int repeats, std::uint64_t seed);

}  // namespace qkde::shots
