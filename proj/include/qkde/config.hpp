#pragma once

// key = value configuration files with [section] headers.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qkde/mmr.hpp"
#include "qkde/numerics.hpp"
#include "qkde/shots.hpp"

namespace qkde::app {

/// Flat map of "section.key" -> raw value. Keys outside any section may already carry a dot.
class ConfigFile {
public:
    /// Throws ConfigError naming the line for malformed input.
    static ConfigFile parse(const std::string& text);
    /// Throws IoError when the file cannot be read. A relative data.path is resolved against
    /// the file's directory.
    static ConfigFile load(const std::string& path);

    [[nodiscard]] bool has(const std::string& key) const { return values_.count(key) != 0; }
    [[nodiscard]] const std::map<std::string, std::string>& values() const noexcept { return values_; }
    void set(const std::string& key, const std::string& value) { values_[key] = value; }

    [[nodiscard]] std::optional<std::string> get(const std::string& key) const;

private:
    std::map<std::string, std::string> values_;
};

enum class Method { mmr, svr };
enum class KernelKind { quantum, rbf };

struct GridConfig {
    double start = 0.0;
    double end = 1.0;
    int count = 20;
};

struct ShotsConfig {
    bool enabled = false;
    shots::Estimator estimator = shots::Estimator::naive;
    std::int64_t count = 1000;
    std::uint64_t seed = 7;
};

struct ScanConfig {
    double x = 0.0;
    double y_start = 0.0;
    double y_end = 6.283185307179586;
    int y_count = 9;
    std::vector<shots::Estimator> estimators{shots::Estimator::naive, shots::Estimator::swap,
                                             shots::Estimator::hadamard};
    std::vector<std::int64_t> shot_counts{100, 1000, 10000};
};

struct ExperimentConfig {
    Method method = Method::mmr;
    std::string problem = "linear_fading_oscillator";

    KernelKind kernel = KernelKind::quantum;
    int qubits = 8;
    int layers = 2;
    int hea_depth = 5;
    std::uint64_t hea_seed = 1234;
    double encode_coeff_divisor = 2.0;
    double sigma = 0.2;

    GridConfig grid;
    std::string dataset;  // regression only
    int output_density = 10;

    double gamma = 1e5;
    std::string svr_solver;  // "direct" or "residual_adam"; empty picks the class default
    double boundary_weight = 1.0;
    mmr::HessianMode hessian = mmr::HessianMode::exact;

    numerics::OptimizerConfig optimizer;
    std::map<std::string, double> params;  // problem parameters, defaults filled by the registry

    ShotsConfig shots;
    ScanConfig scan;
    int gram_max_order = 1;
    std::string output_dir = "out";

    /// Throws ConfigError on an invalid combination.
    void validate() const;
};

/// Builds a config from parsed values; unknown keys are rejected.
[[nodiscard]] ExperimentConfig experiment_from(const ConfigFile& file);
[[nodiscard]] ExperimentConfig load_experiment(const std::string& path);

/// Canonical key = value text that parses back to the same config.
[[nodiscard]] std::string to_config_text(const ExperimentConfig& cfg);

[[nodiscard]] std::string to_string(Method m);
[[nodiscard]] std::string to_string(KernelKind k);

/// Shortest decimal form that round-trips to the same double.
[[nodiscard]] std::string format_number(double v);

}  // namespace qkde::app
