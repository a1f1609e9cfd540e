#include "qkde/config.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "qkde/error.hpp"

namespace qkde::app {

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream in(s);
    std::string item;
    while (std::getline(in, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

double parse_double(const std::string& key, const std::string& v) {
    double out = 0.0;
    const auto* end = v.data() + v.size();
    const auto [ptr, ec] = std::from_chars(v.data(), end, out);
    if (ec != std::errc() || ptr != end) throw ConfigError("'" + key + "' expects a number, got '" + v + "'");
    return out;
}

std::int64_t parse_int(const std::string& key, const std::string& v) {
    std::int64_t out = 0;
    const auto* end = v.data() + v.size();
    const auto [ptr, ec] = std::from_chars(v.data(), end, out);
    if (ec != std::errc() || ptr != end) {
        // Accept integral values written in floating form, e.g. 1e4.
        const double d = parse_double(key, v);
        if (d != static_cast<double>(static_cast<std::int64_t>(d))) {
            throw ConfigError("'" + key + "' expects an integer, got '" + v + "'");
        }
        return static_cast<std::int64_t>(d);
    }
    return out;
}

std::uint64_t parse_uint(const std::string& key, const std::string& v) {
    std::uint64_t out = 0;
    const auto* end = v.data() + v.size();
    const auto [ptr, ec] = std::from_chars(v.data(), end, out);
    if (ec != std::errc() || ptr != end) throw ConfigError("'" + key + "' expects a non-negative integer, got '" + v + "'");
    return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ConfigError("'" + key + "' expects true or false, got '" + v + "'");
}

const std::set<std::string>& known_keys() {
    static const std::set<std::string> keys{
        "experiment.method",      "experiment.problem",      "experiment.output_density",
        "kernel.type",            "kernel.qubits",          "kernel.layers",
        "kernel.hea_depth",       "kernel.hea_seed",        "kernel.encode_coeff_divisor",
        "kernel.sigma",           "grid.start",             "grid.end",
        "grid.count",             "data.path",              "svr.gamma",
        "svr.solver",             "mmr.boundary_weight",    "mmr.hessian",
        "optimizer.kind",         "optimizer.epochs",       "optimizer.learning_rate",
        "optimizer.damping",      "optimizer.tolerance",    "shots.enabled",
        "shots.estimator",        "shots.count",            "shots.seed",
        "scan.x",                 "scan.y_start",           "scan.y_end",
        "scan.y_count",           "scan.estimators",        "scan.shots",
        "gram.max_order",         "output.dir",
    };
    return keys;
}

}  // namespace

std::string format_number(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc()) return "nan";
    return {buf, ptr};
}

ConfigFile ConfigFile::parse(const std::string& text) {
    ConfigFile out;
    std::stringstream in(text);
    std::string line;
    std::string section;
    int number = 0;
    while (std::getline(in, line)) {
        ++number;
        const auto hash = line.find_first_of("#;");
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError("config line " + std::to_string(number) + ": unterminated section");
            section = trim(line.substr(1, line.size() - 2));
            if (section.empty()) throw ConfigError("config line " + std::to_string(number) + ": empty section name");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config line " + std::to_string(number) + ": expected key = value");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError("config line " + std::to_string(number) + ": empty key");
        const std::string full = section.empty() ? key : section + "." + key;
        if (out.values_.count(full)) {
            throw ConfigError("config line " + std::to_string(number) + ": duplicate key '" + full + "'");
        }
        out.values_[full] = value;
    }
    // A run summary echoes its config under "config."; keep only that part.
    std::map<std::string, std::string> echoed;
    for (const auto& [key, value] : out.values_) {
        if (key.rfind("config.", 0) == 0) echoed[key.substr(7)] = value;
    }
    if (!echoed.empty()) out.values_ = std::move(echoed);
    return out;
}

ConfigFile ConfigFile::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read config file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    ConfigFile file = parse(buf.str());
    if (const auto data = file.get("data.path"); data && !data->empty() && std::filesystem::path(*data).is_relative()) {
        const auto base = std::filesystem::absolute(std::filesystem::path(path)).parent_path();
        file.set("data.path", (base / *data).lexically_normal().string());
    }
    return file;
}

std::optional<std::string> ConfigFile::get(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return std::nullopt;
    return it->second;
}

std::string to_string(Method m) { return m == Method::mmr ? "mmr" : "svr"; }
std::string to_string(KernelKind k) { return k == KernelKind::quantum ? "quantum" : "rbf"; }

ExperimentConfig experiment_from(const ConfigFile& file) {
    for (const auto& [key, value] : file.values()) {
        if (key.rfind("problem.", 0) == 0) continue;
        if (!known_keys().count(key)) throw ConfigError("unknown config key '" + key + "'");
    }
    ExperimentConfig c;
    auto str = [&](const std::string& key, auto&& apply) {
        if (auto v = file.get(key)) apply(*v);
    };
    str("experiment.method", [&](const std::string& v) {
        if (v == "mmr") c.method = Method::mmr;
        else if (v == "svr") c.method = Method::svr;
        else throw ConfigError("experiment.method must be mmr or svr, got '" + v + "'");
    });
    str("experiment.problem", [&](const std::string& v) { c.problem = v; });
    str("experiment.output_density", [&](const std::string& v) {
        c.output_density = static_cast<int>(parse_int("experiment.output_density", v));
    });
    str("kernel.type", [&](const std::string& v) {
        if (v == "quantum") c.kernel = KernelKind::quantum;
        else if (v == "rbf") c.kernel = KernelKind::rbf;
        else throw ConfigError("kernel.type must be quantum or rbf, got '" + v + "'");
    });
    str("kernel.qubits", [&](const std::string& v) { c.qubits = static_cast<int>(parse_int("kernel.qubits", v)); });
    str("kernel.layers", [&](const std::string& v) { c.layers = static_cast<int>(parse_int("kernel.layers", v)); });
    str("kernel.hea_depth", [&](const std::string& v) { c.hea_depth = static_cast<int>(parse_int("kernel.hea_depth", v)); });
    str("kernel.hea_seed", [&](const std::string& v) { c.hea_seed = parse_uint("kernel.hea_seed", v); });
    str("kernel.encode_coeff_divisor",
        [&](const std::string& v) { c.encode_coeff_divisor = parse_double("kernel.encode_coeff_divisor", v); });
    str("kernel.sigma", [&](const std::string& v) { c.sigma = parse_double("kernel.sigma", v); });
    str("grid.start", [&](const std::string& v) { c.grid.start = parse_double("grid.start", v); });
    str("grid.end", [&](const std::string& v) { c.grid.end = parse_double("grid.end", v); });
    str("grid.count", [&](const std::string& v) { c.grid.count = static_cast<int>(parse_int("grid.count", v)); });
    str("data.path", [&](const std::string& v) { c.dataset = v; });
    str("svr.gamma", [&](const std::string& v) { c.gamma = parse_double("svr.gamma", v); });
    str("svr.solver", [&](const std::string& v) {
        if (v != "direct" && v != "residual_adam") throw ConfigError("svr.solver must be direct or residual_adam");
        c.svr_solver = v;
    });
    str("mmr.boundary_weight", [&](const std::string& v) { c.boundary_weight = parse_double("mmr.boundary_weight", v); });
    str("mmr.hessian", [&](const std::string& v) {
        if (v == "exact") c.hessian = mmr::HessianMode::exact;
        else if (v == "gauss_newton") c.hessian = mmr::HessianMode::gauss_newton;
        else throw ConfigError("mmr.hessian must be exact or gauss_newton, got '" + v + "'");
    });
    str("optimizer.kind", [&](const std::string& v) { c.optimizer.kind = numerics::optimizer_kind_from_string(v); });
    str("optimizer.epochs",
        [&](const std::string& v) { c.optimizer.epochs = static_cast<int>(parse_int("optimizer.epochs", v)); });
    str("optimizer.learning_rate",
        [&](const std::string& v) { c.optimizer.learning_rate = parse_double("optimizer.learning_rate", v); });
    str("optimizer.damping", [&](const std::string& v) { c.optimizer.damping = parse_double("optimizer.damping", v); });
    str("optimizer.tolerance",
        [&](const std::string& v) { c.optimizer.tolerance = parse_double("optimizer.tolerance", v); });
    str("shots.enabled", [&](const std::string& v) { c.shots.enabled = parse_bool("shots.enabled", v); });
    str("shots.estimator", [&](const std::string& v) { c.shots.estimator = shots::estimator_from_string(v); });
    str("shots.count", [&](const std::string& v) { c.shots.count = parse_int("shots.count", v); });
    str("shots.seed", [&](const std::string& v) { c.shots.seed = parse_uint("shots.seed", v); });
    str("scan.x", [&](const std::string& v) { c.scan.x = parse_double("scan.x", v); });
    str("scan.y_start", [&](const std::string& v) { c.scan.y_start = parse_double("scan.y_start", v); });
    str("scan.y_end", [&](const std::string& v) { c.scan.y_end = parse_double("scan.y_end", v); });
    str("scan.y_count", [&](const std::string& v) { c.scan.y_count = static_cast<int>(parse_int("scan.y_count", v)); });
    str("scan.estimators", [&](const std::string& v) {
        c.scan.estimators.clear();
        for (const auto& item : split_list(v)) c.scan.estimators.push_back(shots::estimator_from_string(item));
    });
    str("scan.shots", [&](const std::string& v) {
        c.scan.shot_counts.clear();
        for (const auto& item : split_list(v)) c.scan.shot_counts.push_back(parse_int("scan.shots", item));
    });
    str("gram.max_order", [&](const std::string& v) {
        c.gram_max_order = static_cast<int>(parse_int("gram.max_order", v));
    });
    str("output.dir", [&](const std::string& v) { c.output_dir = v; });
    for (const auto& [key, value] : file.values()) {
        if (key.rfind("problem.", 0) == 0) c.params[key.substr(8)] = parse_double(key, value);
    }
    c.validate();
    return c;
}

ExperimentConfig load_experiment(const std::string& path) { return experiment_from(ConfigFile::load(path)); }

void ExperimentConfig::validate() const {
    if (qubits < 1 || qubits > qsim::kMaxQubits) {
        throw ConfigError("kernel.qubits must be in [1, " + std::to_string(qsim::kMaxQubits) + "]");
    }
    if (layers < 1) throw ConfigError("kernel.layers must be >= 1");
    if (hea_depth < 0) throw ConfigError("kernel.hea_depth must be >= 0");
    if (!(encode_coeff_divisor > 0.0)) throw ConfigError("kernel.encode_coeff_divisor must be positive");
    if (!(sigma > 0.0)) throw ConfigError("kernel.sigma must be positive");
    if (grid.count < 2) throw ConfigError("grid.count must be >= 2");
    if (!(grid.end > grid.start)) throw ConfigError("grid.end must exceed grid.start");
    if (output_density < 1) throw ConfigError("experiment.output_density must be >= 1");
    if (!(gamma > 0.0)) throw ConfigError("svr.gamma must be positive");
    if (!(boundary_weight > 0.0)) throw ConfigError("mmr.boundary_weight must be positive");
    optimizer.validate();
    if (shots.count < 1) throw ConfigError("shots.count must be >= 1");
    if (scan.y_count < 1) throw ConfigError("scan.y_count must be >= 1");
    if (scan.estimators.empty() || scan.shot_counts.empty()) throw ConfigError("scan needs estimators and shot counts");
    for (auto s : scan.shot_counts) {
        if (s < 1) throw ConfigError("scan.shots entries must be >= 1");
    }
    if (gram_max_order < 0 || gram_max_order > 2) throw ConfigError("gram.max_order must be 0, 1 or 2");
    if (problem == "regression") {
        if (dataset.empty()) throw ConfigError("regression needs data.path");
    } else if (!dataset.empty()) {
        throw ConfigError("data.path is only valid for the regression problem");
    }
}

std::string to_config_text(const ExperimentConfig& c) {
    std::ostringstream o;
    auto kv = [&](const std::string& k, const std::string& v) { o << k << " = " << v << "\n"; };
    auto num = [&](const std::string& k, double v) { kv(k, format_number(v)); };
    o << "[experiment]\n";
    kv("method", to_string(c.method));
    kv("problem", c.problem);
    kv("output_density", std::to_string(c.output_density));
    o << "\n[kernel]\n";
    kv("type", to_string(c.kernel));
    kv("qubits", std::to_string(c.qubits));
    kv("layers", std::to_string(c.layers));
    kv("hea_depth", std::to_string(c.hea_depth));
    kv("hea_seed", std::to_string(c.hea_seed));
    num("encode_coeff_divisor", c.encode_coeff_divisor);
    num("sigma", c.sigma);
    if (c.dataset.empty()) {
        o << "\n[grid]\n";
        num("start", c.grid.start);
        num("end", c.grid.end);
        kv("count", std::to_string(c.grid.count));
    } else {
        o << "\n[data]\n";
        kv("path", c.dataset);
    }
    o << "\n[svr]\n";
    num("gamma", c.gamma);
    if (!c.svr_solver.empty()) kv("solver", c.svr_solver);
    o << "\n[mmr]\n";
    num("boundary_weight", c.boundary_weight);
    kv("hessian", c.hessian == mmr::HessianMode::exact ? "exact" : "gauss_newton");
    o << "\n[optimizer]\n";
    kv("kind", numerics::to_string(c.optimizer.kind));
    kv("epochs", std::to_string(c.optimizer.epochs));
    num("learning_rate", c.optimizer.learning_rate);
    num("damping", c.optimizer.damping);
    num("tolerance", c.optimizer.tolerance);
    if (!c.params.empty()) {
        o << "\n[problem]\n";
        for (const auto& [k, v] : c.params) num(k, v);
    }
    o << "\n[shots]\n";
    kv("enabled", c.shots.enabled ? "true" : "false");
    kv("estimator", shots::to_string(c.shots.estimator));
    kv("count", std::to_string(c.shots.count));
    kv("seed", std::to_string(c.shots.seed));
    o << "\n[scan]\n";
    num("x", c.scan.x);
    num("y_start", c.scan.y_start);
    num("y_end", c.scan.y_end);
    kv("y_count", std::to_string(c.scan.y_count));
    std::string est;
    for (std::size_t i = 0; i < c.scan.estimators.size(); ++i) {
        est += (i ? "," : "") + shots::to_string(c.scan.estimators[i]);
    }
    kv("estimators", est);
    std::string counts;
    for (std::size_t i = 0; i < c.scan.shot_counts.size(); ++i) {
        counts += (i ? "," : "") + std::to_string(c.scan.shot_counts[i]);
    }
    kv("shots", counts);
    o << "\n[gram]\n";
    kv("max_order", std::to_string(c.gram_max_order));
    o << "\n[output]\n";
    kv("dir", c.output_dir);
    return o.str();
}

}  // namespace qkde::app
