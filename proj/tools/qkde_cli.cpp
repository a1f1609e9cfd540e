// qkde: fit / solve / reference / kernel-scan / gram-dump.

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <utility>

#include "qkde/error.hpp"
#include "qkde/experiment.hpp"

namespace {

struct Options {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::optional<std::int64_t> shots;
    bool dump_system = false;
};

qkde::app::ExperimentConfig load(const Options& opt) {
    auto file = qkde::app::ConfigFile::load(opt.config);
    if (opt.seed) {
        file.set("kernel.hea_seed", std::to_string(*opt.seed));
        file.set("shots.seed", std::to_string(*opt.seed));
    }
    if (opt.shots) {
        file.set("shots.enabled", "true");
        file.set("shots.count", std::to_string(*opt.shots));
        file.set("scan.shots", std::to_string(*opt.shots));
    }
    if (!opt.out.empty()) file.set("output.dir", opt.out);
    return qkde::app::experiment_from(file);
}

int run(const std::string& command, const Options& opt) {
    const auto cfg = load(opt);
    if (command == "fit" || command == "solve") {
        const bool regression = cfg.problem == "regression";
        if (command == "fit" && !regression) throw qkde::ConfigError("'fit' is for regression; use 'solve' for ODEs");
        if (command == "solve" && regression) throw qkde::ConfigError("'solve' is for ODEs; use 'fit' for regression");
        try {
            const auto report = qkde::app::run_experiment(cfg, opt.dump_system);
            qkde::app::write_report(report, cfg.output_dir);
            std::cout << "max_norm_error=" << qkde::app::format_number(report.max_norm_error)
                      << " final_loss=" << qkde::app::format_number(report.final_loss) << " -> " << cfg.output_dir
                      << "\n";
        } catch (const qkde::NumericalError& e) {
            qkde::app::write_text_file(cfg.output_dir + "/summary.txt",
                                       std::string("status=numerical_failure\nmessage=") + e.what() + "\n");
            throw;
        }
        return 0;
    }
    if (command == "reference") {
        qkde::app::write_text_file(cfg.output_dir + "/reference.csv", qkde::app::reference_csv(cfg));
    } else if (command == "kernel-scan") {
        qkde::app::write_text_file(cfg.output_dir + "/kernel_scan.csv", qkde::app::kernel_scan_csv(cfg));
    } else if (command == "gram-dump") {
        qkde::app::write_text_file(cfg.output_dir + "/gram.csv", qkde::app::gram_dump_csv(cfg));
    }
    std::cout << command << " -> " << cfg.output_dir << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Quantum-kernel regression and differential-equation solver"};
    app.require_subcommand(1);
    Options opt;
    const std::pair<const char*, const char*> commands[] = {
        {"fit", "train on the regression dataset"},
        {"solve", "solve the configured differential equation"},
        {"reference", "write the reference solution (reference.csv)"},
        {"kernel-scan", "compare shot estimators against the exact kernel (kernel_scan.csv)"},
        {"gram-dump", "write Gram blocks up to gram.max_order (gram.csv)"},
    };
    for (const auto& [name, help] : commands) {
        auto* sub = app.add_subcommand(name, help);
        sub->add_option("--config", opt.config, "configuration file")->required();
        sub->add_option("--out", opt.out, "output directory (overrides output.dir)");
        sub->add_option("--seed", opt.seed, "seed for the HEA angles and shot sampling");
        sub->add_option("--shots", opt.shots, "shot count; enables shot statistics")->check(CLI::PositiveNumber);
        if (std::string(name) == "fit" || std::string(name) == "solve") {
            sub->add_flag("--dump-system", opt.dump_system, "also write system.csv (row,col,value)");
        }
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : static_cast<int>(qkde::ExitCode::config);
    }
    const std::string command = app.get_subcommands().front()->get_name();
    try {
        return run(command, opt);
    } catch (const qkde::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return static_cast<int>(e.exit_code());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return static_cast<int>(qkde::ExitCode::numerical);
    }
}
