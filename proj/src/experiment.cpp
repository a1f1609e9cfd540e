#include "qkde/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

#include "qkde/error.hpp"
#include "qkde/mmr.hpp"
#include "qkde/seeding.hpp"
#include "qkde/shots.hpp"
#include "qkde/svr.hpp"

namespace qkde::app {

namespace {

using Summary = std::vector<std::pair<std::string, std::string>>;

void add(Summary& s, const std::string& key, double v) { s.emplace_back(key, format_number(v)); }
void add(Summary& s, const std::string& key, const std::string& v) { s.emplace_back(key, v); }
void add_count(Summary& s, const std::string& key, std::size_t v) { s.emplace_back(key, std::to_string(v)); }

std::vector<double> linspace(double a, double b, int n) {
    std::vector<double> out(static_cast<std::size_t>(n));
    if (n == 1) {
        out[0] = a;
        return out;
    }
    for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = a + (b - a) * static_cast<double>(i) / (n - 1);
    out.back() = b;
    return out;
}

struct Prediction {
    Vector f, fp, fpp;
};

mmr::MMRProblem mmr_problem(const Problem& p, const std::vector<double>& grid, const std::vector<DataPoint>& data,
                            double boundary_weight) {
    mmr::MMRProblem out;
    if (p.order == ProblemOrder::regression) {
        Vector t(static_cast<Eigen::Index>(data.size()));
        for (std::size_t i = 0; i < data.size(); ++i) t(static_cast<Eigen::Index>(i)) = data[i].f;
        out = mmr::MMRProblem::regression(grid, t);
    } else if (p.order == ProblemOrder::first) {
        out = mmr::MMRProblem::first_order(grid, p.ode, p.x0, p.f0);
    } else {
        out = mmr::MMRProblem::second_order(grid, p.ode, p.x0, p.f0, p.df0);
    }
    out.boundary_weight = boundary_weight;
    return out;
}

double de_residual(const Problem& p, double x, double f, double fp, double fpp) {
    if (p.order == ProblemOrder::first) return fp - p.ode.g(x, f);
    return fpp - p.ode.g(x, f);
}

void shot_statistics(const ExperimentConfig& cfg, const kernels::KernelSpec& kernel, const std::vector<double>& grid,
                     Summary& s) {
    if (!cfg.shots.enabled) return;
    if (!kernel.is_quantum()) {
        add(s, "shots.status", "skipped_classical_kernel");
        return;
    }
    const Matrix exact = kernels::gram_block(kernel, grid, {0, 0});
    double worst = 0.0;
    double total = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        for (std::size_t j = i; j < grid.size(); ++j) {
            const shots::ShotConfig sc{cfg.shots.count, derive_seed(cfg.shots.seed, i * grid.size() + j),
                                       cfg.shots.estimator};
            const double est = shots::estimate_kernel(kernel, grid[j], grid[i], sc);
            const double err = std::abs(est - exact(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
            worst = std::max(worst, err);
            total += err;
            ++count;
        }
    }
    add(s, "shots.estimator", shots::to_string(cfg.shots.estimator));
    s.emplace_back("shots.count", std::to_string(cfg.shots.count));
    add(s, "shots.gram_max_abs_error", worst);
    add(s, "shots.gram_mean_abs_error", total / static_cast<double>(count));
}

}  // namespace

kernels::KernelSpec build_kernel(const ExperimentConfig& cfg) {
    if (cfg.kernel == KernelKind::rbf) return kernels::KernelSpec::rbf(cfg.sigma);
    return kernels::KernelSpec::quantum(
        qsim::layered_feature_map(cfg.qubits, cfg.layers, cfg.hea_depth, cfg.hea_seed, cfg.encode_coeff_divisor));
}

std::vector<double> training_grid(const ExperimentConfig& cfg) {
    if (cfg.problem == "regression") {
        std::vector<double> xs;
        for (const auto& p : load_table(cfg.dataset)) xs.push_back(p.x);
        if (xs.size() < 2) throw DataError("regression dataset needs at least two rows");
        return xs;
    }
    return linspace(cfg.grid.start, cfg.grid.end, cfg.grid.count);
}

std::vector<double> dense_grid(const std::vector<double>& train, int density) {
    if (train.size() < 2) throw UsageError("dense grid needs at least two training points");
    const int n = density * static_cast<int>(train.size() - 1) + 1;
    return linspace(train.front(), train.back(), n);
}

double interpolate(const std::vector<DataPoint>& table, double x) {
    if (table.empty()) throw UsageError("cannot interpolate an empty table");
    if (x <= table.front().x) return table.front().f;
    if (x >= table.back().x) return table.back().f;
    const auto it = std::upper_bound(table.begin(), table.end(), x,
                                     [](double v, const DataPoint& p) { return v < p.x; });
    const auto& hi = *it;
    const auto& lo = *(it - 1);
    const double t = (x - lo.x) / (hi.x - lo.x);
    return lo.f + t * (hi.f - lo.f);
}

SolveReport run_experiment(const ExperimentConfig& cfg, bool dump_system) {
    cfg.validate();
    const auto t0 = std::chrono::steady_clock::now();
    const Problem problem = make_problem(cfg.problem, cfg.params);
    const kernels::KernelSpec kernel = build_kernel(cfg);
    std::vector<DataPoint> data;
    if (problem.order == ProblemOrder::regression) data = load_table(cfg.dataset);
    const std::vector<double> train = training_grid(cfg);
    const std::vector<double> dense = dense_grid(train, cfg.output_density);
    if (problem.order != ProblemOrder::regression && train.front() < problem.x0) {
        throw ConfigError("grid.start must not precede the initial point x0");
    }

    SolveReport report;
    report.config = cfg;
    Summary& s = report.summary;
    add(s, "status", "ok");
    add(s, "method", to_string(cfg.method));
    add(s, "problem", cfg.problem);
    add(s, "kernel", to_string(cfg.kernel));
    add_count(s, "grid_points", train.size());
    add_count(s, "output_points", dense.size());

    Prediction dense_pred;
    Prediction train_pred;
    double initial_loss = 0.0;

    if (cfg.method == Method::mmr) {
        const mmr::MMRProblem mp = mmr_problem(problem, train, data, cfg.boundary_weight);
        const auto fit = mmr::fit_mmr(mp, kernel, {}, cfg.optimizer, cfg.hessian);
        report.history = fit.optimization.history;
        dense_pred.f = mmr::mmr_predict(fit.model, dense, 0);
        dense_pred.fp = mmr::mmr_predict(fit.model, dense, 1);
        train_pred.f = mmr::mmr_predict(fit.model, train, 0);
        train_pred.fp = mmr::mmr_predict(fit.model, train, 1);
        if (problem.order == ProblemOrder::second) {
            dense_pred.fpp = mmr::mmr_predict(fit.model, dense, 2);
            train_pred.fpp = mmr::mmr_predict(fit.model, train, 2);
        }
        const kernels::KernelEvaluator ev(kernel);
        const auto mats = mmr::precompute(mp, ev, fit.model.anchors);
        Vector w(fit.model.alpha.size() + 1);
        w << fit.model.alpha, fit.model.bias;
        const auto at_fit = mmr::mmr_loss(w, mp, mats, dump_system, cfg.hessian);
        initial_loss = mmr::mmr_loss(Vector::Zero(w.size()), mp, mats, false).loss;
        report.final_loss = at_fit.loss;
        if (dump_system) report.system_matrix = at_fit.hessian;
        add(s, "optimizer", numerics::to_string(cfg.optimizer.kind));
        add_count(s, "epochs_run", report.history.size());
        s.emplace_back("accepted_steps", std::to_string(fit.optimization.accepted_steps));
        add(s, "converged", fit.optimization.converged ? "true" : "false");
        add(s, "gradient_inf", fit.optimization.gradient_inf);
        add_count(s, "kernel_evaluations", fit.kernel_evaluations);
    } else {
        svr::SvrClass cls = svr::SvrClass::regression;
        if (problem.order == ProblemOrder::first) {
            cls = problem.is_linear() ? svr::SvrClass::linear_ode : svr::SvrClass::first_order_nl;
        } else if (problem.order == ProblemOrder::second) {
            cls = svr::SvrClass::second_order_nl;
        }
        const bool linear_class = cls == svr::SvrClass::regression || cls == svr::SvrClass::linear_ode;
        std::string solver = cfg.svr_solver.empty() ? (linear_class ? "direct" : "residual_adam") : cfg.svr_solver;
        if (!linear_class && solver == "direct") throw ConfigError("nonlinear SVR systems need svr.solver = residual_adam");
        const double x0 = problem.order == ProblemOrder::regression ? train.front() : problem.x0;
        const auto orders = svr::required_orders(cls);
        const auto gram = kernels::build_gram_bundle(kernel, train, x0, orders);
        svr::SvrResult res;
        add(s, "svr_class", svr::to_string(cls));
        add(s, "svr_solver", solver);
        add(s, "gamma", cfg.gamma);
        if (linear_class) {
            svr::SvrSystem sys;
            if (cls == svr::SvrClass::regression) {
                Vector t(static_cast<Eigen::Index>(data.size()));
                for (std::size_t i = 0; i < data.size(); ++i) t(static_cast<Eigen::Index>(i)) = data[i].f;
                sys = svr::assemble_regression(gram, t, cfg.gamma);
            } else {
                sys = svr::assemble_linear_ode(gram, problem.lin_g, problem.lin_r, problem.f0, cfg.gamma);
            }
            const auto method = solver == "direct" ? svr::SolveMethod::direct : svr::SolveMethod::residual_adam;
            res = svr::solve_svr(sys, method, cfg.optimizer);
            initial_loss = sys.rhs.squaredNorm();
            add(s, "linear_system_residual", svr::kkt_residual(res.solution, sys));
            add(s, "least_squares_fallback", res.solution.least_squares ? "true" : "false");
            add(s, "kkt_residual", svr::kkt_residual(res.solution, sys));
            add(s, "slack_mismatch", svr::slack_mismatch(res.solution, kernel, sys));
            if (dump_system) report.system_matrix = sys.a;
        } else {
            const auto sys = cls == svr::SvrClass::first_order_nl
                                 ? svr::assemble_first_order_nl(gram, problem.ode, problem.f0, cfg.gamma)
                                 : svr::assemble_second_order_nl(gram, problem.ode, problem.f0, problem.df0, cfg.gamma);
            res = svr::solve_svr(sys, cfg.optimizer);
            initial_loss = sys.residual(sys.initial_guess()).squaredNorm();
            add(s, "kkt_residual", svr::kkt_residual(res.solution, sys));
            add(s, "slack_mismatch", svr::slack_mismatch(res.solution, kernel, sys));
            if (dump_system) report.system_matrix = sys.jacobian(res.solution.unknowns);
        }
        report.history = res.history;
        if (report.history.empty()) report.history.push_back(res.final_loss);
        report.final_loss = res.final_loss;
        add_count(s, "epochs_run", res.history.size());
        dense_pred.f = svr::svr_predict(res.solution, kernel, dense, 0);
        dense_pred.fp = svr::svr_predict(res.solution, kernel, dense, 1);
        train_pred.f = svr::svr_predict(res.solution, kernel, train, 0);
        train_pred.fp = svr::svr_predict(res.solution, kernel, train, 1);
        if (problem.order == ProblemOrder::second) {
            dense_pred.fpp = svr::svr_predict(res.solution, kernel, dense, 2);
            train_pred.fpp = svr::svr_predict(res.solution, kernel, train, 2);
        }
    }

    std::vector<double> ref(dense.size());
    if (problem.order == ProblemOrder::regression) {
        for (std::size_t i = 0; i < dense.size(); ++i) ref[i] = interpolate(data, dense[i]);
    } else {
        ref = reference_solution(problem, dense).f;
    }
    const auto [lo, hi] = std::minmax_element(ref.begin(), ref.end());
    const double range = *hi - *lo;
    if (!(range > 0.0)) throw NumericalError("reference solution has zero range; normalized error undefined");

    double max_abs = 0.0;
    report.rows.reserve(dense.size());
    for (std::size_t i = 0; i < dense.size(); ++i) {
        const auto k = static_cast<Eigen::Index>(i);
        SolutionRow row;
        row.x = dense[i];
        row.f = dense_pred.f(k);
        row.f_prime = dense_pred.fp(k);
        row.reference = ref[i];
        row.residual = problem.order == ProblemOrder::regression
                           ? row.f - row.reference
                           : de_residual(problem, row.x, row.f, row.f_prime,
                                         dense_pred.fpp.size() ? dense_pred.fpp(k) : 0.0);
        row.norm_error = (row.f - row.reference) / range;
        if (!std::isfinite(row.f) || !std::isfinite(row.f_prime)) {
            throw NumericalError("prediction is not finite at x=" + format_number(row.x));
        }
        max_abs = std::max(max_abs, std::abs(row.f - row.reference));
        report.max_norm_error = std::max(report.max_norm_error, std::abs(row.norm_error));
        report.rows.push_back(row);
    }

    double train_metric = 0.0;
    for (std::size_t i = 0; i < train.size(); ++i) {
        const auto k = static_cast<Eigen::Index>(i);
        const double v = problem.order == ProblemOrder::regression
                             ? train_pred.f(k) - data[i].f
                             : de_residual(problem, train[i], train_pred.f(k), train_pred.fp(k),
                                           train_pred.fpp.size() ? train_pred.fpp(k) : 0.0);
        train_metric = std::max(train_metric, std::abs(v));
    }

    add(s, "max_norm_error", report.max_norm_error);
    add(s, "max_abs_error", max_abs);
    add(s, "reference_range", range);
    add(s, problem.order == ProblemOrder::regression ? "train_max_abs_error" : "collocation_max_residual",
        train_metric);
    add(s, "initial_loss", initial_loss);
    add(s, "final_loss", report.final_loss);
    if (!report.history.empty()) {
        add(s, "history_first_loss", report.history.front());
        add(s, "history_last_loss", report.history.back());
    }
    if (problem.order != ProblemOrder::regression) {
        add(s, "reference_source", problem.analytic ? "analytic" : "rk45");
    }
    shot_statistics(cfg, kernel, train, s);
    report.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    add(s, "wall_time_s", report.wall_time_s);
    return report;
}

std::string summary_text(const SolveReport& report) {
    std::ostringstream o;
    for (const auto& [k, v] : report.summary) o << k << "=" << v << "\n";
    const auto echo = ConfigFile::parse(to_config_text(report.config));
    for (const auto& [k, v] : echo.values()) o << "config." << k << "=" << v << "\n";
    return o.str();
}

void write_report(const SolveReport& report, const std::string& dir) {
    std::string sol = "x,f,f_prime,residual,reference,norm_error\n";
    for (const auto& r : report.rows) {
        sol += csv_row({r.x, r.f, r.f_prime, r.residual, r.reference, r.norm_error});
        sol += '\n';
    }
    write_text_file(dir + "/solution.csv", sol);
    std::string loss = "epoch,loss\n";
    for (std::size_t i = 0; i < report.history.size(); ++i) {
        loss += std::to_string(i + 1) + "," + format_number(report.history[i]) + "\n";
    }
    write_text_file(dir + "/loss.csv", loss);
    write_text_file(dir + "/summary.txt", summary_text(report));
    if (report.system_matrix.size() > 0) write_text_file(dir + "/system.csv", matrix_csv(report.system_matrix));
}

std::string reference_csv(const ExperimentConfig& cfg) {
    cfg.validate();
    const Problem problem = make_problem(cfg.problem, cfg.params);
    if (problem.order == ProblemOrder::regression) {
        std::string out = "x,reference\n";
        for (const auto& p : load_table(cfg.dataset)) out += csv_row({p.x, p.f}) + "\n";
        return out;
    }
    const auto dense = dense_grid(training_grid(cfg), cfg.output_density);
    const auto ref = reference_solution(problem, dense);
    std::string out = "x,reference,reference_prime\n";
    for (std::size_t i = 0; i < dense.size(); ++i) out += csv_row({ref.x[i], ref.f[i], ref.df[i]}) + "\n";
    return out;
}

std::string kernel_scan_csv(const ExperimentConfig& cfg) {
    cfg.validate();
    const auto kernel = build_kernel(cfg);
    if (!kernel.is_quantum()) throw ConfigError("kernel-scan needs kernel.type = quantum");
    std::string out = "x,y,exact,estimator,shots,estimate,abs_error\n";
    std::uint64_t stream = 0;
    for (double y : linspace(cfg.scan.y_start, cfg.scan.y_end, cfg.scan.y_count)) {
        const double exact = kernels::kernel_value(kernel, cfg.scan.x, y);
        for (auto est : cfg.scan.estimators) {
            for (auto count : cfg.scan.shot_counts) {
                const shots::ShotConfig sc{count, derive_seed(cfg.shots.seed, stream++), est};
                const double e = shots::estimate_kernel(kernel, cfg.scan.x, y, sc);
                out += format_number(cfg.scan.x) + "," + format_number(y) + "," + format_number(exact) + "," +
                       shots::to_string(est) + "," + std::to_string(count) + "," + format_number(e) + "," +
                       format_number(std::abs(e - exact)) + "\n";
            }
        }
    }
    return out;
}

std::string gram_dump_csv(const ExperimentConfig& cfg) {
    cfg.validate();
    const auto kernel = build_kernel(cfg);
    const auto grid = training_grid(cfg);
    const auto orders = kernels::orders_up_to(cfg.gram_max_order);
    const auto bundle = kernels::build_gram_bundle(kernel, grid, grid.front(), orders);
    std::string out = "n,m,i,j,value\n";
    for (const auto& o : orders) {
        const Matrix& m = bundle.block(o);
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            for (Eigen::Index j = 0; j < m.cols(); ++j) {
                out += std::to_string(o.n) + "," + std::to_string(o.m) + "," + std::to_string(i) + "," +
                       std::to_string(j) + "," + format_number(m(i, j)) + "\n";
            }
        }
    }
    return out;
}

std::string matrix_csv(const Matrix& m) {
    std::string out = "row,col,value\n";
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            out += std::to_string(i) + "," + std::to_string(j) + "," + format_number(m(i, j)) + "\n";
        }
    }
    return out;
}

}  // namespace qkde::app
