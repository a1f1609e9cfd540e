#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "qkde/error.hpp"
#include "qkde/shots.hpp"

using namespace qkde;
using namespace qkde::shots;
using kernels::KernelSpec;
using std::numbers::pi;

namespace {

KernelSpec single_rx(double c) {
    const double coeffs[] = {c};
    return KernelSpec::quantum(qsim::product_feature_map(coeffs));
}

KernelSpec entangled() { return KernelSpec::quantum(qsim::layered_feature_map(3, 2, 2, 1234, 2.0)); }

ShotConfig cfg(std::int64_t shots, std::uint64_t seed, Estimator e) {
    ShotConfig c;
    c.shots = shots;
    c.seed = seed;
    c.estimator = e;
    return c;
}

struct Stats {
    double mean = 0.0;
    double sd = 0.0;
};

Stats stats(const std::vector<double>& v) {
    Stats s;
    for (double x : v) s.mean += x;
    s.mean /= static_cast<double>(v.size());
    for (double x : v) s.sd += (x - s.mean) * (x - s.mean);
    s.sd = std::sqrt(s.sd / static_cast<double>(v.size() - 1));
    return s;
}

}  // namespace

TEST_CASE("estimate_kernel examples") {
    const auto k = entangled();
    CHECK(estimate_kernel(k, 0.4, 0.4, cfg(37, 1, Estimator::naive)) == 1.0);

    // kappa = 0: swap P(0) = 1/2, so the estimate averages to 0.
    const auto zero = single_rx(0.5);
    std::vector<double> v;
    for (std::uint64_t s = 0; s < 200; ++s) v.push_back(estimate_kernel(zero, 0.0, 2 * pi, cfg(1000, s, Estimator::swap)));
    const auto st = stats(v);
    CHECK(std::abs(st.mean) <= 4 * st.sd / std::sqrt(200.0));

    const double exact = kernels::kernel_value(k, 0.1, 0.9);
    for (auto e : {Estimator::naive, Estimator::swap, Estimator::hadamard}) {
        CHECK(std::abs(estimate_kernel(k, 0.1, 0.9, cfg(1'000'000, 3, e)) - exact) < 5e-3);
    }
    CHECK_THROWS_AS((void)estimate_kernel(KernelSpec::rbf(0.2), 0.0, 1.0, cfg(10, 1, Estimator::naive)), UsageError);
    CHECK_THROWS_AS((void)estimate_kernel(k, 0.0, 1.0, cfg(0, 1, Estimator::naive)), ConfigError);
    CHECK_THROWS_AS((void)estimator_from_string("bogus"), ConfigError);
}

TEST_CASE("estimate_kernel is deterministic per seed") {
    const auto k = entangled();
    for (auto e : {Estimator::naive, Estimator::swap, Estimator::hadamard}) {
        CHECK(estimate_kernel(k, 0.2, 0.5, cfg(500, 9, e)) == estimate_kernel(k, 0.2, 0.5, cfg(500, 9, e)));
        CHECK(estimate_kernel(k, 0.2, 0.5, cfg(500, 9, e)) != estimate_kernel(k, 0.2, 0.5, cfg(500, 10, e)));
    }
}

TEST_CASE("shift-rule derivative estimates") {
    const auto k = single_rx(0.5);
    const double est = estimate_kernel_derivative_shift(k, {1, 0}, pi, 0.0, cfg(1'000'000, 5, Estimator::swap));
    CHECK(std::abs(est - (-0.25)) < 5e-3);
    const double naive = estimate_kernel_derivative_shift(k, {1, 0}, pi, 0.0, cfg(1'000'000, 5, Estimator::naive));
    CHECK(std::abs(naive - (-0.25)) < 5e-3);

    // x = y: true derivative 0. Each shifted value has variance <= 1/shots (swap), and the
    // combination has 2 terms of weight c/2 per encoded gate.
    const auto e = entangled();
    const std::int64_t shots = 100'000;
    const double d = estimate_kernel_derivative_shift(e, {1, 0}, 0.3, 0.3, cfg(shots, 2, Estimator::swap));
    double weight2 = 0.0;
    for (const auto& g : e.feature_map().encoded_gates()) weight2 += 2 * (g.value / 2) * (g.value / 2);
    CHECK(std::abs(d) <= 3 * std::sqrt(weight2 / static_cast<double>(shots)));

    CHECK(estimate_kernel_derivative_shift(e, {1, 1}, 0.1, 0.4, cfg(1000, 4, Estimator::naive)) ==
          estimate_kernel_derivative_shift(e, {1, 1}, 0.1, 0.4, cfg(1000, 4, Estimator::naive)));
    CHECK_THROWS_AS((void)estimate_kernel_derivative_shift(e, {1, 0}, 0.1, 0.4, cfg(1000, 4, Estimator::hadamard)),
                    UsageError);
    CHECK_THROWS_AS((void)estimate_kernel_derivative_shift(e, {2, 1}, 0.1, 0.4, cfg(1000, 4, Estimator::swap)),
                    UsageError);
}

TEST_CASE("variance_scan examples") {
    const auto k = entangled();
    const std::int64_t counts[] = {100, 10'000};
    const auto rows = variance_scan(k, 0.1, 0.7, Estimator::naive, counts, 50, 11);
    REQUIRE(rows.size() == 2);
    const double ratio = rows[1].stddev / rows[0].stddev;
    CHECK(ratio > 0.1 / 3);
    CHECK(ratio < 0.1 * 3);
    CHECK(std::abs(rows[1].mean - rows[1].exact) <= 3 * rows[1].stddev / std::sqrt(50.0));
    CHECK_THROWS_AS((void)variance_scan(k, 0.1, 0.7, Estimator::naive, counts, 9, 11), UsageError);
}

TEST_CASE("property: naive and swap unbiased within 4 sigma over 200 seeds") {
    const auto k = entangled();
    for (auto e : {Estimator::naive, Estimator::swap}) {
        for (auto [x, y] : {std::pair{0.1, 0.7}, std::pair{-0.4, 1.3}, std::pair{0.0, 0.05}}) {
            const double exact = kernels::kernel_value(k, x, y);
            std::vector<double> v;
            for (std::uint64_t s = 0; s < 200; ++s) v.push_back(estimate_kernel(k, x, y, cfg(1000, 1000 + s, e)));
            const auto st = stats(v);
            CHECK(std::abs(st.mean - exact) <= 4 * st.sd / std::sqrt(200.0));
        }
    }
}

TEST_CASE("property: hadamard bias positive and at most 2/shots") {
    const auto k = entangled();
    const std::int64_t shots = 20;
    const double exact = kernels::kernel_value(k, 0.1, 0.7);
    // Exact expectation from the binomial laws is exact + (2 - exact) / shots; sample it well
    // enough that the sampling error is far below the bias being tested.
    const int repeats = 200'000;
    double sum = 0.0;
    for (int r = 0; r < repeats; ++r) sum += estimate_kernel(k, 0.1, 0.7, cfg(shots, static_cast<std::uint64_t>(r), Estimator::hadamard));
    const double bias = sum / repeats - exact;
    CHECK(bias > 0.0);
    CHECK(bias <= 2.0 / static_cast<double>(shots));
    CHECK(bias == doctest::Approx((2.0 - exact) / static_cast<double>(shots)).epsilon(0.1));
}

TEST_CASE("property: std-vs-shots log-log slope in [-0.6, -0.4]") {
    const auto k = entangled();
    const std::int64_t counts[] = {100, 1000, 10'000, 100'000};
    for (auto e : {Estimator::naive, Estimator::swap, Estimator::hadamard}) {
        const auto rows = variance_scan(k, 0.1, 0.7, e, counts, 200, 21);
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (const auto& r : rows) {
            const double lx = std::log(static_cast<double>(r.shots));
            const double ly = std::log(r.stddev);
            sx += lx;
            sy += ly;
            sxx += lx * lx;
            sxy += lx * ly;
        }
        const double n = static_cast<double>(rows.size());
        const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        CHECK(slope >= -0.6);
        CHECK(slope <= -0.4);
    }
}
