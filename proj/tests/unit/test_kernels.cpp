#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <cmath>
#include <numbers>

#include "qkde/error.hpp"
#include "qkde/kernels.hpp"
#include "support/oracle.hpp"

using namespace qkde;
using namespace qkde::kernels;
using std::numbers::pi;

namespace {

KernelSpec single_rx(double c) {
    const double coeffs[] = {c};
    return KernelSpec::quantum(qsim::product_feature_map(coeffs));
}

std::vector<double> coefficients(const qsim::FeatureMapSpec& spec) {
    std::vector<double> out;
    for (const auto& g : spec.encoded_gates()) out.push_back(g.value);
    return out;
}

// Literal |<psi(x)|psi(y)>|^2 from dense matrices.
double dense_kernel(const qsim::FeatureMapSpec& spec, double x, double y) {
    return std::norm(oracle::dense_state(spec, x).dot(oracle::dense_state(spec, y)));
}

const DerivOrder all_orders[] = {{0, 0}, {1, 0}, {0, 1}, {1, 1}, {2, 0}, {0, 2}, {2, 1}, {1, 2}, {2, 2}};

}  // namespace

TEST_CASE("kernel_value examples") {
    const auto q = KernelSpec::quantum(qsim::layered_feature_map(3, 2, 2, 5, 2.0));
    CHECK(kernel_value(q, 0.4, 0.4) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(kernel_value(KernelSpec::rbf(0.2), 0.3, 0.3) == 1.0);
    CHECK(kernel_value(KernelSpec::rbf(0.2), 0.0, 0.2) == doctest::Approx(0.6065307).epsilon(1e-7));
    CHECK(std::abs(kernel_value(single_rx(0.5), 0.0, 2 * pi)) < 1e-15);
    CHECK_THROWS_AS((void)KernelSpec::rbf(0.0), ConfigError);
}

TEST_CASE("kernel_derivative examples") {
    const auto q = KernelSpec::quantum(qsim::layered_feature_map(3, 2, 2, 5, 2.0));
    CHECK(std::abs(kernel_derivative(q, {1, 0}, 0.7, 0.7)) < 1e-12);
    CHECK(std::abs(kernel_derivative(KernelSpec::rbf(0.3), {1, 0}, 0.7, 0.7)) < 1e-15);
    CHECK(kernel_derivative(single_rx(0.5), {1, 0}, pi, 0.0) == doctest::Approx(-0.25).epsilon(1e-12));
    CHECK(kernel_derivative(KernelSpec::rbf(0.2), {1, 0}, 0.1, 0.0) ==
          doctest::Approx(-2.5 * std::exp(-0.125)).epsilon(1e-12));
    // The quoted example value -2.20618 is the formula rounded loosely; -2.5 e^{-1/8} = -2.206242.
    CHECK(std::abs(kernel_derivative(KernelSpec::rbf(0.2), {1, 0}, 0.1, 0.0) - (-2.20618)) < 1e-4);
    CHECK_THROWS_AS((void)kernel_derivative(KernelSpec::rbf(0.2), {1, 0}, 0.1, 0.0, DerivMethod::shift), UsageError);
    CHECK_THROWS_AS((void)kernel_derivative(q, {3, 0}, 0.1, 0.0), UsageError);
}

TEST_CASE("gram_block examples") {
    const auto q = KernelSpec::quantum(qsim::layered_feature_map(2, 1, 2, 5, 2.0));
    const double one[] = {0.3};
    const auto g1 = gram_block(q, one, {0, 0});
    REQUIRE(g1.rows() == 1);
    CHECK(g1(0, 0) == doctest::Approx(1.0).epsilon(1e-14));

    const double two[] = {0.0, 0.2};
    const auto g2 = gram_block(KernelSpec::rbf(0.2), two, {0, 0});
    CHECK(g2(0, 0) == 1.0);
    CHECK(g2(1, 1) == 1.0);
    CHECK(g2(0, 1) == doctest::Approx(std::exp(-0.5)).epsilon(1e-15));
    CHECK(g2(1, 0) == doctest::Approx(std::exp(-0.5)).epsilon(1e-15));

    const double grid[] = {0.0, 0.25, 0.6, 1.0};
    CHECK((gram_block(q, grid, {1, 0}) - gram_block(q, grid, {0, 1}).transpose()).cwiseAbs().maxCoeff() < 1e-12);

    const double dup[] = {0.0, 0.5, 0.5};
    CHECK_THROWS_AS((void)gram_block(q, dup, {0, 0}), DataError);
    CHECK_THROWS_AS((void)gram_block(q, std::span<const double>{}, {0, 0}), DataError);
}

TEST_CASE("gram_block orientation: first argument is the column point") {
    const auto q = KernelSpec::quantum(qsim::layered_feature_map(2, 2, 1, 9, 2.0));
    const double grid[] = {0.1, 0.5, 0.9};
    const auto g = gram_block(q, grid, {1, 0});
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) CHECK(g(i, j) == doctest::Approx(kernel_derivative(q, {1, 0}, grid[j], grid[i])));
    }
    CHECK(std::abs(g(0, 1)) > 1e-3);  // the orientation matters for this block
}

TEST_CASE("boundary_terms examples") {
    const auto q = KernelSpec::quantum(qsim::layered_feature_map(2, 1, 2, 3, 2.0));
    const double grid[] = {0.0, 0.3, 0.8};
    const auto b00 = boundary_terms(q, grid, 0.0, {0, 0});
    CHECK(b00.corner == doctest::Approx(1.0).epsilon(1e-14));
    const auto b10 = boundary_terms(q, grid, 0.0, {1, 0});
    CHECK(std::abs(b10.corner) < 1e-12);
    for (int i = 0; i < 3; ++i) CHECK(b10.h(i) == doctest::Approx(kernel_derivative(q, {1, 0}, 0.0, grid[i])));

    const double only[] = {0.2};
    const auto b = boundary_terms(q, only, 0.2, {0, 0});
    CHECK(b.h(0) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("product_map_closed_form examples") {
    const double half[] = {0.5};
    CHECK(std::abs(product_map_closed_form(half, 2 * pi, 0.0, {0, 0})) < 1e-15);
    const double many[] = {0.3, 1.1, -0.7};
    CHECK(product_map_closed_form(many, 0.4, 0.4, {0, 0}) == 1.0);
    CHECK(product_map_closed_form(half, pi, 0.0, {1, 0}) == doctest::Approx(-0.25).epsilon(1e-14));
}

TEST_CASE("product_map_closed_form agrees with a dense-matrix kernel and its finite differences") {
    const double c[] = {0.5, 1.0, -0.8};
    const auto spec = qsim::product_feature_map(c);
    const double x = 0.37;
    const double y = -0.81;
    CHECK(product_map_closed_form(c, x, y, {0, 0}) == doctest::Approx(dense_kernel(spec, x, y)).epsilon(1e-13));
    const double h = 1e-3;
    auto k = [&](double a, double b) { return dense_kernel(spec, a, b); };
    const double dx = (k(x + h, y) - k(x - h, y)) / (2 * h);
    const double dxy = (k(x + h, y + h) - k(x + h, y - h) - k(x - h, y + h) + k(x - h, y - h)) / (4 * h * h);
    CHECK(product_map_closed_form(c, x, y, {1, 0}) == doctest::Approx(dx).epsilon(1e-5));
    CHECK(product_map_closed_form(c, x, y, {1, 1}) == doctest::Approx(dxy).epsilon(1e-4));
}

TEST_CASE("property: symmetry over 1000 random pairs") {
    qkde::Rng rng(17);
    const auto q = KernelSpec::quantum(qsim::layered_feature_map(4, 2, 3, 77, 2.0));
    const auto r = KernelSpec::rbf(0.4);
    double worst = 0.0;
    for (int t = 0; t < 1000; ++t) {
        const double x = oracle::uniform(rng, -3, 3);
        const double y = oracle::uniform(rng, -3, 3);
        worst = std::max(worst, std::abs(kernel_value(q, x, y) - kernel_value(q, y, x)));
        worst = std::max(worst, std::abs(kernel_value(r, x, y) - kernel_value(r, y, x)));
    }
    CHECK(worst < 1e-12);
}

TEST_CASE("property: quantum kernel range and dense oracle") {
    qkde::Rng rng(29);
    for (int t = 0; t < 300; ++t) {
        const auto spec = oracle::random_spec(rng, 4, 2.0);
        const double x = oracle::uniform(rng, -3, 3);
        const double y = oracle::uniform(rng, -3, 3);
        const double k = kernel_value(KernelSpec::quantum(spec), x, y);
        CHECK(k >= -1e-12);
        CHECK(k <= 1 + 1e-12);
        CHECK(k == doctest::Approx(dense_kernel(spec, x, y)).epsilon(1e-12));
    }
}

TEST_CASE("property: entangler-free maps match the closed form for all orders") {
    qkde::Rng rng(31);
    double worst = 0.0;
    for (int t = 0; t < 100; ++t) {
        const auto spec = oracle::random_spec(rng, 4, 1.5, false, 1);
        const auto k = KernelSpec::quantum(spec);
        const auto c = coefficients(spec);
        const double x = oracle::uniform(rng, -3, 3);
        const double y = oracle::uniform(rng, -3, 3);
        for (const auto& ord : all_orders) {
            worst = std::max(worst, std::abs(kernel_derivative(k, ord, x, y) - product_map_closed_form(c, x, y, ord)));
        }
        worst = std::max(worst, std::abs(kernel_value(k, x, y) - product_map_closed_form(c, x, y, {0, 0})));
    }
    CHECK(worst < 1e-10);
}

TEST_CASE("property: insertion, shift and finite difference agree with entanglers") {
    qkde::Rng rng(37);
    const DerivOrder orders[] = {{1, 0}, {0, 1}, {1, 1}, {2, 0}, {2, 2}};
    double worst_shift = 0.0;
    double worst_fd = 0.0;
    for (int t = 0; t < 100; ++t) {
        const auto spec = oracle::random_spec(rng, 3, 1.0, true, 2);
        const auto k = KernelSpec::quantum(spec);
        const double x = oracle::uniform(rng, -2, 2);
        const double y = oracle::uniform(rng, -2, 2);
        for (const auto& ord : orders) {
            const double ins = kernel_derivative(k, ord, x, y, DerivMethod::insertion);
            worst_shift = std::max(worst_shift, std::abs(ins - kernel_derivative(k, ord, x, y, DerivMethod::shift)));
            worst_fd = std::max(worst_fd, std::abs(ins - kernel_derivative(k, ord, x, y, DerivMethod::finite_diff)));
        }
    }
    CHECK(worst_shift < 1e-6);
    CHECK(worst_fd < 1e-6);
}

TEST_CASE("property: Gram PSD up to 51 points and transpose identity") {
    const auto q = KernelSpec::quantum(qsim::layered_feature_map(4, 2, 3, 1234, 2.0));
    qkde::Rng rng(41);
    for (int n : {5, 20, 51}) {
        std::vector<double> grid(static_cast<std::size_t>(n));
        double x = 0.0;
        for (auto& g : grid) g = (x += oracle::uniform(rng, 0.01, 0.3));
        const auto bundle = build_gram_bundle(q, grid, grid.front(), orders_up_to(2));
        const Matrix& k = bundle.block({0, 0});
        CHECK((k - k.transpose()).cwiseAbs().maxCoeff() < 1e-12);
        for (int i = 0; i < n; ++i) CHECK(k(i, i) == doctest::Approx(1.0).epsilon(1e-12));
        const Eigen::SelfAdjointEigenSolver<Matrix> eig(k);
        CHECK(eig.eigenvalues().minCoeff() >= -1e-9);
        for (const auto& ord : orders_up_to(2)) {
            CHECK((bundle.block(ord) - bundle.block(ord.transposed()).transpose()).cwiseAbs().maxCoeff() < 1e-9);
        }
    }
}

TEST_CASE("Gram bundle equals pairwise evaluation") {
    const auto q = KernelSpec::quantum(qsim::layered_feature_map(3, 2, 2, 4, 4.0));
    const std::vector<double> grid = {0.0, 0.2, 0.45, 0.9};
    const double x0 = -0.1;
    const auto bundle = build_gram_bundle(q, grid, x0, orders_up_to(2));
    for (const auto& ord : orders_up_to(2)) {
        const Matrix direct = gram_block(q, grid, ord);
        CHECK((bundle.block(ord) - direct).cwiseAbs().maxCoeff() < 1e-13);
        const auto bt = boundary_terms(q, grid, x0, ord);
        CHECK((bundle.h(ord) - bt.h).cwiseAbs().maxCoeff() < 1e-13);
        CHECK(bundle.h_corner(ord) == doctest::Approx(bt.corner));
    }
    const auto rbf = build_gram_bundle(KernelSpec::rbf(0.3), grid, x0, orders_up_to(1));
    CHECK(rbf.block({1, 0})(0, 1) == doctest::Approx(rbf_derivative(0.3, {1, 0}, grid[1], grid[0])));
    CHECK_THROWS_AS((void)rbf.block({2, 2}), UsageError);
}

TEST_CASE("RBF derivatives match finite differences") {
    const double s = 0.35;
    const double x = 0.2;
    const double y = -0.13;
    const auto r = KernelSpec::rbf(s);
    for (const auto& ord : all_orders) {
        CHECK(rbf_derivative(s, ord, x, y) ==
              doctest::Approx(kernel_derivative(r, ord, x, y, DerivMethod::finite_diff)).epsilon(1e-5));
    }
}

TEST_CASE("KernelEvaluator counts one evaluation per matrix entry") {
    const KernelEvaluator ev(KernelSpec::quantum(qsim::layered_feature_map(2, 1, 1, 2, 2.0)));
    const double a[] = {0.0, 0.5, 1.0};
    const double b[] = {0.1, 0.2};
    const auto m = ev.cross(a, b, {1, 0});
    CHECK(m.rows() == 3);
    CHECK(m.cols() == 2);
    CHECK(ev.evaluations() == 6);
    CHECK(m(2, 1) == doctest::Approx(kernel_derivative(ev.spec(), {1, 0}, a[2], b[1])));
}
