#include <doctest.h>

#include "aove/error.hpp"
#include "aove/portfolio.hpp"
#include "oracles.hpp"

using namespace aove;

namespace {

PortfolioSpec random_spec(Rng& rng, Index n, double mu2) {
    PortfolioSpec s;
    s.mu0 = rng.uniform(0.5, 2.0);
    s.mu1 = rng.uniform(0.1, 2.0);
    s.mu2 = mu2;
    s.e = Vector::NullaryExpr(n, [&] { return rng.uniform(-0.2, 0.2); });
    s.x0 = Vector::NullaryExpr(n, [&] { return rng.uniform(-1.0, 1.0); });
    return s;
}

double cost_by_hand(const Vector& x, const Vector& y, const PortfolioSpec& s) {
    double total = 0.0;
    for (Index i = 0; i < x.size(); ++i) {
        const double a = x(i) - s.mu0 * s.e(i);
        const double b = x(i) - s.x0(i);
        total += s.mu1 * a * a + s.mu2 * std::exp(-y(i)) * b * b;
    }
    return total;
}

}  // namespace

TEST_CASE("cost_pi") {
    PortfolioSpec s{2.0, 0.7, 0.3, Vector::Constant(2, 0.1), Vector::Constant(2, 0.2)};
    CHECK(cost_pi(Vector::Constant(2, 0.2), Vector::Zero(2), s) == doctest::Approx(0.0));

    PortfolioSpec one{0.0, 1.0, 1.0, Vector::Zero(1), Vector::Ones(1)};
    CHECK(cost_pi(Vector::Zero(1), Vector::Zero(1), one) == doctest::Approx(1.0));

    Rng rng(1);
    for (int k = 0; k < 50; ++k) {
        const auto sp = random_spec(rng, 3, rng.uniform(0.0, 1.0));
        const Vector x = rng.normal_vector(3);
        const Vector y = rng.normal_vector(3);
        CHECK(std::abs(cost_pi(x, y, sp) - cost_by_hand(x, y, sp)) < 1e-12);
    }
    CHECK_THROWS_AS(cost_pi(Vector::Zero(3), Vector::Zero(2), s), DimensionError);
}

TEST_CASE("spec checks") {
    PortfolioSpec s{1.0, 0.0, 0.1, Vector::Zero(2), Vector::Zero(2)};
    CHECK_THROWS_AS(check_spec(s), ValidationError);
    s.mu1 = 1.0;
    s.mu2 = -1.0;
    CHECK_THROWS_AS(check_spec(s), ValidationError);
    s.mu2 = 0.1;
    s.x0 = Vector::Zero(3);
    CHECK_THROWS_AS(check_spec(s), DimensionError);

    const auto c = PortfolioSpec::from_constants(2.0, 0.5, 0.04, 0.3, Vector::Zero(1), Vector::Zero(1));
    CHECK(c.mu0 == doctest::Approx(100.0));
    CHECK(c.mu1 == doctest::Approx(0.005));
    CHECK(c.mu2 == doctest::Approx(0.15));
}

TEST_CASE("expected_d2") {
    const auto wn = VarmaParams::white_noise(Matrix::Identity(2, 2), 1, 1);
    const Matrix d = expected_d2(wn, 0.1);
    CHECK(d.isDiagonal());
    CHECK(d(0, 0) == doctest::Approx(0.164872).epsilon(1e-6));

    Rng rng(2);
    double mc = 0.0;
    const int draws = 10000000;
    for (int i = 0; i < draws; ++i) mc += std::exp(-rng.normal());
    CHECK(std::abs(0.1 * mc / draws - d(0, 0)) < 1e-3);

    CHECK(expected_d2(wn, 0.0).isZero());

    const VarmaParams ar({Matrix::Constant(1, 1, 0.5)}, {}, Matrix::Identity(1, 1));
    CHECK(expected_d2(ar, 0.2)(0, 0) == doctest::Approx(0.2 * std::exp(oracle::lyapunov_gamma0(ar)(0, 0) / 2.0)).epsilon(1e-12));
    CHECK(expected_d2(ar, 0.2)(0, 0) == doctest::Approx(0.2 * std::exp(2.0 / 3.0)).epsilon(1e-12));
}

TEST_CASE("expected_cost_rho") {
    Rng rng(3);
    const auto par = oracle::random_symcomm(rng, 2).expand();

    auto s0 = random_spec(rng, 2, 0.0);
    const Vector target = s0.mu0 * s0.e;
    CHECK(expected_cost_rho(target, par, s0) == doctest::Approx(0.0));
    CHECK(solve_quadratic(expected_d2(par, 0.0), s0).isApprox(target));

    const auto s = random_spec(rng, 2, 0.5);
    const Vector x = rng.normal_vector(2);
    const Matrix l = Eigen::LLT<Matrix>(stationary_covariance(par)).matrixL();
    double mc = 0.0;
    const int draws = 1000000;
    for (int i = 0; i < draws; ++i) mc += cost_pi(x, l * rng.normal_vector(2), s);
    mc /= draws;
    CHECK(std::abs(mc / expected_cost_rho(x, par, s) - 1.0) < 0.005);

    const Vector best = solve_quadratic(expected_d2(par, s.mu2), s);
    const double rho_best = expected_cost_rho(best, par, s);
    for (int i = 0; i < 100; ++i) CHECK(rho_best <= expected_cost_rho(best + 0.3 * rng.normal_vector(2), par, s));
}

TEST_CASE("solve_quadratic") {
    Rng rng(4);
    auto s = random_spec(rng, 3, 0.1);
    CHECK(solve_quadratic(Matrix::Zero(3, 3), s).isApprox(s.mu0 * s.e));
    CHECK((solve_quadratic(1e9 * Matrix::Identity(3, 3), s) - s.x0).cwiseAbs().maxCoeff() < 1e-6);

    PortfolioSpec one{2.0, 1.0, 1.0, Vector::Ones(1), Vector::Zero(1)};
    CHECK(solve_quadratic(Matrix::Identity(1, 1), one)(0) == doctest::Approx(1.0));

    SUBCASE("betweenness") {
        for (int k = 0; k < 1000; ++k) {
            const Index n = 1 + k % 4;
            const auto sp = random_spec(rng, n, 1.0);
            const Vector d = Vector::NullaryExpr(n, [&] { return std::exp(3.0 * rng.normal()); });
            const Vector x = solve_quadratic(d.asDiagonal(), sp);
            for (Index i = 0; i < n; ++i) {
                const double lo = std::min(sp.mu0 * sp.e(i), sp.x0(i));
                const double hi = std::max(sp.mu0 * sp.e(i), sp.x0(i));
                CHECK(x(i) >= lo - 1e-12);
                CHECK(x(i) <= hi + 1e-12);
                CHECK(x(i) == doctest::Approx((sp.mu0 * sp.mu1 * sp.e(i) + d(i) * sp.x0(i)) / (sp.mu1 + d(i))));
            }
        }
    }
    SUBCASE("convexity") {
        const auto par = oracle::random_symcomm(rng, 3).expand();
        for (int k = 0; k < 100; ++k) {
            const Vector a = rng.normal_vector(3), b = rng.normal_vector(3), y = rng.normal_vector(3);
            const Vector m = 0.5 * (a + b);
            CHECK(cost_pi(m, y, s) <= 0.5 * (cost_pi(a, y, s) + cost_pi(b, y, s)) + 1e-12);
            CHECK(expected_cost_rho(m, par, s) <= 0.5 * (expected_cost_rho(a, par, s) + expected_cost_rho(b, par, s)) + 1e-12);
        }
    }
}

TEST_CASE("relative_regret") {
    Rng rng(5);
    const auto par = oracle::random_symcomm(rng, 2).expand();
    const auto s = random_spec(rng, 2, 0.3);
    const Matrix d2 = expected_d2(par, s.mu2);
    const Vector best = solve_quadratic(d2, s);
    CHECK(relative_regret(best, best, d2, s) == 0.0);
    for (int k = 0; k < 50; ++k) {
        const Vector x = best + rng.normal_vector(2);
        const double direct = (expected_cost_rho(x, par, s) - expected_cost_rho(best, par, s)) / expected_cost_rho(best, par, s);
        const double r = relative_regret(x, best, d2, s);
        CHECK(r >= 0.0);
        CHECK(r == doctest::Approx(direct).epsilon(1e-9));
    }
}
