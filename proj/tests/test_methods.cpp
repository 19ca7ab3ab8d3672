#include <doctest.h>

#include <algorithm>

#include "aove/error.hpp"
#include "aove/likelihood.hpp"
#include "aove/methods.hpp"
#include "oracles.hpp"

using namespace aove;

namespace {

class ConstantPredictor : public Predictor {
public:
    explicit ConstantPredictor(Vector value, Index window = 1) : value_(std::move(value)), window_(window) {}
    void fit(const SamplePath&) override {}
    Vector predict(const Matrix&) const override { return value_; }
    Index window() const override { return window_; }
    bool fitted() const override { return true; }
    std::unique_ptr<Predictor> clone() const override { return std::make_unique<ConstantPredictor>(*this); }

private:
    Vector value_;
    Index window_;
};

PortfolioSpec spec_n(Index n, double mu2) {
    PortfolioSpec s;
    s.mu0 = 1.5;
    s.mu1 = 0.8;
    s.mu2 = mu2;
    s.e = Vector::LinSpaced(n, 0.05, 0.15);
    s.x0 = Vector::LinSpaced(n, 0.9, 0.2);
    return s;
}

Vector sorted(Vector v) {
    std::sort(v.data(), v.data() + v.size());
    return v;
}

bool between(const Vector& x, const PortfolioSpec& s) {
    for (Index i = 0; i < x.size(); ++i) {
        const double lo = std::min(s.mu0 * s.e(i), s.x0(i));
        const double hi = std::max(s.mu0 * s.e(i), s.x0(i));
        if (x(i) < lo - 1e-12 || x(i) > hi + 1e-12) return false;
    }
    return true;
}

}  // namespace

TEST_CASE("PTO") {
    Rng rng(1);
    const auto y = oracle::random_path(rng, 20, 1);
    PortfolioSpec s{2.0, 1.0, 0.1, Vector::Constant(1, 0.1), Vector::Constant(1, 0.6)};
    const auto d = solve_pto(y, ConstantPredictor(Vector::Zero(1)), s);
    CHECK(d.d2(0, 0) == doctest::Approx(0.1));
    CHECK(d.x(0) == doctest::Approx((2.0 * 0.1 + 0.1 * 0.6) / 1.1));

    s.mu2 = 0.0;
    CHECK(solve_pto(y, ConstantPredictor(Vector::Constant(1, -3.0)), s).x.isApprox(s.mu0 * s.e));

    const auto y2 = oracle::random_path(rng, 40, 2);
    const auto ridge = fit_ridge_lag(y2, 5);
    const auto s2 = spec_n(2, 0.2);
    const auto pto = solve_pto(y2, ridge, s2);
    const Vector forecast = ridge.predict(y2.data());
    CHECK(pto.x == solve_quadratic(d2_diag(forecast, s2.mu2).asDiagonal(), s2));

    CHECK_THROWS_AS(solve_pto(y2, RidgeLagPredictor(5), s2), StateError);
}

TEST_CASE("ridge-lag predictor") {
    SUBCASE("recovers an AR(1) coefficient") {
        Rng rng(2);
        const VarmaParams ar({Matrix::Constant(1, 1, 0.6)}, {}, Matrix::Identity(1, 1));
        const auto y = simulate(ar, 20000, rng);
        const auto r = fit_ridge_lag(y, 1, 1e-9);
        CHECK(std::abs(r.coefficients()(0, 0) - 0.6) < 0.05);
    }
    SUBCASE("zero series and huge penalty") {
        const SamplePath zero(Matrix::Zero(30, 2));
        CHECK(fit_ridge_lag(zero, 3).coefficients().isZero());
        Rng rng(3);
        const auto y = oracle::random_path(rng, 50, 2);
        CHECK(fit_ridge_lag(y, 3, 1e12).coefficients().cwiseAbs().maxCoeff() < 1e-8);
    }
    SUBCASE("pairs and window") {
        Rng rng(4);
        const auto y = oracle::random_path(rng, 12, 2);
        const auto pairs = make_pairs(y, 3);
        CHECK(pairs.features.rows() == 9);
        CHECK(pairs.features.cols() == 6);
        CHECK(pairs.features.row(0).head(2) == y.data().row(0));
        CHECK(pairs.targets.row(0) == y.data().row(3));
        CHECK_THROWS_AS(fit_ridge_lag(oracle::random_path(rng, 4, 1), 3), DataError);
    }
}

TEST_CASE("bootstrap ensemble") {
    Rng rng(5);
    const auto y = oracle::random_path(rng, 60, 2);
    Rng a(9);
    const auto single = bootstrap_ensemble(y, 4, 1, a, false);
    const auto ridge = fit_ridge_lag(y, 4);
    CHECK(single.predict_mean(y.data()) == ridge.predict(y.data()));

    Rng b(10), c(10);
    const auto e1 = bootstrap_ensemble(y, 4, 7, b);
    const auto e2 = bootstrap_ensemble(y, 4, 7, c);
    const auto p1 = e1.predict_all(y.data());
    const auto p2 = e2.predict_all(y.data());
    for (std::size_t m = 0; m < p1.size(); ++m) CHECK(p1[m] == p2[m]);
    double total = 0.0;
    for (double w : e1.weights()) total += w;
    CHECK(std::abs(total - 1.0) < 1e-12);

    Rng wn(11);
    const auto noise = oracle::random_path(wn, 10000, 2);
    Rng d(12);
    const auto e3 = bootstrap_ensemble(noise, 10, 5, d);
    double mean_abs = 0.0;
    for (const auto& v : e3.predict_all(noise.data())) mean_abs += v.cwiseAbs().mean() / 5.0;
    CHECK(mean_abs < 0.1);
}

TEST_CASE("FPtP") {
    Rng rng(6);
    const auto y = oracle::random_path(rng, 30, 2);
    const auto s = spec_n(2, 0.3);
    auto member = std::make_shared<const RidgeLagPredictor>(fit_ridge_lag(y, 3));
    const EnsemblePredictor one({member}, {1.0});
    CHECK(solve_fptp(y, one, s).x == solve_pto(y, *member, s).x);
    const EnsemblePredictor same({member, member, member}, {0.2, 0.5, 0.3});
    CHECK(solve_fptp(y, same, s).x.isApprox(solve_pto(y, *member, s).x, 1e-14));

    const std::vector<double> vals{-0.5, 0.1, 1.2};
    std::vector<std::shared_ptr<const Predictor>> members;
    for (double v : vals) members.push_back(std::make_shared<ConstantPredictor>(Vector::Constant(1, v)));
    const EnsemblePredictor hand(members, {1.0, 1.0, 1.0});
    PortfolioSpec s1{2.0, 0.5, 0.4, Vector::Constant(1, 0.1), Vector::Constant(1, 0.9)};
    double d = 0.0;
    for (double v : vals) d += 0.4 * std::exp(-v) / 3.0;
    const auto f = solve_fptp(oracle::random_path(rng, 5, 1), hand, s1);
    CHECK(f.d2(0, 0) == doctest::Approx(d).epsilon(1e-14));
    CHECK(f.x(0) == doctest::Approx((2.0 * 0.5 * 0.1 + d * 0.9) / (0.5 + d)).epsilon(1e-14));
}

TEST_CASE("posterior weights") {
    const auto w = posterior_weights({std::log(0.5), std::log(0.5)}, {-1e5, -1e5 - std::log(3.0)});
    CHECK(w[0] == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(w[1] == doctest::Approx(0.25).epsilon(1e-12));
    const auto z = posterior_weights({0.0, -std::numeric_limits<double>::infinity()}, {-3.0, 10.0});
    CHECK(z[0] == 1.0);
    CHECK(z[1] == 0.0);
}

TEST_CASE("A-OVE") {
    Rng rng(7);
    const auto s = spec_n(2, 0.4);
    const auto atom = oracle::random_symcomm(rng, 2);
    const auto y = simulate(atom.expand(), 25, rng);

    SUBCASE("single atom equals ETO at that atom") {
        DiscretePrior one;
        one.add(atom, 3.0);
        const auto a = solve_aove(y, one, s);
        const auto e = solve_eto_known(atom.expand(), s);
        CHECK(a.x == e.x);
        CHECK(a.d2 == e.d2);
    }
    SUBCASE("repeated atoms") {
        DiscretePrior many;
        many.add(atom, 0.1);
        many.add(atom, 0.7);
        many.add(atom, 0.2);
        CHECK(solve_aove(y, many, s).x.isApprox(solve_eto_known(atom.expand(), s).x, 1e-14));
    }
    SUBCASE("literal transcription at small T") {
        const auto y5 = oracle::random_path(rng, 5, 1);
        PortfolioSpec s1{1.2, 0.6, 0.3, Vector::Constant(1, 0.1), Vector::Constant(1, 0.7)};
        DiscretePrior prior;
        std::vector<double> lg, u{0.2, 0.5, 0.3};
        std::vector<Vector> d2;
        for (int k = 0; k < 3; ++k) {
            const auto par = oracle::random_common_basis(rng, 1, 1, 1);
            prior.add(par, u[static_cast<std::size_t>(k)]);
            lg.push_back(oracle::brute_force_loglik(y5, par) - log_g0(1, 5));
            d2.push_back(expected_d2(par, s1.mu2).diagonal());
        }
        const Vector lit = oracle::literal_aove(lg, u, d2, s1);
        CHECK(std::abs(solve_aove(y5, prior, s1).x(0) - lit(0)) < 1e-10);
    }
    SUBCASE("posterior concentrates on the generating atom") {
        DiscretePrior prior;
        std::vector<SymCommParams> atoms;
        Rng gen(21);
        while (atoms.size() < 10) {
            const auto cand = oracle::random_symcomm(gen, 2);
            bool far = true;
            for (const auto& a : atoms) far = far && (a.expand().phi(1) - cand.expand().phi(1)).norm() >= 0.3;
            if (far) atoms.push_back(cand);
        }
        for (const auto& a : atoms) prior.add(a, 1.0);
        Rng sim(22);
        const auto long_y = simulate(atoms[4].expand(), 200, sim);
        CHECK(solve_aove(long_y, prior, s).posterior[4] > 0.9);
    }
    SUBCASE("worker count does not change the decision") {
        DiscretePrior prior;
        for (int k = 0; k < 40; ++k) prior.add(oracle::random_symcomm(rng, 2), rng.uniform());
        const PreparedPrior prepared(prior);
        const auto a1 = solve_aove(y, prepared, s, 1);
        const auto a4 = solve_aove(y, prepared, s, 4);
        CHECK(a1.x == a4.x);
        CHECK(a1.posterior == a4.posterior);
    }
    SUBCASE("empty prior") {
        CHECK_THROWS_AS(solve_aove(y, DiscretePrior{}, s), ValidationError);
    }
}

TEST_CASE("MLE") {
    SUBCASE("large-sample recovery") {
        Rng rng(8);
        Vector lp(2), ls(2);
        lp << -0.5, 0.4;
        ls << 0.3, 0.7;
        const SymCommParams truth(0.3, Eigen::Rotation2Dd(0.4).toRotationMatrix(), lp, ls);
        const auto y = simulate(truth.expand(), 10000, rng);
        const auto fit = mle(y);
        CHECK(fit.converged);
        CHECK((sorted(fit.params.lambda_phi()) - sorted(lp)).cwiseAbs().maxCoeff() < 0.05);
        CHECK(fit.log_likelihood >= log_likelihood_symcomm(y, truth).total());
    }
    SUBCASE("white noise") {
        Rng rng(9);
        const auto y = oracle::random_path(rng, 5000, 1);
        const auto fit = mle(y);
        // only phi + theta is identified on white noise
        CHECK(std::abs(fit.params.lambda_phi()(0) + fit.params.theta()) < 0.05);
        CHECK(std::abs(fit.params.lambda_sigma()(0) - 1.0) < 0.11);
    }
    SUBCASE("argmax dominance and restart agreement") {
        Rng rng(10);
        const auto truth = oracle::random_symcomm(rng, 2);
        const auto y = simulate(truth.expand(), 300, rng);
        MleConfig a, b;
        a.seed = 1;
        b.seed = 2;
        const auto fa = mle(y, a);
        const auto fb = mle(y, b);
        CHECK(fa.log_likelihood >= log_likelihood_symcomm(y, truth).total());
        CHECK(std::abs(fa.log_likelihood - fb.log_likelihood) < 1e-4);
        CHECK(std::abs(fa.log_likelihood - log_likelihood(y, fa.expanded()).total()) < 1e-8);
    }
    SUBCASE("determinism") {
        Rng rng(11);
        const auto y = oracle::random_path(rng, 40, 2);
        const auto f1 = mle(y);
        const auto f2 = mle(y);
        CHECK(f1.params.lambda_phi() == f2.params.lambda_phi());
        CHECK(f1.params.basis() == f2.params.basis());
        CHECK(f1.log_likelihood == f2.log_likelihood);
    }
    SUBCASE("coordinates round-trip") {
        Rng rng(12);
        const Matrix base = Eigen::Rotation2Dd(0.2).toRotationMatrix();
        const auto p = oracle::random_symcomm(rng, 2);
        const SymCommParams near(p.theta(), base * Eigen::Rotation2Dd(0.5).toRotationMatrix(), p.lambda_phi(), p.lambda_sigma());
        const auto back = SymCommCoordinates::decode(SymCommCoordinates::encode(near, base), base);
        CHECK(back.expand().phi(1).isApprox(near.expand().phi(1), 1e-10));
        CHECK(back.expand().sigma_eps().isApprox(near.expand().sigma_eps(), 1e-10));
        CHECK(std::abs(back.theta() - near.theta()) < 1e-12);
    }
}

TEST_CASE("ETO") {
    Rng rng(13);
    const auto truth = oracle::random_symcomm(rng, 2);
    const auto y = simulate(truth.expand(), 25, rng);
    auto s = spec_n(2, 0.0);
    CHECK(solve_eto(y, s).x.isApprox(s.mu0 * s.e));
    s.mu2 = 0.3;
    const auto e1 = solve_eto(y, s);
    const auto e2 = solve_eto(y, s);
    CHECK(e1.x == e2.x);
    CHECK(e1.d2 == expected_d2(e1.fit.expanded(), s.mu2));
}

TEST_CASE("every method collapses at mu2 = 0 and respects betweenness") {
    Rng rng(14);
    const auto truth = oracle::random_symcomm(rng, 2);
    const auto y = simulate(truth.expand(), 25, rng);
    DiscretePrior prior;
    for (int k = 0; k < 10; ++k) prior.add(oracle::random_symcomm(rng, 2), 1.0);
    Rng er(3);
    const auto ens = bootstrap_ensemble(y, 10, 25, er);
    const EnsembleMeanPredictor mean(ens);
    for (double mu2 : {0.0, 0.1, 5.0}) {
        const auto s = spec_n(2, mu2);
        const std::vector<Vector> xs{solve_pto(y, mean, s).x, solve_fptp(y, ens, s).x, solve_eto(y, s).x,
                                     solve_aove(y, prior, s).x, solve_eto_known(truth.expand(), s).x};
        for (const auto& x : xs) {
            CHECK(between(x, s));
            if (mu2 == 0.0) CHECK(x.isApprox(s.mu0 * s.e, 1e-14));
        }
    }
}
