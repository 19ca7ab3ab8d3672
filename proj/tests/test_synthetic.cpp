#include <doctest.h>

#include <sstream>

#include "aove/error.hpp"
#include "aove/synthetic.hpp"
#include "oracles.hpp"

using namespace aove;

namespace {

class PeekPredictor : public Predictor {
public:
    explicit PeekPredictor(Matrix full) : full_(std::move(full)) {}
    void fit(const SamplePath&) override {}
    Vector predict(const Matrix& history) const override { return full_.row(history.rows()).transpose(); }
    Index window() const override { return 1; }
    bool fitted() const override { return true; }
    std::unique_ptr<Predictor> clone() const override { return std::make_unique<PeekPredictor>(*this); }

private:
    Matrix full_;
};

class ZeroPredictor : public Predictor {
public:
    void fit(const SamplePath& y) override { n_ = y.dim(); }
    Vector predict(const Matrix&) const override { return Vector::Zero(n_); }
    Index window() const override { return 1; }
    bool fitted() const override { return true; }
    std::unique_ptr<Predictor> clone() const override { return std::make_unique<ZeroPredictor>(*this); }

private:
    Index n_ = 0;
};

SyntheticConfig tiny() {
    SyntheticConfig c;
    c.n = 2;
    c.n_t = 60;
    c.n_o = 3;
    c.n_ove = 30;
    c.n_sove = 2;
    c.n_s = 6;
    c.T = 25;
    c.seed = 5;
    c.compute_mse = false;
    c.mle.restarts = 2;
    return c;
}

const std::vector<Method> kAll{Method::AOVE, Method::ETO, Method::PTO, Method::FPTP, Method::ORACLE};

}  // namespace

TEST_CASE("reference and candidates") {
    const auto ref = reference_params(3);
    CHECK(ref.theta[0] == doctest::Approx(0.4));
    CHECK(ref.lambda_phi[0](0) == doctest::Approx(-0.5));
    CHECK(ref.lambda_phi[0](2) == doctest::Approx(0.5));
    CHECK(ref.lambda_sigma(1) == doctest::Approx(0.5));
    CHECK(ref.basis.isIdentity());
    const auto ref21 = reference_params(2, 2, 1);
    CHECK(ref21.lambda_phi[1].isZero());

    const auto z = encode_common(ref21);
    const auto back = decode_common(z, 2, 2, 1);
    CHECK(back.expand().phi(1).isApprox(ref21.expand().phi(1), 1e-12));

    Rng rng(1);
    for (int k = 0; k < 10000; ++k) {
        const auto c = sample_candidate(reference_params(3), rng);
        CHECK(std::abs(c.theta[0]) <= 0.9);
        CHECK(c.lambda_phi[0].cwiseAbs().maxCoeff() < 0.9);
        CHECK(c.lambda_sigma.minCoeff() > 0.1);
        CHECK(c.lambda_sigma.maxCoeff() < 0.9);
        CHECK((c.basis.transpose() * c.basis - Matrix::Identity(3, 3)).norm() < 1e-10);
        if (k % 100 == 0) CHECK(validate(c.expand()).valid);
    }
    for (int k = 0; k < 200; ++k) CHECK(validate(sample_candidate(reference_params(2, 3, 1), rng).expand()).valid);
}

TEST_CASE("prior construction") {
    Rng rng(2);
    const auto ref = reference_params(2);
    CHECK(build_prior(ref, 1, rng).weights[0] == doctest::Approx(1.0));

    const auto prior = build_prior(ref, 200, rng);
    double total = 0.0;
    for (double w : prior.weights) total += w;
    CHECK(std::abs(total - 1.0) < 1e-12);

    std::vector<double> d;
    for (const auto& c : prior.candidates) d.push_back(parameter_distance(c.expand(), ref.expand()));
    for (std::size_t k = 0; k < d.size(); ++k)
        CHECK(prior.weights[k] == doctest::Approx(std::exp(-d[k]) / std::exp(-d[0]) * prior.weights[0]).epsilon(1e-10));
    CHECK(parameter_distance(ref.expand(), ref.expand()) == 0.0);

    const auto ref21 = reference_params(2, 2, 1);
    const double hand = (ref21.expand().phi(1) - ref.expand().phi(1)).squaredNorm();
    CHECK(parameter_distance(ref21.expand(), ref.expand()) == doctest::Approx(hand));
}

TEST_CASE("rolling MSE") {
    Rng rng(3);
    const auto y = oracle::random_path(rng, 20000, 2);
    PeekPredictor peek(y.data());
    CHECK(rolling_mse(y, peek) == 0.0);
    ZeroPredictor zero;
    CHECK(rolling_mse(y, zero) == doctest::Approx(2.0).epsilon(0.03));
    CHECK_THROWS_AS(rolling_mse(oracle::random_path(rng, 3, 1), zero), DataError);
}

TEST_CASE("regret evaluation") {
    const auto cfg = tiny();
    const auto spec = synthetic_spec(cfg);
    Rng rng(4);
    const auto truth = oracle::random_symcomm(rng, 2);

    SUBCASE("oracle decision and point-mass prior give zero regret") {
        DiscretePrior point;
        point.add(truth, 1.0);
        const auto r = evaluate_oracles(cfg, {truth.expand()}, PreparedPrior(point), spec, {Method::ORACLE, Method::AOVE});
        for (const auto& rec : r.records)
            for (double v : rec.regrets) CHECK(v == 0.0);
    }
    SUBCASE("prior collapsing onto the oracle") {
        DiscretePrior prior;
        prior.add(truth, 1.0);
        for (int k = 0; k < 9; ++k) prior.add(oracle::random_symcomm(rng, 2), 1e-6);
        const auto r = evaluate_oracles(cfg, {truth.expand()}, PreparedPrior(prior), spec, {Method::AOVE});
        CHECK(r.summary_for(Method::AOVE).mean_regret < 1e-6);
    }
}

TEST_CASE("well-specified pipeline") {
    auto cfg = tiny();
    const auto a = run_well_specified(cfg, kAll);
    REQUIRE(a.records.size() == cfg.n_o * kAll.size());
    for (const auto& rec : a.records) {
        CHECK(rec.regrets.size() == cfg.n_s);
        for (double v : rec.regrets) CHECK(v >= 0.0);
        if (rec.method == Method::ORACLE) CHECK(rec.mean_regret == 0.0);
    }
    cfg.workers = 3;
    const auto b = run_well_specified(cfg, kAll);
    for (std::size_t k = 0; k < a.records.size(); ++k) CHECK(a.records[k].regrets == b.records[k].regrets);

    cfg.seed = 6;
    const auto c = run_well_specified(cfg, kAll);
    CHECK(c.records[0].regrets != a.records[0].regrets);

    std::ostringstream table, summary;
    write_report_table(a, table);
    write_summary_table(a, summary);
    CHECK(table.str().rfind("method,oracle_index,mean_regret,mse,seconds\n", 0) == 0);
    CHECK(summary.str().find("A-OVE") != std::string::npos);
    CHECK(summary.str().find("PTO-Ridge") != std::string::npos);
}

TEST_CASE("mis-specified pipeline") {
    auto cfg = tiny();
    cfg.p = 2;
    const auto r = run_misspecified(cfg, {Method::AOVE, Method::ETO, Method::ORACLE});
    for (const auto& rec : r.records)
        for (double v : rec.regrets) CHECK(v >= 0.0);
    CHECK(r.summary_for(Method::ORACLE).mean_regret == 0.0);

    cfg.p = 1;
    const auto m11 = run_misspecified(cfg, {Method::AOVE});
    const auto w11 = run_well_specified(cfg, {Method::AOVE});
    CHECK(std::abs(m11.summary_for(Method::AOVE).mean_regret - w11.summary_for(Method::AOVE).mean_regret) < 0.05);
}

TEST_CASE("mean squared error is reported") {
    auto cfg = tiny();
    cfg.compute_mse = true;
    cfg.T = 40;
    const auto r = run_well_specified(cfg, {Method::PTO, Method::ETO, Method::AOVE});
    CHECK(std::isfinite(r.summary_for(Method::PTO).mse));
    CHECK(std::isfinite(r.summary_for(Method::ETO).mse));
    CHECK(std::isnan(r.summary_for(Method::AOVE).mse));
}

TEST_CASE("config checks") {
    auto cfg = tiny();
    cfg.n_o = 100;
    cfg.n_s = 0;
    cfg.T = 5;
    try {
        check_config(cfg);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(e.problems().size() == 3);
    }
    CHECK(parse_method("fptp") == Method::FPTP);
    CHECK(method_label(parse_method("a-ove")) == "A-OVE");
    CHECK_THROWS(parse_method("lstm"));
}
