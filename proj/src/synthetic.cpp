#include "aove/synthetic.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <ostream>

#include "aove/error.hpp"
#include "aove/parallel.hpp"

namespace aove {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

Vector linspace(Index n, double lo, double hi) {
    if (n == 1) return Vector::Constant(1, 0.5 * (lo + hi));
    return Vector::LinSpaced(n, lo, hi);
}

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Weighted sampling without replacement (largest log(U)/w keys).
std::vector<std::size_t> weighted_distinct(const std::vector<double>& weights, std::size_t count, Rng& rng) {
    std::vector<std::pair<double, std::size_t>> keys;
    keys.reserve(weights.size());
    for (std::size_t i = 0; i < weights.size(); ++i) {
        const double u = std::max(rng.uniform(), std::numeric_limits<double>::min());
        const double key = weights[i] > 0.0 ? std::log(u) / weights[i] : -std::numeric_limits<double>::infinity();
        keys.emplace_back(key, i);
    }
    std::stable_sort(keys.begin(), keys.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    std::vector<std::size_t> out;
    for (std::size_t k = 0; k < count; ++k) out.push_back(keys[k].second);
    return out;
}

// Categorical draws with replacement from the indices not in `excluded`.
std::vector<std::size_t> weighted_draws(const std::vector<double>& weights, const std::vector<std::size_t>& excluded,
                                        std::size_t count, Rng& rng) {
    std::vector<double> w = weights;
    for (std::size_t i : excluded) w[i] = 0.0;
    std::vector<double> cumulative(w.size());
    std::partial_sum(w.begin(), w.end(), cumulative.begin());
    const double total = cumulative.empty() ? 0.0 : cumulative.back();
    if (!(total > 0.0)) throw ValidationError("no prior mass left after removing the oracles");
    std::vector<std::size_t> out;
    out.reserve(count);
    for (std::size_t k = 0; k < count; ++k) {
        const double target = rng.uniform() * total;
        auto it = std::upper_bound(cumulative.begin(), cumulative.end(), target);
        auto idx = static_cast<std::size_t>(std::min<std::ptrdiff_t>(it - cumulative.begin(),
                                                                     static_cast<std::ptrdiff_t>(w.size()) - 1));
        out.push_back(idx);
    }
    return out;
}

struct Selection {
    std::vector<std::size_t> oracles;
    std::vector<std::size_t> atoms;
};

Selection select_oracles_and_atoms(const CandidatePrior& prior, const SyntheticConfig& config) {
    Rng pick = Rng::substream(config.seed, "oracles");
    Selection s;
    s.oracles = weighted_distinct(prior.weights, config.n_o, pick);
    Rng draw = Rng::substream(config.seed, "aove-atoms");
    s.atoms = weighted_draws(prior.weights, s.oracles, config.n_ove, draw);
    return s;
}

}  // namespace

VarmaParams CommonBasisParams::expand() const {
    const Matrix& P = basis;
    const Index n = dim();
    std::vector<Matrix> phi, th;
    for (const auto& l : lambda_phi) phi.push_back(symmetrize(P * l.asDiagonal() * P.transpose()));
    for (double t : theta) th.push_back(t * Matrix::Identity(n, n));
    return VarmaParams(std::move(phi), std::move(th), symmetrize(P * lambda_sigma.asDiagonal() * P.transpose()));
}

SymCommParams CommonBasisParams::as_symcomm() const {
    if (p() != 1 || q() != 1) throw ValidationError("symmetric-commutative form needs p = q = 1");
    return SymCommParams(theta[0], basis, lambda_phi[0], lambda_sigma);
}

Vector encode_common(const CommonBasisParams& params) {
    const Index n = params.dim();
    const int p = params.p();
    const int q = params.q();
    const Index skew = n * (n - 1) / 2;
    Vector z(q + p * n + n + skew);
    Index k = 0;
    for (double t : params.theta) z(k++) = scaled_atanh(t, 0.9);
    for (const auto& l : params.lambda_phi)
        for (Index i = 0; i < n; ++i) z(k++) = scaled_atanh(l(i), 0.9);
    for (Index i = 0; i < n; ++i) z(k++) = logit_range(params.lambda_sigma(i), 0.1, 0.9);
    if (skew > 0) {
        const Matrix id = Matrix::Identity(n, n);
        const Matrix& Q = params.basis;
        const Matrix s = (Q + id).transpose().partialPivLu().solve((Q - id).transpose()).transpose();
        for (Index i = 0; i < n; ++i)
            for (Index j = i + 1; j < n; ++j) z(k++) = s(i, j);
    }
    return z;
}

CommonBasisParams decode_common(const Vector& z, Index n, int p, int q) {
    const Index skew = n * (n - 1) / 2;
    if (z.size() != q + p * n + n + skew) throw DimensionError("coordinate vector length mismatch");
    CommonBasisParams out;
    Index k = 0;
    for (int j = 0; j < q; ++j) out.theta.push_back(0.9 * std::tanh(z(k++)));
    for (int i = 0; i < p; ++i) {
        Vector l(n);
        for (Index r = 0; r < n; ++r) l(r) = 0.9 * std::tanh(std::clamp(z(k++), -15.0, 15.0));
        out.lambda_phi.push_back(std::move(l));
    }
    out.lambda_sigma.resize(n);
    for (Index r = 0; r < n; ++r) out.lambda_sigma(r) = 0.1 + 0.8 * logistic(std::clamp(z(k++), -30.0, 30.0));
    out.basis = skew > 0 ? cayley(skew_from_upper(z.tail(skew), n)) : Matrix::Identity(n, n);
    return out;
}

CommonBasisParams reference_params(Index n, int p, int q) {
    if (n < 1 || p < 1 || q < 1) throw DimensionError("reference needs n, p, q >= 1");
    CommonBasisParams ref;
    ref.basis = Matrix::Identity(n, n);
    ref.theta.assign(static_cast<std::size_t>(q), 0.0);
    ref.theta[0] = 0.4;
    ref.lambda_phi.assign(static_cast<std::size_t>(p), Vector::Zero(n));
    ref.lambda_phi[0] = linspace(n, -0.5, 0.5);
    ref.lambda_sigma = linspace(n, 0.3, 0.7);
    return ref;
}

CommonBasisParams sample_candidate(const CommonBasisParams& reference, Rng& rng) {
    const Vector z0 = encode_common(reference);
    for (int attempt = 0; attempt < kCandidateMaxTries; ++attempt) {
        const Vector z = z0 + kCandidateScale * rng.normal_vector(z0.size());
        auto cand = decode_common(z, reference.dim(), reference.p(), reference.q());
        if (validate(cand.expand()).valid) return cand;
    }
    throw NumericalError("no valid candidate after 100 draws");
}

double parameter_distance(const VarmaParams& a, const VarmaParams& b) {
    if (a.dim() != b.dim()) throw DimensionError("parameter dimensions differ");
    const Index n = a.dim();
    const Matrix zero = Matrix::Zero(n, n);
    double d = (a.sigma_eps() - b.sigma_eps()).squaredNorm();
    for (int i = 1; i <= std::max(a.p(), b.p()); ++i)
        d += ((i <= a.p() ? a.phi(i) : zero) - (i <= b.p() ? b.phi(i) : zero)).squaredNorm();
    for (int j = 1; j <= std::max(a.q(), b.q()); ++j)
        d += ((j <= a.q() ? a.theta(j) : zero) - (j <= b.q() ? b.theta(j) : zero)).squaredNorm();
    return d;
}

CandidatePrior build_prior(const CommonBasisParams& reference, std::size_t count, Rng& rng) {
    if (count < 1) throw ValidationError("prior needs at least one candidate");
    CandidatePrior out;
    const VarmaParams ref = reference.expand();
    std::vector<double> dist;
    for (std::size_t k = 0; k < count; ++k) {
        out.candidates.push_back(sample_candidate(reference, rng));
        dist.push_back(parameter_distance(out.candidates.back().expand(), ref));
    }
    const double dmin = *std::min_element(dist.begin(), dist.end());
    double total = 0.0;
    for (double d : dist) {
        out.weights.push_back(std::exp(-(d - dmin)));
        total += out.weights.back();
    }
    for (double& w : out.weights) w /= total;
    return out;
}

std::string method_label(Method m) {
    switch (m) {
        case Method::AOVE: return "A-OVE";
        case Method::ETO: return "ETO";
        case Method::PTO: return "PTO-Ridge";
        case Method::FPTP: return "FPtP-Ridge";
        case Method::ORACLE: return "Oracle";
    }
    return "?";
}

Method parse_method(const std::string& name) {
    std::string s;
    for (char c : name)
        if (c != '-' && c != '_') s += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (s == "aove") return Method::AOVE;
    if (s == "eto") return Method::ETO;
    if (s == "pto" || s == "ptoridge") return Method::PTO;
    if (s == "fptp" || s == "fptpridge") return Method::FPTP;
    if (s == "oracle") return Method::ORACLE;
    throw ConfigError({"unknown method '" + name + "'"});
}

void check_config(const SyntheticConfig& c) {
    std::vector<std::string> problems;
    if (c.n < 1) problems.push_back("n must be positive");
    if (c.n_t < 1) problems.push_back("N_t must be positive");
    if (c.n_o < 1) problems.push_back("N_o must be positive");
    if (c.n_ove < 1) problems.push_back("N_ove must be positive");
    if (c.n_sove < 1) problems.push_back("N_sove must be positive");
    if (c.n_s < 1) problems.push_back("N_s must be positive");
    if (c.n_o >= c.n_t) problems.push_back("N_o must be below N_t so A-OVE atoms can avoid the oracles");
    if (c.p < 1 || c.q < 1) problems.push_back("oracle order (p, q) must be at least (1, 1)");
    if (c.window < 1) problems.push_back("window must be positive");
    if (c.T <= c.window + 1) problems.push_back("T must exceed window + 1");
    if (c.T <= std::max(c.p, c.q)) problems.push_back("T must exceed max(p, q)");
    if (c.ensemble_size < 1) problems.push_back("ensemble_size must be positive");
    if (!(c.wealth > 0.0) || !(c.risk_aversion > 0.0) || !(c.return_variance > 0.0))
        problems.push_back("wealth, risk_aversion and return_variance must be positive");
    if (!(c.mu2 >= 0.0)) problems.push_back("mu2 must be nonnegative");
    if (c.mle.restarts < 1) problems.push_back("mle.restarts must be positive");
    if (c.mle.max_iterations < 1) problems.push_back("mle.max_iterations must be positive");
    if (!problems.empty()) throw ConfigError(std::move(problems));
}

PortfolioSpec synthetic_spec(const SyntheticConfig& config) {
    Rng rng = Rng::substream(config.seed, "portfolio");
    Vector e(config.n), x0(config.n);
    for (Index i = 0; i < config.n; ++i) e(i) = rng.uniform(0.05, 0.15);
    for (Index i = 0; i < config.n; ++i) x0(i) = rng.uniform();
    PortfolioSpec spec = PortfolioSpec::from_constants(config.wealth, config.risk_aversion, config.return_variance,
                                                       2.0 * config.mu2, std::move(e), std::move(x0));
    return spec;
}

double rolling_mse(const SamplePath& y, Predictor& predictor) {
    const Index T = y.length();
    const Index split = static_cast<Index>(std::floor(0.6 * static_cast<double>(T)));
    if (T <= predictor.window() + 2 || split <= predictor.window() + 1 || split >= T)
        throw DataError("series too short for a rolling evaluation");
    predictor.fit(y.slice(0, split));
    double total = 0.0;
    for (Index t = split; t < T; ++t) {
        const Vector f = predictor.predict(y.data().topRows(t));
        total += (y.data().row(t).transpose() - f).squaredNorm();
    }
    return total / static_cast<double>(T - split);
}

const MethodSummary& RegretReport::summary_for(Method m) const {
    for (const auto& s : summary)
        if (s.method == m) return s;
    throw StateError("method not in report: " + method_label(m));
}

RegretReport evaluate_oracles(const SyntheticConfig& config, const std::vector<VarmaParams>& oracles,
                              const PreparedPrior& aove_prior, const PortfolioSpec& spec,
                              const std::vector<Method>& methods) {
    const auto start = Clock::now();
    const std::size_t n_methods = methods.size();
    std::vector<std::vector<OracleRecord>> per_oracle(oracles.size());
    const bool wants_ensemble = std::any_of(methods.begin(), methods.end(),
                                            [](Method m) { return m == Method::PTO || m == Method::FPTP; });

    parallel_for(oracles.size(), config.workers, [&](std::size_t o) {
        const VarmaParams& oracle = oracles[o];
        const Matrix d2_star = expected_d2(oracle, spec.mu2);
        const Vector x_star = solve_quadratic(d2_star, spec);
        const double rho_star = cost_with_d2(x_star, d2_star, spec);

        std::vector<OracleRecord> recs(n_methods);
        std::vector<double> mse_sum(n_methods, 0.0);
        std::vector<std::size_t> mse_count(n_methods, 0);
        std::vector<double> cost_sum(n_methods, 0.0);
        for (std::size_t k = 0; k < n_methods; ++k) {
            recs[k].method = methods[k];
            recs[k].oracle_index = o;
            recs[k].oracle_cost = rho_star;
        }

        for (std::size_t i = 0; i < config.n_s; ++i) {
            Rng path_rng = Rng::substream(config.seed, "path", o, i);
            const SamplePath y = simulate(oracle, config.T, path_rng);

            std::optional<EnsemblePredictor> ensemble;
            double ensemble_seconds = 0.0;
            if (wants_ensemble) {
                const auto t0 = Clock::now();
                try {
                    Rng ens_rng = Rng::substream(config.seed, "ensemble", o, i);
                    ensemble = bootstrap_ensemble(y, config.window, config.ensemble_size, ens_rng);
                } catch (const Error&) {
                }
                ensemble_seconds = seconds_since(t0);
            }
            const std::uint64_t mle_seed = Rng::substream(config.seed, "eto", o, i).next_u64();

            for (std::size_t k = 0; k < n_methods; ++k) {
                auto& rec = recs[k];
                const auto t0 = Clock::now();
                try {
                    Vector x;
                    switch (methods[k]) {
                        case Method::AOVE: x = solve_aove(y, aove_prior, spec).x; break;
                        case Method::ETO: {
                            MleConfig mc = config.mle;
                            mc.seed = mle_seed;
                            x = solve_eto(y, spec, mc).x;
                            break;
                        }
                        case Method::PTO:
                            if (!ensemble) throw DataError("ensemble fit failed");
                            x = solve_pto(y, EnsembleMeanPredictor(*ensemble), spec).x;
                            break;
                        case Method::FPTP:
                            if (!ensemble) throw DataError("ensemble fit failed");
                            x = solve_fptp(y, *ensemble, spec).x;
                            break;
                        case Method::ORACLE: x = x_star; break;
                    }
                    rec.regrets.push_back(relative_regret(x, x_star, d2_star, spec));
                    cost_sum[k] += cost_with_d2(x, d2_star, spec);
                } catch (const Error&) {
                    ++rec.failures;
                }
                rec.seconds += seconds_since(t0);
                if (methods[k] == Method::PTO || methods[k] == Method::FPTP) rec.seconds += ensemble_seconds;

                if (!config.compute_mse) continue;
                try {
                    if (methods[k] == Method::PTO || methods[k] == Method::FPTP) {
                        EnsembleMeanPredictor pred(config.window, config.ensemble_size,
                                                   Rng::substream(config.seed, "mse-ensemble", o, i).next_u64());
                        mse_sum[k] += rolling_mse(y, pred);
                        ++mse_count[k];
                    } else if (methods[k] == Method::ETO) {
                        VarmaOneStepPredictor pred(std::nullopt, mle_seed);
                        mse_sum[k] += rolling_mse(y, pred);
                        ++mse_count[k];
                    }
                } catch (const Error&) {
                }
            }
        }

        for (std::size_t k = 0; k < n_methods; ++k) {
            auto& rec = recs[k];
            const auto ok = static_cast<double>(rec.regrets.size());
            rec.mean_regret = ok > 0 ? std::accumulate(rec.regrets.begin(), rec.regrets.end(), 0.0) / ok
                                     : std::numeric_limits<double>::quiet_NaN();
            rec.mean_cost = ok > 0 ? cost_sum[k] / ok : std::numeric_limits<double>::quiet_NaN();
            rec.mse = mse_count[k] > 0 ? mse_sum[k] / static_cast<double>(mse_count[k])
                                       : std::numeric_limits<double>::quiet_NaN();
        }
        per_oracle[o] = std::move(recs);
    });

    RegretReport report;
    for (auto& recs : per_oracle)
        for (auto& r : recs) report.records.push_back(std::move(r));
    for (std::size_t k = 0; k < n_methods; ++k) {
        MethodSummary s{methods[k]};
        double regret_sum = 0.0, mse_sum = 0.0;
        std::size_t regret_n = 0, mse_n = 0;
        for (std::size_t o = 0; o < oracles.size(); ++o) {
            const auto& r = report.records[o * n_methods + k];
            s.seconds += r.seconds;
            s.failures += r.failures;
            if (std::isfinite(r.mean_regret)) {
                regret_sum += r.mean_regret;
                ++regret_n;
            }
            if (std::isfinite(r.mse)) {
                mse_sum += r.mse;
                ++mse_n;
            }
        }
        s.mean_regret = regret_n > 0 ? regret_sum / static_cast<double>(regret_n) : std::numeric_limits<double>::quiet_NaN();
        s.mse = mse_n > 0 ? mse_sum / static_cast<double>(mse_n) : std::numeric_limits<double>::quiet_NaN();
        report.summary.push_back(s);
    }
    report.seconds = seconds_since(start);
    return report;
}

RegretReport run_well_specified(const SyntheticConfig& config, const std::vector<Method>& methods) {
    check_config(config);
    if (config.p != 1 || config.q != 1) throw ConfigError({"well-specified run needs oracle order (1, 1)"});
    const PortfolioSpec spec = synthetic_spec(config);
    Rng prior_rng = Rng::substream(config.seed, "prior");
    const auto prior = build_prior(reference_params(config.n), config.n_t, prior_rng);
    const auto sel = select_oracles_and_atoms(prior, config);

    std::vector<VarmaParams> oracles;
    for (std::size_t k : sel.oracles) oracles.push_back(prior.candidates[k].expand());
    DiscretePrior aove;
    for (std::size_t k : sel.atoms) aove.add(prior.candidates[k].as_symcomm(), 1.0);
    return evaluate_oracles(config, oracles, PreparedPrior(std::move(aove)), spec, methods);
}

RegretReport run_misspecified(const SyntheticConfig& config, const std::vector<Method>& methods) {
    check_config(config);
    const PortfolioSpec spec = synthetic_spec(config);
    Rng prior_rng = Rng::substream(config.seed, "prior");
    const auto prior = build_prior(reference_params(config.n, config.p, config.q), config.n_t, prior_rng);
    const auto sel = select_oracles_and_atoms(prior, config);

    std::vector<VarmaParams> oracles;
    for (std::size_t k : sel.oracles) oracles.push_back(prior.candidates[k].expand());

    // Each drawn atom contributes N_sove VARMA(1,1) fits to simulated paths.
    const std::size_t per_atom = config.n_sove;
    std::vector<std::optional<SymCommParams>> fits(sel.atoms.size() * per_atom);
    parallel_for(sel.atoms.size(), config.workers, [&](std::size_t a) {
        const VarmaParams truth = prior.candidates[sel.atoms[a]].expand();
        for (std::size_t s = 0; s < per_atom; ++s) {
            Rng rng = Rng::substream(config.seed, "sove", a, s);
            const SamplePath y = simulate(truth, config.T, rng);
            MleConfig mc = config.mle;
            mc.seed = rng.next_u64();
            try {
                fits[a * per_atom + s] = mle(y, mc).params;
            } catch (const Error&) {
            }
        }
    });
    DiscretePrior aove;
    const double w = 1.0 / static_cast<double>(fits.size());
    for (const auto& f : fits)
        if (f) aove.add(*f, w);
    return evaluate_oracles(config, oracles, PreparedPrior(std::move(aove)), spec, methods);
}

namespace {

void put_number(std::ostream& out, double v) {
    if (std::isfinite(v))
        out << std::setprecision(10) << v;
    else
        out << "nan";
}

}  // namespace

void write_report_table(const RegretReport& report, std::ostream& out) {
    out << "method,oracle_index,mean_regret,mse,seconds\n";
    for (const auto& r : report.records) {
        out << method_label(r.method) << ',' << r.oracle_index << ',';
        put_number(out, r.mean_regret);
        out << ',';
        put_number(out, r.mse);
        out << ',';
        put_number(out, r.seconds);
        out << '\n';
    }
}

void write_summary_table(const RegretReport& report, std::ostream& out) {
    out << "method,mean_regret_pct,mse,seconds,failures\n";
    for (const auto& s : report.summary) {
        out << method_label(s.method) << ',';
        put_number(out, 100.0 * s.mean_regret);
        out << ',';
        put_number(out, s.mse);
        out << ',';
        put_number(out, s.seconds);
        out << ',' << s.failures << '\n';
    }
}

}  // namespace aove
