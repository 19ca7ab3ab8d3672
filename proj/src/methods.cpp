#include "aove/methods.hpp"

#include <cmath>
#include <limits>

#include "aove/error.hpp"
#include "aove/likelihood.hpp"
#include "aove/parallel.hpp"

namespace aove {

void DiscretePrior::add(VarmaParams params, double weight) {
    if (!(weight >= 0.0)) throw ValidationError("prior weight must be nonnegative");
    if (!atoms_.empty() && params.dim() != atoms_.front().dim()) throw DimensionError("prior atoms differ in dimension");
    require_valid(params);
    atoms_.push_back(std::move(params));
    symcomm_.emplace_back(std::nullopt);
    weights_.push_back(weight);
}

void DiscretePrior::add(const SymCommParams& params, double weight) {
    require_valid(params);
    add(params.expand(), weight);
    symcomm_.back() = params;
}

void DiscretePrior::normalize() {
    double total = 0.0;
    for (double w : weights_) total += w;
    if (!(total > 0.0)) throw ValidationError("prior weights sum to zero");
    for (double& w : weights_) w /= total;
}

PreparedPrior::PreparedPrior(DiscretePrior prior) : prior_(std::move(prior)) {
    if (prior_.empty()) throw ValidationError("prior has no atoms");
    prior_.normalize();
    for (std::size_t i = 0; i < prior_.size(); ++i) {
        const double u = prior_.weights()[i];
        log_u_.push_back(u > 0.0 ? std::log(u) : -std::numeric_limits<double>::infinity());
        gamma2_.push_back(stationary_covariance(prior_.atom(i)).diagonal());
    }
}

double log_g1(const SamplePath& y, const VarmaParams& params, const std::optional<SymCommParams>& symcomm) {
    if (symcomm) return log_likelihood_symcomm(y, *symcomm).log_g1;
    return log_likelihood(y, params).log_g1;
}

std::vector<double> posterior_weights(const std::vector<double>& log_u, const std::vector<double>& log_g1) {
    if (log_u.size() != log_g1.size()) throw DimensionError("weight vectors differ in length");
    std::vector<double> out(log_u.size(), 0.0);
    double shift = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < out.size(); ++i) shift = std::max(shift, log_u[i] + log_g1[i]);
    if (!std::isfinite(shift)) throw NumericalError("no atom has finite posterior mass");
    double total = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = std::exp(log_u[i] + log_g1[i] - shift);
        total += out[i];
    }
    for (double& w : out) w /= total;
    return out;
}

MethodDecision solve_pto(const SamplePath& y, const Predictor& predictor, const PortfolioSpec& spec) {
    const Vector forecast = predictor.predict(y.data());
    Matrix d2 = d2_diag(forecast, spec.mu2).asDiagonal();
    Vector x = solve_quadratic(d2, spec);
    return {std::move(x), std::move(d2)};
}

MethodDecision solve_eto_known(const VarmaParams& params, const PortfolioSpec& spec) {
    Matrix d2 = expected_d2(params, spec.mu2);
    Vector x = solve_quadratic(d2, spec);
    return {std::move(x), std::move(d2)};
}

EtoDecision solve_eto(const SamplePath& y, const PortfolioSpec& spec, const MleConfig& config) {
    auto fit = mle(y, config);
    auto d = solve_eto_known(fit.expanded(), spec);
    return {std::move(d.x), std::move(d.d2), std::move(fit)};
}

MethodDecision solve_fptp(const SamplePath& y, const EnsemblePredictor& ensemble, const PortfolioSpec& spec) {
    const auto forecasts = ensemble.predict_all(y.data());
    Vector diag = Vector::Zero(spec.dim());
    for (std::size_t m = 0; m < forecasts.size(); ++m) diag += ensemble.weights()[m] * d2_diag(forecasts[m], spec.mu2);
    Matrix d2 = diag.asDiagonal();
    Vector x = solve_quadratic(d2, spec);
    return {std::move(x), std::move(d2)};
}

AoveDecision solve_aove(const SamplePath& y, const PreparedPrior& prepared, const PortfolioSpec& spec, int workers) {
    const auto& prior = prepared.prior();
    const std::size_t count = prior.size();
    std::vector<double> lg(count, -std::numeric_limits<double>::infinity());
    std::vector<char> failed(count, 0);
    parallel_for(count, workers, [&](std::size_t i) {
        try {
            lg[i] = log_g1(y, prior.atom(i), prior.symcomm(i));
        } catch (const NumericalError&) {
            failed[i] = 1;
        }
    });

    AoveDecision out;
    out.posterior = posterior_weights(prepared.log_weights(), lg);
    for (char f : failed) out.failed_atoms += static_cast<std::size_t>(f);
    Vector diag = Vector::Zero(spec.dim());
    for (std::size_t i = 0; i < count; ++i)
        if (out.posterior[i] > 0.0) diag += out.posterior[i] * expected_d2_diag(prepared.gamma2(i), spec.mu2);
    out.d2 = diag.asDiagonal();
    out.x = solve_quadratic(out.d2, spec);
    return out;
}

AoveDecision solve_aove(const SamplePath& y, const DiscretePrior& prior, const PortfolioSpec& spec, int workers) {
    return solve_aove(y, PreparedPrior(prior), spec, workers);
}

}  // namespace aove
