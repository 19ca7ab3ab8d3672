#include "aove/predictor.hpp"

#include <numeric>
#include <sstream>

#include "aove/error.hpp"
#include "aove/mle.hpp"

namespace aove {

TrainingPairs make_pairs(const SamplePath& y, Index window) {
    const Index T = y.length();
    const Index n = y.dim();
    if (window < 1) throw DataError("lag window must be positive");
    if (T <= window + 1) {
        std::ostringstream os;
        os << "need T > S + 1 = " << window + 1 << " for lag training pairs, got T = " << T;
        throw DataError(os.str());
    }
    const Index count = T - window;
    TrainingPairs out{Matrix(count, window * n), Matrix(count, n)};
    for (Index k = 0; k < count; ++k) {
        out.features.row(k) = lag_features(y.data().middleRows(k, window), window).transpose();
        out.targets.row(k) = y.data().row(k + window);
    }
    return out;
}

Vector lag_features(const Matrix& history, Index window) {
    if (history.rows() < window) throw DataError("history shorter than the lag window");
    const Index n = history.cols();
    Vector f(window * n);
    const Index first = history.rows() - window;
    for (Index s = 0; s < window; ++s) f.segment(s * n, n) = history.row(first + s).transpose();
    return f;
}

RidgeLagPredictor::RidgeLagPredictor(Index window, std::optional<double> ridge) : window_(window), ridge_(ridge) {
    if (window < 1) throw DataError("lag window must be positive");
    if (ridge && !(*ridge >= 0.0)) throw DataError("ridge strength must be nonnegative");
}

void RidgeLagPredictor::fit(const SamplePath& y) { fit_pairs(make_pairs(y, window_)); }

void RidgeLagPredictor::fit_pairs(const TrainingPairs& pairs) {
    const Index count = pairs.features.rows();
    if (count < 1) throw DataError("no training pairs");
    const double lambda = ridge_.value_or(1e-3 * static_cast<double>(count));
    Matrix gram = pairs.features.transpose() * pairs.features;
    gram.diagonal().array() += lambda;
    const Matrix rhs = pairs.features.transpose() * pairs.targets;
    Eigen::LDLT<Matrix> ldlt(gram);
    coef_ = ldlt.solve(rhs);
    if (!coef_.allFinite()) {
        // Unpenalised and rank deficient: fall back to the minimum-norm solution.
        coef_ = pairs.features.completeOrthogonalDecomposition().solve(pairs.targets);
    }
    fitted_ = true;
}

Vector RidgeLagPredictor::predict(const Matrix& history) const {
    if (!fitted_) throw StateError("predict called before fit");
    if (history.cols() * window_ != coef_.rows()) throw DimensionError("history dimension does not match predictor");
    return coef_.transpose() * lag_features(history, window_);
}

std::unique_ptr<Predictor> RidgeLagPredictor::clone() const { return std::make_unique<RidgeLagPredictor>(*this); }

const Matrix& RidgeLagPredictor::coefficients() const {
    if (!fitted_) throw StateError("coefficients requested before fit");
    return coef_;
}

RidgeLagPredictor fit_ridge_lag(const SamplePath& y, Index window, std::optional<double> ridge) {
    RidgeLagPredictor p(window, ridge);
    p.fit(y);
    return p;
}

EnsemblePredictor::EnsemblePredictor(std::vector<std::shared_ptr<const Predictor>> members, std::vector<double> weights)
    : members_(std::move(members)), weights_(std::move(weights)) {
    if (members_.empty()) throw DataError("ensemble needs at least one member");
    if (weights_.size() != members_.size()) throw DimensionError("ensemble weight count mismatch");
    double total = 0.0;
    for (double w : weights_) {
        if (!(w >= 0.0)) throw DataError("ensemble weights must be nonnegative");
        total += w;
    }
    if (!(total > 0.0)) throw DataError("ensemble weights sum to zero");
    for (double& w : weights_) w /= total;
    for (const auto& m : members_)
        if (!m || !m->fitted()) throw StateError("ensemble member is not fitted");
}

std::vector<Vector> EnsemblePredictor::predict_all(const Matrix& history) const {
    if (members_.empty()) throw StateError("ensemble is empty");
    std::vector<Vector> out;
    out.reserve(members_.size());
    for (const auto& m : members_) out.push_back(m->predict(history));
    return out;
}

Vector EnsemblePredictor::predict_mean(const Matrix& history) const {
    const auto all = predict_all(history);
    Vector mean = Vector::Zero(all.front().size());
    for (std::size_t m = 0; m < all.size(); ++m) mean += weights_[m] * all[m];
    return mean;
}

EnsemblePredictor bootstrap_ensemble(const SamplePath& y, Index window, int members, Rng& rng, bool resample,
                                     std::optional<double> ridge) {
    if (members < 1) throw DataError("ensemble size must be positive");
    const auto pairs = make_pairs(y, window);
    const Index count = pairs.features.rows();
    std::vector<std::shared_ptr<const Predictor>> fitted;
    fitted.reserve(static_cast<std::size_t>(members));
    for (int m = 0; m < members; ++m) {
        auto p = std::make_shared<RidgeLagPredictor>(window, ridge);
        if (resample) {
            TrainingPairs drawn{Matrix(count, pairs.features.cols()), Matrix(count, pairs.targets.cols())};
            for (Index k = 0; k < count; ++k) {
                const auto src = static_cast<Index>(rng.index(static_cast<std::size_t>(count)));
                drawn.features.row(k) = pairs.features.row(src);
                drawn.targets.row(k) = pairs.targets.row(src);
            }
            p->fit_pairs(drawn);
        } else {
            p->fit_pairs(pairs);
        }
        fitted.push_back(std::move(p));
    }
    return EnsemblePredictor(std::move(fitted), std::vector<double>(static_cast<std::size_t>(members), 1.0));
}

EnsembleMeanPredictor::EnsembleMeanPredictor(Index window, int members, std::uint64_t seed, bool resample)
    : window_(window), members_(members), seed_(seed), resample_(resample) {}

EnsembleMeanPredictor::EnsembleMeanPredictor(EnsemblePredictor ensemble)
    : window_(ensemble.member(0).window()),
      members_(static_cast<int>(ensemble.size())),
      seed_(0),
      resample_(true),
      ensemble_(std::move(ensemble)),
      fitted_(true) {}

void EnsembleMeanPredictor::fit(const SamplePath& y) {
    Rng rng(seed_);
    ensemble_ = bootstrap_ensemble(y, window_, members_, rng, resample_);
    fitted_ = true;
}

Vector EnsembleMeanPredictor::predict(const Matrix& history) const {
    if (!fitted_) throw StateError("predict called before fit");
    return ensemble_.predict_mean(history);
}

std::unique_ptr<Predictor> EnsembleMeanPredictor::clone() const { return std::make_unique<EnsembleMeanPredictor>(*this); }

const EnsemblePredictor& EnsembleMeanPredictor::ensemble() const {
    if (!fitted_) throw StateError("ensemble requested before fit");
    return ensemble_;
}

VarmaOneStepPredictor::VarmaOneStepPredictor(std::optional<VarmaParams> params, std::uint64_t seed)
    : params_(std::move(params)), seed_(seed) {
    if (params_) require_valid(*params_);
}

void VarmaOneStepPredictor::fit(const SamplePath& y) {
    MleConfig cfg;
    cfg.seed = seed_;
    params_ = mle(y, cfg).expanded();
}

Vector VarmaOneStepPredictor::predict(const Matrix& history) const {
    if (!params_) throw StateError("predict called before fit");
    const auto& par = *params_;
    const Index n = par.dim();
    if (history.cols() != n) throw DimensionError("history dimension does not match parameters");
    const Index T = history.rows();
    if (T < 1) throw DataError("empty history");
    // Innovations reconstructed with zero pre-sample values.
    Matrix eps = Matrix::Zero(T, n);
    auto one_step = [&](Index t) {  // forecast of row t from rows < t
        Vector f = Vector::Zero(n);
        for (int i = 1; i <= par.p(); ++i)
            if (t - i >= 0) f += par.phi(i) * history.row(t - i).transpose();
        for (int j = 1; j <= par.q(); ++j)
            if (t - j >= 0) f += par.theta(j) * eps.row(t - j).transpose();
        return f;
    };
    for (Index t = 0; t < T; ++t) eps.row(t) = history.row(t) - one_step(t).transpose();
    return one_step(T);
}

std::unique_ptr<Predictor> VarmaOneStepPredictor::clone() const { return std::make_unique<VarmaOneStepPredictor>(*this); }

const VarmaParams& VarmaOneStepPredictor::params() const {
    if (!params_) throw StateError("params requested before fit");
    return *params_;
}

}  // namespace aove
