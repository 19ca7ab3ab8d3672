#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "aove/rng.hpp"
#include "aove/varma.hpp"

namespace aove {

/// Supervised pairs (Y_{t-S..t-1}, Y_t) for t = S+1..T. Each feature row is the lag
/// window flattened oldest-first.
struct TrainingPairs {
    Matrix features;  // N x (S n)
    Matrix targets;   // N x n
};

TrainingPairs make_pairs(const SamplePath& y, Index window);

/// Flattened feature row for the last `window` rows of `history`.
Vector lag_features(const Matrix& history, Index window);

/// One-step-ahead point forecaster over a fixed lag window.
class Predictor {
public:
    virtual ~Predictor() = default;

    virtual void fit(const SamplePath& y) = 0;
    /// Forecast of the observation following `history` (uses its last window() rows).
    virtual Vector predict(const Matrix& history) const = 0;
    virtual Index window() const = 0;
    virtual bool fitted() const = 0;
    virtual std::unique_ptr<Predictor> clone() const = 0;
};

/// Linear map from the flattened lag window to the next observation, L2 penalised,
/// no intercept. Default penalty is 1e-3 times the number of training pairs.
class RidgeLagPredictor : public Predictor {
public:
    explicit RidgeLagPredictor(Index window, std::optional<double> ridge = std::nullopt);

    void fit(const SamplePath& y) override;
    void fit_pairs(const TrainingPairs& pairs);
    Vector predict(const Matrix& history) const override;
    Index window() const override { return window_; }
    bool fitted() const override { return fitted_; }
    std::unique_ptr<Predictor> clone() const override;

    /// (S n) x n coefficient matrix; forecast = features^T * coefficients.
    const Matrix& coefficients() const;

private:
    Index window_;
    std::optional<double> ridge_;
    Matrix coef_;
    bool fitted_ = false;
};

RidgeLagPredictor fit_ridge_lag(const SamplePath& y, Index window, std::optional<double> ridge = std::nullopt);

/// Weighted collection of fitted predictors producing M forecast samples.
class EnsemblePredictor {
public:
    EnsemblePredictor() = default;
    EnsemblePredictor(std::vector<std::shared_ptr<const Predictor>> members, std::vector<double> weights);

    std::size_t size() const { return members_.size(); }
    const std::vector<double>& weights() const { return weights_; }
    const Predictor& member(std::size_t m) const { return *members_.at(m); }

    std::vector<Vector> predict_all(const Matrix& history) const;
    /// Weighted mean of the member forecasts.
    Vector predict_mean(const Matrix& history) const;

private:
    std::vector<std::shared_ptr<const Predictor>> members_;
    std::vector<double> weights_;
};

/// M ridge-lag members, each fitted on training pairs resampled with replacement
/// (or on the full set when resample is false), uniform weights.
EnsemblePredictor bootstrap_ensemble(const SamplePath& y, Index window, int members, Rng& rng,
                                     bool resample = true, std::optional<double> ridge = std::nullopt);

/// Point forecaster given by the weighted mean of an ensemble, so that a PTO decision
/// and an FPtP decision can be built from the same members.
class EnsembleMeanPredictor : public Predictor {
public:
    EnsembleMeanPredictor(Index window, int members, std::uint64_t seed, bool resample = true);
    explicit EnsembleMeanPredictor(EnsemblePredictor ensemble);

    void fit(const SamplePath& y) override;
    Vector predict(const Matrix& history) const override;
    Index window() const override { return window_; }
    bool fitted() const override { return fitted_; }
    std::unique_ptr<Predictor> clone() const override;

    const EnsemblePredictor& ensemble() const;

private:
    Index window_;
    int members_;
    std::uint64_t seed_;
    bool resample_;
    EnsemblePredictor ensemble_;
    bool fitted_ = false;
};

/// One-step forecast Phi Y_t + Theta epsilon_t of a fitted VARMA(1,1) where the innovations
/// are reconstructed over the supplied history starting from epsilon = 0.
class VarmaOneStepPredictor : public Predictor {
public:
    explicit VarmaOneStepPredictor(std::optional<VarmaParams> params = std::nullopt, std::uint64_t seed = 0);

    /// Maximum-likelihood fit over the symmetric-commutative family.
    void fit(const SamplePath& y) override;
    Vector predict(const Matrix& history) const override;
    Index window() const override { return 1; }
    bool fitted() const override { return params_.has_value(); }
    std::unique_ptr<Predictor> clone() const override;

    const VarmaParams& params() const;

private:
    std::optional<VarmaParams> params_;
    std::uint64_t seed_;
};

}  // namespace aove
