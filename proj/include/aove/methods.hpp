#pragma once

#include <optional>
#include <vector>

#include "aove/mle.hpp"
#include "aove/portfolio.hpp"
#include "aove/predictor.hpp"
#include "aove/varma.hpp"

namespace aove {

/// A decision together with the effective D2 it was solved under.
struct MethodDecision {
    Vector x;
    Matrix d2;
};

struct EtoDecision {
    Vector x;
    Matrix d2;
    MleResult fit;
};

struct AoveDecision {
    Vector x;
    Matrix d2;
    std::vector<double> posterior;  // normalized weights per atom
    std::size_t failed_atoms = 0;   // atoms whose likelihood could not be evaluated
};

/// Weighted list of parameter atoms. Atoms added as SymCommParams keep that form so the
/// fast likelihood path can be used for them.
class DiscretePrior {
public:
    void add(VarmaParams params, double weight);
    void add(const SymCommParams& params, double weight);

    std::size_t size() const { return atoms_.size(); }
    bool empty() const { return atoms_.empty(); }
    const VarmaParams& atom(std::size_t i) const { return atoms_.at(i); }
    const std::optional<SymCommParams>& symcomm(std::size_t i) const { return symcomm_.at(i); }
    const std::vector<double>& weights() const { return weights_; }

    /// Rescales weights to sum to one; throws if they are all zero or any is negative.
    void normalize();

private:
    std::vector<VarmaParams> atoms_;
    std::vector<std::optional<SymCommParams>> symcomm_;
    std::vector<double> weights_;
};

/// Per-atom quantities that do not depend on the data: log prior weight and diag Gamma_Y(0).
class PreparedPrior {
public:
    explicit PreparedPrior(DiscretePrior prior);

    const DiscretePrior& prior() const { return prior_; }
    const std::vector<double>& log_weights() const { return log_u_; }
    const Vector& gamma2(std::size_t i) const { return gamma2_.at(i); }

private:
    DiscretePrior prior_;
    std::vector<double> log_u_;
    std::vector<Vector> gamma2_;
};

/// log g1(Y, xi) through the fastest applicable path.
double log_g1(const SamplePath& y, const VarmaParams& params, const std::optional<SymCommParams>& symcomm = std::nullopt);

/// Normalized weights w_i proportional to exp(log_u_i + log_g1_i), computed with a max shift.
std::vector<double> posterior_weights(const std::vector<double>& log_u, const std::vector<double>& log_g1);

MethodDecision solve_pto(const SamplePath& y, const Predictor& predictor, const PortfolioSpec& spec);

/// ETO decision at a given parameter (no estimation).
MethodDecision solve_eto_known(const VarmaParams& params, const PortfolioSpec& spec);

EtoDecision solve_eto(const SamplePath& y, const PortfolioSpec& spec, const MleConfig& config = {});

MethodDecision solve_fptp(const SamplePath& y, const EnsemblePredictor& ensemble, const PortfolioSpec& spec);

AoveDecision solve_aove(const SamplePath& y, const PreparedPrior& prior, const PortfolioSpec& spec, int workers = 1);
AoveDecision solve_aove(const SamplePath& y, const DiscretePrior& prior, const PortfolioSpec& spec, int workers = 1);

}  // namespace aove
