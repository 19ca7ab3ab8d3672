#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "aove/methods.hpp"
#include "aove/mle.hpp"
#include "aove/portfolio.hpp"
#include "aove/varma.hpp"

namespace aove {

/// VARMA(p,q) with one orthogonal basis shared by every coefficient:
///   Phi_i = P diag(lambda_phi[i]) P^T,  Theta_j = theta[j] I,  Sigma = P diag(lambda_sigma) P^T.
/// For p = q = 1 this is exactly the symmetric-commutative family.
struct CommonBasisParams {
    Matrix basis;
    std::vector<Vector> lambda_phi;
    std::vector<double> theta;
    Vector lambda_sigma;

    Index dim() const { return basis.rows(); }
    int p() const { return static_cast<int>(lambda_phi.size()); }
    int q() const { return static_cast<int>(theta.size()); }
    VarmaParams expand() const;
    SymCommParams as_symcomm() const;  // requires p = q = 1
};

/// Unconstrained coordinates of CommonBasisParams with the identity as reference basis:
///   z = [a_1..a_q, b_{1,1..n}, .., b_{p,1..n}, c_1..c_n, skew]
Vector encode_common(const CommonBasisParams& params);
CommonBasisParams decode_common(const Vector& z, Index n, int p, int q);

/// theta = 0.4, lambda_phi evenly spaced on [-0.5, 0.5], lambda_sigma on [0.3, 0.7], P = I.
/// Extra lags (order above one) start at zero.
CommonBasisParams reference_params(Index n, int p = 1, int q = 1);

inline constexpr double kCandidateScale = 0.25;
inline constexpr int kCandidateMaxTries = 100;

/// Gaussian perturbation of the reference coordinates; redrawn until the expansion is valid.
CommonBasisParams sample_candidate(const CommonBasisParams& reference, Rng& rng);

/// Squared Frobenius distance summed over Theta, Phi and Sigma lags (missing lags count as zero).
double parameter_distance(const VarmaParams& a, const VarmaParams& b);

struct CandidatePrior {
    std::vector<CommonBasisParams> candidates;
    std::vector<double> weights;  // softmin of the distance to the reference
};

CandidatePrior build_prior(const CommonBasisParams& reference, std::size_t count, Rng& rng);

enum class Method { AOVE, ETO, PTO, FPTP, ORACLE };
std::string method_label(Method m);
Method parse_method(const std::string& name);

struct SyntheticConfig {
    Index n = 2;
    std::size_t n_t = 10000;
    std::size_t n_o = 50;
    std::size_t n_ove = 500;
    std::size_t n_sove = 5;
    std::size_t n_s = 200;
    Index T = 25;
    int p = 1;  // oracle order
    int q = 1;
    std::uint64_t seed = 1;
    Index window = 10;
    int ensemble_size = 25;
    double wealth = 1.0;
    double risk_aversion = 0.1;
    double return_variance = 0.1;
    double mu2 = 0.1;
    bool compute_mse = true;
    int workers = 1;
    MleConfig mle;
};

/// Throws ConfigError listing every problem.
void check_config(const SyntheticConfig& config);

struct OracleRecord {
    Method method;
    std::size_t oracle_index;
    double mean_regret = 0.0;
    double mean_cost = 0.0;
    double oracle_cost = 0.0;
    double mse = 0.0;  // NaN when not computed for this method
    double seconds = 0.0;
    std::size_t failures = 0;
    std::vector<double> regrets;  // per path
};

struct MethodSummary {
    Method method;
    double mean_regret = 0.0;
    double mse = 0.0;
    double seconds = 0.0;
    std::size_t failures = 0;
};

struct RegretReport {
    std::vector<OracleRecord> records;  // oracle-major, then method in the requested order
    std::vector<MethodSummary> summary;
    double seconds = 0.0;

    const MethodSummary& summary_for(Method m) const;
};

/// Problem constants shared by all oracles of a run: e ~ U[0.05, 0.15], x0 ~ U(0, 1).
PortfolioSpec synthetic_spec(const SyntheticConfig& config);

/// Average squared one-step error over the last 40% of y after fitting on the first 60%.
double rolling_mse(const SamplePath& y, Predictor& predictor);

/// Evaluation with a VARMA(1,1) oracle family (config.p = config.q = 1) or, when the
/// oracle order is higher, the mis-specified variant with a VARMA(1,1) A-OVE prior
/// built from MLE fits.
RegretReport run_well_specified(const SyntheticConfig& config, const std::vector<Method>& methods);
RegretReport run_misspecified(const SyntheticConfig& config, const std::vector<Method>& methods);

/// Evaluation against explicit oracles and a given A-OVE prior; the building block of both
/// runs above.
RegretReport evaluate_oracles(const SyntheticConfig& config, const std::vector<VarmaParams>& oracles,
                              const PreparedPrior& aove_prior, const PortfolioSpec& spec,
                              const std::vector<Method>& methods);

void write_report_table(const RegretReport& report, std::ostream& out);
void write_summary_table(const RegretReport& report, std::ostream& out);

}  // namespace aove
