#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "aove/rng.hpp"

namespace aove {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Zero-mean Gaussian VARMA(p,q) parameters:
///   Y_t - sum_i Phi_i Y_{t-i} = eps_t + sum_j Theta_j eps_{t-j},  eps_t ~ N(0, Sigma_eps).
/// Construction only checks shapes; model validity is the job of validate().
class VarmaParams {
public:
    VarmaParams(std::vector<Matrix> phi, std::vector<Matrix> theta, Matrix sigma_eps);

    Index dim() const { return sigma_eps_.rows(); }
    int p() const { return static_cast<int>(phi_.size()); }
    int q() const { return static_cast<int>(theta_.size()); }
    int max_lag() const { return std::max(p(), q()); }

    const std::vector<Matrix>& phi() const { return phi_; }
    const std::vector<Matrix>& theta() const { return theta_; }
    const Matrix& phi(int i) const { return phi_.at(static_cast<std::size_t>(i - 1)); }
    const Matrix& theta(int j) const { return theta_.at(static_cast<std::size_t>(j - 1)); }
    const Matrix& sigma_eps() const { return sigma_eps_; }

    /// All-zero white-noise model with the given innovation covariance.
    static VarmaParams white_noise(const Matrix& sigma_eps, int p = 0, int q = 0);

private:
    std::vector<Matrix> phi_;
    std::vector<Matrix> theta_;
    Matrix sigma_eps_;
};

/// VARMA(1,1) parameters that are symmetric and mutually commuting:
///   Theta = theta I,  Phi = P diag(lambda_phi) P^T,  Sigma_eps = P diag(lambda_sigma) P^T.
class SymCommParams {
public:
    SymCommParams(double theta, Matrix basis, Vector lambda_phi, Vector lambda_sigma);

    Index dim() const { return basis_.rows(); }
    double theta() const { return theta_; }
    const Matrix& basis() const { return basis_; }
    const Vector& lambda_phi() const { return lambda_phi_; }
    const Vector& lambda_sigma() const { return lambda_sigma_; }

    VarmaParams expand() const;

    /// Stationary variance of each rotated component (scalar ARMA(1,1) closed form).
    Vector rotated_stationary_variance() const;

private:
    double theta_;
    Matrix basis_;
    Vector lambda_phi_;
    Vector lambda_sigma_;
};

struct ValidationReport {
    bool valid = true;
    std::vector<std::string> violations;
    double ar_spectral_radius = 0.0;
    double ma_spectral_radius = 0.0;
    double min_sigma_eigenvalue = 0.0;
};

inline constexpr double kStabilityMargin = 1e-9;
inline constexpr double kPdMargin = 1e-10;
inline constexpr double kOrthogonalityTol = 1e-10;

/// Companion matrices M_Phi = [Phi_1 .. Phi_p; I 0] and M_Theta = [-Theta_1 .. -Theta_q; I 0].
Matrix ar_companion(const VarmaParams& params);
Matrix ma_companion(const VarmaParams& params);
double spectral_radius(const Matrix& m);

ValidationReport validate(const VarmaParams& params);
/// Throws ValidationError listing every violation.
void require_valid(const VarmaParams& params);

/// Orthogonal basis, |theta| <= 0.9, |lambda_phi| < 0.9, lambda_sigma in (0.1, 0.9).
ValidationReport validate(const SymCommParams& params);
void require_valid(const SymCommParams& params);

/// T x n matrix of observations, one time step per row.
class SamplePath {
public:
    explicit SamplePath(Matrix data);

    const Matrix& data() const { return data_; }
    Index length() const { return data_.rows(); }
    Index dim() const { return data_.cols(); }
    /// Observation at 1-based time t.
    Vector at(Index t) const { return data_.row(t - 1).transpose(); }
    /// Rows [first, first + count) (0-based) as a new path.
    SamplePath slice(Index first, Index count) const;

private:
    Matrix data_;
};

inline constexpr int kBurnInBase = 500;
inline constexpr int kBurnInPerLag = 10;

/// Simulates T observations after discarding 500 + 10 max(p,q) burn-in steps.
SamplePath simulate(const VarmaParams& params, Index T, Rng& rng);

/// Augmented state y_t = P y_{t-1} + U_t carrying (Y_t..Y_{t-p'+1}, eps_t..eps_{t-q+1}),
/// p' = max(p, 1), with its stationary covariance S solved from
/// vec(S) = (I - P (x) P)^{-1} vec(Sigma_U).
struct AugmentedState {
    Matrix transition;
    Matrix noise_cov;
    Matrix stationary_cov;
};

AugmentedState augmented_state(const VarmaParams& params);

/// Gamma_Y(0): top-left n x n block of the augmented stationary covariance.
Matrix stationary_covariance(const VarmaParams& params);

/// Gamma_Y(0..max_lag) from the augmented state, Gamma_Y(h) = [P^h S]_{11}.
std::vector<Matrix> state_autocovariances(const VarmaParams& params, int max_lag);

inline constexpr int kMaTruncation = 2000;
inline constexpr double kMaWeightTol = 1e-14;

/// MA(infinity) weights Psi_0 = I, Psi_j = Theta_j + sum_i Phi_i Psi_{j-i}, truncated
/// at kMaTruncation terms or once the recursion has provably died out below kMaWeightTol.
std::vector<Matrix> ma_infinity_weights(const VarmaParams& params);

/// Gamma_Y(h) = E[Y_t Y_{t-h}^T] = sum_j Psi_{j+h} Sigma Psi_j^T. Negative h gives Gamma_Y(-h)^T.
Matrix autocovariance(const VarmaParams& params, int h);

/// Symmetric part (M + M^T) / 2.
inline Matrix symmetrize(const Matrix& m) { return 0.5 * (m + m.transpose()); }

}  // namespace aove
