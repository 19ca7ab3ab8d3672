#pragma once

#include <vector>

#include "aove/varma.hpp"

namespace aove {

/// Forward-transformed series with cutoff l = max(p, q):
///   W_t = Y_t - sum_i Phi_i Y_{t+i}  for t <= T - l,    W_t = Y_t otherwise.
struct ForwardSeries {
    Matrix w;  // T x n
    int lag = 0;
};

ForwardSeries forward_transform(const SamplePath& y, const VarmaParams& params);

/// The Y -> W map as an nT x nT matrix acting on the time-stacked vector (Y_1; ...; Y_T).
/// Block unit-upper triangular, so its determinant is one.
Matrix forward_transform_matrix(const VarmaParams& params, Index T);

/// Block autocovariance Gamma_W(t, t-h) = Cov(W_t, W_{t-h}) of the forward series.
///
/// Cases follow where t and t-h fall relative to the cutoff T - l:
///   both transformed:     sum_{i=0}^{q-h} Theta_i Sigma Theta_{i+h}^T  (Theta_0 = I), zero for h > q
///   t raw, t-h transformed (T-2l < t-h): Gamma_Y(h) - sum_i Gamma_Y(h-i) Phi_i^T
///   both raw:             Gamma_Y(h)
///   anything else:        0
class GammaW {
public:
    GammaW(const VarmaParams& params, Index T);

    /// 1-based t, 0 <= h < t.
    Matrix operator()(Index t, Index h) const;
    /// Covariance between arbitrary 1-based times, Cov(W_s, W_t).
    Matrix cov(Index s, Index t) const;
    /// Largest h with a possibly non-zero Gamma_W(t, t-h).
    Index band(Index t) const;

    Index length() const { return T_; }
    int lag() const { return l_; }
    Index dim() const { return n_; }

private:
    Matrix gamma_y(int h) const;  // h may be negative

    Index T_;
    int l_;
    int q_;
    Index n_;
    std::vector<Matrix> phi_;
    std::vector<Matrix> ma_cov_;   // ma_cov_[h] = sum_i Theta_i Sigma Theta_{i+h}^T
    std::vector<Matrix> gamma_y_;  // Gamma_Y(0..2l)
};

GammaW gamma_w(const VarmaParams& params, Index T);

/// Output of the innovation recursion on W.
struct InnovationSequence {
    /// theta_coeffs[t-1][j-1] = Theta_{t,j}, t = 1..T-1, j = 1..t.
    std::vector<std::vector<Matrix>> theta_coeffs;
    std::vector<Matrix> sigma;  // Sigma_1..Sigma_T
    Matrix residuals;           // R_t = W_t - What_t, T x n
    Matrix predictors;          // What_t, T x n
    double log_det_sum = 0.0;   // sum_t log det Sigma_t
    double quad_form = 0.0;     // sum_t R_t^T Sigma_t^{-1} R_t
};

InnovationSequence innovations(const SamplePath& y, const VarmaParams& params);

/// Fisher-Neyman split of the exact Gaussian log-likelihood.
struct LogLikelihoodParts {
    double log_g0 = 0.0;
    double log_g1 = 0.0;
    double total() const { return log_g0 + log_g1; }
};

/// log g0 = -(nT/2) log(2 pi).
double log_g0(Index n, Index T);

/// General path: innovation recursion over Gamma_W.
LogLikelihoodParts log_likelihood(const SamplePath& y, const VarmaParams& params);

/// VARMA(1,1) recursion through alpha_t, beta_t and the C_{j,t} products.
LogLikelihoodParts log_likelihood_varma11(const SamplePath& y, const VarmaParams& params);

/// Symmetric-commutative VARMA(1,1): rotated series with scalar recursions, O(T n^2).
LogLikelihoodParts log_likelihood_symcomm(const SamplePath& y, const SymCommParams& params);

/// Cholesky of a prediction-error covariance with the jitter policy: on failure add
/// 1e-10 trace/n to the diagonal once, then give up with DegenerateModelError(t).
Eigen::LLT<Matrix> factor_with_jitter(Matrix& sigma, Index t);

}  // namespace aove
