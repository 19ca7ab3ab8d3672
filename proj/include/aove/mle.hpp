#pragma once

#include <cstdint>
#include <functional>

#include "aove/varma.hpp"

namespace aove {

/// Unconstrained coordinates for the symmetric-commutative VARMA(1,1) family:
///   z = [a, b_1..b_n, c_1..c_n, s_1..s_{n(n-1)/2}]
///   theta = 0.9 tanh(a), lambda_phi = 0.9 tanh(b), lambda_sigma = 0.1 + 0.8 logistic(c),
///   basis = base * cayley(skew(s)).
struct SymCommCoordinates {
    static Index size(Index n) { return 1 + 2 * n + n * (n - 1) / 2; }
    static SymCommParams decode(const Vector& z, const Matrix& base);
    /// Coordinates of params relative to `base`; requires basis = base * cayley(S) to be
    /// solvable, which holds whenever base^T basis has no eigenvalue -1.
    static Vector encode(const SymCommParams& params, const Matrix& base);
};

/// Skew-symmetric matrix from its strict upper triangle (row-major).
Matrix skew_from_upper(const Vector& s, Index n);
/// Cayley transform (I - S)^{-1} (I + S), orthogonal for skew-symmetric S.
Matrix cayley(const Matrix& skew);

double scaled_atanh(double value, double scale);
double logit_range(double value, double lo, double hi);

struct NelderMeadOptions {
    double tolerance = 1e-8;  // spread of objective values across the simplex
    int max_iterations = 2000;
    double initial_step = 0.5;
};

struct NelderMeadResult {
    Vector x;
    double value = 0.0;
    int iterations = 0;
    bool converged = false;
};

NelderMeadResult nelder_mead(const std::function<double(const Vector&)>& objective, const Vector& start,
                             const NelderMeadOptions& options = {});

struct MleConfig {
    int restarts = 5;
    double tolerance = 1e-8;
    int max_iterations = 2000;
    double restart_scale = 0.5;
    std::uint64_t seed = 0;
};

struct MleResult {
    SymCommParams params;
    double log_likelihood = 0.0;
    bool converged = false;
    int iterations = 0;
    int best_restart = 0;

    VarmaParams expanded() const { return params.expand(); }
};

/// Maximum-likelihood estimate over the symmetric-commutative VARMA(1,1) family.
/// Restart 0 starts from moment estimates in the eigenbasis of the sample covariance;
/// restarts 1..R-1 perturb it with draws from a stream seeded by config.seed.
MleResult mle(const SamplePath& y, const MleConfig& config = {});

}  // namespace aove
