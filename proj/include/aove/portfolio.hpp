#pragma once

#include "aove/varma.hpp"

namespace aove {

/// Constants of the trading-cost objective
///   pi(x, y) = (x - mu0 e)^T D1 (x - mu0 e) + (x - x0)^T D2(y) (x - x0),
///   D1 = mu1 I,  D2(y) = mu2 Diag(exp(-y)).
struct PortfolioSpec {
    double mu0 = 0.0;
    double mu1 = 1.0;
    double mu2 = 0.0;
    Vector e;
    Vector x0;

    Index dim() const { return e.size(); }

    /// mu0 = A / (gamma delta^2), mu1 = gamma delta^2 / (2A), mu2 = lambda_bar / 2.
    static PortfolioSpec from_constants(double wealth, double risk_aversion, double return_variance,
                                        double lambda_bar, Vector e, Vector x0);
};

/// Throws DimensionError / ValidationError on inconsistent specs.
void check_spec(const PortfolioSpec& spec);

/// Diagonal of D2(y).
Vector d2_diag(const Vector& y_next, double mu2);

double cost_pi(const Vector& x, const Vector& y_next, const PortfolioSpec& spec);

/// Quadratic cost under a fixed effective D2 (diagonal or full).
double cost_with_d2(const Vector& x, const Matrix& d2, const PortfolioSpec& spec);

/// E[D2] = mu2 Diag(exp(gamma^2 / 2)), gamma^2 = diag Gamma_Y(0).
Matrix expected_d2(const VarmaParams& params, double mu2);
Vector expected_d2_diag(const Vector& gamma2, double mu2);

double expected_cost_rho(const Vector& x, const VarmaParams& params, const PortfolioSpec& spec);

/// Unique minimizer x = (D1 + D2)^{-1} (mu0 D1 e + D2 x0).
Vector solve_quadratic(const Matrix& d2_effective, const PortfolioSpec& spec);

/// (rho(x) - rho(x*)) / rho(x*) for the quadratic with effective D2 whose minimizer is x*,
/// evaluated as (x - x*)^T (D1 + D2) (x - x*) / rho(x*).
double relative_regret(const Vector& x, const Vector& x_star, const Matrix& d2, const PortfolioSpec& spec);

}  // namespace aove
