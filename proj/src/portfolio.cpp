#include "aove/portfolio.hpp"

#include <cmath>

#include "aove/error.hpp"

namespace aove {

PortfolioSpec PortfolioSpec::from_constants(double wealth, double risk_aversion, double return_variance,
                                            double lambda_bar, Vector e, Vector x0) {
    PortfolioSpec s;
    s.mu0 = wealth / (risk_aversion * return_variance);
    s.mu1 = risk_aversion * return_variance / (2.0 * wealth);
    s.mu2 = lambda_bar / 2.0;
    s.e = std::move(e);
    s.x0 = std::move(x0);
    check_spec(s);
    return s;
}

void check_spec(const PortfolioSpec& spec) {
    if (spec.e.size() == 0) throw DimensionError("portfolio spec has no assets");
    if (spec.x0.size() != spec.e.size()) throw DimensionError("x0 and e lengths differ");
    if (!(spec.mu1 > 0.0)) throw ValidationError("mu1 must be positive");
    if (!(spec.mu2 >= 0.0)) throw ValidationError("mu2 must be nonnegative");
}

Vector d2_diag(const Vector& y_next, double mu2) {
    return mu2 * (-y_next.array()).exp().matrix();
}

double cost_with_d2(const Vector& x, const Matrix& d2, const PortfolioSpec& spec) {
    if (x.size() != spec.dim()) throw DimensionError("decision length does not match spec");
    const Vector a = x - spec.mu0 * spec.e;
    const Vector b = x - spec.x0;
    return spec.mu1 * a.squaredNorm() + b.dot(d2 * b);
}

double cost_pi(const Vector& x, const Vector& y_next, const PortfolioSpec& spec) {
    if (x.size() != spec.dim() || y_next.size() != spec.dim()) throw DimensionError("decision or observation length does not match spec");
    const Vector a = x - spec.mu0 * spec.e;
    const Vector b = x - spec.x0;
    return spec.mu1 * a.squaredNorm() + b.dot(d2_diag(y_next, spec.mu2).cwiseProduct(b));
}

Vector expected_d2_diag(const Vector& gamma2, double mu2) {
    return mu2 * (0.5 * gamma2.array()).exp().matrix();
}

Matrix expected_d2(const VarmaParams& params, double mu2) {
    return expected_d2_diag(stationary_covariance(params).diagonal(), mu2).asDiagonal();
}

double expected_cost_rho(const Vector& x, const VarmaParams& params, const PortfolioSpec& spec) {
    return cost_with_d2(x, expected_d2(params, spec.mu2), spec);
}

Vector solve_quadratic(const Matrix& d2_effective, const PortfolioSpec& spec) {
    check_spec(spec);
    const Index n = spec.dim();
    if (d2_effective.rows() != n || d2_effective.cols() != n) throw DimensionError("D2 shape does not match spec");
    const Matrix d2 = symmetrize(d2_effective);
    Matrix lhs = d2;
    lhs.diagonal().array() += spec.mu1;
    const Vector rhs = spec.mu0 * spec.mu1 * spec.e + d2 * spec.x0;
    Eigen::LLT<Matrix> llt(lhs);
    if (llt.info() != Eigen::Success) throw NumericalError("D1 + D2 is not positive definite");
    return llt.solve(rhs);
}

double relative_regret(const Vector& x, const Vector& x_star, const Matrix& d2, const PortfolioSpec& spec) {
    const Vector diff = x - x_star;
    const double excess = spec.mu1 * diff.squaredNorm() + diff.dot(symmetrize(d2) * diff);
    return excess / cost_with_d2(x_star, d2, spec);
}

}  // namespace aove
