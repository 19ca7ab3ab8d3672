#include "aove/likelihood.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "aove/error.hpp"

namespace aove {

namespace {

void require_length(const SamplePath& y, const VarmaParams& params) {
    if (y.dim() != params.dim()) throw DimensionError("sample dimension does not match parameters");
    if (y.length() <= params.max_lag()) {
        std::ostringstream os;
        os << "need T > max(p,q) = " << params.max_lag() << ", got T = " << y.length();
        throw DataError(os.str());
    }
}

// Right-multiplication by Sigma^{-1} for symmetric Sigma: X Sigma^{-1} = (Sigma^{-1} X^T)^T.
Matrix times_inverse(const Matrix& x, const Eigen::LLT<Matrix>& llt) {
    return llt.solve(x.transpose()).transpose();
}

double log_det(const Eigen::LLT<Matrix>& llt) {
    return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

double quad(const Eigen::LLT<Matrix>& llt, const Vector& r) {
    return llt.matrixL().solve(r).squaredNorm();
}

}  // namespace

ForwardSeries forward_transform(const SamplePath& y, const VarmaParams& params) {
    require_length(y, params);
    const Index T = y.length();
    const int l = params.max_lag();
    ForwardSeries out{y.data(), l};
    for (Index t = 0; t < T - l; ++t)
        for (int i = 1; i <= params.p(); ++i)
            out.w.row(t).noalias() -= y.data().row(t + i) * params.phi(i).transpose();
    return out;
}

Matrix forward_transform_matrix(const VarmaParams& params, Index T) {
    const Index n = params.dim();
    const int l = params.max_lag();
    Matrix a = Matrix::Identity(n * T, n * T);
    for (Index t = 0; t < T - l; ++t)
        for (int i = 1; i <= params.p(); ++i) a.block(t * n, (t + i) * n, n, n) = -params.phi(i);
    return a;
}

GammaW::GammaW(const VarmaParams& params, Index T)
    : T_(T), l_(params.max_lag()), q_(params.q()), n_(params.dim()), phi_(params.phi()) {
    const Matrix& sigma = params.sigma_eps();
    auto theta = [&](int i) -> Matrix { return i == 0 ? Matrix::Identity(n_, n_) : params.theta(i); };
    for (int h = 0; h <= q_; ++h) {
        Matrix acc = Matrix::Zero(n_, n_);
        for (int i = 0; i <= q_ - h; ++i) acc.noalias() += theta(i) * sigma * theta(i + h).transpose();
        ma_cov_.push_back(h == 0 ? symmetrize(acc) : acc);
    }
    gamma_y_ = state_autocovariances(params, 2 * l_);
}

Matrix GammaW::gamma_y(int h) const {
    return h >= 0 ? gamma_y_.at(static_cast<std::size_t>(h))
                  : Matrix(gamma_y_.at(static_cast<std::size_t>(-h)).transpose());
}

Matrix GammaW::operator()(Index t, Index h) const {
    if (t < 1 || t > T_ || h < 0 || h >= t) throw DimensionError("Gamma_W index out of range");
    const Index cut = T_ - l_;
    const Index s = t - h;
    if (t <= cut) return h <= q_ ? ma_cov_[static_cast<std::size_t>(h)] : Matrix::Zero(n_, n_);
    if (s > cut) return gamma_y(static_cast<int>(h));
    if (s <= T_ - 2 * l_) return Matrix::Zero(n_, n_);
    Matrix g = gamma_y(static_cast<int>(h));
    for (std::size_t i = 1; i <= phi_.size(); ++i)
        g.noalias() -= gamma_y(static_cast<int>(h) - static_cast<int>(i)) * phi_[i - 1].transpose();
    return g;
}

Matrix GammaW::cov(Index s, Index t) const {
    return s >= t ? (*this)(s, s - t) : Matrix((*this)(t, t - s).transpose());
}

Index GammaW::band(Index t) const {
    if (t <= T_ - l_) return std::min<Index>(q_, t - 1);
    return std::min<Index>(t - 1, t + 2 * l_ - T_ - 1);
}

GammaW gamma_w(const VarmaParams& params, Index T) {
    require_valid(params);
    return GammaW(params, T);
}

double log_g0(Index n, Index T) {
    return -0.5 * static_cast<double>(n * T) * std::log(2.0 * std::numbers::pi);
}

Eigen::LLT<Matrix> factor_with_jitter(Matrix& sigma, Index t) {
    Eigen::LLT<Matrix> llt(sigma);
    if (llt.info() == Eigen::Success) return llt;
    const Index n = sigma.rows();
    sigma.diagonal().array() += 1e-10 * sigma.trace() / static_cast<double>(n);
    llt.compute(sigma);
    if (llt.info() != Eigen::Success) {
        std::ostringstream os;
        os << "prediction-error covariance Sigma_" << t << " is not positive definite";
        throw DegenerateModelError(static_cast<std::size_t>(t), os.str());
    }
    return llt;
}

InnovationSequence innovations(const SamplePath& y, const VarmaParams& params) {
    require_valid(params);
    const auto fw = forward_transform(y, params);
    const Index T = y.length();
    const Index n = y.dim();
    const GammaW g(params, T);

    InnovationSequence out;
    out.sigma.resize(static_cast<std::size_t>(T));
    out.theta_coeffs.resize(static_cast<std::size_t>(T - 1));
    out.residuals = Matrix::Zero(T, n);
    out.predictors = Matrix::Zero(T, n);
    std::vector<Eigen::LLT<Matrix>> factors(static_cast<std::size_t>(T));

    // Theta_{m,j}, 1-based m and j.
    auto coeff = [&](Index m, Index j) -> Matrix& {
        return out.theta_coeffs[static_cast<std::size_t>(m - 1)][static_cast<std::size_t>(j - 1)];
    };

    out.sigma[0] = g(1, 0);
    factors[0] = factor_with_jitter(out.sigma[0], 1);

    for (Index m = 1; m < T; ++m) {
        out.theta_coeffs[static_cast<std::size_t>(m - 1)].assign(static_cast<std::size_t>(m), Matrix::Zero(n, n));
        const Index bw = g.band(m + 1);
        const Index k0 = std::max<Index>(0, m - bw);
        for (Index k = k0; k < m; ++k) {
            Matrix acc = g(m + 1, m - k);
            const Index bk = k >= 1 ? g.band(k + 1) : 0;
            for (Index j = std::max(k0, k - bk); j < k; ++j)
                acc.noalias() -= coeff(m, m - j) * out.sigma[static_cast<std::size_t>(j)] * coeff(k, k - j).transpose();
            coeff(m, m - k) = times_inverse(acc, factors[static_cast<std::size_t>(k)]);
        }
        Matrix s = g(m + 1, 0);
        for (Index j = k0; j < m; ++j)
            s.noalias() -= coeff(m, m - j) * out.sigma[static_cast<std::size_t>(j)] * coeff(m, m - j).transpose();
        out.sigma[static_cast<std::size_t>(m)] = symmetrize(s);
        factors[static_cast<std::size_t>(m)] = factor_with_jitter(out.sigma[static_cast<std::size_t>(m)], m + 1);
    }

    for (Index t = 1; t <= T; ++t) {
        Vector pred = Vector::Zero(n);
        if (t >= 2) {
            const Index m = t - 1;
            const Index bw = g.band(t);
            for (Index j = 1; j <= std::min(m, bw); ++j)
                pred.noalias() += coeff(m, j) * out.residuals.row(t - j - 1).transpose();
        }
        out.predictors.row(t - 1) = pred.transpose();
        const Vector r = fw.w.row(t - 1).transpose() - pred;
        out.residuals.row(t - 1) = r.transpose();
        const auto& f = factors[static_cast<std::size_t>(t - 1)];
        out.log_det_sum += log_det(f);
        out.quad_form += quad(f, r);
    }
    return out;
}

LogLikelihoodParts log_likelihood(const SamplePath& y, const VarmaParams& params) {
    const auto inn = innovations(y, params);
    return {log_g0(y.dim(), y.length()), -0.5 * inn.log_det_sum - 0.5 * inn.quad_form};
}

LogLikelihoodParts log_likelihood_varma11(const SamplePath& y, const VarmaParams& params) {
    if (params.p() != 1 || params.q() != 1) throw ValidationError("VARMA(1,1) recursion requires p = q = 1");
    require_valid(params);
    require_length(y, params);
    const Index T = y.length();
    const Index n = y.dim();
    const Matrix& phi = params.phi(1);
    const Matrix& theta = params.theta(1);
    const Matrix& sig = params.sigma_eps();
    const Matrix head = symmetrize(theta * sig * theta.transpose() + sig);
    const Matrix cross = sig * theta.transpose();
    const Matrix gamma0 = stationary_covariance(params);

    // Sigma_t and Theta_{t,1}; index 0 holds t = 1.
    std::vector<Matrix> sigma(static_cast<std::size_t>(T));
    std::vector<Eigen::LLT<Matrix>> factors(static_cast<std::size_t>(T));
    std::vector<Matrix> th(static_cast<std::size_t>(T));  // th[t-1] = Theta_{t,1}, t = 1..T-1
    sigma[0] = head;
    factors[0] = factor_with_jitter(sigma[0], 1);
    for (Index t = 1; t < T; ++t) {
        const auto i = static_cast<std::size_t>(t - 1);
        th[i] = times_inverse(cross, factors[i]);
        const Matrix& base = (t + 1 <= T - 1) ? head : gamma0;
        sigma[i + 1] = symmetrize(base - th[i] * sigma[i] * th[i].transpose());
        factors[i + 1] = factor_with_jitter(sigma[i + 1], t + 1);
    }
    auto theta_t1 = [&](Index t) -> const Matrix& { return th[static_cast<std::size_t>(t - 1)]; };

    std::vector<Vector> alpha(static_cast<std::size_t>(T + 1));
    alpha[1] = y.at(1);
    for (Index t = 2; t <= T; ++t) alpha[static_cast<std::size_t>(t)] = y.at(t) - theta_t1(t - 1) * alpha[static_cast<std::size_t>(t - 1)];
    auto beta = [&](Index t) -> Vector { return y.at(t + 1); };

    // sum_{j=0}^{t-2} C_{j,t} Phi beta_{t-1-j}, C_{j,t} = (-1)^j Theta_{t-1,1} ... Theta_{t-j-1,1}.
    auto c_sum = [&](Index t) -> Vector {
        Vector acc = Vector::Zero(n);
        Matrix c = theta_t1(t - 1);
        for (Index j = 0; j <= t - 2; ++j) {
            if (j > 0) c = -(c * theta_t1(t - j - 1));
            acc.noalias() += c * phi * beta(t - 1 - j);
        }
        return acc;
    };

    double ld = 0.0;
    double qf = 0.0;
    for (Index t = 1; t <= T; ++t) {
        Vector r;
        if (t == 1) {
            r = alpha[1] - phi * beta(1);
        } else if (t < T) {
            r = alpha[static_cast<std::size_t>(t)] - phi * beta(t) + c_sum(t);
        } else {
            const Matrix& tl = theta_t1(T - 1);
            r = alpha[static_cast<std::size_t>(T)] + tl * phi * beta(T - 1);
            if (T - 1 >= 2) r -= tl * c_sum(T - 1);
        }
        const auto& f = factors[static_cast<std::size_t>(t - 1)];
        ld += log_det(f);
        qf += quad(f, r);
    }
    return {log_g0(n, T), -0.5 * ld - 0.5 * qf};
}

LogLikelihoodParts log_likelihood_symcomm(const SamplePath& y, const SymCommParams& params) {
    require_valid(params);
    if (y.dim() != params.dim()) throw DimensionError("sample dimension does not match parameters");
    const Index T = y.length();
    const Index n = y.dim();
    if (T < 2) throw DataError("need T > 1 for a VARMA(1,1) likelihood");

    const double theta = params.theta();
    const Vector lphi = params.lambda_phi();
    const Vector lsig = params.lambda_sigma();
    const Vector lgamma = params.rotated_stationary_variance();
    const Matrix rotated = y.data() * params.basis();  // row t holds (P^T Y_t)^T

    const double s1 = 1.0 + theta * theta;
    double s_prev = s1;  // s_{t-1}
    double d = 0.0;      // d_t
    Vector alpha = rotated.row(0).transpose();
    Vector csum = Vector::Zero(n);  // running sum_j C_{j,t} Lambda beta_{t-1-j}
    double ld = 0.0;
    double qf = 0.0;

    auto lam_beta = [&](Index t) -> Vector { return lphi.cwiseProduct(rotated.row(t).transpose()); };

    for (Index t = 1; t <= T; ++t) {
        double s = s1;
        if (t >= 2) {
            d = theta / s_prev;
            alpha = rotated.row(t - 1).transpose() - d * alpha;
            csum = d * (lam_beta(t - 1) - csum);  // uses S_{t-1}, becomes S_t
            s = s1 - theta * d;
        }
        Vector r;
        Vector var;
        if (t < T) {
            r = alpha - lam_beta(t);
            if (t >= 2) r += csum;
            var = s * lsig;
        } else {
            // csum now holds d_T (Lambda beta_{T-1} - S_{T-1}).
            r = alpha + csum;
            var = lgamma - (theta * theta / s_prev) * lsig;
        }
        if (!(var.minCoeff() > 0.0)) {
            throw DegenerateModelError(static_cast<std::size_t>(t), "rotated prediction-error variance not positive");
        }
        ld += var.array().log().sum();
        qf += (r.array().square() / var.array()).sum();
        if (t < T) s_prev = s;
    }
    return {log_g0(n, T), -0.5 * ld - 0.5 * qf};
}

}  // namespace aove
