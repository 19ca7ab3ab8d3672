#include "aove/varma.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "aove/error.hpp"

namespace aove {

namespace {

void check_square(const Matrix& m, Index n, const char* what) {
    if (m.rows() != n || m.cols() != n) {
        std::ostringstream os;
        os << what << " is " << m.rows() << "x" << m.cols() << ", expected " << n << "x" << n;
        throw DimensionError(os.str());
    }
}

Matrix companion(const std::vector<Matrix>& blocks, Index n, double sign) {
    const Index k = static_cast<Index>(blocks.size());
    if (k == 0) return Matrix(0, 0);
    Matrix m = Matrix::Zero(k * n, k * n);
    for (Index i = 0; i < k; ++i) m.block(0, i * n, n, n) = sign * blocks[static_cast<std::size_t>(i)];
    if (k > 1) m.block(n, 0, (k - 1) * n, (k - 1) * n).setIdentity();
    return m;
}

}  // namespace

VarmaParams::VarmaParams(std::vector<Matrix> phi, std::vector<Matrix> theta, Matrix sigma_eps)
    : phi_(std::move(phi)), theta_(std::move(theta)), sigma_eps_(std::move(sigma_eps)) {
    const Index n = sigma_eps_.rows();
    if (n <= 0) throw DimensionError("sigma_eps must be a non-empty square matrix");
    check_square(sigma_eps_, n, "sigma_eps");
    for (const auto& m : phi_) check_square(m, n, "phi");
    for (const auto& m : theta_) check_square(m, n, "theta");
}

VarmaParams VarmaParams::white_noise(const Matrix& sigma_eps, int p, int q) {
    const Index n = sigma_eps.rows();
    return VarmaParams(std::vector<Matrix>(static_cast<std::size_t>(p), Matrix::Zero(n, n)),
                       std::vector<Matrix>(static_cast<std::size_t>(q), Matrix::Zero(n, n)), sigma_eps);
}

SymCommParams::SymCommParams(double theta, Matrix basis, Vector lambda_phi, Vector lambda_sigma)
    : theta_(theta),
      basis_(std::move(basis)),
      lambda_phi_(std::move(lambda_phi)),
      lambda_sigma_(std::move(lambda_sigma)) {
    const Index n = basis_.rows();
    if (n <= 0) throw DimensionError("basis must be non-empty");
    check_square(basis_, n, "basis");
    if (lambda_phi_.size() != n || lambda_sigma_.size() != n)
        throw DimensionError("eigenvalue vectors must match the basis dimension");
}

VarmaParams SymCommParams::expand() const {
    const Index n = dim();
    Matrix phi = symmetrize(basis_ * lambda_phi_.asDiagonal() * basis_.transpose());
    Matrix sigma = symmetrize(basis_ * lambda_sigma_.asDiagonal() * basis_.transpose());
    return VarmaParams({phi}, {theta_ * Matrix::Identity(n, n)}, sigma);
}

Vector SymCommParams::rotated_stationary_variance() const {
    Vector out(dim());
    for (Index i = 0; i < dim(); ++i) {
        const double phi = lambda_phi_(i);
        out(i) = lambda_sigma_(i) * (1.0 + 2.0 * phi * theta_ + theta_ * theta_) / (1.0 - phi * phi);
    }
    return out;
}

Matrix ar_companion(const VarmaParams& params) { return companion(params.phi(), params.dim(), 1.0); }

Matrix ma_companion(const VarmaParams& params) { return companion(params.theta(), params.dim(), -1.0); }

double spectral_radius(const Matrix& m) {
    if (m.size() == 0) return 0.0;
    Eigen::EigenSolver<Matrix> es(m, false);
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

ValidationReport validate(const VarmaParams& params) {
    ValidationReport r;
    r.ar_spectral_radius = spectral_radius(ar_companion(params));
    r.ma_spectral_radius = spectral_radius(ma_companion(params));
    if (!(r.ar_spectral_radius < 1.0 - kStabilityMargin)) r.violations.emplace_back("AR stationarity violated");
    if (!(r.ma_spectral_radius < 1.0 - kStabilityMargin)) r.violations.emplace_back("MA invertibility violated");

    const Matrix& s = params.sigma_eps();
    const double scale = std::max(1.0, s.cwiseAbs().maxCoeff());
    if ((s - s.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
        r.violations.emplace_back("sigma_eps not symmetric");
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(s), Eigen::EigenvaluesOnly);
    r.min_sigma_eigenvalue = es.eigenvalues().minCoeff();
    if (!(r.min_sigma_eigenvalue > kPdMargin)) r.violations.emplace_back("sigma_eps not positive definite");
    if (!s.allFinite()) r.violations.emplace_back("sigma_eps has non-finite entries");

    r.valid = r.violations.empty();
    return r;
}

namespace {
void throw_report(const ValidationReport& r, const char* prefix) {
    std::string msg = prefix;
    for (const auto& v : r.violations) msg += " [" + v + "]";
    throw ValidationError(msg);
}
}  // namespace

void require_valid(const VarmaParams& params) {
    const auto r = validate(params);
    if (!r.valid) throw_report(r, "invalid VARMA parameters:");
}

ValidationReport validate(const SymCommParams& params) {
    ValidationReport r;
    const Index n = params.dim();
    const Matrix& b = params.basis();
    if ((b.transpose() * b - Matrix::Identity(n, n)).norm() >= kOrthogonalityTol)
        r.violations.emplace_back("basis not orthogonal");
    if (!(std::abs(params.theta()) <= 0.9)) r.violations.emplace_back("|theta| exceeds 0.9");
    if (!(params.lambda_phi().cwiseAbs().maxCoeff() < 0.9))
        r.violations.emplace_back("|lambda_phi| not below 0.9");
    if (!(params.lambda_sigma().minCoeff() > 0.1 && params.lambda_sigma().maxCoeff() < 0.9))
        r.violations.emplace_back("lambda_sigma outside (0.1, 0.9)");
    r.ar_spectral_radius = params.lambda_phi().cwiseAbs().maxCoeff();
    r.ma_spectral_radius = std::abs(params.theta());
    r.min_sigma_eigenvalue = params.lambda_sigma().minCoeff();
    r.valid = r.violations.empty();
    return r;
}

void require_valid(const SymCommParams& params) {
    const auto r = validate(params);
    if (!r.valid) throw_report(r, "invalid symmetric-commutative parameters:");
}

SamplePath::SamplePath(Matrix data) : data_(std::move(data)) {
    if (data_.rows() == 0 || data_.cols() == 0) throw DataError("sample path must be non-empty");
    if (!data_.allFinite()) throw DataError("sample path has non-finite entries");
}

SamplePath SamplePath::slice(Index first, Index count) const {
    if (first < 0 || count <= 0 || first + count > length()) throw DataError("slice out of range");
    return SamplePath(data_.middleRows(first, count));
}

SamplePath simulate(const VarmaParams& params, Index T, Rng& rng) {
    if (T <= 0) throw DataError("simulation length must be positive");
    require_valid(params);
    const Index n = params.dim();
    const int p = params.p();
    const int q = params.q();
    const Index burn = kBurnInBase + kBurnInPerLag * params.max_lag();
    const Index total = burn + T;

    const Matrix chol = Eigen::LLT<Matrix>(params.sigma_eps()).matrixL();
    Matrix y = Matrix::Zero(n, total);
    Matrix eps(n, total);
    Vector z(n);
    for (Index t = 0; t < total; ++t) {
        for (Index k = 0; k < n; ++k) z(k) = rng.normal();
        eps.col(t).noalias() = chol * z;
        auto yt = y.col(t);
        yt = eps.col(t);
        for (int i = 1; i <= p && t - i >= 0; ++i) yt.noalias() += params.phi(i) * y.col(t - i);
        for (int j = 1; j <= q && t - j >= 0; ++j) yt.noalias() += params.theta(j) * eps.col(t - j);
    }
    return SamplePath(y.rightCols(T).transpose());
}

AugmentedState augmented_state(const VarmaParams& params) {
    const Index n = params.dim();
    const int pa = std::max(params.p(), 1);
    const int q = params.q();
    const Index dim = static_cast<Index>(pa + q) * n;

    Matrix trans = Matrix::Zero(dim, dim);
    for (int i = 1; i <= params.p(); ++i) trans.block(0, (i - 1) * n, n, n) = params.phi(i);
    for (int j = 1; j <= q; ++j) trans.block(0, (pa + j - 1) * n, n, n) = params.theta(j);
    for (int i = 1; i < pa; ++i) trans.block(i * n, (i - 1) * n, n, n).setIdentity();
    for (int j = 1; j < q; ++j) trans.block((pa + j) * n, (pa + j - 1) * n, n, n).setIdentity();

    Matrix b = Matrix::Zero(dim, n);
    b.topRows(n).setIdentity();
    if (q > 0) b.middleRows(pa * n, n).setIdentity();
    Matrix noise = b * params.sigma_eps() * b.transpose();

    const Index d2 = dim * dim;
    Matrix system = Matrix::Identity(d2, d2);
    // Column-major vec: vec(P S P^T) = (P (x) P) vec(S).
    for (Index r = 0; r < dim; ++r)
        for (Index c = 0; c < dim; ++c) {
            const double prc = trans(r, c);
            if (prc == 0.0) continue;
            system.block(r * dim, c * dim, dim, dim) -= prc * trans;
        }
    Eigen::PartialPivLU<Matrix> lu(system);
    const double rcond = lu.rcond();
    if (!(rcond > 1e-14)) {
        std::ostringstream os;
        os << "I - P(x)P is numerically singular (rcond " << rcond << "): near unit root";
        throw NumericalError(os.str());
    }
    Vector vec_s = lu.solve(Eigen::Map<const Vector>(noise.data(), d2));
    Matrix s = Eigen::Map<Matrix>(vec_s.data(), dim, dim);
    return {std::move(trans), std::move(noise), symmetrize(s)};
}

Matrix stationary_covariance(const VarmaParams& params) {
    require_valid(params);
    return augmented_state(params).stationary_cov.topLeftCorner(params.dim(), params.dim());
}

std::vector<Matrix> state_autocovariances(const VarmaParams& params, int max_lag) {
    require_valid(params);
    const Index n = params.dim();
    const auto st = augmented_state(params);
    std::vector<Matrix> out;
    out.reserve(static_cast<std::size_t>(max_lag) + 1);
    Matrix lagged = st.stationary_cov;  // P^h S
    for (int h = 0; h <= max_lag; ++h) {
        out.push_back(h == 0 ? symmetrize(lagged.topLeftCorner(n, n)) : Matrix(lagged.topLeftCorner(n, n)));
        lagged = st.transition * lagged;
    }
    return out;
}

std::vector<Matrix> ma_infinity_weights(const VarmaParams& params) {
    const Index n = params.dim();
    const int p = params.p();
    const int q = params.q();
    const int quiet_needed = std::max(p, 1);
    std::vector<Matrix> psi;
    psi.push_back(Matrix::Identity(n, n));
    int quiet = 0;
    for (int j = 1; j < kMaTruncation; ++j) {
        Matrix next = (j <= q) ? params.theta(j) : Matrix::Zero(n, n);
        for (int i = 1; i <= std::min(j, p); ++i) next.noalias() += params.phi(i) * psi[static_cast<std::size_t>(j - i)];
        const bool small = next.norm() < kMaWeightTol;
        psi.push_back(std::move(next));
        // Once j > q and the last max(p,1) weights vanish, every later weight does too.
        quiet = small ? quiet + 1 : 0;
        if (j > q && quiet >= quiet_needed) break;
    }
    return psi;
}

Matrix autocovariance(const VarmaParams& params, int h) {
    require_valid(params);
    if (h < 0) return autocovariance(params, -h).transpose();
    const auto psi = ma_infinity_weights(params);
    const Index n = params.dim();
    Matrix g = Matrix::Zero(n, n);
    const auto lag = static_cast<std::size_t>(h);
    for (std::size_t j = 0; j + lag < psi.size(); ++j)
        g.noalias() += psi[j + lag] * params.sigma_eps() * psi[j].transpose();
    return h == 0 ? symmetrize(g) : g;
}

}  // namespace aove
