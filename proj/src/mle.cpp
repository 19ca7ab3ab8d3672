#include "aove/mle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "aove/error.hpp"
#include "aove/likelihood.hpp"
#include "aove/rng.hpp"

namespace aove {

namespace {

constexpr double kScaleTheta = 0.9;
constexpr double kScalePhi = 0.9;
constexpr double kSigmaLo = 0.1;
constexpr double kSigmaHi = 0.9;
constexpr double kPhiClamp = 15.0;
constexpr double kSigmaClamp = 30.0;

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

double scaled_atanh(double value, double scale) {
    const double r = std::clamp(value / scale, -1.0 + 1e-12, 1.0 - 1e-12);
    return std::atanh(r);
}

double logit_range(double value, double lo, double hi) {
    const double r = std::clamp((value - lo) / (hi - lo), 1e-12, 1.0 - 1e-12);
    return std::log(r / (1.0 - r));
}

Matrix skew_from_upper(const Vector& s, Index n) {
    if (s.size() != n * (n - 1) / 2) throw DimensionError("skew parameter length mismatch");
    Matrix out = Matrix::Zero(n, n);
    Index k = 0;
    for (Index i = 0; i < n; ++i)
        for (Index j = i + 1; j < n; ++j) {
            out(i, j) = s(k);
            out(j, i) = -s(k);
            ++k;
        }
    return out;
}

Matrix cayley(const Matrix& skew) {
    const Index n = skew.rows();
    const Matrix id = Matrix::Identity(n, n);
    return (id - skew).partialPivLu().solve(id + skew);
}

SymCommParams SymCommCoordinates::decode(const Vector& z, const Matrix& base) {
    const Index n = base.rows();
    if (z.size() != size(n)) throw DimensionError("coordinate vector length mismatch");
    const double theta = kScaleTheta * std::tanh(z(0));
    Vector lphi(n), lsig(n);
    for (Index i = 0; i < n; ++i) {
        lphi(i) = kScalePhi * std::tanh(std::clamp(z(1 + i), -kPhiClamp, kPhiClamp));
        lsig(i) = kSigmaLo + (kSigmaHi - kSigmaLo) * logistic(std::clamp(z(1 + n + i), -kSigmaClamp, kSigmaClamp));
    }
    Matrix basis = base;
    if (n > 1) basis = base * cayley(skew_from_upper(z.tail(n * (n - 1) / 2), n));
    return SymCommParams(theta, std::move(basis), std::move(lphi), std::move(lsig));
}

Vector SymCommCoordinates::encode(const SymCommParams& params, const Matrix& base) {
    const Index n = params.dim();
    Vector z(size(n));
    z(0) = scaled_atanh(params.theta(), kScaleTheta);
    for (Index i = 0; i < n; ++i) {
        z(1 + i) = scaled_atanh(params.lambda_phi()(i), kScalePhi);
        z(1 + n + i) = logit_range(params.lambda_sigma()(i), kSigmaLo, kSigmaHi);
    }
    if (n > 1) {
        const Matrix id = Matrix::Identity(n, n);
        const Matrix q = base.transpose() * params.basis();
        const Matrix s = (q + id).transpose().partialPivLu().solve((q - id).transpose()).transpose();
        Index k = 0;
        for (Index i = 0; i < n; ++i)
            for (Index j = i + 1; j < n; ++j) z(1 + 2 * n + k++) = s(i, j);
    }
    return z;
}

NelderMeadResult nelder_mead(const std::function<double(const Vector&)>& objective, const Vector& start,
                             const NelderMeadOptions& options) {
    const Index d = start.size();
    auto eval = [&](const Vector& x) {
        const double v = objective(x);
        return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
    };

    std::vector<Vector> simplex(static_cast<std::size_t>(d + 1), start);
    std::vector<double> values(static_cast<std::size_t>(d + 1));
    for (Index i = 0; i < d; ++i) simplex[static_cast<std::size_t>(i + 1)](i) += options.initial_step;
    for (std::size_t i = 0; i < simplex.size(); ++i) values[i] = eval(simplex[i]);

    std::vector<std::size_t> order(simplex.size());
    NelderMeadResult out;
    for (out.iterations = 0; out.iterations < options.max_iterations; ++out.iterations) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
        const std::size_t best = order.front();
        const std::size_t worst = order.back();
        const std::size_t second = order[order.size() - 2];
        if (std::isfinite(values[worst]) && values[worst] - values[best] <= options.tolerance) {
            out.converged = true;
            break;
        }

        Vector centroid = Vector::Zero(d);
        for (std::size_t k = 0; k + 1 < order.size(); ++k) centroid += simplex[order[k]];
        centroid /= static_cast<double>(d);

        const Vector reflected = centroid + (centroid - simplex[worst]);
        const double fr = eval(reflected);
        if (fr < values[best]) {
            const Vector expanded = centroid + 2.0 * (centroid - simplex[worst]);
            const double fe = eval(expanded);
            if (fe < fr) {
                simplex[worst] = expanded;
                values[worst] = fe;
            } else {
                simplex[worst] = reflected;
                values[worst] = fr;
            }
            continue;
        }
        if (fr < values[second]) {
            simplex[worst] = reflected;
            values[worst] = fr;
            continue;
        }
        const bool outside = fr < values[worst];
        const Vector contracted = outside ? Vector(centroid + 0.5 * (reflected - centroid))
                                          : Vector(centroid + 0.5 * (simplex[worst] - centroid));
        const double fc = eval(contracted);
        if (fc < (outside ? fr : values[worst])) {
            simplex[worst] = contracted;
            values[worst] = fc;
            continue;
        }
        for (std::size_t k = 1; k < order.size(); ++k) {
            auto& v = simplex[order[k]];
            v = simplex[best] + 0.5 * (v - simplex[best]);
            values[order[k]] = eval(v);
        }
    }
    const auto it = std::min_element(values.begin(), values.end());
    out.x = simplex[static_cast<std::size_t>(it - values.begin())];
    out.value = *it;
    return out;
}

namespace {

struct StartPoint {
    Matrix base;
    Vector z;
};

StartPoint moment_start(const SamplePath& y) {
    const Index n = y.dim();
    const Index T = y.length();
    const Matrix second = y.data().transpose() * y.data() / static_cast<double>(T);
    Eigen::SelfAdjointEigenSolver<Matrix> eig(symmetrize(second));
    Matrix base = eig.eigenvectors();
    const Matrix rotated = y.data() * base;

    Vector lphi(n), lsig(n);
    for (Index i = 0; i < n; ++i) {
        const Vector c = rotated.col(i);
        const double v0 = c.squaredNorm() / static_cast<double>(T);
        const double v1 = T > 1 ? c.head(T - 1).dot(c.tail(T - 1)) / static_cast<double>(T - 1) : 0.0;
        const double r1 = v0 > 0.0 ? std::clamp(v1 / v0, -0.85, 0.85) : 0.0;
        lphi(i) = r1;
        lsig(i) = std::clamp(v0 * (1.0 - r1 * r1), 0.15, 0.85);
    }
    const SymCommParams init(0.0, base, lphi, lsig);
    return {base, SymCommCoordinates::encode(init, base)};
}

}  // namespace

MleResult mle(const SamplePath& y, const MleConfig& config) {
    if (y.length() <= 2) throw DataError("maximum likelihood needs T > 2");
    if (config.restarts < 1) throw ConfigError({"mle restarts must be at least 1"});
    const auto start = moment_start(y);

    auto objective = [&](const Vector& z) {
        try {
            return -log_likelihood_symcomm(y, SymCommCoordinates::decode(z, start.base)).log_g1;
        } catch (const Error&) {
            return std::numeric_limits<double>::infinity();
        }
    };

    NelderMeadOptions opts;
    opts.tolerance = config.tolerance;
    opts.max_iterations = config.max_iterations;

    NelderMeadResult best;
    best.value = std::numeric_limits<double>::infinity();
    int best_restart = -1;
    for (int r = 0; r < config.restarts; ++r) {
        Vector z0 = start.z;
        if (r > 0) {
            Rng rng = Rng::substream(config.seed, "mle-restart", static_cast<std::uint64_t>(r));
            z0 += config.restart_scale * rng.normal_vector(z0.size());
        }
        auto res = nelder_mead(objective, z0, opts);
        if (res.value < best.value) {
            best = std::move(res);
            best_restart = r;
        }
    }
    if (best_restart < 0) throw NumericalError("likelihood is not finite at any restart");

    const auto params = SymCommCoordinates::decode(best.x, start.base);
    MleResult out{params, log_likelihood_symcomm(y, params).total(), best.converged, best.iterations, best_restart};
    return out;
}

}  // namespace aove
