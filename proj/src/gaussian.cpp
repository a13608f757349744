#include "tiebreak/gaussian.hpp"

#include <cmath>
#include <limits>
#include <mutex>
#include <numbers>

#include "tiebreak/parallel.hpp"
#include "tiebreak/rng.hpp"

namespace tiebreak {

namespace {

constexpr double kTwoOverPi = 2.0 / std::numbers::pi;

// Exponent beyond which exp underflows anyway; efficiency is det(Sigma)^2
// exactly and alpha is 0.
constexpr double kLogSpaceCutoff = 700.0;

double eta_quadratic(const GaussianPopulation& pop) {
    const double q = pop.eta().transpose() * pop.sigma() * pop.eta();
    if (q <= 0.0) throw InvalidArgument("eta must be nonzero");
    return q;
}

double normal_pdf(double t) {
    return std::exp(-0.5 * t * t) / std::sqrt(2.0 * std::numbers::pi);
}

double det_via_cholesky(const MatrixXd& A) {
    Eigen::LLT<MatrixXd> llt(A);
    if (llt.info() != Eigen::Success) {
        throw InvalidArgument("matrix must be positive definite");
    }
    return std::exp(2.0 * MatrixXd(llt.matrixL()).diagonal().array().log().sum());
}

}  // namespace

GaussianPopulation::GaussianPopulation(MatrixXd sigma, VectorXd eta,
                                       std::optional<VectorXd> gamma)
    : sigma_(std::move(sigma)), eta_(std::move(eta)), gamma_(std::move(gamma)) {
    if (sigma_.rows() != sigma_.cols()) {
        throw DimensionMismatch("GaussianPopulation: Sigma must be square");
    }
    if ((sigma_ - sigma_.transpose()).cwiseAbs().maxCoeff() >
        1e-10 * std::max(1.0, sigma_.cwiseAbs().maxCoeff())) {
        throw InvalidArgument("GaussianPopulation: Sigma must be symmetric");
    }
    Eigen::LLT<MatrixXd> llt(sigma_);
    if (llt.info() != Eigen::Success) {
        throw InvalidArgument("GaussianPopulation: Sigma must be positive definite");
    }
    if (eta_.size() != sigma_.rows()) {
        throw DimensionMismatch("GaussianPopulation: eta length must equal d");
    }
    if (gamma_ && gamma_->size() != sigma_.rows()) {
        throw DimensionMismatch("GaussianPopulation: gamma length must equal d");
    }
    sqrt_ = sqrt_psd(sigma_);
}

MatrixXd sqrt_psd(const MatrixXd& A) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(A);
    if (eig.info() != Eigen::Success) {
        throw InvalidArgument("sqrt_psd: eigendecomposition failed");
    }
    const VectorXd roots = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return eig.eigenvectors() * roots.asDiagonal() * eig.eigenvectors().transpose();
}

MatrixXd sample_gaussian(const MatrixXd& sigma, int n, std::uint64_t seed) {
    const MatrixXd W = sqrt_psd(sigma);
    const int d = static_cast<int>(sigma.rows());
    MatrixXd Z(n, d);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < d; ++j) {
            Z(i, j) = rng::normal(seed, static_cast<std::uint64_t>(i) * d + j);
        }
    }
    return Z * W;
}

VectorXd alpha_vector(const GaussianPopulation& pop, double delta) {
    if (delta < 0.0) throw InvalidArgument("alpha_vector: delta must be >= 0");
    const double q = eta_quadratic(pop);
    if (delta * delta / q > kLogSpaceCutoff) {
        return VectorXd::Zero(pop.d());
    }
    const double scale = 2.0 * normal_pdf(delta / std::sqrt(q)) / std::sqrt(q);
    return scale * (pop.sigma() * pop.eta());
}

double gaussian_efficiency(const GaussianPopulation& pop, double delta) {
    if (delta < 0.0) throw InvalidArgument("gaussian_efficiency: delta must be >= 0");
    const double q = eta_quadratic(pop);
    const double det2 = std::pow(det_via_cholesky(pop.sigma()), 2);
    const double exponent = delta * delta / q;
    if (exponent > kLogSpaceCutoff) return det2;
    const double shrink = 1.0 - kTwoOverPi * std::exp(-exponent);
    return shrink * shrink * det2;
}

double expected_gain(const GaussianPopulation& pop, double delta) {
    if (!pop.gamma()) throw InvalidArgument("expected_gain: gamma is required");
    return pop.gamma()->dot(alpha_vector(pop, delta));
}

std::vector<AnalyticTradeoffPoint> normalized_tradeoff(const GaussianPopulation& pop,
                                                       const std::vector<double>& delta0_grid) {
    if (delta0_grid.empty()) throw InvalidArgument("normalized_tradeoff: empty grid");
    const double q = eta_quadratic(pop);
    GaussianPopulation unit(pop.sigma(), pop.eta() / std::sqrt(q), pop.gamma());
    std::vector<AnalyticTradeoffPoint> curve;
    curve.reserve(delta0_grid.size());
    for (double delta0 : delta0_grid) {
        AnalyticTradeoffPoint pt;
        pt.delta0 = delta0;
        pt.efficiency = gaussian_efficiency(unit, delta0);
        pt.gain = unit.gamma() ? expected_gain(unit, delta0)
                               : std::numeric_limits<double>::quiet_NaN();
        curve.push_back(pt);
    }
    return curve;
}

std::pair<VectorXd, VectorXd> optimal_directions(const GaussianPopulation& pop) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(pop.sigma());
    if (eig.info() != Eigen::Success) {
        throw InvalidArgument("optimal_directions: eigendecomposition failed");
    }
    VectorXd eta_eff = eig.eigenvectors().col(0);  // eigenvalues ascending
    for (Eigen::Index i = 0; i < eta_eff.size(); ++i) {
        if (eta_eff[i] != 0.0) {
            if (eta_eff[i] < 0.0) eta_eff = -eta_eff;
            break;
        }
    }
    if (!pop.gamma()) throw InvalidArgument("optimal_directions: gamma is required");
    return {eta_eff, *pop.gamma()};
}

namespace {

// x~ x~' second moments restricted to the randomization band, one shard.
MatrixXd band_moment_shard(const GaussianPopulation& pop, double delta,
                           std::int64_t count, std::uint64_t seed, std::uint64_t stream) {
    const int d = pop.d();
    const MatrixXd& W = pop.sigma_sqrt();
    MatrixXd acc = MatrixXd::Zero(d + 1, d + 1);
    VectorXd xt(d + 1);
    VectorXd z(d);
    for (std::int64_t i = 0; i < count; ++i) {
        for (int j = 0; j < d; ++j) {
            z[j] = rng::normal(seed, static_cast<std::uint64_t>(i) * d + j, stream);
        }
        const VectorXd x = W * z;
        if (std::abs(x.dot(pop.eta())) < delta) {
            xt[0] = 1.0;
            xt.tail(d) = x;
            acc.selfadjointView<Eigen::Lower>().rankUpdate(xt);
        }
    }
    acc.triangularView<Eigen::StrictlyUpper>() = acc.transpose();
    return acc / static_cast<double>(count);
}

// log det(S~ - N S~^{-1} N) or NaN when the inner matrix is not PD.
double middle_level_f(const MatrixXd& sigma_tilde, const Eigen::LDLT<MatrixXd>& sigma_ldlt,
                      const MatrixXd& N) {
    const MatrixXd inner = sigma_tilde - N * sigma_ldlt.solve(N);
    Eigen::LDLT<MatrixXd> ldlt(0.5 * (inner + inner.transpose().eval()));
    if (ldlt.info() != Eigen::Success || ldlt.vectorD().minCoeff() <= 0.0) {
        return std::numeric_limits<double>::quiet_NaN();
    }
    return ldlt.vectorD().array().log().sum();
}

}  // namespace

MiddleLevelResult middle_level_objective(const GaussianPopulation& pop, double delta,
                                         const std::vector<double>& q_grid,
                                         std::int64_t mc_samples, std::uint64_t seed,
                                         int shards) {
    if (q_grid.empty()) throw InvalidArgument("middle_level_objective: empty q grid");
    if (shards < 2) throw InvalidArgument("middle_level_objective: need >= 2 shards");
    const int d = pop.d();

    MatrixXd sigma_tilde = MatrixXd::Zero(d + 1, d + 1);
    sigma_tilde(0, 0) = 1.0;
    sigma_tilde.bottomRightCorner(d, d) = pop.sigma();
    Eigen::LDLT<MatrixXd> sigma_ldlt(sigma_tilde);

    const VectorXd alpha = alpha_vector(pop, delta);
    MatrixXd N0 = MatrixXd::Zero(d + 1, d + 1);
    N0.row(0).tail(d) = alpha.transpose();
    N0.col(0).tail(d) = alpha;

    const std::int64_t per_shard = (mc_samples + shards - 1) / shards;
    std::vector<MatrixXd> shard_N1(shards);
    parallel_for(shards, [&](int begin, int end) {
        for (int t = begin; t < end; ++t) {
            shard_N1[t] = band_moment_shard(pop, delta, per_shard, seed,
                                            static_cast<std::uint64_t>(t) + 1);
        }
    });
    MatrixXd N1 = MatrixXd::Zero(d + 1, d + 1);
    for (const auto& m : shard_N1) N1 += m;
    N1 /= static_cast<double>(shards);

    MiddleLevelResult result;
    result.q = q_grid;
    result.f.resize(q_grid.size());
    result.se.resize(q_grid.size());
    result.ok.resize(q_grid.size());
    for (std::size_t gi = 0; gi < q_grid.size(); ++gi) {
        const double q = q_grid[gi];
        const double f = middle_level_f(sigma_tilde, sigma_ldlt, N0 + q * N1);
        result.f[gi] = f;
        result.ok[gi] = std::isfinite(f);

        // Shard-wise spread of f propagates the Monte Carlo noise in N1.
        double mean = 0.0, m2 = 0.0;
        int valid = 0;
        for (int t = 0; t < shards; ++t) {
            const double ft = middle_level_f(sigma_tilde, sigma_ldlt, N0 + q * shard_N1[t]);
            if (!std::isfinite(ft)) continue;
            ++valid;
            const double delta_t = ft - mean;
            mean += delta_t / valid;
            m2 += delta_t * (ft - mean);
        }
        result.se[gi] = valid > 1 ? std::sqrt(m2 / (valid - 1) / valid)
                                  : std::numeric_limits<double>::quiet_NaN();
    }
    return result;
}

}  // namespace tiebreak
