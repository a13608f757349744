#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "tiebreak/model.hpp"

namespace tiebreak {

/// N(0, Sigma) covariate regime with treatment direction eta and optional
/// true treatment-effect slope gamma.
class GaussianPopulation {
public:
    GaussianPopulation(MatrixXd sigma, VectorXd eta,
                       std::optional<VectorXd> gamma = std::nullopt);

    const MatrixXd& sigma() const { return sigma_; }
    const VectorXd& eta() const { return eta_; }
    const std::optional<VectorXd>& gamma() const { return gamma_; }
    int d() const { return static_cast<int>(sigma_.rows()); }

    /// Symmetric PSD square root of Sigma.
    const MatrixXd& sigma_sqrt() const { return sqrt_; }

private:
    MatrixXd sigma_;
    VectorXd eta_;
    std::optional<VectorXd> gamma_;
    MatrixXd sqrt_;
};

/// Symmetric PSD square root via eigendecomposition.
MatrixXd sqrt_psd(const MatrixXd& A);

/// n IID rows from N(0, Sigma), deterministic in seed.
MatrixXd sample_gaussian(const MatrixXd& sigma, int n, std::uint64_t seed);

/// alpha = 2 Sigma eta / sqrt(eta' Sigma eta) * phi(delta / sqrt(eta' Sigma eta)).
VectorXd alpha_vector(const GaussianPopulation& pop, double delta);

/// Per-observation determinant criterion
/// (1 - (2/pi) exp(-delta^2 / eta' Sigma eta))^2 det(Sigma)^2.
double gaussian_efficiency(const GaussianPopulation& pop, double delta);

/// Expected short-term gain gamma' alpha(delta).
double expected_gain(const GaussianPopulation& pop, double delta);

struct AnalyticTradeoffPoint {
    double delta0;
    double efficiency;
    double gain;
};

/// Efficiency/gain curve over a grid of delta0 values under the
/// normalization eta' Sigma eta = 1 (eta is rescaled internally).
std::vector<AnalyticTradeoffPoint> normalized_tradeoff(const GaussianPopulation& pop,
                                                       const std::vector<double>& delta0_grid);

/// (eta_eff, eta_gain): the unit eigenvector of Sigma's smallest eigenvalue
/// (first nonzero coordinate positive) and gamma, respectively.
std::pair<VectorXd, VectorXd> optimal_directions(const GaussianPopulation& pop);

struct MiddleLevelResult {
    std::vector<double> q;
    std::vector<double> f;        // log det(S~ - N(q) S~^{-1} N(q)); NaN where not PD
    std::vector<double> se;       // Monte Carlo standard error of f at each q
    std::vector<bool> ok;         // inner matrix PD at this grid point
};

/// f(q) for the three-level rule with middle probability p = (q+1)/2:
/// N(q) = N0 + q N1 with N0 from the closed-form Gaussian alpha and N1
/// estimated by sharded Monte Carlo (default 1e6 samples, seed 0).
MiddleLevelResult middle_level_objective(const GaussianPopulation& pop, double delta,
                                         const std::vector<double>& q_grid,
                                         std::int64_t mc_samples = 1'000'000,
                                         std::uint64_t seed = 0, int shards = 16);

}  // namespace tiebreak
