#include "tiebreak/assignment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "tiebreak/rng.hpp"

namespace tiebreak {

AssignmentRule AssignmentRule::threshold(double delta, VectorXd eta) {
    if (delta < 0.0) throw InvalidArgument("Threshold rule: delta must be >= 0");
    AssignmentRule r;
    r.kind = Kind::Threshold;
    r.delta = delta;
    r.eta = std::move(eta);
    return r;
}

AssignmentRule AssignmentRule::quantile(double delta_q, VectorXd eta) {
    if (delta_q < 0.0 || delta_q > 0.5) {
        throw InvalidArgument("Quantile rule: delta_q must lie in [0, 1/2]");
    }
    AssignmentRule r;
    r.kind = Kind::Quantile;
    r.delta_q = delta_q;
    r.eta = std::move(eta);
    return r;
}

AssignmentRule AssignmentRule::general_mid(double delta, double p_mid, VectorXd eta) {
    if (delta < 0.0) throw InvalidArgument("GeneralMid rule: delta must be >= 0");
    if (p_mid < 0.0 || p_mid > 1.0) {
        throw InvalidArgument("GeneralMid rule: p_mid must lie in [0, 1]");
    }
    AssignmentRule r;
    r.kind = Kind::GeneralMid;
    r.delta = delta;
    r.p_mid = p_mid;
    r.eta = std::move(eta);
    return r;
}

namespace {

// ceil(q*n)-th order statistic; q <= 0 maps to -infinity.
double empirical_quantile(const std::vector<double>& sorted, double q) {
    const int n = static_cast<int>(sorted.size());
    if (q <= 0.0) return -std::numeric_limits<double>::infinity();
    int k = static_cast<int>(std::ceil(q * n - 1e-12));
    k = std::clamp(k, 1, n);
    return sorted[k - 1];
}

VectorXd three_level(const VectorXd& s, double delta, double mid) {
    VectorXd p(s.size());
    if (delta == 0.0) {
        for (Eigen::Index i = 0; i < s.size(); ++i) p[i] = s[i] >= 0.0 ? 1.0 : 0.0;
        return p;
    }
    for (Eigen::Index i = 0; i < s.size(); ++i) {
        if (s[i] >= delta) {
            p[i] = 1.0;
        } else if (s[i] <= -delta) {
            p[i] = 0.0;
        } else {
            p[i] = mid;
        }
    }
    return p;
}

}  // namespace

ProbabilityVector rule_probabilities(const AssignmentRule& rule, const MatrixXd& X) {
    if (rule.eta.size() != X.cols()) {
        throw DimensionMismatch("rule_probabilities: eta length must equal d");
    }
    if (rule.eta.isZero(0.0)) {
        throw InvalidArgument("rule_probabilities: eta must be nonzero");
    }
    const VectorXd s = X * rule.eta;

    switch (rule.kind) {
        case AssignmentRule::Kind::Threshold:
            return ProbabilityVector(three_level(s, rule.delta, 0.5));
        case AssignmentRule::Kind::GeneralMid:
            return ProbabilityVector(three_level(s, rule.delta, rule.p_mid));
        case AssignmentRule::Kind::Quantile: {
            std::vector<double> sorted(s.data(), s.data() + s.size());
            std::sort(sorted.begin(), sorted.end());
            const double lo = empirical_quantile(sorted, 0.5 - rule.delta_q);
            const double hi = empirical_quantile(sorted, 0.5 + rule.delta_q);
            VectorXd p(s.size());
            for (Eigen::Index i = 0; i < s.size(); ++i) {
                if (s[i] <= lo) {
                    p[i] = 0.0;
                } else if (s[i] > hi) {
                    p[i] = 1.0;
                } else {
                    p[i] = 0.5;
                }
            }
            return ProbabilityVector(p);
        }
    }
    throw InvalidArgument("rule_probabilities: unknown rule kind");
}

VectorXi sample_assignment(const ProbabilityVector& p, std::uint64_t seed) {
    VectorXi z(p.size());
    for (int i = 0; i < p.size(); ++i) {
        z[i] = rng::uniform01(seed, static_cast<std::uint64_t>(i)) <= p[i] ? 1 : -1;
    }
    return z;
}

VectorXi stratified_assignment(const ProbabilityVector& p,
                               const std::vector<std::vector<int>>& strata,
                               std::uint64_t seed) {
    VectorXi z = VectorXi::Constant(p.size(), -1);
    std::vector<bool> seen(p.size(), false);
    std::uint64_t stratum_id = 0;
    for (const auto& stratum : strata) {
        if (stratum.empty()) throw InvalidArgument("stratified_assignment: empty stratum");
        const double prob = p[stratum.front()];
        for (int idx : stratum) {
            if (idx < 0 || idx >= p.size() || seen[idx]) {
                throw InvalidArgument("stratified_assignment: strata must partition 1..n");
            }
            seen[idx] = true;
            if (p[idx] != prob) {
                throw HeterogeneousStratum(
                    "stratified_assignment: probabilities differ within a stratum");
            }
        }
        const double k = static_cast<double>(stratum.size());
        const double exact = prob * k;
        const long r = std::lround(exact);
        if (std::abs(exact - static_cast<double>(r)) > 1e-9) {
            throw NonIntegerBudget("stratified_assignment: p*k is not an integer");
        }
        // Partial Fisher-Yates picks r treated subjects uniformly.
        std::vector<int> pool = stratum;
        rng::Stream gen(seed, 0x5374726174ULL + stratum_id++);
        for (long j = 0; j < r; ++j) {
            const auto pick = j + static_cast<long>(gen.below(pool.size() - j));
            std::swap(pool[j], pool[pick]);
            z[pool[j]] = 1;
        }
    }
    for (int i = 0; i < p.size(); ++i) {
        if (!seen[i]) throw InvalidArgument("stratified_assignment: subject missing from strata");
    }
    return z;
}

}  // namespace tiebreak
