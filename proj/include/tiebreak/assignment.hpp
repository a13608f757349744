#pragma once

#include <cstdint>
#include <vector>

#include "tiebreak/model.hpp"

namespace tiebreak {

/// Three-level treatment-probability rules on the running variable s = X eta.
struct AssignmentRule {
    enum class Kind { Threshold, Quantile, GeneralMid };

    Kind kind = Kind::Threshold;
    double delta = 0.0;    // Threshold / GeneralMid band half-width, >= 0
    double delta_q = 0.0;  // Quantile band half-width in [0, 1/2]
    double p_mid = 0.5;    // GeneralMid middle-band probability in [0, 1]
    VectorXd eta;

    static AssignmentRule threshold(double delta, VectorXd eta);
    static AssignmentRule quantile(double delta_q, VectorXd eta);
    static AssignmentRule general_mid(double delta, double p_mid, VectorXd eta);
};

/// Applies the rule to the rows of X.
///
/// Threshold (delta > 0): p = 1 if s >= delta, 0 if s <= -delta, else 1/2.
/// Threshold (delta = 0): p = 1{s >= 0}.
/// Quantile: l and u are empirical-CDF inverses at 1/2 -+ delta_q, with
///   F^{-1}(q) = the ceil(qn)-th order statistic; p = 0 if s <= l,
///   1 if s > u, else 1/2. Band tests compare values, not ranks, so tied
///   scores always receive equal probabilities.
/// GeneralMid: Threshold shape with p_mid in the middle band.
ProbabilityVector rule_probabilities(const AssignmentRule& rule, const MatrixXd& X);

/// Independent draws Z_i = +1 with probability p_i, keyed by (seed, i).
VectorXi sample_assignment(const ProbabilityVector& p, std::uint64_t seed);

/// Exact-budget assignment: within each stratum all p_i must be equal and
/// p_i * k integral; exactly that many subjects get +1 by simple random
/// sampling.
VectorXi stratified_assignment(const ProbabilityVector& p,
                               const std::vector<std::vector<int>>& strata,
                               std::uint64_t seed);

}  // namespace tiebreak
