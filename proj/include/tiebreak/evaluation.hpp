#pragma once

#include <string>
#include <vector>

#include "tiebreak/assignment.hpp"
#include "tiebreak/model.hpp"

namespace tiebreak {

struct GainResult {
    double gain;       // sum (2p_i - 1) x_i' eta
    double rdd_bound;  // sum |x_i' eta|, the maximum attainable
};

/// Expected short-term gain of a design, with the RDD bound for
/// normalization.
GainResult empirical_gain(const DesignProblem& problem, const ProbabilityVector& p);

struct CurvePoint {
    double delta;
    double log_efficiency;    // log det E(U'U); NaN when singular
    double gain;
    double gain_normalized;   // gain / rdd_bound
    bool singular;
};

struct TradeoffCurve {
    std::vector<CurvePoint> points;
    std::string rule;
    int n = 0;
    int d = 0;
    VectorXd centering;  // column means subtracted before scoring
};

/// Sweeps the rule's band parameter over delta_grid (delta for
/// Threshold/GeneralMid, delta_q for Quantile). Columns of X are centered
/// by their sample means before scoring; the centering is recorded.
/// Grid points evaluate in parallel, ordered by delta.
TradeoffCurve empirical_curve(const DesignProblem& problem, const AssignmentRule& family,
                              const std::vector<double>& delta_grid);

/// Sample analogue of the covariate/treatment coupling matrix:
/// N_jk = (1/n) sum_i x~_ij x~_ik (2 p_i - 1).
MatrixXd estimate_N(const DesignProblem& problem, const ProbabilityVector& p);

}  // namespace tiebreak
