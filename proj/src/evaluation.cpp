#include "tiebreak/evaluation.hpp"

#include <cmath>
#include <limits>

#include "tiebreak/parallel.hpp"

namespace tiebreak {

GainResult empirical_gain(const DesignProblem& problem, const ProbabilityVector& p) {
    if (p.size() != problem.n()) {
        throw DimensionMismatch("empirical_gain: length(p) != n");
    }
    const VectorXd s = problem.running();
    GainResult result;
    result.gain = (2.0 * p.p().array() - 1.0).matrix().dot(s);
    result.rdd_bound = s.cwiseAbs().sum();
    return result;
}

TradeoffCurve empirical_curve(const DesignProblem& problem, const AssignmentRule& family,
                              const std::vector<double>& delta_grid) {
    for (std::size_t i = 1; i < delta_grid.size(); ++i) {
        if (delta_grid[i] <= delta_grid[i - 1]) {
            throw InvalidArgument("empirical_curve: delta grid must be increasing");
        }
    }

    TradeoffCurve curve;
    curve.n = problem.n();
    curve.d = problem.d();
    curve.centering = problem.X().colwise().mean();
    switch (family.kind) {
        case AssignmentRule::Kind::Threshold: curve.rule = "threshold"; break;
        case AssignmentRule::Kind::Quantile: curve.rule = "quantile"; break;
        case AssignmentRule::Kind::GeneralMid: curve.rule = "general_mid"; break;
    }

    const MatrixXd centered = problem.X().rowwise() - curve.centering.transpose();
    const DesignProblem centered_problem(centered, family.eta);

    curve.points.resize(delta_grid.size());
    parallel_for(static_cast<int>(delta_grid.size()), [&](int begin, int end) {
        for (int gi = begin; gi < end; ++gi) {
            AssignmentRule rule = family;
            if (rule.kind == AssignmentRule::Kind::Quantile) {
                rule.delta_q = delta_grid[gi];
            } else {
                rule.delta = delta_grid[gi];
            }
            CurvePoint& pt = curve.points[gi];
            pt.delta = delta_grid[gi];
            const ProbabilityVector p = rule_probabilities(rule, centered);
            const GainResult gr = empirical_gain(centered_problem, p);
            pt.gain = gr.gain;
            pt.gain_normalized = gr.rdd_bound > 0.0 ? gr.gain / gr.rdd_bound : 0.0;
            try {
                pt.log_efficiency = -neg_log_det(expected_information(centered_problem, p));
                pt.singular = false;
            } catch (const SingularInformation&) {
                pt.log_efficiency = std::numeric_limits<double>::quiet_NaN();
                pt.singular = true;
            }
        }
    });
    return curve;
}

MatrixXd estimate_N(const DesignProblem& problem, const ProbabilityVector& p) {
    if (p.size() != problem.n()) {
        throw DimensionMismatch("estimate_N: length(p) != n");
    }
    const MatrixXd& Xt = problem.augmented();
    const VectorXd w = 2.0 * p.p().array() - 1.0;
    return Xt.transpose() * w.asDiagonal() * Xt / static_cast<double>(problem.n());
}

}  // namespace tiebreak
