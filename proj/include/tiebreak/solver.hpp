#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tiebreak/model.hpp"

namespace tiebreak {

/// Declarative budget / monotonicity / gain constraints on p.
struct ConstraintSet {
    std::optional<double> budget;         // mean(p) = mu, mu in (0,1)
    bool monotone = false;                // p nondecreasing in x' eta
    std::optional<double> gain_fraction;  // sum (2p-1) s >= rho * sum |s|, rho in [-1,1]

    bool any() const { return budget || monotone || gain_fraction; }
    void validate() const;
};

struct SolverConfig {
    double tol_grad = 1e-7;    // projected-gradient norm stop
    double tol_step = 1e-10;   // relative objective-decrease stop
    int max_iter = 5000;
    int dykstra_max = 500;
    double dykstra_tol = 1e-10;
    double armijo_c = 1e-4;
    double armijo_shrink = 0.5;

    void validate() const;
};

struct SolverReport {
    ProbabilityVector p_opt{VectorXd::Zero(0)};
    double objective = 0.0;
    int iterations = 0;
    bool converged = false;
    std::vector<std::string> active_constraints;
    double kkt_residual = 0.0;
    bool ridged = false;  // degenerate information regularized inside the objective
};

struct FeasibilityReport {
    bool feasible = false;
    std::optional<VectorXd> witness;
    std::string certificate;
};

/// Decides feasibility of the constraint intersection and produces a
/// witness. The gain bound uses the exact greedy maximizer of the gain
/// functional under the budget and box (monotone greedy when required).
FeasibilityReport check_feasibility(const DesignProblem& problem,
                                    const ConstraintSet& constraints);

/// Euclidean projection onto box / budget hyperplane / isotonic cone /
/// gain half-space via Dykstra's alternating projections. The monotone
/// order sorts scores ascending with ties broken by index.
VectorXd project_feasible(const VectorXd& p, const ConstraintSet& constraints,
                          const VectorXd& scores, int dykstra_max = 500,
                          double dykstra_tol = 1e-10);

/// Minimizes -log det(expected information) over the feasible set by
/// projected gradient descent with Armijo backtracking.
SolverReport solve(const DesignProblem& problem, const ConstraintSet& constraints,
                   const SolverConfig& config = {},
                   const std::optional<VectorXd>& initial = std::nullopt);

struct GridOptimum {
    VectorXd p;
    double objective;
};

/// Exhaustive grid-search oracle, n <= 4 only. Candidates must satisfy
/// the constraints near-exactly (budget sum within one grid step, which
/// is exact whenever n*mu is a grid multiple; monotonicity and gain to
/// roundoff) so the reported optimum is attained by a feasible point.
GridOptimum brute_force_optimum(const DesignProblem& problem,
                                const ConstraintSet& constraints, double grid_step);

/// Sorting permutation by running variable, ties broken by index.
std::vector<int> monotone_order(const VectorXd& scores);

/// Averages p over exact-tie groups of the running variable so tied
/// subjects receive equal probabilities; preserves mean and gain.
VectorXd average_ties(const VectorXd& p, const VectorXd& scores);

/// Pool-adjacent-violators projection onto the nondecreasing cone.
VectorXd isotonic_projection(const VectorXd& v);

}  // namespace tiebreak
