#include "tiebreak/solver.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <sstream>

namespace tiebreak {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double gain_value(const VectorXd& p, const VectorXd& s) {
    return 2.0 * p.dot(s) - s.sum();
}

double gain_requirement(const ConstraintSet& c, const VectorXd& s) {
    return *c.gain_fraction * s.cwiseAbs().sum();
}

VectorXd clamp_box(VectorXd p) {
    return p.cwiseMax(0.0).cwiseMin(1.0);
}

// Exact greedy maximizer of the gain functional: all mass on the largest
// scores. With a budget the total is fixed at n*mu; the result is a step
// function in the sorted order, hence also monotone-feasible.
VectorXd max_gain_vector(const ConstraintSet& c, const VectorXd& s) {
    const int n = static_cast<int>(s.size());
    VectorXd p(n);
    if (!c.budget) {
        for (int i = 0; i < n; ++i) p[i] = s[i] >= 0.0 ? 1.0 : 0.0;
        return p;
    }
    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](int a, int b) {
        return s[a] != s[b] ? s[a] > s[b] : a < b;
    });
    double remaining = *c.budget * n;
    p.setZero();
    for (int i : idx) {
        const double take = std::min(1.0, remaining);
        p[i] = take;
        remaining -= take;
        if (remaining <= 0.0) break;
    }
    return p;
}

VectorXd baseline_vector(const ConstraintSet& c, int n) {
    return VectorXd::Constant(n, c.budget ? *c.budget : 0.5);
}

// Shift-and-clip so that sum(p) = target exactly; preserves monotonicity.
VectorXd exact_budget(VectorXd p, double target) {
    auto total = [&](double c) { return (p.array() + c).cwiseMax(0.0).cwiseMin(1.0).sum(); };
    double lo = -1.0, hi = 1.0;
    for (int it = 0; it < 200 && hi - lo > 1e-18; ++it) {
        const double mid = 0.5 * (lo + hi);
        (total(mid) < target ? lo : hi) = mid;
    }
    const double c = 0.5 * (lo + hi);
    p = clamp_box(p.array() + c);
    // Spread the residual over interior coordinates.
    double residual = target - p.sum();
    if (residual != 0.0) {
        int interior = 0;
        for (Eigen::Index i = 0; i < p.size(); ++i) {
            if (p[i] > 1e-9 && p[i] < 1.0 - 1e-9) ++interior;
        }
        if (interior > 0) {
            const double bump = residual / interior;
            for (Eigen::Index i = 0; i < p.size(); ++i) {
                if (p[i] > 1e-9 && p[i] < 1.0 - 1e-9) p[i] += bump;
            }
        }
    }
    return clamp_box(std::move(p));
}

}  // namespace

void ConstraintSet::validate() const {
    if (budget && (*budget <= 0.0 || *budget >= 1.0)) {
        throw InvalidArgument("ConstraintSet: budget mu must lie in (0,1)");
    }
    if (gain_fraction && (*gain_fraction < -1.0 || *gain_fraction > 1.0)) {
        throw InvalidArgument("ConstraintSet: gain fraction rho must lie in [-1,1]");
    }
}

void SolverConfig::validate() const {
    if (tol_grad <= 0 || tol_step <= 0 || max_iter <= 0 || dykstra_max <= 0 ||
        dykstra_tol <= 0 || armijo_c <= 0 || armijo_shrink <= 0 || armijo_shrink >= 1) {
        throw InvalidArgument("SolverConfig: all parameters must be positive");
    }
}

std::vector<int> monotone_order(const VectorXd& scores) {
    std::vector<int> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return scores[a] < scores[b]; });
    return order;
}

VectorXd average_ties(const VectorXd& p, const VectorXd& scores) {
    const auto order = monotone_order(scores);
    VectorXd out = p;
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        double sum = 0.0;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) {
            sum += p[order[j]];
            ++j;
        }
        const double avg = sum / static_cast<double>(j - i);
        for (std::size_t k = i; k < j; ++k) out[order[k]] = avg;
        i = j;
    }
    return out;
}

VectorXd isotonic_projection(const VectorXd& v) {
    const int n = static_cast<int>(v.size());
    std::vector<double> value(n), weight(n);
    std::vector<int> length(n);
    int blocks = 0;
    for (int i = 0; i < n; ++i) {
        value[blocks] = v[i];
        weight[blocks] = 1.0;
        length[blocks] = 1;
        ++blocks;
        while (blocks > 1 && value[blocks - 2] >= value[blocks - 1]) {
            const double w = weight[blocks - 2] + weight[blocks - 1];
            value[blocks - 2] =
                (weight[blocks - 2] * value[blocks - 2] + weight[blocks - 1] * value[blocks - 1]) / w;
            weight[blocks - 2] = w;
            length[blocks - 2] += length[blocks - 1];
            --blocks;
        }
    }
    VectorXd out(n);
    int pos = 0;
    for (int b = 0; b < blocks; ++b) {
        for (int k = 0; k < length[b]; ++k) out[pos++] = value[b];
    }
    return out;
}

VectorXd project_feasible(const VectorXd& p, const ConstraintSet& constraints,
                          const VectorXd& scores, int dykstra_max, double dykstra_tol) {
    constraints.validate();
    const int n = static_cast<int>(p.size());
    if (scores.size() != n) throw DimensionMismatch("project_feasible: scores/p mismatch");

    using Projection = std::function<VectorXd(const VectorXd&)>;
    std::vector<Projection> sets;
    sets.push_back([](const VectorXd& x) { return clamp_box(x); });
    if (constraints.budget) {
        const double mu = *constraints.budget;
        sets.push_back([mu](const VectorXd& x) {
            return (x.array() + (mu - x.mean())).matrix().eval();
        });
    }
    if (constraints.monotone) {
        const auto order = monotone_order(scores);
        sets.push_back([order](const VectorXd& x) {
            VectorXd sorted(x.size());
            for (std::size_t i = 0; i < order.size(); ++i) sorted[i] = x[order[i]];
            const VectorXd fitted = isotonic_projection(sorted);
            VectorXd out(x.size());
            for (std::size_t i = 0; i < order.size(); ++i) out[order[i]] = fitted[i];
            return out;
        });
    }
    if (constraints.gain_fraction) {
        const VectorXd a = 2.0 * scores;
        const double b = gain_requirement(constraints, scores) + scores.sum();
        const double aa = a.squaredNorm();
        sets.push_back([a, b, aa](const VectorXd& x) {
            const double slack = a.dot(x) - b;
            if (slack >= 0.0 || aa == 0.0) return x;
            return (x - (slack / aa) * a).eval();
        });
    }

    if (sets.size() == 1) return clamp_box(p);

    VectorXd x = p;
    std::vector<VectorXd> corrections(sets.size(), VectorXd::Zero(n));
    for (int sweep = 0; sweep < dykstra_max; ++sweep) {
        const VectorXd prev = x;
        for (std::size_t k = 0; k < sets.size(); ++k) {
            const VectorXd y = sets[k](x + corrections[k]);
            corrections[k] = x + corrections[k] - y;
            x = y;
        }
        // Final clamp removes the O(tol) box violation left by ending a
        // sweep on one of the affine projections.
        if ((x - prev).cwiseAbs().maxCoeff() < dykstra_tol) return clamp_box(x);
    }
    // Slow linear convergence on thin intersections: accept the iterate if it
    // is feasible to well below solver tolerances, otherwise report failure.
    x = clamp_box(x);
    double violation = 0.0;
    if (constraints.budget) violation = std::abs(x.mean() - *constraints.budget);
    if (constraints.monotone) {
        const auto order = monotone_order(scores);
        for (std::size_t i = 1; i < order.size(); ++i) {
            violation = std::max(violation, x[order[i - 1]] - x[order[i]]);
        }
    }
    if (constraints.gain_fraction) {
        const double required = gain_requirement(constraints, scores);
        violation = std::max(violation, (required - gain_value(x, scores)) /
                                            (1.0 + scores.cwiseAbs().sum()));
    }
    if (violation <= 1e-8) return x;
    throw NonConvergence("project_feasible: Dykstra did not converge");
}

FeasibilityReport check_feasibility(const DesignProblem& problem,
                                    const ConstraintSet& constraints) {
    constraints.validate();
    FeasibilityReport report;
    const int n = problem.n();

    if (!constraints.any()) {
        report.feasible = true;
        report.witness = VectorXd::Constant(n, 0.5);
        report.certificate = "unconstrained: p = 1/2 is feasible";
        return report;
    }

    const VectorXd base = baseline_vector(constraints, n);
    if (!constraints.gain_fraction) {
        // The constant vector satisfies budget, box, and monotonicity.
        report.feasible = true;
        report.witness = base;
        report.certificate = "constant witness satisfies budget/monotonicity";
        return report;
    }

    const VectorXd s = problem.running();
    const double required = gain_requirement(constraints, s);
    const VectorXd greedy = max_gain_vector(constraints, s);
    const double max_gain = gain_value(greedy, s);
    const double base_gain = gain_value(base, s);

    std::ostringstream cert;
    cert << "greedy max gain " << max_gain << " vs required " << required;
    if (max_gain < required - 1e-9 * (1.0 + s.cwiseAbs().sum())) {
        report.feasible = false;
        report.certificate = "infeasible: " + cert.str();
        return report;
    }
    report.feasible = true;
    if (base_gain >= required) {
        report.witness = base;
    } else {
        // Both endpoints share the budget mean and are monotone, so the
        // blend is feasible with the gain met exactly.
        const double lambda =
            std::clamp((required - base_gain) / (max_gain - base_gain), 0.0, 1.0);
        report.witness = base + lambda * (greedy - base);
    }
    report.certificate = "feasible: " + cert.str();
    return report;
}

namespace {

// Exact post-solve feasibility polish. Every step is a closed-form map that
// preserves the constraints already repaired, so corrections of size eps
// move the objective by O(eps).
VectorXd repair(VectorXd p, const ConstraintSet& c, const VectorXd& s) {
    p = clamp_box(std::move(p));
    if (c.monotone) {
        const auto order = monotone_order(s);
        VectorXd sorted(p.size());
        for (std::size_t i = 0; i < order.size(); ++i) sorted[i] = p[order[i]];
        const VectorXd fitted = isotonic_projection(sorted);
        for (std::size_t i = 0; i < order.size(); ++i) p[order[i]] = fitted[i];
    }
    if (c.budget) p = exact_budget(std::move(p), *c.budget * static_cast<double>(p.size()));
    if (c.gain_fraction) {
        const double required = gain_requirement(c, s);
        const double current = gain_value(p, s);
        if (current < required) {
            const VectorXd target = max_gain_vector(c, s);
            const double top = gain_value(target, s);
            if (top > current) {
                const double lambda =
                    std::min(1.0, (required - current) / (top - current) * (1.0 + 1e-12));
                p = p + lambda * (target - p);
            }
        }
    }
    if (c.monotone) p = average_ties(p, s);
    return clamp_box(std::move(p));
}

std::vector<std::string> describe_active(const ConstraintSet& c, const VectorXd& p,
                                         const VectorXd& s) {
    std::vector<std::string> active;
    if (c.budget) active.push_back("budget");
    if (c.monotone) {
        const auto order = monotone_order(s);
        bool pooled = false;
        for (std::size_t i = 1; i < order.size(); ++i) {
            if (s[order[i]] > s[order[i - 1]] &&
                std::abs(p[order[i]] - p[order[i - 1]]) < 1e-8) {
                pooled = true;
                break;
            }
        }
        if (pooled) active.push_back("monotone");
    }
    if (c.gain_fraction) {
        const double slack = gain_value(p, s) - gain_requirement(c, s);
        if (slack <= 1e-6 * (1.0 + s.cwiseAbs().sum())) active.push_back("gain");
    }
    int at_bounds = 0;
    for (Eigen::Index i = 0; i < p.size(); ++i) {
        if (p[i] < 1e-9 || p[i] > 1.0 - 1e-9) ++at_bounds;
    }
    if (at_bounds > 0) active.push_back("box(" + std::to_string(at_bounds) + " at bounds)");
    return active;
}

}  // namespace

SolverReport solve(const DesignProblem& problem, const ConstraintSet& constraints,
                   const SolverConfig& config, const std::optional<VectorXd>& initial) {
    constraints.validate();
    config.validate();

    const auto feasibility = check_feasibility(problem, constraints);
    if (!feasibility.feasible) throw Infeasible(feasibility.certificate);

    // Scores are needed whenever a score-dependent constraint is present.
    const bool needs_scores = constraints.monotone || constraints.gain_fraction.has_value();
    const VectorXd s = needs_scores ? problem.running() : VectorXd::Zero(problem.n());

    auto project = [&](const VectorXd& x) {
        return project_feasible(x, constraints, s, config.dykstra_max, config.dykstra_tol);
    };

    VectorXd p = initial ? project(*initial) : *feasibility.witness;

    // A gain fraction of (essentially) one pins the design down to the single
    // deterministic assignment along the score, so there is nothing to
    // optimize and Dykstra iterations on a near-singleton set stall.
    if (constraints.gain_fraction && *constraints.gain_fraction >= 1.0 - 1e-12) {
        p = repair(*feasibility.witness, constraints, s);
        SolverReport report;
        report.p_opt = ProbabilityVector(p);
        try {
            report.objective = design_objective(problem, report.p_opt);
        } catch (const SingularInformation&) {
            report.objective = kInf;
            report.ridged = true;
        }
        report.iterations = 0;
        report.converged = true;
        report.kkt_residual = 0.0;
        report.active_constraints = describe_active(constraints, p, s);
        return report;
    }

    // Degenerate information at the witness: ridge the objective and say so.
    double ridge = 0.0;
    bool ridged = false;
    try {
        design_objective(problem, ProbabilityVector(p));
    } catch (const SingularInformation&) {
        const MatrixXd M = expected_information(problem, ProbabilityVector(p)).M();
        ridge = 1e-10 * M.trace() / static_cast<double>(M.rows());
        ridged = true;
    }

    auto objective = [&](const VectorXd& x) -> double {
        try {
            return design_objective(problem, ProbabilityVector(x), ridge);
        } catch (const SingularInformation&) {
            return kInf;
        }
    };
    auto gradient = [&](const VectorXd& x) {
        return criterion_gradient(problem, ProbabilityVector(x), ridge);
    };

    double f = objective(p);
    if (!std::isfinite(f)) {
        throw SingularInformation("solve: information matrix singular at every start");
    }
    VectorXd g = gradient(p);

    auto pg_residual = [&](const VectorXd& x, const VectorXd& gx) {
        return (x - project(x - gx)).norm();
    };

    // Step-size seed 1/L from a single gradient difference.
    double step = 1.0;
    {
        VectorXd probe = project(p - 1e-4 * (g.norm() > 0 ? g.normalized() : VectorXd::Ones(p.size())));
        const double dist = (probe - p).norm();
        if (dist > 1e-12) {
            const double lips = (gradient(probe) - g).norm() / dist;
            if (lips > 1e-12) step = 1.0 / lips;
        }
    }

    SolverReport report;
    report.ridged = ridged;
    double residual = pg_residual(p, g);
    int iter = 0;
    bool converged = residual < config.tol_grad;

    while (!converged && iter < config.max_iter) {
        ++iter;
        double t = step;
        VectorXd candidate;
        double f_candidate = kInf;
        bool accepted = false;
        for (int bt = 0; bt < 60; ++bt) {
            candidate = project(p - t * g);
            const VectorXd dir = candidate - p;
            f_candidate = objective(candidate);
            if (std::isfinite(f_candidate) &&
                f_candidate <= f + config.armijo_c * g.dot(dir)) {
                accepted = true;
                break;
            }
            t *= config.armijo_shrink;
        }
        if (!accepted) break;  // line search stalled at numerical precision

        const VectorXd g_new = gradient(candidate);
        const VectorXd dp = candidate - p;
        const VectorXd dg = g_new - g;
        const double curvature = dp.dot(dg);
        step = curvature > 1e-16 ? dp.squaredNorm() / curvature : t * 2.0;

        const double decrease = f - f_candidate;
        p = candidate;
        f = f_candidate;
        g = g_new;
        residual = pg_residual(p, g);
        if (residual < config.tol_grad || decrease <= config.tol_step * std::max(1.0, std::abs(f))) {
            converged = true;
        }
    }

    if (constraints.any()) p = repair(std::move(p), constraints, s);

    report.p_opt = ProbabilityVector(p);
    report.objective = objective(p);
    report.iterations = iter;
    report.converged = converged;
    report.kkt_residual = residual;
    report.active_constraints = describe_active(constraints, p, s);
    return report;
}

GridOptimum brute_force_optimum(const DesignProblem& problem,
                                const ConstraintSet& constraints, double grid_step) {
    constraints.validate();
    const int n = problem.n();
    if (n > 4) throw TooLarge("brute_force_optimum: n must be <= 4");
    if (grid_step <= 0.0 || grid_step > 1.0) {
        throw InvalidArgument("brute_force_optimum: grid_step must lie in (0,1]");
    }
    const int m = static_cast<int>(std::lround(1.0 / grid_step));
    const bool needs_scores = constraints.monotone || constraints.gain_fraction.has_value();
    const VectorXd s = needs_scores || constraints.budget ? problem.running()
                                                          : VectorXd::Zero(n);
    const auto order = monotone_order(s);
    const double required =
        constraints.gain_fraction ? gain_requirement(constraints, s) : -kInf;

    GridOptimum best;
    best.objective = kInf;
    std::vector<int> idx(n, 0);
    VectorXd p(n);
    while (true) {
        for (int i = 0; i < n; ++i) p[i] = static_cast<double>(idx[i]) / m;
        bool feasible = true;
        if (constraints.budget) {
            feasible = std::abs(p.sum() - *constraints.budget * n) < grid_step * (1.0 - 1e-6);
        }
        if (feasible && constraints.monotone) {
            for (int i = 1; i < n && feasible; ++i) {
                if (p[order[i]] < p[order[i - 1]] - 1e-12) feasible = false;
            }
        }
        if (feasible && constraints.gain_fraction) {
            feasible = gain_value(p, s) >= required - 1e-9 * (1.0 + s.cwiseAbs().sum());
        }
        if (feasible) {
            try {
                const double obj = design_objective(problem, ProbabilityVector(p));
                if (obj < best.objective) {
                    best.objective = obj;
                    best.p = p;
                }
            } catch (const SingularInformation&) {
            }
        }
        int pos = 0;
        while (pos < n && ++idx[pos] > m) idx[pos++] = 0;
        if (pos == n) break;
    }
    if (!std::isfinite(best.objective)) {
        throw Infeasible("brute_force_optimum: no feasible grid point with finite objective");
    }
    return best;
}

}  // namespace tiebreak
