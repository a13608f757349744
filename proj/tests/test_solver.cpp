#include <doctest.h>

#include <cmath>

#include "test_helpers.hpp"
#include "tiebreak/solver.hpp"

using namespace tiebreak;
using test_helpers::random_matrix;
using test_helpers::random_probabilities;
using test_helpers::random_vector;

namespace {

ConstraintSet budget_only(double mu) {
    ConstraintSet c;
    c.budget = mu;
    return c;
}

bool is_monotone(const VectorXd& p, const VectorXd& s, double tol = 1e-9) {
    const auto order = monotone_order(s);
    for (std::size_t i = 1; i < order.size(); ++i) {
        if (p[order[i]] < p[order[i - 1]] - tol) return false;
    }
    return true;
}

double gain_of(const VectorXd& p, const VectorXd& s) {
    return (2.0 * p.array() - 1.0).matrix().dot(s);
}

}  // namespace

TEST_CASE("constraint validation") {
    CHECK_THROWS_AS(budget_only(0.0).validate(), InvalidArgument);
    CHECK_THROWS_AS(budget_only(1.0).validate(), InvalidArgument);
    ConstraintSet c;
    c.gain_fraction = 1.5;
    CHECK_THROWS_AS(c.validate(), InvalidArgument);
    c.gain_fraction = -1.0;
    CHECK_NOTHROW(c.validate());
}

TEST_CASE("monotone_order sorts by score with stable ties") {
    VectorXd s(5);
    s << 3, 1, 2, 1, 0;
    const auto order = monotone_order(s);
    CHECK(order == std::vector<int>{4, 1, 3, 2, 0});
}

TEST_CASE("isotonic_projection") {
    SUBCASE("already monotone input is unchanged") {
        VectorXd v(4);
        v << 1, 2, 2, 5;
        CHECK(isotonic_projection(v).isApprox(v));
    }
    SUBCASE("single violation pools to the average") {
        VectorXd v(2);
        v << 2, 0;
        VectorXd expect = VectorXd::Constant(2, 1.0);
        CHECK(isotonic_projection(v).isApprox(expect));
    }
    SUBCASE("classic PAV example") {
        VectorXd v(5);
        v << 1, 3, 2, 4, 0;
        const VectorXd out = isotonic_projection(v);
        CHECK(out.sum() == doctest::Approx(v.sum()).epsilon(1e-12));
        for (int i = 1; i < 5; ++i) CHECK(out[i] >= out[i - 1] - 1e-14);
        // Projection property: no feasible point is closer (spot check).
        VectorXd alt = out;
        alt[4] += 0.1;
        CHECK((v - out).squaredNorm() <= (v - alt).squaredNorm());
    }
    SUBCASE("idempotent") {
        const VectorXd v = random_vector(20, 3);
        const VectorXd once = isotonic_projection(v);
        CHECK(isotonic_projection(once).isApprox(once, 1e-13));
    }
}

TEST_CASE("average_ties equalizes tied scores and preserves mean and gain") {
    VectorXd s(5);
    s << 1, 2, 1, 3, 2;
    VectorXd p(5);
    p << 0.2, 0.5, 0.4, 0.9, 0.7;
    const VectorXd out = average_ties(p, s);
    CHECK(out[0] == doctest::Approx(0.3));
    CHECK(out[2] == doctest::Approx(0.3));
    CHECK(out[1] == doctest::Approx(0.6));
    CHECK(out[4] == doctest::Approx(0.6));
    CHECK(out[3] == doctest::Approx(0.9));
    CHECK(out.sum() == doctest::Approx(p.sum()).epsilon(1e-14));
    CHECK(gain_of(out, s) == doctest::Approx(gain_of(p, s)).epsilon(1e-12));
}

TEST_CASE("project_feasible") {
    const VectorXd s = random_vector(30, 7);
    SUBCASE("box only") {
        VectorXd v(3);
        v << -0.5, 0.4, 1.7;
        ConstraintSet none;
        const VectorXd out = project_feasible(v, none, VectorXd::Zero(3));
        VectorXd expect(3);
        expect << 0, 0.4, 1;
        CHECK(out.isApprox(expect));
    }
    SUBCASE("budget hyperplane is met exactly") {
        ConstraintSet c = budget_only(0.3);
        const VectorXd out = project_feasible(random_probabilities(30, 9), c, s);
        CHECK(out.mean() == doctest::Approx(0.3).epsilon(1e-9));
        CHECK(out.minCoeff() >= -1e-12);
        CHECK(out.maxCoeff() <= 1 + 1e-12);
    }
    SUBCASE("all constraints simultaneously") {
        ConstraintSet c;
        c.budget = 0.5;
        c.monotone = true;
        c.gain_fraction = 0.3;
        const VectorXd out = project_feasible(random_probabilities(30, 11), c, s);
        CHECK(out.mean() == doctest::Approx(0.5).epsilon(1e-8));
        CHECK(is_monotone(out, s, 1e-8));
        CHECK(gain_of(out, s) >= 0.3 * s.cwiseAbs().sum() - 1e-7);
    }
    SUBCASE("a feasible point is a fixed point") {
        ConstraintSet c;
        c.budget = 0.5;
        c.monotone = true;
        VectorXd p(30);
        const auto order = monotone_order(s);
        for (int r = 0; r < 30; ++r) p[order[r]] = 0.5;  // constant: monotone + budget
        const VectorXd out = project_feasible(p, c, s);
        CHECK((out - p).cwiseAbs().maxCoeff() < 1e-9);
    }
}

TEST_CASE("check_feasibility") {
    const DesignProblem problem(random_matrix(12, 2, 17), random_vector(2, 18));
    SUBCASE("no constraints: RCT witness") {
        const auto rep = check_feasibility(problem, {});
        CHECK(rep.feasible);
        REQUIRE(rep.witness.has_value());
        CHECK(rep.witness->isApprox(VectorXd::Constant(12, 0.5)));
    }
    SUBCASE("tight budget with a high gain demand is infeasible") {
        ConstraintSet c;
        c.budget = 0.01;
        c.gain_fraction = 0.99;
        const auto rep = check_feasibility(problem, c);
        CHECK_FALSE(rep.feasible);
        CHECK_FALSE(rep.certificate.empty());
        CHECK_THROWS_AS(solve(problem, c), Infeasible);
    }
    SUBCASE("achievable gain under a budget produces a feasible witness") {
        ConstraintSet c;
        c.budget = 0.5;
        c.monotone = true;
        c.gain_fraction = 0.6;
        const auto rep = check_feasibility(problem, c);
        REQUIRE(rep.feasible);
        const VectorXd& w = *rep.witness;
        const VectorXd s = problem.running();
        CHECK(w.mean() == doctest::Approx(0.5).epsilon(1e-9));
        CHECK(is_monotone(w, s));
        CHECK(gain_of(w, s) >= 0.6 * s.cwiseAbs().sum() - 1e-9);
    }
}

TEST_CASE("solve: unconstrained optimum is the RCT") {
    const DesignProblem problem(random_matrix(15, 3, 21), random_vector(3, 22));
    const auto report = solve(problem, {});
    CHECK(report.converged);
    CHECK((report.p_opt.p() - VectorXd::Constant(15, 0.5)).cwiseAbs().maxCoeff() < 1e-6);
    CHECK(report.kkt_residual < 1e-7);
}

TEST_CASE("solve matches the exhaustive grid oracle on tiny instances") {
    const double grid_step = 0.05;
    SUBCASE("budget only, n = 4") {
        const DesignProblem problem(random_matrix(4, 1, 31), VectorXd::Ones(1));
        ConstraintSet c = budget_only(0.25);  // n*mu = 1: grid-achievable
        const auto oracle = brute_force_optimum(problem, c, grid_step);
        const auto report = solve(problem, c);
        CHECK(report.converged);
        CHECK(report.objective <= oracle.objective + 1e-3);
        CHECK(report.p_opt.p().mean() == doctest::Approx(0.25).epsilon(1e-9));
    }
    SUBCASE("budget + monotone, n = 4") {
        const DesignProblem problem(random_matrix(4, 1, 33), VectorXd::Ones(1));
        ConstraintSet c = budget_only(0.5);
        c.monotone = true;
        const auto oracle = brute_force_optimum(problem, c, grid_step);
        const auto report = solve(problem, c);
        CHECK(report.objective <= oracle.objective + 1e-3);
        CHECK(is_monotone(report.p_opt.p(), problem.running()));
    }
    SUBCASE("budget + monotone + gain, n = 4") {
        const DesignProblem problem(random_matrix(4, 1, 35), VectorXd::Ones(1));
        ConstraintSet c = budget_only(0.5);
        c.monotone = true;
        c.gain_fraction = 0.4;
        const auto oracle = brute_force_optimum(problem, c, grid_step);
        const auto report = solve(problem, c);
        const VectorXd s = problem.running();
        CHECK(report.objective <= oracle.objective + 1e-3);
        CHECK(gain_of(report.p_opt.p(), s) >= 0.4 * s.cwiseAbs().sum() - 1e-9);
    }
    SUBCASE("gain only, n = 3") {
        const DesignProblem problem(random_matrix(3, 1, 37), VectorXd::Ones(1));
        ConstraintSet c;
        c.gain_fraction = 0.5;
        const auto oracle = brute_force_optimum(problem, c, grid_step);
        const auto report = solve(problem, c);
        CHECK(report.objective <= oracle.objective + 1e-3);
    }
}

TEST_CASE("solve is stable across restarts") {
    const DesignProblem problem(random_matrix(20, 2, 41), random_vector(2, 42));
    ConstraintSet c = budget_only(0.4);
    c.monotone = true;
    const auto a = solve(problem, c);
    const auto b = solve(problem, c, {}, random_probabilities(20, 43));
    const auto d = solve(problem, c, {}, VectorXd::Zero(20));
    CHECK(a.objective == doctest::Approx(b.objective).epsilon(1e-5));
    CHECK(a.objective == doctest::Approx(d.objective).epsilon(1e-5));
}

TEST_CASE("solve honors every constraint on a midsize instance") {
    const DesignProblem problem(random_matrix(80, 4, 51), random_vector(4, 52));
    ConstraintSet c = budget_only(0.35);
    c.monotone = true;
    c.gain_fraction = 0.25;
    const auto report = solve(problem, c);
    const VectorXd& p = report.p_opt.p();
    const VectorXd s = problem.running();
    CHECK(p.mean() == doctest::Approx(0.35).epsilon(1e-10));
    CHECK(is_monotone(p, s, 1e-10));
    CHECK(gain_of(p, s) >= 0.25 * s.cwiseAbs().sum() - 1e-8);
    CHECK(report.converged);
    // The report names the constraints it enforced.
    CHECK(report.active_constraints.size() >= 1);
}

TEST_CASE("solve with gain fraction one returns the deterministic design") {
    const DesignProblem problem(random_matrix(25, 2, 61), random_vector(2, 62));
    ConstraintSet c;
    c.gain_fraction = 1.0;
    const auto report = solve(problem, c);
    const VectorXd s = problem.running();
    CHECK(report.converged);
    CHECK(gain_of(report.p_opt.p(), s) >=
          s.cwiseAbs().sum() - 1e-9 * (1.0 + s.cwiseAbs().sum()));
    for (int i = 0; i < 25; ++i) {
        if (s[i] > 0) CHECK(report.p_opt[i] == doctest::Approx(1.0));
        if (s[i] < 0) CHECK(report.p_opt[i] == doctest::Approx(0.0));
    }
}

TEST_CASE("solve equalizes tied running scores") {
    MatrixXd X(6, 1);
    X << -2, -1, -1, 1, 1, 2;
    const DesignProblem problem(X, VectorXd::Ones(1));
    ConstraintSet c = budget_only(0.5);
    c.monotone = true;
    const auto report = solve(problem, c);
    CHECK(report.p_opt[1] == doctest::Approx(report.p_opt[2]).epsilon(1e-12));
    CHECK(report.p_opt[3] == doctest::Approx(report.p_opt[4]).epsilon(1e-12));
}

TEST_CASE("monotone optimum has a small number of levels") {
    // The optimizer should find step-like solutions, not 80 distinct values.
    const DesignProblem problem(random_matrix(60, 2, 71), random_vector(2, 72));
    ConstraintSet c = budget_only(0.5);
    c.monotone = true;
    const auto report = solve(problem, c);
    const auto order = monotone_order(problem.running());
    int levels = 1;
    for (std::size_t r = 1; r < order.size(); ++r) {
        if (report.p_opt[order[r]] > report.p_opt[order[r - 1]] + 1e-4) ++levels;
    }
    CHECK(levels <= 10);
}

TEST_CASE("brute_force_optimum guards") {
    const DesignProblem big(random_matrix(5, 1, 81), VectorXd::Ones(1));
    CHECK_THROWS_AS(brute_force_optimum(big, {}, 0.25), TooLarge);
    const DesignProblem ok(random_matrix(3, 1, 82), VectorXd::Ones(1));
    CHECK_THROWS_AS(brute_force_optimum(ok, {}, 0.0), InvalidArgument);
    // Unconstrained grid optimum at step 1/2 is the RCT.
    const auto res = brute_force_optimum(ok, {}, 0.5);
    CHECK(res.p.isApprox(VectorXd::Constant(3, 0.5)));
}
