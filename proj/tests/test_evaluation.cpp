#include <doctest.h>

#include <cmath>
#include <vector>

#include "test_helpers.hpp"
#include "tiebreak/evaluation.hpp"
#include "tiebreak/gaussian.hpp"
#include "tiebreak/io.hpp"

using namespace tiebreak;
using test_helpers::random_matrix;
using test_helpers::random_probabilities;
using test_helpers::random_vector;

TEST_CASE("empirical_gain") {
    SUBCASE("hand-worked example") {
        MatrixXd X(3, 1);
        X << -1, 0.5, 2;
        const DesignProblem problem(X, VectorXd::Ones(1));
        VectorXd p(3);
        p << 0, 0.5, 1;
        const auto res = empirical_gain(problem, ProbabilityVector(p));
        // (2*0-1)(-1) + 0*(0.5) + (2*1-1)(2) = 1 + 0 + 2
        CHECK(res.gain == doctest::Approx(3.0));
        CHECK(res.rdd_bound == doctest::Approx(3.5));
    }
    SUBCASE("RCT has zero gain; RDD attains the bound") {
        const DesignProblem problem(random_matrix(25, 3, 5), random_vector(3, 6));
        const VectorXd s = problem.running();
        const auto rct = empirical_gain(problem, ProbabilityVector(VectorXd::Constant(25, 0.5)));
        CHECK(rct.gain == doctest::Approx(0.0).epsilon(1e-12));
        VectorXd sharp(25);
        for (int i = 0; i < 25; ++i) sharp[i] = s[i] >= 0 ? 1.0 : 0.0;
        const auto rdd = empirical_gain(problem, ProbabilityVector(sharp));
        CHECK(rdd.gain == doctest::Approx(rdd.rdd_bound).epsilon(1e-12));
    }
    SUBCASE("linear in p") {
        const DesignProblem problem(random_matrix(12, 2, 7), random_vector(2, 8));
        const VectorXd p = random_probabilities(12, 9);
        const VectorXd q = random_probabilities(12, 10);
        const double a = 0.3;
        const double lhs =
            empirical_gain(problem, ProbabilityVector(a * p + (1 - a) * q)).gain;
        const double rhs = a * empirical_gain(problem, ProbabilityVector(p)).gain +
                           (1 - a) * empirical_gain(problem, ProbabilityVector(q)).gain;
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
    }
}

TEST_CASE("estimate_N") {
    const DesignProblem problem(random_matrix(20, 2, 15), random_vector(2, 16));
    const int n = 20;
    SUBCASE("zero at the RCT") {
        const MatrixXd N = estimate_N(problem, ProbabilityVector(VectorXd::Constant(n, 0.5)));
        CHECK(N.cwiseAbs().maxCoeff() == 0.0);
    }
    SUBCASE("p = 1 gives X~'X~ / n") {
        const MatrixXd N = estimate_N(problem, ProbabilityVector(VectorXd::Ones(n)));
        const MatrixXd Xt = problem.augmented();
        CHECK(N.isApprox(Xt.transpose() * Xt / static_cast<double>(n), 1e-12));
    }
    SUBCASE("equals the off-diagonal block of the expected information / n") {
        const VectorXd p = random_probabilities(n, 17);
        const MatrixXd N = estimate_N(problem, ProbabilityVector(p));
        const MatrixXd M = expected_information(problem, ProbabilityVector(p)).M();
        const int k = problem.d() + 1;
        CHECK(N.isApprox(M.topRightCorner(k, k) / static_cast<double>(n), 1e-12));
        CHECK(N.isApprox(N.transpose(), 1e-12));
    }
    SUBCASE("converges to the population alpha structure") {
        const MatrixXd sigma = io::builtin_sigma();
        const VectorXd eta = io::builtin_eta();
        const int big = 200000;
        const MatrixXd X = sample_gaussian(sigma, big, 3);
        const DesignProblem pop_problem(X, eta);
        const VectorXd s = pop_problem.running();
        const double delta = 1.0;
        VectorXd p(big);
        for (int i = 0; i < big; ++i) {
            p[i] = s[i] >= delta ? 1.0 : (s[i] <= -delta ? 0.0 : 0.5);
        }
        const MatrixXd N = estimate_N(pop_problem, ProbabilityVector(p));
        const VectorXd alpha = alpha_vector(GaussianPopulation(sigma, eta), delta);
        // First row of N (beyond the corner) estimates alpha.
        CHECK((N.row(0).tail(5).transpose() - alpha).cwiseAbs().maxCoeff() < 0.05);
        CHECK(std::abs(N(0, 0)) < 0.02);  // E[2p(s)-1] = 0 by symmetry
    }
}

TEST_CASE("expected information determinant factorizes through the Schur complement") {
    const DesignProblem problem(random_matrix(30, 2, 25), random_vector(2, 26));
    const VectorXd p = random_probabilities(30, 27);
    const MatrixXd M = expected_information(problem, ProbabilityVector(p)).M();
    const int k = problem.d() + 1;
    const MatrixXd A = M.topLeftCorner(k, k);
    const MatrixXd B = M.topRightCorner(k, k);
    const MatrixXd schur = A - B * A.llt().solve(B);
    CHECK(std::log(M.determinant()) ==
          doctest::Approx(std::log(A.determinant()) + std::log(schur.determinant()))
              .epsilon(1e-8));
}

TEST_CASE("empirical_curve") {
    const MatrixXd X = sample_gaussian(io::builtin_sigma(), 300, 11);
    const VectorXd eta = io::builtin_eta();
    const DesignProblem problem(X, eta);
    const std::vector<double> grid = {0.0, 2.0, 8.0, 32.0, 1e6};

    SUBCASE("threshold sweep: efficiency rises, gain falls") {
        const auto curve =
            empirical_curve(problem, AssignmentRule::threshold(0.0, eta), grid);
        REQUIRE(curve.points.size() == grid.size());
        CHECK(curve.n == 300);
        CHECK(curve.d == 5);
        CHECK(curve.centering.isApprox(X.colwise().mean().transpose(), 1e-12));
        for (std::size_t i = 0; i < grid.size(); ++i) {
            CHECK(curve.points[i].delta == grid[i]);
        }
        // The gain sum_{|s| >= delta} |s| is exactly nonincreasing; the
        // sample log-efficiency trends up but only the trend is guaranteed.
        for (std::size_t i = 1; i < curve.points.size(); ++i) {
            CHECK(curve.points[i].gain <= curve.points[i - 1].gain + 1e-9);
        }
        CHECK_FALSE(curve.points.back().singular);
        if (!curve.points.front().singular) {
            CHECK(curve.points.back().log_efficiency >=
                  curve.points.front().log_efficiency);
        }
        // delta = 0 is the sharp RDD: normalized gain 1. A huge delta is the
        // RCT: zero gain.
        CHECK(curve.points.front().gain_normalized == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(curve.points.back().gain_normalized == doctest::Approx(0.0).epsilon(1e-12));
    }
    SUBCASE("quantile sweep uses delta_q and covers [0, 1/2]") {
        const std::vector<double> qgrid = {0.0, 0.1, 0.25, 0.5};
        const auto curve =
            empirical_curve(problem, AssignmentRule::quantile(0.0, eta), qgrid);
        REQUIRE(curve.points.size() == qgrid.size());
        // delta_q = 1/2 makes everyone a coin flip: maximal efficiency.
        const auto& rct = curve.points.back();
        CHECK_FALSE(rct.singular);
        CHECK(rct.gain_normalized == doctest::Approx(0.0).epsilon(1e-12));
        for (const auto& pt : curve.points) {
            if (pt.singular) continue;
            CHECK(pt.log_efficiency <= rct.log_efficiency + 1e-9);
        }
    }
    SUBCASE("centering leaves the scored ranks unchanged under quantile rules") {
        MatrixXd shifted = X;
        shifted.col(0).array() += 100.0;
        const DesignProblem shifted_problem(shifted, eta);
        const auto a = empirical_curve(problem, AssignmentRule::quantile(0.0, eta), {0.2});
        const auto b =
            empirical_curve(shifted_problem, AssignmentRule::quantile(0.0, eta), {0.2});
        CHECK(a.points[0].gain_normalized ==
              doctest::Approx(b.points[0].gain_normalized).epsilon(1e-9));
    }
    SUBCASE("the grid must be strictly increasing") {
        CHECK_THROWS_AS(
            empirical_curve(problem, AssignmentRule::threshold(0.0, eta), {2.0, 0.5, 1.0}),
            InvalidArgument);
    }
}
