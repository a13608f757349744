#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "tiebreak/assignment.hpp"
#include "tiebreak/evaluation.hpp"
#include "tiebreak/gaussian.hpp"
#include "tiebreak/model.hpp"
#include "tiebreak/solver.hpp"

namespace py = pybind11;
using namespace tiebreak;

namespace {

ConstraintSet make_constraints(std::optional<double> mu, bool monotone,
                               std::optional<double> rho) {
    ConstraintSet c;
    c.budget = mu;
    c.monotone = monotone;
    c.gain_fraction = rho;
    c.validate();
    return c;
}

AssignmentRule make_rule(const std::string& kind, double delta, double delta_q, double p_mid,
                         VectorXd eta) {
    if (kind == "threshold") return AssignmentRule::threshold(delta, std::move(eta));
    if (kind == "quantile") return AssignmentRule::quantile(delta_q, std::move(eta));
    if (kind == "general_mid") return AssignmentRule::general_mid(delta, p_mid, std::move(eta));
    throw InvalidArgument("rule kind must be threshold, quantile, or general_mid");
}

}  // namespace

PYBIND11_MODULE(_tiebreak, m) {
    m.doc() = "Prospectively D-optimal treatment probabilities for tie-breaker designs";

    py::register_exception<SingularInformation>(m, "SingularInformationError");
    py::register_exception<Infeasible>(m, "InfeasibleError");

    py::class_<DesignProblem>(m, "DesignProblem")
        .def(py::init<MatrixXd, VectorXd>(), py::arg("X"), py::arg("eta"))
        .def_property_readonly("X", &DesignProblem::X)
        .def_property_readonly("eta", &DesignProblem::eta)
        .def_property_readonly("n", &DesignProblem::n)
        .def_property_readonly("d", &DesignProblem::d)
        .def("running", &DesignProblem::running);

    py::class_<GaussianPopulation>(m, "GaussianPopulation")
        .def(py::init<MatrixXd, VectorXd, std::optional<VectorXd>>(), py::arg("sigma"),
             py::arg("eta"), py::arg("gamma") = std::nullopt)
        .def_property_readonly("sigma", &GaussianPopulation::sigma)
        .def_property_readonly("eta", &GaussianPopulation::eta);

    py::class_<SolverReport>(m, "SolverReport")
        .def_property_readonly("p", [](const SolverReport& r) { return r.p_opt.p(); })
        .def_readonly("objective", &SolverReport::objective)
        .def_readonly("iterations", &SolverReport::iterations)
        .def_readonly("converged", &SolverReport::converged)
        .def_readonly("active_constraints", &SolverReport::active_constraints)
        .def_readonly("kkt_residual", &SolverReport::kkt_residual);

    m.def(
        "expected_information",
        [](const DesignProblem& problem, const VectorXd& p) {
            return expected_information(problem, ProbabilityVector(p)).M();
        },
        py::arg("problem"), py::arg("p"));
    m.def(
        "realized_information",
        [](const DesignProblem& problem, const VectorXi& z) {
            return realized_information(problem, z).M();
        },
        py::arg("problem"), py::arg("z"));
    m.def(
        "neg_log_det",
        [](const DesignProblem& problem, const VectorXd& p) {
            return design_objective(problem, ProbabilityVector(p));
        },
        py::arg("problem"), py::arg("p"));
    m.def(
        "criterion_gradient",
        [](const DesignProblem& problem, const VectorXd& p) {
            return criterion_gradient(problem, ProbabilityVector(p));
        },
        py::arg("problem"), py::arg("p"));

    m.def(
        "rule_probabilities",
        [](const std::string& kind, const MatrixXd& X, VectorXd eta, double delta,
           double delta_q, double p_mid) {
            return rule_probabilities(make_rule(kind, delta, delta_q, p_mid, std::move(eta)), X)
                .p();
        },
        py::arg("kind"), py::arg("X"), py::arg("eta"), py::arg("delta") = 0.0,
        py::arg("delta_q") = 0.0, py::arg("p_mid") = 0.5);
    m.def(
        "sample_assignment",
        [](const VectorXd& p, std::uint64_t seed) {
            return sample_assignment(ProbabilityVector(p), seed);
        },
        py::arg("p"), py::arg("seed") = 0);

    m.def(
        "solve",
        [](const DesignProblem& problem, std::optional<double> mu, bool monotone,
           std::optional<double> rho, int max_iter, double tol_grad) {
            SolverConfig config;
            config.max_iter = max_iter;
            config.tol_grad = tol_grad;
            return solve(problem, make_constraints(mu, monotone, rho), config);
        },
        py::arg("problem"), py::arg("mu") = std::nullopt, py::arg("monotone") = false,
        py::arg("rho") = std::nullopt, py::arg("max_iter") = 5000,
        py::arg("tol_grad") = 1e-7);

    m.def("alpha_vector", &alpha_vector, py::arg("pop"), py::arg("delta"));
    m.def("gaussian_efficiency", &gaussian_efficiency, py::arg("pop"), py::arg("delta"));
    m.def("expected_gain", &expected_gain, py::arg("pop"), py::arg("delta"));
    m.def(
        "normalized_tradeoff",
        [](const GaussianPopulation& pop, const std::vector<double>& grid) {
            std::vector<std::tuple<double, double, double>> out;
            for (const auto& pt : normalized_tradeoff(pop, grid)) {
                out.emplace_back(pt.delta0, pt.efficiency, pt.gain);
            }
            return out;
        },
        py::arg("pop"), py::arg("delta0_grid"));
    m.def("sample_gaussian", &sample_gaussian, py::arg("sigma"), py::arg("n"),
          py::arg("seed") = 0);

    m.def(
        "empirical_gain",
        [](const DesignProblem& problem, const VectorXd& p) {
            const auto g = empirical_gain(problem, ProbabilityVector(p));
            return std::make_pair(g.gain, g.rdd_bound);
        },
        py::arg("problem"), py::arg("p"));
    m.def(
        "estimate_N",
        [](const DesignProblem& problem, const VectorXd& p) {
            return estimate_N(problem, ProbabilityVector(p));
        },
        py::arg("problem"), py::arg("p"));
    m.def(
        "empirical_curve",
        [](const DesignProblem& problem, const std::string& kind, VectorXd eta,
           const std::vector<double>& grid, double p_mid) {
            const auto curve =
                empirical_curve(problem, make_rule(kind, 0.0, 0.0, p_mid, std::move(eta)), grid);
            std::vector<std::tuple<double, double, double, double>> out;
            for (const auto& pt : curve.points) {
                out.emplace_back(pt.delta, pt.log_efficiency, pt.gain, pt.gain_normalized);
            }
            return out;
        },
        py::arg("problem"), py::arg("kind"), py::arg("eta"), py::arg("delta_grid"),
        py::arg("p_mid") = 0.5);
}
