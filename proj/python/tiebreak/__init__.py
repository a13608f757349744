"""Prospectively D-optimal treatment probabilities for tie-breaker designs."""

try:
    from ._tiebreak import *  # noqa: F401,F403
    from ._tiebreak import __doc__ as _core_doc
except ImportError:  # in-tree builds put the module on PYTHONPATH directly
    from _tiebreak import *  # noqa: F401,F403
    from _tiebreak import __doc__ as _core_doc

__all__ = [
    "DesignProblem",
    "GaussianPopulation",
    "SolverReport",
    "expected_information",
    "realized_information",
    "neg_log_det",
    "criterion_gradient",
    "rule_probabilities",
    "sample_assignment",
    "solve",
    "alpha_vector",
    "gaussian_efficiency",
    "expected_gain",
    "normalized_tradeoff",
    "sample_gaussian",
    "empirical_gain",
    "estimate_N",
    "empirical_curve",
]
