"""Accelerated gradient methods with Bregman estimate functions for regularized risk minimization."""

from .bregman import ENTROPY, EUCLIDEAN, EntropyGeometry, EstimateModel, EuclideanGeometry, divergence
from .problems import (
    Dataset,
    LinearOperatorA,
    build_elastic_net_ls,
    build_f1_svm,
    build_lpboost,
    build_svm_dual_smoothed,
    build_svm_dual_unsmoothed,
    build_svm_primal_smoothed,
    estimate_operator_norm,
)
from .solvers import (
    AdaptiveLConfig,
    CompositeProblem,
    DualGapTracker,
    SolverConfig,
    run_agm,
    run_agm_inf,
    run_agm_one,
)
from .subproblems import (
    BoxHyperplaneQP,
    ElasticNetBall,
    capped_simplex_entropy_prox,
    elastic_net_ball_project,
    elastic_net_prox,
    solve_box_hyperplane,
)

__all__ = [name for name in dir() if not name.startswith("_")]
