"""Scenario reduction for two-stage stochastic programs via optimal transport."""

from .core import (COST_KINDS, CostMatrix, DiscreteDistribution, ReducedDistribution, Scenario, SolveStats,
                   SupportSubset, equiprobable_from_vectors, validate_distribution)
from .costfn import (CrossEvaluationMatrix, SharedSolves, SingleScenarioSolutions, build_cost_matrix,
                     cost_matrix_be, cost_matrix_br, cost_matrix_id, cost_matrix_mo, cost_matrix_pr,
                     cross_evaluate, solve_evp, solve_single_scenarios)
from .kernels import BACKEND as KERNEL_BACKEND
from .selection import SelectionTrace, first_pick_globally_optimal_check, forward_select
from .stochprog import (EvaluationResult, FirstStageDecision, TwoStageProblem, evaluate_decision, rae,
                        saa_baseline, solve_two_stage, theorem1_oracle)
from .suc import SucInstance, SucProblem, desk_instance, desk_variant, load_rts24
from .transport import TransportPlan, discrete_distance, redistribute, transport_lp_oracle

__version__ = "0.1.0"

__all__ = [
    "COST_KINDS", "CostMatrix", "CrossEvaluationMatrix", "DiscreteDistribution", "EvaluationResult",
    "FirstStageDecision", "KERNEL_BACKEND", "ReducedDistribution", "Scenario", "SelectionTrace", "SharedSolves",
    "SingleScenarioSolutions", "SolveStats", "SucInstance", "SucProblem", "SupportSubset", "TransportPlan",
    "TwoStageProblem", "build_cost_matrix", "cost_matrix_be", "cost_matrix_br", "cost_matrix_id",
    "cost_matrix_mo", "cost_matrix_pr", "cross_evaluate", "desk_instance", "desk_variant",
    "discrete_distance", "equiprobable_from_vectors", "evaluate_decision", "first_pick_globally_optimal_check",
    "forward_select", "load_rts24", "rae", "redistribute", "saa_baseline", "solve_evp",
    "solve_single_scenarios", "solve_two_stage", "theorem1_oracle", "transport_lp_oracle",
    "validate_distribution",
]
