"""Compatibility scenarios, no-disturbance behaviors and monogamy certificates
for cycle-type Bell and contextuality inequalities."""
from .scenario import Assignment, Expression, Graph, Scenario, ScenarioError, Term, experimental_graph
from .graphs import (
    CliqueTree,
    PerfectEliminationOrdering,
    chordality_certificate,
    clique_tree,
    induced_cycle,
    is_chordal,
    maximal_cliques,
)
from .behavior import Behavior, JointDistribution, ProbabilityTable, check_no_disturbance, fine_joint, pr_box
from .bounds import (
    bounds_report,
    chsh_chain_expression,
    classical_bound,
    cycle_expression,
    quantum_cycle_bound,
)
from .lp import LPModel, build_nd_lp, nd_maximize, solve
from .monogamy import (
    MonogamyInstance,
    build_chain,
    build_contextual_bell,
    build_loop,
    build_multi_cycle,
    build_one_to_many,
    certify,
    recombine,
)

__version__ = "0.1.0"

__all__ = [
    "Assignment", "Expression", "Graph", "Scenario", "ScenarioError", "Term", "experimental_graph",
    "CliqueTree", "PerfectEliminationOrdering", "chordality_certificate", "clique_tree", "induced_cycle",
    "is_chordal", "maximal_cliques",
    "Behavior", "JointDistribution", "ProbabilityTable", "check_no_disturbance", "fine_joint", "pr_box",
    "bounds_report", "chsh_chain_expression", "classical_bound", "cycle_expression", "quantum_cycle_bound",
    "LPModel", "build_nd_lp", "nd_maximize", "solve",
    "MonogamyInstance", "build_chain", "build_contextual_bell", "build_loop", "build_multi_cycle",
    "build_one_to_many", "certify", "recombine",
]
