"""Globally optimal score-based learning of linear DAGs by branch and bound and cut.

The score is ``||X - XW||_F^2 + lam * (number of edges)`` over weighted
adjacency matrices ``W`` with an acyclic support.  Acyclicity is enforced by
cycle-exclusion cuts that are only generated when an integral candidate
turns out to contain cycles.
"""
from .errors import (
    BigMBinding,
    CyclicGraph,
    DagMiqpError,
    DegenerateData,
    DimensionMismatch,
    EmptyFile,
    InvalidGraph,
    InvalidParams,
    LinkViolation,
    MaxIterations,
    NoFreeVariable,
    ParseError,
    TooLarge,
    UndefinedGap,
)
from .graph import Cycle, CycleCut, cut_satisfied, cycle_to_cut, find_cycles, is_acyclic, topological_order
from .harness import ExperimentConfig, run_bench, run_tune
from .io import read_csv_dataset, read_edge_list, read_instance, write_edge_list, write_instance
from .metrics import brute_force_oracle, enumerate_dags, evaluate, precision_recall_f1, shd, threshold_weights
from .relax import SearchNode, evaluate_objective, node_lower_bound, restricted_least_squares
from .solver import (
    LAMBDA_GRID,
    CutPool,
    Incumbent,
    SolveConfig,
    SolveReport,
    incumbent_heuristic,
    mip_gap,
    node_feasible,
    select_branch_variable,
    separate_lazy_cuts,
    solve,
)
from .synth import GroundTruthInstance, NoiseSpec, gen_er_dag, gen_sf_dag, make_instance, sample_sem, sample_weights

__version__ = "0.1.0"
