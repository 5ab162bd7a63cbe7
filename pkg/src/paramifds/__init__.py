"""On-demand IFDS data-flow analysis with treewidth/treedepth preprocessing."""

from .arena import (
    Arena,
    CallGraph,
    ExplodedSupergraph,
    FactDomain,
    FlowRelation,
    VertexKind,
    apply_relation,
    build_call_graph,
    build_exploded,
    compose_relations,
    load_arena,
    load_arena_a,
)
from .baselines import DemandSolver, DyckOracle, demand_tabulate, dyck_reach, exhaustive_tabulate
from .decomp import (
    POT,
    LcaIndex,
    TreeDecomposition,
    balance,
    compute_pot,
    decompose_cfg,
    lca,
    verify_decomposition,
    verify_pot,
)
from .engine import QueryIndex, QueryResult, load_index, mivp, preprocess, query, save_index
from .errors import *  # noqa: F401,F403
from .harness import GenSpec, bench, gen_workload, generate
from .samectx import SameCtxIndex, same_context_query
from .summaries import SummaryGraph, compute_summaries, reach_view, view

__version__ = "0.1.0"
