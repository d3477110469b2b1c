"""Service restoration toolkit.

Radial reconfiguration of distribution networks: convex dispatch models,
loop-cutting heuristics, a spanning-tree enumeration oracle, and a
scenario benchmark harness. The heavy lifting lives in the compiled
``_core`` extension; this package re-exports its public surface.
"""

from ._core import (
    CaseError,
    EnumLimitError,
    GraphError,
    HeuristicError,
    ModelError,
    NetworkCase,
    OracleLimitError,
    ParseError,
    RefError,
    Topology,
    brute_force_oracle,
    enumerate_spanning_trees,
    evaluate,
    full_topology,
    generate_scenarios,
    is_connected,
    is_radial,
    iterative_heuristic,
    load_case,
    loop_lines,
    max_spanning_tree,
    mesh_count,
    mst_baseline,
    parse_case,
    run_benchmark,
    save_case,
    sigma,
    validate,
)

__all__ = [
    "CaseError",
    "EnumLimitError",
    "GraphError",
    "HeuristicError",
    "ModelError",
    "NetworkCase",
    "OracleLimitError",
    "ParseError",
    "RefError",
    "Topology",
    "brute_force_oracle",
    "enumerate_spanning_trees",
    "evaluate",
    "full_topology",
    "generate_scenarios",
    "is_connected",
    "is_radial",
    "iterative_heuristic",
    "load_case",
    "loop_lines",
    "max_spanning_tree",
    "mesh_count",
    "mst_baseline",
    "parse_case",
    "run_benchmark",
    "save_case",
    "sigma",
    "validate",
]

__version__ = "1.0.0"
