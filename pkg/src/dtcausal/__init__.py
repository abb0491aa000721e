"""Decision-theoretic causality toolkit.

Symbolic reasoning over augmented DAGs (stochastic nodes plus
non-stochastic regime indicators), extended conditional independence,
mechanical intention-to-treat node splitting, and a brute-force numeric
oracle over finite discrete multi-regime models.
"""

from dtcausal.graph import (
    IDLE,
    REGIME,
    STOCHASTIC,
    Dag,
    Edge,
    GraphError,
    Node,
    moral_graph,
    restrict_to_regime,
    surgery,
    topological_order,
    validate,
)
from dtcausal.statements import EciStatement, StatementError, format_statement, parse_statement

__all__ = [
    "IDLE",
    "REGIME",
    "STOCHASTIC",
    "Dag",
    "Edge",
    "EciStatement",
    "GraphError",
    "Node",
    "StatementError",
    "format_statement",
    "moral_graph",
    "parse_statement",
    "restrict_to_regime",
    "surgery",
    "topological_order",
    "validate",
]
