"""d-separation over augmented DAGs.

Two permanently maintained, independent implementations:

* `d_separated` — moralisation of the ancestral subgraph, then graph
  reachability around the conditioning set;
* `d_separated_paths` — Bayes-ball style active-path reachability.

Both must always agree; the test suite compares them on random graphs.
Pinned regime terms (``F=x``) first restrict the graph (removing the
dashed intention-to-treat edge when the pin is non-idle) and then join
the conditioning set as ordinary nodes.
"""

from __future__ import annotations

from collections import deque
from itertools import combinations

from dtcausal.graph import REGIME, STOCHASTIC, Dag, GraphError, restrict_to_regime
from dtcausal.statements import EciStatement

#: Hard cap on `implied_statements` enumeration.
ENUMERATION_BOUND = 14


def _prepare(dag: Dag, stmt: EciStatement) -> tuple[Dag, frozenset[str], frozenset[str], frozenset[str]]:
    stmt.validate_against(dag)
    graph = restrict_to_regime(dag, dict(stmt.pinned)) if stmt.pinned else dag
    cond = stmt.given | frozenset(name for name, _ in stmt.pinned)
    return graph, stmt.left, stmt.right, cond


def d_separated(dag: Dag, stmt: EciStatement) -> bool:
    """Moralisation criterion: true iff left and right are separated by the
    conditioning set in the moralised ancestral graph."""
    graph, left, right, cond = _prepare(dag, stmt)
    if not right:
        return True
    return _moral_separated(graph, left, right, cond)


def separated(dag: Dag, left: frozenset[str], right: frozenset[str], cond: frozenset[str]) -> bool:
    """Raw graphical separation query, without the ECI well-formedness
    checks (used internally where regime nodes may sit on either side)."""
    if not right:
        return True
    return _moral_separated(dag, left, right, cond)


def _moral_separated(dag: Dag, left: frozenset[str], right: frozenset[str], cond: frozenset[str]) -> bool:
    keep = dag.ancestors(left | right | cond)
    adj: dict[str, set[str]] = {v: set() for v in keep}
    for e in dag.edges:
        if e.src in keep and e.dst in keep:
            adj[e.src].add(e.dst)
            adj[e.dst].add(e.src)
    for v in keep:
        ps = [p for p in dag.parents(v) if p in keep]
        for a, b in combinations(ps, 2):
            adj[a].add(b)
            adj[b].add(a)
    # BFS from left avoiding conditioning nodes.
    seen = set(left - cond)
    queue = deque(seen)
    while queue:
        v = queue.popleft()
        if v in right:
            return False
        for w in adj[v]:
            if w not in seen and w not in cond:
                seen.add(w)
                queue.append(w)
    return not (right & seen)


def d_separated_paths(dag: Dag, stmt: EciStatement) -> bool:
    """Active-path (Bayes-ball) criterion; must agree with `d_separated`."""
    graph, left, right, cond = _prepare(dag, stmt)
    if not right:
        return True
    # Nodes with a descendant (or self) in the conditioning set.
    anc_of_cond = graph.ancestors(cond) if cond else frozenset()
    # State: (node, direction); "down" = entered along an edge into the node,
    # "up" = entered along an edge out of the node (i.e. from a child).
    visited: set[tuple[str, str]] = set()
    queue: deque[tuple[str, str]] = deque((v, "up") for v in left)
    while queue:
        v, direction = queue.popleft()
        if (v, direction) in visited:
            continue
        visited.add((v, direction))
        if v not in cond and v in right:
            return False
        if direction == "up" and v not in cond:
            for p in graph.parents(v):
                queue.append((p, "up"))
            for c in graph.children(v):
                queue.append((c, "down"))
        elif direction == "down":
            if v not in cond:
                for c in graph.children(v):
                    queue.append((c, "down"))
            if v in anc_of_cond:  # collider with conditioned descendant opens
                for p in graph.parents(v):
                    queue.append((p, "up"))
    return True


def implied_statements(dag: Dag, over: frozenset[str] | set[str]) -> list[EciStatement]:
    """All elementary statements over `over` certified by d-separation.

    Elementary: singleton stochastic left, singleton right, conditioning
    on any subset of the remaining `over` nodes.  Deterministic order.
    """
    over = frozenset(over)
    for name in over:
        if not dag.has_node(name):
            raise GraphError(f"unknown node {name!r}")
    if len(over) > ENUMERATION_BOUND:
        raise GraphError("enumeration bound exceeded")
    names = sorted(over)
    out: list[EciStatement] = []
    for a in names:
        if dag.kind_of(a) != STOCHASTIC:
            continue
        for b in names:
            if b == a:
                continue
            # Stochastic pairs are emitted once, smaller name on the left.
            if dag.kind_of(b) == STOCHASTIC and b < a:
                continue
            rest = sorted(over - {a, b})
            for k in range(len(rest) + 1):
                for cond in combinations(rest, k):
                    stmt = EciStatement(frozenset({a}), frozenset({b}), frozenset(cond))
                    if d_separated(dag, stmt):
                        out.append(stmt)
    return out
