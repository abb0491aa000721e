"""Core DAG data model and basic graph algorithms.

Graphs mix stochastic domain nodes with non-stochastic regime
indicators.  Regime nodes are always founders.  A deterministic node is
a stochastic node whose value is a function of its parents (the applied
treatment of an intention-to-treat construction); the dashed edge into
it is the one that disappears once its regime is pinned to a non-idle
value.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, replace
from functools import cached_property
from typing import Iterable, Mapping

STOCHASTIC = "stochastic"
REGIME = "regime"

#: Spelling of the idle (observational, hands-off) regime value.
IDLE = "~"


class GraphError(ValueError):
    """Raised for malformed graphs or unknown node references."""


@dataclass(frozen=True, order=True)
class Node:
    name: str
    kind: str = STOCHASTIC
    latent: bool = False
    deterministic: bool = False

    def __post_init__(self) -> None:
        if not self.name:
            raise GraphError("node name must be nonempty")
        if self.kind not in (STOCHASTIC, REGIME):
            raise GraphError(f"unknown node kind {self.kind!r}")


@dataclass(frozen=True, order=True)
class Edge:
    src: str
    dst: str
    dashed: bool = False


@dataclass(frozen=True)
class Dag:
    """Immutable labelled DAG. All operations return new graphs."""

    nodes: frozenset[Node]
    edges: frozenset[Edge]

    @staticmethod
    def of(nodes: Iterable[Node], edges: Iterable[Edge]) -> "Dag":
        dag = Dag(frozenset(nodes), frozenset(edges))
        errors = validate(dag)
        if errors:
            raise GraphError("; ".join(errors))
        return dag

    # -- lookups (adjacency maps are cached; the dataclass is immutable) --

    @cached_property
    def _by_name(self) -> dict[str, Node]:
        return {n.name: n for n in self.nodes}

    @cached_property
    def _parent_map(self) -> dict[str, frozenset[str]]:
        acc: dict[str, set[str]] = {n.name: set() for n in self.nodes}
        for e in self.edges:
            if e.dst in acc:
                acc[e.dst].add(e.src)
        return {k: frozenset(v) for k, v in acc.items()}

    @cached_property
    def _child_map(self) -> dict[str, frozenset[str]]:
        acc: dict[str, set[str]] = {n.name: set() for n in self.nodes}
        for e in self.edges:
            if e.src in acc:
                acc[e.src].add(e.dst)
        return {k: frozenset(v) for k, v in acc.items()}

    def node(self, name: str) -> Node:
        try:
            return self._by_name[name]
        except KeyError:
            raise GraphError(f"unknown node {name!r}") from None

    def has_node(self, name: str) -> bool:
        return name in self._by_name

    @property
    def node_names(self) -> frozenset[str]:
        return frozenset(self._by_name)

    def kind_of(self, name: str) -> str:
        return self.node(name).kind

    def parents(self, name: str) -> frozenset[str]:
        got = self._parent_map.get(name)
        return got if got is not None else frozenset(e.src for e in self.edges if e.dst == name)

    def children(self, name: str) -> frozenset[str]:
        got = self._child_map.get(name)
        return got if got is not None else frozenset(e.dst for e in self.edges if e.src == name)

    def ancestors(self, names: Iterable[str]) -> frozenset[str]:
        """Ancestral closure of `names` (includes the given nodes)."""
        seen = set()
        stack = list(names)
        for n in stack:
            if not self.has_node(n):
                raise GraphError(f"unknown node {n!r}")
        while stack:
            v = stack.pop()
            if v in seen:
                continue
            seen.add(v)
            stack.extend(self.parents(v))
        return frozenset(seen)

    def descendants(self, name: str) -> frozenset[str]:
        seen: set[str] = set()
        stack = list(self.children(name))
        while stack:
            v = stack.pop()
            if v in seen:
                continue
            seen.add(v)
            stack.extend(self.children(v))
        return frozenset(seen)

    def regime_nodes(self) -> list[Node]:
        return sorted(n for n in self.nodes if n.kind == REGIME)

    def regime_target(self, regime: str) -> str | None:
        """The (unique) deterministic child of a regime node, if any."""
        node = self.node(regime)
        if node.kind != REGIME:
            raise GraphError(f"{regime!r} is not a regime node")
        det = sorted(c for c in self.children(regime) if self.node(c).deterministic)
        return det[0] if det else None

    def same_structure(self, other: "Dag") -> bool:
        """Equality ignoring the dashed-edge annotation."""
        strip = lambda es: frozenset(replace(e, dashed=False) for e in es)
        return self.nodes == other.nodes and strip(self.edges) == strip(other.edges)


def validate(dag: Dag) -> list[str]:
    """Return all invariant violations; an empty list means the graph is well formed."""
    errors: list[str] = []
    names = [n.name for n in dag.nodes]
    for name in names:
        if names.count(name) > 1:
            errors.append(f"duplicate node name {name!r}")
    name_set = set(names)
    for n in dag.nodes:
        if n.kind == REGIME and n.latent:
            errors.append(f"regime node {n.name!r} marked latent")
        if n.kind == REGIME and n.deterministic:
            errors.append(f"regime node {n.name!r} marked deterministic")
    by_name = {n.name: n for n in dag.nodes}
    for e in dag.edges:
        if e.src not in name_set or e.dst not in name_set:
            errors.append(f"dangling edge {e.src} -> {e.dst}")
            continue
        if e.src == e.dst:
            errors.append(f"self-loop on {e.src}")
        if by_name[e.dst].kind == REGIME:
            errors.append(f"regime node {e.dst!r} has parent {e.src!r}")
        if e.dashed and not by_name[e.dst].deterministic:
            errors.append(f"dashed edge into non-deterministic node {e.dst!r}")
    if not any(err.startswith("dangling") or err.startswith("self-loop") for err in errors):
        if _has_cycle(dag):
            errors.append("graph contains a directed cycle")
    return errors


def _has_cycle(dag: Dag) -> bool:
    indeg = {n.name: 0 for n in dag.nodes}
    for e in dag.edges:
        indeg[e.dst] += 1
    queue = [n for n, d in indeg.items() if d == 0]
    removed = 0
    while queue:
        v = queue.pop()
        removed += 1
        for c in dag.children(v):
            indeg[c] -= 1
            if indeg[c] == 0:
                queue.append(c)
    return removed != len(dag.nodes)


def topological_order(dag: Dag) -> list[str]:
    """Topological order with lexicographic tie-break on node name."""
    indeg = {n.name: 0 for n in dag.nodes}
    for e in dag.edges:
        if e.dst not in indeg or e.src not in indeg:
            raise GraphError(f"dangling edge {e.src} -> {e.dst}")
        indeg[e.dst] += 1
    heap = [n for n, d in indeg.items() if d == 0]
    heapq.heapify(heap)
    order: list[str] = []
    while heap:
        v = heapq.heappop(heap)
        order.append(v)
        for c in sorted(dag.children(v)):
            indeg[c] -= 1
            if indeg[c] == 0:
                heapq.heappush(heap, c)
    if len(order) != len(dag.nodes):
        raise GraphError("graph contains a directed cycle")
    return order


def moral_graph(dag: Dag, restrict_to: Iterable[str]) -> tuple[frozenset[str], frozenset[frozenset[str]]]:
    """Moralised ancestral subgraph.

    Takes the ancestral closure of `restrict_to`, marries co-parents
    within it, and drops edge directions.  Returns (nodes, undirected
    edges as 2-element frozensets).
    """
    keep = dag.ancestors(restrict_to)
    und: set[frozenset[str]] = set()
    for e in dag.edges:
        if e.src in keep and e.dst in keep:
            und.add(frozenset((e.src, e.dst)))
    for v in keep:
        ps = sorted(p for p in dag.parents(v) if p in keep)
        for i, a in enumerate(ps):
            for b in ps[i + 1:]:
                und.add(frozenset((a, b)))
    return keep, frozenset(und)


def surgery(dag: Dag, remove_incoming: Iterable[str] = (), remove_outgoing: Iterable[str] = ()) -> Dag:
    """Delete all edges into `remove_incoming` nodes and out of `remove_outgoing` nodes."""
    rin = frozenset(remove_incoming)
    rout = frozenset(remove_outgoing)
    for name in rin | rout:
        if not dag.has_node(name):
            raise GraphError(f"unknown node {name!r}")
    edges = frozenset(e for e in dag.edges if e.dst not in rin and e.src not in rout)
    return Dag(dag.nodes, edges)


def restrict_to_regime(dag: Dag, assignment: Mapping[str, str]) -> Dag:
    """Apply a partial regime assignment to the graph.

    Pinning a regime to a non-idle value deletes the dashed edge into
    that regime's deterministic target (the applied treatment no longer
    depends on the intention-to-treat value).  Idle pins are no-ops.
    Only idle vs non-idle is distinguished here; value-domain checks
    need a model and live in the oracle module.
    """
    drop: set[Edge] = set()
    for regime, value in assignment.items():
        node = dag.node(regime)
        if node.kind != REGIME:
            raise GraphError(f"{regime!r} is not a regime node")
        if value == IDLE:
            continue
        for target in dag.children(regime):
            if dag.node(target).deterministic:
                drop.update(e for e in dag.edges if e.dst == target and e.dashed)
    return Dag(dag.nodes, dag.edges - frozenset(drop))


def to_dot(dag: Dag, name: str = "g") -> str:
    """Graphviz DOT rendering following the augmented-DAG visual conventions."""
    lines = [f"digraph {name} {{"]
    for n in sorted(dag.nodes):
        attrs = ["shape=box" if n.kind == REGIME else "shape=ellipse"]
        styles = []
        if n.latent:
            styles.append("dotted")
        if n.deterministic:
            styles.append("bold")
        if styles:
            attrs.append(f'style="{",".join(styles)}"')
        lines.append(f'  "{n.name}" [{", ".join(attrs)}];')
    for e in sorted(dag.edges):
        style = " [style=dashed]" if e.dashed else ""
        lines.append(f'  "{e.src}" -> "{e.dst}"{style};')
    lines.append("}")
    return "\n".join(lines) + "\n"
