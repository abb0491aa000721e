"""Symbolic closure of (extended) conditional independence statements.

Implements the semigraphoid rules

    P1 (symmetry), P2 (redundancy), P3 (decomposition),
    P4 (weak union), P5 (contraction)

over a bounded universe of named variables, with proof traces.  The
intersection rule is deliberately absent: combining X _||_ Y | (Z,W)
with X _||_ Z | (Y,W) to get X _||_ (Y,Z) | W is not a valid inference
for general distributions, and this engine never performs it.

"W a function of Y" in P3/P4 is instantiated as coordinate projection
(W a subset of Y), which makes the closure finitely computable.  The
engine is sound but not complete for semigraphoid implication.

Symmetry normally applies only when the swapped statement keeps a
purely stochastic left-hand side.  With `regimes_as_stochastic=True`
regime indicators are treated as ordinary random variables (a purely
instrumental device: conclusions whose left side stays stochastic
remain valid for non-stochastic regimes).
"""

from __future__ import annotations

from dataclasses import dataclass, field

from dtcausal.graph import REGIME, STOCHASTIC
from dtcausal.statements import EciStatement, StatementError

MAX_VARIABLES = 16

Triple = tuple[int, int, int]  # (left, right, given) bit masks


class UniverseError(ValueError):
    """Raised for universes or statements the engine cannot represent."""


@dataclass(frozen=True)
class Universe:
    """Ordered variable list; sets are fixed-width bit masks over it."""

    variables: tuple[tuple[str, str], ...]  # (name, kind)

    def __post_init__(self) -> None:
        names = [n for n, _ in self.variables]
        if len(set(names)) != len(names):
            raise UniverseError("duplicate variable names")
        if len(names) > MAX_VARIABLES:
            raise UniverseError(f"more than {MAX_VARIABLES} variables")
        for _, kind in self.variables:
            if kind not in (STOCHASTIC, REGIME):
                raise UniverseError(f"unknown kind {kind!r}")

    @staticmethod
    def of(stochastic: list[str] | tuple[str, ...] = (), regimes: list[str] | tuple[str, ...] = ()) -> "Universe":
        return Universe(tuple((n, STOCHASTIC) for n in stochastic) + tuple((n, REGIME) for n in regimes))

    @property
    def index(self) -> dict[str, int]:
        return {name: i for i, (name, _) in enumerate(self.variables)}

    @property
    def regime_mask(self) -> int:
        mask = 0
        for i, (_, kind) in enumerate(self.variables):
            if kind == REGIME:
                mask |= 1 << i
        return mask

    def mask(self, names) -> int:
        idx = self.index
        m = 0
        for name in names:
            if name not in idx:
                raise UniverseError(f"unknown variable {name!r}")
            m |= 1 << idx[name]
        return m

    def names(self, mask: int) -> frozenset[str]:
        return frozenset(name for i, (name, _) in enumerate(self.variables) if mask >> i & 1)

    def to_triple(self, stmt: EciStatement) -> Triple:
        if stmt.pinned:
            raise UniverseError("pinned regime values are not supported by the closure engine")
        return (self.mask(stmt.left), self.mask(stmt.right), self.mask(stmt.given))

    def to_statement(self, triple: Triple) -> EciStatement:
        l, r, g = triple
        return EciStatement(self.names(l), self.names(r), self.names(g))


@dataclass(frozen=True)
class ProofStep:
    axiom: str  # P1..P5 or "Premise"
    inputs: tuple[int, ...]  # indices of earlier steps
    output: EciStatement


@dataclass(frozen=True)
class ProofTrace:
    steps: tuple[ProofStep, ...]

    @property
    def conclusion(self) -> EciStatement:
        return self.steps[-1].output

    def replay(self, universe: Universe) -> EciStatement:
        """Re-apply the named axioms in order; returns the final statement.

        Raises if any step does not follow from its inputs by its axiom.
        """
        produced: list[Triple] = []
        for step in self.steps:
            target = universe.to_triple(step.output)
            ins = [produced[i] for i in step.inputs]
            if step.axiom == "Premise" or step.axiom == "P2":
                pass  # premises and redundancy instances are axiomatic
            else:
                candidates = _apply_axiom(step.axiom, ins, universe.regime_mask, regimes_as_stochastic=True)
                if target not in candidates:
                    raise StatementError(f"trace step does not follow by {step.axiom}")
            produced.append(target)
        return self.steps[-1].output


def _normalise(triple: Triple) -> Triple | None:
    """Remove given-overlap; None when the statement is vacuous."""
    l, r, g = triple
    l &= ~g
    r &= ~g & ~l
    if l == 0 or r == 0:
        return None
    return (l, r, g)


def _submasks(mask: int):
    sub = mask
    while sub:
        yield sub
        sub = (sub - 1) & mask


def _apply_axiom(axiom: str, ins: list[Triple], regime_mask: int, regimes_as_stochastic: bool) -> set[Triple]:
    """All normalised statements derivable from `ins` by one application of `axiom`."""
    out: set[Triple] = set()

    def keep(t: Triple | None) -> None:
        if t is None:
            return
        if not regimes_as_stochastic and t[0] & regime_mask:
            return
        out.add(t)

    if axiom == "P1" and len(ins) == 1:
        l, r, g = ins[0]
        keep(_normalise((r, l, g)))
    elif axiom == "P3" and len(ins) == 1:
        l, r, g = ins[0]
        for w in _submasks(r):
            keep(_normalise((l, w, g)))
    elif axiom == "P4" and len(ins) == 1:
        l, r, g = ins[0]
        for w in _submasks(r):
            keep(_normalise((l, r, g | w)))
    elif axiom == "P5" and len(ins) == 2:
        (l1, y, z), (l2, w, g2) = ins
        if l1 == l2 and g2 == (y | z):
            keep(_normalise((l1, y | w, z)))
    return out


@dataclass
class _Closure:
    universe: Universe
    regimes_as_stochastic: bool
    derivation: dict[Triple, tuple[str, tuple[Triple, ...]]] = field(default_factory=dict)

    def run(self, premises: list[Triple]) -> None:
        reg = self.universe.regime_mask
        for p in premises:
            t = _normalise(p)
            if t is not None and t not in self.derivation:
                self.derivation[t] = ("Premise", ())
        # Redundancy (P2) instances over single variables.
        n = len(self.universe.variables)
        for i in range(n):
            if not self.regimes_as_stochastic and (1 << i) & reg:
                continue
            for j in range(n):
                if i != j:
                    t = (1 << i, 1 << j, 1 << j)
                    self.derivation.setdefault(t, ("P2", ()))
        frontier = sorted(self.derivation)
        known = set(self.derivation)
        while frontier:
            new: dict[Triple, tuple[str, tuple[Triple, ...]]] = {}

            def emit(t: Triple, axiom: str, ins: tuple[Triple, ...]) -> None:
                if t not in known and t not in new:
                    new[t] = (axiom, ins)

            by_left: dict[int, list[Triple]] = {}
            for t in known:
                by_left.setdefault(t[0], []).append(t)
            for s in frontier:
                for axiom in ("P1", "P3", "P4"):
                    for t in sorted(_apply_axiom(axiom, [s], reg, self.regimes_as_stochastic)):
                        emit(t, axiom, (s,))
                # Contraction pairs s with every known same-left statement, both ways.
                for other in sorted(by_left.get(s[0], ())):
                    for first, second in ((s, other), (other, s)):
                        for t in sorted(_apply_axiom("P5", [first, second], reg, self.regimes_as_stochastic)):
                            emit(t, "P5", (first, second))
            self.derivation.update(new)
            known |= set(new)
            frontier = sorted(new)

    def trace(self, target: Triple) -> ProofTrace:
        order: list[Triple] = []
        seen: set[Triple] = set()

        def visit(t: Triple) -> None:
            if t in seen:
                return
            seen.add(t)
            for dep in self.derivation[t][1]:
                visit(dep)
            order.append(t)

        visit(target)
        index = {t: i for i, t in enumerate(order)}
        steps = tuple(
            ProofStep(
                axiom=self.derivation[t][0],
                inputs=tuple(index[d] for d in self.derivation[t][1]),
                output=self.universe.to_statement(t),
            )
            for t in order
        )
        return ProofTrace(steps)


def closure(
    premises: list[EciStatement] | set[EciStatement],
    universe: Universe,
    *,
    regimes_as_stochastic: bool = False,
) -> set[EciStatement]:
    """Fixpoint of P1-P5 over the premises (intersection never applied)."""
    engine = _Closure(universe, regimes_as_stochastic)
    engine.run([universe.to_triple(p) for p in premises])
    return {universe.to_statement(t) for t in engine.derivation}


def derivable(
    premises: list[EciStatement] | set[EciStatement],
    target: EciStatement,
    universe: Universe,
    *,
    regimes_as_stochastic: bool = False,
) -> tuple[bool, ProofTrace | None]:
    """Decide whether `target` is in the closure; on success return a trace.

    A False answer means "not derivable by this engine" (the engine is
    sound, not complete).
    """
    engine = _Closure(universe, regimes_as_stochastic)
    engine.run([universe.to_triple(p) for p in premises])
    t = _normalise(universe.to_triple(target))
    if t is None:  # empty right side: vacuously true, a redundancy instance
        return True, ProofTrace((ProofStep("P2", (), target),))
    if t not in engine.derivation:
        return False, None
    return True, engine.trace(t)
