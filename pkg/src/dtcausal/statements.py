"""Extended conditional independence statements and their text syntax.

Text form (shared by the DSL, premise files and the CLI):

    A, B _||_ C, F | D, F2=1

``_||_`` separates the left and right variable lists, ``|`` introduces
the conditioning terms, ``=`` pins a regime indicator to a value, and
``~`` is the idle value (so ``F=~`` pins the observational regime).
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from dtcausal.graph import IDLE, REGIME, Dag


class StatementError(ValueError):
    """Raised for malformed independence statements."""


@dataclass(frozen=True)
class EciStatement:
    """A triple (left independent of right, given the conditioning terms).

    `given` holds plain conditioning variables; `pinned` holds regime
    indicators pinned to a specific value (idle included).
    """

    left: frozenset[str]
    right: frozenset[str]
    given: frozenset[str] = frozenset()
    pinned: tuple[tuple[str, str], ...] = ()

    def __post_init__(self) -> None:
        if not self.left:
            raise StatementError("left side must be nonempty")
        pinned_names = [name for name, _ in self.pinned]
        if len(set(pinned_names)) != len(pinned_names):
            raise StatementError("regime pinned twice")
        # The left side must not overlap the other sets; right/given overlap
        # is permitted (it yields redundancy instances such as X _||_ Y | Y).
        overlap = self.left & (self.right | self.given | frozenset(pinned_names))
        if overlap:
            raise StatementError(f"left side overlaps other sets: {sorted(overlap)}")
        if frozenset(pinned_names) & self.given:
            raise StatementError("variable both pinned and plainly conditioned")
        object.__setattr__(self, "pinned", tuple(sorted(self.pinned)))

    def variables(self) -> frozenset[str]:
        return self.left | self.right | self.given | frozenset(n for n, _ in self.pinned)

    def validate_against(self, dag: Dag) -> None:
        """Check node existence and the left-side stochasticity restriction."""
        for name in self.variables():
            if not dag.has_node(name):
                raise StatementError(f"unknown node {name!r}")
        for name in self.left:
            if dag.kind_of(name) == REGIME:
                raise StatementError(f"regime node {name!r} on left side")
        for name, _ in self.pinned:
            if dag.kind_of(name) != REGIME:
                raise StatementError(f"pinned node {name!r} is not a regime")


_TERM_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*\*?$")


def _parse_terms(text: str, allow_pins: bool) -> tuple[list[str], list[tuple[str, str]]]:
    plain: list[str] = []
    pins: list[tuple[str, str]] = []
    text = text.strip()
    if not text:
        return plain, pins
    for raw in text.split(","):
        term = raw.strip()
        if not term:
            raise StatementError("empty term in statement")
        if "=" in term:
            if not allow_pins:
                raise StatementError(f"pinned term {term!r} only allowed after '|'")
            name, value = (p.strip() for p in term.split("=", 1))
            if not _TERM_RE.match(name) or not value:
                raise StatementError(f"bad pinned term {term!r}")
            pins.append((name, value))
        else:
            if not _TERM_RE.match(term):
                raise StatementError(f"bad variable name {term!r}")
            plain.append(term)
    return plain, pins


def parse_statement(text: str) -> EciStatement:
    """Parse the text syntax into an EciStatement."""
    if "_||_" not in text:
        raise StatementError("expected '_||_' separator")
    lhs, rest = text.split("_||_", 1)
    if "|" in rest:
        rhs, cond = rest.split("|", 1)
    else:
        rhs, cond = rest, ""
    left, _ = _parse_terms(lhs, allow_pins=False)
    right, _ = _parse_terms(rhs, allow_pins=False)
    given, pins = _parse_terms(cond, allow_pins=True)
    if not left:
        raise StatementError("left side must be nonempty")
    if not right:
        raise StatementError("right side must be nonempty")
    return EciStatement(frozenset(left), frozenset(right), frozenset(given), tuple(pins))


def format_statement(stmt: EciStatement) -> str:
    parts = [", ".join(sorted(stmt.left)), " _||_ ", ", ".join(sorted(stmt.right))]
    cond = sorted(stmt.given) + [f"{n}={v}" for n, v in stmt.pinned]
    if cond:
        parts += [" | ", ", ".join(cond)]
    return "".join(parts)


def parse_premise_file(text: str) -> list[EciStatement]:
    """One statement per line; '#' starts a comment; blank lines ignored."""
    out = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            out.append(parse_statement(line))
        except StatementError as exc:
            raise StatementError(f"line {lineno}: {exc}") from exc
    return out


# Re-export for callers who spell the idle value through this module.
__all__ = [
    "IDLE",
    "EciStatement",
    "StatementError",
    "format_statement",
    "parse_premise_file",
    "parse_statement",
]
