"""Brute-force numeric semantics for finite discrete multi-regime models.

A model assigns one joint probability table over the stochastic
variables to every regime assignment.  ITT-mode models are built from
an intention-to-treat DAG plus a CPT bank (deterministic applied-
treatment nodes carry no CPT: their value is the regime value when the
regime is non-idle, else the ITT value).  Raw mode stores per-regime
joint tables directly and exists to author consistency violations the
ITT constructor cannot produce.

Everything is exact enumeration; distribution comparisons use total
variation distance (default tolerance 1e-9) and conditioning events
with probability below 1e-12 impose no constraint.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping, Sequence

import numpy as np

from dtcausal.graph import IDLE, REGIME, STOCHASTIC, Dag, GraphError, topological_order
from dtcausal.statements import EciStatement

DEFAULT_TOL = 1e-9
ZERO_TOL = 1e-12
MAX_JOINT_STATES = 10**7

State = object  # JSON scalar: str, int, float, bool


class ModelError(ValueError):
    """Raised for malformed models, regimes or queries."""


@dataclass(frozen=True)
class Cpt:
    child: str
    parents: tuple[str, ...]
    table: dict[tuple, tuple[float, ...]]

    def __post_init__(self) -> None:
        for key, probs in self.table.items():
            if len(key) != len(self.parents):
                raise ModelError(f"CPT row for {self.child!r} has wrong parent arity")
            if any(p < 0 for p in probs):
                raise ModelError(f"negative probability in CPT for {self.child!r}")
            if abs(sum(probs) - 1.0) > 1e-12:
                raise ModelError(f"CPT row for {self.child!r} does not sum to 1")


def _freeze_assignment(assignment: Mapping[str, State]) -> tuple[tuple[str, State], ...]:
    return tuple(sorted(assignment.items()))


@dataclass(frozen=True)
class JointTable:
    """Exact joint distribution over an ordered list of variables."""

    variables: tuple[str, ...]
    states: tuple[tuple[State, ...], ...]
    probs: np.ndarray  # shape = tuple(len(s) for s in states)

    def axis(self, var: str) -> int:
        try:
            return self.variables.index(var)
        except ValueError:
            raise ModelError(f"unknown variable {var!r}") from None

    def marginal(self, keep: Sequence[str]) -> "JointTable":
        drop = tuple(i for i, v in enumerate(self.variables) if v not in keep)
        probs = self.probs.sum(axis=drop) if drop else self.probs
        kept = tuple(v for v in self.variables if v in keep)
        return JointTable(kept, tuple(self.states[self.axis(v)] for v in kept), probs)

    def prob_of(self, event: Mapping[str, State]) -> float:
        idx: list = [slice(None)] * len(self.variables)
        for var, val in event.items():
            ax = self.axis(var)
            try:
                idx[ax] = self.states[ax].index(val)
            except ValueError:
                raise ModelError(f"{val!r} is not a state of {var!r}") from None
        return float(self.probs[tuple(idx)].sum())

    def conditional(self, target: Sequence[str], event: Mapping[str, State]) -> np.ndarray | None:
        """Flat distribution over the joint states of `target` given `event`;
        None when the conditioning event has (near-)zero probability."""
        idx: list = [slice(None)] * len(self.variables)
        for var, val in event.items():
            ax = self.axis(var)
            idx[ax] = self.states[ax].index(val)
        sub = self.probs[tuple(idx)]
        remaining = [v for v in self.variables if v not in event]
        axes = tuple(remaining.index(v) for v in target)
        other = tuple(i for i in range(len(remaining)) if remaining[i] not in target)
        flat = sub.sum(axis=other) if other else sub
        flat = np.moveaxis(flat, tuple(range(len(axes))), tuple(np.argsort(axes))) if axes else flat
        total = float(flat.sum())
        if total <= ZERO_TOL:
            return None
        return (flat / total).reshape(-1)

    def expectation(self, var: str, event: Mapping[str, State] | None = None) -> float:
        ax = self.axis(var)
        values = np.array([float(s) for s in self.states[ax]])
        if event:
            dist = self.conditional([var], event)
            if dist is None:
                raise ModelError("conditioning event has zero probability")
            return float(values @ dist)
        marg = self.marginal([var]).probs
        return float(values @ marg)


def _conditional_ordered(table: JointTable, target: Sequence[str], event: Mapping[str, State]) -> np.ndarray | None:
    return table.conditional(list(target), event)


@dataclass(frozen=True)
class MultiRegimeModel:
    mode: str  # "itt" or "raw"
    states: dict[str, tuple[State, ...]]  # stochastic variables only
    dag: Dag | None = None
    cpts: dict[str, Cpt] = field(default_factory=dict)
    regimes: dict[str, str] = field(default_factory=dict)  # regime name -> target
    itt_of: dict[str, str] = field(default_factory=dict)  # target -> ITT node
    raw_regimes: dict[tuple, np.ndarray] = field(default_factory=dict)
    raw_order: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.mode not in ("itt", "raw"):
            raise ModelError(f"unknown mode {self.mode!r}")
        count = 1
        for s in self.states.values():
            count *= len(s)
        if count > MAX_JOINT_STATES:
            raise ModelError("joint state space exceeds enumeration bound")
        if self.mode == "itt":
            self._check_itt()
        else:
            for key, flat in self.raw_regimes.items():
                if abs(float(np.sum(flat)) - 1.0) > 1e-12:
                    raise ModelError(f"raw regime table {key} does not sum to 1")

    def _check_itt(self) -> None:
        if self.dag is None:
            raise ModelError("itt mode requires a DAG")
        for reg, target in self.regimes.items():
            if self.dag.kind_of(reg) != REGIME:
                raise ModelError(f"{reg!r} is not a regime node")
            if not self.dag.node(target).deterministic:
                raise ModelError(f"regime target {target!r} is not deterministic")
            if target in self.cpts:
                raise ModelError(f"deterministic target {target!r} must not carry a CPT")
            if target not in self.itt_of:
                raise ModelError(f"missing ITT source for target {target!r}")
        for node in self.dag.nodes:
            if node.kind != STOCHASTIC:
                continue
            if node.deterministic:
                continue
            if node.name not in self.cpts:
                raise ModelError(f"missing CPT for {node.name!r}")

    # -- regime bookkeeping --------------------------------------------

    @property
    def regime_names(self) -> tuple[str, ...]:
        if self.mode == "itt":
            return tuple(sorted(self.regimes))
        # Raw mode: regime names come from the table keys; the optional
        # `regimes`/`itt_of` metadata only serves the consistency checks.
        names: set[str] = set()
        for key in self.raw_regimes:
            names.update(n for n, _ in key)
        return tuple(sorted(names))

    def regime_domain(self, regime: str) -> tuple[State, ...]:
        if self.mode == "itt":
            target = self.regimes[regime]
            return (IDLE,) + tuple(self.states[target])
        values = sorted(
            {dict(key).get(regime) for key in self.raw_regimes},
            key=lambda v: (v != IDLE, str(v)),
        )
        return tuple(values)

    @property
    def variables(self) -> tuple[str, ...]:
        if self.mode == "itt":
            return tuple(v for v in topological_order(self.dag) if self.dag.kind_of(v) == STOCHASTIC)
        return self.raw_order

    def all_regime_assignments(self, pins: Mapping[str, State] | None = None) -> list[dict[str, State]]:
        pins = dict(pins or {})
        names = self.regime_names
        for name, value in pins.items():
            if name not in names:
                raise ModelError(f"unknown regime {name!r}")
            if value not in self.regime_domain(name):
                raise ModelError(f"{value!r} outside domain of regime {name!r}")
        choices = [[pins[n]] if n in pins else list(self.regime_domain(n)) for n in names]
        return [dict(zip(names, combo)) for combo in itertools.product(*choices)]

    # -- joint distributions -------------------------------------------

    def joint(self, regime: Mapping[str, State]) -> JointTable:
        regime = dict(regime)
        names = self.regime_names
        if set(regime) != set(names):
            raise ModelError("regime assignment must cover every regime exactly once")
        for name, value in regime.items():
            if value not in self.regime_domain(name):
                raise ModelError(f"{value!r} outside domain of regime {name!r}")
        key = _freeze_assignment(regime)
        cached = self._joint_cache.get(key)
        if cached is None:
            cached = self._compute_joint(regime)
            self._joint_cache[key] = cached
        return cached

    @cached_property
    def _joint_cache(self) -> dict:
        return {}

    def _compute_joint(self, regime: Mapping[str, State]) -> JointTable:
        if self.mode == "raw":
            key = _freeze_assignment(regime)
            if key not in self.raw_regimes:
                raise ModelError(f"no table for regime assignment {dict(regime)}")
            states = tuple(self.states[v] for v in self.raw_order)
            shape = tuple(len(s) for s in states)
            return JointTable(self.raw_order, states, self.raw_regimes[key].reshape(shape))
        variables = self.variables
        states = tuple(self.states[v] for v in variables)
        shape = tuple(len(s) for s in states)
        probs = np.zeros(shape)
        regime_of_target = {t: r for r, t in self.regimes.items()}
        for combo in itertools.product(*(range(n) for n in shape)):
            value = {v: states[i][combo[i]] for i, v in enumerate(variables)}
            p = 1.0
            for v in variables:
                if v in regime_of_target:
                    f = regime[regime_of_target[v]]
                    want = value[self.itt_of[v]] if f == IDLE else f
                    if value[v] != want:
                        p = 0.0
                        break
                else:
                    cpt = self.cpts[v]
                    row = tuple(value[par] if par not in self.regimes else regime[par] for par in cpt.parents)
                    p *= cpt.table[row][self.states[v].index(value[v])]
                if p == 0.0:
                    break
            probs[combo] = p
        total = probs.sum()
        if abs(total - 1.0) > 1e-9:
            raise ModelError("joint table does not normalise")
        return JointTable(variables, states, probs / total)

    def itt_dag(self) -> Dag:
        if self.dag is None:
            raise ModelError("model carries no graph")
        return self.dag


def total_variation(p: np.ndarray, q: np.ndarray) -> float:
    return 0.5 * float(np.abs(p - q).sum())


def _coerce_state(value: State, domain: tuple[State, ...]) -> State:
    """Match a (possibly text-sourced) value against a state domain."""
    if value in domain:
        return value
    for candidate in domain:
        if str(candidate) == str(value):
            return candidate
    return value


def eci_holds(model: MultiRegimeModel, stmt: EciStatement, tol: float = DEFAULT_TOL) -> bool:
    """Numeric truth of an extended conditional independence statement.

    True iff one family of conditional distributions for the left-hand
    variables, indexed by the conditioning context, serves every regime
    and every right-hand value: regime indicators pinned in the
    conditioning restrict the regimes considered; regime indicators
    appearing as plain variables in the conditioning (and any regime not
    mentioned at all) index the family; regime indicators on the right
    are quantified over, like right-hand values.  Conditioning events of
    probability below the zero cutoff impose no constraint.
    """
    regime_names = set(model.regime_names)
    variables = set(model.variables)
    pins = {
        name: _coerce_state(value, model.regime_domain(name)) if name in regime_names else value
        for name, value in dict(stmt.pinned).items()
    }
    for name in stmt.left:
        if name not in variables:
            raise ModelError(f"unknown or non-stochastic left variable {name!r}")
    for name in stmt.right | stmt.given:
        if name not in variables and name not in regime_names:
            raise ModelError(f"unknown variable {name!r}")
    # Conditioning dominates: a variable on both sides is redundant on the
    # right (X _||_ Y | Y is vacuously true).
    right = stmt.right - stmt.given - frozenset(pins)
    right_regimes = sorted(right & regime_names)
    stoch_right = sorted(right - regime_names)
    stoch_given = sorted(stmt.given - regime_names)
    left = sorted(stmt.left)
    # Regimes that index the family: pinned, plain-conditioned, or unmentioned.
    context_regimes = sorted(regime_names - set(right_regimes))
    for ctx_combo in itertools.product(
        *([pins[r]] if r in pins else list(model.regime_domain(r)) for r in context_regimes)
    ):
        ctx = dict(zip(context_regimes, ctx_combo))
        for g_combo in itertools.product(*(model.states[v] for v in stoch_given)):
            given_event = dict(zip(stoch_given, g_combo))
            reference: np.ndarray | None = None
            for vary_combo in itertools.product(*(model.regime_domain(r) for r in right_regimes)):
                regime = {**ctx, **dict(zip(right_regimes, vary_combo))}
                table = model.joint(regime)
                for b_combo in itertools.product(*(model.states[v] for v in stoch_right)):
                    event = {**given_event, **dict(zip(stoch_right, b_combo))}
                    if event and table.prob_of(event) <= ZERO_TOL:
                        continue
                    dist = table.conditional(left, event)
                    if dist is None:
                        continue
                    if reference is None:
                        reference = dist
                    elif total_variation(reference, dist) > tol:
                        return False
    return True


def check_distributional_consistency(
    model: MultiRegimeModel, v: Iterable[str], action: str, tol: float = DEFAULT_TOL
) -> bool:
    """dist(v | T=t, idle) == dist(v | T*=t, regime pinned to t), per t."""
    regime = _regime_for_action(model, action)
    itt = model.itt_of.get(action)
    if itt is None:
        raise ModelError(f"{action!r} has no ITT structure")
    v = sorted(v)
    idle = _single_regime(model, regime, IDLE)
    obs = model.joint(idle)
    for t in model.states[action]:
        interventional = model.joint(_single_regime(model, regime, t))
        if obs.prob_of({action: t}) <= ZERO_TOL:
            continue
        lhs = obs.conditional(v, {action: t})
        if interventional.prob_of({itt: t}) <= ZERO_TOL:
            continue
        rhs = interventional.conditional(v, {itt: t})
        if lhs is None or rhs is None:
            continue
        if total_variation(lhs, rhs) > tol:
            return False
    return True


def _regime_for_action(model: MultiRegimeModel, action: str) -> str:
    for reg, target in model.regimes.items():
        if target == action:
            return reg
    raise ModelError(f"no regime controls {action!r}")


def _single_regime(model: MultiRegimeModel, regime: str, value: State) -> dict[str, State]:
    out = {r: IDLE for r in model.regime_names}
    out[regime] = value
    return out


def check_ignorability(model: MultiRegimeModel, y: str, action: str, tol: float = DEFAULT_TOL) -> bool:
    """Response independent of the ITT variable given applied treatment and regime."""
    regime = _regime_for_action(model, action)
    itt = model.itt_of[action]
    stmt = EciStatement(frozenset({y}), frozenset({itt}), frozenset({action, regime}))
    return eci_holds(model, stmt, tol)


def check_sufficient_covariate(
    model: MultiRegimeModel, x: str, y: str, action: str, tol: float = DEFAULT_TOL
) -> bool:
    """Conditional ignorability given x in each interventional regime, plus
    regime-invariance of the (x, ITT) joint."""
    regime = _regime_for_action(model, action)
    itt = model.itt_of[action]
    for t in model.states[action]:
        stmt = EciStatement(frozenset({y}), frozenset({itt}), frozenset({x}), ((regime, t),))
        if not eci_holds(model, stmt, tol):
            return False
    stmt = EciStatement(frozenset({x, itt}), frozenset({regime}))
    return eci_holds(model, stmt, tol)


def interventional_query(model: MultiRegimeModel, y: str, regime: Mapping[str, State]) -> dict[State, float]:
    table = model.joint(regime).marginal([y])
    return dict(zip(table.states[0], (float(p) for p in table.probs)))


def gformula_eval(
    model: MultiRegimeModel,
    y: tuple[str, State],
    x0: tuple[str, State],
    x1: tuple[str, State],
    z_var: str,
) -> float:
    """Evaluate sum_z p(y | x1, z) p(z | x0) in the all-idle joint."""
    idle = {r: IDLE for r in model.regime_names}
    obs = model.joint(idle)
    y_var, y_val = y
    x0_var, x0_val = x0
    x1_var, x1_val = x1
    if obs.prob_of({x0_var: x0_val}) <= ZERO_TOL:
        raise ModelError("positivity violation")
    total = 0.0
    for z_val in model.states[z_var]:
        pz = obs.conditional([z_var], {x0_var: x0_val})
        pz_val = float(pz[model.states[z_var].index(z_val)])
        if pz_val <= ZERO_TOL:
            continue
        if obs.prob_of({x1_var: x1_val, z_var: z_val}) <= ZERO_TOL:
            raise ModelError("positivity violation")
        py = obs.conditional([y_var], {x1_var: x1_val, z_var: z_val})
        total += float(py[model.states[y_var].index(y_val)]) * pz_val
    return total


def ett(model: MultiRegimeModel, y: str, action: str) -> float:
    """Effect of treatment on those selected for treatment:
    E(y | ITT=1, regime=1) - E(y | ITT=1, regime=0)."""
    regime = _regime_for_action(model, action)
    itt = model.itt_of[action]
    states = model.states[action]
    if len(states) != 2:
        raise ModelError("ETT requires a binary action")
    lo, hi = states
    terms = []
    for t in (hi, lo):
        table = model.joint(_single_regime(model, regime, t))
        if table.prob_of({itt: hi}) <= ZERO_TOL:
            raise ModelError("ITT value has zero probability")
        terms.append(table.expectation(y, {itt: hi}))
    return terms[0] - terms[1]


# -- study simulation ----------------------------------------------------


@dataclass(frozen=True)
class StudySpec:
    """Exchangeable-unit study: covariate law, assignment kernel, response
    kernel.  Units are i.i.d. given the kernels and each unit's outcome
    distribution depends only on its own applied treatment (interference
    between units is out of scope)."""

    covariate_dist: dict[State, float]
    assignment: dict[State, float]  # P(selected for treatment | covariate)
    response: dict[tuple[State, int], dict[float, float]]  # (covariate, treatment) -> outcome dist

    def interventional_mean(self, t: int) -> float:
        return sum(
            px * sum(y * py for y, py in self.response[(x, t)].items())
            for x, px in self.covariate_dist.items()
        )

    def observational_arm_mean(self, t: int) -> float:
        """Exact mean outcome among units selected for (and given) arm t."""
        weights = {
            x: px * (self.assignment[x] if t == 1 else 1.0 - self.assignment[x])
            for x, px in self.covariate_dist.items()
        }
        total = sum(weights.values())
        if total <= ZERO_TOL:
            raise ModelError(f"arm {t} has zero probability")
        return sum(
            w / total * sum(y * py for y, py in self.response[(x, t)].items())
            for x, w in weights.items()
        )


@dataclass(frozen=True)
class StudyResult:
    n: int
    treated_mean: float | None
    control_mean: float | None
    treated_se: float | None
    control_se: float | None
    interventional_means: dict[int, float]


def simulate_study(spec: StudySpec, n: int, seed: int) -> StudyResult:
    if n < 1:
        raise ModelError("n must be at least 1")
    rng = np.random.default_rng(seed)
    xs = list(spec.covariate_dist)
    px = np.array([spec.covariate_dist[x] for x in xs], dtype=float)
    x_idx = rng.choice(len(xs), size=n, p=px / px.sum())
    assign = np.array([spec.assignment[x] for x in xs], dtype=float)
    t = (rng.random(n) < assign[x_idx]).astype(int)
    y = np.empty(n)
    for i, x in enumerate(xs):  # group-wise draws keep this O(groups) rng calls
        for arm in (0, 1):
            mask = (x_idx == i) & (t == arm)
            count = int(mask.sum())
            if count == 0:
                continue
            dist = spec.response[(x, arm)]
            values = np.array(list(dist), dtype=float)
            probs = np.array([dist[v] for v in dist], dtype=float)
            y[mask] = values[rng.choice(len(values), size=count, p=probs / probs.sum())]

    def stats(arm: np.ndarray) -> tuple[float | None, float | None]:
        if arm.size == 0:
            return None, None
        se = float(arm.std(ddof=1) / np.sqrt(arm.size)) if arm.size > 1 else None
        return float(arm.mean()), se

    t_mean, t_se = stats(y[t == 1])
    c_mean, c_se = stats(y[t == 0])
    return StudyResult(
        n=n,
        treated_mean=t_mean,
        control_mean=c_mean,
        treated_se=t_se,
        control_se=c_se,
        interventional_means={t: spec.interventional_mean(t) for t in (0, 1)},
    )


# -- JSON serialisation ---------------------------------------------------


def _state_key(value: State) -> str:
    return json.dumps(value)


def model_to_json(model: MultiRegimeModel) -> dict:
    doc: dict = {"mode": model.mode}
    variables = []
    order = model.variables
    for name in order:
        entry: dict = {"name": name, "states": list(model.states[name])}
        if model.mode == "itt":
            node = model.dag.node(name)
            if node.latent:
                entry["latent"] = True
            if node.deterministic:
                entry["deterministic"] = True
        variables.append(entry)
    doc["variables"] = variables
    if model.mode == "itt":
        doc["regimes"] = [
            {"name": r, "target": t, "itt": model.itt_of[t]} for r, t in sorted(model.regimes.items())
        ]
        doc["cpts"] = [
            {
                "child": cpt.child,
                "parents": list(cpt.parents),
                "rows": [
                    {"parents": list(key), "probs": list(probs)}
                    for key, probs in sorted(cpt.table.items(), key=lambda kv: json.dumps(kv[0]))
                ],
            }
            for cpt in (model.cpts[c] for c in sorted(model.cpts))
        ]
    else:
        if model.regimes:
            doc["regimes"] = [
                {"name": r, "target": t, "itt": model.itt_of[t]} for r, t in sorted(model.regimes.items())
            ]
        doc["raw_regimes"] = [
            {"assignment": dict(key), "probs": list(map(float, flat))}
            for key, flat in sorted(model.raw_regimes.items(), key=lambda kv: json.dumps(kv[0]))
        ]
    return doc


def model_from_json(doc: Mapping) -> MultiRegimeModel:
    mode = doc.get("mode")
    states = {v["name"]: tuple(v["states"]) for v in doc["variables"]}
    if mode == "itt":
        from dtcausal.graph import Edge, Node

        regimes = {r["name"]: r["target"] for r in doc["regimes"]}
        itt_of = {r["target"]: r["itt"] for r in doc["regimes"]}
        cpts = {}
        for c in doc.get("cpts", []):
            cpts[c["child"]] = Cpt(
                c["child"],
                tuple(c["parents"]),
                {tuple(row["parents"]): tuple(row["probs"]) for row in c["rows"]},
            )
        nodes = set()
        flags = {v["name"]: v for v in doc["variables"]}
        det_targets = set(regimes.values())
        for name in states:
            nodes.add(
                Node(
                    name,
                    STOCHASTIC,
                    latent=bool(flags[name].get("latent", False)),
                    deterministic=name in det_targets,
                )
            )
        for reg in regimes:
            nodes.add(Node(reg, REGIME))
        edges = set()
        for cpt in cpts.values():
            for par in cpt.parents:
                edges.add(Edge(par, cpt.child))
        for reg, target in regimes.items():
            edges.add(Edge(reg, target))
            edges.add(Edge(itt_of[target], target, dashed=True))
        dag = Dag.of(nodes, edges)
        return MultiRegimeModel("itt", states, dag=dag, cpts=cpts, regimes=regimes, itt_of=itt_of)
    if mode == "raw":
        order = tuple(v["name"] for v in doc["variables"])
        raw = {}
        for entry in doc["raw_regimes"]:
            key = _freeze_assignment(entry["assignment"])
            raw[key] = np.asarray(entry["probs"], dtype=float)
        regimes = {r["name"]: r["target"] for r in doc.get("regimes", [])}
        itt_of = {r["target"]: r["itt"] for r in doc.get("regimes", [])}
        return MultiRegimeModel("raw", states, raw_regimes=raw, raw_order=order, regimes=regimes, itt_of=itt_of)
    raise ModelError(f"unknown mode {mode!r}")


def load_model(path) -> MultiRegimeModel:
    with open(path) as fh:
        return model_from_json(json.load(fh))


def dump_model(model: MultiRegimeModel, path) -> None:
    with open(path, "w") as fh:
        json.dump(model_to_json(model), fh, indent=2)
        fh.write("\n")


# -- random model construction (flat simplex CPTs, explicit seeds) -------


def random_cpt(rng: np.random.Generator, child: str, parents: tuple[str, ...], states: Mapping[str, tuple]) -> Cpt:
    rows = {}
    for combo in itertools.product(*(states[p] for p in parents)):
        rows[combo] = tuple(rng.dirichlet(np.ones(len(states[child]))))
    return Cpt(child, parents, rows)
