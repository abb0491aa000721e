import numpy as np
import pytest

from dtcausal.graph import (
    IDLE,
    REGIME,
    Dag,
    Edge,
    GraphError,
    Node,
    moral_graph,
    restrict_to_regime,
    surgery,
    to_dot,
    topological_order,
    validate,
)

from conftest import (
    instrument_dag,
    itt_ignorable_dag,
    random_dag,
    simple_treatment_dag,
    two_stage_itt_dag,
    two_stage_obs_dag,
)


class TestValidate:
    def test_simple_treatment_ok(self):
        assert validate(simple_treatment_dag()) == []

    def test_empty_graph_ok(self):
        assert validate(Dag(frozenset(), frozenset())) == []

    def test_regime_with_parent(self):
        dag = Dag(
            frozenset({Node("F_T", REGIME), Node("T"), Node("Y")}),
            frozenset({Edge("F_T", "T"), Edge("Y", "F_T")}),
        )
        assert any("has parent" in e for e in validate(dag))

    def test_self_loop(self):
        dag = Dag(frozenset({Node("A")}), frozenset({Edge("A", "A")}))
        assert any("self-loop" in e for e in validate(dag))

    def test_cycle(self):
        dag = Dag(frozenset({Node("A"), Node("B")}), frozenset({Edge("A", "B"), Edge("B", "A")}))
        assert any("cycle" in e for e in validate(dag))

    def test_dangling_edge(self):
        dag = Dag(frozenset({Node("A")}), frozenset({Edge("A", "B")}))
        assert any("dangling" in e for e in validate(dag))

    def test_latent_regime_rejected(self):
        dag = Dag(frozenset({Node("F", REGIME, latent=True)}), frozenset())
        assert any("latent" in e for e in validate(dag))

    def test_dashed_into_plain_node_rejected(self):
        dag = Dag(frozenset({Node("A"), Node("B")}), frozenset({Edge("A", "B", dashed=True)}))
        assert any("dashed" in e for e in validate(dag))

    def test_of_constructor_raises(self):
        with pytest.raises(GraphError):
            Dag.of({Node("A")}, {Edge("A", "A")})


class TestTopologicalOrder:
    def test_simple_treatment_unique(self):
        assert topological_order(simple_treatment_dag()) == ["F_T", "T", "Y"]

    def test_two_stage_partial_order(self):
        order = topological_order(two_stage_obs_dag())
        assert order.index("X0") < order.index("Z") < order.index("X1") < order.index("Y")

    def test_lexicographic_tie_break(self):
        dag = Dag.of({Node("B"), Node("A")}, set())
        assert topological_order(dag) == ["A", "B"]

    def test_cycle_raises(self):
        dag = Dag(frozenset({Node("A"), Node("B")}), frozenset({Edge("A", "B"), Edge("B", "A")}))
        with pytest.raises(GraphError):
            topological_order(dag)


class TestMoralGraph:
    def test_simple_chain_no_marriages(self):
        nodes, edges = moral_graph(simple_treatment_dag(), {"Y", "F_T", "T"})
        assert nodes == frozenset({"F_T", "T", "Y"})
        assert edges == frozenset({frozenset({"F_T", "T"}), frozenset({"T", "Y"})})

    def test_instrument_marries_coparents(self):
        dag = instrument_dag()
        _, edges = moral_graph(dag, dag.node_names)
        # Z, U, F_X are all parents of X, hence pairwise married.
        for pair in ({"Z", "U"}, {"Z", "F_X"}, {"U", "F_X"}):
            assert frozenset(pair) in edges
        assert frozenset({"U", "X"}) in edges and frozenset({"X", "Y"}) in edges

    def test_single_node(self):
        dag = Dag.of({Node("A")}, set())
        nodes, edges = moral_graph(dag, {"A"})
        assert nodes == frozenset({"A"}) and edges == frozenset()

    def test_ancestral_closure_applied(self):
        dag = Dag.of({Node("A"), Node("B"), Node("C")}, {Edge("A", "B"), Edge("B", "C")})
        nodes, _ = moral_graph(dag, {"C"})
        assert nodes == frozenset({"A", "B", "C"})

    def test_unknown_node(self):
        with pytest.raises(GraphError):
            moral_graph(simple_treatment_dag(), {"nope"})


class TestSurgery:
    def test_remove_outgoing_makes_sinks(self):
        dag = surgery(two_stage_obs_dag(), remove_outgoing={"X0", "X1"})
        assert dag.children("X0") == frozenset() and dag.children("X1") == frozenset()

    def test_remove_incoming_makes_founder(self):
        dag = surgery(two_stage_obs_dag(), remove_incoming={"X1"}, remove_outgoing={"X0"})
        assert dag.parents("X1") == frozenset()

    def test_identity(self):
        dag = two_stage_obs_dag()
        assert surgery(dag) == dag

    def test_idempotent(self):
        dag = two_stage_obs_dag()
        once = surgery(dag, remove_incoming={"X1"})
        assert surgery(once, remove_incoming={"X1"}) == once

    def test_input_unchanged(self):
        dag = two_stage_obs_dag()
        before = dag.edges
        surgery(dag, remove_outgoing={"X0"})
        assert dag.edges == before

    def test_unknown_node(self):
        with pytest.raises(GraphError):
            surgery(two_stage_obs_dag(), remove_incoming={"nope"})


class TestRestrictToRegime:
    def test_non_idle_pin_removes_dashed_edge(self):
        dag = restrict_to_regime(two_stage_itt_dag(), {"F_X1": 1})
        assert Edge("X1*", "X1", dashed=True) not in dag.edges
        assert Edge("X0*", "X0", dashed=True) in dag.edges

    def test_idle_pin_is_noop(self):
        dag = two_stage_itt_dag()
        assert restrict_to_regime(dag, {"F_X1": IDLE}) == dag

    def test_ignorable_graph_pin(self):
        dag = restrict_to_regime(itt_ignorable_dag(), {"F_T": 1})
        assert dag.parents("T") == frozenset({"F_T"})

    def test_idempotent(self):
        dag = two_stage_itt_dag()
        once = restrict_to_regime(dag, {"F_X0": 0})
        assert restrict_to_regime(once, {"F_X0": 0}) == once

    def test_non_regime_rejected(self):
        with pytest.raises(GraphError):
            restrict_to_regime(two_stage_itt_dag(), {"Z": 1})


class TestDagQueries:
    def test_ancestors_and_descendants(self):
        dag = two_stage_obs_dag()
        assert "X0" in dag.ancestors({"Y"})
        assert "Y" in dag.descendants("X0")

    def test_regime_target(self):
        assert itt_ignorable_dag().regime_target("F_T") == "T"

    def test_same_structure_ignores_dashing(self):
        a = itt_ignorable_dag()
        b = Dag(a.nodes, frozenset({Edge(e.src, e.dst) for e in a.edges}))
        assert a.same_structure(b)


class TestDot:
    def test_dot_conventions(self):
        dot = to_dot(itt_ignorable_dag())
        assert '"F_T" [shape=box]' in dot
        assert "dotted" in dot  # latent ITT node
        assert "bold" in dot  # deterministic applied node
        assert "style=dashed" in dot


def test_surgery_preserves_acyclicity_randomly():
    rng = np.random.default_rng(5)
    for _ in range(50):
        dag = random_dag(rng)
        names = sorted(n.name for n in dag.nodes)
        pick = [n for n in names if rng.random() < 0.3]
        topological_order(surgery(dag, remove_incoming=pick))  # must not raise
