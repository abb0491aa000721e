import numpy as np
import pytest

from dtcausal.augment import (
    InterventionPlan,
    ProjectionError,
    build_augmented_dag,
    build_itt_dag,
    eliminate_nodes,
    identify_two_stage,
    itt_name,
    regime_name,
    rule_applicability,
)
from dtcausal.dsep import implied_statements
from dtcausal.graph import Dag, Edge, GraphError, Node, surgery

from conftest import (
    itt_ignorable_dag,
    itt_nonignorable_dag,
    random_dag,
    suffcov_dag,
    suffcov_itt_dag,
    two_stage_itt_dag,
    two_stage_obs_dag,
)


def chain_dag() -> Dag:
    return Dag.of({Node("T"), Node("Y")}, {Edge("T", "Y")})


class TestPlan:
    def test_valid_plan(self):
        InterventionPlan(("X0", "X1")).validate_against(two_stage_obs_dag())

    def test_order_must_respect_topology(self):
        with pytest.raises(GraphError, match="topology"):
            InterventionPlan(("X1", "X0")).validate_against(two_stage_obs_dag())

    def test_latent_target_rejected(self):
        with pytest.raises(GraphError, match="latent"):
            InterventionPlan(("H",)).validate_against(two_stage_obs_dag())

    def test_duplicate_target_rejected(self):
        with pytest.raises(GraphError, match="duplicate"):
            InterventionPlan(("X0", "X0")).validate_against(two_stage_obs_dag())


class TestBuildItt:
    def test_chain_becomes_treatment_trio(self):
        out = build_itt_dag(chain_dag(), InterventionPlan(("T",)))
        assert out == itt_ignorable_dag()

    def test_two_stage(self):
        out = build_itt_dag(two_stage_obs_dag(), InterventionPlan(("X0", "X1")))
        assert out == two_stage_itt_dag()

    def test_empty_plan_is_identity(self):
        dag = two_stage_obs_dag()
        assert build_itt_dag(dag, InterventionPlan(())) == dag

    def test_trio_shape(self):
        out = build_itt_dag(chain_dag(), InterventionPlan(("T",)))
        assert out.node(itt_name("T")).latent
        assert out.node("T").deterministic
        assert out.parents("T") == frozenset({itt_name("T"), regime_name("T")})
        assert out.children("T") == frozenset({"Y"})

    def test_name_collision_rejected(self):
        dag = Dag.of({Node("T"), Node("T*"), Node("Y")}, {Edge("T", "Y")})
        with pytest.raises(GraphError, match="already in use"):
            build_itt_dag(dag, InterventionPlan(("T",)))

    def test_regime_input_rejected(self):
        with pytest.raises(GraphError, match="observational"):
            build_itt_dag(itt_ignorable_dag(), InterventionPlan(("Y",)))


class TestEliminate:
    def test_two_stage_collapse(self):
        out = eliminate_nodes(two_stage_itt_dag(), {"X0*", "X1*"})
        assert out == build_augmented_dag(two_stage_obs_dag(), InterventionPlan(("X0", "X1")))

    def test_ignorable_collapse(self):
        out = eliminate_nodes(itt_ignorable_dag(), {"T*"})
        expected = Dag.of({Node("F_T", "regime"), Node("T"), Node("Y")}, {Edge("F_T", "T"), Edge("T", "Y")})
        assert out == expected

    def test_nonignorable_collapse_is_complete_pattern(self):
        out = eliminate_nodes(itt_nonignorable_dag(), {"T*"})
        expected = Dag.of(
            {Node("F_T", "regime"), Node("T"), Node("Y")},
            {Edge("F_T", "T"), Edge("F_T", "Y"), Edge("T", "Y")},
        )
        assert out == expected

    def test_sufficient_covariate_collapse(self):
        assert eliminate_nodes(suffcov_itt_dag(), {"T*"}) == suffcov_dag()

    def test_drop_nothing_is_identity(self):
        dag = two_stage_itt_dag()
        assert eliminate_nodes(dag, set()) == dag

    def test_unknown_node(self):
        with pytest.raises(GraphError):
            eliminate_nodes(chain_dag(), {"nope"})

    def test_unprojectable_raises(self):
        # dropped confounder with two children, no other link: needs a
        # bidirected edge, which the DAG class cannot express
        dag = Dag.of(
            {Node("H", latent=True), Node("A"), Node("B"), Node("C"), Node("D")},
            {Edge("H", "A"), Edge("H", "B"), Edge("C", "A"), Edge("D", "B")},
        )
        with pytest.raises(ProjectionError, match="not DAG-projectable"):
            eliminate_nodes(dag, {"H"})

    def test_fidelity_verified_on_random_pairs(self):
        rng = np.random.default_rng(77)
        accepted = 0
        for _ in range(200):
            dag = random_dag(rng, max_nodes=7, regime_prob=0.0)
            names = sorted(dag.node_names)
            drop = {v for v in names if rng.random() < 0.3}
            if len(drop) == len(names):
                continue
            retained = frozenset(set(names) - drop)
            try:
                out = eliminate_nodes(dag, drop)
            except ProjectionError:
                continue
            accepted += 1
            assert set(implied_statements(out, retained)) == set(implied_statements(dag, retained))
        assert accepted >= 50


class TestBuildAugmented:
    def test_equals_itt_then_eliminate(self):
        obs, plan = two_stage_obs_dag(), InterventionPlan(("X0", "X1"))
        via_itt = eliminate_nodes(build_itt_dag(obs, plan), {"X0*", "X1*"})
        assert build_augmented_dag(obs, plan) == via_itt

    def test_chain(self):
        out = build_augmented_dag(chain_dag(), InterventionPlan(("T",)))
        assert out.edges == frozenset({Edge("F_T", "T"), Edge("T", "Y")})

    def test_empty_plan(self):
        dag = two_stage_obs_dag()
        assert build_augmented_dag(dag, InterventionPlan(())) == dag


def test_round_trip_random_dags():
    from dtcausal.graph import topological_order

    rng = np.random.default_rng(123)
    done = 0
    for _ in range(60):
        dag = random_dag(rng, max_nodes=6, regime_prob=0.0)
        order = topological_order(dag)
        targets = tuple(v for v in order if rng.random() < 0.4)
        plan = InterventionPlan(targets)
        itt = build_itt_dag(dag, plan)
        collapsed = eliminate_nodes(itt, {itt_name(t) for t in targets})
        assert collapsed == build_augmented_dag(dag, plan)
        done += 1
    assert done == 60


class TestRules:
    def test_response_exchange(self):
        graph = surgery(two_stage_obs_dag(), remove_outgoing={"X0", "X1"})
        assert rule_applicability(graph, "Rule2", {"Y"}, {"X0", "X1"}, z={"Z"})

    def test_first_stage_exchange(self):
        graph = surgery(two_stage_obs_dag(), remove_incoming={"X1"}, remove_outgoing={"X0"})
        assert rule_applicability(graph, "Rule2", {"Z"}, {"X0"}, w={"X1"})

    def test_second_stage_deletion(self):
        graph = surgery(two_stage_obs_dag(), remove_incoming={"X1"})
        assert rule_applicability(graph, "Rule3", {"Z"}, {"X1"}, z={"X0"})

    def test_unknown_rule(self):
        with pytest.raises(GraphError):
            rule_applicability(two_stage_obs_dag(), "Rule1", {"Y"}, {"X0"})

    def test_overlap_rejected(self):
        with pytest.raises(GraphError, match="overlap"):
            rule_applicability(two_stage_obs_dag(), "Rule2", {"Y"}, {"Y"})


class TestIdentifyTwoStage:
    def test_identified(self):
        cert = identify_two_stage(two_stage_obs_dag(), "X0", "X1", "Z", "Y")
        assert cert.identified
        assert all(c.holds for c in cert.checks)
        assert "sum_Z" in cert.estimand

    def test_extra_confounding_not_identified(self):
        cert = identify_two_stage(two_stage_obs_dag(extra_confounding=True), "X0", "X1", "Z", "Y")
        assert not cert.identified
        assert not cert.checks[0].holds  # the response-exchange check fails

    def test_degenerate_chain_identified(self):
        dag = Dag.of(
            {Node("X0"), Node("Z"), Node("X1"), Node("Y")},
            {Edge("X0", "Z"), Edge("Z", "X1"), Edge("X1", "Y")},
        )
        assert identify_two_stage(dag, "X0", "X1", "Z", "Y").identified

    def test_report_text(self):
        cert = identify_two_stage(two_stage_obs_dag(), "X0", "X1", "Z", "Y")
        report = cert.report()
        assert "IDENTIFIED" in report and "Rule2" in report and "Rule3" in report

    def test_missing_node(self):
        with pytest.raises(GraphError):
            identify_two_stage(two_stage_obs_dag(), "X0", "X1", "Z", "nope")
