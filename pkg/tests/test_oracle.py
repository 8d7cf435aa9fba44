from __future__ import annotations

import random

import pytest

from randdag import random_scripted_dag, steps_from_assignment, success_assignments
from test_engine import bundle_of, linear_dag, scripted
from tsgflow.dag import validate_dag
from tsgflow.engine import ElementState, RunConfig, ScenarioIncomplete, run
from tsgflow.oracle import (
    fixpoint_states,
    max_antichain,
    oracle_makespan,
    replay_final_outcome,
    serial_simulation,
    timed_analysis,
)


def steps_of(scenario: dict) -> dict[str, list[dict]]:
    return {
        node: (spec["attempts"] if isinstance(spec, dict) else spec)
        for node, spec in scenario["steps"].items()
    }


def assert_engine_matches_serial_oracle(dag, steps, retry_limit=0):
    result = run(
        bundle_of(dag),
        scripted(steps),
        RunConfig(max_executors=1, retry_limit=retry_limit),
    )
    sim = serial_simulation(dag, steps, retry_limit)
    assert result.executed == sim.executed
    assert result.status.value == sim.status
    assert result.conclusion == sim.conclusion
    assert result.makespan == sim.total_time
    if sim.status == "exhausted":
        # states must agree exactly once nothing is racing a conclusion
        assert {n: s.value for n, s in result.state.node_state.items()} == sim.node_state
        assert {e: s.value for e, s in result.state.edge_state.items()} == sim.edge_state
    return result, sim


def test_oracle_fig5_case(fig5_bundle, fig5_scenario):
    oracle = oracle_makespan(fig5_bundle.dag, fig5_scenario)
    assert oracle.critical_path_to_conclusion == 22
    assert oracle.serial_sum == 35
    assert oracle.width == 3


def test_oracle_linear_chain():
    dag = linear_dag(3)
    steps = {
        "step1": [{"result": "success", "latency": 1,
                   "edge_decisions": {"edge_step1_step2": "enable"}}],
        "step2": [{"result": "success", "latency": 2,
                   "edge_decisions": {"edge_step2_step3": "enable"}}],
        "step3": [{"result": "success", "latency": 3,
                   "edge_decisions": {"edge_step3_end": "enable"}}],
    }
    oracle = oracle_makespan(dag, {"steps": steps})
    assert oracle.critical_path_to_conclusion == 6
    assert oracle.serial_sum == 6
    assert oracle.width == 1


def test_oracle_sequential_fig4(fig4_bundle, fig4_scenario):
    oracle = oracle_makespan(fig4_bundle.dag, fig4_scenario)
    assert oracle.critical_path_to_conclusion == 43
    assert oracle.serial_sum == 43
    assert oracle.width == 1


def test_oracle_triple(triple_bundle, triple_scenario):
    oracle = oracle_makespan(triple_bundle.dag, triple_scenario)
    assert oracle.critical_path_to_conclusion == 45
    assert oracle.serial_sum == 105
    assert oracle.width == 3


def test_oracle_requires_complete_scenario(fig5_bundle, fig5_scenario):
    steps = steps_of(fig5_scenario)
    steps.pop("step2")
    with pytest.raises(ScenarioIncomplete):
        oracle_makespan(fig5_bundle.dag, {"steps": steps})


def test_replay_final_outcome():
    attempts = [{"result": "failure", "latency": 2}, {"result": "success", "latency": 3,
                                                      "edge_decisions": {}}]
    out = replay_final_outcome(attempts, retry_limit=1)
    assert out.result == "success"
    assert out.total_latency == 5
    assert out.executions == 2
    out = replay_final_outcome(attempts[:1], retry_limit=2)
    assert out.result == "failure"
    assert out.total_latency == 6  # last attempt repeats


def test_fixpoint_matches_engine_propagation(fig4_bundle):
    from tsgflow.oracle import FinalOutcome

    dag = fig4_bundle.dag
    applied = {
        "step1": FinalOutcome("success", {"edge_step1_step2": "enable"}, 1, 1),
        "step2": FinalOutcome(
            "success",
            {"edge_step2_end": "disable", "edge_step2_step3.1": "enable"}, 1, 1),
        "step3.1": FinalOutcome(
            "success",
            {"edge_step3.1_step3.2": "disable", "edge_step3.1_step4.1": "enable"}, 1, 1),
    }
    node_state, edge_state = fixpoint_states(dag, applied)
    assert node_state["step3.2"] == "disabled"
    assert node_state["step3.3"] == "disabled"
    assert node_state["step3.4"] == "disabled"
    assert node_state["step4.1"] == "enabled"
    assert edge_state["edge_step3.4_step4.1"] == "disabled"


def test_max_antichain_shapes(fig5_bundle):
    dag = fig5_bundle.dag
    chain = ["step3.1", "step3.2", "step3.3", "step3.4"]
    assert max_antichain(dag, chain) == 1
    assert max_antichain(dag, ["step2", "step3.1", "step4.1"]) == 3
    assert max_antichain(dag, []) == 0


def test_timed_analysis_executed_set(fig5_bundle, fig5_scenario):
    timed = timed_analysis(fig5_bundle.dag, steps_of(fig5_scenario), retry_limit=2)
    assert timed.conclusion_time == 22
    assert set(timed.executed) == {
        "step1", "step2", "step3.1", "step3.2", "step3.3", "step3.4", "step4.1", "step4.2",
    }
    assert timed.width == 3


def test_engine_matches_oracle_on_bundles(fig4_bundle, fig4_scenario, fig5_bundle,
                                          fig5_scenario, triple_bundle, triple_scenario):
    for bundle, scenario in (
        (fig4_bundle, fig4_scenario),
        (fig5_bundle, fig5_scenario),
        (triple_bundle, triple_scenario),
    ):
        assert_engine_matches_serial_oracle(bundle.dag, steps_of(scenario), retry_limit=2)


def test_engine_matches_oracle_randomized_small():
    rng = random.Random(1234)
    cases = 0
    for _ in range(60):
        dag = random_scripted_dag(rng)
        assert validate_dag(dag).ok
        assignments = success_assignments(dag)
        for assignment in assignments:
            assert_engine_matches_serial_oracle(dag, steps_from_assignment(assignment))
            cases += 1
        step_ids = sorted(assignment)
        for failing in step_ids[: min(3, len(step_ids))]:
            steps = steps_from_assignment(assignments[0], failing={failing})
            assert_engine_matches_serial_oracle(dag, steps)
            cases += 1
    assert cases > 300


def test_makespan_bounds_invariant(fig4_bundle, fig4_scenario, fig5_bundle, fig5_scenario,
                                   triple_bundle, triple_scenario):
    for bundle, scenario in ((fig4_bundle, fig4_scenario), (fig5_bundle, fig5_scenario),
                             (triple_bundle, triple_scenario)):
        oracle = oracle_makespan(bundle.dag, scenario)
        makespans = {}
        for k in range(1, 7):
            result = run(
                bundle_of(bundle.dag),
                scripted(steps_of(scenario)),
                RunConfig(max_executors=k, retry_limit=2),
            )
            makespans[k] = result.makespan
        assert makespans[1] == oracle.serial_sum
        for k, makespan in makespans.items():
            assert oracle.critical_path_to_conclusion <= makespan <= makespans[1]
            if k >= oracle.width:
                assert makespan == makespans[oracle.width]


def test_engine_enabled_state_matches_fixpoint_when_exhausted():
    dag = linear_dag(2)
    steps = {
        "step1": [{"result": "success", "latency": 1,
                   "edge_decisions": {"edge_step1_step2": "enable"}}],
        "step2": [{"result": "failure", "latency": 1, "error": "x"}],
    }
    result, sim = assert_engine_matches_serial_oracle(dag, steps, retry_limit=0)
    assert result.state.node_state["step2"] is ElementState.ENABLED
    assert sim.node_state["step2"] == "enabled"
