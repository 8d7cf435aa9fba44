from __future__ import annotations

import random

import pytest

from randdag import random_scripted_dag
from tsgflow.dag import (
    CycleDetected,
    DagEdge,
    DagNode,
    DanglingTarget,
    DuplicateEdge,
    EdgeCondition,
    SchemaViolation,
    Unreachable,
    edge_id,
    extract_dag,
    load_dag,
    serialize_dag,
    structurally_equal,
    validate_dag,
)
from tsgflow.document import parse_tsg


def test_fig_dag_reconstruction(fig4_bundle):
    dag = fig4_bundle.dag
    assert len(dag.nodes) == 11
    assert len(dag.edges) == 15
    ids = {n.id for n in dag.nodes}
    assert ids == {
        "start", "step1", "step2", "step3.1", "step3.2", "step3.3", "step3.4",
        "step4.1", "step4.2", "step5", "end",
    }
    by_id = {e.id: e for e in dag.edges}
    known = by_id["edge_step2_end"]
    assert known.condition.label == "Y"
    assert known.conclusion == "known issue"
    fallback = by_id["edge_step3.1_step4.1"]
    assert fallback.condition.label == "N"
    assert fallback.conclusion is None
    assert validate_dag(dag).ok


def test_parallel_dag_shape(fig5_bundle):
    dag = fig5_bundle.dag
    from_step1 = {e.target for e in dag.outgoing("step1")}
    assert from_step1 == {"step2", "step3.1", "step4.1"}
    assert all(e.condition is None for e in dag.outgoing("step1"))
    fallbacks = {e.source for e in dag.edges if e.target == "step5"}
    assert fallbacks == {"step2", "step3.1", "step3.2", "step3.4", "step4.2"}
    assert validate_dag(dag).ok


def test_single_terminating_step():
    doc = parse_tsg("# TSG: one — One step\n\n## Step 1: Only\nTerminate: fin\n")
    dag = extract_dag(doc)
    assert sorted(n.id for n in dag.nodes) == ["end", "start", "step1"]
    assert sorted(e.id for e in dag.edges) == ["edge_start_step1", "edge_step1_end"]
    terminal = next(e for e in dag.edges if e.target == "end")
    assert terminal.conclusion == "fin"


def test_extract_requires_no_dangling_targets():
    doc = parse_tsg("# TSG: d — Dangle\n\n## Step 1: A\nNext:\n- Step 9\n")
    with pytest.raises(DanglingTarget):
        extract_dag(doc)


def test_extract_detects_cycles():
    text = """# TSG: cyc — Cycle

## Step 1: A
Next:
- Step 2

## Step 2: B
Next:
- Step 1
"""
    with pytest.raises(CycleDetected):
        extract_dag(parse_tsg(text))


def test_extract_detects_unreachable():
    text = """# TSG: unr — Unreachable

## Step 1: A
Terminate: end here

## Step 2: B
Terminate: never reached
"""
    with pytest.raises(Unreachable):
        extract_dag(parse_tsg(text))


def test_duplicate_edge_rejected():
    text = """# TSG: dup — Duplicate pair

## Step 1: A
Next:
- If the probe fires: Y -> Step 2; N -> Step 2

## Step 2: B
Terminate: end
"""
    with pytest.raises(DuplicateEdge):
        extract_dag(parse_tsg(text))


def _tiny_dag(edges, tsg_id="hand"):
    node_ids = {"start", "end"}
    for source, target, *_ in edges:
        node_ids.add(source)
        node_ids.add(target)
    nodes = []
    for node_id in sorted(node_ids):
        if node_id == "start":
            nodes.append(DagNode("start", "start", "run start"))
        elif node_id == "end":
            nodes.append(DagNode("end", "end", "run end"))
        else:
            nodes.append(DagNode(node_id, "step", node_id, step_ref=node_id[4:]))
    dag_edges = []
    for source, target, *rest in edges:
        condition = rest[0] if rest else None
        conclusion = rest[1] if len(rest) > 1 else ("done" if target == "end" else None)
        dag_edges.append(DagEdge(edge_id(source, target), source, target, condition, conclusion))
    from tsgflow.dag import ExecutionDag

    return ExecutionDag(tsg_id=tsg_id, nodes=nodes, edges=dag_edges)


def test_validate_reports_cycle():
    dag = _tiny_dag([("start", "step1"), ("step1", "step2"), ("step2", "end")])
    dag.edges.append(DagEdge(edge_id("step2", "step1"), "step2", "step1"))
    report = validate_dag(dag)
    assert "cycle" in report.codes()
    violation = next(v for v in report.violations if v.code == "cycle")
    assert "edge_step1_step2" in violation.message and "edge_step2_step1" in violation.message


def test_validate_reports_malformed_edge_id():
    dag = _tiny_dag([("start", "step1"), ("step1", "end")])
    dag.edges[0] = DagEdge("e1", "start", "step1")
    report = validate_dag(dag)
    assert "malformed-edge-id" in report.codes()


def test_validate_reports_unreachable_and_end_unreachable():
    dag = _tiny_dag([("start", "step1"), ("step1", "end"), ("step2", "end")])
    report = validate_dag(dag)
    assert "unreachable-node" in report.codes()

    dag2 = _tiny_dag([("start", "step1"), ("step1", "step2"), ("step1", "end")])
    report2 = validate_dag(dag2)
    assert "end-unreachable" in report2.codes()


def test_validate_reports_condition_and_conclusion_misuse():
    dag = _tiny_dag([("start", "step1"), ("step1", "end")])
    dag.edges.append(
        DagEdge(edge_id("start", "end"), "start", "end", EdgeCondition("", "X"), None)
    )
    report = validate_dag(dag)
    assert "malformed-condition" in report.codes()

    dag2 = _tiny_dag([("start", "step1"), ("step1", "step2"), ("step2", "end")])
    bad = dag2.edges[1]
    dag2.edges[1] = DagEdge(bad.id, bad.source, bad.target, None, "not allowed here")
    assert "conclusion-not-terminal" in validate_dag(dag2).codes()


def test_validate_counts_start_end():
    dag = _tiny_dag([("start", "step1"), ("step1", "end")])
    dag.nodes = [n for n in dag.nodes if n.kind != "end"] + [
        DagNode("end", "end", "run end"),
        DagNode("end2", "end", "another end"),
    ]
    assert "end-count" in validate_dag(dag).codes()


def test_serialize_roundtrip_fixture(fig4_bundle):
    dag = fig4_bundle.dag
    text = serialize_dag(dag)
    assert structurally_equal(load_dag(text), dag)
    assert serialize_dag(load_dag(text)) == text  # byte-stable


def test_serialize_roundtrip_random_dags():
    rng = random.Random(7)
    for _ in range(100):
        dag = random_scripted_dag(rng)
        assert validate_dag(dag).ok
        assert structurally_equal(load_dag(serialize_dag(dag)), dag)


def test_schema_violation_paths():
    with pytest.raises(SchemaViolation) as exc:
        load_dag("{}")
    assert exc.value.path == "/nodes"
    with pytest.raises(SchemaViolation) as exc:
        load_dag('{"tsg_id": "x", "nodes": [{"id": "start", "kind": "weird", '
                 '"description": "", "step_ref": null}], "edges": []}')
    assert exc.value.path == "/nodes/0/kind"


def test_extract_validate_invariants(fig4_bundle, fig5_bundle, triple_bundle):
    for bundle in (fig4_bundle, fig5_bundle, triple_bundle):
        dag = bundle.dag
        assert validate_dag(dag).ok
        assert len(dag.nodes) == len(bundle.doc.steps) + 2
        for e in dag.edges:
            assert e.id == f"edge_{e.source}_{e.target}"
        arms = sum(
            1
            for s in bundle.doc.steps
            for d in s.next_directives
            if d.condition is not None
        )
        assert sum(1 for e in dag.edges if e.condition is not None) == arms
