"""Execution DAG model: extraction from documents, validation, JSON round-trip.

Nodes are "start", "end", and one "step<id>" node per TSG step. Edges carry
canonical ids of the form ``edge_<from>_<to>``; conditional edges carry a
question with a Y/N label, and edges into "end" carry the conclusion text of
the termination point they realize.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .document import TsgDocument, step_id_key

START = "start"
END = "end"


class DagError(Exception):
    """Raised when a document cannot be turned into a valid DAG."""


class DanglingTarget(DagError):
    pass


class CycleDetected(DagError):
    pass


class Unreachable(DagError):
    pass


class DuplicateEdge(DagError):
    pass


class SchemaViolation(Exception):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


def edge_id(source: str, target: str) -> str:
    return f"edge_{source}_{target}"


def node_sort_key(node_id: str) -> tuple:
    """Scheduling/sorting order: start, then step ids numerically, then end."""
    if node_id == START:
        return (0, (), "")
    if node_id == END:
        return (2, (), "")
    rest = node_id[4:] if node_id.startswith("step") else node_id
    return (1, step_id_key(rest), node_id)


@dataclass(frozen=True)
class EdgeCondition:
    question: str
    label: str  # "Y" or "N"


@dataclass(frozen=True)
class DagNode:
    id: str
    kind: str  # start | step | end
    description: str = ""
    step_ref: str | None = None


@dataclass(frozen=True)
class DagEdge:
    id: str
    source: str
    target: str
    condition: EdgeCondition | None = None
    conclusion: str | None = None


@dataclass
class ExecutionDag:
    tsg_id: str
    nodes: list[DagNode]
    edges: list[DagEdge]

    def node(self, node_id: str) -> DagNode:
        for n in self.nodes:
            if n.id == node_id:
                return n
        raise KeyError(node_id)

    def outgoing(self, node_id: str) -> list[DagEdge]:
        return sorted((e for e in self.edges if e.source == node_id), key=lambda e: e.id)

    def incoming(self, node_id: str) -> list[DagEdge]:
        return sorted((e for e in self.edges if e.target == node_id), key=lambda e: e.id)

    def step_nodes(self) -> list[DagNode]:
        return [n for n in self.nodes if n.kind == "step"]


@dataclass(frozen=True)
class Violation:
    code: str
    subject: str
    message: str


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def codes(self) -> set[str]:
        return {v.code for v in self.violations}


def extract_dag(doc: TsgDocument) -> ExecutionDag:
    """Build the execution DAG for a parsed document.

    One node per step plus start/end; the start node points at the entry
    step; every directive becomes an edge, and a standalone Terminate: line
    becomes an unconditional edge into end carrying its conclusion.
    """
    dangling = [d for d in doc.diagnostics if d.code == "dangling-target"]
    if dangling:
        details = "; ".join(f"line {d.line}: {d.message}" for d in dangling)
        raise DanglingTarget(details)

    nodes = [DagNode(START, "start", "run start")]
    for step in doc.steps:
        nodes.append(DagNode(f"step{step.id}", "step", step.title, step_ref=step.id))
    nodes.append(DagNode(END, "end", "run end"))

    edges: list[DagEdge] = []
    seen_edge_ids: set[str] = set()

    def add_edge(source: str, target: str, condition=None, conclusion=None) -> None:
        eid = edge_id(source, target)
        if eid in seen_edge_ids:
            raise DuplicateEdge(
                f"{eid}: multiple directives connect the same node pair; "
                "rewrite them as a single edge"
            )
        seen_edge_ids.add(eid)
        edges.append(DagEdge(eid, source, target, condition=condition, conclusion=conclusion))

    add_edge(START, f"step{doc.steps[0].id}")
    for step in doc.steps:
        src = f"step{step.id}"
        for directive in step.next_directives:
            cond = None
            if directive.condition is not None:
                cond = EdgeCondition(directive.condition.question, directive.condition.label)
            if directive.kind == "terminate":
                add_edge(src, END, condition=cond, conclusion=directive.conclusion or "")
            else:
                for target in directive.targets:
                    add_edge(src, f"step{target}", condition=cond)
        if step.terminal_conclusion is not None:
            add_edge(src, END, conclusion=step.terminal_conclusion)

    dag = ExecutionDag(tsg_id=doc.tsg_id, nodes=nodes, edges=edges)

    cycle = _find_cycle(dag)
    if cycle:
        raise CycleDetected("cycle through edges: " + ", ".join(cycle))
    unreachable = _unreachable_from_start(dag)
    if unreachable:
        raise Unreachable("unreachable from start: " + ", ".join(sorted(unreachable)))
    return dag


def _adjacency(dag: ExecutionDag) -> dict[str, list[str]]:
    adj: dict[str, list[str]] = {n.id: [] for n in dag.nodes}
    for e in dag.edges:
        if e.source in adj:
            adj[e.source].append(e.target)
    return adj


def _find_cycle(dag: ExecutionDag) -> list[str]:
    """Return the edge ids of one cycle, or [] when acyclic."""
    adj = _adjacency(dag)
    WHITE, GRAY, BLACK = 0, 1, 2
    color = {n: WHITE for n in adj}
    stack: list[str] = []

    def dfs(u: str) -> list[str] | None:
        color[u] = GRAY
        stack.append(u)
        for v in adj.get(u, []):
            if v not in color:
                continue
            if color[v] == GRAY:
                i = stack.index(v)
                loop = stack[i:] + [v]
                return [edge_id(a, b) for a, b in zip(loop, loop[1:])]
            if color[v] == WHITE:
                found = dfs(v)
                if found:
                    return found
        stack.pop()
        color[u] = BLACK
        return None

    for n in sorted(adj, key=node_sort_key):
        if color[n] == WHITE:
            found = dfs(n)
            if found:
                return found
    return []


def _unreachable_from_start(dag: ExecutionDag) -> set[str]:
    adj = _adjacency(dag)
    seen = set()
    frontier = [START] if START in adj else []
    while frontier:
        u = frontier.pop()
        if u in seen:
            continue
        seen.add(u)
        frontier.extend(v for v in adj.get(u, []) if v in adj)
    return {n.id for n in dag.nodes} - seen


def validate_dag(dag: ExecutionDag) -> ValidationReport:
    """Check every ExecutionDag invariant; violations are data, not errors."""
    report = ValidationReport()
    add = report.violations.append

    node_ids = [n.id for n in dag.nodes]
    id_set = set(node_ids)
    seen: set[str] = set()
    for n in dag.nodes:
        if n.id in seen:
            add(Violation("duplicate-node-id", n.id, "node id appears more than once"))
        seen.add(n.id)
        if n.kind not in ("start", "step", "end"):
            add(Violation("bad-node-kind", n.id, f"unknown kind {n.kind!r}"))
        if n.kind == "step" and not n.step_ref:
            add(Violation("missing-step-ref", n.id, "step node lacks a TSG step reference"))

    starts = [n for n in dag.nodes if n.kind == "start"]
    ends = [n for n in dag.nodes if n.kind == "end"]
    if len(starts) != 1:
        add(Violation("start-count", START, f"expected exactly 1 start node, found {len(starts)}"))
    if len(ends) != 1:
        add(Violation("end-count", END, f"expected exactly 1 end node, found {len(ends)}"))

    end_ids = {n.id for n in ends}
    seen_edges: set[str] = set()
    for e in dag.edges:
        if e.id in seen_edges:
            add(Violation("duplicate-edge-id", e.id, "edge id appears more than once"))
        seen_edges.add(e.id)
        if e.id != edge_id(e.source, e.target):
            add(
                Violation(
                    "malformed-edge-id",
                    e.id,
                    f"expected canonical id {edge_id(e.source, e.target)!r}",
                )
            )
        if e.source not in id_set or e.target not in id_set:
            add(Violation("unknown-endpoint", e.id, "edge references a node not in the DAG"))
        if e.condition is not None and (
            e.condition.label not in ("Y", "N") or not e.condition.question.strip()
        ):
            add(Violation("malformed-condition", e.id, "conditional edge needs a question and a Y/N label"))
        if e.conclusion is not None and e.target not in end_ids:
            add(Violation("conclusion-not-terminal", e.id, "conclusion on an edge not into end"))

    for n in dag.nodes:
        if n.kind == "start" and any(e.target == n.id for e in dag.edges):
            add(Violation("start-incoming", n.id, "start node has incoming edges"))
        if n.kind == "end" and any(e.source == n.id for e in dag.edges):
            add(Violation("end-outgoing", n.id, "end node has outgoing edges"))

    cycle = _find_cycle(dag)
    if cycle:
        add(Violation("cycle", cycle[0], "cycle through edges: " + ", ".join(cycle)))
        return report  # reachability is not meaningful on cyclic graphs

    for node_id in sorted(_unreachable_from_start(dag), key=node_sort_key):
        add(Violation("unreachable-node", node_id, "node not reachable from start"))

    # Every node must be able to reach end, so termination points exist on
    # every path; this subsumes "step node with no outgoing edges".
    reverse: dict[str, list[str]] = {n.id: [] for n in dag.nodes}
    for e in dag.edges:
        if e.target in reverse:
            reverse[e.target].append(e.source)
    reaches_end = set()
    frontier = [n.id for n in ends]
    while frontier:
        u = frontier.pop()
        if u in reaches_end:
            continue
        reaches_end.add(u)
        frontier.extend(reverse.get(u, []))
    for node_id in sorted(id_set - reaches_end, key=node_sort_key):
        add(Violation("end-unreachable", node_id, "no path from node to end"))

    report.violations.sort(key=lambda v: (v.code, v.subject))
    return report


def _node_obj(n: DagNode) -> dict:
    return {"id": n.id, "kind": n.kind, "description": n.description, "step_ref": n.step_ref}


def _edge_obj(e: DagEdge) -> dict:
    condition = None
    if e.condition is not None:
        condition = {"question": e.condition.question, "label": e.condition.label}
    return {
        "id": e.id,
        "from": e.source,
        "to": e.target,
        "condition": condition,
        "conclusion": e.conclusion,
    }


def serialize_dag(dag: ExecutionDag) -> str:
    """Byte-stable JSON: nodes then edges, each sorted by id."""
    obj = {
        "tsg_id": dag.tsg_id,
        "nodes": [_node_obj(n) for n in sorted(dag.nodes, key=lambda n: n.id)],
        "edges": [_edge_obj(e) for e in sorted(dag.edges, key=lambda e: e.id)],
    }
    return json.dumps(obj, indent=2, ensure_ascii=False) + "\n"


def _expect(cond: bool, path: str, message: str) -> None:
    if not cond:
        raise SchemaViolation(path, message)


def load_dag(text: str) -> ExecutionDag:
    """Parse and schema-check a DAG document produced by serialize_dag."""
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaViolation("/", f"not valid JSON: {exc}") from exc
    _expect(isinstance(obj, dict), "/", "document must be an object")
    _expect(isinstance(obj.get("nodes"), list) and obj["nodes"], "/nodes", "required non-empty array")
    _expect(isinstance(obj.get("edges"), list), "/edges", "required array")
    _expect(isinstance(obj.get("tsg_id"), str), "/tsg_id", "required string")

    nodes = []
    for i, raw in enumerate(obj["nodes"]):
        path = f"/nodes/{i}"
        _expect(isinstance(raw, dict), path, "must be an object")
        _expect(isinstance(raw.get("id"), str) and raw["id"], f"{path}/id", "required string")
        _expect(raw.get("kind") in ("start", "step", "end"), f"{path}/kind", "must be start|step|end")
        _expect(isinstance(raw.get("description"), str), f"{path}/description", "required string")
        step_ref = raw.get("step_ref")
        _expect(step_ref is None or isinstance(step_ref, str), f"{path}/step_ref", "string or null")
        nodes.append(DagNode(raw["id"], raw["kind"], raw["description"], step_ref))

    edges = []
    for i, raw in enumerate(obj["edges"]):
        path = f"/edges/{i}"
        _expect(isinstance(raw, dict), path, "must be an object")
        for key in ("id", "from", "to"):
            _expect(isinstance(raw.get(key), str) and raw[key], f"{path}/{key}", "required string")
        condition = raw.get("condition")
        cond = None
        if condition is not None:
            _expect(isinstance(condition, dict), f"{path}/condition", "object or null")
            _expect(
                isinstance(condition.get("question"), str),
                f"{path}/condition/question",
                "required string",
            )
            _expect(
                condition.get("label") in ("Y", "N"), f"{path}/condition/label", "must be Y or N"
            )
            cond = EdgeCondition(condition["question"], condition["label"])
        conclusion = raw.get("conclusion")
        _expect(
            conclusion is None or isinstance(conclusion, str), f"{path}/conclusion", "string or null"
        )
        edges.append(DagEdge(raw["id"], raw["from"], raw["to"], cond, conclusion))

    return ExecutionDag(tsg_id=obj["tsg_id"], nodes=nodes, edges=edges)


def structurally_equal(a: ExecutionDag, b: ExecutionDag) -> bool:
    key_n = lambda n: n.id  # noqa: E731
    key_e = lambda e: e.id  # noqa: E731
    return (
        a.tsg_id == b.tsg_id
        and sorted(a.nodes, key=key_n) == sorted(b.nodes, key=key_n)
        and sorted(a.edges, key=key_e) == sorted(b.edges, key=key_e)
    )
