"""Event-driven scheduler and executor pool over an execution DAG.

Every node and edge of a run holds one of three states: unknown, enabled or
disabled, and resolves at most once. The start node begins enabled; when a
node completes successfully its executor decides every outgoing edge, a
failed node (after its retries) disables all outgoing edges, and the closure
rules then propagate:

  a. an unknown node whose incoming edges are all resolved with at least one
     enabled becomes enabled and joins the ready queue;
  b. an unknown non-end node whose incoming edges are all disabled becomes
     disabled, which disables its outgoing edges, recursively;
  c. the end node becomes enabled as soon as ANY incoming edge is enabled;
     the run concludes with that edge's conclusion and everything still
     running or queued is cancelled.

The ready queue is FIFO by enqueue time with ties broken by ascending node
id; completions that land on the same virtual instant are processed in
ascending node id order, and newly ready nodes are dispatched to idle
executors before the next completion is applied, so a node can legitimately
start and then be cancelled within one virtual instant.

The virtual clock makes runs fully deterministic: a backend reports each
attempt's duration and the loop is a discrete-event simulation. Wall-clock
mode runs up to k executor threads for real and uses measured durations.
"""

from __future__ import annotations

import heapq
import json
import subprocess
import threading
import time
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable

from .dag import END, START, ExecutionDag, node_sort_key, validate_dag
from .document import TsgDocument
from .memory import MemoryRef, MemoryStore, RunScope, value_from_literal
from .queryprep import QueryTemplate


class EngineError(Exception):
    pass


class ConfigInvalid(EngineError):
    pass


class DagInvalid(EngineError):
    pass


class UnknownNode(EngineError):
    pass


class StaleOutcome(EngineError):
    pass


class IncompleteEdgeDecisions(EngineError):
    pass


class InvalidEdgeDecision(EngineError):
    pass


class BackendUnavailable(EngineError):
    pass


class ScenarioIncomplete(EngineError):
    pass


class ElementState(Enum):
    UNKNOWN = "unknown"
    ENABLED = "enabled"
    DISABLED = "disabled"


class RunStatus(Enum):
    RUNNING = "running"
    CONCLUDED = "concluded"
    EXHAUSTED = "exhausted"
    FAILED = "failed"


@dataclass(frozen=True)
class StepOutcome:
    result: str  # "success" | "failure"
    summary: str = ""
    edge_decisions: dict[str, str] | None = None  # edge id -> enable|disable
    memory_writes: tuple[str, ...] = ()
    error: str = ""
    duration: float = 0


class CancelledSignal:
    """Marker a backend returns when it honored a cancel request."""


@dataclass
class TraceEvent:
    t: float
    seq: int
    kind: str
    subject: str
    detail: dict

    def to_obj(self) -> dict:
        return {"t": self.t, "seq": self.seq, "kind": self.kind,
                "subject": self.subject, "detail": self.detail}


def trace_to_jsonl(trace: list[TraceEvent]) -> str:
    return "".join(json.dumps(ev.to_obj(), ensure_ascii=False) + "\n" for ev in trace)


@dataclass
class StepContext:
    """Everything an executor may see while working on exactly one step."""

    run_id: str
    node_id: str
    step_id: str | None
    step_title: str
    step_text: str
    incident: dict
    outgoing_edges: list[dict]
    history: list[dict]
    plugins: list[dict]  # descriptor summaries: name, params, result contract
    templates: list[str]
    memory_refs: list[dict]
    attempt: int
    store: RunScope | None = None
    cancel: threading.Event = field(default_factory=threading.Event)

    def to_obj(self) -> dict:
        return {
            "run_id": self.run_id,
            "node": self.node_id,
            "step": {"id": self.step_id, "title": self.step_title, "text": self.step_text},
            "incident": self.incident,
            "outgoing_edges": self.outgoing_edges,
            "history": self.history,
            "plugins": self.plugins,
            "templates": self.templates,
            "memory_refs": self.memory_refs,
            "attempt": self.attempt,
        }


class ExecutorBackend:
    """Contract for step execution; implementations decide the edges.

    execute() must return a StepOutcome (or a CancelledSignal after the
    context's cancel event fires). Exceptions other than EngineError are
    surfaced as failure outcomes and go through the retry machinery.
    """

    def execute(self, ctx: StepContext) -> StepOutcome | CancelledSignal:
        raise NotImplementedError


@dataclass
class RunConfig:
    max_executors: int = 1
    retry_limit: int = 2
    clock: str = "virtual"  # "virtual" | "wall"

    def validate(self) -> None:
        if self.max_executors < 1:
            raise ConfigInvalid(f"max_executors must be >= 1, got {self.max_executors}")
        if self.retry_limit < 0:
            raise ConfigInvalid(f"retry_limit must be >= 0, got {self.retry_limit}")
        if self.clock not in ("virtual", "wall"):
            raise ConfigInvalid(f"clock must be 'virtual' or 'wall', got {self.clock!r}")


@dataclass
class Bundle:
    doc: TsgDocument | None
    dag: ExecutionDag
    templates: list[QueryTemplate] = field(default_factory=list)
    fixtures_dir: object = None
    registry: object = None


class RunState:
    """Tri-state of one run plus its trace; owned by a single scheduler loop."""

    def __init__(self, dag: ExecutionDag, retry_limit: int = 2):
        self.dag = dag
        self.retry_limit = retry_limit
        self.node_state: dict[str, ElementState] = {n.id: ElementState.UNKNOWN for n in dag.nodes}
        self.edge_state: dict[str, ElementState] = {e.id: ElementState.UNKNOWN for e in dag.edges}
        self.attempts: dict[str, int] = {}
        self.failed: set[str] = set()
        self.ready: list[tuple[float, tuple, str]] = []  # heap (enqueue t, id key, node)
        self.queued: set[str] = set()
        self.running: dict[str, float] = {}  # node -> start time
        self.clock: float = 0
        self.status = RunStatus.RUNNING
        self.conclusion: str | None = None
        self.concluding_edge: str | None = None
        self.trace: list[TraceEvent] = []
        self.history: list[dict] = []
        self.memory_refs: list[MemoryRef] = []
        self._seq = 0
        self._edges_by_id = {e.id: e for e in dag.edges}
        self._outgoing = {n.id: dag.outgoing(n.id) for n in dag.nodes}
        self._in_total = {n.id: len(dag.incoming(n.id)) for n in dag.nodes}
        self._in_resolved = {n.id: 0 for n in dag.nodes}
        self._in_enabled = {n.id: 0 for n in dag.nodes}
        self.node_state[START] = ElementState.ENABLED

    # -- trace ---------------------------------------------------------------

    def emit(self, kind: str, subject: str, detail: dict | None = None) -> TraceEvent:
        event = TraceEvent(self.clock, self._seq, kind, subject, detail or {})
        self._seq += 1
        self.trace.append(event)
        return event

    # -- queue ---------------------------------------------------------------

    def enqueue(self, node_id: str, t: float) -> None:
        if node_id in self.queued or node_id in self.running:
            raise EngineError(f"{node_id} enqueued twice for one enablement")
        self.queued.add(node_id)
        heapq.heappush(self.ready, (t, node_sort_key(node_id), node_id))

    def pop_ready(self) -> str:
        _, _, node_id = heapq.heappop(self.ready)
        self.queued.discard(node_id)
        return node_id

    def mark_running(self, node_id: str, t: float) -> int:
        self.queued.discard(node_id)
        self.running[node_id] = t
        self.attempts[node_id] = self.attempts.get(node_id, 0) + 1
        return self.attempts[node_id]

    # -- state transitions ----------------------------------------------------

    def resolve_edge(self, eid: str, new_state: ElementState, via: str) -> None:
        current = self.edge_state[eid]
        if current is not ElementState.UNKNOWN:
            raise EngineError(f"edge {eid} already resolved to {current.value}")
        self.edge_state[eid] = new_state
        kind = "edge_enabled" if new_state is ElementState.ENABLED else "edge_disabled"
        self.emit(kind, eid, {"via": via})
        edge = self._edges_by_id[eid]
        target = edge.target
        if target == END:
            if new_state is ElementState.ENABLED and self.status is RunStatus.RUNNING:
                self.node_state[END] = ElementState.ENABLED
                self.status = RunStatus.CONCLUDED
                self.conclusion = edge.conclusion or ""
                self.concluding_edge = eid
            return
        self._in_resolved[target] += 1
        if new_state is ElementState.ENABLED:
            self._in_enabled[target] += 1
        if (
            self.node_state[target] is ElementState.UNKNOWN
            and self._in_resolved[target] == self._in_total[target]
        ):
            if self._in_enabled[target] > 0:
                self.node_state[target] = ElementState.ENABLED
                self.enqueue(target, self.clock)
            else:
                self.disable_node(target)

    def disable_node(self, node_id: str) -> None:
        if self.node_state[node_id] is not ElementState.UNKNOWN:
            raise EngineError(f"node {node_id} already resolved")
        self.node_state[node_id] = ElementState.DISABLED
        self.emit("node_disabled", node_id, {"reason": "all incoming edges disabled"})
        for edge in self._outgoing[node_id]:
            if self.status is not RunStatus.RUNNING:
                return
            self.resolve_edge(edge.id, ElementState.DISABLED, via=node_id)

    def outgoing_edges(self, node_id: str):
        return self._outgoing[node_id]

    def unresolved_nodes(self) -> list[str]:
        return sorted(
            (n for n, s in self.node_state.items() if s is ElementState.UNKNOWN),
            key=node_sort_key,
        )

    def disabled_nodes(self) -> list[str]:
        return sorted(
            (n for n, s in self.node_state.items() if s is ElementState.DISABLED),
            key=node_sort_key,
        )


def apply_outcome(
    dag: ExecutionDag, state: RunState, node_id: str, outcome: StepOutcome
) -> RunState:
    """Apply one step outcome and run the propagation closure.

    Success: every outgoing edge is set per the outcome's decisions (the
    decision map must cover the outgoing edges exactly, and unconditional
    edges must be enabled). Failure within the retry budget re-enqueues the
    node without touching edges; an exhausted failure disables all outgoing
    edges. Conclusion (an enabled edge into end) short-circuits propagation.
    """
    if node_id not in state.node_state:
        raise UnknownNode(node_id)
    if node_id not in state.running:
        raise StaleOutcome(f"{node_id} is not running")
    state.running.pop(node_id)
    attempt = state.attempts.get(node_id, 0)

    if outcome.result == "failure":
        if attempt <= state.retry_limit:
            state.emit(
                "node_failed",
                node_id,
                {"attempt": attempt, "error": outcome.error, "final": False},
            )
            state.emit("node_retried", node_id, {"next_attempt": attempt + 1})
            state.history.append(
                {"node": node_id, "result": "failure", "summary": outcome.error, "attempt": attempt}
            )
            state.enqueue(node_id, state.clock)
            return state
        state.emit(
            "node_failed",
            node_id,
            {"attempt": attempt, "error": outcome.error, "final": True},
        )
        state.failed.add(node_id)
        state.history.append(
            {"node": node_id, "result": "failure", "summary": outcome.error, "attempt": attempt}
        )
        for edge in state.outgoing_edges(node_id):
            if state.status is not RunStatus.RUNNING:
                break
            state.resolve_edge(edge.id, ElementState.DISABLED, via="failure")
        return state

    if outcome.result != "success":
        raise EngineError(f"outcome result must be success or failure, got {outcome.result!r}")

    outgoing = state.outgoing_edges(node_id)
    decisions = dict(outcome.edge_decisions or {})
    expected = {e.id for e in outgoing}
    missing = expected - set(decisions)
    extra = set(decisions) - expected
    if missing or extra:
        parts = []
        if missing:
            parts.append("missing: " + ", ".join(sorted(missing)))
        if extra:
            parts.append("not outgoing edges: " + ", ".join(sorted(extra)))
        raise IncompleteEdgeDecisions(f"{node_id}: " + "; ".join(parts))
    for edge in outgoing:
        decision = decisions[edge.id]
        if decision not in ("enable", "disable"):
            raise InvalidEdgeDecision(f"{edge.id}: decision must be enable|disable")
        if edge.condition is None and decision != "enable":
            raise InvalidEdgeDecision(f"{edge.id}: unconditional edges must be enabled")

    state.emit(
        "node_succeeded",
        node_id,
        {"attempt": attempt, "duration": outcome.duration, "summary": outcome.summary},
    )
    for key in sorted(outcome.memory_writes):
        state.emit("memory_put", key, {"node": node_id})
    state.history.append(
        {"node": node_id, "result": "success", "summary": outcome.summary, "attempt": attempt}
    )
    for edge in outgoing:
        if state.status is not RunStatus.RUNNING:
            break
        wanted = ElementState.ENABLED if decisions[edge.id] == "enable" else ElementState.DISABLED
        state.resolve_edge(edge.id, wanted, via=node_id)
    return state


@dataclass
class RunResult:
    status: RunStatus
    conclusion: str | None
    trace: list[TraceEvent]
    makespan: float
    executed: list[str]
    cancelled: list[str]
    state: "RunState | None" = None

    def trace_jsonl(self) -> str:
        return trace_to_jsonl(self.trace)


def _complete_start(state: RunState) -> None:
    for edge in state.outgoing_edges(START):
        if state.status is not RunStatus.RUNNING:
            break
        state.resolve_edge(edge.id, ElementState.ENABLED, via=START)


def _build_context(
    bundle: Bundle,
    state: RunState,
    node_id: str,
    incident: dict,
    run_id: str,
    scope: RunScope | None,
    plugin_descriptors: list[dict],
) -> StepContext:
    node = bundle.dag.node(node_id)
    step_title, step_text = node.description, ""
    if bundle.doc is not None and node.step_ref is not None:
        try:
            step = bundle.doc.step(node.step_ref)
            step_title, step_text = step.title, step.body_text()
        except KeyError:
            pass
    edges = [
        {
            "id": e.id,
            "to": e.target,
            "condition": (
                {"question": e.condition.question, "label": e.condition.label}
                if e.condition
                else None
            ),
            "conclusion": e.conclusion,
        }
        for e in state.outgoing_edges(node_id)
    ]
    return StepContext(
        run_id=run_id,
        node_id=node_id,
        step_id=node.step_ref,
        step_title=step_title,
        step_text=step_text,
        incident=incident,
        outgoing_edges=edges,
        history=list(state.history),
        plugins=plugin_descriptors,
        templates=[t.name for t in bundle.templates],
        memory_refs=[{"key": r.key, "kind": r.kind} for r in state.memory_refs],
        attempt=state.attempts.get(node_id, 0) + 1,
        store=scope,
    )


def _record_memory_refs(state: RunState, scope: RunScope | None, outcome: StepOutcome) -> None:
    if scope is None:
        return
    for key in sorted(outcome.memory_writes):
        state.memory_refs.append(scope.ref(key))


def _cancel_remaining(state: RunState) -> None:
    for node_id in sorted(state.running, key=node_sort_key):
        state.emit("node_cancelled", node_id, {"phase": "running"})
    state.running.clear()
    while state.ready:
        node_id = state.pop_ready()
        state.emit("node_cancelled", node_id, {"phase": "queued"})


def _finish(state: RunState) -> None:
    if state.status is RunStatus.CONCLUDED:
        _cancel_remaining(state)
        detail = {"status": "concluded", "conclusion": state.conclusion,
                  "edge": state.concluding_edge}
    else:
        state.status = RunStatus.EXHAUSTED
        detail = {
            "status": "exhausted",
            "failed": sorted(state.failed, key=node_sort_key),
            "disabled": state.disabled_nodes(),
        }
    state.emit("run_terminated", "run", detail)


def run(
    bundle: Bundle,
    backend: ExecutorBackend,
    config: RunConfig | None = None,
    incident: dict | None = None,
    store: MemoryStore | None = None,
    run_id: str | None = None,
) -> RunResult:
    """Execute a bundle's DAG against a backend and return status plus trace."""
    config = config or RunConfig()
    config.validate()
    report = validate_dag(bundle.dag)
    if not report.ok:
        raise DagInvalid("; ".join(f"{v.code}({v.subject})" for v in report.violations))

    incident = incident or {}
    if run_id is None:
        run_id = f"{bundle.dag.tsg_id}/{incident.get('id', 'run')}"
    scope = RunScope(store if store is not None else MemoryStore(), run_id)
    plugin_descriptors = []
    if bundle.registry is not None:
        plugin_descriptors = [
            {
                "name": d.name,
                "params": [
                    {"name": p.name, "kind": p.kind, "required": p.required} for p in d.params
                ],
                "result": d.result,
            }
            for d in bundle.registry.descriptors()
        ]

    state = RunState(bundle.dag, retry_limit=config.retry_limit)
    state.emit(
        "run_started",
        "run",
        {
            "tsg_id": bundle.dag.tsg_id,
            "executors": config.max_executors,
            "retry_limit": config.retry_limit,
            "clock": config.clock,
        },
    )

    ctx_for = lambda node: _build_context(  # noqa: E731
        bundle, state, node, incident, run_id, scope, plugin_descriptors
    )
    if config.clock == "virtual":
        _loop_virtual(state, backend, config.max_executors, ctx_for, scope)
    else:
        _loop_wall(state, backend, config.max_executors, ctx_for, scope)

    executed, seen = [], set()
    for ev in state.trace:
        if ev.kind == "node_started" and ev.subject not in seen:
            seen.add(ev.subject)
            executed.append(ev.subject)
    cancelled = [ev.subject for ev in state.trace if ev.kind == "node_cancelled"]
    return RunResult(
        status=state.status,
        conclusion=state.conclusion,
        trace=state.trace,
        makespan=state.trace[-1].t,
        executed=executed,
        cancelled=cancelled,
        state=state,
    )


def _execute_guarded(backend: ExecutorBackend, ctx: StepContext) -> StepOutcome | CancelledSignal:
    try:
        return backend.execute(ctx)
    except EngineError:
        raise
    except Exception as exc:  # backend-defined errors become failure outcomes
        return StepOutcome(result="failure", error=f"{type(exc).__name__}: {exc}")


def _loop_virtual(
    state: RunState,
    backend: ExecutorBackend,
    k: int,
    ctx_for: Callable[[str], StepContext],
    scope: RunScope | None,
) -> None:
    completions: list[tuple[float, tuple, str, StepOutcome]] = []
    _complete_start(state)
    while state.status is RunStatus.RUNNING:
        while state.ready and len(state.running) < k:
            node_id = state.pop_ready()
            ctx = ctx_for(node_id)
            attempt = state.mark_running(node_id, state.clock)
            state.emit("node_started", node_id, {"attempt": attempt})
            outcome = _execute_guarded(backend, ctx)
            if isinstance(outcome, CancelledSignal):
                raise EngineError(f"{node_id}: backend returned a cancel marker unrequested")
            heapq.heappush(
                completions,
                (state.clock + outcome.duration, node_sort_key(node_id), node_id, outcome),
            )
        if not state.running:
            break
        t, _, node_id, outcome = heapq.heappop(completions)
        state.clock = t
        apply_outcome(state.dag, state, node_id, outcome)
        if outcome.result == "success":
            _record_memory_refs(state, scope, outcome)
    _finish(state)


def _loop_wall(
    state: RunState,
    backend: ExecutorBackend,
    k: int,
    ctx_for: Callable[[str], StepContext],
    scope: RunScope | None,
) -> None:
    import queue as queue_mod

    done: queue_mod.Queue = queue_mod.Queue()
    cancel_events: dict[str, threading.Event] = {}
    t0 = time.monotonic()
    now = lambda: time.monotonic() - t0  # noqa: E731

    def worker(node_id: str, ctx: StepContext) -> None:
        begun = time.monotonic()
        try:
            outcome = _execute_guarded(backend, ctx)
        except EngineError as exc:  # re-raised on the scheduler thread
            done.put((node_id, exc, time.monotonic() - begun))
            return
        done.put((node_id, outcome, time.monotonic() - begun))

    _complete_start(state)
    while state.status is RunStatus.RUNNING:
        while state.ready and len(state.running) < k:
            node_id = state.pop_ready()
            ctx = ctx_for(node_id)
            cancel_events[node_id] = ctx.cancel
            attempt = state.mark_running(node_id, now())
            state.clock = now()
            state.emit("node_started", node_id, {"attempt": attempt})
            threading.Thread(target=worker, args=(node_id, ctx), daemon=True).start()
        if not state.running:
            break
        node_id, outcome, elapsed = done.get()
        state.clock = now()
        if isinstance(outcome, EngineError):
            raise outcome
        if isinstance(outcome, CancelledSignal):
            raise EngineError(f"{node_id}: backend returned a cancel marker unrequested")
        apply_outcome(state.dag, state, node_id, replace(outcome, duration=elapsed))
        if outcome.result == "success":
            _record_memory_refs(state, scope, outcome)
        if state.status is RunStatus.CONCLUDED:
            for running_id in state.running:
                cancel_events[running_id].set()
    state.clock = now()
    _finish(state)


# -- backends -----------------------------------------------------------------

class ScriptedBackend(ExecutorBackend):
    """Deterministic backend replaying per-node attempt scripts.

    The n-th execution of a node replays its n-th attempt; the last attempt
    repeats if the node is retried beyond the script. Attempt latencies
    drive the virtual clock (and real sleeps in wall mode).
    """

    def __init__(self, steps: dict[str, list[dict]], wall: bool = False):
        self._steps = steps
        self.wall = wall

    @classmethod
    def from_scenario(cls, scenario: dict, wall: bool = False) -> "ScriptedBackend":
        steps = {}
        for node_id, spec in scenario.get("steps", {}).items():
            steps[node_id] = spec["attempts"] if isinstance(spec, dict) else list(spec)
        return cls(steps, wall=wall)

    def execute(self, ctx: StepContext) -> StepOutcome | CancelledSignal:
        attempts = self._steps.get(ctx.node_id)
        if not attempts:
            raise ScenarioIncomplete(f"scenario has no attempts for {ctx.node_id}")
        attempt = attempts[min(ctx.attempt - 1, len(attempts) - 1)]
        latency = attempt.get("latency", 0)
        if self.wall and latency:
            if ctx.cancel.wait(timeout=latency):
                return CancelledSignal()
        if ctx.store is not None:
            for key in sorted(attempt.get("memory_writes", {})):
                ctx.store.put(key, value_from_literal(attempt["memory_writes"][key]))
        if attempt.get("result") == "failure":
            return StepOutcome(
                result="failure",
                error=attempt.get("error", "scripted failure"),
                duration=latency,
            )
        return StepOutcome(
            result="success",
            summary=attempt.get("summary", ""),
            edge_decisions=dict(attempt.get("edge_decisions", {})),
            memory_writes=tuple(sorted(attempt.get("memory_writes", {}))),
            duration=latency,
        )


class ProcessBackend(ExecutorBackend):
    """Line-protocol backend: one StepContext JSON per line to the child's
    stdin, one StepOutcome JSON per line from its stdout.

    The child is a single long-lived process, so steps are serialized with a
    lock. A cancel request closes the child's stdin; the engine reports the
    step as cancelled, not failed. The child may return memory writes as
    {key: literal}; this wrapper applies them to the run's store.
    """

    def __init__(self, command: list[str]):
        self.command = command
        self._proc: subprocess.Popen | None = None
        self._lock = threading.Lock()

    def _child(self) -> subprocess.Popen:
        if self._proc is None or self._proc.poll() is not None:
            try:
                self._proc = subprocess.Popen(
                    self.command,
                    stdin=subprocess.PIPE,
                    stdout=subprocess.PIPE,
                    text=True,
                    bufsize=1,
                )
            except OSError as exc:
                raise BackendUnavailable(f"cannot start {self.command!r}: {exc}") from exc
        return self._proc

    def close(self) -> None:
        if self._proc is not None and self._proc.poll() is None:
            self._proc.stdin.close()
            self._proc.wait(timeout=5)

    def execute(self, ctx: StepContext) -> StepOutcome | CancelledSignal:
        with self._lock:
            child = self._child()
            if ctx.cancel.is_set():
                return CancelledSignal()
            child.stdin.write(json.dumps(ctx.to_obj(), ensure_ascii=False) + "\n")
            child.stdin.flush()
            line = child.stdout.readline()
        if not line:
            if ctx.cancel.is_set():
                return CancelledSignal()
            return StepOutcome(result="failure", error="backend process closed its output")
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            return StepOutcome(result="failure", error=f"bad outcome line: {exc}")
        if obj.get("result") == "cancelled":
            return CancelledSignal()
        writes = obj.get("memory_writes", {}) or {}
        if ctx.store is not None:
            for key in sorted(writes):
                ctx.store.put(key, value_from_literal(writes[key]))
        return StepOutcome(
            result=obj.get("result", "failure"),
            summary=obj.get("summary", ""),
            edge_decisions=obj.get("edge_decisions") or {},
            memory_writes=tuple(sorted(writes)),
            error=obj.get("error", ""),
            duration=obj.get("duration", 0),
        )
