"""Deterministic discrete-event kernel.

Components exchange messages through a single event queue ordered by
(time, insertion sequence).  A component's handler is a state-machine
transition function: it receives the component state and a message and
returns the new state plus a list of actions (execute a task, send a
message, read a sensor, actuate, complete or abort the interaction).

Task executions advance simulated time by the task's configured duration
cost and, for security-related tasks, append one cost record per configured
metric.  Nothing depends on wall-clock time or on hash ordering, so a run
is byte-for-byte reproducible.
"""

from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Iterable, Optional, Sequence

from .errors import (
    DeadlockDetected,
    ScenarioInvalid,
    UnknownComponent,
    UnknownTask,
)
from .ledger import SECURITY_RELATED, CostLedger, CostRecord, TaskSpec
from .metrics import MEASURED, MetricRegistry, as_fraction

SENSING = "sensing"
ACTUATION = "actuation"
COMPUTATION = "computation"
COMMUNICATION = "communication"
CAPABILITIES = frozenset({SENSING, ACTUATION, COMPUTATION, COMMUNICATION})

# Trace entry kinds.
MESSAGE_DELIVERY = "message_delivery"
TASK_START = "task_start"
TASK_END = "task_end"
SENSOR_READING = "sensor_reading"
ACTUATOR_COMMAND = "actuator_command"

RUNNING = "running"
COMPLETED = "completed"
ABORTED = "aborted"

TRACE_FIELDS = ("time", "interaction_id", "component_id", "task_id", "kind", "outcome")


@dataclass(frozen=True)
class Message:
    interaction_id: str
    sender: str
    recipient: str
    kind: str
    payload: Any = None


@dataclass(frozen=True)
class Event:
    """A scheduled occurrence; the queue currently carries message deliveries."""

    time: Fraction
    seq: int
    kind: str
    payload: Any


# --- handler actions ---


@dataclass(frozen=True)
class Execute:
    """Run a task from the component's task table at the current local time."""

    task_id: str
    outcome: str = "ok"


@dataclass(frozen=True)
class Send:
    to: str
    kind: str
    payload: Any = None


@dataclass(frozen=True)
class ReadSensor:
    value: Any


@dataclass(frozen=True)
class Actuate:
    command: str


@dataclass(frozen=True)
class Complete:
    pass


@dataclass(frozen=True)
class Abort:
    reason: str


Action = Any
Handler = Callable[[Any, Message], tuple[Any, Sequence[Action]]]


@dataclass
class Component:
    """A CPS component: capabilities, a task table, and a message handler."""

    component_id: str
    label: str
    capabilities: frozenset[str] = frozenset()
    tasks: dict[str, TaskSpec] = field(default_factory=dict)
    handler: Optional[Handler] = None
    initial_state: Any = None

    def __post_init__(self):
        unknown = set(self.capabilities) - CAPABILITIES
        if unknown:
            raise ValueError(f"unknown capabilities: {sorted(unknown)}")


@dataclass(frozen=True)
class TraceEntry:
    time: Fraction
    component_id: str
    task_id: Optional[str]
    kind: str
    outcome: str


@dataclass
class InteractionTrace:
    """Ordered log of what one interaction executed, with a terminal status."""

    interaction_id: str
    entries: list[TraceEntry] = field(default_factory=list)
    status: str = RUNNING
    abort_reason: Optional[str] = None

    @property
    def terminal(self) -> bool:
        return self.status != RUNNING

    def task_ids(self, kind: str = TASK_END) -> list[str]:
        return [e.task_id for e in self.entries if e.kind == kind]

    def has_kind(self, kind: str) -> bool:
        return any(e.kind == kind for e in self.entries)


@dataclass(frozen=True)
class InteractionPlan:
    """Declares one interaction: its kickoff messages and mandatory tasks."""

    interaction_id: str
    kickoff: tuple[Message, ...]
    start_time: Fraction = Fraction(0)
    mandatory_tasks: frozenset[str] = frozenset()


@dataclass
class ScenarioPlan:
    """A runnable scenario: components, metrics, and planned interactions."""

    name: str
    metrics: MetricRegistry
    components: list[Component]
    interactions: list[InteractionPlan]
    time_metric: Optional[str] = None
    link_latency: Fraction = Fraction(0)

    def merged_tasks(self) -> dict[str, TaskSpec]:
        merged: dict[str, TaskSpec] = {}
        for comp in self.components:
            for task_id, spec in comp.tasks.items():
                if task_id in merged and merged[task_id] != spec:
                    raise ScenarioInvalid(
                        f"task {task_id!r} declared twice with different specs"
                    )
                merged[task_id] = spec
        return merged


@dataclass
class SimResult:
    traces: list[InteractionTrace]
    ledger: CostLedger
    seed: int

    def trace(self, interaction_id: str) -> InteractionTrace:
        for t in self.traces:
            if t.interaction_id == interaction_id:
                return t
        raise KeyError(interaction_id)


class Simulation:
    """Single-threaded event loop over a ScenarioPlan.

    The seed is accepted for interface stability and echoed in results; all
    shipped scenarios are fully deterministic and do not consume randomness.
    """

    def __init__(self, plan: ScenarioPlan, seed: int = 0):
        self.plan = plan
        self.seed = seed
        self.components = {c.component_id: c for c in plan.components}
        if len(self.components) != len(plan.components):
            raise ScenarioInvalid("duplicate component ids")
        self._validate(plan)
        self.ledger = CostLedger(plan.metrics, plan.merged_tasks())
        self.clock = Fraction(0)
        self._states = {c.component_id: c.initial_state for c in plan.components}
        self._queue: list[Event] = []
        self._seq = itertools.count()
        self._traces: dict[str, InteractionTrace] = {}
        self._trace_order: list[str] = []

    def _validate(self, plan: ScenarioPlan) -> None:
        for comp in plan.components:
            for task in comp.tasks.values():
                for metric_id in task.configured_costs:
                    if metric_id not in plan.metrics:
                        raise ScenarioInvalid(
                            f"task {task.task_id!r} costs reference "
                            f"unregistered metric {metric_id!r}"
                        )
        if plan.time_metric is not None and plan.time_metric not in plan.metrics:
            raise ScenarioInvalid(
                f"time metric {plan.time_metric!r} is not registered"
            )
        ids = {c.component_id for c in plan.components}
        for plan_i in plan.interactions:
            for msg in plan_i.kickoff:
                if msg.recipient not in ids:
                    raise ScenarioInvalid(
                        f"kickoff of {plan_i.interaction_id!r} targets unknown "
                        f"component {msg.recipient!r}"
                    )

    # --- traces ---

    def trace_for(self, interaction_id: str) -> InteractionTrace:
        if interaction_id not in self._traces:
            self._traces[interaction_id] = InteractionTrace(interaction_id)
            self._trace_order.append(interaction_id)
        return self._traces[interaction_id]

    def _log(self, interaction_id, time, component_id, task_id, kind, outcome):
        self.trace_for(interaction_id).entries.append(
            TraceEntry(
                time=time,
                component_id=component_id,
                task_id=task_id,
                kind=kind,
                outcome=outcome,
            )
        )

    # --- scheduling ---

    def send(
        self,
        sender: str,
        recipient: str,
        kind: str,
        payload: Any = None,
        *,
        interaction_id: str,
        at: Optional[Fraction] = None,
    ) -> Event:
        """Schedule a message delivery at ``at`` plus the link latency.

        Deliveries on the same ordered (sender, recipient) pair are FIFO:
        equal delivery times are broken by insertion sequence.
        """
        for cid in (sender, recipient):
            if cid not in self.components:
                raise UnknownComponent(f"component not registered: {cid!r}")
        when = (self.clock if at is None else at) + self.plan.link_latency
        msg = Message(
            interaction_id=interaction_id,
            sender=sender,
            recipient=recipient,
            kind=kind,
            payload=payload,
        )
        event = Event(time=when, seq=next(self._seq), kind=MESSAGE_DELIVERY, payload=msg)
        heapq.heappush(self._queue, (event.time, event.seq, event))
        return event

    # --- task execution ---

    def execute_task(
        self,
        component_id: str,
        task_id: str,
        interaction_id: str,
        *,
        at: Optional[Fraction] = None,
        outcome: str = "ok",
    ) -> Fraction:
        """Execute one task: advance time by its duration cost and, if it is
        security-related, append one cost record per configured metric.

        Returns the task's end time.
        """
        component = self.components.get(component_id)
        if component is None:
            raise UnknownComponent(f"component not registered: {component_id!r}")
        task = component.tasks.get(task_id)
        if task is None:
            raise UnknownTask(
                f"task {task_id!r} not in task table of {component_id!r}"
            )
        start = self.clock if at is None else at
        duration = Fraction(0)
        if self.plan.time_metric is not None:
            duration = task.configured_costs.get(self.plan.time_metric, Fraction(0))
        end = start + duration
        self._log(interaction_id, start, component_id, task_id, TASK_START, "ok")
        if task.security_related:
            for metric_id, configured in task.configured_costs.items():
                metric = self.plan.metrics.get(metric_id)
                value = end - start if metric.mode == MEASURED else configured
                self.ledger.record(
                    CostRecord(
                        interaction_id=interaction_id,
                        component_id=component_id,
                        task_id=task_id,
                        metric_id=metric_id,
                        value=value,
                        unit=metric.unit,
                    )
                )
        self._log(interaction_id, end, component_id, task_id, TASK_END, outcome)
        if at is None:
            self.clock = end
        return end

    # --- event loop ---

    def _dispatch(self, msg: Message, at: Fraction) -> None:
        trace = self.trace_for(msg.interaction_id)
        if trace.terminal:
            return  # late message for a finished interaction
        component = self.components.get(msg.recipient)
        if component is None:
            raise UnknownComponent(f"message to unknown component: {msg.recipient!r}")
        self._log(msg.interaction_id, at, msg.recipient, None, MESSAGE_DELIVERY, msg.kind)
        if component.handler is None:
            return
        state, actions = component.handler(self._states[msg.recipient], msg)
        self._states[msg.recipient] = state
        cursor = at
        for action in actions:
            if isinstance(action, Execute):
                cursor = self.execute_task(
                    msg.recipient,
                    action.task_id,
                    msg.interaction_id,
                    at=cursor,
                    outcome=action.outcome,
                )
            elif isinstance(action, Send):
                self.send(
                    msg.recipient,
                    action.to,
                    action.kind,
                    action.payload,
                    interaction_id=msg.interaction_id,
                    at=cursor,
                )
            elif isinstance(action, ReadSensor):
                self._log(
                    msg.interaction_id,
                    cursor,
                    msg.recipient,
                    None,
                    SENSOR_READING,
                    str(action.value),
                )
            elif isinstance(action, Actuate):
                self._log(
                    msg.interaction_id,
                    cursor,
                    msg.recipient,
                    None,
                    ACTUATOR_COMMAND,
                    action.command,
                )
            elif isinstance(action, Complete):
                self._complete(trace)
            elif isinstance(action, Abort):
                trace.status = ABORTED
                trace.abort_reason = action.reason
            else:
                raise ScenarioInvalid(f"handler returned unknown action: {action!r}")

    def _complete(self, trace: InteractionTrace) -> None:
        plan = next(
            (p for p in self.plan.interactions if p.interaction_id == trace.interaction_id),
            None,
        )
        if plan is not None:
            done = set(trace.task_ids(TASK_END))
            missing = plan.mandatory_tasks - done
            if missing:
                raise ScenarioInvalid(
                    f"interaction {trace.interaction_id!r} completed without "
                    f"mandatory tasks: {sorted(missing)}"
                )
        trace.status = COMPLETED

    def run(self) -> SimResult:
        for plan_i in self.plan.interactions:
            self.trace_for(plan_i.interaction_id)
            for msg in plan_i.kickoff:
                self.send(
                    msg.sender,
                    msg.recipient,
                    msg.kind,
                    msg.payload,
                    interaction_id=msg.interaction_id,
                    at=plan_i.start_time,
                )
        while self._queue:
            when, _seq, event = heapq.heappop(self._queue)
            self.clock = max(self.clock, when)
            self._dispatch(event.payload, when)
        stuck = [t.interaction_id for t in self._traces.values() if not t.terminal]
        if stuck:
            raise DeadlockDetected(stuck)
        traces = [self._traces[iid] for iid in self._trace_order]
        return SimResult(traces=traces, ledger=self.ledger, seed=self.seed)


def run(plan: ScenarioPlan, seed: int = 0) -> SimResult:
    """Run a scenario plan to completion; identical inputs give identical output."""
    return Simulation(plan, seed=seed).run()


# --- trace export (one line per trace entry, deterministic order) ---


def write_traces(traces: Iterable[InteractionTrace], stream) -> None:
    import csv

    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(TRACE_FIELDS)
    for trace in traces:
        for e in trace.entries:
            writer.writerow(
                (
                    str(e.time),
                    trace.interaction_id,
                    e.component_id,
                    e.task_id or "",
                    e.kind,
                    e.outcome,
                )
            )


def traces_to_text(traces: Iterable[InteractionTrace]) -> str:
    import io

    buf = io.StringIO()
    write_traces(traces, buf)
    return buf.getvalue()
