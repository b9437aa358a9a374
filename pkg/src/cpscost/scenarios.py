"""The two shipped use cases and the ordering what-if comparison.

* Local-cloud on-boarding: a device and the cloud walk an eight-step
  enrollment (steps 3..8 are security-related) that establishes a chain of
  trust; completed devices enter the :class:`TrustRegistry`.
* Closed-loop temperature control: a sensor device checks the peer's
  trustworthiness, encrypts its reading, and ships it to an actuator device
  that verifies, decrypts, and cools the room when the reading exceeds the
  limit.  The ``limit_first`` ordering moves the limit check directly after
  the sensor reading, skipping every security task while the reading stays
  at or below the limit.

Handlers are state-machine transition functions for the simulation kernel;
all cost accounting flows through the kernel's task execution.
"""

from __future__ import annotations

import hashlib
import hmac
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Mapping, Optional, Sequence

from .errors import (
    DecryptFailure,
    RejectedAtStep,
    ScenarioAbort,
    ScenarioInvalid,
    TrustFailure,
    UntrustedRequester,
)
from .ledger import (
    CostLedger,
    CostRecord,
    RollupNode,
    SECURITY_RELATED,
    TaskSpec,
)
from .metrics import MetricRegistry, as_fraction
from .simkernel import (
    ABORTED,
    ACTUATOR_COMMAND,
    Abort,
    Actuate,
    Complete,
    Component,
    Execute,
    InteractionPlan,
    InteractionTrace,
    Message,
    ReadSensor,
    ScenarioPlan,
    Send,
    SimResult,
    Simulation,
)

BASELINE = "baseline"
LIMIT_FIRST = "limit_first"
ORDERINGS = (BASELINE, LIMIT_FIRST)

# On-boarding phases, in the only order they may be traversed.
UNENROLLED = "unenrolled"
PHASE_ORDER = (
    UNENROLLED,
    "device_published",
    "authenticated",
    "system_published",
    "system_authorised",
    "service_published",
    "onboarded",
)
REJECTED = "rejected"

_ONBOARDING_DEVICE_TASKS = ("1", "3", "5", "7")
_ONBOARDING_CLOUD_TASKS = ("2", "4", "6", "8")
_ONBOARDING_SECURITY_STEPS = (3, 4, 5, 6, 7, 8)


@dataclass
class Credentials:
    """Presence flags for the three credentials checked during on-boarding."""

    device_key: bool = True
    sw_key: bool = True
    local_cloud_sw_key: bool = True


@dataclass
class OnboardingState:
    device_id: str
    phase: str = UNENROLLED
    credentials: Credentials = field(default_factory=Credentials)
    rejected_step: Optional[int] = None
    rejected_reason: Optional[str] = None

    def advance(self, phase: str) -> None:
        if self.phase == REJECTED:
            raise ScenarioInvalid(f"{self.device_id}: cannot advance after rejection")
        current = PHASE_ORDER.index(self.phase)
        target = PHASE_ORDER.index(phase)
        if target != current + 1:
            raise ScenarioInvalid(
                f"{self.device_id}: phase cannot skip from {self.phase} to {phase}"
            )
        self.phase = phase

    def reject(self, step: int, reason: str) -> None:
        self.phase = REJECTED
        self.rejected_step = step
        self.rejected_reason = reason

    @property
    def onboarded(self) -> bool:
        return self.phase == "onboarded"


class TrustRegistry:
    """The set of device ids that completed on-boarding; nothing else grants trust."""

    def __init__(self, onboarded: Sequence[str] = ()):
        self._onboarded = set(onboarded)

    def add(self, device_id: str) -> None:
        self._onboarded.add(device_id)

    def __contains__(self, device_id: str) -> bool:
        return device_id in self._onboarded

    @property
    def onboarded(self) -> frozenset[str]:
        return frozenset(self._onboarded)


def check_trustworthiness(registry: TrustRegistry, requester: str, subject: str) -> bool:
    """True iff ``subject`` completed on-boarding.

    The requester must itself be on-boarded to ask.
    """
    if requester not in registry:
        raise UntrustedRequester(f"requester {requester!r} is not on-boarded")
    return subject in registry


def session_key(registry: TrustRegistry, a: str, b: str) -> str:
    """Stand-in shared key for two on-boarded parties.

    Real key agreement is out of scope; on-boarding both parties is the
    stand-in precondition, and the key is a deterministic function of the
    pair so runs are reproducible.
    """
    if a not in registry or b not in registry:
        raise TrustFailure(
            f"session key requires both parties on-boarded: {a!r}, {b!r}"
        )
    lo, hi = sorted((a, b))
    return f"lc-session:{lo}:{hi}"


# --- deterministic authenticated encryption stand-in ---


def _keystream(key: str, n: int) -> bytes:
    out = bytearray()
    counter = 0
    while len(out) < n:
        out.extend(hashlib.sha256(f"{key}:{counter}".encode()).digest())
        counter += 1
    return bytes(out[:n])


def _tag(key: str, body: str) -> str:
    return hmac.new(key.encode(), body.encode(), hashlib.sha256).hexdigest()[:16]


def encrypt(payload: str, key: str) -> str:
    """Reversible keyed transform with an integrity tag; not real cryptography."""
    data = payload.encode("utf-8")
    body = bytes(x ^ k for x, k in zip(data, _keystream(key, len(data)))).hex()
    return f"{body}:{_tag(key, body)}"


def decrypt(ciphertext: str, key: str) -> str:
    body, sep, tag = ciphertext.rpartition(":")
    if not sep or not hmac.compare_digest(tag, _tag(key, body)):
        raise DecryptFailure("integrity check failed: wrong key or tampered data")
    try:
        data = bytes.fromhex(body)
    except ValueError:
        raise DecryptFailure("ciphertext body is not valid hex") from None
    return bytes(x ^ k for x, k in zip(data, _keystream(key, len(data)))).decode("utf-8")


def _corrupt(ciphertext: str) -> str:
    body, _, tag = ciphertext.rpartition(":")
    if not body:
        return f"00:{tag}"
    flipped = "0" if body[0] != "0" else "f"
    return flipped + body[1:] + ":" + tag


# --- on-boarding procedure ---


@dataclass
class OnboardingSetup:
    """Cast and task tables for the on-boarding procedure.

    ``device_tasks`` holds tasks 1/3/5/7 (shared by every device),
    ``cloud_tasks`` tasks 2/4/6/8.
    """

    metrics: MetricRegistry
    device_tasks: Mapping[str, TaskSpec]
    cloud_tasks: Mapping[str, TaskSpec]
    cloud_id: str = "local-cloud"
    cloud_label: str = "Arrowhead local cloud"
    device_labels: Mapping[str, str] = field(default_factory=dict)
    time_metric: Optional[str] = "duration"

    def __post_init__(self):
        for required, table, side in (
            (_ONBOARDING_DEVICE_TASKS, self.device_tasks, "device"),
            (_ONBOARDING_CLOUD_TASKS, self.cloud_tasks, "cloud"),
        ):
            missing = [t for t in required if t not in table]
            if missing:
                raise ScenarioInvalid(f"{side} task table missing tasks: {missing}")

    def new_ledger(self) -> CostLedger:
        tasks = dict(self.device_tasks)
        tasks.update(self.cloud_tasks)
        return CostLedger(self.metrics, tasks)

    def device_component(self, device_id: str, handler=None, state=None) -> Component:
        return Component(
            component_id=device_id,
            label=self.device_labels.get(device_id, device_id),
            capabilities=frozenset({"computation", "communication"}),
            tasks=dict(self.device_tasks),
            handler=handler,
            initial_state=state,
        )

    def cloud_component(self, handler=None) -> Component:
        return Component(
            component_id=self.cloud_id,
            label=self.cloud_label,
            capabilities=frozenset({"computation", "communication"}),
            tasks=dict(self.cloud_tasks),
            handler=handler,
        )


class _DeviceEnrollment:
    """Device side of the on-boarding chain: publish records, track the phase."""

    def __init__(self, device_id, cloud_id, fail_at=None):
        self.device_id = device_id
        self.cloud_id = cloud_id
        self.fail_at = fail_at

    def _publish(self, state, step, task_id, next_phase, send_kind, payload=None):
        if self.fail_at == step:
            reason = f"publish failed at device (injected at step {step})"
            state.reject(step, reason)
            return [
                Execute(task_id, outcome=f"failed: {reason}"),
                Abort(f"rejected at step {step}: {reason}"),
            ]
        state.advance(next_phase)
        return [Execute(task_id), Send(self.cloud_id, send_kind, payload)]

    def __call__(self, state: OnboardingState, msg: Message):
        kind = msg.kind
        if kind == "begin":
            return state, [Execute("1"), Send(self.cloud_id, "connect")]
        if kind == "connected":
            creds = state.credentials
            actions = self._publish(
                state,
                3,
                "3",
                "device_published",
                "publish_device",
                {"device_key": creds.device_key},
            )
            return state, actions
        if kind == "authenticated":
            state.advance("authenticated")
            creds = state.credentials
            actions = self._publish(
                state,
                5,
                "5",
                "system_published",
                "publish_system",
                {
                    "sw_key": creds.sw_key,
                    "local_cloud_sw_key": creds.local_cloud_sw_key,
                },
            )
            return state, actions
        if kind == "authorised":
            state.advance("system_authorised")
            actions = self._publish(
                state, 7, "7", "service_published", "publish_service", {"record": True}
            )
            return state, actions
        if kind == "onboarded":
            state.advance("onboarded")
            return state, [Complete()]
        if kind == "rejected":
            step, reason = msg.payload
            state.reject(step, reason)
            return state, [Abort(f"rejected at step {step}: {reason}")]
        raise ScenarioInvalid(f"device got unexpected message kind {kind!r}")


class _CloudEnrollment:
    """Cloud side: authenticate and authorise, admit to the trust registry."""

    def __init__(self, registry: TrustRegistry, fail_at: Mapping[str, int]):
        self.registry = registry
        self.fail_at = dict(fail_at)

    def _check(self, device_id, step, task_id, ok, reason, success_kind):
        if self.fail_at.get(device_id) == step:
            ok, reason = False, f"check refused (injected at step {step})"
        if ok:
            return [Execute(task_id), Send(device_id, success_kind)]
        return [
            Execute(task_id, outcome=f"rejected: {reason}"),
            Send(device_id, "rejected", (step, reason)),
        ]

    def __call__(self, state, msg: Message):
        device_id = msg.sender
        kind = msg.kind
        if kind == "connect":
            return state, [Execute("2"), Send(device_id, "connected")]
        if kind == "publish_device":
            ok = bool(msg.payload.get("device_key"))
            return state, self._check(
                device_id, 4, "4", ok, "missing device-key", "authenticated"
            )
        if kind == "publish_system":
            missing = [
                name
                for name in ("sw_key", "local_cloud_sw_key")
                if not msg.payload.get(name)
            ]
            ok = not missing
            reason = f"missing {', '.join(missing).replace('_', '-')}" if missing else ""
            return state, self._check(device_id, 6, "6", ok, reason, "authorised")
        if kind == "publish_service":
            ok = bool(msg.payload.get("record"))
            actions = self._check(
                device_id, 8, "8", ok, "invalid service record", "onboarded"
            )
            if ok:
                self.registry.add(device_id)
            return state, actions
        raise ScenarioInvalid(f"cloud got unexpected message kind {kind!r}")


def onboarding_interaction_id(device_id: str) -> str:
    return f"onboarding-{device_id}"


def onboarding_plan(
    setup: OnboardingSetup,
    device_ids: Sequence[str],
    *,
    registry: Optional[TrustRegistry] = None,
    credentials: Optional[Mapping[str, Credentials]] = None,
    fail_at: Optional[Mapping[str, int]] = None,
):
    """Build a runnable plan on-boarding every listed device.

    Returns (plan, registry, states) where ``states`` maps device id to its
    OnboardingState, live-updated as the simulation runs.
    """
    registry = registry if registry is not None else TrustRegistry()
    credentials = credentials or {}
    fail_at = dict(fail_at or {})
    for device_id, step in fail_at.items():
        if step not in _ONBOARDING_SECURITY_STEPS:
            raise ScenarioInvalid(
                f"injected failure step must be 3..8, got {step} for {device_id!r}"
            )

    states: dict[str, OnboardingState] = {}
    components = []
    interactions = []
    cloud_fail = {d: s for d, s in fail_at.items() if s in (4, 6, 8)}
    device_fail = {d: s for d, s in fail_at.items() if s in (3, 5, 7)}
    for device_id in device_ids:
        state = OnboardingState(
            device_id=device_id,
            credentials=credentials.get(device_id, Credentials()),
        )
        states[device_id] = state
        handler = _DeviceEnrollment(
            device_id, setup.cloud_id, fail_at=device_fail.get(device_id)
        )
        components.append(setup.device_component(device_id, handler, state))
        iid = onboarding_interaction_id(device_id)
        interactions.append(
            InteractionPlan(
                interaction_id=iid,
                kickoff=(Message(iid, device_id, device_id, "begin"),),
                mandatory_tasks=frozenset("12345678"),
            )
        )
    components.append(setup.cloud_component(_CloudEnrollment(registry, cloud_fail)))
    plan = ScenarioPlan(
        name="onboarding",
        metrics=setup.metrics,
        components=components,
        interactions=interactions,
        time_metric=setup.time_metric,
    )
    return plan, registry, states


@dataclass
class OnboardResult:
    state: OnboardingState
    trace: InteractionTrace
    records: tuple[CostRecord, ...]
    registry: TrustRegistry


def onboard(
    setup: OnboardingSetup,
    device_id: str,
    *,
    registry: Optional[TrustRegistry] = None,
    credentials: Optional[Credentials] = None,
    fail_at: Optional[int] = None,
    ledger: Optional[CostLedger] = None,
    seed: int = 0,
) -> OnboardResult:
    """Run one device's on-boarding interaction.

    On success the registry gains the device and the six security records
    (device tasks 3/5/7, cloud tasks 4/6/8) are returned and, if a shared
    ledger was passed, appended to it.  On rejection raises RejectedAtStep;
    the records emitted up to (and including) the failing check stay in the
    shared ledger and on the exception.
    """
    plan, registry, states = onboarding_plan(
        setup,
        [device_id],
        registry=registry,
        credentials={device_id: credentials} if credentials else None,
        fail_at={device_id: fail_at} if fail_at else None,
    )
    result = Simulation(plan, seed=seed).run()
    records = result.ledger.records
    if ledger is not None:
        for rec in records:
            ledger.record(rec)
    state = states[device_id]
    trace = result.trace(onboarding_interaction_id(device_id))
    if trace.status == ABORTED:
        raise RejectedAtStep(
            state.rejected_step,
            state.rejected_reason,
            trace=trace,
            records=records,
        )
    return OnboardResult(
        state=state, trace=trace, records=records, registry=registry
    )


# --- closed-loop temperature control ---

_TEMPLOOP_TASKS_D1 = ("1", "2", "3", "5", "6")
_TEMPLOOP_TASKS_D2 = ("7", "9", "10", "11")
_TEMPLOOP_TASKS_CLOUD = ("4", "8")


@dataclass(frozen=True)
class TempLoopConfig:
    """Parameters of one closed-loop run."""

    reading: Fraction
    limit: Fraction
    ordering: str = BASELINE
    periods: int = 1
    period_interval: Fraction = Fraction(300000)  # simulated ms between samples

    def __post_init__(self):
        object.__setattr__(self, "reading", as_fraction(self.reading))
        object.__setattr__(self, "limit", as_fraction(self.limit))
        object.__setattr__(self, "period_interval", as_fraction(self.period_interval))
        if self.ordering not in ORDERINGS:
            raise ScenarioInvalid(f"unknown ordering: {self.ordering!r}")
        if self.periods < 1:
            raise ScenarioInvalid("periods must be at least 1")


@dataclass
class TempLoopSetup:
    """Cast and task tables for the temperature loop."""

    metrics: MetricRegistry
    sensor_device: str
    actuator_device: str
    cloud_id: str
    sensor_tasks: Mapping[str, TaskSpec]
    actuator_tasks: Mapping[str, TaskSpec]
    cloud_tasks: Mapping[str, TaskSpec]
    labels: Mapping[str, str] = field(default_factory=dict)
    time_metric: Optional[str] = "duration"

    def __post_init__(self):
        for required, table, side in (
            (_TEMPLOOP_TASKS_D1, self.sensor_tasks, "sensor device"),
            (_TEMPLOOP_TASKS_D2, self.actuator_tasks, "actuator device"),
            (_TEMPLOOP_TASKS_CLOUD, self.cloud_tasks, "cloud"),
        ):
            missing = [t for t in required if t not in table]
            if missing:
                raise ScenarioInvalid(f"{side} task table missing tasks: {missing}")

    def new_ledger(self) -> CostLedger:
        tasks = dict(self.sensor_tasks)
        tasks.update(self.actuator_tasks)
        tasks.update(self.cloud_tasks)
        return CostLedger(self.metrics, tasks)


class _SensorSide:
    """IoT device 1: measures, verifies the peer, encrypts, transmits."""

    def __init__(self, setup, config, registry, tamper_in_transit=False):
        self.setup = setup
        self.config = config
        self.registry = registry
        self.tamper = tamper_in_transit

    def __call__(self, state, msg: Message):
        state = state or {}
        if msg.kind == "tick":
            reading = msg.payload
            state[msg.interaction_id] = reading
            actions = [Execute("1"), ReadSensor(reading), Execute("2")]
            if self.config.ordering == LIMIT_FIRST:
                actions.append(Execute("10"))
                if reading <= self.config.limit:
                    # Below the limit nothing security-related ever runs.
                    actions.append(Complete())
                    return state, actions
            actions.extend(
                [
                    Execute("3"),
                    Send(
                        self.setup.cloud_id,
                        "trust_query",
                        {"subject": self.setup.actuator_device, "reply_task": "4"},
                    ),
                ]
            )
            return state, actions
        if msg.kind == "trust_refused":
            return state, [Abort(f"untrusted requester: {msg.payload}")]
        if msg.kind == "trust_result":
            if not msg.payload:
                return state, [
                    Abort(f"trust failure: {self.setup.actuator_device} is not trusted")
                ]
            key = session_key(
                self.registry, self.setup.sensor_device, self.setup.actuator_device
            )
            ciphertext = encrypt(str(state.pop(msg.interaction_id)), key)
            if self.tamper:
                ciphertext = _corrupt(ciphertext)
            return state, [
                Execute("5"),
                Execute("6"),
                Send(self.setup.actuator_device, "data", ciphertext),
            ]
        raise ScenarioInvalid(f"sensor device got unexpected message {msg.kind!r}")


class _ActuatorSide:
    """IoT device 2: verifies the peer, decrypts, checks the limit, actuates."""

    def __init__(self, setup, config, registry):
        self.setup = setup
        self.config = config
        self.registry = registry

    def __call__(self, state, msg: Message):
        state = state or {}
        if msg.kind == "data":
            state[msg.interaction_id] = msg.payload
            return state, [
                Execute("7"),
                Send(
                    self.setup.cloud_id,
                    "trust_query",
                    {"subject": self.setup.sensor_device, "reply_task": "8"},
                ),
            ]
        if msg.kind == "trust_refused":
            return state, [Abort(f"untrusted requester: {msg.payload}")]
        if msg.kind == "trust_result":
            if not msg.payload:
                return state, [
                    Abort(f"trust failure: {self.setup.sensor_device} is not trusted")
                ]
            key = session_key(
                self.registry, self.setup.sensor_device, self.setup.actuator_device
            )
            ciphertext = state.pop(msg.interaction_id)
            try:
                reading = Fraction(decrypt(ciphertext, key))
            except DecryptFailure as exc:
                return state, [
                    Execute("9", outcome=f"failed: {exc}"),
                    Abort(f"decrypt failure: {exc}"),
                ]
            actions = [Execute("9"), Execute("10")]
            if reading > self.config.limit:
                actions.extend([Execute("11"), Actuate("cool_down")])
            actions.append(Complete())
            return state, actions
        raise ScenarioInvalid(f"actuator device got unexpected message {msg.kind!r}")


class _TrustAuthority:
    """Cloud side of both trust checks: answers from the trust registry."""

    def __init__(self, registry: TrustRegistry):
        self.registry = registry

    def __call__(self, state, msg: Message):
        if msg.kind != "trust_query":
            raise ScenarioInvalid(f"cloud got unexpected message {msg.kind!r}")
        requester = msg.sender
        subject = msg.payload["subject"]
        reply_task = msg.payload["reply_task"]
        try:
            trusted = check_trustworthiness(self.registry, requester, subject)
        except UntrustedRequester:
            return state, [
                Execute(reply_task, outcome="refused: untrusted requester"),
                Send(requester, "trust_refused", requester),
            ]
        return state, [Execute(reply_task), Send(requester, "trust_result", trusted)]


def temploop_interaction_id(period: int) -> str:
    return f"temploop-{period:03d}"


def temploop_plan(
    setup: TempLoopSetup,
    config: TempLoopConfig,
    *,
    registry: Optional[TrustRegistry] = None,
    tamper_in_transit: bool = False,
) -> tuple[ScenarioPlan, TrustRegistry]:
    """Build the closed-loop plan: one interaction per sampling period.

    The registry defaults to both devices already on-boarded (the loop's
    precondition); pass a different registry to model missing enrollment.
    """
    if registry is None:
        registry = TrustRegistry([setup.sensor_device, setup.actuator_device])
    components = [
        Component(
            component_id=setup.sensor_device,
            label=setup.labels.get(setup.sensor_device, setup.sensor_device),
            capabilities=frozenset({"sensing", "computation", "communication"}),
            tasks=dict(setup.sensor_tasks),
            handler=_SensorSide(setup, config, registry, tamper_in_transit),
            initial_state={},
        ),
        Component(
            component_id=setup.actuator_device,
            label=setup.labels.get(setup.actuator_device, setup.actuator_device),
            capabilities=frozenset({"actuation", "computation", "communication"}),
            tasks=dict(setup.actuator_tasks),
            handler=_ActuatorSide(setup, config, registry),
            initial_state={},
        ),
        Component(
            component_id=setup.cloud_id,
            label=setup.labels.get(setup.cloud_id, setup.cloud_id),
            capabilities=frozenset({"computation", "communication"}),
            tasks=dict(setup.cloud_tasks),
            handler=_TrustAuthority(registry),
        ),
    ]
    if config.ordering == LIMIT_FIRST:
        mandatory = frozenset({"1", "2", "10"})
    else:
        mandatory = frozenset({"1", "2", "3", "4", "5", "6", "7", "8", "9", "10"})
    interactions = []
    for period in range(1, config.periods + 1):
        iid = temploop_interaction_id(period)
        interactions.append(
            InteractionPlan(
                interaction_id=iid,
                kickoff=(
                    Message(iid, setup.sensor_device, setup.sensor_device, "tick", config.reading),
                ),
                start_time=(period - 1) * config.period_interval,
                mandatory_tasks=mandatory,
            )
        )
    plan = ScenarioPlan(
        name="temploop",
        metrics=setup.metrics,
        components=components,
        interactions=interactions,
        time_metric=setup.time_metric,
    )
    return plan, registry


@dataclass
class TempLoopResult:
    traces: list[InteractionTrace]
    records: tuple[CostRecord, ...]
    actuated: bool
    ledger: CostLedger


def run_temploop(
    setup: TempLoopSetup,
    config: TempLoopConfig,
    *,
    registry: Optional[TrustRegistry] = None,
    ledger: Optional[CostLedger] = None,
    tamper_in_transit: bool = False,
    seed: int = 0,
) -> TempLoopResult:
    """Run the closed-loop scenario for the configured number of periods.

    Raises TrustFailure or DecryptFailure if a period aborts; the exception
    carries the aborted trace and the records emitted up to the failure.
    """
    plan, registry = temploop_plan(
        setup, config, registry=registry, tamper_in_transit=tamper_in_transit
    )
    result = Simulation(plan, seed=seed).run()
    records = result.ledger.records
    if ledger is not None:
        for rec in records:
            ledger.record(rec)
    aborted = [t for t in result.traces if t.status == ABORTED]
    if aborted:
        reason = aborted[0].abort_reason or "aborted"
        kw = {"trace": aborted[0], "records": records}
        if reason.startswith("decrypt failure"):
            raise DecryptFailure(reason, **kw)
        if reason.startswith(("trust failure", "untrusted requester")):
            raise TrustFailure(reason, **kw)
        raise ScenarioAbort(reason, **kw)
    actuated = any(t.has_kind(ACTUATOR_COMMAND) for t in result.traces)
    return TempLoopResult(
        traces=result.traces,
        records=records,
        actuated=actuated,
        ledger=result.ledger,
    )


@dataclass(frozen=True)
class OrderingComparison:
    """Security-cost savings of the limit-first ordering over the baseline."""

    reading: Fraction
    limit: Fraction
    periods: int
    baseline_total: Fraction
    variant_total: Fraction
    delta: Fraction
    unit: Optional[str]
    baseline_rollup: RollupNode
    variant_rollup: RollupNode
    baseline_records: tuple[CostRecord, ...]
    variant_records: tuple[CostRecord, ...]


def compare_orderings(
    setup: TempLoopSetup,
    config: TempLoopConfig,
    *,
    registry: Optional[TrustRegistry] = None,
    seed: int = 0,
) -> OrderingComparison:
    """Run baseline and limit-first orderings with identical costs and report
    the difference in total security cost (delta = baseline - variant)."""
    levels = ("interaction", "component", "task")
    results = {}
    for ordering in (BASELINE, LIMIT_FIRST):
        results[ordering] = run_temploop(
            setup, replace(config, ordering=ordering), registry=registry, seed=seed
        )
    totals = {}
    unit = None
    for ordering, result in results.items():
        aggregate = result.ledger.total_cost()
        if aggregate.grand_total is not None:
            totals[ordering], unit_here = aggregate.grand_total
            unit = unit or unit_here
        else:
            totals[ordering] = Fraction(0)
    return OrderingComparison(
        reading=config.reading,
        limit=config.limit,
        periods=config.periods,
        baseline_total=totals[BASELINE],
        variant_total=totals[LIMIT_FIRST],
        delta=totals[BASELINE] - totals[LIMIT_FIRST],
        unit=unit,
        baseline_rollup=results[BASELINE].ledger.rollup(levels),
        variant_rollup=results[LIMIT_FIRST].ledger.rollup(levels),
        baseline_records=results[BASELINE].records,
        variant_records=results[LIMIT_FIRST].records,
    )
