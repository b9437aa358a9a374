"""Append-only cost ledger and the layered sum-of-sums aggregation.

Every measurement is one :class:`CostRecord` addressed by four ids:
interaction, component, task, and metric.  Totals are formed by summing
record values grouped along any ordered subset of those four dimensions;
nothing is ever pre-aggregated, so any roll-up can be recomputed from the
flat record list.

Values are exact rationals.  That keeps sums associative, makes aggregation
independent of record order, and reproduces configured integer costs
bit-exactly.
"""

from __future__ import annotations

import csv
import io
import threading
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Callable, Collection, Iterable, Mapping, Optional, Sequence, Union

from .errors import IncompatibleUnits, OrdinaryTaskCost, UnitMismatch, UnknownTask
from .metrics import MetricRegistry, NormalizerSpec, as_fraction, normalize

ORDINARY = "ordinary"
SECURITY_RELATED = "security_related"
TASK_KINDS = (ORDINARY, SECURITY_RELATED)

# Aggregation dimensions, outermost first as in the layered cost model.
DIMENSIONS = ("interaction", "component", "task", "metric")

_DIM_FIELD = {
    "interaction": "interaction_id",
    "component": "component_id",
    "task": "task_id",
    "metric": "metric_id",
}

EXPORT_FIELDS = (
    "interaction_id",
    "component_id",
    "task_id",
    "metric_id",
    "value",
    "unit",
)


@dataclass(frozen=True)
class CostRecord:
    """One measurement attributing a metric value to (interaction, component, task)."""

    interaction_id: str
    component_id: str
    task_id: str
    metric_id: str
    value: Fraction
    unit: str

    def __post_init__(self):
        object.__setattr__(self, "value", as_fraction(self.value))
        if self.value < 0:
            raise ValueError(f"cost value must be non-negative, got {self.value}")

    def key(self, dimension: str) -> str:
        return getattr(self, _DIM_FIELD[dimension])

    def with_value(self, value, unit: Optional[str] = None) -> "CostRecord":
        return replace(self, value=as_fraction(value), unit=unit or self.unit)


@dataclass(frozen=True)
class TaskSpec:
    """A named task, either ordinary or security-related.

    Only security-related tasks may carry configured costs; ordinary tasks
    never produce cost records.
    """

    task_id: str
    label: str
    kind: str = ORDINARY
    configured_costs: Mapping[str, Fraction] = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in TASK_KINDS:
            raise ValueError(f"unknown task kind: {self.kind!r}")
        costs = {m: as_fraction(v) for m, v in self.configured_costs.items()}
        object.__setattr__(self, "configured_costs", costs)
        if costs and self.kind != SECURITY_RELATED:
            raise ValueError(
                f"task {self.task_id!r} is ordinary but has configured costs"
            )
        if any(v < 0 for v in costs.values()):
            raise ValueError(f"task {self.task_id!r} has a negative configured cost")

    @property
    def security_related(self) -> bool:
        return self.kind == SECURITY_RELATED


def classify_tasks(specs: Iterable[TaskSpec]):
    """Partition task specs into (security_related, ordinary), preserving order."""
    security, ordinary = [], []
    for spec in specs:
        (security if spec.security_related else ordinary).append(spec)
    return security, ordinary


# A dimension filter: None (match all), a single id, a collection of ids,
# or an arbitrary predicate.
Filter = Union[None, str, Collection[str], Callable[[str], bool]]


def _matches(flt: Filter, value: str) -> bool:
    if flt is None:
        return True
    if isinstance(flt, str):
        return value == flt
    if callable(flt):
        return bool(flt(value))
    return value in flt


@dataclass(frozen=True)
class AggregationQuery:
    """Which records to include and how to group their sum."""

    interaction: Filter = None
    component: Filter = None
    task: Filter = None
    metric: Filter = None
    group_by: Sequence[str] = ()

    def __post_init__(self):
        group_by = tuple(self.group_by)
        object.__setattr__(self, "group_by", group_by)
        for dim in group_by:
            if dim not in DIMENSIONS:
                raise ValueError(f"unknown grouping dimension: {dim!r}")
        if len(set(group_by)) != len(group_by):
            raise ValueError("group_by contains duplicate dimensions")

    def filter_for(self, dimension: str) -> Filter:
        return getattr(self, dimension)

    def matches(self, record: CostRecord) -> bool:
        return all(_matches(self.filter_for(d), record.key(d)) for d in DIMENSIONS)


@dataclass(frozen=True)
class GroupTotal:
    key: tuple[str, ...]
    total: Fraction
    unit: str


@dataclass(frozen=True)
class CostAggregate:
    """Result of a grouped aggregation query."""

    group_by: tuple[str, ...]
    groups: tuple[GroupTotal, ...]
    grand_total: Optional[tuple[Fraction, str]]

    def as_dict(self) -> dict[tuple[str, ...], tuple[Fraction, str]]:
        return {g.key: (g.total, g.unit) for g in self.groups}


@dataclass(frozen=True)
class RollupNode:
    """One node of a nested roll-up table.

    ``total`` is None only on internal nodes whose subtree mixes units (the
    per-unit information still lives in the children).  ``records`` counts
    the contributing cost records beneath this node.
    """

    name: str
    level: Optional[str]
    total: Optional[Fraction]
    unit: Optional[str]
    records: int
    children: Mapping[str, "RollupNode"] = field(default_factory=dict)

    def child(self, *names: str) -> "RollupNode":
        node = self
        for name in names:
            node = node.children[name]
        return node


def _maybe_normalized(records, normalizer: Optional[NormalizerSpec]):
    """Apply the normalizer only when the selection actually mixes units."""
    units = {r.unit for r in records}
    if len(units) > 1 and normalizer is not None:
        return normalize(records, normalizer)
    return records


def _sum_or_raise(records) -> tuple[Fraction, str]:
    units = sorted({r.unit for r in records})
    if len(units) > 1:
        raise IncompatibleUnits(units)
    return sum((r.value for r in records), Fraction(0)), units[0]


def _grand_total(records, inferred_unit: Optional[str]):
    if not records:
        return (Fraction(0), inferred_unit) if inferred_unit else None
    units = {r.unit for r in records}
    if len(units) != 1:
        return None
    return sum((r.value for r in records), Fraction(0)), next(iter(units))


def total_cost(
    records: Iterable[CostRecord],
    query: Optional[AggregationQuery] = None,
    *,
    registry: Optional[MetricRegistry] = None,
    normalizer: Optional[NormalizerSpec] = None,
) -> CostAggregate:
    """Sum matching records, grouped along query.group_by.

    Raises IncompatibleUnits if any requested group sum would mix units and
    no normalizer covers them.  The grand total is present only when a
    single unit spans all matched records; with an empty match it is
    (0, unit) when the query pins down a single registered metric.
    """
    query = query or AggregationQuery()
    matched = [r for r in records if query.matches(r)]
    matched = _maybe_normalized(matched, normalizer)

    buckets: dict[tuple[str, ...], list[CostRecord]] = {}
    for rec in matched:
        buckets.setdefault(tuple(rec.key(d) for d in query.group_by), []).append(rec)

    groups = []
    for key in sorted(buckets):
        total, unit = _sum_or_raise(buckets[key])
        groups.append(GroupTotal(key=key, total=total, unit=unit))

    inferred = None
    if not matched and registry is not None and isinstance(query.metric, str):
        if query.metric in registry:
            inferred = registry.get(query.metric).unit
    return CostAggregate(
        group_by=query.group_by,
        groups=tuple(groups),
        grand_total=_grand_total(matched, inferred),
    )


def _build_rollup(records, levels, name, level) -> RollupNode:
    if not levels:
        # Leaf: this is a requested sum, so mixed units are an error here.
        total, unit = _sum_or_raise(records) if records else (Fraction(0), None)
        return RollupNode(
            name=name, level=level, total=total, unit=unit, records=len(records)
        )
    head, rest = levels[0], levels[1:]
    buckets: dict[str, list[CostRecord]] = {}
    for rec in records:
        buckets.setdefault(rec.key(head), []).append(rec)
    children = {
        key: _build_rollup(buckets[key], rest, key, head) for key in sorted(buckets)
    }
    units = {c.unit for c in children.values() if c.unit is not None}
    if len(units) == 1 and all(c.total is not None for c in children.values()):
        total: Optional[Fraction] = sum(
            (c.total for c in children.values()), Fraction(0)
        )
        unit: Optional[str] = next(iter(units))
    else:
        total, unit = None, None
    return RollupNode(
        name=name,
        level=level,
        total=total,
        unit=unit,
        records=len(records),
        children=children,
    )


def rollup(
    records: Iterable[CostRecord],
    levels: Sequence[str],
    *,
    query: Optional[AggregationQuery] = None,
    normalizer: Optional[NormalizerSpec] = None,
) -> RollupNode:
    """Build the nested table of sums over the given ordered dimensions.

    Every internal node's total equals the sum of its children; an internal
    node whose children mix units carries no total.  Innermost groups must
    be unit-homogeneous (IncompatibleUnits otherwise), mirroring total_cost.
    """
    probe = AggregationQuery(group_by=levels)  # validates the level list
    matched = list(records)
    if query is not None:
        matched = [r for r in matched if query.matches(r)]
    matched = _maybe_normalized(matched, normalizer)
    return _build_rollup(matched, tuple(probe.group_by), "", None)


class CostLedger:
    """Append-only store of cost records with unit and task-kind enforcement.

    Writes are serialized through one internal lock; the record list only
    grows, so completed prefixes may be read concurrently.
    """

    def __init__(
        self,
        metrics: MetricRegistry,
        tasks: Optional[Mapping[str, TaskSpec]] = None,
    ):
        self.metrics = metrics
        self.tasks = dict(tasks or {})
        self._records: list[CostRecord] = []
        self._lock = threading.Lock()

    def __len__(self) -> int:
        return len(self._records)

    def __iter__(self):
        return iter(self._records)

    @property
    def records(self) -> tuple[CostRecord, ...]:
        return tuple(self._records)

    def record(self, rec: CostRecord) -> int:
        """Append one record, returning its index.

        Rejects records whose unit differs from the metric's declared unit,
        whose value falls outside the metric's domain, or whose task is not
        security-related.
        """
        metric = self.metrics.get(rec.metric_id)
        if rec.unit != metric.unit:
            raise UnitMismatch(
                f"record unit {rec.unit!r} differs from metric "
                f"{metric.metric_id!r} unit {metric.unit!r}"
            )
        metric.check_value(rec.value)
        if rec.task_id not in self.tasks:
            raise UnknownTask(f"task not declared to this ledger: {rec.task_id!r}")
        task = self.tasks[rec.task_id]
        if not task.security_related:
            raise OrdinaryTaskCost(
                f"task {rec.task_id!r} is ordinary; only security-related "
                "tasks incur security costs"
            )
        with self._lock:
            self._records.append(rec)
            return len(self._records) - 1

    def total_cost(
        self,
        query: Optional[AggregationQuery] = None,
        *,
        normalizer: Optional[NormalizerSpec] = None,
    ) -> CostAggregate:
        return total_cost(
            self._records, query, registry=self.metrics, normalizer=normalizer
        )

    def rollup(
        self,
        levels: Sequence[str],
        *,
        query: Optional[AggregationQuery] = None,
        normalizer: Optional[NormalizerSpec] = None,
    ) -> RollupNode:
        return rollup(self._records, levels, query=query, normalizer=normalizer)


# --- structured record export (one line per record, insertion order) ---


def write_records(records: Iterable[CostRecord], stream) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(EXPORT_FIELDS)
    for rec in records:
        writer.writerow(
            (
                rec.interaction_id,
                rec.component_id,
                rec.task_id,
                rec.metric_id,
                str(rec.value),
                rec.unit,
            )
        )


def records_to_text(records: Iterable[CostRecord]) -> str:
    buf = io.StringIO()
    write_records(records, buf)
    return buf.getvalue()


def read_records(stream) -> list[CostRecord]:
    reader = csv.reader(stream)
    header = next(reader, None)
    if header != list(EXPORT_FIELDS):
        raise ValueError(
            f"bad records header: expected {','.join(EXPORT_FIELDS)!r}, "
            f"got {','.join(header or ())!r}"
        )
    out = []
    for row in reader:
        if not row:
            continue
        if len(row) != len(EXPORT_FIELDS):
            raise ValueError(f"bad record row (expected 6 fields): {row!r}")
        interaction_id, component_id, task_id, metric_id, value, unit = row
        out.append(
            CostRecord(
                interaction_id=interaction_id,
                component_id=component_id,
                task_id=task_id,
                metric_id=metric_id,
                value=Fraction(value),
                unit=unit,
            )
        )
    return out
