"""Metric definitions, unit compatibility, and the normalization hook.

Units are opaque tags: "ms" and "s" are unrelated until a user-supplied
normalizer says otherwise.  The package never invents conversion weights;
aggregation across different units is refused unless a
:class:`NormalizerSpec` covering all of them is passed in explicitly.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Iterable, Mapping, Optional

from .errors import (
    DuplicateMetric,
    MetricDomainError,
    UnknownMetric,
    UnknownUnit,
)

NON_NEGATIVE_RATIONAL = "non_negative_rational"
PERCENTAGE_0_100 = "percentage_0_100"
DOMAINS = (NON_NEGATIVE_RATIONAL, PERCENTAGE_0_100)

CONFIGURED = "configured"
MEASURED = "measured"
MODES = (CONFIGURED, MEASURED)


def as_fraction(value) -> Fraction:
    """Coerce ints, decimal strings, and 'p/q' strings to an exact Fraction."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, float):
        # Floats round-trip through their decimal repr so that 0.1 means 1/10,
        # not the binary approximation.
        return Fraction(repr(value))
    return Fraction(value)


@dataclass(frozen=True)
class MetricDef:
    """A named metric with a unit, a value domain, and a sampling mode."""

    metric_id: str
    name: str
    unit: str
    domain: str = NON_NEGATIVE_RATIONAL
    mode: str = CONFIGURED

    def __post_init__(self):
        if self.domain not in DOMAINS:
            raise ValueError(f"unknown metric domain: {self.domain!r}")
        if self.mode not in MODES:
            raise ValueError(f"unknown metric mode: {self.mode!r}")

    def check_value(self, value: Fraction) -> None:
        """Raise MetricDomainError unless ``value`` lies in this metric's domain."""
        if value < 0:
            raise MetricDomainError(
                f"metric {self.metric_id!r}: value {value} is negative"
            )
        if self.domain == PERCENTAGE_0_100 and value > 100:
            raise MetricDomainError(
                f"metric {self.metric_id!r}: value {value} outside 0..100 percent"
            )


class MetricRegistry:
    """Write-once-then-read-many lookup of MetricDef by id.

    Scenario setup registers every metric, then calls :meth:`freeze`; after
    that the registry is immutable and freely shareable.
    """

    def __init__(self, defs: Iterable[MetricDef] = ()):
        self._defs: dict[str, MetricDef] = {}
        self._frozen = False
        for d in defs:
            self.register(d)

    def register(self, metric: MetricDef) -> None:
        if self._frozen:
            raise DuplicateMetric("registry is frozen; no further registrations")
        if metric.metric_id in self._defs:
            raise DuplicateMetric(f"metric already registered: {metric.metric_id!r}")
        self._defs[metric.metric_id] = metric

    def get(self, metric_id: str) -> MetricDef:
        try:
            return self._defs[metric_id]
        except KeyError:
            raise UnknownMetric(f"metric not registered: {metric_id!r}") from None

    def freeze(self) -> "MetricRegistry":
        self._frozen = True
        return self

    def __contains__(self, metric_id: str) -> bool:
        return metric_id in self._defs

    def __iter__(self):
        return iter(self._defs.values())

    def __len__(self) -> int:
        return len(self._defs)


@dataclass(frozen=True)
class UnitCheck:
    """Outcome of a unit-compatibility check over a set of records.

    ``ok`` with ``unit=None`` means the record set was empty, so the unit is
    indeterminate but nothing conflicts.
    """

    ok: bool
    unit: Optional[str]
    units: frozenset[str]


def check_aggregatable(records) -> UnitCheck:
    """Decide whether the records' values may be summed into one total."""
    units = {r.unit for r in records}
    if len(units) > 1:
        return UnitCheck(ok=False, unit=None, units=frozenset(units))
    unit = next(iter(units)) if units else None
    return UnitCheck(ok=True, unit=unit, units=frozenset(units))


@dataclass(frozen=True)
class NormalizerSpec:
    """A user-supplied weighted linear map onto a common output unit.

    There are deliberately no default weights: equating e.g. 1 ms with 1%
    is a modelling decision the user must make explicitly.
    """

    output_unit: str
    weights: Mapping[str, Fraction]
    input_units: frozenset[str] = field(default=frozenset())

    def __post_init__(self):
        weights = {u: as_fraction(w) for u, w in self.weights.items()}
        object.__setattr__(self, "weights", weights)
        inputs = self.input_units or frozenset(weights)
        object.__setattr__(self, "input_units", frozenset(inputs))
        if set(weights) != self.input_units:
            raise ValueError("weights keys must equal input_units exactly")
        if any(w <= 0 for w in weights.values()):
            raise ValueError("normalizer weights must be strictly positive")

    def weight_for(self, unit: str) -> Fraction:
        try:
            return self.weights[unit]
        except KeyError:
            raise UnknownUnit(
                f"unit {unit!r} not covered by normalizer "
                f"(inputs: {sorted(self.input_units)})"
            ) from None


def normalize(records, spec: NormalizerSpec) -> list:
    """Map records onto spec.output_unit, scaling each value by its unit weight.

    Length and order are preserved.  Raises UnknownUnit if any record's unit
    is outside spec.input_units.
    """
    out = []
    for rec in records:
        weight = spec.weight_for(rec.unit)
        out.append(rec.with_value(weight * rec.value, spec.output_unit))
    return out


class SimClock:
    """Simulated monotonic clock; time only moves when advance() is called."""

    def __init__(self, start=0):
        self._now = as_fraction(start)

    def now(self) -> Fraction:
        return self._now

    def advance(self, delta) -> Fraction:
        delta = as_fraction(delta)
        if delta < 0:
            raise ValueError("clock cannot move backwards")
        self._now += delta
        return self._now


class MonotonicClock:
    """Wall clock for measured-mode runs, reporting milliseconds."""

    def now(self) -> Fraction:
        return Fraction(time.monotonic_ns(), 10**6)


def timer_sample(clock, thunk: Callable[[], Any]):
    """Run ``thunk`` and return (result, elapsed clock time).

    Under a SimClock the duration equals exactly whatever the thunk advanced
    the clock by, which is how simulation runs make measured-mode durations
    reproduce configured costs.
    """
    before = clock.now()
    result = thunk()
    return result, clock.now() - before
