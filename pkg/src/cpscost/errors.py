"""Exception hierarchy shared by all cpscost modules."""

from __future__ import annotations


class CostModelError(Exception):
    """Base class for every error raised by this package."""


# --- ledger / metrics ---


class UnitMismatch(CostModelError):
    """A cost record carries a unit different from its metric's declared unit."""


class OrdinaryTaskCost(CostModelError):
    """A cost record references a task that is not security-related."""


class IncompatibleUnits(CostModelError):
    """A requested sum would combine values measured in different units."""

    def __init__(self, units):
        self.units = frozenset(units)
        listed = ", ".join(sorted(self.units))
        super().__init__(f"cannot sum values with incompatible units: {{{listed}}}")


class DuplicateMetric(CostModelError):
    """A metric id was registered twice."""


class UnknownMetric(CostModelError):
    """A metric id does not resolve in the metric registry."""


class UnknownUnit(CostModelError):
    """A record's unit is outside a normalizer's input units."""


class MetricDomainError(CostModelError):
    """A value falls outside its metric's declared value domain."""


# --- simulation kernel ---


class UnknownTask(CostModelError):
    """A task id is not present in the executing component's task table."""


class UnknownComponent(CostModelError):
    """A message names a component that is not registered."""


class ScenarioInvalid(CostModelError):
    """A scenario plan violates a structural invariant."""


class DeadlockDetected(CostModelError):
    """The event queue drained while interactions were still unfinished."""

    def __init__(self, interaction_ids):
        self.interaction_ids = tuple(interaction_ids)
        super().__init__(
            "event queue empty before interactions finished: "
            + ", ".join(self.interaction_ids)
        )


# --- scenarios ---


class ScenarioAbort(CostModelError):
    """Base for scenario runs that ended in an aborted interaction.

    Carries the partial evidence: the aborted trace and the cost records
    emitted up to the failure (which also remain in any shared ledger).
    """

    def __init__(self, message, *, trace=None, records=()):
        super().__init__(message)
        self.trace = trace
        self.records = tuple(records)


class RejectedAtStep(ScenarioAbort):
    """On-boarding was rejected at a specific procedure step."""

    def __init__(self, step, reason, **kw):
        super().__init__(f"rejected at step {step}: {reason}", **kw)
        self.step = int(step)
        self.reason = reason


class UntrustedRequester(CostModelError):
    """A trustworthiness check was issued by a component that is not on-boarded."""


class TrustFailure(ScenarioAbort):
    """A trustworthiness check failed during a closed-loop run."""


class DecryptFailure(ScenarioAbort):
    """Decryption failed: wrong key or tampered ciphertext."""


# --- configuration ---


class ParseError(CostModelError):
    """A scenario config file could not be parsed."""

    def __init__(self, message, *, line=None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class ValidationError(CostModelError):
    """A scenario config violates a named invariant."""

    def __init__(self, invariant, message):
        self.invariant = invariant
        super().__init__(f"{invariant}: {message}")
