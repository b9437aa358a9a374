"""Scenario configuration files.

The format is INI-style, parsed with :mod:`configparser` (interpolation
disabled).  Sections:

* ``[scenario]`` -- ``kind`` (onboarding | temploop | custom), ``seed``.
* ``[metric <id>]`` -- ``unit`` (required), ``name``, ``domain``, ``mode``.
* ``[component <id>]`` -- ``label``, ``capabilities`` (comma list).
* ``[task <id>]`` -- ``label``, ``kind`` (ordinary | security_related),
  ``performed_by`` (comma list of component ids), ``costs``
  (comma list of ``metric=value``; values are exact rationals: ``3``,
  ``2.5``, or ``1/2``).
* ``[parameters]`` -- scenario parameters (reading, limit, ordering,
  periods, period_interval, devices, cloud, onboarded, time_metric,
  interaction).
* ``[flow]`` (custom scenarios) -- numbered steps ``<n> = <component> <task>``.
* ``[output]`` -- ``emit`` (table | records), ``group_by`` (comma list).

See the shipped fixtures for complete examples.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Optional

from .errors import ParseError, ValidationError
from .ledger import DIMENSIONS, SECURITY_RELATED, TASK_KINDS, TaskSpec
from .metrics import MetricDef, MetricRegistry, as_fraction
from .simkernel import CAPABILITIES

SCENARIO_KINDS = ("onboarding", "temploop", "custom")

_PARAMETER_KEYS = {
    "reading",
    "limit",
    "ordering",
    "periods",
    "period_interval",
    "devices",
    "cloud",
    "onboarded",
    "time_metric",
    "interaction",
}

_OUTPUT_KEYS = {"emit", "group_by"}


@dataclass(frozen=True)
class ComponentConfig:
    component_id: str
    label: str
    capabilities: tuple[str, ...] = ()


@dataclass(frozen=True)
class TaskConfig:
    task_id: str
    label: str
    kind: str
    performed_by: tuple[str, ...]
    costs: dict[str, Fraction] = field(default_factory=dict)

    def to_spec(self) -> TaskSpec:
        return TaskSpec(
            task_id=self.task_id,
            label=self.label,
            kind=self.kind,
            configured_costs=self.costs,
        )


@dataclass
class ScenarioConfig:
    """Validated, typed view of one scenario file."""

    kind: str
    seed: int = 0
    metrics: list[MetricDef] = field(default_factory=list)
    components: list[ComponentConfig] = field(default_factory=list)
    tasks: list[TaskConfig] = field(default_factory=list)
    parameters: dict[str, str] = field(default_factory=dict)
    flow: list[tuple[str, str]] = field(default_factory=list)
    output: dict[str, str] = field(default_factory=dict)
    path: Optional[str] = None

    # -- typed parameter accessors (defaults applied here) --

    def metric_registry(self) -> MetricRegistry:
        return MetricRegistry(self.metrics).freeze()

    def component(self, component_id: str) -> ComponentConfig:
        for comp in self.components:
            if comp.component_id == component_id:
                return comp
        raise ValidationError("unknown_component", f"no component {component_id!r}")

    def labels(self) -> dict[str, str]:
        return {c.component_id: c.label for c in self.components}

    def task_specs(self) -> dict[str, TaskSpec]:
        return {t.task_id: t.to_spec() for t in self.tasks}

    def tasks_performed_by(self, component_id: str) -> dict[str, TaskSpec]:
        return {
            t.task_id: t.to_spec()
            for t in self.tasks
            if component_id in t.performed_by
        }

    def _fraction_param(self, key: str, default=None) -> Optional[Fraction]:
        raw = self.parameters.get(key)
        if raw is None:
            return default
        try:
            return as_fraction(raw)
        except (ValueError, ZeroDivisionError):
            raise ValidationError(
                "bad_parameter_value", f"{key!r} is not a rational number: {raw!r}"
            ) from None

    def _int_param(self, key: str, default: int) -> int:
        raw = self.parameters.get(key)
        if raw is None:
            return default
        try:
            return int(raw)
        except ValueError:
            raise ValidationError(
                "bad_parameter_value", f"{key!r} is not an integer: {raw!r}"
            ) from None

    def _list_param(self, key: str) -> tuple[str, ...]:
        raw = self.parameters.get(key, "")
        return tuple(part.strip() for part in raw.split(",") if part.strip())

    def reading(self) -> Fraction:
        value = self._fraction_param("reading")
        if value is None:
            raise ValidationError("missing_parameter", "temploop requires 'reading'")
        return value

    def limit(self) -> Fraction:
        value = self._fraction_param("limit")
        if value is None:
            raise ValidationError("missing_parameter", "temploop requires 'limit'")
        return value

    def ordering(self) -> str:
        return self.parameters.get("ordering", "baseline")

    def periods(self) -> int:
        return self._int_param("periods", 1)

    def period_interval(self) -> Fraction:
        return self._fraction_param("period_interval", Fraction(300000))

    def devices(self) -> tuple[str, ...]:
        listed = self._list_param("devices")
        if listed:
            return listed
        cloud = self.parameters.get("cloud")
        return tuple(
            c.component_id for c in self.components if c.component_id != cloud
        )

    def cloud(self) -> str:
        cloud = self.parameters.get("cloud")
        if cloud is None:
            raise ValidationError("missing_parameter", f"{self.kind} requires 'cloud'")
        return cloud

    def onboarded(self) -> Optional[tuple[str, ...]]:
        if "onboarded" not in self.parameters:
            return None
        return self._list_param("onboarded")

    def time_metric(self) -> Optional[str]:
        explicit = self.parameters.get("time_metric")
        if explicit is not None:
            return explicit
        ids = [m.metric_id for m in self.metrics]
        if "duration" in ids:
            return "duration"
        return ids[0] if ids else None

    def interaction_id(self) -> str:
        return self.parameters.get("interaction", "interaction-1")

    def emit(self) -> str:
        return self.output.get("emit", "table")

    def group_by(self) -> Optional[tuple[str, ...]]:
        raw = self.output.get("group_by")
        if raw is None:
            return None
        return tuple(part.strip() for part in raw.split(",") if part.strip())


def _split_list(raw: str) -> tuple[str, ...]:
    return tuple(part.strip() for part in raw.split(",") if part.strip())


def _parse_costs(task_id: str, raw: str) -> dict[str, Fraction]:
    costs: dict[str, Fraction] = {}
    for item in _split_list(raw):
        metric_id, sep, value = item.partition("=")
        metric_id, value = metric_id.strip(), value.strip()
        if not sep or not metric_id or not value:
            raise ValidationError(
                "bad_cost_entry",
                f"task {task_id!r}: cost entries must be metric=value, got {item!r}",
            )
        try:
            costs[metric_id] = as_fraction(value)
        except (ValueError, ZeroDivisionError):
            raise ValidationError(
                "bad_cost_value",
                f"task {task_id!r}: {value!r} is not a rational number",
            ) from None
    return costs


def _read_ini(text: str, path: Optional[str]) -> configparser.ConfigParser:
    parser = configparser.ConfigParser(
        interpolation=None, inline_comment_prefixes=("#",)
    )
    parser.optionxform = str  # keep keys case-sensitive, ids may be mixed-case
    try:
        parser.read_string(text, source=path or "<config>")
    except configparser.DuplicateSectionError as exc:
        raise ParseError(f"duplicate section [{exc.section}]", line=exc.lineno) from exc
    except configparser.DuplicateOptionError as exc:
        raise ParseError(
            f"duplicate key {exc.option!r} in [{exc.section}]", line=exc.lineno
        ) from exc
    except configparser.MissingSectionHeaderError as exc:
        raise ParseError("content before first section header", line=exc.lineno) from exc
    except configparser.ParsingError as exc:
        lineno = exc.errors[0][0] if exc.errors else None
        raise ParseError("malformed line", line=lineno) from exc
    return parser


def parse_scenario(text: str, path: Optional[str] = None) -> ScenarioConfig:
    """Parse and validate scenario config text."""
    parser = _read_ini(text, path)
    if "scenario" not in parser:
        raise ValidationError("missing_section", "config needs a [scenario] section")

    scenario_section = parser["scenario"]
    kind = scenario_section.get("kind")
    if kind not in SCENARIO_KINDS:
        raise ValidationError(
            "unknown_scenario_kind",
            f"kind must be one of {', '.join(SCENARIO_KINDS)}; got {kind!r}",
        )
    try:
        seed = int(scenario_section.get("seed", "0"))
    except ValueError:
        raise ValidationError("bad_parameter_value", "seed must be an integer") from None

    config = ScenarioConfig(kind=kind, seed=seed, path=path)

    for section in parser.sections():
        if section == "scenario":
            continue
        if section == "parameters":
            config.parameters = dict(parser[section])
            continue
        if section == "output":
            config.output = dict(parser[section])
            continue
        if section == "flow":
            config.flow = _parse_flow(parser[section])
            continue
        prefix, _, ident = section.partition(" ")
        ident = ident.strip()
        if prefix == "metric" and ident:
            config.metrics.append(_parse_metric(ident, parser[section]))
        elif prefix == "component" and ident:
            config.components.append(_parse_component(ident, parser[section]))
        elif prefix == "task" and ident:
            config.tasks.append(_parse_task(ident, parser[section]))
        else:
            raise ValidationError("unknown_section", f"unrecognized section [{section}]")

    _validate(config)
    return config


def _parse_metric(metric_id: str, section) -> MetricDef:
    unit = section.get("unit")
    if not unit:
        raise ValidationError("metric_without_unit", f"metric {metric_id!r} needs a unit")
    try:
        return MetricDef(
            metric_id=metric_id,
            name=section.get("name", metric_id),
            unit=unit,
            domain=section.get("domain", "non_negative_rational"),
            mode=section.get("mode", "configured"),
        )
    except ValueError as exc:
        raise ValidationError("bad_metric", f"metric {metric_id!r}: {exc}") from None


def _parse_component(component_id: str, section) -> ComponentConfig:
    capabilities = _split_list(section.get("capabilities", ""))
    unknown = set(capabilities) - CAPABILITIES
    if unknown:
        raise ValidationError(
            "unknown_capability",
            f"component {component_id!r}: {sorted(unknown)}",
        )
    return ComponentConfig(
        component_id=component_id,
        label=section.get("label", component_id),
        capabilities=capabilities,
    )


def _parse_task(task_id: str, section) -> TaskConfig:
    kind = section.get("kind", "ordinary")
    if kind not in TASK_KINDS:
        raise ValidationError(
            "unknown_task_kind", f"task {task_id!r}: kind {kind!r}"
        )
    return TaskConfig(
        task_id=task_id,
        label=section.get("label", task_id),
        kind=kind,
        performed_by=_split_list(section.get("performed_by", "")),
        costs=_parse_costs(task_id, section.get("costs", "")),
    )


def _parse_flow(section) -> list[tuple[str, str]]:
    steps = []
    for key, value in section.items():
        try:
            index = int(key)
        except ValueError:
            raise ValidationError(
                "bad_flow_step", f"flow step keys must be integers, got {key!r}"
            ) from None
        parts = value.split()
        if len(parts) != 2:
            raise ValidationError(
                "bad_flow_step",
                f"flow step {key} must be '<component> <task>', got {value!r}",
            )
        steps.append((index, parts[0], parts[1]))
    steps.sort()
    return [(component, task) for _, component, task in steps]


def _validate(config: ScenarioConfig) -> None:
    metric_ids = {m.metric_id for m in config.metrics}
    component_ids = [c.component_id for c in config.components]

    for task in config.tasks:
        for metric_id in task.costs:
            if metric_id not in metric_ids:
                raise ValidationError(
                    "undefined_metric",
                    f"task {task.task_id!r} references metric {metric_id!r} "
                    "which is not defined in any [metric ...] section",
                )
        if task.kind == SECURITY_RELATED and not task.costs:
            raise ValidationError(
                "security_task_without_cost",
                f"security-related task {task.task_id!r} has no configured cost",
            )
        if task.kind != SECURITY_RELATED and task.costs:
            raise ValidationError(
                "ordinary_task_with_cost",
                f"ordinary task {task.task_id!r} must not carry configured costs",
            )
        if not task.performed_by:
            raise ValidationError(
                "task_without_performer", f"task {task.task_id!r} names no component"
            )
        for component_id in task.performed_by:
            if component_id not in component_ids:
                raise ValidationError(
                    "unknown_component",
                    f"task {task.task_id!r} performed_by unknown component "
                    f"{component_id!r}",
                )

    unknown_params = set(config.parameters) - _PARAMETER_KEYS
    if unknown_params:
        raise ValidationError(
            "unknown_parameter", f"unrecognized parameters: {sorted(unknown_params)}"
        )
    unknown_output = set(config.output) - _OUTPUT_KEYS
    if unknown_output:
        raise ValidationError(
            "unknown_output_option", f"unrecognized output options: {sorted(unknown_output)}"
        )
    emit = config.output.get("emit")
    if emit not in (None, "table", "records"):
        raise ValidationError("bad_output_option", f"emit must be table or records, got {emit!r}")
    group_by = config.group_by()
    if group_by is not None:
        bad = [dim for dim in group_by if dim not in DIMENSIONS]
        if bad:
            raise ValidationError("bad_output_option", f"unknown group_by dimensions: {bad}")

    time_metric = config.parameters.get("time_metric")
    if time_metric is not None and time_metric not in metric_ids:
        raise ValidationError(
            "undefined_metric", f"time_metric {time_metric!r} is not defined"
        )

    task_ids = {t.task_id for t in config.tasks}
    for component_id, task_id in config.flow:
        if component_id not in component_ids:
            raise ValidationError(
                "unknown_component", f"flow references unknown component {component_id!r}"
            )
        if task_id not in task_ids:
            raise ValidationError(
                "unknown_flow_task", f"flow references unknown task {task_id!r}"
            )
        task = next(t for t in config.tasks if t.task_id == task_id)
        if component_id not in task.performed_by:
            raise ValidationError(
                "task_performer_mismatch",
                f"flow assigns task {task_id!r} to {component_id!r}, which is not "
                "in its performed_by list",
            )

    if config.kind == "custom" and not config.flow:
        raise ValidationError("missing_section", "custom scenarios need a [flow] section")

    ordering = config.parameters.get("ordering")
    if ordering not in (None, "baseline", "limit_first"):
        raise ValidationError(
            "bad_parameter_value",
            f"ordering must be baseline or limit_first, got {ordering!r}",
        )
    if config.periods() < 1:
        raise ValidationError("bad_parameter_value", "periods must be at least 1")

    for key in ("devices", "onboarded"):
        if key in config.parameters:
            for component_id in config._list_param(key):
                if component_id not in component_ids:
                    raise ValidationError(
                        "unknown_component",
                        f"parameter {key!r} names unknown component {component_id!r}",
                    )
    if "cloud" in config.parameters and config.parameters["cloud"] not in component_ids:
        raise ValidationError(
            "unknown_component",
            f"parameter 'cloud' names unknown component {config.parameters['cloud']!r}",
        )


def load_scenario(path) -> ScenarioConfig:
    """Load and validate a scenario config file."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise ParseError(f"config file not found: {path}") from None
    except OSError as exc:
        raise ParseError(f"cannot read config file {path}: {exc}") from None
    return parse_scenario(text, path=str(path))
