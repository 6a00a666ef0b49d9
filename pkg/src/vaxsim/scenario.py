"""Time-windowed runtime overrides of model parameters (what-if scenarios).

An overlay file names dot-path targets in the base config and the value each
takes inside a calendar window: machine closures, pool head-counts, swapped
distributions, material availability, processing-time multipliers, plus the
instant ``reset_wip`` action (loss of all work in progress). Overlapping
windows on one target compose last-writer-wins, and the baseline value is
restored when the outermost window closes. An overlay with no modifications is
observationally identical to the base case.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import date, datetime

import yaml

from .config import Config, ConfigError, coerce_value, resolve_targets


@dataclass
class Modification:
    idx: int
    target: str
    raw_value: object
    start: date
    end: date | None       # inclusive; None with revert=False is permanent
    revert: bool = True


@dataclass
class ResetWip:
    at: date


@dataclass
class ScenarioSpec:
    name: str
    modifications: list[Modification] = field(default_factory=list)
    resets: list[ResetWip] = field(default_factory=list)

    @property
    def is_empty(self) -> bool:
        return not self.modifications and not self.resets


def load_scenario(path, cfg: Config) -> ScenarioSpec:
    with open(path, "r", encoding="utf-8") as fh:
        raw = yaml.safe_load(fh)
    return parse_scenario(raw, cfg)


def parse_scenario(raw, cfg: Config) -> ScenarioSpec:
    """Parse and fully validate an overlay against its base config."""
    errors: list[str] = []
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError(["overlay root must be a mapping"])
    unknown = set(raw) - {"name", "modifications"}
    if unknown:
        raise ConfigError([f"overlay: unknown key {k!r}" for k in sorted(unknown)])
    name = str(raw.get("name", "scenario"))
    mods: list[Modification] = []
    resets: list[ResetWip] = []
    idx = 0
    for i, node in enumerate(raw.get("modifications", []) or []):
        where = f"modifications[{i}]"
        if not isinstance(node, dict):
            errors.append(f"{where}: must be a mapping")
            continue
        if node.get("action") == "reset_wip":
            at = _date(node.get("at"), f"{where}.at", errors)
            if at is not None:
                resets.append(ResetWip(at))
            continue
        window = node.get("window")
        if not isinstance(window, dict) or "start" not in window:
            errors.append(f"{where}: needs window: {{start, end}}")
            continue
        start = _date(window["start"], f"{where}.window.start", errors)
        end = _date(window["end"], f"{where}.window.end", errors) if "end" in window else None
        revert = bool(node.get("revert", True))
        if end is None and revert:
            errors.append(f"{where}: open-ended window requires revert: false")
        targets = node.get("set")
        if not isinstance(targets, dict) or not targets:
            errors.append(f"{where}: needs a set: mapping of target paths")
            continue
        if start is None:
            continue
        for path, value in targets.items():
            mods.append(Modification(idx, str(path), value, start, end, revert))
            idx += 1
    spec = ScenarioSpec(name=name, modifications=mods, resets=resets)
    errors.extend(validate_scenario(spec, cfg))
    if errors:
        raise ConfigError(errors)
    if spec.is_empty:
        spec.name = "base"  # zero modifications: indistinguishable from base
    return spec


def _date(value, where, errors) -> date | None:
    if isinstance(value, datetime):
        return value.date()
    if isinstance(value, date):
        return value
    if isinstance(value, str):
        try:
            return date.fromisoformat(value)
        except ValueError:
            pass
    errors.append(f"{where}: not a date: {value!r}")
    return None


def validate_scenario(spec: ScenarioSpec, cfg: Config) -> list[str]:
    errors = []
    horizon = (cfg.model.start_date, cfg.model.end_date)
    for mod in spec.modifications:
        where = f"target {mod.target!r}"
        try:
            pairs = resolve_targets(cfg, mod.target)
            for obj, fieldname in pairs:
                coerce_value(getattr(obj, fieldname), mod.raw_value)
        except ConfigError as exc:
            errors.extend(f"{where}: {e}" for e in exc.errors)
            continue
        if mod.end is not None and mod.end < mod.start:
            errors.append(f"{where}: window ends before it starts")
        if mod.start < horizon[0] or mod.start > horizon[1]:
            errors.append(f"{where}: window start {mod.start} outside the horizon")
        if mod.end is not None and mod.end > horizon[1]:
            errors.append(f"{where}: window end {mod.end} outside the horizon")
    for reset in spec.resets:
        if reset.at < horizon[0] or reset.at > horizon[1]:
            errors.append(f"reset_wip at {reset.at}: outside the horizon")
    return errors


class ScenarioRuntime:
    """Schedules apply/revert events on a model and tracks baselines.

    Per (object, field) an override stack holds every window currently open;
    the value in force is the one applied last, and the baseline returns only
    when the stack empties.
    """

    def __init__(self, spec: ScenarioSpec):
        self.spec = spec
        self.model = None
        self._baseline: dict[tuple[int, str], object] = {}
        self._stack: dict[tuple[int, str], list[tuple[int, object]]] = {}
        self._objs: dict[int, object] = {}  # keep targets pinned by id

    @property
    def name(self) -> str:
        return self.spec.name

    def attach(self, model) -> None:
        self.model = model
        clock = model.engine.clock
        model.engine.on("scn_apply", self._on_apply)
        model.engine.on("scn_revert", self._on_revert)
        for mod in self.spec.modifications:
            model.engine.schedule(clock.date_to_time(mod.start), "scn_apply",
                                  mod, absolute=True)
            if mod.revert and mod.end is not None:
                model.engine.schedule(clock.date_to_time(mod.end) + 1.0,
                                      "scn_revert", mod, absolute=True)
        if self.spec.resets:
            model.engine.on("scn_reset", lambda ev: model.reset_wip())
            for reset in self.spec.resets:
                model.engine.schedule(clock.date_to_time(reset.at), "scn_reset",
                                      absolute=True)

    def _on_apply(self, ev) -> None:
        mod: Modification = ev.target
        for obj, fieldname in resolve_targets(self.model.cfg, mod.target):
            key = (id(obj), fieldname)
            self._objs[id(obj)] = obj
            if key not in self._baseline:
                self._baseline[key] = getattr(obj, fieldname)
            value = coerce_value(self._baseline[key], mod.raw_value)
            self._stack.setdefault(key, []).append((mod.idx, value))
            setattr(obj, fieldname, value)
            self.model.on_param_changed(obj, fieldname)

    def _on_revert(self, ev) -> None:
        mod: Modification = ev.target
        for obj, fieldname in resolve_targets(self.model.cfg, mod.target):
            key = (id(obj), fieldname)
            stack = self._stack.get(key, [])
            stack = [entry for entry in stack if entry[0] != mod.idx]
            self._stack[key] = stack
            value = stack[-1][1] if stack else self._baseline[key]
            if getattr(obj, fieldname) != value:
                setattr(obj, fieldname, value)
                self.model.on_param_changed(obj, fieldname)
