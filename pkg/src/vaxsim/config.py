"""Model configuration: schema, YAML loading, validation, and dot-path access.

The loaded config object is the single source of truth for every model
parameter, and it stays live during a run: scenario overlays mutate it through
dot-paths (``stages.filling.processing_time``, ``qc.teams.*.technicians``) and
the simulation reads parameters back at sample time. Validation collects every
problem it can find and reports them all at once.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, fields, is_dataclass
from datetime import date, datetime

import yaml

from .distributions import Distribution, DistributionError, constant, from_config, to_config
from .engine import DEFAULT_END_DATE, DEFAULT_START_DATE

MILESTONES = ("batch_start", "intermediate", "batch_end")


class ConfigError(ValueError):
    """Carries the full list of validation problems."""

    def __init__(self, errors: list[str]):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


@dataclass
class ModelSection:
    start_date: date = DEFAULT_START_DATE
    end_date: date = DEFAULT_END_DATE
    # scenario hook: stretches every production processing-time draw
    processing_time_multiplier: float = 1.0


@dataclass
class InventoryConfig:
    id: str
    capacity: int | None = None  # None = unbounded
    final: bool = False


@dataclass
class StageConfig:
    id: str
    machines: int
    processing_time: Distribution
    input_inventory: str | None = None   # None = unbounded batch source (first stage)
    output_inventory: str | None = None  # None = direct handoff to the next stage
    yield_fraction: Distribution = field(default_factory=lambda: constant(1.0))
    doses_per_batch: int = 0             # final stage only
    materials: dict[str, float] = field(default_factory=dict)
    ipc_tests: list[str] = field(default_factory=list)
    qc_tests: list[str] = field(default_factory=list)
    milestone: str | None = None         # sample label; defaulted by position
    document_review: bool = False        # spawn a QA document review per batch
    closed: bool = False                 # scenario hook: True suspends the stage


@dataclass
class TeamConfig:
    id: str
    technicians: int
    supervisors: int


@dataclass
class TestConfig:
    id: str
    team: str | None
    prep_time: Distribution
    test_time: Distribution
    check_time: Distribution
    supervisory_check_time: Distribution
    failure_prob: float = 0.0
    prerequisites: list[str] = field(default_factory=list)
    ipc: bool = False


@dataclass
class QcSection:
    teams: list[TeamConfig] = field(default_factory=list)
    tests: list[TestConfig] = field(default_factory=list)


@dataclass
class QaSection:
    reviewers: int = 0
    supervisors: int = 0
    investigators: int = 0
    release_review_time: Distribution = field(default_factory=lambda: constant(0.0))
    release_approval_time: Distribution = field(default_factory=lambda: constant(0.0))
    document_review_time: Distribution = field(default_factory=lambda: constant(0.0))
    oos_investigation_time: Distribution = field(default_factory=lambda: constant(0.0))
    deviation_investigation_time: Distribution = field(default_factory=lambda: constant(0.0))
    deviation_prob: float = 0.0


@dataclass
class SupplierConfig:
    id: str
    split: float
    lead_time: Distribution
    transport_time: Distribution = field(default_factory=lambda: constant(0.0))
    min_interarrival: float = 0.0


@dataclass
class MaterialConfig:
    id: str
    initial_stockpile: float
    reorder_point: float
    safety_stock: float
    lot_size: float
    consumption: dict[str, float] = field(default_factory=dict)
    receipt_qc_time: Distribution = field(default_factory=lambda: constant(0.0))
    receipt_rejection_prob: float = 0.0
    available: bool = True               # scenario hook: False parks all receipts
    suppliers: list[SupplierConfig] = field(default_factory=list)


@dataclass
class MaintenanceWindow:
    start: date
    end: date  # inclusive calendar date


@dataclass
class Config:
    model: ModelSection
    stages: list[StageConfig]
    inventories: list[InventoryConfig]
    qc: QcSection
    qa: QaSection
    materials: list[MaterialConfig]
    maintenance: list[MaintenanceWindow] = field(default_factory=list)

    def stage(self, stage_id: str) -> StageConfig:
        return _by_id(self.stages, stage_id)

    def test(self, test_id: str) -> TestConfig:
        return _by_id(self.qc.tests, test_id)

    def material(self, material_id: str) -> MaterialConfig:
        return _by_id(self.materials, material_id)

    @property
    def final_inventory(self) -> InventoryConfig:
        return next(inv for inv in self.inventories if inv.final)


def _by_id(items, item_id):
    for item in items:
        if item.id == item_id:
            return item
    raise KeyError(item_id)


# ---------------------------------------------------------------------------
# parsing

def load_config(path) -> Config:
    with open(path, "r", encoding="utf-8") as fh:
        raw = yaml.safe_load(fh)
    return parse_config(raw)


def parse_config(raw: dict) -> Config:
    """Build a Config from plain YAML data, then validate it fully."""
    errors: list[str] = []
    if not isinstance(raw, dict):
        raise ConfigError(["config root must be a mapping"])

    model = _parse_model(raw.get("model", {}) or {}, errors)
    inventories = [_parse_inventory(node, i, errors)
                   for i, node in enumerate(raw.get("inventories", []) or [])]
    stages = [_parse_stage(node, i, errors)
              for i, node in enumerate(raw.get("stages", []) or [])]
    qc = _parse_qc(raw.get("qc", {}) or {}, errors)
    qa = _parse_qa(raw.get("qa", {}) or {}, errors)
    materials = [_parse_material(node, i, errors)
                 for i, node in enumerate(raw.get("materials", []) or [])]
    maintenance = _parse_maintenance(raw.get("maintenance", []) or [], errors)

    cfg = Config(model=model, stages=[s for s in stages if s],
                 inventories=[i for i in inventories if i], qc=qc, qa=qa,
                 materials=[m for m in materials if m], maintenance=maintenance)
    errors.extend(validate(cfg))
    if errors:
        raise ConfigError(errors)
    return cfg


def _parse_date(value, where: str, errors: list[str]) -> date:
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
    return DEFAULT_START_DATE


def _parse_dist(node, where: str, errors: list[str]) -> Distribution:
    try:
        return from_config(node)
    except (DistributionError, KeyError, TypeError) as exc:
        errors.append(f"{where}: {exc}")
        return constant(0.0)


def _parse_model(node, errors) -> ModelSection:
    m = ModelSection()
    if "start_date" in node:
        m.start_date = _parse_date(node["start_date"], "model.start_date", errors)
    if "end_date" in node:
        m.end_date = _parse_date(node["end_date"], "model.end_date", errors)
    m.processing_time_multiplier = float(node.get("processing_time_multiplier", 1.0))
    return m


def _parse_inventory(node, idx, errors) -> InventoryConfig | None:
    where = f"inventories[{idx}]"
    if "id" not in node:
        errors.append(f"{where}: missing id")
        return None
    cap = node.get("capacity")
    return InventoryConfig(id=str(node["id"]),
                           capacity=None if cap is None else int(cap),
                           final=bool(node.get("final", False)))


def _parse_stage(node, idx, errors) -> StageConfig | None:
    where = f"stages[{idx}]"
    if "id" not in node:
        errors.append(f"{where}: missing id")
        return None
    where = f"stages.{node['id']}"
    stage = StageConfig(
        id=str(node["id"]),
        machines=int(node.get("machines", 1)),
        processing_time=_parse_dist(node.get("processing_time", 0.0),
                                    f"{where}.processing_time", errors),
        input_inventory=node.get("input_inventory"),
        output_inventory=node.get("output_inventory"),
        doses_per_batch=int(node.get("doses_per_batch", 0)),
        materials={str(k): float(v) for k, v in (node.get("materials") or {}).items()},
        ipc_tests=[str(t) for t in node.get("ipc_tests", []) or []],
        qc_tests=[str(t) for t in node.get("qc_tests", []) or []],
        milestone=node.get("milestone"),
        document_review=bool(node.get("document_review", False)),
    )
    if "yield_fraction" in node:
        stage.yield_fraction = _parse_dist(node["yield_fraction"],
                                           f"{where}.yield_fraction", errors)
    return stage


def _parse_qc(node, errors) -> QcSection:
    teams = []
    for i, t in enumerate(node.get("teams", []) or []):
        if "id" not in t:
            errors.append(f"qc.teams[{i}]: missing id")
            continue
        teams.append(TeamConfig(id=str(t["id"]),
                                technicians=int(t.get("technicians", 0)),
                                supervisors=int(t.get("supervisors", 0))))
    tests = []
    for i, t in enumerate(node.get("tests", []) or []):
        if "id" not in t:
            errors.append(f"qc.tests[{i}]: missing id")
            continue
        where = f"qc.tests.{t['id']}"
        tests.append(TestConfig(
            id=str(t["id"]),
            team=t.get("team"),
            prep_time=_parse_dist(t.get("prep_time", 0.0), f"{where}.prep_time", errors),
            test_time=_parse_dist(t.get("test_time", 0.0), f"{where}.test_time", errors),
            check_time=_parse_dist(t.get("check_time", 0.0), f"{where}.check_time", errors),
            supervisory_check_time=_parse_dist(
                t.get("supervisory_check_time", 0.0),
                f"{where}.supervisory_check_time", errors),
            failure_prob=float(t.get("failure_prob", 0.0)),
            prerequisites=[str(p) for p in t.get("prerequisites", []) or []],
            ipc=bool(t.get("ipc", False)),
        ))
    return QcSection(teams=teams, tests=tests)


def _parse_qa(node, errors) -> QaSection:
    qa = QaSection(reviewers=int(node.get("reviewers", 0)),
                   supervisors=int(node.get("supervisors", 0)),
                   investigators=int(node.get("investigators", 0)),
                   deviation_prob=float(node.get("deviation_prob", 0.0)))
    for name in ("release_review_time", "release_approval_time", "document_review_time",
                 "oos_investigation_time", "deviation_investigation_time"):
        if name in node:
            setattr(qa, name, _parse_dist(node[name], f"qa.{name}", errors))
    return qa


def _parse_material(node, idx, errors) -> MaterialConfig | None:
    where = f"materials[{idx}]"
    if "id" not in node:
        errors.append(f"{where}: missing id")
        return None
    where = f"materials.{node['id']}"
    suppliers = []
    for i, s in enumerate(node.get("suppliers", []) or []):
        if "id" not in s:
            errors.append(f"{where}.suppliers[{i}]: missing id")
            continue
        suppliers.append(SupplierConfig(
            id=str(s["id"]),
            split=float(s.get("split", 1.0)),
            lead_time=_parse_dist(s.get("lead_time", 0.0),
                                  f"{where}.suppliers.{s['id']}.lead_time", errors),
            transport_time=_parse_dist(s.get("transport_time", 0.0),
                                       f"{where}.suppliers.{s['id']}.transport_time", errors),
            min_interarrival=float(s.get("min_interarrival", 0.0)),
        ))
    return MaterialConfig(
        id=str(node["id"]),
        initial_stockpile=float(node.get("initial_stockpile", 0.0)),
        reorder_point=float(node.get("reorder_point", 0.0)),
        safety_stock=float(node.get("safety_stock", 0.0)),
        lot_size=float(node.get("lot_size", 1.0)),
        consumption={str(k): float(v) for k, v in (node.get("consumption") or {}).items()},
        receipt_qc_time=_parse_dist(node.get("receipt_qc_time", 0.0),
                                    f"{where}.receipt_qc_time", errors),
        receipt_rejection_prob=float(node.get("receipt_rejection_prob", 0.0)),
        available=bool(node.get("available", True)),
        suppliers=suppliers,
    )


def _parse_maintenance(nodes, errors) -> list[MaintenanceWindow]:
    windows = []
    for i, node in enumerate(nodes):
        where = f"maintenance[{i}]"
        if not isinstance(node, dict) or "start" not in node or "end" not in node:
            errors.append(f"{where}: needs start and end dates")
            continue
        windows.append(MaintenanceWindow(
            start=_parse_date(node["start"], f"{where}.start", errors),
            end=_parse_date(node["end"], f"{where}.end", errors)))
    # merge overlapping/adjacent windows into a disjoint sorted calendar
    windows.sort(key=lambda w: w.start)
    merged: list[MaintenanceWindow] = []
    for w in windows:
        if merged and w.start <= merged[-1].end:
            if w.end > merged[-1].end:
                merged[-1].end = w.end
        else:
            merged.append(w)
    return merged


# ---------------------------------------------------------------------------
# validation

def validate(cfg: Config) -> list[str]:
    """Full structural validation; returns every problem found."""
    errors: list[str] = []
    _check_model(cfg, errors)
    _check_topology(cfg, errors)
    _check_qc(cfg, errors)
    _check_qa(cfg, errors)
    _check_materials(cfg, errors)
    _check_maintenance(cfg, errors)
    return errors


def _dup_ids(items) -> set[str]:
    seen, dups = set(), set()
    for item in items:
        if item.id in seen:
            dups.add(item.id)
        seen.add(item.id)
    return dups


def _check_model(cfg, errors):
    if cfg.model.end_date <= cfg.model.start_date:
        errors.append("model: end_date must be after start_date")
    if cfg.model.processing_time_multiplier <= 0:
        errors.append("model: processing_time_multiplier must be > 0")


def _check_topology(cfg, errors):
    for dup in sorted(_dup_ids(cfg.inventories)):
        errors.append(f"inventories: duplicate id {dup!r}")
    for dup in sorted(_dup_ids(cfg.stages)):
        errors.append(f"stages: duplicate id {dup!r}")
    if not cfg.stages:
        errors.append("stages: at least one stage required")
        return
    inv_ids = {inv.id for inv in cfg.inventories}
    finals = [inv.id for inv in cfg.inventories if inv.final]
    if len(finals) != 1:
        errors.append(f"inventories: exactly one final inventory required, found {len(finals)}")

    first = cfg.stages[0]
    if first.input_inventory is not None:
        errors.append(f"stages.{first.id}: first stage must have no input inventory "
                      "(it draws from the unbounded batch source)")
    for prev, nxt in zip(cfg.stages, cfg.stages[1:]):
        if nxt.input_inventory != prev.output_inventory:
            errors.append(
                f"stages.{nxt.id}: input_inventory {nxt.input_inventory!r} does not "
                f"match upstream output_inventory {prev.output_inventory!r}")
    last = cfg.stages[-1]
    if last.output_inventory is None or last.output_inventory not in inv_ids:
        errors.append(f"stages.{last.id}: final stage must output to a declared inventory")
    elif finals and last.output_inventory != finals[0]:
        errors.append(f"stages.{last.id}: final stage must output to the final inventory")
    for stage in cfg.stages:
        for name in (stage.input_inventory, stage.output_inventory):
            if name is not None and name not in inv_ids:
                errors.append(f"stages.{stage.id}: unknown inventory {name!r}")
        if stage.machines < 1:
            errors.append(f"stages.{stage.id}: machines must be >= 1")
        if stage.milestone is not None and stage.milestone not in MILESTONES:
            errors.append(f"stages.{stage.id}: unknown milestone {stage.milestone!r}")
        if stage is not last and stage.doses_per_batch:
            errors.append(f"stages.{stage.id}: doses_per_batch is final-stage only")
    if last.doses_per_batch <= 0:
        errors.append(f"stages.{last.id}: final stage needs doses_per_batch > 0")
    # a non-final inventory must sit between two stages; capacity sanity
    used = set()
    for stage in cfg.stages:
        used.update(n for n in (stage.input_inventory, stage.output_inventory) if n)
    for inv in cfg.inventories:
        if inv.id not in used:
            errors.append(f"inventories.{inv.id}: not referenced by any stage")
        if inv.capacity is not None and inv.capacity < 1:
            errors.append(f"inventories.{inv.id}: capacity must be >= 1 or null")


def _check_qc(cfg, errors):
    for dup in sorted(_dup_ids(cfg.qc.teams)):
        errors.append(f"qc.teams: duplicate id {dup!r}")
    for dup in sorted(_dup_ids(cfg.qc.tests)):
        errors.append(f"qc.tests: duplicate id {dup!r}")
    team_ids = {t.id for t in cfg.qc.teams}
    test_ids = {t.id for t in cfg.qc.tests}
    for team in cfg.qc.teams:
        if team.technicians < 0 or team.supervisors < 0:
            errors.append(f"qc.teams.{team.id}: head-counts must be >= 0")
    for test in cfg.qc.tests:
        if test.ipc:
            if test.team is not None:
                errors.append(f"qc.tests.{test.id}: in-process tests take no team")
        elif test.team not in team_ids:
            errors.append(f"qc.tests.{test.id}: unknown team {test.team!r}")
        if not 0.0 <= test.failure_prob <= 1.0:
            errors.append(f"qc.tests.{test.id}: failure_prob must be in [0, 1]")
        for pre in test.prerequisites:
            if pre not in test_ids:
                errors.append(f"qc.tests.{test.id}: unknown prerequisite {pre!r}")
    _check_prereq_cycles(cfg, errors)
    for stage in cfg.stages:
        for tid in stage.ipc_tests:
            if tid not in test_ids:
                errors.append(f"stages.{stage.id}: unknown test {tid!r}")
            elif not cfg.test(tid).ipc:
                errors.append(f"stages.{stage.id}: {tid!r} is not an in-process test")
        listed = set(stage.qc_tests)
        for tid in stage.qc_tests:
            if tid not in test_ids:
                errors.append(f"stages.{stage.id}: unknown test {tid!r}")
                continue
            test = cfg.test(tid)
            if test.ipc:
                errors.append(f"stages.{stage.id}: {tid!r} is in-process, not a sample test")
            missing = [p for p in test.prerequisites if p not in listed]
            if missing:
                errors.append(f"stages.{stage.id}: {tid!r} needs prerequisites "
                              f"{missing} on the same sample")


def _check_prereq_cycles(cfg, errors):
    graph = {t.id: [p for p in t.prerequisites] for t in cfg.qc.tests}
    state: dict[str, int] = {}  # 0 visiting, 1 done

    def visit(node, trail):
        if state.get(node) == 1:
            return
        if state.get(node) == 0:
            errors.append(f"qc.tests: prerequisite cycle through {node!r}")
            return
        state[node] = 0
        for pre in graph.get(node, []):
            if pre in graph:
                visit(pre, trail)
        state[node] = 1

    for node in graph:
        visit(node, [])


def _check_qa(cfg, errors):
    qa = cfg.qa
    for name in ("reviewers", "supervisors", "investigators"):
        if getattr(qa, name) < 0:
            errors.append(f"qa.{name}: must be >= 0")
    if not 0.0 <= qa.deviation_prob <= 1.0:
        errors.append("qa.deviation_prob: must be in [0, 1]")


def _check_materials(cfg, errors):
    for dup in sorted(_dup_ids(cfg.materials)):
        errors.append(f"materials: duplicate id {dup!r}")
    stage_ids = {s.id for s in cfg.stages}
    material_ids = {m.id for m in cfg.materials}
    for stage in cfg.stages:
        for mid, qty in stage.materials.items():
            if mid not in material_ids:
                errors.append(f"stages.{stage.id}: unknown material {mid!r}")
            if qty <= 0:
                errors.append(f"stages.{stage.id}: material quantity for {mid!r} must be > 0")
    for mat in cfg.materials:
        where = f"materials.{mat.id}"
        if mat.lot_size <= 0:
            errors.append(f"{where}: lot_size must be > 0")
        for name in ("initial_stockpile", "reorder_point", "safety_stock"):
            if getattr(mat, name) < 0:
                errors.append(f"{where}: {name} must be >= 0")
        if not 0.0 <= mat.receipt_rejection_prob <= 1.0:
            errors.append(f"{where}: receipt_rejection_prob must be in [0, 1]")
        for sid, qty in mat.consumption.items():
            if sid not in stage_ids:
                errors.append(f"{where}: consumption names unknown stage {sid!r}")
            if qty <= 0:
                errors.append(f"{where}: consumption at {sid!r} must be > 0")
        for stage in cfg.stages:
            declared = stage.materials.get(mat.id)
            policy = mat.consumption.get(stage.id)
            if declared is not None and policy is not None and declared != policy:
                errors.append(f"{where}: consumption at {stage.id!r} disagrees with "
                              f"the stage's material requirement")
        if not mat.suppliers:
            errors.append(f"{where}: at least one supplier required")
            continue
        dups = _dup_ids(mat.suppliers)
        for dup in sorted(dups):
            errors.append(f"{where}.suppliers: duplicate id {dup!r}")
        total = sum(s.split for s in mat.suppliers)
        if abs(total - 1.0) > 1e-6:
            errors.append(f"{where}: supplier splits sum to {total:g}, expected 1")
        for sup in mat.suppliers:
            if sup.split < 0:
                errors.append(f"{where}.suppliers.{sup.id}: split must be >= 0")
            if sup.min_interarrival < 0:
                errors.append(f"{where}.suppliers.{sup.id}: min_interarrival must be >= 0")


def _check_maintenance(cfg, errors):
    for w in cfg.maintenance:
        if w.end < w.start:
            errors.append(f"maintenance: window {w.start}..{w.end} ends before it starts")
        if w.end < cfg.model.start_date:
            errors.append(f"maintenance: window {w.start}..{w.end} lies before the "
                          "simulation start")
        if w.start > cfg.model.end_date:
            errors.append(f"maintenance: window {w.start}..{w.end} lies after the "
                          "simulation end")


# ---------------------------------------------------------------------------
# canonical form: hashing, deep comparison, reporting

def config_to_dict(obj):
    """Plain-data mirror of the config tree, stable under round-trips."""
    if is_dataclass(obj) and isinstance(obj, Distribution):
        return to_config(obj)
    if is_dataclass(obj):
        return {f.name: config_to_dict(getattr(obj, f.name)) for f in fields(obj)}
    if isinstance(obj, dict):
        return {k: config_to_dict(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [config_to_dict(v) for v in obj]
    if isinstance(obj, date):
        return obj.isoformat()
    return obj


def config_hash(cfg: Config) -> str:
    blob = json.dumps(config_to_dict(cfg), sort_keys=True)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


# ---------------------------------------------------------------------------
# dot-path targeting (used by scenario overlays)

_LIST_SECTIONS = {"stages", "inventories", "materials", "teams", "tests", "suppliers"}


def resolve_targets(cfg: Config, path: str) -> list[tuple[object, str]]:
    """Resolve a dot-path to (object, field) pairs; ``*`` fans out over lists.

    Examples: ``model.processing_time_multiplier``, ``stages.filling.closed``,
    ``qc.teams.*.technicians``, ``materials.vials.suppliers.main.lead_time``.
    """
    tokens = path.split(".")
    if len(tokens) < 2:
        raise ConfigError([f"target {path!r}: too short"])
    current: list[object] = [cfg]
    for tok in tokens[:-1]:
        nxt: list[object] = []
        for obj in current:
            if isinstance(obj, list):
                if tok == "*":
                    nxt.extend(obj)
                else:
                    try:
                        nxt.append(_by_id(obj, tok))
                    except KeyError:
                        raise ConfigError(
                            [f"target {path!r}: no element with id {tok!r}"]) from None
            elif is_dataclass(obj) and hasattr(obj, tok):
                nxt.append(getattr(obj, tok))
            else:
                raise ConfigError([f"target {path!r}: cannot descend into {tok!r}"])
        current = nxt
    leaf = tokens[-1]
    out = []
    for obj in current:
        if not (is_dataclass(obj) and hasattr(obj, leaf)):
            raise ConfigError([f"target {path!r}: no field {leaf!r}"])
        if isinstance(getattr(obj, leaf), (list, dict, Config)):
            raise ConfigError([f"target {path!r}: {leaf!r} is not a settable value"])
        out.append((obj, leaf))
    if not out:
        raise ConfigError([f"target {path!r}: matched nothing"])
    return out


def coerce_value(baseline, raw):
    """Interpret an override value against the baseline it replaces.

    ``{scale: k}`` multiplies the baseline (number or distribution); a
    distribution spec replaces a distribution; plain scalars replace scalars
    with the baseline's type.
    """
    if isinstance(raw, dict) and set(raw) == {"scale"}:
        factor = float(raw["scale"])
        if isinstance(baseline, Distribution):
            return baseline.scaled(factor)
        if isinstance(baseline, bool) or not isinstance(baseline, (int, float)):
            raise ConfigError([f"cannot scale a {type(baseline).__name__} value"])
        value = baseline * factor
        return int(round(value)) if isinstance(baseline, int) else value
    if isinstance(baseline, Distribution):
        return from_config(raw)
    if isinstance(baseline, bool):
        if not isinstance(raw, bool):
            raise ConfigError([f"expected true/false, got {raw!r}"])
        return raw
    if isinstance(baseline, int) and isinstance(raw, (int, float)):
        return int(raw)
    if isinstance(baseline, float) and isinstance(raw, (int, float)):
        return float(raw)
    if baseline is None or isinstance(baseline, str):
        return raw
    raise ConfigError([f"cannot override {type(baseline).__name__} with {raw!r}"])
