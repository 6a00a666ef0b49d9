"""Replication harness and on-disk result store.

A run is (config, overlay, base seed, n): replication i simulates seed
base+i, so base and scenario runs pair replication-for-replication on common
random numbers. Results land in a directory store of newline-delimited JSON,
one file per replication, plus a KPI table and a manifest; every byte is a
pure function of the inputs, whatever the worker count.
"""

from __future__ import annotations

import csv
import hashlib
import json
import os
from concurrent.futures import ProcessPoolExecutor

from . import __version__
from .config import Config, config_hash, config_to_dict, parse_config
from .metrics import kpi_summary
from .model import Model, ReplicationResult
from .scenario import ScenarioRuntime, ScenarioSpec, parse_scenario

STORE_FORMAT = "vaxsim-store-1"

KPI_COLUMNS = [
    "scenario", "seed", "time_to_first_dose", "time_to_target", "target_doses",
    "doses_at_365", "doses_total", "mean_monthly_doses", "batches_released",
    "batches_discarded", "max_utilization_resource", "max_utilization",
]


def run_replication(cfg_raw: dict, overlay_raw: dict | None, seed: int) -> ReplicationResult:
    """One fully deterministic replication from plain-dict inputs."""
    cfg = parse_config(cfg_raw)
    scenario = None
    spec = parse_scenario(overlay_raw or {}, cfg)
    if not spec.is_empty:
        scenario = ScenarioRuntime(spec)
    return Model(cfg, seed, scenario=scenario).run()


def _worker(args) -> ReplicationResult:
    cfg_raw, overlay_raw, seed = args
    return run_replication(cfg_raw, overlay_raw, seed)


def run_ensemble(cfg_raw: dict, overlay_raw: dict | None, base_seed: int,
                 replications: int, jobs: int = 1,
                 progress=None) -> list[ReplicationResult]:
    """Replications base_seed .. base_seed+n-1, optionally across processes."""
    tasks = [(cfg_raw, overlay_raw, base_seed + i) for i in range(replications)]
    results = []
    if jobs <= 1:
        for t in tasks:
            results.append(_worker(t))
            if progress:
                progress(len(results), replications)
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for res in pool.map(_worker, tasks):
                results.append(res)
                if progress:
                    progress(len(results), replications)
    return results


# -- serialization -------------------------------------------------------

def _dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def result_to_ndjson(res: ReplicationResult) -> str:
    lines = [_dumps({"kind": "meta", "scenario": res.scenario, "seed": res.seed,
                     "horizon_days": res.horizon_days,
                     "start_date": res.start_date})]
    for name in sorted(res.series):
        lines.append(_dumps({"kind": "series", "name": name,
                             "values": res.series[name]}))
    for b in res.batches:
        lines.append(_dumps(dict(b, kind="batch")))
    lines.append(_dumps(dict(res.counts, kind="counts")))
    return "\n".join(lines) + "\n"


def ndjson_to_result(text: str) -> ReplicationResult:
    res = None
    for line in text.splitlines():
        rec = json.loads(line)
        kind = rec.pop("kind")
        if kind == "meta":
            res = ReplicationResult(**rec)
        elif kind == "series":
            res.series[rec["name"]] = rec["values"]
        elif kind == "batch":
            res.batches.append(rec)
        else:
            res.counts.update(rec)
    return res


def overlay_identity(spec: ScenarioSpec, overlay_raw: dict | None) -> str | None:
    """Canonical overlay hash; an empty overlay has no identity at all."""
    if spec is None or spec.is_empty:
        return None
    canon = {
        "name": spec.name,
        "modifications": [
            {"target": m.target, "value": m.raw_value,
             "start": m.start.isoformat(),
             "end": m.end.isoformat() if m.end else None, "revert": m.revert}
            for m in spec.modifications],
        "resets": [{"at": r.at.isoformat()} for r in spec.resets],
    }
    return hashlib.sha256(_dumps(canon).encode()).hexdigest()


# -- the store -----------------------------------------------------------

def write_store(out_dir: str, results: list[ReplicationResult], cfg: Config,
                spec: ScenarioSpec | None, base_seed: int,
                overlay_raw: dict | None = None) -> dict:
    """Write manifest + per-replication files + KPI table; returns the manifest."""
    rep_dir = os.path.join(out_dir, "replications")
    os.makedirs(rep_dir, exist_ok=True)
    files = []
    for i, res in enumerate(results):
        rel = os.path.join("replications", f"rep_{i:05d}.ndjson")
        files.append(rel)
        with open(os.path.join(out_dir, rel), "w", encoding="utf-8") as fh:
            fh.write(result_to_ndjson(res))

    kpi_path = os.path.join(out_dir, "kpis.csv")
    with open(kpi_path, "w", encoding="utf-8", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=KPI_COLUMNS, extrasaction="ignore",
                           lineterminator="\n")
        w.writeheader()
        for res in results:
            row = kpi_summary(res)
            w.writerow({k: ("" if row.get(k) is None else row.get(k))
                        for k in KPI_COLUMNS})

    scenario = spec.name if spec is not None and not spec.is_empty else "base"
    manifest = {
        "format": STORE_FORMAT,
        "code_version": __version__,
        "scenario": scenario,
        "config_hash": config_hash(cfg),
        "overlay_hash": overlay_identity(spec, overlay_raw),
        "base_seed": base_seed,
        "replications": len(results),
        "horizon_days": results[0].horizon_days if results else 0,
        "start_date": results[0].start_date if results else None,
        "files": files + ["kpis.csv"],
    }
    with open(os.path.join(out_dir, "manifest.json"), "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, sort_keys=True, indent=2)
        fh.write("\n")
    return manifest


def load_store(out_dir: str) -> tuple[dict, list[ReplicationResult]]:
    with open(os.path.join(out_dir, "manifest.json"), encoding="utf-8") as fh:
        manifest = json.load(fh)
    results = []
    for rel in manifest["files"]:
        if not rel.endswith(".ndjson"):
            continue
        with open(os.path.join(out_dir, rel), encoding="utf-8") as fh:
            results.append(ndjson_to_result(fh.read()))
    return manifest, results
