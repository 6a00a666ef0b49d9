"""Command line front end.

Verbs: validate (parse and check inputs), run (simulate an ensemble into a
result store), compare (cross-scenario statistics over existing stores),
report (markdown report plus tidy CSVs). Validation failures exit nonzero
with a single machine-readable JSON object on stderr.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np
import yaml

from .config import ConfigError, parse_config
from .metrics import compare_scenarios, kpi_summary
from .report import write_report
from .runner import load_store, run_ensemble, write_store
from .scenario import parse_scenario

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_INVALID = 2


def _fail(kind: str, messages) -> int:
    if isinstance(messages, str):
        messages = [messages]
    print(json.dumps({"error": kind, "messages": list(messages)}),
          file=sys.stderr)
    return EXIT_INVALID


def _load_yaml(path: str):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return yaml.safe_load(fh)
    except FileNotFoundError:
        raise ConfigError([f"no such file: {path}"])
    except yaml.YAMLError as exc:
        raise ConfigError([f"{path}: {exc}"])


def _load_inputs(args):
    cfg_raw = _load_yaml(args.config)
    overlay_raw = _load_yaml(args.scenario) if args.scenario else {}
    overlay_raw = overlay_raw or {}
    cfg = parse_config(cfg_raw)
    spec = parse_scenario(overlay_raw, cfg)
    return cfg_raw, overlay_raw, cfg, spec


def cmd_validate(args) -> int:
    try:
        _load_inputs(args)
    except ConfigError as exc:
        return _fail("validation", exc.errors)
    print("ok")
    return EXIT_OK


def cmd_run(args) -> int:
    try:
        cfg_raw, overlay_raw, cfg, spec = _load_inputs(args)
    except ConfigError as exc:
        return _fail("validation", exc.errors)

    n = args.replications
    done = 0

    def progress(i: int, total: int) -> None:
        nonlocal done
        done = i
        step = max(1, total // 10)
        if i == total or i % step == 0:
            print(f"  replication {i}/{total}", file=sys.stderr)

    try:
        results = run_ensemble(cfg_raw, overlay_raw, args.seed, n,
                               jobs=args.jobs, progress=progress)
    except Exception as exc:  # noqa: BLE001  report the seed for replay
        failing = args.seed + done
        print(json.dumps({"error": "replication", "seed": failing,
                          "messages": [str(exc)]}), file=sys.stderr)
        return EXIT_RUNTIME

    manifest = write_store(args.out, results, cfg, spec, args.seed,
                           overlay_raw)
    _digest(manifest, results, args.out)
    return EXIT_OK


def _digest(manifest: dict, results, out_dir: str) -> None:
    ks = [kpi_summary(r) for r in results]
    ttfd = [k["time_to_first_dose"] for k in ks
            if k["time_to_first_dose"] is not None]
    total = float(np.mean([k["doses_total"] for k in ks]))
    at365 = float(np.mean([k["doses_at_365"] for k in ks]))
    print(f"scenario={manifest['scenario']} replications={manifest['replications']}")
    if ttfd:
        print(f"  first dose: day {np.mean(ttfd):.1f}")
    print(f"  released doses: {at365 / 1e6:.2f}M at 12 months, "
          f"{total / 1e6:.2f}M total")
    worst = max(ks, key=lambda k: k["max_utilization"])
    print(f"  busiest resource: {worst['max_utilization_resource']} "
          f"({worst['max_utilization'] * 100:.0f}%)")
    print(f"  store: {len(manifest['files'])} files in {out_dir}")


def _load_stores(paths):
    stores = []
    for p in paths:
        stores.append(load_store(p))
    return stores


def cmd_compare(args) -> int:
    try:
        stores = _load_stores(args.stores)
    except (OSError, ValueError, KeyError) as exc:
        return _fail("store", str(exc))
    ens = {m["scenario"]: res for m, res in stores}
    if "base" not in ens:
        return _fail("store", "comparison needs a store with scenario 'base'")
    horizon = stores[0][0]["horizon_days"]
    at_days = tuple(dict.fromkeys(d for d in (365, horizon) if d <= horizon))
    rows = compare_scenarios(ens, at_days=at_days)
    header = ["scenario", "day", "n", "mean_doses", "ci_low", "ci_high",
              "delta_pct", "p_value", "significant"]
    print("\t".join(header))
    for r in rows:
        print("\t".join("" if r[k] is None else str(r[k]) for k in header))
    return EXIT_OK


def cmd_report(args) -> int:
    try:
        stores = _load_stores(args.stores)
    except (OSError, ValueError, KeyError) as exc:
        return _fail("store", str(exc))
    path = write_report(stores, args.out)
    print(path)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="vaxsim",
        description="Discrete-event simulation of a vaccine production, "
                    "quality, and materials supply chain.")
    sub = ap.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("validate", help="check a config and optional scenario")
    p.add_argument("--config", required=True)
    p.add_argument("--scenario")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("run", help="simulate an ensemble into a result store")
    p.add_argument("--config", required=True)
    p.add_argument("--scenario")
    p.add_argument("--replications", type=int, default=100)
    p.add_argument("--seed", type=int, default=12345)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("compare", help="compare stores against the base store")
    p.add_argument("stores", nargs="+")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("report", help="write report.md and tidy CSVs")
    p.add_argument("stores", nargs="+")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_report)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
