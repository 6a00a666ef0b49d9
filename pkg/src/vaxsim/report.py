"""Report assembly: markdown summary plus plot-ready tidy CSV files.

Input is one or more result stores (manifest + replication results). With a
single store the report covers throughput, lead times, utilization, and
stockouts; given a base store and scenario stores it adds the cross-scenario
comparison table and recovery findings.
"""

from __future__ import annotations

import csv
import os

import numpy as np

from .metrics import (bottleneck_report, compare_scenarios, detect_recovery,
                      kpi_summary, lead_time_histogram)

MONTH_DAYS = 30


def _mean_ci(values) -> tuple[float, float, float]:
    arr = np.asarray(values, dtype=float)
    m = float(arr.mean())
    if len(arr) < 2:
        return m, m, m
    half = 1.96 * float(arr.std(ddof=1)) / len(arr) ** 0.5
    return m, m - half, m + half


def _write_csv(path: str, header: list[str], rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _series_matrix(results, name: str) -> np.ndarray:
    return np.array([r.series[name] for r in results], dtype=float)


def _fmt_m(doses: float) -> str:
    return f"{doses / 1e6:.1f}"


def _ensembles(stores) -> dict[str, list]:
    out = {}
    for manifest, results in stores:
        out[manifest["scenario"]] = results
    return out


def write_report(stores: list[tuple[dict, list]], out_dir: str) -> str:
    """Emit report.md and CSVs under out_dir; returns the report path."""
    os.makedirs(out_dir, exist_ok=True)
    ens = _ensembles(stores)
    base_name = "base" if "base" in ens else stores[0][0]["scenario"]
    horizon = stores[0][0]["horizon_days"]
    at_days = tuple(dict.fromkeys(d for d in (365, horizon) if d <= horizon))

    _emit_throughput(ens, out_dir)
    _emit_histogram(ens, out_dir)
    _emit_utilization(ens, out_dir)
    _emit_queues(ens, out_dir)
    _emit_inventory(ens, out_dir)
    _emit_stockouts(ens, out_dir, horizon)

    comparison = recovery = None
    if len(ens) > 1 and base_name in ens:
        comparison = compare_scenarios(ens, base=base_name, at_days=at_days)
        _write_csv(os.path.join(out_dir, "comparison.csv"),
                   ["scenario", "day", "n", "mean_doses", "ci_low", "ci_high",
                    "delta_pct", "p_value", "significant"],
                   [[r["scenario"], r["day"], r["n"], r["mean_doses"],
                     r["ci_low"], r["ci_high"],
                     "" if r["delta_pct"] is None else r["delta_pct"],
                     "" if r["p_value"] is None else r["p_value"],
                     r["significant"]] for r in comparison])
        recovery = {}
        for name in sorted(ens):
            if name == base_name:
                continue
            recovery[name] = detect_recovery(ens[base_name], ens[name])
        _write_csv(os.path.join(out_dir, "recovery.csv"),
                   ["scenario", "disrupted", "start_day", "end_day",
                    "duration_days", "recovery_weeks", "recovered"],
                   [[n, r["disrupted"],
                     "" if r["start_day"] is None else r["start_day"],
                     "" if r["end_day"] is None else r["end_day"],
                     r["duration_days"],
                     "" if r["recovery_weeks"] is None else r["recovery_weeks"],
                     r["recovered"]] for n, r in sorted(recovery.items())])

    path = os.path.join(out_dir, "report.md")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(_render_markdown(stores, ens, base_name, at_days,
                                  comparison, recovery))
    return path


# -- tidy CSV families ---------------------------------------------------

def _emit_throughput(ens, out_dir) -> None:
    monthly_rows, cum_rows = [], []
    for name in sorted(ens):
        daily = _series_matrix(ens[name], "released_doses")
        cum = daily.cumsum(axis=1)
        months = daily.shape[1] // MONTH_DAYS
        for mth in range(months):
            sl = daily[:, mth * MONTH_DAYS:(mth + 1) * MONTH_DAYS].sum(axis=1)
            m, lo, hi = _mean_ci(sl)
            monthly_rows.append([name, mth + 1, m, lo, hi])
        for day in range(daily.shape[1]):
            m, lo, hi = _mean_ci(cum[:, day])
            cum_rows.append([name, day + 1, m, lo, hi])
    _write_csv(os.path.join(out_dir, "monthly_throughput.csv"),
               ["scenario", "month", "mean_doses", "ci_low", "ci_high"],
               monthly_rows)
    _write_csv(os.path.join(out_dir, "cumulative_throughput.csv"),
               ["scenario", "day", "mean_doses", "ci_low", "ci_high"],
               cum_rows)


def _emit_histogram(ens, out_dir) -> None:
    rows = []
    for name in sorted(ens):
        pooled: dict[int, int] = {}
        for res in ens[name]:
            for bin_start, count in lead_time_histogram(res).items():
                pooled[bin_start] = pooled.get(bin_start, 0) + count
        n = len(ens[name])
        for bin_start in sorted(pooled):
            rows.append([name, bin_start, bin_start + 10,
                         pooled[bin_start] / n])
    _write_csv(os.path.join(out_dir, "lead_time_histogram.csv"),
               ["scenario", "bin_start_days", "bin_end_days",
                "mean_batches_per_replication"], rows)


def _util_keys(results) -> list[str]:
    return sorted(k for k in results[0].series
                  if k.startswith(("stage_util.", "pool_util.")))


def _emit_utilization(ens, out_dir) -> None:
    rows = []
    for name in sorted(ens):
        for key in _util_keys(ens[name]):
            kind, _, resource = key.partition(".")
            series = _series_matrix(ens[name], key).mean(axis=0)
            kindname = "machines" if kind == "stage_util" else "personnel"
            for day, v in enumerate(series):
                rows.append([name, resource, kindname, day + 1, round(v, 6)])
    _write_csv(os.path.join(out_dir, "utilization.csv"),
               ["scenario", "resource", "kind", "day", "mean_utilization"],
               rows)


def _emit_queues(ens, out_dir) -> None:
    rows = []
    for name in sorted(ens):
        keys = sorted(k for k in ens[name][0].series
                      if k.startswith("pool_queue."))
        for key in keys:
            pool = key.split(".", 1)[1]
            series = _series_matrix(ens[name], key).mean(axis=0)
            for day, v in enumerate(series):
                rows.append([name, pool, day + 1, round(v, 6)])
    _write_csv(os.path.join(out_dir, "queue_lengths.csv"),
               ["scenario", "pool", "day", "mean_queue_length"], rows)


def _emit_inventory(ens, out_dir) -> None:
    rows = []
    for name in sorted(ens):
        keys = sorted(k for k in ens[name][0].series
                      if k.startswith("material_level."))
        for key in keys:
            mid = key.split(".", 1)[1]
            series = _series_matrix(ens[name], key).mean(axis=0)
            for day, v in enumerate(series):
                rows.append([name, mid, day + 1, round(v, 6)])
    _write_csv(os.path.join(out_dir, "inventory_levels.csv"),
               ["scenario", "material", "day", "mean_batch_equivalents"], rows)


def _emit_stockouts(ens, out_dir, horizon) -> None:
    rows = []
    years = horizon / 365.0 if horizon else 1.0
    for name in sorted(ens):
        keys = sorted(k for k in ens[name][0].series
                      if k.startswith("material_stockout."))
        for key in keys:
            mid = key.split(".", 1)[1]
            per_rep = [res.counts[f"material_stockout_days.{mid}"]
                       for res in ens[name]]
            m, _, _ = _mean_ci(per_rep)
            rows.append([name, mid, round(m / years, 2)])
    _write_csv(os.path.join(out_dir, "stockouts.csv"),
               ["scenario", "material", "stockout_days_per_year"], rows)


# -- markdown ------------------------------------------------------------

def _render_markdown(stores, ens, base_name, at_days, comparison, recovery) -> str:
    lines = ["# Simulation report", ""]
    m0 = stores[0][0]
    lines += [
        f"Config `{m0['config_hash'][:12]}`, horizon {m0['horizon_days']} days "
        f"from {m0['start_date']}.",
        "",
        "| scenario | replications | base seed |",
        "|---|---|---|",
    ]
    for manifest, results in stores:
        lines.append(f"| {manifest['scenario']} | {manifest['replications']} "
                     f"| {manifest['base_seed']} |")
    lines.append("")

    lines += ["## Key performance indicators", "",
              "| scenario | first dose (day) | doses at 12m (M) "
              "| doses total (M) | released | discarded |", "|---|---|---|---|---|---|"]
    for name in sorted(ens, key=lambda n: (n != base_name, n)):
        ks = [kpi_summary(r) for r in ens[name]]
        ttfd = [k["time_to_first_dose"] for k in ks if k["time_to_first_dose"]]
        lines.append("| {} | {:.1f} | {} | {} | {:.1f} | {:.1f} |".format(
            name,
            float(np.mean(ttfd)) if ttfd else float("nan"),
            _fmt_m(float(np.mean([k["doses_at_365"] for k in ks]))),
            _fmt_m(float(np.mean([k["doses_total"] for k in ks]))),
            float(np.mean([k["batches_released"] for k in ks])),
            float(np.mean([k["batches_discarded"] for k in ks]))))
    lines.append("")

    if base_name in ens:
        lines += ["## Bottlenecks (base)", "",
                  "| rank | resource | kind | mean utilization |",
                  "|---|---|---|---|"]
        for i, row in enumerate(bottleneck_report(ens[base_name])[:10], 1):
            flag = " **bottleneck**" if row["bottleneck"] else ""
            lines.append(f"| {i} | {row['resource']}{flag} | {row['kind']} "
                         f"| {row['utilization'] * 100:.1f}% |")
        lines.append("")

    if comparison:
        lines += ["## Scenario comparison", "",
                  "| scenario | horizon (days) | doses (M) [95% CI] | change | p |",
                  "|---|---|---|---|---|"]
        for r in comparison:
            ci = f"{_fmt_m(r['mean_doses'])} [{_fmt_m(r['ci_low'])}; {_fmt_m(r['ci_high'])}]"
            delta = "" if r["delta_pct"] is None else f"{r['delta_pct']:+.1f}%"
            if r["p_value"] is None:
                p = ""
            elif r["p_value"] < 0.001:
                p = "<0.001"
            else:
                p = f"{r['p_value']:.3f}"
            lines.append(f"| {r['scenario']} | {r['day']} | {ci} | {delta} | {p} |")
        lines.append("")

    if recovery:
        lines += ["## Recovery", "",
                  "| scenario | disrupted | window (days) | weeks | recovered |",
                  "|---|---|---|---|---|"]
        for name, r in sorted(recovery.items()):
            window = ("-" if r["start_day"] is None else
                      f"{r['start_day']}..{r['end_day'] if r['end_day'] is not None else 'open'}")
            weeks = "-" if r["recovery_weeks"] is None else str(r["recovery_weeks"])
            lines.append(f"| {name} | {r['disrupted']} | {window} | {weeks} "
                         f"| {r['recovered']} |")
        lines.append("")

    lines += ["## Files", "",
              "Tidy CSVs beside this report: monthly and cumulative throughput, "
              "lead-time histogram, utilization, queue lengths, inventory "
              "levels (batch equivalents), stockout days per year" +
              (", scenario comparison, recovery windows." if comparison
               else "."), ""]
    return "\n".join(lines)
