"""KPIs, bottleneck ranking, recovery detection, and ensemble comparison.

Everything here is pure post-processing over replication results: daily
released-dose series, utilization series, and batch logs. Disruption windows
are judged across replication ensembles with Welch t-tests on a trailing
30-day smoothed series; the smoothing window's carry-over is subtracted before
an interval is expressed in weeks, so a six-week dip reads as six weeks, not
ten.
"""

from __future__ import annotations

import math
import warnings

import numpy as np
from scipy import stats

SMOOTH_WINDOW = 30
ALPHA = 0.05
TARGET_DOSES = 50_000_000


def _daily_series(obj) -> list[float]:
    if hasattr(obj, "series"):
        return obj.series["released_doses"]
    return list(obj)


def rolling_mean_trailing(xs, window: int = SMOOTH_WINDOW) -> np.ndarray:
    """Trailing mean; early days average over what exists so far."""
    arr = np.asarray(xs, dtype=float)
    cum = np.cumsum(arr)
    out = np.empty_like(cum)
    out[:window] = cum[:window] / np.arange(1, min(window, len(arr)) + 1)
    if len(arr) > window:
        out[window:] = (cum[window:] - cum[:-window]) / window
    return out


def time_to_first_dose(result) -> int | None:
    """1-based day of the first released dose; None when censored."""
    daily = _daily_series(result)
    for d, v in enumerate(daily):
        if v > 0:
            return d + 1
    return None


def time_to_target(result, target: float = TARGET_DOSES) -> int | None:
    daily = _daily_series(result)
    cum = 0.0
    for d, v in enumerate(daily):
        cum += v
        if cum >= target:
            return d + 1
    return None


def doses_by_day(result, day: int) -> float:
    """Cumulative released doses over the first ``day`` days."""
    daily = _daily_series(result)
    return float(sum(daily[:day]))


def lead_time_histogram(result, bin_days: int = 10) -> dict[int, int]:
    """Released-batch lead times (creation to release), 10-day bins keyed by
    bin start; counts sum to the number of released batches."""
    hist: dict[int, int] = {}
    for b in result.batches:
        if b["state"] != "released":
            continue
        lead = b["released_at"] - b["created_at"]
        bin_start = int(lead // bin_days) * bin_days
        hist[bin_start] = hist.get(bin_start, 0) + 1
    return dict(sorted(hist.items()))


def kpi_summary(result, target: float = TARGET_DOSES) -> dict:
    daily = _daily_series(result)
    horizon = len(daily)
    total = float(sum(daily))
    ranked = bottleneck_report(result)
    top = ranked[0] if ranked else None
    return {
        "scenario": result.scenario,
        "seed": result.seed,
        "time_to_first_dose": time_to_first_dose(result),
        "time_to_target": time_to_target(result, target),
        "target_doses": target,
        "doses_at_365": doses_by_day(result, 365),
        "doses_total": total,
        "mean_monthly_doses": total * 30.0 / horizon if horizon else 0.0,
        "batches_released": result.counts["batches_released"],
        "batches_discarded": result.counts["batches_discarded"],
        "lead_time_histogram": lead_time_histogram(result),
        "max_utilization_resource": top["resource"] if top else None,
        "max_utilization": top["utilization"] if top else 0.0,
    }


# -- bottlenecks ---------------------------------------------------------

def bottleneck_report(results) -> list[dict]:
    """Resources ranked by mean utilization, machines against personnel.

    Accepts one result or an ensemble; ensembles are averaged per resource.
    The top entry carries the bottleneck flag.
    """
    if hasattr(results, "series"):
        results = [results]
    if not results:
        return []
    acc: dict[str, list[float]] = {}
    for res in results:
        for key, series in res.series.items():
            if key.startswith("stage_util.") or key.startswith("pool_util."):
                acc.setdefault(key, []).append(float(np.mean(series)))
    rows = []
    for key, means in acc.items():
        kind, _, name = key.partition(".")
        rows.append({
            "resource": name,
            "kind": "machines" if kind == "stage_util" else "personnel",
            "utilization": float(np.mean(means)),
        })
    rows.sort(key=lambda r: (-r["utilization"], r["resource"]))
    for i, row in enumerate(rows):
        row["bottleneck"] = i == 0 and row["utilization"] > 0.0
    return rows


# -- recovery detection --------------------------------------------------

def _smoothed_matrix(ensemble, window: int) -> np.ndarray:
    series = [_daily_series(r) for r in ensemble]
    lengths = {len(s) for s in series}
    if len(lengths) != 1:
        raise ValueError(f"mixed horizon lengths: {sorted(lengths)}")
    return np.vstack([rolling_mean_trailing(s, window) for s in series])


def detect_recovery(base_ensemble, scen_ensemble,
                    window: int = SMOOTH_WINDOW, alpha: float = ALPHA) -> dict:
    """Find the interval where the scenario runs significantly below base.

    Daily one-sided Welch t-tests (scenario < base) on trailing-smoothed
    released doses across replications. The disruption opens at the first
    day with p < alpha and closes at the next day at or above alpha; the
    reported weeks subtract the window - 1 days the trailing mean keeps a
    finished dip visible. A scenario that turns significant again after
    closing, or never closes, counts as not recovered.
    """
    if len(base_ensemble) < 2 or len(scen_ensemble) < 2:
        raise ValueError("need at least two replications per ensemble")
    base = _smoothed_matrix(base_ensemble, window)
    scen = _smoothed_matrix(scen_ensemble, window)
    if base.shape[1] != scen.shape[1]:
        raise ValueError(
            f"horizon mismatch: base {base.shape[1]} vs scenario {scen.shape[1]}")
    with np.errstate(divide="ignore", invalid="ignore"), \
            warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        p = stats.ttest_ind(scen, base, axis=0, equal_var=False,
                            alternative="less").pvalue
    sig = np.nan_to_num(p, nan=1.0) < alpha  # no variance, no verdict

    out = {"disrupted": False, "recovered": True, "start_day": None,
           "end_day": None, "duration_days": 0, "recovery_weeks": None}
    hits = np.flatnonzero(sig)
    if hits.size == 0:
        return out
    start = int(hits[0])
    after = np.flatnonzero(~sig[start:])
    out.update(disrupted=True, start_day=start)
    if after.size == 0:
        out.update(recovered=False, duration_days=len(sig) - start)
        return out
    end = start + int(after[0])
    out.update(end_day=end, duration_days=end - start)
    if np.any(sig[end:]):
        out["recovered"] = False
        return out
    adjusted = max(end - start - (window - 1), 1)
    out["recovery_weeks"] = math.ceil(adjusted / 7)
    return out


# -- cross-scenario comparison -------------------------------------------

def compare_scenarios(ensembles: dict[str, list], base: str = "base",
                      at_days: tuple[int, ...] = (365, 1095),
                      alpha: float = ALPHA) -> list[dict]:
    """Table of released doses per scenario and horizon against the base.

    Per cell: replication mean, normal-approximation 95% CI, relative change
    against the base ensemble, and a two-sided Welch t-test p-value. The base
    rows carry empty delta and p.
    """
    if base not in ensembles:
        raise ValueError(f"no ensemble named {base!r}")
    totals = {
        name: {day: np.array([doses_by_day(r, day) for r in ens], dtype=float)
               for day in at_days}
        for name, ens in ensembles.items()
    }
    rows = []
    names = [base] + sorted(n for n in ensembles if n != base)
    for name in names:
        for day in at_days:
            vals = totals[name][day]
            n = len(vals)
            mean = float(vals.mean())
            half = 1.96 * vals.std(ddof=1) / math.sqrt(n) if n > 1 else 0.0
            row = {"scenario": name, "day": day, "n": n, "mean_doses": mean,
                   "ci_low": mean - half, "ci_high": mean + half,
                   "delta_pct": None, "p_value": None, "significant": False}
            if name != base:
                ref = totals[base][day]
                if ref.mean():
                    row["delta_pct"] = 100.0 * (mean - ref.mean()) / ref.mean()
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore", RuntimeWarning)
                    p = stats.ttest_ind(vals, ref, equal_var=False).pvalue
                if not math.isnan(p):
                    row["p_value"] = float(p)
                    row["significant"] = p < alpha
            rows.append(row)
    return rows
