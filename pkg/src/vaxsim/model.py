"""Composition of one replication: production + QA/QC + materials + metrics.

A Model wires the domain runtimes onto one engine, runs a settle sweep after
every event (offer work to every stage and pool until nothing more can start),
ticks a daily collector, and hands back a ReplicationResult. Everything is
deterministic in (config, scenario, seed).
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .engine import Engine, RngRegistry, SimClock
from .materials import Materials
from .production import DISCARDED, Batch, Production
from .qaqc import QaQc


@dataclass
class ReplicationResult:
    """Everything one replication emits, in plain serializable data."""

    scenario: str
    seed: int
    horizon_days: int
    start_date: str
    series: dict[str, list[float]] = field(default_factory=dict)
    batches: list[dict] = field(default_factory=list)
    counts: dict[str, float] = field(default_factory=dict)

    def series_matrix(self, name: str) -> list[float]:
        return self.series[name]


class Collector:
    """Daily series and batch log for one replication."""

    def __init__(self, model):
        self.model = model
        self.horizon = int(model.engine.clock.horizon_days)
        h = self.horizon
        self.released_doses = [0.0] * h
        self.batches_created = [0.0] * h
        self.batches_released = [0.0] * h
        self.batches_discarded = [0.0] * h
        self.stage_busy = {s.id: [0.0] * h for s in model.production.stages}
        self.stage_closed = {s.id: [0.0] * h for s in model.production.stages}
        self.pool_busy = {p.name: [0.0] * h for p in model.qc.pools()}
        self.pool_cap = {p.name: [0.0] * h for p in model.qc.pools()}
        self.pool_queue = {p.name: [0.0] * h for p in model.qc.pools()}
        self.mat_level = {m: [0.0] * h for m in model.materials.runtimes}
        self.mat_stockout = {m: [0.0] * h for m in model.materials.runtimes}
        self.batches: list[Batch] = []

    # -- batch log -------------------------------------------------------

    def record_created(self, batch: Batch) -> None:
        self.batches.append(batch)
        self.batches_created[self._day()] += 1

    def record_release(self, batch: Batch) -> None:
        d = self._day()
        self.batches_released[d] += 1
        self.released_doses[d] += batch.doses

    def record_discard(self, batch: Batch) -> None:
        self.batches_discarded[self._day()] += 1

    def live_batches(self) -> list[Batch]:
        return [b for b in self.batches if b.alive]

    def _day(self) -> int:
        return self.model.engine.clock.day_index()

    # -- daily flush -----------------------------------------------------

    def day_tick(self, t: float) -> None:
        d = min(int(t) - 1, self.horizon - 1)
        for sid, (busy, closed) in self.model.production.flush_day(t).items():
            self.stage_busy[sid][d] = busy
            self.stage_closed[sid][d] = closed
        for pool in self.model.qc.pools():
            self.pool_busy[pool.name][d] = pool.busy_int.take(t)
            self.pool_cap[pool.name][d] = pool.cap_int.take(t)
            self.pool_queue[pool.name][d] = pool.queue_int.take(t)
        for mid, (level, flag) in self.model.materials.day_tick().items():
            self.mat_level[mid][d] = level
            self.mat_stockout[mid][d] = flag

    # -- final assembly --------------------------------------------------

    def result(self, scenario: str) -> ReplicationResult:
        model = self.model
        res = ReplicationResult(
            scenario=scenario,
            seed=model.seed,
            horizon_days=self.horizon,
            start_date=model.engine.clock.start_date.isoformat(),
        )
        s = res.series
        s["released_doses"] = self.released_doses
        s["batches_created"] = self.batches_created
        s["batches_released"] = self.batches_released
        s["batches_discarded"] = self.batches_discarded
        for sid in self.stage_busy:
            machines = model.cfg.stage(sid).machines
            util = []
            for d in range(self.horizon):
                open_time = machines - self.stage_closed[sid][d]
                util.append(self.stage_busy[sid][d] / open_time if open_time > 1e-9 else 0.0)
            s[f"stage_util.{sid}"] = util
        for name in self.pool_busy:
            util = []
            for d in range(self.horizon):
                cap = self.pool_cap[name][d]
                util.append(self.pool_busy[name][d] / cap if cap > 1e-9 else 0.0)
            s[f"pool_util.{name}"] = util
            s[f"pool_queue.{name}"] = self.pool_queue[name]
        for mid in self.mat_level:
            s[f"material_level.{mid}"] = self.mat_level[mid]
            s[f"material_stockout.{mid}"] = self.mat_stockout[mid]

        for b in self.batches:
            res.batches.append({
                "id": b.id, "created_at": b.created_at, "doses": b.doses,
                "state": b.state, "released_at": b.released_at,
                "discarded_at": b.discarded_at, "discard_cause": b.discard_cause,
                "retests": b.retests, "investigations": b.investigations,
            })

        c = res.counts
        c["batches_created"] = len(self.batches)
        c["batches_released"] = sum(1 for b in self.batches if b.state == "released")
        c["batches_discarded"] = sum(1 for b in self.batches if b.state == DISCARDED)
        c["released_doses"] = sum(self.released_doses)
        c["retests"] = sum(b.retests for b in self.batches)
        c["investigations"] = sum(b.investigations for b in self.batches)
        for pool in model.qc.pools():
            c[f"pool_busy_days.{pool.name}"] = pool.busy_int.total
            c[f"pool_queue_days.{pool.name}"] = pool.queue_int.total
            c[f"pool_started.{pool.name}"] = pool.started
            c[f"pool_completed.{pool.name}"] = pool.completed
            c[f"pool_wait_days.{pool.name}"] = pool.wait_total
            c[f"pool_sojourn_days.{pool.name}"] = pool.sojourn_total
        for stage in model.production.stages:
            c[f"stage_busy_days.{stage.id}"] = stage.busy.total
            c[f"stage_closed_days.{stage.id}"] = stage.closed_int.total
        for rt in model.materials.runtimes.values():
            c[f"material_stockout_days.{rt.id}"] = rt.stockout_days
            c[f"material_consumed.{rt.id}"] = rt.consumed_total
            c[f"material_received.{rt.id}"] = rt.received_total
        return res


class Model:
    """One deterministic replication of the whole supply chain."""

    def __init__(self, cfg, seed: int, scenario=None):
        self.cfg = cfg
        self.seed = seed
        clock = SimClock(cfg.model.start_date, cfg.model.end_date)
        self.engine = Engine(clock)
        self.rng = RngRegistry(seed)
        # the whole day-tick chain goes in first: at any instant the tick must
        # precede same-time domain events, so a day's readings never absorb
        # changes that belong to the following day
        self.engine.on("day", self._on_day)
        for t in range(1, int(clock.horizon_days) + 1):
            self.engine.schedule(float(t), "day", absolute=True)
        for w in cfg.maintenance:
            start = clock.date_to_time(w.start)
            end = clock.date_to_time(w.end) + 1.0  # inclusive end date
            if start >= 0:
                self.engine.schedule(start, "maint_start", absolute=True)
            self.engine.schedule(max(end, 0.0), "maint_end", absolute=True)
        self.materials = Materials(self)
        self.production = Production(self)
        self.qc = QaQc(self)
        self.collect = Collector(self)
        self.scenario = scenario
        self.engine.after_event = lambda ev: self.settle()
        if scenario is not None:
            scenario.attach(self)

    def _on_day(self, ev) -> None:
        self.collect.day_tick(ev.time)

    def settle(self) -> None:
        """Offer work everywhere until nothing more can start at this instant."""
        while True:
            changed = self.production.dispatch_pass()
            changed |= self.qc.pump()
            if not changed:
                break

    def discard_batch(self, batch: Batch, cause: str) -> None:
        if not batch.alive:
            return
        now = self.engine.clock.now
        batch.state = DISCARDED
        batch.discarded_at = now
        batch.discard_cause = cause
        self.production.remove_batch(batch)
        self.qc.void_batch(batch, now)
        self.collect.record_discard(batch)

    def reset_wip(self) -> None:
        """Instant loss of all work-in-progress and in-lab QC samples.

        Batches resident in inventories survive; their unresolved tests are
        re-queued from fresh samples by the QA/QC side.
        """
        now = self.engine.clock.now
        for batch in self.production.wip_batches():
            self.discard_batch(batch, "power_outage")
        self.qc.reset_wip(now)

    def on_param_changed(self, obj, fieldname: str) -> None:
        """Scenario wrote config field ``obj.fieldname``; react if stateful."""
        cfg = self.cfg
        if fieldname == "closed":
            self.production.closure_changed(obj)
        elif fieldname in ("technicians", "supervisors", "reviewers", "investigators"):
            self.qc.capacity_changed(obj, fieldname)
        elif fieldname == "available":
            for mat in cfg.materials:
                if obj is mat:
                    self.materials.availability_changed(mat)
        # distributions, probabilities and multipliers are read at sample time

    def run(self) -> ReplicationResult:
        self.settle()  # t=0 dispatch
        self.engine.run()
        name = self.scenario.name if self.scenario is not None else "base"
        return self.collect.result(name)
