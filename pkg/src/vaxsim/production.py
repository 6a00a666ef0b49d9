"""Push-based batch flow through the process chain.

A stage starts a batch the moment an input batch, all raw materials, downstream
space, and an idle machine line up (checked in that order, so the first failing
precondition is what gets logged). Finished batches that find their output
inventory full stay on the machine (blocking-after-service) until space frees.
Stages with no output inventory hand batches directly to the next stage: the
machine stalls until the downstream stage pulls the batch into one of its own
machines.

Maintenance closes all stages at once; a scenario can close a single stage via
its ``closed`` flag. Closure suspends in-flight processing and resumes it with
the remaining time when the stage reopens.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .engine import Event, StepIntegral

IDLE = "idle"
BUSY = "busy"
STALLED = "stalled"     # holds a finished batch, waiting for downstream space
SUSPENDED = "suspended"  # processing interrupted by closure, remaining time kept

IN_PROCESS = "in_process"
AWAITING_RELEASE = "awaiting_release"
RELEASED = "released"
DISCARDED = "discarded"


@dataclass
class Batch:
    id: int
    created_at: float
    quantity: float = 1.0
    doses: int = 0
    state: str = IN_PROCESS
    released_at: float | None = None
    discarded_at: float | None = None
    discard_cause: str | None = None
    stage_history: list[tuple[str, float, float | None]] = field(default_factory=list)
    location: tuple[str, object] | None = None  # ("machine", m) | ("inventory", inv)
    # release-gate state, maintained by the QA/QC module
    samples: list = field(default_factory=list)
    pending_tests: int = 0
    pending_investigations: int = 0
    pending_reviews: int = 0
    retests: int = 0
    investigations: int = 0

    @property
    def alive(self) -> bool:
        return self.state in (IN_PROCESS, AWAITING_RELEASE)


@dataclass
class Machine:
    stage_idx: int
    idx: int
    state: str = IDLE
    batch: Batch | None = None
    finish_time: float | None = None
    remaining: float | None = None
    proc_event: Event | None = None


class InventoryRuntime:
    def __init__(self, cfg):
        self.cfg = cfg
        self.contents: list[Batch] = []  # FIFO

    @property
    def id(self) -> str:
        return self.cfg.id

    def has_space(self) -> bool:
        return self.cfg.capacity is None or len(self.contents) < self.cfg.capacity


class StageRuntime:
    def __init__(self, cfg, idx: int):
        self.cfg = cfg
        self.idx = idx
        self.machines = [Machine(idx, i) for i in range(cfg.machines)]
        self.input_inv: InventoryRuntime | None = None
        self.output_inv: InventoryRuntime | None = None
        self.busy = StepIntegral()
        self.closed_int = StepIntegral()
        self.last_block: str | None = None

    @property
    def id(self) -> str:
        return self.cfg.id

    def idle_machine(self) -> Machine | None:
        for m in self.machines:
            if m.state == IDLE:
                return m
        return None

    def stalled_machines(self) -> list[Machine]:
        out = [m for m in self.machines if m.state == STALLED]
        out.sort(key=lambda m: (m.finish_time, m.idx))
        return out


class Production:
    """Runtime for the whole stage chain; owned by a Model."""

    def __init__(self, model):
        self.model = model
        cfg = model.cfg
        invs = {inv.id: InventoryRuntime(inv) for inv in cfg.inventories}
        self.inventories = invs
        self.stages = [StageRuntime(s, i) for i, s in enumerate(cfg.stages)]
        for rt in self.stages:
            if rt.cfg.input_inventory:
                rt.input_inv = invs[rt.cfg.input_inventory]
            if rt.cfg.output_inventory:
                rt.output_inv = invs[rt.cfg.output_inventory]
        self.final_inv = invs[cfg.final_inventory.id]
        self.maintenance_active = False
        self._next_batch_id = 1
        model.engine.on("proc_done", self._on_proc_done)
        model.engine.on("maint_start", lambda ev: self.set_maintenance(True))
        model.engine.on("maint_end", lambda ev: self.set_maintenance(False))

    # -- closure ---------------------------------------------------------

    def stage_closed(self, stage: StageRuntime) -> bool:
        return self.maintenance_active or stage.cfg.closed

    def set_maintenance(self, active: bool) -> None:
        self.maintenance_active = active
        for stage in self.stages:
            self._apply_closure(stage)

    def closure_changed(self, stage_cfg) -> None:
        """Scenario hook: a stage's ``closed`` flag was flipped."""
        for stage in self.stages:
            if stage.cfg is stage_cfg:
                self._apply_closure(stage)

    def _apply_closure(self, stage: StageRuntime) -> None:
        now = self.model.engine.clock.now
        closed = self.stage_closed(stage)
        if closed:
            stage.closed_int.set(now, len(stage.machines))
            for m in stage.machines:
                if m.state == BUSY:
                    if m.finish_time <= now:
                        # done at this very instant: let the pending completion
                        # event fire rather than holding the batch through the
                        # closure
                        continue
                    m.remaining = m.finish_time - now
                    m.proc_event.void = True
                    m.proc_event = None
                    m.state = SUSPENDED
                    stage.busy.add(now, -1)
        else:
            stage.closed_int.set(now, 0)
            for m in stage.machines:
                if m.state == SUSPENDED:
                    m.state = BUSY
                    m.finish_time = now + m.remaining
                    m.remaining = None
                    m.proc_event = self.model.engine.schedule(
                        m.finish_time, "proc_done", m, absolute=True)
                    stage.busy.add(now, 1)

    # -- dispatch --------------------------------------------------------

    def dispatch_pass(self) -> bool:
        """One settle sweep: drain stalled machines, then start what can start.

        Sweeps downstream-first so freed space propagates upstream within a
        single call; repeats until nothing moves.
        """
        changed_any = False
        progress = True
        while progress:
            progress = False
            for stage in reversed(self.stages):
                if self._drain_stalled(stage):
                    progress = True
                while self.try_dispatch(stage) is None:
                    progress = True
            changed_any = changed_any or progress
        return changed_any

    def _drain_stalled(self, stage: StageRuntime) -> bool:
        if stage.output_inv is None or self.stage_closed(stage):
            return False
        moved = False
        for m in stage.stalled_machines():
            if not stage.output_inv.has_space():
                break
            self._place_output(stage, m.batch)
            m.state = IDLE
            m.batch = None
            m.finish_time = None
            moved = True
        return moved

    def try_dispatch(self, stage: StageRuntime) -> str | None:
        """Start one batch if every precondition holds; else the block reason."""
        if self.stage_closed(stage):
            return self._block(stage, "closed")
        machine = stage.idle_machine()
        if machine is None:
            return self._block(stage, "no_machine")

        donor: Machine | None = None
        if stage.idx == 0:
            pass  # unbounded batch source
        elif stage.input_inv is not None:
            if not stage.input_inv.contents:
                return self._block(stage, "no_input")
        else:
            upstream = self.stages[stage.idx - 1]
            if not self.stage_closed(upstream):
                stalled = upstream.stalled_machines()
                donor = stalled[0] if stalled else None
            if donor is None:
                return self._block(stage, "no_input")

        materials = self.model.materials
        missing = materials.missing_for(stage.cfg.materials)
        if missing:
            for mid in missing:
                materials.note_shortfall(mid)
            return self._block(stage, "material_stockout")

        if stage.output_inv is not None and not stage.output_inv.has_space():
            return self._block(stage, "downstream_full")

        now = self.model.engine.clock.now
        if stage.idx == 0:
            batch = Batch(self._next_batch_id, now)
            self._next_batch_id += 1
            self.model.collect.record_created(batch)
        elif donor is not None:
            batch = donor.batch
            donor.state = IDLE
            donor.batch = None
            donor.finish_time = None
        else:
            batch = stage.input_inv.contents.pop(0)
        materials.consume(stage.cfg.materials, stage.cfg.id)

        batch.location = ("machine", machine)
        batch.stage_history.append((stage.cfg.id, now, None))
        machine.state = BUSY
        machine.batch = batch
        machine.finish_time = now + self._processing_duration(stage, batch)
        machine.proc_event = self.model.engine.schedule(
            machine.finish_time, "proc_done", machine, absolute=True)
        stage.busy.add(now, 1)
        stage.last_block = None
        return None

    def _block(self, stage: StageRuntime, reason: str) -> str:
        stage.last_block = reason
        return reason

    def _processing_duration(self, stage: StageRuntime, batch: Batch) -> float:
        cfg = self.model.cfg
        rng = self.model.rng
        base = stage.cfg.processing_time.sample(
            rng.derived("proc", stage.cfg.id, batch.id))
        duration = base * cfg.model.processing_time_multiplier
        # in-process controls run inside the machine occupancy, by production staff
        for tid in stage.cfg.ipc_tests:
            test = cfg.test(tid)
            g = rng.derived("ipcdur", tid, stage.cfg.id, batch.id, 1)
            duration += (test.prep_time.sample(g) + test.test_time.sample(g)
                         + test.check_time.sample(g))
        return duration

    # -- completion ------------------------------------------------------

    def _on_proc_done(self, ev: Event) -> None:
        machine: Machine = ev.target
        if machine.state != BUSY or machine.proc_event is not ev:
            return  # stale event (suspended or reset in the meantime)
        stage = self.stages[machine.stage_idx]
        batch = machine.batch
        now = self.model.engine.clock.now
        machine.proc_event = None
        stage.busy.add(now, -1)

        y = stage.cfg.yield_fraction.sample(
            self.model.rng.derived("yield", stage.cfg.id, batch.id))
        batch.quantity *= y
        sid, entered, _ = batch.stage_history[-1]
        batch.stage_history[-1] = (sid, entered, now)
        if stage.cfg.doses_per_batch:
            batch.doses = int(round(stage.cfg.doses_per_batch * batch.quantity))

        self.model.qc.on_stage_complete(batch, stage)
        if batch.state == DISCARDED:  # an in-process control failed terminally
            machine.state = IDLE
            machine.batch = None
            machine.finish_time = None
            return

        if stage.output_inv is not None and stage.output_inv.has_space():
            machine.state = IDLE
            machine.batch = None
            machine.finish_time = None
            self._place_output(stage, batch)
        else:
            machine.state = STALLED  # downstream pulls it, or space frees

    def _place_output(self, stage: StageRuntime, batch: Batch) -> None:
        inv = stage.output_inv
        inv.contents.append(batch)
        batch.location = ("inventory", inv)
        if inv is self.final_inv:
            batch.state = AWAITING_RELEASE
            self.model.qc.on_enter_final(batch)

    # -- hard resets -----------------------------------------------------

    def remove_batch(self, batch: Batch) -> None:
        """Physically remove a discarded batch from wherever it sits."""
        if batch.location is None:
            return
        kind, holder = batch.location
        if kind == "machine":
            m: Machine = holder
            if m.proc_event is not None:
                m.proc_event.void = True
                m.proc_event = None
            if m.state == BUSY:
                self.stages[m.stage_idx].busy.add(self.model.engine.clock.now, -1)
            m.state = IDLE
            m.batch = None
            m.finish_time = None
            m.remaining = None
        else:
            inv: InventoryRuntime = holder
            if batch in inv.contents:
                inv.contents.remove(batch)
        batch.location = None

    def wip_batches(self) -> list[Batch]:
        out = []
        for stage in self.stages:
            for m in stage.machines:
                if m.batch is not None:
                    out.append(m.batch)
        return out

    # -- accounting ------------------------------------------------------

    def flush_day(self, now: float) -> dict[str, tuple[float, float]]:
        """Per stage: (machine-days busy, machine-days closed) since last flush."""
        return {s.cfg.id: (s.busy.take(now), s.closed_int.take(now))
                for s in self.stages}

    def census(self) -> dict[str, int]:
        in_machines = sum(1 for s in self.stages for m in s.machines if m.batch)
        in_invs = sum(len(i.contents) for i in self.inventories.values())
        return {"machines": in_machines, "inventories": in_invs}
