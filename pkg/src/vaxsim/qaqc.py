"""Quality control testing and quality assurance review gating batch release.

Work items queue on finite personnel pools. A sample test runs as a chain:
technician (prep + test + check), then a supervisor check, then the pass/fail
outcome. A failure opens an out-of-specification investigation (investigator
pool) followed by exactly one retest; a second failure discards the batch.
Deviations drawn at stage completion open their own investigations. QA
reviewers handle per-stage document reviews and the final release review.

Queue priority, evaluated at insertion: samples tied to an emptier release
inventory first, then the batch closest to final completion, then
first-in-first-out. Tasks are never preempted: a capacity cut (scenario) lets
running work finish and shrinks the pool as tasks complete.

Zero-duration convention: an activity whose duration is Constant(0) does not
exist (no task, no queueing) — configs omit reviews or checks by leaving the
duration at 0.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field

from .engine import Event, StepIntegral
from .production import AWAITING_RELEASE, Batch, StageRuntime

BLOCKED = "blocked"   # waiting on prerequisite tests
ACTIVE = "active"     # somewhere in the technician/supervisor/OOS pipeline
PASSED = "passed"


@dataclass
class Sample:
    batch: Batch
    stage_id: str
    milestone: str
    arrived_at: float
    tests: dict[str, str] = field(default_factory=dict)

    def prereqs_met(self, test_cfg) -> bool:
        return all(self.tests.get(p) == PASSED for p in test_cfg.prerequisites)


@dataclass(eq=False)  # identity semantics: tasks live in sets and heaps
class Task:
    kind: str           # tech | sup | oos | dev | ipc_oos | ipc_retest | docrev | relrev | relapp
    batch: Batch
    test_id: str | None = None
    stage_id: str | None = None
    attempt: int = 1
    sample: Sample | None = None
    carry: float = 0.0  # supervisor-check duration drawn with the technician draws
    enqueued_at: float = 0.0
    event: Event | None = None
    pool: "Pool | None" = None


class Pool:
    """Finite personnel pool with a priority queue of waiting tasks."""

    def __init__(self, name: str, capacity: int):
        self.name = name
        self.capacity = capacity
        self.busy = 0
        self._heap: list[tuple[tuple, int, Task]] = []
        self._seq = 0
        self.busy_int = StepIntegral(0)
        self.cap_int = StepIntegral(capacity)
        self.queue_int = StepIntegral(0)
        self.started = 0
        self.completed = 0
        self.wait_total = 0.0     # enqueue -> start
        self.sojourn_total = 0.0  # enqueue -> completion

    def enqueue(self, task: Task, key: tuple, now: float) -> None:
        task.enqueued_at = now
        heapq.heappush(self._heap, (key, self._seq, task))
        self._seq += 1
        self.queue_int.add(now, 1)

    def set_capacity(self, capacity: int, now: float) -> None:
        self.capacity = capacity
        self.cap_int.set(now, capacity)

    def pump(self, now: float, starter) -> bool:
        """Start queued tasks while heads are free; ``starter`` runs each one."""
        changed = False
        while self.busy < self.capacity and self._heap:
            _, _, task = heapq.heappop(self._heap)
            self.queue_int.add(now, -1)
            if not task.batch.alive:
                changed = True
                continue
            self.busy += 1
            self.busy_int.add(now, 1)
            self.started += 1
            self.wait_total += now - task.enqueued_at
            task.pool = self
            starter(task, now)
            changed = True
        return changed

    def release(self, task: Task, now: float) -> None:
        self.busy -= 1
        self.busy_int.add(now, -1)
        self.completed += 1
        self.sojourn_total += now - task.enqueued_at

    def purge(self, predicate, now: float) -> list[Task]:
        """Drop queued tasks matching ``predicate``; returns what was dropped."""
        kept, dropped = [], []
        for key, seq, task in self._heap:
            (dropped if predicate(task) else kept).append((key, seq, task))
        if dropped:
            self._heap = kept
            heapq.heapify(self._heap)
            self.queue_int.add(now, -len(dropped))
        return [t for _, _, t in dropped]

    def queue_len(self) -> int:
        return len(self._heap)


def _is_zero(dist) -> bool:
    return dist.kind == "constant" and dist.params[0] == 0.0


class QaQc:
    """Runtime for all QC teams and QA pools; owned by a Model."""

    def __init__(self, model):
        self.model = model
        cfg = model.cfg
        self.tech_pools = {t.id: Pool(f"qc_technicians.{t.id}", t.technicians)
                           for t in cfg.qc.teams}
        self.sup_pools = {t.id: Pool(f"qc_supervisors.{t.id}", t.supervisors)
                          for t in cfg.qc.teams}
        self.reviewers = Pool("qa_reviewers", cfg.qa.reviewers)
        self.qa_sups = Pool("qa_supervisors", cfg.qa.supervisors)
        self.investigators = Pool("qa_investigators", cfg.qa.investigators)
        self.running: set[Task] = set()
        model.engine.on("task_done", self._on_task_done)

    def pools(self) -> list[Pool]:
        return [*self.tech_pools.values(), *self.sup_pools.values(),
                self.reviewers, self.qa_sups, self.investigators]

    # -- intake from production -----------------------------------------

    def on_stage_complete(self, batch: Batch, stage: StageRuntime) -> None:
        cfg = self.model.cfg
        now = self.model.engine.clock.now
        for tid in stage.cfg.ipc_tests:
            test = cfg.test(tid)
            if test.failure_prob <= 0.0:
                continue
            failed = (self.model.rng.derived("ipcfail", tid, stage.cfg.id, batch.id, 1)
                      .random() < test.failure_prob)
            if failed:
                batch.pending_tests += 1
                batch.investigations += 1
                self._enqueue(self.investigators, Task(
                    "ipc_oos", batch, test_id=tid, stage_id=stage.cfg.id),
                    (now, 0), now)
        if cfg.qa.deviation_prob > 0.0:
            hit = (self.model.rng.derived("devflag", stage.cfg.id, batch.id)
                   .random() < cfg.qa.deviation_prob)
            if hit:
                batch.pending_investigations += 1
                batch.investigations += 1
                self._enqueue(self.investigators,
                              Task("dev", batch, stage_id=stage.cfg.id), (now, 0), now)
        if stage.cfg.qc_tests:
            self._spawn_sample(batch, stage, now)
        if stage.cfg.document_review and not _is_zero(cfg.qa.document_review_time):
            batch.pending_reviews += 1
            self._enqueue(self.reviewers,
                          Task("docrev", batch, stage_id=stage.cfg.id),
                          self._priority_key(batch, now), now)

    def _spawn_sample(self, batch: Batch, stage: StageRuntime, now: float) -> None:
        milestone = stage.cfg.milestone or self._default_milestone(stage)
        sample = Sample(batch, stage.cfg.id, milestone, now)
        batch.samples.append(sample)
        for tid in stage.cfg.qc_tests:
            sample.tests[tid] = BLOCKED
        batch.pending_tests += len(sample.tests)
        for tid in stage.cfg.qc_tests:
            if sample.prereqs_met(self.model.cfg.test(tid)):
                self._enqueue_test(sample, tid, attempt=1, now=now)

    def _default_milestone(self, stage: StageRuntime) -> str:
        if stage.idx == 0:
            return "batch_start"
        if stage.idx == len(self.model.production.stages) - 1:
            return "batch_end"
        return "intermediate"

    def on_enter_final(self, batch: Batch) -> None:
        now = self.model.engine.clock.now
        if not _is_zero(self.model.cfg.qa.release_review_time):
            batch.pending_reviews += 1
            self._enqueue(self.reviewers, Task("relrev", batch),
                          self._priority_key(batch, now), now)
        self.check_release(batch)

    # -- queueing --------------------------------------------------------

    def _priority_key(self, batch: Batch, now: float) -> tuple:
        """(release-inventory backlog, how far from completion, FIFO)."""
        backlog = len(self.model.production.final_inv.contents)
        progress = len(batch.stage_history)
        return (backlog, -progress, now)

    def _enqueue(self, pool: Pool, task: Task, key: tuple, now: float) -> None:
        pool.enqueue(task, key, now)

    def _enqueue_test(self, sample: Sample, tid: str, attempt: int, now: float) -> None:
        sample.tests[tid] = ACTIVE
        test = self.model.cfg.test(tid)
        task = Task("tech", sample.batch, test_id=tid, stage_id=sample.stage_id,
                    attempt=attempt, sample=sample)
        self._enqueue(self.tech_pools[test.team], task,
                      self._priority_key(sample.batch, now), now)

    def pump(self) -> bool:
        now = self.model.engine.clock.now
        changed = False
        for pool in self.pools():
            changed |= pool.pump(now, self._start_task)
        return changed

    # -- task lifecycle --------------------------------------------------

    def _start_task(self, task: Task, now: float) -> None:
        rng = self.model.rng
        qa = self.model.cfg.qa
        if task.kind == "tech":
            g = rng.derived("testdur", task.test_id, task.batch.id, task.attempt)
            test = self.model.cfg.test(task.test_id)
            duration = (test.prep_time.sample(g) + test.test_time.sample(g)
                        + test.check_time.sample(g))
            task.carry = test.supervisory_check_time.sample(g)
        elif task.kind == "sup":
            duration = task.carry
        elif task.kind == "oos":
            duration = qa.oos_investigation_time.sample(
                rng.derived("oosdur", task.test_id, task.batch.id, task.attempt))
        elif task.kind == "ipc_oos":
            duration = qa.oos_investigation_time.sample(
                rng.derived("ipcoosdur", task.test_id, task.stage_id, task.batch.id))
        elif task.kind == "dev":
            duration = qa.deviation_investigation_time.sample(
                rng.derived("devdur", task.stage_id, task.batch.id))
        elif task.kind == "docrev":
            duration = qa.document_review_time.sample(
                rng.derived("docrevdur", task.stage_id, task.batch.id))
        elif task.kind == "relrev":
            duration = qa.release_review_time.sample(
                rng.derived("relrevdur", task.batch.id))
        else:  # relapp
            duration = qa.release_approval_time.sample(
                rng.derived("relappdur", task.batch.id))
        task.event = self.model.engine.schedule(duration, "task_done", task)
        self.running.add(task)

    def _on_task_done(self, ev: Event) -> None:
        task: Task = ev.target
        now = self.model.engine.clock.now
        if task in self.running:
            self.running.discard(task)
            if task.pool is not None:
                task.pool.release(task, now)
        task.event = None
        if not task.batch.alive:
            return  # work on a discarded batch finishes harmlessly
        handler = getattr(self, f"_done_{task.kind}")
        handler(task, now)

    def _done_tech(self, task: Task, now: float) -> None:
        test = self.model.cfg.test(task.test_id)
        if _is_zero(test.supervisory_check_time):
            self._resolve_test(task, now)
        else:
            sup = Task("sup", task.batch, test_id=task.test_id,
                       stage_id=task.stage_id, attempt=task.attempt,
                       sample=task.sample, carry=task.carry)
            self._enqueue(self.sup_pools[test.team], sup,
                          self._priority_key(task.batch, now), now)

    def _done_sup(self, task: Task, now: float) -> None:
        self._resolve_test(task, now)

    def _resolve_test(self, task: Task, now: float) -> None:
        test = self.model.cfg.test(task.test_id)
        failed = False
        if test.failure_prob > 0.0:
            failed = (self.model.rng.derived(
                "testfail", task.test_id, task.batch.id, task.attempt)
                .random() < test.failure_prob)
        batch = task.batch
        if not failed:
            task.sample.tests[task.test_id] = PASSED
            batch.pending_tests -= 1
            self._unblock_dependents(task.sample, now)
            self.check_release(batch)
        elif task.attempt == 1:
            batch.investigations += 1
            self._enqueue(self.investigators,
                          Task("oos", batch, test_id=task.test_id,
                               stage_id=task.stage_id, attempt=1,
                               sample=task.sample),
                          (now, 0), now)
        else:
            self.model.discard_batch(batch, "failed_retest")

    def _unblock_dependents(self, sample: Sample, now: float) -> None:
        for tid, state in sample.tests.items():
            if state == BLOCKED and sample.prereqs_met(self.model.cfg.test(tid)):
                self._enqueue_test(sample, tid, attempt=1, now=now)

    def _done_oos(self, task: Task, now: float) -> None:
        task.batch.retests += 1
        self._enqueue_test_retest(task.sample, task.test_id, now)

    def _enqueue_test_retest(self, sample: Sample, tid: str, now: float) -> None:
        test = self.model.cfg.test(tid)
        task = Task("tech", sample.batch, test_id=tid, stage_id=sample.stage_id,
                    attempt=2, sample=sample)
        self._enqueue(self.tech_pools[test.team], task,
                      self._priority_key(sample.batch, now), now)

    def _done_ipc_oos(self, task: Task, now: float) -> None:
        # retest by production staff: a delay with no personnel seized
        task.batch.retests += 1
        test = self.model.cfg.test(task.test_id)
        g = self.model.rng.derived("ipcdur", task.test_id, task.stage_id,
                                   task.batch.id, 2)
        duration = (test.prep_time.sample(g) + test.test_time.sample(g)
                    + test.check_time.sample(g))
        retest = Task("ipc_retest", task.batch, test_id=task.test_id,
                      stage_id=task.stage_id, attempt=2)
        retest.event = self.model.engine.schedule(duration, "task_done", retest)
        self.running.add(retest)

    def _done_ipc_retest(self, task: Task, now: float) -> None:
        test = self.model.cfg.test(task.test_id)
        failed = (self.model.rng.derived(
            "ipcfail", task.test_id, task.stage_id, task.batch.id, 2)
            .random() < test.failure_prob)
        if failed:
            self.model.discard_batch(task.batch, "failed_retest")
        else:
            task.batch.pending_tests -= 1
            self.check_release(task.batch)

    def _done_dev(self, task: Task, now: float) -> None:
        task.batch.pending_investigations -= 1
        self.check_release(task.batch)

    def _done_docrev(self, task: Task, now: float) -> None:
        task.batch.pending_reviews -= 1
        self.check_release(task.batch)

    def _done_relrev(self, task: Task, now: float) -> None:
        if _is_zero(self.model.cfg.qa.release_approval_time):
            task.batch.pending_reviews -= 1
            self.check_release(task.batch)
        else:
            self._enqueue(self.qa_sups, Task("relapp", task.batch),
                          self._priority_key(task.batch, now), now)

    def _done_relapp(self, task: Task, now: float) -> None:
        task.batch.pending_reviews -= 1
        self.check_release(task.batch)

    # -- release gate ----------------------------------------------------

    def check_release(self, batch: Batch) -> None:
        if batch.state != AWAITING_RELEASE:
            return
        if batch.pending_tests or batch.pending_investigations or batch.pending_reviews:
            return
        assert batch.location is not None and batch.location[0] == "inventory"
        now = self.model.engine.clock.now
        batch.state = "released"
        batch.released_at = now
        inv = batch.location[1]
        inv.contents.remove(batch)  # released stock leaves the final inventory
        batch.location = None
        self.model.collect.record_release(batch)

    # -- discards and hard resets ---------------------------------------

    def void_batch(self, batch: Batch, now: float) -> None:
        """Queued work for a discarded batch disappears; running work finishes
        harmlessly (the no-op branch of the completion handler)."""
        for pool in self.pools():
            pool.purge(lambda t: t.batch is batch, now)

    def reset_wip(self, now: float) -> None:
        """Power-outage semantics: every in-progress QC sample is destroyed.

        Queued and running technician/supervisor work and open OOS
        investigations are aborted with personnel freed; unresolved tests of
        surviving batches are re-queued from scratch (passed results stand,
        since their records survive). Document/release reviews and deviation
        investigations are paperwork and continue unaffected.
        """
        sample_kinds = {"tech", "sup", "oos"}
        for pool in self.pools():
            pool.purge(lambda t: t.kind in sample_kinds, now)
        for task in [t for t in self.running if t.kind in sample_kinds]:
            task.event.void = True
            task.event = None
            task.pool.release(task, now)
            self.running.discard(task)
        for batch in self.model.collect.live_batches():
            for sample in batch.samples:
                sample.arrived_at = now
                for tid, state in sample.tests.items():
                    if state == ACTIVE:
                        sample.tests[tid] = BLOCKED
            for sample in batch.samples:
                for tid, state in sample.tests.items():
                    if state == BLOCKED and sample.prereqs_met(self.model.cfg.test(tid)):
                        self._enqueue_test(sample, tid, attempt=1, now=now)

    # -- scenario hooks --------------------------------------------------

    def capacity_changed(self, obj, fieldname: str) -> None:
        now = self.model.engine.clock.now
        cfg = self.model.cfg
        for team in cfg.qc.teams:
            if obj is team:
                if fieldname == "technicians":
                    self.tech_pools[team.id].set_capacity(team.technicians, now)
                elif fieldname == "supervisors":
                    self.sup_pools[team.id].set_capacity(team.supervisors, now)
                return
        if obj is cfg.qa:
            pool = {"reviewers": self.reviewers, "supervisors": self.qa_sups,
                    "investigators": self.investigators}.get(fieldname)
            if pool is not None:
                pool.set_capacity(getattr(cfg.qa, fieldname), now)
