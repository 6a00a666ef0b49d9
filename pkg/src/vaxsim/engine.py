"""Deterministic event-driven simulation substrate.

Time is measured in fractional days since the simulation start date. A single
replication is strictly single-threaded: all state changes happen inside event
handlers popped from the future-event list in (time, seq) order, which makes a
replication bit-reproducible from its seed.
"""

from __future__ import annotations

import hashlib
import heapq
import math
from dataclasses import dataclass
from datetime import date

import numpy as np

DEFAULT_START_DATE = date(2025, 4, 1)
DEFAULT_END_DATE = date(2028, 3, 31)


class SchedulingError(RuntimeError):
    """Raised when an event is scheduled before the current clock time."""


@dataclass
class SimClock:
    """Simulation clock over a fixed calendar horizon.

    ``now`` is in fractional days since ``start_date`` and never decreases.
    """

    start_date: date = DEFAULT_START_DATE
    end_date: date = DEFAULT_END_DATE
    now: float = 0.0

    @property
    def horizon_days(self) -> float:
        return float((self.end_date - self.start_date).days)

    def day_index(self, t: float | None = None) -> int:
        """0-based index of the day bin containing time ``t`` (default: now)."""
        t = self.now if t is None else t
        return min(int(t), int(self.horizon_days) - 1)

    def date_to_time(self, d: date) -> float:
        return float((d - self.start_date).days)


@dataclass(slots=True)
class Event:
    time: float
    seq: int
    kind: str
    target: object = None
    void: bool = False  # tombstoned events are skipped on pop

    def sort_key(self) -> tuple[float, int]:
        return (self.time, self.seq)


class EventList:
    """Future-event list ordered by (time, seq).

    ``seq`` is assigned at insertion, so simultaneous events pop in the order
    they were scheduled (FIFO tie-break). Cancellation is tombstoning only: a
    voided event stays in the heap and is skipped when popped.
    """

    def __init__(self) -> None:
        self._heap: list[tuple[float, int, Event]] = []
        self._seq = 0

    def __len__(self) -> int:
        return len(self._heap)

    def push(self, time: float, kind: str, target: object = None, *, now: float = 0.0) -> Event:
        if time < now:
            raise SchedulingError(
                f"event {kind!r} scheduled at t={time} before current time t={now}"
            )
        ev = Event(time, self._seq, kind, target)
        self._seq += 1
        heapq.heappush(self._heap, (time, ev.seq, ev))
        return ev

    def pop(self) -> Event | None:
        """Pop the earliest live event, skipping tombstones; None when empty."""
        while self._heap:
            _, _, ev = heapq.heappop(self._heap)
            if not ev.void:
                return ev
        return None

    def peek_time(self) -> float | None:
        while self._heap and self._heap[0][2].void:
            heapq.heappop(self._heap)
        return self._heap[0][0] if self._heap else None


class HashStream:
    """Counter-mode substream: the n-th draw is a pure function of (key, n).

    SHA-256 over (key || counter) gives 64 uniform bits per draw; the value
    never depends on how many draws other entities made before it, which is
    what keeps common-random-number alignment exact across scenarios.
    """

    __slots__ = ("_key", "_ctr")

    def __init__(self, key: bytes) -> None:
        self._key = key
        self._ctr = 0

    def random(self) -> float:
        digest = hashlib.sha256(self._key + self._ctr.to_bytes(8, "little")).digest()
        self._ctr += 1
        # top 53 bits -> uniform double in [0, 1)
        return (int.from_bytes(digest[:8], "little") >> 11) * 2.0 ** -53

    def standard_normal(self) -> float:
        u1 = self.random() or 2.0 ** -53  # guard log(0)
        u2 = self.random()
        return math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)


class RngRegistry:
    """Named, independent random substreams for one replication.

    Every stochastic entity draws from its own substream so that a scenario
    edit to one entity cannot desynchronize the draws of any other (common
    random numbers across scenarios). A substream label is an arbitrary tuple
    of strings/ints; identical (replication_seed, label) always yields the
    identical draw sequence, on any platform.
    """

    def __init__(self, replication_seed: int) -> None:
        self.replication_seed = int(replication_seed)
        self._cache: dict[tuple, np.random.Generator] = {}

    def _label_key(self, label: tuple) -> bytes:
        return hashlib.sha256(
            repr((self.replication_seed,) + label).encode("utf-8")).digest()

    def stream(self, *label: object) -> np.random.Generator:
        """Cached sequential numpy stream for a long-lived entity."""
        key = tuple(label)
        gen = self._cache.get(key)
        if gen is None:
            words = [int.from_bytes(self._label_key(key)[i:i + 4], "little")
                     for i in range(0, 16, 4)]
            ss = np.random.SeedSequence([self.replication_seed, *words])
            gen = np.random.Generator(np.random.PCG64(ss))
            self._cache[key] = gen
        return gen

    def derived(self, *label: object) -> HashStream:
        """Fresh substream keyed only by (seed, label), independent of history.

        Used for per-instance draws (one batch visiting one stage, one test
        attempt, one purchase order) so the values depend on stable identities
        rather than on how many draws happened before them.
        """
        return HashStream(self._label_key(tuple(label)))


class StepIntegral:
    """Time integral of a piecewise-constant value (busy counts, queue sizes).

    ``set(now, value)`` accumulates area up to ``now`` at the old value, then
    switches to the new one; ``take(now)`` returns the area accrued since the
    last take (used to bucket the integral into daily bins).
    """

    __slots__ = ("value", "total", "_last_ts", "_taken")

    def __init__(self, value: float = 0.0, now: float = 0.0) -> None:
        self.value = value
        self.total = 0.0
        self._last_ts = now
        self._taken = 0.0

    def _accrue(self, now: float) -> None:
        self.total += self.value * (now - self._last_ts)
        self._last_ts = now

    def set(self, now: float, value: float) -> None:
        self._accrue(now)
        self.value = value

    def add(self, now: float, delta: float) -> None:
        self.set(now, self.value + delta)

    def take(self, now: float) -> float:
        self._accrue(now)
        out = self.total - self._taken
        self._taken = self.total
        return out


class EndOfHorizon:
    """Marker returned by ``Engine.pop_next`` when the run is over."""

    __slots__ = ()

    def __repr__(self) -> str:  # pragma: no cover
        return "EndOfHorizon"


END_OF_HORIZON = EndOfHorizon()


class Engine:
    """Clock plus future-event list with horizon handling.

    Handlers are registered per event kind; ``run`` pops events until the list
    drains or the next event lies beyond the horizon, then parks the clock at
    the horizon. An optional trace records (time, seq, kind) of every event
    processed, for replay/determinism checks.
    """

    def __init__(self, clock: SimClock | None = None, *, trace: bool = False) -> None:
        self.clock = clock or SimClock()
        self.events = EventList()
        self.handlers: dict[str, object] = {}
        self.after_event = None  # optional hook run after every handled event
        self.trace: list[tuple[float, int, str]] | None = [] if trace else None

    def schedule(self, delay_or_time: float, kind: str, target: object = None,
                 *, absolute: bool = False) -> Event:
        t = delay_or_time if absolute else self.clock.now + delay_or_time
        return self.events.push(t, kind, target, now=self.clock.now)

    def on(self, kind: str, handler) -> None:
        self.handlers[kind] = handler

    def pop_next(self) -> Event | EndOfHorizon:
        """Pop the minimal (time, seq) event and advance the clock to it.

        Returns the end-of-horizon marker when the list is empty or the next
        event lies beyond the horizon; the clock then rests at the horizon.
        """
        horizon = self.clock.horizon_days
        nxt = self.events.peek_time()
        if nxt is None or nxt > horizon:
            self.clock.now = horizon
            return END_OF_HORIZON
        ev = self.events.pop()
        assert ev is not None
        self.clock.now = ev.time
        return ev

    def run(self) -> None:
        while True:
            ev = self.pop_next()
            if ev is END_OF_HORIZON:
                break
            if self.trace is not None:
                self.trace.append((ev.time, ev.seq, ev.kind))
            handler = self.handlers.get(ev.kind)
            if handler is None:
                raise KeyError(f"no handler for event kind {ev.kind!r}")
            handler(ev)
            if self.after_event is not None:
                self.after_event(ev)
