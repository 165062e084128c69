"""Event loops driving bus nodes and the simulator.

Every node is single-threaded over one of these loops: timers and inbound
frames serialize through the loop's queue. ``VirtualLoop`` is the seeded
discrete-event scheduler used by all property tests — same-time events fire
in scheduling order, so runs are reproducible. ``RealTimeLoop`` executes the
same callback graph against the wall clock on a daemon thread and accepts
thread-safe ``post()`` from transport receive threads.
"""

from __future__ import annotations

import heapq
import itertools
import logging
import threading
import time
from typing import Callable

log = logging.getLogger(__name__)


class TimerHandle:
    __slots__ = ("when", "cancelled")

    def __init__(self, when: float):
        self.when = when
        self.cancelled = False

    def cancel(self) -> None:
        self.cancelled = True


class VirtualLoop:
    """Deterministic discrete-event scheduler with a virtual clock.

    Event times are quantized to nanoseconds, so different float expressions
    of the same nominal instant (a parsed scenario time vs an accumulated
    timer grid) land on exactly the same tick and keep their scheduling
    order.
    """

    def __init__(self, start: float = 0.0):
        self._now = start
        self._heap: list[tuple[float, int, TimerHandle, Callable[[], None]]] = []
        self._tie = itertools.count()

    def now(self) -> float:
        return self._now

    def call_at(self, when: float, fn: Callable[[], None]) -> TimerHandle:
        when = round(when * 1e9) / 1e9
        if when < self._now:
            when = self._now
        handle = TimerHandle(when)
        heapq.heappush(self._heap, (when, next(self._tie), handle, fn))
        return handle

    def call_later(self, delay: float, fn: Callable[[], None]) -> TimerHandle:
        return self.call_at(self._now + delay, fn)

    def post(self, fn: Callable[[], None]) -> TimerHandle:
        return self.call_at(self._now, fn)

    def run_until(self, t: float) -> None:
        """Execute every event scheduled at or before ``t``, then set now=t."""
        while self._heap and self._heap[0][0] <= t:
            when, _, handle, fn = heapq.heappop(self._heap)
            self._now = when
            if not handle.cancelled:
                fn()
        self._now = max(self._now, t)

    def run(self, max_events: int = 10_000_000) -> None:
        """Drain the queue (bounded, in case of self-rearming timers)."""
        for _ in range(max_events):
            if not self._heap:
                return
            when, _, handle, fn = heapq.heappop(self._heap)
            self._now = when
            if not handle.cancelled:
                fn()
        raise RuntimeError("event budget exhausted")

    @property
    def pending(self) -> int:
        return len(self._heap)


class RealTimeLoop:
    """Wall-clock loop on a daemon thread; same interface as VirtualLoop."""

    def __init__(self):
        self._heap: list[tuple[float, int, TimerHandle, Callable[[], None]]] = []
        self._tie = itertools.count()
        self._cv = threading.Condition()
        self._stopped = False
        self._thread = threading.Thread(target=self._run, daemon=True)
        self._thread.start()

    def now(self) -> float:
        return time.monotonic()

    def call_at(self, when: float, fn: Callable[[], None]) -> TimerHandle:
        handle = TimerHandle(when)
        with self._cv:
            heapq.heappush(self._heap, (when, next(self._tie), handle, fn))
            self._cv.notify()
        return handle

    def call_later(self, delay: float, fn: Callable[[], None]) -> TimerHandle:
        return self.call_at(self.now() + max(0.0, delay), fn)

    def post(self, fn: Callable[[], None]) -> TimerHandle:
        return self.call_at(0.0, fn)

    def stop(self) -> None:
        with self._cv:
            self._stopped = True
            self._cv.notify()
        if threading.current_thread() is not self._thread:
            self._thread.join(timeout=2.0)

    def _run(self) -> None:
        while True:
            with self._cv:
                while not self._stopped and (
                    not self._heap or self._heap[0][0] > time.monotonic()
                ):
                    timeout = None
                    if self._heap:
                        timeout = max(0.0, self._heap[0][0] - time.monotonic())
                    self._cv.wait(timeout)
                if self._stopped:
                    return
                _, _, handle, fn = heapq.heappop(self._heap)
            if not handle.cancelled:
                try:
                    fn()
                except Exception:  # a node callback must not kill the loop
                    log.exception("loop callback failed")
