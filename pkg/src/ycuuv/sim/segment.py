"""In-process network segment with seeded latency, drops and partitions.

Models the vehicle's powerline network at the symptom level: a base latency
plus a droop term that grows once commanded thruster power crosses a
threshold, plus Gaussian jitter. Per-link delivery is FIFO (later sends
never overtake earlier ones), matching the bus QoS contract.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ycuuv.bus.transport import Receiver


@dataclass
class NetModel:
    base_latency: float = 8.0  # ms
    droop_gain: float = 60.0  # ms per unit power above threshold
    droop_threshold: float = 0.7  # power fraction where droop starts
    jitter_sigma: float = 2.0  # ms
    drop_prob: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        if min(self.base_latency, self.droop_gain, self.jitter_sigma) < 0:
            raise ValueError("latency terms must be non-negative")
        if not 0.0 <= self.drop_prob <= 1.0:
            raise ValueError("drop_prob must be in [0, 1]")

    def deterministic_latency(self, power: float) -> float:
        """Latency in ms before jitter; non-decreasing in power."""
        return self.base_latency + self.droop_gain * max(0.0, power - self.droop_threshold)


def net_latency(power: float, model: NetModel, rng: np.random.Generator) -> float:
    """One latency draw in ms for a frame sent at the given thruster power."""
    if not 0.0 <= power <= 1.0:
        raise ValueError("power must be in [0, 1]")
    jitter = rng.normal(0.0, model.jitter_sigma) if model.jitter_sigma > 0 else 0.0
    return max(0.0, model.deterministic_latency(power) + jitter)


class SimEndpoint:
    """Transport handle for one node attached to a SimSegment."""

    def __init__(self, segment: "SimSegment", name: str):
        self.segment = segment
        self.local_address = name
        self._receiver: Receiver | None = None
        self.blocked = False

    def set_receiver(self, receiver: Receiver) -> None:
        self._receiver = receiver

    def send(self, dest, data: bytes) -> None:
        self.segment._transmit(self.local_address, dest, data)

    def broadcast(self, data: bytes) -> None:
        for name in self.segment.endpoint_names():
            if name != self.local_address:
                self.segment._transmit(self.local_address, name, data)

    def close(self) -> None:
        self.segment.detach(self.local_address)

    def _deliver(self, data: bytes, src) -> None:
        if not self.blocked and self._receiver is not None:
            self._receiver(data, src)


class SimSegment:
    """All endpoints share one medium; the segment owns latency and faults."""

    def __init__(self, loop, model: NetModel | None = None, rng=None, power_source=None):
        self.loop = loop
        self.model = model or NetModel()
        self.rng = rng if rng is not None else np.random.default_rng(self.model.seed)
        self.power_source = power_source or (lambda: 0.0)
        self._endpoints: dict[str, SimEndpoint] = {}
        self._partitions: set[frozenset[str]] = set()
        self._last_delivery: dict[tuple[str, str], float] = {}
        self.sent: dict[tuple[str, str], int] = {}
        self.dropped = 0

    def attach(self, name: str) -> SimEndpoint:
        if name in self._endpoints:
            raise ValueError(f"endpoint {name!r} already attached")
        ep = SimEndpoint(self, name)
        self._endpoints[name] = ep
        return ep

    def detach(self, name: str) -> None:
        self._endpoints.pop(name, None)

    def endpoint_names(self) -> list[str]:
        return list(self._endpoints)

    # -- fault injection ------------------------------------------------------

    def partition(self, a: str, b: str) -> None:
        self._partitions.add(frozenset((a, b)))

    def heal(self, a: str, b: str) -> None:
        self._partitions.discard(frozenset((a, b)))

    def partitioned(self, a: str, b: str) -> bool:
        return frozenset((a, b)) in self._partitions

    # -- delivery -------------------------------------------------------------

    def _transmit(self, src: str, dest: str, data: bytes) -> None:
        ep = self._endpoints.get(dest)
        if ep is None:
            return
        self.sent[(src, dest)] = self.sent.get((src, dest), 0) + 1
        if self.partitioned(src, dest) or ep.blocked:
            self.dropped += 1
            return
        if self.model.drop_prob > 0 and self.rng.random() < self.model.drop_prob:
            self.dropped += 1
            return
        latency_s = net_latency(self.power_source(), self.model, self.rng) / 1000.0
        when = self.loop.now() + latency_s
        link = (src, dest)
        when = max(when, self._last_delivery.get(link, 0.0))  # FIFO per link
        self._last_delivery[link] = when
        payload = bytes(data)
        self.loop.call_at(
            when, lambda: self._finish(src, dest, payload)
        )

    def _finish(self, src: str, dest: str, data: bytes) -> None:
        # partition state is re-checked at delivery time: frames in flight
        # when a partition starts are lost too
        ep = self._endpoints.get(dest)
        if ep is None or self.partitioned(src, dest):
            self.dropped += 1
            return
        ep._deliver(data, src)
