"""Bus node runtime: discovery beacons, heartbeat liveness, pub/sub delivery.

There is no broker and no master. Every node periodically broadcasts a
BEACON (identity + advertised topics) and a HEARTBEAT; peers track each
other's liveness locally from frame arrival times. Subscriptions propagate
as SUB frames — broadcast when subscribing and unicast to newly discovered
peers — so each publisher knows its subscriber set and unicasts DATA frames
directly. Delivery is best-effort, at-most-once, FIFO per (publisher,
topic).

All node effects serialize through the owning event loop; cross-thread
callers must go through ``loop.post``.
"""

from __future__ import annotations

import enum
import logging
import os
import secrets
from dataclasses import dataclass, field
from typing import Callable

from ycuuv.bus.frame import (
    FLAG_STAMP,
    KIND_BEACON,
    KIND_DATA,
    KIND_HEARTBEAT,
    KIND_SUB,
    KIND_UNSUB,
    MAX_PAYLOAD,
    Frame,
    FrameError,
    InvalidName,
    NodeId,
    NotAdvertised,
    PayloadTooLarge,
    check_topic,
    decode_frame,
    encode_frame,
    valid_name,
)

log = logging.getLogger(__name__)

DEFAULT_DISCOVERY_PORT = 18850


@dataclass
class BusConfig:
    heartbeat_period: float = 0.5  # s
    miss_limit: int = 3
    beacon_period: float = 1.0  # s
    discovery_port: int = DEFAULT_DISCOVERY_PORT
    max_payload: int = MAX_PAYLOAD

    def __post_init__(self) -> None:
        if self.heartbeat_period <= 0 or self.beacon_period <= 0:
            raise ValueError("periods must be > 0")
        if self.miss_limit < 1:
            raise ValueError("miss_limit must be >= 1")

    @classmethod
    def from_env(cls, **overrides) -> "BusConfig":
        port = int(os.environ.get("YC_DISCOVERY_PORT", DEFAULT_DISCOVERY_PORT))
        return cls(discovery_port=port, **overrides)


class PeerState(enum.Enum):
    ALIVE = "ALIVE"
    SUSPECT = "SUSPECT"
    DOWN = "DOWN"


@dataclass
class PeerInfo:
    id: NodeId
    address: object
    advertised_topics: set[str] = field(default_factory=set)
    subscribed_topics: set[str] = field(default_factory=set)
    last_heartbeat: float = 0.0
    state: PeerState = PeerState.ALIVE  # refreshed by BusNode.peer_status()


@dataclass
class FlowStats:
    received: int = 0
    last_seq: int = 0
    gaps: int = 0  # count of missing seq numbers
    stale_drops: int = 0


class Subscription:
    def __init__(self, node: "BusNode", topic: str, handler: Callable):
        self.node = node
        self.topic = topic
        self.handler = handler
        self.active = True

    def cancel(self) -> None:
        if self.active:
            self.active = False
            self.node._drop_subscription(self)


class _PeriodicTimer:
    """Fixed-grid periodic callback owned by a node (stopped on kill)."""

    def __init__(
        self, node: "BusNode", period: float, fn: Callable[[], None], first_delay: float = 0.0
    ):
        self.node = node
        self.period = period
        self.fn = fn
        self.first_delay = first_delay
        self.handle = None
        self.stopped = False

    def start(self) -> None:
        self.stopped = False
        self._t0 = self.node.loop.now() + self.first_delay
        self._k = 0
        self._arm()

    def stop(self) -> None:
        self.stopped = True
        if self.handle is not None:
            self.handle.cancel()

    def _arm(self) -> None:
        # multiplicative grid: k-th fire at t0 + k*period, so rounding error
        # never accumulates across thousands of periods
        when = self._t0 + self._k * self.period
        self.handle = self.node.loop.call_at(when, self._fire)

    def _fire(self) -> None:
        if self.stopped or self.node.dead:
            return
        self._k += 1
        self._arm()
        self.fn()


class BusNode:
    """One module's presence on the bus."""

    def __init__(
        self,
        loop,
        transport,
        name: str,
        config: BusConfig | None = None,
        uid: int | None = None,
        publish_hook: Callable[[float, Frame], None] | None = None,
    ):
        if not valid_name(name):
            raise InvalidName(f"bad node name {name!r}")
        self.loop = loop
        self.transport = transport
        self.config = config or BusConfig()
        self.id = NodeId(name, uid if uid is not None else secrets.randbits(64))
        self.publish_hook = publish_hook
        self.dead = False

        self._adverts: dict[str, int] = {}  # topic -> schema_id
        self._subs: dict[str, list[Subscription]] = {}
        self._peers: dict[NodeId, PeerInfo] = {}
        self._data_seq: dict[str, int] = {}
        self._ctl_seq = 0
        self._flows: dict[tuple[NodeId, str], FlowStats] = {}
        self._topic_schema: dict[str, int] = {}
        self.schema_warnings: list[str] = []
        self._timers: list[_PeriodicTimer] = []

        transport.set_receiver(self._on_datagram)
        self._beacon_timer = self.call_every(self.config.beacon_period, self._send_beacon)
        self._heartbeat_timer = self.call_every(
            self.config.heartbeat_period, self._send_heartbeat
        )

    # -- lifecycle -----------------------------------------------------------

    def call_every(
        self, period: float, fn: Callable[[], None], first_delay: float = 0.0
    ) -> _PeriodicTimer:
        timer = _PeriodicTimer(self, period, fn, first_delay)
        self._timers.append(timer)
        timer.start()
        return timer

    def kill(self) -> None:
        """Fault injection: stop heartbeating and processing entirely."""
        self.dead = True
        for timer in self._timers:
            timer.stop()

    def restart(self) -> None:
        """Bring a killed node back; re-announces identity and subscriptions."""
        if not self.dead:
            return
        self.dead = False
        for timer in self._timers:
            timer.start()

    def close(self) -> None:
        self.kill()
        self.transport.close()

    # -- bus operations --------------------------------------------------------

    def advertise(self, topic: str, schema_id: int) -> None:
        check_topic(topic)
        old = self._adverts.get(topic)
        if old is not None and old != schema_id:
            self._warn_schema(topic, old, schema_id)
        self._adverts[topic] = schema_id
        self._note_schema(topic, schema_id)

    def subscribe(self, topic: str, handler: Callable[[Frame], None]) -> Subscription:
        check_topic(topic)
        sub = Subscription(self, topic, handler)
        self._subs.setdefault(topic, []).append(sub)
        self._send_ctl(KIND_SUB, topic)
        return sub

    def publish(self, topic: str, payload: bytes) -> int:
        if self.dead:
            raise RuntimeError(f"node {self.id.name} is down")
        if topic not in self._adverts:
            raise NotAdvertised(f"{self.id.name} never advertised {topic}")
        if len(payload) > self.config.max_payload:
            raise PayloadTooLarge(
                f"payload {len(payload)} > max {self.config.max_payload}"
            )
        seq = self._data_seq.get(topic, 0) + 1
        self._data_seq[topic] = seq
        now = self.loop.now()
        frame = Frame(
            kind=KIND_DATA,
            seq=seq,
            publisher=self.id,
            topic=topic,
            schema_id=self._adverts[topic],
            payload=bytes(payload),
            stamp=now,
            flags=FLAG_STAMP,
        )
        raw = encode_frame(frame)
        for peer in self._subscribers(topic):
            self.transport.send(peer.address, raw)
        if topic in self._subs:  # local loopback
            self.loop.post(lambda: self._deliver_local(frame))
        if self.publish_hook is not None:
            self.publish_hook(now, frame)
        return seq

    def peer_status(self) -> dict[NodeId, PeerInfo]:
        """Snapshot of the peer table with liveness evaluated at call time."""
        now = self.loop.now()
        for peer in self._peers.values():
            peer.state = self._liveness(peer, now)
        return dict(self._peers)

    def flow_stats(self) -> dict[tuple[NodeId, str], FlowStats]:
        return dict(self._flows)

    @property
    def advertised(self) -> dict[str, int]:
        return dict(self._adverts)

    # -- internals -----------------------------------------------------------

    def _liveness(self, peer: PeerInfo, now: float) -> PeerState:
        silent = now - peer.last_heartbeat
        limit = self.config.heartbeat_period * self.config.miss_limit
        if silent > limit:
            return PeerState.DOWN
        if silent > self.config.heartbeat_period:
            return PeerState.SUSPECT
        return PeerState.ALIVE

    def _subscribers(self, topic: str) -> list[PeerInfo]:
        now = self.loop.now()
        out = []
        for peer in sorted(self._peers.values(), key=lambda p: p.id):
            if topic in peer.subscribed_topics and self._liveness(peer, now) != PeerState.DOWN:
                out.append(peer)
        return out

    def _next_ctl_seq(self) -> int:
        self._ctl_seq += 1
        return self._ctl_seq

    def _make_beacon(self) -> Frame:
        return Frame(
            kind=KIND_BEACON,
            seq=self._next_ctl_seq(),
            publisher=self.id,
            topics=tuple(sorted(self._adverts)),
        )

    def _send_beacon(self, address=None) -> None:
        raw = encode_frame(self._make_beacon())
        if address is None:
            self.transport.broadcast(raw)
        else:
            self.transport.send(address, raw)

    def _send_heartbeat(self) -> None:
        frame = Frame(kind=KIND_HEARTBEAT, seq=self._next_ctl_seq(), publisher=self.id)
        self.transport.broadcast(encode_frame(frame))

    def _send_ctl(self, kind: int, topic: str, address=None) -> None:
        frame = Frame(kind=kind, seq=self._next_ctl_seq(), publisher=self.id, topic=topic)
        raw = encode_frame(frame)
        if address is None:
            self.transport.broadcast(raw)
        else:
            self.transport.send(address, raw)

    def _drop_subscription(self, sub: Subscription) -> None:
        subs = self._subs.get(sub.topic, [])
        if sub in subs:
            subs.remove(sub)
        if not subs:
            self._subs.pop(sub.topic, None)
            self._send_ctl(KIND_UNSUB, sub.topic)

    def _on_datagram(self, data: bytes, src) -> None:
        if self.dead:
            return
        try:
            frame = decode_frame(bytes(data))
        except FrameError as exc:
            log.warning("%s: dropping bad frame from %s: %s", self.id.name, src, exc)
            return
        if frame.publisher == self.id:
            return
        peer = self._peers.get(frame.publisher)
        is_new = peer is None
        if is_new:
            peer = PeerInfo(id=frame.publisher, address=src)
            self._peers[frame.publisher] = peer
        peer.address = src
        peer.last_heartbeat = self.loop.now()
        if is_new:  # first contact of any kind: announce ourselves to it
            self._introduce_to(peer)

        if frame.kind == KIND_BEACON:
            peer.advertised_topics = set(frame.topics)
        elif frame.kind == KIND_SUB:
            peer.subscribed_topics.add(frame.topic)
        elif frame.kind == KIND_UNSUB:
            peer.subscribed_topics.discard(frame.topic)
        elif frame.kind == KIND_DATA:
            self._on_data(frame)

    def _introduce_to(self, peer: PeerInfo) -> None:
        """First contact: unicast our beacon and subscriptions to the peer."""
        self._send_beacon(address=peer.address)
        for topic in sorted(self._subs):
            self._send_ctl(KIND_SUB, topic, address=peer.address)

    def _on_data(self, frame: Frame) -> None:
        key = (frame.publisher, frame.topic)
        flow = self._flows.get(key)
        if flow is None:
            flow = self._flows[key] = FlowStats()
        if flow.received and frame.seq <= flow.last_seq:
            flow.stale_drops += 1  # duplicate or reordered: at-most-once, drop
            return
        if flow.received and frame.seq > flow.last_seq + 1:
            flow.gaps += frame.seq - flow.last_seq - 1
        flow.last_seq = frame.seq
        flow.received += 1
        self._note_schema(frame.topic, frame.schema_id)
        self._deliver_local(frame)

    def _deliver_local(self, frame: Frame) -> None:
        if self.dead:
            return
        for sub in list(self._subs.get(frame.topic, ())):
            if sub.active:
                sub.handler(frame)

    def _note_schema(self, topic: str, schema_id: int) -> None:
        old = self._topic_schema.get(topic)
        if old is None:
            self._topic_schema[topic] = schema_id
        elif old != schema_id:
            self._warn_schema(topic, old, schema_id)
            self._topic_schema[topic] = schema_id

    def _warn_schema(self, topic: str, old: int, new: int) -> None:
        msg = f"topic {topic} seen with schema {new}, previously {old}"
        if msg not in self.schema_warnings:
            self.schema_warnings.append(msg)
            log.warning("%s: %s", self.id.name, msg)


def create_node(loop, transport, name: str, config: BusConfig | None = None, **kw) -> BusNode:
    return BusNode(loop, transport, name, config, **kw)
