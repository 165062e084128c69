"""Datagram transports for bus nodes.

Two implementations exist: the deterministic in-process segment used by the
simulator and all property tests (``ycuuv.sim.segment.SimSegment``), and the
real-socket ``UdpTransport`` below for running modules as separate
processes. Beacons go out as UDP broadcast to the discovery port; everything
else is unicast straight to the peer's socket address. Hosts without working
broadcast can seed discovery with a static peer list (``YC_STATIC_PEERS``,
comma-separated ``host:port``).
"""

from __future__ import annotations

import logging
import os
import selectors
import socket
import threading
from typing import Callable, Protocol

log = logging.getLogger(__name__)

Receiver = Callable[[bytes, object], None]


class Transport(Protocol):
    local_address: object

    def send(self, dest, data: bytes) -> None: ...

    def broadcast(self, data: bytes) -> None: ...

    def set_receiver(self, receiver: Receiver) -> None: ...

    def close(self) -> None: ...


def parse_static_peers(text: str) -> list[tuple[str, int]]:
    peers = []
    for chunk in text.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        host, _, port = chunk.rpartition(":")
        peers.append((host or "127.0.0.1", int(port)))
    return peers


class UdpTransport:
    """Real-socket transport: one unicast socket per node plus a shared
    broadcast listener on the discovery port.

    Broadcasts are sent from the unicast socket so receivers learn the
    sender's reply address from the datagram source.
    """

    def __init__(
        self,
        loop,
        discovery_port: int,
        bind_host: str = "0.0.0.0",
        broadcast_addr: str = "255.255.255.255",
        static_peers: list[tuple[str, int]] | None = None,
    ):
        self.loop = loop
        self.discovery_port = discovery_port
        self.broadcast_addr = broadcast_addr
        self.static_peers = list(static_peers or [])
        env_peers = os.environ.get("YC_STATIC_PEERS", "")
        self.static_peers.extend(parse_static_peers(env_peers))
        self._receiver: Receiver | None = None

        self._sock = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
        self._sock.setsockopt(socket.SOL_SOCKET, socket.SO_BROADCAST, 1)
        self._sock.bind((bind_host, 0))
        self.local_address = self._sock.getsockname()

        self._disc = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
        self._disc.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        if hasattr(socket, "SO_REUSEPORT"):
            self._disc.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEPORT, 1)
        self._disc.bind((bind_host, discovery_port))

        self._closing = threading.Event()
        self._thread = threading.Thread(target=self._recv_loop, daemon=True)
        self._thread.start()

    def set_receiver(self, receiver: Receiver) -> None:
        self._receiver = receiver

    def send(self, dest, data: bytes) -> None:
        try:
            self._sock.sendto(data, tuple(dest))
        except OSError as exc:
            log.warning("udp send to %s failed: %s", dest, exc)

    def broadcast(self, data: bytes) -> None:
        try:
            self._sock.sendto(data, (self.broadcast_addr, self.discovery_port))
        except OSError as exc:
            log.debug("udp broadcast failed (%s); static peers only", exc)
        for peer in self.static_peers:
            self.send(peer, data)

    def add_static_peer(self, addr: tuple[str, int]) -> None:
        self.static_peers.append(tuple(addr))

    def close(self) -> None:
        self._closing.set()
        self._thread.join(timeout=2.0)
        self._sock.close()
        self._disc.close()

    def _recv_loop(self) -> None:
        sel = selectors.DefaultSelector()
        sel.register(self._sock, selectors.EVENT_READ)
        sel.register(self._disc, selectors.EVENT_READ)
        while not self._closing.is_set():
            for key, _ in sel.select(timeout=0.1):
                try:
                    data, src = key.fileobj.recvfrom(65536 + 1024)
                except OSError:
                    continue
                if src == self.local_address:
                    continue  # our own broadcast echoed back
                if self._receiver is not None:
                    self.loop.post(lambda d=data, s=src: self._receiver(d, s))
        sel.close()
