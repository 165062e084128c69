"""WebSocket gateway: the bus's human-facing edge.

Bridges bus telemetry to browser clients as JSON events and republishes
steering input as /thruster_cmds. Telemetry fan-out is latest-value per
topic: each session keeps one pending slot per topic, so a slow client
skips intermediate samples instead of accumulating a backlog, and a stalled
client can never block the bus thread (handlers only post to the asyncio
loop and return). Steering is rate-limited to one bus publish per 50 ms,
last writer wins across sessions.

Wire protocol (JSON text messages on /ws):
    client -> server  {"kind": "steer", "surge": f, "heave": f, "yaw": f}
    server -> client  {"kind": "telemetry"|"peer_status"|"ack",
                       "topic": str|null, "t": s, "payload": {key: number}}

Peer states ride as numbers: 2 ALIVE, 1 SUSPECT, 0 DOWN. Auth is a shared
token (YC_GATEWAY_TOKEN; empty disables) passed as a ?token= query
parameter; a bad token closes the session with code 4401.
"""

from __future__ import annotations

import argparse
import asyncio
import math
import os
from contextlib import asynccontextmanager
from pathlib import Path

from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from ycuuv import schemas
from ycuuv.bus.node import BusNode, PeerState

TELEMETRY_TOPICS = (
    schemas.TOPIC_POSE,
    schemas.TOPIC_DEPTH,
    schemas.TOPIC_ALTITUDE,
    schemas.TOPIC_PWM,
    schemas.TOPIC_ATTITUDE,
)

PEER_CODES = {PeerState.ALIVE: 2, PeerState.SUSPECT: 1, PeerState.DOWN: 0}
STEER_MIN_GAP = 0.05  # s between bus publishes
PEER_POLL_PERIOD = 0.5  # s
CLOSE_BAD_TOKEN = 4401

EVENT_SCHEMA = {
    "type": "object",
    "required": ["kind", "t", "payload"],
    "properties": {
        "kind": {"enum": ["telemetry", "peer_status", "ack"]},
        "topic": {"type": ["string", "null"]},
        "t": {"type": "number"},
        "payload": {
            "type": "object",
            "additionalProperties": {"type": "number"},
        },
    },
    "additionalProperties": False,
}


def _clamp(value) -> float:
    try:
        value = float(value)
    except (TypeError, ValueError):
        return 0.0
    if not math.isfinite(value):
        return 0.0
    return max(-1.0, min(1.0, value))


class _Session:
    """Per-client latest-value fan-out state."""

    def __init__(self):
        self.latest: dict[str, dict] = {}
        self.dirty: set[str] = set()
        self.queue: asyncio.Queue = asyncio.Queue()

    def offer(self, key: str, event: dict) -> None:
        """Coalesce: keep only the newest event per key until the writer drains."""
        self.latest[key] = event
        if key not in self.dirty:
            self.dirty.add(key)
            self.queue.put_nowait(("key", key))

    def push(self, event: dict) -> None:
        self.queue.put_nowait(("event", event))


class GatewayState:
    def __init__(self, bus: BusNode, token: str = ""):
        self.bus = bus
        self.token = token
        self.sessions: set[_Session] = set()
        self.aio_loop: asyncio.AbstractEventLoop | None = None
        self._pending_steer: tuple[float, float, float] | None = None
        self._last_steer_publish = -math.inf
        self.steer_published = 0
        bus.advertise(schemas.TOPIC_CMDS, schemas.schema_id(schemas.TOPIC_CMDS))
        for topic in TELEMETRY_TOPICS:
            bus.subscribe(topic, self._on_frame)

    # runs on the bus thread: must never block
    def _on_frame(self, frame) -> None:
        loop = self.aio_loop
        if loop is None or loop.is_closed():
            return
        event = {
            "kind": "telemetry",
            "topic": frame.topic,
            "t": frame.stamp if frame.stamp is not None else self.bus.loop.now(),
            "payload": schemas.decode_payload(frame.topic, frame.payload),
        }
        loop.call_soon_threadsafe(self._dispatch, frame.topic, event)

    def _dispatch(self, key: str, event: dict) -> None:
        for session in self.sessions:
            session.offer(key, event)

    def peer_snapshot(self) -> dict:
        payload = {
            peer.id.name: float(PEER_CODES[peer.state])
            for peer in self.bus.peer_status().values()
        }
        return {
            "kind": "peer_status",
            "topic": None,
            "t": self.bus.loop.now(),
            "payload": payload,
        }

    def ingest_steer(self, surge, heave, yaw) -> dict:
        """Clamp, queue for rate-limited publish, return the ack event."""
        applied = (_clamp(surge), _clamp(heave), _clamp(yaw))
        now = self.bus.loop.now()
        if now - self._last_steer_publish >= STEER_MIN_GAP:
            self._publish_steer(applied, now)
        else:
            self._pending_steer = applied  # latest writer wins
        return {
            "kind": "ack",
            "topic": schemas.TOPIC_CMDS,
            "t": now,
            "payload": {"surge": applied[0], "heave": applied[1], "yaw": applied[2]},
        }

    def _publish_steer(self, values, now) -> None:
        self._last_steer_publish = now
        self._pending_steer = None
        self.steer_published += 1
        self.bus.loop.post(
            lambda: None
            if self.bus.dead
            else self.bus.publish(
                schemas.TOPIC_CMDS, schemas.encode_payload(schemas.TOPIC_CMDS, *values)
            )
        )

    async def steer_flusher(self) -> None:
        while True:
            await asyncio.sleep(STEER_MIN_GAP)
            now = self.bus.loop.now()
            if (
                self._pending_steer is not None
                and now - self._last_steer_publish >= STEER_MIN_GAP
            ):
                self._publish_steer(self._pending_steer, now)

    async def peer_poller(self) -> None:
        while True:
            await asyncio.sleep(PEER_POLL_PERIOD)
            event = self.peer_snapshot()
            for session in self.sessions:
                session.offer("peer_status", event)


def build_app(bus: BusNode, token: str = "", console_dir: str | None = None) -> FastAPI:
    state = GatewayState(bus, token)

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        state.aio_loop = asyncio.get_running_loop()
        tasks = [
            asyncio.create_task(state.steer_flusher()),
            asyncio.create_task(state.peer_poller()),
        ]
        yield
        for task in tasks:
            task.cancel()

    app = FastAPI(lifespan=lifespan)
    app.state.gateway = state

    @app.get("/healthz")
    async def healthz():
        peers = {
            peer.id.name: peer.state.value for peer in state.bus.peer_status().values()
        }
        return {"node": state.bus.id.name, "peers": peers}

    @app.websocket("/ws")
    async def ws_endpoint(sock: WebSocket):
        await sock.accept()
        if state.token and sock.query_params.get("token", "") != state.token:
            await sock.close(code=CLOSE_BAD_TOKEN)
            return
        session = _Session()
        state.sessions.add(session)
        try:
            await sock.send_json(state.peer_snapshot())  # handshake snapshot
            writer = asyncio.create_task(_writer(sock, session))
            try:
                while True:
                    msg = await sock.receive_json()
                    if msg.get("kind") == "steer":
                        ack = state.ingest_steer(
                            msg.get("surge"), msg.get("heave"), msg.get("yaw")
                        )
                        session.push(ack)
            finally:
                writer.cancel()
        except WebSocketDisconnect:
            pass
        finally:
            state.sessions.discard(session)

    if console_dir and Path(console_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=console_dir, html=True), name="console")

    return app


async def _writer(sock: WebSocket, session: _Session) -> None:
    while True:
        kind, item = await session.queue.get()
        if kind == "key":
            session.dirty.discard(item)
            event = session.latest[item]
        else:
            event = item
        await sock.send_json(event)


def main(argv=None) -> int:
    import uvicorn

    from ycuuv.cli import add_bus_argument, open_bus

    parser = argparse.ArgumentParser(description="bus-to-WebSocket gateway")
    add_bus_argument(parser)
    parser.add_argument(
        "--port", type=int, default=int(os.environ.get("YC_GATEWAY_PORT", "8750"))
    )
    parser.add_argument(
        "--console",
        default=str(Path(__file__).resolve().parents[2] / "frontend" / "dist"),
        help="static console directory to serve at /",
    )
    args = parser.parse_args(argv)

    loop, transport = open_bus(args.bus)
    bus = BusNode(loop, transport, "gateway")
    app = build_app(bus, token=os.environ.get("YC_GATEWAY_TOKEN", ""),
                    console_dir=args.console)
    uvicorn.run(app, host="0.0.0.0", port=args.port)
    loop.stop()
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
