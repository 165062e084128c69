"""Operator terminal node: stick shaping, mission scripts, telemetry log.

Stick shaping (deadband, expo, slew limit) lives here rather than in the
control module so the actuator node stays dumb and safe; mission scripts
publish their command values verbatim (clamped), since a scripted value is
deliberate rather than a noisy axis. Commands go out at 20 Hz regardless so
the control watchdog sees a live stream.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

from ycuuv import schemas
from ycuuv.bus.frame import Frame
from ycuuv.bus.node import BusConfig, BusNode
from ycuuv.control import BodyCommand

COMMAND_PERIOD = 0.05  # s, 20 Hz
RECORD_TOPICS = (
    schemas.TOPIC_POSE,
    schemas.TOPIC_DEPTH,
    schemas.TOPIC_ALTITUDE,
    schemas.TOPIC_PWM,
)


@dataclass
class JoyAxes:
    axes: list[float]
    buttons: list[bool] = field(default_factory=list)
    stamp: float = 0.0


@dataclass
class JoyMapping:
    surge_axis: int = 0
    heave_axis: int = 1
    yaw_axis: int = 2
    deadband: float = 0.08
    expo: float = 0.3
    rate_limit: float = 4.0  # full-scale units per second

    def __post_init__(self) -> None:
        indices = (self.surge_axis, self.heave_axis, self.yaw_axis)
        if len(set(indices)) != 3:
            raise ValueError("axis indices must be distinct")
        if not 0.0 <= self.deadband < 0.5:
            raise ValueError("deadband must be in [0, 0.5)")
        if not 0.0 <= self.expo <= 1.0:
            raise ValueError("expo must be in [0, 1]")


def _shape_axis(value: float, m: JoyMapping, prev: float, dt: float) -> float:
    if not math.isfinite(value):
        value = 0.0
    value = max(-1.0, min(1.0, value))
    if abs(value) <= m.deadband:
        value = 0.0
    value = (1.0 - m.expo) * value + m.expo * value**3
    step = m.rate_limit * dt
    value = max(prev - step, min(prev + step, value))
    return max(-1.0, min(1.0, value))


def map_axes(j: JoyAxes, m: JoyMapping, prev: BodyCommand, dt: float) -> BodyCommand:
    """Shape raw stick axes into a body command."""
    for idx in (m.surge_axis, m.heave_axis, m.yaw_axis):
        if idx >= len(j.axes):
            raise IndexError(f"axis index {idx} outside {len(j.axes)} axes")
    return BodyCommand(
        surge=_shape_axis(j.axes[m.surge_axis], m, prev.surge, dt),
        heave=_shape_axis(j.axes[m.heave_axis], m, prev.heave, dt),
        yaw=_shape_axis(j.axes[m.yaw_axis], m, prev.yaw, dt),
        stamp=j.stamp,
    )


class TelemetryRecorder:
    """JSON Lines sink, one record per frame, flushed at <= 1 s granularity."""

    def __init__(self, path):
        self.path = Path(path)
        self._fh = self.path.open("w", encoding="utf-8")
        self._last_flush: float | None = None
        self.lines = 0

    def record(self, t: float, frame: Frame) -> None:
        entry = {
            "t": round(t, 9),
            "topic": frame.topic,
            "publisher": frame.publisher.name,
            "seq": frame.seq,
            "data": schemas.decode_payload(frame.topic, frame.payload),
        }
        self._fh.write(json.dumps(entry) + "\n")
        self.lines += 1
        if self._last_flush is None or t - self._last_flush >= 1.0:
            self._fh.flush()
            self._last_flush = t

    def close(self) -> None:
        if not self._fh.closed:
            self._fh.flush()
            self._fh.close()


def read_telemetry(path) -> list[dict]:
    """Parse a telemetry log, dropping a partial trailing line if the writer
    died mid-record."""
    records = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.endswith("\n"):
                break  # unflushed tail from a crash
            try:
                records.append(json.loads(line))
            except json.JSONDecodeError:
                break
    return records


def parse_mission(text: str) -> list[tuple[float, float, float, float]]:
    """Parse mission lines: ``t CMD surge heave yaw`` or ``t surge heave yaw``."""
    commands = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) == 5 and parts[1].upper() == "CMD":
            t, values = float(parts[0]), parts[2:]
        elif len(parts) == 4:
            t, values = float(parts[0]), parts[1:]
        else:
            raise ValueError(f"mission line {lineno}: expected 't [CMD] surge heave yaw'")
        commands.append((t, float(values[0]), float(values[1]), float(values[2])))
    if any(b[0] < a[0] for a, b in zip(commands, commands[1:])):
        raise ValueError("mission commands must be time-ordered")
    return commands


class OperatorNode:
    """Publishes /thruster_cmds and records telemetry topics."""

    def __init__(self, loop, transport, recorder: TelemetryRecorder | None = None,
                 bus_config: BusConfig | None = None, name: str = "operator", **node_kw):
        self.node = BusNode(loop, transport, name, bus_config, **node_kw)
        self.node.advertise(schemas.TOPIC_CMDS, schemas.schema_id(schemas.TOPIC_CMDS))
        self.recorder = recorder
        if recorder is not None:
            for topic in RECORD_TOPICS:
                self.node.subscribe(topic, self._record_frame)
        self.target = BodyCommand()
        self.node.call_every(COMMAND_PERIOD, self._keepalive)

    def set_target(self, surge: float, heave: float, yaw: float) -> None:
        clamp = lambda v: max(-1.0, min(1.0, v if math.isfinite(v) else 0.0))
        self.target = BodyCommand(
            surge=clamp(surge), heave=clamp(heave), yaw=clamp(yaw),
            stamp=self.node.loop.now(),
        )
        self._publish_target()

    def run_mission(self, commands: list[tuple[float, float, float, float]]) -> None:
        """Schedule scripted commands relative to the current loop time."""
        t0 = self.node.loop.now()
        for t, surge, heave, yaw in commands:
            self.node.loop.call_at(
                t0 + t, lambda s=surge, h=heave, y=yaw: self._scripted(s, h, y)
            )

    def _scripted(self, surge, heave, yaw) -> None:
        if not self.node.dead:
            self.set_target(surge, heave, yaw)

    def _keepalive(self) -> None:
        self._publish_target()

    def _publish_target(self) -> None:
        self.node.publish(
            schemas.TOPIC_CMDS,
            schemas.encode_payload(
                schemas.TOPIC_CMDS, self.target.surge, self.target.heave, self.target.yaw
            ),
        )

    def _record_frame(self, frame: Frame) -> None:
        if self.recorder is not None:
            try:
                self.recorder.record(self.node.loop.now(), frame)
            except OSError as exc:  # sink failure must not stop the node
                logging.getLogger(__name__).error("telemetry write failed: %s", exc)


def main(argv=None) -> int:
    import time

    from ycuuv.cli import add_bus_argument, open_bus

    parser = argparse.ArgumentParser(description="operator terminal node")
    add_bus_argument(parser)
    parser.add_argument("--mission", help="mission file: lines 't [CMD] surge heave yaw'")
    parser.add_argument("--stdin-axes", action="store_true",
                        help="read 't surge heave yaw' lines from stdin")
    parser.add_argument("--log", default="telemetry.jsonl", help="telemetry output path")
    args = parser.parse_args(argv)

    if args.mission:
        commands = parse_mission(Path(args.mission).read_text())
    elif args.stdin_axes:
        commands = parse_mission(sys.stdin.read())
    else:
        commands = []

    loop, transport = open_bus(args.bus)
    recorder = TelemetryRecorder(args.log)
    operator = OperatorNode(loop, transport, recorder)
    try:
        operator.run_mission(commands)
        horizon = (commands[-1][0] if commands else 0.0) + 2.0  # drain margin
        time.sleep(horizon)
    except KeyboardInterrupt:
        pass
    finally:
        recorder.close()
        loop.stop()
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
