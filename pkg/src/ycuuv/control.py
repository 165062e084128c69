"""Low-level control node.

Consumes body-axis demands from /thruster_cmds, allocates them to four
thrusters, converts to PWM pulse widths, and publishes /pwm_state. A
watchdog forces every channel to the neutral pulse whenever the command
stream goes silent, so a dead operator or a partitioned bus can never leave
thrust applied.

Default thruster layout (rows of the allocation matrix): thrusters 1 and 2
are horizontal, mounted for differential surge/yaw; thrusters 3 and 4 are
vertical for heave. Sway is unactuated.
"""

from __future__ import annotations

import argparse
import enum
import logging
from dataclasses import dataclass, field

import numpy as np

from ycuuv import schemas
from ycuuv.bus.frame import Frame
from ycuuv.bus.node import BusConfig, BusNode
from ycuuv.config import get_float, get_floats, read_kv

log = logging.getLogger(__name__)

DEFAULT_ALLOCATION = np.array(
    [
        [1.0, 0.0, 1.0],
        [1.0, 0.0, -1.0],
        [0.0, 1.0, 0.0],
        [0.0, 1.0, 0.0],
    ]
)

WATCHDOG_TICK = 0.05  # s between silence checks / neutral republishes


@dataclass
class BodyCommand:
    surge: float = 0.0
    heave: float = 0.0
    yaw: float = 0.0
    stamp: float = 0.0

    def axes(self) -> np.ndarray:
        return np.array([self.surge, self.heave, self.yaw])


@dataclass
class AllocationConfig:
    matrix: np.ndarray = field(default_factory=lambda: DEFAULT_ALLOCATION.copy())
    pwm_min: float = 1100.0
    pwm_neutral: float = 1500.0
    pwm_max: float = 1900.0
    watchdog_timeout: float = 0.4  # s

    def __post_init__(self) -> None:
        self.matrix = np.asarray(self.matrix, dtype=float)
        if self.matrix.shape != (4, 3):
            raise ValueError("allocation matrix must be 4x3")
        if np.linalg.matrix_rank(self.matrix) < 3:
            raise ValueError("allocation matrix must have full column rank")
        if not self.pwm_min < self.pwm_neutral < self.pwm_max:
            raise ValueError("require pwm_min < pwm_neutral < pwm_max")

    @classmethod
    def from_file(cls, path: str) -> "AllocationConfig":
        kv = read_kv(path)
        matrix = DEFAULT_ALLOCATION.copy()
        for i in range(4):
            key = f"a{i + 1}"
            if key in kv:
                matrix[i] = get_floats(kv, key)
        return cls(
            matrix=matrix,
            pwm_min=get_float(kv, "pwm_min", 1100.0),
            pwm_neutral=get_float(kv, "pwm_neutral", 1500.0),
            pwm_max=get_float(kv, "pwm_max", 1900.0),
            watchdog_timeout=get_float(kv, "watchdog_timeout", 0.4),
        )


def allocate(cmd: BodyCommand, cfg: AllocationConfig) -> np.ndarray:
    """Map a body command to four thruster demands in [-1, 1].

    Saturation is uniform: the raw mix is scaled by 1/max(1, max|t_i|), so
    the output stays a positive multiple of the unsaturated mix and the
    commanded direction is preserved.
    """
    axes = cmd.axes()
    if not np.all(np.isfinite(axes)):
        raise ValueError("non-finite body command")
    raw = cfg.matrix @ axes
    scale = max(1.0, float(np.max(np.abs(raw))))
    return raw / scale


def thrust_to_pwm(t: np.ndarray, cfg: AllocationConfig) -> np.ndarray:
    """Per-thruster demand to pulse width, piecewise linear around neutral."""
    t = np.asarray(t, dtype=float)
    if np.any(np.abs(t) > 1.0 + 1e-12) or not np.all(np.isfinite(t)):
        raise ValueError("thrust command out of [-1, 1]")
    up = cfg.pwm_max - cfg.pwm_neutral
    down = cfg.pwm_neutral - cfg.pwm_min
    return cfg.pwm_neutral + np.where(t >= 0.0, t * up, t * down)


class WatchdogAction(enum.Enum):
    FORWARD = "FORWARD"
    NEUTRAL = "NEUTRAL"


def watchdog_tick(now: float, last_cmd_stamp: float, cfg: AllocationConfig) -> WatchdogAction:
    if now - last_cmd_stamp > cfg.watchdog_timeout:
        return WatchdogAction.NEUTRAL
    return WatchdogAction.FORWARD


class ControlNode:
    """Bus node wrapping the allocation chain with the silence watchdog."""

    def __init__(self, loop, transport, cfg: AllocationConfig | None = None,
                 bus_config: BusConfig | None = None, name: str = "control", **node_kw):
        self.cfg = cfg or AllocationConfig()
        self.node = BusNode(loop, transport, name, bus_config, **node_kw)
        self.node.advertise(schemas.TOPIC_PWM, schemas.schema_id(schemas.TOPIC_PWM))
        self.node.subscribe(schemas.TOPIC_CMDS, self._on_command)
        self.last_cmd_stamp = -float("inf")
        self.pulses = np.full(4, self.cfg.pwm_neutral)
        self.neutral_active = True
        self.node.call_every(WATCHDOG_TICK, self._tick)

    def _on_command(self, frame: Frame) -> None:
        fields = schemas.decode_payload(schemas.TOPIC_CMDS, frame.payload)
        cmd = BodyCommand(
            surge=fields["surge"],
            heave=fields["heave"],
            yaw=fields["yaw"],
            stamp=self.node.loop.now(),
        )
        if not np.all(np.isfinite(cmd.axes())):
            log.warning("control: dropping non-finite command")
            return
        self.last_cmd_stamp = cmd.stamp
        self.neutral_active = False
        self.pulses = thrust_to_pwm(allocate(cmd, self.cfg), self.cfg)
        self._publish_pwm()

    def _tick(self) -> None:
        action = watchdog_tick(self.node.loop.now(), self.last_cmd_stamp, self.cfg)
        if action is WatchdogAction.NEUTRAL:
            self.pulses = np.full(4, self.cfg.pwm_neutral)
            self.neutral_active = True
            self._publish_pwm()

    def _publish_pwm(self) -> None:
        rounded = [int(round(p)) for p in self.pulses]
        self.node.publish(
            schemas.TOPIC_PWM, schemas.encode_payload(schemas.TOPIC_PWM, *rounded)
        )


def main(argv=None) -> int:
    from ycuuv.cli import add_bus_argument, open_bus, run_forever

    parser = argparse.ArgumentParser(description="low-level control module node")
    add_bus_argument(parser)
    parser.add_argument("--config", help="flat key=value allocation config file")
    args = parser.parse_args(argv)

    cfg = AllocationConfig.from_file(args.config) if args.config else AllocationConfig()
    loop, transport = open_bus(args.bus)
    ControlNode(loop, transport, cfg)
    return run_forever(loop)


if __name__ == "__main__":
    raise SystemExit(main())
