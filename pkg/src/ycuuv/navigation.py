"""Navigation node: DVL dead reckoning with absolute acoustic fixes.

Position integrates body-frame DVL velocity rotated by the attitude stream.
Dead reckoning alone accumulates error without bound, so every acoustic fix
is blended in with a complementary gain: p <- (1-alpha) p + alpha fix. The
drift proxy ``cov_hint`` grows with integration time and contracts on every
fix; it is a bookkeeping scalar, not a calibrated covariance.
"""

from __future__ import annotations

import argparse
import math
from dataclasses import dataclass, field

import numpy as np

from ycuuv import quat, schemas
from ycuuv.bus.frame import Frame
from ycuuv.bus.node import BusConfig, BusNode
from ycuuv.config import get_float, read_kv

MAX_DVL_SPEED = 10.0  # m/s per axis, plausibility bound on valid samples
MAX_DR_DT = 1.0  # s; longer gaps freeze position like an invalid sample


@dataclass
class DvlSample:
    v_body: np.ndarray  # m/s: x fwd, y right, z down
    valid: bool = True
    stamp: float = 0.0

    def __post_init__(self) -> None:
        self.v_body = np.asarray(self.v_body, dtype=float)
        if self.valid and np.any(np.abs(self.v_body) > MAX_DVL_SPEED):
            raise ValueError("valid DVL sample outside plausible speed range")


@dataclass
class UsblFix:
    range: float  # m
    azimuth: float  # rad from beacon north, clockwise
    elevation: float  # rad, positive down
    beacon_pos: np.ndarray  # NED m
    beacon_heading: float = 0.0  # rad
    stamp: float = 0.0

    def __post_init__(self) -> None:
        self.beacon_pos = np.asarray(self.beacon_pos, dtype=float)
        if self.range <= 0:
            raise ValueError("range must be > 0")
        if abs(self.elevation) > math.pi / 2:
            raise ValueError("|elevation| must be <= pi/2")


@dataclass
class PoseEstimate:
    p: np.ndarray = field(default_factory=lambda: np.zeros(3))  # NED m
    q: np.ndarray = field(default_factory=quat.identity)
    cov_hint: float = 0.0  # m^2 drift proxy
    stamp: float = 0.0


@dataclass
class FusionConfig:
    alpha: float = 0.2  # blend gain per fix
    drift_rate: float = 1e-4  # m^2/s cov_hint growth

    def __post_init__(self) -> None:
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must be in [0, 1]")

    @classmethod
    def from_file(cls, path: str) -> "FusionConfig":
        kv = read_kv(path)
        return cls(
            alpha=get_float(kv, "alpha", 0.2),
            drift_rate=get_float(kv, "drift_rate", 1e-4),
        )


def dead_reckon_step(
    pose: PoseEstimate,
    att: np.ndarray,
    dvl: DvlSample,
    dt: float,
    cfg: FusionConfig | None = None,
) -> PoseEstimate:
    """Advance the estimate one DVL interval.

    Invalid samples (bottom-lock loss) leave position frozen but still grow
    the drift proxy.
    """
    if dt <= 0:
        raise ValueError("dt must be > 0")
    cfg = cfg or FusionConfig()
    p = pose.p
    if dvl.valid and dt <= MAX_DR_DT:
        p = p + quat.rotate(att, dvl.v_body) * dt
    return PoseEstimate(
        p=p,
        q=np.asarray(att, dtype=float),
        cov_hint=pose.cov_hint + cfg.drift_rate * dt,
        stamp=pose.stamp + dt,
    )


def usbl_to_position(fix: UsblFix) -> np.ndarray:
    """Convert a range/bearing fix to an absolute NED position."""
    ce = math.cos(fix.elevation)
    local = np.array(
        [
            fix.range * ce * math.cos(fix.azimuth),
            fix.range * ce * math.sin(fix.azimuth),
            fix.range * math.sin(fix.elevation),
        ]
    )
    ch, sh = math.cos(fix.beacon_heading), math.sin(fix.beacon_heading)
    rot_z = np.array([[ch, -sh, 0.0], [sh, ch, 0.0], [0.0, 0.0, 1.0]])
    return fix.beacon_pos + rot_z @ local


def fuse_fix(pose: PoseEstimate, fix_pos: np.ndarray, cfg: FusionConfig) -> PoseEstimate:
    """Blend an absolute position fix into the estimate (contraction by 1-alpha)."""
    a = cfg.alpha
    return PoseEstimate(
        p=(1.0 - a) * pose.p + a * np.asarray(fix_pos, dtype=float),
        q=pose.q,
        cov_hint=(1.0 - a) ** 2 * pose.cov_hint,
        stamp=pose.stamp,
    )


class NavNode:
    """Bus node consuming /imu/attitude, /dvl and /usbl_fix, publishing /pose."""

    def __init__(self, loop, transport, cfg: FusionConfig | None = None,
                 bus_config: BusConfig | None = None, name: str = "nav",
                 start_time: float | None = None, **node_kw):
        self.cfg = cfg or FusionConfig()
        self.node = BusNode(loop, transport, name, bus_config, **node_kw)
        self.node.advertise(schemas.TOPIC_POSE, schemas.schema_id(schemas.TOPIC_POSE))
        self.node.subscribe(schemas.TOPIC_ATTITUDE, self._on_attitude)
        self.node.subscribe(schemas.TOPIC_DVL, self._on_dvl)
        self.node.subscribe(schemas.TOPIC_USBL, self._on_usbl)
        self.pose = PoseEstimate(stamp=loop.now() if start_time is None else start_time)
        self.attitude = quat.identity()

    def _frame_stamp(self, frame: Frame) -> float:
        return frame.stamp if frame.stamp is not None else self.node.loop.now()

    def _on_attitude(self, frame: Frame) -> None:
        f = schemas.decode_payload(schemas.TOPIC_ATTITUDE, frame.payload)
        self.attitude = quat.normalize(
            np.array([f["qw"], f["qx"], f["qy"], f["qz"]])
        )

    def _on_dvl(self, frame: Frame) -> None:
        f = schemas.decode_payload(schemas.TOPIC_DVL, frame.payload)
        stamp = self._frame_stamp(frame)
        dt = stamp - self.pose.stamp
        if dt <= 0:  # arrival-order processing; stale stamps are skipped
            return
        sample = DvlSample(
            v_body=np.array([f["vx"], f["vy"], f["vz"]]),
            valid=bool(f["valid"]),
            stamp=stamp,
        )
        self.pose = dead_reckon_step(self.pose, self.attitude, sample, dt, self.cfg)
        self._publish_pose()

    def _on_usbl(self, frame: Frame) -> None:
        f = schemas.decode_payload(schemas.TOPIC_USBL, frame.payload)
        fix = UsblFix(
            range=f["range"],
            azimuth=f["azimuth"],
            elevation=f["elevation"],
            beacon_pos=np.array([f["beacon_n"], f["beacon_e"], f["beacon_d"]]),
            beacon_heading=f["beacon_heading"],
            stamp=self._frame_stamp(frame),
        )
        self.pose = fuse_fix(self.pose, usbl_to_position(fix), self.cfg)
        self._publish_pose()

    def _publish_pose(self) -> None:
        n, e, d = (float(v) for v in self.pose.p)
        qw, qx, qy, qz = (float(v) for v in self.pose.q)
        self.node.publish(
            schemas.TOPIC_POSE,
            schemas.encode_payload(schemas.TOPIC_POSE, n, e, d, qw, qx, qy, qz),
        )


def main(argv=None) -> int:
    from ycuuv.cli import add_bus_argument, open_bus, run_forever

    parser = argparse.ArgumentParser(description="navigation module node")
    add_bus_argument(parser)
    parser.add_argument("--fusion", help="flat key=value fusion config file")
    args = parser.parse_args(argv)

    cfg = FusionConfig.from_file(args.fusion) if args.fusion else FusionConfig()
    loop, transport = open_bus(args.bus)
    NavNode(loop, transport, cfg)
    return run_forever(loop)


if __name__ == "__main__":
    raise SystemExit(main())
