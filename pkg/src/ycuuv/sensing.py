"""Sensing node: depth from pressure, attitude from gyro/accel/mag, altitude.

Attitude is a complementary filter over a strapdown core: gyro rates are
integrated exactly per step through the quaternion exponential, while the
accelerometer (when its norm is plausibly gravity) pulls tilt toward the
measured specific-force direction and the magnetometer pulls heading toward
magnetic north. Convention is NED, z and depth positive down; at rest the
accelerometer reads specific force (0, 0, -g).
"""

from __future__ import annotations

import argparse
import math
from dataclasses import dataclass, field

import numpy as np

from ycuuv import quat, schemas
from ycuuv.bus.node import BusConfig, BusNode
from ycuuv.config import get_float, read_kv

STANDARD_GRAVITY = 9.80665  # m/s^2, used to gate the accelerometer term

MAX_STRAPDOWN_DT = 0.1  # s
SURFACE_CLAMP = -0.5  # m, splash tolerance above the pressure zero
ALTIMETER_MIN_RANGE = 0.3  # m
ALTIMETER_MAX_RANGE = 50.0  # m
ALTIMETER_MIN_CONFIDENCE = 50.0  # %


class SensorFault(RuntimeError):
    pass


@dataclass
class ImuSample:
    gyro: np.ndarray  # rad/s body
    accel: np.ndarray  # m/s^2 specific force, body
    mag: np.ndarray  # field direction, body
    stamp: float = 0.0


@dataclass
class PressureSample:
    pressure: float  # Pa absolute
    temperature: float = 15.0  # degC
    stamp: float = 0.0


@dataclass
class EnvConstants:
    p_atm: float = 101325.0  # Pa
    rho: float = 1025.0  # kg/m^3 (seawater; tank runs use 1000)
    g: float = 9.80665  # m/s^2

    def __post_init__(self) -> None:
        if min(self.p_atm, self.rho, self.g) <= 0:
            raise ValueError("environment constants must be positive")

    @classmethod
    def from_file(cls, path: str) -> "EnvConstants":
        kv = read_kv(path)
        return cls(
            p_atm=get_float(kv, "p_atm", 101325.0),
            rho=get_float(kv, "rho", 1025.0),
            g=get_float(kv, "g", 9.80665),
        )


@dataclass
class AhrsGains:
    k_acc: float = 0.5  # 1/s tilt correction
    k_mag: float = 0.1  # 1/s heading correction

    def __post_init__(self) -> None:
        if self.k_acc < 0 or self.k_mag < 0:
            raise ValueError("gains must be >= 0")

    @classmethod
    def from_file(cls, path: str) -> "AhrsGains":
        kv = read_kv(path)
        return cls(
            k_acc=get_float(kv, "k_acc", 0.5),
            k_mag=get_float(kv, "k_mag", 0.1),
        )


def strapdown_update(q: np.ndarray, gyro, dt: float) -> np.ndarray:
    """Propagate attitude one step; exact for a constant rate over the step."""
    if not 0.0 < dt <= MAX_STRAPDOWN_DT:
        raise ValueError(f"dt {dt} outside (0, {MAX_STRAPDOWN_DT}]")
    gx, gy, gz = (float(v) for v in gyro)
    if not (math.isfinite(gx) and math.isfinite(gy) and math.isfinite(gz)):
        raise ValueError("non-finite gyro rate")
    step = quat.from_rotvec((gx * dt, gy * dt, gz * dt))
    return quat.normalize(quat.multiply(q, step))


def ahrs_correct(q: np.ndarray, accel, mag, gains: AhrsGains, dt: float) -> np.ndarray:
    """One complementary-filter correction step.

    The accelerometer term is skipped outside [0.5 g, 1.5 g] so maneuvers do
    not corrupt tilt; a zero magnetic field skips the heading term.
    """
    accel = np.asarray(accel, dtype=float)
    mag = np.asarray(mag, dtype=float)
    err = np.zeros(3)

    a_norm = float(np.linalg.norm(accel))
    if 0.5 * STANDARD_GRAVITY <= a_norm <= 1.5 * STANDARD_GRAVITY:
        measured = accel / a_norm
        predicted = quat.rotate_inverse(q, (0.0, 0.0, -1.0))
        err += gains.k_acc * np.cross(measured, predicted)

    m_norm = float(np.linalg.norm(mag))
    if m_norm > 0.0:
        m_ned = quat.rotate(q, mag / m_norm)
        heading_err = math.atan2(m_ned[1], m_ned[0])
        err += quat.rotate_inverse(q, (0.0, 0.0, -gains.k_mag * heading_err))

    if not np.any(err):
        return q
    return quat.normalize(quat.multiply(q, quat.from_rotvec(err * dt)))


def pressure_to_depth(p: PressureSample, env: EnvConstants) -> float:
    """Depth in meters, positive down; small negatives clamp at the surface."""
    if p.pressure < env.p_atm - 5000.0:
        raise SensorFault(f"pressure {p.pressure} Pa below plausible surface range")
    depth = (p.pressure - env.p_atm) / (env.rho * env.g)
    return max(depth, SURFACE_CLAMP)


def altimeter_filter(raw_range: float, confidence: float) -> float | None:
    """Gate a ping return; None means no usable bottom lock."""
    if confidence < ALTIMETER_MIN_CONFIDENCE:
        return None
    if not ALTIMETER_MIN_RANGE <= raw_range <= ALTIMETER_MAX_RANGE:
        return None
    return float(raw_range)


class SensingNode:
    """Bus node fusing IMU/pressure/altimeter inputs into telemetry topics."""

    def __init__(self, loop, transport, env: EnvConstants | None = None,
                 gains: AhrsGains | None = None, bus_config: BusConfig | None = None,
                 name: str = "sensing", **node_kw):
        self.env = env or EnvConstants()
        self.gains = gains or AhrsGains()
        self.node = BusNode(loop, transport, name, bus_config, **node_kw)
        for topic in (schemas.TOPIC_ATTITUDE, schemas.TOPIC_DEPTH, schemas.TOPIC_ALTITUDE):
            self.node.advertise(topic, schemas.schema_id(topic))
        self.attitude = quat.identity()
        self._last_imu_stamp: float | None = None

    def ingest_imu(self, sample: ImuSample) -> None:
        if self._last_imu_stamp is not None:
            dt = sample.stamp - self._last_imu_stamp
            if 0.0 < dt <= MAX_STRAPDOWN_DT:
                self.attitude = strapdown_update(self.attitude, sample.gyro, dt)
                if self.gains.k_acc > 0.0 or self.gains.k_mag > 0.0:
                    self.attitude = ahrs_correct(
                        self.attitude, sample.accel, sample.mag, self.gains, dt
                    )
        self._last_imu_stamp = sample.stamp
        w, x, y, z = (float(v) for v in self.attitude)
        self.node.publish(
            schemas.TOPIC_ATTITUDE,
            schemas.encode_payload(schemas.TOPIC_ATTITUDE, w, x, y, z),
        )

    def ingest_pressure(self, sample: PressureSample) -> None:
        depth = pressure_to_depth(sample, self.env)
        self.node.publish(
            schemas.TOPIC_DEPTH, schemas.encode_payload(schemas.TOPIC_DEPTH, depth)
        )

    def ingest_altimeter(self, raw_range: float, confidence: float) -> None:
        altitude = altimeter_filter(raw_range, confidence)
        value = float("nan") if altitude is None else altitude
        self.node.publish(
            schemas.TOPIC_ALTITUDE, schemas.encode_payload(schemas.TOPIC_ALTITUDE, value)
        )


def main(argv=None) -> int:
    from ycuuv.cli import add_bus_argument, open_bus, run_forever

    parser = argparse.ArgumentParser(description="sensing module node")
    add_bus_argument(parser)
    parser.add_argument("--env", help="flat key=value environment config file")
    parser.add_argument(
        "--synthetic",
        action="store_true",
        help="feed a stationary synthetic IMU/pressure stream (no hardware here)",
    )
    args = parser.parse_args(argv)

    env = EnvConstants.from_file(args.env) if args.env else EnvConstants()
    gains = AhrsGains.from_file(args.env) if args.env else AhrsGains()
    loop, transport = open_bus(args.bus)
    sensing = SensingNode(loop, transport, env, gains)
    if args.synthetic:
        def imu_tick():
            sensing.ingest_imu(
                ImuSample(
                    gyro=np.zeros(3),
                    accel=np.array([0.0, 0.0, -STANDARD_GRAVITY]),
                    mag=np.array([1.0, 0.0, 0.0]),
                    stamp=loop.now(),
                )
            )

        def pressure_tick():
            sensing.ingest_pressure(PressureSample(pressure=env.p_atm))

        sensing.node.call_every(0.01, imu_tick)
        sensing.node.call_every(0.1, pressure_tick)
    return run_forever(loop)


if __name__ == "__main__":
    raise SystemExit(main())
