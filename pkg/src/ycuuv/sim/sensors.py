"""Sensor emulation: truth-derived readings plus seeded Gaussian noise.

Each sensor family draws from its own child RNG stream, so sample streams
are bit-reproducible for a fixed seed regardless of relative rates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ycuuv.navigation import DvlSample, UsblFix
from ycuuv.sensing import EnvConstants, ImuSample, PressureSample
from ycuuv.sim.plant import Plant, yaw_matrix


@dataclass
class NoiseConfig:
    gyro_sigma: float = 0.002  # rad/s
    accel_sigma: float = 0.02  # m/s^2
    dvl_sigma: float = 0.005  # m/s
    pressure_sigma: float = 100.0  # Pa
    usbl_range_sigma: float = 0.1  # m
    usbl_angle_sigma: float = 0.01  # rad
    mag_sigma: float = 0.01  # unitless, on the direction vector
    altimeter_sigma: float = 0.0  # m

    def zeroed(self) -> "NoiseConfig":
        return NoiseConfig(0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0)


@dataclass
class WorldConfig:
    beacon_pos: np.ndarray = field(default_factory=lambda: np.array([-5.0, -5.0, 10.0]))
    beacon_heading: float = 0.0  # rad
    seabed_depth: float = 20.0  # m
    dvl_bias: np.ndarray = field(default_factory=lambda: np.zeros(3))  # m/s body
    mag_ned: np.ndarray = field(default_factory=lambda: np.array([1.0, 0.0, 0.0]))

    def __post_init__(self) -> None:
        self.beacon_pos = np.asarray(self.beacon_pos, dtype=float)
        self.dvl_bias = np.asarray(self.dvl_bias, dtype=float)
        self.mag_ned = np.asarray(self.mag_ned, dtype=float)


class SensorEmulator:
    """Generates sensor samples from plant ground truth."""

    def __init__(
        self,
        plant: Plant,
        env: EnvConstants | None = None,
        noise: NoiseConfig | None = None,
        world: WorldConfig | None = None,
        seed: int | np.random.SeedSequence = 0,
    ):
        self.plant = plant
        self.env = env or EnvConstants()
        self.noise = noise or NoiseConfig()
        self.world = world or WorldConfig()
        if not isinstance(seed, np.random.SeedSequence):
            seed = np.random.SeedSequence(seed)
        streams = seed.spawn(5)
        self._rng_imu = np.random.default_rng(streams[0])
        self._rng_dvl = np.random.default_rng(streams[1])
        self._rng_pressure = np.random.default_rng(streams[2])
        self._rng_usbl = np.random.default_rng(streams[3])
        self._rng_alt = np.random.default_rng(streams[4])

    def imu(self) -> ImuSample:
        state = self.plant.state
        gyro = np.array([0.0, 0.0, state.r])
        gyro = gyro + self._rng_imu.normal(0.0, 1.0, 3) * self.noise.gyro_sigma
        accel = self.plant.specific_force + (
            self._rng_imu.normal(0.0, 1.0, 3) * self.noise.accel_sigma
        )
        mag = yaw_matrix(state.yaw).T @ self.world.mag_ned
        mag = mag + self._rng_imu.normal(0.0, 1.0, 3) * self.noise.mag_sigma
        norm = np.linalg.norm(mag)
        if norm > 0:
            mag = mag / norm
        return ImuSample(gyro=gyro, accel=accel, mag=mag, stamp=self.plant.time)

    def dvl(self) -> DvlSample:
        v = self.plant.ground_velocity_body() + self.world.dvl_bias
        v = v + self._rng_dvl.normal(0.0, 1.0, 3) * self.noise.dvl_sigma
        return DvlSample(v_body=v, valid=True, stamp=self.plant.time)

    def pressure(self) -> PressureSample:
        depth = max(float(self.plant.state.p[2]), 0.0)
        pa = self.env.p_atm + self.env.rho * self.env.g * depth
        pa += float(self._rng_pressure.normal(0.0, self.noise.pressure_sigma))
        return PressureSample(pressure=pa, stamp=self.plant.time)

    def usbl_fix(self) -> UsblFix:
        delta = self.plant.state.p - self.world.beacon_pos
        local = yaw_matrix(self.world.beacon_heading).T @ delta
        rng_true = float(np.linalg.norm(local))
        rng_true = max(rng_true, 1e-6)
        elevation = math.asin(max(-1.0, min(1.0, local[2] / rng_true)))
        azimuth = math.atan2(local[1], local[0])
        rng_meas = max(
            1e-6, rng_true + float(self._rng_usbl.normal(0.0, self.noise.usbl_range_sigma))
        )
        azimuth += float(self._rng_usbl.normal(0.0, self.noise.usbl_angle_sigma))
        elevation += float(self._rng_usbl.normal(0.0, self.noise.usbl_angle_sigma))
        elevation = max(-math.pi / 2, min(math.pi / 2, elevation))
        return UsblFix(
            range=rng_meas,
            azimuth=azimuth,
            elevation=elevation,
            beacon_pos=self.world.beacon_pos.copy(),
            beacon_heading=self.world.beacon_heading,
            stamp=self.plant.time,
        )

    def altimeter(self) -> tuple[float, float]:
        """(raw_range m, confidence %) of the ping return off the seabed."""
        altitude = self.world.seabed_depth - float(self.plant.state.p[2])
        altitude += float(self._rng_alt.normal(0.0, self.noise.altimeter_sigma))
        return max(altitude, 0.01), 99.0
