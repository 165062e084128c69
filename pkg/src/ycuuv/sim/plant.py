"""4-DOF vehicle plant: surge, heave, yaw actuated; sway passive.

First-order rigid-body model with linear drag, stepped by semi-implicit
Euler. Roll and pitch stay zero (open-frame vehicles of this class are
metacentrically stiff), which keeps every response a closed-form
first-order exponential the tests can check analytically: terminal surge
speed is X/d_u, total yaw for a moment pulse is integral(N) / d_r.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ycuuv.control import DEFAULT_ALLOCATION, AllocationConfig

MAX_PLANT_DT = 0.05  # s


@dataclass
class VehicleState:
    p: np.ndarray = field(default_factory=lambda: np.zeros(3))  # NED m
    yaw: float = 0.0  # rad
    v_body: np.ndarray = field(default_factory=lambda: np.zeros(3))  # u, v, w m/s
    r: float = 0.0  # rad/s yaw rate

    def copy(self) -> "VehicleState":
        return VehicleState(self.p.copy(), self.yaw, self.v_body.copy(), self.r)


@dataclass
class PlantParams:
    mass: float = 50.0  # kg
    i_z: float = 2.0  # kg m^2
    d_u: float = 80.0  # N s/m
    d_v: float = 80.0
    d_w: float = 80.0
    d_r: float = 5.0  # N m s/rad
    f_max: float = 40.0  # N per thruster at full command
    net_buoyancy: float = 0.0  # N, positive down
    current: np.ndarray = field(default_factory=lambda: np.zeros(2))  # NED m/s

    def __post_init__(self) -> None:
        self.current = np.asarray(self.current, dtype=float)
        if min(self.mass, self.i_z, self.d_u, self.d_v, self.d_w, self.d_r) <= 0:
            raise ValueError("mass, inertia and drags must be > 0")


def yaw_matrix(yaw: float) -> np.ndarray:
    c, s = math.cos(yaw), math.sin(yaw)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def pwm_to_force(pulse_us: float, params: PlantParams, cfg: AllocationConfig) -> float:
    """Invert the control module's pulse map and scale by thruster rating."""
    if not cfg.pwm_min - 1e-9 <= pulse_us <= cfg.pwm_max + 1e-9:
        raise ValueError(f"pulse {pulse_us} outside [{cfg.pwm_min}, {cfg.pwm_max}]")
    if pulse_us >= cfg.pwm_neutral:
        t = (pulse_us - cfg.pwm_neutral) / (cfg.pwm_max - cfg.pwm_neutral)
    else:
        t = (pulse_us - cfg.pwm_neutral) / (cfg.pwm_neutral - cfg.pwm_min)
    return params.f_max * t


def step_dynamics(
    state: VehicleState,
    forces,
    params: PlantParams,
    dt: float,
    matrix: np.ndarray = DEFAULT_ALLOCATION,
) -> VehicleState:
    """Semi-implicit Euler step driven by per-thruster forces in newtons."""
    if not 0.0 < dt <= MAX_PLANT_DT:
        raise ValueError(f"dt {dt} outside (0, {MAX_PLANT_DT}]")
    forces = np.asarray(forces, dtype=float)
    if not np.all(np.isfinite(forces)):
        raise ValueError("non-finite thruster force")
    # same geometry as the allocation matrix: generalized force = A^T f
    x_f, z_f, n_m = matrix.T @ forces

    u, v, w = state.v_body
    u += dt * (x_f - params.d_u * u) / params.mass
    v += dt * (-params.d_v * v) / params.mass  # sway is unactuated
    w += dt * (z_f - params.d_w * w + params.net_buoyancy) / params.mass
    r = state.r + dt * (n_m - params.d_r * state.r) / params.i_z
    yaw = state.yaw + dt * r

    v_body = np.array([u, v, w])
    current = np.array([params.current[0], params.current[1], 0.0])
    p = state.p + dt * (yaw_matrix(yaw) @ v_body + current)
    return VehicleState(p=p, yaw=yaw, v_body=v_body, r=r)


class Plant:
    """Stateful wrapper stepping the dynamics from the latest PWM pulses."""

    def __init__(self, params: PlantParams | None = None,
                 alloc: AllocationConfig | None = None):
        self.params = params or PlantParams()
        self.alloc = alloc or AllocationConfig()
        self.state = VehicleState()
        self.pulses = np.full(4, self.alloc.pwm_neutral)
        self.specific_force = np.array([0.0, 0.0, -9.80665])  # body, at rest
        self.time = 0.0

    def set_pulses(self, pulses) -> None:
        self.pulses = np.asarray(pulses, dtype=float)

    def thrusts(self) -> np.ndarray:
        return np.array(
            [pwm_to_force(p, self.params, self.alloc) for p in self.pulses]
        )

    def power(self) -> float:
        """Commanded thruster power fraction in [0, 1] (drives PLC droop)."""
        if self.params.f_max == 0:
            return 0.0
        return float(np.max(np.abs(self.thrusts())) / self.params.f_max)

    def step(self, dt: float, gravity: float = 9.80665) -> VehicleState:
        old = self.state
        new = step_dynamics(old, self.thrusts(), self.params, dt, self.alloc.matrix)
        accel_body = (new.v_body - old.v_body) / dt
        omega = np.array([0.0, 0.0, new.r])
        g_ned = np.array([0.0, 0.0, gravity])
        rot = yaw_matrix(new.yaw)
        self.specific_force = accel_body + np.cross(omega, new.v_body) - rot.T @ g_ned
        self.state = new
        self.time += dt
        return new

    def ground_velocity_body(self) -> np.ndarray:
        """Velocity over ground expressed in the body frame (what a DVL sees)."""
        current = np.array([self.params.current[0], self.params.current[1], 0.0])
        return self.state.v_body + yaw_matrix(self.state.yaw).T @ current
