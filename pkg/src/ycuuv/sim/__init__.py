"""Deterministic closed-loop testbed: virtual-clock network segment,
4-DOF plant, sensor emulation, fault injection, scenario runner."""

from ycuuv.sim.segment import NetModel, SimSegment, net_latency
from ycuuv.sim.plant import PlantParams, VehicleState, Plant, pwm_to_force, step_dynamics
from ycuuv.sim.sensors import NoiseConfig, SensorEmulator

__all__ = [
    "NetModel",
    "SimSegment",
    "net_latency",
    "PlantParams",
    "VehicleState",
    "Plant",
    "pwm_to_force",
    "step_dynamics",
    "NoiseConfig",
    "SensorEmulator",
]
