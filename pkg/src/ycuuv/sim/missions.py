"""Mission generators for scripted teleoperation runs.

The square mission drives four identical legs separated by 90-degree
open-loop turns. For a first-order yaw plant the total angle of a moment
pulse is integral(N dt) / d_r regardless of the transient, so the turn is
built as a main pulse on the command grid plus a single one-step trim pulse
whose amplitude lands on the PWM quantization lattice. That keeps each turn
within a fraction of a millidegree of 90 degrees and the trajectory closes
to well under a centimeter.
"""

from __future__ import annotations

import math

from ycuuv.control import AllocationConfig
from ycuuv.sim.plant import PlantParams
from ycuuv.sim.scenario import PLANT_RATE, Scenario, ScenarioEvent


def turn_pulse(
    angle: float,
    yaw_cmd: float = 0.1,
    params: PlantParams | None = None,
    alloc: AllocationConfig | None = None,
    dt: float = 1.0 / PLANT_RATE,
) -> tuple[float, float]:
    """(main pulse duration, trim amplitude) for an open-loop turn.

    The trim amplitude is quantized to whole microseconds of PWM offset so
    the wire format transmits it exactly.
    """
    params = params or PlantParams()
    alloc = alloc or AllocationConfig()
    # differential pair: yaw command y puts +y and -y on the horizontal pair
    moment_per_cmd = 2.0 * params.f_max  # N m per unit yaw command
    step_angle = moment_per_cmd * yaw_cmd * dt / params.d_r
    main_steps = int(angle / step_angle)
    remainder = angle - main_steps * step_angle
    trim_exact = remainder * params.d_r / (moment_per_cmd * dt)
    quantum = 1.0 / (alloc.pwm_max - alloc.pwm_neutral)  # one microsecond of pulse
    trim = round(trim_exact / quantum) * quantum
    return main_steps * dt, trim


def square_mission_events(
    leg_drive: float = 10.0,
    coast: float = 4.0,
    surge: float = 0.5,
    yaw_cmd: float = 0.1,
    start: float = 1.0,  # let discovery finish before the first command
    params: PlantParams | None = None,
    alloc: AllocationConfig | None = None,
) -> list[ScenarioEvent]:
    dt = 1.0 / PLANT_RATE
    main_t, trim = turn_pulse(math.pi / 2, yaw_cmd, params, alloc, dt)
    turn_window = 5.0  # main pulse + trim + decay all fit here
    block = leg_drive + coast + turn_window
    events = []
    at = lambda t: round(t, 9)  # keep scripted times on the clean grid
    for leg in range(4):
        t0 = start + leg * block
        events.append(ScenarioEvent(at(t0), "CMD", (str(surge), "0", "0")))
        events.append(ScenarioEvent(at(t0 + leg_drive), "CMD", ("0", "0", "0")))
        t_turn = t0 + leg_drive + coast
        events.append(ScenarioEvent(at(t_turn), "CMD", ("0", "0", repr(yaw_cmd))))
        events.append(ScenarioEvent(at(t_turn + main_t), "CMD", ("0", "0", repr(trim))))
        events.append(ScenarioEvent(at(t_turn + main_t + dt), "CMD", ("0", "0", "0")))
    return events


def make_square_scenario(**kwargs) -> Scenario:
    """Noiseless, zero-latency square teleop mission (the tracking benchmark)."""
    events = square_mission_events(**kwargs)
    settings = {
        "noise.all": 0.0,
        "net.base_latency": 0.0,
        "net.jitter_sigma": 0.0,
        "ahrs.k_acc": 0.0,  # nothing to correct when the gyro is noiseless
        "ahrs.k_mag": 0.0,
    }
    duration = round(events[-1].t + 5.0, 9)
    return Scenario(name="square", duration=duration, events=events, settings=settings)


def _fmt(t: float) -> str:
    return f"{t:.9f}".rstrip("0").rstrip(".")


def scenario_to_text(scenario: Scenario) -> str:
    lines = [f"# {scenario.name}", f"0 SET sim.duration {_fmt(scenario.duration)}"]
    for key, value in scenario.settings.items():
        lines.append(f"0 SET {key} {_fmt(value)}")
    for e in scenario.events:
        lines.append(f"{_fmt(e.t)} {e.verb} {' '.join(e.args)}")
    return "\n".join(lines) + "\n"
