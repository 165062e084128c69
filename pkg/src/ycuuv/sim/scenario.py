"""Scenario files and the closed-loop simulation runner.

A scenario is line-oriented text, ``<t_seconds> <verb> <args...>``:

    0   SET net.base_latency 0      # t=0 SETs configure the run
    0   SET noise.all 0
    1.0 CMD 0.5 0 0                 # surge/heave/yaw targets for the operator
    10  KILL sensing                # node stops heartbeating and processing
    12  RESTORE sensing
    5   PARTITION operator control  # segment drops frames between the pair
    7   RESTORE operator control

The runner wires the full vehicle onto one simulated segment: plant,
sensing, dvl, usbl, control, navigation, operator and a payload stub, all
driven by the seeded virtual clock, so every run is bit-reproducible for a
fixed seed. Telemetry is JSON Lines, one record per published frame.
"""

from __future__ import annotations

import argparse
import os
from dataclasses import dataclass, field

import numpy as np

from ycuuv import schemas
from ycuuv.bus.node import BusConfig, BusNode
from ycuuv.control import AllocationConfig, ControlNode
from ycuuv.eventloop import RealTimeLoop, VirtualLoop
from ycuuv.navigation import FusionConfig, NavNode
from ycuuv.operator import OperatorNode, TelemetryRecorder
from ycuuv.sensing import AhrsGains, EnvConstants, SensingNode
from ycuuv.sim.plant import Plant, PlantParams
from ycuuv.sim.segment import NetModel, SimSegment
from ycuuv.sim.sensors import NoiseConfig, SensorEmulator, WorldConfig

VERBS = ("CMD", "KILL", "PARTITION", "RESTORE", "SET")

PLANT_RATE = 100.0  # Hz; DVL runs at the same rate so /pose can mirror truth
IMU_RATE = 100.0
PRESSURE_RATE = 10.0
ALTIMETER_RATE = 2.0
USBL_RATE = 1.0
PAYLOAD_RATE = 1.0


@dataclass
class ScenarioEvent:
    t: float
    verb: str
    args: tuple[str, ...]


@dataclass
class Scenario:
    name: str = "scenario"
    duration: float = 10.0
    events: list[ScenarioEvent] = field(default_factory=list)
    settings: dict[str, float] = field(default_factory=dict)  # t=0 SET lines


def parse_scenario(text: str, name: str = "scenario") -> Scenario:
    events: list[ScenarioEvent] = []
    settings: dict[str, float] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        try:
            t = float(parts[0])
        except ValueError as exc:
            raise ValueError(f"{name}:{lineno}: bad time {parts[0]!r}") from exc
        verb = parts[1].upper()
        if verb not in VERBS:
            raise ValueError(f"{name}:{lineno}: unknown verb {verb!r}")
        args = tuple(parts[2:])
        if verb == "SET" and t == 0.0:
            settings[args[0]] = float(args[1])
        else:
            events.append(ScenarioEvent(t, verb, args))
    if any(b.t < a.t for a, b in zip(events, events[1:])):
        raise ValueError(f"{name}: events must be time-ordered")
    last = max((e.t for e in events), default=0.0)
    duration = settings.pop("sim.duration", last + 5.0)
    return Scenario(name=name, duration=duration, events=events, settings=settings)


class PayloadStub:
    """Generic hot-pluggable payload: publishes a counter, listens to /pose."""

    def __init__(self, loop, transport, name: str = "payload", **node_kw):
        self.node = BusNode(loop, transport, name, **node_kw)
        self.node.advertise(
            schemas.TOPIC_PAYLOAD_STATUS, schemas.schema_id(schemas.TOPIC_PAYLOAD_STATUS)
        )
        self.node.subscribe(schemas.TOPIC_POSE, lambda frame: None)
        self.count = 0
        self.node.call_every(1.0 / PAYLOAD_RATE, self._tick, first_delay=1.0 / PAYLOAD_RATE)

    def _tick(self) -> None:
        self.count += 1
        self.node.publish(
            schemas.TOPIC_PAYLOAD_STATUS,
            schemas.encode_payload(schemas.TOPIC_PAYLOAD_STATUS, self.count),
        )


class SimRun:
    """One wired-up scenario execution."""

    def __init__(self, scenario: Scenario, seed: int | None = None,
                 out: str | None = None, live: bool = False):
        self.scenario = scenario
        if seed is None:
            seed = int(os.environ.get("YC_SIM_SEED", "0"))
        self.seed = seed
        self.live = live
        self.loop = RealTimeLoop() if live else VirtualLoop()
        self.truth_history: list[tuple[float, float, float, float, float]] = []

        # configuration from t=0 SET lines
        self.net = NetModel()
        self.noise = NoiseConfig()
        self.params = PlantParams()
        self.world = WorldConfig()
        self.alloc = AllocationConfig()
        self.env = EnvConstants()
        self.gains = AhrsGains()
        self.fusion = FusionConfig()
        self.bus_config = BusConfig()
        for key, value in scenario.settings.items():
            self._apply_setting(key, value, pre_build=True)

        seq = np.random.SeedSequence(seed)
        uid_stream, net_stream, sensor_stream = seq.spawn(3)
        uid_rng = np.random.default_rng(uid_stream)
        self._next_uid = lambda: int(uid_rng.integers(0, 2**63))

        self.plant = Plant(self.params, self.alloc)
        self.emulator = SensorEmulator(
            self.plant, self.env, self.noise, self.world, seed=sensor_stream
        )
        self.segment = SimSegment(
            self.loop, self.net, rng=np.random.default_rng(net_stream),
            power_source=self.plant.power,
        )
        self.recorder = TelemetryRecorder(out) if out else None
        hook = self.recorder.record if self.recorder else None

        def bus_kw():
            return dict(uid=self._next_uid(), publish_hook=hook)

        # creation order fixes same-instant event order: the plant steps
        # first on each grid time, then sensors read the post-step state
        self.plant_node = BusNode(
            self.loop, self.segment.attach("plant"), "plant", self.bus_config, **bus_kw()
        )
        self.plant_node.subscribe(schemas.TOPIC_PWM, self._on_pwm)
        plant_dt = 1.0 / PLANT_RATE
        self.plant_node.call_every(plant_dt, lambda: self._step_plant(plant_dt),
                                   first_delay=plant_dt)

        self.sensing = SensingNode(
            self.loop, self.segment.attach("sensing"), self.env, self.gains,
            self.bus_config, **bus_kw(),
        )
        self.sensing.node.call_every(
            1.0 / IMU_RATE, lambda: self.sensing.ingest_imu(self.emulator.imu()),
            first_delay=1.0 / IMU_RATE,
        )
        # slow sensors run half a plant step off the integration grid so they
        # always observe a completed dynamics step
        phase = 0.5 / PLANT_RATE
        self.sensing.node.call_every(
            1.0 / PRESSURE_RATE,
            lambda: self.sensing.ingest_pressure(self.emulator.pressure()),
            first_delay=1.0 / PRESSURE_RATE + phase,
        )
        self.sensing.node.call_every(
            1.0 / ALTIMETER_RATE,
            lambda: self.sensing.ingest_altimeter(*self.emulator.altimeter()),
            first_delay=1.0 / ALTIMETER_RATE + phase,
        )

        self.dvl_node = BusNode(
            self.loop, self.segment.attach("dvl"), "dvl", self.bus_config, **bus_kw()
        )
        self.dvl_node.advertise(schemas.TOPIC_DVL, schemas.schema_id(schemas.TOPIC_DVL))
        self.dvl_node.call_every(
            1.0 / PLANT_RATE, self._publish_dvl, first_delay=1.0 / PLANT_RATE
        )

        self.usbl_node = BusNode(
            self.loop, self.segment.attach("usbl"), "usbl", self.bus_config, **bus_kw()
        )
        self.usbl_node.advertise(schemas.TOPIC_USBL, schemas.schema_id(schemas.TOPIC_USBL))
        self.usbl_node.call_every(
            1.0 / USBL_RATE, self._publish_usbl, first_delay=1.0 / USBL_RATE + phase
        )

        self.control = ControlNode(
            self.loop, self.segment.attach("control"), self.alloc, self.bus_config,
            **bus_kw(),
        )
        self.navigation = NavNode(
            self.loop, self.segment.attach("navigation"), self.fusion, self.bus_config,
            name="navigation", start_time=0.0, **bus_kw(),
        )
        self.operator = OperatorNode(
            self.loop, self.segment.attach("operator"), recorder=None,
            bus_config=self.bus_config, **bus_kw(),
        )
        self.payload = PayloadStub(
            self.loop, self.segment.attach("payload"), **bus_kw()
        )

        self.bus_nodes: dict[str, BusNode] = {
            "plant": self.plant_node,
            "sensing": self.sensing.node,
            "dvl": self.dvl_node,
            "usbl": self.usbl_node,
            "control": self.control.node,
            "navigation": self.navigation.node,
            "operator": self.operator.node,
            "payload": self.payload.node,
        }

        for event in scenario.events:
            self.loop.call_at(event.t, lambda e=event: self._fire(e))

    # -- wiring callbacks ------------------------------------------------------

    def _on_pwm(self, frame) -> None:
        fields = schemas.decode_payload(schemas.TOPIC_PWM, frame.payload)
        self.plant.set_pulses(
            [fields["pwm1"], fields["pwm2"], fields["pwm3"], fields["pwm4"]]
        )

    def _step_plant(self, dt: float) -> None:
        state = self.plant.step(dt, gravity=self.env.g)
        self.truth_history.append(
            (self.loop.now(), state.p[0], state.p[1], state.p[2], state.yaw)
        )

    def _publish_dvl(self) -> None:
        sample = self.emulator.dvl()
        vx, vy, vz = (float(v) for v in sample.v_body)
        self.dvl_node.publish(
            schemas.TOPIC_DVL,
            schemas.encode_payload(schemas.TOPIC_DVL, vx, vy, vz, int(sample.valid)),
        )

    def _publish_usbl(self) -> None:
        fix = self.emulator.usbl_fix()
        self.usbl_node.publish(
            schemas.TOPIC_USBL,
            schemas.encode_payload(
                schemas.TOPIC_USBL,
                fix.range,
                fix.azimuth,
                fix.elevation,
                float(fix.beacon_pos[0]),
                float(fix.beacon_pos[1]),
                float(fix.beacon_pos[2]),
                fix.beacon_heading,
            ),
        )

    # -- scenario events -------------------------------------------------------

    def _node(self, name: str) -> BusNode:
        if name not in self.bus_nodes:
            raise ValueError(f"unknown fault target {name!r}")
        return self.bus_nodes[name]

    def _fire(self, event: ScenarioEvent) -> None:
        if event.verb == "CMD":
            surge, heave, yaw = (float(a) for a in event.args)
            self.operator.set_target(surge, heave, yaw)
        elif event.verb == "KILL":
            self._node(event.args[0]).kill()
        elif event.verb == "PARTITION":
            self.segment.partition(event.args[0], event.args[1])
        elif event.verb == "RESTORE":
            if len(event.args) == 1:
                self._node(event.args[0]).restart()
            else:
                self.segment.heal(event.args[0], event.args[1])
        elif event.verb == "SET":
            self._apply_setting(event.args[0], float(event.args[1]), pre_build=False)

    def _apply_setting(self, key: str, value: float, pre_build: bool) -> None:
        group, _, name = key.partition(".")
        if group == "net":
            setattr(self.net, name, value)  # live object: applies mid-run too
        elif group == "plant":
            if name == "current_n":
                self.params.current[0] = value
            elif name == "current_e":
                self.params.current[1] = value
            else:
                setattr(self.params, name, value)
        elif not pre_build:
            raise ValueError(f"setting {key!r} can only be set at t=0")
        elif group == "noise":
            if name == "all":
                self.noise = NoiseConfig() if value else self.noise.zeroed()
            else:
                setattr(self.noise, f"{name}_sigma", value)
        elif group == "world":
            if name in ("beacon_n", "beacon_e", "beacon_d"):
                idx = ("beacon_n", "beacon_e", "beacon_d").index(name)
                self.world.beacon_pos[idx] = value
            elif name.startswith("dvl_bias_"):
                idx = "xyz".index(name[-1])
                self.world.dvl_bias[idx] = value
            else:
                setattr(self.world, name, value)
        elif group == "ahrs":
            setattr(self.gains, name, value)
        elif group == "fusion":
            setattr(self.fusion, name, value)
        elif group == "env":
            setattr(self.env, name, value)
        elif group == "control":
            setattr(self.alloc, name, value)
        elif group == "bus":
            if name == "miss_limit":
                self.bus_config.miss_limit = int(value)
            else:
                setattr(self.bus_config, name, value)
        else:
            raise ValueError(f"unknown setting group {group!r}")

    # -- execution -------------------------------------------------------------

    def run(self) -> "SimRun":
        if self.live:
            import time

            time.sleep(self.scenario.duration)
            self.loop.stop()
        else:
            self.loop.run_until(self.scenario.duration)
        if self.recorder:
            self.recorder.close()
        return self


def run_scenario(scenario: Scenario, seed: int = 0, out: str | None = None) -> SimRun:
    return SimRun(scenario, seed=seed, out=out).run()


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description="closed-loop vehicle simulator")
    parser.add_argument("--scenario", required=True, help="scenario file")
    parser.add_argument("--seed", type=int, default=None,
                        help="RNG seed (default: YC_SIM_SEED or 0)")
    parser.add_argument("--out", default="telemetry.jsonl", help="telemetry JSONL path")
    parser.add_argument("--live", action="store_true",
                        help="run on the wall clock instead of the virtual clock")
    args = parser.parse_args(argv)

    with open(args.scenario, encoding="utf-8") as fh:
        scenario = parse_scenario(fh.read(), name=args.scenario)
    run = SimRun(scenario, seed=args.seed, out=args.out, live=args.live)
    run.run()
    n_truth = len(run.truth_history)
    final = run.truth_history[-1] if n_truth else (0.0, 0.0, 0.0, 0.0, 0.0)
    print(
        f"{scenario.name}: {scenario.duration:.1f} s simulated, "
        f"{n_truth} plant steps, final NED=({final[1]:.3f}, {final[2]:.3f}, {final[3]:.3f})"
    )
    if run.recorder:
        print(f"telemetry: {args.out} ({run.recorder.lines} records)")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
