"""Plant dynamics, sensor emulation, and the network degradation model."""

import math

import numpy as np
import pytest

from ycuuv.control import AllocationConfig, thrust_to_pwm
from ycuuv.sensing import EnvConstants, pressure_to_depth
from ycuuv.sim.plant import Plant, PlantParams, VehicleState, pwm_to_force, step_dynamics
from ycuuv.sim.segment import NetModel, net_latency
from ycuuv.sim.sensors import NoiseConfig, SensorEmulator, WorldConfig

CFG = AllocationConfig()
PARAMS = PlantParams()


class TestPwmToForce:
    @pytest.mark.parametrize("pulse,force", [(1500, 0.0), (1900, 40.0), (1100, -40.0)])
    def test_endpoints(self, pulse, force):
        assert pwm_to_force(pulse, PARAMS, CFG) == force

    def test_round_trip_composition(self):
        rng = np.random.default_rng(2)
        for t in rng.uniform(-1, 1, 1000):
            pulse = thrust_to_pwm(np.full(4, t), CFG)[0]
            assert abs(pwm_to_force(pulse, PARAMS, CFG) - PARAMS.f_max * t) < 1e-6

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            pwm_to_force(1000.0, PARAMS, CFG)


class TestStepDynamics:
    def test_equilibrium(self):
        state = VehicleState()
        out = step_dynamics(state, np.zeros(4), PARAMS, 0.01)
        assert np.array_equal(out.p, state.p)
        assert out.yaw == 0.0 and out.r == 0.0
        assert np.array_equal(out.v_body, state.v_body)

    def test_terminal_surge_speed(self):
        # first-order ODE: u -> X/d_u, within 1% by t = 5 m / d_u
        state = VehicleState()
        forces = np.array([40.0, 40.0, 0.0, 0.0])  # X = 80 N
        dt = 0.01
        horizon = 5.0 * PARAMS.mass / PARAMS.d_u
        for _ in range(int(horizon / dt)):
            state = step_dynamics(state, forces, PARAMS, dt)
        u_terminal = 80.0 / PARAMS.d_u
        assert abs(state.v_body[0] - u_terminal) < 0.01 * u_terminal

    def test_pure_differential_thrust_spins_in_place(self):
        state = VehicleState()
        forces = np.array([10.0, -10.0, 0.0, 0.0])
        yaws = []
        for _ in range(500):
            state = step_dynamics(state, forces, PARAMS, 0.01)
            yaws.append(state.yaw)
        assert np.max(np.abs(state.p)) < 0.01  # origin, drift < 1 cm
        assert all(b > a for a, b in zip(yaws, yaws[1:]))

    def test_kinetic_energy_non_increasing_unforced(self):
        rng = np.random.default_rng(8)
        state = VehicleState(
            v_body=rng.uniform(-1, 1, 3), r=float(rng.uniform(-1, 1))
        )

        def energy(s):
            return 0.5 * PARAMS.mass * float(s.v_body @ s.v_body) + 0.5 * PARAMS.i_z * s.r**2

        last = energy(state)
        for _ in range(1000):
            state = step_dynamics(state, np.zeros(4), PARAMS, 0.05)
            e = energy(state)
            assert e <= last + 1e-15
            last = e

    def test_current_advects_hull(self):
        params = PlantParams(current=np.array([0.1, -0.2]))
        state = VehicleState()
        for _ in range(100):
            state = step_dynamics(state, np.zeros(4), params, 0.01)
        assert np.allclose(state.p, [0.1, -0.2, 0.0], atol=1e-12)

    def test_dt_bounds(self):
        with pytest.raises(ValueError):
            step_dynamics(VehicleState(), np.zeros(4), PARAMS, 0.06)


class TestPlantWrapper:
    def test_at_rest_specific_force_is_minus_g(self):
        plant = Plant()
        plant.step(0.01)
        assert np.allclose(plant.specific_force, [0.0, 0.0, -9.80665], atol=1e-12)

    def test_power_tracks_strongest_thruster(self):
        plant = Plant()
        plant.set_pulses([1900, 1500, 1500, 1500])
        assert plant.power() == 1.0
        plant.set_pulses([1500, 1500, 1500, 1500])
        assert plant.power() == 0.0

    def test_dvl_view_includes_current(self):
        plant = Plant(PlantParams(current=np.array([0.5, 0.0])))
        plant.step(0.01)
        v = plant.ground_velocity_body()
        assert abs(v[0] - (plant.state.v_body[0] + 0.5)) < 1e-12


class TestSensorEmulator:
    def make(self, noise=None, seed=42):
        plant = Plant()
        emu = SensorEmulator(plant, noise=noise or NoiseConfig(), seed=seed)
        return plant, emu

    def test_noiseless_readings_are_exact_truth_functions(self):
        plant, emu = self.make(noise=NoiseConfig().zeroed())
        plant.set_pulses([1700, 1300, 1500, 1500])  # pure yaw moment
        for _ in range(100):
            plant.step(0.01)
        imu = emu.imu()
        assert imu.gyro[2] == plant.state.r
        dvl = emu.dvl()
        assert np.array_equal(dvl.v_body, plant.ground_velocity_body())
        env = EnvConstants()
        depth = pressure_to_depth(emu.pressure(), env)
        assert abs(depth - max(plant.state.p[2], 0.0)) < 1e-9
        fix = emu.usbl_fix()
        from ycuuv.navigation import usbl_to_position

        assert np.max(np.abs(usbl_to_position(fix) - plant.state.p)) < 1e-9

    def test_fixed_seed_reproduces_streams(self):
        readings = []
        for _ in range(2):
            plant, emu = self.make(seed=42)
            stream = []
            for _ in range(50):
                plant.step(0.01)
                imu = emu.imu()
                dvl = emu.dvl()
                stream.append((tuple(imu.gyro), tuple(imu.accel), tuple(dvl.v_body)))
            readings.append(stream)
        assert readings[0] == readings[1]

    def test_empirical_sigma_matches_config(self):
        plant, emu = self.make(seed=9)
        n = 100_000
        gyro_z = np.empty(n)
        for i in range(n):
            gyro_z[i] = emu.imu().gyro[2]
        sigma = float(np.std(gyro_z))
        assert abs(sigma - 0.002) / 0.002 < 0.05

    def test_altimeter_reads_height_over_seabed(self):
        plant, emu = self.make(noise=NoiseConfig().zeroed())
        plant.state.p[2] = 6.0
        raw, conf = emu.altimeter()
        assert raw == WorldConfig().seabed_depth - 6.0
        assert conf >= 50.0


class TestNetModel:
    def test_power_zero_is_base_plus_jitter(self):
        model = NetModel()
        rng = np.random.default_rng(1)
        draws = np.array([net_latency(0.0, model, rng) for _ in range(10_000)])
        assert abs(draws.mean() - model.base_latency) < 0.1

    def test_full_power_mean_formula(self):
        # stated model: 8 + 60 * (1.0 - 0.7) = 26 ms
        model = NetModel()
        assert abs(model.deterministic_latency(1.0) - 26.0) < 1e-9
        rng = np.random.default_rng(2)
        draws = np.array([net_latency(1.0, model, rng) for _ in range(10_000)])
        assert abs(draws.mean() - 26.0) < 0.1

    def test_deterministic_component_monotone(self):
        model = NetModel()
        grid = np.linspace(0.0, 1.0, 101)
        lat = [model.deterministic_latency(p) for p in grid]
        assert all(b >= a for a, b in zip(lat, lat[1:]))

    def test_full_power_slower_than_idle(self):
        model = NetModel()
        rng = np.random.default_rng(3)
        idle = np.mean([net_latency(0.0, model, rng) for _ in range(10_000)])
        full = np.mean([net_latency(1.0, model, rng) for _ in range(10_000)])
        assert full > idle

    def test_never_negative(self):
        model = NetModel(base_latency=0.5, jitter_sigma=5.0)
        rng = np.random.default_rng(4)
        assert min(net_latency(0.0, model, rng) for _ in range(5000)) >= 0.0
