"""Sensing: strapdown integration, complementary corrections, depth, altimeter."""

import math

import numpy as np
import pytest

from ycuuv import quat, schemas
from ycuuv.bus.node import BusNode
from ycuuv.eventloop import VirtualLoop
from ycuuv.sensing import (
    AhrsGains,
    EnvConstants,
    ImuSample,
    PressureSample,
    SensingNode,
    SensorFault,
    altimeter_filter,
    ahrs_correct,
    pressure_to_depth,
    strapdown_update,
)
from ycuuv.sim.segment import NetModel, SimSegment

G = 9.80665
ENV = EnvConstants()
LEVEL_ACCEL = np.array([0.0, 0.0, -G])
NORTH_MAG = np.array([1.0, 0.0, 0.0])


class TestStrapdown:
    def test_zero_rate_identity(self):
        q = quat.from_rotvec((0.1, 0.2, 0.3))
        out = strapdown_update(q, np.zeros(3), 0.01)
        assert np.allclose(out, q, atol=1e-15)

    def test_quarter_turn_in_one_second(self):
        # closed-form oracle: constant rate (0,0,pi/2) for 1 s is a 90 deg yaw
        q = quat.identity()
        for _ in range(1000):
            q = strapdown_update(q, (0.0, 0.0, math.pi / 2), 0.001)
        _, _, yaw = quat.to_euler(q)
        assert abs(math.degrees(yaw) - 90.0) < 0.01

    def test_two_half_steps_equal_full_step(self):
        rate = np.array([0.3, -0.2, 0.5])
        q0 = quat.from_rotvec((0.05, 0.0, -0.1))
        full = strapdown_update(q0, rate, 0.02)
        half = strapdown_update(strapdown_update(q0, rate, 0.01), rate, 0.01)
        assert np.max(np.abs(full - half)) < 1e-12

    def test_matches_axis_angle_closed_form(self):
        rng = np.random.default_rng(11)
        for _ in range(200):
            rate = rng.uniform(-3, 3, 3)
            dt = float(rng.uniform(1e-4, 0.1))
            if np.linalg.norm(rate) * dt > 0.3:
                continue
            q0 = quat.normalize(rng.uniform(-1, 1, 4))
            expected = quat.multiply(q0, quat.from_rotvec(rate * dt))
            got = strapdown_update(q0, rate, dt)
            assert quat.angle_between(quat.normalize(expected), got) < 1e-6

    def test_norm_preserved_many_steps(self):
        rng = np.random.default_rng(5)
        q = quat.identity()
        for _ in range(10_000):
            q = strapdown_update(q, rng.uniform(-2, 2, 3), 0.01)
        assert abs(np.linalg.norm(q) - 1.0) < 1e-9

    def test_dt_bounds(self):
        with pytest.raises(ValueError):
            strapdown_update(quat.identity(), np.zeros(3), 0.0)
        with pytest.raises(ValueError):
            strapdown_update(quat.identity(), np.zeros(3), 0.2)


class TestAhrsCorrect:
    def test_level_stationary_is_fixed_point(self):
        q = quat.identity()
        out = ahrs_correct(q, LEVEL_ACCEL, NORTH_MAG, AhrsGains(), 0.01)
        assert np.allclose(out, q, atol=1e-12)

    def test_small_tilt_decays_monotonically(self):
        gains = AhrsGains()
        q = quat.from_rotvec((math.radians(5.0), 0.0, 0.0))
        errors = [quat.angle_between(q, quat.identity())]
        steps = int(20.0 / gains.k_acc / 0.01)
        for _ in range(steps):
            q = ahrs_correct(q, LEVEL_ACCEL, NORTH_MAG, gains, 0.01)
            errors.append(quat.angle_between(q, quat.identity()))
        # tolerance covers acos() noise once the error underflows ~1e-8 rad
        assert all(b <= a + 1e-7 for a, b in zip(errors, errors[1:]))
        assert math.degrees(errors[-1]) < 0.1

    def test_high_g_skips_tilt_but_keeps_heading(self):
        gains = AhrsGains()
        tilted = quat.from_rotvec((math.radians(5.0), 0.0, 0.0))
        # 3 g surge: implausible gravity, tilt term must not fire
        maneuver_accel = np.array([3.0 * G, 0.0, 0.0])
        out = ahrs_correct(tilted, maneuver_accel, NORTH_MAG, gains, 0.01)
        # mag through an x-tilt reads zero heading error: nothing changes
        assert np.allclose(out, tilted, atol=1e-12)
        # now add a yaw error: heading term alone must act
        yawed = quat.multiply(quat.from_yaw(math.radians(10.0)), tilted)
        out = ahrs_correct(yawed, maneuver_accel, NORTH_MAG, gains, 0.01)
        assert not np.allclose(out, yawed, atol=1e-12)

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_convergence_from_30_degree_error(self, seed):
        gains = AhrsGains()
        rng = np.random.default_rng(seed)
        axis = rng.normal(size=3)
        axis /= np.linalg.norm(axis)
        q = quat.from_rotvec(axis * math.radians(30.0))
        dt = 0.01
        errors = [quat.angle_between(q, quat.identity())]
        for _ in range(int(30.0 / gains.k_acc / dt)):
            q = ahrs_correct(q, LEVEL_ACCEL, NORTH_MAG, gains, dt)
            errors.append(quat.angle_between(q, quat.identity()))
        assert all(b <= a + 1e-7 for a, b in zip(errors[1:], errors[2:]))
        assert math.degrees(errors[-1]) < 0.5

    def test_zero_mag_skips_heading_term(self):
        q = quat.from_yaw(0.3)
        out = ahrs_correct(q, LEVEL_ACCEL, np.zeros(3), AhrsGains(), 0.01)
        assert np.allclose(out, q, atol=1e-12)

    def test_gimbal_free_near_vertical_pitch(self):
        gains = AhrsGains()
        for deg in np.arange(85.0, 95.5, 0.5):
            q = quat.from_rotvec((0.0, math.radians(deg), 0.0))
            accel = quat.rotate_inverse(q, (0.0, 0.0, -G))
            mag = quat.rotate_inverse(q, (1.0, 0.0, 0.0))
            q2 = strapdown_update(q, (0.1, 0.05, -0.2), 0.01)
            q3 = ahrs_correct(q2, accel, mag, gains, 0.01)
            assert np.all(np.isfinite(q3))
            assert np.all(np.isfinite(quat.to_euler(q3)))


class TestPressureToDepth:
    def test_surface(self):
        assert pressure_to_depth(PressureSample(ENV.p_atm), ENV) == 0.0

    def test_ten_meters(self):
        p = ENV.p_atm + ENV.rho * ENV.g * 10.0
        assert abs(pressure_to_depth(PressureSample(p), ENV) - 10.0) < 1e-9

    def test_rated_depth_500m(self):
        p = ENV.p_atm + ENV.rho * ENV.g * 500.0
        assert abs(pressure_to_depth(PressureSample(p), ENV) - 500.0) < 1e-9

    def test_affine_in_pressure(self):
        d1 = pressure_to_depth(PressureSample(ENV.p_atm + 10_000), ENV)
        d2 = pressure_to_depth(PressureSample(ENV.p_atm + 20_000), ENV)
        d3 = pressure_to_depth(PressureSample(ENV.p_atm + 30_000), ENV)
        assert abs((d3 - d2) - (d2 - d1)) < 1e-12

    def test_splash_clamp(self):
        # fresh water: a 4999 Pa deficit would read -0.51 m without the clamp
        fresh = EnvConstants(rho=1000.0)
        d = pressure_to_depth(PressureSample(fresh.p_atm - 4999.0), fresh)
        assert d == -0.5

    def test_fault_below_plausible(self):
        with pytest.raises(SensorFault):
            pressure_to_depth(PressureSample(ENV.p_atm - 5001.0), ENV)


class TestAltimeter:
    def test_confident_in_range(self):
        assert altimeter_filter(10.0, 95.0) == 10.0

    def test_low_confidence(self):
        assert altimeter_filter(10.0, 10.0) is None

    def test_below_min_range(self):
        assert altimeter_filter(0.1, 99.0) is None

    def test_beyond_max_range(self):
        assert altimeter_filter(60.0, 99.0) is None


class TestSensingNode:
    def test_node_publishes_all_topics(self):
        loop = VirtualLoop()
        seg = SimSegment(loop, NetModel(base_latency=0, jitter_sigma=0))
        sensing = SensingNode(loop, seg.attach("sensing"), uid=1)
        listener = BusNode(loop, seg.attach("mon"), "mon", uid=2)
        got = {}
        for topic in (schemas.TOPIC_ATTITUDE, schemas.TOPIC_DEPTH, schemas.TOPIC_ALTITUDE):
            listener.subscribe(
                topic,
                lambda f, t=topic: got.setdefault(
                    t, schemas.decode_payload(t, f.payload)
                ),
            )
        loop.run_until(1.0)
        sensing.ingest_imu(ImuSample(np.zeros(3), LEVEL_ACCEL, NORTH_MAG, stamp=1.0))
        sensing.ingest_pressure(PressureSample(ENV.p_atm + ENV.rho * ENV.g * 2.0))
        sensing.ingest_altimeter(8.0, 99.0)
        sensing.ingest_altimeter(8.0, 5.0)  # gated: publishes NaN
        loop.run_until(1.5)
        assert got[schemas.TOPIC_ATTITUDE]["qw"] == 1.0
        assert abs(got[schemas.TOPIC_DEPTH]["depth_m"] - 2.0) < 1e-6
        assert got[schemas.TOPIC_ALTITUDE]["altitude_m"] == 8.0

    def test_nan_published_for_no_bottom(self):
        loop = VirtualLoop()
        seg = SimSegment(loop, NetModel(base_latency=0, jitter_sigma=0))
        sensing = SensingNode(loop, seg.attach("sensing"), uid=1)
        listener = BusNode(loop, seg.attach("mon"), "mon", uid=2)
        vals = []
        listener.subscribe(
            schemas.TOPIC_ALTITUDE,
            lambda f: vals.append(
                schemas.decode_payload(schemas.TOPIC_ALTITUDE, f.payload)["altitude_m"]
            ),
        )
        loop.run_until(1.0)
        sensing.ingest_altimeter(8.0, 5.0)
        loop.run_until(1.5)
        assert len(vals) == 1 and math.isnan(vals[0])
