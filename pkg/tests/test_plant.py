import math

import numpy as np
import pytest

from matbots.plant import (MotionCommand, NoiseParams, PlacementError, PlantConfig,
                           RobotState, enqueue_command, grasp, place, read_sensors,
                           step_robot)

DT = 1.0 / 60.0


def quiet_cfg(**kw):
    return PlantConfig(noise=NoiseParams(pos_sigma=0, yaw_sigma=0, height_sigma=0,
                                         tilt_sigma=0), **kw)


def run_ticks(state, cfg, commands, ticks):
    """commands: {tick_index: MotionCommand} enqueued at that tick's start."""
    history = [state]
    for k in range(ticks):
        now = k * DT
        if k in commands:
            state = enqueue_command(state, commands[k], now)
        state = step_robot(state, cfg, now + DT, DT)
        history.append(state)
    return state, history


class TestStepRobot:
    def test_zero_command_no_motion(self):
        cfg = quiet_cfg()
        s0 = RobotState(id=0, pos=(0.2, 0.2), height=0.1, tilt=5.0, yaw=30.0)
        cmd = MotionCommand(v=(0, 0), omega=0, height_target=0.1, tilt_target=5.0)
        s, _ = run_ticks(s0, cfg, {0: cmd}, 30)
        assert s.pos == s0.pos and s.height == s0.height
        assert s.tilt == s0.tilt and s.yaw == s0.yaw

    def test_height_step_reach_time(self):
        # 8 cm of reel travel at 2.8 cm/s: within one tick of 80/28 seconds
        # after the command activates.
        cfg = quiet_cfg()
        s = RobotState(id=0, pos=(0.2, 0.2), height=0.08)
        cmd = MotionCommand(height_target=0.16)
        s = enqueue_command(s, cmd, 0.0)
        t_active = None
        t_reached = None
        for k in range(1, 60 * 5):
            now = k * DT
            s = step_robot(s, cfg, now, DT)
            if t_active is None and s.height > 0.08:
                t_active = now - DT  # motion during [now-dt, now]
            if t_reached is None and s.height == pytest.approx(0.16, abs=1e-12):
                t_reached = now
                break
        expected = (0.16 - 0.08) / cfg.reel_rate
        assert t_reached is not None
        assert expected - 1e-9 <= (t_reached - t_active) <= expected + DT + 1e-9

    def test_height_target_beyond_range_settles_at_max(self):
        cfg = quiet_cfg()
        s = RobotState(id=0, pos=(0.2, 0.2), height=0.30)
        s = enqueue_command(s, MotionCommand(height_target=0.40), 0.0)
        s, _ = run_ticks(s, cfg, {}, 60 * 3)
        assert s.height == 0.32

    def test_latency_exactly_80ms(self):
        # A command enqueued at t first affects state at the earliest tick
        # whose end time is >= t + 0.080 s; at 60 Hz that is tick 5.
        cfg = quiet_cfg()
        s = RobotState(id=0, pos=(0.1, 0.1))
        s = enqueue_command(s, MotionCommand(v=(0.1, 0.0)), 0.0)
        positions = []
        for k in range(1, 8):
            s = step_robot(s, cfg, k * DT, DT)
            positions.append(s.pos[0])
        # ticks ending at 1..4 * dt (< 80 ms after enqueue): untouched
        assert positions[0] == positions[1] == positions[2] == positions[3] == 0.1
        # tick ending at 5 dt = 83.3 ms: first affected
        assert positions[4] > 0.1

    def test_rate_limits_hold_under_random_commands(self):
        cfg = quiet_cfg()
        rng = np.random.default_rng(12)
        s = RobotState(id=0, pos=(0.3, 0.3))
        prev = s
        for k in range(600):
            now = k * DT
            if k % 3 == 0:
                cmd = MotionCommand(
                    v=tuple(rng.uniform(-1.0, 1.0, 2)),       # deliberately over-speed
                    omega=float(rng.uniform(-4000, 4000)),
                    height_target=float(rng.uniform(-0.1, 0.6)),
                    tilt_target=float(rng.uniform(-120, 120)))
                s = enqueue_command(s, cmd, now)
            s = step_robot(s, cfg, now + DT, DT)
            eps = 1e-9
            assert math.dist(s.pos, prev.pos) <= cfg.v_max * DT + eps
            assert abs(s.height - prev.height) <= cfg.reel_rate * DT + eps
            dyaw = (s.yaw - prev.yaw + 180.0) % 360.0 - 180.0
            assert abs(dyaw) <= cfg.omega_max * DT + eps
            assert cfg.height_range[0] <= s.height <= cfg.height_range[1]
            assert abs(s.tilt) <= cfg.tilt_limit
            assert abs(s.tilt - prev.tilt) <= cfg.tilt_rate * DT + eps
            prev = s

    def test_position_clamped_to_mat(self):
        cfg = quiet_cfg()
        s = RobotState(id=0, pos=(0.54, 0.54))
        s = enqueue_command(s, MotionCommand(v=(0.24, 0.24)), 0.0)
        s, _ = run_ticks(s, cfg, {}, 120)
        assert s.pos == (0.55, 0.55)

    def test_nan_command_dropped_and_counted(self):
        cfg = quiet_cfg()
        s = RobotState(id=0, pos=(0.2, 0.2))
        s = enqueue_command(s, MotionCommand(v=(float("nan"), 0.0)), 0.0)
        s, _ = run_ticks(s, cfg, {}, 12)
        assert s.faults == 1
        assert s.pos == (0.2, 0.2)

    def test_newest_due_command_wins(self):
        cfg = quiet_cfg()
        s = RobotState(id=0, pos=(0.1, 0.1))
        s = enqueue_command(s, MotionCommand(v=(0.1, 0.0)), 0.0)
        s = enqueue_command(s, MotionCommand(v=(0.0, 0.0)), 0.001)
        for k in range(1, 12):
            s = step_robot(s, cfg, k * DT, DT)
        assert s.pos == (0.1, 0.1)  # the later stop command superseded the move


class TestSensors:
    def test_quantization_values(self):
        cfg = quiet_cfg()
        s = RobotState(id=0, pos=(0.100000, 0.200000), yaw=33.4)
        reading = read_sensors(s, cfg)
        assert reading.pos[0] == pytest.approx(0.09940, abs=1e-12)
        assert reading.pos[1] == pytest.approx(0.19880, abs=1e-12)
        assert reading.yaw == pytest.approx(33.0, abs=1e-12)

    def test_quantum_multiples_are_stable(self):
        cfg = quiet_cfg()
        s = RobotState(id=0, pos=(70 * 0.00142, 140 * 0.00142), yaw=12.0)
        reading = read_sensors(s, cfg)
        assert reading.pos[0] == pytest.approx(70 * 0.00142, abs=1e-12)
        assert reading.pos[1] == pytest.approx(140 * 0.00142, abs=1e-12)
        assert reading.yaw == 12.0

    def test_mae_calibration_quick(self):
        cfg = PlantConfig()
        rng = np.random.default_rng(0)
        s = RobotState(id=0, pos=(0.3, 0.3), yaw=10.0, height=0.2, tilt=0.0)
        n = 20000
        perr, yerr, herr, terr = [], [], [], []
        for _ in range(n):
            r = read_sensors(s, cfg, rng)
            perr.append(abs(r.pos[0] - 0.3))
            perr.append(abs(r.pos[1] - 0.3))
            yerr.append(abs(r.yaw - 10.0))
            herr.append(abs(r.height - 0.2))
            terr.append(abs(r.tilt - 0.0))
        assert np.mean(perr) == pytest.approx(0.003, rel=0.10)
        assert np.mean(yerr) == pytest.approx(3.0, rel=0.10)
        assert np.mean(herr) == pytest.approx(0.003, rel=0.10)
        assert np.mean(terr) == pytest.approx(5.0, rel=0.10)

    def test_deterministic_under_seed(self):
        cfg = PlantConfig()
        s = RobotState(id=0, pos=(0.3, 0.3))
        a = [read_sensors(s, cfg, np.random.default_rng(7)) for _ in range(3)]
        b = [read_sensors(s, cfg, np.random.default_rng(7)) for _ in range(3)]
        assert a == b


class TestGraspPlace:
    def test_grasp_then_place_same_pos(self):
        cfg = quiet_cfg()
        s0 = RobotState(id=0, pos=(0.2, 0.2), height=0.15,
                        queue=((MotionCommand(), 0.0),))
        s = grasp(s0, True)
        s = place(s, (0.2, 0.2), others=[], min_clearance=0.0666)
        assert s.pos == s0.pos and s.height == s0.height
        assert s.queue == () and not s.grasped

    def test_place_overlap_rejected(self):
        s = grasp(RobotState(id=0, pos=(0.2, 0.2)), True)
        with pytest.raises(PlacementError):
            place(s, (0.31, 0.3), others=[(0.3, 0.3)], min_clearance=0.0666)
        with pytest.raises(PlacementError):
            place(s, (0.6, 0.3), others=[], min_clearance=0.0666)

    def test_grasped_robot_ignores_commands(self):
        cfg = quiet_cfg()
        s = grasp(RobotState(id=0, pos=(0.2, 0.2)), True)
        for k in range(300):
            now = k * DT
            s = enqueue_command(s, MotionCommand(v=(0.2, 0.0), height_target=0.3), now)
            s = step_robot(s, cfg, now + DT, DT)
        assert s.pos == (0.2, 0.2)
        assert s.height == 0.08
        assert s.queue == ()


class TestConfig:
    def test_validation(self):
        with pytest.raises(ValueError):
            PlantConfig(v_max=0.0)
        with pytest.raises(ValueError):
            PlantConfig(latency=-0.1)
        with pytest.raises(ValueError):
            PlantConfig(height_range=(0.3, 0.2))

    def test_tilt_rate_from_differential_reels(self):
        cfg = PlantConfig()
        assert cfg.tilt_rate == pytest.approx(math.degrees(0.028 / 0.0235), abs=1e-9)
