import math

import numpy as np
import pytest

from matbots.motion import (RvoParams, preferred_velocity, proximity_governor,
                            rvo_step, rvo_velocities, yaw_controller, yaw_error_deg)


class TestPreferredVelocity:
    def test_stop_band(self):
        v = preferred_velocity((0.1, 0.1), (0.101, 0.1), v_max=0.24)
        assert np.all(v == 0.0)

    def test_full_speed_when_far(self):
        v = preferred_velocity((0.0, 0.0), (0.5, 0.0), v_max=0.24)
        assert np.hypot(*v) == pytest.approx(0.24, abs=1e-12)
        assert v[0] > 0 and v[1] == 0

    def test_ramp_at_default_gain(self):
        # 5 cm out at gain 2.0 commands exactly 0.10 m/s.
        v = preferred_velocity((0.0, 0.0), (0.05, 0.0), v_max=0.24)
        assert np.hypot(*v) == pytest.approx(0.10, abs=1e-12)

    def test_no_overshoot_at_60hz(self):
        pos = np.array([0.0, 0.0])
        target = np.array([0.05, 0.0])
        dt = 1.0 / 60.0
        for _ in range(600):
            v = preferred_velocity(pos, target, v_max=0.24, gain=2.0)
            pos = pos + v * dt
            assert pos[0] <= target[0] + 1e-12
        assert math.dist(pos, target) <= 0.002

    def test_rejects_bad_vmax(self):
        with pytest.raises(ValueError):
            preferred_velocity((0, 0), (1, 1), v_max=0.0)


class TestYawController:
    def test_inside_stop_band(self):
        assert yaw_controller(10.0, 13.0, omega_max=1500.0) == 0.0

    def test_opposite_heading_clamps_ccw(self):
        assert yaw_controller(0.0, 180.0, omega_max=1500.0) == 1500.0

    def test_proportional_law(self):
        assert yaw_controller(20.0, 0.0, omega_max=1500.0, gain=10.0) == pytest.approx(-200.0)

    def test_wrapping(self):
        assert yaw_error_deg(350.0, 10.0) == pytest.approx(20.0)
        assert yaw_error_deg(10.0, 350.0) == pytest.approx(-20.0)
        assert yaw_error_deg(0.0, 180.0) == pytest.approx(180.0)


def integrate(positions, velocities, prefs_fn, params, dt=1 / 60.0, steps=300):
    """Tiny two-phase simulation loop for collision checks."""
    P = np.array(positions, dtype=float)
    V = np.array(velocities, dtype=float)
    min_dist = np.inf
    for _ in range(steps):
        F = prefs_fn(P)
        V = rvo_velocities(P, V, F, params)
        P = P + V * dt
        if len(P) > 1:
            diff = P[:, None, :] - P[None, :, :]
            d = np.hypot(diff[..., 0], diff[..., 1])
            iu = np.triu_indices(len(P), k=1)
            min_dist = min(min_dist, float(d[iu].min()))
    return P, V, min_dist


class TestRvo:
    def test_single_agent_transparent(self):
        params = RvoParams()
        pref = np.array([[0.12, -0.07]])
        out = rvo_velocities(np.array([[0.1, 0.1]]), np.zeros((1, 2)), pref, params)
        assert out[0][0] == pref[0][0] and out[0][1] == pref[0][1]  # bit-for-bit
        # and through the tuple-based wrapper too
        res = rvo_step([((0.1, 0.1), (0.0, 0.0), (0.12, -0.07))], params)
        assert res[0][0] == 0.12 and res[0][1] == -0.07

    def test_head_on_symmetric_and_separated(self):
        params = RvoParams()
        v_max = 0.24

        def prefs(P):
            return np.array([
                preferred_velocity(P[0], (0.5, 0.25), v_max, gain=3.0),
                preferred_velocity(P[1], (0.0, 0.25), v_max, gain=3.0),
            ])

        P0 = [(0.0, 0.25), (0.5, 0.25)]
        out = rvo_velocities(np.array(P0), np.zeros((2, 2)), prefs(np.array(P0)), params)
        # mirror symmetry across the midline: equal speeds, opposed x
        assert np.hypot(*out[0]) == pytest.approx(np.hypot(*out[1]), abs=1e-12)
        assert out[0][0] == pytest.approx(-out[1][0], abs=1e-12)
        _, _, min_dist = integrate(P0, np.zeros((2, 2)), prefs, params, steps=400)
        assert min_dist >= 2 * params.agent_radius

    def test_static_obstacle_on_path(self):
        params = RvoParams()

        def prefs(P):
            return np.array([
                preferred_velocity(P[0], (0.5, 0.2), 0.24, gain=3.0),
                np.zeros(2),
            ])

        start = [(0.05, 0.2), (0.25, 0.2)]
        first = rvo_velocities(np.array(start), np.zeros((2, 2)),
                               prefs(np.array(start)), params)
        assert abs(first[0][1]) > 0.0  # deviates laterally around the parked robot
        assert np.all(first[1] == 0.0)  # the parked robot stays parked
        endP, _, min_dist = integrate(start, np.zeros((2, 2)), prefs, params, steps=300)
        assert min_dist >= 2 * params.agent_radius
        assert math.dist(endP[0], (0.5, 0.2)) < 0.01

    def test_speed_never_exceeds_preferred(self):
        params = RvoParams()
        rng = np.random.default_rng(4)
        for _ in range(50):
            n = rng.integers(2, 8)
            P = rng.uniform(0, 0.55, size=(n, 2))
            V = rng.uniform(-0.2, 0.2, size=(n, 2))
            F = rng.uniform(-0.24, 0.24, size=(n, 2))
            norms = np.hypot(F[:, 0], F[:, 1])
            F[norms > 0.24] *= (0.24 / norms[norms > 0.24])[:, None]
            out = rvo_velocities(P, V, F, params)
            assert np.all(np.hypot(out[:, 0], out[:, 1]) <= 0.24 + 1e-12)

    def test_candidate_count_floor(self):
        with pytest.raises(ValueError):
            RvoParams(n_speeds=4, n_angles=8)
        with pytest.raises(ValueError):
            RvoParams(time_horizon=0.0)


class TestProximityGovernor:
    def test_head_on_braked(self):
        P = np.array([[0.0, 0.0], [0.08, 0.0]])
        V = np.array([[0.24, 0.0], [-0.24, 0.0]])
        out = proximity_governor(P, V, dt=1 / 60.0, min_distance=0.0706)
        newP = P + out / 60.0
        assert math.dist(newP[0], newP[1]) >= 0.0706 - 1e-12

    def test_non_violating_pairs_untouched(self):
        P = np.array([[0.0, 0.0], [0.5, 0.5]])
        V = np.array([[0.24, 0.0], [-0.24, 0.0]])
        out = proximity_governor(P, V, dt=1 / 60.0, min_distance=0.0706)
        assert np.array_equal(out, V)

    def test_already_close_cannot_get_closer(self):
        P = np.array([[0.0, 0.0], [0.05, 0.0]])  # tighter than the floor already
        V = np.array([[0.24, 0.0], [-0.24, 0.0]])
        out = proximity_governor(P, V, dt=1 / 60.0, min_distance=0.0706)
        newP = P + out / 60.0
        assert math.dist(newP[0], newP[1]) >= 0.05 - 1e-12

    def test_random_swarm_never_violates(self):
        rng = np.random.default_rng(8)
        for _ in range(200):
            n = int(rng.integers(2, 9))
            P = rng.uniform(0, 0.3, size=(n, 2))
            V = rng.uniform(-0.24, 0.24, size=(n, 2))
            out = proximity_governor(P, V, dt=1 / 60.0, min_distance=0.0706)
            newP = P + out / 60.0
            diff = newP[:, None, :] - newP[None, :, :]
            d = np.hypot(diff[..., 0], diff[..., 1])
            iu = np.triu_indices(n, k=1)
            cur = P[:, None, :] - P[None, :, :]
            dcur = np.hypot(cur[..., 0], cur[..., 1])[iu]
            floor = np.minimum(0.0706, dcur)
            assert np.all(d[iu] >= floor - 1e-9)
