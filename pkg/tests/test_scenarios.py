import numpy as np
import pytest

from granufv import (cap_initial, chute_zeta, cone_zb, dam_initial,
                     exact_dambreak, ghost_state)
from granufv.scenarios import (OUTFLOW, WALL, BoundarySpec, chute_scenario,
                               dam_break_scenario, flat_rest_scenario,
                               obstacle_scenario)

DEG = np.pi / 180.0


class TestChuteZeta:
    def test_inclined_section(self):
        zeta, dz = chute_zeta(10.0)
        assert zeta == pytest.approx(35 * DEG, rel=1e-12)
        assert zeta == pytest.approx(0.610865, abs=1e-6)
        assert dz == 0.0

    def test_ramp_midpoint(self):
        zeta, dz = chute_zeta(19.5)
        assert zeta == pytest.approx(17.5 * DEG, rel=1e-12)
        assert zeta == pytest.approx(0.305433, abs=1e-6)
        assert dz == pytest.approx(-35 * DEG / 4.0, rel=1e-12)
        assert dz == pytest.approx(-0.152716, abs=1e-6)

    def test_horizontal_runout(self):
        zeta, dz = chute_zeta(25.0)
        assert zeta == 0.0 and dz == 0.0

    def test_continuity_at_breakpoints(self):
        for x0 in (17.5, 21.5):
            below = chute_zeta(x0 - 1e-12)[0]
            above = chute_zeta(x0 + 1e-12)[0]
            assert below == pytest.approx(above, abs=1e-11)
        assert chute_zeta(17.5)[0] == pytest.approx(35 * DEG, rel=1e-14)
        assert chute_zeta(21.5)[0] == 0.0


class TestConeZb:
    def test_apex(self):
        zb, gx, gy = cone_zb(13.0, 0.0)
        assert zb == 1.0 and gx == 0.0 and gy == 0.0

    def test_rim(self):
        zb, gx, gy = cone_zb(14.0, 0.0)
        assert zb == 0.0 and gx == 0.0 and gy == 0.0

    def test_flank_slope(self):
        zb, gx, gy = cone_zb(13.5, 0.0)
        assert zb == pytest.approx(0.5, rel=1e-12)
        assert gx == pytest.approx(-1.0, rel=1e-12)
        assert gy == 0.0

    def test_outside(self):
        zb, gx, gy = cone_zb(10.0, 5.0)
        assert zb == 0.0 and gx == 0.0 and gy == 0.0


class TestCapInitial:
    def test_center_depth(self):
        assert cap_initial(4.0, 0.0) == pytest.approx(1.85, rel=1e-12)

    def test_rim_and_outside(self):
        assert cap_initial(4.0 + 1.85, 0.0) == pytest.approx(0.0, abs=1e-7)
        assert cap_initial(8.0, 3.0) == 0.0

    def test_volume_matches_spherical_cap(self):
        # midpoint quadrature of the cap depth over its support
        r0 = 1.85
        n = 2000
        xs = np.linspace(4 - r0, 4 + r0, n, endpoint=False) + r0 / n
        ys = np.linspace(-r0, r0, n, endpoint=False) + r0 / n
        X, Y = np.meshgrid(xs, ys)
        vol = cap_initial(X, Y).sum() * (2 * r0 / n) ** 2
        assert vol == pytest.approx(2.0 / 3.0 * np.pi * r0 ** 3, rel=1e-5)


class TestDamInitial:
    def test_left_column(self):
        assert np.allclose(dam_initial(-1.0, 0.0), [10.0, 0.0, 0.0])

    def test_right_dry(self):
        assert np.allclose(dam_initial(1.0, 0.0), [0.0, 0.0, 0.0])

    def test_interface_assigned_dry(self):
        assert np.allclose(dam_initial(0.0, 0.0), [0.0, 0.0, 0.0])


class TestExactDambreak:
    G = 9.81
    ZETA = 40 * DEG
    DELTA = 24.5 * DEG

    def accel(self):
        return self.G * np.cos(self.ZETA) * (np.tan(self.DELTA) - np.tan(self.ZETA))

    def test_quiescent_branch(self):
        t = 0.3
        chi = -2.0 * np.sqrt(self.G * 10 * np.cos(self.ZETA)) * t
        x = chi - 0.5 * self.accel() * t * t
        h, u = exact_dambreak(x, t)
        assert h == pytest.approx(10.0, rel=1e-12)
        assert u == pytest.approx(-self.accel() * t, rel=1e-12)

    def test_fan_midpoint(self):
        t = 0.5
        c0 = np.sqrt(self.G * 10 * np.cos(self.ZETA))
        x = -0.5 * self.accel() * t * t  # chi = 0
        h, u = exact_dambreak(x, t)
        assert h == pytest.approx(40.0 / 9.0, rel=1e-12)
        assert c0 == pytest.approx(8.6689, abs=1e-4)
        big_u = u + self.accel() * t
        assert big_u == pytest.approx(2.0 / 3.0 * c0, rel=1e-12)
        assert big_u == pytest.approx(5.7793, abs=1e-4)

    def test_dry_branch(self):
        t = 0.4
        c0 = np.sqrt(self.G * 10 * np.cos(self.ZETA))
        x = 2.5 * c0 * t
        h, u = exact_dambreak(x, t)
        assert h == 0.0 and u == 0.0

    def test_depth_continuous_at_branch_edges(self):
        t = 0.5
        c0 = np.sqrt(self.G * 10 * np.cos(self.ZETA))
        for chi_edge in (-c0 * t, 2 * c0 * t):
            x = chi_edge - 0.5 * self.accel() * t * t
            h_lo, _ = exact_dambreak(x - 1e-9, t)
            h_hi, _ = exact_dambreak(x + 1e-9, t)
            assert h_lo == pytest.approx(h_hi, abs=1e-7)

    def test_velocity_continuous_at_rear_edge(self):
        t = 0.5
        c0 = np.sqrt(self.G * 10 * np.cos(self.ZETA))
        x = -c0 * t - 0.5 * self.accel() * t * t
        _, u_lo = exact_dambreak(x - 1e-9, t)
        _, u_hi = exact_dambreak(x + 1e-9, t)
        assert u_lo == pytest.approx(u_hi, abs=1e-7)

    def test_initial_time(self):
        h, u = exact_dambreak(np.array([-1.0, 1.0]), 0.0)
        assert np.allclose(h, [10.0, 0.0]) and np.all(u == 0.0)


class TestGhostState:
    def test_wall_reflects_normal_momentum(self):
        out = ghost_state(WALL, np.array([1.0, 1.0, 0.0]), np.array([1.0, 0.0]))
        assert np.allclose(out, [1.0, -1.0, 0.0])

    def test_wall_keeps_tangential(self):
        out = ghost_state(WALL, np.array([1.0, 0.0, 1.0]), np.array([1.0, 0.0]))
        assert np.allclose(out, [1.0, 0.0, 1.0])

    def test_outflow_copies(self):
        U = np.array([2.0, -1.0, 0.5])
        assert np.allclose(ghost_state(OUTFLOW, U, np.array([0.0, 1.0])), U)

    def test_wall_reflection_involutive(self):
        rng = np.random.default_rng(9)
        for _ in range(50):
            U = rng.uniform(-2, 2, 3)
            U[0] = abs(U[0])
            th = rng.uniform(0, 2 * np.pi)
            n = np.array([np.cos(th), np.sin(th)])
            twice = ghost_state(WALL, ghost_state(WALL, U, n), n)
            assert np.allclose(twice, U, atol=1e-14)


class TestScenarioFactories:
    def test_dam_break_defaults(self):
        sc = dam_break_scenario()
        assert sc.pressure_mode == "constant"
        assert sc.params.gravity == 9.81
        assert sc.boundary.y_min == WALL and sc.boundary.x_min == OUTFLOW
        assert sc.exact is not None

    def test_chute_defaults(self):
        sc = chute_scenario()
        assert sc.pressure_mode == "mohr_coulomb"
        assert sc.params.gravity == 1.0
        assert sc.boundary == BoundarySpec.all_outflow()
        zeta, _ = sc.slope_at(np.array([5.0]))
        assert zeta[0] == pytest.approx(35 * DEG)

    def test_obstacle_has_cone(self):
        sc = obstacle_scenario()
        zb, gx, _ = sc.topography(np.array([13.5]), np.array([0.0]))
        assert zb[0] == pytest.approx(0.5)
        assert gx[0] == pytest.approx(-1.0)

    def test_flat_rest_walls(self):
        sc = flat_rest_scenario(h0=2.0)
        assert sc.boundary == BoundarySpec.all_wall()
        U = sc.initial_state(np.array([0.5]), np.array([0.0]))
        assert np.allclose(U, [[2.0, 0.0, 0.0]])

    def test_side_rule_classification(self):
        spec = BoundarySpec(x_min="wall", x_max="outflow",
                            y_min="outflow", y_max="wall")
        normals = np.array([[-1.0, 0.0], [1.0, 0.0], [0.0, -1.0], [0.0, 1.0]])
        rules = spec.side_rule(normals)
        assert list(rules) == ["wall", "outflow", "outflow", "wall"]
