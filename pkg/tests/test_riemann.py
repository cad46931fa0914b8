import numpy as np
import pytest

from granufv import (BetaPair, RiemannStates, conserved_from_primitive,
                     flux_normal, gravity_coeff, hll_flux, star_estimates,
                     wave_speeds)


def states(hL, uL, hR, uR, bL=(1.0, 1.0), bR=None, n=(1.0, 0.0)):
    bR = bR or bL
    return RiemannStates(np.array([hL, hL * uL, 0.0]),
                         np.array([hR, hR * uR, 0.0]),
                         BetaPair(*bL), BetaPair(*bR), np.array(n))


class TestGravityCoeff:
    def test_isotropic(self):
        assert gravity_coeff(BetaPair(1.0, 1.0), [0.6, 0.8]) == pytest.approx(1.0)

    def test_axis_aligned(self):
        assert gravity_coeff(BetaPair(1.0, 4.0), [0.0, 1.0]) == pytest.approx(4.0)

    def test_diagonal(self):
        n = np.sqrt(0.5)
        c = gravity_coeff(BetaPair(1.0, 4.0), [n, n])
        assert c == pytest.approx(2.5, rel=1e-12)


class TestStarEstimates:
    def test_symmetric_rest(self):
        u_star, h_star = star_estimates(states(2.0, 0.0, 2.0, 0.0))
        assert u_star == pytest.approx(0.0, abs=1e-15)
        assert h_star == pytest.approx(2.0, rel=1e-12)

    def test_colliding(self):
        u_star, h_star = star_estimates(states(1.0, 1.0, 1.0, -1.0))
        assert u_star == pytest.approx(0.0, abs=1e-15)
        assert h_star == pytest.approx(2.25, rel=1e-12)

    def test_depth_jump_at_rest(self):
        u_star, h_star = star_estimates(states(4.0, 0.0, 1.0, 0.0))
        assert u_star == pytest.approx(1.0, rel=1e-12)
        assert h_star == pytest.approx(2.25, rel=1e-12)

    def test_rejects_dry(self):
        with pytest.raises(ValueError):
            star_estimates(states(1.0, 0.0, 0.0, 0.0))


class TestWaveSpeeds:
    def test_dry_right(self):
        s = wave_speeds(states(1.0, 0.0, 0.0, 0.0))
        assert s.sL == pytest.approx(-1.0, rel=1e-12)
        assert s.sR == pytest.approx(2.0, rel=1e-12)

    def test_dry_left_mirror(self):
        s = wave_speeds(states(0.0, 0.0, 1.0, 0.0))
        assert s.sL == pytest.approx(-2.0, rel=1e-12)
        assert s.sR == pytest.approx(1.0, rel=1e-12)

    def test_symmetric_rest(self):
        s = wave_speeds(states(1.0, 0.0, 1.0, 0.0))
        assert s.sL == pytest.approx(-1.0, rel=1e-12)
        assert s.sR == pytest.approx(1.0, rel=1e-12)

    def test_ordering_for_wet_states(self):
        rng = np.random.default_rng(23)
        for _ in range(300):
            st = states(rng.uniform(0.05, 4), rng.uniform(-3, 3),
                        rng.uniform(0.05, 4), rng.uniform(-3, 3),
                        bL=tuple(rng.uniform(0.3, 3, 2)),
                        bR=tuple(rng.uniform(0.3, 3, 2)))
            s = wave_speeds(st)
            assert s.sL <= s.sR

    def test_dry_front_faster_than_interior_wave(self):
        rng = np.random.default_rng(29)
        from granufv import eigenvalues
        for _ in range(200):
            hL = rng.uniform(0.05, 4)
            uL = rng.uniform(-3, 3)
            b = BetaPair(*rng.uniform(0.3, 3, 2))
            st = states(hL, uL, 0.0, 0.0, bL=(float(b.bx), float(b.by)))
            s = wave_speeds(st)
            lam3 = eigenvalues(st.uL, b, st.n)[2]
            assert s.sR > lam3


class TestHLLFlux:
    def test_supercritical_left(self):
        st = states(1.0, 1.0, 1.0, 1.0)
        f = hll_flux(st)
        assert np.allclose(f, [1.0, 1.5, 0.0], rtol=1e-12)

    def test_dry_right_fan(self):
        st = states(1.0, 0.0, 0.0, 0.0)
        f = hll_flux(st)
        assert np.allclose(f, [2.0 / 3.0, 1.0 / 3.0, 0.0], rtol=1e-12)

    def test_both_dry(self):
        st = states(0.0, 0.0, 0.0, 0.0)
        assert np.all(hll_flux(st) == 0.0)

    def test_sub_threshold_is_dry(self):
        st = states(1e-12, 0.0, 1e-12, 0.0)
        assert np.all(hll_flux(st, h_dry=1e-8) == 0.0)

    def test_consistency_random_states(self):
        rng = np.random.default_rng(31)
        for _ in range(1000):
            h = rng.uniform(0.05, 5)
            u, v = rng.uniform(-3, 3, 2)
            th = rng.uniform(0, 2 * np.pi)
            n = np.array([np.cos(th), np.sin(th)])
            b = BetaPair(*rng.uniform(0.3, 3, 2))
            U = conserved_from_primitive(h, u, v)
            st = RiemannStates(U, U.copy(), b, b, n)
            f = hll_flux(st)
            f_exact = flux_normal(U, b, n)
            assert np.abs(f - f_exact).max() <= 1e-12 * (1 + np.abs(f_exact).max())

    def test_intermediate_state_depth_bounded_in_dambreak_fan(self):
        # HLL middle state between the signal speeds stays within the
        # physical depth range for dam-break style data.
        rng = np.random.default_rng(37)
        for _ in range(200):
            hL = rng.uniform(0.1, 10)
            st = states(hL, 0.0, 0.0, 0.0)
            s = wave_speeds(st)
            fL = flux_normal(st.uL, st.betaL, st.n)
            fR = flux_normal(st.uR, st.betaR, st.n)
            u_mid = ((s.sR * st.uR - s.sL * st.uL + fL - fR)
                     / (s.sR - s.sL))
            assert -1e-12 <= u_mid[0] <= hL + 1e-12

    def test_antisymmetry_under_swap(self):
        rng = np.random.default_rng(41)
        for _ in range(200):
            st = states(rng.uniform(0.05, 4), rng.uniform(-3, 3),
                        rng.uniform(0.05, 4), rng.uniform(-3, 3),
                        bL=tuple(rng.uniform(0.3, 3, 2)),
                        bR=tuple(rng.uniform(0.3, 3, 2)))
            f = hll_flux(st)
            swapped = RiemannStates(st.uR, st.uL, st.betaR, st.betaL, -st.n)
            f_swapped = hll_flux(swapped)
            assert np.abs(f + f_swapped).max() <= 1e-12 * (1 + np.abs(f).max())
