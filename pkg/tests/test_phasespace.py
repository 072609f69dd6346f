import math

import numpy as np
import pytest

from schurphase import model, spectral
from schurphase.phasespace import CoherentStateFactory, Field, TorusGrid, coherent_state, husimi, husimi_sum


class TestTorusGrid:
    def test_total_area_is_one(self):
        grid = TorusGrid(37, 53)
        assert grid.cell_area * grid.nq * grid.np == pytest.approx(1.0, rel=1e-14)

    def test_centers_inside_domain(self):
        grid = TorusGrid(16, 16)
        assert np.all((grid.q_centers() >= 0) & (grid.q_centers() < 1))
        assert np.all((grid.p_centers() >= -0.5) & (grid.p_centers() < 0.5))

    def test_field_shape_checked(self):
        with pytest.raises(ValueError):
            Field(TorusGrid(4, 8), np.zeros((4, 4)))


class TestCoherentStates:
    def test_unit_norm(self):
        rng = np.random.default_rng(0)
        fac = CoherentStateFactory(101)
        for _ in range(5):
            z = fac.state(rng.uniform(0, 1), rng.uniform(-0.5, 0.5))
            assert abs(np.linalg.norm(z) - 1) < 1e-12

    def test_gaussian_overlap_formula(self):
        fac = CoherentStateFactory(1001)
        hbar = fac.hbar_eff
        sigma = math.sqrt(hbar / 2)
        z0 = fac.state(0.5, 0.1)
        for delta in (0.5 * sigma, 2 * sigma, 3 * sigma):
            got = abs(np.vdot(z0, fac.state(0.5 + delta, 0.1))) ** 2
            want = math.exp(-(delta**2) / (2 * hbar))
            assert abs(got - want) / want < 0.02

    def test_image_truncation_converged(self):
        z3 = CoherentStateFactory(101, s_max=3).state(0.02, -0.3)
        z6 = CoherentStateFactory(101, s_max=6).state(0.02, -0.3)
        assert np.max(np.abs(z3 - z6)) < 1e-12

    def test_positive_envelope_at_zero_momentum(self):
        fac = CoherentStateFactory(51)
        z = coherent_state(fac, 0.5, 0.0)
        assert np.all(z.real > 0)
        assert np.max(np.abs(z.imag)) < 1e-12

    def test_outside_domain_rejected(self):
        fac = CoherentStateFactory(51)
        with pytest.raises(ValueError):
            fac.state(1.2, 0.0)


class TestHusimi:
    def test_coherent_state_peak(self):
        fac = CoherentStateFactory(1001)
        grid = TorusGrid(200, 200)
        q0, p0 = grid.q_centers()[60], grid.p_centers()[140]
        f = husimi(fac.state(q0, p0), grid, fac)
        assert f.values.max() >= 0.99
        j, i = np.unravel_index(np.argmax(f.values), f.values.shape)
        assert (i, j) == (60, 140)

    def test_integral_is_planck_cell(self):
        # resolution of identity: integral of |<z|psi>|^2 over phase space = h
        N = 101
        fac = CoherentStateFactory(N)
        grid = TorusGrid(256, 256)
        rng = np.random.default_rng(1)
        psi = rng.standard_normal(N) + 1j * rng.standard_normal(N)
        psi /= np.linalg.norm(psi)
        f = husimi(psi, grid, fac)
        assert abs(f.integral() * N - 1.0) < 1e-3

    def test_momentum_eigenstate_flat_in_q(self):
        N = 101
        state = np.exp(2j * math.pi * 7 * np.arange(N) / N) / math.sqrt(N)
        f = husimi(state, TorusGrid(64, 64))
        assert np.max(f.values.max(axis=1) - f.values.min(axis=1)) < 1e-10

    def test_values_bounded(self):
        fac = CoherentStateFactory(101)
        rng = np.random.default_rng(2)
        psi = rng.standard_normal(101) + 1j * rng.standard_normal(101)
        psi /= np.linalg.norm(psi)
        f = husimi(psi, TorusGrid(64, 64), fac)
        assert np.all(f.values >= 0)
        assert np.all(f.values <= 1 + 1e-12)

    def test_unnormalized_rejected(self):
        with pytest.raises(ValueError):
            husimi(np.ones(11, dtype=complex), TorusGrid(8, 8))

    def test_grid_refinement_stability(self):
        N = 101
        fac = CoherentStateFactory(N)
        rng = np.random.default_rng(3)
        psi = rng.standard_normal(N) + 1j * rng.standard_normal(N)
        psi /= np.linalg.norm(psi)
        coarse = husimi(psi, TorusGrid(128, 128), fac).integral()
        fine = husimi(psi, TorusGrid(256, 256), fac).integral()
        assert abs(coarse - fine) < 1e-4


class TestHusimiSum:
    @pytest.mark.parametrize("N", [51, 101])
    def test_completeness(self, N):
        p = model.RotorParams(k=1.1, gamma=0.001, N=N)
        s = spectral.ordered_schur(model.build_pt_floquet(p).matrix)
        f = husimi_sum(s.V, TorusGrid(64, 64))
        assert np.max(np.abs(f.values - 1.0)) < 1e-6

    def test_two_member_linearity(self):
        N = 51
        grid = TorusGrid(32, 32)
        m1 = np.zeros(N, dtype=complex)
        m1[3] = 1.0
        m2 = np.zeros(N, dtype=complex)
        m2[7] = 1.0
        fac = CoherentStateFactory(N)
        total = husimi_sum(np.column_stack([m1, m2]), grid, fac)
        single = husimi(m1, grid, fac).values + husimi(m2, grid, fac).values
        assert np.max(np.abs(total.values - single)) < 1e-14

    def test_non_orthonormal_warns(self):
        N = 31
        v = np.zeros((N, 2), dtype=complex)
        v[0, 0] = 1.0
        v[0, 1] = 1.0 / math.sqrt(2)
        v[1, 1] = 1.0 / math.sqrt(2)
        with pytest.warns(RuntimeWarning, match="orthonormal"):
            f = husimi_sum(v, TorusGrid(8, 8))
        assert "warnings" in f.meta
