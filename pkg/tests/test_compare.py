import math

import numpy as np
import pytest

from schurphase import classical as cl, compare as cp
from schurphase.phasespace import Field, TorusGrid


class TestJsd:
    def test_identity_is_exact_zero(self):
        rng = np.random.default_rng(0)
        grid = TorusGrid(16, 16)
        f = Field(grid, rng.random((16, 16)))
        assert cp.jsd(f, f) == 0.0

    def test_disjoint_is_exact_one(self):
        grid = TorusGrid(16, 16)
        a = np.zeros((16, 16))
        a[:8] = 1.3
        b = np.zeros((16, 16))
        b[8:] = 0.2
        assert cp.jsd(Field(grid, a), Field(grid, b)) == 1.0

    def test_hand_computed_two_cell(self):
        p = np.array([[0.5, 0.5]])
        q = np.array([[0.9, 0.1]])
        m = (p + q) / 2
        want = 0.5 * np.sum(p * np.log2(p / m)) + 0.5 * np.sum(q * np.log2(q / m))
        grid = TorusGrid(2, 1)
        assert abs(cp.jsd(Field(grid, p), Field(grid, q)) - want) < 1e-12

    def test_symmetry(self):
        rng = np.random.default_rng(1)
        grid = TorusGrid(32, 32)
        for _ in range(5):
            a = Field(grid, rng.random((32, 32)))
            b = Field(grid, rng.random((32, 32)))
            assert abs(cp.jsd(a, b) - cp.jsd(b, a)) < 1e-14

    def test_bounds_on_random_fields(self):
        rng = np.random.default_rng(2)
        grid = TorusGrid(16, 16)
        for _ in range(20):
            a = Field(grid, rng.random((16, 16)) * rng.uniform(0.1, 10))
            b = Field(grid, rng.random((16, 16)) * rng.uniform(0.1, 10))
            assert 0.0 <= cp.jsd(a, b) <= 1.0

    def test_coarsening_never_increases(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            a = rng.random((32, 32))
            b = rng.random((32, 32))
            fine = cp.jsd(a, b)
            coarse = cp.jsd(cp.coarsen(a), cp.coarsen(b))
            assert coarse <= fine + 1e-14

    def test_normalization_invariance(self):
        rng = np.random.default_rng(4)
        a = rng.random((8, 8))
        b = rng.random((8, 8))
        assert abs(cp.jsd(a, b) - cp.jsd(3.7 * a, 0.2 * b)) < 1e-13

    def test_zero_mass_rejected(self):
        with pytest.raises(ValueError):
            cp.jsd(np.zeros((4, 4)), np.ones((4, 4)))

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            cp.jsd(-np.ones((4, 4)), np.ones((4, 4)))


class TestScan:
    def test_degenerate_unitary_scan_all_failed(self):
        grid = TorusGrid(32, 32)
        kmap = cl.KickedMap("pt", 1.1, 0.0)
        ens = cl.EnsembleSpec(2, 0.01, 1)
        quantum = Field(grid, np.ones((32, 32)))
        res = cp.tf_scan(kmap, grid, ens, quantum, "gain", 100, 301, range(2, 6))
        assert all(row.status.startswith("failed") for row in res.rows)
        assert res.argmin_t_f is None
        assert not res.plateau

    def test_rows_sorted_and_complete(self):
        grid = TorusGrid(32, 32)
        kmap = cl.KickedMap("pt", 1.1, 0.001)
        ens = cl.EnsembleSpec(2, 0.01, 1)
        rng = np.random.default_rng(5)
        quantum = Field(grid, rng.random((32, 32)) + 0.5)
        res = cp.tf_scan(kmap, grid, ens, quantum, "gain", 90, 301, [8, 4, 6])
        assert [row.t_f for row in res.rows] == [4, 6, 8]
        assert all(row.status == "ok" for row in res.rows)
        assert res.argmin_t_f in (4, 6, 8)

    def test_csv_export(self, tmp_path):
        grid = TorusGrid(16, 16)
        kmap = cl.KickedMap("pt", 1.1, 0.001)
        ens = cl.EnsembleSpec(2, 0.01, 1)
        rng = np.random.default_rng(6)
        quantum = Field(grid, rng.random((16, 16)) + 0.5)
        res = cp.tf_scan(kmap, grid, ens, quantum, "stable", 150, 301, [3, 4])
        path = tmp_path / "scan.csv"
        res.to_csv(path)
        lines = path.read_text().splitlines()
        assert lines[0] == "t_f,delta,jsd,status"
        assert len(lines) == 3
