import numpy as np
import pytest

from schurphase import gridio
from schurphase.phasespace import Field, TorusGrid


class TestBinaryGrid:
    def test_complex_roundtrip_bit_exact(self, tmp_path):
        rng = np.random.default_rng(0)
        a = rng.standard_normal((7, 5)) + 1j * rng.standard_normal((7, 5))
        path = tmp_path / "grid.bin"
        gridio.save_grid(path, a, {"kind": "test", "k": gridio.format_float(1.1)})
        back, meta = gridio.load_grid(path)
        assert np.array_equal(back, a)
        assert meta["kind"] == "test"
        assert float(meta["k"]) == 1.1

    def test_real_roundtrip(self, tmp_path):
        a = np.arange(12.0).reshape(3, 4)
        path = tmp_path / "grid.bin"
        gridio.save_grid(path, a)
        back, _ = gridio.load_grid(path)
        assert np.array_equal(back.real, a)
        assert np.all(back.imag == 0)

    def test_bad_magic_rejected(self, tmp_path):
        path = tmp_path / "nope.bin"
        path.write_bytes(b"JUNK\n")
        with pytest.raises(ValueError):
            gridio.load_grid(path)

    def test_truncated_payload_rejected(self, tmp_path):
        path = tmp_path / "grid.bin"
        gridio.save_grid(path, np.ones((4, 4)))
        data = path.read_bytes()
        path.write_bytes(data[:-16])
        with pytest.raises(ValueError):
            gridio.load_grid(path)

    def test_format_float_roundtrip(self):
        for x in (1.1, 1 / 3, 0.048, 2**-52, 1e300):
            assert float(gridio.format_float(x)) == x


class TestFieldFormats:
    def test_csv_layout(self, tmp_path):
        grid = TorusGrid(3, 2)
        field = Field(grid, np.arange(6.0).reshape(2, 3), meta={"kind": "demo"})
        path = tmp_path / "field.csv"
        gridio.field_to_csv(field, path)
        lines = path.read_text().splitlines()
        assert lines[0] == "# kind=demo"
        assert lines[1] == "q,p,value"
        assert len(lines) == 8
        q, p, v = lines[2].split(",")
        assert float(q) == grid.q_centers()[0]
        assert float(p) == grid.p_centers()[0]
        assert float(v) == 0.0

    def test_grid_file_roundtrip(self, tmp_path):
        grid = TorusGrid(5, 4)
        rng = np.random.default_rng(1)
        field = Field(grid, rng.random((4, 5)))
        path = tmp_path / "field.bin"
        gridio.field_to_grid_file(field, path)
        values, meta = gridio.load_grid(path)
        assert np.array_equal(values.real, field.values)
        assert int(meta["nq"]) == 5 and int(meta["np"]) == 4

    def test_raster_written(self, tmp_path):
        grid = TorusGrid(8, 8)
        field = Field(grid, np.random.default_rng(2).random((8, 8)))
        path = tmp_path / "field.png"
        gridio.field_to_raster(field, path)
        assert path.stat().st_size > 0
