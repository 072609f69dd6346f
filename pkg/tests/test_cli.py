"""End-to-end command tests on small systems (fast surrogates of the N=1001 runs)."""

import filecmp
import os

import numpy as np
import pytest

from schurphase import gridio
from schurphase.cli import main
from schurphase.config import ConfigError, load_config

SMALL_PT = """
[model]
variant = pt
k = 1.1
gamma = 0.001
N = 51

[grid]
nq = 32
np = 32

[landscape]
tf = 8
samples = 2
sigma_e = 0.02
seed = 3

[density]
mode = gain
n = auto

[scan]
tf_min = 3
tf_max = 6
tf_step = 1
"""


@pytest.fixture
def pt_config(tmp_path):
    path = tmp_path / "run.ini"
    path.write_text(SMALL_PT)
    return str(path)


class TestConfig:
    def test_defaults_load(self):
        cfg = load_config()
        assert cfg.model.N == 1001
        assert cfg.mode == "stable"
        assert cfg.sigma_e == pytest.approx((cfg.model.hbar_eff / 2) ** 0.5)

    def test_overrides_win(self, pt_config):
        cfg = load_config(pt_config, ["model.N=11", "grid.nq=8"])
        assert cfg.model.N == 11
        assert cfg.nq == 8

    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigError):
            load_config(None, ["model.bogus=1"])

    def test_bad_value_rejected(self):
        with pytest.raises(ConfigError):
            load_config(None, ["model.N=twelve"])

    def test_missing_file_rejected(self):
        with pytest.raises(ConfigError):
            load_config("/nonexistent/run.ini")

    def test_resolved_text_echoes_all_sections(self, pt_config):
        cfg = load_config(pt_config)
        text = cfg.resolved_text()
        for section in ("[model]", "[grid]", "[landscape]", "[density]", "[scan]", "[output]"):
            assert section in text


class TestCommands:
    def test_operator_writes_spectrum_and_manifest(self, pt_config, tmp_path):
        out = tmp_path / "out"
        assert main(["operator", "-c", pt_config, "-o", str(out)]) == 0
        assert (out / "operator.bin").exists()
        lines = (out / "spectrum.txt").read_text().splitlines()
        assert len(lines) == 52
        manifest = (out / "manifest.txt").read_text()
        assert "command=operator" in manifest
        assert "n_gain=" in manifest

    def test_operator_rerun_byte_identical(self, pt_config, tmp_path):
        out1, out2 = tmp_path / "a", tmp_path / "b"
        main(["operator", "-c", pt_config, "-o", str(out1)])
        main(["operator", "-c", pt_config, "-o", str(out2)])
        for name in ("operator.bin", "spectrum.txt", "manifest.txt"):
            assert filecmp.cmp(out1 / name, out2 / name, shallow=False), name

    def test_gamma_zero_all_stable(self, pt_config, tmp_path, capsys):
        out = tmp_path / "out"
        assert main(["operator", "-c", pt_config, "--set", "model.gamma=0", "-o", str(out)]) == 0
        assert "gain/stable/loss = 0/51/0" in capsys.readouterr().out

    def test_husimi_full_basis_uniform(self, pt_config, tmp_path):
        out = tmp_path / "out"
        code = main(
            ["husimi", "-c", pt_config, "--set", "model.gamma=0", "--mode", "top", "--n", "51", "-o", str(out)]
        )
        assert code == 0
        values, _ = gridio.load_grid(out / "husimi_top51.bin")
        assert np.max(np.abs(values.real - 1.0)) < 1e-6

    def test_husimi_gain_set(self, pt_config, tmp_path):
        out = tmp_path / "out"
        assert main(["husimi", "-c", pt_config, "--mode", "gain", "-o", str(out)]) == 0
        assert (out / "husimi_gain.csv").exists()

    def test_landscape_gamma_zero_all_ones(self, pt_config, tmp_path):
        out = tmp_path / "out"
        assert main(["landscape", "-c", pt_config, "--set", "model.gamma=0", "-o", str(out)]) == 0
        values, meta = gridio.load_grid(out / "landscape.bin")
        assert np.all(values.real == 1.0)
        assert meta["t_f"] == "8"

    def test_density_solves_and_logs(self, pt_config, tmp_path):
        out = tmp_path / "out"
        assert main(["density", "-c", pt_config, "-o", str(out)]) == 0
        assert (out / "density_gain.csv").exists()
        log = (out / "density_gain_solver.txt").read_text().splitlines()
        assert log[0] == "lo\thi\tdelta\tintegral"
        assert len(log) > 3
        manifest = (out / "manifest.txt").read_text()
        assert "delta=" in manifest

    def test_density_unreachable_exit_code(self, pt_config, tmp_path):
        out = tmp_path / "out"
        code = main(
            ["density", "-c", pt_config, "--set", "model.gamma=0", "--mode", "gain", "--n", "20", "-o", str(out)]
        )
        assert code == 3

    def test_density_top_requires_n(self, pt_config, tmp_path):
        code = main(["density", "-c", pt_config, "--mode", "top", "-o", str(tmp_path / "out")])
        assert code == 2

    def test_scan_csv(self, pt_config, tmp_path):
        out = tmp_path / "out"
        assert main(["scan", "-c", pt_config, "-o", str(out)]) == 0
        lines = (out / "scan.csv").read_text().splitlines()
        assert lines[0] == "t_f,delta,jsd,status"
        assert len(lines) == 5
        assert "argmin_t_f=" in (out / "manifest.txt").read_text()

    def test_poincare_pt_and_escape(self, pt_config, tmp_path):
        out = tmp_path / "out"
        assert main(["poincare", "-c", pt_config, "--seeds", "5", "--steps", "10", "-o", str(out)]) == 0
        lines = (out / "poincare.csv").read_text().splitlines()
        assert lines[0] == "q,p"
        assert len(lines) == 56
        out2 = tmp_path / "out2"
        code = main(
            [
                "poincare",
                "-c",
                pt_config,
                "--set",
                "model.variant=escape",
                "--set",
                "model.gamma=0.1",
                "--set",
                "model.k=10",
                "--seeds",
                "4",
                "--steps",
                "6",
                "-o",
                str(out2),
            ]
        )
        assert code == 0
        assert (out2 / "poincare.csv").read_text().splitlines()[0] == "q,p,in_loss"

    def test_invalid_model_exit_code(self, pt_config, tmp_path):
        code = main(["operator", "-c", pt_config, "--set", "model.N=10", "-o", str(tmp_path / "o")])
        assert code == 2


class TestSu2Verify:
    def test_su2_convergence_report(self, tmp_path, capsys):
        out = tmp_path / "out"
        code = main(["su2-verify", "--dim", "11", "--gamma", "1.5", "--times", "1,4,16", "-o", str(out)])
        assert code == 0
        lines = (out / "su2_verify.csv").read_text().splitlines()
        assert lines[0] == "t,min_overlap,max_subspace_angle,method"
        last = lines[-1].split(",")
        assert 1.0 - float(last[1]) < 1e-8
        assert "final deviation" in capsys.readouterr().out

    def test_spin_half_closed_form(self, tmp_path):
        out = tmp_path / "out"
        code = main(["su2-verify", "--dim", "2", "--gamma", "2.0", "--times", "8", "-o", str(out)])
        assert code == 0
        last = (out / "su2_verify.csv").read_text().splitlines()[-1].split(",")
        assert 1.0 - float(last[1]) < 1e-12

    def test_generic_matrix_flag(self, tmp_path):
        # seed 1 has min modulus gap ~0.05, converged well below t=512
        out = tmp_path / "out"
        code = main(["su2-verify", "--generic", "8", "--seed", "1", "--times", "64,512", "-o", str(out)])
        assert code == 0
        last = (out / "su2_verify.csv").read_text().splitlines()[-1].split(",")
        assert float(last[2]) < 1e-4

    def test_gamma_in_unit_interval_rejected(self, tmp_path):
        assert main(["su2-verify", "--dim", "4", "--gamma", "0.5", "-o", str(tmp_path / "o")]) == 2
