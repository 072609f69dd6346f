"""Command-line pipelines.

Commands: operator, husimi, landscape, density, scan, poincare, su2-verify.
Every command writes its artifacts plus a manifest echoing the resolved
configuration, so a rerun with the same config and seed is byte-identical.
Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import math
import os
import sys

import numpy as np
import scipy.linalg

from . import __version__, classical, compare, density, gridio, model, phasespace, spectral
from .config import ConfigError, load_config
from .density import ThresholdUnreachableError
from .spectral import OverflowBreakdownError


class NumericalError(RuntimeError):
    """Numerical failure surfaced to the shell (exit code 3)."""


def _outdir(args, cfg):
    path = args.output or cfg.directory
    os.makedirs(path, exist_ok=True)
    return path


def _write_manifest(outdir, command, cfg, files, summary):
    lines = [
        f"tool=schurphase {__version__}",
        f"command={command}",
        "",
        cfg.resolved_text(),
        "[artifacts]",
    ]
    lines.extend(sorted(files))
    lines.append("")
    lines.append("[summary]")
    lines.extend(f"{key}={val}" for key, val in summary.items())
    with open(os.path.join(outdir, "manifest.txt"), "w", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")


def _save_field(field, outdir, stem, formats, meta=None):
    files = []
    if "csv" in formats:
        path = os.path.join(outdir, stem + ".csv")
        gridio.field_to_csv(field, path, meta=meta)
        files.append(stem + ".csv")
    if "bin" in formats:
        path = os.path.join(outdir, stem + ".bin")
        gridio.field_to_grid_file(field, path, meta=meta)
        files.append(stem + ".bin")
    if "png" in formats:
        path = os.path.join(outdir, stem + ".png")
        gridio.field_to_raster(field, path)
        files.append(stem + ".png")
    return files


def _build_operator(cfg, outdir=None):
    """Load a previously saved operator when present, else build it."""
    if outdir is not None:
        path = os.path.join(outdir, "operator.bin")
        if os.path.exists(path):
            op = model.load_operator(path)
            if op.params == cfg.model:
                return op
    if cfg.model.variant == "pt":
        return model.build_pt_floquet(cfg.model)
    return model.build_escape_floquet(cfg.model)


def _spectral_sets(cfg, op):
    schur = spectral.ordered_schur(op.matrix)
    qset = spectral.quasienergies(op, eigenvalues=schur.eigenvalues)
    return schur, qset


def _set_indices(cfg, schur, qset, mode, n):
    if mode == "top":
        if n is None:
            raise ConfigError("density.n must be an integer for mode 'top'")
        gain, stable, loss, top = spectral.schur_fraction_sets(qset, n)
        return top
    gain, stable, loss, _ = spectral.schur_fraction_sets(qset)
    return {"gain": gain, "stable": stable, "loss": loss}[mode]


def _target_count(cfg, qset, mode):
    if cfg.n is not None:
        return cfg.n
    if mode == "top":
        raise ConfigError("density.n must be an integer for mode 'top'")
    n_gain, n_stable, n_loss = qset.counts
    return {"gain": n_gain, "stable": n_stable, "loss": n_loss}[mode]


def cmd_operator(args, cfg):
    outdir = _outdir(args, cfg)
    op = _build_operator(cfg)
    files = []
    if "bin" in cfg.formats:
        model.save_operator(op, os.path.join(outdir, "operator.bin"))
        files.append("operator.bin")
    schur, qset = _spectral_sets(cfg, op)
    spectral.export_spectrum_table(qset, os.path.join(outdir, "spectrum.txt"))
    files.append("spectrum.txt")
    n_gain, n_stable, n_loss = qset.counts
    f_gain, f_stable, f_loss = qset.fractions
    summary = {
        "n_gain": n_gain,
        "n_stable": n_stable,
        "n_loss": n_loss,
        "f_gain": gridio.format_float(f_gain),
        "f_stable": gridio.format_float(f_stable),
        "f_loss": gridio.format_float(f_loss),
        "tol_mu": gridio.format_float(qset.tol_mu),
    }
    _write_manifest(outdir, "operator", cfg, files, summary)
    print(f"operator N={cfg.model.N}: gain/stable/loss = {n_gain}/{n_stable}/{n_loss}")
    return 0


def cmd_husimi(args, cfg):
    outdir = _outdir(args, cfg)
    op = _build_operator(cfg, outdir)
    schur, qset = _spectral_sets(cfg, op)
    mode = args.mode or cfg.mode
    n = args.n if args.n is not None else cfg.n
    idx = _set_indices(cfg, schur, qset, mode, n)
    grid = phasespace.TorusGrid(cfg.nq, cfg.np)
    field = phasespace.husimi_sum(schur.V[:, idx], grid)
    stem = f"husimi_{mode}" if mode != "top" else f"husimi_top{len(idx)}"
    files = _save_field(field, outdir, stem, cfg.formats, meta={"mode": mode, "n_states": len(idx)})
    _write_manifest(outdir, "husimi", cfg, files, {"mode": mode, "n_states": len(idx)})
    print(f"husimi {mode}: {len(idx)} states on {cfg.nq}x{cfg.np}")
    return 0


def _landscape(cfg):
    kmap = classical.KickedMap.from_rotor(cfg.model)
    grid = phasespace.TorusGrid(cfg.nq, cfg.np)
    ensemble = classical.EnsembleSpec(cfg.samples, cfg.sigma_e, cfg.seed)
    return classical.norm_landscape(kmap, grid, cfg.t_f, ensemble)


def cmd_landscape(args, cfg):
    outdir = _outdir(args, cfg)
    landscape = _landscape(cfg)
    files = _save_field(landscape.mean_w, outdir, "landscape", cfg.formats, meta=landscape.metadata())
    _write_manifest(outdir, "landscape", cfg, files, {"t_f": cfg.t_f})
    print(f"landscape t_f={cfg.t_f} on {cfg.nq}x{cfg.np}")
    return 0


def cmd_density(args, cfg):
    outdir = _outdir(args, cfg)
    mode = args.mode or cfg.mode
    if mode == "top" or cfg.n is not None:
        n = cfg.n if args.n is None else args.n
        if n is None:
            raise ConfigError("density.n must be an integer for mode 'top'")
    else:
        op = _build_operator(cfg, outdir)
        _, qset = _spectral_sets(cfg, op)
        n = _target_count(cfg, qset, mode)
    if args.n is not None:
        n = args.n
    landscape = _landscape(cfg)
    try:
        result = density.solve_threshold(landscape, mode, n, cfg.model.N)
    except ThresholdUnreachableError as exc:
        raise NumericalError(str(exc)) from exc
    files = _save_field(
        result.density.field,
        outdir,
        f"density_{mode}",
        cfg.formats,
        meta={"mode": mode, "n": n, "delta": gridio.format_float(result.delta)},
    )
    log_path = os.path.join(outdir, f"density_{mode}_solver.txt")
    with open(log_path, "w", encoding="ascii") as fh:
        fh.write("lo\thi\tdelta\tintegral\n")
        for lo, hi, mid, area in result.iterations:
            fh.write(
                f"{gridio.format_float(lo)}\t{gridio.format_float(hi)}\t"
                f"{gridio.format_float(mid)}\t{gridio.format_float(area)}\n"
            )
    files.append(os.path.basename(log_path))
    summary = {
        "mode": mode,
        "n": n,
        "delta": gridio.format_float(result.delta),
        "achieved_integral": gridio.format_float(result.density.achieved_integral),
        "target_integral": gridio.format_float(result.target),
    }
    _write_manifest(outdir, "density", cfg, files, summary)
    print(f"density {mode}: n={n} Delta={result.delta:.6g}")
    return 0


def cmd_scan(args, cfg):
    outdir = _outdir(args, cfg)
    mode = args.mode or cfg.mode
    op = _build_operator(cfg, outdir)
    schur, qset = _spectral_sets(cfg, op)
    n = cfg.n if cfg.n is not None else _target_count(cfg, qset, mode)
    idx = _set_indices(cfg, schur, qset, mode, n)
    grid = phasespace.TorusGrid(cfg.nq, cfg.np)
    qfield = phasespace.husimi_sum(schur.V[:, idx], grid)
    kmap = classical.KickedMap.from_rotor(cfg.model)
    ensemble = classical.EnsembleSpec(cfg.samples, cfg.sigma_e, cfg.seed)
    t_fs = range(cfg.tf_min, cfg.tf_max + 1, cfg.tf_step)
    result = compare.tf_scan(kmap, grid, ensemble, qfield, mode, n, cfg.model.N, t_fs)
    result.to_csv(os.path.join(outdir, "scan.csv"))
    summary = {
        "mode": mode,
        "n": n,
        "argmin_t_f": result.argmin_t_f,
        "plateau": result.plateau,
    }
    _write_manifest(outdir, "scan", cfg, ["scan.csv"], summary)
    print(f"scan {mode}: argmin t_f = {result.argmin_t_f}, plateau = {result.plateau}")
    return 0


def cmd_poincare(args, cfg):
    outdir = _outdir(args, cfg)
    kmap = classical.KickedMap.from_rotor(cfg.model)
    rng = np.random.Generator(np.random.Philox(key=args.seed))
    seeds = np.column_stack([rng.uniform(0, 1, args.seeds), rng.uniform(-0.5, 0.5, args.seeds)])
    points = classical.poincare_section(kmap, seeds, args.steps)
    path = os.path.join(outdir, "poincare.csv")
    header = "q,p,in_loss" if points.shape[1] == 3 else "q,p"
    with open(path, "w", encoding="ascii") as fh:
        fh.write(header + "\n")
        for row in points:
            fh.write(",".join(gridio.format_float(x) for x in row) + "\n")
    _write_manifest(outdir, "poincare", cfg, ["poincare.csv"], {"seeds": args.seeds, "steps": args.steps})
    print(f"poincare: {points.shape[0]} points")
    return 0


def cmd_su2_verify(args, cfg):
    outdir = args.output or "out"
    os.makedirs(outdir, exist_ok=True)
    times = [int(t) for t in args.times.split(",")]
    if args.generic:
        rng = np.random.Generator(np.random.Philox(key=args.seed))
        size = args.generic
        u = (rng.standard_normal((size, size)) + 1j * rng.standard_normal((size, size))) / math.sqrt(size)
    else:
        try:
            params = model.SU2Params(dim=args.dim, gamma=args.gamma)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        u = scipy.linalg.expm(-1j * build_su2(params))
    schur = spectral.ordered_schur(u)
    path = os.path.join(outdir, "su2_verify.csv")
    rows = []
    for t in times:
        try:
            res = spectral.norm_operator_eigvecs(u, t, schur=schur)
        except OverflowBreakdownError as exc:
            raise NumericalError(str(exc)) from exc
        angles = spectral.subspace_angles(schur.V, res.vectors)
        rows.append((t, float(res.overlaps.min()), float(angles.max()), res.method))
    with open(path, "w", encoding="ascii") as fh:
        fh.write("t,min_overlap,max_subspace_angle,method\n")
        for t, ov, ang, meth in rows:
            fh.write(f"{t},{gridio.format_float(ov)},{gridio.format_float(ang)},{meth}\n")
    final = rows[-1]
    print("t   min_overlap        max_angle")
    for t, ov, ang, _ in rows:
        print(f"{t:<4d}{ov:<19.12g}{ang:.3e}")
    print(f"final deviation 1-min_overlap = {1.0 - final[1]:.3e}")
    return 0


def build_su2(params):
    return model.build_su2_hamiltonian(params)


def _add_common(sub):
    sub.add_argument("-c", "--config", default=None, help="config file (INI key=value)")
    sub.add_argument("--set", dest="overrides", action="append", default=[], metavar="SEC.KEY=VAL")
    sub.add_argument("-o", "--output", default=None, help="output directory override")


def build_parser():
    parser = argparse.ArgumentParser(prog="schurphase", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    subs = parser.add_subparsers(dest="command", required=True)

    for name, fn in [
        ("operator", cmd_operator),
        ("landscape", cmd_landscape),
    ]:
        sub = subs.add_parser(name)
        _add_common(sub)
        sub.set_defaults(func=fn)

    for name, fn in [("husimi", cmd_husimi), ("density", cmd_density), ("scan", cmd_scan)]:
        sub = subs.add_parser(name)
        _add_common(sub)
        sub.add_argument("--mode", choices=("gain", "stable", "loss", "top"), default=None)
        sub.add_argument("--n", type=int, default=None, help="state count (top mode or override)")
        sub.set_defaults(func=fn)

    sub = subs.add_parser("poincare")
    _add_common(sub)
    sub.add_argument("--seeds", type=int, default=200)
    sub.add_argument("--steps", type=int, default=500)
    sub.add_argument("--seed", type=int, default=0)
    sub.set_defaults(func=cmd_poincare)

    sub = subs.add_parser("su2-verify")
    sub.add_argument("--dim", type=int, default=11)
    sub.add_argument("--gamma", type=float, default=1.5)
    sub.add_argument("--times", default="1,2,4,8,16,32,64")
    sub.add_argument("--generic", type=int, default=None, metavar="SIZE")
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("-o", "--output", default=None)
    sub.set_defaults(func=cmd_su2_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "su2-verify":
            return args.func(args, None)
        cfg = load_config(args.config, args.overrides)
        return args.func(args, cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (NumericalError, OverflowBreakdownError, ThresholdUnreachableError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
