"""Quantum-classical agreement metrics and the final-time scan.

The Jensen-Shannon divergence is evaluated base 2 on probability-normalized
fields over a common grid, so it lies in [0,1] with jsd(P,P) = 0 and
jsd = 1 for disjoint supports.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import classical, density, gridio

__all__ = ["ScanRow", "ScanResult", "jsd", "coarsen", "tf_scan"]


def _normalized(P):
    v = np.asarray(getattr(P, "values", P), dtype=float)
    if np.any(v < 0):
        raise ValueError("fields must be non-negative")
    total = v.sum()
    if not total > 0:
        raise ValueError("field has zero total mass")
    return v / total


def jsd(P, Q) -> float:
    """Base-2 Jensen-Shannon divergence of two non-negative fields.

    Both inputs are normalized to probability distributions over cells.
    Identical inputs give exactly 0; disjoint supports give exactly 1 (an
    exact special case, returned without summation noise).
    """
    p = _normalized(P)
    q = _normalized(Q)
    if p.shape != q.shape:
        raise ValueError("fields must share one grid")
    if not np.any((p > 0) & (q > 0)):
        return 1.0
    m = 0.5 * (p + q)
    with np.errstate(divide="ignore", invalid="ignore"):
        kl_p = np.where(p > 0, p * np.log2(np.where(p > 0, p / m, 1.0)), 0.0)
        kl_q = np.where(q > 0, q * np.log2(np.where(q > 0, q / m, 1.0)), 0.0)
    value = 0.5 * (kl_p.sum() + kl_q.sum())
    return min(1.0, max(0.0, float(value)))


def coarsen(values, factor: int = 2) -> np.ndarray:
    """Merge factor x factor blocks of cells (probability-mass preserving)."""
    v = np.asarray(values, dtype=float)
    if v.shape[0] % factor or v.shape[1] % factor:
        raise ValueError("grid dimensions must be divisible by the factor")
    return v.reshape(v.shape[0] // factor, factor, v.shape[1] // factor, factor).sum(axis=(1, 3))


@dataclass(frozen=True)
class ScanRow:
    t_f: int
    delta: float
    jsd: float
    status: str


@dataclass(frozen=True)
class ScanResult:
    """Rows of (t_f, Delta, jsd) with the argmin and a plateau flag.

    ``plateau`` is set when at least five consecutive successful rows stay
    within 10% of the minimum divergence.
    """

    rows: tuple
    argmin_t_f: int | None
    plateau: bool

    def to_csv(self, path):
        with open(path, "w", encoding="ascii") as fh:
            fh.write("t_f,delta,jsd,status\n")
            for row in self.rows:
                fh.write(
                    f"{row.t_f},{gridio.format_float(row.delta)},"
                    f"{gridio.format_float(row.jsd)},{row.status}\n"
                )


def tf_scan(
    kmap: classical.KickedMap,
    grid,
    ensemble: classical.EnsembleSpec,
    quantum_field,
    mode: str,
    n: int,
    N: int,
    t_f_values,
    sigma: float | None = None,
) -> ScanResult:
    """Scan the final time of the classical side against a fixed quantum field.

    The quantum Husimi sum does not depend on t_f and is passed in once; the
    classical landscapes share one trajectory set across the scan.  Rows where
    the threshold solve fails are recorded as failed and the scan continues.
    """
    t_fs = sorted(int(t) for t in t_f_values)
    landscapes = classical.norm_landscape_series(kmap, grid, t_fs, ensemble)
    rows = []
    for landscape in landscapes:
        try:
            solve = density.solve_threshold(landscape, mode, n, N, sigma=sigma)
            value = jsd(quantum_field, solve.density.field)
            rows.append(ScanRow(t_f=landscape.t_f, delta=solve.delta, jsd=value, status="ok"))
        except density.ThresholdUnreachableError as exc:
            rows.append(ScanRow(t_f=landscape.t_f, delta=math.nan, jsd=math.nan, status=f"failed: {exc}"))
    ok = [row for row in rows if row.status == "ok"]
    argmin = min(ok, key=lambda row: row.jsd).t_f if ok else None
    plateau = False
    if ok:
        jsd_min = min(row.jsd for row in ok)
        run = 0
        for row in rows:
            run = run + 1 if row.status == "ok" and row.jsd <= 1.1 * jsd_min else 0
            if run >= 5:
                plateau = True
                break
    return ScanResult(rows=tuple(rows), argmin_t_f=argmin, plateau=plateau)
