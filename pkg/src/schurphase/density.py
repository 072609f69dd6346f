"""Semiclassical phase-space densities from norm landscapes.

A landscape is thresholded into a support set (a band of ln<w> values), the
indicator is smoothed by a periodic unit-mass Gaussian of width
sigma = sqrt(hbar_eff/2) matching the minimum quantum uncertainty, and the
threshold is solved so the smoothed density integrates to n Planck cells
(n * h with h = 1/N).  Thresholds enter through alpha = exp(2 gamma Delta),
so all comparisons happen in log space:

    gain:    ln<w> >  2 gamma Delta
    loss:    ln<w> < -2 gamma Delta      (the two PT thresholds are tied)
    stable:  the closed band in between
    top:     ln<w> >= -2 gamma Delta     (leading-n states of a lossy map)

Because the smoothing kernel has unit mass, the integral of the density
equals the support-set area exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .phasespace import Field, TorusGrid

__all__ = [
    "SupportSet",
    "DensityField",
    "ThresholdResult",
    "ThresholdUnreachableError",
    "support_set",
    "smooth",
    "gaussian_smooth",
    "solve_threshold",
]

MODES = ("gain", "stable", "loss", "top")


class ThresholdUnreachableError(RuntimeError):
    """Target Planck-cell count not attainable within the landscape's range."""

    def __init__(self, mode, target, bracket, areas):
        self.mode = mode
        self.target = target
        self.bracket = bracket
        self.areas = areas
        super().__init__(
            f"target integral {target:.6g} unreachable for mode {mode!r}: "
            f"Delta bracket {bracket} gives integrals {areas}"
        )


@dataclass(frozen=True)
class SupportSet:
    """Boolean mask of a landscape band.

    ``delta_minus``/``delta_plus`` record the log-space band actually used
    (in units of 2*gamma); for the 'top' mode only the lower edge is finite.
    """

    mask: Field
    mode: str
    delta: float
    delta_minus: float
    delta_plus: float

    @property
    def area(self) -> float:
        return float(self.mask.values.sum() * self.mask.grid.cell_area)


def support_set(landscape, mode: str, delta: float) -> SupportSet:
    """Threshold a norm landscape into a support set; ``delta >= 0``."""
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    if delta < 0:
        raise ValueError("delta must be >= 0")
    gamma = landscape.map.gamma
    logw = landscape.log_mean_w.values
    edge = 2.0 * gamma * delta
    if mode == "gain":
        mask = logw > edge
        lo, hi = delta, math.inf
    elif mode == "loss":
        mask = logw < -edge
        lo, hi = -math.inf, -delta
    elif mode == "stable":
        mask = (logw >= -edge) & (logw <= edge)
        lo, hi = -delta, delta
    else:  # top: every cell whose mean norm decayed by at most e^{-2 gamma delta}
        mask = logw >= -edge
        lo, hi = -delta, math.inf
    fld = Field(landscape.grid, mask, meta={"kind": "support_set", "mode": mode})
    return SupportSet(mask=fld, mode=mode, delta=float(delta), delta_minus=lo, delta_plus=hi)


def _periodic_gaussian_kernel(grid: TorusGrid, sigma: float):
    """Separable periodized Gaussian sampled on grid offsets, discrete mass 1."""

    def axis_kernel(n, d):
        offsets = np.fft.fftfreq(n, d=1.0 / (n * d))  # signed offsets i*d
        images = np.arange(-_n_images(sigma), _n_images(sigma) + 1)
        x = offsets[:, None] + images[None, :]
        return np.exp(-(x**2) / (2.0 * sigma**2)).sum(axis=1)

    kernel = np.outer(axis_kernel(grid.np, grid.dp), axis_kernel(grid.nq, grid.dq))
    return kernel / (kernel.sum() * grid.cell_area)


def _n_images(sigma):
    return max(1, math.ceil(4.0 + 6.0 * sigma))


def gaussian_smooth(values, grid: TorusGrid, sigma: float) -> np.ndarray:
    """Periodic convolution with the unit-mass Gaussian kernel."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    kernel = _periodic_gaussian_kernel(grid, sigma)
    conv = np.fft.irfft2(
        np.fft.rfft2(np.asarray(values, dtype=float)) * np.fft.rfft2(kernel),
        s=values.shape,
    )
    return conv * grid.cell_area


def smooth(support: SupportSet, sigma: float) -> Field:
    """Smoothed indicator of a support set; values in [0,1], mass preserved."""
    values = gaussian_smooth(support.mask.values.astype(float), support.mask.grid, sigma)
    np.clip(values, 0.0, 1.0, out=values)
    return Field(
        support.mask.grid,
        values,
        meta={"kind": "density", "mode": support.mode, "sigma": repr(sigma)},
    )


@dataclass(frozen=True)
class DensityField:
    """Planck-cell-conditioned density: integral = n * h within tolerance."""

    field: Field
    n: int
    achieved_integral: float
    delta: float
    mode: str


@dataclass(frozen=True)
class ThresholdResult:
    delta: float
    density: DensityField
    iterations: list
    target: float
    tolerance: float


def _mask_area(landscape, mode, delta):
    return support_set(landscape, mode, delta).area


def solve_threshold(
    landscape,
    mode: str,
    n: int,
    N: int,
    sigma: float | None = None,
    tol_cells: float = 0.25,
    max_iter: int = 60,
) -> ThresholdResult:
    """Find Delta so that the smoothed support integrates to n Planck cells.

    The smoothed integral equals the support area exactly (unit-mass kernel),
    and the area is monotone in Delta, so a bisection on the area suffices.
    The accepted Delta must land within ``tol_cells * h`` of ``n * h``;
    otherwise the target is unreachable and the bracketing interval is
    reported.  Among acceptable points the smallest Delta is preferred.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    if not (0 <= n <= N):
        raise ValueError(f"need 0 <= n <= N, got n={n}")
    if not np.all(np.isfinite(landscape.log_mean_w.values)):
        raise ValueError("landscape contains non-finite values")
    if sigma is None:
        sigma = math.sqrt(1.0 / (4.0 * math.pi * N))  # sqrt(hbar_eff / 2)
    target = n / N
    tol = tol_cells / N
    increasing = mode in ("stable", "top")
    gamma = landscape.map.gamma
    log_range = float(np.max(np.abs(landscape.log_mean_w.values)))
    delta_max = (log_range / (2.0 * gamma) if gamma > 0 else 0.0) + 1.0

    iterations = []
    best = None  # (|area - target|, delta, area); ties broken by smaller delta

    def probe(delta):
        nonlocal best
        area = _mask_area(landscape, mode, delta)
        candidate = (abs(area - target), delta, area)
        if best is None or candidate < best:
            best = candidate
        return area

    a_lo, a_hi = probe(0.0), probe(delta_max)
    iterations.append((0.0, delta_max, 0.0, a_lo))
    iterations.append((0.0, delta_max, delta_max, a_hi))
    lo, hi = 0.0, delta_max
    reachable = (a_lo - tol <= target <= a_hi + tol) if increasing else (a_hi - tol <= target <= a_lo + tol)
    if not reachable:
        raise ThresholdUnreachableError(mode, target, (lo, hi), (a_lo, a_hi))
    for _ in range(max_iter):
        if hi - lo <= 1e-12 * max(1.0, delta_max):
            break
        mid = 0.5 * (lo + hi)
        a_mid = probe(mid)
        iterations.append((lo, hi, mid, a_mid))
        if (a_mid < target) == increasing:
            lo = mid
        else:
            hi = mid
    if best[0] > tol:
        raise ThresholdUnreachableError(mode, target, (lo, hi), (_mask_area(landscape, mode, lo), _mask_area(landscape, mode, hi)))
    delta = best[1]
    sup = support_set(landscape, mode, delta)
    density_field = smooth(sup, sigma)
    achieved = float(density_field.values.sum() * landscape.grid.cell_area)
    density = DensityField(
        field=density_field,
        n=n,
        achieved_integral=achieved,
        delta=delta,
        mode=mode,
    )
    return ThresholdResult(delta=delta, density=density, iterations=iterations, target=target, tolerance=tol)
