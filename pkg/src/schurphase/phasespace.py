"""Torus coherent states and Husimi distributions.

Phase space is the unit torus (q, p) in [0,1) x [-1/2, 1/2) with Planck cell
h = 1/N.  Coherent states are periodized minimum-uncertainty Gaussians

    <q_l|z(q0,p0)>  ~  sum_s exp(-(q_l + s - q0)^2 / (2 hbar)
                                 + i p0 (q_l + s - q0) / hbar),

normalized to unit vectors; the envelope is positive real at p0 = 0, which
fixes the phase convention.  Husimi values |<z(q,p)|psi>|^2 lie in [0,1].

Evaluating a Husimi field on an nq x np grid reuses a bank of position
Gaussians per grid row: the p-dependence enters only through separable phase
factors, so each row costs one matrix product against the state set.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field as dataclass_field

import numpy as np

__all__ = [
    "TorusGrid",
    "Field",
    "CoherentStateFactory",
    "coherent_state",
    "husimi",
    "husimi_sum",
]


@dataclass(frozen=True)
class TorusGrid:
    """Rectangular grid of cell centers covering the torus exactly once."""

    nq: int
    np: int

    def __post_init__(self):
        if self.nq < 1 or self.np < 1:
            raise ValueError("grid resolution must be positive")

    @property
    def dq(self) -> float:
        return 1.0 / self.nq

    @property
    def dp(self) -> float:
        return 1.0 / self.np

    @property
    def cell_area(self) -> float:
        return self.dq * self.dp

    def q_centers(self):
        return (np.arange(self.nq) + 0.5) * self.dq

    def p_centers(self):
        return -0.5 + (np.arange(self.np) + 0.5) * self.dp


@dataclass
class Field:
    """Real values on a torus grid, indexed values[p_index, q_index]."""

    grid: TorusGrid
    values: np.ndarray
    meta: dict = dataclass_field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values)
        if self.values.shape != (self.grid.np, self.grid.nq):
            raise ValueError(
                f"values shape {self.values.shape} does not match grid "
                f"({self.grid.np}, {self.grid.nq})"
            )

    def integral(self) -> float:
        return float(self.values.sum() * self.grid.cell_area)


class CoherentStateFactory:
    """Produces torus coherent states of a given Hilbert-space dimension.

    ``s_max`` position images bound the periodization truncation error by
    roughly exp(-s_max^2/(2 hbar)), far below double precision for N >= 20.
    """

    def __init__(self, N: int, s_max: int = 3):
        if N < 2:
            raise ValueError("N must be >= 2")
        self.N = int(N)
        self.s_max = int(s_max)
        self.hbar_eff = 1.0 / (2.0 * math.pi * N)
        self._q = np.arange(N) / N
        self._images = np.arange(-self.s_max, self.s_max + 1)

    def state(self, q0: float, p0: float) -> np.ndarray:
        """Normalized coherent state centered at (q0, p0)."""
        if not (0.0 <= q0 < 1.0 and -0.5 <= p0 < 0.5):
            raise ValueError(f"({q0}, {p0}) is outside [0,1) x [-1/2, 1/2)")
        x = self._q[:, None] + self._images[None, :] - q0
        psi = np.exp(-(x**2) / (2.0 * self.hbar_eff) + 1j * p0 * x / self.hbar_eff).sum(axis=1)
        return psi / np.linalg.norm(psi)

    def _gaussian_bank(self, q_centers):
        # image-resolved envelopes, shape (n_images, N, nq); p-independent
        x = self._q[None, :, None] + self._images[:, None, None] - q_centers[None, None, :]
        return np.exp(-(x**2) / (2.0 * self.hbar_eff))


def coherent_state(factory: CoherentStateFactory, q0: float, p0: float) -> np.ndarray:
    return factory.state(q0, p0)


def _husimi_field(states, grid, factory):
    qs = grid.q_centers()
    ps = grid.p_centers()
    bank = factory._gaussian_bank(qs)
    images = factory._images
    # p-dependent phases are separable: e^{i p x / hbar} with x = q_l + s - q0
    # splits into a row phase e^{2 pi i p l}, an image phase, and a pure
    # per-column phase that drops out of |<z|psi>|
    l = np.arange(factory.N)
    states_h = np.ascontiguousarray(states.conj().T)
    out = np.empty((grid.np, grid.nq))
    for j, p in enumerate(ps):
        image_phase = np.exp(1j * p * images / factory.hbar_eff)
        m = np.tensordot(image_phase, bank, axes=(0, 0))  # (N, nq)
        row_phase = np.exp(2j * math.pi * p * l)
        z = row_phase[:, None] * m
        norms_sq = np.einsum("lk,lk->k", z.conj(), z).real
        c = states_h @ z  # (n_states, nq)
        out[j] = np.einsum("sk,sk->k", c.conj(), c).real / norms_sq
    return out


def husimi(state, grid: TorusGrid, factory: CoherentStateFactory | None = None) -> Field:
    """Husimi distribution |<z(q,p)|state>|^2 of a normalized state."""
    state = np.asarray(state, dtype=np.complex128)
    if abs(np.linalg.norm(state) - 1.0) > 1e-8:
        raise ValueError("state must be normalized to 1")
    factory = factory or CoherentStateFactory(len(state))
    values = _husimi_field(state[:, None], grid, factory)
    return Field(grid, values, meta={"kind": "husimi", "N": factory.N})


def husimi_sum(states, grid: TorusGrid, factory: CoherentStateFactory | None = None) -> Field:
    """Pointwise sum of the Husimi distributions of an orthonormal state set.

    A deviation from orthonormality beyond 1e-8 attaches (and emits) a
    warning; the field is still computed.  Summed over a complete basis the
    result is the uniform distribution 1.
    """
    states = np.asarray(states, dtype=np.complex128) if isinstance(states, np.ndarray) else np.column_stack(states)
    if states.ndim == 1:
        states = states[:, None]
    factory = factory or CoherentStateFactory(states.shape[0])
    meta = {"kind": "husimi_sum", "N": factory.N, "n_states": states.shape[1]}
    gram_dev = float(np.max(np.abs(states.conj().T @ states - np.eye(states.shape[1]))))
    if gram_dev > 1e-8:
        message = f"state set is not orthonormal (max Gram deviation {gram_dev:.3g})"
        warnings.warn(message, RuntimeWarning, stacklevel=2)
        meta["warnings"] = [message]
    values = _husimi_field(states, grid, factory)
    return Field(grid, values, meta=meta)
