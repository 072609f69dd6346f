"""Quantum maps for kicked rotors with gain/loss, plus an exactly solvable
angular-momentum model used to cross-check the spectral machinery.

Two rotor variants are provided on an N-dimensional torus Hilbert space
(positions q_l = l/N, effective hbar = 1/(2*pi*N)):

* ``pt``:     momentum-proportional gain/loss, one-period operator
              U[l,l'] = (1/N) e^{-i N k cos(2 pi l / N) / (2 pi)}
                        sum_m e^{-i pi m^2 / N + gamma m + 2 pi i m (l-l')/N}
* ``escape``: uniform loss on a position strip (q_L, q_R),
              U[l,l'] = (1/N) e^{-i N k cos(2 pi l / N) / (2 pi)}
                        sum_m e^{-i pi m^2 / N + 2 pi i m (l-l')/N
                                 - gamma N chi(l/N) / (8 pi^2)}

with m = -N1 .. N1, N = 2 N1 + 1.  The m-sum depends on l - l' only, so both
operators factor into a position-diagonal term times a circulant; builders
evaluate the circulant either by FFT (default) or by the direct m-sum.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from . import gridio

__all__ = [
    "RotorParams",
    "SU2Params",
    "FloquetOperator",
    "build_pt_floquet",
    "build_escape_floquet",
    "build_su2_hamiltonian",
    "su2_schur_reference",
    "angular_momentum_ops",
    "save_operator",
    "load_operator",
]

# Beyond this, e^{gamma m} exceeds ~1e10 and the spectrum becomes numerically
# unreliable in double precision.
GAIN_EXPONENT_WARNING = 25.0


@dataclass(frozen=True)
class RotorParams:
    """Parameters of a kicked-rotor quantum map.

    ``variant`` is ``"pt"`` (momentum gain/loss) or ``"escape"`` (strip loss,
    requires ``q_loss=(qL, qR)`` with 0 <= qL < qR <= 1).  ``N`` must be odd.
    """

    k: float
    gamma: float
    N: int
    variant: str = "pt"
    q_loss: tuple[float, float] | None = None

    def __post_init__(self):
        if not (math.isfinite(self.k) and math.isfinite(self.gamma)):
            raise ValueError("k and gamma must be finite")
        if self.gamma < 0:
            raise ValueError("gamma must be >= 0")
        if int(self.N) != self.N or self.N < 3 or self.N % 2 == 0:
            raise ValueError(f"N must be an odd integer >= 3, got {self.N}")
        if self.variant not in ("pt", "escape"):
            raise ValueError(f"unknown variant {self.variant!r}")
        if self.variant == "escape":
            if self.q_loss is None:
                raise ValueError("escape variant requires q_loss=(qL, qR)")
            ql, qr = self.q_loss
            if not (0.0 <= ql < qr <= 1.0):
                raise ValueError(f"need 0 <= qL < qR <= 1, got {self.q_loss}")

    @property
    def n1(self) -> int:
        return (self.N - 1) // 2

    @property
    def hbar_eff(self) -> float:
        return 1.0 / (2.0 * math.pi * self.N)

    @property
    def planck_cell(self) -> float:
        return 1.0 / self.N


@dataclass(frozen=True)
class SU2Params:
    """(N+1)-dimensional representation of J_x + i gamma J_z with |gamma| > 1,
    where the spectrum is purely imaginary: i m lambda, lambda = sqrt(gamma^2-1).
    """

    dim: int
    gamma: float

    def __post_init__(self):
        if int(self.dim) != self.dim or self.dim < 2:
            raise ValueError("dim must be an integer >= 2")
        if not math.isfinite(self.gamma) or abs(self.gamma) <= 1.0:
            raise ValueError("need |gamma| > 1 for a purely imaginary spectrum")

    @property
    def lam(self) -> float:
        return math.sqrt(self.gamma**2 - 1.0)


@dataclass(frozen=True)
class FloquetOperator:
    """One-period evolution operator with its model parameters attached."""

    matrix: np.ndarray
    params: RotorParams

    def __post_init__(self):
        self.matrix.setflags(write=False)

    @property
    def N(self) -> int:
        return self.params.N

    @property
    def hbar_eff(self) -> float:
        return self.params.hbar_eff


def _momentum_indices(N):
    n1 = (N - 1) // 2
    return np.arange(-n1, n1 + 1)


def _kick_phase(params):
    l = np.arange(params.N)
    return np.exp(-1j * params.N * params.k / (2.0 * math.pi) * np.cos(2.0 * math.pi * l / params.N))

def _circulant_fft(diag_m, N):
    # c_j = (1/N) sum_m d_m e^{2 pi i m j / N}; ifft after folding m onto 0..N-1
    m = _momentum_indices(N)
    d_fft = np.zeros(N, dtype=np.complex128)
    d_fft[m % N] = diag_m
    c = np.fft.ifft(d_fft)
    idx = (np.arange(N)[:, None] - np.arange(N)[None, :]) % N
    return c[idx]


def _circulant_direct(diag_m, N):
    # honest O(N^3) evaluation of the m-sum through the DFT sandwich
    m = _momentum_indices(N)
    l = np.arange(N)
    w = np.exp(2j * math.pi * np.outer(l, m) / N)
    return (w * diag_m) @ w.conj().T / N


def _build(params, diag_m, position_factor, method):
    if method == "fft":
        t = _circulant_fft(diag_m, params.N)
    elif method == "direct":
        t = _circulant_direct(diag_m, params.N)
    else:
        raise ValueError(f"unknown method {method!r}")
    return FloquetOperator(position_factor[:, None] * t, params)


def build_pt_floquet(params: RotorParams, method: str = "fft") -> FloquetOperator:
    """Build the one-period operator of the rotor with momentum gain/loss.

    At ``gamma=0`` the result is unitary.  ``method`` selects the circulant
    evaluation: ``"fft"`` (default, O(N^2 log N)) or ``"direct"`` (O(N^3));
    both agree to ~1e-12.
    """
    if params.variant != "pt":
        raise ValueError("params.variant must be 'pt'")
    if params.gamma * params.n1 > GAIN_EXPONENT_WARNING:
        warnings.warn(
            f"gamma*N1 = {params.gamma * params.n1:.3g} > {GAIN_EXPONENT_WARNING:g}: "
            "momentum gain factors exceed ~1e10; the spectrum will be unreliable "
            "in double precision",
            RuntimeWarning,
            stacklevel=2,
        )
    m = _momentum_indices(params.N)
    diag_m = np.exp(-1j * math.pi * m.astype(float) ** 2 / params.N + params.gamma * m)
    return _build(params, diag_m, _kick_phase(params), method)


def build_escape_floquet(params: RotorParams, method: str = "fft") -> FloquetOperator:
    """Build the one-period operator of the rotor with loss on a position strip.

    Pure loss: every singular value is <= 1 (the strip factor is the full set
    of singular values).
    """
    if params.variant != "escape":
        raise ValueError("params.variant must be 'escape'")
    m = _momentum_indices(params.N)
    diag_m = np.exp(-1j * math.pi * m.astype(float) ** 2 / params.N)
    ql, qr = params.q_loss
    q = np.arange(params.N) / params.N
    chi = ((q > ql) & (q < qr)).astype(float)
    loss = np.exp(-params.gamma * params.N / (8.0 * math.pi**2) * chi)
    return _build(params, diag_m, _kick_phase(params) * loss, method)


def angular_momentum_ops(dim):
    """Return (Jx, Jy, Jz) in the Jz eigenbasis ordered by decreasing m."""
    j = (dim - 1) / 2.0
    m = j - np.arange(dim)
    jz = np.diag(m)
    # J+ |m> = sqrt(j(j+1) - m(m+1)) |m+1>; |m+1> sits one row above |m>
    up = np.sqrt(j * (j + 1) - m[1:] * (m[1:] + 1))
    jp = np.zeros((dim, dim))
    jp[np.arange(dim - 1), np.arange(1, dim)] = up
    jx = (jp + jp.T) / 2.0
    jy = (jp - jp.T) / 2j
    return jx, jy, jz


def build_su2_hamiltonian(params: SU2Params) -> np.ndarray:
    """K = Jx + i gamma Jz: a real-symmetric matrix plus i*gamma*(real diagonal)."""
    jx, _, jz = angular_momentum_ops(params.dim)
    return jx + 1j * params.gamma * jz


def su2_schur_reference(params: SU2Params) -> np.ndarray:
    """Analytic Schur basis of ``build_su2_hamiltonian``.

    Columns are exp(-i phi Jx)|m> with phi = arctan(1/lambda) (shifted by -pi
    for gamma < -1), ordered by decreasing m so that V^dag K V is upper
    triangular with diagonal i m lambda in decreasing imaginary part.
    """
    jx, _, _ = angular_momentum_ops(params.dim)
    phi = math.atan(1.0 / params.lam)
    if params.gamma < 0:
        phi -= math.pi
    return scipy.linalg.expm(-1j * phi * jx)


def save_operator(op: FloquetOperator, path):
    p = op.params
    meta = {
        "kind": "floquet_operator",
        "variant": p.variant,
        "k": gridio.format_float(p.k),
        "gamma": gridio.format_float(p.gamma),
        "N": p.N,
    }
    if p.q_loss is not None:
        meta["qL"] = gridio.format_float(p.q_loss[0])
        meta["qR"] = gridio.format_float(p.q_loss[1])
    gridio.save_grid(path, op.matrix, meta)


def load_operator(path) -> FloquetOperator:
    matrix, meta = gridio.load_grid(path)
    if meta.get("kind") != "floquet_operator":
        raise ValueError(f"{path}: not an operator file")
    q_loss = None
    if "qL" in meta:
        q_loss = (float(meta["qL"]), float(meta["qR"]))
    params = RotorParams(
        k=float(meta["k"]),
        gamma=float(meta["gamma"]),
        N=int(meta["N"]),
        variant=meta["variant"],
        q_loss=q_loss,
    )
    return FloquetOperator(matrix, params)
