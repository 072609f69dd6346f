"""Spectral analysis of non-normal evolution operators.

Provides the decay-ordered complex Schur decomposition, biorthogonal
eigenpairs, quasienergy classification into gain/stable/loss states, and the
eigenvectors of the Hermitian norm operator W(t) = U^t (U^t)^dag, which
approach the ordered Schur basis for large t.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from . import gridio

__all__ = [
    "OrderedSchur",
    "EigenPairs",
    "QuasiEnergySet",
    "NormOperatorResult",
    "OverflowBreakdownError",
    "eigendecompose_biorthogonal",
    "expand_in_eigenbasis",
    "ordered_schur",
    "quasienergies",
    "norm_operator_eigvecs",
    "schur_fraction_sets",
    "subspace_angles",
    "export_spectrum_table",
]


class OverflowBreakdownError(RuntimeError):
    """Raised when overflow avoidance fails during norm-operator iteration."""

    def __init__(self, step, message=None):
        self.step = step
        super().__init__(message or f"non-finite values at multiplication step {step}")


def _as_matrix(op):
    m = getattr(op, "matrix", op)
    m = np.asarray(m, dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("expected a square matrix")
    return m


@dataclass(frozen=True)
class OrderedSchur:
    """U = V R V^dag with unitary V and upper-triangular R.

    The diagonal of R is sorted by non-increasing modulus (non-increasing
    growth rate); ``order[i]`` is the position of eigenvalue i of the sorted
    diagonal in the unsorted decomposition.
    """

    V: np.ndarray
    R: np.ndarray
    order: np.ndarray

    @property
    def eigenvalues(self) -> np.ndarray:
        return np.diag(self.R)

    def residuals(self, U) -> tuple[float, float]:
        """(relative Schur residual, max deviation of V from unitarity)."""
        U = _as_matrix(U)
        res = np.linalg.norm(U @ self.V - self.V @ self.R) / np.linalg.norm(U)
        unit = np.max(np.abs(self.V.conj().T @ self.V - np.eye(len(self.V))))
        return res, unit


@dataclass(frozen=True)
class EigenPairs:
    """Right/left eigenvectors scaled to <chi_n|phi_k> = delta_nk.

    ``left`` holds the left eigenvectors |chi_n> as columns, so the
    biorthogonality reads left^dag @ right = identity.  ``near_exceptional``
    is set when the right-eigenvector matrix is ill conditioned.
    """

    values: np.ndarray
    right: np.ndarray
    left: np.ndarray
    condition: float
    near_exceptional: bool


@dataclass(frozen=True)
class QuasiEnergySet:
    """Complex quasienergies eps_n = Re(eps_n) + i mu_n of a quantum map.

    mu_n = hbar_eff * ln|lambda_n| is the per-period growth/decay rate;
    ``labels`` classifies each state as gain/stable/loss with threshold
    ``tol_mu``.  Index order follows the eigenvalue order passed in (use the
    ordered Schur diagonal to keep indices aligned with Schur vectors).
    """

    epsilon: np.ndarray
    mu: np.ndarray
    labels: np.ndarray
    tol_mu: float
    hbar_eff: float

    @property
    def counts(self) -> tuple[int, int, int]:
        n_gain = int(np.sum(self.labels == "gain"))
        n_stable = int(np.sum(self.labels == "stable"))
        return n_gain, n_stable, len(self.labels) - n_gain - n_stable

    @property
    def fractions(self) -> tuple[float, float, float]:
        """(f_gain, f_stable, f_loss); the three values sum to 1.0 exactly."""
        n_gain, n_stable, _ = self.counts
        n = len(self.labels)
        f_gain, f_stable = n_gain / n, n_stable / n
        return f_gain, f_stable, 1.0 - f_gain - f_stable


def eigendecompose_biorthogonal(M, cond_threshold: float = 1e12) -> EigenPairs:
    """Eigenpairs of a diagonalizable matrix with biorthonormal left vectors.

    Left eigenvectors are obtained from the inverse of the right-eigenvector
    matrix, so <chi_n|phi_k> = delta_nk holds to working precision.  A
    condition number of the eigenvector matrix above ``cond_threshold`` flags
    the result as near-exceptional (returned, not suppressed).
    """
    M = _as_matrix(M)
    values, right = np.linalg.eig(M)
    sv = np.linalg.svd(right, compute_uv=False)
    condition = float(sv[0] / sv[-1]) if sv[-1] > 0 else math.inf
    left = np.linalg.inv(right).conj().T
    return EigenPairs(values, right, left, condition, condition > cond_threshold)


def expand_in_eigenbasis(pairs: EigenPairs, psi) -> np.ndarray:
    """Coefficients psi_n = <chi_n|psi> of a state in the eigenbasis."""
    psi = np.asarray(psi, dtype=np.complex128)
    if psi.shape != (pairs.right.shape[0],):
        raise ValueError("state dimension does not match the eigenbasis")
    if pairs.near_exceptional:
        warnings.warn(
            f"eigenvector matrix condition {pairs.condition:.3g}: "
            "expansion coefficients may be inaccurate (near-exceptional)",
            RuntimeWarning,
            stacklevel=2,
        )
    return pairs.left.conj().T @ psi


def _schur_sort_keys(diag, hbar_eff=1.0):
    moduli = np.abs(diag)
    re_over_h = -np.angle(diag)
    re_over_h[re_over_h <= -math.pi] += 2.0 * math.pi
    return moduli, re_over_h * hbar_eff


def _swap_adjacent(R, V, i):
    """Swap diagonal entries i, i+1 of the triangular factor by a Givens
    similarity, keeping R upper triangular and V unitary."""
    a, b, d = R[i, i], R[i, i + 1], R[i + 1, i + 1]
    x1, x2 = b, d - a
    r = math.hypot(abs(x1), abs(x2))
    if r == 0.0:  # identical eigenvalues with zero coupling: plain permutation
        g = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=np.complex128)
    else:
        g = np.array(
            [[x1 / r, -np.conj(x2) / r], [x2 / r, np.conj(x1) / r]],
            dtype=np.complex128,
        )
    R[i : i + 2, i:] = g.conj().T @ R[i : i + 2, i:]
    R[: i + 2, i : i + 2] = R[: i + 2, i : i + 2] @ g
    V[:, i : i + 2] = V[:, i : i + 2] @ g
    R[i + 1, i] = 0.0


def ordered_schur(U) -> OrderedSchur:
    """Complex Schur decomposition with eigenvalues sorted along the diagonal.

    Sorting is by decreasing modulus (decreasing growth rate), ties broken by
    decreasing real part of the quasienergy and then by the original position,
    which makes the result deterministic.  The reordering is carried out by a
    stable bubble pass of 2x2 unitary similarity transforms.
    """
    M = _as_matrix(U)
    R, V = scipy.linalg.schur(M, output="complex")
    R = np.ascontiguousarray(R)
    V = np.ascontiguousarray(V)
    moduli, re_eps = _schur_sort_keys(np.diag(R))
    perm = sorted(range(len(R)), key=lambda n: (-moduli[n], -re_eps[n], n))
    rank = np.empty(len(perm), dtype=int)
    rank[perm] = np.arange(len(perm))

    current = np.arange(len(R))  # original index sitting at each slot
    # insertion by adjacent swaps realizes the permutation stably
    for slot in range(len(R)):
        j = int(np.nonzero(rank[current] == slot)[0][0])
        while j > slot:
            _swap_adjacent(R, V, j - 1)
            current[[j - 1, j]] = current[[j, j - 1]]
            j -= 1
    order = current.copy()
    V.setflags(write=False)
    R.setflags(write=False)
    return OrderedSchur(V=V, R=R, order=order)


def quasienergies(op, eigenvalues=None, tol_mu: float | None = None) -> QuasiEnergySet:
    """Quasienergies and gain/stable/loss classification of a quantum map.

    ``eigenvalues`` defaults to a dense eigenvalue computation; pass the
    ordered Schur diagonal to keep the classification aligned with the Schur
    basis.  Re(eps)/hbar is reported in (-pi, pi].  The default threshold is
    tol_mu = 1e3 * eps_machine * max|ln|lambda|| * hbar_eff, with the scale
    floored at 1 so that a unitary spectrum (all |lambda| = 1 up to rounding
    noise) classifies as entirely stable.
    """
    hbar = op.hbar_eff if hasattr(op, "hbar_eff") else 1.0
    if eigenvalues is None:
        eigenvalues = np.linalg.eigvals(_as_matrix(op))
    lam = np.asarray(eigenvalues, dtype=np.complex128)
    with np.errstate(divide="ignore"):
        log_mod = np.log(np.abs(lam))
    mu = hbar * log_mod
    finite = np.isfinite(log_mod)
    scale = float(np.max(np.abs(log_mod[finite]))) if np.any(finite) else 0.0
    if tol_mu is None:
        tol_mu = 1e3 * np.finfo(float).eps * max(scale, 1.0) * hbar
    labels = np.full(lam.shape, "stable", dtype=object)
    labels[mu > tol_mu] = "gain"
    labels[mu < -tol_mu] = "loss"  # zero modulus -> mu = -inf -> loss
    re_over_h = -np.angle(lam)
    re_over_h[re_over_h <= -math.pi] += 2.0 * math.pi
    epsilon = hbar * re_over_h + 1j * mu
    return QuasiEnergySet(epsilon=epsilon, mu=mu, labels=labels, tol_mu=float(tol_mu), hbar_eff=hbar)


def schur_fraction_sets(qset: QuasiEnergySet, n: int | None = None):
    """Index sets (gain, stable, loss) plus the leading-n set of the ordering.

    Assumes ``qset`` indices follow the ordered Schur diagonal.  The three
    sets partition the indices; ``top`` is None unless ``n`` is given.
    """
    size = len(qset.labels)
    if n is not None and not (0 <= n <= size):
        raise ValueError(f"n must lie in [0, {size}], got {n}")
    gain = np.nonzero(qset.labels == "gain")[0]
    stable = np.nonzero(qset.labels == "stable")[0]
    loss = np.nonzero(qset.labels == "loss")[0]
    top = np.arange(n) if n is not None else None
    return gain, stable, loss, top


@dataclass(frozen=True)
class NormOperatorResult:
    """Orthonormal eigenvectors of W(t) = U^t (U^dag)^t and diagnostics.

    ``vectors`` columns are ordered by decreasing W-eigenvalue,
    ``log_eigenvalues`` holds ln of the W(t) eigenvalues, and ``overlaps``
    the per-index |<v_n|w_n(t)>| against the ordered Schur basis.
    """

    vectors: np.ndarray
    log_eigenvalues: np.ndarray
    overlaps: np.ndarray
    t: int
    method: str
    sweeps: int
    residual: float


def _norm_eigvecs_direct(M, t):
    P = np.linalg.matrix_power(M, t)
    if not np.all(np.isfinite(P)):
        raise OverflowBreakdownError(t, f"overflow while forming U^{t} directly")
    W = P @ P.conj().T
    scale = float(np.max(np.abs(np.diag(W)).real))
    vals, vecs = np.linalg.eigh(W / scale)
    vals, vecs = vals[::-1], vecs[:, ::-1]
    with np.errstate(divide="ignore", invalid="ignore"):
        log_vals = np.log(np.maximum(vals, 0.0)) + math.log(scale)
    return vecs, log_vals


def _norm_eigvecs_subspace(M, t, sweeps, sweep_tol):
    n = M.shape[0]
    Mh = M.conj().T
    Z = np.eye(n, dtype=np.complex128)
    log_vals = np.zeros(n)
    residual = math.inf
    done = 0
    for sweep in range(sweeps):
        log_vals[:] = 0.0
        prev = Z
        step = 0
        for factor in (Mh, M):
            for _ in range(t):
                step += 1
                Z, r = np.linalg.qr(factor @ Z)
                if not np.all(np.isfinite(Z)):
                    raise OverflowBreakdownError(step)
                with np.errstate(divide="ignore"):
                    log_vals += np.log(np.abs(np.diag(r)))
        done = sweep + 1
        residual = float(np.max(1.0 - np.minimum(np.abs(np.sum(prev.conj() * Z, axis=0)), 1.0)))
        if residual < sweep_tol:
            break
    return Z, log_vals, done, residual


def norm_operator_eigvecs(
    U,
    t: int,
    schur: OrderedSchur | None = None,
    method: str = "auto",
    sweeps: int = 12,
    sweep_tol: float = 1e-14,
    grade_limit: float = 30.0,
) -> NormOperatorResult:
    """Eigenvectors of the norm operator W(t) = U^t (U^dag)^t.

    The eigenvectors are the left singular vectors of U^t.  For mild grading
    (t * max|ln|lambda|| <= ``grade_limit``) W(t) is formed and diagonalized
    directly; otherwise a QR-renormalized subspace iteration applies U and
    U^dag factor by factor so that U^t is never formed and nothing overflows.
    Each QR renormalization preserves the nested column spans, so the iteration
    converges to the eigenbasis of W(t) ordered by decreasing eigenvalue.

    Returns per-index overlaps against ``ordered_schur(U).V`` (computed if not
    supplied), the log-scale W eigenvalues, and convergence diagnostics.
    """
    M = _as_matrix(U)
    if t < 1 or int(t) != t:
        raise ValueError("t must be a positive integer")
    if schur is None:
        schur = ordered_schur(M)
    with np.errstate(divide="ignore"):
        log_mod = np.log(np.abs(schur.eigenvalues))
    finite = log_mod[np.isfinite(log_mod)]
    peak = t * float(np.max(np.abs(finite), initial=0.0))
    # W(t) spans e^{2 t spread} in eigenvalue scale; a dense eigh loses the
    # small eigenvectors once that range exceeds 1/eps_machine
    spread = 2.0 * t * float(np.max(finite, initial=0.0) - np.min(finite, initial=0.0))
    if method == "auto":
        method = "direct" if peak <= grade_limit and spread <= grade_limit else "subspace"
    if method == "direct":
        vecs, log_vals = _norm_eigvecs_direct(M, t)
        done, residual = 0, 0.0
    elif method == "subspace":
        vecs, log_vals, done, residual = _norm_eigvecs_subspace(M, t, sweeps, sweep_tol)
    else:
        raise ValueError(f"unknown method {method!r}")
    overlaps = np.abs(np.sum(schur.V.conj() * vecs, axis=0))
    return NormOperatorResult(
        vectors=vecs,
        log_eigenvalues=log_vals,
        overlaps=overlaps,
        t=int(t),
        method=method,
        sweeps=done,
        residual=residual,
    )


def subspace_angles(A, B) -> np.ndarray:
    """Largest principal angle between the leading-k column spans, for every k.

    Both arguments must have orthonormal columns; entry k-1 of the result is
    the angle between span(A[:, :k]) and span(B[:, :k]).
    """
    A = np.asarray(A)
    B = np.asarray(B)
    angles = np.empty(min(A.shape[1], B.shape[1]))
    for k in range(1, len(angles) + 1):
        s = np.linalg.svd(A[:, :k].conj().T @ B[:, :k], compute_uv=False)
        angles[k - 1] = math.acos(min(1.0, max(-1.0, float(s[-1]))))
    return angles


def export_spectrum_table(qset: QuasiEnergySet, path):
    """Write (index, Re eps, mu, class) rows with 17-significant-digit floats."""
    with open(path, "w", encoding="ascii") as fh:
        fh.write("index\tre_eps\tmu\tclass\n")
        for i, (eps, mu, label) in enumerate(zip(qset.epsilon, qset.mu, qset.labels)):
            fh.write(f"{i}\t{gridio.format_float(eps.real)}\t{gridio.format_float(mu)}\t{label}\n")
