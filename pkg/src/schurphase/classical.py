"""Classical kicked maps with norm dynamics, Poincare sections, norm
landscapes, and a generic integrator for smooth gain/loss flows.

Both kicked maps act backwards in time (they are generated by the adjoint of
the quantum map) on the torus (q, p) in [0,1) x [-1/2, 1/2):

    pt:      p' = mod(p - (k/2pi) sin(2pi q) + gamma/2pi + 1/2, 1) - 1/2
             q' = mod(q - p' + gamma/2pi, 1)
             w' = exp(2 gamma p') w
    escape:  p' = mod(p - (k/2pi) sin(2pi q) + 1/2, 1) - 1/2
             q' = mod(q - p', 1)
             w' = exp(-2 gamma chi(q)) w,   chi = 1 on q in (qL, qR)

Both maps are area preserving for every gamma; only the scalar norm w records
the gain/loss.  Norms are tracked in log scale so large gamma*t never
overflows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dataclass_field

import numpy as np
from scipy.special import logsumexp

from .phasespace import Field, TorusGrid

__all__ = [
    "MapState",
    "KickedMap",
    "EnsembleSpec",
    "FlowSpec",
    "FlowTrajectory",
    "NormLandscape",
    "step_pt",
    "step_escape",
    "iterate_map",
    "poincare_section",
    "norm_landscape",
    "norm_landscape_series",
    "integrate_frozen_gaussian",
]

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class MapState:
    q: float
    p: float
    w: float = 1.0


@dataclass(frozen=True)
class KickedMap:
    """Classical map parameters; ``kind`` is 'pt' or 'escape'."""

    kind: str
    k: float
    gamma: float
    q_loss: tuple[float, float] | None = None

    def __post_init__(self):
        if self.kind not in ("pt", "escape"):
            raise ValueError(f"unknown map kind {self.kind!r}")
        if self.kind == "escape" and self.q_loss is None:
            raise ValueError("escape map requires q_loss=(qL, qR)")

    @classmethod
    def from_rotor(cls, params) -> "KickedMap":
        return cls(kind=params.variant, k=params.k, gamma=params.gamma, q_loss=params.q_loss)


@dataclass(frozen=True)
class EnsembleSpec:
    """Gaussian cloud drawn around each landscape cell center."""

    samples: int = 16
    sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.samples < 1:
            raise ValueError("samples must be >= 1")
        if self.sigma < 0:
            raise ValueError("sigma must be >= 0")


def _advance(kmap: KickedMap, q, p, logw, steps: int):
    """Advance arrays (q, p, log w) in place-free fashion for ``steps`` kicks."""
    k, gamma = kmap.k, kmap.gamma
    if kmap.kind == "pt":
        for _ in range(steps):
            p = np.mod(p - k / TWO_PI * np.sin(TWO_PI * q) + gamma / TWO_PI + 0.5, 1.0) - 0.5
            q = np.mod(q - p + gamma / TWO_PI, 1.0)
            logw = logw + 2.0 * gamma * p
    else:
        ql, qr = kmap.q_loss
        for _ in range(steps):
            logw = logw - 2.0 * gamma * ((q > ql) & (q < qr))
            p = np.mod(p - k / TWO_PI * np.sin(TWO_PI * q) + 0.5, 1.0) - 0.5
            q = np.mod(q - p, 1.0)
    return q, p, logw


def step_pt(state: MapState, k: float, gamma: float) -> MapState:
    """One kick of the PT map including the norm update."""
    p = (state.p - k / TWO_PI * math.sin(TWO_PI * state.q) + gamma / TWO_PI + 0.5) % 1.0 - 0.5
    q = (state.q - p + gamma / TWO_PI) % 1.0
    return MapState(q=q, p=p, w=math.exp(2.0 * gamma * p) * state.w)


def step_escape(state: MapState, k: float, gamma: float, q_left: float, q_right: float) -> MapState:
    """One kick of the escape map; the loss uses the pre-step position."""
    chi = 1.0 if q_left < state.q < q_right else 0.0
    p = (state.p - k / TWO_PI * math.sin(TWO_PI * state.q) + 0.5) % 1.0 - 0.5
    q = (state.q - p) % 1.0
    return MapState(q=q, p=p, w=math.exp(-2.0 * gamma * chi) * state.w)


def iterate_map(kmap: KickedMap, q, p, steps: int):
    """Iterate arrays of initial conditions; returns (q, p, log w) arrays."""
    q = np.mod(np.asarray(q, dtype=float), 1.0)
    p = np.mod(np.asarray(p, dtype=float) + 0.5, 1.0) - 0.5
    return _advance(kmap, q, p, np.zeros_like(q), steps)


def poincare_section(kmap: KickedMap, initial, steps: int) -> np.ndarray:
    """All iterates (seeds included) of the given initial points.

    Returns rows (q, p) time-major, or (q, p, in_loss) for the escape map
    where in_loss tags points inside the loss strip.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    pts = np.atleast_2d(np.asarray(initial, dtype=float))
    q = np.mod(pts[:, 0], 1.0)
    p = np.mod(pts[:, 1] + 0.5, 1.0) - 0.5
    logw = np.zeros_like(q)
    qs, ps = [q], [p]
    for _ in range(steps):
        q, p, logw = _advance(kmap, q, p, logw, 1)
        qs.append(q)
        ps.append(p)
    q_all = np.concatenate(qs)
    p_all = np.concatenate(ps)
    if kmap.kind == "escape":
        ql, qr = kmap.q_loss
        tag = ((q_all > ql) & (q_all < qr)).astype(float)
        return np.column_stack([q_all, p_all, tag])
    return np.column_stack([q_all, p_all])


@dataclass(frozen=True)
class NormLandscape:
    """Ensemble-averaged classical norm <w> per grid cell after t_f kicks.

    Values are stored as ln<w> to avoid overflow; ``mean_w`` exponentiates on
    demand.  At gamma = 0 the stored field is identically zero (<w> = 1).
    """

    log_mean_w: Field
    t_f: int
    ensemble: EnsembleSpec
    map: KickedMap

    @property
    def grid(self) -> TorusGrid:
        return self.log_mean_w.grid

    @property
    def mean_w(self) -> Field:
        meta = dict(self.log_mean_w.meta)
        meta["kind"] = "norm_landscape"
        return Field(self.grid, np.exp(self.log_mean_w.values), meta=meta)

    def metadata(self) -> dict:
        md = {
            "kind": "norm_landscape",
            "t_f": self.t_f,
            "samples": self.ensemble.samples,
            "sigma_e": repr(self.ensemble.sigma),
            "seed": self.ensemble.seed,
            "map": self.map.kind,
            "k": repr(self.map.k),
            "gamma": repr(self.map.gamma),
        }
        if self.map.q_loss is not None:
            md["qL"], md["qR"] = repr(self.map.q_loss[0]), repr(self.map.q_loss[1])
        return md


def _ensemble_start(grid: TorusGrid, ensemble: EnsembleSpec):
    # one counter-based stream per landscape; cells map to fixed positions in
    # the draw, so results do not depend on evaluation order
    qc, pc = np.meshgrid(grid.q_centers(), grid.p_centers())
    rng = np.random.Generator(np.random.Philox(key=ensemble.seed))
    off = rng.standard_normal((2, ensemble.samples) + qc.shape) * ensemble.sigma
    q = np.mod(qc[None] + off[0], 1.0)
    p = np.mod(pc[None] + off[1] + 0.5, 1.0) - 0.5
    return q, p


def norm_landscape(kmap: KickedMap, grid: TorusGrid, t_f: int, ensemble: EnsembleSpec) -> NormLandscape:
    """Landscape of ln<w_{t_f}> over cell-centered Gaussian ensembles."""
    return norm_landscape_series(kmap, grid, [t_f], ensemble)[0]


def norm_landscape_series(kmap, grid, t_f_list, ensemble) -> list[NormLandscape]:
    """Landscapes for several final times from one shared trajectory set.

    Identical trajectories serve every requested time, so each entry is
    bit-identical to a fresh ``norm_landscape`` run at that t_f with the same
    seed.
    """
    t_fs = [int(t) for t in t_f_list]
    if any(t < 1 for t in t_fs) or len(t_fs) == 0:
        raise ValueError("t_f values must be >= 1")
    if sorted(t_fs) != t_fs:
        raise ValueError("t_f values must be sorted increasingly")
    q, p = _ensemble_start(grid, ensemble)
    logw = np.zeros_like(q)
    out = []
    reached = 0
    log_m = math.log(ensemble.samples)
    for t_f in t_fs:
        q, p, logw = _advance(kmap, q, p, logw, t_f - reached)
        reached = t_f
        values = logsumexp(logw, axis=0) - log_m
        fld = Field(grid, values, meta={"kind": "norm_landscape_log"})
        out.append(NormLandscape(log_mean_w=fld, t_f=t_f, ensemble=ensemble, map=kmap))
    return out


@dataclass(frozen=True)
class FlowSpec:
    """Smooth backward flow with gain/loss: derivative callables of H and
    Gamma on (q, p), plus the integration step."""

    dh_dq: callable
    dh_dp: callable
    gamma: callable
    dgamma_dq: callable
    dgamma_dp: callable
    dt: float
    h: callable | None = None

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")


@dataclass(frozen=True)
class FlowTrajectory:
    t: np.ndarray
    q: np.ndarray
    p: np.ndarray
    w: np.ndarray
    aborted: bool = False

    @property
    def final(self) -> MapState:
        return MapState(q=float(self.q[-1]), p=float(self.p[-1]), w=float(self.w[-1]))


def _flow_rhs(flow: FlowSpec, q, p):
    # backward-flow sign convention; d(ln w)/dt = 2 Gamma
    return (
        -flow.dh_dp(q, p) + flow.dgamma_dq(q, p),
        flow.dh_dq(q, p) + flow.dgamma_dp(q, p),
        2.0 * flow.gamma(q, p),
    )


def integrate_frozen_gaussian(flow: FlowSpec, z0, t_end: float) -> FlowTrajectory:
    """Fourth-order (classical Runge-Kutta) integration of (q, p, ln w).

    Integrating ln w instead of w keeps the norm positive and makes constant
    gain/loss exact.  Non-finite derivatives abort the run; the trajectory up
    to the last valid state is returned with ``aborted`` set.
    """
    q, p = float(z0[0]), float(z0[1])
    lw = 0.0
    n_steps = max(1, math.ceil(t_end / flow.dt - 1e-12))
    ts = [0.0]
    qs, ps, lws = [q], [p], [lw]
    aborted = False
    t = 0.0
    for i in range(n_steps):
        dt = min(flow.dt, t_end - t)
        k1 = _flow_rhs(flow, q, p)
        k2 = _flow_rhs(flow, q + 0.5 * dt * k1[0], p + 0.5 * dt * k1[1])
        k3 = _flow_rhs(flow, q + 0.5 * dt * k2[0], p + 0.5 * dt * k2[1])
        k4 = _flow_rhs(flow, q + dt * k3[0], p + dt * k3[1])
        vals = []
        for a, b, c, d in zip(k1, k2, k3, k4):
            vals.append((a + 2.0 * b + 2.0 * c + d) / 6.0)
        q_new = q + dt * vals[0]
        p_new = p + dt * vals[1]
        lw_new = lw + dt * vals[2]
        if not all(map(math.isfinite, (q_new, p_new, lw_new))):
            aborted = True
            break
        q, p, lw, t = q_new, p_new, lw_new, t + dt
        ts.append(t)
        qs.append(q)
        ps.append(p)
        lws.append(lw)
    return FlowTrajectory(
        t=np.array(ts),
        q=np.array(qs),
        p=np.array(ps),
        w=np.exp(np.array(lws)),
        aborted=aborted,
    )
