"""The flow  d_t u = v,  -Delta v + R(d^i u, v) d_i u = Delta u  on a mesh.

The discrete tension is minus the area-normalised gradient of the edge energy
E(u) = 1/2 sum_ij w_ij d(u_i, u_j)^2.  The velocity operator is assembled as
the exact Riemannian Hessian of E, edge by edge: along a geodesic of length d
in curvature -K^2, with c = K d, the Hessian of 1/2 d^2 is

    (x_t - y_t)^2 + c coth(c) (x_n^2 + y_n^2) - 2 c / sinh(c) x_n y_n

for variations (x, y) of the two endpoints written in parallel frames
(tangential t, normal n).  Its continuum limit is the connection Laplacian
plus the curvature potential, and with it the semi-discrete flow obeys
nabla_t tension = -tension exactly.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse as sps

from . import hyperbolic as hg
from .errors import DegenerateMap
from .linalg import factor_preconditioner, jacobi_preconditioner, pcg
from .mesh import MapField, Mesh, SectionField, differentials, global_norm, tension_field

log = logging.getLogger(__name__)


@dataclass
class FlowConfig:
    dt: float = 0.01
    t_end: float = 3.0
    solver_tol: float = 1e-10
    p_norms: tuple = (2.0,)
    tau_floor: float = 1e-3
    converge_tol: float = 1e-9
    # accept u0 as already harmonic when its tension is at most this (e.g. the mesh floor)
    initial_tol: Optional[float] = None
    preconditioner: str = "lu"
    snapshot_times: tuple = ()
    boundary: str = "fixed"

    def __post_init__(self):
        if not (0 < self.dt <= 0.1):
            raise ValueError(f"dt must lie in (0, 0.1], got {self.dt}")
        if not (0 < self.solver_tol <= 1e-8):
            raise ValueError(f"solver_tol must be <= 1e-8, got {self.solver_tol}")
        if self.boundary != "fixed":
            raise ValueError("only fixed boundary values are supported")
        if self.preconditioner not in ("lu", "jacobi", "none"):
            raise ValueError(f"unknown preconditioner {self.preconditioner!r}")
        self.p_norms = tuple(float(p) for p in self.p_norms)
        self.snapshot_times = tuple(float(t) for t in self.snapshot_times)


@dataclass
class FlowState:
    t: float
    u: MapField
    u0: MapField


def _coth_c(c):
    small = c < 1e-4
    cs = np.where(small, 1.0, c)
    return np.where(small, 1.0 + c * c / 3.0, cs / np.tanh(cs))


def _c_over_sinh(c):
    small = c < 1e-4
    cs = np.where(small, 1.0, c)
    return np.where(small, 1.0 - c * c / 6.0, cs / np.sinh(cs))


def _outer(a, b):
    return np.stack([np.stack([a.real * b.real, a.real * b.imag], -1),
                     np.stack([a.imag * b.real, a.imag * b.imag], -1)], -2)


@dataclass
class LinearizedOperator:
    """L = area^-1 H acting on interior sections in orthonormal frames.

    ``H`` is symmetric positive definite on interior degrees of freedom
    (two per interior vertex); boundary rows of L are the identity.
    """

    mesh: Mesh
    u: MapField
    H: sps.csr_matrix
    mass: np.ndarray

    @property
    def dofs(self) -> int:
        return self.H.shape[0]

    def _to_dofs(self, sec_frame: np.ndarray) -> np.ndarray:
        c = sec_frame[self.mesh.interior]
        return np.column_stack([c.real, c.imag]).ravel()

    def _from_dofs(self, x: np.ndarray) -> np.ndarray:
        out = np.zeros(self.mesh.n_vertices, dtype=complex)
        out[self.mesh.interior] = x[0::2] + 1j * x[1::2]
        return out

    def apply(self, v: SectionField) -> SectionField:
        c = v.frame()
        out = self._from_dofs((self.H @ self._to_dofs(c)) / self.mass)
        out[self.mesh.boundary] = c[self.mesh.boundary]
        return SectionField(self.u, hg.from_frame(self.u.space, self.u.points, out))

    def inner(self, v: SectionField, w: SectionField) -> float:
        """Dual-area weighted inner product of two sections."""
        a = self.mesh.dual_area
        return float(np.sum(a * np.real(np.conj(v.frame()) * w.frame())))

    def dense(self) -> np.ndarray:
        return self.H.toarray() / self.mass[:, None]


def assemble_linearized(mesh: Mesh, u: MapField) -> LinearizedOperator:
    i, j = mesh.edges[:, 0], mesh.edges[:, 1]
    w = mesh.weights
    p, q = u.points[i], u.points[j]
    a = (q - p) / (1.0 - np.conj(p) * q)
    r = np.abs(a)
    e = np.where(r > 0, a / np.where(r > 0, r, 1.0), 1.0 + 0j)
    e2 = e * hg.transport_rotation(p, q)
    c = 2.0 * np.arctanh(r)
    alpha, beta = _coth_c(c), _c_over_sinh(c)
    n, n2 = 1j * e, 1j * e2

    Hii = w[:, None, None] * (_outer(e, e) + alpha[:, None, None] * _outer(n, n))
    Hjj = w[:, None, None] * (_outer(e2, e2) + alpha[:, None, None] * _outer(n2, n2))
    Hij = -w[:, None, None] * (_outer(e, e2) + beta[:, None, None] * _outer(n, n2))

    N = mesh.n_vertices
    dof = -np.ones(N, dtype=np.int64)
    dof[mesh.interior] = np.arange(len(mesh.interior))

    rows, cols, vals = [], [], []

    def put(vi, vj, blocks):
        ok = (dof[vi] >= 0) & (dof[vj] >= 0)
        bi, bj, b = dof[vi][ok], dof[vj][ok], blocks[ok]
        for r_ in range(2):
            for c_ in range(2):
                rows.append(2 * bi + r_)
                cols.append(2 * bj + c_)
                vals.append(b[:, r_, c_])

    put(i, i, Hii)
    put(j, j, Hjj)
    put(i, j, Hij)
    put(j, i, np.transpose(Hij, (0, 2, 1)))
    nd = 2 * len(mesh.interior)
    H = sps.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(nd, nd)
    ).tocsr()
    mass = np.repeat(mesh.dual_area[mesh.interior], 2)
    return LinearizedOperator(mesh, u, H, mass)


def solve_velocity(mesh: Mesh, u: MapField, w: SectionField, tol: float = 1e-10,
                   op: Optional[LinearizedOperator] = None, preconditioner: str = "lu") -> SectionField:
    """Solve L v = w with v = 0 on the boundary.

    CG runs on the symmetrically scaled system area^-1/2 H area^-1/2, so the
    stopping rule ||L v - w|| <= tol ||w|| is in the dual-area L^2 norm.
    """
    op = op or assemble_linearized(mesh, u)
    s = 1.0 / np.sqrt(op.mass)
    A = sps.diags(s) @ op.H @ sps.diags(s)
    b = op._to_dofs(w.frame()) / s
    if preconditioner == "lu":
        M = factor_preconditioner(A)
    elif preconditioner == "jacobi":
        M = jacobi_preconditioner(A)
    else:
        M = None
    y, _ = pcg(A.tocsr(), b, M, tol=tol)
    v = op._from_dofs(y * s)
    return SectionField(u, hg.from_frame(u.space, u.points, v))


@dataclass
class Diagnostics:
    records: list = field(default_factory=list)
    snapshots: dict = field(default_factory=dict)
    converged: bool = False
    converged_at: Optional[float] = None

    COLUMNS = ("t", "tension_p2", "tension_inf", "du_inf", "tau", "dist_sup", "v_inf")

    def column(self, name: str) -> np.ndarray:
        return np.array([r[name] for r in self.records], dtype=float)

    @classmethod
    def from_columns(cls, **cols) -> "Diagnostics":
        n = len(cols["t"])
        return cls([{k: float(v[i]) for k, v in cols.items()} for i in range(n)])


def _measure(mesh: Mesh, u: MapField, u0: MapField, p_norms):
    T = tension_field(mesh, u)
    A = differentials(mesh, u)
    interior = ~mesh.boundary
    sv = np.linalg.svd(A[interior], compute_uv=False)
    tn = T.norms()
    rec = {
        "tension_inf": float(tn.max()),
        "du_inf": float(np.sqrt((sv**2).sum(axis=1)).max()),
        "tau": float(sv[:, 1].min()),
        "dist_sup": float(hg.hyp_distance(u.space, u.points, u0.points).max()),
    }
    rec["tension_p2"] = global_norm(mesh, tn, 2.0)
    for p in p_norms:
        rec[f"tension_p{p:g}"] = global_norm(mesh, tn, p)
    return T, rec


def flow_step(state: FlowState, mesh: Mesh, config: FlowConfig, v: Optional[SectionField] = None) -> FlowState:
    """One explicit Euler step u <- exp_u(dt v) with the boundary held fixed."""
    u = state.u
    if v is None:
        T = tension_field(mesh, u)
        tau = float(np.linalg.svd(differentials(mesh, u)[~mesh.boundary], compute_uv=False)[:, 1].min())
        if tau < config.tau_floor:
            raise DegenerateMap(f"tau[u] = {tau:.3e} fell below {config.tau_floor:g} at t = {state.t:g}")
        v = solve_velocity(mesh, u, T, config.solver_tol, preconditioner=config.preconditioner)
    new = u.points.copy()
    I = mesh.interior
    new[I] = hg.exp_map(u.space, u.points[I], config.dt * v.vectors[I])
    return FlowState(state.t + config.dt, MapField(new, u.space), state.u0)


def run_flow(mesh: Mesh, u0: MapField, config: FlowConfig):
    """Integrate to ``config.t_end``; returns (final map, Diagnostics)."""
    diag = Diagnostics()
    state = FlowState(0.0, u0.copy(), u0.copy())
    n_steps = int(round(config.t_end / config.dt))
    snaps = list(config.snapshot_times)
    for k in range(n_steps + 1):
        t = k * config.dt
        state.t = t
        T, rec = _measure(mesh, state.u, state.u0, config.p_norms)
        for ts in snaps:
            if abs(ts - t) < 0.5 * config.dt:
                diag.snapshots[ts] = T.norms()
        if rec["tau"] < config.tau_floor:
            raise DegenerateMap(f"tau[u] = {rec['tau']:.3e} fell below {config.tau_floor:g} at step {k}")
        done = rec["tension_inf"] < config.converge_tol
        if k == 0 and config.initial_tol is not None:
            done = done or rec["tension_inf"] <= config.initial_tol
        if done:
            rec["v_inf"] = 0.0
        else:
            try:
                v = solve_velocity(mesh, state.u, T, config.solver_tol, preconditioner=config.preconditioner)
            except Exception as exc:
                exc.args = (f"step {k}: {exc.args[0] if exc.args else exc}",) + exc.args[1:]
                raise
            rec["v_inf"] = float(v.norms().max())
        diag.records.append({"t": t, **rec})
        if done:
            diag.converged, diag.converged_at = True, t
            log.info("converged at t=%g (tension %.3e)", t, rec["tension_inf"])
            break
        if k == n_steps:
            break
        state = flow_step(state, mesh, config, v)
    return state.u, diag


def _slope(t, y):
    ok = y > 0
    return float(np.polyfit(t[ok], np.log(y[ok]), 1)[0])


def estimate_report(diag: Diagnostics, window=(0.5, 2.5), kappa: float = 1.0) -> dict:
    """Decay fits, velocity-bound ratio, nondegeneracy and monotonicity verdicts."""
    if len(diag.records) < 10:
        raise ValueError("need at least 10 records")
    t = diag.column("t")
    sel = (t >= window[0] - 1e-12) & (t <= window[1] + 1e-12)
    if sel.sum() < 3:
        sel = np.ones_like(t, dtype=bool)
    names = [k for k in diag.records[0] if k.startswith("tension_")]
    slopes = {k: _slope(t[sel], diag.column(k)[sel]) for k in names}

    tau = diag.column("tau")
    tinf = diag.column("tension_inf")
    vinf = diag.column("v_inf")
    ok = tinf > 0
    ratio = vinf[ok] * tau[ok] ** 2 / tinf[ok]
    med = float(np.median(ratio))
    dist = diag.column("dist_sup")
    later = t > 0
    C = dist[later] / (tinf[0] * (1.0 - np.exp(-t[later])))
    return {
        "decay_slopes": slopes,
        "velocity_ratio": {
            "max": float(ratio.max()),
            "min": float(ratio.min()),
            "median": med,
            "drift": float(np.max(np.abs(ratio / med - 1.0))),
            "bound_violation": float(max(ratio.max() / kappa**2 - 1.0, 0.0)),
        },
        "tau": {"initial": float(tau[0]), "min": float(tau.min())},
        "monotone": {
            "tension_inf_decreasing": bool(np.all(np.diff(tinf) < 0)),
            "tension_p2_decreasing": bool(np.all(np.diff(diag.column("tension_p2")) < 0)),
            "dist_sup_nondecreasing": bool(np.all(np.diff(dist) >= -1e-12)),
        },
        "distance_constant": {
            "fitted": float(C.max()) if len(C) else 0.0,
            "spread": float(C.max() / C.min()) if len(C) else 1.0,
        },
    }
