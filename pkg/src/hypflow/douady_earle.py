"""Barycentric (Douady-Earle) extension of circle homeomorphisms to the disk.

For a boundary map U and an interior point x, E[U](x) is the unique y with

    F(x, y) = mean_k  phi_y( U( phi_x^{-1}(theta_k) ) ) = 0,

where phi_z(w) = (w - z) / (1 - conj(z) w) and theta_k are uniform nodes.
Angles are lifted reals throughout; a boundary map of degree one satisfies
U(theta + 2 pi) = U(theta) + 2 pi.
"""
from __future__ import annotations

import logging
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from . import hyperbolic as hg
from .errors import InputError, MonotonicityViolation, NonConvergence

log = logging.getLogger(__name__)

TWO_PI = hg.TWO_PI


@dataclass(frozen=True, eq=False)
class BoundaryMap:
    """Samples (theta_i, phi_i) of a lifted circle map on uniform nodes.

    ``exact`` is the generating formula when one is known; evaluation then
    uses it directly instead of interpolating.  Maps read from files carry
    samples only.
    """

    theta: np.ndarray
    phi: np.ndarray
    exact: Optional[Callable] = None
    label: str = ""

    def __post_init__(self):
        th = np.asarray(self.theta, dtype=float)
        ph = np.asarray(self.phi, dtype=float)
        object.__setattr__(self, "theta", th)
        object.__setattr__(self, "phi", ph)
        M = len(th)
        if M < 64 or ph.shape != th.shape:
            raise InputError(f"need at least 64 matching samples, got {M}")
        if not np.allclose(th, TWO_PI * np.arange(M) / M, atol=1e-9):
            raise InputError("theta samples must be uniform on [0, 2pi)")
        if not np.all(np.isfinite(ph)):
            raise InputError("phi samples must be finite")
        gaps = np.diff(np.append(ph, ph[0] + TWO_PI))
        if np.any(gaps <= 0):
            raise MonotonicityViolation("lifted boundary map must be strictly increasing with degree one")

    @property
    def M(self) -> int:
        return len(self.theta)

    def sampled(self) -> "BoundaryMap":
        """Same samples without the analytic formula."""
        return BoundaryMap(self.theta, self.phi, None, self.label)


def _interp(bm: BoundaryMap, theta):
    # interpolate the periodic displacement phi - theta; identical to interpolating phi,
    # but identity samples then evaluate without rounding
    theta = np.asarray(theta, dtype=float)
    t = np.mod(theta, TWO_PI)
    step = TWO_PI / bm.M
    g = bm.phi - bm.theta
    g = np.append(g, g[0])
    k = np.minimum((t / step).astype(np.int64), bm.M - 1)
    frac = t / step - k
    return theta + (g[k] + frac * (g[k + 1] - g[k]))


def bm_eval(bm: BoundaryMap, theta):
    """Lifted value U(theta); exact at the nodes, piecewise linear between them."""
    if bm.exact is not None:
        return bm.exact(np.asarray(theta, dtype=float))
    return _interp(bm, theta)


def _from_formula(f: Callable, M: int, label: str) -> BoundaryMap:
    th = TWO_PI * np.arange(M) / M
    return BoundaryMap(th, f(th), f, label)


def boundary_from_function(f: Callable, M: int = 1024, label: str = "") -> BoundaryMap:
    return _from_formula(f, M, label)


def mobius_trace(m: hg.Mobius, M: int = 1024) -> BoundaryMap:
    return _from_formula(lambda t: hg.mobius_apply_angle(m, t), M, f"mobius(a={m.a},rot={m.rot})")


def make_test_boundary_map(kind: str, M: int = 1024, **params) -> BoundaryMap:
    """Generators: identity, mobius(a, rot), sine(eps, k), composed(parts).

    ``parts`` is a sequence of BoundaryMaps or (kind, params) pairs, applied
    left to right: the first part acts on theta first.
    """
    if kind == "identity":
        return _from_formula(lambda t: np.array(t, dtype=float), M, "identity")
    if kind == "mobius":
        m = hg.Mobius(complex(params.get("a", 0j)), float(params.get("rot", 0.0)))
        return mobius_trace(m, M)
    if kind == "sine":
        eps, k = float(params.get("eps", 0.2)), params.get("k", 2)
        if int(k) != k or k < 1:
            raise InputError(f"sine frequency must be a positive integer, got {k}")
        k = int(k)
        if abs(eps * k) >= 1.0:
            raise MonotonicityViolation(f"|eps k| = {abs(eps * k):g} >= 1 breaks monotonicity")
        return _from_formula(lambda t: t + eps * np.sin(k * t), M, f"sine(eps={eps:g},k={k})")
    if kind == "composed":
        parts = [p if isinstance(p, BoundaryMap) else make_test_boundary_map(p[0], M, **p[1])
                 for p in params["parts"]]

        def f(t):
            for p in parts:
                t = bm_eval(p, t)
            return t

        return _from_formula(f, M, "composed(" + ",".join(p.label for p in parts) + ")")
    raise InputError(f"unknown boundary map kind {kind!r}")


def _pushforward(bm: BoundaryMap, x, M: int):
    """zeta[n, k] = exp(i U(arg phi_x^{-1}(e^{i theta_k}))) for points x[n]."""
    x = np.atleast_1d(np.asarray(x, dtype=complex))
    nodes = np.exp(1j * TWO_PI * np.arange(M) / M)
    w = (nodes[None, :] + x[:, None]) / (1.0 + np.conj(x[:, None]) * nodes[None, :])
    return np.exp(1j * bm_eval(bm, np.angle(w)))


def _field(zeta, y):
    return np.mean((zeta - y[:, None]) / (1.0 - np.conj(y[:, None]) * zeta), axis=1)


def barycenter_field(bm: BoundaryMap, x, y, M: int = 1024):
    """F(x, y) as a complex number (first component = real part)."""
    xb, yb = np.broadcast_arrays(np.asarray(x, dtype=complex), np.asarray(y, dtype=complex))
    F = _field(_pushforward(bm, xb.ravel(), M), yb.ravel()).reshape(xb.shape)
    return complex(F) if F.ndim == 0 else F


@dataclass
class ExtensionResult:
    point: complex
    residual: float
    iterations: int


def _solve(zeta, y0, tol, max_iter, fd=1e-7):
    """Damped Newton on F(y) = 0 for a batch of points, with a fixed-point fallback."""
    n = len(y0)
    y = np.array(y0, dtype=complex)
    F = _field(zeta, y)
    res = np.abs(F)
    its = np.zeros(n, dtype=np.int64)
    active = res >= tol
    for _ in range(max_iter):
        if not active.any():
            break
        idx = np.flatnonzero(active)
        z, yy, FF = zeta[idx], y[idx], F[idx]
        J1 = (_field(z, yy + fd) - _field(z, yy - fd)) / (2 * fd)
        J2 = (_field(z, yy + 1j * fd) - _field(z, yy - 1j * fd)) / (2 * fd)
        # 2x2 real Jacobian columns J1, J2; Newton step solves J s = -F
        det = J1.real * J2.imag - J2.real * J1.imag
        ok = np.abs(det) > 1e-300
        sx = np.where(ok, (-FF.real * J2.imag + FF.imag * J2.real) / np.where(ok, det, 1), 0)
        sy = np.where(ok, (-J1.real * FF.imag + J1.imag * FF.real) / np.where(ok, det, 1), 0)
        step = sx + 1j * sy
        lam = np.ones(len(idx))
        best_y, best_F = yy.copy(), FF.copy()
        pending = np.ones(len(idx), dtype=bool)
        for _ in range(40):
            cand = yy + lam * step
            inside = np.abs(cand) < 1.0
            Fc = np.full(len(idx), np.inf + 0j)
            if inside.any():
                Fc[inside] = _field(z[inside], cand[inside])
            better = pending & inside & (np.abs(Fc) < np.abs(FF))
            best_y[better], best_F[better] = cand[better], Fc[better]
            pending &= ~better
            if not pending.any():
                break
            lam[pending] *= 0.5
        if pending.any():
            # Newton stalled: move toward the pushed-forward barycenter instead
            p = pending
            cand = hg._from_origin(yy[p], 0.5 * FF[p])
            best_y[p], best_F[p] = cand, _field(z[p], cand)
        y[idx], F[idx] = best_y, best_F
        res[idx] = np.abs(best_F)
        its[idx] += 1
        active[idx] = res[idx] >= tol
    return y, res, its


def de_extend_point(bm: BoundaryMap, x, tol: float = 1e-10, max_iter: int = 100,
                    M: int = 1024, y0=None) -> ExtensionResult:
    hg.check_interior(x)
    zeta = _pushforward(bm, complex(x), M)
    y, res, its = _solve(zeta, np.array([complex(x) if y0 is None else complex(y0)]), tol, max_iter)
    if res[0] >= tol:
        raise NonConvergence(f"barycenter solve stalled at |F| = {res[0]:.3e}")
    return ExtensionResult(complex(y[0]), float(res[0]), int(its[0]))


def _bfs_layers(n: int, edges: np.ndarray, root: int):
    nbr = [[] for _ in range(n)]
    for a, b in edges:
        nbr[a].append(b)
        nbr[b].append(a)
    depth = -np.ones(n, dtype=np.int64)
    parent = -np.ones(n, dtype=np.int64)
    depth[root] = 0
    q = deque([root])
    while q:
        a = q.popleft()
        for b in sorted(nbr[a]):
            if depth[b] < 0:
                depth[b], parent[b] = depth[a] + 1, a
                q.append(b)
    return depth, parent


def de_extend_field(bm: BoundaryMap, mesh, space: hg.Space | None = None, tol: float = 1e-10,
                    max_iter: int = 100, M: int = 1024, chunk: int = 256, serial: bool = False):
    """E[U] at every mesh vertex, boundary ring included.

    Vertices are solved breadth-first from the centre; each starts from its
    parent's solution.  Chunks within a layer are independent, so the
    threaded and serial paths give identical results.
    Returns (MapField, residuals).
    """
    from .mesh import MapField

    z = mesh.vertices
    n = len(z)
    root = int(np.argmin(np.abs(z)))
    depth, parent = _bfs_layers(n, mesh.edges, root)
    y = np.zeros(n, dtype=complex)
    res = np.zeros(n)
    done = np.zeros(n, dtype=bool)

    def work(ids, y0):
        yy, rr, _ = _solve(_pushforward(bm, z[ids], M), y0, tol, max_iter)
        return ids, yy, rr

    pool = None if serial else ThreadPoolExecutor()
    try:
        for d in range(depth.max() + 1):
            layer = np.flatnonzero(depth == d)
            y0 = z[layer] if d == 0 else y[parent[layer]]
            jobs = [(layer[i:i + chunk], y0[i:i + chunk]) for i in range(0, len(layer), chunk)]
            outs = map(lambda j: work(*j), jobs) if pool is None else pool.map(lambda j: work(*j), jobs)
            for ids, yy, rr in outs:
                y[ids], res[ids] = yy, rr
                done[ids] = True
            bad = layer[res[layer] >= tol]
            if len(bad):
                v = int(bad[0])
                raise NonConvergence(f"barycenter solve failed at vertex {v} (|F| = {res[v]:.3e})", vertex=v)
    finally:
        if pool is not None:
            pool.shutdown()
    if not done.all():
        raise InputError("mesh graph is not connected")
    return MapField(y, space or hg.DOMAIN), res


def quasisymmetry_constant(bm: BoundaryMap, n_theta: int = 512, n_scales: int = 10) -> float:
    """max over theta and dyadic t of max(rho, 1/rho), rho the ratio of adjacent image arcs."""
    th = TWO_PI * np.arange(n_theta) / n_theta
    worst = 1.0
    # arcs from the displacement U(theta) - theta: no cancellation at small t
    g = lambda s: bm_eval(bm, s) - s  # noqa: E731
    c = g(th)
    for j in range(1, n_scales + 1):
        t = np.pi / 2**j
        rho = (t + (g(th + t) - c)) / (t + (c - g(th - t)))
        worst = max(worst, float(np.max(np.maximum(rho, 1.0 / rho))))
    return worst


def compose_boundary(outer: BoundaryMap, inner: BoundaryMap, M: Optional[int] = None) -> BoundaryMap:
    """outer o inner, keeping the exact formula when both have one."""
    M = M or max(outer.M, inner.M)
    return _from_formula(lambda t: bm_eval(outer, bm_eval(inner, t)), M,
                         f"{outer.label}o{inner.label}")


def perturbations(bm: BoundaryMap, deltas: Sequence[float], k: int = 3) -> list:
    """U + delta sin(k theta) for each delta, checked for monotonicity."""
    out = []
    for d in deltas:
        out.append(_from_formula(lambda t, d=d: bm_eval(bm, t) + d * np.sin(k * t), bm.M,
                                 f"{bm.label}+{d:g}sin{k}"))
    return out
