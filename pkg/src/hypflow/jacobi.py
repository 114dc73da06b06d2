"""Jacobi fields along target geodesics and the index form

    E[J] = int_0^1 R(g', J) g'.J + |nabla J|^2 ds .

Fields are integrated with RK4 in a parallel orthonormal frame (e1 along the
geodesic, e2 = i e1) and reported in coordinates at the geodesic nodes.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import simpson

from . import hyperbolic as hg


@dataclass(frozen=True)
class Geodesic:
    """s -> exp(start, s * velocity) on s in [0, 1]."""

    space: hg.Space
    start: complex
    velocity: complex

    @property
    def speed(self) -> float:
        return float(hg.norm(self.space, self.start, self.velocity))

    def point(self, s):
        return hg.exp_map(self.space, self.start, np.multiply(s, self.velocity))

    def transport(self, v, s):
        """Parallel transport of v (based at start) to point(s)."""
        return hg.parallel_transport(self.space, self.start, self.point(s), v)

    def frame(self):
        """Unit coordinate vectors (e1, e2) at start; e1 follows the velocity."""
        if self.speed > 0:
            e1 = self.velocity / self.speed
        else:
            e1 = 1.0 / hg.conformal_factor(self.space, self.start)
        return e1, 1j * e1


@dataclass
class JacobiField:
    geodesic: Geodesic
    s: np.ndarray
    points: np.ndarray
    J: np.ndarray
    dJ: np.ndarray
    # parallel-frame components: J = a e1 + b e2
    comps: np.ndarray
    dcomps: np.ndarray


def _components(g: Geodesic, v):
    e1, e2 = g.frame()
    sp, z = g.space, g.start
    return np.array([hg.inner(sp, z, e1, v), hg.inner(sp, z, e2, v)])


def _rk4(c2: float, y0: np.ndarray, S: int) -> np.ndarray:
    # y = (a, b, a', b'),  a'' = 0,  b'' = c2 b
    def f(y):
        return np.array([y[2], y[3], 0.0, c2 * y[1]])

    h = 1.0 / S
    out = np.empty((S + 1, 4))
    out[0] = y = y0
    for k in range(S):
        k1 = f(y)
        k2 = f(y + 0.5 * h * k1)
        k3 = f(y + 0.5 * h * k2)
        k4 = f(y + h * k3)
        y = y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        out[k + 1] = y
    return out


def jacobi_integrate(g: Geodesic, J0, dJ0, S: int = 256) -> JacobiField:
    if S < 16:
        raise ValueError("need at least 16 nodes")
    c = g.space.K * g.speed
    y0 = np.concatenate([_components(g, J0), _components(g, dJ0)])
    ys = _rk4(c * c, y0, S)
    s = np.linspace(0.0, 1.0, S + 1)
    pts = g.point(s)
    e1, e2 = g.frame()
    E1, E2 = g.transport(e1, s), g.transport(e2, s)
    J = ys[:, 0] * E1 + ys[:, 1] * E2
    dJ = ys[:, 2] * E1 + ys[:, 3] * E2
    return JacobiField(g, s, pts, J, dJ, ys[:, :2].copy(), ys[:, 2:].copy())


def _d1_fourth_order(y: np.ndarray, h: float) -> np.ndarray:
    """First derivative at nodes 1..n-2 with five-point stencils."""
    n = len(y)
    d = np.empty((n - 2,) + y.shape[1:])
    d[1:-1] = (y[:-4] - 8 * y[1:-3] + 8 * y[3:-1] - y[4:]) / (12 * h)
    d[0] = (-3 * y[0] - 10 * y[1] + 18 * y[2] - 6 * y[3] + y[4]) / (12 * h)
    d[-1] = (3 * y[-1] + 10 * y[-2] - 18 * y[-3] + 6 * y[-4] - y[-5]) / (12 * h)
    return d


def jacobi_residual(field: JacobiField) -> np.ndarray:
    """|nabla nabla J - R(g', J) g'| at the interior nodes."""
    g = field.geodesic
    sp = g.space
    e1, e2 = g.frame()
    E1, E2 = g.transport(e1, field.s), g.transport(e2, field.s)
    vel = g.transport(g.velocity, field.s)
    RJ = hg.curvature_apply(sp, field.points, vel, field.J)
    Rc = np.stack([hg.inner(sp, field.points, E1, RJ), hg.inner(sp, field.points, E2, RJ)], axis=1)
    h = field.s[1] - field.s[0]
    acc = _d1_fourth_order(field.dcomps, h)
    return np.linalg.norm(acc - Rc[1:-1], axis=1)


def index_form(g: Geodesic, field: JacobiField) -> float:
    sp = g.space
    vel = g.transport(g.velocity, field.s)
    curv = hg.inner(sp, field.points, hg.curvature_apply(sp, field.points, vel, field.J), field.J)
    kin = hg.inner(sp, field.points, field.dJ, field.dJ)
    return float(simpson(curv + kin, x=field.s))


def index_min(g: Geodesic, T, S: int = 256) -> float:
    """Minimum of E over Jacobi fields with J(0) = T.

    The minimiser has nabla J(1) = 0; the initial derivative is found by
    shooting with two unit initial derivatives and one 2x2 solve.
    """
    if g.speed == 0.0:
        return 0.0
    e1, e2 = g.frame()
    base = jacobi_integrate(g, T, 0j, S).dcomps[-1]
    M = np.column_stack(
        [jacobi_integrate(g, 0j, e, S).dcomps[-1] for e in (e1, e2)]
    )
    x = np.linalg.solve(M, -base)
    field = jacobi_integrate(g, T, x[0] * e1 + x[1] * e2, S)
    return index_form(g, field)


def index_lower_bound(g: Geodesic, T, b: float) -> float:
    """b L tanh(b L) (|T|^2 - L^-2 (g'.T)^2) for curvature <= -b^2."""
    L = g.speed
    if L == 0.0:
        return 0.0
    sp, z = g.space, g.start
    tt = hg.inner(sp, z, T, T)
    tv = hg.inner(sp, z, g.velocity, T)
    return float(b * L * np.tanh(b * L) * max(tt - tv**2 / L**2, 0.0))
