"""Numerical checks of the distance-squared identity, subharmonicity,
uniqueness of harmonic limits and the quasiisometry property.

Pointwise checks skip a collar of width 2h at the truncation boundary, where
the Dirichlet cut pollutes discrete derivatives.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.integrate import simpson

from . import hyperbolic as hg
from .flow import FlowConfig, run_flow
from .mesh import (
    MapField,
    Mesh,
    SectionField,
    differentials,
    identity_map,
    laplacian_fit,
    laplacian_scalar,
    section_derivatives,
    tension_field,
)

log = logging.getLogger(__name__)


def discretization_floor(mesh: Mesh, space: hg.Space | None = None) -> float:
    """sup |tension| of the identity map: the smallest tension a harmonic map shows on this mesh."""
    u = identity_map(mesh, space)
    return float(tension_field(mesh, u).norms().max())


@dataclass
class MapPair:
    """u1 = exp_{u0}(v), with v recovered by the logarithm."""

    u0: MapField
    u1: MapField
    v: SectionField

    @classmethod
    def from_maps(cls, u0: MapField, u1: MapField) -> "MapPair":
        if u0.space != u1.space or u0.points.shape != u1.points.shape:
            raise ValueError("maps must share a mesh and a target")
        v = hg.log_map(u0.space, u0.points, u1.points)
        return cls(u0, u1, SectionField(u0, v))

    def at(self, s: float):
        """(u_s, v_s): the point at parameter s along each geodesic and its velocity."""
        sp, p = self.u0.space, self.u0.points
        us = hg.exp_map(sp, p, s * self.v.vectors)
        vs = hg.parallel_transport(sp, p, us, self.v.vectors)
        return MapField(us, sp), SectionField(MapField(us, sp), vs)


def _frame_dot(a, b):
    return np.real(np.conj(a) * b)


_LAPLACIANS = {"fit": laplacian_fit, "cotan": laplacian_scalar}


def distsq_sides(mesh: Mesh, pair: MapPair, S: int = 16, laplacian: str = "fit", drop_tension: bool = False):
    """(LHS, RHS) of  Delta d^2 = 2 ( <v_1, tau(u_1)> - <v, tau(u_0)> + int_0^1 Q_s ds )

    with Q_s = sum_i <R(v_s, d_i u_s) v_s, d_i u_s> + |nabla v_s|^2.
    The LHS uses the fitted pointwise Laplacian by default; ``"cotan"``
    selects the weak-form cotangent operator.  With ``drop_tension`` the two
    boundary terms are taken as 0, their exact value when both maps are
    harmonic; the discrete tension of a harmonic map is only O(h).
    """
    if S < 8:
        raise ValueError("need at least 8 quadrature intervals")
    S += S % 2
    sp = pair.u0.space
    delta = hg.hyp_distance(sp, pair.u0.points, pair.u1.points) ** 2
    lhs = _LAPLACIANS[laplacian](mesh, delta)

    s = np.linspace(0.0, 1.0, S + 1)
    Q = np.empty((S + 1, mesh.n_vertices))
    for k, sk in enumerate(s):
        us, vs = pair.at(sk)
        vf = vs.frame()
        A = differentials(mesh, us)
        v2 = np.stack([vf.real, vf.imag], -1)
        Atv = np.einsum("nij,ni->nj", A, v2)
        curv = sp.K**2 * (np.abs(vf) ** 2 * np.einsum("nij,nij->n", A, A) - np.einsum("nj,nj->n", Atv, Atv))
        D = section_derivatives(mesh, vs)
        Q[k] = curv + np.einsum("nij,nij->n", D, D)
    integral = simpson(Q, x=s, axis=0)

    if drop_tension:
        return lhs, 2.0 * integral
    _, v1s = pair.at(1.0)
    t0 = tension_field(mesh, pair.u0).frame()
    t1 = tension_field(mesh, pair.u1).frame()
    rhs = 2.0 * (_frame_dot(v1s.frame(), t1) - _frame_dot(pair.v.frame(), t0) + integral)
    return lhs, rhs


def distsq_check(mesh: Mesh, pair: MapPair, S: int = 16, laplacian: str = "fit",
                 drop_tension: bool = False) -> float:
    """max |LHS - RHS| / (1 + |LHS|) over collar-excluded interior vertices."""
    lhs, rhs = distsq_sides(mesh, pair, S, laplacian, drop_tension)
    sel = mesh.collar_mask(2 * mesh.h)
    return float(np.max(np.abs(lhs - rhs)[sel] / (1.0 + np.abs(lhs[sel]))))


def subharmonicity_slack(mesh: Mesh, delta: np.ndarray, tau: float, K: float, factor: float = 1.0,
                         laplacian: str = "cotan"):
    """Per-vertex  Delta delta - factor K tau^2 sqrt(delta) tanh(K sqrt(delta))."""
    r = np.sqrt(np.maximum(delta, 0.0))
    return _LAPLACIANS[laplacian](mesh, delta) - factor * K * tau**2 * r * np.tanh(K * r)


def subharmonicity_check(mesh: Mesh, u0: MapField, u1: MapField, tau: float | None = None,
                         factor: float = 1.0, laplacian: str = "cotan") -> float:
    """Minimum slack over the collar-excluded interior."""
    sp = u0.space
    if tau is None:
        sel = mesh.collar_mask(2 * mesh.h)
        tau = float(np.linalg.svd(differentials(mesh, u0)[sel], compute_uv=False)[:, 1].min())
    delta = hg.hyp_distance(sp, u0.points, u1.points) ** 2
    slack = subharmonicity_slack(mesh, delta, tau, sp.K, factor, laplacian)
    return float(slack[mesh.collar_mask(2 * mesh.h)].min())


def interior_bump(mesh: Mesh, u: MapField, magnitude: float, radius: float | None = None,
                  direction: complex = 1.0) -> MapField:
    """Move u by up to ``magnitude`` (hyperbolic) with a bump supported in B(0, radius)."""
    radius = mesh.R_max / 2 if radius is None else radius
    r = mesh.ring_distance / radius
    b = np.where(r < 1, (1 - r**2) ** 2, 0.0)
    frame = magnitude * b * direction / abs(direction)
    v = hg.from_frame(u.space, u.points, frame)
    return MapField(hg.exp_map(u.space, u.points, v), u.space)


def uniqueness_experiment(mesh: Mesh, u0: MapField, magnitudes=(0.1, 0.2),
                          config: FlowConfig | None = None) -> dict:
    """Flow u0 and bumped copies of it; report sup distances between the limits."""
    config = config or FlowConfig(dt=0.1, t_end=12.0)
    ref, ref_diag = run_flow(mesh, u0, config)
    out = {"reference_tension": ref_diag.records[-1]["tension_inf"], "runs": []}
    for mag in magnitudes:
        if mag == 0:
            lim = ref
            tension = out["reference_tension"]
        else:
            lim, d = run_flow(mesh, interior_bump(mesh, u0, mag), config)
            tension = d.records[-1]["tension_inf"]
        dist = float(hg.hyp_distance(u0.space, ref.points, lim.points).max())
        out["runs"].append({"magnitude": float(mag), "sup_distance": dist, "final_tension": tension,
                            "limit": lim})
    out["reference"] = ref
    return out


def quasiisometry_check(mesh: Mesh, u: MapField, mask: np.ndarray | None = None):
    """(sigma, hessian sup).

    sigma^2 is the largest of lambda_max(u*g / g) and 1 / lambda_min over the
    selected vertices.  The Hessian is the framed difference of du across
    each edge, both frames parallel transported to the source vertex.
    """
    sel = mesh.collar_mask(2 * mesh.h) if mask is None else mask
    A = differentials(mesh, u)
    sv = np.linalg.svd(A[sel], compute_uv=False)
    sigma = float(np.sqrt(max((sv[:, 0] ** 2).max(), (1.0 / sv[:, 1] ** 2).max())))

    src, dst, _ = mesh.half_edges
    keep = sel[src] & sel[dst]
    src, dst = src[keep], dst[keep]
    x, p = mesh.vertices, u.points

    def rot(c):
        return np.stack([np.stack([c.real, -c.imag], -1), np.stack([c.imag, c.real], -1)], -2)

    Rt = rot(hg.transport_rotation(p[dst], p[src]))
    Rd = rot(hg.transport_rotation(x[dst], x[src]))
    moved = Rt @ A[dst] @ np.transpose(Rd, (0, 2, 1))
    dist = hg.hyp_distance(hg.DOMAIN, x[src], x[dst])
    hess = np.linalg.norm(moved - A[src], axis=(1, 2)) / dist
    return sigma, float(hess.max())
