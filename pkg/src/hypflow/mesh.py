"""Triangulated truncated hyperbolic disk and the discrete operators on it.

The domain is the unit-curvature disk cut off at hyperbolic radius ``R_max``.
Stiffness weights are the cotangent weights of the triangles drawn in disk
coordinates; in two dimensions the Dirichlet energy is conformally invariant,
so these are also the weights for the hyperbolic metric.  Vertex masses are the
signed circumcentric (Voronoi) areas times the conformal factor squared.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sps
from scipy.spatial import Delaunay

from . import hyperbolic as hg
from .errors import DegenerateStencil
from .linalg import inverse_power

GOLDEN_ANGLE = np.pi * (3.0 - np.sqrt(5.0))


@dataclass(eq=False)
class Mesh:
    vertices: np.ndarray
    triangles: np.ndarray
    boundary: np.ndarray
    R_max: float
    h: float

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=complex)
        self.triangles = np.asarray(self.triangles, dtype=np.int64)
        self.boundary = np.asarray(self.boundary, dtype=bool)
        hg.check_interior(self.vertices)
        # counter-clockwise orientation in disk coordinates
        p = self.vertices[self.triangles]
        cross = np.imag(np.conj(p[:, 1] - p[:, 0]) * (p[:, 2] - p[:, 0]))
        flip = cross < 0
        self.triangles[flip] = self.triangles[flip][:, [0, 2, 1]]

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @cached_property
    def interior(self) -> np.ndarray:
        return np.flatnonzero(~self.boundary)

    @cached_property
    def _edge_data(self):
        t = self.triangles
        p = self.vertices
        rows, cols, vals = [], [], []
        area = np.zeros(self.n_vertices)
        for k in range(3):
            a, b, c = t[:, k], t[:, (k + 1) % 3], t[:, (k + 2) % 3]
            u, v = p[b] - p[a], p[c] - p[a]
            cot = np.real(np.conj(u) * v) / np.imag(np.conj(u) * v)
            rows.append(np.minimum(b, c))
            cols.append(np.maximum(b, c))
            vals.append(0.5 * cot)
            opp = np.abs(p[b] - p[c]) ** 2 * cot / 8.0
            np.add.at(area, b, opp)
            np.add.at(area, c, opp)
        W = sps.coo_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(self.n_vertices,) * 2,
        ).tocsr()
        W.sum_duplicates()
        W = W.tocoo()
        edges = np.column_stack([W.row, W.col])
        area *= hg.conformal_factor(hg.DOMAIN, p) ** 2
        return edges, W.data.copy(), area

    @property
    def edges(self) -> np.ndarray:
        """Undirected edges (i < j)."""
        return self._edge_data[0]

    @property
    def weights(self) -> np.ndarray:
        """Cotangent weight per edge, 0.5 (cot a + cot b)."""
        return self._edge_data[1]

    @property
    def dual_area(self) -> np.ndarray:
        return self._edge_data[2]

    @cached_property
    def half_edges(self):
        """(src, dst, weight) with both orientations of every edge."""
        e, w = self.edges, self.weights
        return (
            np.concatenate([e[:, 0], e[:, 1]]),
            np.concatenate([e[:, 1], e[:, 0]]),
            np.concatenate([w, w]),
        )

    @cached_property
    def stiffness(self) -> sps.csr_matrix:
        """S with f.S.f = sum_edges w_ij (f_i - f_j)^2; Laplacian = -S / area."""
        e, w = self.edges, self.weights
        n = self.n_vertices
        S = sps.coo_matrix(
            (np.concatenate([-w, -w]), (np.concatenate([e[:, 0], e[:, 1]]), np.concatenate([e[:, 1], e[:, 0]]))),
            shape=(n, n),
        ).tocsr()
        S = S + sps.diags(-np.asarray(S.sum(axis=1)).ravel())
        return S.tocsr()

    @cached_property
    def ring_distance(self) -> np.ndarray:
        """Hyperbolic distance of each vertex from the centre of the disk."""
        return hg.hyp_distance(hg.DOMAIN, 0j, self.vertices)

    def collar_mask(self, width: float) -> np.ndarray:
        """Interior vertices farther than ``width`` from the truncation boundary."""
        keep = ~self.boundary & (self.ring_distance <= self.R_max - width + 1e-9)
        return keep

    @cached_property
    def domain_logs(self) -> np.ndarray:
        """Orthonormal-frame components of log_{x_src}(x_dst) per half edge."""
        src, dst, _ = self.half_edges
        x = self.vertices
        return hg.to_frame(hg.DOMAIN, x[src], hg.log_map(hg.DOMAIN, x[src], x[dst]))

    @cached_property
    def _ls_inverse(self) -> np.ndarray:
        src, _, _ = self.half_edges
        d = _c2r(self.domain_logs)
        G = np.zeros((self.n_vertices, 2, 2))
        np.add.at(G, src, d[:, :, None] * d[:, None, :])
        det = np.linalg.det(G)
        scale = np.einsum("nii->n", G) ** 2
        bad = np.flatnonzero(det <= 1e-12 * scale)
        if len(bad):
            raise DegenerateStencil(f"one-ring logs do not span the plane at vertex {bad[0]}")
        return np.linalg.inv(G)

    @cached_property
    def fit_laplacian(self) -> sps.csr_matrix:
        """Pointwise Laplacian from a quadratic least-squares fit over the two-ring.

        In normal coordinates at x the Laplacian is the trace of the Hessian of
        f o exp_x at 0, so fitting f(x_j) - f(x) by a quadratic in the frame
        components of log_x(x_j) gives a stencil that is consistent at every
        vertex.  The cotangent Laplacian only converges in the weak sense on
        irregular stencils.  Boundary rows are zero.
        """
        n = self.n_vertices
        e = self.edges
        adj = sps.coo_matrix((np.ones(len(e)), (e[:, 0], e[:, 1])), shape=(n, n)).tocsr()
        adj = adj + adj.T
        ring2 = ((adj + adj @ adj) > 0).tolil()
        ring2.setdiag(0)
        ring2 = ring2.tocsr()
        ring2.eliminate_zeros()
        counts = np.diff(ring2.indptr)
        rows, cols, vals = [], [], []
        for c in np.unique(counts[self.interior]):
            ids = self.interior[counts[self.interior] == c]
            nb = np.stack([ring2.indices[ring2.indptr[i]:ring2.indptr[i + 1]] for i in ids])
            x = self.vertices[ids][:, None]
            d = hg.to_frame(hg.DOMAIN, x, hg.log_map(hg.DOMAIN, x, self.vertices[nb]))
            dx, dy = d.real, d.imag
            V = np.stack([dx, dy, 0.5 * dx * dx, dx * dy, 0.5 * dy * dy], axis=-1)
            P = np.linalg.pinv(V)
            w = P[:, 2] + P[:, 4]
            rows.append(np.repeat(ids, c))
            cols.append(nb.ravel())
            vals.append(w.ravel())
            rows.append(ids)
            cols.append(ids)
            vals.append(-w.sum(axis=1))
        return sps.coo_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n)
        ).tocsr()


@dataclass
class MapField:
    """Per-vertex images u(x_i) in a target disk of curvature -K^2."""

    points: np.ndarray
    space: hg.Space = field(default_factory=hg.Space)

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=complex)
        hg.check_interior(self.points)

    def copy(self) -> "MapField":
        return MapField(self.points.copy(), self.space)


@dataclass
class SectionField:
    """Tangent vectors (coordinate components) based at the images of a MapField."""

    base: MapField
    vectors: np.ndarray

    def norms(self) -> np.ndarray:
        return hg.norm(self.base.space, self.base.points, self.vectors)

    def frame(self) -> np.ndarray:
        return hg.to_frame(self.base.space, self.base.points, self.vectors)


def _c2r(z):
    return np.stack([np.real(z), np.imag(z)], axis=-1)


def mesh_generate(R_max: float, h: float) -> Mesh:
    """Concentric rings at radii j h, ring j carrying ceil(2 pi sinh(j h) / h) vertices.

    Rings are rotated by multiples of the golden angle so that consecutive rings
    do not line up; the triangulation is the Delaunay triangulation of the
    points in disk coordinates (hyperbolic and Euclidean Delaunay coincide in
    this model).
    """
    if not (0 < h <= R_max / 2 + 1e-12):
        raise ValueError(f"need 0 < h <= R_max/2, got h={h}, R_max={R_max}")
    n_rings = int(np.floor(R_max / h + 1e-9))
    pts = [np.zeros(1, dtype=complex)]
    for j in range(1, n_rings + 1):
        n = int(np.ceil(2 * np.pi * np.sinh(j * h) / h - 1e-9))
        theta = j * GOLDEN_ANGLE + 2 * np.pi * np.arange(n) / n
        pts.append(np.tanh(j * h / 2) * np.exp(1j * theta))
    z = np.concatenate(pts)
    tri = Delaunay(np.column_stack([z.real, z.imag])).simplices
    boundary = np.zeros(len(z), dtype=bool)
    boundary[-len(pts[-1]):] = True
    return Mesh(z, tri, boundary, float(n_rings * h), float(h))


def identity_map(mesh: Mesh, space: hg.Space | None = None) -> MapField:
    return MapField(mesh.vertices.copy(), space or hg.Space())


def target_logs(mesh: Mesh, u: MapField) -> np.ndarray:
    """Coordinate components of log_{u(src)} u(dst) per half edge."""
    src, dst, _ = mesh.half_edges
    return hg.log_map(u.space, u.points[src], u.points[dst])


def differentials(mesh: Mesh, u: MapField) -> np.ndarray:
    """Least-squares framed differential at every vertex, shape (n, 2, 2).

    Solves log_{u(x)} u(x_j) ~ A log_x(x_j) over the one-ring, both sides in
    orthonormal frames.
    """
    src, _, _ = mesh.half_edges
    t = _c2r(hg.to_frame(u.space, u.points[src], target_logs(mesh, u)))
    d = _c2r(mesh.domain_logs)
    B = np.zeros((mesh.n_vertices, 2, 2))
    np.add.at(B, src, t[:, :, None] * d[:, None, :])
    return B @ mesh._ls_inverse


def differential(mesh: Mesh, u: MapField, vertex: int) -> np.ndarray:
    return differentials(mesh, u)[vertex]


def section_derivatives(mesh: Mesh, sec: SectionField) -> np.ndarray:
    """Least-squares covariant derivative of a section, shape (n, 2, 2).

    Neighbour values are parallel transported into the fibre at u(x) before
    differencing.
    """
    src, dst, _ = mesh.half_edges
    u = sec.base
    c = sec.frame()
    moved = c[dst] * hg.transport_rotation(u.points[dst], u.points[src])
    diff = _c2r(moved - c[src])
    d = _c2r(mesh.domain_logs)
    B = np.zeros((mesh.n_vertices, 2, 2))
    np.add.at(B, src, diff[:, :, None] * d[:, None, :])
    return B @ mesh._ls_inverse


def tension_field(mesh: Mesh, u: MapField) -> SectionField:
    """(1/area_i) sum_j w_ij log_{u_i} u_j at interior vertices, 0 on the boundary."""
    src, _, w = mesh.half_edges
    acc = np.zeros(mesh.n_vertices, dtype=complex)
    np.add.at(acc, src, w * target_logs(mesh, u))
    acc /= mesh.dual_area
    acc[mesh.boundary] = 0.0
    return SectionField(u, acc)


def energy_density(mesh: Mesh, u: MapField) -> np.ndarray:
    A = differentials(mesh, u)
    return np.einsum("nij,nij->n", A, A)


def singular_values(mesh: Mesh, u: MapField) -> np.ndarray:
    return np.linalg.svd(differentials(mesh, u), compute_uv=False)


def nondegeneracy(mesh: Mesh, u: MapField, mask: np.ndarray | None = None) -> float:
    """tau[u]: the smallest singular value of du over interior vertices.

    In two dimensions |du|^2 - max_{|v|=1} |du(v)|^2 is the square of the
    smaller singular value.
    """
    sv = singular_values(mesh, u)[:, 1]
    sel = ~mesh.boundary if mask is None else mask
    return float(sv[sel].min())


def laplacian_scalar(mesh: Mesh, f: np.ndarray) -> np.ndarray:
    out = -(mesh.stiffness @ np.asarray(f, dtype=float)) / mesh.dual_area
    out[mesh.boundary] = 0.0
    return out


def laplacian_fit(mesh: Mesh, f: np.ndarray) -> np.ndarray:
    """Pointwise-consistent Laplace-Beltrami (see Mesh.fit_laplacian); 0 on the boundary."""
    return mesh.fit_laplacian @ np.asarray(f, dtype=float)


def local_norm(mesh: Mesh, values, p: float, rho: float) -> float:
    """max_x ( sum_{y in B(x, rho)} |f(y)|^p area(y) )^(1/p)."""
    if not (1 <= p < np.inf) or rho <= 0:
        raise ValueError("need 1 <= p < inf and rho > 0")
    if isinstance(values, SectionField):
        values = values.norms()
    wp = np.abs(np.asarray(values, dtype=float)) ** p * mesh.dual_area
    if rho >= 2 * mesh.R_max:
        return float(wp.sum() ** (1.0 / p))
    x = mesh.vertices
    best = 0.0
    for start in range(0, len(x), 512):
        blk = x[start:start + 512, None]
        inside = hg.hyp_distance(hg.DOMAIN, blk, x[None, :]) <= rho
        best = max(best, float((inside @ wp).max()))
    return best ** (1.0 / p)


def global_norm(mesh: Mesh, values, p: float) -> float:
    if isinstance(values, SectionField):
        values = values.norms()
    v = np.abs(np.asarray(values, dtype=float))
    if np.isinf(p):
        return float(v.max())
    return float((v**p @ mesh.dual_area) ** (1.0 / p))


def lambda0_estimate(mesh: Mesh, tol: float = 1e-10, max_iter: int = 2000, return_vector: bool = False):
    """Bottom of the Dirichlet spectrum of -Laplacian on the truncated disk."""
    I = mesh.interior
    S = mesh.stiffness[I][:, I].tocsc()
    lam, vec = inverse_power(S, mesh.dual_area[I], tol=tol, max_iter=max_iter)
    if return_vector:
        full = np.zeros(mesh.n_vertices)
        full[I] = vec
        return lam, full
    return lam
