"""Poincare disk geometry with metric 4|dz|^2 / (K^2 (1-|z|^2)^2), curvature -K^2.

Interior points are complex numbers with |z| < 1.  Tangent vectors are complex
numbers holding coordinate components; the base point is always passed
separately.  Boundary points are real angles and go through the ``*_angle``
functions, so |z| = 1 never reaches a metric formula.

Everything broadcasts over numpy arrays.  Geodesics, logarithms and transport
do not depend on K (rescaling the metric keeps its geodesics); lengths and
curvature do.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class Space:
    K: float = 1.0

    def __post_init__(self):
        if not (self.K > 0 and np.isfinite(self.K)):
            raise ValueError(f"curvature scale must be positive, got {self.K}")


DOMAIN = Space(1.0)


def check_interior(z):
    if np.any(~np.isfinite(z)) or np.any(np.abs(z) >= 1.0):
        raise ValueError("points must lie strictly inside the unit disk")


def conformal_factor(sp: Space, z):
    """lambda(z) with g = lambda^2 |dz|^2."""
    return 2.0 / (sp.K * (1.0 - np.abs(z) ** 2))


def inner(sp: Space, z, v, w):
    return conformal_factor(sp, z) ** 2 * np.real(np.conj(v) * w)


def norm(sp: Space, z, v):
    return conformal_factor(sp, z) * np.abs(v)


def to_frame(sp: Space, z, v):
    """Coordinates -> components in the orthonormal frame (d_x, d_y)/lambda."""
    return conformal_factor(sp, z) * v


def from_frame(sp: Space, z, c):
    return c / conformal_factor(sp, z)


def _to_origin(z, w):
    # the disk automorphism that sends z to 0 and fixes the direction of the diameter
    return (w - z) / (1.0 - np.conj(z) * w)


def _from_origin(z, w):
    return (w + z) / (1.0 + np.conj(z) * w)


@dataclass(frozen=True)
class Mobius:
    """z -> e^{i rot} (z - a) / (1 - conj(a) z); sends a to 0."""

    a: complex = 0j
    rot: float = 0.0

    def __post_init__(self):
        if not abs(self.a) < 1.0:
            raise ValueError(f"|a| must be < 1, got {abs(self.a)}")
        object.__setattr__(self, "a", complex(self.a))
        object.__setattr__(self, "rot", float(np.mod(self.rot, TWO_PI)))

    @classmethod
    def identity(cls) -> "Mobius":
        return cls(0j, 0.0)

    def __call__(self, z):
        return mobius_apply(self, z)

    def derivative(self, z):
        return np.exp(1j * self.rot) * (1.0 - abs(self.a) ** 2) / (1.0 - np.conj(self.a) * z) ** 2


def mobius_apply(m: Mobius, z):
    return np.exp(1j * m.rot) * (z - m.a) / (1.0 - np.conj(m.a) * z)


def mobius_apply_angle(m: Mobius, theta):
    """Action on boundary angles, continuous in theta (a lift of degree one)."""
    theta = np.asarray(theta, dtype=float)
    q = 1.0 - m.a * np.exp(-1j * theta)
    return theta + m.rot + 2.0 * np.angle(q)


def mobius_compose(m1: Mobius, m2: Mobius) -> Mobius:
    """The map z -> m1(m2(z))."""
    a = mobius_apply(mobius_inverse(m2), m1.a)
    d = m1.derivative(m1.a) * m2.derivative(a)
    return Mobius(a, float(np.angle(d)))


def mobius_inverse(m: Mobius) -> Mobius:
    return Mobius(-np.exp(1j * m.rot) * m.a, -m.rot)


def hyp_distance(sp: Space, z, w):
    return (2.0 / sp.K) * np.arctanh(np.minimum(np.abs(_to_origin(z, w)), 1.0))


def exp_map(sp: Space, z, v):
    """Follow the geodesic from z with initial velocity v for unit time."""
    u = v / (1.0 - np.abs(z) ** 2)
    r = np.abs(u)
    with np.errstate(invalid="ignore", divide="ignore"):
        scale = np.where(r > 1e-300, np.tanh(r) / np.where(r > 0, r, 1.0), 1.0)
    return _from_origin(z, u * scale)


def log_map(sp: Space, z, w):
    a = _to_origin(z, w)
    r = np.abs(a)
    with np.errstate(invalid="ignore", divide="ignore"):
        scale = np.where(r > 1e-300, np.arctanh(r) / np.where(r > 0, r, 1.0), 1.0)
    return (1.0 - np.abs(z) ** 2) * a * scale


def transport_rotation(z, w):
    """Unit complex number: parallel transport z -> w in orthonormal-frame components.

    The transvection along the geodesic through z and w is
    phi_{-z} o phi_{-a} o phi_z with a = phi_z(w); its differential at z is
    (1-|a|^2)/(1 + conj(z) a)^2, a positive multiple of the returned rotation.
    """
    a = _to_origin(z, w)
    q = 1.0 + np.conj(z) * a
    return (np.conj(q) / np.abs(q)) ** 2


def parallel_transport(sp: Space, z, w, v):
    a = _to_origin(z, w)
    return (1.0 - np.abs(a) ** 2) / (1.0 + np.conj(z) * a) ** 2 * v


def curvature_apply(sp: Space, z, X, v):
    """R(X, v)X = K^2 (|X|^2 v - (X.v) X), so that v.R(X,v)X >= 0."""
    return sp.K**2 * (inner(sp, z, X, X) * v - inner(sp, z, X, v) * X)


def sectional_curvature(sp: Space, z, X, v):
    area2 = inner(sp, z, X, X) * inner(sp, z, v, v) - inner(sp, z, X, v) ** 2
    return -inner(sp, z, X, curvature_apply(sp, z, v, X)) / area2


def geodesic_point(sp: Space, z, v, s):
    return exp_map(sp, z, s * v)
