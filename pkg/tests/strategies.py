import numpy as np
from hypothesis import strategies as st

from hypflow.hyperbolic import Mobius


@st.composite
def disk_points(draw, rmax=0.95):
    r = draw(st.floats(0.0, rmax))
    t = draw(st.floats(0.0, 2 * np.pi))
    return complex(r * np.cos(t), r * np.sin(t))


@st.composite
def mobius_maps(draw, rmax=0.8):
    return Mobius(draw(disk_points(rmax)), draw(st.floats(0.0, 2 * np.pi)))


@st.composite
def tangent_vectors(draw, base, max_len=3.0):
    """Coordinate vector at ``base`` whose hyperbolic (K=1) length is at most max_len."""
    r = draw(st.floats(0.0, max_len))
    t = draw(st.floats(0.0, 2 * np.pi))
    return r * np.exp(1j * t) * (1 - abs(base) ** 2) / 2
