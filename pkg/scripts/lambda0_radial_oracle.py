"""Reference Dirichlet eigenvalues of the hyperbolic disk of radius R.

The radial ground state solves f'' + coth(r) f' + lam f = 0 with f regular at
0 and f(R) = 0.  Shooting in lam with a root bracket gives the value the mesh
estimate converges to.  The printed numbers are frozen in tests/test_mesh.py.
"""
import argparse

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq


def endpoint(lam, R, r0=1e-6):
    # series start: f = 1 - lam r^2 / 4 near the origin
    def rhs(r, y):
        return [y[1], -y[1] / np.tanh(r) - lam * y[0]]

    sol = solve_ivp(rhs, (r0, R), [1 - lam * r0**2 / 4, -lam * r0 / 2], rtol=1e-12, atol=1e-14)
    return sol.y[0, -1]


def dirichlet_lambda0(R):
    # bracket the first sign change of f(R) in lam
    grid = np.linspace(0.25, 60.0, 600)
    vals = [endpoint(l, R) for l in grid]
    k = next(i for i in range(len(grid) - 1) if vals[i] * vals[i + 1] < 0)
    return brentq(endpoint, grid[k], grid[k + 1], args=(R,), xtol=1e-14)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("radii", nargs="*", type=float, default=[1.0, 2.0, 3.0])
    for R in ap.parse_args().radii:
        print(R, repr(dirichlet_lambda0(R)))


if __name__ == "__main__":
    main()
