"""Brute-force reference values for the barycentric extension.

Scans a 400 x 400 grid over the disk of radius 0.5 for the minimiser of |F|,
then refines by repeated bisection of a shrinking box.  F is evaluated here
with its own trapezoid rule (2048 nodes), independent of the package solver.
The printed values are frozen in tests/test_douady_earle.py.
"""
import argparse

import numpy as np


def field(U, x, y, n=2048):
    th = 2 * np.pi * np.arange(n) / n
    e = np.exp(1j * th)
    pulled = (e + x) / (1 + np.conj(x) * e)
    zeta = np.exp(1j * U(np.angle(pulled)))
    y = np.asarray(y)[..., None]
    return np.mean((zeta - y) / (1 - np.conj(y) * zeta), axis=-1)


def brute_force(U, x, radius=0.5, n_grid=400, n_refine=60):
    g = np.linspace(-radius, radius, n_grid)
    Y = g[:, None] + 1j * g[None, :]
    Y = Y[np.abs(Y) < radius]
    best = None
    for chunk in np.array_split(Y, 64):
        F = np.abs(field(U, x, chunk))
        k = np.argmin(F)
        if best is None or F[k] < best[1]:
            best = (chunk[k], F[k])
    y, half = best[0], g[1] - g[0]
    for _ in range(n_refine):
        # 5 x 5 sub-grid of the current box, keep the best cell and halve the box
        s = np.linspace(-half, half, 5)
        cand = (y + s[:, None] + 1j * s[None, :]).ravel()
        y = cand[np.argmin(np.abs(field(U, x, cand)))]
        half /= 2
    return complex(y), float(abs(field(U, x, y)))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--eps", type=float, default=0.2)
    ap.add_argument("--k", type=int, default=2)
    args = ap.parse_args()
    U = lambda t: t + args.eps * np.sin(args.k * t)  # noqa: E731
    for x in (0j, 0.3 + 0.1j, -0.2 + 0.35j):
        y, r = brute_force(U, x)
        print(f"x={x!r}: y={y!r} |F|={r:.2e}")


if __name__ == "__main__":
    main()
