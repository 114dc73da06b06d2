"""Mesh-refinement table: identity floor, distance-squared discrepancy, lambda_0.

For each h the script prints the identity-map tension (the harmonic floor),
the relative discrepancy of the distance-squared identity for the pair
(identity, Mobius(a)), and the Dirichlet ground-state estimate, followed by
empirical orders between consecutive rows.
"""
import argparse

from hypflow import hyperbolic as hg
from hypflow.mesh import MapField, identity_map, lambda0_estimate, mesh_generate
from hypflow.suites import empirical_orders
from hypflow.verification import MapPair, discretization_floor, distsq_check


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--R-max", type=float, default=3.0)
    ap.add_argument("--hs", default="0.2,0.1,0.05")
    ap.add_argument("--a", type=float, default=0.3)
    args = ap.parse_args()
    hs = [float(s) for s in args.hs.split(",")]
    m = hg.Mobius(args.a, 0.0)

    rows = []
    print(f"{'h':>6} {'vertices':>9} {'floor':>10} {'distsq':>10} {'lambda0':>10}")
    for h in hs:
        mesh = mesh_generate(args.R_max, h)
        pair = MapPair.from_maps(identity_map(mesh), MapField(m(mesh.vertices)))
        row = (discretization_floor(mesh), distsq_check(mesh, pair, drop_tension=True), lambda0_estimate(mesh))
        rows.append(row)
        print(f"{h:6.3f} {mesh.n_vertices:9d} {row[0]:10.5f} {row[1]:10.5f} {row[2]:10.5f}")
    if len(hs) > 1:
        print("orders  floor:", [round(o, 3) for o in empirical_orders(hs, [r[0] for r in rows])])
        print("orders distsq:", [round(o, 3) for o in empirical_orders(hs, [r[1] for r in rows])])


if __name__ == "__main__":
    main()
