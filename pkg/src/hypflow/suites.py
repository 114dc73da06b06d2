"""Verification suites behind ``hypflow verify``.

Each suite returns a report ``{"suite", "passed", "checks", "context"}``
where every check carries its measured value, threshold and verdict.
"""
from __future__ import annotations

import numpy as np

from . import hyperbolic as hg
from .douady_earle import de_extend_field, make_test_boundary_map
from .flow import FlowConfig, estimate_report, run_flow
from .jacobi import Geodesic, index_lower_bound, index_min
from .mesh import MapField, identity_map, lambda0_estimate, mesh_generate
from .verification import (
    MapPair,
    discretization_floor,
    distsq_check,
    quasiisometry_check,
    subharmonicity_check,
    uniqueness_experiment,
)


def check(name, value, threshold, ok) -> dict:
    return {"name": name, "value": value, "threshold": threshold, "pass": bool(ok)}


def empirical_orders(hs, errors) -> list:
    hs, errors = np.asarray(hs, float), np.asarray(errors, float)
    return [float(np.log(errors[i] / errors[i + 1]) / np.log(hs[i] / hs[i + 1])) for i in range(len(hs) - 1)]


def distsq_suite(R_max=3.0, a=0.3 + 0j, rot=0.0, hs=(0.2, 0.1, 0.05), S=16):
    m = hg.Mobius(a, rot)
    errs = []
    for h in hs:
        mesh = mesh_generate(R_max, h)
        pair = MapPair.from_maps(identity_map(mesh), MapField(m(mesh.vertices)))
        errs.append(distsq_check(mesh, pair, S, drop_tension=True))
    orders = empirical_orders(hs, errs)
    checks = [
        check("distsq_decreasing", errs, "strictly decreasing", all(np.diff(errs) < 0)),
        check("distsq_order", min(orders), 1.0, min(orders) >= 1.0),
        check("distsq_finest", errs[-1], 0.05, errs[-1] < 0.05),
    ]
    return checks, {"h": list(hs), "discrepancy": errs, "orders": orders}


def jacobi_suite(seed=0, n_random=50):
    checks, rows = [], []
    worst = 0.0
    tangential = 0.0
    for K in (1.0, 2.0):
        sp = hg.Space(K)
        for L in (0.5, 1.0, 2.0):
            g = Geodesic(sp, 0j, L / hg.conformal_factor(sp, 0j))
            e1, e2 = g.frame()
            for label, T in (("normal", e2), ("diag45", (e1 + e2) / np.sqrt(2)), ("tangential", e1)):
                got, want = index_min(g, T), index_lower_bound(g, T, K)
                worst = max(worst, abs(got - want))
                if label == "tangential":
                    tangential = max(tangential, abs(got))
                rows.append({"K": K, "L": L, "T": label, "index_min": got, "bound": want})
    checks.append(check("index_equality_case", worst, 1e-6, worst < 1e-6))
    checks.append(check("tangential_zero", tangential, 1e-6, tangential < 1e-6))

    # off the equality case the minimum still dominates the bound
    rng = np.random.default_rng(seed)
    gap = np.inf
    for _ in range(n_random):
        K = float(rng.uniform(0.5, 2.0))
        sp = hg.Space(K)
        z = complex(*rng.uniform(-0.5, 0.5, 2))
        v = complex(*rng.normal(size=2)) * 0.3
        T = complex(*rng.normal(size=2)) * 0.3
        g = Geodesic(sp, z, v)
        b = K * rng.uniform(0.3, 1.0)
        gap = min(gap, index_min(g, T) - index_lower_bound(g, T, b))
    checks.append(check("index_dominates_weaker_bound", float(gap), -1e-8, gap >= -1e-8))
    return checks, {"grid": rows, "seed": seed}


def uniqueness_suite(mesh, bm, config: FlowConfig, magnitudes=(0.1, 0.2), serial=False):
    floor = discretization_floor(mesh)
    u0, _ = de_extend_field(bm, mesh, serial=serial)
    out = uniqueness_experiment(mesh, u0, magnitudes, config)
    checks = []
    for run in out["runs"]:
        checks.append(check(f"same_limit_magnitude_{run['magnitude']:g}", run["sup_distance"], 3 * floor,
                            run["sup_distance"] < 3 * floor))
    slack = subharmonicity_check(mesh, out["reference"], out["runs"][0]["limit"])
    checks.append(check("subharmonicity_slack", slack, -floor, slack >= -floor))
    ctx = {"floor": floor, "reference_tension": out["reference_tension"],
           "runs": [{k: v for k, v in r.items() if k != "limit"} for r in out["runs"]]}
    return checks, ctx


def quasiiso_suite(mesh, eps_ladder=(0.2, 0.1, 0.05), k=2, serial=False):
    sig, hess = [], []
    for eps in eps_ladder:
        u, _ = de_extend_field(make_test_boundary_map("sine", eps=eps, k=k), mesh, serial=serial)
        s, hs = quasiisometry_check(mesh, u)
        sig.append(s)
        hess.append(hs)
    ident = quasiisometry_check(mesh, identity_map(mesh))
    checks = [
        check("sigma_strictly_decreasing", sig, "strictly decreasing", all(np.diff(sig) < 0)),
        check("sigma_above_one", min(sig), 1.0, min(sig) >= 1.0),
        check("hessian_decreasing", hess, "strictly decreasing", all(np.diff(hess) < 0)),
    ]
    return checks, {"eps": list(eps_ladder), "sigma": sig, "hessian": hess, "identity": list(ident)}


def estimates_suite(mesh, bm, config: FlowConfig, serial=False):
    u0, _ = de_extend_field(bm, mesh, serial=serial)
    _, diag = run_flow(mesh, u0, config)
    if len(diag.records) < 10:
        return [check("enough_records", len(diag.records), 10, False)], {}
    rep = estimate_report(diag)
    s_inf, s_2 = rep["decay_slopes"]["tension_inf"], rep["decay_slopes"]["tension_p2"]
    tau0, tau_min = rep["tau"]["initial"], rep["tau"]["min"]
    drift = rep["velocity_ratio"]["drift"]
    checks = [
        check("decay_slope_inf", s_inf, [-1.05, -0.95], -1.05 <= s_inf <= -0.95),
        check("decay_slope_p2", s_2, [-1.05, -0.95], -1.05 <= s_2 <= -0.95),
        check("tau_persistence", tau_min, 0.8 * tau0, tau_min >= 0.8 * tau0),
        check("velocity_ratio_drift", drift, 0.1, drift <= 0.1),
        check("tension_p2_decreasing", rep["monotone"]["tension_p2_decreasing"], True,
              rep["monotone"]["tension_p2_decreasing"]),
        check("dist_sup_nondecreasing", rep["monotone"]["dist_sup_nondecreasing"], True,
              rep["monotone"]["dist_sup_nondecreasing"]),
    ]
    return checks, {"report": rep, "records": len(diag.records)}


def run_suite(name: str, args) -> dict:
    from .cli import boundary_from_args, flow_config_from_args

    mesh = mesh_generate(args.R_max, args.h)
    ctx = {"mesh": {"R_max": mesh.R_max, "h": mesh.h, "vertices": mesh.n_vertices},
           "lambda0": lambda0_estimate(mesh), "floor": discretization_floor(mesh)}
    if name == "distsq":
        checks, extra = distsq_suite(args.R_max, args.a, args.rot)
    elif name == "jacobi":
        checks, extra = jacobi_suite(args.seed)
    elif name == "uniqueness":
        cfg = flow_config_from_args(args)
        cfg.initial_tol = None
        checks, extra = uniqueness_suite(mesh, boundary_from_args(args), cfg, serial=args.serial)
    elif name == "quasiiso":
        checks, extra = quasiiso_suite(mesh, k=args.k, serial=args.serial)
    elif name == "estimates":
        cfg = flow_config_from_args(args)
        cfg.initial_tol = None
        checks, extra = estimates_suite(mesh, boundary_from_args(args), cfg, serial=args.serial)
    else:
        raise ValueError(f"unknown suite {name!r}")
    ctx.update(extra)
    ctx["lambda0_above_quarter"] = ctx["lambda0"] > 0.25
    return {"suite": name, "passed": all(c["pass"] for c in checks), "checks": checks, "context": ctx}
