"""Command line entry point: ``hypflow {mesh,boundary,extend,flow,verify}``.

Exit codes: 0 success / all checks pass, 1 a check failed, 2 bad input,
3 numerical failure.  Each run writes ``manifest.json`` next to its outputs.
"""
from __future__ import annotations

import argparse
import json
import logging
import platform
import sys
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from . import hyperbolic as hg
from .douady_earle import de_extend_field, make_test_boundary_map, quasisymmetry_constant
from .errors import InputError, NumericalFailure
from .fileio import (
    read_boundary,
    read_mapfield,
    read_mesh,
    sha256_file,
    write_boundary,
    write_diagnostics,
    write_json,
    write_mapfield,
    write_mesh,
)
from .flow import FlowConfig, estimate_report, run_flow
from .mesh import mesh_generate

log = logging.getLogger("hypflow")

EXIT_OK, EXIT_CHECK, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2, 3


def read_config_file(path) -> dict:
    """Flat ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read config {path}: {exc}") from exc
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InputError(f"{path}:{n}: expected key = value")
        k, v = (s.strip() for s in line.split("=", 1))
        out[k.replace("-", "_")] = v
    return out


def _apply_config(args, parser):
    if not getattr(args, "config", None):
        return args
    for key, raw in read_config_file(args.config).items():
        if not hasattr(args, key) or key in ("command", "func", "config"):
            raise InputError(f"unknown config key {key!r}")
        current = getattr(args, key)
        action = next((a for a in parser._actions if a.dest == key), None)
        if isinstance(current, bool) or (action is not None and action.nargs == 0):
            value = raw.lower() in ("1", "true", "yes", "on")
        elif action is not None and action.type is not None:
            value = action.type(raw)
        elif current is None:
            value = raw
        else:
            value = type(current)(raw)
        setattr(args, key, value)
    return args


def _floats(text: str) -> tuple:
    return tuple(float(t) for t in str(text).split(",") if t.strip())


def _complex(text: str) -> complex:
    parts = _floats(text)
    if len(parts) == 1:
        return complex(parts[0], 0.0)
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected x,y got {text!r}")
    return complex(*parts)


def boundary_from_args(args):
    if args.kind == "mobius":
        return make_test_boundary_map("mobius", args.M, a=args.a, rot=args.rot)
    if args.kind == "sine":
        return make_test_boundary_map("sine", args.M, eps=args.eps, k=args.k)
    return make_test_boundary_map(args.kind, args.M)


def _manifest(out_dir, args, inputs=(), outputs=(), results=None):
    cfg = {k: v for k, v in sorted(vars(args).items()) if k not in ("func",)}
    doc = {
        "command": args.command,
        "config": {k: (list(v) if isinstance(v, tuple) else (str(v) if isinstance(v, (Path, complex)) else v))
                   for k, v in cfg.items()},
        "versions": {
            "hypflow": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "python": platform.python_version(),
        },
        "inputs": {str(p): sha256_file(p) for p in inputs},
        "outputs": [str(p) for p in outputs],
        "results": results or {},
    }
    write_json(Path(out_dir) / "manifest.json", doc, "manifest")


def cmd_mesh(args):
    mesh = mesh_generate(args.R_max, args.h)
    write_mesh(args.out, mesh)
    res = {"vertices": mesh.n_vertices, "triangles": len(mesh.triangles),
           "boundary_vertices": int(mesh.boundary.sum())}
    _manifest(Path(args.out).parent, args, outputs=[args.out], results=res)
    print(json.dumps(res))
    return EXIT_OK


def cmd_boundary(args):
    bm = boundary_from_args(args)
    write_boundary(args.out, bm)
    res = {"M": bm.M, "quasisymmetry_constant": quasisymmetry_constant(bm)}
    _manifest(Path(args.out).parent, args, outputs=[args.out], results=res)
    print(json.dumps(res))
    return EXIT_OK


def cmd_extend(args):
    bm = read_boundary(args.boundary)
    mesh = read_mesh(args.mesh)
    u, res = de_extend_field(bm, mesh, hg.Space(args.K), tol=args.tol, M=args.quadrature, serial=args.serial)
    write_mapfield(args.out, u)
    summary = {"max_residual": float(res.max()), "mean_residual": float(res.mean()), "vertices": len(res)}
    _manifest(Path(args.out).parent, args, inputs=[args.boundary, args.mesh], outputs=[args.out], results=summary)
    print(json.dumps(summary))
    return EXIT_OK


def flow_config_from_args(args, mesh=None) -> FlowConfig:
    initial = None
    if args.initial_tol == "floor":
        from .verification import discretization_floor

        # the relative allowance absorbs the barycentric solve residual of an extended u0
        initial = discretization_floor(mesh) * (1 + 1e-6) if mesh is not None else None
    elif args.initial_tol not in (None, "none"):
        initial = float(args.initial_tol)
    return FlowConfig(dt=args.dt, t_end=args.t_end, solver_tol=args.solver_tol, p_norms=_floats(args.p_norms),
                      tau_floor=args.tau_floor, converge_tol=args.converge_tol, initial_tol=initial,
                      preconditioner=args.preconditioner)


def cmd_flow(args):
    mesh = read_mesh(args.mesh)
    u0 = read_mapfield(args.map)
    if len(u0.points) != mesh.n_vertices:
        raise InputError("map field and mesh disagree on the vertex count")
    config = flow_config_from_args(args, mesh)
    out = Path(args.out_dir)
    u, diag = run_flow(mesh, u0, config)
    write_mapfield(out / "final_map.txt", u)
    write_diagnostics(out / "diagnostics.csv", diag)
    results = {"records": len(diag.records), "converged": diag.converged, "converged_at": diag.converged_at,
               "final_tension_inf": diag.records[-1]["tension_inf"]}
    outputs = [out / "final_map.txt", out / "diagnostics.csv"]
    if len(diag.records) >= 10:
        results["estimates"] = estimate_report(diag)
        write_json(out / "report.json", results["estimates"], "estimate-report")
        outputs.append(out / "report.json")
    _manifest(out, args, inputs=[args.mesh, args.map], outputs=outputs, results=results)
    print(json.dumps({k: v for k, v in results.items() if k != "estimates"}))
    return EXIT_OK


def cmd_verify(args):
    from . import suites

    report = suites.run_suite(args.suite, args)
    out = Path(args.out_dir)
    write_json(out / f"verify_{args.suite}.json", report, "verification-report")
    _manifest(out, args, outputs=[out / f"verify_{args.suite}.json"],
              results={"passed": report["passed"], "checks": len(report["checks"])})
    for c in report["checks"]:
        print(f"{'PASS' if c['pass'] else 'FAIL'} {c['name']}: value={c['value']} threshold={c['threshold']}")
    return EXIT_OK if report["passed"] else EXIT_CHECK


def _add_flow_args(p):
    p.add_argument("--dt", type=float, default=0.01)
    p.add_argument("--t-end", type=float, default=3.0)
    p.add_argument("--solver-tol", type=float, default=1e-10)
    p.add_argument("--p-norms", default="2")
    p.add_argument("--tau-floor", type=float, default=1e-3)
    p.add_argument("--converge-tol", type=float, default=1e-9)
    p.add_argument("--initial-tol", default="floor",
                   help="accept u0 as harmonic below this tension: a number, 'floor' (identity-map tension) or 'none'")
    p.add_argument("--preconditioner", choices=("lu", "jacobi", "none"), default="lu")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hypflow", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="flat key = value file overriding flags")
        p.add_argument("--serial", action="store_true", help="disable threaded evaluation")
        p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("mesh", help="generate a truncated-disk mesh")
    common(p)
    p.add_argument("--R-max", dest="R_max", type=float, default=3.0)
    p.add_argument("--h", type=float, default=0.1)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_mesh)

    p = sub.add_parser("boundary", help="sample a test boundary map")
    common(p)
    p.add_argument("--kind", choices=("identity", "mobius", "sine"), default="identity")
    p.add_argument("--eps", type=float, default=0.2)
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--a", type=_complex, default=0j)
    p.add_argument("--rot", type=float, default=0.0)
    p.add_argument("--M", type=int, default=1024)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_boundary)

    p = sub.add_parser("extend", help="barycentric extension onto a mesh")
    common(p)
    p.add_argument("--boundary", type=Path, required=True)
    p.add_argument("--mesh", type=Path, required=True)
    p.add_argument("--K", type=float, default=1.0)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--quadrature", type=int, default=1024)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_extend)

    p = sub.add_parser("flow", help="run the flow from a map field")
    common(p)
    p.add_argument("--map", type=Path, required=True)
    p.add_argument("--mesh", type=Path, required=True)
    _add_flow_args(p)
    p.add_argument("--out-dir", type=Path, required=True)
    p.set_defaults(func=cmd_flow)

    p = sub.add_parser("verify", help="run a verification suite")
    common(p)
    p.add_argument("suite", choices=("distsq", "jacobi", "uniqueness", "quasiiso", "estimates"))
    p.add_argument("--R-max", dest="R_max", type=float, default=3.0)
    p.add_argument("--h", type=float, default=0.1)
    p.add_argument("--K", type=float, default=1.0)
    p.add_argument("--kind", choices=("identity", "mobius", "sine"), default="sine")
    p.add_argument("--eps", type=float, default=0.2)
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--a", type=_complex, default=0.3 + 0j)
    p.add_argument("--rot", type=float, default=0.0)
    p.add_argument("--M", type=int, default=1024)
    _add_flow_args(p)
    p.add_argument("--out-dir", type=Path, required=True)
    p.set_defaults(func=cmd_verify)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        sub = parser._subparsers._group_actions[0].choices[args.command]
        _apply_config(args, sub)
        return args.func(args)
    except (InputError, ValueError, FileNotFoundError) as exc:
        code, kind = EXIT_INPUT, "input"
        err = exc
    except (NumericalFailure, np.linalg.LinAlgError) as exc:
        code, kind = EXIT_NUMERIC, "numerical"
        err = exc
    print("error: " + json.dumps({"kind": kind, "type": type(err).__name__, "message": str(err)}), file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
