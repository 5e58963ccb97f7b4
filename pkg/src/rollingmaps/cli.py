"""Command-line front end.

Exit status: 0 success, 1 negative verdict (exists, loopcheck; the report is
still written), 2 invalid input, 3 numeric failure (chart exit, step underflow).
"""
from __future__ import annotations

import argparse
import inspect
import sys
from pathlib import Path

import numpy as np

from . import curves, io
from .curves import FAMILIES, SampledCurve, builtin_curve, exonepoint_pair, is_closed
from .existence import exists_by_curvature, exists_general, loop_check
from .frenet import EPS_REG, frenet_apparatus, reparametrize_arclength
from .geometry import ManifoldModel, check_model
from .numerics import ChartDomainError, RegularityError, RollingError, StepUnderflowError
from .rolling import compose_rollings, roll_along, verify_rolling
from .synthesis import (CurvatureProfile, backend_euclidean, backend_sphere, backend_su2,
                        synthesize_curve, synthesize_rolling)
from .transport import antidevelop, develop

EXIT_OK, EXIT_REJECT, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2, 3
ALIASES = {"len": "length", "N": "num"}


class Failure(Exception):
    """Raised by a command after writing partial output; carries the exit status."""

    def __init__(self, message, status):
        super().__init__(message)
        self.status = status


# ------------------------------------------------------------------ argument parsing


def _number(text):
    text = text.strip()
    if ";" in text:
        return tuple(float(v) for v in text.split(";") if v)
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def parse_curve(text: str, M: ManifoldModel, step=None) -> SampledCurve:
    """``family[:key=value,...]`` or a CSV path; tuple values use ';' separators."""
    if Path(text).is_file():
        c = io.read_curve(text)
        c = c.with_flags(closed=is_closed(c))
        if step is not None:
            c = c.resample(np.linspace(c.t[0], c.t[-1], int(np.ceil(c.span / step - 1e-9)) + 1))
        return c
    family, _, rest = text.partition(":")
    params = {}
    for item in filter(None, rest.split(",")):
        key, sep, value = item.partition("=")
        if not sep:
            raise ValueError(f"curve parameter {item!r} is not of the form key=value")
        params[ALIASES.get(key.strip(), key.strip())] = _number(value)
    if step is not None and "num" not in params:
        params.setdefault("step", step)
    if family == "exonepoint_pair":
        which = int(params.pop("which", 0))
        return exonepoint_pair(**params)[which]
    if family not in FAMILIES:
        raise ValueError(f"{text!r} is neither a file nor a known curve family ({', '.join(FAMILIES)})")
    if "n" in inspect.signature(getattr(curves, family)).parameters:
        params.setdefault("n", M.coord_dim)
    return builtin_curve(family, **params)


def parse_vector(text, size, what):
    v = np.array([float(a) for a in text.split(",")])
    if v.shape != (size,):
        raise ValueError(f"{what} needs {size} comma-separated numbers")
    return v


def parse_rotation(text, n, what):
    if text in (None, "identity", "I"):
        return np.eye(n)
    return parse_vector(text, n * n, what).reshape(n, n)


def default_point(M: ManifoldModel):
    if M.name.startswith("hyperbolic"):
        return np.array([0.0, 1.0])
    if M.name.startswith("su2"):
        return np.array([1.0, 0.0, 0.0, 0.0])
    return np.zeros(M.coord_dim)


def _point(text, M, what):
    return default_point(M) if text is None else parse_vector(text, M.coord_dim, what)


def _emit(args, sections):
    if args.report:
        io.write_report(args.report, sections)
    for name, items in sections.items():
        for k, v in items.items():
            print(f"{name}.{k} = {io.format_value(v)}")


def _exit_info(res):
    if res.exit_time is None:
        return {"complete": True}
    return {"complete": False, "exit_time": res.exit_time, "exit_reason": res.exit_reason}


def _fail_on_exit(res, what):
    if res.exit_time is not None:
        raise Failure(f"{what}: {res.exit_reason} at t = {res.exit_time:.6g} (partial output written)",
                      EXIT_NUMERIC)


# ------------------------------------------------------------------ commands


def cmd_antidev(args):
    M = io.parse_manifold(args.manifold)
    c = parse_curve(args.curve, M, args.step)
    ad = antidevelop(M, c, parse_rotation(args.R0, M.n, "--R0"))
    if args.out:
        io.write_curve(args.out, ad.y)
    _emit(args, {"antidev": {"points": len(c), "end_point": ad.y.xi[-1], "so_drift": ad.frame.max_drift}})
    return EXIT_OK


def cmd_develop(args):
    M = io.parse_manifold(args.manifold)
    E = io.parse_manifold(f"euclidean:{M.n}")
    y = parse_curve(args.curve, E, args.step)
    dev = develop(M, y, _point(args.x0, M, "--x0"), parse_rotation(args.R0, M.n, "--R0"))
    if args.out:
        io.write_curve(args.out, dev.x)
    _emit(args, {"develop": {"points": len(dev.x), "end_point": dev.x.xi[-1], "so_drift": dev.frame.max_drift,
                             **_exit_info(dev)}})
    _fail_on_exit(dev, "develop")
    return EXIT_OK


def cmd_roll(args):
    M = io.parse_manifold(args.manifold)
    Mh = io.parse_manifold(args.manifold_hat)
    c = parse_curve(args.curve, M, args.step)
    traj = roll_along(M, Mh, c, parse_rotation(args.q0, M.n, "--q0"), _point(args.x0_hat, Mh, "--x0-hat"))
    if args.out:
        io.write_trajectory(args.out, traj)
    rep = verify_rolling(M, Mh, traj, args.probes, args.seed)
    _emit(args, {"roll": {"points": len(traj), "no_slip": rep.no_slip, "no_twist": rep.no_twist,
                          "so_drift": rep.so_drift, **_exit_info(traj)},
                 "thresholds": {"probes": args.probes, "seed": args.seed}})
    _fail_on_exit(traj, "roll")
    return EXIT_OK


def cmd_frenet(args):
    M = io.parse_manifold(args.manifold)
    c = reparametrize_arclength(M, parse_curve(args.curve, M, args.step))
    data = frenet_apparatus(M, c, args.eps_reg)
    n = M.n
    if args.out:
        header = (["t"] + [f"kappa_{j + 1}" for j in range(n - 1)]
                  + [f"v{j + 1}_{i + 1}" for j in range(n) for i in range(n)])
        cols = np.hstack([data.t[:, None], data.kappa, np.swapaxes(data.v, 1, 2).reshape(len(c), n * n)])
        io._write_table(args.out, header, cols)
    kap = data.kappa[np.all(np.isfinite(data.kappa), axis=1)]
    info = {"regular_order": data.regular_order, "failure_time": data.failure_time, "length": c.span}
    if kap.size:
        info.update(kappa_min=kap.min(axis=0), kappa_max=kap.max(axis=0))
    _emit(args, {"frenet": info, "thresholds": {"eps_reg": args.eps_reg}})
    return EXIT_OK


def cmd_synth(args):
    Mh = io.parse_manifold(args.manifold_hat)
    n = Mh.n
    if args.curve:
        if not args.manifold:
            raise ValueError("--curve needs --manifold")
        M = io.parse_manifold(args.manifold)
        c = parse_curve(args.curve, M, args.step)
        traj = synthesize_rolling(M, Mh, c, parse_rotation(args.q0, n, "--q0"), _point(args.x0_hat, Mh, "--x0-hat"))
        if args.out:
            io.write_trajectory(args.out, traj)
        rep = verify_rolling(M, Mh, traj)
        _emit(args, {"synth": {"points": len(traj), "no_slip": rep.no_slip, "no_twist": rep.no_twist,
                               "so_drift": rep.so_drift, **_exit_info(traj)}})
        _fail_on_exit(traj, "synth")
        return EXIT_OK
    if args.profile:
        profile = io.read_profile(args.profile)
    elif args.kappa:
        kappa = [float(k) for k in args.kappa.split(",")]
        profile = CurvatureProfile.constant(kappa, args.length, step=args.step)
    else:
        raise ValueError("synth needs --profile, --kappa or --curve")
    a0 = parse_rotation(args.a0, n, "--a0")
    x0 = _point(args.x0_hat, Mh, "--x0-hat")
    backend = args.backend
    if backend == "euclidean":
        syn = backend_euclidean(profile, x0, a0)
    elif backend == "sphere":
        syn = backend_sphere(profile, x0, a0)
    elif backend == "su2":
        syn = backend_su2(profile, x0, a0)
    else:
        syn = synthesize_curve(Mh, profile, x0, a0)
    if args.out:
        io.write_curve(args.out, syn.curve)
    _emit(args, {"synth": {"backend": backend, "points": len(syn.curve), "end_point": syn.curve.xi[-1],
                           "so_drift": syn.frame.max_drift, **_exit_info(syn)}})
    _fail_on_exit(syn, "synth")
    return EXIT_OK


def cmd_exists(args):
    M = io.parse_manifold(args.manifold)
    Mh = io.parse_manifold(args.manifold_hat)
    x = parse_curve(args.curve, M, args.step)
    xh = parse_curve(args.curve_hat, Mh, args.step)
    if args.mode == "curvature":
        v = exists_by_curvature(M, Mh, x, xh, tol_curv=args.tol or 1e-4)
    else:
        v = exists_general(M, Mh, x, xh, tol_gen=args.tol or 1e-5)
    info = {"accepted": v.accepted, "method": v.method, "residual": v.residual}
    if v.iota is not None:
        info["iota"] = v.iota
    for k, val in v.details.items():
        if isinstance(val, (bool, int, float, np.ndarray, np.floating, np.bool_)):
            info[k] = val
    _emit(args, {"verdict": info, "thresholds": v.thresholds})
    return EXIT_OK if v.accepted else EXIT_REJECT


def cmd_loopcheck(args):
    M = io.parse_manifold(args.manifold)
    c = parse_curve(args.curve, M, args.step)
    r = loop_check(M, c, args.tol_loop, args.tol_angle, allow_open=args.allow_open)
    info = {"theta": r.theta, "alpha": r.alpha, "closure_integral_re": r.closure_integral.real,
            "closure_integral_im": r.closure_integral.imag, "closure_integral_abs": abs(r.closure_integral),
            "config_loop": r.config_loop, "c1_loop": r.c1_loop, "closed": r.closed, "length": r.length}
    _emit(args, {"loop": info, "thresholds": {"tol_loop": args.tol_loop, "tol_angle": args.tol_angle}})
    return EXIT_OK if r.config_loop else EXIT_REJECT


def cmd_compose(args):
    first = io.read_trajectory(args.first)
    second = io.read_trajectory(args.second)
    traj = compose_rollings(first, second, args.tol)
    if args.out:
        io.write_trajectory(args.out, traj)
    _emit(args, {"compose": {"points": len(traj)}, "thresholds": {"tol": args.tol}})
    return EXIT_OK


def cmd_check_model(args):
    M = io.parse_manifold(args.manifold)
    rng = np.random.default_rng(args.seed)
    pts = default_point(M) + args.radius * rng.uniform(-1.0, 1.0, size=(args.points, M.coord_dim))
    pts = M.normalize(pts)
    pts = pts[M.in_domain(pts)]
    rep = check_model(M, pts, args.h)
    _emit(args, {"model": {"name": M.name, "n": M.n, "points": len(pts), "max_antisymmetry": rep.max_antisymmetry,
                           "min_det": rep.min_det, "max_condition": rep.max_condition,
                           "levi_civita_residual": rep.levi_civita_residual},
                 "thresholds": {"h": args.h}})
    return EXIT_OK


# ------------------------------------------------------------------ entry point


def build_parser():
    p = argparse.ArgumentParser(prog="rollingmaps", description="Rolling of Riemannian manifolds along curves.")
    sub = p.add_subparsers(dest="command", required=True)

    def command(name, func, help_text):
        s = sub.add_parser(name, help=help_text)
        s.set_defaults(func=func)
        s.add_argument("--step", type=float, default=None, help="grid step (default: span/10000)")
        s.add_argument("--report", help="write a key/value report to this file")
        return s

    s = command("antidev", cmd_antidev, "anti-development of a curve")
    s.add_argument("--manifold", required=True)
    s.add_argument("--curve", required=True)
    s.add_argument("--R0", default="identity")
    s.add_argument("--out")

    s = command("develop", cmd_develop, "develop a curve of R^n onto a manifold")
    s.add_argument("--manifold", required=True)
    s.add_argument("--curve", required=True)
    s.add_argument("--x0")
    s.add_argument("--R0", default="identity")
    s.add_argument("--out")

    s = command("roll", cmd_roll, "roll one manifold on another along a curve")
    s.add_argument("--manifold", required=True)
    s.add_argument("--manifold-hat", required=True)
    s.add_argument("--curve", required=True)
    s.add_argument("--q0", default="identity")
    s.add_argument("--x0-hat")
    s.add_argument("--probes", type=int, default=3)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out")

    s = command("frenet", cmd_frenet, "Frenet frame and geodesic curvatures")
    s.add_argument("--manifold", required=True)
    s.add_argument("--curve", required=True)
    s.add_argument("--eps-reg", type=float, default=EPS_REG)
    s.add_argument("--out")

    s = command("synth", cmd_synth, "curve or rolling from curvature data")
    s.add_argument("--manifold-hat", required=True)
    s.add_argument("--manifold")
    s.add_argument("--curve")
    s.add_argument("--profile")
    s.add_argument("--kappa", help="constant curvatures, comma-separated")
    s.add_argument("--length", type=float, default=1.0)
    s.add_argument("--backend", choices=("generic", "euclidean", "sphere", "su2"), default="generic")
    s.add_argument("--x0-hat")
    s.add_argument("--a0", default="identity")
    s.add_argument("--q0", default="identity")
    s.add_argument("--out")

    s = command("exists", cmd_exists, "does a rolling exist along a pair of curves")
    s.add_argument("--mode", choices=("curvature", "general"), default="general")
    s.add_argument("--manifold", default=None)
    s.add_argument("--manifold-hat", default=None)
    s.add_argument("--curve", required=True)
    s.add_argument("--curve-hat", required=True)
    s.add_argument("--tol", type=float, default=None)

    s = command("loopcheck", cmd_loopcheck, "holonomy and closure diagnostics of a surface loop")
    s.add_argument("--manifold", required=True)
    s.add_argument("--curve", required=True)
    s.add_argument("--allow-open", action="store_true")
    s.add_argument("--tol-loop", type=float, default=1e-6)
    s.add_argument("--tol-angle", type=float, default=1e-6)

    s = command("compose", cmd_compose, "compose two rolling trajectories")
    s.add_argument("--first", required=True)
    s.add_argument("--second", required=True)
    s.add_argument("--tol", type=float, default=1e-6)
    s.add_argument("--out")

    s = command("check-model", cmd_check_model, "diagnostics of a manifold model")
    s.add_argument("--manifold", required=True)
    s.add_argument("--points", type=int, default=100)
    s.add_argument("--radius", type=float, default=0.8)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--h", type=float, default=1e-5)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.command == "exists":
        if args.manifold is None or args.manifold_hat is None:
            dim = None
            for name in (args.curve, args.curve_hat):
                if Path(name).is_file():
                    dim = io.read_curve(name).dim
            default = f"euclidean:{dim or 3}"
            args.manifold = args.manifold or default
            args.manifold_hat = args.manifold_hat or default
    try:
        return args.func(args)
    except Failure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.status
    except (ChartDomainError, StepUnderflowError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except RegularityError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except RollingError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, OSError, KeyError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
