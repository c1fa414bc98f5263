"""Command-line front end: ``ricci-forge <command> <action> [flags]``.

Exit codes: 0 when the command succeeds and every certification passes, 1 on
a domain failure (including a failed verdict), 2 on usage errors.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from fractions import Fraction
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import __version__
from .errors import DomainError
from .io import dumps, plain, read_json, write_json, write_text_atomic

THREADS_ENV = "RICCI_FORGE_THREADS"


class _Failed(Exception):
    """A command ran but its verdict is ``fail``; carries the payload to print."""

    def __init__(self, payload: dict):
        super().__init__("verdict: fail")
        self.payload = payload


# ---------------------------------------------------------------------------
# argument helpers


def _int_list(text: str) -> list[int]:
    try:
        vals = [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    if not vals:
        raise argparse.ArgumentTypeError("expected at least one integer")
    return vals


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def _q(text: str) -> float:
    if text.lower() in ("inf", "infinity", "oo"):
        return math.inf
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError("q must be positive or 'inf'")
    return v


def _fraction(text: str) -> str:
    try:
        f = Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"expected a rational number like 1/1000, got {text!r}")
    if f <= 0:
        raise argparse.ArgumentTypeError("must be positive")
    return text


def _threads(args) -> int:
    if getattr(args, "threads", None):
        return args.threads
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return 1


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--json", action="store_true", help="print machine-readable JSON to stdout")
    p.add_argument("--threads", type=_positive_int, default=None,
                   help=f"worker threads for grid scans (fallback: ${THREADS_ENV})")
    return p


# ---------------------------------------------------------------------------
# output


def _flatten(d: Any, prefix: str = "") -> list[tuple[str, Any]]:
    if isinstance(d, dict):
        out = []
        for k, v in d.items():
            out += _flatten(v, f"{prefix}.{k}" if prefix else str(k))
        return out
    if isinstance(d, list) and d and all(isinstance(x, (dict, list)) for x in d) and len(d) <= 20:
        out = []
        for i, v in enumerate(d):
            out += _flatten(v, f"{prefix}[{i}]")
        return out
    return [(prefix, d)]


def _print(args, payload: dict) -> None:
    data = plain(payload)
    if args.json:
        sys.stdout.write(dumps(data))
        return
    rows = _flatten(data)
    width = max((len(k) for k, _ in rows), default=0)
    for k, v in rows:
        if isinstance(v, list) and len(v) > 12:
            v = f"[{len(v)} items]"
        sys.stdout.write(f"{k.ljust(width)}  {v}\n")


def _emit_report(args, report, stem_default: str | None = None) -> list[str]:
    """Write report JSON/CSV (and a PNG with ``--plot``) per the flags; return paths."""
    written = []
    if getattr(args, "report", None):
        written.append(str(write_json(args.report, report.to_dict())))
    if getattr(args, "csv", None):
        written.append(str(write_text_atomic(args.csv, report.to_csv())))
        if getattr(args, "plot", False):
            from . import plotting

            written.append(str(plotting.render_scan(args.csv)))
    return written


def _scan_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--report", help="write the full report JSON here")
    p.add_argument("--csv", help="write one sample per line here")
    p.add_argument("--plot", action="store_true", help="render a PNG next to the CSV (needs matplotlib)")


# ---------------------------------------------------------------------------
# curvature


def _load_spec(path: str):
    from .curvature import WeightedWarpedSpec

    return WeightedWarpedSpec.from_dict(read_json(path))


def _cmd_curvature(args) -> dict:
    from . import curvature as cv

    if args.action == "round-sphere":
        spec = cv.round_sphere_spec(args.a, args.b)
        write_json(args.out, spec.to_dict())
        return {"written": args.out, "a": args.a, "b": args.b}
    spec = _load_spec(args.spec)
    A = cv.ATensorBounds(*args.A) if args.A else None
    if args.action == "scan":
        rep = cv.positivity_scan(spec, A, args.step, window=tuple(args.window) if args.window else None,
                                 threads=_threads(args))
        out = rep.to_dict(include_samples=False)
        out["files"] = _emit_report(args, rep)
        if not rep.passed:
            raise _Failed(out)
        return out
    if args.action == "eval":
        if A is not None:
            r = cv.weighted_ricci_submersion(spec, args.t, A, side=args.side)
        else:
            r = cv.weighted_ricci_doubly_warped(spec, args.t, side=args.side)
        return {"t": args.t, "rtt": r.rtt, "ruu": r.ruu, "rvv": r.rvv, "ruv": r.ruv, "margin": cv.margin_of(r)}
    if args.action == "oracle":
        ts = np.linspace(spec.lo, spec.hi, args.points + 2)[1:-1]
        rows, worst = [], 0.0
        for t in ts:
            a = cv.weighted_ricci_doubly_warped(spec, float(t))
            b = cv.finite_difference_oracle(spec, float(t), args.fd_step)
            errs = [abs(x - y) / max(1.0, abs(y)) for x, y in zip(a.as_tuple(), b.as_tuple())
                    if not (math.isnan(x) and math.isnan(y))]
            worst = max([worst] + errs)
            rows.append({"t": float(t), "closed_form": a.as_tuple(), "oracle": b.as_tuple(), "rel_err": max(errs)})
        out = {"points": len(rows), "max_rel_err": worst, "tolerance": args.tol, "passed": worst <= args.tol,
               "rows": rows}
        if worst > args.tol:
            raise _Failed(out)
        return out
    raise AssertionError(args.action)


def _add_curvature(sub, common) -> None:
    p = sub.add_parser("curvature", help="weighted Ricci evaluation and positivity scans")
    acts = p.add_subparsers(dest="action", required=True)
    for name, hlp in (("scan", "grid positivity scan"), ("eval", "evaluate at one t"),
                      ("oracle", "compare closed form with the finite-difference chart oracle")):
        a = acts.add_parser(name, parents=[common], help=hlp)
        a.add_argument("--spec", required=True, help="spec JSON file")
        a.add_argument("--A", nargs=3, type=float, metavar=("AUAU", "AVAV", "DELTA_A"),
                       help="A-tensor scalars for submersion metrics")
        if name == "scan":
            a.add_argument("--step", type=float, default=1e-3)
            a.add_argument("--window", nargs=2, type=float, metavar=("LO", "HI"))
            _scan_flags(a)
        elif name == "eval":
            a.add_argument("--t", type=float, required=True)
            a.add_argument("--side", choices=("left", "right"))
        else:
            a.add_argument("--points", type=_positive_int, default=20)
            a.add_argument("--fd-step", type=float, default=1e-3)
            a.add_argument("--tol", type=float, default=1e-6)
    a = acts.add_parser("round-sphere", parents=[common], help="write the round-sphere spec")
    a.add_argument("--a", type=int, required=True)
    a.add_argument("--b", type=int, required=True)
    a.add_argument("--out", required=True)


# ---------------------------------------------------------------------------
# glue


def _cmd_glue(args) -> dict:
    from .curvature import positivity_scan
    from .smoothing import SCAN_DIVISOR, check_glue_jump, glue_at, join_specs, smooth_corner

    left, right = _load_spec(args.left), _load_spec(args.right)
    t_i = left.hi if args.at is None else args.at
    jump = check_glue_jump(left, right, t_i)
    joined = join_specs(left, right)
    if args.eps is None:
        res = smooth_corner(joined, t_i, threads=_threads(args))
        spec, eps, rep = res.spec, res.eps, res.report
    else:
        eps = args.eps
        glued = {n: glue_at(getattr(joined, n), t_i, eps) for n in ("alpha", "beta", "f")
                 if any(abs(b - t_i) <= 1e-12 * max(1.0, abs(t_i)) for b in getattr(joined, n).breakpoints)}
        spec = joined.with_profiles(**glued)
        rep = positivity_scan(spec, None, eps / SCAN_DIVISOR, window=(t_i - eps, t_i + eps),
                              threads=_threads(args))
    if args.out:
        write_json(args.out, spec.to_dict())
    out = {"t_i": t_i, "eps": eps, "jump": jump.to_dict(), "window_report": rep.to_dict(include_samples=False),
           "files": ([args.out] if args.out else []) + _emit_report(args, rep)}
    if not rep.passed:
        raise _Failed(out)
    return out


def _add_glue(sub, common) -> None:
    p = sub.add_parser("glue", parents=[common], help="join two specs and smooth the junction")
    p.add_argument("--left", required=True, help="spec JSON ending at the junction")
    p.add_argument("--right", required=True, help="spec JSON starting at the junction")
    p.add_argument("--at", type=float, help="junction point (default: end of --left)")
    p.add_argument("--eps", type=float, help="fixed half-width; default searches by halving")
    p.add_argument("--out", help="write the glued spec JSON here")
    _scan_flags(p)


# ---------------------------------------------------------------------------
# construct


def _construct_outputs(args, spec, report, extra: dict) -> dict:
    files = []
    if args.out:
        files.append(str(write_json(args.out, spec.to_dict())))
        if not args.report:
            args.report = str(Path(args.out).with_name(Path(args.out).stem + "_report.json"))
    files += _emit_report(args, report)
    out = {"certification": report.to_dict(include_samples=False), **extra, "files": files}
    if not report.passed:
        raise _Failed(out)
    return out


def _cmd_construct(args) -> dict:
    from . import constructions as c
    from .curvature import ATensorBounds

    th = _threads(args)
    if args.action == "collapse":
        r = c.collapse_profiles(args.a, args.b, args.lambda3, args.mu, args.eps, threads=th)
        return _construct_outputs(args, r.spec, r.report, {"t3": r.t3, "t_eps": r.t_eps, "boundary": r.boundary,
                                                           "corner_eps": r.corner.eps})
    if args.action == "tot-geod":
        A = ATensorBounds(*args.A) if args.A else None
        r = c.tot_geod_profiles(args.r, args.t0, args.mu, f0=args.f0, A=A, q=args.q, a=args.a, b=args.b,
                                threads=th)
        return _construct_outputs(args, r.spec, r.report, {"transition": r.transition(), "boundary": r.boundary})
    if args.action == "neck":
        p = c.NeckParams(args.q, args.b, args.lam, args.eps, args.r)
        n = c.neck_profiles(p, threads=th)
        return _construct_outputs(args, n.spec(), n.report, {
            "t0": n.t0, "design": n.design, "evaluations": n.evaluations, "boundary": c.neck_boundary(n)})
    if args.action == "sphere-cap":
        r = c.sphere_cap_extension(args.q, args.n, args.r_cap, args.eps, threads=th)
        return _construct_outputs(args, r.spec, r.report, {
            "t_prime": r.t_prime, "boundary": r.boundary, "q_substituted": r.q_substituted})
    if args.action == "h-eps":
        cert = c.certify_h_eps(args.eps, args.nu, args.m, threads=th)
        return _construct_outputs(args, c.h_eps_spec(cert.profile, args.m), cert.report, {"h_eps": cert.to_dict()})
    if args.action == "unlink":
        if args.find:
            eps, _, rep = c.find_unlink_eps(args.m, args.delta, args.nu, eps_max=args.eps)
        else:
            eps = args.eps
            _, rep = c.unlink_field(args.m, eps, args.delta, args.nu, strict=False, threads=th)
        out = {"eps": eps, **rep.to_dict()}
        if args.report:
            write_json(args.report, out)
        if not rep.passed:
            raise _Failed(out)
        return out
    if args.action == "isotopy":
        p = c.isotopy_params(args.c, args.C, args.n, args.lam)
        ramp = c.chi_ramp(p.a)
        if args.out:
            write_json(args.out, {"params": p.to_dict(), "chi_ramp": ramp.to_dict()})
        return {"params": p.to_dict(), "holds": p.holds()}
    raise AssertionError(args.action)


def _add_construct(sub, common) -> None:
    p = sub.add_parser("construct", help="build and certify the explicit metric constructions")
    acts = p.add_subparsers(dest="action", required=True)

    def act(name, hlp, out=True):
        a = acts.add_parser(name, parents=[common], help=hlp)
        if out:
            a.add_argument("--out", help="write the spec JSON here")
            _scan_flags(a)
        return a

    a = act("collapse", "profiles collapsing one sphere factor")
    a.add_argument("--a", type=int, default=2)
    a.add_argument("--b", type=int, default=2)
    a.add_argument("--lambda3", type=float, default=1.0)
    a.add_argument("--mu", type=float, default=0.1)
    a.add_argument("--eps", type=float, default=0.05)

    a = act("tot-geod", "transition to a totally geodesic boundary")
    a.add_argument("--r", type=float, default=1.0)
    a.add_argument("--t0", type=float, default=1.0)
    a.add_argument("--mu", type=float, default=1e-3)
    a.add_argument("--f0", type=float, default=0.0)
    a.add_argument("--A", nargs=3, type=float, metavar=("AUAU", "AVAV", "DELTA_A"))
    a.add_argument("--q", type=_q, default=math.inf)
    a.add_argument("--a", type=int, default=2)
    a.add_argument("--b", type=int, default=2)

    a = act("neck", "neck warping functions")
    a.add_argument("--q", type=float, default=3.0, help="weight parameter (finite)")
    a.add_argument("--b", type=int, default=2)
    a.add_argument("--lam", type=float, default=0.9)
    a.add_argument("--eps", type=float, default=0.1)
    a.add_argument("--r", type=float, default=0.5)

    a = act("sphere-cap", "sphere cap followed by a neck")
    a.add_argument("--q", type=_q, default=3.0)
    a.add_argument("--n", type=int, default=5)
    a.add_argument("--r-cap", type=float, default=0.3)
    a.add_argument("--eps", type=float, default=0.05)

    a = act("h-eps", "the unlinking profile h_eps on the round sphere")
    a.add_argument("--eps", type=float, default=0.01)
    a.add_argument("--nu", type=float, default=1.02)
    a.add_argument("--m", type=int, default=2)

    a = act("unlink", "the unlinking deformation", out=False)
    a.add_argument("--m", type=int, default=1)
    a.add_argument("--eps", type=float, default=0.05)
    a.add_argument("--delta", type=float, default=0.3)
    a.add_argument("--nu", type=float, default=1.02)
    a.add_argument("--find", action="store_true", help="halve eps from --eps until certification passes")
    a.add_argument("--report")

    a = act("isotopy", "isotopy ramp parameter selection", out=False)
    a.add_argument("--c", type=float, default=1.0)
    a.add_argument("--C", type=float, default=5.0)
    a.add_argument("--n", type=int, default=5)
    a.add_argument("--lam", type=float, default=2.0)
    a.add_argument("--out")


# ---------------------------------------------------------------------------
# skew


def _load_matrix(path: str):
    from .skewalg import SkewIntMatrix

    return SkewIntMatrix(read_json(path))


def _cmd_skew(args) -> dict:
    from . import skewalg as s

    if args.action == "normal-form":
        A = _load_matrix(args.input)
        T, form = s.skew_normal_form(A)
        out = {"n": A.n, **form.to_dict(), "T": T.to_list(), "det_T": s.determinant(T.T)}
        if args.out:
            write_json(args.out, out)
        return out
    if args.action in ("build-a", "build-b"):
        M = s.build_A(args.n, args.ell) if args.action == "build-a" else s.build_B(args.nu, args.ell)
        if args.out:
            write_json(args.out, M.to_list())
        _, form = s.skew_normal_form(M)
        out = {"matrix": M.to_list(), **form.to_dict()}
        if args.action == "build-a":
            out["reduction_trace"] = s.anl_reduction_trace(M)
        return out
    if args.action == "pfaffian":
        A = _load_matrix(args.input)
        return {"n": A.n, "pfaffian": s.pfaffian(A)}
    if args.action == "congruent":
        A, B = _load_matrix(args.a), _load_matrix(args.b)
        return {"congruent": s.congruent(A, B)}
    raise AssertionError(args.action)


def _add_skew(sub, common) -> None:
    p = sub.add_parser("skew", help="exact antisymmetric integer matrix algebra")
    acts = p.add_subparsers(dest="action", required=True)
    a = acts.add_parser("normal-form", parents=[common], help="normal form with unimodular witness")
    a.add_argument("--in", dest="input", required=True, help="JSON array of integer rows")
    a.add_argument("--out")
    a = acts.add_parser("build-a", parents=[common], help="the matrix A_{n,ell}")
    a.add_argument("--n", type=_positive_int, required=True)
    a.add_argument("--ell", type=_positive_int, required=True)
    a.add_argument("--out")
    a = acts.add_parser("build-b", parents=[common], help="the matrix B_{nu,ell}")
    a.add_argument("--nu", type=_int_list, required=True)
    a.add_argument("--ell", type=_positive_int, required=True)
    a.add_argument("--out")
    a = acts.add_parser("pfaffian", parents=[common], help="Pfaffian by expansion")
    a.add_argument("--in", dest="input", required=True)
    a = acts.add_parser("congruent", parents=[common], help="decide congruence of two matrices")
    a.add_argument("--a", required=True)
    a.add_argument("--b", required=True)


# ---------------------------------------------------------------------------
# linking


def _cmd_linking(args) -> dict:
    from . import linking as lk
    from .skewalg import minimal_ell

    ell = args.ell or minimal_ell(args.nu)
    r = lk.realize(args.nu, ell, args.m, args.eps, max_dim=args.max_dim)
    files = []
    if args.out:
        d = Path(args.out)
        files = [
            str(write_json(d / "family.json", r.family.to_dict())),
            str(write_json(d / "matrix.json", r.table.to_dict())),
            str(write_text_atomic(d / "graph.dot", r.graph.to_dot())),
            str(write_json(d / "schedule.json", r.schedule.to_dict() if r.schedule else None)),
        ]
    out = {
        "nu": args.nu, "ell": ell, "m": args.m, "eps": args.eps,
        "matrix": r.table.matrix.to_list(),
        "shapes": r.shapes.to_dict() if r.shapes else None,
        "hypotheses": r.verdict.to_dict(),
        "schedule": r.schedule.to_dict() if r.schedule else None,
        "files": files,
    }
    if not r.verdict.passed:
        raise _Failed(out)
    return out


def _add_linking(sub, common) -> None:
    p = sub.add_parser("linking", help="realize B_{nu,ell} by planes and schedule their separation")
    acts = p.add_subparsers(dest="action", required=True)
    a = acts.add_parser("realize", parents=[common])
    a.add_argument("--nu", type=_int_list, required=True)
    a.add_argument("--ell", type=_positive_int)
    a.add_argument("--m", type=_positive_int, default=1)
    a.add_argument("--eps", type=_fraction, default="1/1000")
    a.add_argument("--max-dim", type=int, help="largest allowed pairwise intersection dimension (default 2m)")
    a.add_argument("--out", help="directory for family/matrix/graph/schedule files")


# ---------------------------------------------------------------------------
# pipeline


def _cmd_pipeline(args) -> dict:
    from .pipeline import PipelineConfig, run

    base = read_json(args.config) if args.config else {}
    over = {"nu": args.nu, "m": args.m, "ell": args.ell, "h_nu": args.h_nu, "eps_link": args.eps_link,
            "out_dir": args.out}
    base.update({k: v for k, v in over.items() if v is not None})
    if "nu" not in base:
        raise DomainError("--nu is required (directly or in --config)")
    base["threads"] = _threads(args)
    if args.no_plots:
        base["plots"] = False
    report = run(PipelineConfig.from_dict(base))
    out = report.to_dict()
    if not report.passed:
        raise _Failed(out)
    return out


def _add_pipeline(sub, common) -> None:
    p = sub.add_parser("pipeline", help="end-to-end run from nu to certified building blocks")
    acts = p.add_subparsers(dest="action", required=True)
    a = acts.add_parser("run", parents=[common])
    a.add_argument("--nu", type=_int_list)
    a.add_argument("--m", type=_positive_int)
    a.add_argument("--ell", type=_positive_int)
    a.add_argument("--h-nu", type=float, help="stretch factor of the unlinking profile")
    a.add_argument("--eps-link", type=_fraction)
    a.add_argument("--config", help="JSON file with PipelineConfig fields")
    a.add_argument("--out", help="artifact directory")
    a.add_argument("--no-plots", action="store_true")


# ---------------------------------------------------------------------------


COMMANDS = {
    "curvature": _cmd_curvature,
    "glue": _cmd_glue,
    "construct": _cmd_construct,
    "skew": _cmd_skew,
    "linking": _cmd_linking,
    "pipeline": _cmd_pipeline,
}


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="ricci-forge", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    _add_curvature(sub, common)
    _add_glue(sub, common)
    _add_construct(sub, common)
    _add_skew(sub, common)
    _add_linking(sub, common)
    _add_pipeline(sub, common)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        payload = COMMANDS[args.command](args)
    except _Failed as f:
        _print(args, f.payload)
        return 1
    except DomainError as e:
        if args.json:
            sys.stdout.write(dumps(e.to_dict()))
        sys.stderr.write(f"error: {type(e).__name__}: {e}\n")
        return 1
    except (OSError, ValueError) as e:
        sys.stderr.write(f"error: {e}\n")
        return 2
    _print(args, payload)
    return 0


if __name__ == "__main__":
    sys.exit(main())
