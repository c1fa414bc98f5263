"""C^1 cubic-spline gluing of warped metrics and certified corner smoothing."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .curvature import ATensorBounds, CurvatureReport, WeightedWarpedSpec, positivity_scan
from .errors import EpsExceedsDomain, JunctionSignViolation, NoAdmissibleEps, ValueMismatchAtJunction
from .profiles import BREAK_TOL, Polynomial, Profile, concat, single

#: Jumps at most this large (in absolute value) count as exactly zero.
ZERO_JUMP = 1e-12
#: Nonzero jumps must exceed this to be usable.
STRICT_MARGIN = 1e-9
MAX_HALVINGS = 40
SCAN_DIVISOR = 200

_P = np.polynomial.polynomial


def spline_coefficients(f1: float, d1: float, f2: float, d2: float, eps: float) -> np.ndarray:
    """Power-basis coefficients (in ``tau = t - center``) of the four-term interpolating cubic.

    ``f1, d1`` are value and slope at ``-eps``; ``f2, d2`` at ``+eps``.
    """
    D = (f2 - f1) / (2 * eps)
    up = np.array([eps, 1.0])  # tau + eps
    dn = np.array([-eps, 1.0])  # tau - eps
    terms = [
        (f2 / (2 * eps)) * up,
        -(f1 / (2 * eps)) * dn,
        ((d1 - D) / (4 * eps * eps)) * _P.polymul(_P.polymul(dn, dn), up),
        ((d2 - D) / (4 * eps * eps)) * _P.polymul(_P.polymul(up, up), dn),
    ]
    out = np.zeros(4)
    for term in terms:
        out[: len(term)] += term
    return out


def cubic_spline_glue(left: Profile, right: Profile, center: float, eps: float) -> Profile:
    """Replace ``left``/``right`` on ``[center - eps, center + eps]`` by the interpolating cubic.

    The cubic matches value and slope of ``left`` at ``center - eps`` and of
    ``right`` at ``center + eps``; the tails outside the window are kept as is.

    Raises:
        EpsExceedsDomain: the window does not fit inside the two domains.
    """
    if not eps > 0:
        raise EpsExceedsDomain("eps must be positive", eps=eps)
    tol = BREAK_TOL * max(1.0, abs(center))
    a, b = center - eps, center + eps
    if left.lo > a + tol or left.hi < center - tol or right.lo > center + tol or right.hi < b - tol:
        raise EpsExceedsDomain(
            f"window [{a}, {b}] does not fit: left [{left.lo}, {left.hi}], right [{right.lo}, {right.hi}]",
            eps=eps,
        )
    f1, d1 = left.eval(a, 0, "left" if a > left.lo + tol else "right"), left.eval(a, 1, "left" if a > left.lo + tol else "right")
    f2, d2 = right.eval(b, 0, "right" if b < right.hi - tol else "left"), right.eval(b, 1, "right" if b < right.hi - tol else "left")
    coeffs = spline_coefficients(f1, d1, f2, d2, eps)
    parts = []
    if a - left.lo > tol:
        parts.append(left.restrict(left.lo, a))
    parts.append(single(Polynomial(a, b, coeffs=tuple(float(c) for c in coeffs), center=center)))
    if right.hi - b > tol:
        parts.append(right.restrict(b, right.hi))
    return concat(parts)


def glue_at(p: Profile, center: float, eps: float) -> Profile:
    """Glue a single profile to itself across ``center`` (typically a breakpoint)."""
    return cubic_spline_glue(p.restrict(p.lo, center), p.restrict(center, p.hi), center, eps)


@dataclass(frozen=True)
class GlueJump:
    """One-sided slope jumps at a junction; admissible iff all three are >= 0."""

    t_i: float
    dalpha: float
    dbeta: float
    dtrace: float

    @property
    def admissible(self) -> bool:
        return self.dalpha >= 0 and self.dbeta >= 0 and self.dtrace >= 0

    def usable(self) -> bool:
        """Each jump is either (numerically) zero or strictly positive beyond the margin."""
        return all(abs(d) <= ZERO_JUMP or d > STRICT_MARGIN for d in (self.dalpha, self.dbeta, self.dtrace))

    @property
    def all_zero(self) -> bool:
        return all(abs(d) <= ZERO_JUMP for d in (self.dalpha, self.dbeta, self.dtrace))

    def to_dict(self) -> dict:
        return {
            "t_i": self.t_i,
            "dalpha": self.dalpha,
            "dbeta": self.dbeta,
            "dtrace": self.dtrace,
            "admissible": self.admissible,
        }


def check_glue_jump(spec_left: WeightedWarpedSpec, spec_right: WeightedWarpedSpec, t_i: float) -> GlueJump:
    """Slope jumps of ``alpha``, ``beta`` and the weighted trace at ``t_i``.

    Raises:
        ValueMismatchAtJunction: values of alpha, beta or f disagree by more than 1e-10.
    """
    if (spec_left.a, spec_left.b, spec_left.q) != (spec_right.a, spec_right.b, spec_right.q):
        raise ValueError("specs must share (a, b, q)")
    vals = {}
    for name in ("alpha", "beta", "f"):
        lv = getattr(spec_left, name).eval(t_i, 0, "left")
        rv = getattr(spec_right, name).eval(t_i, 0, "right")
        if abs(lv - rv) > 1e-10 * max(1.0, abs(lv), abs(rv)):
            raise ValueMismatchAtJunction(f"{name} differs across t={t_i!r}: {lv!r} vs {rv!r}", t=t_i)
        vals[name] = (lv, rv)
    a, b = spec_left.a, spec_left.b
    al1m, al1p = spec_left.alpha.eval(t_i, 1, "left"), spec_right.alpha.eval(t_i, 1, "right")
    be1m, be1p = spec_left.beta.eval(t_i, 1, "left"), spec_right.beta.eval(t_i, 1, "right")
    f1m, f1p = spec_left.f.eval(t_i, 1, "left"), spec_right.f.eval(t_i, 1, "right")
    al, be = vals["alpha"][0], vals["beta"][0]
    trace_m = a * al1m / al + b * be1m / be - f1m
    trace_p = a * al1p / al + b * be1p / be - f1p
    return GlueJump(float(t_i), al1m - al1p, be1m - be1p, trace_m - trace_p)


def _has_break(p: Profile, t: float) -> bool:
    bp = p.breakpoints
    return bool(bp.size and np.min(np.abs(bp - t)) <= BREAK_TOL * max(1.0, abs(t)))


def initial_window(breakpoints, lo: float, hi: float, t_i: float, avoid: Sequence[float] = ()) -> float:
    """First window half-width tried at ``t_i``.

    A tenth of the distance to the nearest other breakpoint or domain end,
    and at most half the distance to any ``avoid`` point.
    """
    others = [b for b in breakpoints if abs(b - t_i) > BREAK_TOL * max(1.0, abs(t_i))]
    dist = min([abs(b - t_i) for b in others] + [t_i - lo, hi - t_i])
    start = dist / 10.0
    if len(avoid):
        start = min(start, 0.5 * min(abs(t_i - x) for x in avoid))
    return start


@dataclass(frozen=True)
class CornerResult:
    spec: WeightedWarpedSpec
    eps: float
    jump: GlueJump
    report: CurvatureReport
    halvings: int


def smooth_corner(
    spec: WeightedWarpedSpec,
    t_i: float,
    A: ATensorBounds | None = None,
    avoid: Sequence[float] = (),
    threads: int = 1,
    eps0: float | None = None,
) -> CornerResult:
    """Spline-smooth the junction at ``t_i`` and certify positivity on the window.

    The window half-width starts at a tenth of the distance to the nearest
    other breakpoint (and strictly inside any ``avoid`` point) and is halved
    until the scan with step ``eps/200`` passes on ``[t_i - eps, t_i + eps]``.
    A junction whose three jumps all vanish is already ``C^1`` and is left
    alone (``eps = 0``) once both one-sided limits pass.

    Raises:
        JunctionSignViolation: a jump is negative, or positive but not beyond
            the strict margin.
        NoAdmissibleEps: no window passed within 40 halvings.
    """
    jump = check_glue_jump(spec, spec, t_i)
    if not jump.usable():
        raise JunctionSignViolation(
            f"junction at t={t_i!r} has jumps {jump.to_dict()}; each must be 0 or > {STRICT_MARGIN}",
            t=t_i,
        )
    if jump.all_zero:
        # already C^1; a cubic would overshoot the second-derivative jump by half again
        lo, hi = max(spec.lo, t_i - 1e-6), min(spec.hi, t_i + 1e-6)
        rep = positivity_scan(spec, A, (hi - lo) / 4, window=(lo, hi), threads=threads)
        if rep.passed:
            return CornerResult(spec, 0.0, jump, rep, 0)
        raise NoAdmissibleEps(f"C^1 junction at t={t_i!r} already fails positivity", t=t_i)
    start = initial_window(spec.breakpoints, spec.lo, spec.hi, t_i, avoid)
    if eps0 is not None:
        start = min(start, eps0)
    names = [n for n in ("alpha", "beta", "f") if _has_break(getattr(spec, n), t_i)]
    for k in range(MAX_HALVINGS + 1):
        eps = start / 2**k
        glued = {n: glue_at(getattr(spec, n), t_i, eps) for n in names}
        new = spec.with_profiles(**glued)
        rep = positivity_scan(new, A, eps / SCAN_DIVISOR, window=(t_i - eps, t_i + eps), threads=threads)
        if rep.passed:
            return CornerResult(new, eps, jump, rep, k)
    raise NoAdmissibleEps(f"no admissible window at t={t_i!r} after {MAX_HALVINGS} halvings", t=t_i)


def smooth_corners(
    spec: WeightedWarpedSpec,
    points: Sequence[float],
    A: ATensorBounds | None = None,
    avoid: Sequence[float] = (),
    threads: int = 1,
) -> tuple[WeightedWarpedSpec, list[CornerResult]]:
    """Apply :func:`smooth_corner` at each point in turn."""
    results = []
    for t in points:
        res = smooth_corner(spec, t, A, avoid, threads)
        spec = res.spec
        results.append(res)
    return spec, results


def spline_second_derivative_limit(dl: float, dr: float) -> float:
    """Limit of ``eps * f''(+-eps)`` for the glued cubic as ``eps -> 0``: ``(dr - dl)/2``."""
    return 0.5 * (dr - dl)


def join_specs(left: WeightedWarpedSpec, right: WeightedWarpedSpec) -> WeightedWarpedSpec:
    """Concatenate two specs whose domains abut; the junction is left unsmoothed."""
    if (left.a, left.b, left.q) != (right.a, right.b, right.q):
        raise ValueError("specs must share (a, b, q)")
    return left.with_profiles(
        alpha=concat([left.alpha, right.alpha]),
        beta=concat([left.beta, right.beta]),
        f=concat([left.f, right.f]),
    )
