"""Weighted Bakry-Emery Ricci curvature of warped cylinder metrics.

Closed-form evaluators for

* doubly warped metrics ``dt^2 + alpha(t)^2 ds_a^2 + beta(t)^2 ds_b^2`` with
  weight ``e^{-f(t)}`` (optionally with A-tensor corrections of a Riemannian
  submersion),
* triply warped metrics ``dt^2 + gamma(t)^2 ds^2 + alpha(t,s)^2 ds_a^2 + beta(t,s)^2 ds_b^2``,
* general cylinders ``dt^2 + g_t`` with a t-dependent weight,

plus a finite-difference oracle working in an explicit stereographic chart.

The weighted tensor is ``Ric + Hess f - (1/q) df (x) df``; ``q = math.inf`` is
the sentinel for ``1/q = 0``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import AmbiguousAtBreakpoint, NonSmoothPoint, SingularMetric, StepTooLarge
from .profiles import BREAK_TOL, Profile, constant

INF = math.inf


def inv_q(q: float) -> float:
    """``1/q`` with the convention ``1/inf = 0`` (exactly)."""
    if q == INF:
        return 0.0
    if not q > 0:
        raise ValueError(f"q must be positive or inf, got {q}")
    return 1.0 / q


def q_to_json(q: float):
    return "Infinity" if q == INF else q


def q_from_json(v) -> float:
    if isinstance(v, str):
        if v.lower() in ("inf", "infinity", "+inf"):
            return INF
        return float(v)
    return float(v)


# ---------------------------------------------------------------------------
# data types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class WeightedWarpedSpec:
    """``dt^2 + alpha^2 ds_a^2 + beta^2 ds_b^2`` with measure ``e^{-f} dvol``.

    A factor of dimension 0 is allowed and simply drops out of every formula;
    this is how singly warped metrics are represented.
    """

    a: int
    b: int
    alpha: Profile
    beta: Profile
    f: Profile
    q: float = INF

    def __post_init__(self):
        if self.a < 0 or self.b < 0:
            raise ValueError("fiber dimensions must be nonnegative")
        inv_q(self.q)
        lo = (self.alpha.lo, self.beta.lo, self.f.lo)
        hi = (self.alpha.hi, self.beta.hi, self.f.hi)
        if max(lo) - min(lo) > 1e-9 * max(1.0, abs(lo[0])) or max(hi) - min(hi) > 1e-9 * max(1.0, abs(hi[0])):
            raise ValueError(f"profiles must share one domain, got lo={lo}, hi={hi}")

    @property
    def lo(self) -> float:
        return self.alpha.lo

    @property
    def hi(self) -> float:
        return self.alpha.hi

    @property
    def breakpoints(self) -> np.ndarray:
        pts = np.concatenate([self.alpha.breakpoints, self.beta.breakpoints, self.f.breakpoints])
        if pts.size == 0:
            return pts
        pts = np.sort(pts)
        keep = np.concatenate([[True], np.diff(pts) > BREAK_TOL * np.maximum(1.0, np.abs(pts[1:]))])
        return pts[keep]

    def min_continuity(self) -> int:
        classes = self.alpha.continuity_class + self.beta.continuity_class + self.f.continuity_class
        return min(classes) if classes else 2

    def with_profiles(self, **kw) -> "WeightedWarpedSpec":
        d = dict(a=self.a, b=self.b, alpha=self.alpha, beta=self.beta, f=self.f, q=self.q)
        d.update(kw)
        return WeightedWarpedSpec(**d)

    def to_dict(self) -> dict:
        return {
            "a": self.a,
            "b": self.b,
            "q": q_to_json(self.q),
            "alpha": self.alpha.to_dict(),
            "beta": self.beta.to_dict(),
            "f": self.f.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "WeightedWarpedSpec":
        return cls(
            a=int(d["a"]),
            b=int(d["b"]),
            alpha=Profile.from_dict(d["alpha"]),
            beta=Profile.from_dict(d["beta"]),
            f=Profile.from_dict(d["f"]),
            q=q_from_json(d.get("q", "Infinity")),
        )


@dataclass(frozen=True)
class ATensorBounds:
    """Scalar A-tensor data ``(A_u, A_u)``, ``(A_v, A_v)`` and ``((delta A) u, v)``."""

    AuAu: float = 0.0
    AvAv: float = 0.0
    deltaA: float = 0.0

    def __post_init__(self):
        if self.AuAu < 0 or self.AvAv < 0:
            raise ValueError("AuAu and AvAv must be nonnegative")

    @property
    def is_zero(self) -> bool:
        return self.AuAu == 0 and self.AvAv == 0 and self.deltaA == 0

    def to_dict(self) -> dict:
        return {"AuAu": self.AuAu, "AvAv": self.AvAv, "deltaA": self.deltaA}


ZERO_A = ATensorBounds()


@dataclass(frozen=True)
class RicciValues:
    """Components on the orthonormal frame ``(d_t, u/alpha, v/beta)``.

    Fields are floats or equally shaped arrays.
    """

    rtt: float | np.ndarray
    ruu: float | np.ndarray
    rvv: float | np.ndarray
    ruv: float | np.ndarray = 0.0

    def as_tuple(self):
        return (self.rtt, self.ruu, self.rvv, self.ruv)


@dataclass(frozen=True)
class Sample:
    t: float
    rtt: float
    ruu: float
    rvv: float
    ruv: float
    margin: float
    side: str = "interior"


@dataclass(frozen=True)
class CurvatureReport:
    """Result of a positivity scan. ``verdict`` is ``"pass"`` iff ``min_margin > 0``."""

    criterion: str
    min_margin: float
    samples: tuple = field(repr=False)
    worst_t: float = float("nan")

    @property
    def verdict(self) -> str:
        return "pass" if self.min_margin > 0 else "fail"

    @property
    def passed(self) -> bool:
        return self.min_margin > 0

    def to_dict(self, include_samples: bool = True) -> dict:
        d = {
            "criterion": self.criterion,
            "min_margin": self.min_margin,
            "verdict": self.verdict,
            "worst_t": self.worst_t,
            "sample_count": len(self.samples),
        }
        if include_samples:
            d["samples"] = [
                {"t": s.t, "rtt": s.rtt, "ruu": _num(s.ruu), "rvv": _num(s.rvv), "ruv": s.ruv}
                for s in self.samples
            ]
        return d

    def to_csv(self) -> str:
        lines = ["t,side,rtt,ruu,rvv,ruv,margin"]
        for s in self.samples:
            lines.append(f"{s.t!r},{s.side},{s.rtt!r},{s.ruu!r},{s.rvv!r},{s.ruv!r},{s.margin!r}")
        return "\n".join(lines) + "\n"


def _num(x: float):
    return None if math.isnan(x) else x


# ---------------------------------------------------------------------------
# closed-form evaluators
# ---------------------------------------------------------------------------


def _jets(p: Profile, t, side: str | None):
    try:
        return p.eval(t, 0, side), p.eval(t, 1, side), p.eval(t, 2, side)
    except AmbiguousAtBreakpoint as exc:
        raise NonSmoothPoint(str(exc), **exc.details) from exc


def weighted_ricci_doubly_warped(spec: WeightedWarpedSpec, t, side: str | None = None) -> RicciValues:
    """Weighted Ricci tensor of a doubly warped product, orthonormal frame.

    Args:
        spec: The metric and weight.
        t: Point or array of points.
        side: One-sided evaluation at breakpoints.

    Raises:
        NonSmoothPoint: second derivatives are ambiguous at ``t``.
    """
    a, b, iq = spec.a, spec.b, inv_q(spec.q)
    al, al1, al2 = _jets(spec.alpha, t, side)
    be, be1, be2 = _jets(spec.beta, t, side)
    _, f1, f2 = _jets(spec.f, t, side)
    rtt = -a * al2 / al - b * be2 / be + f2 - iq * f1 * f1
    cross = al1 * be1 / (al * be)
    ruu = -al2 / al + (a - 1) * (1 - al1 * al1) / (al * al) - b * cross + f1 * al1 / al
    rvv = -be2 / be + (b - 1) * (1 - be1 * be1) / (be * be) - a * cross + f1 * be1 / be
    ruv = np.zeros_like(rtt) if np.ndim(rtt) else 0.0
    # a zero-dimensional factor has no direction to test
    if a == 0:
        ruu = np.full_like(rtt, np.nan) if np.ndim(rtt) else math.nan
    if b == 0:
        rvv = np.full_like(rtt, np.nan) if np.ndim(rtt) else math.nan
    return RicciValues(rtt, ruu, rvv, ruv)


def weighted_ricci_submersion(
    spec: WeightedWarpedSpec, t, A: ATensorBounds, side: str | None = None
) -> RicciValues:
    """Doubly warped values corrected by the A-tensor terms of a submersion.

    With ``A`` all zero the output is identical to
    :func:`weighted_ricci_doubly_warped`.
    """
    base = weighted_ricci_doubly_warped(spec, t, side)
    al = spec.alpha.eval(t, 0, side)
    be = spec.beta.eval(t, 0, side)
    ratio = be * be / al**4
    ruu = base.ruu - 2.0 * ratio * A.AuAu
    rvv = base.rvv + ratio * A.AvAv
    ruv = base.ruv - (be / al**3) * A.deltaA
    return RicciValues(base.rtt, ruu, rvv, ruv)


@dataclass(frozen=True)
class Partials:
    """Value and partial derivatives up to order 2 of a function of ``(t, s)``."""

    v: float | np.ndarray
    t: float | np.ndarray
    s: float | np.ndarray
    tt: float | np.ndarray
    ts: float | np.ndarray
    ss: float | np.ndarray


@dataclass(frozen=True)
class TripleRicci:
    rtt: float | np.ndarray
    rts: float | np.ndarray
    rss: float | np.ndarray
    ruu: float | np.ndarray
    rvv: float | np.ndarray

    def diagonal(self):
        return (self.rtt, self.rss, self.ruu, self.rvv)


Bivariate = Callable[[object, object], Partials]


def ricci_triple_warped(
    alpha: Bivariate,
    beta: Bivariate,
    gamma: Profile | Callable,
    t,
    s,
    a: int,
    b: int,
    side: str | None = None,
) -> TripleRicci:
    """Ricci tensor of ``dt^2 + gamma(t)^2 ds^2 + alpha(t,s)^2 ds_a^2 + beta(t,s)^2 ds_b^2``.

    Components are on the orthonormal frame ``(d_t, d_s/gamma, u/alpha, v/beta)``;
    all components mixing the sphere directions with each other or with
    ``t, s`` vanish.
    """
    A = alpha(t, s)
    B = beta(t, s)
    if isinstance(gamma, Profile):
        g, g1, g2 = _jets(gamma, t, side)
    else:
        g, g1, g2 = gamma(t)
    rtt = -a * A.tt / A.v - b * B.tt / B.v - g2 / g
    rts = (1.0 / g) * (
        -a * A.ts / A.v - b * B.ts / B.v + a * A.s * g1 / (A.v * g) + b * B.s * g1 / (B.v * g)
    )
    rss = (
        (1.0 / g**2) * (-a * A.ss / A.v - b * B.ss / B.v)
        - g2 / g
        - a * A.t * g1 / (A.v * g)
        - b * B.t * g1 / (B.v * g)
    )

    def fiber(X: Partials, Y: Partials, dx: int, dy: int):
        return (
            (1.0 / g**2) * (-X.ss / X.v - (dx - 1) * X.s**2 / X.v**2 - dy * X.s * Y.s / (X.v * Y.v))
            - X.tt / X.v
            + (dx - 1) * (1 - X.t**2) / X.v**2
            - dy * X.t * Y.t / (X.v * Y.v)
            - X.t * g1 / (X.v * g)
        )

    ruu = fiber(A, B, a, b)
    rvv = fiber(B, A, b, a)
    return TripleRicci(rtt, rts, rss, ruu, rvv)


def cylinder_ricci_general(
    gt: Callable[[float], np.ndarray],
    fiber_ricci: Callable[[float], np.ndarray],
    f: Callable[[float], float],
    t: float,
    step: float = 1e-4,
    q: float = INF,
) -> np.ndarray:
    """Weighted Ricci matrix of ``dt^2 + g_t`` in the frame ``(d_t, E_1, ..., E_{n-1})``.

    ``gt(t)`` is the Gram matrix of the fixed frame ``E_i`` and ``fiber_ricci(t)``
    the Ricci tensor of ``g_t`` in that frame. ``t``-derivatives of ``gt`` and
    ``f`` come from central differences with ``step``. The mixed ``(t, E_i)``
    entries use the divergence form of the mixed curvature term, which vanishes
    when ``g_t'`` is parallel for ``g_t`` (every warped family here); it is
    returned as 0.

    Raises:
        SingularMetric: ``gt(t)`` has an eigenvalue ``<= 1e-10``.
    """
    G = np.asarray(gt(t), dtype=float)
    if not np.allclose(G, G.T, atol=1e-12):
        raise SingularMetric("gt must be symmetric")
    if np.linalg.eigvalsh(G).min() <= 1e-10:
        raise SingularMetric("gt is not positive definite", t=t)
    h = step
    Gp = (np.asarray(gt(t + h)) - np.asarray(gt(t - h))) / (2 * h)
    Gpp = (np.asarray(gt(t + h)) - 2 * G + np.asarray(gt(t - h))) / (h * h)
    f0, fp_, fm_ = f(t), f(t + h), f(t - h)
    f1 = (fp_ - fm_) / (2 * h)
    f2 = (fp_ - 2 * f0 + fm_) / (h * h)
    Ginv = np.linalg.inv(G)
    GiGp = Ginv @ Gp
    n = G.shape[0] + 1
    R = np.zeros((n, n))
    R[0, 0] = -0.5 * np.trace(Ginv @ Gpp) + 0.25 * np.trace(GiGp @ GiGp)
    tr = np.trace(GiGp)
    R[1:, 1:] = np.asarray(fiber_ricci(t)) - 0.5 * Gpp + 0.5 * Gp @ Ginv @ Gp - 0.25 * tr * Gp
    H = np.zeros((n, n))
    H[0, 0] = f2
    H[1:, 1:] = 0.5 * f1 * Gp
    D = np.zeros((n, n))
    D[0, 0] = f1 * f1
    return R + H - inv_q(q) * D


def to_orthonormal(M: np.ndarray, G: np.ndarray) -> np.ndarray:
    """Express a bilinear form given in the frame ``(d_t, E_i)`` in an orthonormal frame.

    Uses the symmetric inverse square root of ``G`` on the ``E_i`` block.
    """
    w, V = np.linalg.eigh(G)
    S = V @ np.diag(w**-0.5) @ V.T
    T = np.eye(M.shape[0])
    T[1:, 1:] = S
    return T.T @ M @ T


def boundary_quantities(spec: WeightedWarpedSpec, t: float, side: str = "left", outward: int = 1):
    """Second fundamental form, mean curvature and weighted mean curvature of ``{t} x S^a x S^b``.

    Args:
        outward: ``+1`` for the normal ``+d_t``, ``-1`` for ``-d_t``.

    Returns:
        ``(II_u, II_v, H, Hf)``.
    """
    if outward not in (1, -1):
        raise ValueError("outward must be +1 or -1")
    al, al1 = spec.alpha.eval(t, 0, side), spec.alpha.eval(t, 1, side)
    be, be1 = spec.beta.eval(t, 0, side), spec.beta.eval(t, 1, side)
    f1 = spec.f.eval(t, 1, side)
    IIu = outward * al1 / al
    IIv = outward * be1 / be
    H = spec.a * IIu + spec.b * IIv
    Hf = H - outward * f1
    return IIu, IIv, H, Hf


# ---------------------------------------------------------------------------
# positivity scan
# ---------------------------------------------------------------------------


def margin_of(r: RicciValues):
    """Positivity margin: min of the diagonal, plus the 2x2 determinant when ``ruv != 0``.

    NaN entries (absent directions) are ignored.
    """
    diag = np.fmin(np.fmin(r.rtt, r.ruu), r.rvv)
    det = r.ruu * r.rvv - r.ruv * r.ruv
    return np.where(np.asarray(r.ruv) != 0, np.minimum(diag, det), diag)


def scan_points(lo: float, hi: float, step: float, breakpoints: Sequence[float], skip_ends=(False, False)):
    """Grid points plus both one-sided samples at each breakpoint.

    Returns:
        List of ``(t, side)`` with side in ``{"left", "right", "interior"}``.
    """
    if not step > 0:
        raise ValueError("grid_step must be positive")
    n = max(1, int(math.ceil((hi - lo) / step - 1e-9)))
    grid = lo + (hi - lo) * np.arange(n + 1) / n
    tol = BREAK_TOL * max(1.0, abs(lo), abs(hi))
    bps = np.asarray([b for b in breakpoints if lo - tol <= b <= hi + tol], dtype=float)
    pts = []
    for t in grid:
        if bps.size and np.min(np.abs(bps - t)) <= BREAK_TOL * max(1.0, abs(t)):
            continue
        pts.append((float(t), "interior"))
    for b in bps:
        pts.append((float(b), "left"))
        pts.append((float(b), "right"))
    if skip_ends[0]:
        pts = [p for p in pts if p[0] != grid[0]]
    if skip_ends[1]:
        pts = [p for p in pts if p[0] != grid[-1]]
    pts.sort(key=lambda p: (p[0], p[1] != "left"))
    return pts


def collapsed_ends(spec: WeightedWarpedSpec) -> tuple[bool, bool]:
    """Which domain endpoints have a warping function vanishing (a collapsed sphere)."""
    out = []
    for t, side in ((spec.lo, "right"), (spec.hi, "left")):
        al = spec.alpha.eval(t, 0, side) if spec.a else 1.0
        be = spec.beta.eval(t, 0, side) if spec.b else 1.0
        out.append(bool(al <= 1e-12 or be <= 1e-12))
    return out[0], out[1]


def _evaluate(spec, A, ts: np.ndarray, side: str):
    if A is None or A.is_zero:
        return weighted_ricci_doubly_warped(spec, ts, side)
    return weighted_ricci_submersion(spec, ts, A, side)


def positivity_scan(
    spec: WeightedWarpedSpec,
    A: ATensorBounds | None = None,
    grid_step: float = 1e-3,
    window: tuple[float, float] | None = None,
    threads: int = 1,
    extra_points: Sequence[float] | np.ndarray | None = None,
) -> CurvatureReport:
    """Sample the weighted Ricci tensor on a grid and report the worst margin.

    Collapsed endpoints (a warping function equal to 0) are excluded; every
    other grid point and both one-sided limits at each breakpoint are sampled.
    ``extra_points`` inside the range are sampled in addition, which matters for
    profiles whose interesting scale is far below ``grid_step``.

    Raises:
        NonSmoothPoint: a breakpoint inside the scanned range is only C^0.
    """
    lo, hi = (spec.lo, spec.hi) if window is None else window
    tol = BREAK_TOL * max(1.0, abs(lo), abs(hi))
    bps = [b for b in spec.breakpoints if lo - tol <= b <= hi + tol]
    for prof in (spec.alpha, spec.beta, spec.f):
        for b, c in zip(prof.breakpoints, prof.continuity_class):
            if lo - tol <= b <= hi + tol and c < 1:
                raise NonSmoothPoint(f"junction at t={b!r} is only C^{max(c, -1)}", t=float(b))
    ends = collapsed_ends(spec)
    skip = (ends[0] and lo <= spec.lo, ends[1] and hi >= spec.hi)
    pts = scan_points(lo, hi, grid_step, bps, skip)
    if extra_points is not None:
        barr = np.asarray(bps, dtype=float)
        for t in np.asarray(extra_points, dtype=float):
            if not lo < t < hi:
                continue
            if barr.size and np.min(np.abs(barr - t)) <= BREAK_TOL * max(1.0, abs(t)):
                continue
            pts.append((float(t), "interior"))
        pts.sort(key=lambda p: (p[0], p[1] != "left"))
    ts = np.array([p[0] for p in pts])
    sides = np.array([p[1] for p in pts])
    chunks = np.array_split(np.arange(len(pts)), max(1, min(threads, len(pts))))

    def work(idx):
        res = {}
        for side in ("left", "right", "interior"):
            sel = idx[sides[idx] == side]
            if sel.size:
                r = _evaluate(spec, A, ts[sel], "left" if side == "left" else "right")
                res[side] = (sel, r)
        return res

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            parts = list(ex.map(work, chunks))
    else:
        parts = [work(c) for c in chunks]
    rtt = np.empty(len(pts))
    ruu = np.empty(len(pts))
    rvv = np.empty(len(pts))
    ruv = np.empty(len(pts))
    for part in parts:
        for sel, r in part.values():
            rtt[sel], ruu[sel], rvv[sel] = r.rtt, r.ruu, r.rvv
            ruv[sel] = r.ruv
    margins = margin_of(RicciValues(rtt, ruu, rvv, ruv))
    has_cross = bool(np.any(ruv != 0))
    criterion = "diagonal+determinant" if has_cross else "diagonal"
    if np.any(~np.isfinite(margins)):
        margins = np.where(np.isfinite(margins), margins, -np.inf)
    k = int(np.argmin(margins))
    samples = tuple(
        Sample(float(ts[i]), float(rtt[i]), float(ruu[i]), float(rvv[i]), float(ruv[i]), float(margins[i]), str(sides[i]))
        for i in range(len(pts))
    )
    return CurvatureReport(criterion, float(margins[k]), samples, float(ts[k]))


# ---------------------------------------------------------------------------
# finite-difference oracle
# ---------------------------------------------------------------------------


def _d1(fn, x: np.ndarray, k: int, h: float):
    """Fourth-order central difference of ``fn`` along coordinate ``k``."""
    e = np.zeros_like(x)
    e[k] = h
    return (-fn(x + 2 * e) + 8 * fn(x + e) - 8 * fn(x - e) + fn(x - 2 * e)) / (12 * h)


def chart_weighted_ricci(
    metric: Callable[[np.ndarray], np.ndarray],
    weight: Callable[[np.ndarray], float],
    x0: np.ndarray,
    step: float,
    q: float = INF,
) -> np.ndarray:
    """Weighted Ricci tensor in coordinates from metric values only.

    Christoffel symbols come from central differences of the metric, their
    derivatives from central differences of the symbols; the Hessian of the
    weight uses the same symbols. Stencils are the five-point central ones.
    """
    n = x0.size
    h = step

    def dmetric(x):
        return np.stack([_d1(metric, x, k, h) for k in range(n)])  # [k, i, j] = d_k g_ij

    def christoffel(x):
        g = metric(x)
        gi = np.linalg.inv(g)
        dg = dmetric(x)
        # Gamma^k_ij = 1/2 g^kl (d_i g_jl + d_j g_il - d_l g_ij)
        lower = 0.5 * (dg + dg.transpose(1, 0, 2) - dg.transpose(1, 2, 0))
        return np.einsum("kl,ijl->kij", gi, lower)

    G0 = christoffel(x0)
    dG = np.stack([_d1(christoffel, x0, m, h) for m in range(n)])  # [m, k, i, j]
    ric = (
        np.einsum("kkij->ij", dG)
        - np.einsum("jkik->ij", dG)
        + np.einsum("kkl,lij->ij", G0, G0)
        - np.einsum("kjl,lik->ij", G0, G0)
    )
    df = np.array([_d1(weight, x0, k, h) for k in range(n)])
    ddf = np.empty((n, n))
    for k in range(n):
        ddf[k] = _d1(lambda x: np.array([_d1(weight, x, j, h) for j in range(n)]), x0, k, h)
    hess = ddf - np.einsum("kij,k->ij", G0, df)
    return 0.5 * (ric + ric.T) + 0.5 * (hess + hess.T) - inv_q(q) * np.outer(df, df)


def _nearest_break_distance(spec: WeightedWarpedSpec, t: float) -> float:
    pts = list(spec.breakpoints) + [spec.lo, spec.hi]
    return min(abs(t - p) for p in pts)


def finite_difference_oracle(spec: WeightedWarpedSpec, t: float, step: float = 1e-3) -> RicciValues:
    """Independent check of :func:`weighted_ricci_doubly_warped`.

    Works in coordinates ``(t, x, y)`` with ``x in R^a``, ``y in R^b``, the
    sphere factors in stereographic coordinates ``4 (1 + |x|^2)^{-2} delta``
    scaled by ``alpha(t)^2``, ``beta(t)^2``. Only values of the profiles are
    used. The result is evaluated at the chart origin and converted to the
    orthonormal frame.

    Raises:
        StepTooLarge: ``step`` exceeds a tenth of the distance to the nearest
            breakpoint or domain end.
    """
    d = _nearest_break_distance(spec, t)
    if step > 0.1 * d:
        raise StepTooLarge(f"step {step} exceeds a tenth of the distance {d} to the nearest breakpoint", step=step)
    a, b = spec.a, spec.b
    n = 1 + a + b

    def metric(x):
        tt = x[0]
        xs, ys = x[1 : 1 + a], x[1 + a :]
        cx = 4.0 / (1.0 + xs @ xs) ** 2
        cy = 4.0 / (1.0 + ys @ ys) ** 2
        diag = np.empty(n)
        diag[0] = 1.0
        diag[1 : 1 + a] = spec.alpha.eval(tt) ** 2 * cx
        diag[1 + a :] = spec.beta.eval(tt) ** 2 * cy
        return np.diag(diag)

    def weight(x):
        return spec.f.eval(x[0])

    x0 = np.zeros(n)
    x0[0] = t
    M = chart_weighted_ricci(metric, weight, x0, step, spec.q)
    g = np.diag(metric(x0))
    rtt = M[0, 0]
    ruu = M[1, 1] / g[1] if a else float("nan")
    rvv = M[1 + a, 1 + a] / g[1 + a] if b else float("nan")
    ruv = M[1, 1 + a] / math.sqrt(g[1] * g[1 + a]) if a and b else 0.0
    return RicciValues(float(rtt), float(ruu), float(rvv), float(ruv))


def triple_fd_oracle(
    alpha: Callable[[float, float], float],
    beta: Callable[[float, float], float],
    gamma: Callable[[float], float],
    t: float,
    s: float,
    a: int,
    b: int,
    step: float = 1e-3,
) -> TripleRicci:
    """Chart oracle for the triply warped metric (values only, like the doubly warped one)."""
    n = 2 + a + b

    def metric(x):
        tt, ss = x[0], x[1]
        xs, ys = x[2 : 2 + a], x[2 + a :]
        diag = np.empty(n)
        diag[0] = 1.0
        diag[1] = gamma(tt) ** 2
        diag[2 : 2 + a] = alpha(tt, ss) ** 2 * 4.0 / (1.0 + xs @ xs) ** 2
        diag[2 + a :] = beta(tt, ss) ** 2 * 4.0 / (1.0 + ys @ ys) ** 2
        return np.diag(diag)

    x0 = np.zeros(n)
    x0[0], x0[1] = t, s
    M = chart_weighted_ricci(metric, lambda x: 0.0, x0, step)
    g = np.diag(metric(x0))
    return TripleRicci(
        rtt=float(M[0, 0]),
        rts=float(M[0, 1] / math.sqrt(g[1])),
        rss=float(M[1, 1] / g[1]),
        ruu=float(M[2, 2] / g[2]) if a else float("nan"),
        rvv=float(M[2 + a, 2 + a] / g[2 + a]) if b else float("nan"),
    )


# ---------------------------------------------------------------------------
# small helpers
# ---------------------------------------------------------------------------


def round_sphere_spec(a: int, b: int, lo: float = 1e-3, hi: float = math.pi / 2 - 1e-3) -> WeightedWarpedSpec:
    """``dt^2 + cos^2 t ds_a^2 + sin^2 t ds_b^2`` on ``[lo, hi]``: the round ``S^{a+b+1}``."""
    from .profiles import cosine, sine

    return WeightedWarpedSpec(a, b, cosine(lo, hi), sine(lo, hi), constant(0.0, lo, hi), INF)
