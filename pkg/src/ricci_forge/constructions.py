"""Explicit warped constructions, each re-certified through :mod:`curvature`.

Every builder assembles profiles, then hands the assembled
:class:`~ricci_forge.curvature.WeightedWarpedSpec` to
:func:`~ricci_forge.curvature.positivity_scan`; nothing here trusts its own
arithmetic for the sign of the curvature.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.integrate import solve_ivp

from .curvature import (
    INF,
    ATensorBounds,
    CurvatureReport,
    Partials,
    WeightedWarpedSpec,
    boundary_quantities,
    positivity_scan,
)
from .errors import (
    EpsilonTooLarge,
    InfeasibleParameters,
    JunctionSignViolation,
    NoAdmissibleA,
    NoAdmissibleLambda,
    PositivityFail,
    SpliceOverflow,
)
from .profiles import (
    Constant,
    HyperbolicMix,
    Linear,
    Polynomial,
    Profile,
    TrigCos,
    TrigSin,
    concat,
    constant,
    hermite_quintic,
    log_of,
    polynomial,
    quintic_blend,
    rescale,
    single,
    smoothstep5,
    transform,
)
from .smoothing import CornerResult, check_glue_jump, glue_at, initial_window, smooth_corner, smooth_corners

#: Upper end of the integration range for the neck ODE.
NECK_T_MAX = 1e30
#: Pieces per unit of ``log t`` in the geometric part of the neck representation.
NECK_GEOMETRIC_RATIO = 1.03
NECK_UNIFORM_PIECES = 64
NECK_BUDGET = 10_000


def _offset(p: Profile, c: float) -> Profile:
    return Profile(transform(piece, offset=c) for piece in p.pieces)


# ---------------------------------------------------------------------------
# neck profiles
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NeckParams:
    """Inputs of the neck lemma; ``a`` of the lemma is ``q_eff``."""

    q_eff: float
    b: int
    lam: float
    eps: float
    r: float

    def __post_init__(self):
        if not 0 < self.lam < 1:
            raise ValueError("lambda must lie in (0, 1)")
        if not (self.eps > 0 and self.r > 0):
            raise ValueError("eps and r must be positive")
        if not (self.q_eff > 0 and math.isfinite(self.q_eff)):
            raise ValueError("q_eff must be positive and finite")
        if self.b <= 1:
            raise ValueError("b must exceed 1")


@dataclass(frozen=True)
class NeckDesign:
    """Knobs of the feedback law that generates (beta, gamma).

    With ``u = gamma'/gamma`` and ``kappa = beta''/beta`` the law is::

        kappa = softmin(sigma u^2, theta B)      B = (b-1)(1-beta'^2)/beta^2 - a u beta'/beta
        u'    = -(1 + zeta) u^2 - (b/a)(1 + eta) kappa

    so the first inequality equals ``a zeta u^2 + b eta kappa`` and the second
    is at least ``(1 - theta) B``. ``zeta`` grows with ``beta'`` (scaled by
    ``margin``) to keep ``B`` positive.
    """

    margin: float = 1.2
    theta: float = 0.5
    eta: float = 0.1

    def to_dict(self) -> dict:
        return {"margin": self.margin, "theta": self.theta, "eta": self.eta}


DEFAULT_DESIGNS = tuple(
    NeckDesign(m, th, eta) for m in (1.2, 1.5, 2.0, 3.0) for th in (0.5, 0.25) for eta in (0.1, 0.3)
)


@dataclass(frozen=True)
class NeckProfiles:
    beta: Profile
    gamma: Profile
    t0: float
    params: NeckParams
    design: NeckDesign | None = None
    report: CurvatureReport | None = field(default=None, repr=False)
    evaluations: int = 0

    def spec(self) -> WeightedWarpedSpec:
        return neck_spec(self.params, self.beta, self.gamma)

    def extra_points(self) -> np.ndarray:
        return piece_interior_points(self.beta, 4)


def neck_spec(p: NeckParams, beta: Profile, gamma: Profile) -> WeightedWarpedSpec:
    """Singly warped spec whose t- and v-components are the two neck inequalities."""
    return WeightedWarpedSpec(
        a=0, b=p.b, alpha=constant(1.0, beta.lo, beta.hi), beta=beta, f=log_of(gamma, -p.q_eff), q=p.q_eff
    )


def piece_interior_points(p: Profile, per_piece: int) -> np.ndarray:
    """``per_piece`` equally spaced interior points of every piece."""
    fr = np.arange(1, per_piece + 1) / (per_piece + 1)
    return np.concatenate([piece.lo + (piece.hi - piece.lo) * fr for piece in p.pieces])


def _neck_law(p: NeckParams, d: NeckDesign):
    a, b = p.q_eff, p.b

    def law(be, pr, u):
        pc = min(max(pr, 0.0), 1.0 - 1e-9)
        crit = a * pc * pc / ((b - 1) * (1 - pc * pc))
        zeta = d.margin * crit
        sigma = (a / b) * (1 + zeta) / (1 + d.eta)
        B = (b - 1) * (1 - pr * pr) / be**2 - a * u * pr / be
        s, th = sigma * u * u, d.theta * max(B, 0.0)
        kappa = s * th / (s + th) if s + th > 0 else 0.0
        du = -(1 + zeta) * u * u - (b / a) * (1 + d.eta) * kappa
        return kappa, du

    return law


def _solve_neck(p: NeckParams, d: NeckDesign):
    law = _neck_law(p, d)

    def rhs(t, y):
        be, pr, _, u = y
        kappa, du = law(be, pr, u)
        return [pr, be * kappa, u, du]

    target = p.lam * (1 + 1e-9)

    def hit(t, y):
        return y[1] - target

    hit.terminal = True
    hit.direction = 1
    sol = solve_ivp(
        rhs, (0.0, NECK_T_MAX), [p.r, 0.0, 0.0, p.eps], method="DOP853",
        rtol=1e-11, atol=1e-14, events=hit, dense_output=True,
    )
    if not sol.t_events[0].size:
        return None, law
    return sol, law


def _neck_knots(T: float, eps: float) -> np.ndarray:
    t1 = min(T, 1.0 / eps)
    uni = np.linspace(0.0, t1, NECK_UNIFORM_PIECES + 1)
    if T <= t1 * NECK_GEOMETRIC_RATIO:
        return np.linspace(0.0, T, NECK_UNIFORM_PIECES + 1)
    n = int(math.ceil(math.log(T / t1) / math.log(NECK_GEOMETRIC_RATIO)))
    geo = np.geomspace(t1, T, n + 1)
    return np.concatenate([uni, geo[1:]])


def _neck_from_solution(p: NeckParams, sol, law) -> tuple[Profile, Profile, float]:
    T = float(sol.t_events[0][0])
    knots = _neck_knots(T, p.eps)
    Y = sol.sol(knots)
    Y[:, 0] = (p.r, 0.0, 0.0, p.eps)
    Y[:, -1] = sol.y_events[0][0]
    bj, gj = [], []
    for i in range(knots.size):
        be, pr, L, u = Y[:, i]
        kappa, du = law(be, pr, u)
        g = math.exp(L)
        bj.append((be, pr, be * kappa))
        gj.append((g, g * u, g * (du + u * u)))
    bp = [hermite_quintic(knots[i], knots[i + 1], bj[i], bj[i + 1]) for i in range(knots.size - 1)]
    gp = [hermite_quintic(knots[i], knots[i + 1], gj[i], gj[i + 1]) for i in range(knots.size - 1)]
    return Profile(bp), Profile(gp), T


def certify_neck(p: NeckParams, beta: Profile, gamma: Profile, threads: int = 1) -> CurvatureReport:
    """Scan both neck inequalities: grid step ``t0/2000`` plus four points inside every piece."""
    spec = neck_spec(p, beta, gamma)
    t0 = beta.hi
    return positivity_scan(spec, None, t0 / 2000, threads=threads, extra_points=piece_interior_points(beta, 4))


def neck_profiles(
    p: NeckParams,
    designs: Sequence[NeckDesign] = DEFAULT_DESIGNS,
    threads: int = 1,
    budget: int = NECK_BUDGET,
) -> NeckProfiles:
    """Profiles (beta, gamma) on ``[0, t0]`` meeting the neck inequalities and boundary table.

    The designs are tried in order; the first whose interpolated profiles pass
    the independent scan is returned.

    Raises:
        InfeasibleParameters: no design reaches ``beta' >= lambda`` with a
            passing scan within ``budget`` evaluations.
    """
    best = -math.inf
    evals = 0
    for d in designs:
        if evals >= budget:
            break
        evals += 1
        sol, law = _solve_neck(p, d)
        if sol is None:
            continue
        beta, gamma, T = _neck_from_solution(p, sol, law)
        rep = certify_neck(p, beta, gamma, threads)
        if rep.passed and _neck_boundary_ok(p, beta, gamma):
            return NeckProfiles(beta, gamma, T, p, d, rep, evals)
        best = max(best, rep.min_margin)
    raise InfeasibleParameters(
        f"no neck design passed for {p}", best_margin=best, evaluations=evals
    )


def _neck_boundary_ok(p: NeckParams, beta: Profile, gamma: Profile) -> bool:
    T = beta.hi
    return (
        gamma(0.0) == 1.0
        and beta(0.0) == p.r
        and gamma(0.0, 1) <= p.eps
        and beta(0.0, 1) == 0.0
        and gamma(T, 1) >= 0.0
        and beta(T, 1) >= p.lam
    )


def neck_boundary(n: NeckProfiles) -> dict:
    T = n.t0
    return {
        "gamma_0": n.gamma(0.0),
        "beta_0": n.beta(0.0),
        "gamma_prime_0": n.gamma(0.0, 1),
        "beta_prime_0": n.beta(0.0, 1),
        "gamma_prime_t0": n.gamma(T, 1),
        "beta_prime_t0": n.beta(T, 1),
        "t0": T,
    }


def rescale_neck(n: NeckProfiles, mu: float) -> tuple[Profile, Profile]:
    """``(mu beta(t/mu), mu gamma(t/mu))``."""
    return rescale(n.beta, mu), rescale(n.gamma, mu)


# ---------------------------------------------------------------------------
# sphere cap with almost totally geodesic boundary
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CapResult:
    spec: WeightedWarpedSpec
    t_prime: float
    neck: NeckProfiles
    report: CurvatureReport = field(repr=False)
    boundary: dict = field(default_factory=dict)
    q_substituted: bool = False


CAP_INLET_FRACTIONS = (0.4, 0.2, 0.1)


def sphere_cap_extension(q: float, n: int, r_cap: float, eps: float, threads: int = 1) -> CapResult:
    """Cap ``cos(t - t')`` on ``[0, t']`` followed by a neck, weight ``-q ln gamma``.

    The cap radius is forced to 1 by ``beta(t') = 1``, so ``t' = arcsin(eps)``.
    ``gamma`` on the cap is a quintic with ``gamma'(0) = 0`` matching value,
    slope and second derivative of the neck at ``t'``.

    Raises:
        InfeasibleParameters: ``eps`` outside ``(0, 1)`` or no certified neck.
    """
    if not 0 < eps < 1:
        raise InfeasibleParameters("eps must lie in (0, 1)", eps=eps)
    if not 0 < r_cap < math.pi / 2:
        raise ValueError("r_cap must lie in (0, pi/2)")
    if n < 3:
        raise ValueError("n must be at least 3")
    substituted = q == INF
    q_eff = float(max(n - 1, 3)) if substituted else float(q)
    tp = math.asin(eps)
    lam = math.cos(r_cap)
    last = None
    for frac in CAP_INLET_FRACTIONS:
        g_in = frac * (n - 1) * tp / q_eff
        neck = neck_profiles(NeckParams(q_eff, n - 1, lam, g_in, 1.0), threads=threads)
        g2 = neck.gamma(0.0, 2)
        g0 = 1.0 - 0.5 * g_in * tp
        cap_gamma = single(hermite_quintic(0.0, tp, (g0, 0.0, 0.0), (1.0, g_in, g2)))
        cap_beta = single(TrigCos(0.0, tp, amplitude=1.0, frequency=1.0, phase=-tp))
        beta = concat([cap_beta, neck.beta.shifted(tp)])
        gamma = concat([cap_gamma, neck.gamma.shifted(tp)])
        hi = beta.hi
        spec = WeightedWarpedSpec(0, n - 1, constant(1.0, 0.0, hi), beta, log_of(gamma, -q_eff), q_eff)
        extra = np.concatenate([np.linspace(0.0, tp, 2001), neck.extra_points() + tp])
        rep = positivity_scan(spec, None, hi / 2000, threads=threads, extra_points=extra)
        last = rep
        if rep.passed:
            bd = {
                "t_prime": tp,
                "beta_prime_0": beta(0.0, 1),
                "gamma_prime_0": gamma(0.0, 1),
                "principal_curvature_0": -beta(0.0, 1) / beta(0.0),
                "beta_prime_end": beta(hi, 1),
                "gamma_prime_end": gamma(hi, 1),
                "lambda": lam,
                "inlet_slope": g_in,
                "t_end": hi,
            }
            return CapResult(spec, tp, neck, rep, bd, substituted)
    raise InfeasibleParameters("sphere cap did not certify", best_margin=last.min_margin if last else None)


# ---------------------------------------------------------------------------
# h_eps
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HEpsPoints:
    eps: float
    nu: float
    t_eps: float
    corners: tuple
    avoid: tuple


def h_eps_tilde(eps: float, nu: float) -> tuple[Profile, HEpsPoints]:
    """The unsmoothed five-piece profile and its special points.

    Raises:
        ValueError: ``nu`` outside ``(1, (3/2)^(1/4))``.
        EpsilonTooLarge: ``t_eps >= 3 eps / nu`` or ``nu tan(nu eps) >= 1``.
    """
    if not (nu > 1 and nu**4 < 1.5):
        raise ValueError("nu must satisfy 1 < nu and nu^4 < 3/2")
    if not eps > 0:
        raise ValueError("eps must be positive")
    x = nu * math.tan(nu * eps)
    if x >= 1 or 6 * eps / nu >= math.pi / 2:
        raise EpsilonTooLarge("eps too large for the hyperbolic piece", eps=eps)
    t_eps = nu * math.atanh(x) + nu * eps
    if t_eps >= 3 * eps / nu:
        raise EpsilonTooLarge(f"t_eps={t_eps!r} is not below 3 eps/nu", eps=eps, t_eps=t_eps)
    a1, a2, a3 = nu * eps, 3 * nu * eps, 6 * eps / nu
    h1 = HyperbolicMix(a1, t_eps, c1=math.cos(a1), c2=-nu * math.sin(a1), scale=nu, center=a1)
    top = float(h1(t_eps))
    slope = (math.cos(a3) - top) / (3 * nu * eps * (2 / nu**2 - 1))
    prof = Profile(
        [
            TrigCos(0.0, a1),
            h1,
            Constant(t_eps, a2, value=top),
            Linear(a2, a3, slope=slope, intercept=top - slope * a2),
            TrigCos(a3, math.pi / 2),
        ]
    )
    pts = HEpsPoints(eps, nu, t_eps, (a1, t_eps, a2, a3), (eps, 3 * eps, 6 * eps))
    return prof, pts


def h_eps_spec(h: Profile, m: int) -> WeightedWarpedSpec:
    """``dt^2 + h^2 ds_m^2 + sin^2 t ds_m^2`` with constant weight."""
    return WeightedWarpedSpec(m, m, h, single(TrigSin(h.lo, h.hi)), constant(0.0, h.lo, h.hi), INF)


def h_eps_profile(eps: float, nu: float, m: int | None = None, threads: int = 1) -> Profile:
    """Smoothed ``h_eps``.

    With ``m`` given, every corner goes through :func:`smooth_corner` for the
    metric of dimension ``2m+1`` (certified windows). With ``m=None`` each
    corner is glued in the first window :func:`smooth_corner` would try,
    without a scan; callers then certify the result themselves.

    Raises:
        JunctionSignViolation: a slope jump is negative.
        NoAdmissibleEps: (``m`` given) a corner window never certifies.
    """
    h, pts = h_eps_tilde(eps, nu)
    if m is not None:
        spec, _ = smooth_corners(h_eps_spec(h, m), pts.corners, avoid=pts.avoid, threads=threads)
        return spec.alpha
    probe = h_eps_spec(h, 1)
    for t_i in pts.corners:
        jump = check_glue_jump(probe, probe, t_i)
        if not jump.usable():
            raise JunctionSignViolation(f"h_eps junction at t={t_i!r} has jumps {jump.to_dict()}", t=t_i)
    for t_i in pts.corners:
        if check_glue_jump(probe, probe, t_i).all_zero:
            continue
        w = initial_window(h.breakpoints, h.lo, h.hi, t_i, pts.avoid)
        h = glue_at(h, t_i, w)
    return h


@dataclass(frozen=True)
class HEpsCertificate:
    eps: float
    nu: float
    m: int
    profile: Profile
    report: CurvatureReport = field(repr=False)
    sup_dev0: float = 0.0
    sup_dev1: float = 0.0
    h_prime_3eps: float = 0.0
    rho_tt: float = 0.0

    @property
    def rho(self) -> float:
        return self.report.min_margin

    def to_dict(self) -> dict:
        return {
            "eps": self.eps,
            "nu": self.nu,
            "m": self.m,
            "rho": self.rho,
            "rho_tt": self.rho_tt,
            "verdict": self.report.verdict,
            "worst_t": self.report.worst_t,
            "sup_abs_h_minus_cos": self.sup_dev0,
            "sup_abs_dh_plus_sin": self.sup_dev1,
            "h_prime_3eps": self.h_prime_3eps,
        }


def certify_h_eps(eps: float, nu: float, m: int, threads: int = 1) -> HEpsCertificate:
    """Scan the full doubly warped metric built from :func:`h_eps_profile`.

    The grid is ``1e-3`` on ``[0, pi/2]`` plus 4000 points across
    ``[nu eps, 6 eps/nu]`` and four points inside every smoothing window.
    """
    h = h_eps_profile(eps, nu)
    spec = h_eps_spec(h, m)
    lo, hi = nu * eps, 6 * eps / nu
    extra = np.concatenate([np.linspace(lo, hi, 4000), piece_interior_points(h.restrict(0.5 * lo, 2 * hi), 4)])
    rep = positivity_scan(spec, None, 1e-3, threads=threads, extra_points=extra)
    ts = np.unique(np.concatenate([np.linspace(0, math.pi / 2, 4001), extra]))
    dev0 = float(np.max(np.abs(h.eval(ts, 0, "right") - np.cos(ts))))
    dev1 = float(np.max(np.abs(h.eval(ts, 1, "right") + np.sin(ts))))
    rtt = np.array([s.rtt for s in rep.samples])
    return HEpsCertificate(eps, nu, m, h, rep, dev0, dev1, float(h(3 * eps, 1)), float(rtt.min()))


def h2_slope_ratio(eps: float, nu: float) -> float:
    """``h2'(6 eps/nu) / sin(6 eps/nu)`` straight from the closed form (any ``nu >= 1``)."""
    x = nu * math.tan(nu * eps)
    t_eps = nu * math.atanh(x) + nu * eps
    a1 = nu * eps
    top = math.cos(a1) * math.cosh((t_eps - a1) / nu) - nu * math.sin(a1) * math.sinh((t_eps - a1) / nu)
    a3 = 6 * eps / nu
    slope = (math.cos(a3) - top) / (3 * nu * eps * (2 / nu**2 - 1))
    return slope / math.sin(a3)


def h2_slope_ratio_limit(nu: float) -> float:
    return (nu**6 + nu**4 - 36) / (36 * (2 - nu**2))


# ---------------------------------------------------------------------------
# unlinking deformation of S^{2m+1}
# ---------------------------------------------------------------------------


def chi_cutoff() -> Profile:
    """``1 - smoothstep5`` on ``[0, 1]``; extended by 1 to the left and 0 to the right."""
    return polynomial([1.0, 0.0, 0.0, -10.0, 15.0, -6.0], 0.0, 1.0)


@dataclass(frozen=True)
class UnlinkField:
    """``alpha~(t, s) = chi(s/delta) h(t) + (1 - chi(s/delta)) cos t``."""

    m: int
    eps: float
    delta: float
    nu: float
    h_eps: Profile
    chi: Profile

    def _chi(self, s):
        x = np.clip(np.asarray(s, dtype=float) / self.delta, 0.0, 1.0)
        c = self.chi.eval(x, 0, "right")
        c1 = self.chi.eval(x, 1, "right") / self.delta
        c2 = self.chi.eval(x, 2, "right") / self.delta**2
        return c, c1, c2

    def alpha_tilde(self, t, s, side: str = "right") -> Partials:
        t = np.asarray(t, dtype=float)
        s = np.asarray(s, dtype=float)
        H = self.h_eps.eval(t, 0, side)
        H1 = self.h_eps.eval(t, 1, side)
        H2 = self.h_eps.eval(t, 2, side)
        C0, C1, C2 = np.cos(t), -np.sin(t), -np.cos(t)
        c, c1, c2 = self._chi(s)
        return Partials(
            v=c * H + (1 - c) * C0,
            t=c * H1 + (1 - c) * C1,
            s=c1 * (H - C0),
            tt=c * H2 + (1 - c) * C2,
            ts=c1 * (H1 - C1),
            ss=c2 * (H - C0),
        )

    def second_fundamental_form(self, t: float, s: float) -> tuple[float, float]:
        """Components ``(alpha_t/alpha, alpha_s/(alpha gamma))`` of II on ``S^m``.

        Here ``alpha = alpha~ cos s`` and ``gamma = cos t``.
        """
        P = self.alpha_tilde(t, s)
        a = P.v * math.cos(s)
        at = P.t * math.cos(s)
        as_ = P.s * math.cos(s) - P.v * math.sin(s)
        return float(at / a), float(as_ / (a * math.cos(t)))


def unlink_ricci(field_: UnlinkField, t, s, side: str = "right") -> dict:
    """The five Ricci components of ``g_alpha~`` on the frame ``(d_t, d_s/gamma, u/alpha, v/beta)``.

    ``cot(s) alpha~_s`` is replaced by its limit ``alpha~_ss`` at ``s = 0``.
    ``rvv`` is NaN when ``m = 1`` (no ``v`` direction).
    """
    m = field_.m
    t = np.asarray(t, dtype=float)
    s = np.asarray(s, dtype=float)
    P = field_.alpha_tilde(t, s, side)
    v = P.v
    tt, ts = np.tan(t), np.tan(s)
    ct2 = np.cos(t) ** 2
    cs2 = np.cos(s) ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        cot_as = np.where(s > 0, P.s / np.where(s > 0, ts, 1.0), P.ss)
    rtt = m * (1 - P.tt / v)
    rts = (m / np.cos(t)) * (-P.ts / v + ts * P.t / v - tt * P.s / v + ts * tt)
    rss = (m / ct2) * (1 - P.ss / v + 2 * ts * P.s / v) + m * (1 + tt * P.t / v)
    ruu = (
        (1 / ct2)
        * (
            -P.ss / v
            + 2 * m * ts * P.s / v
            - (m - 1) * P.s**2 / v**2
            - (m - 1) * ts**2
            - (m - 1) * cot_as / v
            + m
        )
        - P.tt / v
        + (m - 1) * (1 - P.t**2 * cs2) / (v**2 * cs2)
        + m * tt * P.t / v
    )
    if m >= 2:
        rvv = m * (1 + (1 / ct2) * (1 - cot_as / v) + tt * P.t / v)
    else:
        rvv = np.full_like(rtt, np.nan)
    return {"rtt": rtt, "rts": rts, "rss": rss, "ruu": ruu, "rvv": rvv}


def unlink_margin(R: dict) -> np.ndarray:
    """Smallest eigenvalue of the (t, s) block, ``ruu`` and (when present) ``rvv``."""
    tr = 0.5 * (R["rtt"] + R["rss"])
    disc = np.sqrt(0.25 * (R["rtt"] - R["rss"]) ** 2 + R["rts"] ** 2)
    return np.fmin(np.fmin(tr - disc, R["ruu"]), R["rvv"])


@dataclass(frozen=True)
class UnlinkReport:
    min_margin: float
    worst_t: float
    worst_s: float
    samples: int
    window_samples: tuple
    rho_tt: float
    tt_bound_margin: float
    second_fundamental_form: tuple

    @property
    def verdict(self) -> str:
        return "pass" if self.passed else "fail"

    @property
    def passed(self) -> bool:
        return self.min_margin > 0 and self.tt_bound_margin >= 0

    def to_dict(self) -> dict:
        return {
            "min_margin": self.min_margin,
            "worst_t": self.worst_t,
            "worst_s": self.worst_s,
            "samples": self.samples,
            "window_samples": list(self.window_samples),
            "rho_tt": self.rho_tt,
            "tt_bound_margin": self.tt_bound_margin,
            "second_fundamental_form_3eps": list(self.second_fundamental_form),
            "verdict": self.verdict,
        }


def _unlink_grids(eps: float, nu: float, delta: float, h: Profile, top: float):
    tw = np.linspace(eps, 6 * eps, 241)
    t_all = np.unique(np.concatenate([np.linspace(0.0, top, 400), tw]))
    bps = h.breakpoints
    bps = bps[(bps > 0) & (bps < top)]
    sw = np.linspace(0.0, delta, 241)
    s_all = np.unique(np.concatenate([np.linspace(0.0, top, 200), sw]))
    return t_all, bps, s_all


def unlink_field(
    m: int, eps: float, delta: float, nu: float = 1.05, strict: bool = True, threads: int = 1
) -> tuple[UnlinkField, UnlinkReport]:
    """Build ``alpha~`` and certify the five Ricci expressions on a ``(t, s)`` grid.

    The grid covers ``[0, pi/2 - 0.01]^2`` and is refined so that the window
    ``(eps, 6 eps) x (0, delta)`` gets at least 200 x 200 samples; both
    one-sided limits are taken at every breakpoint of ``h_eps``. A second,
    formula-level check asserts ``-alpha~_tt/alpha~ >= -1 + rho/(2m)`` where
    ``rho`` is the lower bound of ``m (1 - h''/h)``.

    Raises:
        PositivityFail: (``strict``) the margin or the formula-level check fails.
    """
    if m < 1:
        raise ValueError("m must be at least 1")
    if not (delta > 0 and delta < math.pi / 2):
        raise ValueError("delta must lie in (0, pi/2)")
    h = h_eps_profile(eps, nu)
    fld = UnlinkField(m, eps, delta, nu, h, chi_cutoff())
    top = math.pi / 2 - 0.01
    t_all, bps, s_all = _unlink_grids(eps, nu, delta, h, top)
    T, S = np.meshgrid(t_all, s_all, indexing="ij")
    R = unlink_ricci(fld, T, S, "right")
    marg = unlink_margin(R)
    att = fld.alpha_tilde(T, S, "right")
    ratio = -att.tt / att.v
    if bps.size:
        Tb, Sb = np.meshgrid(bps, s_all, indexing="ij")
        Rb = unlink_ricci(fld, Tb, Sb, "left")
        mb = unlink_margin(Rb)
        pb = fld.alpha_tilde(Tb, Sb, "left")
        marg = np.concatenate([marg.ravel(), mb.ravel()])
        Tflat = np.concatenate([T.ravel(), Tb.ravel()])
        Sflat = np.concatenate([S.ravel(), Sb.ravel()])
        ratio = np.concatenate([ratio.ravel(), (-pb.tt / pb.v).ravel()])
    else:
        marg, Tflat, Sflat, ratio = marg.ravel(), T.ravel(), S.ravel(), ratio.ravel()
    k = int(np.argmin(marg))
    ts_dense = np.unique(np.concatenate([t_all, bps]))
    hh = np.concatenate([h.eval(ts_dense, 2, "right"), h.eval(bps, 2, "left")]) / np.concatenate(
        [h.eval(ts_dense, 0, "right"), h.eval(bps, 0, "left")]
    )
    rho_tt = float(np.min(m * (1 - hh)))
    rho = min(rho_tt, 0.999 * m)
    tt_margin = float(np.min(ratio - (-1 + rho / (2 * m))))
    nwin_t = int(np.sum((t_all > eps) & (t_all < 6 * eps)))
    nwin_s = int(np.sum((s_all >= 0) & (s_all < delta)))
    rep = UnlinkReport(
        float(marg[k]), float(Tflat[k]), float(Sflat[k]), int(marg.size), (nwin_t, nwin_s),
        rho_tt, tt_margin, fld.second_fundamental_form(3 * eps, 0.0),
    )
    if strict and not rep.passed:
        raise PositivityFail(
            f"unlink metric fails at (t, s)=({rep.worst_t!r}, {rep.worst_s!r})",
            t=rep.worst_t, s=rep.worst_s, margin=rep.min_margin, tt_bound_margin=tt_margin,
        )
    return fld, rep


def find_unlink_eps(
    m: int, delta: float, nu: float = 1.05, eps_max: float = 0.05, halvings: int = 10
) -> tuple[float, UnlinkField, UnlinkReport]:
    """Largest ``eps = eps_max / 2^k`` whose unlink certification passes.

    Raises:
        PositivityFail: no tried value passes.
    """
    last = None
    for k in range(halvings + 1):
        eps = eps_max / 2**k
        try:
            fld, rep = unlink_field(m, eps, delta, nu, strict=False)
        except EpsilonTooLarge:
            continue
        last = rep
        if rep.passed:
            return eps, fld, rep
    raise PositivityFail("no admissible eps found", last_margin=None if last is None else last.min_margin)


# ---------------------------------------------------------------------------
# collapse
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CollapseResult:
    spec: WeightedWarpedSpec
    t3: float
    t_eps: float
    corner: CornerResult = field(repr=False)
    report: CurvatureReport = field(repr=False)
    boundary: dict = field(default_factory=dict)


def collapse_profiles(
    a: int, b: int, lambda3: float, mu: float, eps: float, threads: int = 1, grid_step: float = 1e-3
) -> CollapseResult:
    """Profiles on ``[t3, 0]`` collapsing ``S^a`` at ``t3``.

    ``alpha~ = 1 - eps t^2/(2L)`` with ``L = 2(1 - eps)/eps`` so that
    ``alpha~(-L) = alpha~'(-L) = eps``; then ``sin(t - t3)`` below ``t_eps = -L``.

    Raises:
        EpsilonTooLarge: a precondition inequality fails.
    """
    if not (lambda3 > 0 and mu > 0):
        raise ValueError("lambda3 and mu must be positive")
    if not 0 < eps < 1:
        raise EpsilonTooLarge("eps must lie in (0, 1)", eps=eps)
    c = math.sqrt(1 - eps * eps)
    checks = {
        "ruu_bound": (a - 1) * (1 - eps * eps) - lambda3 * eps,
        "dalpha": c - eps,
        "dtrace": a * c / eps - a - lambda3,
    }
    bad = {k: v for k, v in checks.items() if not v > 0}
    if bad:
        raise EpsilonTooLarge(f"eps={eps!r} too large: {bad}", eps=eps, **bad)
    L = 2 * (1 - eps) / eps
    t_eps = -L
    t3 = t_eps - math.asin(eps)
    alpha = concat([single(TrigSin(t3, t_eps, phase=-t3)), polynomial([1.0, 0.0, -eps / (2 * L)], t_eps, 0.0)])
    beta = constant(mu, t3, 0.0)
    f = concat([constant(lambda3 * L, t3, t_eps), single(Linear(t_eps, 0.0, slope=-lambda3, intercept=0.0))])
    spec = WeightedWarpedSpec(a, b, alpha, beta, f, INF)
    corner = smooth_corner(spec, t_eps, threads=threads)
    out = corner.spec
    rep = positivity_scan(out, None, grid_step, threads=threads)
    bd = {
        "alpha_0": out.alpha(0.0),
        "alpha_prime_0": out.alpha(0.0, 1),
        "beta_0": out.beta(0.0),
        "beta_prime_0": out.beta(0.0, 1),
        "f_prime_0": out.f(0.0, 1),
        "alpha_t3": out.alpha(t3),
        "alpha_prime_t3": out.alpha(t3, 1),
        "beta_prime_t3": out.beta(t3, 1),
        "f_prime_t3": out.f(t3, 1),
    }
    return CollapseResult(out, t3, t_eps, corner, rep, bd)


# ---------------------------------------------------------------------------
# transition to a totally geodesic boundary
# ---------------------------------------------------------------------------


def lambda_inequality_margin(lam: float, r: float, a: int, b: int, A: ATensorBounds) -> float:
    """LHS minus RHS of the admissibility inequality for ``lambda``; uses ``sin^2(t_lambda/r) = 1 - lambda^2``."""
    s2 = r * r * (1 - lam * lam)
    return ((a - 1) - 2 * s2 * A.AuAu) * (b - 1) / (r * r) - s2 * A.deltaA**2


def choose_lambda(r: float, t0: float, a: int, b: int, A: ATensorBounds) -> tuple[float, float]:
    """Threshold of the inequality on ``(cos(t0/r), 1)`` by bisection, and the midpoint toward 1.

    Returns:
        ``(lam, threshold)``.

    Raises:
        NoAdmissibleLambda: the inequality fails even as ``lambda -> 1``.
    """
    lo = math.cos(t0 / r)
    if not lambda_inequality_margin(1.0, r, a, b, A) > 0:
        raise NoAdmissibleLambda("inequality fails as lambda -> 1", a=a, b=b)
    if lambda_inequality_margin(lo, r, a, b, A) > 0:
        thr = lo
    else:
        x0, x1 = lo, 1.0
        while x1 - x0 > 1e-12:
            mid = 0.5 * (x0 + x1)
            if lambda_inequality_margin(mid, r, a, b, A) > 0:
                x1 = mid
            else:
                x0 = mid
        thr = x1
    return 0.5 * (thr + 1.0), thr


@dataclass(frozen=True)
class TotGeodResult:
    spec: WeightedWarpedSpec
    t1: float
    lam: float
    lam_threshold: float
    t_lam: float
    t0_prime: float
    t1_prime: float
    t1_splice: float
    r_prime: float
    neck: NeckProfiles = field(repr=False)
    corner: CornerResult = field(repr=False)
    report: CurvatureReport = field(repr=False)
    boundary: dict = field(default_factory=dict)
    q_eff: float = 3.0

    def transition(self) -> dict:
        return {
            "t1": self.t1,
            "lambda": self.lam,
            "lambda_threshold": self.lam_threshold,
            "t_lambda": self.t_lam,
            "t0_prime": self.t0_prime,
            "t1_prime": self.t1_prime,
            "t1_splice": self.t1_splice,
            "r_prime": self.r_prime,
            "q_eff": self.q_eff,
        }


def tot_geod_profiles(
    r: float,
    t0: float,
    mu: float,
    f0: float = 0.0,
    A: ATensorBounds | None = None,
    q: float = INF,
    a: int = 2,
    b: int = 2,
    neck_eps: float = 1.0,
    threads: int = 1,
) -> TotGeodResult:
    """Transition from ``r sin(t/r)`` near ``t0`` to a totally geodesic end at ``t1``.

    ``beta~`` on ``[t1', t0']`` is a circular arc ``A sin((t - t1')/R)`` with
    ``A/R = lambda`` matched in value and slope to ``r sin(t/r)`` at
    ``t0' = (t_lambda + t0)/2``. A neck rescaled so that ``beta(t1) = mu``
    is spliced where the arc reaches the neck's final value.

    Raises:
        NoAdmissibleLambda: see :func:`choose_lambda`.
        SpliceOverflow: the rescaled neck ends above ``beta~(t0')``.
    """
    A = A or ATensorBounds()
    if not 0 < t0 < r * math.pi / 2:
        raise ValueError("t0 must lie in (0, r pi/2)")
    if not mu > 0:
        raise ValueError("mu must be positive")
    lam, thr = choose_lambda(r, t0, a, b, A)
    t_lam = r * math.acos(lam)
    t0p = 0.5 * (t_lam + t0)
    phi = math.acos(math.cos(t0p / r) / lam)
    amp = r * math.sin(t0p / r) / math.sin(phi)
    R = amp / lam
    t1p = t0p - R * phi
    q_eff = float(max(a, b, 3)) if q == INF else float(q)
    neck = neck_profiles(NeckParams(q_eff, b, lam, neck_eps, 1.0), threads=threads)
    rp = mu / neck.params.r
    nb, ng = rescale_neck(neck, rp)
    end_val = nb(nb.hi)
    top = r * math.sin(t0p / r)
    if end_val >= top:
        raise SpliceOverflow(f"rescaled neck ends at {end_val!r} >= {top!r}", end=end_val, limit=top)
    t1s = t1p + R * math.asin(end_val / amp)
    shift = t1s - nb.hi
    t1 = shift
    nb, ng = nb.shifted(shift), ng.shifted(shift)
    nf = log_of(ng, -q_eff)
    nf = _offset(nf, f0 - nf(nf.hi))
    arc = single(TrigSin(t1s, t0p, amplitude=amp, frequency=1.0 / R, phase=-t1p / R))
    circ = single(TrigSin(t0p, t0, amplitude=r, frequency=1.0 / r))
    beta = concat([nb, arc, circ])
    f = concat([nf, constant(f0, t1s, t0)])
    spec = WeightedWarpedSpec(a, b, constant(1.0, t1, t0), beta, f, q)
    corner = smooth_corner(spec, t1s, A, threads=threads)
    out = corner.spec
    extra = np.concatenate([piece_interior_points(nb, 4), np.linspace(t1s, t0, 4001)])
    rep = positivity_scan(out, A, min(1e-3, (t0 - t1) / 2000), threads=threads, extra_points=extra)
    IIu, IIv, H, Hf = boundary_quantities(out, t1, "right", outward=-1)
    bd = {
        "alpha_t1": out.alpha(t1),
        "beta_t1": out.beta(t1),
        "beta_prime_t1": out.beta(t1, 1),
        "II_u": IIu,
        "II_v": IIv,
        "f_prime_t1": out.f(t1, 1),
        "beta_t0": out.beta(t0),
        "beta_prime_t0": out.beta(t0, 1),
        "f_t0": out.f(t0),
        "f_prime_t0": out.f(t0, 1),
    }
    return TotGeodResult(out, t1, lam, thr, t_lam, t0p, t1p, t1s, rp, neck, corner, rep, bd, q_eff)


# ---------------------------------------------------------------------------
# isotopy ramp
# ---------------------------------------------------------------------------


def chi_ramp(a: float) -> Profile:
    """Smoothed four-piece ramp ``chi_a`` on ``[0, 3/a]``.

    Quintic blends of width ``a/10`` replace the three junctions, giving a
    ``C^2`` profile.
    """
    if not 0 < a < 1:
        raise ValueError("a must lie in (0, 1)")
    c1, c2, c3, end = 1.0, 2.0 / a, (2.0 + a) / a, 3.0 / a
    q1 = Polynomial(0.0, c1, coeffs=(0.0, 0.0, a / 4), center=0.0)
    ln = Polynomial(c1, c2, coeffs=(-a / 4, a / 2), center=0.0)
    q2 = Polynomial(c2, c3, coeffs=(1.0, 0.0, -a / 4), center=c3)
    one = Polynomial(c3, end, coeffs=(1.0,), center=0.0)
    w = a / 20
    pieces = [
        q1.restrict(0.0, c1 - w),
        quintic_blend(q1, ln, c1 - w, c1 + w),
        ln.restrict(c1 + w, c2 - w),
        quintic_blend(ln, q2, c2 - w, c2 + w),
        q2.restrict(c2 + w, c3 - w),
        quintic_blend(q2, one, c3 - w, c3 + w),
        one.restrict(c3 + w, end),
    ]
    return Profile(pieces)


@dataclass(frozen=True)
class IsotopyParams:
    a: float
    k: int
    c: float
    C: float
    n: int
    lam: float
    C_prime_terms: dict
    ric_tt_lower: float
    mixed_upper: float
    ric_vv_lower: float

    @property
    def C_prime_a(self) -> float:
        return sum(self.C_prime_terms.values())

    def holds(self) -> bool:
        return self.ric_tt_lower * self.ric_vv_lower > self.mixed_upper**2 and self.ric_vv_lower > 0

    def weight_slope(self, t):
        """``f'(t) = 2 C a (t - 3/a) + lambda``."""
        return 2 * self.C * self.a * (np.asarray(t) - 3 / self.a) + self.lam

    def to_dict(self) -> dict:
        return {
            "a": self.a,
            "k": self.k,
            "C_prime_a": self.C_prime_a,
            "C_prime_terms": dict(self.C_prime_terms),
            "ric_tt_lower": self.ric_tt_lower,
            "mixed_upper": self.mixed_upper,
            "ric_vv_lower": self.ric_vv_lower,
            "f_prime_0": float(self.weight_slope(0.0)),
            "f_prime_end": float(self.weight_slope(3 / self.a)),
            "f_second": 2 * self.C * self.a,
        }


def isotopy_estimates(a: float, c: float, C: float, n: int, lam: float) -> IsotopyParams:
    """The three curvature estimates at ``a``; ``lambda`` enters through ``|lambda|``."""
    terms = {
        "half_C_a2_plus_a": 0.5 * C * (a * a + a),
        "half_n_C2_a2": 0.5 * n * C * C * a * a,
        "quarter_C2_a2": 0.25 * C * C * a * a,
        "half_C_a_6C_plus_lambda": 0.5 * C * a * (6 * C + abs(lam)),
    }
    k = int(round(-math.log2(a))) if a > 0 else 0
    return IsotopyParams(
        a, k, c, C, n, lam, terms, C * a, (n + 1) * a * C / 2, c - sum(terms.values())
    )


def isotopy_params(c: float, C: float, n: int, lam: float, k_max: int = 60) -> IsotopyParams:
    """Largest ``a = 2^-k`` (``k >= 1``) satisfying ``C a (c - C'a) > ((n+1) a C / 2)^2``.

    Raises:
        NoAdmissibleA: no ``k <= k_max`` works.
    """
    if not (c > 0 and C > 0):
        raise ValueError("c and C must be positive")
    for k in range(1, k_max + 1):
        est = isotopy_estimates(2.0**-k, c, C, n, lam)
        if est.holds():
            return est
    raise NoAdmissibleA(f"no a = 2^-k with k <= {k_max}", c=c, C=C, n=n)


__all__ = [
    "NeckParams",
    "NeckDesign",
    "NeckProfiles",
    "neck_profiles",
    "neck_spec",
    "certify_neck",
    "neck_boundary",
    "rescale_neck",
    "CapResult",
    "sphere_cap_extension",
    "h_eps_tilde",
    "h_eps_spec",
    "h_eps_profile",
    "certify_h_eps",
    "HEpsCertificate",
    "h2_slope_ratio",
    "h2_slope_ratio_limit",
    "UnlinkField",
    "UnlinkReport",
    "chi_cutoff",
    "unlink_field",
    "unlink_ricci",
    "unlink_margin",
    "find_unlink_eps",
    "CollapseResult",
    "collapse_profiles",
    "lambda_inequality_margin",
    "choose_lambda",
    "TotGeodResult",
    "tot_geod_profiles",
    "chi_ramp",
    "IsotopyParams",
    "isotopy_estimates",
    "isotopy_params",
]
