"""Piecewise-smooth scalar functions of one variable.

A :class:`Profile` is an ordered list of :class:`Piece` objects whose closed
domains abut. Closed-form pieces differentiate analytically up to order 2;
``Sampled`` pieces use a natural cubic spline and are flagged inexact.

Evaluation is vectorised: ``t`` may be a float or a numpy array.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Any, Iterable, Sequence

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import AmbiguousAtBreakpoint, DomainMismatch, OutOfDomain

#: Absolute tolerance (scaled by max(1, |t|)) for breakpoint location and ambiguity.
BREAK_TOL = 1e-12
#: Relative tolerance used when *measuring* the continuity class of a junction.
CONTINUITY_TOL = 1e-9

PROFILE_VERSION = 1


def _tol(t) -> np.ndarray | float:
    return BREAK_TOL * np.maximum(1.0, np.abs(t))


# ---------------------------------------------------------------------------
# pieces
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Piece:
    """Base class. Subclasses implement ``_raw`` for orders 0, 1, 2."""

    lo: float
    hi: float

    kind = "Piece"
    exact = True

    def __post_init__(self):
        if not self.lo < self.hi:
            raise DomainMismatch(f"{self.kind} piece needs lo < hi, got [{self.lo}, {self.hi}]")

    def _raw(self, t: np.ndarray, order: int) -> np.ndarray:
        raise NotImplementedError

    def __call__(self, t, order: int = 0):
        if order not in (0, 1, 2):
            raise ValueError(f"order must be 0, 1 or 2, got {order}")
        arr = np.asarray(t, dtype=float)
        out = self._raw(arr, order)
        return float(out) if np.ndim(out) == 0 else out

    def restrict(self, lo: float, hi: float) -> "Piece":
        return replace(self, lo=float(lo), hi=float(hi))

    def params(self) -> dict[str, Any]:
        raise NotImplementedError

    def to_dict(self) -> dict[str, Any]:
        return {"kind": self.kind, "params": self.params(), "lo": self.lo, "hi": self.hi}


@dataclass(frozen=True)
class Constant(Piece):
    value: float = 0.0
    kind = "Constant"

    def _raw(self, t, order):
        return np.full_like(t, self.value if order == 0 else 0.0, dtype=float)

    def params(self):
        return {"value": self.value}


@dataclass(frozen=True)
class Linear(Piece):
    """``slope * t + intercept``."""

    slope: float = 1.0
    intercept: float = 0.0
    kind = "Linear"

    def _raw(self, t, order):
        if order == 0:
            return self.slope * t + self.intercept
        return np.full_like(t, self.slope if order == 1 else 0.0, dtype=float)

    def params(self):
        return {"slope": self.slope, "intercept": self.intercept}


@dataclass(frozen=True)
class TrigCos(Piece):
    """``amplitude * cos(frequency * t + phase)``."""

    amplitude: float = 1.0
    frequency: float = 1.0
    phase: float = 0.0
    kind = "TrigCos"

    def _raw(self, t, order):
        x = self.frequency * t + self.phase
        a, w = self.amplitude, self.frequency
        if order == 0:
            return a * np.cos(x)
        if order == 1:
            return -a * w * np.sin(x)
        return -a * w * w * np.cos(x)

    def params(self):
        return {"amplitude": self.amplitude, "frequency": self.frequency, "phase": self.phase}


@dataclass(frozen=True)
class TrigSin(Piece):
    """``amplitude * sin(frequency * t + phase)``."""

    amplitude: float = 1.0
    frequency: float = 1.0
    phase: float = 0.0
    kind = "TrigSin"

    def _raw(self, t, order):
        x = self.frequency * t + self.phase
        a, w = self.amplitude, self.frequency
        if order == 0:
            return a * np.sin(x)
        if order == 1:
            return a * w * np.cos(x)
        return -a * w * w * np.sin(x)

    def params(self):
        return {"amplitude": self.amplitude, "frequency": self.frequency, "phase": self.phase}


@dataclass(frozen=True)
class HyperbolicMix(Piece):
    """``c1 * cosh((t - center)/scale) + c2 * sinh((t - center)/scale)``."""

    c1: float = 1.0
    c2: float = 0.0
    scale: float = 1.0
    center: float = 0.0
    kind = "HyperbolicMix"

    def _raw(self, t, order):
        x = (t - self.center) / self.scale
        ch, sh = np.cosh(x), np.sinh(x)
        k = self.scale ** (-order)
        if order == 1:
            return k * (self.c1 * sh + self.c2 * ch)
        return k * (self.c1 * ch + self.c2 * sh)

    def params(self):
        return {"c1": self.c1, "c2": self.c2, "scale": self.scale, "center": self.center}


@dataclass(frozen=True)
class Polynomial(Piece):
    """``sum_k coeffs[k] * (t - center)**k``.

    Serialised as ``CubicPolynomial`` when there are at most four coefficients.
    """

    coeffs: tuple = (0.0,)
    center: float = 0.0

    @property
    def kind(self):  # type: ignore[override]
        return "CubicPolynomial" if len(self.coeffs) <= 4 else "Polynomial"

    @cached_property
    def _derivs(self):
        c0 = np.asarray(self.coeffs, dtype=float)
        c1 = np.polynomial.polynomial.polyder(c0) if len(c0) > 1 else np.zeros(1)
        c2 = np.polynomial.polynomial.polyder(c1) if len(c1) > 1 else np.zeros(1)
        return (c0, c1, c2)

    def _raw(self, t, order):
        return np.polynomial.polynomial.polyval(t - self.center, self._derivs[order])

    def params(self):
        return {"coeffs": [float(c) for c in self.coeffs], "center": self.center}


def CubicPolynomial(lo: float, hi: float, coeffs: Sequence[float], center: float = 0.0) -> Polynomial:
    """Cubic in the local variable ``t - center``."""
    coeffs = tuple(float(c) for c in coeffs)
    if len(coeffs) > 4:
        raise ValueError("a cubic has at most 4 coefficients")
    return Polynomial(lo, hi, coeffs=coeffs, center=center)


@dataclass(frozen=True)
class LogOfProfile(Piece):
    """``factor * log(inner(t))`` for a positive inner piece."""

    inner: Piece = None  # type: ignore[assignment]
    factor: float = 1.0
    kind = "LogOfProfile"

    @property
    def exact(self):  # type: ignore[override]
        return self.inner.exact

    def _raw(self, t, order):
        g = self.inner._raw(t, 0)
        if order == 0:
            return self.factor * np.log(g)
        u = self.inner._raw(t, 1) / g
        if order == 1:
            return self.factor * u
        return self.factor * (self.inner._raw(t, 2) / g - u * u)

    def params(self):
        return {"inner": self.inner.to_dict(), "factor": self.factor}


@dataclass(frozen=True)
class Transformed(Piece):
    """``amp * inner((t - shift)/scale) + offset``; carries shifts and rescalings."""

    inner: Piece = None  # type: ignore[assignment]
    amp: float = 1.0
    scale: float = 1.0
    shift: float = 0.0
    offset: float = 0.0
    kind = "Transformed"

    @property
    def exact(self):  # type: ignore[override]
        return self.inner.exact

    def _raw(self, t, order):
        x = (t - self.shift) / self.scale
        out = self.amp * self.scale ** (-order) * self.inner._raw(x, order)
        return out + self.offset if order == 0 else out

    def params(self):
        return {
            "inner": self.inner.to_dict(),
            "amp": self.amp,
            "scale": self.scale,
            "shift": self.shift,
            "offset": self.offset,
        }


@dataclass(frozen=True)
class Sampled(Piece):
    """Natural cubic spline through ``(knots, values)``. Inexact."""

    knots: tuple = ()
    values: tuple = ()
    kind = "Sampled"
    exact = False

    @cached_property
    def _spline(self):
        return CubicSpline(np.asarray(self.knots), np.asarray(self.values), bc_type="natural")

    def _raw(self, t, order):
        return self._spline(t, order)

    def params(self):
        return {"knots": [float(k) for k in self.knots], "values": [float(v) for v in self.values]}


def transform(piece: Piece, amp=1.0, scale=1.0, shift=0.0, offset=0.0) -> Piece:
    """Compose ``amp * piece((t - shift)/scale) + offset``, flattening nested transforms."""
    lo, hi = shift + scale * piece.lo, shift + scale * piece.hi
    if scale < 0:
        raise ValueError("scale must be positive")
    if isinstance(piece, Transformed):
        p = piece
        return Transformed(
            lo,
            hi,
            inner=p.inner,
            amp=amp * p.amp,
            scale=scale * p.scale,
            shift=shift + scale * p.shift,
            offset=amp * p.offset + offset,
        )
    return Transformed(lo, hi, inner=piece, amp=amp, scale=scale, shift=shift, offset=offset)


_KINDS = {
    "Constant": Constant,
    "Linear": Linear,
    "TrigCos": TrigCos,
    "TrigSin": TrigSin,
    "HyperbolicMix": HyperbolicMix,
}


def piece_from_dict(d: dict) -> Piece:
    kind, params, lo, hi = d["kind"], dict(d["params"]), float(d["lo"]), float(d["hi"])
    if kind in _KINDS:
        return _KINDS[kind](lo, hi, **{k: float(v) for k, v in params.items()})
    if kind in ("CubicPolynomial", "Polynomial"):
        return Polynomial(lo, hi, coeffs=tuple(float(c) for c in params["coeffs"]), center=float(params["center"]))
    if kind == "LogOfProfile":
        return LogOfProfile(lo, hi, inner=piece_from_dict(params["inner"]), factor=float(params["factor"]))
    if kind == "Transformed":
        inner = piece_from_dict(params.pop("inner"))
        return Transformed(lo, hi, inner=inner, **{k: float(v) for k, v in params.items()})
    if kind == "Sampled":
        return Sampled(lo, hi, knots=tuple(params["knots"]), values=tuple(params["values"]))
    raise ValueError(f"unknown piece kind {kind!r}")


# ---------------------------------------------------------------------------
# profiles
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Profile:
    """Ordered pieces on abutting closed intervals.

    Attributes:
        pieces: The pieces, in increasing order.
        continuity_class: Measured class (0, 1 or 2) at each interior breakpoint.
    """

    pieces: tuple
    continuity_class: tuple = field(init=False)

    def __init__(self, pieces: Iterable[Piece]):
        pieces = list(pieces)
        if not pieces:
            raise DomainMismatch("a profile needs at least one piece")
        snapped = [pieces[0]]
        for prev, nxt in zip(pieces, pieces[1:]):
            gap = nxt.lo - prev.hi
            if abs(gap) > _tol(prev.hi):
                raise DomainMismatch(
                    f"pieces do not abut: [{prev.lo}, {prev.hi}] then [{nxt.lo}, {nxt.hi}]", gap=gap
                )
            snapped.append(nxt if gap == 0 else nxt.restrict(snapped[-1].hi, nxt.hi))
        object.__setattr__(self, "pieces", tuple(snapped))
        object.__setattr__(self, "continuity_class", tuple(self._measure(i) for i in range(len(snapped) - 1)))

    # -- structure --------------------------------------------------------
    @property
    def lo(self) -> float:
        return self.pieces[0].lo

    @property
    def hi(self) -> float:
        return self.pieces[-1].hi

    @property
    def breakpoints(self) -> np.ndarray:
        return np.array([p.hi for p in self.pieces[:-1]], dtype=float)

    @property
    def exact(self) -> bool:
        return all(p.exact for p in self.pieces)

    def _measure(self, i: int) -> int:
        left, right = self.pieces[i], self.pieces[i + 1]
        t = left.hi
        for order in (0, 1, 2):
            lv, rv = left(t, order), right(t, order)
            if abs(lv - rv) > CONTINUITY_TOL * max(1.0, abs(lv), abs(rv)):
                return order - 1 if order > 0 else -1
        return 2

    # -- evaluation -------------------------------------------------------
    def eval(self, t, order: int = 0, side: str | None = None):
        """Evaluate the ``order``-th derivative at ``t``.

        Args:
            t: Point or array of points in ``[lo, hi]``.
            order: 0, 1 or 2.
            side: ``"left"``, ``"right"`` or None. Needed only at a breakpoint
                where the one-sided values differ.

        Raises:
            OutOfDomain: ``t`` outside the domain.
            AmbiguousAtBreakpoint: ``side`` is None at a breakpoint where the
                one-sided limits differ by more than the breakpoint tolerance.
        """
        if side not in (None, "left", "right"):
            raise ValueError(f"side must be 'left', 'right' or None, got {side!r}")
        arr = np.asarray(t, dtype=float)
        scalar = arr.ndim == 0
        arr = np.atleast_1d(arr)
        tol = _tol(arr)
        if np.any(arr < self.lo - tol) or np.any(arr > self.hi + tol):
            bad = arr[(arr < self.lo - tol) | (arr > self.hi + tol)][0]
            raise OutOfDomain(f"t={bad!r} outside [{self.lo}, {self.hi}]", t=float(bad))
        bp = self.breakpoints
        idx_r = np.searchsorted(bp, arr + tol, side="right")
        idx_l = np.searchsorted(bp, arr - tol, side="left")
        if side == "left":
            out = self._by_index(arr, idx_l, order)
        else:
            out = self._by_index(arr, idx_r, order)
            if side is None:
                at = idx_l != idx_r
                if np.any(at):
                    other = self._by_index(arr[at], idx_l[at], order)
                    here = out[at]
                    scale = np.maximum(1.0, np.maximum(np.abs(here), np.abs(other)))
                    diff = np.abs(here - other) > BREAK_TOL * scale
                    if np.any(diff):
                        where = float(arr[at][diff][0])
                        raise AmbiguousAtBreakpoint(
                            f"order-{order} one-sided limits differ at breakpoint t={where!r}", t=where
                        )
        return float(out[0]) if scalar else out

    def _by_index(self, arr: np.ndarray, idx: np.ndarray, order: int) -> np.ndarray:
        out = np.empty_like(arr)
        for k in np.unique(idx):
            sel = idx == k
            out[sel] = self.pieces[int(k)]._raw(arr[sel], order)
        return out

    def eval_left(self, t, order: int = 0):
        return self.eval(t, order, side="left")

    def eval_right(self, t, order: int = 0):
        return self.eval(t, order, side="right")

    def __call__(self, t, order: int = 0, side: str | None = None):
        return self.eval(t, order, side)

    # -- transformations --------------------------------------------------
    def restrict(self, lo: float, hi: float) -> "Profile":
        """Restriction to ``[lo, hi]``; pieces are kept, only their domains shrink."""
        if lo < self.lo - _tol(lo) or hi > self.hi + _tol(hi) or not lo < hi:
            raise OutOfDomain(f"[{lo}, {hi}] not inside [{self.lo}, {self.hi}]")
        out = []
        for p in self.pieces:
            a, b = max(p.lo, lo), min(p.hi, hi)
            if b - a > _tol(b):
                out.append(p if (a, b) == (p.lo, p.hi) else p.restrict(a, b))
        return Profile(out)

    def shifted(self, s: float) -> "Profile":
        """``t -> p(t - s)``."""
        return Profile(transform(p, shift=s) for p in self.pieces)

    def to_dict(self) -> dict:
        return {"pieces": [p.to_dict() for p in self.pieces], "version": PROFILE_VERSION}

    @classmethod
    def from_dict(cls, d: dict) -> "Profile":
        if d.get("version", PROFILE_VERSION) != PROFILE_VERSION:
            raise ValueError(f"unsupported profile version {d.get('version')}")
        return cls(piece_from_dict(p) for p in d["pieces"])


def single(piece: Piece) -> Profile:
    return Profile([piece])


def concat(parts: Sequence[Profile]) -> Profile:
    """Join profiles whose domains abut in order.

    Raises:
        DomainMismatch: gap or overlap larger than the breakpoint tolerance.
    """
    pieces: list[Piece] = []
    for part in parts:
        pieces.extend(part.pieces)
    return Profile(pieces)


def rescale(p: Profile, mu: float) -> Profile:
    """``t -> mu * p(t / mu)``: the metric rescaling of a warping function."""
    if not mu > 0:
        raise ValueError("mu must be positive")
    return Profile(transform(piece, amp=mu, scale=mu) for piece in p.pieces)


def reparametrize(p: Profile, mu: float) -> Profile:
    """``t -> p(t / mu)``: how a weight function transforms under metric rescaling."""
    if not mu > 0:
        raise ValueError("mu must be positive")
    return Profile(transform(piece, scale=mu) for piece in p.pieces)


def log_of(p: Profile, factor: float) -> Profile:
    """``factor * log(p)`` piecewise."""
    return Profile(LogOfProfile(piece.lo, piece.hi, inner=piece, factor=factor) for piece in p.pieces)


# ---------------------------------------------------------------------------
# convenience constructors
# ---------------------------------------------------------------------------


def constant(value: float, lo: float, hi: float) -> Profile:
    return single(Constant(lo, hi, value=value))


def linear(slope: float, intercept: float, lo: float, hi: float) -> Profile:
    return single(Linear(lo, hi, slope=slope, intercept=intercept))


def cosine(lo: float, hi: float, amplitude=1.0, frequency=1.0, phase=0.0) -> Profile:
    return single(TrigCos(lo, hi, amplitude=amplitude, frequency=frequency, phase=phase))


def sine(lo: float, hi: float, amplitude=1.0, frequency=1.0, phase=0.0) -> Profile:
    return single(TrigSin(lo, hi, amplitude=amplitude, frequency=frequency, phase=phase))


def polynomial(coeffs: Sequence[float], lo: float, hi: float, center: float = 0.0) -> Profile:
    return single(Polynomial(lo, hi, coeffs=tuple(float(c) for c in coeffs), center=center))


def hermite_quintic(t0: float, t1: float, y0: Sequence[float], y1: Sequence[float]) -> Polynomial:
    """Quintic on ``[t0, t1]`` with prescribed (value, first, second) derivatives at both ends.

    Coefficients are in the local variable ``t - t0``. The solve happens in
    ``x = (t - t0)/h`` so that very long pieces stay well conditioned.
    """
    h = t1 - t0
    a0, a1, a2 = y0[0], y0[1] * h, y0[2] * h * h / 2.0
    m = np.array([[1.0, 1.0, 1.0], [3.0, 4.0, 5.0], [6.0, 12.0, 20.0]])
    rhs = np.array(
        [
            y1[0] - (a0 + a1 + a2),
            y1[1] * h - (a1 + 2 * a2),
            y1[2] * h * h - 2 * a2,
        ]
    )
    a3, a4, a5 = np.linalg.solve(m, rhs)
    xs = (a0, a1, a2, float(a3), float(a4), float(a5))
    return Polynomial(t0, t1, coeffs=tuple(float(c / h**k) for k, c in enumerate(xs)), center=t0)


def smoothstep5(x):
    """Quintic smoothstep ``6x^5 - 15x^4 + 10x^3`` clamped to [0, 1], with derivatives."""
    x = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
    s = x**3 * (10 - 15 * x + 6 * x * x)
    ds = 30 * x * x * (1 - x) ** 2
    dds = 60 * x * (1 - x) * (1 - 2 * x)
    return s, ds, dds


def quintic_blend(left: Polynomial, right: Polynomial, lo: float, hi: float) -> Polynomial:
    """Exact polynomial ``(1 - S) * left + S * right`` with S the smoothstep on ``[lo, hi]``."""
    P = np.polynomial.polynomial
    w = hi - lo

    def local(p: Polynomial):
        # re-centre p at lo: p(t) = sum c_k (t - c)^k, t - c = (t - lo) + (lo - c)
        shift = lo - p.center
        out = np.zeros(1)
        base = np.array([1.0])
        lin = np.array([shift, 1.0])
        for c in p.coeffs:
            out = P.polyadd(out, c * base)
            base = P.polymul(base, lin)
        return out

    s = np.array([0.0, 0.0, 0.0, 10.0 / w**3, -15.0 / w**4, 6.0 / w**5])
    lp, rp = local(left), local(right)
    coeffs = P.polyadd(P.polymul(P.polysub([1.0], s), lp), P.polymul(s, rp))
    return Polynomial(lo, hi, coeffs=tuple(float(c) for c in coeffs), center=lo)


def is_close(a: float, b: float, tol: float = 1e-10) -> bool:
    return abs(a - b) <= tol * max(1.0, abs(a), abs(b))


__all__ = [
    "BREAK_TOL",
    "CONTINUITY_TOL",
    "Piece",
    "Constant",
    "Linear",
    "TrigCos",
    "TrigSin",
    "HyperbolicMix",
    "Polynomial",
    "CubicPolynomial",
    "LogOfProfile",
    "Transformed",
    "Sampled",
    "Profile",
    "transform",
    "piece_from_dict",
    "single",
    "concat",
    "rescale",
    "reparametrize",
    "log_of",
    "constant",
    "linear",
    "cosine",
    "sine",
    "polynomial",
    "hermite_quintic",
    "smoothstep5",
    "quintic_blend",
]
