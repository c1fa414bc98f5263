import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ricci_forge.errors import AmbiguousAtBreakpoint, DomainMismatch, OutOfDomain
from ricci_forge.profiles import (
    Constant,
    HyperbolicMix,
    Linear,
    Polynomial,
    Profile,
    Sampled,
    TrigCos,
    TrigSin,
    concat,
    constant,
    cosine,
    linear,
    log_of,
    rescale,
    reparametrize,
    sine,
    single,
    transform,
)

PIECES = [
    Constant(0.0, 2.0, value=1.5),
    Linear(0.0, 2.0, slope=-0.7, intercept=0.3),
    TrigCos(0.0, 2.0, amplitude=1.3, frequency=2.0, phase=0.4),
    TrigSin(0.0, 2.0, amplitude=0.8, frequency=1.5, phase=-0.2),
    HyperbolicMix(0.0, 2.0, c1=0.9, c2=-0.4, scale=0.7, center=0.5),
    Polynomial(0.0, 2.0, coeffs=(1.0, -2.0, 0.5, 0.25), center=1.0),
    transform(TrigCos(0.0, 2.0), amp=2.0, scale=0.5, shift=0.1, offset=3.0),
]


def _fd(fn, t, h=1e-5):
    return (fn(t + h) - fn(t - h)) / (2 * h)


@pytest.mark.parametrize("piece", PIECES, ids=lambda p: p.kind)
@given(u=st.floats(0.05, 0.95))
def test_piece_derivatives_match_central_differences(piece, u):
    t = piece.lo + u * (piece.hi - piece.lo)
    d1 = piece(t, 1)
    d2 = piece(t, 2)
    assert abs(d1 - _fd(lambda x: piece(x, 0), t)) <= 1e-6 * (1 + abs(d1))
    assert abs(d2 - _fd(lambda x: piece(x, 1), t)) <= 1e-6 * (1 + abs(d2))


def test_log_piece_is_exact_log():
    p = log_of(cosine(0.0, 1.0), -3.0)
    ts = np.linspace(0.0, 1.0, 11)
    assert np.allclose(p(ts), -3.0 * np.log(np.cos(ts)), atol=1e-14)
    assert np.allclose(p(ts, 1), 3.0 * np.tan(ts), atol=1e-13)
    assert p.exact


def test_concat_then_eval_equals_parts():
    left = cosine(0.0, 1.0)
    right = linear(-math.sin(1.0), math.cos(1.0) + math.sin(1.0), 1.0, 2.0)
    joined = concat([left, right])
    for t in np.linspace(0.01, 0.99, 17):
        assert joined(t) == left(t)
        assert joined(t, 2) == left(t, 2)
    for t in np.linspace(1.01, 1.99, 17):
        assert joined(t) == right(t)
    assert joined.breakpoints.tolist() == [1.0]
    assert joined.continuity_class == (1,)


def test_breakpoint_ambiguity_and_sides():
    p = concat([linear(1.0, 0.0, 0.0, 1.0), linear(-1.0, 2.0, 1.0, 2.0)])
    assert p(1.0) == 1.0
    with pytest.raises(AmbiguousAtBreakpoint):
        p(1.0, 1)
    assert p.eval_left(1.0, 1) == 1.0
    assert p.eval_right(1.0, 1) == -1.0
    assert p.continuity_class == (0,)


def test_domain_errors():
    with pytest.raises(DomainMismatch):
        concat([constant(0.0, 0.0, 1.0), constant(0.0, 1.1, 2.0)])
    with pytest.raises(OutOfDomain):
        cosine(0.0, 1.0)(1.5)
    with pytest.raises(DomainMismatch):
        Constant(1.0, 1.0)


@given(mu=st.floats(0.1, 10.0), u=st.floats(0.0, 1.0))
def test_rescale_round_trip(mu, u):
    p = concat([cosine(0.0, 1.0), sine(1.0, 2.0)])
    back = rescale(rescale(p, mu), 1.0 / mu)
    t = 2.0 * u
    for order in (0, 1, 2):
        side = "right" if t < 2.0 else "left"
        assert abs(back(t, order, side) - p(t, order, side)) <= 1e-12 * (1 + abs(p(t, order, side)))


def test_rescale_and_reparametrize_formulas():
    p = sine(0.0, 1.0)
    r = rescale(p, 2.0)
    w = reparametrize(p, 2.0)
    assert r.hi == pytest.approx(2.0)
    assert r(1.0) == pytest.approx(2.0 * math.sin(0.5))
    assert w(1.0) == pytest.approx(math.sin(0.5))
    assert w(1.0, 1) == pytest.approx(0.5 * math.cos(0.5))


def test_json_round_trip_bit_faithful():
    p = Profile(PIECES[:1]).restrict(0.0, 1.0)
    p = concat([p, single(transform(Polynomial(0.0, 1.0, coeffs=(0.1, 0.2, 0.3)), shift=1.0))])
    p = concat([p, log_of(single(HyperbolicMix(2.0, 3.0, c1=2.0)), 0.5)])
    doc = json.loads(json.dumps(p.to_dict()))
    assert doc["version"] == 1
    q = Profile.from_dict(doc)
    assert q.to_dict() == p.to_dict()
    ts = np.linspace(0.0, 3.0, 301)
    for order in (0, 1, 2):
        assert np.array_equal(q(ts, order, "right"), p(ts, order, "right"))


def test_sampled_piece_is_inexact_spline():
    knots = np.linspace(0.0, 1.0, 21)
    p = single(Sampled(0.0, 1.0, knots=tuple(knots), values=tuple(np.sin(knots))))
    assert not p.exact
    assert abs(p(0.51) - math.sin(0.51)) < 1e-5
    doc = p.to_dict()
    assert Profile.from_dict(doc)(0.37) == p(0.37)
