import math

import numpy as np
import pytest

from ricci_forge import constructions as C
from ricci_forge.curvature import ATensorBounds, boundary_quantities, positivity_scan
from ricci_forge.errors import (
    EpsilonTooLarge,
    InfeasibleParameters,
    JunctionSignViolation,
    NoAdmissibleA,
)


@pytest.fixture(scope="module")
def collapse():
    return C.collapse_profiles(2, 2, 1.0, 0.1, 0.05)


@pytest.fixture(scope="module")
def tot_geod():
    return C.tot_geod_profiles(1.0, 1.0, 1e-3, A=ATensorBounds(0.2, 0.2, 0.1))


@pytest.fixture(scope="module")
def cap():
    return C.sphere_cap_extension(3.0, 5, 0.3, 0.05)


@pytest.fixture(scope="module")
def neck():
    return C.neck_profiles(C.NeckParams(3.0, 2, 0.9, 0.1, 0.5))


# -- collapse ---------------------------------------------------------------


def test_collapse_boundary(collapse):
    s = collapse.spec
    assert s.alpha(0.0) == 1.0 and s.alpha(0.0, 1) == 0.0
    assert s.beta(0.0) == 0.1 and s.beta(0.0, 1) == 0.0
    assert s.f(0.0, 1) == pytest.approx(-1.0, abs=1e-15)
    assert collapse.t3 == pytest.approx(-38.050020856805766, rel=1e-12)
    assert s.alpha(collapse.t3) == pytest.approx(0.0, abs=1e-15)


def test_collapse_certified(collapse):
    assert collapse.report.passed
    assert collapse.report.min_margin == pytest.approx(0.002631578947368422, rel=1e-9)


def test_collapse_boundary_quantities(collapse):
    IIu, _, _, Hf = boundary_quantities(collapse.spec, 0.0, side="left", outward=1)
    assert IIu == 0.0
    assert Hf == pytest.approx(1.0)


def test_collapse_precondition():
    with pytest.raises(EpsilonTooLarge):
        C.collapse_profiles(2, 2, 1.0, 0.1, 0.9)


# -- tot_geod ---------------------------------------------------------------


def test_tot_geod_transition(tot_geod):
    tr = tot_geod.transition()
    assert tr["lambda"] == pytest.approx(0.7701511529340699, rel=1e-12)
    assert tr["lambda_threshold"] == pytest.approx(math.cos(1.0))
    assert math.cos(1.0) < tr["lambda"] < 1.0
    assert tr["t_lambda"] == pytest.approx(0.6917182407210458, rel=1e-12)


def test_tot_geod_certified(tot_geod):
    assert tot_geod.report.passed
    assert tot_geod.report.criterion == "diagonal+determinant"
    assert tot_geod.report.min_margin == pytest.approx(0.5477164418123709, rel=1e-9)


def test_tot_geod_inlet_is_totally_geodesic(tot_geod):
    s = tot_geod.spec
    t1 = tot_geod.t1
    assert s.alpha(t1) == 1.0 and s.alpha(t1, 1) == 0.0
    assert s.beta(t1, 1, "right") == pytest.approx(0.0, abs=1e-12)
    assert s.beta(t1, 0, "right") == pytest.approx(1e-3)
    b = tot_geod.boundary
    assert b["II_u"] == 0.0 and b["II_v"] == 0.0


def test_lambda_inequality_zero_a():
    for lam in (0.1, 0.5, 0.99):
        assert C.lambda_inequality_margin(lam, 1.0, 2, 2, ATensorBounds()) == pytest.approx(1.0)


# -- neck / cap -------------------------------------------------------------


def test_neck_boundary_and_margin(neck):
    bd = C.neck_boundary(neck)
    assert bd["gamma_0"] == 1.0 and bd["beta_0"] == 0.5
    assert bd["beta_prime_0"] == 0.0
    assert bd["gamma_prime_0"] == pytest.approx(0.1)
    assert bd["beta_prime_t0"] >= 0.9
    assert neck.report.passed


def test_neck_recheck_independent(neck):
    rep = positivity_scan(neck.spec(), grid_step=neck.t0 / 2000, extra_points=neck.extra_points())
    assert rep.passed


def test_neck_infeasible_never_false_pass():
    try:
        n = C.neck_profiles(C.NeckParams(3.0, 2, 0.999, 1e-4, 0.5))
    except InfeasibleParameters:
        return
    assert positivity_scan(n.spec(), grid_step=n.t0 / 2000, extra_points=n.extra_points()).passed


def test_cap_boundary(cap):
    b = cap.boundary
    assert cap.t_prime == pytest.approx(math.asin(0.05))
    assert b["beta_prime_0"] == pytest.approx(0.05)
    assert b["gamma_prime_0"] == 0.0
    assert b["beta_prime_end"] >= math.cos(0.3)
    assert b["gamma_prime_end"] >= 0.0
    assert cap.spec.beta(cap.t_prime) == pytest.approx(1.0)
    assert cap.report.passed


def test_cap_eps_zero_rejected():
    with pytest.raises(InfeasibleParameters):
        C.sphere_cap_extension(3.0, 5, 0.3, 0.0)


# -- h_eps ------------------------------------------------------------------


def test_h_eps_item_values():
    h = C.h_eps_profile(0.01, 1.02)
    assert h(0.5) == math.cos(0.5)
    assert h(3 * 0.01, 1) == 0.0


def test_h_eps_nu_105_junction_sign():
    with pytest.raises(JunctionSignViolation):
        C.h_eps_profile(0.01, 1.05)
    assert C.h2_slope_ratio_limit(1.05) < -1.0 < C.h2_slope_ratio_limit(1.02)


def test_h2_slope_ratio_limit_at_one():
    assert C.h2_slope_ratio_limit(1.0) == pytest.approx(-17 / 18)
    for eps in (1e-4, 1e-5):
        assert C.h2_slope_ratio(eps, 1.0) == pytest.approx(-17 / 18, abs=1e-5)


@pytest.mark.parametrize(
    "eps,rho", [(0.01, 0.03904353968674007), (0.005, 0.03888429192250331), (0.0025, 0.03884448661029111)]
)
def test_h_eps_certified_m2(eps, rho):
    c = C.certify_h_eps(eps, 1.02, 2)
    assert c.report.passed
    assert c.rho == pytest.approx(rho, rel=1e-9)
    assert c.h_prime_3eps == 0.0


def test_h_eps_converges_to_cos():
    devs = [C.certify_h_eps(e, 1.02, 2) for e in (0.01, 0.005, 0.0025)]
    assert devs[0].sup_dev0 > devs[1].sup_dev0 > devs[2].sup_dev0
    assert devs[0].sup_dev1 > devs[1].sup_dev1 > devs[2].sup_dev1


def test_h_eps_m1_fails_scan():
    c = C.certify_h_eps(0.01, 1.02, 1)
    assert not c.report.passed
    assert c.rho == pytest.approx(-1 / 1.02**2, rel=1e-9)


# -- unlink -----------------------------------------------------------------


def test_unlink_found_eps_and_sff():
    eps, fld, rep = C.find_unlink_eps(1, 0.3, 1.02, 0.05)
    assert eps == 0.05 and rep.passed
    assert rep.min_margin == pytest.approx(0.038831218762014785, rel=1e-9)
    assert rep.second_fundamental_form == (0.0, 0.0)
    assert min(rep.window_samples) >= 200


def test_unlink_round_outside_window():
    fld, _ = C.unlink_field(2, 0.01, 0.3, 1.02)
    R = C.unlink_ricci(fld, np.array([1.0]), np.array([0.6]))
    for k in ("rtt", "rss", "ruu", "rvv"):
        assert R[k][0] == pytest.approx(4.0, abs=1e-10)
    assert R["rts"][0] == pytest.approx(0.0, abs=1e-12)


def test_unlink_nu_105_rejected():
    with pytest.raises(JunctionSignViolation):
        C.unlink_field(1, 0.01, 0.3, 1.05)


# -- isotopy ----------------------------------------------------------------


def test_isotopy_params():
    p = C.isotopy_params(1, 5, 5, 2)
    assert (p.a, p.k) == (2**-8, 8)
    assert p.holds()
    assert not C.isotopy_estimates(2**-7, 1, 5, 5, 2).holds()
    with pytest.raises(NoAdmissibleA):
        C.isotopy_params(1, 5, 5, 2, k_max=3)


@pytest.mark.parametrize("a", [0.5, 0.25, 2**-6])
def test_chi_ramp(a):
    chi = C.chi_ramp(a)
    end = 3 / a
    assert chi(0.0) == 0.0 and chi(end) == pytest.approx(1.0, abs=1e-15)
    assert chi(0.0, 1) == 0.0 and chi(end, 1) == pytest.approx(0.0, abs=1e-15)
    ts = np.linspace(0, end, 4001)
    assert np.max(np.abs(chi(ts, 1, "right"))) <= a + 1e-12
    assert np.max(np.abs(chi(ts, 2, "right"))) <= a + 1e-12
    assert min(chi.continuity_class) >= 2
