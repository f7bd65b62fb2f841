"""Domination, Birkhoff sums, quadrature, interconnection, holonomy, twist."""

from __future__ import annotations

import math

import numpy as np
import pytest
from scipy.integrate import quad

from skewlab.errors import DominationViolated, NotSameLeaf
from skewlab.torus_anosov import periodic_points, validate_automorphism
from skewlab.skew_product import (
    Absent,
    InterconnectionWitness,
    KanFiberFamily,
    TrigPolynomial,
    UnstableLeafPoint,
    birkhoff_sum,
    boundary_exponents,
    boundary_interconnection,
    central_twist_decay,
    check_domination,
    make_skew_product,
    mostly_contracting_check,
    nonpositive_exponent_consequence,
    perturb_flow,
    unstable_holonomy_fiber,
)

CAT = [[2, 1], [1, 1]]
GOLD = (1 + math.sqrt(5)) / 2
COS36 = (1 + math.sqrt(5)) / 4  # = cos(2 pi / 10), appears at the period-2 orbit


@pytest.fixture(scope="module")
def cat():
    return validate_automorphism([[2, 1], [1, 1]])


@pytest.fixture(scope="module")
def default_system(cat):
    return make_skew_product(cat, KanFiberFamily(0.3))


def contracting_period2(cat, F):
    orbs = [o for o in periodic_points(cat, 2) if o.period == 2]
    return next(o for o in orbs if birkhoff_sum(F, o, 0).total < 0)


# ---------------------------------------------------------------------------
# domination
# ---------------------------------------------------------------------------

def test_default_margins(cat, default_system):
    m = default_system.margins
    lam_s = (3 - math.sqrt(5)) / 2
    lam_u = (3 + math.sqrt(5)) / 2
    assert m.lower == pytest.approx(0.7 - lam_s, abs=1e-9)
    assert m.upper == pytest.approx(lam_u - 1.3, abs=1e-9)


def test_product_system_margins(cat):
    m = check_domination(cat, KanFiberFamily(0.0))
    assert m.lower == pytest.approx(1 - (3 - math.sqrt(5)) / 2, abs=1e-9)
    assert m.upper == pytest.approx((3 + math.sqrt(5)) / 2 - 1, abs=1e-9)


def test_domination_violated(cat):
    with pytest.raises(DominationViolated):
        check_domination(cat, KanFiberFamily(0.7))


def test_psi_normalization():
    psi = TrigPolynomial((((1, 0), 3.0, 0.0), ((0, 1), 0.0, 1.0)))
    assert psi.normalized().l1_norm == pytest.approx(1.0)


# ---------------------------------------------------------------------------
# Birkhoff sums
# ---------------------------------------------------------------------------

def test_fixed_point_sum(cat, default_system):
    orb = periodic_points(cat, 1)[0]
    s = birkhoff_sum(default_system, orb, 0)
    assert s.total == pytest.approx(math.log(1.3), abs=1e-14)
    assert s.exponent > 0


def test_period_two_sum_exact_cosines(cat, default_system):
    # psi at the orbit {(3/5,1/5),(2/5,4/5)} takes the value -cos(36 deg)
    # at both points, so S = 2 ln(1 - 0.3 cos36)
    orb = contracting_period2(cat, default_system)
    s = birkhoff_sum(default_system, orb, 0)
    assert s.total == pytest.approx(2 * math.log(1 - 0.3 * COS36), abs=1e-12)
    assert s.total < 0
    s1 = birkhoff_sum(default_system, orb, 1)
    assert s1.total == pytest.approx(2 * math.log(1 + 0.3 * COS36), abs=1e-12)
    assert s1.total > 0


def test_zero_epsilon_sums(cat):
    F = make_skew_product(cat, KanFiberFamily(0.0))
    for oe in boundary_exponents(F, 2):
        assert oe.sum0.total == 0.0
        assert oe.sum1.total == 0.0


def test_sum_orbit_invariant(cat, default_system):
    # identical for every representative of the same orbit
    orb = contracting_period2(cat, default_system)
    rotated = type(orb)(
        base=orb.points[1], period=orb.period,
        points=orb.points[1:] + orb.points[:1],
    )
    a = birkhoff_sum(default_system, orb, 0).total
    b = birkhoff_sum(default_system, rotated, 0).total
    assert a == pytest.approx(b, abs=1e-15)


# ---------------------------------------------------------------------------
# quadrature
# ---------------------------------------------------------------------------

def test_quadrature_closed_form(default_system):
    # two independent oracles: the closed form ln((1+sqrt(1-eps^2))/2) and
    # adaptive quadrature of the integrand
    res = mostly_contracting_check(default_system, 0)
    closed = math.log((1 + math.sqrt(1 - 0.09)) / 2)
    assert res.value == pytest.approx(closed, abs=1e-6)
    numeric, _ = quad(lambda u: math.log(1 + 0.3 * math.cos(2 * math.pi * u)), 0, 1)
    assert res.value == pytest.approx(numeric, abs=1e-6)
    assert res.verdict == "negative"


def test_quadrature_boundary_one_symmetric(default_system):
    r0 = mostly_contracting_check(default_system, 0)
    r1 = mostly_contracting_check(default_system, 1)
    assert r1.value == pytest.approx(r0.value, abs=1e-12)
    assert r1.verdict == "negative"


def test_quadrature_inconclusive_at_zero(cat):
    F = make_skew_product(cat, KanFiberFamily(0.0))
    res = mostly_contracting_check(F, 0)
    assert res.value == pytest.approx(0.0, abs=1e-14)
    assert res.verdict == "inconclusive"


# ---------------------------------------------------------------------------
# interconnection
# ---------------------------------------------------------------------------

def test_default_witness_sign_pattern(cat, default_system):
    w = boundary_interconnection(default_system, period_cap=2)
    assert isinstance(w, InterconnectionWitness)
    # fixed point expands on the 0-boundary, period-2 orbit contracts there,
    # with the mirrored pattern upstairs
    assert w.q0.orbit.period == 1 and w.q0.sum0.exponent > 0
    assert w.p0.orbit.period == 2 and w.p0.sum0.exponent < 0
    assert w.p1.sum1.exponent > 0
    assert w.q1.sum1.exponent < 0
    assert w.min_overlap > 1e-4


def test_absent_for_product_system(cat):
    F = make_skew_product(cat, KanFiberFamily(0.0))
    out = boundary_interconnection(F, period_cap=2)
    assert isinstance(out, Absent)


def test_absent_for_constant_psi(cat):
    psi = TrigPolynomial.constant(1.0, 2)
    F = make_skew_product(cat, KanFiberFamily(0.3, psi=psi))
    out = boundary_interconnection(F, period_cap=2)
    assert isinstance(out, Absent)
    assert out.negative0 == 0  # every exponent on the 0-boundary is positive


# ---------------------------------------------------------------------------
# holonomy
# ---------------------------------------------------------------------------

def test_holonomy_identity_cases(cat, default_system):
    orb = periodic_points(cat, 1)[0]
    x = UnstableLeafPoint(orbit=orb, u_offset=0.0)
    grid = np.linspace(0.05, 0.95, 9)

    hol = unstable_holonomy_fiber(default_system, x, x)
    assert max(abs(hol(t) - t) for t in grid) < 1e-12

    F0 = make_skew_product(cat, KanFiberFamily(0.0))
    y = UnstableLeafPoint(orbit=orb, u_offset=0.07)
    hol0 = unstable_holonomy_fiber(F0, x, y)
    assert max(abs(hol0(t) - t) for t in grid) < 1e-12


def test_holonomy_c1_close_and_truncation_stable(cat, default_system):
    orb = periodic_points(cat, 1)[0]
    x = UnstableLeafPoint(orbit=orb, u_offset=0.0)
    y = UnstableLeafPoint(orbit=orb, u_offset=0.05)
    hol = unstable_holonomy_fiber(default_system, x, y, tol=1e-10)
    assert hol.cauchy_residual < 1e-10
    grid = np.linspace(0.0, 1.0, 11)
    assert max(abs(hol(t) - t) for t in grid) < 0.05
    # derivative at 0 settles between truncation depths N and N + 10
    from skewlab.skew_product import HolonomyMap

    d1 = HolonomyMap(default_system, x, y, hol.depth, 0.0).deriv(0.0)
    d2 = HolonomyMap(default_system, x, y, hol.depth + 10, 0.0).deriv(0.0)
    assert abs(d1 - d2) < 1e-6


def test_holonomy_roundtrip_identity(cat, default_system):
    orb = periodic_points(cat, 1)[0]
    x = UnstableLeafPoint(orbit=orb, u_offset=0.0)
    y = UnstableLeafPoint(orbit=orb, u_offset=0.05)
    fwd = unstable_holonomy_fiber(default_system, x, y)
    back = unstable_holonomy_fiber(default_system, y, x)
    for t in np.linspace(0.05, 0.95, 19):
        assert back(fwd(t)) == pytest.approx(t, abs=1e-8)


def test_holonomy_no_convergence_with_tiny_cap(cat, default_system):
    from skewlab.errors import NoConvergence

    orb = periodic_points(cat, 1)[0]
    x = UnstableLeafPoint(orbit=orb, u_offset=0.0)
    y = UnstableLeafPoint(orbit=orb, u_offset=0.3)
    with pytest.raises(NoConvergence):
        unstable_holonomy_fiber(default_system, x, y, n_max=2, tol=1e-12)


def test_holonomy_requires_shared_anchor(cat, default_system):
    orb1 = periodic_points(cat, 1)[0]
    orb2 = contracting_period2(cat, default_system)
    with pytest.raises(NotSameLeaf):
        unstable_holonomy_fiber(
            default_system,
            UnstableLeafPoint(orbit=orb1, u_offset=0.0),
            UnstableLeafPoint(orbit=orb2, u_offset=0.1),
        )


# ---------------------------------------------------------------------------
# central twist
# ---------------------------------------------------------------------------

def test_twist_rate_formula_and_fit(cat, default_system):
    orb = contracting_period2(cat, default_system)
    rep = central_twist_decay(default_system, orb, n_max=40)
    lam_c = birkhoff_sum(default_system, orb, 0).exponent
    lam_u = cat.splitting.rate_u
    lam_s = cat.splitting.rate_s
    expected = (lam_u - lam_c) / (lam_u - lam_s) * lam_s
    assert rep.lambda_p == pytest.approx(expected, abs=1e-12)
    assert rep.lambda_p < rep.lambda_c < 0
    assert rep.fitted_slope is not None
    assert rep.fitted_slope <= rep.lambda_p + 0.05
    # ln d_n - n lambda_p bounded above (here by a negative constant)
    assert rep.sup_excess is not None and rep.sup_excess < math.inf


def test_twist_vanishes_for_product(cat):
    F = make_skew_product(cat, KanFiberFamily(0.0))
    orb = [o for o in periodic_points(cat, 2) if o.period == 2][0]
    with pytest.raises(Exception):
        # lambda_c = 0 violates the precondition outright
        central_twist_decay(F, orb)


# ---------------------------------------------------------------------------
# the flow perturbation
# ---------------------------------------------------------------------------

def test_perturbation_zero_is_identity(cat, default_system):
    rep = perturb_flow(default_system, 0.0)
    orb = periodic_points(cat, 1)[0]
    a = birkhoff_sum(default_system, orb, 0).exponent
    b = birkhoff_sum(rep.system, orb, 0).exponent
    assert a == b


def test_exponent_shift_closed_form(cat, default_system):
    orb = periodic_points(cat, 1)[0]
    rep = perturb_flow(default_system, 0.05)
    shifted = birkhoff_sum(rep.system, orb, 0).exponent
    assert shifted == pytest.approx(math.log(1.3) - 0.05, abs=1e-9)
    assert rep.max_shift_error0 <= 1e-9
    assert rep.max_shift_error1 <= 1e-9
    assert rep.alpha_tau == pytest.approx(math.exp(-0.05))


def test_exponent_shift_many_orbits(cat, default_system):
    # at least 20 orbits, three perturbation times, both boundaries
    table = boundary_exponents(default_system, 5)
    assert len(table) >= 20
    for tau in (0.01, 0.05, 0.2):
        rep = perturb_flow(default_system, tau, period_cap=5)
        assert rep.max_shift_error0 <= 1e-9
        assert rep.max_shift_error1 <= 1e-9


def test_perturbation_additivity(cat, default_system):
    orb = periodic_points(cat, 1)[0]
    r1 = perturb_flow(default_system, 0.03)
    r12 = perturb_flow(r1.system, 0.07)
    r3 = perturb_flow(default_system, 0.10)
    a = birkhoff_sum(r12.system, orb, 0).exponent
    b = birkhoff_sum(r3.system, orb, 0).exponent
    assert a == pytest.approx(b, abs=1e-9)


def test_large_tau_kills_expanding_side(cat, default_system):
    # tau above ln(1.3) flips every 0-boundary exponent up to the cap
    rep = perturb_flow(default_system, 0.3, period_cap=2)
    out = boundary_interconnection(rep.system, period_cap=2)
    assert isinstance(out, Absent)
    assert out.positive0 == 0


def test_perturbation_domination_guard(cat, default_system):
    with pytest.raises(DominationViolated):
        perturb_flow(default_system, 1.2)


def test_nonpositive_consequence_full_scale(cat, default_system):
    # perturbed system has every 0-boundary exponent below zero up to the
    # cap; 10^3 sampled forward averages after 10^5 iterations stay below
    # the +0.01 slack
    rep = perturb_flow(default_system, 0.3, period_cap=2)
    holds, worst = nonpositive_exponent_consequence(
        rep.system, 0, period_cap=2, samples=1000, iterations=100_000, seed=3
    )
    assert holds
    assert worst <= 0.01


def test_boundary_conjugacy_exact(cat, default_system):
    # the base factor of a step never sees the fiber coordinate
    rng = np.random.default_rng(9)
    a = np.asarray(CAT, dtype=float)
    for _ in range(20):
        x = rng.uniform(0, 1, 2)
        base_image = (a @ x) % 1.0
        for t in (0.0, 0.3, 0.8, 1.0):
            nx, nt = default_system.step(x, t)
            assert np.array_equal(nx, base_image)
        # boundaries stay put
        assert float(default_system.fiber.phi(x, 0.0)) == 0.0
        assert float(default_system.fiber.phi(x, 1.0)) == 1.0
