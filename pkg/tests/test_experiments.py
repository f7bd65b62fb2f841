"""Experiment-level behavior at reduced desk scale (the acceptance module
runs the full-scale versions)."""

from __future__ import annotations

import math

import pytest

from skewlab.errors import (
    CandidateExhausted,
    HypothesisUnmet,
    IntervalsNotSeparated,
    NotMostlyContracting,
    PreconditionViolated,
)
from skewlab.interval_maps import ClosedInterval, mobius_map
from skewlab.torus_anosov import periodic_points, validate_automorphism
from skewlab.skew_product import (
    KanFiberFamily,
    TrigPolynomial,
    birkhoff_sum,
    make_skew_product,
    perturb_flow,
)
from skewlab.experiments import (
    GridSpec,
    ari_sequence_build,
    birkhoff_density_scan,
    chain_reachability_probe,
    horseshoe_counterexample_demo,
    intermingled_basins_scan,
    pliss_reindex,
    transitivity_probe,
)


@pytest.fixture(scope="module")
def cat():
    return validate_automorphism([[2, 1], [1, 1]])


@pytest.fixture(scope="module")
def system(cat):
    return make_skew_product(cat, KanFiberFamily(0.3))


def contracting_orbit(cat, F):
    return next(
        o for o in periodic_points(cat, 2)
        if o.period == 2 and birkhoff_sum(F, o, 0).total < 0
    )


# ---------------------------------------------------------------------------
# coverage probes
# ---------------------------------------------------------------------------

def test_probe_coverage_monotone_in_budget(cat, system):
    g1 = GridSpec(base_subdivisions=(8, 8), fiber_subdivisions=4,
                  iterations=2_000, seed=11)
    g2 = GridSpec(base_subdivisions=(8, 8), fiber_subdivisions=4,
                  iterations=20_000, seed=11)
    c1 = transitivity_probe(system, g1)
    c2 = transitivity_probe(system, g2)
    assert c2.visited_fraction >= c1.visited_fraction


def test_probe_product_system_stays_in_layer(cat):
    # fiber identity: cells off the initial fiber layer are never reached
    F = make_skew_product(cat, KanFiberFamily(0.0))
    g = GridSpec(base_subdivisions=(16, 16), fiber_subdivisions=8,
                 iterations=200_000, seed=7)
    cov = transitivity_probe(F, g)
    assert cov.visited_fraction < 0.2


def test_chain_probe_contrast(cat, system):
    g = GridSpec(base_subdivisions=(8, 8), fiber_subdivisions=4,
                 iterations=100, seed=7)
    ok = chain_reachability_probe(system, g)
    assert ok.scc_fraction > 0.99
    G = perturb_flow(system, 0.5).system
    bad = chain_reachability_probe(G, g)
    assert bad.scc_fraction < 0.5
    assert bad.reachable_fraction < 1.0


def test_probe_generic_fallback_matches_kernel(cat, system):
    # tiny budget: the generic python path and the compiled path agree
    from skewlab import experiments as ex

    g = GridSpec(base_subdivisions=(4, 4), fiber_subdivisions=2,
                 iterations=500, seed=3)
    fast = transitivity_probe(system, g)
    flat = ex._flatten_family
    try:
        ex._flatten_family = lambda fiber: None
        slow = transitivity_probe(system, g)
    finally:
        ex._flatten_family = flat
    assert fast.visited_cells == slow.visited_cells
    assert fast.first_hit_max == slow.first_hit_max


# ---------------------------------------------------------------------------
# basins
# ---------------------------------------------------------------------------

def test_basin_scan_small_scale(cat, system):
    g = GridSpec(base_subdivisions=(4, 4), fiber_subdivisions=2,
                 iterations=20_000, samples_per_cell=24, seed=5)
    rep = intermingled_basins_scan(system, g)
    assert rep.union_fraction > 0.95
    assert rep.min_fraction0 > 0.0
    assert rep.min_fraction1 > 0.0
    total = rep.counts0 + rep.counts1 + rep.unresolved
    assert (total == g.samples_per_cell).all()


def test_basin_scan_requires_mostly_contracting(cat):
    F = make_skew_product(cat, KanFiberFamily(0.0))
    g = GridSpec(base_subdivisions=(2, 2), fiber_subdivisions=2,
                 iterations=500, samples_per_cell=4, seed=5)
    with pytest.raises(NotMostlyContracting):
        intermingled_basins_scan(F, g)
    # non-strict mode runs and leaves interior samples unresolved
    rep = intermingled_basins_scan(F, g, strict=False)
    assert rep.union_fraction < 0.5


def test_basin_scan_perturbed_goes_down(cat, system):
    G = perturb_flow(system, 0.5).system
    g = GridSpec(base_subdivisions=(4, 4), fiber_subdivisions=2,
                 iterations=5_000, samples_per_cell=16, seed=5)
    rep = intermingled_basins_scan(G, g, strict=False)
    assert rep.counts1.sum() == 0
    assert rep.min_fraction0 == 1.0


def test_basin_scan_deterministic(cat, system):
    g = GridSpec(base_subdivisions=(2, 2), fiber_subdivisions=2,
                 iterations=2_000, samples_per_cell=8, seed=42)
    a = intermingled_basins_scan(system, g)
    b = intermingled_basins_scan(system, g)
    assert (a.counts0 == b.counts0).all()
    assert (a.counts1 == b.counts1).all()


# ---------------------------------------------------------------------------
# density of periodic sums
# ---------------------------------------------------------------------------

def test_density_scan_default(system):
    rep = birkhoff_density_scan(system, 0, period_cap=8, window=(-1, 1), eps=0.1)
    assert rep.dense
    assert sum(rep.hist_counts) > 0


def test_density_hypothesis_unmet(cat):
    psi = TrigPolynomial.constant(1.0, 2)
    F = make_skew_product(cat, KanFiberFamily(0.3, psi=psi))
    with pytest.raises(HypothesisUnmet):
        birkhoff_density_scan(F, 0, period_cap=3)
    F0 = make_skew_product(cat, KanFiberFamily(0.0))
    with pytest.raises(HypothesisUnmet):
        birkhoff_density_scan(F0, 0, period_cap=3)


# ---------------------------------------------------------------------------
# the shadowing-built sequence
# ---------------------------------------------------------------------------

def test_ari_two_stages(cat, system):
    p0 = contracting_orbit(cat, system)
    q0 = periodic_points(cat, 1)[0]
    rep = ari_sequence_build(system, p0, q0, m_max=2, pool_period_cap=6)
    assert len(rep.stages) == 2
    for st in rep.stages:
        assert st.sandwich_ok
        assert st.independence_vs_p0 < 2.0 ** (-st.m + 2)
        assert st.delta < 1e-4
    assert rep.stages[1].independence_bound_q0 < rep.stages[0].independence_bound_q0
    assert rep.stages[1].exponent_drift < rep.stages[0].exponent_drift


def test_ari_pool_of_p0_exhausts(cat, system):
    p0 = contracting_orbit(cat, system)
    q0 = periodic_points(cat, 1)[0]
    from skewlab.skew_product import OrbitExponents

    pool = [OrbitExponents(
        orbit=p0,
        sum0=birkhoff_sum(system, p0, 0),
        sum1=birkhoff_sum(system, p0, 1),
    )]
    with pytest.raises(CandidateExhausted) as exc:
        ari_sequence_build(system, p0, q0, m_max=2, pool=pool)
    assert exc.value.achieved_m == 0


def test_ari_wrong_signs_rejected(cat, system):
    p0 = contracting_orbit(cat, system)
    q0 = periodic_points(cat, 1)[0]
    with pytest.raises(PreconditionViolated):
        ari_sequence_build(system, q0, p0, m_max=1)  # swapped roles


# ---------------------------------------------------------------------------
# Pliss reindexing
# ---------------------------------------------------------------------------

def test_pliss_constant_orbit_shift_zero(cat, system):
    # psi is constant along the contracting period-2 orbit, so every
    # partial average equals the exponent and rotation 0 qualifies
    orb = contracting_orbit(cat, system)
    rep = pliss_reindex(system, orb)
    assert rep.rotation == 0
    lam_c = birkhoff_sum(system, orb, 0).exponent
    assert rep.worst_partial_average == pytest.approx(lam_c, abs=1e-12)
    assert rep.contracting_size >= rep.size_bound


def test_pliss_valid_rotation_on_mixed_orbit(cat, system):
    # find an orbit with negative exponent but sign-mixed step values, so
    # the rotation actually matters
    G = perturb_flow(system, 0.15).system
    checked = 0
    for n in (4, 5):
        for orb in periodic_points(cat, n):
            bs = birkhoff_sum(G, orb, 0)
            vals = [
                math.log(float(G.fiber.dphi_dt(p.as_floats(), 0.0)))
                for p in orb.points
            ]
            if bs.exponent < -0.05 and max(vals) > 0:
                rep = pliss_reindex(G, orb)
                assert 0 <= rep.rotation < orb.period
                assert rep.worst_partial_average <= rep.target_rate + 1e-12
                assert rep.contracting_size >= rep.size_bound
                checked += 1
    assert checked > 0


def test_pliss_precondition(cat, system):
    q0 = periodic_points(cat, 1)[0]  # expanding at the 0-boundary
    with pytest.raises(PreconditionViolated):
        pliss_reindex(system, q0)


# ---------------------------------------------------------------------------
# the horseshoe-base demo
# ---------------------------------------------------------------------------

def demo_intervals():
    phi = mobius_map(0.5)
    hi = 0.9
    lo = phi(hi)
    w = hi - lo
    U = ClosedInterval(lo + 0.05 * w, lo + 0.40 * w)
    V = ClosedInterval(lo + 0.60 * w, hi - 0.05 * w)
    return phi, U, V


def test_horseshoe_demo_runs_clean():
    phi, U, V = demo_intervals()
    rep = horseshoe_counterexample_demo(phi, U, V)
    assert rep.sign_pattern_ok
    assert rep.violations == 0
    assert rep.total_iterations == 10_000
    assert rep.multiplier_at_0 == pytest.approx(0.5)
    assert rep.multiplier_at_1 == pytest.approx(2.0)


def test_horseshoe_equal_intervals_rejected():
    phi, U, _ = demo_intervals()
    with pytest.raises(IntervalsNotSeparated):
        horseshoe_counterexample_demo(phi, U, U)


def test_horseshoe_requires_ns_map():
    from skewlab.interval_maps import cubic_interior_map

    phi, U, V = demo_intervals()
    with pytest.raises(PreconditionViolated):
        horseshoe_counterexample_demo(cubic_interior_map(0.5, -1.0), U, V)
