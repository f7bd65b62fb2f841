"""Desk-scale certifications: coverage probes, basin scans, sum density,
the shadowing-built orbit sequence, Pliss reindexing, and the symbolic
counterexample over the full shift.

These experiments measure consistency with the theory at finite
resolution; low coverage or an unresolved basin sample is a finding, not
an error.  Every report records the seed that produced it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .errors import (
    CandidateExhausted,
    HypothesisUnmet,
    IntervalsNotSeparated,
    NoPlissTime,
    NotMostlyContracting,
    PreconditionViolated,
)
from .independence import (
    rational_independence,
    select_independent,
    smallest_k_witness,
)
from .interval_maps import ClosedInterval, IntervalMap, ns_analyze
from .skew_product import (
    FlowPerturbedFamily,
    KanFiberFamily,
    SkewProduct,
    birkhoff_sum,
    boundary_exponents,
    fiber_return_map,
    mostly_contracting_check,
)
from .torus_anosov import (
    PeriodicOrbit,
    TorusPoint,
    heteroclinic_point,
    make_pseudo_orbit,
    orbit_from_points,
    shadow_pseudo_orbit,
)
from . import _kernels


# ---------------------------------------------------------------------------
# grids
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GridSpec:
    base_subdivisions: tuple = (16, 16)
    fiber_subdivisions: int = 8
    iterations: int = 1_000_000
    samples_per_cell: int = 100
    seed: int = 7
    theta0: float = 0.05           # basin classification threshold
    window_fraction: float = 0.10  # trailing window for the classifier

    def __post_init__(self):
        if min(self.base_subdivisions) <= 0 or self.fiber_subdivisions <= 0:
            raise ValueError("subdivisions must be positive")
        if self.iterations <= 0 or self.samples_per_cell <= 0:
            raise ValueError("budgets must be positive")
        if not (0 < self.theta0 < 0.5 and 0 < self.window_fraction <= 1):
            raise ValueError("classification thresholds out of range")

    @property
    def cell_count(self) -> int:
        return int(np.prod(self.base_subdivisions)) * self.fiber_subdivisions


def _flatten_family(fiber):
    """Kan parameters plus accumulated flow time, for the compiled kernel."""
    tau = 0.0
    inner = fiber
    while isinstance(inner, FlowPerturbedFamily):
        tau += inner.tau
        inner = inner.inner
    if not isinstance(inner, KanFiberFamily):
        return None
    kvecs = np.array([k for k, _, _ in inner.psi.terms], dtype=float)
    cos_c = np.array([a for _, a, _ in inner.psi.terms], dtype=float)
    sin_c = np.array([b for _, _, b in inner.psi.terms], dtype=float)
    return kvecs, cos_c, sin_c, inner.epsilon, tau


# ---------------------------------------------------------------------------
# transitivity probe
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CoverageReport:
    visited_fraction: float
    visited_cells: int
    total_cells: int
    strong_component_fraction: float   # largest SCC among visited cells
    first_hit_max: int
    first_hit_mean: float
    iterations: int
    seed: int
    start: tuple


def transitivity_probe(F: SkewProduct, grid: GridSpec) -> CoverageReport:
    """Cell coverage of one long orbit from a seeded interior point.

    Reports the fraction of grid cells the orbit visits, the strong
    connectivity of the observed cell-to-cell transition graph restricted
    to visited cells, and first-hit time statistics.  Low coverage is a
    finding, not an error.
    """
    if F.dimension != 2:
        raise ValueError("the probe is implemented for 2-dimensional bases")
    rng = np.random.default_rng(grid.seed)
    start = (
        float(rng.uniform(0.05, 0.95)),
        float(rng.uniform(0.05, 0.95)),
        float(rng.uniform(0.2, 0.8)),
    )
    n1, n2 = grid.base_subdivisions
    nf = grid.fiber_subdivisions

    flat = _flatten_family(F.fiber)
    if flat is not None:
        kvecs, cos_c, sin_c, eps, tau = flat
        first_hit, adjacency = _kernels.run_orbit_coverage(
            F.base.matrix, kvecs, cos_c, sin_c, eps, tau,
            start, (n1, n2, nf), grid.iterations,
        )
    else:
        first_hit, adjacency = _generic_orbit_coverage(F, start, (n1, n2, nf),
                                                       grid.iterations)

    visited = np.flatnonzero(first_hit >= 0)
    total = n1 * n2 * nf
    frac = len(visited) / total

    if len(visited) > 1:
        sub = adjacency[np.ix_(visited, visited)]
        ncomp, labels = connected_components(
            csr_matrix(sub), directed=True, connection="strong"
        )
        largest = np.bincount(labels).max()
        scc_frac = largest / len(visited)
    else:
        scc_frac = 1.0 if len(visited) else 0.0

    hits = first_hit[visited]
    return CoverageReport(
        visited_fraction=frac,
        visited_cells=int(len(visited)),
        total_cells=total,
        strong_component_fraction=float(scc_frac),
        first_hit_max=int(hits.max()) if len(hits) else -1,
        first_hit_mean=float(hits.mean()) if len(hits) else -1.0,
        iterations=grid.iterations,
        seed=grid.seed,
        start=start,
    )


@dataclass(frozen=True)
class ChainReport:
    scc_fraction: float          # largest strong component / all cells
    reachable_fraction: float    # cells reachable from the seed cell
    segment_steps: int
    samples_per_cell: int
    seed: int


def chain_reachability_probe(
    F: SkewProduct,
    grid: GridSpec,
    samples_per_cell: int = 3,
    segment_steps: int = 24,
) -> ChainReport:
    """Cell-to-cell reachability built from short orbit segments.

    Starts a few samples inside every grid cell, records the cell
    transitions their segments realize, and reports the largest strongly
    connected component of the resulting directed graph together with the
    fraction of cells reachable from an interior seed cell.  This is the
    chain-level surrogate for transitivity; a single long orbit cannot
    witness mixing across the fiber once almost every point converges to a
    boundary measure.
    """
    if F.dimension != 2:
        raise ValueError("the probe is implemented for 2-dimensional bases")
    n1, n2 = grid.base_subdivisions
    nf = grid.fiber_subdivisions
    cells = n1 * n2 * nf
    spc = samples_per_cell

    ss = np.random.SeedSequence(grid.seed)
    rng = np.random.default_rng(ss)
    i1, rem = np.divmod(np.arange(cells), n2 * nf)
    i2, kf = np.divmod(rem, nf)
    xs = np.empty((cells * spc, 2))
    ts = np.empty(cells * spc)
    for s in range(spc):
        sl = slice(s * cells, (s + 1) * cells)
        xs[sl, 0] = (i1 + rng.uniform(0, 1, cells)) / n1
        xs[sl, 1] = (i2 + rng.uniform(0, 1, cells)) / n2
        ts[sl] = (kf + rng.uniform(0, 1, cells)) / nf

    a = np.asarray(F.base.matrix, dtype=float)

    def cell_of(x, t):
        c1 = np.minimum((x[:, 0] * n1).astype(int), n1 - 1)
        c2 = np.minimum((x[:, 1] * n2).astype(int), n2 - 1)
        ck = np.minimum((t * nf).astype(int), nf - 1)
        return (c1 * n2 + c2) * nf + ck

    x, t = xs, ts
    prev = cell_of(x, t)
    pairs = set()
    for _ in range(segment_steps):
        t = np.clip(np.asarray(F.fiber.phi(x, t), dtype=float), 0.0, 1.0)
        x = (x @ a.T) % 1.0
        cur = cell_of(x, t)
        pairs.update(zip(prev.tolist(), cur.tolist()))
        prev = cur

    rows = np.array([p for p, _ in pairs])
    cols = np.array([q for _, q in pairs])
    graph = csr_matrix(
        (np.ones(len(rows), dtype=np.int8), (rows, cols)), shape=(cells, cells)
    )
    ncomp, labels = connected_components(graph, directed=True, connection="strong")
    largest = int(np.bincount(labels).max())

    # reachability from a mid-grid interior cell
    from scipy.sparse.csgraph import breadth_first_order

    seed_cell = ((n1 // 2) * n2 + n2 // 2) * nf + nf // 2
    reachable = breadth_first_order(graph, seed_cell, directed=True,
                                    return_predecessors=False)
    return ChainReport(
        scc_fraction=largest / cells,
        reachable_fraction=len(reachable) / cells,
        segment_steps=segment_steps,
        samples_per_cell=spc,
        seed=grid.seed,
    )


def _generic_orbit_coverage(F, start, dims, iterations):
    n1, n2, nf = dims
    cells = n1 * n2 * nf
    first_hit = np.full(cells, -1, dtype=np.int64)
    adjacency = np.zeros((cells, cells), dtype=np.uint8)
    x = np.array(start[:2], dtype=float)
    t = start[2]
    prev = -1
    a = np.asarray(F.base.matrix, dtype=float)
    for step in range(iterations):
        i1 = min(int(x[0] * n1), n1 - 1)
        i2 = min(int(x[1] * n2), n2 - 1)
        k = min(int(t * nf), nf - 1)
        cell = (i1 * n2 + i2) * nf + k
        if first_hit[cell] < 0:
            first_hit[cell] = step
        if prev >= 0:
            adjacency[prev, cell] = 1
        prev = cell
        t = float(np.clip(F.fiber.phi(x, t), 0.0, 1.0))
        x = (a @ x) % 1.0
    return first_hit, adjacency


# ---------------------------------------------------------------------------
# intermingled basins scan
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BasinReport:
    cells: tuple                 # (n1, n2, nf)
    counts0: np.ndarray          # per-cell B(mu_0) counts
    counts1: np.ndarray
    unresolved: np.ndarray
    samples_per_cell: int
    union_fraction: float        # resolved / total samples
    min_fraction0: float         # min over cells of resolved-relative share
    min_fraction1: float
    iterations: int
    seed: int

    def fraction_grid(self, which: int) -> np.ndarray:
        counts = self.counts0 if which == 0 else self.counts1
        resolved = self.counts0 + self.counts1
        with np.errstate(invalid="ignore", divide="ignore"):
            out = np.where(resolved > 0, counts / np.maximum(resolved, 1), 0.0)
        return out


def intermingled_basins_scan(
    F: SkewProduct, grid: GridSpec, strict: bool = True
) -> BasinReport:
    """Classify grid samples by the long-run fiber average.

    A sample lands in B(mu_0) when the trailing-window mean of t falls
    below theta0, in B(mu_1) above 1 - theta0, and stays unresolved
    otherwise; unresolved samples are reported, never force-classified.
    Basin fractions are taken relative to the resolved samples of a cell.

    Raises:
        NotMostlyContracting: (strict mode) some boundary integral is not
            conclusively negative.
    """
    if strict:
        for b in (0, 1):
            res = mostly_contracting_check(F, b)
            if res.verdict != "negative":
                raise NotMostlyContracting(
                    f"boundary {b}: integral {res.value} +- {res.error_estimate}"
                )
    if F.dimension != 2:
        raise ValueError("the scan is implemented for 2-dimensional bases")

    n1, n2 = grid.base_subdivisions
    nf = grid.fiber_subdivisions
    spc = grid.samples_per_cell
    cells = n1 * n2 * nf

    # deterministic per-cell seeding, independent of any worker layout
    ss = np.random.SeedSequence(grid.seed)
    children = ss.spawn(cells)
    xs = np.empty((cells * spc, 2))
    ts = np.empty(cells * spc)
    idx = 0
    for c in range(cells):
        i1, rem = divmod(c, n2 * nf)
        i2, k = divmod(rem, nf)
        r = np.random.default_rng(children[c])
        xs[idx:idx + spc, 0] = (i1 + r.uniform(0, 1, spc)) / n1
        xs[idx:idx + spc, 1] = (i2 + r.uniform(0, 1, spc)) / n2
        ts[idx:idx + spc] = (k + r.uniform(0, 1, spc)) / nf
        idx += spc

    window = max(1, int(grid.iterations * grid.window_fraction))
    burn = grid.iterations - window
    flat = _flatten_family(F.fiber)
    if flat is not None and _kernels.HAVE_NUMBA:
        kvecs, cos_c, sin_c, eps, tau = flat
        means = _kernels.run_ensemble_trailing_means(
            F.base.matrix, kvecs, cos_c, sin_c, eps, tau,
            xs, ts, grid.iterations, burn,
        )
    else:
        a = np.asarray(F.base.matrix, dtype=float)
        acc = np.zeros(cells * spc)
        x, t = xs, ts
        for step in range(grid.iterations):
            t = np.clip(np.asarray(F.fiber.phi(x, t), dtype=float), 0.0, 1.0)
            x = (x @ a.T) % 1.0
            if step >= burn:
                acc += t
        means = acc / window

    in0 = means < grid.theta0
    in1 = means > 1.0 - grid.theta0
    per_cell0 = in0.reshape(cells, spc).sum(axis=1)
    per_cell1 = in1.reshape(cells, spc).sum(axis=1)
    unresolved = spc - per_cell0 - per_cell1

    resolved = per_cell0 + per_cell1
    with np.errstate(invalid="ignore", divide="ignore"):
        f0 = np.where(resolved > 0, per_cell0 / np.maximum(resolved, 1), 0.0)
        f1 = np.where(resolved > 0, per_cell1 / np.maximum(resolved, 1), 0.0)

    return BasinReport(
        cells=(n1, n2, nf),
        counts0=per_cell0, counts1=per_cell1, unresolved=unresolved,
        samples_per_cell=spc,
        union_fraction=float(resolved.sum() / (cells * spc)),
        min_fraction0=float(f0.min()),
        min_fraction1=float(f1.min()),
        iterations=grid.iterations,
        seed=grid.seed,
    )


# ---------------------------------------------------------------------------
# Birkhoff sum density
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DensityReport:
    dense: bool
    eps: float
    window: tuple
    num_orbits: int
    values: tuple
    hist_edges: tuple
    hist_counts: tuple
    boundary: int


def birkhoff_density_scan(
    F: SkewProduct,
    boundary: int,
    period_cap: int = 10,
    window: tuple = (-1.0, 1.0),
    eps: float = 0.1,
    enumeration_cap: int = 200_000,
    hist_bins: int = 40,
) -> DensityReport:
    """Are the periodic Birkhoff sums eps-dense in the window?

    Dense means every point of the window lies within eps of some sum.
    The rigidity hypothesis (sums of both signs) is checked first.

    Raises:
        HypothesisUnmet: every periodic sum shares one sign.
    """
    table = boundary_exponents(F, period_cap, enumeration_cap=enumeration_cap)
    sums = sorted(getattr(oe, f"sum{boundary}").total for oe in table)
    if not (any(s < 0 for s in sums) and any(s > 0 for s in sums)):
        raise HypothesisUnmet(
            "periodic sums do not take both signs up to the period cap"
        )

    lo, hi = window
    inside = [s for s in sums if lo - eps <= s <= hi + eps]
    dense = bool(inside)
    if inside:
        if inside[0] > lo + eps or inside[-1] < hi - eps:
            dense = False
        else:
            for a, b in zip(inside, inside[1:]):
                if b - a > 2 * eps:
                    dense = False
                    break

    counts, edges = np.histogram(inside, bins=hist_bins, range=window)
    return DensityReport(
        dense=dense, eps=eps, window=window,
        num_orbits=len(table), values=tuple(sums),
        hist_edges=tuple(float(e) for e in edges),
        hist_counts=tuple(int(c) for c in counts),
        boundary=boundary,
    )


# ---------------------------------------------------------------------------
# the shadowing-built sequence (asymptotically rationally independent sums)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AriStage:
    m: int
    candidate_sum: float           # S(p-bar)
    sum_prime: float               # S(p'), shadow of the plain loop
    sum_double: float              # S(p''), shadow with the extra cycle
    sandwich_value: float          # |S(p'') - S(p') - S(p0)|
    sandwich_ok: bool
    chosen: str                    # "prime" or "double"
    chosen_period: int
    independence_vs_p0: float      # witnessed gap against S(p0), < 2^(-m+2)
    witness_k: int                 # the witnessing combination
    witness_l: int
    independence_bound_q0: float   # certified vanishing bound against S(q0)
    independence_measured_q0: float  # raw capped infimum (diagnostic)
    exponent_drift: float
    contracting_size: float
    K: int
    L: int
    delta: float


@dataclass(frozen=True)
class AriReport:
    stages: tuple
    s_p0: float
    s_q0: float
    epsilon_bars: tuple
    bridge_nu: float               # witnessed gap of the (S(p0), S(q0)) pair
    bridge_k: int
    bridge_l: int
    witness_l_max: int


def _rationalize_point(anchor: TorusPoint, offset_vec, denom: int = 2 ** 40) -> TorusPoint:
    coords = tuple(
        (c + Fraction(round(float(o) * denom), denom)) % 1
        for c, o in zip(anchor.coords, offset_vec)
    )
    return TorusPoint(coords, True)


def _ari_stage_for_candidate(F, p0, cand, m, s0_total, c_shadow, norm_bound):
    """One stage attempt: loops through a given window candidate.

    Returns the stage data without the chosen-orbit extras (filled by the
    caller after selection).
    """
    sp = F.base.splitting
    v_s, v_u = sp.stable_basis[0], sp.unstable_basis[0]
    lam_s, lam_u = math.exp(sp.rate_s), math.exp(sp.rate_u)
    pb = cand.orbit
    pi_b, pi_0 = pb.period, p0.period

    x0 = heteroclinic_point(F.base, p0, pb, norm_bound=norm_bound,
                            exclude_trivial=True)
    y0 = heteroclinic_point(F.base, pb, p0, norm_bound=norm_bound,
                            exclude_trivial=True)

    eps_bar = 2.0 ** -(m + 4) / (2.0 * c_shadow)
    delta_target = 0.5 * sp.delta0 * eps_bar

    def depth(offset, minimum, multiple):
        need = math.ceil(math.log(delta_target / max(abs(offset), 1e-12))
                         / math.log(lam_s))
        need = max(need, minimum, multiple)
        return ((need + multiple - 1) // multiple) * multiple

    K = depth(max(abs(x0.stable_offset), abs(y0.unstable_offset)),
              m * pi_b, pi_b)
    L = depth(max(abs(y0.stable_offset), abs(x0.unstable_offset)),
              m * K, pi_0)

    def y_point(j):
        if j < 0:
            anchor = pb.points[j % pi_b]
            off = y0.unstable_offset * lam_u ** j * v_u
        else:
            anchor = p0.points[j % pi_0]
            off = y0.stable_offset * lam_s ** j * v_s
        return _rationalize_point(anchor, off)

    def x_point(j):
        if j < 0:
            anchor = p0.points[j % pi_0]
            off = x0.unstable_offset * lam_u ** j * v_u
        else:
            anchor = pb.points[j % pi_b]
            off = x0.stable_offset * lam_s ** j * v_s
        return _rationalize_point(anchor, off)

    loop = [y_point(j) for j in range(-K, L)] + \
           [x_point(j) for j in range(-L, K)]
    po_prime = make_pseudo_orbit(F.base, loop, periodic=True)
    shadow_prime = shadow_pseudo_orbit(F.base, po_prime)
    orbit_prime = orbit_from_points(F.base, list(shadow_prime.orbit))
    s_prime = birkhoff_sum(F, orbit_prime, 0)

    loop_double = list(pb.points) + loop
    po_double = make_pseudo_orbit(F.base, loop_double, periodic=True)
    shadow_double = shadow_pseudo_orbit(F.base, po_double)
    orbit_double = orbit_from_points(F.base, list(shadow_double.orbit))
    s_double = birkhoff_sum(F, orbit_double, 0)

    sandwich = abs(s_double.total - s_prime.total - s0_total)
    sandwich_ok = 2.0 ** -(m + 1) < sandwich < 2.0 ** (-m + 2)
    return {
        "cand": cand, "K": K, "L": L, "eps_bar": eps_bar,
        "delta": po_prime.delta,
        "orbit_prime": orbit_prime, "s_prime": s_prime,
        "orbit_double": orbit_double, "s_double": s_double,
        "sandwich": sandwich, "sandwich_ok": sandwich_ok,
    }


def ari_sequence_build(
    F: SkewProduct,
    p0: PeriodicOrbit,
    q0: PeriodicOrbit,
    m_max: int = 4,
    pool_period_cap: int = 7,
    independence_K: int = 5000,
    norm_bound: float = 3.0,
    pool: Optional[Sequence] = None,
    candidate_tries: int = 8,
) -> AriReport:
    """Build periodic orbits whose sums approach rational independence.

    For each stage m: pool orbits whose sum sits in the dyadic window
    (2^-m, 2^-m+1) around S(p0) are joined to p0 through two heteroclinic
    points; the periodic pseudo-orbit loop (and the variant with one extra
    candidate cycle) is shadowed to exact periodic orbits; the sandwich
    inequality 2^-m-1 < |S(p'') - S(p') - S(p0)| < 2^-m+2 is verified, and
    the two-candidate selection certifies one member below 2^-m+2.  The
    construction leaves the window candidate free; up to
    ``candidate_tries`` of them are built (in pool order) and the
    certified orbit with the smallest measured gap against S(q0) is kept,
    which keeps the reported sequence clear of accidental Diophantine
    floor noise.

    Loop sizes follow K = max(K_shadow, m * period(p-bar)) rounded to a
    period multiple and L = max(L_shadow, m K), where the shadow depths
    make every junction jump at most half the budget delta_0 * eps_bar_m,
    with eps_bar_m = 2^-(m+4) / (2 C) and C the shadowing-sum constant
    assembled from the module constants.

    Raises:
        PreconditionViolated: exponent signs of p0/q0 are wrong.
        CandidateExhausted: no pool orbit fits some dyadic window (the
            stages built so far ride on the exception).
    """
    s0 = birkhoff_sum(F, p0, 0)
    sq = birkhoff_sum(F, q0, 0)
    if not (s0.exponent < 0 < sq.exponent):
        raise PreconditionViolated(
            f"need exponent(p0) < 0 < exponent(q0), got {s0.exponent}, {sq.exponent}"
        )

    if pool is None:
        pool = boundary_exponents(F, pool_period_cap)
    hol = F.fiber.holder()
    sp = F.base.splitting

    # |S(shadow) - S(pseudo)| <= C_phi * sum d_i <= C_phi C0 delta
    #     * (n_jumps) * 2/(1 - mu0), with n_jumps <= 4 for the long loop
    c_shadow = hol.C_phi * sp.c0 * sp.delta0 * 4 * 2.0 / (1.0 - sp.mu0)

    def partial_report(rows, eps_bars):
        return AriReport(tuple(), s0.total, sq.total, tuple(eps_bars),
                         math.nan, 0, 0, 0)

    rows = []
    eps_bars = []
    for m in range(1, m_max + 1):
        eps_bars.append(2.0 ** -(m + 4) / (2.0 * c_shadow))
        window_lo, window_hi = 2.0 ** -m, 2.0 ** (-m + 1)
        cands = [
            oe for oe in pool
            if window_lo < abs(oe.sum0.total - s0.total) < window_hi
        ]
        if not cands:
            raise CandidateExhausted(
                f"no pool orbit with |S - S(p0)| in (2^-{m}, 2^-{m - 1})",
                achieved_m=m - 1,
                report=partial_report(rows, eps_bars),
            )

        eps_m = 2.0 ** (-m + 2)
        picked = None
        for cand in cands[:candidate_tries]:
            built = _ari_stage_for_candidate(
                F, p0, cand, m, s0.total, c_shadow, norm_bound
            )
            if not built["sandwich_ok"]:
                continue
            try:
                chosen_sum = select_independent(
                    built["s_prime"].total, built["s_double"].total,
                    s0.total, eps_m,
                )
            except PreconditionViolated:
                continue
            if chosen_sum == built["s_prime"].total:
                picked = ("prime", built["orbit_prime"], built["s_prime"], built)
            else:
                picked = ("double", built["orbit_double"], built["s_double"], built)
            break
        if picked is None:
            raise CandidateExhausted(
                f"no candidate produced a certified stage at m = {m}",
                achieved_m=m - 1,
                report=partial_report(rows, eps_bars),
            )

        which, chosen_orbit, chosen_bs, built = picked
        witness = smallest_k_witness(chosen_bs.total, s0.total, eps_m)
        assert witness is not None, "the certified gap implies a small-k witness"
        w_val, w_k, w_l = witness
        measured_q0 = float(rational_independence(chosen_bs.total, sq.total,
                                                  K=independence_K))
        drift = abs(chosen_bs.exponent - s0.exponent)
        size = ns_analyze(fiber_return_map(F, chosen_orbit)).smallest_fixed
        rows.append({
            "m": m, "built": built, "which": which,
            "period": chosen_orbit.period,
            "w_val": w_val, "w_k": w_k, "w_l": w_l,
            "measured_q0": measured_q0, "drift": drift, "size": size,
        })

    # Transport the per-stage certificates against S(p0) into a vanishing
    # bound sequence against S(q0): with a bridge witness
    # |k0 S(p0) + l0 S(q0)| = nu and a stage witness
    # |k* S(p_m) + l* S(p0)| = w_m < 2^(-m+2), the combination
    # (k0 k*) S(p_m) - (l* l0) S(q0) is at most |k0| w_m + |l*| nu, so
    # eps_m := |k0| 2^(-m+2) + max|l*| nu bounds the gap and halves with m.
    l_bar = max(abs(r["w_l"]) for r in rows)
    bridge_best = None
    ladder_best = None
    for k in range(1, 2001):
        ka = k * s0.total
        l0 = math.floor(ka / sq.total)
        for l in (l0 - 1, l0, l0 + 1):
            v = abs(ka - l * sq.total)
            if v < 1e-12:
                continue
            if ladder_best is None or v < ladder_best[0]:
                ladder_best = (v, k, -l)
                score = abs(k) * 2.0 + l_bar * v
                if bridge_best is None or score < bridge_best[0]:
                    bridge_best = (score, v, k, -l)
    _, nu, k0, l0 = bridge_best

    stages = []
    for r in rows:
        built = r["built"]
        stages.append(AriStage(
            m=r["m"],
            candidate_sum=built["cand"].sum0.total,
            sum_prime=built["s_prime"].total,
            sum_double=built["s_double"].total,
            sandwich_value=built["sandwich"],
            sandwich_ok=built["sandwich_ok"],
            chosen=r["which"],
            chosen_period=r["period"],
            independence_vs_p0=r["w_val"],
            witness_k=r["w_k"],
            witness_l=r["w_l"],
            independence_bound_q0=abs(k0) * 2.0 ** (-r["m"] + 2) + l_bar * nu,
            independence_measured_q0=r["measured_q0"],
            exponent_drift=r["drift"],
            contracting_size=r["size"],
            K=built["K"], L=built["L"],
            delta=built["delta"],
        ))

    return AriReport(
        tuple(stages), s0.total, sq.total, tuple(eps_bars),
        bridge_nu=nu, bridge_k=k0, bridge_l=l0, witness_l_max=l_bar,
    )


# ---------------------------------------------------------------------------
# Pliss reindexing
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PlissReport:
    rotation: int
    worst_partial_average: float
    target_rate: float
    contracting_size: float
    size_bound: float


def pliss_reindex(
    F: SkewProduct, orbit: PeriodicOrbit, target_rate: Optional[float] = None
) -> PlissReport:
    """Rotate the orbit so every forward partial average clears the target.

    The default target is a third of the orbit's central exponent.  For a
    periodic orbit it is enough to check partial sums over one period:
    longer windows split into full periods (mean = the exponent, below the
    target) plus a checked remainder.  Also measures the contracting
    central interval of the rotated return map and checks it against the
    Holder lower bound [-(1/6) l_c (1 - e^{(1/6) l_c theta}) / C]^{1/theta}.

    Raises:
        PreconditionViolated: exponent not below the (negative) target.
        NoPlissTime: impossible under the precondition; internal failure.
    """
    bs = birkhoff_sum(F, orbit, 0)
    lam_c = bs.exponent
    if target_rate is None:
        target_rate = lam_c / 3.0
    if not (lam_c < target_rate < 0):
        raise PreconditionViolated(
            f"need exponent {lam_c} < target {target_rate} < 0"
        )

    vals = [
        math.log(float(F.fiber.dphi_dt(pt.as_floats(), 0.0)))
        for pt in orbit.points
    ]
    n = orbit.period
    rotation = None
    worst = None
    for r in range(n):
        partials_ok = True
        acc = 0.0
        worst_r = -math.inf
        for k in range(1, n + 1):
            acc += vals[(r + k - 1) % n]
            avg = acc / k
            worst_r = max(worst_r, avg)
            if avg > target_rate + 1e-12:
                partials_ok = False
                break
        if partials_ok:
            rotation = r
            worst = worst_r
            break
    if rotation is None:
        raise NoPlissTime("no rotation satisfies the partial averages")

    rotated = PeriodicOrbit(
        base=orbit.points[rotation],
        period=n,
        points=orbit.points[rotation:] + orbit.points[:rotation],
    )
    size = ns_analyze(fiber_return_map(F, rotated)).smallest_fixed
    hol = F.fiber.holder()
    theta = hol.theta
    bound = (
        -(1.0 / 6.0) * lam_c * (1.0 - math.exp((1.0 / 6.0) * lam_c * theta))
        / hol.C_phi
    ) ** (1.0 / theta)
    if size < bound - 1e-12:
        raise NoPlissTime(
            f"contracting interval {size} below the Holder bound {bound}"
        )
    return PlissReport(
        rotation=rotation,
        worst_partial_average=worst,
        target_rate=target_rate,
        contracting_size=size,
        size_bound=bound,
    )


# ---------------------------------------------------------------------------
# the horseshoe-base counterexample
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HorseshoeReport:
    sign_pattern_ok: bool
    multiplier_at_0: float
    multiplier_at_1: float
    separation_range: int
    orbits_sampled: int
    total_iterations: int
    violations: int


def horseshoe_counterexample_demo(
    phi: IntervalMap,
    U: ClosedInterval,
    V: ClosedInterval,
    separation_range: int = 50,
    word_length: int = 40,
    orbit_samples: int = 100,
    steps_per_orbit: int = 100,
    seed: int = 7,
) -> HorseshoeReport:
    """Boundary interconnection without transitivity over the full 2-shift.

    The fiber map phi (sink at 0, source at 1) or its inverse is applied
    according to the current symbol.  The four symbolic fixed points carry
    the interconnection sign pattern, yet the saturations of U and V stay
    disjoint, which the orbit sampling asserts outright.  Symbol sequences
    are words of the given length extended periodically.

    Raises:
        PreconditionViolated: phi is not an NS-map with sink 0, source 1.
        IntervalsNotSeparated: the phi-orbits of U and V meet inside the
            tested range.
    """
    model = ns_analyze(phi)
    if abs(model.smallest_fixed - 1.0) > 1e-9:
        raise PreconditionViolated(
            f"phi has an interior fixed point at {model.smallest_fixed}"
        )
    d0 = phi.deriv(0.0)
    d1 = phi.deriv(1.0)
    if not (d0 < 1.0 < d1):
        raise PreconditionViolated("need a sink at 0 and a source at 1")

    # separation of the fiber orbits, by exact endpoint iteration
    for n in range(-separation_range, separation_range + 1):
        img = phi.image(U, n)
        cap = img.intersect(V)
        if cap is not None and cap.length > 1e-12:
            raise IntervalsNotSeparated(
                f"phi^{n}(U) meets V on length {cap.length}"
            )

    # sign pattern at the four symbolic fixed points: at the all-zeros word
    # the fiber map is phi, at the all-ones word its inverse
    pattern_ok = (
        math.log(d0) < 0 < math.log(d1)               # (0-word, 0) and (0-word, 1)
        and -math.log(d1) < 0 < -math.log(d0)         # (1-word, 1) and (1-word, 0)
    )

    rng = np.random.default_rng(seed)
    violations = 0
    for _ in range(orbit_samples):
        word = rng.integers(0, 2, size=word_length)
        t = float(rng.uniform(U.lo, U.hi))
        pos = 0
        for _ in range(steps_per_orbit):
            if word[pos % word_length] == 0:
                t = phi(t)
            else:
                t = phi.inverse(t)
            pos += 1
            if V.lo < t < V.hi:
                violations += 1
    return HorseshoeReport(
        sign_pattern_ok=pattern_ok,
        multiplier_at_0=d0,
        multiplier_at_1=d1,
        separation_range=separation_range,
        orbits_sampled=orbit_samples,
        total_iterations=orbit_samples * steps_per_orbit,
        violations=violations,
    )
