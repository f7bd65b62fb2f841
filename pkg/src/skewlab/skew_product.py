"""The skew product F(x, t) = (A x, phi(x, t)) on T^d x [0, 1].

Fiber families keep phi(x, 0) = 0 and phi(x, 1) = 1, so both boundary tori
are invariant and carry the hyperbolic base dynamics.  Domination pins the
fiber derivative strictly between the base contraction and expansion
rates, which makes the system partially hyperbolic with interval central
leaves.

Orbit-sensitive computations never iterate raw float points through the
chaotic base.  Points on stable or unstable leaves are carried as an exact
periodic anchor plus an offset along the corresponding eigendirection, so
distances contract exactly where the analysis needs them to.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import (
    DegenerateGeometry,
    DominationViolated,
    InconclusiveSign,
    NoConvergence,
    NotSameLeaf,
    PreconditionViolated,
)
from .interval_maps import ClosedInterval, HolderData, IntervalMap
from .torus_anosov import (
    PeriodicOrbit,
    ToralAutomorphism,
    TorusPoint,
    heteroclinic_point,
    periodic_points,
)


# ---------------------------------------------------------------------------
# trigonometric polynomials on T^d
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TrigPolynomial:
    """psi(x) = sum_j [a_j cos(2 pi k_j . x) + b_j sin(2 pi k_j . x)].

    The coefficient l1-norm bounds sup|psi|; ``normalized`` rescales so
    that bound is at most 1.
    """

    terms: tuple  # ((k_vector, cos_coeff, sin_coeff), ...)

    @staticmethod
    def default(dimension: int) -> "TrigPolynomial":
        k = tuple(1 if i == 0 else 0 for i in range(dimension))
        return TrigPolynomial(((k, 1.0, 0.0),))

    @staticmethod
    def constant(value: float, dimension: int) -> "TrigPolynomial":
        k = tuple(0 for _ in range(dimension))
        return TrigPolynomial(((k, float(value), 0.0),))

    @property
    def l1_norm(self) -> float:
        return sum(abs(a) + abs(b) for _, a, b in self.terms)

    @property
    def frequency_weight(self) -> float:
        """sum |k|_1 (|a| + |b|): the gradient bound is 2 pi times this."""
        return sum(
            sum(abs(ki) for ki in k) * (abs(a) + abs(b)) for k, a, b in self.terms
        )

    def normalized(self) -> "TrigPolynomial":
        n = self.l1_norm
        if n <= 1.0 or n == 0.0:
            return self
        return TrigPolynomial(
            tuple((k, a / n, b / n) for k, a, b in self.terms)
        )

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape[:-1]) if x.ndim > 1 else 0.0
        for k, a, b in self.terms:
            phase = 2.0 * math.pi * (x @ np.asarray(k, dtype=float))
            out = out + a * np.cos(phase) + b * np.sin(phase)
        return out

    def to_jsonable(self) -> list:
        return [[list(k), a, b] for k, a, b in self.terms]

    @staticmethod
    def from_jsonable(data) -> "TrigPolynomial":
        return TrigPolynomial(
            tuple((tuple(int(v) for v in k), float(a), float(b)) for k, a, b in data)
        )


# ---------------------------------------------------------------------------
# fiber families
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HolderEstimate:
    """Holder data for the boundary observable ln d_t phi(., b)."""

    C_phi: float
    theta: float


class FiberFamily:
    """Interface: evaluators for phi, d phi/dt, and the t-inverse.

    Evaluators are numpy-vectorized: x has shape (..., d) and broadcasts
    against t.
    """

    name = "custom"

    def phi(self, x, t):
        raise NotImplementedError

    def dphi_dt(self, x, t):
        raise NotImplementedError

    def inverse_t(self, x, u):
        """Solve phi(x, t) = u for t; generic bisection fallback."""
        lo = np.zeros_like(np.broadcast_arrays(np.asarray(u, dtype=float))[0])
        hi = np.ones_like(lo)
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            below = self.phi(x, mid) < u
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
        return 0.5 * (lo + hi)

    def derivative_range(self) -> tuple[float, float]:
        """Analytic (inf, sup) of d phi/dt when available, else (nan, nan)."""
        return (math.nan, math.nan)

    def holder(self) -> HolderEstimate:
        raise NotImplementedError

    def params_jsonable(self) -> dict:
        return {}


class KanFiberFamily(FiberFamily):
    """phi(x, t) = t + eps t (1 - t) psi(x) with a trig-polynomial psi.

    Requires 0 <= eps < 1 so the fiber maps stay increasing; whether a
    given eps is admissible against a base matrix is the domination
    check's job (eps < 0.618 for the standard 2x2 example).
    """

    name = "kan"

    def __init__(self, epsilon: float, psi: Optional[TrigPolynomial] = None,
                 dimension: int = 2):
        if not (0.0 <= epsilon < 1.0):
            raise ValueError(f"epsilon = {epsilon} outside [0, 1)")
        self.epsilon = float(epsilon)
        self.psi = (psi or TrigPolynomial.default(dimension)).normalized()
        self.dimension = dimension

    def phi(self, x, t):
        t = np.asarray(t, dtype=float)
        return t + self.epsilon * t * (1.0 - t) * self.psi(x)

    def dphi_dt(self, x, t):
        t = np.asarray(t, dtype=float)
        return 1.0 + self.epsilon * (1.0 - 2.0 * t) * self.psi(x)

    def inverse_t(self, x, u):
        # phi is quadratic in t: a t^2 - (1 + a) t + u = 0 with a = eps psi(x);
        # the minus branch stays in [0, 1] for either sign of a
        a = np.asarray(self.epsilon * self.psi(x), dtype=float)
        u = np.asarray(u, dtype=float)
        a, u = np.broadcast_arrays(a, u)
        degenerate = np.abs(a) < 1e-14
        safe_a = np.where(degenerate, 1.0, a)
        disc = np.maximum((1.0 + a) ** 2 - 4.0 * a * u, 0.0)
        quad = ((1.0 + a) - np.sqrt(disc)) / (2.0 * safe_a)
        return np.clip(np.where(degenerate, u, quad), 0.0, 1.0)

    def derivative_range(self) -> tuple[float, float]:
        s = self.epsilon * self.psi.l1_norm
        return (1.0 - s, 1.0 + s)

    def holder(self) -> HolderEstimate:
        sup = self.epsilon * self.psi.l1_norm
        c = 2.0 * math.pi * self.epsilon * self.psi.frequency_weight / (1.0 - sup)
        return HolderEstimate(C_phi=max(c, 1e-12), theta=1.0)

    def params_jsonable(self) -> dict:
        return {
            "name": self.name,
            "epsilon": self.epsilon,
            "psi_coeffs": self.psi.to_jsonable(),
        }


def boundary_flow(tau: float):
    """Time-tau flow of s' = s (s - 1): s -> s e^-tau / (1 - s + s e^-tau)."""
    decay = math.exp(-tau)

    def flow(s):
        s = np.asarray(s, dtype=float)
        return s * decay / (1.0 - s + s * decay)

    def flow_deriv(s):
        s = np.asarray(s, dtype=float)
        return decay / (1.0 - s + s * decay) ** 2

    return flow, flow_deriv


class FlowPerturbedFamily(FiberFamily):
    """Post-composition of a family with the boundary flow for time tau.

    The flow fixes 0 and 1, multiplies the fiber derivative at t = 0 by
    e^-tau and at t = 1 by e^tau, and composes additively in tau.
    """

    name = "flow_perturbed"

    def __init__(self, inner: FiberFamily, tau: float):
        if tau < 0:
            raise ValueError("tau must be nonnegative")
        self.inner = inner
        self.tau = float(tau)
        self._flow, self._flow_deriv = boundary_flow(self.tau)
        self._unflow, _ = boundary_flow(-self.tau)

    def phi(self, x, t):
        return self._flow(self.inner.phi(x, t))

    def dphi_dt(self, x, t):
        s = self.inner.phi(x, t)
        return self._flow_deriv(s) * self.inner.dphi_dt(x, t)

    def inverse_t(self, x, u):
        return self.inner.inverse_t(x, self._unflow(u))

    def derivative_range(self) -> tuple[float, float]:
        lo, hi = self.inner.derivative_range()
        scale = math.exp(self.tau)
        return (lo / scale, hi * scale)

    def holder(self) -> HolderEstimate:
        base = self.inner.holder()
        # ln flow' along the boundary is constant in x, shifting not bending
        return base

    def params_jsonable(self) -> dict:
        return {"name": self.name, "tau": self.tau,
                "inner": self.inner.params_jsonable()}


# ---------------------------------------------------------------------------
# the skew product
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DominationMargins:
    lower: float   # inf d_t phi - ||A restricted to the stable subspace||
    upper: float   # weakest unstable expansion - sup d_t phi


@dataclass(frozen=True)
class SkewProduct:
    base: ToralAutomorphism
    fiber: FiberFamily
    margins: DominationMargins = field(compare=False)

    @property
    def dimension(self) -> int:
        return self.base.dimension

    def step(self, x: np.ndarray, t):
        """One application of (x, t) -> (A x mod 1, phi(x, t))."""
        a = np.asarray(self.base.matrix, dtype=float)
        new_t = self.fiber.phi(x, t)
        return (x @ a.T) % 1.0, new_t


def check_domination(
    auto: ToralAutomorphism, family: FiberFamily, grid_n: int = 64
) -> DominationMargins:
    """Fiber derivative bounds versus the base rates on a dense grid.

    Uses a tensor grid of at least grid_n^d base points and grid_n fiber
    levels; analytic derivative ranges tighten the result when the family
    provides them.

    Raises:
        DominationViolated: some grid sample leaves the window, with the
            offending (x, t) attached.
    """
    d = auto.dimension
    s_norm = math.exp(auto.splitting.rate_s)
    u_conorm = math.exp(auto.splitting.rate_u)

    axes = [np.linspace(0.0, 1.0, grid_n, endpoint=False)] * d
    mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d)
    ts = np.linspace(0.0, 1.0, grid_n)
    inf_d, sup_d = math.inf, -math.inf
    arg_inf, arg_sup = None, None
    for t in ts:
        vals = np.asarray(family.dphi_dt(mesh, t), dtype=float)
        vals = np.broadcast_to(vals, (mesh.shape[0],))
        i_min, i_max = int(np.argmin(vals)), int(np.argmax(vals))
        if vals[i_min] < inf_d:
            inf_d, arg_inf = float(vals[i_min]), (mesh[i_min].copy(), float(t))
        if vals[i_max] > sup_d:
            sup_d, arg_sup = float(vals[i_max]), (mesh[i_max].copy(), float(t))

    lo_an, hi_an = family.derivative_range()
    if math.isfinite(lo_an):
        inf_d = min(inf_d, lo_an)
    if math.isfinite(hi_an):
        sup_d = max(sup_d, hi_an)

    lower = inf_d - s_norm
    upper = u_conorm - sup_d
    if lower <= 0:
        raise DominationViolated(
            f"inf d_t phi = {inf_d} <= stable norm {s_norm}", point=arg_inf
        )
    if upper <= 0:
        raise DominationViolated(
            f"sup d_t phi = {sup_d} >= unstable conorm {u_conorm}", point=arg_sup
        )
    if inf_d <= 0:
        raise DominationViolated("fiber maps are not increasing", point=arg_inf)
    return DominationMargins(lower=lower, upper=upper)


def make_skew_product(
    auto: ToralAutomorphism, family: FiberFamily, grid_n: int = 64
) -> SkewProduct:
    margins = check_domination(auto, family, grid_n=grid_n)
    return SkewProduct(base=auto, fiber=family, margins=margins)


# ---------------------------------------------------------------------------
# Birkhoff sums at boundary periodic orbits
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BirkhoffSum:
    total: float
    exponent: float       # total / period, the central exponent
    period: int
    boundary: int


def birkhoff_sum(F: SkewProduct, orbit: PeriodicOrbit, boundary: int) -> BirkhoffSum:
    """Sum of ln d_t phi over the exact orbit at the chosen boundary."""
    if boundary not in (0, 1):
        raise ValueError("boundary must be 0 or 1")
    t = float(boundary)
    logs = [
        math.log(float(F.fiber.dphi_dt(p.as_floats(), t)))
        for p in orbit.points
    ]
    total = math.fsum(logs)
    return BirkhoffSum(
        total=total, exponent=total / orbit.period,
        period=orbit.period, boundary=boundary,
    )


@dataclass(frozen=True)
class OrbitExponents:
    orbit: PeriodicOrbit
    sum0: BirkhoffSum
    sum1: BirkhoffSum


def boundary_exponents(
    F: SkewProduct, period_cap: int, enumeration_cap: int = 200_000
) -> list[OrbitExponents]:
    """Orbits up to the period cap with Birkhoff data on both boundaries."""
    seen = set()
    out = []
    for n in range(1, period_cap + 1):
        for orbit in periodic_points(F.base, n, enumeration_cap=enumeration_cap):
            if orbit.base.coords in seen:
                continue
            seen.add(orbit.base.coords)
            out.append(OrbitExponents(
                orbit=orbit,
                sum0=birkhoff_sum(F, orbit, 0),
                sum1=birkhoff_sum(F, orbit, 1),
            ))
    out.sort(key=lambda oe: (oe.orbit.period, oe.orbit.base.coords))
    return out


# ---------------------------------------------------------------------------
# boundary quadrature
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class QuadratureResult:
    value: float
    error_estimate: float
    verdict: str           # "negative", "positive", or "inconclusive"
    resolution: int
    boundary: int

    def require_negative(self):
        if self.verdict != "negative":
            raise InconclusiveSign(
                f"boundary {self.boundary} integral {self.value} "
                f"+- {self.error_estimate} is not conclusively negative"
            )
        return self


def mostly_contracting_check(
    F: SkewProduct, boundary: int, resolution: int = 64
) -> QuadratureResult:
    """Integral of ln d_t phi(., boundary) against Lebesgue on T^d.

    The boundary physical measure of a linear base is Lebesgue, so the
    check reduces to tensor-grid quadrature (spectrally accurate for the
    periodic integrand); the error estimate is the Richardson difference
    against the half-resolution grid plus a float floor.
    """
    if boundary not in (0, 1):
        raise ValueError("boundary must be 0 or 1")

    def grid_mean(n: int) -> float:
        axes = [np.linspace(0.0, 1.0, n, endpoint=False)] * F.dimension
        mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, F.dimension)
        vals = np.log(np.asarray(F.fiber.dphi_dt(mesh, float(boundary)), dtype=float))
        vals = np.broadcast_to(vals, (mesh.shape[0],))
        return float(np.mean(vals))

    coarse = grid_mean(max(resolution // 2, 2))
    fine = grid_mean(resolution)
    err = abs(fine - coarse) + 1e-14
    if fine < -err:
        verdict = "negative"
    elif fine > err:
        verdict = "positive"
    else:
        verdict = "inconclusive"
    return QuadratureResult(
        value=fine, error_estimate=err, verdict=verdict,
        resolution=resolution, boundary=boundary,
    )


# ---------------------------------------------------------------------------
# fiber compositions along representable base tracks
# ---------------------------------------------------------------------------

def _leaf_vectors(auto: ToralAutomorphism):
    sp = auto.splitting
    if len(sp.stable_basis) != 1 or len(sp.unstable_basis) != 1:
        raise NotSameLeaf(
            "leaf machinery requires one-dimensional stable and unstable subspaces"
        )
    return sp.stable_basis[0], sp.unstable_basis[0]


def fiber_forward(F: SkewProduct, bases: Sequence[np.ndarray], t):
    """Compose phi along the listed base points, in order."""
    out = t
    for x in bases:
        out = float(F.fiber.phi(x, out))
    return out


def fiber_backward(F: SkewProduct, bases: Sequence[np.ndarray], t):
    """Invert phi along the listed base points, last map first."""
    out = t
    for x in reversed(bases):
        out = float(F.fiber.inverse_t(x, out))
    return out


def fiber_return_map(F: SkewProduct, orbit: PeriodicOrbit) -> IntervalMap:
    """The fiber return map phi^(period) over the exact base orbit."""
    bases = [p.as_floats() for p in orbit.points]
    hol = F.fiber.holder()

    def f(t):
        return fiber_forward(F, bases, t)

    def df(t):
        out, d = float(t), 1.0
        for x in bases:
            d *= float(F.fiber.dphi_dt(x, out))
            out = float(F.fiber.phi(x, out))
        return d

    def inv(u):
        return fiber_backward(F, bases, u)

    return IntervalMap(
        f, df, name=f"return@{orbit.base.coords}",
        boundary_preserving=True, inverse=inv,
        holder=HolderData(C=hol.C_phi * orbit.period, theta=hol.theta),
    )


# ---------------------------------------------------------------------------
# unstable holonomy between fibers
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class UnstableLeafPoint:
    """A point of the unstable leaf through an exact periodic anchor."""

    orbit: PeriodicOrbit
    u_offset: float
    phase: int = 0


class HolonomyMap(IntervalMap):
    """Fiber action of the unstable holonomy between two leaf points.

    Evaluation pulls t backward ``depth`` steps along the source track and
    pushes it forward along the target track; the tracks contract toward
    the shared anchor orbit at the base expansion rate, which the
    domination margin converts into a Cauchy tail for the truncation.
    """

    def __init__(self, F: SkewProduct, x: UnstableLeafPoint, y: UnstableLeafPoint,
                 depth: int, residual: float):
        self.depth = depth
        self.cauchy_residual = residual
        v_s, v_u = _leaf_vectors(F.base)
        lam_u = math.exp(F.base.splitting.rate_u)
        period = x.orbit.period
        src, dst = [], []
        for j in range(depth, 0, -1):
            anchor = x.orbit.points[(x.phase - j) % period].as_floats()
            scale = lam_u ** (-j)
            src.append((anchor + x.u_offset * scale * v_u) % 1.0)
            dst.append((anchor + y.u_offset * scale * v_u) % 1.0)

        def f(t):
            return fiber_forward(F, dst, fiber_backward(F, src, t))

        def df(t):
            # derivative: product of d_t phi along dst over product along src,
            # both starting from the pulled-back fiber value
            start = fiber_backward(F, src, t)
            d_src, out = 1.0, start
            for xp in src:
                d_src *= float(F.fiber.dphi_dt(xp, out))
                out = float(F.fiber.phi(xp, out))
            d_dst, out = 1.0, start
            for yp in dst:
                d_dst *= float(F.fiber.dphi_dt(yp, out))
                out = float(F.fiber.phi(yp, out))
            return d_dst / d_src

        def inv(u):
            return fiber_forward(F, src, fiber_backward(F, dst, u))

        IntervalMap.__init__(
            self, f, df, name="unstable_holonomy",
            boundary_preserving=True, inverse=inv,
        )


def unstable_holonomy_fiber(
    F: SkewProduct,
    x: UnstableLeafPoint,
    y: UnstableLeafPoint,
    n_max: int = 400,
    tol: float = 1e-10,
) -> HolonomyMap:
    """Holonomy from the fiber over x to the fiber over y along F^u.

    Raises:
        NotSameLeaf: the anchors differ (points not on one leaf).
        NoConvergence: the Cauchy tolerance is unmet within n_max steps.
    """
    if x.orbit.base.coords != y.orbit.base.coords or x.phase != y.phase:
        raise NotSameLeaf("holonomy endpoints must share their anchor")
    period = x.orbit.period
    grid = np.linspace(0.05, 0.95, 7)
    prev = None
    depth = period
    while depth <= n_max:
        hol = HolonomyMap(F, x, y, depth, residual=math.nan)
        vals = np.array([hol(t) for t in grid])
        if prev is not None:
            residual = float(np.max(np.abs(vals - prev)))
            if residual < tol:
                return HolonomyMap(F, x, y, depth, residual=residual)
        prev = vals
        depth += period
    raise NoConvergence(f"holonomy truncation not Cauchy below {tol} by {n_max}")


# ---------------------------------------------------------------------------
# boundary interconnection
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FiberTrace:
    """Trace of a stable or unstable set inside one central fiber."""

    interval: ClosedInterval
    truncation: int
    residual: float


@dataclass(frozen=True)
class InterconnectionWitness:
    p0: OrbitExponents
    p1: OrbitExponents
    q0: OrbitExponents
    q1: OrbitExponents
    z_p: TorusPoint
    z_q: TorusPoint
    overlap_p: FiberTrace
    overlap_q: FiberTrace
    min_overlap: float


@dataclass(frozen=True)
class Absent:
    """No witness inside the caps; not a proof that none exists."""

    reason: str
    negative0: int
    positive0: int
    negative1: int
    positive1: int


OVERLAP_FLOOR = 1e-6
SINK_ENTER = 1e-4
SINK_HOLD = 1e-3
SINK_HOLD_STEPS = 100


def _unstable_interval_at(F: SkewProduct, orbit: PeriodicOrbit) -> float:
    """Lower end tau of the backward-attracted interval (tau, 1].

    tau is the largest fixed point of the fiber return map strictly below
    1; between tau and 1 the backward fiber orbit climbs to the boundary,
    so (tau, 1] is the central trace of the unstable set at the orbit.
    """
    rm = fiber_return_map(F, orbit)
    grid = np.linspace(0.0, 1.0, 1 << 10)
    resid = [rm(t) - t for t in grid]
    tau = 0.0
    for i in range(len(grid) - 2, 0, -1):
        if resid[i] == 0.0:
            tau = float(grid[i])
            break
        if resid[i] * resid[i + 1] < 0:
            lo, hi = grid[i], grid[i + 1]
            for _ in range(80):
                mid = 0.5 * (lo + hi)
                if (rm(mid) - mid) * (rm(lo) - lo) > 0:
                    lo = mid
                else:
                    hi = mid
            tau = 0.5 * (lo + hi)
            break
    return tau


def _stable_trace_upper(F: SkewProduct, bases_builder, max_steps: int = 4000):
    """Largest t whose forward fiber orbit is captured by the sink at 0.

    ``bases_builder(k)`` returns the k-th base point of the forward track.
    A point classifies as captured when its fiber orbit enters
    [0, SINK_ENTER] and stays below SINK_HOLD for SINK_HOLD_STEPS more
    steps; monotonicity of the fiber maps makes bisection valid.
    """

    def captured(t0: float) -> bool:
        t = float(t0)
        hold = 0
        entered = False
        for k in range(max_steps):
            t = float(F.fiber.phi(bases_builder(k), t))
            if not entered and t <= SINK_ENTER:
                entered = True
            if entered:
                if t <= SINK_HOLD:
                    hold += 1
                    if hold >= SINK_HOLD_STEPS:
                        return True
                else:
                    return False
        return False

    if not captured(1e-6):
        return 0.0
    lo, hi = 1e-6, 1.0
    if captured(1.0 - 1e-12):
        return 1.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if captured(mid):
            lo = mid
        else:
            hi = mid
    return lo


def _pair_overlap(F: SkewProduct, neg: OrbitExponents, pos: OrbitExponents,
                  norm_bound: float) -> Optional[FiberTrace]:
    """Fiber overlap of W^s(neg at boundary b) with W^u(pos at boundary 1-b).

    Both traces are computed over a base point z joining the unstable leaf
    of the expanding witness to the stable leaf of the contracting one.
    For witnesses on one base orbit z is the orbit point itself and the
    traces come from the return map; otherwise z is the minimal
    heteroclinic point and the unstable trace is pushed forward along the
    backward base track with a domination tail.
    """
    v_s, v_u = _leaf_vectors(F.base)
    lam_s = math.exp(F.base.splitting.rate_s)
    lam_u = math.exp(F.base.splitting.rate_u)

    same_orbit = neg.orbit.base.coords == pos.orbit.base.coords
    tau = _unstable_interval_at(F, pos.orbit)

    if same_orbit:
        z = neg.orbit.base
        # forward track: the exact orbit itself
        pts = [p.as_floats() for p in neg.orbit.points]

        def bases(k):
            return pts[k % len(pts)]

        t_star = _stable_trace_upper(F, bases)
        u_star = tau
        trunc, residual = 0, 0.0
    else:
        het = heteroclinic_point(F.base, pos.orbit, neg.orbit, norm_bound=norm_bound)
        z = het.point
        # unstable trace: push [tau, 1] forward from deep on the backward track
        qperiod = pos.orbit.period
        sup_d = max(abs(v) for v in (F.fiber.derivative_range()))
        ratio = sup_d / lam_u
        depth = qperiod
        while ratio ** depth > 1e-12 and depth < 600:
            depth += qperiod
        lower = tau
        prev = None
        residual = math.nan
        for probe in (depth, depth + qperiod):
            track = [
                (pos.orbit.points[(-j) % qperiod].as_floats()
                 + het.unstable_offset * lam_u ** (-j) * v_u) % 1.0
                for j in range(probe, 0, -1)
            ]
            val = fiber_forward(F, track, tau)
            if prev is not None:
                residual = abs(val - prev)
            prev = val
        u_star = prev
        trunc = depth + qperiod

        nperiod = neg.orbit.period

        def bases(k):
            anchor = neg.orbit.points[k % nperiod].as_floats()
            return (anchor + het.stable_offset * lam_s ** k * v_s) % 1.0

        t_star = _stable_trace_upper(F, bases)

    if t_star <= u_star:
        return None, z
    return FiberTrace(
        interval=ClosedInterval(u_star, t_star),
        truncation=trunc, residual=0.0 if math.isnan(residual) else residual,
    ), z


def boundary_interconnection(
    F: SkewProduct,
    period_cap: int = 2,
    norm_bound: float = 3.0,
    enumeration_cap: int = 200_000,
):
    """Search for an interconnection witness up to the period cap.

    Scans boundary periodic orbits for the sign pattern (contracting and
    expanding on each boundary), then certifies the two required
    stable/unstable intersections by nonempty fiber overlaps of length
    above 1e-6 over a joining base point.  Candidate pairs go in
    (combined period, lexicographic representative) order and the first
    full witness wins.

    Returns an :class:`InterconnectionWitness`, or :class:`Absent` with
    the sign census when no witness fits inside the caps.  An overlap
    thinner than the 1e-6 floor also reports Absent (flagged in the
    reason) rather than silently deciding tangency.
    """
    table = boundary_exponents(F, period_cap, enumeration_cap=enumeration_cap)
    neg0 = [oe for oe in table if oe.sum0.exponent < 0]
    pos0 = [oe for oe in table if oe.sum0.exponent > 0]
    neg1 = [oe for oe in table if oe.sum1.exponent < 0]
    pos1 = [oe for oe in table if oe.sum1.exponent > 0]

    census = dict(
        negative0=len(neg0), positive0=len(pos0),
        negative1=len(neg1), positive1=len(pos1),
    )
    if not (neg0 and pos0 and neg1 and pos1):
        return Absent(
            reason="missing central exponent sign on some boundary", **census
        )

    def ordered_pairs(contracting, expanding):
        pairs = [
            (c.orbit.period + e.orbit.period, c.orbit.base.coords,
             e.orbit.base.coords, c, e)
            for c in contracting for e in expanding
        ]
        pairs.sort(key=lambda p: (p[0], p[1], p[2]))
        return [(c, e) for _, _, _, c, e in pairs]

    thin = False
    p_hit = None
    for p0, p1 in ordered_pairs(neg0, pos1):
        trace, z = _pair_overlap(F, p0, p1, norm_bound)
        if trace is not None:
            if trace.interval.length > OVERLAP_FLOOR:
                p_hit = (p0, p1, trace, z)
                break
            thin = True
    q_hit = None
    if p_hit is not None:
        for q1, q0 in ordered_pairs(neg1, pos0):
            trace, z = _pair_overlap_flipped(F, q1, q0, norm_bound)
            if trace is not None:
                if trace.interval.length > OVERLAP_FLOOR:
                    q_hit = (q1, q0, trace, z)
                    break
                thin = True

    if p_hit is None or q_hit is None:
        reason = "no overlapping pair inside the caps"
        if thin:
            reason += " (an overlap existed but was thinner than 1e-6; tangency undecided)"
        return Absent(reason=reason, **census)

    p0, p1, trace_p, z_p = p_hit
    q1, q0, trace_q, z_q = q_hit
    return InterconnectionWitness(
        p0=p0, p1=p1, q0=q0, q1=q1,
        z_p=z_p, z_q=z_q,
        overlap_p=trace_p, overlap_q=trace_q,
        min_overlap=min(trace_p.interval.length, trace_q.interval.length),
    )


def _pair_overlap_flipped(F: SkewProduct, neg1: OrbitExponents,
                          pos0: OrbitExponents, norm_bound: float):
    """Mirror of :func:`_pair_overlap` for the (q1, q0) pair.

    Works in the flipped fiber coordinate t -> 1 - t, where the boundary-1
    contracting witness becomes a boundary-0 one; the overlap interval is
    converted back to the original coordinate.
    """
    flipped = SkewProduct(
        base=F.base,
        fiber=_FlippedFamily(F.fiber),
        margins=F.margins,
    )
    trace, z = _pair_overlap(flipped, neg1, pos0, norm_bound)
    if trace is None:
        return None, z
    flipped_back = ClosedInterval(1.0 - trace.interval.hi, 1.0 - trace.interval.lo)
    return FiberTrace(
        interval=flipped_back,
        truncation=trace.truncation,
        residual=trace.residual,
    ), z


class _FlippedFamily(FiberFamily):
    """The same system seen through t -> 1 - t (swaps the boundaries)."""

    name = "flipped"

    def __init__(self, inner: FiberFamily):
        self.inner = inner

    def phi(self, x, t):
        return 1.0 - self.inner.phi(x, 1.0 - np.asarray(t, dtype=float))

    def dphi_dt(self, x, t):
        return self.inner.dphi_dt(x, 1.0 - np.asarray(t, dtype=float))

    def inverse_t(self, x, u):
        return 1.0 - self.inner.inverse_t(x, 1.0 - np.asarray(u, dtype=float))

    def derivative_range(self):
        return self.inner.derivative_range()

    def holder(self):
        return self.inner.holder()


# ---------------------------------------------------------------------------
# central twist decay
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TwistReport:
    steps: tuple           # F-step indices n
    distances: tuple       # d_c(w'_n, w_n)
    fitted_slope: Optional[float]
    lambda_p: float
    lambda_c: float
    sup_excess: Optional[float]   # max of ln d_n - n lambda_p over the fit range
    r_offset: float


def central_twist_decay(
    F: SkewProduct,
    p: PeriodicOrbit,
    r_norm_bound: float = 3.0,
    n_max: int = 40,
    sigma: float = 0.05,
    t0: float = 0.5,
    fit_from: int = 10,
) -> TwistReport:
    """Decay rate of the stable-projection/unstable-holonomy mismatch.

    Follows a center-stable point x_n = F^n(x_0), x_0 = (p + sigma v_s, t0),
    and compares the two transports of its fiber data to the central leaf
    over r: project-then-slide (w_n) against slide-then-project (w'_n).
    The target r is the minimal nonzero homoclinic point of the orbit, so
    every auxiliary track stays in exactly representable leaf coordinates.

    The asserted rate is lambda_p = (l_u - l_c)/(l_u - l_s) * l_s computed
    from the orbit data, which is strictly below the central exponent.

    Raises:
        PreconditionViolated: the orbit's central exponent is not negative.
        DegenerateGeometry: distances underflow before a fit is possible.
    """
    bs = birkhoff_sum(F, p, 0)
    lam_c = bs.exponent
    if lam_c >= 0:
        raise PreconditionViolated(f"central exponent {lam_c} not negative")
    sp = F.base.splitting
    lam_u_rate, lam_s_rate = sp.rate_u, sp.rate_s
    lambda_p = (lam_u_rate - lam_c) / (lam_u_rate - lam_s_rate) * lam_s_rate
    assert lambda_p < lam_c < 0.0

    v_s, v_u = _leaf_vectors(F.base)
    lam_s = math.exp(lam_s_rate)
    lam_u = math.exp(lam_u_rate)
    period = p.period
    het = heteroclinic_point(F.base, p, p, norm_bound=r_norm_bound,
                             exclude_trivial=True)
    u_r, s_r = het.unstable_offset, het.stable_offset

    anchors = [pt.as_floats() for pt in p.points]

    def x_base(k):      # base of F^k(x_0)
        return (anchors[k % period] + sigma * lam_s ** k * v_s) % 1.0

    sup_d = max(abs(v) for v in F.fiber.derivative_range())
    inf_d = min(abs(v) for v in F.fiber.derivative_range())
    q_u = sup_d / lam_u          # unstable holonomy tail ratio
    q_s = lam_s / inf_d          # stable holonomy tail ratio

    def depth_for(ratio, tol=1e-13):
        d = period
        while ratio ** d > tol and d < 800:
            d += period
        return d

    def stable_depth(separation: float) -> int:
        # The backward leg of a stable transport amplifies float noise by
        # roughly exp(|central exponent| * depth), so the depth is chosen
        # just large enough for the tail sep * q_s^m to clear the float
        # floor; deeper is strictly worse.
        if separation <= 1e-16:
            return period
        m = period
        while separation * q_s ** m > 1e-16 and m < 400:
            m += period
        return m

    # stable holonomy value: pull the fiber value from the src track onto
    # the dst track (both forward), tracks listed from the start point
    def stable_transport(src_bases, dst_bases, t):
        return fiber_backward(F, dst_bases, fiber_forward(F, src_bases, t))

    steps, dists = [], []
    epsilon_range = F.fiber.derivative_range()
    trivial = abs(epsilon_range[1] - epsilon_range[0]) < 1e-15

    for n in range(period, n_max + 1, period):
        # fiber value over x_n by forward composition
        t_n = t0
        for k in range(n):
            t_n = float(F.fiber.phi(x_base(k), t_n))

        if trivial:
            steps.append(n)
            dists.append(0.0)
            continue

        # y_n: slide x_n along its stable leaf onto the central leaf of p
        m_s = stable_depth(sigma * lam_s ** n)
        src = [x_base(n + m) for m in range(m_s)]
        dst = [anchors[(n + m) % period] for m in range(m_s)]
        y_fiber = stable_transport(src, dst, t_n)

        # w_n: unstable holonomy of y_n from the orbit to r, composed along
        # the exact periodic backward track
        m_u = depth_for(q_u)
        back_src = [anchors[(-j) % period] for j in range(m_u, 0, -1)]
        back_dst = [
            (anchors[(-j) % period] + u_r * lam_u ** (-j) * v_u) % 1.0
            for j in range(m_u, 0, -1)
        ]
        w_fiber = fiber_forward(F, back_dst, fiber_backward(F, back_src, y_fiber))

        # z_n: unstable holonomy of x_n by the same displacement, with the
        # backward track capped at the age n of the stable offset
        m_x = min(n, depth_for(q_u))
        zx_src = [x_base(n - j) for j in range(m_x, 0, -1)]
        zx_dst = [
            (x_base(n - j) + u_r * lam_u ** (-j) * v_u) % 1.0
            for j in range(m_x, 0, -1)
        ]
        z_fiber = fiber_forward(F, zx_dst, fiber_backward(F, zx_src, t_n))

        # w'_n: slide z_n along its stable leaf onto the central leaf of r;
        # the forward track of r rides the orbit anchor with offset s_r
        def r_base(m):
            return (anchors[m % period]
                    + s_r * lam_s ** m * v_s) % 1.0

        def z_base(m):
            return (anchors[m % period]
                    + (s_r * lam_s ** m + sigma * lam_s ** (n + m)) * v_s) % 1.0

        src2 = [z_base(m) for m in range(m_s)]
        dst2 = [r_base(m) for m in range(m_s)]
        wp_fiber = stable_transport(src2, dst2, z_fiber)

        steps.append(n)
        dists.append(abs(wp_fiber - w_fiber))

    usable = [
        (n, d) for n, d in zip(steps, dists)
        if n >= fit_from and d > 1e-12
    ]
    if trivial or all(d == 0.0 for d in dists):
        return TwistReport(
            steps=tuple(steps), distances=tuple(dists),
            fitted_slope=None, lambda_p=lambda_p, lambda_c=lam_c,
            sup_excess=None, r_offset=u_r,
        )
    if len(usable) < 3:
        raise DegenerateGeometry(
            f"only {len(usable)} usable twist distances above 1e-12"
        )
    ns = np.array([n for n, _ in usable], dtype=float)
    ys = np.array([math.log(d) for _, d in usable])
    slope = float(np.polyfit(ns, ys, 1)[0])
    excess = float(np.max(ys - ns * lambda_p))
    return TwistReport(
        steps=tuple(steps), distances=tuple(dists),
        fitted_slope=slope, lambda_p=lambda_p, lambda_c=lam_c,
        sup_excess=excess, r_offset=u_r,
    )


# ---------------------------------------------------------------------------
# the boundary flow perturbation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PerturbationReport:
    system: SkewProduct
    tau: float
    alpha_tau: float
    max_shift_error0: float   # worst |lambda_G - (lambda_F - tau)|, 0-boundary
    max_shift_error1: float   # worst |lambda_G - (lambda_F + tau)|, 1-boundary


def perturb_flow(
    F: SkewProduct, tau: float, period_cap: int = 2, grid_n: int = 64
) -> PerturbationReport:
    """G = (boundary flow for time tau) after F, with the exponent audit.

    The flow of s' = s(s - 1) fixes both boundaries, shifts every central
    exponent on the 0-boundary by -tau and on the 1-boundary by +tau, and
    composes additively in tau.  Domination is re-checked for G.

    Raises:
        DominationViolated: G leaves the partially hyperbolic window.
    """
    family = FlowPerturbedFamily(F.fiber, tau)
    G = make_skew_product(F.base, family, grid_n=grid_n)

    err0 = err1 = 0.0
    for oe in boundary_exponents(F, period_cap):
        g0 = birkhoff_sum(G, oe.orbit, 0)
        g1 = birkhoff_sum(G, oe.orbit, 1)
        err0 = max(err0, abs(g0.exponent - (oe.sum0.exponent - tau)))
        err1 = max(err1, abs(g1.exponent - (oe.sum1.exponent + tau)))
    return PerturbationReport(
        system=G, tau=tau, alpha_tau=math.exp(-tau),
        max_shift_error0=err0, max_shift_error1=err1,
    )


# ---------------------------------------------------------------------------
# consequence of nonpositive periodic exponents
# ---------------------------------------------------------------------------

def nonpositive_exponent_consequence(
    F: SkewProduct,
    boundary: int,
    period_cap: int = 2,
    samples: int = 1000,
    iterations: int = 100_000,
    seed: int = 0,
) -> tuple[bool, float]:
    """Nonpositive periodic exponents force nonpositive sampled averages.

    Returns (hypothesis_holds, max_sampled_average): when every periodic
    central exponent up to the cap is <= 0, the forward Birkhoff averages
    of ln d_t phi along random boundary orbits should not exceed ~0 either
    (the test budget allows +0.01 of slack).
    """
    table = boundary_exponents(F, period_cap)
    exps = [getattr(oe, f"sum{boundary}").exponent for oe in table]
    hypothesis = all(e <= 0 for e in exps)

    rng = np.random.default_rng(seed)
    x = rng.uniform(0.0, 1.0, size=(samples, F.dimension))
    a = np.asarray(F.base.matrix, dtype=float)
    acc = np.zeros(samples)
    tb = float(boundary)
    for _ in range(iterations):
        acc += np.log(np.asarray(F.fiber.dphi_dt(x, tb), dtype=float))
        x = (x @ a.T) % 1.0
    averages = acc / iterations
    return hypothesis, float(np.max(averages))
