"""One-dimensional dynamics on [0, 1]: interval diffeomorphisms and NS-maps.

An NS-map here is an increasing interval diffeomorphism whose only fixed
points are 0 (a sink) and 1.  The module provides the builtin families used
throughout the laboratory, the normalization of a contracting-boundary map
to its NS form on the contracting interval, and the bounded-distortion
measurement over fundamental domains.

Interval images are always taken from the endpoints, which monotonicity
(f' > 0) makes exact up to evaluation error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import (
    NotContracting,
    PreconditionViolated,
    RangeOutsideNeighborhood,
    RootFindFail,
)

GRID_POINTS = 1 << 10
BISECT_TOL = 1e-12


@dataclass(frozen=True)
class HolderData:
    """Holder bound on ln f': |ln f'(x) - ln f'(y)| <= C |x - y|^theta."""

    C: float
    theta: float


@dataclass(frozen=True)
class ClosedInterval:
    lo: float
    hi: float

    def __post_init__(self):
        if not (self.lo <= self.hi):
            raise ValueError(f"empty interval [{self.lo}, {self.hi}]")

    @property
    def length(self) -> float:
        return self.hi - self.lo

    def intersect(self, other: "ClosedInterval") -> Optional["ClosedInterval"]:
        lo = max(self.lo, other.lo)
        hi = min(self.hi, other.hi)
        if lo > hi:
            return None
        return ClosedInterval(lo, hi)

    def contains(self, t: float) -> bool:
        return self.lo <= t <= self.hi


class IntervalMap:
    """Increasing C^1 map of [0, 1] given by value/derivative evaluators."""

    def __init__(
        self,
        f: Callable[[float], float],
        df: Callable[[float], float],
        name: str = "custom",
        params: Optional[dict] = None,
        boundary_preserving: Optional[bool] = None,
        holder: Optional[HolderData] = None,
        inverse: Optional[Callable[[float], float]] = None,
        smoothness: str = "C1+",
    ):
        self._f = f
        self._df = df
        self.name = name
        self.params = dict(params or {})
        self.holder = holder
        self._inverse = inverse
        self.smoothness = smoothness
        if boundary_preserving is None:
            boundary_preserving = (
                abs(self(0.0)) < 1e-12 and abs(self(1.0) - 1.0) < 1e-12
            )
        self.boundary_preserving = boundary_preserving

    def __call__(self, t: float) -> float:
        return float(self._f(t))

    def deriv(self, t: float) -> float:
        return float(self._df(t))

    def inverse(self, u: float) -> float:
        if self._inverse is not None:
            return float(self._inverse(u))
        return self._bisect_inverse(u)

    def _bisect_inverse(self, u: float) -> float:
        lo, hi = 0.0, 1.0
        if u <= self(lo):
            return lo
        if u >= self(hi):
            return hi
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if self(mid) < u:
                lo = mid
            else:
                hi = mid
            if hi - lo < 1e-16:
                break
        return 0.5 * (lo + hi)

    def iterate(self, t: float, n: int) -> float:
        out = float(t)
        if n >= 0:
            for _ in range(n):
                out = self(out)
        else:
            for _ in range(-n):
                out = self.inverse(out)
        return out

    def image(self, interval: ClosedInterval, n: int = 1) -> ClosedInterval:
        """Image of an interval under f^n, exact from monotone endpoints."""
        return ClosedInterval(
            self.iterate(interval.lo, n), self.iterate(interval.hi, n)
        )

    def deriv_iterate(self, t: float, n: int) -> float:
        """Chain-rule derivative of f^n at t (n >= 0)."""
        out, d = float(t), 1.0
        for _ in range(n):
            d *= self.deriv(out)
            out = self(out)
        return d


class CompositeIntervalMap(IntervalMap):
    """Composition of maps applied left to right; used for return maps."""

    def __init__(self, stages: Sequence[IntervalMap], name: str = "composite"):
        self.stages = tuple(stages)

        def f(t):
            out = float(t)
            for stage in self.stages:
                out = stage(out)
            return out

        def df(t):
            out, d = float(t), 1.0
            for stage in self.stages:
                d *= stage.deriv(out)
                out = stage(out)
            return d

        def inv(u):
            out = float(u)
            for stage in reversed(self.stages):
                out = stage.inverse(out)
            return out

        bp = all(s.boundary_preserving for s in stages)
        IntervalMap.__init__(
            self, f, df, name=name, boundary_preserving=bp, inverse=inv
        )


# ---------------------------------------------------------------------------
# builtin families
# ---------------------------------------------------------------------------

def mobius_map(alpha: float) -> IntervalMap:
    """f(t) = alpha t / (1 + (alpha - 1) t); fixes {0, 1}, f'(0) = alpha.

    For alpha in (0, 1) this is an NS-map with sink at 0 and source at 1;
    alpha > 1 gives the inverse orientation.  ln f' is Lipschitz with
    constant 2|1 - alpha| / min(1, alpha).
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    a = float(alpha)

    def f(t):
        return a * t / (1.0 + (a - 1.0) * t)

    def df(t):
        return a / (1.0 + (a - 1.0) * t) ** 2

    def inv(u):
        return u / (a + (1.0 - a) * u)

    c_lip = 2.0 * abs(1.0 - a) / min(1.0, a)
    return IntervalMap(
        f, df, name="mobius", params={"alpha": a},
        boundary_preserving=True, holder=HolderData(C=c_lip, theta=1.0),
        inverse=inv,
    )


def quadratic_blend_map() -> IntervalMap:
    """f(t) = t (1 + t) / 2; fixed points exactly {0, 1}, f'(0) = 1/2."""
    return IntervalMap(
        lambda t: 0.5 * t * (1.0 + t),
        lambda t: 0.5 + t,
        name="quadratic_blend",
        boundary_preserving=True,
        holder=HolderData(C=2.0, theta=1.0),
    )


def cubic_interior_map(fixed_at: float = 0.5, strength: float = -1.0) -> IntervalMap:
    """f(t) = t + c t (t - s)(t - 1): plants an interior fixed point at s.

    Requires strength c in (-2, 0) for s = 1/2 so that f' > 0 on [0, 1].
    """
    s, c = float(fixed_at), float(strength)

    def f(t):
        return t + c * t * (t - s) * (t - 1.0)

    def df(t):
        return 1.0 + c * (3.0 * t * t - 2.0 * (1.0 + s) * t + s)

    m = IntervalMap(
        f, df, name="cubic_interior", params={"fixed_at": s, "strength": c},
        boundary_preserving=True,
    )
    grid = np.linspace(0.0, 1.0, 512)
    if min(m.deriv(t) for t in grid) <= 0:
        raise ValueError("strength too large: map is not increasing")
    return m


def polynomial_map(coeffs: Sequence[float]) -> IntervalMap:
    """Map from polynomial coefficients, constant term first.

    Validates f(0) = 0, f(1) = 1 and f' > 0 on a grid.
    """
    cs = [float(c) for c in coeffs]
    der = [i * cs[i] for i in range(1, len(cs))]

    def f(t):
        return sum(c * t ** i for i, c in enumerate(cs))

    def df(t):
        return sum(c * t ** i for i, c in enumerate(der))

    if abs(f(0.0)) > 1e-12 or abs(f(1.0) - 1.0) > 1e-12:
        raise ValueError("polynomial does not fix 0 and 1")
    grid = np.linspace(0.0, 1.0, 512)
    if min(df(t) for t in grid) <= 0:
        raise ValueError("polynomial is not increasing on [0, 1]")
    return IntervalMap(f, df, name="poly", params={"coeffs": cs},
                       boundary_preserving=True)


def linear_map(beta: float, boundary_preserving: bool = False) -> IntervalMap:
    """g(t) = beta t, as an analysis-only map (not boundary preserving)."""
    b = float(beta)
    return IntervalMap(
        lambda t: b * t,
        lambda t: b,
        name="linear", params={"beta": b},
        boundary_preserving=boundary_preserving,
        holder=HolderData(C=0.0, theta=1.0),
        inverse=lambda u: u / b,
    )


BUILTIN_FAMILIES = {
    "mobius": mobius_map,
    "quadratic_blend": quadratic_blend_map,
    "cubic_interior": cubic_interior_map,
    "poly": polynomial_map,
    "linear": linear_map,
}


def builtin_map(name: str, **params) -> IntervalMap:
    if name not in BUILTIN_FAMILIES:
        raise ValueError(f"unknown family {name!r}; have {sorted(BUILTIN_FAMILIES)}")
    if name == "poly":
        return polynomial_map(params["coeffs"])
    return BUILTIN_FAMILIES[name](**params)


# ---------------------------------------------------------------------------
# NS normalization
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NSMapModel:
    """Normalized view of a boundary map contracting at 0.

    ``smallest_fixed`` is the smallest positive fixed point s; [0, s) is
    the contracting interval and ``rescaled`` is the conjugate
    u -> f(s u)/s on [0, 1], which has exactly two fixed points, 0 (sink)
    and 1.
    """

    alpha: float
    smallest_fixed: float
    contracting_interval: ClosedInterval
    rescaled: IntervalMap
    source: IntervalMap


def ns_analyze(f: IntervalMap) -> NSMapModel:
    """Locate the smallest positive fixed point and rescale onto [0, 1].

    Raises:
        NotContracting: f'(0) >= 1.
        RootFindFail: no bracketing sign change and f does not fix 1.
    """
    alpha = f.deriv(0.0)
    if alpha >= 1.0:
        raise NotContracting(f"f'(0) = {alpha} >= 1")

    grid = np.linspace(0.0, 1.0, GRID_POINTS + 1)
    resid = np.array([f(t) - t for t in grid])
    s_p = None
    for i in range(1, GRID_POINTS):
        if abs(resid[i]) < 1e-15 and grid[i] > 0:
            s_p = float(grid[i])
            break
        if resid[i] < 0 and resid[i + 1] >= 0:
            lo, hi = grid[i], grid[i + 1]
            for _ in range(80):
                mid = 0.5 * (lo + hi)
                if f(mid) - mid < 0:
                    lo = mid
                else:
                    hi = mid
                if hi - lo < BISECT_TOL * 1e-3:
                    break
            s_p = 0.5 * (lo + hi)
            break
    if s_p is None:
        if f.boundary_preserving and abs(f(1.0) - 1.0) < 1e-12:
            s_p = 1.0
        else:
            raise RootFindFail("no fixed point brackets in (0, 1] for this map")

    # the residual check only means something where the crossing slope is
    # moderate; long return-map compositions cross so steeply that the
    # fixed point is a float-level jump and the bracket width (driven to
    # 1e-15 above) is the real certificate
    slope = abs(f.deriv(s_p))
    if slope < 1e3:
        assert abs(f(s_p) - s_p) <= BISECT_TOL * max(1.0, slope)

    s = float(s_p)

    def rescaled(u):
        return f(s * u) / s

    def rescaled_deriv(u):
        return f.deriv(s * u)

    def rescaled_inv(u):
        return f.inverse(s * u) / s

    rescaled_map = IntervalMap(
        rescaled, rescaled_deriv,
        name=f"{f.name}|rescaled", params={"scale": s},
        boundary_preserving=True, holder=f.holder, inverse=rescaled_inv,
    )
    return NSMapModel(
        alpha=float(alpha),
        smallest_fixed=s,
        contracting_interval=ClosedInterval(0.0, s),
        rescaled=rescaled_map,
        source=f,
    )


# ---------------------------------------------------------------------------
# Holder estimation and distortion
# ---------------------------------------------------------------------------

def holder_estimate(
    f: IntervalMap, domain: ClosedInterval, theta: float = 1.0, samples: int = 400
) -> HolderData:
    """Estimate the Holder constant of ln f' from pairwise samples.

    Supplied family data overrides this estimate wherever both exist.
    """
    ts = np.linspace(domain.lo, domain.hi, samples)
    logd = np.array([math.log(f.deriv(t)) for t in ts])
    best = 0.0
    for i in range(samples - 1):
        for j in range(i + 1, min(i + 40, samples)):
            gap = abs(ts[j] - ts[i]) ** theta
            if gap > 0:
                best = max(best, abs(logd[j] - logd[i]) / gap)
    return HolderData(C=best * 1.05, theta=theta)


@dataclass(frozen=True)
class ProportionResult:
    ratios: tuple
    rho_hat: float
    rho_bound: float
    domains: tuple


def uniform_proportion_check(
    g: IntervalMap,
    J: ClosedInterval,
    y: float,
    i_range: Sequence[int],
    neighborhood_hi: float = 1.0,
) -> ProportionResult:
    """Distortion of |J_i| / |Omega_i| across fundamental domains.

    Omega_i = (g^{i+1}(y), g^i(y)] and J_i is the trace of the full g-orbit
    of J inside Omega_i.  Returns min/max ratios and rho_hat = min / max,
    and checks rho_hat against the Holder lower bound
    exp(-C^2 / (1 - beta^theta)).

    Raises:
        RangeOutsideNeighborhood: a requested domain leaves [0, neighborhood_hi].
    """
    beta = g.deriv(0.0)
    if not i_range:
        raise ValueError("empty i_range")
    if min(i_range) < 0:
        raise RangeOutsideNeighborhood("negative indices leave the sink side")
    if y <= 0 or y > neighborhood_hi:
        raise RangeOutsideNeighborhood(f"base point {y} outside (0, {neighborhood_hi}]")

    i_max = max(i_range)
    gy = [float(y)]
    for _ in range(i_max + 1):
        gy.append(g(gy[-1]))

    # every g-iterate of J that can intersect (0, y]
    images = [J]
    cur = J
    while cur.hi > 1e-300:
        cur = ClosedInterval(g(cur.lo), g(cur.hi))
        images.append(cur)
        if cur.hi < gy[i_max + 1] * 1e-6 or len(images) > 10_000:
            break
    cur = J
    while cur.hi < neighborhood_hi and len(images) < 20_000:
        nxt_lo, nxt_hi = g.inverse(cur.lo), g.inverse(cur.hi)
        if nxt_hi >= neighborhood_hi or nxt_hi <= cur.hi:
            break
        cur = ClosedInterval(nxt_lo, nxt_hi)
        images.append(cur)

    ratios = []
    domains = []
    for i in i_range:
        omega = ClosedInterval(gy[i + 1], gy[i])
        if omega.hi > neighborhood_hi:
            raise RangeOutsideNeighborhood(
                f"Omega_{i} = ({omega.lo}, {omega.hi}] outside [0, {neighborhood_hi}]"
            )
        pieces = []
        for img in images:
            cap = img.intersect(omega)
            if cap is not None and cap.length > 0:
                pieces.append((cap.lo, cap.hi))
        # merge, the images may overlap each other when |J| spans domains
        pieces.sort()
        total = 0.0
        cur_lo, cur_hi = None, None
        for lo, hi in pieces:
            if cur_lo is None:
                cur_lo, cur_hi = lo, hi
            elif lo <= cur_hi:
                cur_hi = max(cur_hi, hi)
            else:
                total += cur_hi - cur_lo
                cur_lo, cur_hi = lo, hi
        if cur_lo is not None:
            total += cur_hi - cur_lo
        ratios.append(total / omega.length)
        domains.append(omega)

    rho_hat_num = min(ratios)
    rho_hat_den = max(ratios)
    rho_hat = rho_hat_num / rho_hat_den if rho_hat_den > 0 else 1.0

    holder = g.holder or holder_estimate(g, ClosedInterval(0.0, min(1.0, y)))
    rho_bound = math.exp(-holder.C ** 2 / (1.0 - beta ** holder.theta))
    if rho_hat_den > 0 and rho_hat < rho_bound - 1e-9:
        raise PreconditionViolated(
            f"measured distortion {rho_hat} below Holder bound {rho_bound}"
        )
    return ProportionResult(tuple(ratios), rho_hat, rho_bound, tuple(domains))
