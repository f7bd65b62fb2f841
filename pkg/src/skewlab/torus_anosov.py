"""Hyperbolic automorphisms of T^d: exact and floating-point machinery.

The module keeps two arithmetic regimes deliberately separate:

  * Exact rationals (``fractions.Fraction``) for everything whose
    correctness feeds downstream certificates: periodic point enumeration,
    orbit iteration, and periodic shadowing.  Matrices stay as nested
    tuples of Python ints so powers never overflow.
  * Floats for the invariant splitting, heteroclinic intersections, and
    the reported shadowing constants, which are only used as measured
    diagnostics and error bounds.

Norms: rates and shadowing constants are stated in the Euclidean norm of
the adapted eigenbasis and the computed constants are reported alongside
results rather than asserted against any external value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    DeltaTooLarge,
    NoSolutionInBound,
    NotHyperbolic,
    NotUnimodular,
    OverflowBudget,
)

HYPERBOLICITY_TOL = 1e-9
SPLITTING_TOL = 1e-10

IntMatrix = tuple[tuple[int, ...], ...]


# ---------------------------------------------------------------------------
# integer matrix helpers
# ---------------------------------------------------------------------------

def _as_int_matrix(matrix) -> IntMatrix:
    rows = []
    for row in matrix:
        r = []
        for v in row:
            iv = int(v)
            if iv != v:
                raise NotUnimodular(f"matrix entry {v!r} is not an integer")
            r.append(iv)
        rows.append(tuple(r))
    m = tuple(rows)
    d = len(m)
    if d == 0 or any(len(r) != d for r in m):
        raise NotUnimodular("matrix must be square and non-empty")
    return m


def mat_mul(a: IntMatrix, b: IntMatrix) -> IntMatrix:
    d = len(a)
    return tuple(
        tuple(sum(a[i][k] * b[k][j] for k in range(d)) for j in range(d))
        for i in range(d)
    )


def mat_identity(d: int) -> IntMatrix:
    return tuple(tuple(1 if i == j else 0 for j in range(d)) for i in range(d))


def mat_pow(a: IntMatrix, n: int) -> IntMatrix:
    """Exact integer matrix power by squaring, n >= 0."""
    if n < 0:
        raise ValueError("n must be nonnegative; invert first")
    result = mat_identity(len(a))
    base = a
    while n:
        if n & 1:
            result = mat_mul(result, base)
        base = mat_mul(base, base)
        n >>= 1
    return result


def mat_det(a: IntMatrix) -> int:
    """Exact determinant by cofactor expansion (d <= 4 in practice)."""
    d = len(a)
    if d == 1:
        return a[0][0]
    if d == 2:
        return a[0][0] * a[1][1] - a[0][1] * a[1][0]
    total = 0
    for j in range(d):
        minor = tuple(tuple(row[k] for k in range(d) if k != j) for row in a[1:])
        total += (-1) ** j * a[0][j] * mat_det(minor)
    return total


def mat_vec(a: IntMatrix, v: Sequence) -> tuple:
    d = len(a)
    return tuple(sum(a[i][j] * v[j] for j in range(d)) for i in range(d))


def mat_add(a: IntMatrix, b: IntMatrix, sb: int = 1) -> IntMatrix:
    d = len(a)
    return tuple(
        tuple(a[i][j] + sb * b[i][j] for j in range(d)) for i in range(d)
    )


def mat_inverse_unimodular(a: IntMatrix) -> IntMatrix:
    """Inverse of a matrix with det = +-1, exact over the integers."""
    d = len(a)
    det = mat_det(a)
    if det not in (1, -1):
        raise NotUnimodular(f"det = {det}, not invertible over Z")
    cof = []
    for i in range(d):
        row = []
        for j in range(d):
            minor = tuple(
                tuple(a[r][c] for c in range(d) if c != j)
                for r in range(d) if r != i
            )
            row.append((-1) ** (i + j) * (mat_det(minor) if d > 1 else 1))
        cof.append(row)
    # adjugate is the transpose of the cofactor matrix
    return tuple(tuple(det * cof[j][i] for j in range(d)) for i in range(d))


def charpoly_int(a: IntMatrix) -> list[int]:
    """Integer characteristic polynomial coefficients, leading term first.

    Uses Faddeev-LeVerrier over Fractions and casts back to int, so the
    hyperbolicity check is not at the mercy of float eigensolvers.
    """
    d = len(a)
    af = [[Fraction(v) for v in row] for row in a]
    coeffs = [Fraction(1)]
    m = [[Fraction(0)] * d for _ in range(d)]
    for k in range(1, d + 1):
        # M_k = A M_{k-1} + c_{k-1} I
        m = [
            [sum(af[i][t] * m[t][j] for t in range(d)) for j in range(d)]
            for i in range(d)
        ]
        for i in range(d):
            m[i][i] += coeffs[-1]
        am = [
            [sum(af[i][t] * m[t][j] for t in range(d)) for j in range(d)]
            for i in range(d)
        ]
        trace = sum(am[i][i] for i in range(d))
        coeffs.append(-trace / k)
    out = []
    for c in coeffs:
        assert c.denominator == 1
        out.append(int(c))
    return out


# ---------------------------------------------------------------------------
# domain types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HyperbolicSplitting:
    """Invariant splitting data plus the derived shadowing constants.

    ``rate_s`` / ``rate_u`` are the log moduli of the slowest stable and
    weakest unstable eigenvalues, i.e. the contraction and expansion rates
    in the adapted eigenbasis norm.  ``c0``, ``mu0`` and ``delta0`` are the
    reported constants of the exponential shadowing bound
    ``d(shadow_i, x_i) <= c0 * mu0**min(i, n - i) * delta``.
    """

    stable_basis: tuple
    unstable_basis: tuple
    rate_s: float
    rate_u: float
    proj_stable: np.ndarray
    proj_unstable: np.ndarray
    c0: float
    mu0: float
    delta0: float

    @property
    def norm_stable(self) -> float:
        return float(np.linalg.norm(self.proj_stable, 2))

    @property
    def norm_unstable(self) -> float:
        return float(np.linalg.norm(self.proj_unstable, 2))


@dataclass(frozen=True)
class ToralAutomorphism:
    """A hyperbolic integer matrix acting on T^d = R^d / Z^d."""

    matrix: IntMatrix
    dimension: int
    det: int
    splitting: HyperbolicSplitting = field(compare=False, repr=False)

    @property
    def inverse_matrix(self) -> IntMatrix:
        return mat_inverse_unimodular(self.matrix)

    def power_matrix(self, n: int) -> IntMatrix:
        if n >= 0:
            return mat_pow(self.matrix, n)
        return mat_pow(self.inverse_matrix, -n)


@dataclass(frozen=True)
class TorusPoint:
    """A point of T^d, either exact rationals or floats (mode flag).

    Coordinates are always reduced into [0, 1).
    """

    coords: tuple
    exact: bool

    @staticmethod
    def from_rationals(values: Iterable) -> "TorusPoint":
        coords = tuple(Fraction(v) % 1 for v in values)
        return TorusPoint(coords, True)

    @staticmethod
    def from_floats(values: Iterable[float]) -> "TorusPoint":
        coords = tuple(float(v) % 1.0 for v in values)
        return TorusPoint(coords, False)

    def as_floats(self) -> np.ndarray:
        return np.array([float(c) for c in self.coords], dtype=float)

    def max_denominator(self) -> int:
        if not self.exact:
            raise ValueError("numeric-mode point has no denominators")
        return max(c.denominator for c in self.coords)

    def rationalized(self, max_denominator: int = 2 ** 40) -> "TorusPoint":
        """Nearest exact point with denominators bounded by ``max_denominator``."""
        if self.exact:
            return self
        coords = tuple(
            Fraction(round(float(c) * max_denominator), max_denominator) % 1
            for c in self.coords
        )
        return TorusPoint(coords, True)


@dataclass(frozen=True)
class PeriodicOrbit:
    """Exact periodic orbit of the base map with cached orbit points."""

    base: TorusPoint
    period: int
    points: tuple

    def exponent_ready_points(self) -> list[np.ndarray]:
        return [p.as_floats() for p in self.points]


@dataclass(frozen=True)
class PseudoOrbit:
    """Sequence of points with per-step jump vectors.

    ``jumps[i]`` is the centered representative of
    ``lift(points[i+1]) - A lift(points[i])``; for a periodic pseudo-orbit
    the wrap jump is included as the final entry.
    """

    points: tuple
    jumps: tuple
    periodic: bool
    delta: float


@dataclass(frozen=True)
class HeteroclinicPoint:
    """Intersection of an unstable leaf with a (translated) stable leaf."""

    point: TorusPoint
    lift: tuple
    unstable_offset: float
    stable_offset: float
    translate: tuple
    residual: float


@dataclass(frozen=True)
class ShadowResult:
    orbit: tuple
    max_error: float
    c0: float
    mu0: float


# ---------------------------------------------------------------------------
# validation and splitting
# ---------------------------------------------------------------------------

def validate_automorphism(matrix) -> ToralAutomorphism:
    """Check unimodularity and hyperbolicity; compute the splitting.

    Raises:
        NotUnimodular: if |det| != 1.
        NotHyperbolic: if some eigenvalue modulus is within 1e-9 of 1.
    """
    m = _as_int_matrix(matrix)
    d = len(m)
    det = mat_det(m)
    if det not in (1, -1):
        raise NotUnimodular(f"|det| = {abs(det)}, need 1")

    coeffs = charpoly_int(m)
    roots = np.roots([float(c) for c in coeffs])
    for lam in roots:
        if abs(abs(lam) - 1.0) < HYPERBOLICITY_TOL:
            raise NotHyperbolic(
                f"eigenvalue {lam} has modulus within {HYPERBOLICITY_TOL} of 1"
            )

    splitting = _compute_splitting(m, roots)
    return ToralAutomorphism(m, d, det, splitting)


def _compute_splitting(m: IntMatrix, roots: np.ndarray) -> HyperbolicSplitting:
    d = len(m)
    a_float = np.array(m, dtype=float)
    w, v = np.linalg.eig(a_float)

    stable_cols, unstable_cols = [], []
    seen_conjugate = set()
    for idx in range(d):
        lam = w[idx]
        target = stable_cols if abs(lam) < 1.0 else unstable_cols
        if abs(lam.imag) < 1e-12:
            target.append(np.real(v[:, idx]))
        else:
            key = (round(lam.real, 12), round(abs(lam.imag), 12))
            if key in seen_conjugate:
                continue
            seen_conjugate.add(key)
            target.append(np.real(v[:, idx]))
            target.append(np.imag(v[:, idx]))

    def unit(vec):
        return vec / np.linalg.norm(vec)

    stable_basis = tuple(unit(c) for c in stable_cols)
    unstable_basis = tuple(unit(c) for c in unstable_cols)

    rate_s = math.log(max(abs(lam) for lam in w if abs(lam) < 1.0))
    rate_u = math.log(min(abs(lam) for lam in w if abs(lam) > 1.0))

    basis = np.column_stack(list(stable_basis) + list(unstable_basis))
    basis_inv = np.linalg.inv(basis)
    ns = len(stable_basis)
    proj_s = basis[:, :ns] @ basis_inv[:ns, :]
    proj_u = basis[:, ns:] @ basis_inv[ns:, :]

    mu_s = math.exp(rate_s)
    mu_u_inv = math.exp(-rate_u)
    mu0 = max(mu_s, mu_u_inv)
    norm_ps = float(np.linalg.norm(proj_s, 2))
    norm_pu = float(np.linalg.norm(proj_u, 2))
    c0 = norm_ps / (1.0 - mu_s) + norm_pu / (1.0 - mu_u_inv)
    delta0 = 0.25 / c0

    for vec in stable_basis:
        img = a_float @ vec
        if np.linalg.norm(img - proj_s @ img) > SPLITTING_TOL:
            raise NotHyperbolic("stable subspace not invariant within tolerance")
    for vec in unstable_basis:
        img = a_float @ vec
        if np.linalg.norm(img - proj_u @ img) > SPLITTING_TOL:
            raise NotHyperbolic("unstable subspace not invariant within tolerance")

    return HyperbolicSplitting(
        stable_basis=stable_basis,
        unstable_basis=unstable_basis,
        rate_s=rate_s,
        rate_u=rate_u,
        proj_stable=proj_s,
        proj_unstable=proj_u,
        c0=c0,
        mu0=mu0,
        delta0=delta0,
    )


# ---------------------------------------------------------------------------
# iteration
# ---------------------------------------------------------------------------

def iterate(auto: ToralAutomorphism, x: TorusPoint, n: int) -> TorusPoint:
    """Apply A^n to x on the torus; exact mode stays exact for any n."""
    m = auto.power_matrix(n)
    if x.exact:
        coords = tuple(c % 1 for c in mat_vec(m, x.coords))
        return TorusPoint(coords, True)
    coords = tuple(float(c) % 1.0 for c in mat_vec(m, tuple(x.coords)))
    return TorusPoint(coords, False)


def orbit_points(auto: ToralAutomorphism, x: TorusPoint, n: int) -> list[TorusPoint]:
    """Forward orbit [x, Ax, ..., A^(n-1) x], one multiplication per step."""
    pts = [x]
    for _ in range(n - 1):
        pts.append(iterate(auto, pts[-1], 1))
    return pts


def iterate_with_lift(auto: ToralAutomorphism, x: TorusPoint, n: int):
    """Like :func:`iterate` but also returns the unreduced lift A^n x."""
    m = auto.power_matrix(n)
    lift = mat_vec(m, x.coords)
    if x.exact:
        return TorusPoint(tuple(c % 1 for c in lift), True), lift
    return TorusPoint(tuple(float(c) % 1.0 for c in lift), False), lift


# ---------------------------------------------------------------------------
# periodic points via integer normal form
# ---------------------------------------------------------------------------

def _diagonalize_unimodular(m: IntMatrix):
    """Reduce m to diagonal form D = U m V by unimodular row/col operations.

    Only V (the accumulated column operations) is tracked; it is what the
    congruence solver needs.  The diagonal need not satisfy the divisibility
    chain of the full Smith form, which the enumeration does not require.
    """
    d = len(m)
    work = [list(row) for row in m]
    vmat = [[1 if i == j else 0 for j in range(d)] for i in range(d)]

    def swap_rows(i, j):
        work[i], work[j] = work[j], work[i]

    def swap_cols(i, j):
        for row in work:
            row[i], row[j] = row[j], row[i]
        for row in vmat:
            row[i], row[j] = row[j], row[i]

    def add_row(dst, src, k):
        work[dst] = [a + k * b for a, b in zip(work[dst], work[src])]

    def add_col(dst, src, k):
        for row in work:
            row[dst] += k * row[src]
        for row in vmat:
            row[dst] += k * row[src]

    for t in range(d):
        while True:
            # locate the smallest nonzero entry of the trailing block
            pivot = None
            best = None
            for i in range(t, d):
                for j in range(t, d):
                    v = work[i][j]
                    if v != 0 and (best is None or abs(v) < best):
                        best = abs(v)
                        pivot = (i, j)
            if pivot is None:
                break
            pi, pj = pivot
            if pi != t:
                swap_rows(pi, t)
            if pj != t:
                swap_cols(pj, t)
            p = work[t][t]
            done = True
            for i in range(t + 1, d):
                if work[i][t] != 0:
                    add_row(i, t, -(work[i][t] // p))
                    if work[i][t] != 0:
                        done = False
            for j in range(t + 1, d):
                if work[t][j] != 0:
                    add_col(j, t, -(work[t][j] // p))
                    if work[t][j] != 0:
                        done = False
            if done:
                break

    diag = [work[i][i] for i in range(d)]
    return diag, tuple(tuple(row) for row in vmat)


def periodic_points(
    auto: ToralAutomorphism,
    n: int,
    enumeration_cap: int = 200_000,
) -> list[PeriodicOrbit]:
    """All orbits of points with A^n x = x (mod Z^d), exact rationals.

    Solves (A^n - I) x = 0 (mod Z^d) through a unimodular diagonalization,
    so exactly |det(A^n - I)| points come out.  Points are grouped into
    orbits whose minimal periods divide n; the list is sorted by (period,
    lexicographic representative).

    Raises:
        OverflowBudget: if |det(A^n - I)| exceeds ``enumeration_cap``.
    """
    if n <= 0:
        raise ValueError("n must be positive")
    m = mat_add(auto.power_matrix(n), mat_identity(auto.dimension), sb=-1)
    count = abs(mat_det(m))
    if count == 0:
        raise NotHyperbolic("A^n - I singular; base map not hyperbolic")
    if count > enumeration_cap:
        raise OverflowBudget(
            f"|det(A^n - I)| = {count} exceeds cap {enumeration_cap}"
        )

    diag, vmat = _diagonalize_unimodular(m)
    moduli = [abs(v) for v in diag]
    assert math.prod(moduli) == count

    points: list[tuple] = []
    idx = [0] * len(moduli)
    while True:
        y = [Fraction(idx[i], moduli[i]) for i in range(len(moduli))]
        x = tuple(c % 1 for c in mat_vec(vmat, y))
        points.append(x)
        # odometer increment
        for i in range(len(moduli)):
            idx[i] += 1
            if idx[i] < moduli[i]:
                break
            idx[i] = 0
        else:
            break

    unique = set(points)
    assert len(unique) == count, "normal-form enumeration produced duplicates"

    orbits = []
    seen: set = set()
    for coords in sorted(unique):
        if coords in seen:
            continue
        orbit = [coords]
        seen.add(coords)
        current = coords
        while True:
            current = tuple(c % 1 for c in mat_vec(auto.matrix, current))
            if current == coords:
                break
            orbit.append(current)
            seen.add(current)
        period = len(orbit)
        assert n % period == 0, "orbit period does not divide n"
        rep = min(orbit)
        start = orbit.index(rep)
        ordered = orbit[start:] + orbit[:start]
        orbits.append(
            PeriodicOrbit(
                base=TorusPoint(rep, True),
                period=period,
                points=tuple(TorusPoint(p, True) for p in ordered),
            )
        )
    orbits.sort(key=lambda o: (o.period, o.base.coords))
    return orbits


# ---------------------------------------------------------------------------
# heteroclinic intersections
# ---------------------------------------------------------------------------

def heteroclinic_point(
    auto: ToralAutomorphism,
    p: PeriodicOrbit | TorusPoint,
    q: PeriodicOrbit | TorusPoint,
    norm_bound: float = 3.0,
    exclude_trivial: bool = False,
) -> HeteroclinicPoint:
    """A point of F^u(p) meeting F^s(q) on the torus.

    Solves p + B_u a = q + m + B_s b over integer translates m with
    ||m||_inf <= norm_bound, where B_u, B_s are the unit eigenbases.  Among
    all translates the minimal-lift-norm solution wins, ties broken by the
    lexicographically smallest lift.

    Raises:
        NoSolutionInBound: nothing found within the bound (after exclusions).
    """
    sp = auto.splitting
    p_pt = p.base if isinstance(p, PeriodicOrbit) else p
    q_pt = q.base if isinstance(q, PeriodicOrbit) else q
    pv = p_pt.as_floats()
    qv = q_pt.as_floats()

    bu = np.column_stack(list(sp.unstable_basis))
    bs = np.column_stack(list(sp.stable_basis))
    if bu.shape[1] + bs.shape[1] != auto.dimension:
        raise NoSolutionInBound("splitting subspaces are not complementary")
    system = np.column_stack([bu, -bs])

    bound = int(math.floor(norm_bound + 1e-12))
    candidates = []
    ranges = [range(-bound, bound + 1)] * auto.dimension
    for m in np.stack(np.meshgrid(*ranges, indexing="ij"), axis=-1).reshape(-1, auto.dimension):
        rhs = qv + m - pv
        try:
            coeff = np.linalg.solve(system, rhs)
        except np.linalg.LinAlgError:
            continue
        nu = bu.shape[1]
        a, b = coeff[:nu], coeff[nu:]
        if exclude_trivial and max(np.max(np.abs(a)), np.max(np.abs(b))) < 1e-12:
            continue
        lift = pv + bu @ a
        candidates.append((float(np.linalg.norm(lift)), tuple(lift), tuple(int(v) for v in m), a, b))

    if not candidates:
        raise NoSolutionInBound(f"no intersection with ||m||_inf <= {bound}")

    candidates.sort(key=lambda c: (c[0], c[1]))
    norm, lift, m, a, b = candidates[0]

    lift_arr = np.array(lift)
    res_u = np.linalg.norm((lift_arr - pv) - sp.proj_unstable @ (lift_arr - pv))
    to_q = lift_arr - qv - np.array(m, dtype=float)
    res_s = np.linalg.norm(to_q - sp.proj_stable @ to_q)
    residual = float(max(res_u, res_s))
    assert residual <= 1e-10, f"intersection residual {residual} too large"

    u_off = float(a[0]) if len(a) == 1 else float(np.linalg.norm(a))
    s_off = float(b[0]) if len(b) == 1 else float(np.linalg.norm(b))
    return HeteroclinicPoint(
        point=TorusPoint.from_floats(lift),
        lift=lift,
        unstable_offset=u_off,
        stable_offset=s_off,
        translate=m,
        residual=residual,
    )


# ---------------------------------------------------------------------------
# shadowing
# ---------------------------------------------------------------------------

def _centered_mod1(v):
    """Reduce each component into [-1/2, 1/2), exact for Fractions."""
    out = []
    for c in v:
        if isinstance(c, Fraction):
            r = c % 1
            if r >= Fraction(1, 2):
                r -= 1
            out.append(r)
        else:
            r = float(c) % 1.0
            if r >= 0.5:
                r -= 1.0
            out.append(r)
    return tuple(out)


def make_pseudo_orbit(
    auto: ToralAutomorphism, points: Sequence[TorusPoint], periodic: bool
) -> PseudoOrbit:
    """Package points into a pseudo-orbit, computing centered jumps."""
    n = len(points)
    jumps = []
    last = n if periodic else n - 1
    for i in range(last):
        nxt = points[(i + 1) % n]
        img = mat_vec(auto.matrix, points[i].coords)
        jumps.append(_centered_mod1(tuple(a - b for a, b in zip(nxt.coords, img))))
    delta = max((max(abs(float(c)) for c in j) for j in jumps), default=0.0)
    return PseudoOrbit(tuple(points), tuple(jumps), periodic, delta)


def shadow_pseudo_orbit(auto: ToralAutomorphism, po: PseudoOrbit) -> ShadowResult:
    """Replace a pseudo-orbit by the genuine orbit it shadows.

    For a linear base the correction sequence solves
    ``delta_{i+1} = A delta_i - e_i`` exactly.  Periodic pseudo-orbits give
    a periodic shadow through the invertible (I - A^n) system, carried out
    in exact rational arithmetic whenever the input points are exact.
    Finite pseudo-orbits use stable components summed forward and unstable
    components backward (float path).

    Raises:
        DeltaTooLarge: if the declared jump size reaches delta0.
    """
    sp = auto.splitting
    if po.delta >= sp.delta0:
        raise DeltaTooLarge(f"delta = {po.delta} >= delta0 = {sp.delta0}")

    n = len(po.points)
    d = auto.dimension

    if po.periodic:
        exact = all(p.exact for p in po.points)
        if exact:
            zero = Fraction(0)
            jumps = po.jumps
        else:
            zero = 0.0
            jumps = tuple(tuple(float(c) for c in j) for j in po.jumps)

        # rhs = sum_j A^(n-1-j) e_j by Horner
        acc = list(jumps[0])
        for j in range(1, n):
            acc = [sum(auto.matrix[i][k] * acc[k] for k in range(d)) + jumps[j][i]
                   for i in range(d)]
        # (I - A^n) delta_0 = -rhs, solved by exact Gaussian elimination
        an = auto.power_matrix(n)
        system = [
            [
                (Fraction(1 if i == j else 0) if exact else float(i == j))
                - (Fraction(an[i][j]) if exact else float(an[i][j]))
                for j in range(d)
            ]
            for i in range(d)
        ]
        rhs = [-(a if exact else float(a)) for a in acc]
        delta0_vec = _solve_linear(system, rhs)

        deltas = [tuple(delta0_vec)]
        for i in range(n - 1):
            nxt = [
                sum(auto.matrix[r][k] * deltas[-1][k] for k in range(d)) - jumps[i][r]
                for r in range(d)
            ]
            deltas.append(tuple(nxt))
        # closure check: A delta_{n-1} - e_{n-1} = delta_0
        closure = [
            sum(auto.matrix[r][k] * deltas[-1][k] for k in range(d)) - jumps[n - 1][r]
            for r in range(d)
        ]
        for a, b in zip(closure, delta0_vec):
            if exact:
                assert a == b
            else:
                assert abs(a - b) < 1e-9

        shadow = []
        max_err = 0.0
        for pt, dv in zip(po.points, deltas):
            coords = tuple((c + v) % 1 for c, v in zip(pt.coords, dv))
            shadow.append(TorusPoint(coords, exact))
            max_err = max(max_err, max(abs(float(v)) for v in dv))
        return ShadowResult(tuple(shadow), max_err, sp.c0, sp.mu0)

    # finite segment, float path
    pts = [p.as_floats() for p in po.points]
    jumps = [np.array([float(c) for c in j]) for j in po.jumps]
    deltas = [np.zeros(d) for _ in range(n)]
    a_float = np.array(auto.matrix, dtype=float)
    # stable part forward from zero initial correction
    s_part = [np.zeros(d)]
    for i in range(n - 1):
        s_part.append(a_float @ s_part[-1] - sp.proj_stable @ jumps[i])
    # unstable part backward from zero terminal correction
    a_inv = np.linalg.inv(a_float)
    u_part = [np.zeros(d) for _ in range(n)]
    for i in range(n - 2, -1, -1):
        u_part[i] = a_inv @ (u_part[i + 1] + sp.proj_unstable @ jumps[i])
    max_err = 0.0
    shadow = []
    for i in range(n):
        deltas[i] = sp.proj_stable @ s_part[i] + sp.proj_unstable @ u_part[i]
        coords = pts[i] + deltas[i]
        shadow.append(TorusPoint.from_floats(coords))
        max_err = max(max_err, float(np.max(np.abs(deltas[i]))))
    return ShadowResult(tuple(shadow), max_err, sp.c0, sp.mu0)


def _solve_linear(system, rhs):
    """Gaussian elimination preserving the scalar type (Fraction or float)."""
    d = len(rhs)
    m = [list(row) + [rhs[i]] for i, row in enumerate(system)]
    for col in range(d):
        piv = max(range(col, d), key=lambda r: abs(m[r][col]))
        if m[piv][col] == 0:
            raise ZeroDivisionError("singular shadowing system")
        m[col], m[piv] = m[piv], m[col]
        inv = m[col][col]
        for r in range(d):
            if r == col:
                continue
            factor = m[r][col] / inv
            if factor:
                m[r] = [a - factor * b for a, b in zip(m[r], m[col])]
    return [m[i][d] / m[i][i] for i in range(d)]


def orbit_from_points(auto: ToralAutomorphism, points: Sequence[TorusPoint]) -> PeriodicOrbit:
    """Promote an exactly periodic point sequence to a PeriodicOrbit.

    Verifies A p_i = p_{i+1} exactly, determines the minimal period among
    divisors of the length, and rotates so the representative is smallest.
    """
    n = len(points)
    coords = [p.coords for p in points]
    for i in range(n):
        img = tuple(c % 1 for c in mat_vec(auto.matrix, coords[i]))
        assert img == coords[(i + 1) % n], "sequence is not an exact orbit"
    period = n
    for div in sorted(_divisors(n)):
        if div < n and coords[div] == coords[0] and coords[:n - div] == coords[div:]:
            period = div
            break
    cycle = coords[:period]
    rep = min(cycle)
    start = cycle.index(rep)
    ordered = cycle[start:] + cycle[:start]
    return PeriodicOrbit(
        base=TorusPoint(rep, True),
        period=period,
        points=tuple(TorusPoint(c, True) for c in ordered),
    )


def _divisors(n: int) -> list[int]:
    out = []
    for k in range(1, int(math.isqrt(n)) + 1):
        if n % k == 0:
            out.append(k)
            out.append(n // k)
    return sorted(set(out))
