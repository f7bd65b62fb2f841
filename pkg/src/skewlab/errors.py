"""Exception types shared across the laboratory.

Every failure mode of a public operation maps to one of these classes so
callers (and the CLI) can react to the precise condition instead of
pattern-matching message strings.
"""

from __future__ import annotations


class SkewlabError(Exception):
    """Base class for all library errors."""


# --- torus / base-map errors -------------------------------------------------

class NotUnimodular(SkewlabError):
    """Integer matrix has |det| != 1 and is not invertible over Z."""


class NotHyperbolic(SkewlabError):
    """Some eigenvalue modulus is within tolerance of 1."""


class OverflowBudget(SkewlabError):
    """Periodic point enumeration would exceed the configured cap."""


class NoSolutionInBound(SkewlabError):
    """No lattice translate within the norm bound yields an intersection."""


class DeltaTooLarge(SkewlabError):
    """Pseudo-orbit jump size is at or above the shadowing threshold."""


# --- one-dimensional fiber errors --------------------------------------------

class NotContracting(SkewlabError):
    """Interval map has derivative >= 1 at the origin."""


class RootFindFail(SkewlabError):
    """No sign change brackets a fixed point (degenerate input)."""


class ThresholdNotMet(SkewlabError):
    """Target interval is too short for the intersection engine."""


class BudgetExhausted(SkewlabError):
    """Search ended with fewer certificate pairs than requested.

    Carries the partial certificate in ``partial``.
    """

    def __init__(self, message: str, partial=None):
        super().__init__(message)
        self.partial = partial


class RangeOutsideNeighborhood(SkewlabError):
    """Requested fundamental domains fall outside the analyzed neighborhood."""


class PreconditionViolated(SkewlabError):
    """A documented operation precondition does not hold."""


# --- skew-product errors ------------------------------------------------------

class DominationViolated(SkewlabError):
    """Fiber derivative leaves the window between the base rates.

    ``point`` holds the offending (x, t) sample when available.
    """

    def __init__(self, message: str, point=None):
        super().__init__(message)
        self.point = point


class InconclusiveSign(SkewlabError):
    """Quadrature value is smaller than its error estimate."""


class NotSameLeaf(SkewlabError):
    """Holonomy endpoints do not lie on a common unstable leaf."""


class NoConvergence(SkewlabError):
    """Truncation did not reach the requested Cauchy tolerance."""


class DegenerateGeometry(SkewlabError):
    """Twist distances underflow before a rate fit is possible."""


# --- experiment errors ----------------------------------------------------------

class NotMostlyContracting(SkewlabError):
    """Boundary quadrature is not conclusively negative."""


class HypothesisUnmet(SkewlabError):
    """All periodic sums share one sign; density rigidity does not apply."""


class CandidateExhausted(SkewlabError):
    """No periodic orbit in the pool satisfies the dyadic window.

    ``achieved_m`` reports the last stage that succeeded; ``report`` holds
    the partial output.
    """

    def __init__(self, message: str, achieved_m: int = 0, report=None):
        super().__init__(message)
        self.achieved_m = achieved_m
        self.report = report


class NoPlissTime(SkewlabError):
    """Internal failure: no rotation gives uniformly good partial averages."""


class IntervalsNotSeparated(SkewlabError):
    """The fiber orbits of the two intervals overlap in the tested range."""


# --- configuration ----------------------------------------------------------------

class ConfigInvalid(SkewlabError):
    """Run configuration failed validation; message carries the field path."""
