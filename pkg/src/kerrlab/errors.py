"""Exception types raised across the package.

Precondition violations and failed certifications get distinct types so
that callers (and the CLI exit-code logic) can tell configuration errors
apart from genuine check failures.
"""


class KerrLabError(Exception):
    """Base class for all package errors."""


# -- parameter / input validation ------------------------------------------

class ExtremalOrSuper(KerrLabError):
    """Spin |a| >= m: outside the subextremal family."""


class NonpositiveMass(KerrLabError):
    """Mass must be strictly positive."""


class ChartMismatch(KerrLabError):
    """Coordinate point handed to a metric routine for a different chart."""


class HorizonSingular(KerrLabError):
    """Boyer-Lindquist data requested at or inside the horizon."""


class BelowHorizon(KerrLabError):
    """Tortoise coordinate requested at r <= r_plus."""


class InadmissibleFrequency(KerrLabError):
    """Frequency triplet violates the angular-admissibility bound."""


class CFLViolation(KerrLabError):
    """Time step too large for the spatial grid."""


# -- certification failures -------------------------------------------------

class BlendInfeasible(KerrLabError):
    """Blend of the coordinate modifier slopes violates the spacelike window."""


class ClassificationAmbiguous(KerrLabError):
    """Sign pattern of the potential's scaled second derivative is impossible.

    This signals a bug (or catastrophic rounding), never a bad input.
    """


class CoverGap(KerrLabError):
    """A frequency triplet is not interior to any regime."""


class ConstantSearchFailed(KerrLabError):
    """No constant assignment on the search lattice certifies."""


class PositivityFailure(KerrLabError):
    """Bulk current fails its lower bound at some grid point."""


class BoundarySignFailure(KerrLabError):
    """Boundary flux symbol fails its sign/cancellation requirement."""


class StiffFailure(KerrLabError):
    """Frequency-domain integration could not reach the flux tolerance."""
