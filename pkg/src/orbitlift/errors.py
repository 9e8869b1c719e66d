"""Exception types shared across the package."""


class OrbitLiftError(Exception):
    """Base class for every error raised by this package."""


class NonMonotoneGrid(OrbitLiftError):
    """Grid nodes are not strictly increasing (or there are fewer than two)."""


class LengthMismatch(OrbitLiftError):
    """Value array length does not match the grid."""


class RaggedComponents(OrbitLiftError):
    """Per-node value rows do not all have the same number of components."""


class OrderTooHigh(OrbitLiftError):
    """Difference order requested exceeds what the grid can support."""


class ShapeMismatch(OrbitLiftError):
    """Point shape does not match the representation descriptor."""


class NotAGroup(OrbitLiftError):
    """Matrix list is not closed under products / missing the identity."""


class CsvFormatError(OrbitLiftError):
    """Delimited input does not match the documented column layout."""


class RefinementBudgetExhausted(OrbitLiftError):
    """Branch ambiguity persisted at maximum refinement depth.

    Lift constructors do not raise this themselves; they return a partial
    result with ``budget_exhausted`` set and a diagnostic.  The CLI raises
    it when converting such a result into a nonzero exit status.
    """


class RootSolveFailure(OrbitLiftError):
    """Polynomial root solve did not meet the residual contract."""


class DiscontinuousAtZeroSet(OrbitLiftError):
    """Lift does not tend to zero at the boundary of its domain."""


class NoReconcilingElement(OrbitLiftError):
    """No group element matches two lifts at their junction."""


class AllZeroAtPoint(OrbitLiftError):
    """Every component of the curve vanishes at the requested node."""


class VanishingDominant(OrbitLiftError):
    """The dominant component vanishes somewhere on the interval."""


class ClustersNotSeparated(OrbitLiftError):
    """Requested gap does not split the branches into stable groups."""


class OutOfRange(OrbitLiftError):
    """Query point lies outside the interval (or on the wrong side)."""


class DominantVanishes(OrbitLiftError):
    """The selected component vanishes at the prepared-interval centre."""


class CoverPropertyViolation(OrbitLiftError):
    """A selected cover failed one of its asserted properties."""


class ExponentOutOfRange(OrbitLiftError):
    """Requested integrability exponent is at or above the critical one."""
