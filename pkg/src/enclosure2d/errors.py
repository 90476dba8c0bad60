"""Exception hierarchy shared across the package.

Every error raised on a documented failure path derives from
:class:`Enclosure2dError` so callers (and the CLI) can map failures to
exit codes without string matching.
"""


class Enclosure2dError(Exception):
    """Base class for all package errors."""


class GeometryError(Enclosure2dError):
    """Invalid or degenerate geometry (bad polygon, inclusion touching the boundary, bad radii)."""


class RegularityError(GeometryError):
    """A direction is not regular: its supporting line meets the polygon along an edge."""


class CoverageError(Enclosure2dError):
    """Too few usable directions / half-planes to bound a region."""


class InconsistencyError(Enclosure2dError):
    """Half-plane constraints have empty intersection."""


class DataError(Enclosure2dError):
    """Input data violates a contract (non-compatible current, empty Cauchy data, bad file)."""


class NumericError(Enclosure2dError):
    """A numeric procedure failed to converge to its documented tolerance."""


class MeshError(Enclosure2dError):
    """Mesh does not satisfy a structural requirement (e.g. interface not resolved)."""


class ProbeOverflowError(Enclosure2dError):
    """Probe exponent out of double-precision range; shift t before evaluating."""


class WindowError(Enclosure2dError):
    """Too few usable samples to fit a decay window."""


class SignalError(Enclosure2dError):
    """All indicator samples sit below the noise floor; direction is indeterminate."""
