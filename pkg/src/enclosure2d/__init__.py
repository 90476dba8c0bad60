"""Probing a 2D conductivity inclusion from one boundary measurement.

The package is organized as a small numpy/scipy library:

* :mod:`enclosure2d.geometry`   — convex-polygon support machinery
* :mod:`enclosure2d.mesh`       — interface-fitted graded triangulation
* :mod:`enclosure2d.forward`    — transmission forward solver and Cauchy data
* :mod:`enclosure2d.probes`     — exponential probes and indicator integrals
* :mod:`enclosure2d.spectrum`   — corner exponents and decay-rate fitting
* :mod:`enclosure2d.reconstruct`— support estimation and hull assembly
* :mod:`enclosure2d.cli`        — command-line harness over the above
"""

from . import errors
from .geometry import (
    Direction,
    Polygon,
    SupportSample,
    VertexFrame,
    hausdorff_distance,
    hull_from_support,
    is_regular,
    regular_polygon,
    support_function,
    vertex_frame,
)

__version__ = "0.1.0"
