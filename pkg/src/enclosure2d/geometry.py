"""Convex-polygon primitives: support functions, direction regularity,
vertex frames, hull assembly from support samples, and set distances.

Conventions fixed here and relied on everywhere else:

* polygons are stored counter-clockwise (positive signed area);
* for a direction ``omega = (cos phi, sin phi)`` the perpendicular is the
  *clockwise* rotation ``omega_perp = (sin phi, -cos phi)``, so the column
  determinant ``det(omega, omega_perp) = -1`` is strictly negative;
* outward edge normals are the clockwise rotation of edge tangents.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .errors import CoverageError, GeometryError, InconsistencyError, RegularityError

__all__ = [
    "Direction",
    "Polygon",
    "SupportSample",
    "VertexFrame",
    "support_function",
    "support_vertex",
    "is_regular",
    "regularity_margin",
    "vertex_frame",
    "hull_from_support",
    "hausdorff_distance",
]

#: default regularity tolerance, relative to the polygon diameter
DEFAULT_ANGLE_TOL = 1e-9


@dataclass(frozen=True)
class Direction:
    """Unit direction given by its angle; carries the perpendicular frame.

    ``omega_perp`` is always the clockwise rotation of ``omega`` so that the
    2x2 column matrix ``(omega omega_perp)`` has determinant -1.  The type has
    no way to represent the conjugate frame (det +1): constructing a Direction
    from any angle yields det -1 by construction.
    """

    phi: float

    def __post_init__(self):
        if not math.isfinite(self.phi):
            raise GeometryError(f"direction angle must be finite, got {self.phi!r}")

    @property
    def omega(self) -> np.ndarray:
        return np.array([math.cos(self.phi), math.sin(self.phi)])

    @property
    def omega_perp(self) -> np.ndarray:
        return np.array([math.sin(self.phi), -math.cos(self.phi)])

    @property
    def frame_det(self) -> float:
        """det of the column pair (omega, omega_perp); identically -1."""
        w, wp = self.omega, self.omega_perp
        return float(w[0] * wp[1] - w[1] * wp[0])


@dataclass(frozen=True)
class SupportSample:
    """One support-function sample: direction and measured/exact value h."""

    direction: Direction
    h: float

    def __post_init__(self):
        if not math.isfinite(self.h):
            raise GeometryError(f"support value must be finite, got {self.h!r}")


def _as_vertex_array(vertices) -> np.ndarray:
    v = np.asarray(vertices, dtype=float)
    if v.ndim != 2 or v.shape[1] != 2:
        raise GeometryError(f"vertices must be an (n, 2) array, got shape {v.shape}")
    return v


def _segments_properly_intersect(p1, p2, q1, q2) -> bool:
    """True if open segments (p1,p2) and (q1,q2) cross at an interior point."""
    d1 = np.cross(p2 - p1, q1 - p1)
    d2 = np.cross(p2 - p1, q2 - p1)
    d3 = np.cross(q2 - q1, p1 - q1)
    d4 = np.cross(q2 - q1, p2 - q1)
    return bool((d1 * d2 < 0) and (d3 * d4 < 0))


@dataclass(frozen=True)
class Polygon:
    """Simple planar polygon with counter-clockwise vertex order.

    Raises :class:`GeometryError` on construction if the vertex loop has
    fewer than 3 points, repeats a point, self-intersects, or is ordered
    clockwise.  Convexity is *not* required here; inclusion-side code that
    needs it calls :meth:`require_convex`.
    """

    vertices: np.ndarray

    def __init__(self, vertices):
        v = _as_vertex_array(vertices)
        if len(v) < 3:
            raise GeometryError(f"polygon needs >= 3 vertices, got {len(v)}")
        if not np.all(np.isfinite(v)):
            raise GeometryError("polygon vertices must be finite")
        scale = float(np.max(np.abs(v))) or 1.0
        d = np.linalg.norm(np.roll(v, -1, axis=0) - v, axis=1)
        if np.any(d <= 1e-14 * scale):
            raise GeometryError("polygon repeats a vertex")
        area2 = float(np.sum(v[:, 0] * np.roll(v[:, 1], -1) - np.roll(v[:, 0], -1) * v[:, 1]))
        if area2 <= 0.0:
            raise GeometryError("polygon must be counter-clockwise with positive area")
        n = len(v)
        for i in range(n):
            p1, p2 = v[i], v[(i + 1) % n]
            for j in range(i + 1, n):
                if j == i or (j + 1) % n == i or (i + 1) % n == j:
                    continue
                if _segments_properly_intersect(p1, p2, v[j], v[(j + 1) % n]):
                    raise GeometryError("polygon is self-intersecting")
        object.__setattr__(self, "vertices", v)
        v.setflags(write=False)

    def __len__(self) -> int:
        return len(self.vertices)

    @property
    def area(self) -> float:
        v = self.vertices
        return 0.5 * float(np.sum(v[:, 0] * np.roll(v[:, 1], -1) - np.roll(v[:, 0], -1) * v[:, 1]))

    @property
    def centroid(self) -> np.ndarray:
        v = self.vertices
        x, y = v[:, 0], v[:, 1]
        xn, yn = np.roll(x, -1), np.roll(y, -1)
        cross = x * yn - xn * y
        a = 0.5 * np.sum(cross)
        cx = np.sum((x + xn) * cross) / (6.0 * a)
        cy = np.sum((y + yn) * cross) / (6.0 * a)
        return np.array([cx, cy])

    @property
    def diameter(self) -> float:
        v = self.vertices
        diff = v[:, None, :] - v[None, :, :]
        return float(np.sqrt((diff**2).sum(-1)).max())

    def edges(self) -> np.ndarray:
        """(n, 2, 2) array of [start, end] vertex pairs, counter-clockwise."""
        v = self.vertices
        return np.stack([v, np.roll(v, -1, axis=0)], axis=1)

    def edge_normals(self) -> np.ndarray:
        """Outward unit normals, one per edge (clockwise rotation of tangents)."""
        v = self.vertices
        t = np.roll(v, -1, axis=0) - v
        t /= np.linalg.norm(t, axis=1)[:, None]
        return np.stack([t[:, 1], -t[:, 0]], axis=1)

    @property
    def is_convex(self) -> bool:
        """Strict convexity: every consecutive-edge cross product positive."""
        v = self.vertices
        e = np.roll(v, -1, axis=0) - v
        cross = e[:, 0] * np.roll(e, -1, axis=0)[:, 1] - e[:, 1] * np.roll(e, -1, axis=0)[:, 0]
        return bool(np.all(cross > 1e-14 * self.diameter**2))

    def require_convex(self) -> "Polygon":
        if not self.is_convex:
            raise GeometryError("polygon must be strictly convex")
        return self

    def contains_point(self, pt, tol: float = 0.0) -> bool:
        """Point-in-region test (boundary counts as inside up to tol)."""
        return signed_boundary_distance(self, pt) <= tol

    def translated(self, shift) -> "Polygon":
        return Polygon(self.vertices + np.asarray(shift, dtype=float))

    def scaled(self, factor: float, center=(0.0, 0.0)) -> "Polygon":
        c = np.asarray(center, dtype=float)
        return Polygon(c + factor * (self.vertices - c))


def regular_polygon(n: int, circumradius: float, center=(0.0, 0.0), phase: float = 0.0) -> Polygon:
    """Regular n-gon, counter-clockwise, first vertex at angle ``phase``."""
    if n < 3 or circumradius <= 0:
        raise GeometryError("regular polygon needs n >= 3 and circumradius > 0")
    ang = phase + 2.0 * np.pi * np.arange(n) / n
    c = np.asarray(center, dtype=float)
    return Polygon(c + circumradius * np.stack([np.cos(ang), np.sin(ang)], axis=1))


def support_function(polygon: Polygon, direction: Direction) -> float:
    """sup over the polygon of x . omega — exact: the max over vertices."""
    return float(np.max(polygon.vertices @ direction.omega))


def support_vertex(polygon: Polygon, direction: Direction) -> int:
    """Index of a vertex attaining the support value."""
    return int(np.argmax(polygon.vertices @ direction.omega))


def regularity_margin(polygon: Polygon, direction: Direction) -> float:
    """Gap between the best and second-best vertex projection, relative to diameter.

    Zero exactly when an edge is perpendicular to the direction; the larger
    the margin, the more robustly regular the direction is.
    """
    proj = np.sort(polygon.vertices @ direction.omega)
    return float((proj[-1] - proj[-2]) / polygon.diameter)


def is_regular(polygon: Polygon, direction: Direction, angle_tol: float = DEFAULT_ANGLE_TOL) -> bool:
    """True iff exactly one vertex attains the support value within tolerance.

    The attainment test is ``h - x . omega <= angle_tol * diameter``; an edge
    perpendicular to ``omega`` makes two vertices attain and returns False.
    """
    polygon.require_convex()
    proj = polygon.vertices @ direction.omega
    h = float(np.max(proj))
    return int(np.sum(h - proj <= angle_tol * polygon.diameter)) == 1


@dataclass(frozen=True)
class VertexFrame:
    """Local frame at the support vertex of a regular direction.

    ``p`` and ``q`` are the angles of the two incident edge directions in the
    (omega_perp, omega) frame, with -pi < q < p < 0; ``theta`` is the outside
    angle at the vertex, and ``p + theta = 2*pi + q`` holds by construction.
    ``a`` points along the edge with angle ``p``; ``a_perp`` completes a
    positively oriented frame.
    """

    x0: np.ndarray
    theta: float
    p: float
    q: float
    a: np.ndarray = field(repr=False)
    a_perp: np.ndarray = field(repr=False)


def vertex_frame(polygon: Polygon, direction: Direction, angle_tol: float = DEFAULT_ANGLE_TOL) -> VertexFrame:
    """Contact vertex, outside angle and incident-edge angles for a regular direction."""
    if not is_regular(polygon, direction, angle_tol):
        raise RegularityError(
            f"direction phi={direction.phi:.6g} is not regular (margin "
            f"{regularity_margin(polygon, direction):.3g})"
        )
    v = polygon.vertices
    i0 = support_vertex(polygon, direction)
    x0 = v[i0]
    w, wp = direction.omega, direction.omega_perp

    def edge_angle(other):
        u = other - x0
        return math.atan2(float(u @ w), float(u @ wp))

    ang_next = edge_angle(v[(i0 + 1) % len(v)])
    ang_prev = edge_angle(v[(i0 - 1) % len(v)])
    p, q = max(ang_next, ang_prev), min(ang_next, ang_prev)
    theta = 2.0 * math.pi - (p - q)
    a = math.cos(p) * wp + math.sin(p) * w
    a_perp = -math.sin(p) * wp + math.cos(p) * w
    return VertexFrame(x0=x0.copy(), theta=theta, p=p, q=q, a=a, a_perp=a_perp)


def _line_intersection(n1, h1, n2, h2) -> np.ndarray:
    det = n1[0] * n2[1] - n1[1] * n2[0]
    return np.array([(h1 * n2[1] - h2 * n1[1]) / det, (n1[0] * h2 - n2[0] * h1) / det])


def hull_from_support(samples) -> Polygon:
    """Intersect the half-planes {x . omega_i <= h_i} into a convex polygon.

    Directions must span more than a half-circle (else the intersection is
    unbounded: :class:`CoverageError`); mutually exclusive constraints raise
    :class:`InconsistencyError`.  Duplicate directions keep the smallest h;
    half-planes are sorted by angle and intersected incrementally, and
    constraints that contribute no edge are pruned from the result.
    """
    samples = list(samples)
    if len(samples) < 3:
        raise CoverageError(f"need >= 3 support samples, got {len(samples)}")

    two_pi = 2.0 * math.pi
    by_angle: dict[int, tuple[float, float]] = {}
    for s in samples:
        phi = s.direction.phi % two_pi
        key = round(phi / 1e-12)
        if key in by_angle:
            by_angle[key] = (phi, min(by_angle[key][1], s.h))
        else:
            by_angle[key] = (phi, s.h)
    entries = sorted(by_angle.values())
    phis = np.array([e[0] for e in entries])
    hs = np.array([e[1] for e in entries])

    gaps = np.diff(np.concatenate([phis, [phis[0] + two_pi]]))
    if np.max(gaps) >= math.pi - 1e-12:
        raise CoverageError(
            "support directions span at most a half-circle; intersection is unbounded"
        )

    normals = np.stack([np.cos(phis), np.sin(phis)], axis=1)
    scale = max(float(np.max(np.abs(hs))), 1.0)
    tol = 1e-9 * scale

    def violates(i: int, pt: np.ndarray) -> bool:
        return float(pt @ normals[i]) > hs[i] + tol

    dq: deque[int] = deque()
    for i in range(len(hs)):
        while len(dq) >= 2 and violates(i, _line_intersection(normals[dq[-1]], hs[dq[-1]], normals[dq[-2]], hs[dq[-2]])):
            dq.pop()
        while len(dq) >= 2 and violates(i, _line_intersection(normals[dq[0]], hs[dq[0]], normals[dq[1]], hs[dq[1]])):
            dq.popleft()
        dq.append(i)
    while len(dq) >= 3 and violates(dq[0], _line_intersection(normals[dq[-1]], hs[dq[-1]], normals[dq[-2]], hs[dq[-2]])):
        dq.pop()
    while len(dq) >= 3 and violates(dq[-1], _line_intersection(normals[dq[0]], hs[dq[0]], normals[dq[1]], hs[dq[1]])):
        dq.popleft()
    if len(dq) < 3:
        raise InconsistencyError("half-plane constraints are mutually exclusive")

    idx = list(dq)
    pts = [
        _line_intersection(normals[idx[j]], hs[idx[j]], normals[idx[(j + 1) % len(idx)]], hs[idx[(j + 1) % len(idx)]])
        for j in range(len(idx))
    ]
    for pt in pts:
        if float(np.max(normals @ pt - hs)) > 10 * tol:
            raise InconsistencyError("half-plane constraints are mutually exclusive")

    # merge coincident corners (redundant constraints touch at a point) and
    # drop collinear leftovers
    merged: list[np.ndarray] = []
    for pt in pts:
        if not merged or np.linalg.norm(pt - merged[-1]) > 1e-9 * scale:
            merged.append(pt)
    if len(merged) > 1 and np.linalg.norm(merged[0] - merged[-1]) <= 1e-9 * scale:
        merged.pop()
    cleaned: list[np.ndarray] = []
    m = len(merged)
    for j in range(m):
        prev, cur, nxt = merged[j - 1], merged[j], merged[(j + 1) % m]
        if abs(float(np.cross(cur - prev, nxt - cur))) > (1e-9 * scale) ** 2 * 10:
            cleaned.append(cur)
    if len(cleaned) < 3:
        raise InconsistencyError("half-plane intersection degenerates to a point or segment")
    return Polygon(np.array(cleaned))


def signed_boundary_distance(polygon: Polygon, pt) -> float:
    """Distance to the polygon region: <= 0 inside (negative of depth), > 0 outside."""
    pt = np.asarray(pt, dtype=float)
    v = polygon.vertices
    w = np.roll(v, -1, axis=0)
    e = w - v
    le2 = (e**2).sum(1)
    s = np.clip(((pt - v) * e).sum(1) / le2, 0.0, 1.0)
    proj = v + s[:, None] * e
    d = np.sqrt(((pt - proj) ** 2).sum(1))
    dist = float(np.min(d))
    # crossing-number parity for inside/outside
    x, y = pt
    inside = False
    for i in range(len(v)):
        x1, y1 = v[i]
        x2, y2 = w[i]
        if (y1 > y) != (y2 > y):
            xc = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
            if x < xc:
                inside = not inside
    return -dist if inside else dist


def _directed_hausdorff(p: Polygon, q: Polygon) -> float:
    best = 0.0
    for v in p.vertices:
        d = signed_boundary_distance(q, v)
        if d > best:
            best = d
    return best


def hausdorff_distance(p: Polygon, q: Polygon) -> float:
    """Symmetric Hausdorff distance between the filled polygons.

    For convex polygons the directed distance sup_x dist(x, other) is attained
    at a vertex (distance to a convex set is convex), so vertex-to-edge
    distances are exact.
    """
    return max(_directed_hausdorff(p, q), _directed_hausdorff(q, p))


def polygon_distance(p: Polygon, q: Polygon) -> float:
    """Min distance between the two polygon boundaries (0 if they touch/cross)."""
    best = math.inf
    pe, qe = p.edges(), q.edges()
    for a1, a2 in pe:
        for b1, b2 in qe:
            best = min(best, _segment_distance(a1, a2, b1, b2))
            if best == 0.0:
                return 0.0
    return best


def _segment_distance(p1, p2, q1, q2) -> float:
    if _segments_properly_intersect(p1, p2, q1, q2):
        return 0.0

    def pt_seg(pt, a, b):
        e = b - a
        t = float(np.clip((pt - a) @ e / (e @ e), 0.0, 1.0))
        return float(np.linalg.norm(pt - (a + t * e)))

    return min(pt_seg(p1, q1, q2), pt_seg(p2, q1, q2), pt_seg(q1, p1, p2), pt_seg(q2, p1, p2))
