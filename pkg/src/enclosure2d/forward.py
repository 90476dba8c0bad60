"""Synthetic-data generation: the conductivity transmission problem.

The conductivity is k inside the inclusion polygon and 1 outside; a prescribed
zero-mean boundary current drives the field, and the measurement is the pair
(voltage trace, current) on the outer boundary.  Piecewise-linear elements on
an interface-fitted mesh represent the piecewise-constant conductivity exactly
per element, and the reported flux is the prescribed current itself (it is
data, not a post-processed derivative).
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import DataError, GeometryError, NumericError
from .geometry import Polygon, polygon_distance, regular_polygon
from .mesh import Mesh, build_mesh

__all__ = [
    "LinearCurrent",
    "ModeCurrent",
    "Scene",
    "FieldSolution",
    "CauchyData",
    "default_scene",
    "disc_scene",
    "solve_transmission",
    "extract_cauchy",
    "solve_scene",
    "analytic_disc_cauchy",
    "scene_to_dict",
    "scene_from_dict",
    "cauchy_to_dict",
    "cauchy_from_dict",
]

_SOLVER_RTOL = 1e-12
_RESIDUAL_TOL = 1e-10


@dataclass(frozen=True)
class LinearCurrent:
    """Current g = nu . d for a fixed unit vector d (uniform far-field drive)."""

    direction: tuple[float, float] = (1.0, 0.0)

    def value(self, points: np.ndarray, normals: np.ndarray) -> np.ndarray:
        d = np.asarray(self.direction, dtype=float)
        d = d / np.linalg.norm(d)
        return np.asarray(normals, dtype=float) @ d

    def describe(self) -> dict:
        return {"type": "linear", "direction": list(map(float, self.direction))}


@dataclass(frozen=True)
class ModeCurrent:
    """Current g = cos(n * theta) in the polar angle of the boundary point."""

    n: int = 1

    def __post_init__(self):
        if self.n < 1:
            raise DataError(f"mode index must be >= 1, got {self.n}")

    def value(self, points: np.ndarray, normals: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        return np.cos(self.n * np.arctan2(points[:, 1], points[:, 0]))

    def describe(self) -> dict:
        return {"type": "mode", "n": self.n}


def _current_from_dict(d: dict):
    if d["type"] == "linear":
        return LinearCurrent(direction=tuple(d["direction"]))
    if d["type"] == "mode":
        return ModeCurrent(n=int(d["n"]))
    raise DataError(f"unknown current type {d['type']!r}")


@dataclass(frozen=True)
class Scene:
    """Full experiment description: domain, inclusion, contrast, drive current.

    ``separation_ok`` records whether diam(inclusion) < dist(inclusion,
    boundary) holds; reconstruction guarantees are only claimed when it does,
    but forward solves are valid either way.
    """

    omega: Polygon
    inclusion: Polygon
    k: float
    current: LinearCurrent | ModeCurrent = LinearCurrent()

    def __post_init__(self):
        # k = 1 (no inclusion) stays allowed: it is the null scene used by
        # validation checks, even though reconstruction needs k != 1
        if self.k <= 0.0:
            raise DataError(f"contrast must be positive, got {self.k}")
        self.omega.require_convex()
        self.inclusion.require_convex()
        margin = polygon_distance(self.omega, self.inclusion)
        inside = all(
            self.omega.contains_point(v, tol=-1e-12 * self.omega.diameter)
            for v in self.inclusion.vertices
        )
        if margin <= 1e-9 * self.omega.diameter or not inside:
            raise GeometryError("inclusion must lie strictly inside the domain")

    @property
    def separation_ok(self) -> bool:
        return self.inclusion.diameter < polygon_distance(self.omega, self.inclusion)

    def digest(self) -> str:
        return hashlib.sha256(
            json.dumps(scene_to_dict(self), sort_keys=True).encode()
        ).hexdigest()[:16]


def default_scene(k: float = 2.0) -> Scene:
    """Regular 64-gon of circumradius 3 around the unit square inclusion, k = 2."""
    omega = regular_polygon(64, 3.0)
    square = Polygon([[-0.5, -0.5], [0.5, -0.5], [0.5, 0.5], [-0.5, 0.5]])
    return Scene(omega=omega, inclusion=square, k=k, current=LinearCurrent((1.0, 0.0)))


def disc_scene(rho: float = 1.0, r_out: float = 3.0, k: float = 2.0, n: int = 1) -> Scene:
    """Concentric polygonal approximation of the disc-in-disc validation setup."""
    if not (0.0 < rho < r_out):
        raise GeometryError(f"need 0 < rho < r_out, got rho={rho}, r_out={r_out}")
    return Scene(
        omega=regular_polygon(64, r_out),
        inclusion=regular_polygon(64, rho),
        k=k,
        current=ModeCurrent(n=n),
    )


@dataclass
class FieldSolution:
    """Nodal potential on a mesh, normalized to zero boundary mean."""

    mesh: Mesh
    u: np.ndarray
    k: float
    residual: float

    def energy(self) -> float:
        """Conductivity-weighted Dirichlet integral of the solution."""
        stiff = assemble_stiffness(self.mesh, self.k)
        return float(self.u @ (stiff @ self.u))


@dataclass(frozen=True)
class CauchyData:
    """One boundary measurement: ordered node loop, voltage trace, current, weights."""

    boundary_nodes: np.ndarray
    u_trace: np.ndarray
    g_flux: np.ndarray
    weights: np.ndarray
    scene_digest: str = ""

    def __post_init__(self):
        n = len(self.boundary_nodes)
        if not (len(self.u_trace) == len(self.g_flux) == len(self.weights) == n):
            raise DataError("Cauchy arrays must have matching lengths")
        total = float(np.sum(self.weights * self.g_flux))
        scale = float(np.sum(self.weights * np.abs(self.g_flux)))
        if abs(total) > 1e-10 * max(scale, 1e-300):
            raise DataError(f"current is not compatible: weighted mean {total:.3e}")

    def with_trace(self, u_new: np.ndarray) -> "CauchyData":
        return CauchyData(
            boundary_nodes=self.boundary_nodes,
            u_trace=np.asarray(u_new, dtype=float),
            g_flux=self.g_flux,
            weights=self.weights,
            scene_digest=self.scene_digest,
        )


def assemble_stiffness(mesh: Mesh, k: float) -> sp.csr_matrix:
    """P1 stiffness matrix with conductivity k on inside-tagged triangles."""
    tri = mesh.triangles
    p = mesh.nodes[tri]
    x, y = p[..., 0], p[..., 1]
    b = np.stack([y[:, 1] - y[:, 2], y[:, 2] - y[:, 0], y[:, 0] - y[:, 1]], axis=1)
    c = np.stack([x[:, 2] - x[:, 1], x[:, 0] - x[:, 2], x[:, 1] - x[:, 0]], axis=1)
    area = 0.5 * (b[:, 0] * c[:, 1] - b[:, 1] * c[:, 0])
    gamma = np.where(mesh.region == 1, k, 1.0)
    coeff = gamma / (4.0 * area)
    local = coeff[:, None, None] * (b[:, :, None] * b[:, None, :] + c[:, :, None] * c[:, None, :])
    rows = np.repeat(tri, 3, axis=1).ravel()
    cols = np.tile(tri, (1, 3)).ravel()
    mat = sp.coo_matrix((local.ravel(), (rows, cols)), shape=(mesh.n_nodes, mesh.n_nodes))
    return mat.tocsr()


def assemble_load(mesh: Mesh, current) -> np.ndarray:
    """Boundary load integrating the current edge-wise (exact for edge-linear data)."""
    load = np.zeros(mesh.n_nodes)
    loop = mesh.boundary_loop
    nxt = np.roll(loop, -1)
    a = mesh.nodes[loop]
    bpt = mesh.nodes[nxt]
    tangent = bpt - a
    lengths = np.linalg.norm(tangent, axis=1)
    normals = np.stack([tangent[:, 1], -tangent[:, 0]], axis=1) / lengths[:, None]
    g1 = current.value(a, normals)
    g2 = current.value(bpt, normals)
    np.add.at(load, loop, lengths * (2.0 * g1 + g2) / 6.0)
    np.add.at(load, nxt, lengths * (g1 + 2.0 * g2) / 6.0)
    return load


def boundary_weights(mesh: Mesh) -> np.ndarray:
    """Trapezoidal quadrature weights on the outer boundary loop."""
    pts = mesh.nodes[mesh.boundary_loop]
    seg = np.linalg.norm(np.roll(pts, -1, axis=0) - pts, axis=1)
    return 0.5 * (seg + np.roll(seg, 1))


def solve_transmission(mesh: Mesh, k: float, current) -> FieldSolution:
    """Galerkin solution of the weak transmission problem with Neumann data.

    Diagonal-preconditioned conjugate gradients on the singular compatible
    system; the constant is fixed afterwards by zeroing the weighted boundary
    mean.  Raises :class:`DataError` for incompatible currents and
    :class:`NumericError` if the relative residual stays above 1e-10.
    """
    if k <= 0.0:
        raise DataError(f"contrast must be positive, got {k}")
    stiff = assemble_stiffness(mesh, k)
    load = assemble_load(mesh, current)
    scale = float(np.sum(np.abs(load)))
    if scale == 0.0:
        u = np.zeros(mesh.n_nodes)
        return FieldSolution(mesh=mesh, u=u, k=k, residual=0.0)
    if abs(float(np.sum(load))) > 1e-8 * scale:
        raise DataError(
            f"current is not compatible: |sum load| = {abs(float(np.sum(load))):.3e}"
        )
    load = load - load.mean()

    diag = stiff.diagonal()
    precond = spla.LinearOperator(
        stiff.shape, matvec=lambda v: v / diag, dtype=float
    )
    u, info = spla.cg(stiff, load, rtol=_SOLVER_RTOL, atol=0.0, M=precond,
                      maxiter=20 * mesh.n_nodes)
    u -= u.mean()
    res = float(np.linalg.norm(stiff @ u - load) / np.linalg.norm(load))
    if res > _RESIDUAL_TOL:
        raise NumericError(f"solver stalled: relative residual {res:.3e} (info={info})")

    w = boundary_weights(mesh)
    trace = u[mesh.boundary_loop]
    u = u - float(np.sum(w * trace) / np.sum(w))
    return FieldSolution(mesh=mesh, u=u, k=k, residual=res)


def extract_cauchy(solution: FieldSolution, current, scene_digest: str = "") -> CauchyData:
    """Boundary measurement of a solved field.

    The voltage is the solution trace at the boundary nodes; the current is
    the prescribed data evaluated at the nodes (edge normals averaged at
    corners); weights are trapezoidal.
    """
    mesh = solution.mesh
    pts = mesh.nodes[mesh.boundary_loop]
    loop_area2 = float(
        np.sum(pts[:, 0] * np.roll(pts[:, 1], -1) - np.roll(pts[:, 0], -1) * pts[:, 1])
    )
    if loop_area2 <= 0.0:
        raise DataError("boundary loop must be counter-clockwise")
    seg = np.roll(pts, -1, axis=0) - pts
    lengths = np.linalg.norm(seg, axis=1)
    edge_normals = np.stack([seg[:, 1], -seg[:, 0]], axis=1) / lengths[:, None]
    node_normals = edge_normals + np.roll(edge_normals, 1, axis=0)
    node_normals /= np.linalg.norm(node_normals, axis=1)[:, None]
    g = current.value(pts, node_normals)
    return CauchyData(
        boundary_nodes=pts.copy(),
        u_trace=solution.u[mesh.boundary_loop].copy(),
        g_flux=np.asarray(g, dtype=float),
        weights=boundary_weights(mesh),
        scene_digest=scene_digest,
    )


def solve_scene(scene: Scene, h_target: float = 0.05, grading_depth: int = 4):
    """Mesh, solve and measure a scene in one call; returns (solution, cauchy)."""
    mesh = build_mesh(scene, h_target=h_target, corner_grading_depth=grading_depth)
    sol = solve_transmission(mesh, scene.k, scene.current)
    return sol, extract_cauchy(sol, scene.current, scene_digest=scene.digest())


# ---------------------------------------------------------------------------
# analytic concentric-disc oracle
# ---------------------------------------------------------------------------

def disc_mode_coefficients(r_out: float, rho: float, k: float, n: int) -> tuple[float, float, float]:
    """Coefficients (A, B, C) of the separated disc solution.

    u = A r^n cos(n theta) inside, (B r^n + C r^-n) cos(n theta) outside, with
    continuity of u and of the conductivity-weighted radial flux at rho, and
    du/dr = cos(n theta) at r_out.
    """
    if not (0.0 < rho < r_out):
        raise GeometryError(f"need 0 < rho < r_out, got rho={rho}, r_out={r_out}")
    if n < 1:
        raise GeometryError(f"mode must be >= 1, got {n}")
    mat = np.array(
        [
            [rho**n, -(rho**n), -(rho ** (-n))],
            [k * rho ** (n - 1), -(rho ** (n - 1)), rho ** (-n - 1)],
            [0.0, n * r_out ** (n - 1), -n * r_out ** (-n - 1)],
        ]
    )
    rhs = np.array([0.0, 0.0, 1.0])
    a, b, c = np.linalg.solve(mat, rhs)
    return float(a), float(b), float(c)


def analytic_disc_cauchy(r_out: float, rho: float, k: float, n: int = 1,
                         n_boundary: int = 512):
    """Exact Cauchy data of the concentric-disc solution, sampled on the 64-gon.

    Returns (CauchyData, evaluator): the data lives on the regular 64-gon
    inscribed in the outer circle (each edge subdivided to ``n_boundary`` total
    nodes), with the voltage and the chord-normal flux of the exact field —
    valid Cauchy data for the polygonal region.  ``evaluator(points)`` gives
    the exact potential anywhere in the closed disc.
    """
    a, b, c = disc_mode_coefficients(r_out, rho, k, n)

    def complex_potential(z: np.ndarray) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        inside = np.abs(z) < rho
        out_vals = b * z**n + c * np.where(z == 0, 1.0, z) ** (-n)
        in_vals = a * z**n
        return np.where(inside, in_vals, out_vals)

    def evaluator(points) -> np.ndarray:
        points = np.atleast_2d(np.asarray(points, dtype=float))
        z = points[:, 0] + 1j * points[:, 1]
        return np.real(complex_potential(z))

    def gradient(points) -> np.ndarray:
        points = np.atleast_2d(np.asarray(points, dtype=float))
        z = points[:, 0] + 1j * points[:, 1]
        inside = np.abs(z) < rho
        fp_out = n * (b * z ** (n - 1) - c * z ** (-n - 1))
        fp_in = n * a * z ** (n - 1)
        fp = np.where(inside, fp_in, fp_out)
        return np.stack([np.real(fp), -np.imag(fp)], axis=1)

    poly = regular_polygon(64, r_out)
    per_edge = max(1, int(math.ceil(n_boundary / 64)))
    verts = poly.vertices
    nodes = []
    for i in range(64):
        v0, v1 = verts[i], verts[(i + 1) % 64]
        s = np.linspace(0.0, 1.0, per_edge + 1)[:-1]
        nodes.append(v0 + s[:, None] * (v1 - v0))
    nodes = np.concatenate(nodes)

    seg = np.roll(nodes, -1, axis=0) - nodes
    lengths = np.linalg.norm(seg, axis=1)
    edge_normals = np.stack([seg[:, 1], -seg[:, 0]], axis=1) / lengths[:, None]
    node_normals = edge_normals + np.roll(edge_normals, 1, axis=0)
    node_normals /= np.linalg.norm(node_normals, axis=1)[:, None]
    weights = 0.5 * (lengths + np.roll(lengths, 1))

    u_vals = evaluator(nodes)
    g_vals = np.sum(gradient(nodes) * node_normals, axis=1)
    g_vals = g_vals - float(np.sum(weights * g_vals) / np.sum(weights))

    cauchy = CauchyData(
        boundary_nodes=nodes,
        u_trace=u_vals - float(np.sum(weights * u_vals) / np.sum(weights)),
        g_flux=g_vals,
        weights=weights,
        scene_digest=f"analytic-disc-{r_out:g}-{rho:g}-{k:g}-{n}",
    )
    return cauchy, evaluator


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def _polygon_to_dict(p: Polygon) -> dict:
    return {"type": "polygon", "vertices": [[float(x), float(y)] for x, y in p.vertices]}


def _polygon_from_dict(d: dict) -> Polygon:
    if d.get("type", "polygon") == "regular_polygon":
        return regular_polygon(
            int(d["n"]), float(d["circumradius"]), center=tuple(d.get("center", (0.0, 0.0)))
        )
    return Polygon(d["vertices"])


def scene_to_dict(scene: Scene) -> dict:
    return {
        "omega": _polygon_to_dict(scene.omega),
        "inclusion": _polygon_to_dict(scene.inclusion),
        "k": float(scene.k),
        "current": scene.current.describe(),
    }


def scene_from_dict(d: dict) -> Scene:
    try:
        return Scene(
            omega=_polygon_from_dict(d["omega"]),
            inclusion=_polygon_from_dict(d["inclusion"]),
            k=float(d["k"]),
            current=_current_from_dict(d["current"]),
        )
    except KeyError as exc:
        raise DataError(f"scene document is missing field {exc}") from exc


def cauchy_to_dict(cauchy: CauchyData) -> dict:
    return {
        "boundary_nodes": [[float(x), float(y)] for x, y in cauchy.boundary_nodes],
        "u": [float(v) for v in cauchy.u_trace],
        "g": [float(v) for v in cauchy.g_flux],
        "weights": [float(v) for v in cauchy.weights],
        "scene_digest": cauchy.scene_digest,
    }


def cauchy_from_dict(d: dict) -> CauchyData:
    try:
        return CauchyData(
            boundary_nodes=np.asarray(d["boundary_nodes"], dtype=float),
            u_trace=np.asarray(d["u"], dtype=float),
            g_flux=np.asarray(d["g"], dtype=float),
            weights=np.asarray(d["weights"], dtype=float),
            scene_digest=d.get("scene_digest", ""),
        )
    except KeyError as exc:
        raise DataError(f"Cauchy document is missing field {exc}") from exc
