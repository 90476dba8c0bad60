"""Exponential probes and the indicator integrals computed from boundary data.

The probe for direction omega and parameters (tau, t) is the shifted harmonic
exponential

    v~(x) = exp(tau * ((x . omega - t) + i * x . omega_perp)),

always evaluated as a single exponential (never exp(-tau t) times a huge
factor) to avoid overflow.  Along a straight edge the probe restricts to
c * exp(w s) with constant complex w, so integrals of linear data against the
probe have a closed form per edge; edges are subdivided so that
tau * (sub-edge length) <= 0.5, which keeps the closed-form evaluation well
conditioned and bounds the linear-data interpolation error uniformly in tau.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .errors import DataError, MeshError, ProbeOverflowError
from .geometry import Direction
from .special import gamma_positive

__all__ = [
    "ProbeParams",
    "IndicatorSeries",
    "probe_eval",
    "probe_gradient",
    "indicator_boundary",
    "indicator_inclusion_oracle",
    "indicator_series",
    "laplace_corner_integral",
]

#: largest exponent passed to exp(); beyond this the probe overflows
_EXP_GUARD = 700.0
#: phase-resolution bound: tau * sub-edge length stays below this
_SUBEDGE_PHASE = 0.5
#: relative floor attributed to rounding of the oscillatory quadrature
_MACHINE_REL = 5e-15


@dataclass(frozen=True)
class ProbeParams:
    """Probe direction, growth rate tau > 0 and support shift t."""

    direction: Direction
    tau: float
    t: float = 0.0

    def __post_init__(self):
        if not (self.tau > 0.0) or not math.isfinite(self.tau):
            raise DataError(f"tau must be positive and finite, got {self.tau}")
        if not math.isfinite(self.t):
            raise DataError(f"shift t must be finite, got {self.t}")


def probe_eval(pp: ProbeParams, x) -> complex | np.ndarray:
    """Shifted probe value exp(tau((x.omega - t) + i x.omega_perp)).

    Raises :class:`ProbeOverflowError` when tau*(x.omega - t) > 700; callers
    must move the shift t instead of relying on inf/overflow arithmetic.
    """
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    pts = x[None, :] if single else x
    w, wp = pp.direction.omega, pp.direction.omega_perp
    re = pp.tau * (pts @ w - pp.t)
    if float(np.max(re)) > _EXP_GUARD:
        raise ProbeOverflowError(
            f"probe exponent {float(np.max(re)):.3g} exceeds {_EXP_GUARD:.0f}; increase the shift t"
        )
    vals = np.exp(re + 1j * pp.tau * (pts @ wp))
    return complex(vals[0]) if single else vals


def probe_gradient(pp: ProbeParams, x) -> np.ndarray:
    """Analytic gradient tau * (omega + i omega_perp) * value, shape (..., 2)."""
    vals = np.asarray(probe_eval(pp, x))
    zdir = pp.tau * (pp.direction.omega + 1j * pp.direction.omega_perp)
    return vals[..., None] * zdir


def _e0_e1(w: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """E0 = (e^w - 1)/w and E1 = (e^w (w - 1) + 1)/w^2, stable for small w."""
    w = np.asarray(w, dtype=complex)
    e0 = np.empty_like(w)
    e1 = np.empty_like(w)
    small = np.abs(w) < 0.25
    ws = w[small]
    acc0 = np.zeros_like(ws)
    acc1 = np.zeros_like(ws)
    term = np.ones_like(ws)
    fact = 1.0
    for n in range(14):
        fact *= n + 1  # (n+1)!
        acc0 += term / fact
        acc1 += term * (n + 1) / (fact * (n + 2))
        term = term * ws
    e0[small] = acc0
    e1[small] = acc1
    wl = w[~small]
    ew = np.exp(wl)
    e0[~small] = (ew - 1.0) / wl
    e1[~small] = (ew * (wl - 1.0) + 1.0) / wl**2
    return e0, e1


def _subdivide_loop(nodes: np.ndarray, data: list[np.ndarray], tau: float, closed: bool = True):
    """Split each polyline edge so tau * sub-length <= 0.5, interpolating data linearly.

    Returns (x1, x2, per-datum (d1, d2) pairs) as flat arrays of sub-edges.
    """
    nxt = np.roll(nodes, -1, axis=0) if closed else nodes[1:]
    cur = nodes if closed else nodes[:-1]
    lengths = np.linalg.norm(nxt - cur, axis=1)
    counts = np.maximum(1, np.ceil(tau * lengths / _SUBEDGE_PHASE).astype(int))
    x1 = []
    x2 = []
    d1 = [[] for _ in data]
    d2 = [[] for _ in data]
    for e in range(len(cur)):
        m = counts[e]
        s = np.linspace(0.0, 1.0, m + 1)
        seg = cur[e] + s[:, None] * (nxt[e] - cur[e])
        x1.append(seg[:-1])
        x2.append(seg[1:])
        for j, arr in enumerate(data):
            a, b = arr[e], arr[(e + 1) % len(arr)] if closed else arr[e + 1]
            vals = a + s * (b - a)
            d1[j].append(vals[:-1])
            d2[j].append(vals[1:])
    x1 = np.concatenate(x1)
    x2 = np.concatenate(x2)
    pairs = [(np.concatenate(d1[j]), np.concatenate(d2[j])) for j in range(len(data))]
    return x1, x2, pairs


class _LoopQuadrature:
    """Per-sub-edge probe factors for one closed polyline loop at fixed (tau, t).

    Integrals of piecewise-linear data f against v~ or against dv~/dnu come out
    as fixed linear combinations of the endpoint data, so several integrands
    reuse one decomposition.
    """

    def __init__(self, nodes: np.ndarray, node_data: list[np.ndarray], pp: ProbeParams, outward: bool):
        x1, x2, pairs = _subdivide_loop(np.asarray(nodes, dtype=float), node_data, pp.tau)
        self.pairs = pairs
        w, wp = pp.direction.omega, pp.direction.omega_perp
        re1 = pp.tau * (x1 @ w - pp.t)
        if float(np.max(re1)) > _EXP_GUARD:
            raise ProbeOverflowError(
                f"probe exponent {float(np.max(re1)):.3g} exceeds {_EXP_GUARD:.0f} on the loop"
            )
        self.v1 = np.exp(re1 + 1j * pp.tau * (x1 @ wp))
        delta = x2 - x1
        self.lengths = np.linalg.norm(delta, axis=1)
        self.wexp = pp.tau * (delta @ w + 1j * (delta @ wp))
        self.e0, self.e1 = _e0_e1(self.wexp)
        tangent = delta / self.lengths[:, None]
        # outward normal of a ccw loop is the clockwise rotation of the tangent;
        # the inclusion-side convention (normal out of the exterior region,
        # i.e. pointing into the inclusion) is its negation
        normal = np.stack([tangent[:, 1], -tangent[:, 0]], axis=1)
        if not outward:
            normal = -normal
        self.nu_factor = pp.tau * (normal @ w + 1j * (normal @ wp))

    def integrate_against_probe(self, which: int) -> tuple[complex, float]:
        """(integral of f * v~ ds, sum of |sub-edge contributions|)."""
        f1, f2 = self.pairs[which]
        vals = self.lengths * self.v1 * (f1 * self.e0 + (f2 - f1) * self.e1)
        return complex(np.sum(vals)), float(np.sum(np.abs(vals)))

    def integrate_against_normal_derivative(self, which: int) -> tuple[complex, float]:
        """(integral of f * dv~/dnu ds, sum of |sub-edge contributions|)."""
        f1, f2 = self.pairs[which]
        vals = self.nu_factor * self.lengths * self.v1 * (f1 * self.e0 + (f2 - f1) * self.e1)
        return complex(np.sum(vals)), float(np.sum(np.abs(vals)))


@dataclass(frozen=True)
class IndicatorDiagnostics:
    """Error-budget terms for one indicator evaluation.

    ``gross`` is the sum of absolute sub-edge contributions (the cancellation
    scale), ``closure_defect`` the quadrature value of the analytically-zero
    integral of dv~/dnu around the loop, and ``noise_sensitivity`` the root sum
    of squares of per-node derivative weights (std of the indicator under unit
    iid noise on the trace).
    """

    gross: float
    closure_defect: float
    noise_sensitivity: float


def _boundary_indicator_impl(cauchy, pp: ProbeParams):
    nodes = np.asarray(cauchy.boundary_nodes, dtype=float)
    if len(nodes) < 3:
        raise DataError("Cauchy data needs at least 3 boundary nodes")
    quadrature = _LoopQuadrature(
        nodes,
        [np.asarray(cauchy.g_flux, dtype=float), np.asarray(cauchy.u_trace, dtype=float),
         np.ones(len(nodes))],
        pp,
        outward=True,
    )
    term_g, gross_g = quadrature.integrate_against_probe(0)
    term_u, gross_u = quadrature.integrate_against_normal_derivative(1)
    one_int, _ = quadrature.integrate_against_normal_derivative(2)
    value = term_g - term_u
    u_scale = float(np.max(np.abs(np.asarray(cauchy.u_trace))))
    v_nodes = np.abs(probe_eval(pp, nodes))
    sens = pp.tau * float(np.linalg.norm(np.asarray(cauchy.weights) * v_nodes))
    diag = IndicatorDiagnostics(
        gross=gross_g + gross_u,
        closure_defect=float(abs(one_int)) * u_scale,
        noise_sensitivity=sens,
    )
    return value, diag


def indicator_boundary(cauchy, pp: ProbeParams) -> complex:
    """Indicator value from Cauchy data alone.

    Quadrature of (g * v~ - u * dv~/dnu) around the outer boundary loop, with
    the analytic normal derivative dv~/dnu = tau (omega + i omega_perp) . nu v~
    and the sub-edge rule described in the module docstring.
    """
    value, _ = _boundary_indicator_impl(cauchy, pp)
    return value


def indicator_inclusion_oracle(solution, inclusion, k: float, pp: ProbeParams, lam: float = 0.0) -> complex:
    """Inclusion-side indicator (1 - k) * integral over the inclusion boundary.

    Test-side oracle only: it reads the interior field on the inclusion
    boundary, which the reconstruction side never sees.  The normal points out
    of the exterior region (into the inclusion), and the result is independent
    of the constant ``lam`` because the probe is harmonic.
    """
    mesh = solution.mesh
    if mesh.interface_loop is None or len(mesh.interface_loop) < 3:
        raise MeshError("mesh does not resolve the inclusion boundary as an edge loop")
    nodes = mesh.nodes[mesh.interface_loop]
    if inclusion is not None:
        verts = np.asarray(inclusion.vertices, dtype=float)
        d = np.min(np.linalg.norm(nodes[:, None, :] - verts[None, :, :], axis=2), axis=0)
        if float(np.max(d)) > 1e-9 * max(1.0, float(np.max(np.abs(verts)))):
            raise MeshError("mesh interface loop does not match the inclusion polygon")
    u_d = np.asarray(solution.u)[mesh.interface_loop] - lam
    quadrature = _LoopQuadrature(nodes, [u_d], pp, outward=False)
    integral, _ = quadrature.integrate_against_normal_derivative(0)
    return (1.0 - k) * integral


@dataclass(frozen=True)
class IndicatorSeries:
    """Indicator values over a tau grid at fixed direction and shift.

    ``floors`` holds the per-tau noise-floor estimate (measured trace
    roughness propagated through the derivative weights, plus a rounding term
    proportional to the gross cancellation scale); ``noise_floor`` is its
    maximum, kept as a single conservative scalar summary.
    """

    direction: Direction
    t: float
    taus: np.ndarray
    values: np.ndarray
    floors: np.ndarray
    noise_floor: float

    def __post_init__(self):
        if np.any(np.diff(self.taus) <= 0):
            raise DataError("tau grid must be strictly increasing")
        if not np.all(np.isfinite(self.values)):
            raise DataError("indicator values must be finite")

    @property
    def samples(self):
        return list(zip(self.taus.tolist(), self.values.tolist()))


def estimate_trace_roughness(cauchy) -> float:
    """Robust std estimate of node-uncorrelated error in the voltage trace.

    Fourth differences annihilate cubics, so the smooth part of the trace
    drops out and only the rough component (measurement noise, solver wiggle)
    survives; the median absolute value calibrated for Gaussian noise turns it
    into a std.
    """
    u = np.asarray(cauchy.u_trace, dtype=float)
    d4 = (
        np.roll(u, 2) - 4.0 * np.roll(u, 1) + 6.0 * u - 4.0 * np.roll(u, -1) + np.roll(u, -2)
    )
    return 1.4826 * float(np.median(np.abs(d4))) / math.sqrt(70.0)


def indicator_series(cauchy, direction: Direction, taus, t: float = 0.0,
                     data_rel: float = _MACHINE_REL) -> IndicatorSeries:
    """Indicator over a tau grid with per-tau noise floors.

    ``data_rel`` is the relative accuracy attributed to the smooth part of the
    data (discretization error of whatever produced it); it multiplies the
    gross cancellation scale to form the systematic part of the floor.
    """
    taus = np.asarray(taus, dtype=float)
    sigma = estimate_trace_roughness(cauchy)
    values = np.empty(len(taus), dtype=complex)
    floors = np.empty(len(taus), dtype=float)
    for i, tau in enumerate(taus):
        pp = ProbeParams(direction=direction, tau=float(tau), t=t)
        value, diag = _boundary_indicator_impl(cauchy, pp)
        values[i] = value
        floors[i] = (
            sigma * diag.noise_sensitivity
            + max(data_rel, _MACHINE_REL) * diag.gross
            + diag.closure_defect
        )
    return IndicatorSeries(
        direction=direction,
        t=t,
        taus=taus,
        values=values,
        floors=floors,
        noise_floor=float(np.max(floors)),
    )


def laplace_corner_integral(mu: float, p_angle: float, eta: float, tau: float):
    """Corner Laplace integral and its closed-form leading term.

    numeric  = adaptive quadrature of int_0^eta r^mu exp(r tau (sin p + i cos p)) dr
    leading  = tau^-(1+mu) * i * exp(i pi mu / 2) * exp(i p (1+mu)) * Gamma(1+mu)

    The two agree up to a tail O(exp(eta tau sin p)) once tau eta |sin p| is
    large; at small tau the leading term is *not* a valid approximation.
    """
    if not (-math.pi < p_angle < 0.0):
        raise DataError(f"edge angle must lie in (-pi, 0), got {p_angle}")
    if mu <= 0.0 or eta <= 0.0 or tau <= 0.0:
        raise DataError("mu, eta, tau must all be positive")
    c = tau * complex(math.sin(p_angle), math.cos(p_angle))

    def integrand_re(r: float) -> float:
        return r**mu * math.exp(r * c.real) * math.cos(r * c.imag)

    def integrand_im(r: float) -> float:
        return r**mu * math.exp(r * c.real) * math.sin(r * c.imag)

    re, _ = quad(integrand_re, 0.0, eta, limit=500, epsabs=1e-15, epsrel=1e-13)
    im, _ = quad(integrand_im, 0.0, eta, limit=500, epsabs=1e-15, epsrel=1e-13)
    numeric = complex(re, im)
    leading = (
        tau ** (-(1.0 + mu))
        * 1j
        * np.exp(1j * math.pi * mu / 2.0)
        * np.exp(1j * p_angle * (1.0 + mu))
        * gamma_positive(1.0 + mu)
    )
    return numeric, complex(leading)
