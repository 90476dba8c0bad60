"""Corner-exponent spectrum of the transmission problem and decay-rate fits.

At a vertex with outside angle theta of an inclusion with contrast k, the
potential behaves like r^mu where mu runs over the positive roots of

    (1 + k)^2 sin^2(pi mu) = (1 - k)^2 sin^2((pi - theta) mu).

The same exponents govern the large-tau decay of the indicator function at
the support shift, which :func:`fit_decay_exponent` extracts from a computed
indicator series by a log-log line fit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .errors import GeometryError, WindowError

__all__ = [
    "CornerParams",
    "ExponentList",
    "CornerSystem",
    "DecayFit",
    "corner_exponents",
    "corner_system",
    "corner_system_det",
    "fit_decay_exponent",
    "line_fit",
]

_SCAN_STEP = 1e-3
_ROOT_RESIDUAL_TOL = 1e-10
_DOUBLE_ROOT_TOL = 1e-14
_NULLSPACE_DET_TOL = 1e-8


@dataclass(frozen=True)
class CornerParams:
    """Contrast and outside angle at a polygon vertex."""

    k: float
    theta: float

    def __post_init__(self):
        if not (self.k > 0.0) or self.k == 1.0:
            raise GeometryError(f"contrast must be positive and != 1, got {self.k}")
        if not (math.pi < self.theta < 2.0 * math.pi):
            raise GeometryError(f"outside angle must lie in (pi, 2*pi), got {self.theta}")


@dataclass(frozen=True)
class ExponentList:
    """Sorted positive corner exponents up to a cutoff."""

    params: CornerParams
    mus: np.ndarray

    def __iter__(self):
        return iter(self.mus)

    def __len__(self):
        return len(self.mus)


def exponent_residual(params: CornerParams, mu) -> np.ndarray:
    """Residual of the exponent equation, normalized by (1 + k)^2.

    The normalized form sin^2(pi mu) - ((1-k)/(1+k))^2 sin^2((pi-theta) mu)
    depends on k only through ((1-k)/(1+k))^2, which makes the k <-> 1/k
    invariance exact.
    """
    mu = np.asarray(mu, dtype=float)
    r = (1.0 - params.k) / (1.0 + params.k)
    return np.sin(np.pi * mu) ** 2 - r**2 * np.sin((np.pi - params.theta) * mu) ** 2


def corner_exponents(params: CornerParams, mu_max: float = 10.0, scan_step: float = _SCAN_STEP) -> ExponentList:
    """All roots of the exponent equation in (0, mu_max].

    Simple roots are caught by sign changes of the residual on a uniform scan
    and bisected to 1e-12; double roots (the residual touches zero without a
    sign change, e.g. mu = 2 at theta = 3*pi/2) are caught as local minima of
    |residual| refined below 1e-14.
    """
    if mu_max > 10.0:
        raise GeometryError("mu_max above 10 is outside the supported range")
    f = lambda m: float(exponent_residual(params, m))
    grid = np.arange(scan_step, mu_max + 0.5 * scan_step, scan_step)
    vals = exponent_residual(params, grid)

    roots: list[float] = []
    for i in range(len(grid) - 1):
        a, b = grid[i], grid[i + 1]
        fa, fb = vals[i], vals[i + 1]
        if fa == 0.0:
            roots.append(float(a))
        elif fa * fb < 0.0:
            roots.append(float(brentq(f, a, b, xtol=1e-14, rtol=4 * np.finfo(float).eps)))
    if vals[-1] == 0.0:
        roots.append(float(grid[-1]))

    absvals = np.abs(vals)
    for i in range(1, len(grid) - 1):
        if absvals[i] < absvals[i - 1] and absvals[i] <= absvals[i + 1] and vals[i - 1] * vals[i + 1] > 0.0:
            res = minimize_scalar(
                lambda m: abs(f(m)), bounds=(float(grid[i - 1]), float(grid[i + 1])), method="bounded",
                options={"xatol": 1e-13},
            )
            if abs(res.fun) <= _DOUBLE_ROOT_TOL:
                roots.append(float(res.x))

    roots = sorted(r for r in roots if r > scan_step / 2)
    merged: list[float] = []
    for r in roots:
        if not merged or r - merged[-1] > 1e-9:
            merged.append(r)
    mus = np.array([r for r in merged if abs(f(r)) <= _ROOT_RESIDUAL_TOL and r <= mu_max + 1e-12])
    return ExponentList(params=params, mus=mus)


@dataclass(frozen=True)
class CornerSystem:
    """Transmission matrices at a candidate exponent and their compatibility.

    ``m_angle`` maps interior to exterior coefficients through the full-angle
    rotation; ``m_mix`` does the same through the interface-mixing relations.
    At a true exponent both agree on a common nullspace direction: ``det`` is
    det(m_angle - m_mix) and ``interior``/``exterior`` hold unit-normalized
    coefficient vectors when the determinant vanishes (None otherwise).
    """

    mu: float
    m_angle: np.ndarray
    m_mix: np.ndarray
    det: float
    interior: np.ndarray | None
    exterior: np.ndarray | None


def _transmission_matrices(params: CornerParams, mu: float) -> tuple[np.ndarray, np.ndarray]:
    k, theta = params.k, params.theta
    c2, s2 = math.cos(2.0 * math.pi * mu), math.sin(2.0 * math.pi * mu)
    m_angle = np.array([[c2, s2], [-k * s2, k * c2]])
    ct, st = math.cos(theta * mu), math.sin(theta * mu)
    m_mix = np.array(
        [
            [ct * ct + k * st * st, (1.0 - k) * ct * st],
            [(1.0 - k) * ct * st, st * st + k * ct * ct],
        ]
    )
    return m_angle, m_mix


def corner_system(params: CornerParams, mu: float) -> CornerSystem:
    if mu <= 0.0:
        raise GeometryError(f"exponent must be positive, got {mu}")
    m_angle, m_mix = _transmission_matrices(params, mu)
    diff = m_angle - m_mix
    det = float(diff[0, 0] * diff[1, 1] - diff[0, 1] * diff[1, 0])
    interior = exterior = None
    if abs(det) <= _NULLSPACE_DET_TOL:
        _, _, vh = np.linalg.svd(diff)
        interior = vh[-1]
        exterior = m_angle @ interior
        # the compatibility relation is row 1 of (m_angle - m_mix) @ interior
        compat = abs(float(diff[0] @ interior))
        if compat > _NULLSPACE_DET_TOL:
            raise AssertionError(f"nullspace vector violates compatibility: {compat:.3e}")
    return CornerSystem(mu=mu, m_angle=m_angle, m_mix=m_mix, det=det, interior=interior, exterior=exterior)


def corner_system_det(params: CornerParams, mu: float):
    """det(m_angle - m_mix) and a unit nullspace vector when it vanishes."""
    sys = corner_system(params, mu)
    return sys.det, sys.interior


def line_fit(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float]:
    """Least-squares line y ~ slope*x + intercept; returns (slope, intercept, r^2)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    xm, ym = x.mean(), y.mean()
    dx, dy = x - xm, y - ym
    sxx = float(dx @ dx)
    slope = float(dx @ dy) / sxx
    intercept = ym - slope * xm
    ss_res = float(((y - slope * x - intercept) ** 2).sum())
    ss_tot = float(dy @ dy)
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return slope, intercept, r2


@dataclass(frozen=True)
class DecayFit:
    """Power-law fit |I(tau)| ~ L * tau^(-mu) over a tau window."""

    mu_hat: float
    l_hat: float
    window: tuple[float, float]
    r_squared: float
    n_used: int


def fit_decay_exponent(series, h: float, min_samples: int = 8) -> DecayFit:
    """Fit the decay exponent of an indicator series shifted to t = h.

    The series is moved to the shift t = h with the exact identity
    I(tau, h) = exp(-tau (h - t)) I(tau, t); samples within 10x of the noise
    floor and the two smallest usable tau values are dropped (the expansion is
    asymptotic, small-tau samples bias the slope), and log|I| is regressed on
    log tau.
    """
    taus = series.taus
    vals = series.values * np.exp(-taus * (h - series.t))
    floors = series.floors * np.exp(-taus * (h - series.t))
    usable = np.abs(vals) >= 10.0 * floors
    if int(usable.sum()) < min_samples:
        raise WindowError(
            f"only {int(usable.sum())} samples above the noise floor, need >= {min_samples}"
        )
    idx = np.nonzero(usable)[0][2:]
    t_used, v_used = taus[idx], np.abs(vals[idx])
    slope, intercept, r2 = line_fit(np.log(t_used), np.log(v_used))
    return DecayFit(
        mu_hat=-slope,
        l_hat=float(np.exp(intercept)),
        window=(float(t_used[0]), float(t_used[-1])),
        r_squared=r2,
        n_used=len(idx),
    )
