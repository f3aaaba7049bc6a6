"""Closed-form propagator route (kinetic term dropped).

For a particle starting as ``G(r) * eta`` the final spinor is
``Psi(r, theta) = U(r, theta) @ eta`` with the Hermitian kernel

    U11 = U22 = A(r),   U12 = exp(-i theta') B(r),   U21 = conj(U12),

where ``A`` and ``B`` are Gaussian-damped Hankel integrals and ``theta'`` is
the polar angle after the variant substitution of
:func:`~spinpointer.core.variant_angle_map`.  Near the ring ``r ~ R_so`` both
radial functions approach the single profile ``F(r)`` for which two
approximations are provided: the asymptotic-Bessel integral
(:func:`f_asymptotic`) and the convolution form (:func:`f_convolution`).

Lengths are in the units of the config; with the internal convention
``R_so = 1``.
"""

from __future__ import annotations

import functools
import math
import warnings
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq, minimize_scalar

from .core import (
    ConvergenceError,
    DomainError,
    MeasurementConfig,
    Spinor,
    bloch_vector,
    require_normalized,
    variant_angle_map,
)
from .specfun import BesselKernel, DampedIntegrand, QuadratureSpec, damped_semi_infinite_integral

DEFAULT_TOL = 1e-10
UNDEFINED_FLOOR = 1e-12
ASYMPTOTIC_REGIME_LIMIT = 0.1


class AsymptoticRegimeWarning(UserWarning):
    """r0/R_so is too large for the ring asymptotics to be meaningful."""


# ---------------------------------------------------------------------------
# exact radial integrals


def _quad_spec(r0: float, tol: float) -> QuadratureSpec:
    # abs floor relative to the size of the integrand, int k exp(-k^2 r0^2/4) dk
    return QuadratureSpec(rel_tol=tol, abs_tol=max(tol * 2.0 / r0 ** 2, 1e-13))


@functools.lru_cache(maxsize=64)
def _radial_cached(R: float, r0: float, tol: float, radii_bytes: bytes):
    radii = np.frombuffer(radii_bytes, dtype=float).copy()
    rmax = float(radii.max()) if radii.size else 0.0
    scales = [2 * math.pi / s for s in (R, rmax) if s > 0]
    spec = _quad_spec(r0, tol)
    pref = math.sqrt(2 * math.pi) * r0 / (2 * math.pi)
    a = damped_semi_infinite_integral(DampedIntegrand(r0, scales, BesselKernel(0, radii, np.cos, R)), spec)
    b = damped_semi_infinite_integral(DampedIntegrand(r0, scales, BesselKernel(1, radii, np.sin, R)), spec)
    a = pref * np.asarray(a)
    b = pref * np.asarray(b)
    a.flags.writeable = False
    b.flags.writeable = False
    return a, b


def radial_integrals(r, cfg: MeasurementConfig, tol: float = DEFAULT_TOL):
    """The radial parts ``(A(r), B(r))`` of the exact kernel."""
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise DomainError("r must be >= 0")
    # polar grids repeat each radius many times
    uniq, inverse = np.unique(r.ravel(), return_inverse=True)
    a, b = _radial_cached(cfg.R_so, cfg.r0, tol, np.ascontiguousarray(uniq).tobytes())
    return a[inverse].reshape(r.shape), b[inverse].reshape(r.shape)


def u11_exact(r, cfg: MeasurementConfig, tol: float = DEFAULT_TOL):
    """``U11 = U22``: spin-preserving amplitude, real and independent of theta."""
    a, _ = radial_integrals(r, cfg, tol)
    return float(a) if a.ndim == 0 else a


def u12_exact(r, theta, cfg: MeasurementConfig, tol: float = DEFAULT_TOL):
    """Spin-flip amplitude ``exp(-i theta') B(r)``."""
    _, b = radial_integrals(r, cfg, tol)
    phase = np.exp(-1j * np.asarray(variant_angle_map(theta, cfg.variant)))
    out = phase * b
    return complex(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class PropagatorMatrix:
    u11: np.ndarray
    u12: np.ndarray
    u21: np.ndarray
    u22: np.ndarray

    def matrix(self) -> np.ndarray:
        return np.stack([np.stack([self.u11, self.u12], -1), np.stack([self.u21, self.u22], -1)], -2)

    def apply(self, eta) -> np.ndarray:
        e = Spinor.coerce(eta).as_array()
        return np.stack([self.u11 * e[0] + self.u12 * e[1], self.u21 * e[0] + self.u22 * e[1]], axis=-1)


def propagator(r, theta, cfg: MeasurementConfig, tol: float = DEFAULT_TOL) -> PropagatorMatrix:
    r, theta = np.broadcast_arrays(np.asarray(r, dtype=float), np.asarray(theta, dtype=float))
    a, b = radial_integrals(r, cfg, tol)
    phase = np.exp(-1j * np.asarray(variant_angle_map(theta, cfg.variant)))
    a = a.astype(complex)
    return PropagatorMatrix(a, phase * b, np.conj(phase) * b, a.copy())


def radial_interpolant(cfg: MeasurementConfig, r_max: float, step: float | None = None,
                       tol: float = DEFAULT_TOL):
    """Cubic splines of the exact radial parts ``A``, ``B`` on ``[0, r_max]``.

    Beyond ``R_so + 20 r0`` both vanish to double precision and are set to 0.
    """
    step = step or cfg.r0 / 16
    top = min(r_max, cfg.R_so + 20 * cfg.r0)
    r = np.linspace(0.0, top, max(8, math.ceil(top / step) + 1))
    a, b = radial_integrals(r, cfg, tol)
    sa, sb = CubicSpline(r, a), CubicSpline(r, b)

    def evaluate(rr):
        rr = np.asarray(rr, dtype=float)
        inside = rr <= top
        return np.where(inside, sa(np.minimum(rr, top)), 0.0), np.where(inside, sb(np.minimum(rr, top)), 0.0)

    return evaluate


# ---------------------------------------------------------------------------
# ring profile approximations


def _check_ring_regime(cfg: MeasurementConfig):
    if cfg.R_so <= 0:
        raise DomainError("the ring profile needs R_so > 0")
    if cfg.r0 / cfg.R_so > ASYMPTOTIC_REGIME_LIMIT:
        warnings.warn(
            f"r0/R_so = {cfg.r0 / cfg.R_so:g} exceeds {ASYMPTOTIC_REGIME_LIMIT}; "
            "the asymptotic ring profile is unreliable here",
            AsymptoticRegimeWarning,
            stacklevel=3,
        )


class _RingPhaseKernel:
    # sqrt(k) cos((R - r) k + pi/4) at k = shift + q for a batch of radii; the
    # damping beyond exp(-q^2 w^2/4) is folded in
    def __init__(self, radii, R, shift=0.0, width=0.0):
        self.offsets = R - np.asarray(radii, dtype=float)
        self.shift = shift
        self.width = width

    def _weights(self, q):
        k = self.shift + q
        extra = np.exp(-0.25 * self.width ** 2 * self.shift * (self.shift + 2 * q))
        return k, np.sqrt(k) * extra

    def __call__(self, q):
        k, pre = self._weights(np.asarray(q, dtype=float))
        return pre[:, None] * np.cos(np.multiply.outer(k, self.offsets) + math.pi / 4)

    def weighted_sum(self, q, w):
        k, pre = self._weights(q)
        ws = w * pre
        out = np.empty(self.offsets.size)
        step = max(1, (1 << 22) // max(k.size, 1))
        for lo in range(0, self.offsets.size, step):
            out[lo:lo + step] = ws @ np.cos(np.multiply.outer(k, self.offsets[lo:lo + step]) + math.pi / 4)
        return out


_HEAD_NODES, _HEAD_WEIGHTS = leggauss(32)


def _ring_head(offsets, kappa, width):
    # int_0^kappa sqrt(k) exp(-k^2 w^2/4) cos(b k + pi/4) dk with k = s^2,
    # which removes the square-root kink at k = 0
    top = math.sqrt(kappa)
    sn = 0.5 * top * (_HEAD_NODES + 1.0)
    sw = 0.5 * top * _HEAD_WEIGHTS
    k = sn * sn
    ws = sw * 2.0 * k * np.exp(-0.25 * (k * width) ** 2)
    return ws @ np.cos(np.multiply.outer(k, offsets) + math.pi / 4)


def f_asymptotic(r, cfg: MeasurementConfig, tol: float = DEFAULT_TOL):
    """Ring profile from the large-argument Bessel asymptotes.

    ``F = r0 / (2 pi sqrt(R)) * int exp(-k^2 r0^2/4) cos((R - r) k + pi/4) sqrt(k) dk``.
    Emits :class:`AsymptoticRegimeWarning` for ``r0/R_so > 0.1``.
    """
    _check_ring_regime(cfg)
    R, r0 = cfg.R_so, cfg.r0
    r = np.asarray(r, dtype=float)
    flat = r.ravel()
    spread = float(np.max(np.abs(R - flat))) if flat.size else 0.0
    scales = [2 * math.pi / spread] if spread > 0 else []
    # int sqrt(k) exp(-k^2 r0^2/4) dk ~ 1.2 (2/r0)^1.5 sets the absolute scale
    spec = QuadratureSpec(rel_tol=tol, abs_tol=max(tol * (2.0 / r0) ** 1.5, 1e-13))
    kappa = DampedIntegrand(r0, scales, _RingPhaseKernel(flat, R)).panel_width()
    tail = DampedIntegrand(r0, scales, _RingPhaseKernel(flat, R, kappa, r0))
    val = _ring_head(R - flat, kappa, r0) + damped_semi_infinite_integral(tail, spec)
    out = r0 / (2 * math.pi * math.sqrt(R)) * np.asarray(val).reshape(r.shape)
    return float(out) if out.ndim == 0 else out


_U_NODES, _U_WEIGHTS = leggauss(16)


def _convolution_integral(r, R, r0, panels):
    # integrand after r' = R - u^2; only |r - r'| < 8 r0 contributes
    cut = 8.0 * r0
    lo = np.sqrt(R - np.clip(r + cut, 0.0, R))
    hi = np.sqrt(R - np.clip(r - cut, 0.0, R))
    h = (hi - lo) / panels
    t = (np.arange(panels)[:, None] + 0.5 * (_U_NODES + 1.0)).ravel()
    u = lo[:, None] + h[:, None] * t[None, :]
    w = np.tile(_U_WEIGHTS * 0.5, panels)[None, :] * h[:, None]
    d = r[:, None] - R + u * u
    f = 2.0 * (R - u * u) * (2.0 * d / r0 ** 2) * np.exp(-(d * d) / (r0 * r0))
    return (f * w).sum(axis=1)


def f_convolution(r, cfg: MeasurementConfig, tol: float = 1e-9):
    """Ring profile as a Gaussian smoothing of the sharp-front kernel.

    ``F(r) = -1/(2 pi R^{3/2}) d/dr int_0^R r' exp(-(r - r')^2/r0^2) / sqrt(R - r') dr'``

    The derivative is taken analytically on the Gaussian and the endpoint
    singularity is removed with ``r' = R - u^2``.
    """
    R, r0 = cfg.R_so, cfg.r0
    if R <= 0:
        raise DomainError("the ring profile needs R_so > 0")
    r = np.asarray(r, dtype=float)
    flat = r.ravel()
    panels = 32
    coarse = _convolution_integral(flat, R, r0, panels)
    scale = 1.0 / r0 ** 1.5
    while True:
        fine = _convolution_integral(flat, R, r0, 2 * panels)
        if np.all(np.abs(fine - coarse) <= tol * np.maximum(np.abs(fine), scale)):
            break
        coarse, panels = fine, 2 * panels
        if panels > 4096:
            raise ConvergenceError("convolution-form quadrature did not converge", (coarse, fine))
    out = (fine / (2 * math.pi * R ** 1.5)).reshape(r.shape)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class RadialProfile:
    radii: np.ndarray
    values: np.ndarray
    cfg: MeasurementConfig

    def __post_init__(self):
        if np.any(np.diff(self.radii) <= 0):
            raise DomainError("radii must be strictly increasing")

    def zero_crossings(self, lo=-np.inf, hi=np.inf) -> np.ndarray:
        """Linearly interpolated sign changes inside [lo, hi]."""
        r, v = self.radii, self.values
        idx = np.nonzero(np.sign(v[:-1]) * np.sign(v[1:]) < 0)[0]
        z = r[idx] - v[idx] * (r[idx + 1] - r[idx]) / (v[idx + 1] - v[idx])
        return z[(z >= lo) & (z <= hi)]


def ring_profile(radii, cfg: MeasurementConfig, kind: str = "convolution") -> RadialProfile:
    radii = np.asarray(radii, dtype=float)
    if kind == "convolution":
        values = f_convolution(radii, cfg)
    elif kind == "asymptotic":
        values = f_asymptotic(radii, cfg)
    elif kind == "exact":
        values = u11_exact(radii, cfg)
    else:
        raise DomainError(f"unknown profile kind {kind!r}")
    return RadialProfile(radii, np.asarray(values), cfg)


# ---------------------------------------------------------------------------
# spinors, densities and spin fields


def evolve_spinor(eta, r, theta, cfg: MeasurementConfig, route: str = "exact", tol: float = DEFAULT_TOL):
    """Final spinor(s) ``Psi(r, theta)``, shape ``broadcast(r, theta) + (2,)``."""
    eta = require_normalized(eta)
    if route == "exact":
        return propagator(r, theta, cfg, tol).apply(eta)
    if route != "asymptotic":
        raise DomainError(f"unknown route {route!r}")
    r, theta = np.broadcast_arrays(np.asarray(r, dtype=float), np.asarray(theta, dtype=float))
    f = np.asarray(f_convolution(r, cfg))
    ph = np.exp(1j * np.asarray(variant_angle_map(theta, cfg.variant)))
    e1, e2 = eta.up, eta.down
    return np.stack([f * (e1 + e2 * np.conj(ph)), f * (e1 * ph + e2)], axis=-1)


def density(eta, r, theta, cfg: MeasurementConfig, route: str = "asymptotic", tol: float = DEFAULT_TOL):
    """Probability density at ``(r, theta)``.

    ``route="asymptotic"``: ``2 F^2 [1 + n(theta') . s_in]`` with ``F`` from
    :func:`f_convolution` and ``s_in`` the in-plane Bloch components of
    ``eta``; identical to ``|Psi|^2`` of the asymptotic spinor.
    ``route="exact"``: ``|U eta|^2``.
    """
    eta = require_normalized(eta)
    if route == "exact":
        psi = evolve_spinor(eta, r, theta, cfg, "exact", tol)
        return np.abs(psi[..., 0]) ** 2 + np.abs(psi[..., 1]) ** 2
    if route != "asymptotic":
        raise DomainError(f"unknown route {route!r}")
    r, theta = np.broadcast_arrays(np.asarray(r, dtype=float), np.asarray(theta, dtype=float))
    s = eta.bloch()
    tp = np.asarray(variant_angle_map(theta, cfg.variant))
    f = np.asarray(f_convolution(r, cfg))
    return 2.0 * f * f * (1.0 + np.cos(tp) * s[0] + np.sin(tp) * s[1])


def _ring_radii(cfg: MeasurementConfig, n: int = 601) -> np.ndarray:
    R, r0 = cfg.R_so, cfg.r0
    coarse = np.linspace(0.0, R + 6 * r0, n)
    fine = np.linspace(max(0.0, R - 6 * r0), R + 6 * r0, n)
    return np.unique(np.concatenate([coarse, fine]))


@functools.lru_cache(maxsize=64)
def _peak_cached(cfg: MeasurementConfig, s_perp: float, tol: float) -> float:
    r = _ring_radii(cfg)
    a, b = radial_integrals(r, cfg, tol)
    return float(np.max(a * a + b * b + 2 * np.abs(a * b) * s_perp))


def peak_density(eta, cfg: MeasurementConfig, tol: float = DEFAULT_TOL) -> float:
    """Maximum over the plane of the exact-route density."""
    s = require_normalized(eta).bloch()
    return _peak_cached(cfg, round(float(math.hypot(s[0], s[1])), 14), tol)


def spin_direction(eta, r, theta, cfg: MeasurementConfig, floor: float = UNDEFINED_FLOOR,
                   tol: float = DEFAULT_TOL):
    """In-plane spin direction ``(sx, sy)`` of the exact final spinor.

    Points whose density is below ``floor * peak_density`` have no
    direction; both components are NaN there.
    """
    eta = require_normalized(eta)
    psi = evolve_spinor(eta, r, theta, cfg, "exact", tol)
    rho = np.abs(psi[..., 0]) ** 2 + np.abs(psi[..., 1]) ** 2
    undefined = rho < floor * peak_density(eta, cfg, tol)
    b = bloch_vector(np.where(undefined[..., None], 1.0, psi))
    sx = np.where(undefined, np.nan, b[..., 0])
    sy = np.where(undefined, np.nan, b[..., 1])
    if sx.ndim == 0:
        return float(sx), float(sy)
    return sx, sy


def sigma_v_projection(eta, r, cfg: MeasurementConfig, theta=0.0, floor: float = UNDEFINED_FLOOR,
                       tol: float = DEFAULT_TOL):
    """Final spin projected on the mean-velocity direction ``(cos theta, sin theta)``."""
    sx, sy = spin_direction(eta, r, theta, cfg, floor, tol)
    theta = np.asarray(theta, dtype=float)
    out = np.asarray(sx) * np.cos(theta) + np.asarray(sy) * np.sin(theta)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class Resonance:
    radius: float
    sigma_v: float
    u11: float
    u12_radial: float


def find_resonance(cfg: MeasurementConfig, window: float = 1e-3, n: int | None = None,
                   tol: float = DEFAULT_TOL) -> Resonance:
    """Locate the minimum of the z-polarized velocity projection.

    The search covers radii whose density exceeds ``window`` times the
    peak; inside a dip where ``A + B`` changes sign the minimum is the root
    ``A = -B`` where the projection is exactly -1.  Near the zero of the
    ring profile the projection also reaches -1, but only where the density
    is negligible, which the window excludes.
    """
    eta = Spinor(1, 0)
    top = cfg.R_so + 6 * cfg.r0
    n = n or max(400, math.ceil(4 * top / cfg.r0) + 1)
    r = np.linspace(0.0, top, n)
    a, b = radial_integrals(r, cfg, tol)
    rho = a * a + b * b
    floor = window * peak_density(eta, cfg, tol)
    mask = rho >= floor
    sv = np.where(mask, 2 * a * b / np.where(rho > 0, rho, 1.0), np.inf)
    i = int(np.argmin(sv))
    lo, hi = r[max(i - 1, 0)], r[min(i + 1, n - 1)]

    def ab(x):
        av, bv = radial_integrals(np.array([x]), cfg, tol)
        return float(av[0]), float(bv[0])

    def projection(x):
        av, bv = ab(x)
        rr = av * av + bv * bv
        return 2 * av * bv / rr if rr >= floor else 1.0

    inside = mask[max(i - 1, 0)] and mask[min(i + 1, n - 1)]
    if inside and sum(ab(lo)) * sum(ab(hi)) < 0 and a[i] * b[i] < 0:
        radius = brentq(lambda x: sum(ab(x)), lo, hi, xtol=1e-13, rtol=1e-13)
    else:
        res = minimize_scalar(projection, bounds=(lo, hi), method="bounded", options={"xatol": 1e-10})
        radius = float(res.x) if projection(res.x) <= sv[i] else float(r[i])
    av, bv = ab(radius)
    return Resonance(radius, 2 * av * bv / (av * av + bv * bv), av, bv)


@dataclass(frozen=True)
class SpinField:
    """Spin texture on a polar grid; NaN directions mark density nodes."""

    r: np.ndarray
    theta: np.ndarray
    rho: np.ndarray
    sx: np.ndarray
    sy: np.ndarray

    @property
    def defined(self) -> np.ndarray:
        return np.isfinite(self.sx)


def texture(variant, grid, cfg: MeasurementConfig, eta="z+", tol: float = DEFAULT_TOL) -> SpinField:
    """Exact-route density and spin direction for ``variant`` on ``grid = (radii, angles)``."""
    cfg = cfg.with_variant(variant)
    eta = require_normalized(eta)
    radii, angles = grid
    r, th = np.meshgrid(np.asarray(radii, dtype=float), np.asarray(angles, dtype=float), indexing="ij")
    psi = evolve_spinor(eta, r, th, cfg, "exact", tol)
    rho = np.abs(psi[..., 0]) ** 2 + np.abs(psi[..., 1]) ** 2
    undefined = rho < UNDEFINED_FLOOR * peak_density(eta, cfg, tol)
    b = bloch_vector(np.where(undefined[..., None], 1.0, psi))
    return SpinField(r, th, rho, np.where(undefined, np.nan, b[..., 0]), np.where(undefined, np.nan, b[..., 1]))


def default_grid(cfg: MeasurementConfig, n_r: int = 400, n_theta: int = 256):
    """400 x 256 polar grid over r in [0, 1.4 R_so]."""
    radii = np.linspace(0.0, 1.4 * cfg.R_so, n_r)
    angles = -np.pi + 2 * np.pi * np.arange(n_theta) / n_theta
    return radii, angles


# ---------------------------------------------------------------------------
# integrated quantities


def radial_quadrature(cfg: MeasurementConfig, r_min: float = 0.0, order: int = 8):
    """Composite Gauss-Legendre nodes on [r_min, R + 14 r0] refined at the ring."""
    R, r0 = cfg.R_so, cfg.r0
    edges = [R + 14 * r0]
    ring_lo = max(0.0, R - 10 * r0)
    edges += list(np.arange(R + 10 * r0, ring_lo, -r0 / 2))
    d = R - ring_lo
    while d < R:
        d = min(R, max(d * 1.5, d + r0))
        edges.append(R - d)
    edges = np.unique(np.clip(np.array(edges + [ring_lo]), r_min, None))
    edges = edges[edges >= r_min]
    if edges[0] > r_min:
        edges = np.concatenate([[r_min], edges])
    x, w = leggauss(order)
    a, b = edges[:-1], edges[1:]
    nodes = (0.5 * (a + b)[:, None] + 0.5 * (b - a)[:, None] * x).ravel()
    weights = (0.5 * (b - a)[:, None] * w).ravel()
    return nodes, weights


def plane_moments(eta, cfg: MeasurementConfig, route: str = "exact", r_min: float = 0.0,
                  n_theta: int = 64, tol: float = DEFAULT_TOL) -> dict:
    """Total probability and ``<r^2>`` of the final density.

    Radial composite Gauss-Legendre times a periodic trapezoid in angle,
    restricted to ``r >= r_min``.
    """
    eta = require_normalized(eta)
    rn, rw = radial_quadrature(cfg, r_min)
    th = -np.pi + 2 * np.pi * np.arange(n_theta) / n_theta
    rho = density(eta, rn[:, None], th[None, :], cfg, route, tol)
    ring = rho.mean(axis=1) * 2 * np.pi
    mass = float(np.sum(rw * rn * ring))
    second = float(np.sum(rw * rn ** 3 * ring))
    return {"mass": mass, "r2": second, "mean_r2": second / mass if mass > 0 else math.nan}
