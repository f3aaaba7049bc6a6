"""Bessel functions J0, J1 and quadrature of Gaussian-damped oscillatory
integrals over [0, inf).

``bessel_j`` uses the power series below ``z = 12`` and the Hankel
asymptotic expansion (summed to its smallest term) above; the evaluation
loops live in :mod:`spinpointer.kernels`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from numpy.polynomial.legendre import leggauss

from . import kernels
from .core import ConvergenceError, DomainError

SERIES_CUTOFF = 12.0
GL_ORDER = 16
_GL_X, _GL_W = leggauss(GL_ORDER)
MIN_TOL = 1e-13


def bessel_j(order: int, z):
    """Bessel function of the first kind, orders 0 and 1.

    Negative arguments use the parity ``J0(-z) = J0(z)``, ``J1(-z) = -J1(z)``.
    """
    if order not in (0, 1):
        raise DomainError(f"only orders 0 and 1 are supported, got {order}")
    z = np.asarray(z, dtype=float)
    sign = np.where(z < 0, -1.0, 1.0) if order == 1 else 1.0
    out = sign * kernels.bessel(order, np.abs(z))
    return float(out) if out.ndim == 0 else out


def bessel_j_asymptotic(order: int, z):
    """Leading large-argument form ``sqrt(2/(pi z)) cos(z - n pi/2 - pi/4)``."""
    z = np.asarray(z, dtype=float)
    if np.any(z <= 0):
        raise DomainError("the asymptotic form needs z > 0")
    out = np.sqrt(2.0 / (np.pi * z)) * np.cos(z - order * np.pi / 2 - np.pi / 4)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class QuadratureSpec:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    max_panels: int = 1 << 20

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise DomainError("tolerances must be positive")
        if min(self.rel_tol, self.abs_tol) < MIN_TOL:
            raise DomainError(f"tolerances below {MIN_TOL:g} are beyond double precision")
        if self.max_panels < 1:
            raise DomainError("max_panels must be >= 1")

    @property
    def truncation_eps(self) -> float:
        return min(self.abs_tol, self.rel_tol) * 1e-2


@dataclass(frozen=True)
class DampedIntegrand:
    """The integrand ``exp(-k^2 w^2 / 4) * kernel(k)`` on [0, inf).

    ``kernel(k)`` returns shape ``(n,)`` or ``(n, m)`` for a batch of ``m``
    integrals sharing the nodes. A kernel object may instead provide
    ``weighted_sum(k, w) -> sum_i w_i kernel(k_i)`` to avoid materializing
    the ``(n, m)`` matrix.
    """

    damping_width: float
    oscillation_scales: Sequence[float]
    kernel: Callable = field(compare=False)

    def __post_init__(self):
        if not self.damping_width > 0:
            raise DomainError("damping width must be positive")
        scales = tuple(float(s) for s in self.oscillation_scales)
        if any(not s > 0 for s in scales):
            raise DomainError("oscillation scales must be positive")
        object.__setattr__(self, "oscillation_scales", scales)

    def k_max(self, spec: QuadratureSpec) -> float:
        return 2.0 / self.damping_width * math.sqrt(math.log(1.0 / spec.truncation_eps))

    def panel_width(self) -> float:
        # the damping envelope itself varies on the scale 2/w
        limit = 1.0 / self.damping_width
        if self.oscillation_scales:
            limit = min(limit, min(self.oscillation_scales) / 8.0)
        return limit

    def reduce(self, k: np.ndarray, w: np.ndarray):
        w = w * np.exp(-0.25 * (k * self.damping_width) ** 2)
        weighted = getattr(self.kernel, "weighted_sum", None)
        if weighted is not None:
            return weighted(k, w)
        return np.dot(w, np.asarray(self.kernel(k)))


def panel_nodes(k_max: float, n_panels: int):
    """Composite Gauss-Legendre nodes and weights on [0, k_max]."""
    h = k_max / n_panels
    left = np.arange(n_panels) * h
    k = (left[:, None] + 0.5 * h * (_GL_X + 1.0)).ravel()
    w = np.tile(0.5 * h * _GL_W, n_panels)
    return k, w


@dataclass(frozen=True)
class QuadratureResult:
    value: np.ndarray | float
    error: np.ndarray | float
    panels: int


def damped_semi_infinite_integral(f: DampedIntegrand, spec: QuadratureSpec | None = None,
                                  full_output: bool = False):
    """Integrate ``f`` over [0, inf) by panel doubling.

    The range is cut at ``k_max = (2/w) sqrt(ln(1/eps))`` where the Gaussian
    tail drops below ``eps = min(abs_tol, rel_tol) / 100``. The panel count
    starts from the resolution rule in :meth:`DampedIntegrand.panel_width`
    and doubles until two successive estimates agree to
    ``max(abs_tol, rel_tol*|value|)``.

    Returns the finer estimate, or a :class:`QuadratureResult` when
    ``full_output`` is set.  Its ``error`` also covers the truncated tail,
    bounded by the integral of ``|kernel|`` over ``[k_max, k_max + 6/(k_max w^2)]``
    (about three e-folds of the damping beyond the cut).

    Raises
    ------
    ConvergenceError
        If the tolerance is not met within ``spec.max_panels`` panels.
    """
    spec = spec or QuadratureSpec()
    k_max = f.k_max(spec)
    # the finer of the first pair already meets the panel-width rule
    n = max(1, math.ceil(math.ceil(k_max / f.panel_width()) / 2))
    if 2 * n > spec.max_panels:
        raise ConvergenceError(f"{n} panels needed just to resolve the oscillations", ())
    coarse = np.asarray(f.reduce(*panel_nodes(k_max, n)), dtype=float)
    while True:
        if 2 * n > spec.max_panels:
            raise ConvergenceError(f"no convergence within {spec.max_panels} panels", (coarse,))
        fine = np.asarray(f.reduce(*panel_nodes(k_max, 2 * n)), dtype=float)
        err = np.abs(fine - coarse)
        if np.all(err <= np.maximum(spec.abs_tol, spec.rel_tol * np.abs(fine))):
            break
        coarse, n = fine, 2 * n
        if 2 * n > spec.max_panels:
            raise ConvergenceError(f"no convergence within {spec.max_panels} panels", (coarse, fine))
    value = float(fine) if fine.ndim == 0 else fine
    if full_output:
        err = np.maximum(err, _tail_estimate(f, k_max))
        return QuadratureResult(value, float(err) if err.ndim == 0 else err, 2 * n)
    return value


def _tail_estimate(f: DampedIntegrand, k_max: float):
    # integral of |kernel| bounds an oscillating tail of either sign
    span = 6.0 / (k_max * f.damping_width ** 2)
    k, w = panel_nodes(span, max(1, math.ceil(span / f.panel_width())))
    k = k + k_max
    w = w * np.exp(-0.25 * (k * f.damping_width) ** 2)
    bound = np.dot(w, np.abs(np.asarray(f.kernel(k))))
    # the window holds 1 - e^-3 of the tail
    return bound / (1.0 - math.exp(-3.0))


class BesselKernel:
    """Batch kernel ``trig(R k) * k**power * J_order(k r_j)`` for radii ``r_j``."""

    def __init__(self, order: int, radii, trig: Callable = np.cos, R: float = 1.0, power: float = 1.0):
        if order not in (0, 1):
            raise DomainError(f"only orders 0 and 1 are supported, got {order}")
        self.order = order
        self.radii = np.ascontiguousarray(radii, dtype=float)
        if np.any(self.radii < 0):
            raise DomainError("radii must be >= 0")
        self.trig = trig
        self.R = R
        self.power = power

    def _prefactor(self, k):
        return self.trig(self.R * k) * k ** self.power

    def __call__(self, k):
        k = np.asarray(k, dtype=float)
        return self._prefactor(k)[:, None] * bessel_j(self.order, np.multiply.outer(k, self.radii))

    def weighted_sum(self, k, w):
        return kernels.bessel_weighted_sum(self.order, k, w * self._prefactor(k), self.radii)
