"""Lie-Trotter lattice walk for the pulse ``exp(-T alpha (d_x s_x + d_y s_y))``.

One time slice ``eps = T/L`` applies ``exp(-alpha eps d_x s_x)`` and then
``exp(-alpha eps d_y s_y)``.  Each factor splits a site spinor into the two
eigencomponents of the Pauli matrix and moves them one lattice unit
``h = alpha * eps`` in opposite directions, so the walk is exactly unitary
and every path is a sequence of spin eigenvalues ``m = +/-1``.

After ``t`` steps only sites with ``j_x = j_y = t (mod 2)`` are reachable.
:class:`LatticeState` stores just that sublattice: ``amplitudes[i, k]`` is
the spinor on site ``(2i - t, 2k - t)``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .core import DomainError, MeasurementConfig, ResourceError, Spinor, require_normalized

MAX_STEPS = 4096
MAX_PATH_STEPS = 8
ORDERINGS = ("x_then_y",)


@dataclass
class LatticeState:
    """Walk amplitudes after ``steps`` time slices.

    Attributes
    ----------
    steps : int
        Number of slices applied so far.
    epsilon : float
        Slice duration.
    alpha : float
        Coupling speed; the lattice spacing is ``alpha * epsilon``.
    amplitudes : ndarray, shape (steps + 1, steps + 1, 2)
        Spinors on the occupied parity sublattice.
    """

    steps: int
    epsilon: float
    alpha: float
    amplitudes: np.ndarray = field(repr=False)

    def __post_init__(self):
        n = self.steps + 1
        if self.amplitudes.shape != (n, n, 2):
            raise DomainError(f"amplitude block must have shape {(n, n, 2)}, got {self.amplitudes.shape}")

    @classmethod
    def point_source(cls, eta, epsilon: float = 1.0, alpha: float = 1.0) -> "LatticeState":
        amp = np.zeros((1, 1, 2), dtype=complex)
        amp[0, 0] = Spinor.coerce(eta).as_array()
        return cls(0, epsilon, alpha, amp)

    @property
    def spacing(self) -> float:
        return self.alpha * self.epsilon

    @property
    def site_index(self) -> np.ndarray:
        """Lattice coordinate along either axis for each storage row."""
        return 2 * np.arange(self.steps + 1) - self.steps

    @property
    def positions(self) -> np.ndarray:
        return self.site_index * self.spacing

    def amplitude(self, jx: int, jy: int) -> np.ndarray:
        """Spinor on site ``(jx, jy)``; zero off the reachable sublattice."""
        t = self.steps
        if (jx - t) % 2 or (jy - t) % 2 or abs(jx) > t or abs(jy) > t:
            return np.zeros(2, dtype=complex)
        return self.amplitudes[(jx + t) // 2, (jy + t) // 2].copy()

    def sites(self, cutoff: float = 0.0) -> dict:
        """Sparse view ``{(jx, jy): spinor}`` of sites with ``|amp|^2 > cutoff``."""
        j = self.site_index
        prob = self.probabilities()
        ii, kk = np.nonzero(prob > cutoff)
        return {(int(j[i]), int(j[k])): self.amplitudes[i, k].copy() for i, k in zip(ii, kk)}

    def probabilities(self) -> np.ndarray:
        a = self.amplitudes
        return np.abs(a[..., 0]) ** 2 + np.abs(a[..., 1]) ** 2

    def norm(self) -> float:
        return float(self.probabilities().sum())

    def amplitude_sum(self) -> np.ndarray:
        return self.amplitudes.sum(axis=(0, 1))


def _grown(state: LatticeState) -> np.ndarray:
    n = state.steps + 1
    buf = np.zeros((n + 1, n + 1, 2), dtype=complex)
    buf[:n, :n] = state.amplitudes
    return buf


def trotter_step(state: LatticeState, ordering: str = "x_then_y") -> LatticeState:
    """One slice: the x shift factor followed by the y shift factor."""
    if ordering not in ORDERINGS:
        raise DomainError(f"unsupported ordering {ordering!r}; expected one of {ORDERINGS}")
    buf = _grown(state)
    kernels.walk_step(buf, state.steps)
    return LatticeState(state.steps + 1, state.epsilon, state.alpha, buf)


def run_walk(eta, L: int, cfg: MeasurementConfig | None = None) -> LatticeState:
    """``L`` slices from a point source carrying ``eta`` at the origin.

    Raises
    ------
    ResourceError
        For ``L > MAX_STEPS``.
    """
    if isinstance(L, bool) or int(L) != L or L < 1:
        raise DomainError(f"L must be a positive integer, got {L!r}")
    L = int(L)
    if L > MAX_STEPS:
        raise ResourceError(f"L={L} exceeds the {MAX_STEPS}-step memory guard")
    eta = require_normalized(eta)
    alpha, T = (1.0, 1.0) if cfg is None else (cfg.alpha, cfg.T)
    buf = np.zeros((L + 1, L + 1, 2), dtype=complex)
    buf[0, 0] = eta.as_array()
    for t in range(L):
        kernels.walk_step(buf, t)
    return LatticeState(L, T / L, alpha, buf)


# ---------------------------------------------------------------------------
# sparse reference step and path sums

_S = math.sqrt(0.5)
# eigenvectors (m = +1, m = -1) of s_x and s_y
_EIGEN = {
    "x": (np.array([_S, _S]), np.array([_S, -_S])),
    "y": (np.array([_S, 1j * _S]), np.array([_S, -1j * _S])),
}


def _project(spinor, axis: str, m: int) -> np.ndarray:
    v = _EIGEN[axis][0 if m > 0 else 1]
    return v * np.vdot(v, spinor)


def sparse_substep(amplitudes: dict, axis: str) -> dict:
    """Apply one shift factor to a sparse ``{(jx, jy): spinor}`` map."""
    if axis not in _EIGEN:
        raise DomainError(f"axis must be 'x' or 'y', got {axis!r}")
    out: dict = {}
    for (jx, jy), psi in amplitudes.items():
        for m in (1, -1):
            part = _project(np.asarray(psi, dtype=complex), axis, m)
            site = (jx + m, jy) if axis == "x" else (jx, jy + m)
            out[site] = out.get(site, 0) + part
    return out


def sparse_walk(eta, L: int) -> dict:
    """Site-by-site reference walk, for small ``L``."""
    amps = {(0, 0): Spinor.coerce(eta).as_array()}
    for _ in range(L):
        amps = sparse_substep(sparse_substep(amps, "x"), "y")
    return amps


@dataclass(frozen=True)
class SpinPath:
    """One sequence of spin eigenvalues and its spinor-valued amplitude."""

    m_x: tuple
    m_y: tuple
    amplitude: np.ndarray = field(compare=False)

    @property
    def steps(self) -> int:
        return len(self.m_x)

    @property
    def delta(self) -> tuple[int, int]:
        """Net displacement ``(sum m_x, sum m_y)`` in lattice units."""
        return sum(self.m_x), sum(self.m_y)

    @property
    def time_averages(self) -> tuple[float, float]:
        dx, dy = self.delta
        return dx / self.steps, dy / self.steps


def enumerate_paths(eta, L: int) -> list[SpinPath]:
    """All ``4**L`` eigenvalue histories with their amplitudes."""
    if isinstance(L, bool) or int(L) != L or L < 1:
        raise DomainError(f"L must be a positive integer, got {L!r}")
    if L > MAX_PATH_STEPS:
        raise ResourceError(f"enumerating 4**{L} paths exceeds the L <= {MAX_PATH_STEPS} limit")
    eta = Spinor.coerce(eta).as_array()
    px = {m: np.outer(v, np.conj(v)) for m, v in zip((1, -1), _EIGEN["x"])}
    py = {m: np.outer(v, np.conj(v)) for m, v in zip((1, -1), _EIGEN["y"])}
    paths = []
    for history in itertools.product(((1, 1), (1, -1), (-1, 1), (-1, -1)), repeat=L):
        psi = eta
        for mx, my in history:
            psi = py[my] @ (px[mx] @ psi)
        mxs, mys = zip(*history)
        paths.append(SpinPath(mxs, mys, psi))
    return paths


def group_paths(paths) -> dict:
    """Sum path amplitudes sharing the same net displacement."""
    out: dict = {}
    for p in paths:
        out[p.delta] = out.get(p.delta, 0) + p.amplitude
    return out


# ---------------------------------------------------------------------------
# time averages and Gaussian smoothing


@dataclass(frozen=True)
class TimeAverageDistribution:
    """Probabilities of the time-averaged spin components ``(j_x/L, j_y/L)``."""

    sigma_x: np.ndarray
    sigma_y: np.ndarray
    probability: np.ndarray
    steps: int

    def mean_square_radius(self) -> float:
        return float(np.sum(self.probability * (self.sigma_x ** 2 + self.sigma_y ** 2)))

    def rows(self):
        return zip(self.sigma_x, self.sigma_y, self.probability)


def time_average_distribution(state: LatticeState, cutoff: float = 0.0) -> TimeAverageDistribution:
    """Point-source distribution of ``(<s_x>_T, <s_y>_T)`` on the sublattice."""
    L = state.steps
    if L < 1:
        raise DomainError("the walk has not taken any steps")
    j = state.site_index / L
    sx, sy = np.meshgrid(j, j, indexing="ij")
    p = state.probabilities()
    keep = p > cutoff
    return TimeAverageDistribution(sx[keep], sy[keep], p[keep], L)


def gaussian_factor(x, centres, r0: float) -> np.ndarray:
    """One-axis factor of the initial Gaussian, ``g(x) g(y) = G(r)``."""
    d = np.subtract.outer(np.asarray(x, dtype=float), np.asarray(centres, dtype=float))
    return (2.0 / math.pi) ** 0.25 / math.sqrt(r0) * np.exp(-(d * d) / (r0 * r0))


def convolved_spinor(state: LatticeState, x, y, r0: float) -> np.ndarray:
    """``sum_j a_j G(r - r_j)`` on the Cartesian grid ``x`` by ``y``.

    The Gaussian factorizes, so the site sum is two matrix products per
    spin component.
    """
    c = state.positions
    gx = gaussian_factor(x, c, r0)
    gy = gaussian_factor(y, c, r0)
    a = state.amplitudes
    return np.stack([gx @ a[..., s] @ gy.T for s in range(2)], axis=-1)


def convolved_density(state: LatticeState, x, y, r0: float) -> np.ndarray:
    psi = convolved_spinor(state, x, y, r0)
    return np.abs(psi[..., 0]) ** 2 + np.abs(psi[..., 1]) ** 2
