"""Shared domain types: spinors, Pauli algebra, Hamiltonian variants and the
measurement configuration.

Unit convention
---------------
Every numerical route works in dimensionless units with ``R_so = alpha*T = 1``
and ``T = 1``.  A :class:`MeasurementConfig` may be built from physical
numbers (for instance the CGS presets) and exposes the two dimensionless
parameters that the dynamics depends on:

* ``r0_over_rso`` -- width of the initial Gaussian in units of ``R_so``;
* ``kinetic_lambda`` -- ``hbar*T / (M*R_so**2)``, the coefficient of the
  kinetic phase ``exp(-i*lambda*(k*R_so)**2 / 2)``; exactly zero for an
  infinite mass.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

HBAR_CGS = 1.054571817e-27  # erg s

INFINITE = math.inf
"""Mass value that switches the kinetic term off exactly."""


class DomainError(ValueError):
    """An argument lies outside the domain of an operation."""


class ConvergenceError(RuntimeError):
    """A numerical procedure did not reach its tolerance.

    Attributes
    ----------
    estimates : tuple
        The last two estimates produced before giving up.
    """

    def __init__(self, message, estimates=()):
        super().__init__(message)
        self.estimates = tuple(estimates)


class ResourceError(RuntimeError):
    """A request would exceed the memory or enumeration guards."""


# ---------------------------------------------------------------------------
# Pauli algebra

IDENTITY = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULI = {"x": SIGMA_X, "y": SIGMA_Y, "z": SIGMA_Z}


def pauli(name: str) -> np.ndarray:
    """Return a copy of the Pauli matrix ``name`` in {'x', 'y', 'z'}."""
    try:
        return PAULI[name].copy()
    except KeyError:
        raise DomainError(f"unknown Pauli matrix {name!r}") from None


# ---------------------------------------------------------------------------
# Spinors


@dataclass(frozen=True)
class Spinor:
    """Two complex amplitudes (spin up / spin down along z)."""

    up: complex
    down: complex

    def __post_init__(self):
        up, down = complex(self.up), complex(self.down)
        if not all(math.isfinite(v) for v in (up.real, up.imag, down.real, down.imag)):
            raise DomainError("spinor components must be finite")
        object.__setattr__(self, "up", up)
        object.__setattr__(self, "down", down)

    NAMED = {
        "z+": (1.0, 0.0),
        "z-": (0.0, 1.0),
        "x+": (math.sqrt(0.5), math.sqrt(0.5)),
        "x-": (math.sqrt(0.5), -math.sqrt(0.5)),
        "y+": (math.sqrt(0.5), 1j * math.sqrt(0.5)),
        "y-": (math.sqrt(0.5), -1j * math.sqrt(0.5)),
    }

    @classmethod
    def named(cls, label: str) -> "Spinor":
        try:
            return cls(*cls.NAMED[label])
        except KeyError:
            raise DomainError(f"unknown spinor label {label!r}; expected one of {sorted(cls.NAMED)}") from None

    @classmethod
    def from_bloch_angles(cls, polar: float, azimuth: float) -> "Spinor":
        return cls(math.cos(polar / 2), complex(math.sin(polar / 2)) * complex(math.cos(azimuth), math.sin(azimuth)))

    @classmethod
    def coerce(cls, value) -> "Spinor":
        """Accept a Spinor, a label such as ``'x+'`` or a length-2 sequence."""
        if isinstance(value, Spinor):
            return value
        if isinstance(value, str):
            return cls.named(value)
        up, down = value
        return cls(up, down)

    def as_array(self) -> np.ndarray:
        return np.array([self.up, self.down], dtype=complex)

    def norm2(self) -> float:
        return abs(self.up) ** 2 + abs(self.down) ** 2

    def is_normalized(self, tol: float = 1e-12) -> bool:
        return abs(self.norm2() - 1.0) <= tol

    def normalized(self) -> "Spinor":
        n = math.sqrt(self.norm2())
        if n == 0:
            raise DomainError("cannot normalize the zero spinor")
        return Spinor(self.up / n, self.down / n)

    def bloch(self) -> np.ndarray:
        """Expectation values (<sx>, <sy>, <sz>) divided by the norm."""
        return bloch_vector(self.as_array())


def bloch_vector(psi) -> np.ndarray:
    """Normalized spin expectation of spinor array(s) with trailing axis 2."""
    psi = np.asarray(psi, dtype=complex)
    a, b = psi[..., 0], psi[..., 1]
    n = np.abs(a) ** 2 + np.abs(b) ** 2
    cross = np.conj(a) * b
    return np.stack([2 * cross.real, 2 * cross.imag, np.abs(a) ** 2 - np.abs(b) ** 2], axis=-1) / n[..., None]


def require_normalized(eta: Spinor, tol: float = 1e-12) -> Spinor:
    eta = Spinor.coerce(eta)
    if not eta.is_normalized(tol):
        raise DomainError(f"initial spinor must be normalized (|eta|^2 = {eta.norm2():.15g})")
    return eta


# ---------------------------------------------------------------------------
# Hamiltonian variants


class HamiltonianVariant(enum.Enum):
    """The four spin-orbit couplings ``p_x s_gamma +/- p_y s_delta``.

    The value is the short tag used on the command line.
    """

    XX_plus_YY = "a"
    XY_plus_YX = "b"
    XX_minus_YY = "c"
    XY_minus_YX = "d"

    @property
    def gamma(self) -> str:
        return "x" if self in (HamiltonianVariant.XX_plus_YY, HamiltonianVariant.XX_minus_YY) else "y"

    @property
    def delta(self) -> str:
        return "y" if self.gamma == "x" else "x"

    @property
    def sign(self) -> int:
        return 1 if self in (HamiltonianVariant.XX_plus_YY, HamiltonianVariant.XY_plus_YX) else -1

    @property
    def triple(self) -> tuple[str, str, int]:
        return self.gamma, self.delta, self.sign

    def sigma_coefficients(self, kx, ky):
        """Coefficients (c_x, c_y) with ``kx s_gamma +/- ky s_delta = c_x sx + c_y sy``."""
        kx = np.asarray(kx, dtype=float)
        ky = np.asarray(ky, dtype=float)
        coeff = {"x": np.zeros(np.broadcast(kx, ky).shape), "y": np.zeros(np.broadcast(kx, ky).shape)}
        coeff[self.gamma] = coeff[self.gamma] + kx
        coeff[self.delta] = coeff[self.delta] + self.sign * ky
        return coeff["x"], coeff["y"]

    @classmethod
    def parse(cls, value) -> "HamiltonianVariant":
        if isinstance(value, cls):
            return value
        text = str(value)
        for v in cls:
            if text in (v.value, v.name):
                return v
        raise DomainError(f"unknown Hamiltonian variant {value!r}; expected a, b, c, d")


# Angle substitution theta -> shift + sign*theta turning the XX_plus_YY
# off-diagonal phase into the one of each variant. Determined by matching
# the spectral propagator (``oracle.fix_variant_table``) and frozen here; a
# regression test regenerates it.
VARIANT_ANGLE_TABLE: dict[HamiltonianVariant, tuple[float, int]] = {
    HamiltonianVariant.XX_plus_YY: (0.0, 1),
    HamiltonianVariant.XY_plus_YX: (math.pi / 2, -1),
    HamiltonianVariant.XX_minus_YY: (0.0, -1),
    HamiltonianVariant.XY_minus_YX: (math.pi / 2, 1),
}


def wrap_angle(theta):
    """Map angles into [-pi, pi)."""
    out = np.mod(np.asarray(theta, dtype=float) + np.pi, 2 * np.pi) - np.pi
    return float(out) if np.ndim(out) == 0 else out


def variant_angle_map(theta, variant, inverse: bool = False, table=None):
    """Angle to use in the XX_plus_YY formulas so they describe ``variant``."""
    variant = HamiltonianVariant.parse(variant)
    shift, sign = (table or VARIANT_ANGLE_TABLE)[variant]
    theta = np.asarray(theta, dtype=float)
    if inverse:
        return wrap_angle(sign * (theta - shift))
    return wrap_angle(shift + sign * theta)


# ---------------------------------------------------------------------------
# Configuration


def _parse_mass(mass) -> float:
    if isinstance(mass, str):
        if mass.strip().lower() in ("inf", "infinite", "infinity"):
            return INFINITE
        mass = float(mass)
    mass = float(mass)
    if not mass > 0:
        raise DomainError(f"mass must be positive or 'infinite', got {mass}")
    return mass


@dataclass(frozen=True)
class MeasurementConfig:
    """Pulse and pointer parameters.

    Parameters
    ----------
    alpha : float
        Coupling speed (length/time), ``alpha >= 0``.
    T : float
        Pulse duration, ``T > 0``.
    r0 : float
        Width of the initial Gaussian, ``r0 > 0``.
    mass : float or "infinite"
        Particle mass; ``"infinite"`` removes the kinetic term exactly.
    variant : HamiltonianVariant
    hbar : float
        Value of hbar in the chosen units (1 for natural units).
    """

    alpha: float
    T: float
    r0: float
    mass: float = INFINITE
    variant: HamiltonianVariant = HamiltonianVariant.XX_plus_YY
    hbar: float = 1.0
    R_so: float = field(init=False)

    def __post_init__(self):
        if not (self.alpha >= 0 and math.isfinite(self.alpha)):
            raise DomainError(f"alpha must be >= 0, got {self.alpha}")
        if not (self.T > 0 and math.isfinite(self.T)):
            raise DomainError(f"T must be > 0, got {self.T}")
        if not (self.r0 > 0 and math.isfinite(self.r0)):
            raise DomainError(f"r0 must be > 0, got {self.r0}")
        if not self.hbar > 0:
            raise DomainError("hbar must be > 0")
        object.__setattr__(self, "mass", _parse_mass(self.mass))
        object.__setattr__(self, "variant", HamiltonianVariant.parse(self.variant))
        object.__setattr__(self, "R_so", self.alpha * self.T)

    @classmethod
    def dimensionless(cls, r0_over_rso: float, variant=HamiltonianVariant.XX_plus_YY,
                      kinetic_lambda: float = 0.0) -> "MeasurementConfig":
        """Config in internal units (alpha = T = R_so = 1)."""
        mass = INFINITE if kinetic_lambda == 0 else 1.0 / kinetic_lambda
        return cls(alpha=1.0, T=1.0, r0=r0_over_rso, mass=mass, variant=variant)

    @property
    def kinetic_off(self) -> bool:
        return math.isinf(self.mass)

    @property
    def accuracy_ratio(self) -> float:
        """``r0 / R_so``; requires ``alpha > 0``."""
        if self.R_so == 0:
            raise DomainError("r0/R_so is undefined for alpha = 0")
        return self.r0 / self.R_so

    @property
    def r0_over_rso(self) -> float:
        return self.accuracy_ratio

    @property
    def kinetic_lambda(self) -> float:
        if self.kinetic_off:
            return 0.0
        if self.R_so == 0:
            raise DomainError("kinetic parameter is undefined for alpha = 0")
        return self.hbar * self.T / (self.mass * self.R_so ** 2)

    def with_variant(self, variant) -> "MeasurementConfig":
        return MeasurementConfig(self.alpha, self.T, self.r0, self.mass, HamiltonianVariant.parse(variant), self.hbar)

    def internal(self) -> "MeasurementConfig":
        """Equivalent config in internal units."""
        return MeasurementConfig.dimensionless(self.r0_over_rso, self.variant, self.kinetic_lambda)

    def describe(self) -> dict:
        return {
            "alpha": self.alpha,
            "T": self.T,
            "r0": self.r0,
            "mass": "infinite" if self.kinetic_off else self.mass,
            "hbar": self.hbar,
            "variant": self.variant.value,
            "R_so": self.R_so,
        }


@dataclass(frozen=True)
class Preset:
    """Order-of-magnitude parameters in CGS units."""

    r0: float
    alpha: float
    mass: float
    T: float
    T_range: tuple[float, float]

    def config(self, T: float | None = None, variant=HamiltonianVariant.XX_plus_YY) -> MeasurementConfig:
        T = self.T if T is None else T
        lo, hi = self.T_range
        if not lo <= T <= hi:
            raise DomainError(f"T={T} s outside the preset range [{lo}, {hi}] s")
        return MeasurementConfig(self.alpha, T, self.r0, self.mass, variant, hbar=HBAR_CGS)


PRESETS: dict[str, Preset] = {
    "semiconductor": Preset(r0=1e-5, alpha=1e6, mass=1e-28, T=1e-11, T_range=(1e-11, 1e-11)),
    # cold atoms: default T gives r0/R_so = 0.02
    "cold_atom": Preset(r0=1e-4, alpha=10.0, mass=1e-22, T=5e-4, T_range=(1e-5, 1e-3)),
}


def preset_config(name: str, T: float | None = None, variant=HamiltonianVariant.XX_plus_YY) -> MeasurementConfig:
    try:
        preset = PRESETS[name]
    except KeyError:
        raise DomainError(f"unknown preset {name!r}; expected one of {sorted(PRESETS)}") from None
    return preset.config(T, variant)


# ---------------------------------------------------------------------------
# Operations


def gaussian_initial(r, cfg_or_r0):
    """Initial pointer amplitude ``sqrt(2/pi)/r0 * exp(-r^2/r0^2)``."""
    r0 = cfg_or_r0.r0 if isinstance(cfg_or_r0, MeasurementConfig) else float(cfg_or_r0)
    if not r0 > 0:
        raise DomainError(f"r0 must be > 0, got {r0}")
    r = np.asarray(r, dtype=float)
    out = math.sqrt(2.0 / math.pi) / r0 * np.exp(-(r * r) / (r0 * r0))
    return float(out) if out.ndim == 0 else out


def kinetic_neglect_ratio(cfg: MeasurementConfig) -> float:
    """``hbar*T / (r0^2 * M)``; small values justify dropping p^2/2M."""
    if cfg.kinetic_off:
        return 0.0
    return cfg.hbar * cfg.T / (cfg.r0 ** 2 * cfg.mass)


# ---------------------------------------------------------------------------
# Spinor fields on Cartesian grids


@dataclass
class SpinorField:
    """Spinor samples ``psi[ix, iy, s]`` on the grid ``x[ix], y[iy]``."""

    x: np.ndarray
    y: np.ndarray
    psi: np.ndarray

    @property
    def cell_area(self) -> float:
        return float((self.x[1] - self.x[0]) * (self.y[1] - self.y[0]))

    def density(self) -> np.ndarray:
        return np.abs(self.psi[..., 0]) ** 2 + np.abs(self.psi[..., 1]) ** 2

    def total_probability(self) -> float:
        return float(self.density().sum() * self.cell_area)

    def spin_direction(self, floor: float = 1e-12):
        """In-plane spin direction; NaN where the density is below ``floor * peak``."""
        rho = self.density()
        b = bloch_vector(np.where(rho[..., None] > 0, self.psi, 1.0))
        undefined = rho < floor * rho.max()
        sx = np.where(undefined, np.nan, b[..., 0])
        sy = np.where(undefined, np.nan, b[..., 1])
        return sx, sy

    def mesh(self):
        return np.meshgrid(self.x, self.y, indexing="ij")
