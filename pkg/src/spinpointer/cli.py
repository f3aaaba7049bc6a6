"""Command-line front end.

Subcommands ``profile``, ``density``, ``spinfield``, ``walk`` and ``compare``
write CSV files (comma separated, 17 significant digits) whose first line is
``#`` followed by the fully resolved configuration as JSON.

Configuration comes from an optional flat ``key = value`` file (``--config``)
and command-line flags; flags win.  Lengths are reported in units of
``R_so`` unless ``--physical`` is given, in which case they are in the
config's own units (centimetres for the presets).

Exit status: 0 success, 2 invalid configuration, 3 quadrature convergence
failure, 4 I/O error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import warnings
from dataclasses import dataclass

import numpy as np

from . import analytic, checkerboard, oracle
from .core import (
    HBAR_CGS,
    ConvergenceError,
    DomainError,
    HamiltonianVariant,
    MeasurementConfig,
    ResourceError,
    Spinor,
    kinetic_neglect_ratio,
    preset_config,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_CONVERGENCE = 3
EXIT_IO = 4

COMMANDS = ("profile", "density", "spinfield", "walk", "compare")

# key -> parser; the same names are used in config files
_KEYS = {
    "alpha": float,
    "T": float,
    "r0": float,
    "r0_over_Rso": float,
    "mass": str,
    "hbar": float,
    "kinetic_ratio": float,
    "variant": str,
    "eta": str,
    "grid_n": int,
    "n_r": int,
    "walk_steps": int,
    "tol": float,
    "kinetic": str,
    "preset": str,
    "physical": str,
    "projection": str,
    "out": str,
}
_ALIASES = {"r0_over_rso": "r0_over_Rso", "t": "T"}

DEFAULTS = {
    "r0_over_Rso": 0.02,
    "variant": "a",
    "eta": "z+",
    "grid_n": 512,
    "n_r": 400,
    "tol": 1e-10,
    "physical": "false",
    "projection": "false",
}


class ConfigError(ValueError):
    pass


def _truth(value: str, key: str) -> bool:
    text = str(value).strip().lower()
    if text in ("1", "true", "yes", "on"):
        return True
    if text in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"{key}: expected a boolean, got {value!r}")


def read_config_file(path: str) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
            key, value = (s.strip() for s in line.split("=", 1))
            out[_canonical_key(key, f"{path}:{lineno}")] = value
    return out


def _canonical_key(key: str, where: str) -> str:
    key = _ALIASES.get(key, key)
    if key not in _KEYS:
        raise ConfigError(f"{where}: unknown key {key!r}")
    return key


def parse_eta(text: str) -> Spinor:
    """A named state (``z+``, ``x-``, ...) or ``re1,im1,re2,im2``."""
    text = text.strip()
    if text in Spinor.NAMED:
        return Spinor.named(text)
    parts = text.split(",")
    if len(parts) != 4:
        raise ConfigError(f"eta: expected one of {sorted(Spinor.NAMED)} or 're1,im1,re2,im2', got {text!r}")
    try:
        re1, im1, re2, im2 = (float(p) for p in parts)
    except ValueError:
        raise ConfigError(f"eta: non-numeric component in {text!r}") from None
    eta = Spinor(complex(re1, im1), complex(re2, im2))
    if not eta.is_normalized(1e-9):
        raise ConfigError(f"eta: must be normalized, |eta|^2 = {eta.norm2():.12g}")
    return eta.normalized()


@dataclass(frozen=True)
class RunConfig:
    """Validated run parameters."""

    cfg: MeasurementConfig
    eta: Spinor
    eta_text: str
    grid_n: int
    n_r: int
    walk_steps: int
    tol: float
    kinetic: bool
    physical: bool
    projection: bool
    preset: str | None
    out: str | None

    @property
    def internal(self) -> MeasurementConfig:
        return self.cfg.internal()

    @property
    def length_unit(self) -> float:
        return self.cfg.R_so if self.physical else 1.0

    def describe(self) -> dict:
        d = self.cfg.describe()
        d.update(
            r0_over_Rso=self.cfg.r0_over_rso,
            kinetic=self.kinetic,
            kinetic_neglect_ratio=kinetic_neglect_ratio(self.cfg) if self.kinetic else 0.0,
            eta=self.eta_text,
            grid_n=self.grid_n,
            n_r=self.n_r,
            walk_steps=self.walk_steps,
            tol=self.tol,
            physical=self.physical,
            projection=self.projection,
            preset=self.preset,
        )
        return d


def resolve(values: dict, command: str | None = None) -> RunConfig:
    """Turn merged raw values into a :class:`RunConfig`, validating everything."""
    v = dict(DEFAULTS, walk_steps=512 if command == "compare" else 64)
    v.update({k: x for k, x in values.items() if x is not None})
    try:
        return _resolve(v)
    except DomainError as exc:
        raise ConfigError(str(exc)) from None
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from None


def _num(v: dict, key: str, kind=float):
    try:
        return kind(v[key])
    except (TypeError, ValueError):
        raise ConfigError(f"{key}: cannot parse {v[key]!r} as {kind.__name__}") from None


def _resolve(v: dict) -> RunConfig:
    variant = HamiltonianVariant.parse(v["variant"])
    kinetic_flag = None
    if "kinetic" in v:
        text = str(v["kinetic"]).strip().lower()
        if text not in ("on", "off"):
            raise ConfigError(f"kinetic: expected 'on' or 'off', got {v['kinetic']!r}")
        kinetic_flag = text == "on"
    mass = v.get("mass", "infinite")

    preset = v.get("preset")
    if preset is not None:
        T = _num(v, "T") if "T" in v else None
        cfg = preset_config(preset, T, variant)
        if any(k in v for k in ("alpha", "r0", "mass")):
            cfg = MeasurementConfig(
                _num(v, "alpha") if "alpha" in v else cfg.alpha,
                cfg.T,
                _num(v, "r0") if "r0" in v else cfg.r0,
                mass if "mass" in v else cfg.mass,
                variant,
                cfg.hbar,
            )
    elif any(k in v for k in ("alpha", "T", "r0")):
        missing = [k for k in ("alpha", "T", "r0") if k not in v]
        if missing:
            raise ConfigError(f"physical parameters need alpha, T and r0; missing {', '.join(missing)}")
        hbar = _num(v, "hbar") if "hbar" in v else HBAR_CGS
        cfg = MeasurementConfig(_num(v, "alpha"), _num(v, "T"), _num(v, "r0"), mass, variant, hbar)
    else:
        ratio = _num(v, "r0_over_Rso")
        if not ratio > 0:
            raise ConfigError(f"r0_over_Rso: must be > 0, got {ratio}")
        lam = 0.0
        if "kinetic_ratio" in v:
            kr = _num(v, "kinetic_ratio")
            if not kr > 0:
                raise ConfigError(f"kinetic_ratio: must be > 0, got {kr}")
            lam = kr * ratio * ratio
        elif "mass" in v and str(mass).strip().lower() not in ("inf", "infinite", "infinity"):
            lam = 1.0 / _num(v, "mass")
        cfg = MeasurementConfig.dimensionless(ratio, variant, lam)
    if cfg.R_so <= 0:
        raise ConfigError("alpha: must be > 0 (R_so = alpha*T sets the length unit)")

    kinetic = (not cfg.kinetic_off) if kinetic_flag is None else kinetic_flag
    if kinetic and cfg.kinetic_off:
        raise ConfigError("kinetic: 'on' needs a finite mass (mass or kinetic_ratio)")

    grid_n = _num(v, "grid_n", int)
    if grid_n < 16 or grid_n & (grid_n - 1):
        raise ConfigError(f"grid_n: must be a power of two >= 16, got {grid_n}")
    n_r = _num(v, "n_r", int)
    if n_r < 2:
        raise ConfigError(f"n_r: must be >= 2, got {n_r}")
    walk_steps = _num(v, "walk_steps", int)
    if not 1 <= walk_steps <= checkerboard.MAX_STEPS:
        raise ConfigError(f"walk_steps: must be in [1, {checkerboard.MAX_STEPS}], got {walk_steps}")
    tol = _num(v, "tol")
    if not 1e-13 <= tol <= 1e-2:
        raise ConfigError(f"tol: must be in [1e-13, 1e-2], got {tol}")
    eta = parse_eta(str(v["eta"]))
    return RunConfig(
        cfg=cfg,
        eta=eta,
        eta_text=str(v["eta"]).strip(),
        grid_n=grid_n,
        n_r=n_r,
        walk_steps=walk_steps,
        tol=tol,
        kinetic=kinetic,
        physical=_truth(v["physical"], "physical"),
        projection=_truth(v["projection"], "projection"),
        preset=preset,
        out=v.get("out"),
    )


# ---------------------------------------------------------------------------
# CSV output


def _fmt(x) -> str:
    if isinstance(x, str):
        return x
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return ""
    return "%.17g" % x


def write_csv(path, run: RunConfig, header, rows, command: str):
    meta = {"command": command, **run.describe()}
    lines = ["# " + json.dumps(meta, sort_keys=True), ",".join(header)]
    lines += [",".join(_fmt(x) for x in row) for row in rows]
    text = "\n".join(lines) + "\n"
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


# ---------------------------------------------------------------------------
# commands


def _guarded(fn, r):
    # per-row fallback so one non-converging radius does not sink the sweep
    try:
        return np.asarray(fn(r)), np.zeros(r.shape, dtype=bool)
    except ConvergenceError:
        out = np.full(r.shape, np.nan)
        bad = np.zeros(r.shape, dtype=bool)
        for i, ri in enumerate(r):
            try:
                out[i] = fn(np.array([ri]))[0]
            except ConvergenceError:
                bad[i] = True
        return out, bad


def cmd_profile(run: RunConfig):
    cfg = run.internal
    r = np.linspace(0.0, 1.4, run.n_r + 1)[1:]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", analytic.AsymptoticRegimeWarning)
        fa, bad_a = _guarded(lambda x: analytic.f_asymptotic(x, cfg, run.tol), r)
    fc, bad_c = _guarded(lambda x: analytic.f_convolution(x, cfg), r)
    u11, bad_u = _guarded(lambda x: analytic.radial_integrals(x, cfg, run.tol)[0], r)
    u12, bad_v = _guarded(lambda x: np.abs(analytic.radial_integrals(x, cfg, run.tol)[1]), r)
    flag = np.where(bad_a | bad_c | bad_u | bad_v, "noconv", "ok")
    unit = run.length_unit
    amp = 1.0 / unit
    name = "r" if run.physical else "r_over_Rso"
    header = [name, "F_asymptotic", "F_convolution", "U11_exact", "absU12_exact", "flag"]
    rows = zip(r * unit, fa * amp, fc * amp, u11 * amp, u12 * amp, flag)
    return header, rows


def _cartesian(run: RunConfig):
    n = run.grid_n
    h = 2.8 / n
    return -1.4 + h * (np.arange(n) + 0.5), h


def cmd_density(run: RunConfig):
    cfg = run.internal
    x, h = _cartesian(run)
    X, Y = np.meshgrid(x, x, indexing="ij")
    field = _exact_field(run, X, Y)
    rho = np.abs(field[..., 0]) ** 2 + np.abs(field[..., 1]) ** 2
    unit = run.length_unit
    header = ["x", "y", "rho"] if run.physical else ["x_over_Rso", "y_over_Rso", "rho"]
    rows = zip(X.ravel() * unit, Y.ravel() * unit, rho.ravel() / unit ** 2)
    return header, rows


def _exact_field(run: RunConfig, X, Y):
    cfg = run.internal
    r = np.hypot(X, Y)
    a, b = analytic.radial_interpolant(cfg, float(r.max()), tol=run.tol)(r)
    tp = np.asarray(analytic.variant_angle_map(np.arctan2(Y, X), cfg.variant))
    e1, e2 = run.eta.up, run.eta.down
    ph = np.exp(1j * tp)
    return np.stack([a * e1 + b * np.conj(ph) * e2, b * ph * e1 + a * e2], axis=-1)


def cmd_spinfield(run: RunConfig):
    cfg = run.internal
    unit = run.length_unit
    peak = analytic.peak_density(run.eta, cfg, run.tol)
    if run.projection:
        r = np.linspace(0.0, 1.4, run.n_r)
        psi = analytic.evolve_spinor(run.eta, r, 0.0, cfg, "exact", run.tol)
        rho = np.abs(psi[..., 0]) ** 2 + np.abs(psi[..., 1]) ** 2
        undefined = rho < analytic.UNDEFINED_FLOOR * peak
        sv = analytic.sigma_v_projection(run.eta, r, cfg, 0.0, tol=run.tol)
        header = ["r" if run.physical else "r_over_Rso", "rho", "sig_v", "flag"]
        rows = zip(r * unit, rho / unit ** 2, sv, np.where(undefined, "undefined", "ok"))
        return header, rows
    radii, angles = analytic.default_grid(cfg, run.n_r)
    f = analytic.texture(cfg.variant, (radii, angles), cfg, run.eta, run.tol)
    x = f.r * np.cos(f.theta)
    y = f.r * np.sin(f.theta)
    sv = f.sx * np.cos(f.theta) + f.sy * np.sin(f.theta)
    flag = np.where(f.defined, "ok", "undefined")
    header = ["x", "y"] if run.physical else ["x_over_Rso", "y_over_Rso"]
    header += ["rho", "sigx", "sigy", "sig_v", "flag"]
    rows = zip(x.ravel() * unit, y.ravel() * unit, f.rho.ravel() / unit ** 2,
               f.sx.ravel(), f.sy.ravel(), sv.ravel(), flag.ravel())
    return header, rows


def cmd_walk(run: RunConfig):
    state = checkerboard.run_walk(run.eta, run.walk_steps, run.internal)
    dist = checkerboard.time_average_distribution(state)
    header = ["sigma_x_avg", "sigma_y_avg", "probability"]
    return header, dist.rows()


@dataclass
class CheckRow:
    name: str
    linf: float = math.nan
    l2: float = math.nan
    tolerance: float = math.nan
    status: str = "n/a"
    note: str = ""


def cmd_compare(run: RunConfig, report=None):
    report = sys.stderr if report is None else report
    cfg = run.internal
    grid = oracle.default_grid(cfg, max(run.grid_n, 16))
    checks = []
    ref = None
    try:
        ref = oracle.propagate(run.eta, cfg, grid, include_kinetic=False).density()
    except (DomainError, ValueError) as exc:
        checks.append(CheckRow("oracle", status="error", note=str(exc)))
    area = grid.dx ** 2

    def versus(name, fn, tol):
        if ref is None:
            checks.append(CheckRow(name, status="skipped", note="oracle unavailable"))
            return
        try:
            d = oracle.density_discrepancy(fn(), ref, area)
        except (ConvergenceError, DomainError, ResourceError, ValueError) as exc:
            checks.append(CheckRow(name, status="error", note=str(exc)))
            return
        checks.append(CheckRow(name, d.linf, d.l2, tol, "pass" if d.linf <= tol else "fail"))

    versus("analytic_vs_oracle", lambda: oracle.analytic_field(run.eta, cfg, grid).density(), 5e-3)

    def walk_density():
        state = checkerboard.run_walk(run.eta, run.walk_steps, cfg)
        return checkerboard.convolved_density(state, grid.x, grid.x, cfg.r0)

    versus("walk_vs_oracle", walk_density, 2e-2)

    ratio = kinetic_neglect_ratio(run.cfg) if not run.cfg.kinetic_off else 0.0
    if run.kinetic:
        try:
            dev = oracle.kinetic_deviation(run.eta, cfg, grid)
            note = "kinetic_neglect_ratio >= 0.1: kinetic term not negligible" if ratio >= 0.1 else ""
            checks.append(CheckRow("kinetic_deviation", dev, status="info", note=note))
        except (DomainError, ValueError) as exc:
            checks.append(CheckRow("kinetic_deviation", status="error", note=str(exc)))

    print(f"kinetic_neglect_ratio = {ratio:.6g}", file=report)
    if ratio >= 0.1:
        print("warning: kinetic_neglect_ratio >= 0.1, outside the kinetic-neglect regime", file=report)
    for c in checks:
        print(f"{c.name:20s} {c.status:7s} linf={_fmt(c.linf) or '-'} tol={_fmt(c.tolerance) or '-'} {c.note}",
              file=report)
    header = ["check", "linf_over_peak", "l2", "tolerance", "status", "note"]
    rows = [(c.name, c.linf, c.l2, c.tolerance, c.status, c.note.replace(",", ";")) for c in checks]
    rows.append(("kinetic_neglect_ratio", ratio, math.nan, math.nan, "info", ""))
    return header, rows


HANDLERS = {
    "profile": cmd_profile,
    "density": cmd_density,
    "spinfield": cmd_spinfield,
    "walk": cmd_walk,
    "compare": cmd_compare,
}


# ---------------------------------------------------------------------------
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key = value file; flags override it")
    common.add_argument("--out", help="output CSV path (default: stdout)")
    common.add_argument("--r0-over-rso", dest="r0_over_Rso", help="initial width over R_so")
    common.add_argument("--variant", choices=["a", "b", "c", "d"])
    common.add_argument("--eta", help="z+, z-, x+, x-, y+, y- or re1,im1,re2,im2")
    common.add_argument("--grid-n", dest="grid_n", help="points per axis (power of two)")
    common.add_argument("--n-r", dest="n_r", help="radial samples")
    common.add_argument("--walk-steps", dest="walk_steps", help="lattice walk steps L")
    common.add_argument("--tol", help="quadrature relative tolerance")
    common.add_argument("--kinetic", choices=["on", "off"])
    common.add_argument("--kinetic-ratio", dest="kinetic_ratio", help="hbar T / (r0^2 M) in dimensionless runs")
    common.add_argument("--mass", help="particle mass or 'infinite'")
    common.add_argument("--preset", choices=["semiconductor", "cold_atom"])
    common.add_argument("--physical", action="store_const", const="true", default=None,
                        help="report lengths in the config's units instead of R_so")
    p = argparse.ArgumentParser(prog="spinpointer", description="Spin-orbit pointer simulations.")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("profile", parents=[common], help="radial profiles F, U11, |U12|")
    sub.add_parser("density", parents=[common], help="final density on a Cartesian grid")
    sp = sub.add_parser("spinfield", parents=[common], help="spin texture or velocity projection")
    sp.add_argument("--projection", action="store_const", const="true", default=None,
                    help="emit the radial spin-velocity projection instead of the texture")
    sub.add_parser("walk", parents=[common], help="lattice walk time-average distribution")
    sub.add_parser("compare", parents=[common], help="cross-check analytic, oracle and walk routes")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        values = read_config_file(args.config) if args.config else {}
        flags = {k: v for k, v in vars(args).items() if k not in ("command", "config") and v is not None}
        values.update(flags)
        run = resolve(values, args.command)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    try:
        header, rows = HANDLERS[args.command](run)
        write_csv(run.out, run, header, rows, args.command)
    except ConvergenceError as exc:
        print(f"convergence failure: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except ResourceError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
