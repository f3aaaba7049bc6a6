"""Acceptance criteria, one test per criterion.

Each test appends a single ``CRITERION n: PASS|FAIL ...`` line that the
terminal summary prints at the end of the run.  Run standalone with
``python tests/test_acceptance.py``.
"""
import math
import sys
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from spinpointer import analytic as an
from spinpointer import checkerboard as cb
from spinpointer import oracle
from spinpointer.core import (
    VARIANT_ANGLE_TABLE,
    HamiltonianVariant,
    MeasurementConfig,
    Spinor,
    kinetic_neglect_ratio,
)

ETA_X = Spinor(1, 1).normalized()


def record(n, ok, detail):
    ACCEPTANCE_LINES.append(f"CRITERION {n}: {'PASS' if ok else 'FAIL'} {detail}")
    print(ACCEPTANCE_LINES[-1])
    return ok


def _walk_errors(eta, cfg, x, Ls):
    X, Y = np.meshgrid(x, x, indexing="ij")
    ref = an.density(eta, np.hypot(X, Y), np.arctan2(Y, X), cfg, route="exact")
    out = []
    for L in Ls:
        rho = cb.convolved_density(cb.run_walk(eta, L, cfg), x, x, cfg.r0)
        out.append(float(np.abs(rho - ref).max() / ref.max()))
    return np.array(out)


def test_criterion_1_route_equivalence():
    parts, ok = [], True
    for w in (0.2, 0.05):
        cfg = MeasurementConfig.dimensionless(w)
        grid = oracle.default_grid(cfg, 1024)
        t = time.perf_counter()
        ref = oracle.propagate(ETA_X, cfg, grid, include_kinetic=False).density()
        rho = oracle.analytic_field(ETA_X, cfg, grid).density()
        d = oracle.density_discrepancy(rho, ref, grid.dx ** 2).linf
        dt = time.perf_counter() - t
        ok &= d <= 5e-3 and dt <= 10
        parts.append(f"r0={w}: linf={d:.2e} ({dt:.1f}s)")
    assert record(1, ok, "; ".join(parts))


def test_criterion_2_ring_profile():
    cfg = MeasurementConfig.dimensionless(0.02)
    r = np.linspace(0.5, 1.3, 801)
    fa = np.asarray(an.f_asymptotic(r, cfg))
    fc = np.asarray(an.f_convolution(r, cfg))
    gap = float(np.abs(fa - fc).max() / np.abs(fc).max())
    band = (r > 1 - 6 * 0.02) & (r < 1 + 6 * 0.02)
    prof = an.ring_profile(r[band], cfg)
    zeros = prof.zero_crossings()
    lo, hi = r[band][np.argmin(fc[band])], r[band][np.argmax(fc[band])]
    # the overall sign of F is a global phase; the shape requirement is one
    # extremum on each side of a single node, of opposite sign
    inner, outer = (lo, hi) if lo < hi else (hi, lo)
    ok = gap <= 0.02 and zeros.size == 1 and abs(zeros[0] - 1) <= 0.02 and inner < zeros[0] < outer
    assert record(2, ok, f"gap={gap:.2%} of peak; zeros={np.round(zeros, 4).tolist()}; "
                         f"negative lobe at r={lo:.4f}, positive lobe at r={hi:.4f}")


def test_criterion_3_crescent():
    cfg = MeasurementConfig.dimensionless(0.01)
    theta = -np.pi + 2 * np.pi * np.arange(128) / 128
    nodes, weights = an.radial_quadrature(cfg)
    R, T = np.meshgrid(nodes, theta, indexing="ij")
    rho = an.density(ETA_X, R, T, cfg, route="exact")
    angular = (weights[:, None] * nodes[:, None] * rho).sum(axis=0)
    angular /= angular.mean()
    modulation = float(np.abs(angular - (1 + np.cos(theta))).max())
    r_ring = np.linspace(0.9, 1.1, 401)
    peak = float(an.density(ETA_X, r_ring, 0.0, cfg).max())
    node = float(an.density(ETA_X, r_ring, np.pi, cfg).max()) / peak
    exact_node = float(an.density(ETA_X, r_ring, np.pi, cfg, route="exact").max()) / an.peak_density(ETA_X, cfg)
    ok = modulation <= 1e-2 and node < 1e-6
    assert record(3, ok, f"modulation linf={modulation:.1e}; node={node:.1e} of peak "
                         f"(exact-route node depth {exact_node:.1e})")


def test_criterion_4_outward_spin():
    cfg = MeasurementConfig.dimensionless(0.01)
    theta = np.linspace(-np.pi, np.pi, 73)

    def ring_error(eta):
        sx, sy = an.spin_direction(eta, 1.0, theta, cfg)
        err = np.abs(sx - np.cos(theta)) + np.abs(sy - np.sin(theta))
        return float(np.nanmax(err)) if np.isfinite(err).any() else math.inf

    errs = {label: ring_error(eta) for label, eta in
            (("z+", "z+"), ("z-", "z-"), ("tilted", Spinor.from_bloch_angles(2.2, 0.9)))}
    ok = max(errs.values()) <= 2e-2
    # in-plane inputs have a density node on the ring; next to it the O(r0)
    # correction of the exact route sets the direction
    extra = f"; y- (node at theta=pi/2, informational): {ring_error('y-'):.1e}"
    assert record(4, ok, "; ".join(f"{k}: {v:.1e}" for k, v in errs.items()) + extra)


def test_criterion_5_resonance():
    wide = an.find_resonance(MeasurementConfig.dimensionless(0.2))
    narrow = an.find_resonance(MeasurementConfig.dimensionless(0.01))
    balance = abs(abs(wide.u11) - abs(wide.u12_radial)) / abs(wide.u11)
    ok = wide.sigma_v < -0.9 and narrow.sigma_v > 0.5 and balance <= 1e-8
    assert record(5, ok, f"r0=0.2: min={wide.sigma_v:.4f} at r={wide.radius:.5f}, "
                         f"||U11|-|U12||/|U11|={balance:.1e}; r0=0.01: min={narrow.sigma_v:.4f}")


def test_criterion_6_checkerboard_convergence():
    cfg = MeasurementConfig.dimensionless(0.1)
    x = np.linspace(-1.6, 1.6, 193)
    Ls = np.array([64, 128, 256, 512])
    orders = {}
    for eta in ("x+", "z+"):
        errs = _walk_errors(eta, cfg, x, Ls)
        orders[eta] = (-np.polyfit(np.log(Ls), np.log(errs), 1)[0], np.log2(errs[:-1] / errs[1:]))
    # z+ is isotropic and cancels the leading splitting error; x+ is the generic case
    order = orders["x+"][0]
    paths_ok = True
    eta = Spinor.from_bloch_angles(0.8, -1.2)
    for L in range(1, 7):
        state = cb.run_walk(eta, L)
        for (dx, dy), amp in cb.group_paths(cb.enumerate_paths(eta, L)).items():
            paths_ok &= bool(np.allclose(amp, state.amplitude(dx, dy), rtol=0, atol=1e-12))
    ok = abs(order - 1.0) <= 0.2 and paths_ok
    detail = "; ".join(f"{k}: fitted order {v[0]:.2f}, local {np.array2string(v[1], precision=2)}"
                       for k, v in orders.items())
    assert record(6, ok, f"{detail}; path enumeration {'exact' if paths_ok else 'MISMATCH'} for L<=6")


def test_criterion_7_sum_rule():
    parts, ok = [], True
    for w in (0.1, 0.05, 0.02):
        cfg = MeasurementConfig.dimensionless(w)
        exact = an.plane_moments("z+", cfg)["mean_r2"]
        h = w / 4
        x = np.arange(-1 - 6 * w, 1 + 6 * w + h / 2, h)
        X, Y = np.meshgrid(x, x, indexing="ij")
        rho = cb.convolved_density(cb.run_walk("z+", 512, cfg), x, x, w)
        walk = float((rho * (X * X + Y * Y)).sum() / rho.sum())
        ok &= abs(exact - 1) <= 3 * w and abs(walk - 1) <= 3 * w
        parts.append(f"r0={w}: analytic={exact:.5f} walk={walk:.5f}")
    assert record(7, ok, "; ".join(parts))


def test_criterion_8_conservation():
    cfg = MeasurementConfig.dimensionless(0.1)
    quad = an.plane_moments(ETA_X, cfg)["mass"]
    grid = oracle.default_grid(cfg)
    field = oracle.propagate(ETA_X, cfg, grid, include_kinetic=False)
    spectral = field.total_probability()
    eta = Spinor.from_bloch_angles(2.0, 0.7)
    state = cb.run_walk(eta, 512, cfg)
    walk = state.norm()
    amp = float(np.abs(state.amplitude_sum() - eta.as_array()).max())
    r_out = cfg.R_so + 5 * cfg.r0
    out_a = an.plane_moments(ETA_X, cfg, r_min=r_out)["mass"]
    X, Y = field.mesh()
    out_o = float(field.density()[np.hypot(X, Y) > r_out].sum() * field.cell_area) / spectral
    ok = (abs(quad - 1) <= 1e-3 and abs(spectral - 1) <= 1e-10 and abs(walk - 1) <= 1e-12
          and amp <= 1e-12 and out_a < 1e-3 and out_o < 1e-3)
    assert record(8, ok, f"quadrature={quad - 1:+.1e} spectral={spectral - 1:+.1e} walk={walk - 1:+.1e} "
                         f"amplitude_sum={amp:.1e}; mass beyond R+5r0: analytic={out_a:.1e} oracle={out_o:.1e}")


def test_criterion_9_variant_catalogue():
    cfg = MeasurementConfig.dimensionless(0.05)
    textures = {v: an.texture(v, an.default_grid(cfg, 100, 128), cfg) for v in HamiltonianVariant}
    generated = all(t.defined.any() for t in textures.values())
    fine = oracle.fix_variant_table()
    coarse = oracle.fix_variant_table(oracle.SpectralGrid(512, cfg.R_so + 12 * cfg.r0))
    errs = []
    for v in HamiltonianVariant:
        c = cfg.with_variant(v)
        g = oracle.default_grid(c)
        ref = oracle.propagate("z+", c, g, include_kinetic=False)
        errs.append(oracle.ring_direction_error(ref, oracle.analytic_field("z+", c, g), c))
    ok = generated and fine == VARIANT_ANGLE_TABLE and coarse == VARIANT_ANGLE_TABLE and max(errs) <= 1e-2
    assert record(9, ok, f"textures={len(textures)}; direction linf={max(errs):.1e}; "
                         f"table stable n=512/1024: {coarse == fine == VARIANT_ANGLE_TABLE}")


def test_criterion_10_kinetic_diagnostic():
    w = 0.05
    grid = oracle.default_grid(MeasurementConfig.dimensionless(w))
    devs = []
    for ratio in (0.1, 0.03, 0.01):
        cfg = MeasurementConfig.dimensionless(w, kinetic_lambda=ratio * w * w)
        assert kinetic_neglect_ratio(cfg) == pytest.approx(ratio)
        devs.append(oracle.kinetic_deviation(ETA_X, cfg, grid))
    ok = devs[0] > devs[1] > devs[2]
    assert record(10, ok, "deviation at ratio 0.1/0.03/0.01: " + ", ".join(f"{d:.2e}" for d in devs))


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
