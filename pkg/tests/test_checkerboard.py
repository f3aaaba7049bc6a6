import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spinpointer import analytic as an
from spinpointer import checkerboard as cb
from spinpointer.core import DomainError, MeasurementConfig, ResourceError, Spinor


@pytest.fixture(scope="module")
def walk64():
    return cb.run_walk("z+", 64)


def test_single_step_four_sites(backend):
    s = cb.run_walk("z+", 1)
    sites = s.sites(cutoff=1e-15)
    assert set(sites) == {(1, 1), (1, -1), (-1, 1), (-1, -1)}
    for amp in sites.values():
        assert np.sum(np.abs(amp) ** 2) == pytest.approx(0.25, abs=1e-15)


def test_eigenstate_does_not_split():
    out = cb.sparse_substep({(0, 0): Spinor.named("x+").as_array()}, "x")
    live = {k: v for k, v in out.items() if np.abs(v).max() > 1e-15}
    assert list(live) == [(1, 0)]
    np.testing.assert_allclose(live[(1, 0)], Spinor.named("x+").as_array(), atol=1e-15)


def test_trotter_step_norm(backend):
    s = cb.LatticeState.point_source(Spinor.from_bloch_angles(1.1, 0.3))
    for _ in range(5):
        s = cb.trotter_step(s)
        assert s.norm() == pytest.approx(1.0, abs=1e-15)
    with pytest.raises(DomainError):
        cb.trotter_step(s, "y_then_x")


@settings(max_examples=25, deadline=None)
@given(eta=st.tuples(*[st.floats(-1, 1) for _ in range(4)]).filter(lambda t: sum(x * x for x in t) > 1e-2),
       L=st.integers(1, 40))
def test_norm_and_amplitude_sum(eta, L):
    s = Spinor(complex(eta[0], eta[1]), complex(eta[2], eta[3])).normalized()
    state = cb.run_walk(s, L)
    assert state.norm() == pytest.approx(1.0, abs=1e-12)
    np.testing.assert_allclose(state.amplitude_sum(), s.as_array(), atol=1e-13)


def test_parity_and_support(walk64):
    L = walk64.steps
    for (jx, jy) in walk64.sites(cutoff=0.0):
        assert (jx - L) % 2 == 0 and (jy - L) % 2 == 0
        assert abs(jx) <= L and abs(jy) <= L
    assert np.abs(walk64.amplitude(1, 0)).max() == 0.0
    assert np.abs(walk64.amplitude(L + 2, 0)).max() == 0.0
    assert walk64.positions.max() == pytest.approx(1.0)


def test_run_walk_guards():
    with pytest.raises(DomainError):
        cb.run_walk("z+", 0)
    with pytest.raises(DomainError):
        cb.run_walk("z+", 2.5)
    with pytest.raises(ResourceError):
        cb.run_walk("z+", cb.MAX_STEPS + 1)
    with pytest.raises(DomainError):
        cb.run_walk((1, 1), 3)


def test_lattice_state_shape_checked():
    with pytest.raises(DomainError):
        cb.LatticeState(2, 0.5, 1.0, np.zeros((2, 2, 2), dtype=complex))


@pytest.mark.parametrize("L", [1, 2, 3, 4, 5, 6])
def test_path_sum_equals_walk(L):
    eta = Spinor.from_bloch_angles(0.8, -1.2)
    grouped = cb.group_paths(cb.enumerate_paths(eta, L))
    state = cb.run_walk(eta, L)
    assert len(grouped) == (L + 1) ** 2
    for (dx, dy), amp in grouped.items():
        np.testing.assert_allclose(amp, state.amplitude(dx, dy), rtol=0, atol=1e-12)


def test_sparse_walk_equals_dense():
    eta = Spinor.named("y+")
    sparse = cb.sparse_walk(eta, 7)
    dense = cb.run_walk(eta, 7)
    for site, amp in sparse.items():
        np.testing.assert_allclose(amp, dense.amplitude(*site), atol=1e-14)


def test_path_time_averages():
    paths = cb.enumerate_paths("z+", 6)
    assert len(paths) == 4 ** 6
    p = next(p for p in paths if p.delta[0] == 2)
    assert p.time_averages[0] == pytest.approx(1 / 3)
    q = next(p for p in paths if p.delta[1] == 0)
    assert q.time_averages[1] == 0.0
    for p in paths[::97]:
        sx, sy = p.time_averages
        assert -1 <= sx <= 1 and -1 <= sy <= 1


def test_enumeration_guard():
    with pytest.raises(ResourceError):
        cb.enumerate_paths("z+", cb.MAX_PATH_STEPS + 1)
    with pytest.raises(DomainError):
        cb.enumerate_paths("z+", 0)


def test_time_average_distribution_symmetry(walk64):
    d = cb.time_average_distribution(walk64)
    table = {(round(x * 64), round(y * 64)): p for x, y, p in d.rows()}
    for (jx, jy), p in table.items():
        assert table[(-jx, -jy)] == pytest.approx(p, abs=1e-14)
    assert np.all(np.abs(d.sigma_x) <= 1) and np.all(np.abs(d.sigma_y) <= 1)
    assert d.probability.sum() == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("L", [64, 256])
def test_time_average_inside_unit_disk(L):
    # the front spills past the unit circle by about 3/L
    d = cb.time_average_distribution(cb.run_walk("z+", L))
    r = np.hypot(d.sigma_x, d.sigma_y)
    assert d.probability[r > 1 + 4 / L].sum() < 1e-3


@pytest.mark.xfail(strict=True, reason="point-source walk mean radius^2 tends to 0.727, not 1")
def test_point_source_sum_rule():
    d = cb.time_average_distribution(cb.run_walk("z+", 512))
    assert abs(d.mean_square_radius() - 1) <= 0.05


def test_point_source_mean_radius_is_lattice_constant():
    # without the Gaussian the walk keeps all lattice-scale modes; <r^2> settles at 0.727
    values = [cb.time_average_distribution(cb.run_walk("z+", L)).mean_square_radius() for L in (128, 256, 512)]
    assert np.ptp(values) < 2e-3
    assert values[-1] == pytest.approx(0.7268, abs=2e-3)


def test_no_intrinsic_time_scale():
    a = cb.run_walk("x+", 32, MeasurementConfig(1.0, 1.0, 0.1))
    b = cb.run_walk("x+", 32, MeasurementConfig(4.0, 0.25, 0.1))
    assert b.epsilon == pytest.approx(a.epsilon / 4)
    np.testing.assert_allclose(a.positions, b.positions, atol=1e-15)
    np.testing.assert_array_equal(a.amplitudes, b.amplitudes)


def test_gaussian_factor_normalized():
    x = np.linspace(-1, 1, 4001)
    g = cb.gaussian_factor(x, [0.0], 0.05)[:, 0]
    assert np.sum(g ** 2) * (x[1] - x[0]) == pytest.approx(1.0, abs=1e-12)


def test_convolved_walk_matches_exact_route():
    cfg = MeasurementConfig.dimensionless(0.05)
    state = cb.run_walk("z+", 512, cfg)
    x = np.linspace(-1.3, 1.3, 261)
    rho = cb.convolved_density(state, x, x, cfg.r0)
    assert rho.sum() * (x[1] - x[0]) ** 2 == pytest.approx(1.0, abs=1e-6)
    X, Y = np.meshgrid(x, x, indexing="ij")
    a, b = an.radial_interpolant(cfg, 2.0)(np.hypot(X, Y))
    ref = a * a + b * b
    assert np.abs(rho - ref).max() <= 0.02 * ref.max()


def _convolved(L, eta="x+", w=0.1, n=193):
    cfg = MeasurementConfig.dimensionless(w)
    x = np.linspace(-1.0 - 6 * w, 1.0 + 6 * w, n)
    return cb.convolved_density(cb.run_walk(eta, L, cfg), x, x, w)


@pytest.mark.xfail(strict=True, reason="difference ratio between L = 64/128 and 128/256 measured near 4.3")
def test_self_convergence_ratio_at_64():
    d1 = np.abs(_convolved(64) - _convolved(128)).max()
    d2 = np.abs(_convolved(128) - _convolved(256)).max()
    assert d1 / d2 == pytest.approx(2.0, abs=0.3)


def test_self_convergence_ratio_asymptotic():
    # first order sets in once the lattice resolves the ring width several times over
    d1 = np.abs(_convolved(256) - _convolved(512)).max()
    d2 = np.abs(_convolved(512) - _convolved(1024)).max()
    assert d1 / d2 == pytest.approx(2.0, abs=0.3)


def test_unitarity_1024_steps():
    s = cb.run_walk(Spinor.from_bloch_angles(2.0, 0.7), 1024)
    assert s.norm() == pytest.approx(1.0, abs=1e-12)


@pytest.mark.slow
def test_unitarity_4096_steps():
    eta = Spinor.from_bloch_angles(2.0, 0.7)
    s = cb.run_walk(eta, 4096)
    assert s.norm() == pytest.approx(1.0, abs=1e-12)
    np.testing.assert_allclose(s.amplitude_sum(), eta.as_array(), atol=1e-12)
