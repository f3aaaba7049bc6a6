import os
import subprocess
import sys

import mpmath
import numpy as np
import pytest

from spinpointer import _pykernels, kernels

from conftest import BACKENDS, backend_module


def mp_bessel(order, z):
    return float(mpmath.besselj(order, mpmath.mpf(float(z))))


SAMPLE_Z = np.concatenate([
    [0.0, 1e-8, 0.3, 1.0, 2.404825557695773, 5.0, 11.999999, 12.0, 12.000001, 30.0, 99.5],
    np.geomspace(12.0, 1e4, 25),
    np.linspace(0.0, 12.0, 25),
])


@pytest.mark.parametrize("order", [0, 1])
def test_bessel_against_mpmath(backend, order):
    ref = np.array([mp_bessel(order, z) for z in SAMPLE_Z])
    got = kernels.bessel(order, SAMPLE_Z)
    assert np.max(np.abs(got - ref)) <= 1e-12


@pytest.mark.parametrize("order", [0, 1])
def test_seam_continuity(backend, order):
    z = np.array([12.0])
    series = kernels.bessel_series(order, z)[0]
    hankel = kernels.bessel_hankel(order, z)[0]
    assert abs(series - hankel) <= 1e-11


def test_weighted_sum_matches_dense(backend):
    rng = np.random.default_rng(3)
    k = np.sort(rng.uniform(0, 80, 300))
    w = rng.normal(size=k.size)
    r = np.linspace(0, 1.5, 17)
    for order in (0, 1):
        dense = w @ _pykernels.bessel(order, np.multiply.outer(k, r))
        np.testing.assert_allclose(kernels.bessel_weighted_sum(order, k, w, r), dense, rtol=0, atol=1e-11)


@pytest.mark.skipif(len(BACKENDS) < 2, reason="compiled backend not built")
def test_walk_step_backends_agree():
    py, c = backend_module("numpy"), backend_module("compiled")
    rng = np.random.default_rng(7)
    L = 40
    a = np.zeros((L + 1, L + 1, 2), dtype=complex)
    a[0, 0] = rng.normal(size=2) + 1j * rng.normal(size=2)
    b = a.copy()
    for t in range(L):
        py.walk_step(a, t)
        c.walk_step(b, t)
    np.testing.assert_allclose(a, b, rtol=0, atol=1e-15)


@pytest.mark.skipif(len(BACKENDS) < 2, reason="compiled backend not built")
def test_bessel_backends_agree():
    z = np.linspace(0, 500, 10001)
    py, c = backend_module("numpy"), backend_module("compiled")
    for order in (0, 1):
        np.testing.assert_allclose(py.bessel(order, z), c.bessel(order, z), rtol=0, atol=1e-14)


def test_walk_step_rejects_small_buffer(backend):
    buf = np.zeros((2, 2, 2), dtype=complex)
    with pytest.raises(ValueError):
        kernels.walk_step(buf, 1)


def test_pure_environment_forces_numpy():
    code = "from spinpointer import kernels; print(kernels.BACKEND)"
    env = dict(os.environ, SPINPOINTER_PURE="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


def test_backend_name():
    assert kernels.BACKEND in ("cython", "python")
