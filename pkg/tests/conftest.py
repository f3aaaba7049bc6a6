import importlib

import pytest

from spinpointer import kernels

ACCEPTANCE_LINES: list[str] = []


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run tests marked slow")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip = pytest.mark.skip(reason="slow; use --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def _available_backends():
    names = ["numpy"]
    try:
        importlib.import_module("spinpointer._ckernels")
        names.append("compiled")
    except ImportError:
        pass
    return names


BACKENDS = _available_backends()


def backend_module(name):
    return importlib.import_module("spinpointer._ckernels" if name == "compiled" else "spinpointer._pykernels")


@pytest.fixture(params=BACKENDS)
def backend(request, monkeypatch):
    """Route every kernel call through one backend for the duration of a test."""
    mod = backend_module(request.param)
    for name in ("bessel", "bessel_series", "bessel_hankel", "bessel_weighted_sum", "walk_step"):
        monkeypatch.setattr(kernels, name, getattr(mod, name))
    return request.param
