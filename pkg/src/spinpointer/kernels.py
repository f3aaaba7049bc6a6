"""Backend selection for the hot loops.

The compiled extension ``_ckernels`` is used when importable; otherwise the
numpy implementation in ``_pykernels`` is used. Setting the environment
variable ``SPINPOINTER_PURE=1`` forces the numpy path.
"""

import os

from . import _pykernels

if os.environ.get("SPINPOINTER_PURE", "") not in ("", "0"):
    _impl = _pykernels
    BACKEND = "python"
else:
    try:
        from . import _ckernels as _impl
        BACKEND = "cython"
    except ImportError:
        _impl = _pykernels
        BACKEND = "python"

bessel = _impl.bessel
bessel_series = _impl.bessel_series
bessel_hankel = _impl.bessel_hankel
bessel_weighted_sum = _impl.bessel_weighted_sum
walk_step = _impl.walk_step

__all__ = [
    "BACKEND",
    "bessel",
    "bessel_series",
    "bessel_hankel",
    "bessel_weighted_sum",
    "walk_step",
]
