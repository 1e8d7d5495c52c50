"""Kernel backend selection: compiled extension if present, NumPy otherwise.

The compiled extension accelerates the single-block kernel (the hot loop of
the training experiments) with a fused two-pass accumulation over each
unit's contiguous active range.  The two-block kernel is matrix-product
bound and stays on the NumPy/BLAS route in both backends.  Either way the
reduction order is fixed, so traces are reproducible bit for bit within a
backend.
"""

from __future__ import annotations

from . import _kernels_numpy

try:
    from . import _kernels as _ext
except ImportError:  # pragma: no cover - depends on the build environment
    _ext = None


def backend_name() -> str:
    return "cython" if _ext is not None else "numpy"


def single_block_loss_grad(w, wt, wx, b, c, m, t, x, f, g, wq):
    if _ext is not None:
        return _ext.single_block_loss_grad(w, wt, wx, b, c, m, t, x, f, g, wq)
    return _kernels_numpy.single_block_loss_grad(w, wt, wx, b, c, m, t, x, f, g, wq)


def two_block_loss_grad(w, wt, wx, bt, bx, c, m1, m2, t, x, f, g, wq):
    return _kernels_numpy.two_block_loss_grad(w, wt, wx, bt, bx, c, m1, m2,
                                              t, x, f, g, wq)
