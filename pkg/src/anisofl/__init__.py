"""Anisotropic weighted Fourier-Lebesgue norms and two-block approximation tools."""

__version__ = "0.1.0"

from .grid import (
    TensorGrid,
    GridFunction,
    dft_forward,
    dft_inverse,
    dft_block,
    spectral_derivative,
)

__all__ = [
    "__version__",
    "TensorGrid",
    "GridFunction",
    "dft_forward",
    "dft_inverse",
    "dft_block",
    "spectral_derivative",
]
