"""Mixed Lebesgue, weighted Fourier-Lebesgue, and two-block Sobolev norms.

All norms share one quadrature core: cell-fraction weights restrict the
integral to a domain per axis block, the inner block is integrated first,
and an infinite exponent turns the corresponding integral into a masked
supremum.  Frequency-side norms report how much of the value lives in the
outermost tenth of the lattice, as a truncation diagnostic.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .domains import Domain
from .grid import GridFunction, TensorGrid, dft_forward, spectral_derivative
from .weights import Weight

__all__ = [
    "NormResult",
    "mixed_lebesgue_norm",
    "fourier_lebesgue_norm",
    "bochner_sobolev_norm",
    "spectral_barron_norm",
]


@dataclass
class NormResult:
    value: float
    tail_fraction: float
    converged: bool

    def __float__(self):
        return self.value


def _check_exponent(p):
    if not (p == math.inf or p >= 1.0):
        raise ValueError(f"exponent must lie in [1, inf], got {p}")
    return float(p)


def _block_weights(grid: TensorGrid, block: int, domain: Domain | None):
    """Per-cell quadrature mass for one axis block (fraction times volume)."""
    axes = grid.block_axes(block)
    if not axes:
        return np.ones(()), np.ones((), dtype=bool)
    nodes = [grid.axis_nodes(a) for a in axes]
    spac = [grid.spacing[a] for a in axes]
    vol = float(np.prod(spac))
    if domain is None:
        shape = tuple(grid.points[a] for a in axes)
        return np.full(shape, vol), np.ones(shape, dtype=bool)
    if domain.dim != len(axes):
        raise ValueError(
            f"domain dimension {domain.dim} does not match block size {len(axes)}"
        )
    frac = domain.cell_fractions(nodes, spac)
    return frac * vol, frac > 1e-12


def _mixed_norm_core(values, w1, m1, w2, m2, p1, p2):
    """( int_U ( int_V |u|^p2 )^{p1/p2} )^{1/p1} with masses w and masks m."""
    a = np.abs(np.asarray(values, dtype=float))
    n1 = int(np.prod(w1.shape)) if w1.shape else 1
    n2 = int(np.prod(w2.shape)) if w2.shape else 1
    a = a.reshape(n1, n2)
    if p2 == math.inf:
        mask2 = m2.reshape(n2)
        inner = np.max(np.where(mask2[None, :], a, 0.0), axis=1)
    else:
        inner = (a**p2 @ w2.reshape(n2)) ** (1.0 / p2)
    if p1 == math.inf:
        mask1 = m1.reshape(n1)
        return float(np.max(np.where(mask1, inner, 0.0)))
    return float((inner**p1 @ w1.reshape(n1)) ** (1.0 / p1))


def mixed_lebesgue_norm(f: GridFunction, exponents, U: Domain | None = None,
                        V: Domain | None = None) -> float:
    """Outer block-1 exponent, inner block-2 exponent; None domain = window."""
    p1 = _check_exponent(exponents[0])
    p2 = _check_exponent(exponents[1])
    w1, m1 = _block_weights(f.grid, 1, U)
    w2, m2 = _block_weights(f.grid, 2, V)
    return _mixed_norm_core(f.values, w1, m1, w2, m2, p1, p2)


def _weight_on_frequencies(w: Weight, grid: TensorGrid) -> np.ndarray:
    d1, d2 = grid.block_dims
    if w.block_split != (d1, d2):
        raise ValueError(
            f"weight block split {w.block_split} does not match grid {grid.block_dims}"
        )
    mesh = grid.frequency_meshgrid()
    if d1 == 0:
        x1 = 0.0
    elif d1 == 1:
        x1 = mesh[0]
    else:
        x1 = np.stack(mesh[:d1], axis=-1)
    if d2 == 0:
        x2 = 0.0
    elif d2 == 1:
        x2 = mesh[d1]
    else:
        x2 = np.stack(mesh[d1:], axis=-1)
    return w(x1, x2)


def _frequency_masses(grid: TensorGrid, block: int):
    axes = grid.block_axes(block)
    if not axes:
        return np.ones(()), np.ones((), dtype=bool)
    shape = tuple(grid.points[a] for a in axes)
    d_xi = 1.0
    for a in axes:
        d_xi *= 2.0 * math.pi / (grid.upper[a] - grid.lower[a])
    return np.full(shape, d_xi), np.ones(shape, dtype=bool)


def _tail_mask(grid: TensorGrid) -> np.ndarray:
    """True on lattice points whose any coordinate reaches the outer 10%."""
    mask = np.zeros(tuple(grid.points), dtype=bool)
    for a in range(grid.dim):
        xi = np.abs(grid.axis_frequencies(a))
        cut = 0.9 * xi.max()
        shape = [1] * grid.dim
        shape[a] = -1
        mask |= (xi >= cut).reshape(shape)
    return mask


def fourier_lebesgue_norm(f: GridFunction, exponents, weight: Weight | None = None
                          ) -> NormResult:
    """|| omega * F f ||_{L^{p,q}} over the discrete frequency lattice.

    tail_fraction reports how much of the value is lost when the outermost
    10% frequency shell is zeroed; convergence means a tail below 5%.
    """
    p1 = _check_exponent(exponents[0])
    p2 = _check_exponent(exponents[1])
    grid = f.grid
    fhat = np.abs(dft_forward(f).values)
    if weight is not None:
        fhat = fhat * _weight_on_frequencies(weight, grid)
    w1, m1 = _frequency_masses(grid, 1)
    w2, m2 = _frequency_masses(grid, 2)
    full = _mixed_norm_core(fhat, w1, m1, w2, m2, p1, p2)
    interior = fhat * ~_tail_mask(grid)
    inner = _mixed_norm_core(interior, w1, m1, w2, m2, p1, p2)
    tail = 0.0 if full == 0 else max(0.0, 1.0 - inner / full)
    return NormResult(full, tail, tail <= 0.05)


def spectral_barron_norm(f: GridFunction, weight: Weight | None = None) -> NormResult:
    """Weighted L1 mass of the transform (the p = q = 1 frequency norm)."""
    return fourier_lebesgue_norm(f, (1.0, 1.0), weight)


def _multi_indices(d: int, max_order: int):
    if d == 0:
        return [()]
    out = []
    for total in range(max_order + 1):
        for c in itertools.combinations_with_replacement(range(d), total):
            alpha = [0] * d
            for a in c:
                alpha[a] += 1
            out.append(tuple(alpha))
    return sorted(set(out))


def _fd_derivative(values: np.ndarray, axis: int, h: float, order: int) -> np.ndarray:
    """Repeated 4th-order central first derivative with periodic wrap."""
    out = values
    for _ in range(order):
        p1 = np.roll(out, -1, axis)
        p2 = np.roll(out, -2, axis)
        m1 = np.roll(out, 1, axis)
        m2 = np.roll(out, 2, axis)
        out = (-p2 + 8.0 * p1 - 8.0 * m1 + m2) / (12.0 * h)
    return out


def _derivative_field(f: GridFunction, alpha, beta, mode: str) -> np.ndarray:
    grid = f.grid
    d1 = grid.block_dims[0]
    orders = tuple(alpha) + tuple(beta)
    if mode == "spectral":
        g = f
        for axis, k in enumerate(orders):
            if k:
                g = spectral_derivative(g, axis, k)
        return g.values
    if mode == "fd":
        vals = np.asarray(f.values, dtype=float)
        for axis, k in enumerate(orders):
            if k:
                vals = _fd_derivative(vals, axis, grid.spacing[axis], k)
        return vals
    raise ValueError(f"mode must be 'spectral' or 'fd', got {mode!r}")


def bochner_sobolev_norm(f: GridFunction, orders, exponents, U: Domain | None = None,
                         V: Domain | None = None, mode: str = "spectral") -> float:
    """Two-block Sobolev norm with the inner derivative sum closed first.

    value = ( sum_{|a|<=n1} || ( sum_{|b|<=n2} ||D^b D^a f||_{L^{p2}(V)}^{p2}
    )^{1/p2} ||_{L^{p1}(U)}^{p1} )^{1/p1}, with the usual max conventions
    when an exponent is infinite.  Finite-difference mode wraps around the
    window, so keep the domains away from its edge in that mode.
    """
    n1, n2 = int(orders[0]), int(orders[1])
    if n1 < 0 or n2 < 0:
        raise ValueError("derivative orders must be nonnegative")
    p1 = _check_exponent(exponents[0])
    p2 = _check_exponent(exponents[1])
    grid = f.grid
    d1, d2 = grid.block_dims
    w1, m1 = _block_weights(grid, 1, U)
    w2, m2 = _block_weights(grid, 2, V)
    n1_flat = int(np.prod(w1.shape)) if w1.shape else 1
    n2_flat = int(np.prod(w2.shape)) if w2.shape else 1

    outer_acc = None  # per-block-1-point accumulator across alpha
    for alpha in _multi_indices(d1, n1):
        inner_acc = None  # per-point accumulator across beta
        for beta in _multi_indices(d2, n2):
            g = np.abs(_derivative_field(f, alpha, beta, mode)).reshape(n1_flat, n2_flat)
            if p2 == math.inf:
                term = np.max(np.where(m2.reshape(n2_flat)[None, :], g, 0.0), axis=1)
                inner_acc = term if inner_acc is None else np.maximum(inner_acc, term)
            else:
                term = g**p2 @ w2.reshape(n2_flat)
                inner_acc = term if inner_acc is None else inner_acc + term
        inner = inner_acc if p2 == math.inf else inner_acc ** (1.0 / p2)
        if p1 == math.inf:
            val = np.max(np.where(m1.reshape(n1_flat), inner, 0.0))
            outer_acc = val if outer_acc is None else max(outer_acc, val)
        else:
            val = inner**p1 @ w1.reshape(n1_flat)
            outer_acc = val if outer_acc is None else outer_acc + val
    if p1 == math.inf:
        return float(outer_acc)
    return float(outer_acc ** (1.0 / p1))
