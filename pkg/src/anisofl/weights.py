"""Weight functions on two-block variables, with ellipticity/moderateness checks.

A weight takes two block arguments ``x1`` (shape ``(..., d1)``) and ``x2``
(shape ``(..., d2)``) and returns a strictly positive array of shape
``(...,)``.  All built-in families are radial per block.  Evaluation is done
in log space internally so that fast-growing families (``exp_power``) never
overflow inside the ratio checks.

``check_elliptic(w, lower)`` certifies the domination ``lower <= c * w`` on a
sampled range (radial ladders plus random draws) and reports the observed
constant; ``check_moderate`` does the same for translation moderateness
``w(z+z') <= c * w(z) * v(z')``.  These are empirical certificates with
witnesses, not proofs.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Weight",
    "bessel_power",
    "product_bessel",
    "exp_power",
    "shifted_bessel_product",
    "custom_table",
    "constant_weight",
    "outer_product_weight",
    "SamplePlan",
    "EllipticityReport",
    "check_elliptic",
    "check_moderate",
    "make_clamped_weight",
    "make_rate_weight",
    "parse_weight",
]


def _block_radius(x, d):
    x = np.asarray(x, dtype=float)
    if d == 0:
        return np.zeros(x.shape[:-1] if x.ndim else ())
    if x.ndim == 0 or x.shape[-1] != d:
        # allow scalars for d=1 convenience
        if d == 1:
            return np.abs(np.asarray(x, dtype=float))
        raise ValueError(f"expected trailing dimension {d}")
    return np.sqrt(np.sum(x * x, axis=-1))


@dataclass(frozen=True)
class Weight:
    """Base weight; subclasses implement log_eval_radial(r1, r2)."""

    block_split: tuple[int, int] = (1, 1)

    def log_eval_radial(self, r1, r2):
        raise NotImplementedError

    def log_eval(self, x1, x2):
        d1, d2 = self.block_split
        return self.log_eval_radial(_block_radius(x1, d1), _block_radius(x2, d2))

    def eval(self, x1, x2):
        out = np.exp(self.log_eval(x1, x2))
        if not np.all(np.isfinite(out)) or np.any(out <= 0):
            raise ValueError("weight evaluated to a nonpositive or non-finite value")
        return out

    def __call__(self, x1, x2):
        return self.eval(x1, x2)

    def describe(self) -> str:
        return type(self).__name__


@dataclass(frozen=True)
class BesselPower(Weight):
    """<(x1,x2)>^s on the joint vector."""

    s: float = 0.0

    def log_eval_radial(self, r1, r2):
        return 0.5 * self.s * np.log1p(r1 * r1 + r2 * r2)

    def describe(self):
        return f"bessel_power({self.s})"


@dataclass(frozen=True)
class ProductBessel(Weight):
    """<x1>^{n1} <x2>^{n2}."""

    n1: float = 0.0
    n2: float = 0.0

    def log_eval_radial(self, r1, r2):
        return 0.5 * self.n1 * np.log1p(r1 * r1) + 0.5 * self.n2 * np.log1p(r2 * r2)

    def describe(self):
        return f"product_bessel({self.n1},{self.n2})"


@dataclass(frozen=True)
class ExpPower(Weight):
    """exp(r (|x1|^s + |x2|^s)); submultiplicative for 0 < s <= 1."""

    r: float = 1.0
    s: float = 1.0

    def __post_init__(self):
        if self.r <= 0 or self.s <= 0:
            raise ValueError("exp_power requires r > 0 and s > 0")

    def log_eval_radial(self, r1, r2):
        return self.r * (r1**self.s + r2**self.s)

    def describe(self):
        return f"exp_power({self.r},{self.s})"


@dataclass(frozen=True)
class ShiftedBesselProduct(Weight):
    """<x1>^{g1} <x2>^{g2} carrying its decay exponents as metadata.

    This is the family used for the bias-space weight: the clamped weight
    built by :func:`make_clamped_weight` shifts its arguments, and the decay
    exponents (g1, g2) feed the bias-integral bounds downstream.
    """

    gamma1: float = 2.0
    gamma2: float = 2.0

    def log_eval_radial(self, r1, r2):
        return 0.5 * self.gamma1 * np.log1p(r1 * r1) + 0.5 * self.gamma2 * np.log1p(
            r2 * r2
        )

    def describe(self):
        return f"shifted_bessel_product({self.gamma1},{self.gamma2})"


@dataclass(frozen=True)
class CustomTable(Weight):
    """Tabulated weight, nearest-sample extended outside the table.

    The table is a GridFunction; lookups snap each block argument to the
    nearest grid node (clamped to the window).
    """

    table: object = None  # GridFunction

    def log_eval(self, x1, x2):
        g = self.table.grid
        d1, d2 = self.block_split
        pts = []
        x1 = np.asarray(x1, dtype=float)
        x2 = np.asarray(x2, dtype=float)
        if d1 == 1 and x1.ndim == 0:
            x1 = x1[None]
        if d2 == 1 and x2.ndim == 0:
            x2 = x2[None]
        joint = np.concatenate(
            [np.atleast_1d(x1).reshape(x1.shape[:-1] + (d1,)) if d1 else x1,
             np.atleast_1d(x2).reshape(x2.shape[:-1] + (d2,)) if d2 else x2],
            axis=-1,
        )
        idx = []
        for a in range(g.dim):
            h = g.spacing[a]
            i = np.rint((joint[..., a] - g.lower[a]) / h).astype(int)
            idx.append(np.clip(i, 0, g.points[a] - 1))
        vals = self.table.values[tuple(idx)]
        if np.any(vals <= 0):
            raise ValueError("custom_table weight must be strictly positive")
        return np.log(vals)

    def log_eval_radial(self, r1, r2):
        raise NotImplementedError("custom tables are not radial")

    def describe(self):
        return "custom_table(...)"


@dataclass(frozen=True)
class ConstantWeight(Weight):
    value: float = 1.0

    def log_eval_radial(self, r1, r2):
        return np.broadcast_to(np.log(self.value), np.broadcast_shapes(
            np.shape(r1), np.shape(r2))).copy()

    def describe(self):
        return f"constant({self.value})"


@dataclass(frozen=True)
class ProductOfWeights(Weight):
    factors: tuple = ()

    def log_eval_radial(self, r1, r2):
        return sum(w.log_eval_radial(r1, r2) for w in self.factors)

    def log_eval(self, x1, x2):
        return sum(w.log_eval(x1, x2) for w in self.factors)

    def describe(self):
        return " * ".join(w.describe() for w in self.factors)


@dataclass(frozen=True)
class OuterProductWeight(Weight):
    """w(x1, x2) = theta1(x1) * theta2(x2) from two single-block weights."""

    theta1: Weight | None = None
    theta2: Weight | None = None

    def log_eval_radial(self, r1, r2):
        return (self.theta1.log_eval_radial(r1, 0.0)
                + self.theta2.log_eval_radial(r2, 0.0))

    def describe(self):
        return f"({self.theta1.describe()}) x ({self.theta2.describe()})"


def outer_product_weight(theta1: Weight, theta2: Weight) -> OuterProductWeight:
    """Tensorize two single-block weights into one two-block weight."""
    d1 = theta1.block_split[0]
    d2 = theta2.block_split[0]
    if theta1.block_split[1] or theta2.block_split[1]:
        raise ValueError("factors must be single-block weights (block_split (d, 0))")
    return OuterProductWeight(block_split=(d1, d2), theta1=theta1, theta2=theta2)


# -- constructors (CLI-facing names) ----------------------------------------

def bessel_power(s, block_split=(1, 1)):
    return BesselPower(block_split=tuple(block_split), s=float(s))


def product_bessel(n1, n2, block_split=(1, 1)):
    return ProductBessel(block_split=tuple(block_split), n1=float(n1), n2=float(n2))


def exp_power(r, s, block_split=(1, 1)):
    return ExpPower(block_split=tuple(block_split), r=float(r), s=float(s))


def shifted_bessel_product(gamma1, gamma2, block_split=(1, 1)):
    return ShiftedBesselProduct(
        block_split=tuple(block_split), gamma1=float(gamma1), gamma2=float(gamma2)
    )


def custom_table(table, block_split=(1, 1)):
    return CustomTable(block_split=tuple(block_split), table=table)


def constant_weight(value=1.0, block_split=(1, 1)):
    return ConstantWeight(block_split=tuple(block_split), value=float(value))


_WEIGHT_RE = re.compile(r"^\s*([a-z_]+)\s*\(([^)]*)\)\s*$")


def parse_weight(text: str, block_split=(1, 1)) -> Weight:
    """Parse CLI syntax like ``product_bessel(2,3)`` into a Weight."""
    m = _WEIGHT_RE.match(text)
    if not m:
        raise ValueError(f"cannot parse weight expression {text!r}")
    name, argtext = m.group(1), m.group(2)
    args = [float(a) for a in argtext.split(",") if a.strip()] if argtext.strip() else []
    table = {
        "bessel_power": bessel_power,
        "product_bessel": product_bessel,
        "exp_power": exp_power,
        "shifted_bessel_product": shifted_bessel_product,
        "constant": constant_weight,
    }
    if name not in table:
        raise ValueError(f"unknown weight family {name!r}")
    return table[name](*args, block_split=block_split)


# -- sampled condition checks ------------------------------------------------

@dataclass(frozen=True)
class SamplePlan:
    """Radial ladder plus random draws used by the condition checks."""

    n_random: int = 2048
    radii: tuple = tuple(np.geomspace(1e-3, 1e3, 37)) + (0.0,)
    directions_per_radius: int = 8
    seed: int = 0


@dataclass
class EllipticityReport:
    holds: bool
    constant_c: float
    witness: tuple
    shell_log_sups: list = field(default_factory=list)

    def __bool__(self):
        return self.holds


def _plan_points(plan: SamplePlan, d1: int, d2: int):
    """Structured + random sample points as arrays (n, d1), (n, d2)."""
    rng = np.random.default_rng(plan.seed)
    pts1, pts2 = [], []
    # radial ladder: per-block radii on a grid of (r1, r2) pairs
    for r1 in plan.radii:
        for r2 in plan.radii:
            for _ in range(plan.directions_per_radius):
                u1 = rng.normal(size=d1)
                u1 = u1 / (np.linalg.norm(u1) or 1.0) if d1 else u1
                u2 = rng.normal(size=d2)
                u2 = u2 / (np.linalg.norm(u2) or 1.0) if d2 else u2
                pts1.append(r1 * u1)
                pts2.append(r2 * u2)
    # random cloud at mixed scales
    scales = rng.choice([0.1, 1.0, 10.0, 100.0], size=plan.n_random)
    pts1.append(rng.normal(size=(plan.n_random, d1)) * scales[:, None])
    pts2.append(rng.normal(size=(plan.n_random, d2)) * scales[:, None])
    x1 = np.concatenate([np.atleast_2d(p) for p in pts1], axis=0)
    x2 = np.concatenate([np.atleast_2d(p) for p in pts2], axis=0)
    return x1, x2


_SHELL_EDGES = (0.0, 1.0, 10.0, 100.0, 1e3, np.inf)
_GROWTH_TOL = np.log(1.05)  # ratio sup may grow 5% per decade before flagged


def _growth_verdict(log_ratio, radius):
    """Shell-wise sups of the log ratio; growing tail => unbounded."""
    shell_sups = []
    for lo, hi in zip(_SHELL_EDGES[:-1], _SHELL_EDGES[1:]):
        mask = (radius >= lo) & (radius < hi)
        shell_sups.append(np.max(log_ratio[mask]) if np.any(mask) else -np.inf)
    # compare the outermost populated shells: persistent growth means the
    # sampled sup has not saturated and the ratio is unbounded
    populated = [s for s in shell_sups if np.isfinite(s)]
    holds = True
    if len(populated) >= 2 and populated[-1] > populated[-2] + _GROWTH_TOL:
        holds = False
    return holds, shell_sups


def check_elliptic(w: Weight, lower: Weight, plan: SamplePlan | None = None) -> EllipticityReport:
    """Certify ``lower(x) <= c * w(x)`` on the sampled range.

    Returns the observed constant ``c = sup lower/w`` and whether the sup is
    saturated (no growth trend across the outer radius shells).
    """
    plan = plan or SamplePlan()
    d1, d2 = w.block_split
    if lower.block_split != (d1, d2):
        raise ValueError("block splits differ")
    x1, x2 = _plan_points(plan, d1, d2)
    log_ratio = lower.log_eval(x1, x2) - w.log_eval(x1, x2)
    radius = np.sqrt(_block_radius(x1, d1) ** 2 + _block_radius(x2, d2) ** 2)
    holds, shells = _growth_verdict(log_ratio, radius)
    i = int(np.argmax(log_ratio))
    return EllipticityReport(
        holds=holds,
        constant_c=float(np.exp(log_ratio[i])) if holds else float("inf"),
        witness=(x1[i], x2[i]),
        shell_log_sups=shells,
    )


def check_moderate(w: Weight, v: Weight, plan: SamplePlan | None = None) -> EllipticityReport:
    """Certify ``w(z + z') <= c * w(z) * v(z')`` on sampled pairs."""
    plan = plan or SamplePlan()
    d1, d2 = w.block_split
    if v.block_split != (d1, d2):
        raise ValueError("block splits differ")
    x1, x2 = _plan_points(plan, d1, d2)
    rng = np.random.default_rng(plan.seed + 1)
    perm = rng.permutation(len(x1))
    y1, y2 = x1[perm], x2[perm]
    # include the aligned (diagonal) pairing, the worst case for radial weights
    x1p = np.concatenate([x1, x1])
    x2p = np.concatenate([x2, x2])
    y1p = np.concatenate([y1, x1])
    y2p = np.concatenate([y2, x2])
    log_ratio = (
        w.log_eval(x1p + y1p, x2p + y2p) - w.log_eval(x1p, x2p) - v.log_eval(y1p, y2p)
    )
    shift_radius = np.sqrt(_block_radius(y1p, d1) ** 2 + _block_radius(y2p, d2) ** 2)
    holds, shells = _growth_verdict(log_ratio, shift_radius)
    i = int(np.argmax(log_ratio))
    return EllipticityReport(
        holds=holds,
        constant_c=float(np.exp(log_ratio[i])) if holds else float("inf"),
        witness=((x1p[i], x2p[i]), (y1p[i], y2p[i])),
        shell_log_sups=shells,
    )


# -- derived weights ---------------------------------------------------------

@dataclass(frozen=True)
class ClampedBiasWeight:
    """Bias-space weight (xi, b) -> theta((|b1|-R_U|xi1/tau1|)_+, (|b2|-R_V|xi2/tau2|)_+).

    ``theta`` acts on the two scalar clamped arguments.  Frequency blocks may
    be vectors of dimensions ``xi_dims``; |xi_i| is the Euclidean block norm.
    Scalars are accepted for one-dimensional blocks.
    """

    theta: Weight
    R_U: float
    R_V: float
    tau1: float
    tau2: float
    xi_dims: tuple[int, int] = (1, 1)

    def __post_init__(self):
        if self.tau1 == 0 or self.tau2 == 0:
            raise ValueError("tau components must be nonzero")
        if self.R_U < 0 or self.R_V < 0:
            raise ValueError("domain radii must be nonnegative")

    @staticmethod
    def _xi_radius(xi, d):
        xi = np.asarray(xi, dtype=float)
        if d == 1 and (xi.ndim == 0 or xi.shape[-1] != 1):
            return np.abs(xi)
        return _block_radius(xi, d)

    def shifted_args(self, xi1, xi2, b1, b2):
        r1 = self._xi_radius(xi1, self.xi_dims[0])
        r2 = self._xi_radius(xi2, self.xi_dims[1])
        s1 = np.maximum(np.abs(np.asarray(b1, dtype=float)) - self.R_U * r1 / abs(self.tau1), 0.0)
        s2 = np.maximum(np.abs(np.asarray(b2, dtype=float)) - self.R_V * r2 / abs(self.tau2), 0.0)
        return s1, s2

    def eval(self, xi1, xi2, b1, b2):
        s1, s2 = self.shifted_args(xi1, xi2, b1, b2)
        return np.exp(self.theta.log_eval_radial(s1, s2))

    __call__ = eval


def make_clamped_weight(theta: Weight, R_U: float, R_V: float, tau1: float,
                        tau2: float, xi_dims=(1, 1)) -> ClampedBiasWeight:
    return ClampedBiasWeight(theta=theta, R_U=float(R_U), R_V=float(R_V),
                             tau1=float(tau1), tau2=float(tau2),
                             xi_dims=tuple(xi_dims))


def rate_exponents(q1: float, q2: float, d1: int, d2: int) -> tuple[float, float]:
    """Extra per-block Bessel exponents (d_i+1)(1-1/q_i)+1."""
    for q in (q1, q2):
        if not 1.0 <= q <= 2.0:
            raise ValueError(f"q must lie in [1,2], got {q}")
    return ((d1 + 1) * (1 - 1 / q1) + 1, (d2 + 1) * (1 - 1 / q2) + 1)


def make_rate_weight(omega: Weight, q1: float, q2: float, d1: int, d2: int) -> Weight:
    """omega(xi) * <xi1>^{e1} <xi2>^{e2} with the sampling-measure exponents."""
    e1, e2 = rate_exponents(q1, q2, d1, d2)
    extra = ProductBessel(block_split=omega.block_split, n1=e1, n2=e2)
    return ProductOfWeights(block_split=omega.block_split, factors=(omega, extra))
