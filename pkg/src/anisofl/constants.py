"""Explicit constants of the two-block approximation bound.

Every factor of the final constant is computable in closed form or as a
certified grid supremum; the ledger assembles them and the dimension study
confirms that the density/derivative-count product stays below the analytic
envelope that decays geometrically in the dimension.

The activation argument is duck-typed: anything with ``value(t1, t2)``,
``derivative(i1, i2, t1, t2)`` and ``transform(tau1, tau2)`` works (the
dictionary module provides concrete activations).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .weights import Weight, product_bessel

__all__ = [
    "damped_multiindex_count",
    "sampling_density_mass",
    "activation_weight_bound",
    "phase_domain_factor",
    "select_phase_frequency",
    "ConstantLedger",
    "assemble_constant_ledger",
    "dimension_scaling_study",
    "hilbert_sobolev_preset",
]


def damped_multiindex_count(n: int, d: int, p: float, tau: float) -> float:
    """sum_{k<=n} (number of d-variate multi-indices with |a|=k) * |tau|^{-pk}.

    Dominated by exp((n + d - 1) |tau|^{-p}); the terms are summed largest
    first with exact binomials.
    """
    if tau == 0:
        raise ValueError("tau must be nonzero")
    if p < 1:
        raise ValueError("p must be >= 1")
    if n < 0 or d < 1:
        raise ValueError("need n >= 0 and d >= 1")
    damp = abs(tau) ** (-p)
    terms = []
    for k in range(n + 1):
        try:
            terms.append(float(math.comb(k + d - 1, k)) * damp**k)
        except OverflowError as exc:
            raise OverflowError(
                f"multi-index count overflows 64-bit floats at k={k}, d={d}"
            ) from exc
    return math.fsum(sorted(terms, reverse=True))


def sampling_density_mass(d: int) -> float:
    """pi^{(d+1)/2} / Gamma((d+1)/2), the L1 mass of (1+|x|^2)^{-(d+1)/2}."""
    if d < 1:
        raise ValueError("d must be >= 1")
    return math.pi ** ((d + 1) / 2.0) / math.gamma((d + 1) / 2.0)


@dataclass
class SupremumReport:
    value: float
    arg_orders: tuple[int, int]
    arg_point: tuple[float, float]
    window_values: tuple[float, ...]

    def __float__(self):
        return self.value


def activation_weight_bound(sigma, theta: Weight, m1: int, m2: int,
                            base_window: float = 8.0, points: int = 512
                            ) -> SupremumReport:
    """max over derivative orders (i1 <= m1, i2 <= m2) of sup theta * |d sigma|.

    Estimated as a grid supremum on [-W, W]^2 for W = base window, doubled
    twice; if the supremum still grows more than 1% per doubling the
    activation does not belong to the weighted smoothness class and an
    error is raised.
    """
    if m1 < 0 or m2 < 0:
        raise ValueError("derivative orders must be nonnegative")
    window_sups, best = [], None
    for mult in (1.0, 2.0, 4.0):
        w = mult * base_window
        t = np.linspace(-w, w, points)
        t1, t2 = np.meshgrid(t, t, indexing="ij")
        th = theta(t1, t2)
        cur = None
        for i1 in range(m1 + 1):
            for i2 in range(m2 + 1):
                g = th * np.abs(sigma.derivative(i1, i2, t1, t2))
                j = int(np.argmax(g))
                cand = (float(g.flat[j]), (i1, i2),
                        (float(t1.flat[j]), float(t2.flat[j])))
                if cur is None or cand[0] > cur[0]:
                    cur = cand
        window_sups.append(cur[0])
        if best is None or cur[0] > best[0]:
            best = cur  # the base window has the finest grid near the peak
    if window_sups[-1] > 1.01 * window_sups[-2]:
        raise ValueError(
            "weighted activation supremum keeps growing under window doubling; "
            "the activation is not in the weighted smoothness class"
        )
    return SupremumReport(best[0], best[1], best[2], tuple(window_sups))


def phase_domain_factor(R_U: float, R_V: float, tau1: float, tau2: float,
                        gamma1: float, gamma2: float,
                        sigma_hat_at_tau: complex) -> float:
    """8 / |2 pi sigma_hat(tau)| * max(|R_U/tau1|, 1/(g1-1)) * max(|R_V/tau2|, 1/(g2-1))."""
    if sigma_hat_at_tau == 0:
        raise ValueError("activation transform vanishes at tau; pick another tau")
    if gamma1 <= 1 or gamma2 <= 1:
        raise ValueError("decay exponents must exceed 1")
    if tau1 == 0 or tau2 == 0:
        raise ValueError("tau components must be nonzero")
    if R_U < 0 or R_V < 0:
        raise ValueError("domain radii must be nonnegative")
    return (
        8.0
        / abs(2.0 * math.pi * sigma_hat_at_tau)
        * max(abs(R_U / tau1), 1.0 / (gamma1 - 1.0))
        * max(abs(R_V / tau2), 1.0 / (gamma2 - 1.0))
    )


def select_phase_frequency(sigma) -> tuple[float, float, complex]:
    """Scan tau in {+-2^k}^2, k in -2..3, maximizing |sigma_hat(tau1, tau2)|.

    Ties break lexicographically on (tau1, tau2) so the choice is
    deterministic.  Larger |sigma_hat| directly shrinks the phase-domain
    factor of the ledger.
    """
    candidates = [s * 2.0**k for k in range(-2, 4) for s in (1.0, -1.0)]
    best = None
    for tau1 in sorted(candidates):
        for tau2 in sorted(candidates):
            val = abs(sigma.transform(tau1, tau2))
            if best is None or val > best[0] + 1e-15:
                best = (val, tau1, tau2)
    if best[0] == 0:
        raise ValueError("activation transform vanishes on the whole scan lattice")
    return best[1], best[2], sigma.transform(best[1], best[2])


@dataclass
class ConstantLedger:
    phase_domain: float          # domain/phase factor
    activation_bound: float      # weighted activation supremum
    density1: float              # frequency sampling density, block 1
    density2: float
    count1: float                # damped multi-index count, block 1
    count2: float
    total: float
    inputs: dict = field(default_factory=dict)

    def __post_init__(self):
        vals = (self.phase_domain, self.activation_bound, self.density1,
                self.density2, self.count1, self.count2, self.total)
        if not all(math.isfinite(v) and v > 0 for v in vals):
            raise ValueError("all ledger entries must be positive and finite")


def assemble_constant_ledger(sigma, theta: Weight, R_U: float, R_V: float,
                             gamma, orders, dims, p, q,
                             m=None, tau=None) -> ConstantLedger:
    """Build every factor and multiply them per the decomposition.

    total = phase_domain * density1^{1 - 1/q1} * density2^{1 - 1/q2}
          * activation_bound * count1^{1/p1} * count2^{1/p2},
    where density_i is the closed-form mass (the reciprocal of the
    frequency-density constant, hence the positive exponent).
    """
    n1, n2 = int(orders[0]), int(orders[1])
    d1, d2 = int(dims[0]), int(dims[1])
    p1, p2 = float(p[0]), float(p[1])
    q1, q2 = float(q[0]), float(q[1])
    for qi in (q1, q2):
        if not 1.0 <= qi <= 2.0:
            raise ValueError("q exponents must lie in [1, 2]")
    if tau is None:
        tau1, tau2, sig_hat = select_phase_frequency(sigma)
    else:
        tau1, tau2 = float(tau[0]), float(tau[1])
        sig_hat = sigma.transform(tau1, tau2)
    if m is None:
        m = (n1 + 1, n2 + 1)
    g1, g2 = float(gamma[0]), float(gamma[1])
    phase = phase_domain_factor(R_U, R_V, tau1, tau2, g1, g2, sig_hat)
    act = activation_weight_bound(sigma, theta, int(m[0]), int(m[1])).value
    dens1 = sampling_density_mass(d1)
    dens2 = sampling_density_mass(d2)
    k1 = damped_multiindex_count(n1, d1, p1, tau1)
    k2 = damped_multiindex_count(n2, d2, p2, tau2)
    total = (
        phase
        * dens1 ** (1.0 - 1.0 / q1)
        * dens2 ** (1.0 - 1.0 / q2)
        * act
        * k1 ** (1.0 / p1)
        * k2 ** (1.0 / p2)
    )
    return ConstantLedger(
        phase_domain=phase, activation_bound=act,
        density1=dens1, density2=dens2, count1=k1, count2=k2, total=total,
        inputs={
            "R_U": R_U, "R_V": R_V, "tau": (tau1, tau2),
            "sigma_hat_at_tau": sig_hat, "gamma": (g1, g2),
            "orders": (n1, n2), "dims": (d1, d2), "p": (p1, p2), "q": (q1, q2),
            "activation_orders": tuple(int(v) for v in m),
            "theta": theta.describe(),
        },
    )


@dataclass
class DimensionRow:
    d: int
    n: int
    computed: float
    bound: float
    ok: bool


@dataclass
class DimensionStudy:
    rows: list
    gamma: float
    peak_d: int
    uniform_bound: float
    decay_verified: bool

    def __iter__(self):
        return iter(self.rows)


def dimension_scaling_study(d_range=range(1, 13), delta: float = 1.0,
                            p: float = 2.0, q: float = 2.0, tau: float = 2.0
                            ) -> DimensionStudy:
    """Density-times-count growth against its dimension-free envelope.

    For each d (with n = floor(delta*d)) the quantity
    mass(d) * count(n, d, p, tau)^{q'/p} must stay below
    (2 pi e^{gamma+1}/(d+1))^{(d+1)/2} (d+1) with
    gamma = 2 (q'/p)(delta+1)|tau|^{-p}; past its peak the envelope must
    decay (checked two dimensions apart over an extended range).
    """
    if q <= 1.0:
        raise ValueError("the study needs q > 1 (the dual exponent must be finite)")
    if delta <= 0:
        raise ValueError("delta must be positive")
    q_dual = q / (q - 1.0)
    gamma = 2.0 * (q_dual / p) * (delta + 1.0) * abs(tau) ** (-p)

    def envelope(d):
        x = d + 1.0
        return (2.0 * math.pi * math.exp(gamma + 1.0) / x) ** (x / 2.0) * x

    rows = []
    for d in d_range:
        n = int(math.floor(delta * d))
        if n > delta * d + 1e-9:
            raise ValueError("derivative order grows faster than linearly")
        computed = (
            sampling_density_mass(d)
            * damped_multiindex_count(n, d, p, tau) ** (q_dual / p)
        )
        b = envelope(d)
        rows.append(DimensionRow(d, n, computed, b, computed <= b))

    d_ext = range(1, max(d_range) + 31)
    env = [envelope(d) for d in d_ext]
    peak = int(np.argmax(env)) + 1
    decay = all(envelope(d + 2) < envelope(d) for d in range(peak + 1, max(d_ext) - 2))
    return DimensionStudy(
        rows=rows,
        gamma=gamma,
        peak_d=peak,
        uniform_bound=max(env),
        decay_verified=decay,
    )


@dataclass
class SobolevPreset:
    rate_orders: tuple[int, int]
    rate_weight: Weight
    dominating_weight: Weight
    domination_holds: bool
    max_ratio: float


def hilbert_sobolev_preset(n, d, seed: int = 7) -> SobolevPreset:
    """Integer orders m_i = n_i + floor(d_i/2) + 2 dominating the rate weight.

    Builds the q1 = q2 = 2 rate weight over the polynomial weight of orders
    (n1, n2) and certifies omega_rate <= <xi1>^{m1} <xi2>^{m2} at 1e4
    random frequencies (plus the origin).
    """
    from .weights import make_rate_weight

    n1, n2 = int(n[0]), int(n[1])
    d1, d2 = int(d[0]), int(d[1])
    m1 = n1 + d1 // 2 + 2
    m2 = n2 + d2 // 2 + 2
    base = product_bessel(n1, n2, block_split=(d1, d2))
    rate = make_rate_weight(base, 2.0, 2.0, d1, d2)
    dom = product_bessel(m1, m2, block_split=(d1, d2))
    rng = np.random.default_rng(seed)
    pts1 = rng.uniform(-100.0, 100.0, size=(10_000, d1))
    pts2 = rng.uniform(-100.0, 100.0, size=(10_000, d2))
    pts1[0] = 0.0
    pts2[0] = 0.0
    x1 = pts1[:, 0] if d1 == 1 else pts1
    x2 = pts2[:, 0] if d2 == 1 else pts2
    ratio = rate(x1, x2) / dom(x1, x2)
    return SobolevPreset(
        rate_orders=(m1, m2),
        rate_weight=rate,
        dominating_weight=dom,
        domination_holds=bool(np.all(ratio <= 1.0 + 1e-12)),
        max_ratio=float(ratio.max()),
    )
