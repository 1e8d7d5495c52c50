"""Two-block ridge dictionaries and variation-norm upper bounds.

The dictionary consists of scaled activations composed with two-block affine
features: ``scale * sigma(xi1.x1/tau1 + b1, xi2.x2/tau2 + b2)`` where the
scale is the clamped bias weight over the frequency weight.  The module
computes the bias-plane integral that normalizes the sampling measure, two
computable upper bounds for the variation norm, a uniform Sobolev bound for
the dictionary itself, and a greedy N-term slope harness.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .constants import (
    activation_weight_bound,
    damped_multiindex_count,
    phase_domain_factor,
    sampling_density_mass,
)
from .grid import GridFunction, TensorGrid, dft_forward
from .norms import bochner_sobolev_norm, fourier_lebesgue_norm
from .weights import (
    Weight,
    make_clamped_weight,
    make_rate_weight,
    product_bessel,
)

__all__ = [
    "GaussianProductActivation",
    "RampProductActivation",
    "MonomialProductActivation",
    "TwoBlockAffine",
    "DictionaryElement",
    "make_dictionary_element",
    "dict_element_eval",
    "bias_ellipticity",
    "bias_plane_integral",
    "VariationEstimate",
    "variation_upper_bound",
    "DictionaryNormReport",
    "dict_sobolev_bound",
    "GreedyRateReport",
    "maurey_slope_harness",
    "write_elements_csv",
    "read_elements_csv",
]


# -- activations -------------------------------------------------------------

def _gaussian_derivative_1d(k: int, t: np.ndarray) -> np.ndarray:
    """d^k/dt^k exp(-t^2) via the Hermite recurrence."""
    t = np.asarray(t, dtype=float)
    h, h_prev = np.ones_like(t), np.zeros_like(t)
    for j in range(k):
        h, h_prev = 2.0 * t * h - 2.0 * j * h_prev, h
    return (-1.0) ** k * h * np.exp(-(t**2))


class GaussianProductActivation:
    """sigma(t1, t2) = exp(-t1^2 - t2^2); all derivatives and the transform
    are available in closed form."""

    name = "gauss"

    def value(self, t1, t2):
        t1 = np.asarray(t1, dtype=float)
        t2 = np.asarray(t2, dtype=float)
        return np.exp(-(t1**2) - t2**2)

    def derivative(self, i1, i2, t1, t2):
        return _gaussian_derivative_1d(i1, t1) * _gaussian_derivative_1d(i2, t2)

    def transform(self, tau1, tau2):
        # symmetric normalization: each axis contributes exp(-tau^2/4)/sqrt(2)
        return 0.5 * math.exp(-(tau1**2 + tau2**2) / 4.0)


class RampProductActivation:
    """sigma(t1, t2) = (t1)_+^{m1} (t2)_+^{m2}, the two-block network unit.

    Derivatives are classical away from the kink with the convention
    (t)_+^0 = 1 for t > 0 and 0 otherwise.  The transform does not exist as
    a function (polynomial growth), so scanning raises.
    """

    def __init__(self, m1: int, m2: int):
        if m1 < 0 or m2 < 0:
            raise ValueError("ramp powers must be nonnegative")
        self.m1, self.m2 = int(m1), int(m2)
        self.name = f"ramp({self.m1},{self.m2})"

    @staticmethod
    def _ramp_derivative(m, i, t):
        t = np.asarray(t, dtype=float)
        if i > m:
            return np.zeros_like(t)
        coef = math.factorial(m) / math.factorial(m - i)
        if m - i == 0:
            return coef * (t > 0).astype(float)
        return coef * np.maximum(t, 0.0) ** (m - i)

    def value(self, t1, t2):
        return self.derivative(0, 0, t1, t2)

    def derivative(self, i1, i2, t1, t2):
        return (self._ramp_derivative(self.m1, i1, t1)
                * self._ramp_derivative(self.m2, i2, t2))

    def transform(self, tau1, tau2):
        raise ValueError("ramp activations have no integrable transform")


class MonomialProductActivation:
    """sigma(t1, t2) = t1^{k1} t2^{k2}; grows at infinity, so it never lies
    in a polynomially weighted class (useful as a negative test case)."""

    def __init__(self, k1: int, k2: int):
        if k1 < 0 or k2 < 0:
            raise ValueError("monomial degrees must be nonnegative")
        self.k1, self.k2 = int(k1), int(k2)
        self.name = f"monomial({self.k1},{self.k2})"

    @staticmethod
    def _monomial_derivative(k, i, t):
        t = np.asarray(t, dtype=float)
        if i > k:
            return np.zeros_like(t)
        coef = math.factorial(k) / math.factorial(k - i)
        return coef * t ** (k - i)

    def value(self, t1, t2):
        return self.derivative(0, 0, t1, t2)

    def derivative(self, i1, i2, t1, t2):
        return (self._monomial_derivative(self.k1, i1, t1)
                * self._monomial_derivative(self.k2, i2, t2))

    def transform(self, tau1, tau2):
        raise ValueError("monomials have no integrable transform")


_ACTIVATION_REGISTRY = {"gauss": GaussianProductActivation}


def _activation_by_name(name: str):
    if name == "gauss":
        return GaussianProductActivation()
    if name.startswith("ramp(") and name.endswith(")"):
        m1, m2 = (int(v) for v in name[5:-1].split(","))
        return RampProductActivation(m1, m2)
    if name.startswith("monomial(") and name.endswith(")"):
        k1, k2 = (int(v) for v in name[9:-1].split(","))
        return MonomialProductActivation(k1, k2)
    raise ValueError(f"unknown activation {name!r}")


# -- affine features and elements --------------------------------------------

@dataclass(frozen=True)
class TwoBlockAffine:
    """t_i(x_i) = xi_i . x_i / tau_i + b_i for the two blocks."""

    xi1: np.ndarray
    xi2: np.ndarray
    b1: float
    b2: float
    tau1: float
    tau2: float

    def __post_init__(self):
        if self.tau1 == 0 or self.tau2 == 0:
            raise ValueError("tau components must be nonzero")
        object.__setattr__(self, "xi1", np.atleast_1d(np.asarray(self.xi1, dtype=float)))
        object.__setattr__(self, "xi2", np.atleast_1d(np.asarray(self.xi2, dtype=float)))

    def features(self, x1, x2):
        x1 = np.asarray(x1, dtype=float)
        x2 = np.asarray(x2, dtype=float)
        d1, d2 = self.xi1.size, self.xi2.size
        if d1 == 1 and (x1.ndim == 0 or x1.shape[-1] != 1):
            t1 = self.xi1[0] * x1
        else:
            if x1.shape[-1] != d1:
                raise ValueError(f"block-1 points must have {d1} components")
            t1 = x1 @ self.xi1
        if d2 == 1 and (x2.ndim == 0 or x2.shape[-1] != 1):
            t2 = self.xi2[0] * x2
        else:
            if x2.shape[-1] != d2:
                raise ValueError(f"block-2 points must have {d2} components")
            t2 = x2 @ self.xi2
        return t1 / self.tau1 + self.b1, t2 / self.tau2 + self.b2

    def argument_lower_bound(self, R_U: float, R_V: float):
        """(|b_i| - R_i |xi_i| / |tau_i|)_+ for each block."""
        u1 = R_U * float(np.linalg.norm(self.xi1)) / abs(self.tau1)
        u2 = R_V * float(np.linalg.norm(self.xi2)) / abs(self.tau2)
        return max(abs(self.b1) - u1, 0.0), max(abs(self.b2) - u2, 0.0)


@dataclass(frozen=True)
class DictionaryElement:
    affine: TwoBlockAffine
    scale: float
    activation: object

    def __post_init__(self):
        if not (self.scale > 0 and math.isfinite(self.scale)):
            raise ValueError("scale must be positive and finite")

    def evaluate(self, x1, x2):
        t1, t2 = self.affine.features(x1, x2)
        return self.scale * self.activation.value(t1, t2)

    def on_grid(self, grid: TensorGrid) -> GridFunction:
        d1, d2 = grid.block_dims
        mesh = grid.meshgrid()
        if d1 == 1:
            x1 = mesh[0]
        else:
            x1 = np.stack(mesh[:d1], axis=-1)
        if d2 == 1:
            x2 = mesh[d1]
        else:
            x2 = np.stack(mesh[d1:], axis=-1)
        return GridFunction(grid, self.evaluate(x1, x2), data_model="point")


def make_dictionary_element(xi1, xi2, b1, b2, tau, omega: Weight,
                            theta: Weight, R_U: float, R_V: float,
                            activation=None) -> DictionaryElement:
    """Element with the canonical scale: clamped bias weight over omega."""
    if activation is None:
        activation = GaussianProductActivation()
    aff = TwoBlockAffine(xi1, xi2, float(b1), float(b2),
                         float(tau[0]), float(tau[1]))
    d1, d2 = aff.xi1.size, aff.xi2.size
    clamped = make_clamped_weight(theta, R_U, R_V, aff.tau1, aff.tau2,
                                  xi_dims=(d1, d2))
    theta_val = float(clamped(aff.xi1 if d1 > 1 else aff.xi1[0],
                              aff.xi2 if d2 > 1 else aff.xi2[0],
                              aff.b1, aff.b2))
    x1 = aff.xi1 if d1 > 1 else aff.xi1[0]
    x2 = aff.xi2 if d2 > 1 else aff.xi2[0]
    omega_val = float(omega(x1, x2))
    return DictionaryElement(affine=aff, scale=theta_val / omega_val,
                             activation=activation)


def dict_element_eval(e: DictionaryElement, x1, x2):
    """scale * sigma(xi1.x1/tau1 + b1, xi2.x2/tau2 + b2)."""
    return e.evaluate(x1, x2)


# -- bias-plane integral ------------------------------------------------------

def bias_ellipticity(theta: Weight, gamma1: float, gamma2: float,
                     base_window: float = 64.0, points: int = 4001) -> float:
    """sup over the bias plane of (1+|b1|)^{g1} (1+|b2|)^{g2} / theta(b1, b2).

    Grid supremum with window doubling; persistent growth means theta decays
    slower than the claimed polynomial orders and raises.
    """
    sups = []
    for mult in (1.0, 2.0, 4.0):
        s = np.linspace(0.0, mult * base_window, points)
        s1, s2 = np.meshgrid(s, s, indexing="ij")
        log_ratio = (gamma1 * np.log1p(s1) + gamma2 * np.log1p(s2)
                     - theta.log_eval_radial(s1, s2))
        sups.append(float(np.exp(log_ratio.max())))
    if sups[-1] > 1.01 * sups[-2]:
        raise ValueError(
            "theta decays slower than (1+|b1|)^{-g1}(1+|b2|)^{-g2}; "
            "the bias integral bound does not apply"
        )
    return max(sups)


_TAIL_CACHE: dict = {}


def _bias_tail_integrals(theta: Weight) -> tuple[float, float, float, float]:
    """(theta(0,0), int 1/theta(s,0), int 1/theta(0,s), double tail integral)."""
    try:
        key = hash(theta)
        if key in _TAIL_CACHE:
            return _TAIL_CACHE[key]
    except TypeError:
        key = None

    def inv(s1, s2):
        return float(np.exp(-theta.log_eval_radial(s1, s2)))

    theta00 = 1.0 / inv(0.0, 0.0)
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            t1 = integrate.quad(lambda s: inv(s, 0.0), 0.0, np.inf, limit=300)[0]
            t2 = integrate.quad(lambda s: inv(0.0, s), 0.0, np.inf, limit=300)[0]
            t12 = integrate.dblquad(lambda s2, s1: inv(s1, s2),
                                    0.0, np.inf, 0.0, np.inf)[0]
        except integrate.IntegrationWarning as exc:
            raise ValueError(f"bias-plane quadrature did not converge: {exc}") from exc
    vals = (theta00, t1, t2, t12)
    if not all(math.isfinite(v) for v in vals):
        raise ValueError("bias-plane quadrature diverged; check the decay orders")
    if key is not None:
        _TAIL_CACHE[key] = vals
    return vals


def bias_plane_integral(xi, theta: Weight, R_U: float, R_V: float,
                        tau1: float, tau2: float, gamma) -> float:
    """I(xi) = integral over the bias plane of 1 / clamped theta.

    By the even symmetry in each bias the integral reduces to four times the
    positive quadrant, which splits into the flat rectangle plus two edge
    strips plus the free corner.  The proof bound
    I <= 8 c (u1 + 1/(g1-1)) (u2 + 1/(g2-1)) is asserted.
    """
    g1, g2 = float(gamma[0]), float(gamma[1])
    if g1 <= 1 or g2 <= 1:
        raise ValueError("decay exponents must exceed 1 for a convergent integral")
    xi = (np.atleast_1d(np.asarray(xi[0], dtype=float)),
          np.atleast_1d(np.asarray(xi[1], dtype=float)))
    u1 = R_U * float(np.linalg.norm(xi[0])) / abs(tau1)
    u2 = R_V * float(np.linalg.norm(xi[1])) / abs(tau2)
    theta00, t1, t2, t12 = _bias_tail_integrals(theta)
    value = 4.0 * (u1 * u2 / theta00 + u2 * t1 + u1 * t2 + t12)
    c = bias_ellipticity(theta, g1, g2)
    bound = 8.0 * c * (u1 + 1.0 / (g1 - 1.0)) * (u2 + 1.0 / (g2 - 1.0))
    if value > bound * (1.0 + 1e-9):
        raise RuntimeError(
            f"bias integral {value} exceeds its proof bound {bound}; "
            "the weight violates the assumed decay structure"
        )
    return value


# -- variation-norm upper bounds ----------------------------------------------

@dataclass
class VariationEstimate:
    upper_bound: float
    direct_bound: float
    transform_bound: float
    converged: bool
    integrand_trace: list = field(default_factory=list)

    def __post_init__(self):
        if self.upper_bound < 0:
            raise ValueError("variation bounds are nonnegative")

    def __float__(self):
        return self.upper_bound


def variation_upper_bound(f: GridFunction, omega: Weight, theta: Weight,
                          q, geometry, sigma=None,
                          trace_points: int = 32) -> VariationEstimate:
    """Two computable upper bounds for the variation norm of f.

    (a) direct route: C_direct * sum omega(xi) <xi1> <xi2> |fhat(xi)| dxi with
        C_direct = phase/domain factor times twice the bias ellipticity
        (each bias factor u_i + 1/(g_i - 1) is at most
        max(R/|tau|, 1/(g-1)) * sqrt(2) <xi_i>);
    (b) transform route: phase/domain factor times the sampling-mass factors
        mass(d_i)^{1 - 1/q_i} times the Fourier--Lebesgue norm with the rate
        weight.  The smaller of the two is the returned upper bound; an
        unconverged spectral tail only flags the estimate.
    """
    from .norms import _weight_on_frequencies

    if sigma is None:
        sigma = GaussianProductActivation()
    q1, q2 = float(q[0]), float(q[1])
    R_U, R_V, tau, gamma = geometry
    tau1, tau2 = float(tau[0]), float(tau[1])
    g1, g2 = float(gamma[0]), float(gamma[1])
    d1, d2 = f.grid.block_dims
    sig_hat = sigma.transform(tau1, tau2)
    c_uv = phase_domain_factor(R_U, R_V, tau1, tau2, g1, g2, sig_hat)
    c_theta = bias_ellipticity(theta, g1, g2)

    fhat = np.abs(dft_forward(f).values)
    mass = 1.0
    for lo, up in zip(f.grid.lower, f.grid.upper):
        mass *= 2.0 * math.pi / (up - lo)
    w_vals = _weight_on_frequencies(omega, f.grid)
    bessel = product_bessel(1.0, 1.0, block_split=(d1, d2))
    b_vals = _weight_on_frequencies(bessel, f.grid)
    integrand = w_vals * b_vals * fhat
    direct = c_uv * 2.0 * c_theta * float(np.sum(integrand) * mass)

    omega_tilde = make_rate_weight(omega, q1, q2, d1, d2)
    fl = fourier_lebesgue_norm(f, (q1, q2), omega_tilde)
    transform = (c_uv
                 * sampling_density_mass(d1) ** (1.0 - 1.0 / q1)
                 * sampling_density_mass(d2) ** (1.0 - 1.0 / q2)
                 * fl.value)

    trace = []
    if trace_points > 0:
        flat = np.argsort(integrand.ravel())[::-1][:trace_points]
        mesh = f.grid.frequency_meshgrid()
        theta00, t1, t2, t12 = _bias_tail_integrals(theta)
        for j in flat:
            idx = np.unravel_index(j, integrand.shape)
            xi1 = tuple(float(mesh[a][idx]) for a in range(d1))
            xi2 = tuple(float(mesh[d1 + a][idx]) for a in range(d2))
            u1 = R_U * math.hypot(*xi1) / abs(tau1)
            u2 = R_V * math.hypot(*xi2) / abs(tau2)
            bias_int = 4.0 * (u1 * u2 / theta00 + u2 * t1 + u1 * t2 + t12)
            trace.append({
                "xi1": xi1, "xi2": xi2,
                "omega": float(w_vals[idx]),
                "fhat_abs": float(fhat[idx]),
                "bias_integral": bias_int,
                "integrand": float(w_vals[idx] * fhat[idx] * bias_int),
            })

    upper = direct if not fl.converged else min(direct, transform)
    return VariationEstimate(
        upper_bound=float(upper),
        direct_bound=float(direct),
        transform_bound=float(transform),
        converged=bool(fl.converged),
        integrand_trace=trace,
    )


# -- dictionary Sobolev bound ---------------------------------------------------

@dataclass
class DictionaryNormReport:
    analytic_bound: float
    empirical_sup: float
    n_samples: int
    within_bound: bool

    def __float__(self):
        return self.analytic_bound


def dict_sobolev_bound(sigma, theta: Weight, orders, exponents, U, V, tau,
                       omega: Weight | None = None, n_samples: int = 100,
                       grid_points: int = 128, seed: int = 11) -> DictionaryNormReport:
    """C_{sigma,theta} |U|^{1/p1} |V|^{1/p2} kappa1^{1/p1} kappa2^{1/p2},
    checked against the largest mixed Sobolev norm over sampled elements.

    The empirical check builds elements with the canonical scale (clamped
    bias weight over the frequency weight) and evaluates the mixed Sobolev
    norm with finite differences on a window twice the size of U x V, so
    wrap-around artifacts stay outside the integration region.  Only scalar
    blocks are sampled; the analytic bound itself is dimension-general.
    """
    n1, n2 = int(orders[0]), int(orders[1])
    p1, p2 = float(exponents[0]), float(exponents[1])
    tau1, tau2 = float(tau[0]), float(tau[1])
    d1 = getattr(U, "dim", 1)
    d2 = getattr(V, "dim", 1)
    c_act = activation_weight_bound(sigma, theta, n1, n2).value
    k1 = damped_multiindex_count(n1, d1, p1, tau1)
    k2 = damped_multiindex_count(n2, d2, p2, tau2)
    bound = (c_act * U.volume() ** (1.0 / p1) * V.volume() ** (1.0 / p2)
             * k1 ** (1.0 / p1) * k2 ** (1.0 / p2))

    emp = 0.0
    if d1 == 1 and d2 == 1 and n_samples > 0:
        if omega is None:
            omega = product_bessel(n1, n2, block_split=(1, 1))
        rng = np.random.default_rng(seed)
        lo1, hi1 = (float(v[0]) for v in U.bounding_box())
        lo2, hi2 = (float(v[0]) for v in V.bounding_box())
        R_U = max(abs(lo1), abs(hi1))
        R_V = max(abs(lo2), abs(hi2))
        grid = TensorGrid(block_dims=(1, 1), lower=(2.0 * lo1, 2.0 * lo2),
                          upper=(2.0 * hi1, 2.0 * hi2),
                          points=(grid_points, grid_points))
        for _ in range(n_samples):
            xi = rng.uniform(-6.0, 6.0, size=2)
            b = rng.uniform(-12.0, 12.0, size=2)
            elem = make_dictionary_element(xi[0], xi[1], b[0], b[1],
                                           (tau1, tau2), omega, theta,
                                           R_U, R_V, activation=sigma)
            gf = elem.on_grid(grid)
            val = bochner_sobolev_norm(gf, (n1, n2), (p1, p2), U, V, mode="fd")
            emp = max(emp, float(val))
    return DictionaryNormReport(
        analytic_bound=float(bound),
        empirical_sup=emp,
        n_samples=int(n_samples),
        within_bound=bool(emp <= bound * (1.0 + 1e-6)),
    )


# -- greedy N-term slope harness -----------------------------------------------

@dataclass
class GreedyRateReport:
    n_values: tuple
    errors: tuple
    slope: float
    coefficient_mass: float
    implied_constant: float


def maurey_slope_harness(elements, coefficients, grid: TensorGrid, U, V,
                         n_values=(1, 2, 4, 8, 16, 32)) -> GreedyRateReport:
    """Greedy N-term approximation of f = sum c_j e_j in L^2(U x V).

    Orthogonal matching pursuit with least-squares refit on the selected
    subset; reports the fitted log-log slope of error against N (the rate
    exponent) and the implied constant sup_N err_N sqrt(N) / mass.
    """
    from .norms import _block_weights

    coeffs = np.asarray(coefficients, dtype=float)
    if len(elements) != coeffs.size:
        raise ValueError("one coefficient per element")
    cols = [e.on_grid(grid).values.ravel() for e in elements]
    A = np.stack(cols, axis=1)
    target = A @ coeffs
    w1, _ = _block_weights(grid, 1, U)
    w2, _ = _block_weights(grid, 2, V)
    wgt = np.outer(w1.ravel(), w2.ravel()).ravel()
    sqw = np.sqrt(wgt)
    mass = float(np.sum(np.abs(coeffs)))
    Aw = A * sqw[:, None]
    tw = target * sqw
    chosen: list[int] = []
    errors = {}
    resid = tw.copy()
    max_n = min(max(n_values), len(elements))
    for n in range(1, max_n + 1):
        scores = np.abs(Aw.T @ resid) / np.maximum(
            np.linalg.norm(Aw, axis=0), 1e-300)
        scores[chosen] = -np.inf
        chosen.append(int(np.argmax(scores)))
        sol, *_ = np.linalg.lstsq(Aw[:, chosen], tw, rcond=None)
        resid = tw - Aw[:, chosen] @ sol
        if n in n_values:
            errors[n] = float(np.linalg.norm(resid))
    ns = tuple(sorted(errors))
    errs = tuple(errors[n] for n in ns)
    floor = max(errs[0], 1e-300) * 1e-10
    keep = [i for i, e in enumerate(errs) if e > floor]
    if len(keep) >= 2:
        slope = float(np.polyfit(np.log([ns[i] for i in keep]),
                                 np.log([errs[i] for i in keep]), 1)[0])
    else:
        slope = -math.inf
    implied = max((e * math.sqrt(n) for n, e in zip(ns, errs)), default=0.0)
    return GreedyRateReport(
        n_values=ns, errors=errs, slope=slope,
        coefficient_mass=mass,
        implied_constant=implied / mass if mass > 0 else 0.0,
    )


# -- serialization --------------------------------------------------------------

_CSV_FIELDS = ["xi1", "xi2", "b1", "b2", "tau1", "tau2", "scale", "activation"]


def write_elements_csv(elements, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=_CSV_FIELDS)
        writer.writeheader()
        for e in elements:
            a = e.affine
            writer.writerow({
                "xi1": ";".join(repr(float(v)) for v in a.xi1),
                "xi2": ";".join(repr(float(v)) for v in a.xi2),
                "b1": repr(float(a.b1)), "b2": repr(float(a.b2)),
                "tau1": repr(float(a.tau1)), "tau2": repr(float(a.tau2)),
                "scale": repr(float(e.scale)),
                "activation": getattr(e.activation, "name", "gauss"),
            })


def read_elements_csv(path) -> list[DictionaryElement]:
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            aff = TwoBlockAffine(
                xi1=np.array([float(v) for v in row["xi1"].split(";")]),
                xi2=np.array([float(v) for v in row["xi2"].split(";")]),
                b1=float(row["b1"]), b2=float(row["b2"]),
                tau1=float(row["tau1"]), tau2=float(row["tau2"]),
            )
            out.append(DictionaryElement(
                affine=aff, scale=float(row["scale"]),
                activation=_activation_by_name(row["activation"]),
            ))
    return out
