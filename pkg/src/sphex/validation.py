"""Independent numerical checks of the zonal-harmonic identities.

Monte Carlo estimates of sphere inner products, 1-D quadrature of the
Gegenbauer orthogonality relation, the reproducing property of zonal
harmonics and the constant leverage value.  Every check produces a
:class:`CheckReport` whose :meth:`~CheckReport.line` is the text format the
``check`` command prints.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np

from .errors import InputDataError, InvalidParameterError
from .harmonics import (
    ProblemParams,
    ZonalSeries,
    cumulative_dim,
    cumulative_dim_closed_form,
    gegenbauer_build,
    gegenbauer_eval,
    harmonic_dim,
    sphere_area,
)
from .regression import kernel_value
from .sampling import SphereRNG, as_points, derive_trial_seed, sample_uniform_sphere

MC_SIGMAS = 5.0
PANEL_ORDER = 32
DEFAULT_NODES = 16 * PANEL_ORDER


@dataclass(frozen=True)
class CheckReport:
    name: str
    params: str
    value: float
    target: float
    tolerance: float
    passed: bool

    def line(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        return (f"{self.name}, {self.params}, {self.value:.17g}, {self.target:.17g}, "
                f"{self.tolerance:.3g}, {verdict}")


@dataclass(frozen=True, eq=False)
class ZonalFunction:
    """``sigma -> sum_l coeffs[l] * P_d^l(<center, sigma>)``.

    Callable on a single point or on a stack of points (rows).
    """

    center: np.ndarray
    coeffs: tuple
    d: int
    _series: ZonalSeries = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "_series", ZonalSeries(self.d, self.coeffs))

    @property
    def degrees(self):
        return [(ell, c) for ell, c in enumerate(self.coeffs) if c != 0.0]

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def __call__(self, sigma):
        return self._series(np.asarray(sigma, dtype=np.float64) @ self.center)

    def __eq__(self, other):
        if not isinstance(other, ZonalFunction):
            return NotImplemented
        return self.d == other.d and self.coeffs == other.coeffs and np.array_equal(self.center, other.center)


def zonal_harmonic(center, ell: int, d: int, coeff: float = 1.0) -> ZonalFunction:
    """``coeff * P_d^ell(<center, .>)``."""
    coeffs = [0.0] * ell + [float(coeff)]
    return ZonalFunction(as_points(center, d)[0], tuple(coeffs), d)


def make_bandlimited(params: ProblemParams, seed: int) -> ZonalFunction:
    """Random zonal function of degree ``<= q``: a uniform center and N(0, 1) coefficients.

    The center is drawn first, then the ``q + 1`` coefficients, from one
    :class:`~sphex.sampling.SphereRNG` stream.
    """
    rng = SphereRNG(seed)
    center = rng.sphere(1, params.d)[0]
    coeffs = tuple(float(c) for c in rng.normal(params.q + 1))
    return ZonalFunction(center, coeffs, params.d)


@dataclass(frozen=True)
class MCEstimate:
    value: float
    std_error: float
    n: int
    seed: int


def mc_inner_product(f: Callable, g: Callable, d: int, n: int, seed: int) -> MCEstimate:
    """Estimate ``<f, g> = |S^{d-1}| E_w[f(w) g(w)]`` from ``n`` uniform points.

    ``f`` and ``g`` are called once each on the ``(n, d)`` array of points and
    must return ``n`` values.
    """
    if n < 2:
        raise InvalidParameterError(f"need n >= 2 Monte Carlo samples, got {n}")
    w = sample_uniform_sphere(d, n, seed).points
    prod = np.asarray(f(w), dtype=np.float64) * np.asarray(g(w), dtype=np.float64)
    if prod.shape != (n,):
        raise InvalidParameterError(f"integrands must return {n} values, got shape {prod.shape}")
    bad = np.flatnonzero(~np.isfinite(prod))
    if bad.size:
        raise InputDataError(f"non-finite integrand value at Monte Carlo sample {bad[0]}")
    area = sphere_area(d)
    return MCEstimate(area * float(prod.mean()), area * float(prod.std(ddof=1)) / math.sqrt(n), n, seed)


def check_reproducing(params: ProblemParams, ell: int, x, y, n: int, seed: int) -> CheckReport:
    """Compare ``P(<x, y>)`` with ``alpha_ell * E_w[P(<x, w>) P(<y, w>)]``.

    Passes when the deviation is within ``MC_SIGMAS`` standard errors.
    """
    d = params.d
    x, y = as_points(x, d)[0], as_points(y, d)[0]
    p = gegenbauer_build(d, ell)
    alpha = harmonic_dim(ell, d)
    target = gegenbauer_eval(p, float(np.clip(x @ y, -1.0, 1.0)))
    est = mc_inner_product(lambda w: gegenbauer_eval(p, w @ x),
                           lambda w: gegenbauer_eval(p, w @ y), d, n, seed)
    value = alpha * est.value / params.area_d
    se = alpha * est.std_error / params.area_d
    dev = abs(value - target)
    return CheckReport("reproducing", f"d={d};ell={ell};n={n}", value, target,
                       MC_SIGMAS * se, dev <= MC_SIGMAS * se)


def check_cross_degree(d: int, ell: int, ell2: int, x, y, n: int, seed: int) -> CheckReport:
    """``E_w[P^ell(<x, w>) P^ell2(<y, w>)]`` should vanish for ``ell != ell2``."""
    x, y = as_points(x, d)[0], as_points(y, d)[0]
    p, p2 = gegenbauer_build(d, ell), gegenbauer_build(d, ell2)
    est = mc_inner_product(lambda w: gegenbauer_eval(p, w @ x),
                           lambda w: gegenbauer_eval(p2, w @ y), d, n, seed)
    return CheckReport("cross_degree", f"d={d};ell={ell};ell2={ell2};n={n}", est.value, 0.0,
                       MC_SIGMAS * est.std_error, abs(est.value) <= MC_SIGMAS * est.std_error)


@lru_cache(maxsize=None)
def _theta_rule(nodes: int, order: int):
    panels = max(1, math.ceil(nodes / order))
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(0.0, math.pi, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    theta = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return theta, weights


def quad_orthogonality(d: int, ell: int, ell2: int, nodes: int = DEFAULT_NODES) -> float:
    """``int_{-1}^{1} P^ell(t) P^ell2(t) (1 - t^2)^((d-3)/2) dt`` by quadrature in ``theta``.

    With ``t = cos(theta)`` the integrand is ``P^ell P^ell2 sin^(d-2)`` on
    ``[0, pi]``, smooth even for ``d = 2``.  Composite 32-point Gauss-Legendre
    panels; ``nodes`` is rounded up to a multiple of 32.
    """
    if nodes < 64:
        raise InvalidParameterError(f"need at least 64 quadrature nodes, got {nodes}")
    theta, weights = _theta_rule(int(nodes), PANEL_ORDER)
    panel_width = math.pi / (len(theta) // PANEL_ORDER)
    # Highest frequency per panel must stay well inside what 32 nodes resolve.
    if (ell + ell2 + d) * panel_width > 25.0:
        warnings.warn(f"{nodes} nodes may under-resolve degrees ({ell}, {ell2}) in d={d}",
                      RuntimeWarning, stacklevel=2)
    t = np.cos(theta)
    integrand = (gegenbauer_eval(gegenbauer_build(d, ell), t)
                 * gegenbauer_eval(gegenbauer_build(d, ell2), t)
                 * np.sin(theta) ** (d - 2))
    return float(weights @ integrand)


def orthogonality_target(d: int, ell: int) -> float:
    """``|S^{d-1}| / (alpha_{ell,d} |S^{d-2}|)``, the diagonal of the orthogonality relation."""
    return sphere_area(d) / (harmonic_dim(ell, d) * sphere_area(d - 1))


def quadrature_gram(d: int, q: int, nodes: int = DEFAULT_NODES) -> np.ndarray:
    """``(q+1) x (q+1)`` matrix of :func:`quad_orthogonality` values."""
    out = np.empty((q + 1, q + 1))
    for i in range(q + 1):
        for j in range(i, q + 1):
            out[i, j] = out[j, i] = quad_orthogonality(d, i, j, nodes)
    return out


def check_leverage_constant(params: ProblemParams, w) -> float:
    """Kernel diagonal ``k(w, w)``, which is the leverage value at ``w``.

    ``<w, w> = 1`` for every unit ``w``, so ``w`` only gets validated; the
    result is the same for every point.
    """
    as_points(w, params.d)
    return kernel_value(params, 1.0)


# -- suites driven by the ``check`` command ---------------------------------

def suite_dims(d_list, q_max):
    reports = []
    for d in d_list:
        alphas = [harmonic_dim(ell, d) for ell in range(q_max + 1)]
        ok = alphas[0] == 1 and alphas[1 if q_max >= 1 else 0] == (d if q_max >= 1 else 1) and min(alphas) > 0
        reports.append(CheckReport("alpha_table", f"d={d};q<={q_max};alpha={'|'.join(map(str, alphas))}",
                                   float(sum(alphas)), float(cumulative_dim(q_max, d)), 0.0, ok))
        for q in range(q_max + 1):
            beta = cumulative_dim(q, d)
            closed = cumulative_dim_closed_form(q, d)
            reports.append(CheckReport("beta", f"d={d};q={q}", float(beta), float(closed), 0.0, beta == closed))
            if d == 3:
                reports.append(CheckReport("beta_d3", f"q={q}", float(beta), float((q + 1) ** 2), 0.0,
                                           beta == (q + 1) ** 2))
    return reports


def suite_orthogonality(d_list, q_max, nodes=DEFAULT_NODES):
    reports = []
    for d in d_list:
        gram = quadrature_gram(d, q_max, nodes)
        for i in range(q_max + 1):
            for j in range(i, q_max + 1):
                if i == j:
                    target = orthogonality_target(d, i)
                    tol = 1e-9 * target
                else:
                    target, tol = 0.0, 1e-10
                reports.append(CheckReport("orthogonality", f"d={d};ell={i};ell2={j}", gram[i, j],
                                           target, tol, abs(gram[i, j] - target) <= tol))
    return reports


def suite_reproducing(d_list, q_max, checks=50, n=200_000, seed=0):
    """``checks`` randomized reproducing-property checks plus as many cross-degree checks."""
    reports = []
    rng = np.random.default_rng(seed)
    for k in range(checks):
        d = int(d_list[k % len(d_list)])
        ell = int(rng.integers(0, q_max + 1))
        point_rng = SphereRNG(derive_trial_seed(seed, 2 * k))
        x, y = point_rng.sphere(2, d)
        reports.append(check_reproducing(ProblemParams(d, max(q_max, ell)), ell, x, y, n,
                                         derive_trial_seed(seed, 2 * k + 1)))
        ell2 = int(rng.integers(0, q_max + 1))
        if ell2 == ell:
            ell2 = (ell + 1) % (q_max + 1)
        if ell2 != ell:
            reports.append(check_cross_degree(d, ell, ell2, x, y, n, derive_trial_seed(seed ^ 0xC0FFEE, k)))
    return reports


def suite_leverage(d_list, q_max, points=2, seed=0):
    reports = []
    for d in d_list:
        params = ProblemParams(d, q_max)
        ws = SphereRNG(derive_trial_seed(seed, d)).sphere(points, d)
        values = [check_leverage_constant(params, w) for w in ws]
        target = params.beta / params.area_d
        spread = max(values) - min(values)
        rel = max(abs(v - target) for v in values) / target
        listed = "|".join(f"{v:.17g}" for v in values)
        reports.append(CheckReport("leverage", f"d={d};q={q_max};points={points};values={listed}",
                                   values[0], target, 1e-12, spread == 0.0 and rel <= 1e-12))
    return reports


SUITES = {
    "dims": suite_dims,
    "orthogonality": suite_orthogonality,
    "reproducing": suite_reproducing,
    "leverage": suite_leverage,
}


def run_suite(name: str, d_list=(3, 4, 5), q_max: int = 10, **kwargs):
    if name == "all":
        return [r for key in SUITES for r in SUITES[key](d_list, q_max)]
    if name not in SUITES:
        raise InvalidParameterError(f"unknown suite {name!r}; choose from {sorted(SUITES) + ['all']}")
    return SUITES[name](d_list, q_max, **kwargs)
