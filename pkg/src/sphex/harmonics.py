"""Dimension counts, sphere areas and Gegenbauer polynomials.

Everything downstream is built on the normalized Gegenbauer polynomial
``P_d^l`` (``P_d^l(1) == 1``) written in the mixed monomial form

    P_d^l(t) = sum_j c_j * t**(l - 2j) * (1 - t**2)**j ,   j = 0 .. l // 2

with ``c_0 = 1`` and ``c_{j+1} / c_j = -(l-2j)(l-2j-1) / (2 (j+1) (d-1+2j))``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from ._kernels import split_series
from .errors import DomainError, InvalidParameterError

MAX_DEGREE = 64
CLAMP_TOL = 1e-9
_INT64_MAX = 2**63 - 1


def _check_d(d, minimum=2):
    if isinstance(d, bool) or not isinstance(d, (int, np.integer)) or d < minimum:
        raise InvalidParameterError(f"dimension d must be an integer >= {minimum}, got {d!r}")
    return int(d)


def _check_degree(ell, name="ell"):
    if isinstance(ell, bool) or not isinstance(ell, (int, np.integer)) or ell < 0:
        raise InvalidParameterError(f"{name} must be a non-negative integer, got {ell!r}")
    return int(ell)


def _checked(value: int, what: str) -> int:
    if value > _INT64_MAX:
        raise InvalidParameterError(f"{what} = {value} overflows a signed 64-bit integer")
    return value


def harmonic_dim(ell: int, d: int) -> int:
    """Dimension of the space of degree-``ell`` spherical harmonics on S^{d-1}.

    Exact integer arithmetic; raises if the result does not fit in 64 bits.
    """
    d = _check_d(d)
    ell = _check_degree(ell)
    if ell == 0:
        return 1
    if ell == 1:
        return d
    return _checked(math.comb(d + ell - 1, ell) - math.comb(d + ell - 3, ell - 2), "harmonic_dim")


def cumulative_dim(q: int, d: int) -> int:
    """Dimension of the space of spherical harmonics of degree at most ``q``.

    Computed by direct summation of :func:`harmonic_dim`.
    """
    d = _check_d(d)
    q = _check_degree(q, "q")
    return _checked(sum(harmonic_dim(ell, d) for ell in range(q + 1)), "cumulative_dim")


def cumulative_dim_closed_form(q: int, d: int) -> int:
    """``C(d+q-1, q) + C(d+q-2, q-1)``, the closed form of :func:`cumulative_dim`.

    Kept for cross-checking only; ``C(n, -1)`` is taken as 0.
    """
    d = _check_d(d)
    q = _check_degree(q, "q")
    tail = math.comb(d + q - 2, q - 1) if q >= 1 else 0
    return math.comb(d + q - 1, q) + tail


def sphere_area(d: int) -> float:
    """Surface area of the unit sphere S^{d-1} in R^d, ``2 pi^{d/2} / Gamma(d/2)``."""
    d = _check_d(d, minimum=1)
    return math.exp(math.log(2.0) + 0.5 * d * math.log(math.pi) - math.lgamma(0.5 * d))


@dataclass(frozen=True)
class ProblemParams:
    """Dimension ``d`` and maximum degree ``q`` plus the derived constants."""

    d: int
    q: int
    alpha: tuple = field(init=False)
    beta: int = field(init=False)
    area_d: float = field(init=False)
    area_dm1: float | None = field(init=False)

    def __post_init__(self):
        d = _check_d(self.d)
        q = _check_degree(self.q, "q")
        if q > MAX_DEGREE:
            raise InvalidParameterError(f"q = {q} exceeds the supported maximum degree {MAX_DEGREE}")
        alpha = tuple(harmonic_dim(ell, d) for ell in range(q + 1))
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "beta", _checked(sum(alpha), "beta"))
        object.__setattr__(self, "area_d", sphere_area(d))
        object.__setattr__(self, "area_dm1", sphere_area(d - 1) if d >= 3 else None)

    @property
    def leverage(self) -> float:
        """The constant leverage value ``beta / |S^{d-1}|``."""
        return self.beta / self.area_d


@dataclass(frozen=True)
class GegenbauerPoly:
    d: int
    ell: int
    coeffs: tuple

    def __call__(self, t):
        return gegenbauer_eval(self, t)


@lru_cache(maxsize=None)
def _coefficients(d: int, ell: int) -> tuple:
    coeffs = [1.0]
    for j in range(ell // 2):
        ratio = -((ell - 2 * j) * (ell - 2 * j - 1)) / (2.0 * (j + 1) * (d - 1 + 2 * j))
        coeffs.append(coeffs[-1] * ratio)
    return tuple(coeffs)


def gegenbauer_build(d: int, ell: int) -> GegenbauerPoly:
    """Coefficients ``c_0 .. c_{ell // 2}`` of the normalized Gegenbauer polynomial."""
    d = _check_d(d)
    ell = _check_degree(ell)
    if ell > MAX_DEGREE:
        raise InvalidParameterError(f"degree {ell} exceeds the supported maximum {MAX_DEGREE}")
    return GegenbauerPoly(d, ell, _coefficients(d, ell))


def clamp_unit(t):
    """Clamp inner products to [-1, 1], tolerating roundoff of up to ``CLAMP_TOL``.

    Returns a float for scalar input, an ndarray otherwise.
    """
    arr = np.asarray(t, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise DomainError("non-finite argument to a Gegenbauer polynomial")
    if arr.size and np.max(np.abs(arr)) > 1.0 + CLAMP_TOL:
        bad = float(arr.flat[np.argmax(np.abs(arr))])
        raise DomainError(f"argument {bad!r} lies outside [-1, 1]")
    arr = np.clip(arr, -1.0, 1.0)
    return float(arr) if arr.ndim == 0 else arr


def _horner(coeffs, ell, t, tsq, omt_pows):
    # homogeneous Horner in (t^2, 1 - t^2): sum_j c_j (t^2)^(m-j) (1-t^2)^j
    acc = coeffs[0]
    for j in range(1, len(coeffs)):
        acc = acc * tsq + coeffs[j] * omt_pows[j]
    if ell % 2:
        acc = acc * t
    return acc


def _omt_powers(tsq, m):
    pows = [None, 1.0 - tsq]
    for _ in range(2, m + 1):
        pows.append(pows[-1] * pows[1])
    return pows


def gegenbauer_eval(p: GegenbauerPoly, t):
    """Evaluate ``p`` at ``t`` (scalar or array)."""
    t = clamp_unit(t)
    tsq = t * t
    out = _horner(p.coeffs, p.ell, t, tsq, _omt_powers(tsq, len(p.coeffs) - 1))
    if np.ndim(t) == 0:
        return float(out)
    # ell == 0 yields the bare scalar 1.0; broadcast to the input shape
    return np.broadcast_to(np.asarray(out, dtype=np.float64), np.shape(t)).copy()


def gegenbauer_table(d: int, q: int, t) -> np.ndarray:
    """All of ``P_d^0(t) .. P_d^q(t)``, stacked along a new leading axis."""
    t = np.asarray(clamp_unit(t), dtype=np.float64)
    tsq = t * t
    pows = _omt_powers(tsq, q // 2)
    out = np.empty((q + 1,) + t.shape)
    for ell in range(q + 1):
        out[ell] = _horner(gegenbauer_build(d, ell).coeffs, ell, t, tsq, pows)
    return out


def _split_coefficients(d, weights):
    # Lift every degree to a common homogeneous degree via (t^2 + (1-t^2))^k = 1,
    # so the whole series becomes one even and one odd Horner pass.
    q = len(weights) - 1
    m_even, m_odd = q // 2, max(q - 1, 0) // 2
    even = np.zeros(m_even + 1)
    odd = np.zeros(m_odd + 1)
    for ell, w in enumerate(weights):
        if w == 0.0:
            continue
        m = ell // 2
        top, target = (m_odd, odd) if ell % 2 else (m_even, even)
        lift = [math.comb(top - m, k) for k in range(top - m + 1)]
        for j, c in enumerate(_coefficients(d, ell)):
            for k, binom in enumerate(lift):
                target[j + k] += w * c * binom
    return even, odd


class ZonalSeries:
    """The univariate polynomial ``t -> sum_l weights[l] * P_d^l(t)``.

    Coefficients are combined once at construction; calls cost one even and
    one odd Horner pass of length about ``q / 2`` per argument, independent
    of how many degrees carry weight.
    """

    def __init__(self, d: int, weights):
        self.d = _check_d(d)
        self.weights = tuple(float(w) for w in weights)
        if not self.weights:
            raise InvalidParameterError("a zonal series needs at least one degree")
        if len(self.weights) - 1 > MAX_DEGREE:
            raise InvalidParameterError(f"degree {len(self.weights) - 1} exceeds {MAX_DEGREE}")
        self._even, self._odd = _split_coefficients(self.d, self.weights)

    @property
    def degree(self) -> int:
        return len(self.weights) - 1

    def __call__(self, t):
        scalar = np.ndim(t) == 0
        t = np.ascontiguousarray(clamp_unit(t), dtype=np.float64)
        out = np.empty_like(t)
        split_series(t.reshape(-1), self._even, self._odd, out.reshape(-1))
        return float(out[0]) if scalar else out

    def apply_inplace(self, t: np.ndarray) -> np.ndarray:
        """Overwrite a C-contiguous float64 array of clamped arguments with the series."""
        flat = t.reshape(-1)
        split_series(flat, self._even, self._odd, flat)
        return t


def zonal_series(d: int, weights, t):
    """``sum_l weights[l] * P_d^l(t)``; see :class:`ZonalSeries`."""
    return ZonalSeries(d, weights)(t)
