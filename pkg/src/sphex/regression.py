"""Kernel least-squares recovery of a degree-``q`` spherical harmonic expansion.

Given ``s`` uniform points ``w_j`` and values ``f(w_j)``, the recovered
function is

    y(sigma) = sum_l alpha_l / sqrt(s |S^{d-1}|) * sum_j z_j P_d^l(<w_j, sigma>)

with ``z = K^+ f_vec``, ``K_ij = sum_l alpha_l / s * P_d^l(<w_i, w_j>)`` and
``f_vec_j = sqrt(|S^{d-1}| / s) f(w_j)``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.linalg

from .errors import InputDataError, InvalidParameterError, NumericalError
from .harmonics import ProblemParams, ZonalSeries
from .sampling import SampleSet, as_points, sample_uniform_sphere

log = logging.getLogger(__name__)

_EVAL_CHUNK = 128


def _kernel_series(params: ProblemParams, scale: float = 1.0) -> ZonalSeries:
    return ZonalSeries(params.d, [scale * a for a in params.alpha])


def kernel_value(params: ProblemParams, t):
    """Reproducing kernel of the degree-``<= q`` harmonics, ``sum_l alpha_l / |S| P_d^l(t)``."""
    return _kernel_series(params, 1.0 / params.area_d)(t)


@dataclass(frozen=True, eq=False)
class GramMatrix:
    entries: np.ndarray
    params: ProblemParams

    @property
    def s(self) -> int:
        return self.entries.shape[0]


def _inner_products(points: np.ndarray) -> np.ndarray:
    t = points @ points.T
    t = 0.5 * (t + t.T)  # exact symmetry; a + b == b + a in IEEE arithmetic
    np.fill_diagonal(t, 1.0)
    return np.clip(t, -1.0, 1.0, out=t)


def build_gram(points, params: ProblemParams) -> GramMatrix:
    """Gram matrix ``K_ij = sum_l alpha_l / s * P_d^l(<w_i, w_j>)``.

    Each inner product is formed once and shared by all degrees.
    """
    pts = points.points if isinstance(points, SampleSet) else np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[0] < 1:
        raise InvalidParameterError("need at least one sample point")
    if pts.shape[1] != params.d:
        raise InvalidParameterError(f"points live in R^{pts.shape[1]} but params.d = {params.d}")
    s = pts.shape[0]
    t = _inner_products(pts)
    _kernel_series(params, 1.0 / s).apply_inplace(t)
    return GramMatrix(t, params)


def _top_eigh(K: np.ndarray, floor: float):
    """Eigenpairs of symmetric ``K`` with eigenvalue above ``floor``, ascending."""
    try:
        return scipy.linalg.eigh(K, driver="evr", subset_by_value=(floor, np.inf), check_finite=False)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NumericalError(
            f"symmetric eigensolver did not converge (s={K.shape[0]}, trace={np.trace(K):.6g}, "
            f"max|K_ij|={np.max(np.abs(K)):.6g}, finite={bool(np.all(np.isfinite(K)))})"
        ) from exc


@dataclass
class SolveInfo:
    """Diagnostics of one pseudoinverse solve."""

    rank: int
    lambda_max: float
    lambda_min_kept: float
    cutoff: float
    residual: float

    @property
    def condition(self) -> float:
        if self.rank == 0:
            return math.inf
        return self.lambda_max / self.lambda_min_kept


def _pinv(K, f, rank_tol):
    K = K.entries if isinstance(K, GramMatrix) else np.asarray(K, dtype=np.float64)
    f = np.asarray(f, dtype=np.float64)
    if K.ndim != 2 or K.shape[0] != K.shape[1]:
        raise InvalidParameterError(f"K must be square, got shape {K.shape}")
    if f.shape != (K.shape[0],):
        raise InvalidParameterError(f"right-hand side has shape {f.shape}, expected ({K.shape[0]},)")
    s = K.shape[0]
    if rank_tol is None:
        rank_tol = s * np.finfo(np.float64).eps
    if rank_tol < 0:
        raise InvalidParameterError("rank_tol must be non-negative")
    # For PSD K, lambda_max >= max(diag K), so this floor never drops a kept eigenvalue.
    floor = rank_tol * max(float(np.max(np.diag(K))), 0.0)
    lam, vecs = _top_eigh(K, floor)
    lam_max = max(float(lam[-1]), 0.0) if lam.size else 0.0
    cutoff = rank_tol * lam_max
    keep = lam > cutoff
    if lam_max == 0.0:
        keep[:] = False
    v = vecs[:, keep]
    z = v @ ((v.T @ f) / lam[keep])
    resid = float(np.linalg.norm(K @ z - f))
    kept = lam[keep]
    info = SolveInfo(
        rank=int(keep.sum()),
        lambda_max=lam_max,
        lambda_min_kept=float(kept[0]) if kept.size else 0.0,
        cutoff=cutoff,
        residual=resid,
    )
    return z, info


def pinv_solve(K, f, rank_tol: float | None = None) -> np.ndarray:
    """``z = K^+ f`` through a symmetric eigendecomposition.

    Eigenvalues ``<= rank_tol * lambda_max`` are treated as zero; the default
    ``rank_tol`` is ``s * eps``.
    """
    return _pinv(K, f, rank_tol)[0]


@dataclass(frozen=True, eq=False)
class ExpansionModel:
    """A recovered function in the span of the zonal kernels at the sample points."""

    points: np.ndarray
    weights: np.ndarray
    params: ProblemParams
    seed: int | None = None
    info: SolveInfo | None = field(default=None, repr=False)

    @property
    def s(self) -> int:
        return self.points.shape[0]

    @property
    def scale(self) -> float:
        return math.sqrt(self.s * self.params.area_d)

    def __eq__(self, other):
        if not isinstance(other, ExpansionModel):
            return NotImplemented
        return (self.params == other.params
                and np.array_equal(self.points, other.points)
                and np.array_equal(self.weights, other.weights))

    def __call__(self, sigma):
        return evaluate(self, sigma)


def fit_samples(points, values, params: ProblemParams, *, rank_tol=None, seed=None) -> ExpansionModel:
    """Fit from points already evaluated (``values[j] = f(points[j])``)."""
    pts = points.points if isinstance(points, SampleSet) else as_points(points, params.d)
    vals = np.asarray(values, dtype=np.float64)
    if vals.shape != (pts.shape[0],):
        raise InvalidParameterError(f"expected {pts.shape[0]} values, got shape {vals.shape}")
    bad = np.flatnonzero(~np.isfinite(vals))
    if bad.size:
        raise InputDataError(f"oracle returned a non-finite value {vals[bad[0]]!r} at sample index {bad[0]}")
    s = pts.shape[0]
    K = build_gram(pts, params)
    fvec = math.sqrt(params.area_d / s) * vals
    z, info = _pinv(K, fvec, rank_tol)
    return ExpansionModel(np.array(pts), z, params, seed=seed, info=info)


def fit(f_oracle: Callable, params: ProblemParams, s: int, seed: int, *, rank_tol=None) -> ExpansionModel:
    """Recover the degree-``<= q`` expansion of ``f_oracle`` from ``s`` uniform samples.

    The oracle is called exactly ``s`` times, one point at a time, in sample order.
    """
    if isinstance(s, bool) or not isinstance(s, (int, np.integer)) or s < 1:
        raise InvalidParameterError(f"sample count s must be >= 1, got {s!r}")
    sample = sample_uniform_sphere(params.d, int(s), seed)
    values = np.empty(int(s))
    for j, w in enumerate(sample.points):
        try:
            values[j] = float(f_oracle(w))
        except (TypeError, ValueError) as exc:
            raise InputDataError(f"oracle failed at sample index {j}: {exc}") from exc
        if not math.isfinite(values[j]):
            raise InputDataError(f"oracle returned a non-finite value {values[j]!r} at sample index {j}")
    return fit_samples(sample, values, params, rank_tol=rank_tol, seed=seed)


def evaluate(model: ExpansionModel, sigma):
    """Evaluate the recovered function at one point (1-D) or many points (rows)."""
    sig = np.asarray(sigma, dtype=np.float64)
    single = sig.ndim == 1
    sig = np.atleast_2d(sig)
    if sig.ndim != 2 or sig.shape[1] != model.params.d:
        raise InvalidParameterError(
            f"evaluation point(s) have shape {np.shape(sigma)}, model dimension is {model.params.d}")
    series = _kernel_series(model.params, 1.0 / model.scale)
    out = np.empty(sig.shape[0])
    for lo in range(0, sig.shape[0], _EVAL_CHUNK):
        t = sig[lo:lo + _EVAL_CHUNK] @ model.points.T
        np.clip(t, -1.0, 1.0, out=t)
        out[lo:lo + _EVAL_CHUNK] = series.apply_inplace(t) @ model.weights
    return float(out[0]) if single else out


def sample_count(params: ProblemParams, eps: float, delta: float, c: float = 1.0) -> int:
    """``ceil(c * beta / eps^2 * (ln beta + 1 / delta))`` with ``ln beta`` floored at 1."""
    if not (0.0 < eps <= 1.0):
        raise InvalidParameterError(f"eps must lie in (0, 1], got {eps!r}")
    if not (0.0 < delta <= 1.0):
        raise InvalidParameterError(f"delta must lie in (0, 1], got {delta!r}")
    if not c > 0.0:
        raise InvalidParameterError(f"c must be positive, got {c!r}")
    beta = params.beta
    log_beta = max(math.log(beta), 1.0)
    return max(1, math.ceil(c * beta / eps**2 * (log_beta + 1.0 / delta)))
