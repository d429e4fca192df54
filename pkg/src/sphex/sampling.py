"""Reproducible uniform sampling on the unit sphere.

The random stream is pinned so that other implementations can replay it:

1. Uniforms: numpy's ``Philox`` (4x64, 10 rounds) keyed with the 64-bit seed,
   counter starting at zero.  Each raw 64-bit output ``r`` becomes the double
   ``(r >> 11) * 2**-53`` in [0, 1).
2. Normals: Marsaglia's polar method.  Uniforms are consumed in pairs
   ``(u1, u2)``, mapped to ``x = 2 u1 - 1``, ``y = 2 u2 - 1``; a pair is
   accepted iff ``0 < x^2 + y^2 < 1`` and then yields ``x * f`` followed by
   ``y * f`` with ``f = sqrt(-2 ln(r2) / r2)``.
3. Sphere points: ``d`` consecutive normals, divided by their Euclidean norm.
   A vector with norm below ``1e-150`` is discarded and the next ``d`` normals
   are used instead.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameterError

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_MIN_NORM = 1e-150


def _splitmix64_finalize(z: int) -> int:
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def derive_trial_seed(master_seed: int, trial_index: int) -> int:
    """Seed of an independent stream for trial ``trial_index``.

    SplitMix64 step: the finalizer is a bijection on 64-bit words and
    ``master + (i + 1) * golden`` is injective in ``i`` for a fixed master,
    so distinct trials never collide.
    """
    z = (int(master_seed) + (int(trial_index) + 1) * _GOLDEN) & _MASK64
    return _splitmix64_finalize(z)


class SphereRNG:
    """Sequential stream of uniforms, normals and sphere points for one seed."""

    def __init__(self, seed: int):
        self.seed = int(seed) & _MASK64
        self._bitgen = np.random.Philox(key=self.seed)
        self._spare = np.empty(0)

    def uniform(self, n: int) -> np.ndarray:
        raw = self._bitgen.random_raw(n)
        return (raw >> np.uint64(11)).astype(np.float64) * 2.0**-53

    def normal(self, n: int) -> np.ndarray:
        out = [self._spare[:n]]
        have = out[0].size
        self._spare = self._spare[n:]
        while have < n:
            pairs = max(16, int(0.65 * (n - have)) + 8)
            u = self.uniform(2 * pairs).reshape(pairs, 2)
            x = 2.0 * u[:, 0] - 1.0
            y = 2.0 * u[:, 1] - 1.0
            r2 = x * x + y * y
            keep = (r2 > 0.0) & (r2 < 1.0)
            x, y, r2 = x[keep], y[keep], r2[keep]
            f = np.sqrt(-2.0 * np.log(r2) / r2)
            fresh = np.column_stack((x * f, y * f)).ravel()
            take = min(n - have, fresh.size)
            out.append(fresh[:take])
            self._spare = fresh[take:]
            have += take
        return np.concatenate(out)

    def sphere(self, n: int, d: int) -> np.ndarray:
        rows = np.empty((0, d))
        while rows.shape[0] < n:
            need = n - rows.shape[0]
            g = self.normal(need * d).reshape(need, d)
            norms = np.sqrt(np.einsum("ij,ij->i", g, g))
            ok = norms >= _MIN_NORM
            rows = np.vstack((rows, g[ok] / norms[ok, None]))
        return rows


@dataclass(frozen=True, eq=False)
class SampleSet:
    """``s`` points on S^{d-1} (rows of ``points``) and the seed that made them."""

    points: np.ndarray
    seed: int | None
    d: int

    def __len__(self):
        return self.points.shape[0]

    def __eq__(self, other):
        if not isinstance(other, SampleSet):
            return NotImplemented
        return (self.d == other.d and self.seed == other.seed
                and np.array_equal(self.points, other.points))


def sample_uniform_sphere(d: int, n: int, seed: int) -> SampleSet:
    """Draw ``n`` i.i.d. uniform points on S^{d-1}, deterministically in ``seed``."""
    if isinstance(d, bool) or not isinstance(d, (int, np.integer)) or d < 2:
        raise InvalidParameterError(f"dimension d must be an integer >= 2, got {d!r}")
    if isinstance(n, bool) or not isinstance(n, (int, np.integer)) or n < 1:
        raise InvalidParameterError(f"number of points must be >= 1, got {n!r}")
    pts = SphereRNG(seed).sphere(int(n), int(d))
    pts.flags.writeable = False
    return SampleSet(pts, int(seed), int(d))


def as_points(points, d: int | None = None, tol: float = 1e-9) -> np.ndarray:
    """Validate an array of unit vectors (rows) and return it as float64 2-D."""
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    if pts.ndim != 2:
        raise InvalidParameterError("points must be a 1-D vector or a 2-D array of row vectors")
    if d is not None and pts.shape[1] != d:
        raise InvalidParameterError(f"points have dimension {pts.shape[1]}, expected {d}")
    if not np.all(np.isfinite(pts)):
        raise InvalidParameterError("points contain non-finite coordinates")
    dev = np.abs(np.linalg.norm(pts, axis=1) - 1.0)
    if dev.size and dev.max() > tol:
        raise InvalidParameterError(
            f"point {int(dev.argmax())} is not on the unit sphere (|norm - 1| = {dev.max():.3g})")
    return pts
