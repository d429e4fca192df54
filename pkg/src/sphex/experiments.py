"""Recovery-probability sweeps over (d, q, s) and the noisy-recovery probe.

Trial ``i`` of every cell uses the stream ``derive_trial_seed(master_seed, i)``
and splits it three ways: the random test function (sub-stream 0), the
sample points (1) and the held-out test points (2).  Results therefore do not
depend on how cells are scheduled over workers.
"""

from __future__ import annotations

import csv
import io
import logging
import math
import time
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields

import numpy as np

from .errors import InvalidParameterError, SphexError
from .harmonics import ProblemParams, ZonalSeries
from .modelio import atomic_write
from .regression import evaluate, fit
from .sampling import SphereRNG, derive_trial_seed, sample_uniform_sphere
from .validation import make_bandlimited

log = logging.getLogger(__name__)

CSV_HEADER = ("d", "q", "s", "beta", "trials", "successes", "success_rate",
              "median_error", "max_error", "wall_time_ms")
METRICS = ("max_abs", "rms", "rel_max")


@dataclass(frozen=True)
class ExperimentConfig:
    d_list: tuple = (3, 4)
    q_range: tuple = (5, 12)
    s_range: tuple = (40, 1200, 40)
    trials: int = 100
    master_seed: int = 0
    error_metric: str = "max_abs"
    threshold: float = 1e-12
    test_points: int = 100
    worker_count: int = 1
    record_timing: bool = False

    def __post_init__(self):
        if self.trials < 1:
            raise InvalidParameterError(f"trials must be >= 1, got {self.trials}")
        if not self.threshold > 0:
            raise InvalidParameterError(f"threshold must be positive, got {self.threshold}")
        if self.error_metric not in METRICS:
            raise InvalidParameterError(f"unknown error metric {self.error_metric!r}; choose from {METRICS}")
        if self.test_points < 1 or self.worker_count < 1:
            raise InvalidParameterError("test_points and worker_count must be >= 1")
        if not self.d_list or any(d < 2 for d in self.d_list):
            raise InvalidParameterError(f"d_list must be non-empty with every d >= 2, got {self.d_list}")
        q_lo, q_hi = self.q_range
        if q_lo < 0 or q_hi < q_lo:
            raise InvalidParameterError(f"empty or negative q range {self.q_range}")
        s_lo, s_hi, s_step = self.s_range
        if s_lo < 1 or s_hi < s_lo or s_step < 1:
            raise InvalidParameterError(f"empty s range {self.s_range}")

    def cells(self):
        q_lo, q_hi = self.q_range
        s_lo, s_hi, s_step = self.s_range
        return [(d, q, s) for d in self.d_list for q in range(q_lo, q_hi + 1)
                for s in range(s_lo, s_hi + 1, s_step)]


@dataclass(frozen=True)
class ExperimentResult:
    d: int
    q: int
    s: int
    beta: int
    trials: int
    successes: int
    success_rate: float
    median_error: float
    max_error: float
    wall_time_ms: int
    failures: tuple = field(default=(), compare=False)


def recovery_error(pred: np.ndarray, truth: np.ndarray, metric: str) -> float:
    diff = pred - truth
    if metric == "max_abs":
        return float(np.max(np.abs(diff)))
    if metric == "rms":
        return float(np.sqrt(np.mean(diff * diff)))
    if metric == "rel_max":
        return float(np.max(np.abs(diff)) / max(np.max(np.abs(truth)), np.finfo(float).tiny))
    raise InvalidParameterError(f"unknown error metric {metric!r}")


def run_trial(d, q, s, trial, config: ExperimentConfig):
    """One recovery attempt; returns ``(error, reason)`` with ``reason`` None on clean runs."""
    params = ProblemParams(d, q)
    seed = derive_trial_seed(config.master_seed, trial)
    f = make_bandlimited(params, derive_trial_seed(seed, 0))
    try:
        model = fit(f, params, s, derive_trial_seed(seed, 1))
        test = sample_uniform_sphere(d, config.test_points, derive_trial_seed(seed, 2)).points
        err = recovery_error(evaluate(model, test), f(test), config.error_metric)
    except (SphexError, np.linalg.LinAlgError, FloatingPointError) as exc:
        log.warning("trial %d of cell d=%d q=%d s=%d failed: %s", trial, d, q, s, exc)
        return math.inf, type(exc).__name__
    if not math.isfinite(err):
        return math.inf, "non_finite_error"
    return err, None


def run_cell(cell, config: ExperimentConfig) -> ExperimentResult:
    d, q, s = cell
    start = time.perf_counter()
    errors, reasons = [], Counter()
    for trial in range(config.trials):
        err, reason = run_trial(d, q, s, trial, config)
        errors.append(err)
        if reason:
            reasons[reason] += 1
    errors = np.array(errors)
    successes = int(np.sum(errors <= config.threshold))
    elapsed = round((time.perf_counter() - start) * 1000) if config.record_timing else 0
    return ExperimentResult(
        d=d, q=q, s=s, beta=ProblemParams(d, q).beta, trials=config.trials,
        successes=successes, success_rate=successes / config.trials,
        median_error=float(np.median(errors)), max_error=float(np.max(errors)),
        wall_time_ms=elapsed, failures=tuple(sorted(reasons.items())),
    )


def _cell_task(args):
    return run_cell(*args)


def run_cells(cells, config: ExperimentConfig):
    """Run arbitrary ``(d, q, s)`` cells; output is sorted by ``(d, q, s)``."""
    cells = sorted(set((int(d), int(q), int(s)) for d, q, s in cells))
    for d, q, s in cells:
        ProblemParams(d, q)
        if s < 1:
            raise InvalidParameterError(f"sample count must be >= 1 in cell {(d, q, s)}")
    if config.worker_count == 1 or len(cells) == 1:
        results = [run_cell(c, config) for c in cells]
    else:
        # biggest cells first so the pool drains evenly; order is restored below
        order = sorted(cells, key=lambda c: -c[2])
        with ProcessPoolExecutor(max_workers=config.worker_count) as pool:
            results = list(pool.map(_cell_task, [(c, config) for c in order]))
    return sorted(results, key=lambda r: (r.d, r.q, r.s))


def run_phase_transition(config: ExperimentConfig):
    """Success-probability grid over ``config.cells()``."""
    return run_cells(config.cells(), config)


def monotonicity_violations(results, trials=None):
    """Adjacent-``s`` drops in success rate larger than ``2 / trials``."""
    out = []
    by_dq = {}
    for r in results:
        by_dq.setdefault((r.d, r.q), []).append(r)
    for rows in by_dq.values():
        rows.sort(key=lambda r: r.s)
        for a, b in zip(rows, rows[1:]):
            n = trials or a.trials
            if a.success_rate - b.success_rate > 2.0 / n:
                out.append((a, b))
    return out


# -- noisy recovery -----------------------------------------------------------

@dataclass(frozen=True)
class NoisyRecoveryReport:
    d: int
    q: int
    s: int
    ratios: tuple
    eps_probe: float

    @property
    def median_ratio(self) -> float:
        return float(np.median(self.ratios))

    @property
    def fraction_within(self) -> float:
        """Share of trials whose realized ratio is at most ``eps_probe``."""
        return float(np.mean(np.asarray(self.ratios) <= self.eps_probe))


def run_noisy_recovery(params: ProblemParams, s: int, eps_probe: float, trials: int, seed: int, *,
                       high_coeff: float = 1.0, scale: float = 1.0, mc_points: int = 100_000):
    """Fit ``f = f_low + f_high`` at degree ``q`` and measure the excess error ratio.

    ``f_low`` is a random bandlimited function, ``f_high`` is ``high_coeff``
    times a degree-``q+1`` zonal harmonic about a random center.  Since
    ``f_high`` is orthogonal to every harmonic of degree ``<= q``, ``f_low`` is
    the exact low-degree projection, and each trial reports
    ``||y - f_low||^2 / ||f - f_low||^2`` (both squared norms by Monte Carlo).
    When ``f_high`` vanishes the ratio is undefined and the bare numerator
    ``||y - f_low||^2`` is reported instead.
    """
    if trials < 1:
        raise InvalidParameterError(f"trials must be >= 1, got {trials}")
    d, q = params.d, params.q
    high = ZonalSeries(d, [0.0] * (q + 1) + [float(high_coeff)])
    ratios = []
    for trial in range(trials):
        tseed = derive_trial_seed(seed, trial)
        f_low = make_bandlimited(params, derive_trial_seed(tseed, 0))
        u = SphereRNG(derive_trial_seed(tseed, 3)).sphere(1, d)[0]

        def f(x, f_low=f_low, u=u):
            return scale * (f_low(x) + high(np.asarray(x) @ u))

        model = fit(f, params, s, derive_trial_seed(tseed, 1))
        w = sample_uniform_sphere(d, mc_points, derive_trial_seed(tseed, 2)).points
        low_vals = scale * f_low(w)
        num = params.area_d * float(np.mean((evaluate(model, w) - low_vals) ** 2))
        den = params.area_d * float(np.mean((f(w) - low_vals) ** 2))
        ratios.append(num / den if den > 0.0 else num)
    return NoisyRecoveryReport(d, q, s, tuple(ratios), float(eps_probe))


# -- CSV ----------------------------------------------------------------------

def _fmt(value) -> str:
    return str(value) if isinstance(value, (int, np.integer)) else repr(float(value))


def results_to_csv(results) -> str:
    if not results:
        raise InvalidParameterError("no results to write")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for r in results:
        writer.writerow([_fmt(getattr(r, name)) for name in CSV_HEADER])
    return buf.getvalue()


def emit_csv(results, path) -> None:
    atomic_write(path, results_to_csv(results))


_INT_FIELDS = {f.name for f in fields(ExperimentResult) if f.type in ("int", int)}


def parse_csv(text: str):
    """Inverse of :func:`results_to_csv`."""
    reader = csv.reader(io.StringIO(text))
    header = tuple(next(reader, ()))
    if header != CSV_HEADER:
        raise InvalidParameterError(f"unexpected CSV header {header!r}")
    out = []
    for row in reader:
        if not row:
            continue
        kwargs = {name: (int(v) if name in _INT_FIELDS else float(v)) for name, v in zip(CSV_HEADER, row)}
        out.append(ExperimentResult(**kwargs))
    return out


def read_csv(path):
    with open(path, encoding="utf-8") as fh:
        return parse_csv(fh.read())
