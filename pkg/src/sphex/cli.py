"""Command-line front end: ``sphex {fit, eval, check, phase, noisy}``.

Exit codes: 0 success, 1 invalid input or usage, 2 numerical failure, 3 file I/O.
"""

from __future__ import annotations

import argparse
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np

from .errors import FileAccessError, InputDataError, InvalidParameterError, SphexError
from .experiments import (
    METRICS,
    ExperimentConfig,
    emit_csv,
    results_to_csv,
    run_noisy_recovery,
    run_phase_transition,
)
from .harmonics import ProblemParams, ZonalSeries
from .modelio import load_model, save_model
from .plotting import emit_plot_script, render_figure
from .regression import evaluate, fit, fit_samples
from .sampling import SphereRNG, derive_trial_seed
from .validation import SUITES, make_bandlimited, run_suite

log = logging.getLogger("sphex")

EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL, EXIT_IO = 0, 1, 2, 3
UNIT_TOL = 1e-9


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on usage errors; here 2 means a numerical failure."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# -- text tables --------------------------------------------------------------

def read_table(path, columns: int, what: str = "record"):
    """Rows of ``columns`` reals from a whitespace-separated text file.

    Blank lines and ``#`` comments are skipped.  Returns the array and the
    1-based line number of every row.
    """
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise FileAccessError(f"cannot read {path}: {exc.strerror or exc}") from exc
    except UnicodeDecodeError as exc:
        raise InputDataError(f"{path}: not UTF-8 text ({exc.reason})") from exc
    rows, lines = [], []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0].strip()
        if not body:
            continue
        fields = body.split()
        if len(fields) != columns:
            raise InputDataError(f"{path}:{lineno}: expected {columns} numbers per {what}, found {len(fields)}")
        try:
            row = [float(x) for x in fields]
        except ValueError as exc:
            raise InputDataError(f"{path}:{lineno}: {exc}") from exc
        if not all(math.isfinite(x) for x in row):
            raise InputDataError(f"{path}:{lineno}: non-finite number")
        rows.append(row)
        lines.append(lineno)
    if not rows:
        raise InputDataError(f"{path}: no {what}s found")
    return np.array(rows, dtype=np.float64), lines


def _check_unit(points, lines, path):
    dev = np.abs(np.linalg.norm(points, axis=1) - 1.0)
    bad = np.flatnonzero(dev > UNIT_TOL)
    if bad.size:
        i = bad[0]
        raise InvalidParameterError(f"{path}:{lines[i]}: point is not unit-norm (|norm - 1| = {dev[i]:.3g})")


def read_points(path, d: int):
    pts, lines = read_table(path, d, "point")
    _check_unit(pts, lines, path)
    return pts


def read_samples(path, d: int):
    """Sample file: each record is ``d`` coordinates followed by the function value."""
    table, lines = read_table(path, d + 1, "sample")
    pts = table[:, :d]
    _check_unit(pts, lines, path)
    return pts, table[:, d]


# -- built-in oracles ---------------------------------------------------------

def make_oracle(spec: str, d: int):
    """``const``, ``coord1``, ``zonal:q:seed`` or ``zonal-plus-noise:q:seed``.

    ``zonal-plus-noise`` adds a degree ``q + 1`` zonal harmonic to the random
    degree-``q`` function, which is invisible to a degree-``q`` fit.
    """
    name, *rest = spec.split(":")
    if name == "const" and not rest:
        return lambda x: 1.0
    if name == "coord1" and not rest:
        return lambda x: np.asarray(x)[..., 0]
    if name in ("zonal", "zonal-plus-noise") and len(rest) == 2:
        try:
            q, seed = int(rest[0]), int(rest[1])
        except ValueError:
            raise InvalidParameterError(f"oracle {spec!r}: q and seed must be integers") from None
        if seed < 0:
            raise InvalidParameterError(f"oracle {spec!r}: seed must be >= 0")
        low = make_bandlimited(ProblemParams(d, q), seed)
        if name == "zonal":
            return low
        high = ZonalSeries(d, [0.0] * (q + 1) + [1.0])
        u = SphereRNG(derive_trial_seed(seed, 3)).sphere(1, d)[0]
        return lambda x: low(x) + high(np.asarray(x) @ u)
    raise InvalidParameterError(
        f"unknown oracle {spec!r}; use const, coord1, zonal:q:seed or zonal-plus-noise:q:seed")


# -- commands -----------------------------------------------------------------

def _writable(path):
    parent = Path(path).resolve().parent
    if not parent.is_dir() or not os.access(parent, os.W_OK):
        raise FileAccessError(f"cannot write {path}: directory {parent} is missing or read-only")


def _positive(name, value):
    if value < 1:
        raise InvalidParameterError(f"--{name} must be >= 1, got {value}")


def cmd_fit(args) -> int:
    params = ProblemParams(args.d, args.q)
    if args.rank_tol is not None and not args.rank_tol >= 0:
        raise InvalidParameterError("--rank-tol must be non-negative")
    if args.out:
        _writable(args.out)
    if args.samples_file:
        pts, vals = read_samples(args.samples_file, params.d)
        print("warning: the recovery guarantee assumes i.i.d. uniform samples on the sphere; "
              "points from a file are used as given", file=sys.stderr)
        model = fit_samples(pts, vals, params, rank_tol=args.rank_tol)
    else:
        if args.s is None:
            raise InvalidParameterError("--oracle needs --s")
        _positive("s", args.s)
        if args.seed < 0:
            raise InvalidParameterError("--seed must be >= 0")
        oracle = make_oracle(args.oracle, params.d)
        model = fit(oracle, params, args.s, args.seed, rank_tol=args.rank_tol)
    info = model.info
    print(f"s {model.s}")
    print(f"beta {params.beta}")
    print(f"rank {info.rank}")
    print(f"condition {info.condition:.17g}")
    print(f"residual {info.residual:.17g}")
    if args.out:
        save_model(model, args.out)
        print(f"model {args.out}")
    return EXIT_OK


def cmd_eval(args) -> int:
    model = load_model(args.model)
    pts = read_points(args.points, model.params.d)
    values = evaluate(model, pts)
    sys.stdout.write("".join(f"{v:.17g}\n" for v in values))
    return EXIT_OK


def cmd_check(args) -> int:
    d_list = tuple(args.d) if args.d else (3, 4, 5)
    kwargs = {}
    if args.seed is not None and args.suite in ("reproducing", "leverage"):
        kwargs["seed"] = args.seed
    reports = run_suite(args.suite, d_list=d_list, q_max=args.q, **kwargs)
    for r in reports:
        print(r.line())
    failed = sum(not r.passed for r in reports)
    print(f"{len(reports) - failed}/{len(reports)} checks passed", file=sys.stderr)
    return EXIT_OK if failed == 0 else EXIT_USAGE


def cmd_phase(args) -> int:
    config = ExperimentConfig(
        d_list=tuple(args.d_list), q_range=(args.q_min, args.q_max),
        s_range=(args.s_min, args.s_max, args.s_step), trials=args.trials,
        master_seed=args.seed, error_metric=args.metric, threshold=args.threshold,
        test_points=args.test_points, worker_count=args.workers, record_timing=args.timing,
    )
    for d in config.d_list:
        ProblemParams(d, args.q_max)
    outputs = [p for p in (args.out_csv, args.out_plot, args.out_fig) if p]
    for p in outputs:
        _writable(p)
    results = run_phase_transition(config)
    if args.out_csv:
        emit_csv(results, args.out_csv)
    else:
        sys.stdout.write(results_to_csv(results))
    if args.out_plot:
        prefix = Path(args.out_plot).with_suffix("").name
        emit_plot_script(results, args.out_plot, image_prefix=prefix)
    if args.out_fig:
        render_figure(results, args.out_fig)
    failed = sum(r.trials - r.successes for r in results)
    print(f"{len(results)} cells, {failed} failed trials", file=sys.stderr)
    return EXIT_OK


def cmd_noisy(args) -> int:
    params = ProblemParams(args.d, args.q)
    _positive("s", args.s)
    _positive("trials", args.trials)
    report = run_noisy_recovery(params, args.s, args.eps, args.trials, args.seed,
                                high_coeff=args.high_coeff, mc_points=args.mc_points)
    for i, r in enumerate(report.ratios):
        print(f"trial {i} ratio {r:.17g}")
    print(f"median_ratio {report.median_ratio:.17g}")
    print(f"fraction_within_eps {report.fraction_within:.17g}")
    return EXIT_OK


# -- parser -------------------------------------------------------------------

def _int_list(text):
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.RawDescriptionHelpFormatter
    p = _Parser(prog="sphex", description="Recover spherical harmonic expansions from uniform samples.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True, metavar="COMMAND")

    f = sub.add_parser("fit", formatter_class=fmt, help="fit a degree-q expansion",
                       description="""\
Fit the degree-<=q spherical harmonic expansion of a function on S^{d-1}.

Solves z = K^+ f over the s x s Gram matrix
  K_ij = sum_l alpha_{l,d} / s * P_d^l(<w_i, w_j>),  f_j = sqrt(|S^{d-1}| / s) f(w_j)
and stores the points and weights z.  With s >= beta_{q,d} uniform samples a
function of degree <= q is recovered exactly with high probability.""")
    f.add_argument("--d", type=int, required=True, help="ambient dimension (sphere S^{d-1})")
    f.add_argument("--q", type=int, required=True, help="maximum harmonic degree")
    src = f.add_mutually_exclusive_group(required=True)
    src.add_argument("--samples-file", help="text file, one sample per line: d coordinates then the value")
    src.add_argument("--oracle", help="const | coord1 | zonal:q:seed | zonal-plus-noise:q:seed")
    f.add_argument("--s", type=int, help="number of uniform samples (with --oracle)")
    f.add_argument("--seed", type=int, default=0, help="sampling seed (with --oracle)")
    f.add_argument("--rank-tol", type=float, default=None,
                   help="relative eigenvalue cutoff for the pseudoinverse (default s * eps)")
    f.add_argument("--out", help="model file to write (SHEX binary)")
    f.set_defaults(func=cmd_fit)

    e = sub.add_parser("eval", formatter_class=fmt, help="evaluate a stored model",
                       description="""\
Evaluate y(sigma) = sum_l alpha_l / sqrt(s |S^{d-1}|) sum_j z_j P_d^l(<w_j, sigma>)
at every point of a text file (one point per line).  Prints one value per line.""")
    e.add_argument("--model", required=True, help="SHEX model file")
    e.add_argument("--points", required=True, help="text file of unit vectors, one per line")
    e.set_defaults(func=cmd_eval)

    c = sub.add_parser("check", formatter_class=fmt, help="run a validation suite",
                       description="""\
Numerical checks of the identities the method relies on:
  dims           alpha_{l,d} and beta_{q,d} against closed forms
  orthogonality  quadrature Gram of the Gegenbauer polynomials
  reproducing    P(<x,y>) = alpha E_w[P(<x,w>) P(<y,w>)] by Monte Carlo
  leverage       kernel diagonal equals beta_{q,d} / |S^{d-1}| everywhere
Exit status is 0 only if every check passes.""")
    c.add_argument("--suite", required=True, choices=sorted(SUITES) + ["all"])
    c.add_argument("--d", type=_int_list, default=None, help="dimensions, comma separated (default 3,4,5)")
    c.add_argument("--q", type=int, default=10, help="maximum degree (default 10)")
    c.add_argument("--seed", type=int, default=None, help="seed for the randomized suites")
    c.set_defaults(func=cmd_check)

    ph = sub.add_parser("phase", formatter_class=fmt, help="recovery-probability sweep",
                        description="""\
Empirical probability of exact recovery over a (d, q, s) grid.  Each trial fits
a random zonal function of degree <= q and counts a success when the chosen
error metric on held-out uniform points is at most the threshold.  Writes a CSV
table, optionally a gnuplot script and a rendered figure.""")
    ph.add_argument("--d-list", type=_int_list, default=[3, 4], help="dimensions (default 3,4)")
    ph.add_argument("--q-min", type=int, default=5)
    ph.add_argument("--q-max", type=int, default=12)
    ph.add_argument("--s-min", type=int, default=40)
    ph.add_argument("--s-max", type=int, default=1200)
    ph.add_argument("--s-step", type=int, default=40)
    ph.add_argument("--trials", type=int, default=100)
    ph.add_argument("--seed", type=int, default=0, help="master seed")
    ph.add_argument("--threshold", type=float, default=1e-12)
    ph.add_argument("--metric", choices=METRICS, default="max_abs")
    ph.add_argument("--test-points", type=int, default=100)
    ph.add_argument("--workers", type=int, default=1)
    ph.add_argument("--timing", action="store_true", help="record wall time per cell (breaks byte-identity)")
    ph.add_argument("--out-csv", help="CSV output (default stdout)")
    ph.add_argument("--out-plot", help="gnuplot script output")
    ph.add_argument("--out-fig", help="figure output rendered with matplotlib (.png, .pdf, .svg)")
    ph.set_defaults(func=cmd_phase)

    n = sub.add_parser("noisy", formatter_class=fmt, help="excess-error ratio for non-bandlimited input",
                       description="""\
Fit f = f_low + f_high at degree q, where f_high is a degree q+1 zonal harmonic,
and report ||y - f_low||^2 / ||f - f_low||^2 per trial (Monte Carlo norms).""")
    n.add_argument("--d", type=int, required=True)
    n.add_argument("--q", type=int, required=True)
    n.add_argument("--s", type=int, required=True)
    n.add_argument("--trials", type=int, default=20)
    n.add_argument("--seed", type=int, default=0)
    n.add_argument("--eps", type=float, default=0.5, help="ratio reported as 'within' when <= eps")
    n.add_argument("--high-coeff", type=float, default=1.0)
    n.add_argument("--mc-points", type=int, default=100_000)
    n.set_defaults(func=cmd_noisy)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except SphexError as exc:
        print(f"sphex {args.command}: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except np.linalg.LinAlgError as exc:
        print(f"sphex {args.command}: numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"sphex {args.command}: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
