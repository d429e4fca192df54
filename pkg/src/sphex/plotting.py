"""Phase-transition figures: a gnuplot script and a matplotlib rendering.

Both show the success rate as a heatmap over ``(q, s)``, one panel per
dimension, with the curve ``s = beta_{q,d}`` drawn on top.
"""

from __future__ import annotations

from collections import defaultdict

import numpy as np

from .errors import FileAccessError, InvalidParameterError
from .harmonics import cumulative_dim
from .modelio import atomic_write

STYLE = {
    "figure.dpi": 120,
    "savefig.dpi": 150,
    "font.size": 10,
    "axes.labelsize": 10,
    "axes.titlesize": 11,
    "legend.fontsize": 8,
    "xtick.direction": "in",
    "ytick.direction": "in",
}


def _by_dimension(results):
    if not results:
        raise InvalidParameterError("no results to plot")
    groups = defaultdict(list)
    for r in results:
        groups[r.d].append(r)
    return dict(sorted(groups.items()))


def plot_script(results, image_prefix: str = "phase") -> str:
    """Self-contained gnuplot (>= 5.0) script; data is embedded as datablocks."""
    groups = _by_dimension(results)
    lines = [
        "# success rate of spherical harmonic recovery over (q, s)",
        "# columns of $cells_d*: q s success_rate ; $beta_d*: q beta",
        "set terminal pngcairo size 800,600",
        "set xlabel 'max degree q'",
        "set ylabel 'samples s'",
        "set cblabel 'success rate'",
        "set cbrange [0:1]",
        "set palette defined (0 'white', 1 'navy')",
        "set key top left",
    ]
    for d, rows in groups.items():
        qs = sorted({r.q for r in rows})
        lines.append(f"$cells_d{d} << EOD")
        lines += [f"{r.q} {r.s} {r.success_rate!r}" for r in sorted(rows, key=lambda r: (r.q, r.s))]
        lines.append("EOD")
        lines.append(f"$beta_d{d} << EOD")
        lines += [f"{q} {cumulative_dim(q, d)}" for q in qs]
        lines.append("EOD")
    for d in groups:
        lines += [
            f"set output '{image_prefix}_d{d}.png'",
            f"set title 'd = {d}'",
            f"plot $cells_d{d} using 1:2:3 with image notitle, \\",
            f"     $beta_d{d} using 1:2 with linespoints lw 2 lc rgb 'red' title 'beta(q, {d})'",
        ]
    lines.append("unset output")
    return "\n".join(lines) + "\n"


def emit_plot_script(results, path, image_prefix: str = "phase") -> None:
    atomic_write(path, plot_script(results, image_prefix))


def render_figure(results, path) -> None:
    """Draw the heatmaps with matplotlib and save to ``path`` (format from the suffix)."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    groups = _by_dimension(results)
    with plt.rc_context(STYLE):
        fig, axes = plt.subplots(1, len(groups), figsize=(4.2 * len(groups), 3.6), squeeze=False)
        for ax, (d, rows) in zip(axes[0], groups.items()):
            qs = sorted({r.q for r in rows})
            ss = sorted({r.s for r in rows})
            grid = np.full((len(ss), len(qs)), np.nan)
            for r in rows:
                grid[ss.index(r.s), qs.index(r.q)] = r.success_rate
            mesh = ax.pcolormesh(_edges(qs), _edges(ss), grid, cmap="Blues", vmin=0.0, vmax=1.0,
                                 shading="flat")
            ax.plot(qs, [cumulative_dim(q, d) for q in qs], "r.-", lw=1.5, label=r"$s = \beta_{q,d}$")
            ax.set_xticks(qs)
            ax.set_xlabel("max degree $q$")
            ax.set_ylabel("samples $s$")
            ax.set_title(f"$d = {d}$")
            ax.set_ylim(_edges(ss)[0], _edges(ss)[-1])
            ax.legend(loc="upper left")
        fig.colorbar(mesh, ax=axes[0].tolist(), label="success rate")
        try:
            fig.savefig(path)
        except OSError as exc:
            raise FileAccessError(f"cannot write {path}: {exc.strerror or exc}") from exc
        finally:
            plt.close(fig)


def _edges(values):
    v = np.asarray(values, dtype=float)
    if v.size == 1:
        return np.array([v[0] - 0.5, v[0] + 0.5])
    mid = 0.5 * (v[1:] + v[:-1])
    return np.concatenate(([2 * v[0] - mid[0]], mid, [2 * v[-1] - mid[-1]]))
