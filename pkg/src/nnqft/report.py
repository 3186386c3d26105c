"""Figure rendering for the CLI report path.

Every analysis command writes delimited tables; these helpers render the
matching matplotlib figures next to them.  Figures are diagnostic, not
publication-tuned; the tables remain the primary output.
"""

from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_SAVE_KW = dict(dpi=130, bbox_inches="tight", metadata={"Software": "nnqft"})

plt.rcParams.update({
    "figure.figsize": (5.4, 3.6),
    "font.size": 9,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "lines.markersize": 4,
})


def _finish(fig, path):
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)
    return path


def falloff_figure(path, activation, rows):
    """Signal vs width per order, with the background noise floor.

    ``rows`` maps order -> (widths, mean_abs_m, background) arrays.
    """
    fig, axes = plt.subplots(1, len(rows), figsize=(3.2 * len(rows), 3.2), squeeze=False)
    for ax, (order, (widths, signal, background)) in zip(axes[0], sorted(rows.items())):
        ax.loglog(widths, signal, "o-", label=f"mean |m{order}|")
        ax.loglog(widths, background, "s--", color="gray", label="background")
        ax.set_xlabel("width N")
        ax.set_title(f"{activation}: order {order}")
        ax.legend(fontsize=7)
    return _finish(fig, path)


def connected6_figure(path, activation, widths, signal, background):
    fig, ax = plt.subplots()
    ax.loglog(widths, signal, "o-", label="mean |connected 6-pt|")
    ax.loglog(widths, background, "s--", color="gray", label="propagated background")
    ax.set_xlabel("width N")
    ax.set_title(f"{activation}: connected 6-pt vs width")
    ax.legend(fontsize=8)
    return _finish(fig, path)


def lambda_figure(path, activation, width, cutoff, values):
    fig, ax = plt.subplots()
    ax.plot(np.arange(len(values)), values, ".", label="lambda_m elements")
    ax.axhline(float(np.mean(values)), color="C1", label="mean")
    ax.set_xlabel("unique element index")
    ax.set_ylabel("lambda_m")
    cut = "inf" if math.isinf(cutoff) else f"{cutoff:g}"
    ax.set_title(f"{activation}: measured coupling, N={width}, cutoff={cut}")
    ax.legend(fontsize=8)
    return _finish(fig, path)


def g6_ratio_figure(path, activation, width, gp_ratio, corrected_ratio):
    fig, ax = plt.subplots()
    idx = np.arange(len(gp_ratio))
    ax.plot(idx, gp_ratio, ".", label="free prediction / measured")
    ax.plot(idx, corrected_ratio, ".", label="corrected prediction / measured")
    ax.axhline(1.0, color="k", lw=0.8)
    ax.set_xlabel("unique element index")
    ax.set_ylabel("prediction / measurement")
    ax.set_title(f"{activation}: 6-pt prediction quality, N={width}")
    ax.legend(fontsize=8)
    return _finish(fig, path)


def rg_figure(path, activation, d_in, cutoffs, lambda_bars, slope, intercept, theory_slope):
    fig, ax = plt.subplots()
    lambda_bars = np.asarray(lambda_bars, dtype=float)
    if np.all(lambda_bars > 0):
        ax.loglog(cutoffs, lambda_bars, "o", label="measured coupling")
    else:  # noise can flip the sign at small ensembles; keep the axes linear
        ax.semilogx(cutoffs, lambda_bars, "o", label="measured coupling")
    if np.isfinite(slope) and np.all(lambda_bars > 0):
        xs = np.array([min(cutoffs), max(cutoffs)], dtype=float)
        ax.loglog(xs, np.exp(intercept) * xs**slope, "-",
                  label=f"fit slope {slope:.2f}")
    if theory_slope is not None and np.isfinite(theory_slope):
        ax.set_title(f"{activation} d_in={d_in}: coupling vs cutoff "
                     f"(theory slope {theory_slope:g})")
    else:
        ax.set_title(f"{activation} d_in={d_in}: coupling vs cutoff")
    ax.set_xlabel("cutoff")
    ax.set_ylabel("mean coupling")
    ax.legend(fontsize=8)
    return _finish(fig, path)


def gram_figure(path, activation, gram):
    fig, ax = plt.subplots(figsize=(3.6, 3.2))
    im = ax.imshow(gram, cmap="viridis")
    fig.colorbar(im, ax=ax, shrink=0.85)
    ax.set_title(f"{activation}: kernel Gram matrix")
    return _finish(fig, path)
