"""Empirical n-pt tensors, deviations from the free prediction, connected
correlators and width-scaling fits.

Conventions shared by everything here:

* symmetric tensors are stored as flat vectors over sorted index multisets
  (see :mod:`nnqft.multisets`);
* the "background" of a normalized deviation is the mean over tensor
  elements of its across-experiment standard deviation -- a per-experiment
  noise floor, deliberately not shrunk by the number of experiments;
* the 2-pt function inside connected-correlator subtractions is always the
  closed-form kernel, which is exact at every width, so it contributes no
  statistical error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import InputGrid
from .errors import ConfigurationError, InsufficientSignalError
from .kernels import KernelModel
from .multisets import multiset_index, multisets
from .wick import enumerate_pairings, gp_from_gram, pair_splits


@dataclass
class CorrelationTensor:
    """Estimated n-pt function over a grid, one tensor per experiment."""

    order: int
    grid: InputGrid
    per_experiment: np.ndarray  # (n_experiments, n_unique)
    count_per_experiment: int

    @property
    def multisets(self) -> tuple:
        return multisets(len(self.grid), self.order)

    @property
    def pooled(self) -> np.ndarray:
        return self.per_experiment.mean(axis=0)

    @property
    def across_std(self) -> np.ndarray:
        return self.per_experiment.std(axis=0, ddof=1)

    @property
    def n_experiments(self) -> int:
        return self.per_experiment.shape[0]

    def element(self, idx) -> float:
        key = tuple(sorted(idx))
        return float(self.pooled[multiset_index(len(self.grid), self.order)[key]])


@dataclass
class DeviationReport:
    """Normalized deviation of an empirical tensor from the free prediction."""

    order: int
    gp: np.ndarray                 # free prediction per multiset
    delta_pooled: np.ndarray       # empirical - free
    m_pooled: np.ndarray           # delta / free (nan where degenerate)
    m_per_experiment: np.ndarray
    background: float              # mean over elements of across-experiment std of m
    ci_half_width: np.ndarray      # 1.96 * std / sqrt(n_experiments), per element
    degenerate: np.ndarray         # free prediction == 0, excluded from background

    @property
    def mean_abs_m(self) -> float:
        ok = ~self.degenerate
        return float(np.mean(np.abs(self.m_pooled[ok])))


def empirical_npt(accumulators, n: int, grid: InputGrid) -> CorrelationTensor:
    """Per-experiment n-pt estimates from raw moment sums."""
    if n not in (2, 4, 6):
        raise ConfigurationError(f"order must be one of 2, 4, 6; got {n}", code="bad-order")
    if not accumulators:
        raise ConfigurationError("no accumulators given", code="empty-ensemble")
    g = len(grid)
    counts = {a.count for a in accumulators}
    if any(a.grid_size != g for a in accumulators) or len(counts) != 1:
        raise ConfigurationError("accumulators disagree on grid or ensemble size",
                                 code="accumulator-mismatch")
    per = np.stack([a.normalized(n) for a in accumulators])
    return CorrelationTensor(order=n, grid=grid, per_experiment=per,
                             count_per_experiment=counts.pop())


def gp_tensor(kernel: KernelModel, grid: InputGrid, n: int) -> np.ndarray:
    """Free n-pt prediction on every unique multiset of the grid."""
    gram = kernel.gram(grid)
    return np.array([gp_from_gram(gram, m) for m in multisets(len(grid), n)])


def deviation(emp: CorrelationTensor, kernel: KernelModel) -> DeviationReport:
    """Deviation of an empirical tensor from the free prediction.

    Elements whose free prediction is exactly zero cannot be normalized;
    they are flagged and excluded from the background mean.
    """
    gp = gp_tensor(kernel, emp.grid, emp.order)
    # exact zeros and roundoff-level remnants both make the ratio meaningless
    floor = 1e-12 * float(np.max(np.abs(gp)))
    degenerate = np.abs(gp) <= floor
    safe = np.where(degenerate, 1.0, gp)
    m_per = (emp.per_experiment - gp) / safe
    m_per[:, degenerate] = np.nan
    m_std = np.where(degenerate, np.nan, np.std(m_per, axis=0, ddof=1))
    background = float(np.mean(m_std[~degenerate])) if (~degenerate).any() else math.nan
    return DeviationReport(
        order=emp.order,
        gp=gp,
        delta_pooled=emp.pooled - gp,
        m_pooled=np.where(degenerate, np.nan, (emp.pooled - gp) / safe),
        m_per_experiment=m_per,
        background=background,
        ci_half_width=1.96 * np.where(degenerate, np.nan, np.std(m_per, axis=0, ddof=1))
        / math.sqrt(emp.n_experiments),
        degenerate=degenerate,
    )


def _disconnected4(kernel: KernelModel, grid: InputGrid) -> np.ndarray:
    gram = kernel.gram(grid)
    out = np.empty(len(multisets(len(grid), 4)))
    for i, (a, b, c, d) in enumerate(multisets(len(grid), 4)):
        out[i] = gram[a, b] * gram[c, d] + gram[a, c] * gram[b, d] + gram[a, d] * gram[b, c]
    return out


def connected4(emp4: CorrelationTensor, kernel: KernelModel) -> CorrelationTensor:
    """Connected 4-pt tensor; the pair products use the exact kernel."""
    if emp4.order != 4:
        raise ConfigurationError("connected4 needs an order-4 tensor", code="bad-order")
    disc = _disconnected4(kernel, emp4.grid)
    return CorrelationTensor(order=4, grid=emp4.grid,
                             per_experiment=emp4.per_experiment - disc,
                             count_per_experiment=emp4.count_per_experiment)


def connected6(emp6: CorrelationTensor, emp4: CorrelationTensor,
               kernel: KernelModel) -> CorrelationTensor:
    """Connected 6-pt tensor.

    Subtracts, per experiment, the fifteen products of a connected 4-pt
    element with a kernel pair plus the fifteen triple-kernel matchings.
    """
    if emp6.order != 6 or emp4.order != 4:
        raise ConfigurationError("connected6 needs order-6 and order-4 tensors", code="bad-order")
    if emp6.grid.points.shape != emp4.grid.points.shape or not np.array_equal(
            emp6.grid.points, emp4.grid.points):
        raise ConfigurationError("tensors live on different grids", code="grid-mismatch")

    grid = emp6.grid
    g = len(grid)
    gram = kernel.gram(grid)
    conn4 = connected4(emp4, kernel)
    idx4 = multiset_index(g, 4)
    splits = pair_splits(6)

    ms6 = multisets(g, 6)
    out = np.empty_like(emp6.per_experiment)
    triple = np.empty(len(ms6))
    # Column picks per 6-multiset: for each spectator pair, the kernel value
    # and the flat index of the complementary 4-multiset.
    for row, m in enumerate(ms6):
        m = np.asarray(m)
        triple[row] = math.fsum(
            gram[m[a1], m[b1]] * gram[m[a2], m[b2]] * gram[m[a3], m[b3]]
            for ((a1, b1), (a2, b2), (a3, b3)) in enumerate_pairings(6)
        )
        cols = [idx4[tuple(sorted(m[list(rest)]))] for (_pair, rest) in splits]
        kvals = np.array([gram[m[a], m[b]] for ((a, b), _rest) in splits])
        out[:, row] = emp6.per_experiment[:, row] - conn4.per_experiment[:, cols] @ kvals
    out -= triple[None, :]
    return CorrelationTensor(order=6, grid=grid, per_experiment=out,
                             count_per_experiment=emp6.count_per_experiment)


def g6_connected_background(dg6_std: np.ndarray, dg4_std: np.ndarray,
                            kernel: KernelModel, grid: InputGrid):
    """Propagated noise floor for the connected 6-pt tensor.

    Per element: sqrt(err6^2 + (K * err4)^2), where the kernel-weighted
    4-pt error is averaged over the fifteen spectator-pair splits.  Returns
    the per-element vector and its mean as the scalar background.
    """
    g = len(grid)
    gram = kernel.gram(grid)
    idx4 = multiset_index(g, 4)
    splits = pair_splits(6)
    dg6_std = np.asarray(dg6_std, dtype=np.float64)
    dg4_std = np.asarray(dg4_std, dtype=np.float64)

    per_element = np.empty(len(multisets(g, 6)))
    for row, m in enumerate(multisets(g, 6)):
        m = np.asarray(m)
        prop = np.mean([
            abs(gram[m[a], m[b]]) * dg4_std[idx4[tuple(sorted(m[list(rest)]))]]
            for ((a, b), rest) in splits
        ])
        per_element[row] = math.hypot(dg6_std[row], prop)
    return per_element, float(per_element.mean())


@dataclass
class SlopeFit:
    slope: float
    intercept: float
    r2: float
    n_points: int


def scaling_slope(series, mask=None) -> SlopeFit:
    """Least-squares slope of log |value| against log N.

    ``series`` is a sequence of (N, value) pairs; ``mask`` selects the
    points to fit (e.g. the above-background region).  Requires at least
    three usable points.
    """
    pairs = [(float(n), float(v)) for n, v in series]
    if mask is None:
        mask = [True] * len(pairs)
    kept = [(n, abs(v)) for (n, v), keep in zip(pairs, mask) if keep and abs(v) > 0]
    if len(kept) < 3:
        raise InsufficientSignalError(
            f"need >= 3 points above background to fit a slope, have {len(kept)}",
            n_points=len(kept),
        )
    x = np.log(np.array([n for n, _ in kept]))
    y = np.log(np.array([v for _, v in kept]))
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    total = y - y.mean()
    r2 = 1.0 - float(resid @ resid) / float(total @ total) if float(total @ total) > 0 else 1.0
    return SlopeFit(slope=float(slope), intercept=float(intercept), r2=r2, n_points=len(kept))
