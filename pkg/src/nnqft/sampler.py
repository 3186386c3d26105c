"""Ensemble sampling of single-hidden-layer networks with streaming moments.

Networks are drawn in chunks; each chunk evaluates every network on the
probe grid and folds the output products into per-experiment
:class:`MomentAccumulator` objects.  Nothing per-network is ever stored, so
memory stays flat in the ensemble size.

Reproducibility contract: the random stream of a chunk is derived from
``(seed, width, experiment_index, chunk_index)`` with fixed chunk
boundaries, so results are bit-identical no matter how work is scheduled,
and independent of the probe grid (the same seed yields the same networks
evaluated on any grid).
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .config import ArchitectureSpec, ExperimentPlan, InputGrid, validate
from .errors import ConfigurationError, NumericOverflowError
from .multisets import count as multiset_count

#: Moment orders kept by every accumulator.  Odd orders are cheap
#: by-products of the product recursion and vanish in expectation.
ORDERS = (1, 2, 3, 4, 5, 6)

#: Networks per chunk scale inversely with width to bound transient memory.
_CHUNK_BUDGET = 2_000_000


def chunk_size(width: int, nets_per_experiment: int) -> int:
    """Fixed chunk length for a width; part of the reproducibility contract."""
    return max(32, min(nets_per_experiment, _CHUNK_BUDGET // max(width, 1)))


@dataclass
class NetworkParams:
    """Parameters of one sampled network."""

    w0: np.ndarray  # (d_in, width)
    b0: np.ndarray  # (width,)
    w1: np.ndarray  # (width,)
    b1: float


@dataclass
class MomentAccumulator:
    """Raw output-product sums over unique index multisets of the grid.

    ``sums[n]`` holds, for every sorted index multiset ``(i1 <= ... <= in)``
    in lexicographic order, the running sum over networks of
    ``f(x_i1) * ... * f(x_in)``.  Symmetry is exact because only one entry
    per multiset exists.
    """

    grid_size: int
    count: int = 0
    sums: dict = field(default_factory=dict)

    @classmethod
    def empty(cls, grid_size: int, orders=ORDERS) -> "MomentAccumulator":
        return cls(
            grid_size=grid_size,
            count=0,
            sums={n: np.zeros(multiset_count(grid_size, n)) for n in orders},
        )

    def merge(self, other: "MomentAccumulator") -> "MomentAccumulator":
        if other.grid_size != self.grid_size or set(other.sums) != set(self.sums):
            raise ConfigurationError("cannot merge accumulators with different layouts",
                                     code="accumulator-mismatch")
        return MomentAccumulator(
            grid_size=self.grid_size,
            count=self.count + other.count,
            sums={n: self.sums[n] + other.sums[n] for n in self.sums},
        )

    def __add__(self, other):
        return self.merge(other)

    def normalized(self, order: int) -> np.ndarray:
        """Moment estimates: raw sums divided by the network count."""
        if self.count <= 0:
            raise ConfigurationError("accumulator is empty", code="empty-accumulator")
        return self.sums[order] / self.count


def _rng(seed: int, width: int, experiment: int, chunk: int) -> np.random.Generator:
    ss = np.random.SeedSequence(seed, spawn_key=(width, experiment, chunk))
    return np.random.Generator(np.random.PCG64(ss))


def sample_params(spec: ArchitectureSpec, rng: np.random.Generator) -> NetworkParams:
    """Draw one network; zero-variance biases are exactly zero."""
    n, d = spec.width, spec.d_in
    sw = math.sqrt(spec.sigma_w_sq)
    sb = math.sqrt(spec.sigma_b_sq)
    w0 = rng.standard_normal((d, n)) * (sw / math.sqrt(d))
    b0 = rng.standard_normal(n) * sb if sb > 0 else np.zeros(n)
    w1 = rng.standard_normal(n) * (sw / math.sqrt(n))
    b1 = float(rng.standard_normal()) * sb if sb > 0 else 0.0
    return NetworkParams(w0=w0, b0=b0, w1=w1, b1=b1)


def _gauss_norm(spec: ArchitectureSpec, x: np.ndarray) -> np.ndarray:
    # Log of the normalisation applied after the exponential nonlinearity.
    return spec.sigma_b_sq + spec.sigma_w_sq * np.sum(x * x, axis=-1) / spec.d_in


def _activation(spec: ArchitectureSpec, z: np.ndarray, x: np.ndarray) -> np.ndarray:
    if spec.activation == "erf":
        return special.erf(z)
    if spec.activation == "relu":
        return np.maximum(z, 0.0)
    if spec.activation == "gauss":
        return np.exp(z - _gauss_norm(spec, x))
    raise ConfigurationError(f"unknown activation {spec.activation!r}", code="invalid-activation")


def forward(params: NetworkParams, spec: ArchitectureSpec, x) -> float:
    """Evaluate one network at one input point.

    Raises the numeric-overflow error when the output is not finite; the
    gauss activation can overflow at extreme inputs or parameter scales
    (its normalization only controls moments at typical draws).
    """
    xv = np.asarray(x, dtype=np.float64).reshape(spec.d_in)
    z = xv @ params.w0 + params.b0
    with np.errstate(over="ignore"):
        a = _activation(spec, z, xv)
        out = float(a @ params.w1 + params.b1)
    if not math.isfinite(out):
        raise NumericOverflowError("network output is not finite", input_point=list(map(float, xv)))
    return out


def _chunk_outputs(spec: ArchitectureSpec, grid_points: np.ndarray,
                   rng: np.random.Generator, n_nets: int) -> np.ndarray:
    """Outputs of ``n_nets`` fresh networks on the grid; shape (n_nets, g)."""
    n, d = spec.width, spec.d_in
    sw = math.sqrt(spec.sigma_w_sq)
    sb = math.sqrt(spec.sigma_b_sq)

    # Draw order is fixed: w0, b0, w1, b1.  Zero-variance biases draw
    # nothing so they stay exactly zero.
    w0 = rng.standard_normal((n_nets, d, n))
    w0 *= sw / math.sqrt(d)
    b0 = rng.standard_normal((n_nets, n)) * sb if sb > 0 else None
    w1 = rng.standard_normal((n_nets, n))
    w1 *= sw / math.sqrt(n)
    b1 = rng.standard_normal(n_nets) * sb if sb > 0 else None

    if d == 1:
        z = w0[:, 0, :][:, None, :] * grid_points[None, :, 0, None]
    else:
        z = np.einsum("gd,bdn->bgn", grid_points, w0)
    if b0 is not None:
        z += b0[:, None, :]

    with np.errstate(over="ignore"):
        if spec.activation == "erf":
            a = special.erf(z)
        elif spec.activation == "relu":
            a = np.maximum(z, 0.0, out=z)
        else:  # gauss
            c = _gauss_norm(spec, grid_points)  # (g,)
            z -= c[None, :, None]
            a = np.exp(z, out=z)

        outputs = np.einsum("bgn,bn->bg", a, w1)
    if b1 is not None:
        outputs += b1[:, None]
    return outputs


def _accumulate(outputs: np.ndarray, sums: dict) -> None:
    """Fold one chunk of outputs into raw product sums.

    Walks the sorted index multisets depth-first so every product of k+1
    columns reuses the product of its first k columns; one multiply and one
    reduction per multiset.
    """
    g = outputs.shape[1]
    max_order = max(sums)
    counters = dict.fromkeys(sums, 0)

    def rec(prod, lo, depth):
        nxt = depth + 1
        for j in range(lo, g):
            p = outputs[:, j] if prod is None else prod * outputs[:, j]
            if nxt in sums:
                sums[nxt][counters[nxt]] += np.add.reduce(p)
                counters[nxt] += 1
            if nxt < max_order:
                rec(p, j, nxt)

    rec(None, 0, 0)


def run_experiment(spec: ArchitectureSpec, grid: InputGrid, seed: int,
                   experiment: int, n_nets: int, orders=ORDERS) -> MomentAccumulator:
    """Accumulate one experiment's moments (sequential over fixed chunks)."""
    acc = MomentAccumulator.empty(len(grid), orders)
    step = chunk_size(spec.width, n_nets)
    done = 0
    chunk = 0
    pts = grid.points
    while done < n_nets:
        take = min(step, n_nets - done)
        outputs = _chunk_outputs(spec, pts, _rng(seed, spec.width, experiment, chunk), take)
        if not np.all(np.isfinite(outputs)):
            bad = int(np.argwhere(~np.isfinite(outputs))[0][0])
            raise NumericOverflowError(
                "non-finite network output during ensemble run",
                experiment=experiment, net_index=done + bad, width=spec.width,
            )
        _accumulate(outputs, acc.sums)
        acc.count += take
        done += take
        chunk += 1
    return acc


def resolve_threads(threads=None) -> int:
    if threads is not None:
        return max(1, int(threads))
    env = os.environ.get("NNQFT_THREADS")
    if env:
        return max(1, int(env))
    return max(1, min(4, os.cpu_count() or 1))


def run_ensemble(plan: ExperimentPlan, spec: ArchitectureSpec, width: int,
                 threads=None, orders=ORDERS) -> list:
    """Per-experiment moment accumulators for one width.

    Experiments are independent and may run on a thread pool; results are
    merged in experiment order, so the outcome does not depend on
    scheduling.
    """
    wspec = spec.with_width(width)
    validate(plan, wspec)
    workers = resolve_threads(threads)
    args = [(wspec, plan.grid, plan.seed, e, plan.nets_per_experiment, orders)
            for e in range(plan.n_experiments)]
    if workers == 1:
        return [run_experiment(*a) for a in args]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(run_experiment, *a) for a in args]
        return [f.result() for f in futures]
