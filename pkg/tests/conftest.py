"""Shared fixtures: specs, grids, synthetic Gaussian ensembles, disk cache.

The synthetic-ensemble helper draws outputs directly from a multivariate
normal with the kernel as covariance and folds them into accumulators by
brute force, independently of the streaming sampler, so it can serve as an
oracle for the correlator pipeline.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from nnqft import ArchitectureSpec, ExperimentPlan, builtin_grid, kernel_model
from nnqft.multisets import multisets
from nnqft.sampler import MomentAccumulator, run_ensemble
from nnqft.snapshots import load_snapshot, save_snapshot

CACHE_DIR = Path(__file__).parent / "_cache"

ARCH = {
    "gauss": dict(activation="gauss", sigma_w_sq=1.0, sigma_b_sq=1.0),
    "erf": dict(activation="erf", sigma_w_sq=1.0, sigma_b_sq=1.0),
    "relu": dict(activation="relu", sigma_w_sq=1.0, sigma_b_sq=0.0),
}


def make_spec(activation: str, width: int = 10, d_in: int = 1) -> ArchitectureSpec:
    return ArchitectureSpec(d_in=d_in, width=width, **ARCH[activation])


def brute_force_accumulator(outputs: np.ndarray, orders=(1, 2, 3, 4, 5, 6)) -> MomentAccumulator:
    """Independent product accumulation: one explicit product per multiset."""
    count, g = outputs.shape
    sums = {}
    for n in orders:
        vals = np.empty(len(multisets(g, n)))
        for i, m in enumerate(multisets(g, n)):
            vals[i] = float(np.sum(np.prod(outputs[:, list(m)], axis=1)))
        sums[n] = vals
    return MomentAccumulator(grid_size=g, count=count, sums=sums)


def synthetic_gp_ensemble(kernel, grid, n_experiments: int, nets: int, seed: int = 0):
    """Exact Gaussian-process draws with the kernel as covariance."""
    gram = kernel.gram(grid)
    jitter = 1e-12 * float(np.trace(gram)) / len(grid)
    chol = np.linalg.cholesky(gram + jitter * np.eye(len(grid)))
    rng = np.random.default_rng(seed)
    accs = []
    for _ in range(n_experiments):
        outputs = rng.standard_normal((nets, len(grid))) @ chol.T
        accs.append(brute_force_accumulator(outputs))
    return accs


@pytest.fixture(scope="session")
def ensemble_cache():
    """Disk-cached desk-scale ensembles shared across test modules."""
    CACHE_DIR.mkdir(exist_ok=True)

    def get(activation: str, width: int, *, d_in: int = 1, grid=None,
            n_experiments: int = 20, nets: int = 50_000, seed: int = 20260810,
            tag: str = ""):
        grid = grid if grid is not None else _default_grid(activation, d_in)
        name = f"{activation}_d{d_in}_w{width}_e{n_experiments}_n{nets}_s{seed}{tag}.npz"
        path = CACHE_DIR / name
        if path.exists():
            return load_snapshot(path)
        spec = make_spec(activation, width, d_in)
        plan = ExperimentPlan(n_experiments=n_experiments, nets_per_experiment=nets,
                              widths=(width,), seed=seed, grid=grid)
        accs = run_ensemble(plan, spec, width)
        save_snapshot(path, accs, spec=spec, grid=grid, seed=seed, width=width)
        return load_snapshot(path)

    return get


def _default_grid(activation: str, d_in: int):
    if activation == "relu" and d_in in (2, 3):
        return builtin_grid(f"relu-d{d_in}")
    return builtin_grid(f"{activation}-default")


@pytest.fixture
def gauss_kernel():
    return kernel_model(make_spec("gauss", width=100))


@pytest.fixture
def erf_kernel():
    return kernel_model(make_spec("erf", width=100))


@pytest.fixture
def relu_kernel():
    return kernel_model(make_spec("relu", width=100))
