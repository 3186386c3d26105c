"""Quartic-coupling model fits on the 4-pt deviation with held-out evaluation.

The deviation of the empirical 4-pt tensor from its free prediction is, to
leading order, a linear combination of three feature tensors:

    dG4 = -(lambda0 * T0 + lambda2 * T2 + lambda_nl * TNL),

so fitting couplings is ordinary least squares over the unique tensor
elements (the objective is convex quadratic; the closed-form solution is
what an iterative optimizer would converge to).  Models nest: M0 fixes all
couplings to zero, M1 fits lambda0, M2 adds lambda2, M3 adds the
factorized non-local coupling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import InputGrid
from .errors import CollinearFeaturesError, ConfigurationError
from .eft import QuadratureSpec, quartic_integrals, norm_sq_weight
from .kernels import KernelModel
from .multisets import multiset_index, multisets

MODELS = ("m0", "m1", "m2", "m3")

_MODEL_COLUMNS = {"m0": (), "m1": ("t0",), "m2": ("t0", "t2"), "m3": ("t0", "t2", "tnl")}


@dataclass
class FeatureTensors:
    """Coefficient tensors of the three couplings in the 4-pt deviation."""

    t0: np.ndarray
    t2: np.ndarray
    tnl: np.ndarray
    grid: InputGrid
    cutoff: float

    def column(self, name: str) -> np.ndarray:
        return getattr(self, name)


@dataclass
class FitReport:
    """Fitted couplings of one model plus train/test quality."""

    model: str
    lambda0: float = 0.0
    lambda2: float = 0.0
    lambda_nl: float = 0.0
    train_mse: float = math.nan
    test_mse: float = math.nan
    test_mape: float = math.nan
    cutoff: float = math.nan

    def couplings(self) -> dict:
        return {"lambda0": self.lambda0, "lambda2": self.lambda2, "lambda_nl": self.lambda_nl}


def build_features(kernel: KernelModel, grid: InputGrid, cutoff: float,
                   quad: QuadratureSpec | None = None) -> FeatureTensors:
    """Feature tensors over every unique 4-multiset of the grid.

    T0 and T2 are single vertex integrals (T2 carries an extra ``|y|^2``).
    The non-local tensor factorizes into products of pair integrals
    ``integral(K_W(x_a, y) K_W(x_b, y) dy)``, summed over the three ways of
    pairing the four external legs, with overall weight 8.
    """
    g = len(grid)
    t0 = 24.0 * quartic_integrals(kernel, grid, cutoff, quad)
    t2 = 24.0 * quartic_integrals(kernel, grid, cutoff, quad, weight=norm_sq_weight)

    pair_subsets = multisets(g, 2)
    pair_vals = quartic_integrals(kernel, grid, cutoff, quad, subsets=pair_subsets)
    pair_idx = multiset_index(g, 2)

    def pair(a, b):
        return pair_vals[pair_idx[tuple(sorted((a, b)))]]

    tnl = np.empty_like(t0)
    for row, (a, b, c, d) in enumerate(multisets(g, 4)):
        tnl[row] = 8.0 * (pair(a, b) * pair(c, d) + pair(a, c) * pair(b, d)
                          + pair(a, d) * pair(b, c))
    return FeatureTensors(t0=t0, t2=t2, tnl=tnl, grid=grid, cutoff=cutoff)


def predicted_dg4(report: FitReport, features: FeatureTensors) -> np.ndarray:
    return -(report.lambda0 * features.t0 + report.lambda2 * features.t2
             + report.lambda_nl * features.tnl)


def fit_model(model: str, dg4_train: np.ndarray, features_train: FeatureTensors) -> FitReport:
    """Least-squares couplings for one model on training deviations."""
    model = model.lower()
    if model not in MODELS:
        raise ConfigurationError(f"unknown model {model!r}; choose from {MODELS}", code="bad-model")
    d = np.asarray(dg4_train, dtype=np.float64)
    names = _MODEL_COLUMNS[model]
    report = FitReport(model=model, cutoff=features_train.cutoff)
    if names:
        if len(d) < len(names):
            raise ConfigurationError("fewer tensor elements than free couplings",
                                     code="underdetermined-fit")
        design = np.stack([features_train.column(n) for n in names], axis=1)
        sol, _resid, rank, _sv = np.linalg.lstsq(design, -d, rcond=None)
        if rank < len(names):
            raise CollinearFeaturesError(
                f"feature tensors are collinear for model {model} (rank {rank} < {len(names)})"
            )
        values = dict(zip(names, sol))
        report.lambda0 = float(values.get("t0", 0.0))
        report.lambda2 = float(values.get("t2", 0.0))
        report.lambda_nl = float(values.get("tnl", 0.0))
    resid = d - predicted_dg4(report, features_train)
    report.train_mse = float(np.mean(resid**2))
    return report


def evaluate(report: FitReport, dg4_test: np.ndarray, features_test: FeatureTensors):
    """Held-out (MSE, MAPE-in-percent) of a fitted model.

    Elements whose measured deviation is exactly zero cannot enter the
    percentage error and are excluded.
    """
    actual = np.asarray(dg4_test, dtype=np.float64)
    predicted = predicted_dg4(report, features_test)
    mse = float(np.mean((actual - predicted) ** 2))
    ok = actual != 0.0
    if not np.any(ok):
        raise ConfigurationError("every test element is zero; MAPE undefined", code="mape-degenerate")
    mape = float(100.0 * np.mean(np.abs(actual[ok] - predicted[ok]) / np.abs(actual[ok])))
    report.test_mse = mse
    report.test_mape = mape
    return mse, mape
