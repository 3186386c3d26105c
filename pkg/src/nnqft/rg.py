"""Cutoff sweeps of the measured quartic coupling and flow-slope checks.

For a zero-bias relu network the weight kernel is exactly homogeneous of
degree one in each argument, so the quartic vertex integral grows as
``L^(d_in + 4)`` and the measured coupling falls with the matching power;
the fitted log-log slope against the cutoff should equal ``-(d_in + 4)``.
The translation-invariant gaussian kernel decays instead, so its coupling
stops running once the box covers the kernel support.

Sampled ensembles of these architectures have *enhanced* 4-pt functions,
so the measured coupling is negative under this package's sign convention
(see :mod:`nnqft.eft`); the flow fits therefore work with magnitudes,
which is what the power law governs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .correlators import CorrelationTensor
from .errors import ConfigurationError, InsufficientSignalError, NnqftError
from .eft import QuadratureSpec, extract_lambda_m, quartic_integrals
from .kernels import KernelModel

#: Cutoff ladder used by the relu flow experiments.
RELU_RG_CUTOFFS = (
    7, 10, 15, 20, 30, 40, 50, 70, 100, 200, 500, 1000, 2000, 5000, 7000,
    10000, 20000, 40000, 60000, 80000, 100000,
)


@dataclass
class SweepEntry:
    cutoff: float
    lambda_bar: float
    rel_spread: float


@dataclass
class SweepResult:
    """Measured coupling against cutoff, plus log-log fit diagnostics."""

    activation: str
    width: int
    d_in: int
    entries: list = field(default_factory=list)
    failures: list = field(default_factory=list)  # (cutoff, error message)
    slope: float = math.nan
    intercept: float = math.nan
    theory_slope: float = math.nan

    @property
    def cutoffs(self) -> np.ndarray:
        return np.array([e.cutoff for e in self.entries])

    @property
    def lambda_bars(self) -> np.ndarray:
        return np.array([e.lambda_bar for e in self.entries])


def beta_theory_relu(d_in: int) -> float:
    """Predicted log-log slope of the relu quartic coupling: -(d_in + 4)."""
    if d_in not in (1, 2, 3):
        raise ConfigurationError(f"relu flow slope is tabulated for d_in in 1..3, got {d_in}",
                                 code="bad-input-dim")
    return -float(d_in + 4)


def coupling_dimension(kernel_dim: float, k: int, d_in: int) -> float:
    """Scaling dimension of the coefficient of a k-th power interaction."""
    return -float(d_in) - k * kernel_dim / 2.0


def cutoff_sweep(emp4: CorrelationTensor, kernel: KernelModel, cutoffs,
                 quad: QuadratureSpec | None = None, width: int | None = None) -> SweepResult:
    """Re-extract the measured coupling at each cutoff from one ensemble.

    The same empirical 4-pt tensor is reused for every cutoff; only the
    vertex integral changes.  Cutoffs where the extraction degenerates are
    recorded as failures and skipped by the fit.
    """
    cutoffs = [float(c) for c in cutoffs]
    if any(b <= a for a, b in zip(cutoffs, cutoffs[1:])):
        raise ConfigurationError("cutoffs must be strictly increasing", code="cutoffs-not-increasing")
    spec = kernel.spec
    result = SweepResult(activation=spec.activation, width=width or spec.width,
                         d_in=spec.d_in)
    if spec.activation == "relu":
        result.theory_slope = beta_theory_relu(spec.d_in)
    for cutoff in cutoffs:
        try:
            lam = extract_lambda_m(emp4, kernel, cutoff, quad)
        except NnqftError as exc:
            result.failures.append((cutoff, f"{exc.code}: {exc}"))
            continue
        result.entries.append(SweepEntry(cutoff=cutoff, lambda_bar=lam.mean,
                                         rel_spread=lam.rel_spread))
    usable = [e for e in result.entries if e.lambda_bar != 0]
    if len(usable) >= 2:
        x = np.log([e.cutoff for e in usable])
        y = np.log([abs(e.lambda_bar) for e in usable])
        result.slope, result.intercept = (float(v) for v in np.polyfit(x, y, 1))
    return result


def fit_rg_slope(sweep: SweepResult, cutoff_min_fit: float):
    """Log-log slope of the coupling magnitude over the large-cutoff window.

    Requires at least four usable sweep points at or above
    ``cutoff_min_fit``; the standard error comes from the fit residuals.
    """
    pts = [(e.cutoff, abs(e.lambda_bar)) for e in sweep.entries
           if e.cutoff >= cutoff_min_fit and e.lambda_bar != 0]
    if len(pts) < 4:
        raise InsufficientSignalError(
            f"need >= 4 sweep points with cutoff >= {cutoff_min_fit}, have {len(pts)}",
            n_points=len(pts),
        )
    x = np.log([c for c, _ in pts])
    y = np.log([v for _, v in pts])
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    dof = len(pts) - 2
    sxx = float(np.sum((x - x.mean()) ** 2))
    stderr = math.sqrt(float(resid @ resid) / dof / sxx) if dof > 0 and sxx > 0 else math.nan
    return float(slope), float(stderr)


def vertex_integral_ratio(kernel: KernelModel, grid, cutoff: float,
                          quad: QuadratureSpec | None = None,
                          subset=(0, 1, 2, 3)) -> float:
    """D(2L) / D(L) for the quartic vertex integral.

    For zero-bias relu this ratio equals ``2 ** (d_in + 4)`` up to
    quadrature error at any cutoff; it is the sampling-free statement
    behind the flow slope.
    """
    d1 = quartic_integrals(kernel, grid, cutoff, quad, subsets=(tuple(subset),))[0]
    d2 = quartic_integrals(kernel, grid, 2.0 * cutoff, quad, subsets=(tuple(subset),))[0]
    return float(d2 / d1)
