"""Interaction corrections over a cutoff box.

The quartic (and optional sextic) corrections to the free n-pt functions
are integrals of weight-kernel products over the box ``[-L, L]^d_in``.
They are evaluated with adaptive tensor-product Gauss-Legendre panels; an
infinite cutoff (legitimate only for the translation-invariant gaussian
kernel, which decays) is realized by doubling the box until the result
stops changing.

Sign conventions: a positive quartic coupling suppresses the 4-pt function,

    G4 = G4_free - 24 * integral( lambda(y) * prod_i K_W(x_i, y) dy ) - ...,

and the per-element measured coupling inverts that relation,

    lambda_m = (G4_free - G4_empirical) / (24 * integral(prod_i K_W)).

The numerator uses the full kernel (it comes from the free pair products);
the denominator attaches only the weight part K_W to the interaction
vertex.  For zero-bias architectures the two coincide.

Note that every architecture here has an *enhanced* 4-pt function: the
connected part is a sum over hidden units of ``3 sigma_w^4 (E[s^4] -
E[s^2]^2) >= 0`` with ``s`` the unit activation, so measured couplings are
negative under this convention.  Predictions are insensitive to the
choice (the sign cancels against the correction terms); flow fits use the
magnitude.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np

from .config import InputGrid
from .correlators import CorrelationTensor, gp_tensor
from .errors import (ConfigurationError, DegenerateMeasureError, QuadratureError)
from .kernels import KernelModel
from .multisets import multiset_index, multisets
from .wick import gp_npt_from_values, pair_splits

_GL_DEFAULTS = {1: 64, 2: 48, 3: 32}

#: Treat integrals below this magnitude as a degenerate extraction measure.
DENOMINATOR_FLOOR = 1e-30


@dataclass(frozen=True)
class QuadratureSpec:
    """Numerical-integration policy.

    ``gauss-legendre`` (default) uses adaptive bisection of tensor-product
    panels, each estimated at n and 2n points per axis.  ``monte-carlo``
    (uniform sampling, only sensible for d_in >= 2) doubles the sample count
    until the estimate stabilizes; give it a realistic tolerance.
    """

    scheme: str = "gauss-legendre"
    points_per_axis: int = 0  # 0 -> per-dimension default
    tolerance: float = 1e-6
    max_panels: int = 4096
    mc_samples: int = 100_000
    mc_seed: int = 20260101

    def resolve_points(self, d_in: int) -> int:
        n = self.points_per_axis or _GL_DEFAULTS.get(d_in, 16)
        if d_in == 1 and n < 16:
            raise ConfigurationError("need >= 16 points per axis for d_in=1",
                                     code="quadrature-too-coarse")
        return n

    @classmethod
    def monte_carlo(cls, samples: int = 100_000, seed: int = 20260101,
                    tolerance: float = 0.02) -> "QuadratureSpec":
        return cls(scheme="monte-carlo", mc_samples=samples, mc_seed=seed,
                   tolerance=tolerance)


@dataclass(frozen=True)
class EftConfig:
    """Couplings, cutoff and quadrature for interaction corrections.

    ``lambda0 + lambda2 |y|^2`` is the local quartic coupling; ``lambda_nl``
    belongs to the factorized non-local term used only by the model fits.
    ``kappa`` is the sextic coupling, carried for diagnostics and fixed to
    zero on every headline path.
    """

    lambda0: float = 0.0
    lambda2: float = 0.0
    lambda_nl: float = 0.0
    kappa: float = 0.0
    cutoff: float = math.inf
    quadrature: QuadratureSpec = field(default_factory=QuadratureSpec)

    def with_cutoff(self, cutoff: float) -> "EftConfig":
        return replace(self, cutoff=cutoff)


@lru_cache(maxsize=None)
def _leggauss(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    return x, w


def _panel_value(f, lo, hi, n: int):
    """Tensor-product Gauss-Legendre value of f over the box [lo, hi]."""
    d = len(lo)
    axes, wts = [], []
    for k in range(d):
        x, w = _leggauss(n)
        half = 0.5 * (hi[k] - lo[k])
        axes.append(0.5 * (lo[k] + hi[k]) + half * x)
        wts.append(half * w)
    if d == 1:
        pts = axes[0][:, None]
        weights = wts[0]
    else:
        mesh = np.meshgrid(*axes, indexing="ij")
        pts = np.stack([m.ravel() for m in mesh], axis=-1)
        wmesh = np.meshgrid(*wts, indexing="ij")
        weights = np.ones(pts.shape[0])
        for wm in wmesh:
            weights *= wm.ravel()
    vals = np.asarray(f(pts), dtype=np.float64)
    return weights @ vals


def _initial_panels(cutoff: float, d: int):
    """Start from boxes split at the origin; kernels may kink there."""
    edges = [(-cutoff, 0.0, cutoff)] * d
    panels = [((), ())]
    for k in range(d):
        nxt = []
        for lo, hi in panels:
            lo_k, mid, hi_k = edges[k]
            nxt.append((lo + (lo_k,), hi + (mid,)))
            nxt.append((lo + (mid,), hi + (hi_k,)))
        panels = nxt
    return [(np.asarray(lo), np.asarray(hi)) for lo, hi in panels]


def _integrate_finite(f, cutoff: float, d_in: int, quad: QuadratureSpec):
    n = quad.resolve_points(d_in)
    heap = []
    tick = 0
    total = None
    err_total = None

    def push(lo, hi):
        nonlocal tick, total, err_total
        coarse = _panel_value(f, lo, hi, n)
        fine = _panel_value(f, lo, hi, 2 * n)
        err = np.abs(np.atleast_1d(fine - coarse))
        total = np.atleast_1d(fine) if total is None else total + fine
        err_total = err if err_total is None else err_total + err
        heapq.heappush(heap, (-float(err.max()), tick, lo, hi, np.atleast_1d(fine), err))
        tick += 1

    for lo, hi in _initial_panels(cutoff, d_in):
        push(lo, hi)

    while True:
        scale = np.maximum(np.abs(total), DENOMINATOR_FLOOR)
        if np.all(err_total <= quad.tolerance * scale):
            break
        if len(heap) >= quad.max_panels:
            raise QuadratureError(
                f"no convergence with {len(heap)} panels",
                estimate=total.copy(), residual=float(err_total.max()),
            )
        _, _, lo, hi, val, err = heapq.heappop(heap)
        total = total - val
        err_total = err_total - err
        axis = int(np.argmax(hi - lo))
        mid = 0.5 * (lo[axis] + hi[axis])
        hi_left, lo_right = hi.copy(), lo.copy()
        hi_left[axis] = mid
        lo_right[axis] = mid
        push(lo, hi_left)
        push(lo_right, hi)
    return total


def _integrate_mc(f, cutoff: float, d_in: int, quad: QuadratureSpec):
    if d_in < 2:
        raise ConfigurationError("monte-carlo quadrature is only supported for d_in >= 2",
                                 code="quadrature-mc-dimension")
    rng = np.random.default_rng(quad.mc_seed)
    volume = (2.0 * cutoff) ** d_in
    n = quad.mc_samples
    prev = None
    for _ in range(12):
        pts = rng.uniform(-cutoff, cutoff, size=(n, d_in))
        cur = np.atleast_1d(np.mean(np.asarray(f(pts), dtype=np.float64), axis=0) * volume)
        if prev is not None:
            scale = np.maximum(np.abs(cur), DENOMINATOR_FLOOR)
            if np.all(np.abs(cur - prev) <= quad.tolerance * scale):
                return cur
        prev = cur
        n *= 2
    raise QuadratureError("monte-carlo estimate did not stabilize",
                          estimate=prev, residual=math.nan)


def integrate_box(f, cutoff: float, d_in: int, quad: QuadratureSpec | None = None,
                  initial_extent: float = 8.0):
    """Integral of a vectorized integrand over ``[-cutoff, cutoff]^d_in``.

    ``f`` maps an ``(m, d_in)`` array of points to ``(m,)`` or ``(m, k)``
    values.  An infinite cutoff doubles the box starting from
    ``initial_extent`` until the relative change drops below the tolerance;
    that is only meaningful for decaying integrands.  Returns a scalar for
    scalar integrands, else the component vector.
    """
    quad = quad or QuadratureSpec()
    if cutoff <= 0:
        raise ConfigurationError("cutoff must be positive", code="bad-cutoff")

    def run(lam):
        if quad.scheme == "monte-carlo":
            return _integrate_mc(f, lam, d_in, quad)
        if quad.scheme != "gauss-legendre":
            raise ConfigurationError(f"unknown quadrature scheme {quad.scheme!r}",
                                     code="quadrature-scheme")
        return _integrate_finite(f, lam, d_in, quad)

    if math.isinf(cutoff):
        extent = float(initial_extent)
        prev = None
        for _ in range(48):
            cur = run(extent)
            if prev is not None:
                scale = np.maximum(np.abs(cur), DENOMINATOR_FLOOR)
                if np.all(np.abs(cur - prev) <= quad.tolerance * scale):
                    return cur if cur.size > 1 else float(cur[0])
            prev = cur
            extent *= 2.0
        raise QuadratureError("box doubling did not converge; integrand may not decay",
                              estimate=prev, residual=math.nan)
    out = run(float(cutoff))
    return out if out.size > 1 else float(out[0])


def _require_cutoff(kernel: KernelModel, grid: InputGrid, cutoff: float) -> None:
    if math.isinf(cutoff):
        if kernel.spec.activation != "gauss":
            raise ConfigurationError(
                "infinite cutoff needs a decaying kernel (gauss only)",
                code="cutoff-infinite-unsupported",
            )
    elif cutoff <= grid.max_norm:
        raise ConfigurationError(
            f"cutoff {cutoff} must exceed the largest grid norm {grid.max_norm}",
            code="cutoff-below-grid",
        )


def _extent_for(kernel: KernelModel, grid: InputGrid) -> float:
    spec = kernel.spec
    scale = math.sqrt(spec.d_in / spec.sigma_w_sq)
    return 8.0 * (grid.max_norm + scale)


def _points_grid(points) -> InputGrid:
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim == 1:
        pts = pts[:, None]
    return InputGrid(points=pts, label="eft-points")


def quartic_integrals(kernel: KernelModel, grid: InputGrid, cutoff: float,
                      quad: QuadratureSpec | None = None, subsets=None,
                      weight=None) -> np.ndarray:
    """``integral( w(y) * prod_{i in subset} K_W(x_i, y) dy )`` per subset.

    ``subsets`` defaults to every unique 4-multiset of grid indices; any
    index tuples work (the sextic diagnostics pass 6-tuples).  ``weight``
    is an optional extra factor of y, e.g. ``|y|^2`` for the quadratic
    coupling feature.
    """
    spec = kernel.spec
    _require_cutoff(kernel, grid, cutoff)
    if subsets is None:
        subsets = multisets(len(grid), 4)

    def f(ys):
        kw = kernel.k_w_grid(grid, ys)  # (g, m)
        cols = np.empty((ys.shape[0], len(subsets)))
        for j, sub in enumerate(subsets):
            prod = kw[sub[0]].copy()
            for a in sub[1:]:
                prod *= kw[a]
            cols[:, j] = prod
        if weight is not None:
            cols *= weight(ys)[:, None]
        return cols

    out = integrate_box(f, cutoff, spec.d_in, quad, initial_extent=_extent_for(kernel, grid))
    return np.atleast_1d(out)


def norm_sq_weight(ys: np.ndarray) -> np.ndarray:
    return np.sum(ys * ys, axis=-1)


def g4_correction(kernel: KernelModel, points, eft: EftConfig) -> float:
    """Interaction correction to the 4-pt function at four explicit points.

    ``-24 integral( (lambda0 + lambda2 |y|^2) prod K_W(x_i, y) )`` plus the
    sextic tadpole ``-360 kappa integral( K_W(z, z) prod K_W(x_i, z) )``.
    The non-local coupling does not contribute here; it only enters the
    model-fit features.
    """
    grid = _points_grid(points)
    if len(grid) != 4:
        raise ConfigurationError("g4_correction needs exactly 4 points", code="bad-points")
    quad = eft.quadrature
    subset = (tuple(range(4)),)
    total = 0.0
    if eft.lambda0 != 0.0:
        total -= 24.0 * eft.lambda0 * quartic_integrals(kernel, grid, eft.cutoff, quad, subset)[0]
    if eft.lambda2 != 0.0:
        total -= 24.0 * eft.lambda2 * quartic_integrals(
            kernel, grid, eft.cutoff, quad, subset, weight=norm_sq_weight)[0]
    if eft.kappa != 0.0:
        def loop_weight(ys):
            return np.asarray(kernel.k_w(ys, ys), dtype=np.float64)
        total -= 360.0 * eft.kappa * quartic_integrals(
            kernel, grid, eft.cutoff, quad, subset, weight=loop_weight)[0]
    return float(total)


def predict_g4(kernel: KernelModel, points, eft: EftConfig) -> float:
    """Free 4-pt prediction plus the interaction correction."""
    pts = _points_grid(points).points
    gram = np.asarray(kernel.k(pts[:, None, :], pts[None, :, :]))
    return gp_npt_from_values(gram) + g4_correction(kernel, pts, eft)


@dataclass
class LambdaTensor:
    """Per-multiset measured quartic coupling on a grid."""

    values: np.ndarray
    grid: InputGrid
    cutoff: float

    @property
    def multisets(self) -> tuple:
        return multisets(len(self.grid), 4)

    @property
    def mean(self) -> float:
        return float(self.values.mean())

    @property
    def rel_spread(self) -> float:
        m = self.mean
        return float(self.values.std(ddof=0) / abs(m)) if m != 0 else math.inf


def extract_lambda_m(emp4: CorrelationTensor, kernel: KernelModel, cutoff: float,
                     quad: QuadratureSpec | None = None) -> LambdaTensor:
    """Measured quartic coupling per unique index 4-tuple.

    Numerator: free pair products (full kernel) minus the pooled empirical
    4-pt element.  Denominator: 24 times the quartic vertex integral with
    K_W legs.
    """
    if emp4.order != 4:
        raise ConfigurationError("extract_lambda_m needs an order-4 tensor", code="bad-order")
    grid = emp4.grid
    denom = 24.0 * quartic_integrals(kernel, grid, cutoff, quad)
    tiny = np.abs(denom) < DENOMINATOR_FLOOR
    if np.any(tiny):
        first = multisets(len(grid), 4)[int(np.argmax(tiny))]
        raise DegenerateMeasureError(
            f"vertex integral vanishes for multiset {first}", multiset=first, cutoff=cutoff
        )
    gp = gp_tensor(kernel, grid, 4)
    values = (gp - emp4.pooled) / denom
    return LambdaTensor(values=values, grid=grid, cutoff=cutoff)


def lambda_bar(lam) -> float:
    """Mean over the unique tensor elements."""
    values = lam.values if isinstance(lam, LambdaTensor) else np.asarray(lam)
    return float(np.mean(values))


def predict_g6(kernel: KernelModel, points, lam_bar: float, cutoff: float,
               quad: QuadratureSpec | None = None) -> float:
    """Free 6-pt prediction plus the quartic correction at six points.

    Fifteen correction terms, one per spectator pair: the four remaining
    legs meet the vertex through K_W and the spectator pair contributes a
    full kernel factor.  The sextic terms are intentionally excluded; see
    :func:`g6_kappa_correction` for diagnostics.
    """
    grid = _points_grid(points)
    if len(grid) != 6:
        raise ConfigurationError("predict_g6 needs exactly 6 points", code="bad-points")
    pts = grid.points
    gram = np.asarray(kernel.k(pts[:, None, :], pts[None, :, :]))
    gp = gp_npt_from_values(gram)
    splits = pair_splits(6)
    integrals = quartic_integrals(kernel, grid, cutoff, quad,
                                  subsets=tuple(rest for _pair, rest in splits))
    corr = -24.0 * lam_bar * math.fsum(
        integrals[j] * gram[a, b] for j, ((a, b), _rest) in enumerate(splits)
    )
    return gp + corr


def predict_g6_tensor(kernel: KernelModel, grid: InputGrid, lam_bar: float,
                      cutoff: float, quad: QuadratureSpec | None = None) -> np.ndarray:
    """Corrected 6-pt prediction on every unique multiset of a grid.

    Shares one set of quartic vertex integrals across all multisets.
    """
    g = len(grid)
    base = quartic_integrals(kernel, grid, cutoff, quad)
    idx4 = multiset_index(g, 4)
    gram = kernel.gram(grid)
    gp = gp_tensor(kernel, grid, 6)
    splits = pair_splits(6)
    out = np.empty_like(gp)
    for row, m in enumerate(multisets(g, 6)):
        marr = np.asarray(m)
        corr = math.fsum(
            base[idx4[tuple(sorted(marr[list(rest)]))]] * gram[marr[a], marr[b]]
            for (a, b), rest in splits
        )
        out[row] = gp[row] - 24.0 * lam_bar * corr
    return out


def g6_kappa_correction(kernel: KernelModel, points, kappa: float, cutoff: float,
                        quad: QuadratureSpec | None = None) -> float:
    """Sextic-coupling terms of the 6-pt function (diagnostics only).

    The star diagram carries 720 and the fifteen tadpole-with-spectator
    diagrams carry 360 each; both attach K_W to the vertex.
    """
    grid = _points_grid(points)
    pts = grid.points
    gram = np.asarray(kernel.k(pts[:, None, :], pts[None, :, :]))

    def loop_weight(ys):
        return np.asarray(kernel.k_w(ys, ys), dtype=np.float64)

    star = quartic_integrals(kernel, grid, cutoff, quad, subsets=(tuple(range(6)),))[0]
    splits = pair_splits(6)
    tadpoles = quartic_integrals(kernel, grid, cutoff, quad,
                                 subsets=tuple(rest for _pair, rest in splits),
                                 weight=loop_weight)
    spectator = math.fsum(
        tadpoles[j] * gram[a, b] for j, ((a, b), _rest) in enumerate(splits)
    )
    return float(-720.0 * kappa * star - 360.0 * kappa * spectator)


def delta6(emp6_pooled: np.ndarray, prediction6: np.ndarray):
    """Normalized 6-pt residual ``(empirical - prediction) / empirical``.

    Elements with an exactly zero empirical value are flagged invalid and
    must be excluded from summaries.
    """
    emp = np.asarray(emp6_pooled, dtype=np.float64)
    pred = np.asarray(prediction6, dtype=np.float64)
    valid = emp != 0.0
    out = np.full_like(emp, np.nan)
    out[valid] = (emp[valid] - pred[valid]) / emp[valid]
    return out, valid
