"""Experiment configuration: architectures, input grids, plans, validation.

A run is described by an :class:`ArchitectureSpec` (what distribution the
networks are drawn from), an :class:`InputGrid` (where outputs are probed)
and an :class:`ExperimentPlan` (how many networks, at which widths, from
which seed).  All three are immutable value types and safe to share across
threads.  Configuration files are JSON documents with a versioned
``schema_version`` field; see :func:`load_config`.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigurationError, ValidationError

SCHEMA_VERSION = 1

ACTIVATIONS = ("erf", "relu", "gauss")

#: Width ladder used by the large-ensemble falloff experiments.
DEFAULT_WIDTHS = (2, 3, 4, 5, 10, 20, 50, 100, 500, 1000)

#: Desk-scale ensemble size: quick enough for a workstation yet large
#: enough for every statistical check in the acceptance suite.
DESK_EXPERIMENTS = 20
DESK_NETS = 50_000

#: Full-scale ensemble size used for the reference results (100 x 1e5 nets).
FULL_EXPERIMENTS = 100
FULL_NETS = 100_000

#: Train grids are the probe grids shrunk by this factor.
TRAIN_SCALE = math.sqrt(2.0) / 2.0


def _readonly(points) -> np.ndarray:
    arr = np.asarray(points, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[:, None]
    arr = np.ascontiguousarray(arr)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class ArchitectureSpec:
    """Sampling distribution of a single-hidden-layer network.

    Both weight layers share ``sigma_w_sq``: the input layer uses variance
    ``sigma_w_sq / d_in`` and the output layer ``sigma_w_sq / width``.  Both
    bias layers use ``sigma_b_sq``.  Parameter means are fixed at zero.
    """

    activation: str
    d_in: int
    width: int
    sigma_w_sq: float
    sigma_b_sq: float
    d_out: int = 1
    mean_w: float = 0.0
    mean_b: float = 0.0

    def with_width(self, width: int) -> "ArchitectureSpec":
        return replace(self, width=int(width))


@dataclass(frozen=True)
class InputGrid:
    """Ordered probe points in the input space."""

    points: np.ndarray
    label: str = "custom"

    def __post_init__(self):
        object.__setattr__(self, "points", _readonly(self.points))

    def __len__(self) -> int:
        return self.points.shape[0]

    @property
    def d_in(self) -> int:
        return self.points.shape[1]

    @property
    def max_norm(self) -> float:
        return float(np.max(np.linalg.norm(self.points, axis=1)))


@dataclass(frozen=True)
class ExperimentPlan:
    """Ensemble sizes, widths, grid and seed for one batch of runs."""

    n_experiments: int
    nets_per_experiment: int
    widths: tuple
    seed: int
    grid: InputGrid

    def __post_init__(self):
        object.__setattr__(self, "widths", tuple(int(w) for w in self.widths))

    @property
    def total_nets(self) -> int:
        return self.n_experiments * self.nets_per_experiment


_BUILTIN_GRIDS = {
    "gauss-default": ((-0.01, -0.006, -0.002, 0.002, 0.006, 0.01), 1),
    "erf-default": ((0.002, 0.004, 0.006, 0.008, 0.010, 0.012), 1),
    "relu-default": ((0.2, 0.4, 0.6, 0.8, 1.0, 1.2), 1),
    "relu-d2": (((0.5, 0.5), (0.5, 1.0), (1.0, 0.5), (1.0, 1.0)), 2),
    "relu-d3": (
        ((0.2, 0.2, 0.2), (1.0, 1.0, 0.2), (0.2, 1.0, 1.0), (1.0, 0.2, 1.0)),
        3,
    ),
}


def train_scaled(grid: InputGrid) -> InputGrid:
    """Grid with every point multiplied by sqrt(2)/2."""
    return InputGrid(points=grid.points * TRAIN_SCALE, label=f"train-scaled({grid.label})")


def builtin_grid(name: str) -> InputGrid:
    """Return a named probe grid.

    Accepted names are the keys of the builtin table plus the form
    ``train-scaled(<base>)`` which shrinks a builtin grid by sqrt(2)/2.
    """
    key = name.strip().lower()
    if key.startswith("train-scaled(") and key.endswith(")"):
        return train_scaled(builtin_grid(key[len("train-scaled(") : -1]))
    if key not in _BUILTIN_GRIDS:
        known = ", ".join(sorted(_BUILTIN_GRIDS))
        raise ConfigurationError(
            f"unknown grid {name!r}; known grids: {known}", code="unknown-grid"
        )
    points, _ = _BUILTIN_GRIDS[key]
    return InputGrid(points=np.asarray(points, dtype=np.float64), label=key)


def default_grid_for(activation: str, d_in: int = 1) -> InputGrid:
    """Probe grid conventionally paired with an activation."""
    if activation == "relu" and d_in in (2, 3):
        return builtin_grid(f"relu-d{d_in}")
    return builtin_grid(f"{activation}-default")


def validate(plan: ExperimentPlan, spec: ArchitectureSpec) -> None:
    """Check every invariant of ``plan`` and ``spec`` jointly.

    Raises :class:`ValidationError` listing one ``(code, message)`` pair per
    violated invariant; returns ``None`` when everything is consistent.
    """
    bad = []
    if spec.activation not in ACTIVATIONS:
        bad.append(("invalid-activation", f"activation {spec.activation!r} not one of {ACTIVATIONS}"))
    if spec.d_out != 1:
        bad.append(("unsupported-d-out", f"d_out must be 1, got {spec.d_out}"))
    if spec.d_in < 1:
        bad.append(("invalid-input-dim", f"d_in must be positive, got {spec.d_in}"))
    if spec.width < 1:
        bad.append(("invalid-width", f"width must be positive, got {spec.width}"))
    if not (math.isfinite(spec.sigma_w_sq) and spec.sigma_w_sq > 0):
        bad.append(("invalid-variance", f"sigma_w_sq must be finite and > 0, got {spec.sigma_w_sq}"))
    if not (math.isfinite(spec.sigma_b_sq) and spec.sigma_b_sq >= 0):
        bad.append(("invalid-variance", f"sigma_b_sq must be finite and >= 0, got {spec.sigma_b_sq}"))
    if spec.activation == "relu" and spec.sigma_b_sq != 0:
        bad.append(("relu-requires-zero-bias", "relu nets require sigma_b_sq = 0"))
    if spec.mean_w != 0 or spec.mean_b != 0:
        bad.append(("nonzero-mean", "parameter means are fixed at zero"))

    if plan.n_experiments < 2:
        bad.append(("too-few-experiments", "need >= 2 experiments for cross-experiment statistics"))
    if plan.nets_per_experiment < 1:
        bad.append(("invalid-net-count", "nets_per_experiment must be positive"))
    if any(b <= a for a, b in zip(plan.widths, plan.widths[1:])) or not plan.widths:
        bad.append(("widths-not-increasing", f"widths must be strictly increasing, got {plan.widths}"))
    if not (0 <= plan.seed < 2**64):
        bad.append(("seed-out-of-range", "seed must fit in an unsigned 64-bit integer"))

    grid = plan.grid
    if len(grid) == 0:
        bad.append(("grid-empty", "grid has no points"))
    else:
        if grid.d_in != spec.d_in:
            bad.append(
                ("grid-dimension-mismatch", f"grid points have dim {grid.d_in}, spec has d_in {spec.d_in}")
            )
        if len({tuple(p) for p in grid.points}) != len(grid):
            bad.append(("grid-duplicate-point", "grid points must be distinct"))
        if not np.all(np.isfinite(grid.points)):
            bad.append(("grid-not-finite", "grid points must be finite"))

    if bad:
        raise ValidationError(bad)


@dataclass(frozen=True)
class RunConfig:
    """A parsed configuration file: plan + architecture + analysis options."""

    spec: ArchitectureSpec
    plan: ExperimentPlan
    analysis: dict = field(default_factory=dict)
    sha256: str = ""
    raw: bytes = b""

    def spec_for(self, width: int) -> ArchitectureSpec:
        return self.spec.with_width(width)


def config_sha256(raw: bytes) -> str:
    return hashlib.sha256(raw).hexdigest()


def _parse_grid(node, label_hint="config") -> InputGrid:
    if isinstance(node, str):
        return builtin_grid(node)
    if isinstance(node, dict) and "points" in node:
        return InputGrid(points=np.asarray(node["points"], dtype=np.float64),
                         label=str(node.get("label", label_hint)))
    raise ConfigurationError("grid must be a builtin name or {'points': ...}", code="bad-grid-node")


def parse_config(raw: bytes) -> RunConfig:
    try:
        doc = json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ConfigurationError(f"config is not valid JSON: {exc}", code="bad-json") from exc

    if doc.get("schema_version") != SCHEMA_VERSION:
        raise ConfigurationError(
            f"unsupported schema_version {doc.get('schema_version')!r}; expected {SCHEMA_VERSION}",
            code="bad-schema-version",
        )
    try:
        arch = doc["architecture"]
        plan_node = doc["plan"]
        grid = _parse_grid(doc["grid"])
        widths = tuple(int(w) for w in plan_node["widths"])
        spec = ArchitectureSpec(
            activation=str(arch["activation"]).lower(),
            d_in=int(arch.get("d_in", grid.d_in)),
            width=widths[0] if widths else 1,
            sigma_w_sq=float(arch["sigma_w_sq"]),
            sigma_b_sq=float(arch["sigma_b_sq"]),
            d_out=int(arch.get("d_out", 1)),
        )
        plan = ExperimentPlan(
            n_experiments=int(plan_node["n_experiments"]),
            nets_per_experiment=int(plan_node["nets_per_experiment"]),
            widths=widths,
            seed=int(plan_node["seed"]),
            grid=grid,
        )
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise ConfigurationError(f"malformed config: {exc!r}", code="bad-config") from exc

    analysis = dict(doc.get("analysis", {}))
    cfg = RunConfig(spec=spec, plan=plan, analysis=analysis, sha256=config_sha256(raw), raw=raw)
    validate(plan, spec)
    return cfg


def load_config(path) -> RunConfig:
    """Read and validate a JSON configuration file."""
    with open(path, "rb") as fh:
        raw = fh.read()
    return parse_config(raw)


def desk_scale(plan: ExperimentPlan) -> ExperimentPlan:
    return replace(plan, n_experiments=DESK_EXPERIMENTS, nets_per_experiment=DESK_NETS)


def full_scale(plan: ExperimentPlan) -> ExperimentPlan:
    return replace(plan, n_experiments=FULL_EXPERIMENTS, nets_per_experiment=FULL_NETS)
