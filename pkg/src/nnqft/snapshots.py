"""Moment-snapshot persistence.

Snapshots let analysis commands re-run without re-sampling.  The container
is a plain ``.npz`` readable by ``numpy.load``, written with frozen zip
timestamps so identical inputs produce byte-identical files.  A JSON header
records the schema version, the configuration hash, the seed and the
ensemble layout; analysis commands refuse snapshots whose header does not
match their configuration.
"""

from __future__ import annotations

import io
import json
import zipfile
from dataclasses import dataclass

import numpy as np

from . import __version__
from .config import ArchitectureSpec, InputGrid
from .errors import SnapshotError
from .sampler import MomentAccumulator

SNAPSHOT_SCHEMA = 1

_ZERO_TIME = (1980, 1, 1, 0, 0, 0)


def _write_npz(path, arrays: dict) -> None:
    """Uncompressed npz with fixed entry timestamps (byte-reproducible)."""
    with zipfile.ZipFile(path, "w", zipfile.ZIP_STORED) as zf:
        for name in sorted(arrays):
            buf = io.BytesIO()
            np.lib.format.write_array(buf, np.ascontiguousarray(arrays[name]))
            info = zipfile.ZipInfo(name + ".npy", date_time=_ZERO_TIME)
            zf.writestr(info, buf.getvalue())


@dataclass
class EnsembleMoments:
    """Loaded snapshot: metadata plus one accumulator per experiment."""

    meta: dict
    accumulators: list

    @property
    def width(self) -> int:
        return int(self.meta["width"])

    @property
    def seed(self) -> int:
        return int(self.meta["seed"])

    @property
    def grid(self) -> InputGrid:
        return InputGrid(points=np.asarray(self.meta["grid"]["points"], dtype=np.float64),
                         label=self.meta["grid"]["label"])

    @property
    def spec(self) -> ArchitectureSpec:
        a = self.meta["architecture"]
        return ArchitectureSpec(
            activation=a["activation"], d_in=int(a["d_in"]), width=self.width,
            sigma_w_sq=float(a["sigma_w_sq"]), sigma_b_sq=float(a["sigma_b_sq"]),
        )


def save_snapshot(path, accumulators, *, spec: ArchitectureSpec, grid: InputGrid,
                  seed: int, width: int, config_sha256: str = "") -> None:
    if not accumulators:
        raise SnapshotError("no accumulators to save", code="snapshot-empty")
    orders = sorted(accumulators[0].sums)
    meta = {
        "schema_version": SNAPSHOT_SCHEMA,
        "artifact_version": __version__,
        "config_sha256": config_sha256,
        "seed": int(seed),
        "width": int(width),
        "orders": orders,
        "architecture": {
            "activation": spec.activation,
            "d_in": spec.d_in,
            "sigma_w_sq": spec.sigma_w_sq,
            "sigma_b_sq": spec.sigma_b_sq,
        },
        "grid": {"label": grid.label, "points": grid.points.tolist()},
        "n_experiments": len(accumulators),
        "nets_per_experiment": int(accumulators[0].count),
    }
    arrays = {"meta": np.frombuffer(json.dumps(meta, sort_keys=True).encode(), dtype=np.uint8),
              "counts": np.asarray([a.count for a in accumulators], dtype=np.int64)}
    for n in orders:
        arrays[f"order{n}"] = np.stack([a.sums[n] for a in accumulators])
    _write_npz(path, arrays)


def load_snapshot(path) -> EnsembleMoments:
    with np.load(path) as data:
        try:
            meta = json.loads(bytes(data["meta"]).decode())
        except (KeyError, json.JSONDecodeError) as exc:
            raise SnapshotError(f"unreadable snapshot header: {exc!r}", code="snapshot-header") from exc
        if meta.get("schema_version") != SNAPSHOT_SCHEMA:
            raise SnapshotError(
                f"snapshot schema {meta.get('schema_version')!r} unsupported", code="snapshot-schema"
            )
        counts = data["counts"]
        g = len(meta["grid"]["points"])
        accs = []
        for e in range(len(counts)):
            sums = {n: np.array(data[f"order{n}"][e]) for n in meta["orders"]}
            accs.append(MomentAccumulator(grid_size=g, count=int(counts[e]), sums=sums))
    return EnsembleMoments(meta=meta, accumulators=accs)


def require_config_match(moments: EnsembleMoments, config_sha256: str) -> None:
    """Refuse snapshots produced under a different configuration."""
    have = moments.meta.get("config_sha256", "")
    if have != config_sha256:
        raise SnapshotError(
            "snapshot was produced by a different configuration "
            f"(snapshot {have[:12]!r}, expected {config_sha256[:12]!r})",
            code="snapshot-mismatch",
        )
