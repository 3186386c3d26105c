"""Command-line experiment runner.

Every command loads a JSON configuration, writes delimited tables (and,
for analysis commands, a matching figure) into the output directory, and
records a manifest listing its outputs together with the configuration
hash and seed.  Commands are idempotent: identical inputs and seeds give
byte-identical outputs, with wall-clock timestamps confined to manifests.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .config import RunConfig, desk_scale, full_scale, load_config, train_scaled
from .correlators import (connected6, deviation, empirical_npt,
                          g6_connected_background, gp_tensor, scaling_slope)
from .errors import (CollinearFeaturesError, ConfigurationError, InsufficientSignalError,
                     NnqftError, SnapshotError)
from .eft import QuadratureSpec, delta6, extract_lambda_m, predict_g6_tensor
from .fitting import MODELS, build_features, evaluate, fit_model
from .kernels import kernel_model
from .multisets import multisets
from .rg import RELU_RG_CUTOFFS, cutoff_sweep, fit_rg_slope
from .sampler import run_ensemble
from .snapshots import EnsembleMoments, load_snapshot, require_config_match, save_snapshot
from . import report

MANIFEST_SCHEMA = 1
SUMMARY_SCHEMA = 1

STAGES = ("sample", "npt", "scaling", "extract-lambda", "predict-g6", "rg-sweep",
          "fit-couplings")


# ----------------------------------------------------------------------
# small helpers


def _write_csv(path: Path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)
    return path


def _write_json(path: Path, payload):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def _fmt_cutoff(c: float):
    return "inf" if math.isinf(c) else float(c)


def _element_tag(m) -> str:
    return "-".join(str(i) for i in m)


def _snapshot_path(out: Path, width: int, train: bool = False) -> Path:
    stem = f"moments_train_w{width}.npz" if train else f"moments_w{width}.npz"
    return out / stem


def _load_width(out: Path, cfg: RunConfig, width: int, train: bool = False) -> EnsembleMoments:
    path = _snapshot_path(out, width, train)
    if not path.exists():
        raise SnapshotError(f"snapshot {path} not found; run the sample stage first",
                            code="snapshot-missing", path=str(path))
    moments = load_snapshot(path)
    require_config_match(moments, cfg.sha256)
    return moments


class _Ctx:
    """Resolved invocation context shared by all commands."""

    def __init__(self, args):
        self.args = args
        cfg = load_config(args.config)
        plan = cfg.plan
        if args.paper_scale:
            plan = full_scale(plan)
        elif args.desk_scale:
            plan = desk_scale(plan)
        if args.seed is not None:
            plan = dataclasses.replace(plan, seed=args.seed)
        if plan is not cfg.plan:  # re-check overrides (seed range, sizes)
            from .config import validate
            validate(plan, cfg.spec.with_width(plan.widths[0]))
        self.cfg = dataclasses.replace(cfg, plan=plan)
        self.out = Path(args.out)
        self.out.mkdir(parents=True, exist_ok=True)
        self.threads = args.threads
        if args.quad_points:
            self.quad = QuadratureSpec(points_per_axis=args.quad_points)
        else:
            self.quad = QuadratureSpec()

    # ---- analysis defaults -------------------------------------------------
    @property
    def activation(self) -> str:
        return self.cfg.spec.activation

    def eft_width(self) -> int:
        return int(self.cfg.analysis.get("eft_width", self.cfg.plan.widths[-1]))

    def eft_cutoff(self) -> float:
        raw = self.cfg.analysis.get("cutoff")
        if raw is None:
            return math.inf if self.activation == "gauss" else 1e5
        return math.inf if raw == "inf" else float(raw)

    def rg_width(self) -> int:
        default = 20 if 20 in self.cfg.plan.widths else self.cfg.plan.widths[0]
        return int(self.cfg.analysis.get("rg_width", default))

    def rg_cutoffs(self):
        if self.args.cutoffs:
            return tuple(float(c) for c in self.args.cutoffs.split(","))
        raw = self.cfg.analysis.get("rg_cutoffs")
        if raw:
            return tuple(float(c) for c in raw)
        return {
            "relu": tuple(float(c) for c in RELU_RG_CUTOFFS),
            "gauss": (5.0, 10.0, 20.0, 40.0),
            "erf": (1e3, 5e3, 2e4, 1e5),
        }[self.activation]

    def widths(self):
        if self.args.width:
            return (int(self.args.width),)
        if self.args.widths:
            return tuple(int(w) for w in self.args.widths.split(","))
        return self.cfg.plan.widths


# ----------------------------------------------------------------------
# commands


def cmd_sample(ctx: _Ctx, train: bool = False, widths=None):
    cfg = ctx.cfg
    grid = train_scaled(cfg.plan.grid) if train else cfg.plan.grid
    plan = dataclasses.replace(cfg.plan, grid=grid)
    outputs = []
    for width in widths or ctx.widths():
        spec = cfg.spec_for(width)
        accs = run_ensemble(plan, spec, width, threads=ctx.threads)
        path = _snapshot_path(ctx.out, width, train)
        save_snapshot(path, accs, spec=spec.with_width(width), grid=grid,
                      seed=plan.seed, width=width, config_sha256=cfg.sha256)
        outputs.append(path)
    return outputs


def cmd_kernels(ctx: _Ctx):
    cfg = ctx.cfg
    grid = cfg.plan.grid
    km = kernel_model(cfg.spec_for(cfg.plan.widths[0]))
    gram = km.gram(grid)
    gram_w = km.gram_w(grid)
    rows = []
    for i in range(len(grid)):
        for j in range(len(grid)):
            xi = ";".join(repr(float(v)) for v in grid.points[i])
            xj = ";".join(repr(float(v)) for v in grid.points[j])
            rows.append([i, j, xi, xj, repr(float(gram[i, j])), repr(float(gram_w[i, j]))])
    out_csv = _write_csv(ctx.out / "kernels.csv", ["i", "j", "x_i", "x_j", "K", "K_W"], rows)
    fig = report.gram_figure(ctx.out / "kernels.png", ctx.activation, gram)
    return [out_csv, fig]


def _width_reports(ctx: _Ctx, width: int):
    moments = _load_width(ctx.out, ctx.cfg, width)
    grid = moments.grid
    km = kernel_model(ctx.cfg.spec_for(width))
    reports = {}
    tensors = {}
    for order in (2, 4, 6):
        emp = empirical_npt(moments.accumulators, order, grid)
        tensors[order] = emp
        reports[order] = deviation(emp, km)
    return moments, km, tensors, reports


def cmd_npt(ctx: _Ctx):
    rows = []
    for width in ctx.widths():
        _moments, _km, tensors, reports = _width_reports(ctx, width)
        for order in (2, 4, 6):
            emp, rep = tensors[order], reports[order]
            for pos, m in enumerate(emp.multisets):
                rows.append([
                    width, order, _element_tag(m),
                    repr(float(emp.pooled[pos])),
                    repr(float(rep.gp[pos])),
                    repr(float(rep.m_pooled[pos])),
                    repr(float(rep.background)),
                ])
    path = _write_csv(ctx.out / "npt.csv",
                      ["width", "order", "element", "value", "gp", "m_n", "background"],
                      rows)
    return [path]


def cmd_scaling(ctx: _Ctx):
    widths = sorted(ctx.widths())
    per_order = {2: [], 4: [], 6: []}
    conn6_series = []
    km = None
    for width in widths:
        _moments, km, tensors, reports = _width_reports(ctx, width)
        for order in (2, 4, 6):
            rep = reports[order]
            per_order[order].append((width, rep.mean_abs_m, rep.background))
        conn = connected6(tensors[6], tensors[4], km)
        _vec, conn_bg = g6_connected_background(tensors[6].across_std,
                                                tensors[4].across_std, km, tensors[6].grid)
        conn6_series.append((width, float(np.mean(np.abs(conn.pooled))), conn_bg))

    outputs = []
    signal_rows = []
    for order in (2, 4, 6):
        for width, signal, background in per_order[order]:
            signal_rows.append([width, order, repr(signal), repr(background)])
    for width, signal, background in conn6_series:
        signal_rows.append([width, "6conn", repr(signal), repr(background)])
    outputs.append(_write_csv(ctx.out / "scaling_signals.csv",
                              ["width", "order", "signal", "background"], signal_rows))

    slope_rows = []
    slopes = {}
    for order in (4, 6):
        series = [(w, s) for w, s, _ in per_order[order]]
        mask = [s > b for _, s, b in per_order[order]]
        try:
            fit = scaling_slope(series, mask)
            slopes[order] = fit
            slope_rows.append([order, repr(fit.slope), repr(fit.intercept), repr(fit.r2), fit.n_points])
        except InsufficientSignalError:
            slopes[order] = None
            slope_rows.append([order, "", "", "", 0])
    series = [(w, s) for w, s, _ in conn6_series]
    mask = [s > b for _, s, b in conn6_series]
    try:
        fit = scaling_slope(series, mask)
        slopes["6conn"] = fit
        slope_rows.append(["6conn", repr(fit.slope), repr(fit.intercept), repr(fit.r2), fit.n_points])
    except InsufficientSignalError:
        slopes["6conn"] = None
        slope_rows.append(["6conn", "", "", "", 0])
    outputs.append(_write_csv(ctx.out / "scaling_slopes.csv",
                              ["order", "slope", "intercept", "r2", "n_points"], slope_rows))

    fig_rows = {order: (np.array([w for w, _, _ in per_order[order]]),
                        np.array([s for _, s, _ in per_order[order]]),
                        np.array([b for _, _, b in per_order[order]]))
                for order in (2, 4, 6)}
    outputs.append(report.falloff_figure(ctx.out / "falloff.png", ctx.activation, fig_rows))
    outputs.append(report.connected6_figure(
        ctx.out / "connected6.png", ctx.activation,
        np.array([w for w, _, _ in conn6_series]),
        np.array([s for _, s, _ in conn6_series]),
        np.array([b for _, _, b in conn6_series])))
    ctx_state = {"slopes": slopes, "m2": {w: r for (w, r, _b) in per_order[2]},
                 "m2_background": {w: b for (w, _r, b) in per_order[2]}}
    return outputs, ctx_state


def cmd_extract_lambda(ctx: _Ctx, width=None, cutoff=None):
    width = width or ctx.eft_width()
    cutoff = ctx.eft_cutoff() if cutoff is None else cutoff
    moments, km, tensors, _reports = _width_reports(ctx, width)
    lam = extract_lambda_m(tensors[4], km, cutoff, ctx.quad)
    rows = [[_element_tag(m), repr(float(v))] for m, v in zip(lam.multisets, lam.values)]
    outputs = [
        _write_csv(ctx.out / "lambda.csv", ["element", "lambda_m"], rows),
        _write_json(ctx.out / "lambda.json", {
            "schema_version": SUMMARY_SCHEMA,
            "width": width,
            "cutoff": _fmt_cutoff(cutoff),
            "lambda_bar": lam.mean,
            "lambda_rel_spread": lam.rel_spread,
        }),
        report.lambda_figure(ctx.out / "lambda.png", ctx.activation, width, cutoff, lam.values),
    ]
    return outputs, lam


def cmd_predict_g6(ctx: _Ctx, width=None, cutoff=None):
    width = width or ctx.eft_width()
    cutoff = ctx.eft_cutoff() if cutoff is None else cutoff
    moments, km, tensors, _reports = _width_reports(ctx, width)
    lam = extract_lambda_m(tensors[4], km, cutoff, ctx.quad)
    grid = moments.grid
    emp6 = tensors[6].pooled
    gp6 = gp_tensor(km, grid, 6)
    pred6 = predict_g6_tensor(km, grid, lam.mean, cutoff, ctx.quad)
    dvals, valid = delta6(emp6, pred6)
    gp_ratio = np.where(valid, gp6 / np.where(valid, emp6, 1.0), np.nan)
    corr_ratio = np.where(valid, pred6 / np.where(valid, emp6, 1.0), np.nan)
    rows = []
    for pos, m in enumerate(multisets(len(grid), 6)):
        rows.append([
            _element_tag(m), repr(float(emp6[pos])), repr(float(gp6[pos])),
            repr(float(pred6[pos])),
            repr(float(dvals[pos])) if valid[pos] else "",
            repr(float(gp_ratio[pos])) if valid[pos] else "",
            repr(float(corr_ratio[pos])) if valid[pos] else "",
        ])
    delta_mean_abs = float(np.mean(np.abs(dvals[valid]))) if valid.any() else math.nan
    outputs = [
        _write_csv(ctx.out / "g6.csv",
                   ["element", "empirical", "gp", "prediction", "delta", "gp_ratio",
                    "corrected_ratio"], rows),
        _write_json(ctx.out / "g6.json", {
            "schema_version": SUMMARY_SCHEMA,
            "width": width,
            "cutoff": _fmt_cutoff(cutoff),
            "lambda_bar": lam.mean,
            "delta_mean_abs": delta_mean_abs,
        }),
        report.g6_ratio_figure(ctx.out / "g6_ratio.png", ctx.activation, width,
                               gp_ratio[valid], corr_ratio[valid]),
    ]
    return outputs, {"delta_mean_abs": delta_mean_abs, "lambda_bar": lam.mean}


def cmd_rg_sweep(ctx: _Ctx):
    width = ctx.rg_width()
    cutoffs = ctx.rg_cutoffs()
    moments, km, tensors, _reports = _width_reports(ctx, width)
    sweep = cutoff_sweep(tensors[4], km, cutoffs, ctx.quad, width=width)
    min_fit = float(ctx.cfg.analysis.get("rg_cutoff_min_fit",
                                         1e3 if ctx.activation == "relu" else 0.0))
    try:
        slope, stderr = fit_rg_slope(sweep, min_fit)
    except InsufficientSignalError:
        slope, stderr = sweep.slope, math.nan
    rows = [[repr(e.cutoff), repr(e.lambda_bar), repr(e.rel_spread)] for e in sweep.entries]
    outputs = [
        _write_csv(ctx.out / "rg.csv", ["cutoff", "lambda_bar", "rel_spread"], rows),
        _write_json(ctx.out / "rg.json", {
            "schema_version": SUMMARY_SCHEMA,
            "width": width,
            "slope": slope,
            "stderr": None if math.isnan(stderr) else stderr,
            "theory_slope": None if math.isnan(sweep.theory_slope) else sweep.theory_slope,
            "cutoff_min_fit": min_fit,
            "failures": [list(f) for f in sweep.failures],
        }),
        report.rg_figure(ctx.out / "rg.png", ctx.activation, km.spec.d_in,
                         sweep.cutoffs, sweep.lambda_bars, slope,
                         sweep.intercept, sweep.theory_slope),
    ]
    return outputs, {"slope": slope, "entries": sweep.entries}


def _check_fit_snapshots(ctx: _Ctx, test: EnsembleMoments, train: EnsembleMoments):
    require_config_match(test, ctx.cfg.sha256)
    a, b = test.meta["architecture"], train.meta["architecture"]
    if a != b or test.width != train.width or test.seed != train.seed:
        raise SnapshotError("train/test snapshots disagree on architecture, width or seed",
                            code="snapshot-mismatch")
    want = train_scaled(test.grid).points
    if train.grid.points.shape != want.shape or not np.allclose(train.grid.points, want,
                                                                rtol=0, atol=1e-15):
        raise SnapshotError("train grid is not the scaled test grid", code="snapshot-mismatch")


def cmd_fit_couplings(ctx: _Ctx, models=None, width=None):
    width = width or ctx.eft_width()
    args = ctx.args
    test_path = Path(args.test) if getattr(args, "test", None) else _snapshot_path(ctx.out, width)
    train_path = Path(args.train) if getattr(args, "train", None) else _snapshot_path(ctx.out, width, train=True)
    for p in (test_path, train_path):
        if not p.exists():
            raise SnapshotError(f"snapshot {p} not found", code="snapshot-missing", path=str(p))
    test = load_snapshot(test_path)
    train = load_snapshot(train_path)
    _check_fit_snapshots(ctx, test, train)

    cutoff = float(ctx.cfg.analysis.get("fit_cutoff", ctx.eft_cutoff()))
    km = kernel_model(ctx.cfg.spec_for(width))
    reports = {}
    outputs = []
    feats = {}
    devs = {}
    for tag, moments in (("train", train), ("test", test)):
        grid = moments.grid
        emp4 = empirical_npt(moments.accumulators, 4, grid)
        devs[tag] = emp4.pooled - gp_tensor(km, grid, 4)
        feats[tag] = build_features(km, grid, cutoff, ctx.quad)
    requested = models or ([args.model] if getattr(args, "model", None) else None)
    for model in requested or MODELS:
        try:
            rep = fit_model(model, devs["train"], feats["train"])
        except CollinearFeaturesError as exc:
            # structurally degenerate family (e.g. homogeneous relu kernel):
            # an expected outcome when sweeping every model, an error when
            # one was explicitly requested
            if requested:
                raise
            outputs.append(_write_json(ctx.out / f"fit_{model}.json", {
                "schema_version": SUMMARY_SCHEMA,
                "model": model,
                "width": width,
                "cutoff": _fmt_cutoff(cutoff),
                "error": exc.code,
                "message": str(exc),
            }))
            continue
        evaluate(rep, devs["test"], feats["test"])
        reports[model] = rep
        outputs.append(_write_json(ctx.out / f"fit_{model}.json", {
            "schema_version": SUMMARY_SCHEMA,
            "model": model,
            "width": width,
            "cutoff": _fmt_cutoff(cutoff),
            "lambda0": rep.lambda0,
            "lambda2": rep.lambda2,
            "lambda_nl": rep.lambda_nl,
            "train_mse": rep.train_mse,
            "test_mse": rep.test_mse,
            "test_mape": rep.test_mape,
        }))
    return outputs, reports


def cmd_pipeline(ctx: _Ctx):
    stages = (tuple(s.strip() for s in ctx.args.stages.split(","))
              if ctx.args.stages else STAGES)
    bad = [s for s in stages if s not in STAGES]
    if bad:
        raise ConfigurationError(f"unknown stages {bad}; valid: {STAGES}", code="bad-stage")
    order = {name: i for i, name in enumerate(STAGES)}
    if list(stages) != sorted(stages, key=order.__getitem__):
        raise ConfigurationError("stages must respect dependency order "
                                 f"{STAGES}", code="bad-stage-order")

    outputs = []
    summary = {
        "schema_version": SUMMARY_SCHEMA,
        "activation": ctx.activation,
        "m2_below_background": None,
        "g4_slope": None,
        "g6_conn_slope": None,
        "lambda_rel_spread": None,
        "delta6_mean_abs": None,
    }
    for stage in stages:
        try:
            if stage == "sample":
                needed = set(ctx.widths()) | {ctx.eft_width(), ctx.rg_width()}
                outputs += cmd_sample(ctx, widths=tuple(sorted(needed)))
            elif stage == "npt":
                outputs += cmd_npt(ctx)
            elif stage == "scaling":
                outs, state = cmd_scaling(ctx)
                outputs += outs
                m2 = state["m2"]
                bg = state["m2_background"]
                summary["m2_below_background"] = bool(all(m2[w] <= bg[w] for w in m2))
                if state["slopes"].get(4):
                    summary["g4_slope"] = state["slopes"][4].slope
                if state["slopes"].get("6conn"):
                    summary["g6_conn_slope"] = state["slopes"]["6conn"].slope
            elif stage == "extract-lambda":
                outs, lam = cmd_extract_lambda(ctx)
                outputs += outs
                summary["lambda_rel_spread"] = lam.rel_spread
            elif stage == "predict-g6":
                outs, info = cmd_predict_g6(ctx)
                outputs += outs
                summary["delta6_mean_abs"] = info["delta_mean_abs"]
            elif stage == "rg-sweep":
                outs, _info = cmd_rg_sweep(ctx)
                outputs += outs
            elif stage == "fit-couplings":
                outputs += cmd_sample(ctx, train=True, widths=(ctx.eft_width(),))
                outs, _reports = cmd_fit_couplings(ctx)
                outputs += outs
        except NnqftError as exc:
            exc.details["stage"] = stage
            exc.args = (f"stage {stage!r} failed: {exc}",) + exc.args[1:]
            raise
    outputs.append(_write_json(ctx.out / "summary.json", summary))
    return outputs


# ----------------------------------------------------------------------
# entry point


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nnqft", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, help="path to JSON configuration")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--seed", type=int, default=None, help="override the plan seed")
        p.add_argument("--width", type=int, default=None, help="single width to process")
        p.add_argument("--widths", default=None, help="comma-separated widths")
        p.add_argument("--cutoffs", default=None, help="comma-separated cutoffs")
        p.add_argument("--threads", type=int, default=None,
                       help="worker threads (falls back to NNQFT_THREADS)")
        p.add_argument("--quad-points", type=int, default=None,
                       help="quadrature points per axis")
        scale = p.add_mutually_exclusive_group()
        scale.add_argument("--desk-scale", action="store_true",
                           help="20 experiments x 5e4 nets")
        scale.add_argument("--paper-scale", action="store_true",
                           help="100 experiments x 1e5 nets")
        return p

    common(sub.add_parser("sample", help="sample ensembles and write moment snapshots"))
    common(sub.add_parser("kernels", help="tabulate the kernel over the grid"))
    common(sub.add_parser("npt", help="empirical n-pt tables vs free predictions"))
    common(sub.add_parser("scaling", help="signal/background vs width and slope fits"))
    common(sub.add_parser("extract-lambda", help="measured quartic coupling"))
    common(sub.add_parser("predict-g6", help="coupling-corrected 6-pt prediction"))
    common(sub.add_parser("rg-sweep", help="coupling vs cutoff"))
    fit = common(sub.add_parser("fit-couplings", help="train/test coupling fits"))
    fit.add_argument("--model", choices=MODELS, default=None,
                     help="fit one model (default: all)")
    fit.add_argument("--train", default=None, help="train-grid snapshot path")
    fit.add_argument("--test", default=None, help="test-grid snapshot path")
    pipe = common(sub.add_parser("pipeline", help="run stages end to end"))
    pipe.add_argument("--stages", default=None,
                      help=f"comma-separated subset of {','.join(STAGES)}")
    return parser


def _run(args) -> list:
    ctx = _Ctx(args)
    started = time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())
    cmd = args.command
    if cmd == "sample":
        outputs = cmd_sample(ctx)
    elif cmd == "kernels":
        outputs = cmd_kernels(ctx)
    elif cmd == "npt":
        outputs = cmd_npt(ctx)
    elif cmd == "scaling":
        outputs, _state = cmd_scaling(ctx)
    elif cmd == "extract-lambda":
        outputs, _lam = cmd_extract_lambda(ctx)
    elif cmd == "predict-g6":
        outputs, _info = cmd_predict_g6(ctx)
    elif cmd == "rg-sweep":
        outputs, _info = cmd_rg_sweep(ctx)
    elif cmd == "fit-couplings":
        outputs, _reports = cmd_fit_couplings(ctx)
    elif cmd == "pipeline":
        outputs = cmd_pipeline(ctx)
    else:  # pragma: no cover - argparse guards this
        raise ConfigurationError(f"unknown command {cmd!r}", code="bad-command")

    manifest = {
        "schema_version": MANIFEST_SCHEMA,
        "artifact_version": __version__,
        "command": cmd,
        "config_sha256": ctx.cfg.sha256,
        "seed": ctx.cfg.plan.seed,
        "started_at": started,
        "finished_at": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
        "outputs": sorted(str(Path(p).relative_to(ctx.out)) for p in outputs),
    }
    _write_json(ctx.out / f"{cmd}_manifest.json", manifest)
    return outputs


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        _run(args)
    except NnqftError as exc:
        payload = {"error": {"code": exc.code, "message": str(exc),
                             "details": {k: repr(v) for k, v in exc.details.items()}}}
        print(json.dumps(payload, sort_keys=True), file=sys.stderr)
        return 2 if isinstance(exc, (ConfigurationError, SnapshotError)) else 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
