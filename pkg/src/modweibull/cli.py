"""Command-line pipeline: table -> fit -> combine -> forecast, with file handoffs.

Exit status is 0 on success and 2 on any validation or domain error.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import dataset, ensemble, estimation, forecast, synthgen
from .config import PipelineConfig, load_config
from .errors import InvalidConfig, ModWeibullError, TooFewRows
from .models import Axis, WeibullModel

logger = logging.getLogger("modweibull")

EXIT_OK = 0
EXIT_ERROR = 2


def _write_json(path: Path, obj: Any) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _read_json(path: Path) -> dict:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise InvalidConfig(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(data, dict):
        raise InvalidConfig(f"{path}: expected a JSON object")
    return data


# ---------------------------------------------------------------------------
# stages (library-level, reused by run-all)

def stage_table(dataset_path: Path, cfg: PipelineConfig, out: Path) -> dataset.FailureTable:
    with open(dataset_path, encoding="utf-8", newline="") as fh:
        records = dataset.parse_dataset(fh, cfg.condition_names)
    table = dataset.build_failure_table(records, cfg.table.axis, cfg.health_index,
                                        step=cfg.table.step)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", encoding="utf-8", newline="") as fh:
        dataset.write_table(table, fh)
    print(f"records: {len(records)}  rows: {len(table)}  flagged: {int(table.flagged.sum())}")
    return table


def stage_fit(table_path: Path, cfg: PipelineConfig, out: Path) -> dict:
    with open(table_path, encoding="utf-8", newline="") as fh:
        table = dataset.read_table(fh)
    usable = int((~table.flagged).sum())
    if usable < 5:
        raise TooFewRows(f"{table_path}: {usable} unflagged rows, need at least 5")
    split = dataset.split_table(table, cfg.split.train_fraction, cfg.split.seed, cfg.split.strata)
    fits, failures = estimation.fit_candidates(split.train, cfg.grid)
    if not fits:
        estimation.fit_all(split.train, cfg.grid)  # raises AllCandidatesFailed with detail
    doc = {
        "axis": table.axis.value,
        "grid": cfg.grid.to_dict(),
        "split": split.to_dict(),
        "fits": [f.to_dict() for f in fits],
        "failures": [
            {"model": f.candidate.describe(), "gamma": f.candidate.gamma,
             "delta": f.candidate.delta, "error": f.error}
            for f in failures
        ],
    }
    _write_json(out, doc)
    print(f"train rows: {len(split.train)}  test rows: {len(split.test)}  "
          f"models fitted: {len(fits)}  failed: {len(failures)}")
    for f in failures:
        print(f"  not fitted: {f.candidate.describe()}: {f.error}")
    return doc


def _load_fits(doc: dict) -> tuple[list[WeibullModel], dataset.SplitTable]:
    try:
        fits = [estimation.FitResult.from_dict(f) for f in doc["fits"]]
        split = dataset.SplitTable.from_dict(doc["split"])
    except (KeyError, TypeError) as exc:
        raise InvalidConfig(f"malformed models file: missing {exc}") from None
    if not fits:
        raise InvalidConfig("models file contains no fitted models")
    return [f.model for f in fits], split


def _joint_from_fits(doc: dict, cfg: PipelineConfig) -> tuple[ensemble.JointModel, list, float]:
    models, split = _load_fits(doc)
    scored = ensemble.score(models, split.test)
    selected = ensemble.select(scored, cfg.policy)
    joint = ensemble.combine(selected)
    joint_mse = ensemble.mse(joint, split.test)
    provenance = {
        "split_seed": split.seed,
        "train_fraction": split.train_fraction,
        "policy": cfg.policy.to_dict(),
        "joint_mse": joint_mse,
        "ranking": [
            {"id": s.candidate_index + 1, "model": s.model.describe(), "mse": s.mse,
             "rank": s.rank}
            for s in sorted(scored, key=lambda s: s.candidate_index)
        ],
    }
    joint = ensemble.JointModel(joint.models, joint.weights, joint.axis, joint.mse, provenance)
    return joint, scored, joint_mse


def stage_combine(models_path: Path, cfg: PipelineConfig, out: Path) -> ensemble.JointModel:
    joint, scored, joint_mse = _joint_from_fits(_read_json(models_path), cfg)
    _write_json(out, joint.to_dict())
    print(ensemble.ranking_table(scored))
    print(f"selected {len(joint.models)} model(s); joint test MSE {joint_mse:.6f}")
    for model, weight in joint.members:
        print(f"  {model.describe():<32} weight {weight:.4f}")
    return joint


def stage_forecast(joint_path: Path, population_path: Path, cfg: PipelineConfig, out: Path,
                   dt1: float, dt2: float, avg_loss: float | None = None,
                   mc: bool | None = None) -> forecast.ForecastReport:
    joint = ensemble.JointModel.from_dict(_read_json(joint_path))
    horizon = forecast.Horizon(dt1, dt2)
    avg_loss = cfg.forecast.avg_loss if avg_loss is None else avg_loss
    with open(population_path, encoding="utf-8", newline="") as fh:
        pop = forecast.parse_population(fh, avg_loss, cfg.forecast.age_floor)
    have_losses = avg_loss is not None or all(a.loss is not None for a in pop.assets)
    if mc or (mc is None and have_losses):
        report = forecast.monte_carlo_consequence(joint, pop, horizon, cfg.mc.trials, cfg.mc.seed)
    else:
        report = forecast.population_forecast(joint, pop, horizon)
    _write_json(out, report.to_dict())
    per_asset = out.with_name(out.stem + "_assets.csv")
    with open(per_asset, "w", encoding="utf-8", newline="") as fh:
        report.write_per_asset(fh)
    print(f"assets: {len(pop)}  horizon: [{dt1:g}, {dt2:g}] years  expected failures: {report.n_f:.3f}")
    if report.consequence is not None:
        print(f"consequence (n_f x avg_loss): {report.consequence:.3f}")
    if report.mc_percentiles:
        pct = "  ".join(f"P{k}={v:g}" for k, v in report.mc_percentiles.items())
        print(f"monte carlo ({report.trials} trials, seed {report.seed}): "
              f"mean={report.consequence_mean:.3f}  {pct}")
    return report


def stage_curves(model_path: Path, cfg: PipelineConfig, out: Path,
                 start: float, stop: float, step: float) -> np.ndarray:
    doc = _read_json(model_path)
    if "members" in doc:
        joint = ensemble.JointModel.from_dict(doc)
        models = list(joint.models)
    elif "fits" in doc:
        models, _ = _load_fits(doc)
        joint = models[0] if len(models) == 1 else _joint_from_fits(doc, cfg)[0]
    else:
        raise InvalidConfig(f"{model_path}: neither a joint-model nor a models file")
    if step <= 0 or stop < start:
        raise InvalidConfig("curves need step > 0 and stop >= start")
    n = int(np.floor((stop - start) / step + 1e-9)) + 1
    x = start + step * np.arange(n)
    columns = [x] + [np.asarray(m.cdf(x)) for m in models] + [np.asarray(joint.cdf(x))]
    data = np.column_stack(columns)
    header = ["x"] + [m.describe() for m in models] + ["joint"]
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in data:
            writer.writerow([repr(float(v)) for v in row])
    print(f"wrote {n} rows x {len(header)} columns")
    return data


def stage_synth(cfg: PipelineConfig, out: Path, overrides: dict, snapshot: int | None = None,
                loss: float | None = None) -> int:
    params = {**cfg.synth, **{k: v for k, v in overrides.items() if v is not None}}
    params.setdefault("alpha", 20.0)
    params.setdefault("beta", 1.5)
    params.setdefault("population", 560)
    params.setdefault("observation_window", 40.0)
    spec = synthgen.SynthSpec.from_dict(params)
    out.parent.mkdir(parents=True, exist_ok=True)
    if snapshot is not None:
        config = cfg.health_index if cfg.table.axis is Axis.HEALTH_INDEX else None
        floor = cfg.forecast.age_floor if cfg.forecast.age_floor is not None else 0.0
        pop = synthgen.generate_snapshot(spec, snapshot, config, loss=loss, age_floor=floor)
        with open(out, "w", encoding="utf-8", newline="") as fh:
            forecast.write_population(pop, fh)
        print(f"wrote population snapshot of {len(pop)} in-service assets")
        return len(pop)
    records = synthgen.generate_population(spec)
    with open(out, "w", encoding="utf-8", newline="") as fh:
        dataset.write_dataset(records, fh)
    n_failed = sum(r.failed for r in records)
    print(f"wrote {len(records)} records ({n_failed} failed, {len(records) - n_failed} working)")
    return len(records)


# ---------------------------------------------------------------------------
# argument handling

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, default=argparse.SUPPRESS,
                        help="JSON pipeline configuration")
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS,
                        help="override every seed in the configuration")
    common.add_argument("--out", type=Path, default=argparse.SUPPRESS, help="output path")
    common.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS)

    parser = argparse.ArgumentParser(
        prog="modweibull", parents=[common],
        description="Fit, combine and forecast with modified Weibull reliability models.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("table", parents=[common], help="dataset -> failure table")
    p.add_argument("dataset", type=Path)

    p = sub.add_parser("fit", parents=[common], help="failure table -> fitted models")
    p.add_argument("table", type=Path)

    p = sub.add_parser("combine", parents=[common], help="fitted models -> joint model")
    p.add_argument("models", type=Path)

    def horizon_args(p):
        p.add_argument("--dt1", type=float, default=0.0, help="window start, years from today")
        p.add_argument("--dt2", type=float, required=True, help="window end, years from today")
        p.add_argument("--avg-loss", type=float, default=None, help="loss per failure")
        g = p.add_mutually_exclusive_group()
        g.add_argument("--mc", dest="mc", action="store_true", default=None,
                       help="require the Monte Carlo consequence distribution")
        g.add_argument("--no-mc", dest="mc", action="store_false")

    p = sub.add_parser("forecast", parents=[common], help="joint model + population -> report")
    p.add_argument("joint", type=Path)
    p.add_argument("population", type=Path)
    horizon_args(p)

    p = sub.add_parser("curves", parents=[common], help="export model curves for plotting")
    p.add_argument("model", type=Path, help="joint-model or models file")
    p.add_argument("--start", type=float, default=0.0)
    p.add_argument("--stop", type=float, default=100.0)
    p.add_argument("--step", type=float, default=1.0)

    p = sub.add_parser("synth", parents=[common], help="write a synthetic dataset")
    p.add_argument("--population", type=int)
    p.add_argument("--alpha", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--gamma", type=float)
    p.add_argument("--window", dest="observation_window", type=float)
    p.add_argument("--noise", dest="condition_noise", type=float)
    p.add_argument("--snapshot", type=int, metavar="N",
                   help="write a forecast population of N in-service assets instead")
    p.add_argument("--loss", type=float, help="per-asset loss column for --snapshot")

    p = sub.add_parser("run-all", parents=[common],
                       help="table, fit, combine and forecast into the --out directory")
    p.add_argument("dataset", type=Path)
    p.add_argument("population", type=Path)
    horizon_args(p)
    return parser


def _require_out(args) -> Path:
    out = getattr(args, "out", None)
    if out is None:
        raise InvalidConfig("--out is required")
    return out


def run(args: argparse.Namespace) -> int:
    cfg = load_config(getattr(args, "config", None)).with_seed(getattr(args, "seed", None))
    out = _require_out(args)
    cmd = args.command
    if cmd == "table":
        stage_table(args.dataset, cfg, out)
    elif cmd == "fit":
        stage_fit(args.table, cfg, out)
    elif cmd == "combine":
        stage_combine(args.models, cfg, out)
    elif cmd == "forecast":
        stage_forecast(args.joint, args.population, cfg, out, args.dt1, args.dt2,
                       args.avg_loss, args.mc)
    elif cmd == "curves":
        stage_curves(args.model, cfg, out, args.start, args.stop, args.step)
    elif cmd == "synth":
        overrides = {k: getattr(args, k) for k in
                     ("population", "alpha", "beta", "gamma", "observation_window",
                      "condition_noise")}
        stage_synth(cfg, out, overrides, args.snapshot, args.loss)
    elif cmd == "run-all":
        out.mkdir(parents=True, exist_ok=True)
        stage_table(args.dataset, cfg, out / "table.csv")
        stage_fit(out / "table.csv", cfg, out / "models.json")
        stage_combine(out / "models.json", cfg, out / "joint.json")
        stage_forecast(out / "joint.json", args.population, cfg, out / "report.json",
                       args.dt1, args.dt2, args.avg_loss, args.mc)
    return EXIT_OK


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return run(args)
    except ModWeibullError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
