"""Experiment configs and the generate / estimate / metrics / bench pipeline.

A single JSON config drives every stage.  Each stage writes its outputs
plus a manifest holding the fully resolved config; `replay` re-executes a
manifest and, because every random draw is seeded and no timestamps are
written, regenerates the numeric outputs byte for byte.

Per-run seed derivation: run r (0-based) generates data with seed
base_seed + r and draws its feature maps with seed rff_seed + r.
"""

from __future__ import annotations

import json
import os
import time
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import io
from .exceptions import ConfigError, DataError
from .estimator import (
    EstimatorConfig,
    GrowingDictionaryEstimator,
    OnlineEstimator,
)
from .generator import GeneratorConfig, generate
from .metrics import DetectionConfig, mse_curve, pmd_pfa

ENV_OUTPUT_DIR = "RFFGRAPH_OUTPUT_DIR"

_TOP_KEYS = {"runs", "base_seed", "output_dir", "generator", "data_csv",
             "estimator", "metrics", "emit_every", "standardize"}
_GEN_KEYS = {"N", "P", "T", "edge_probability", "switch_interval", "drift",
             "drift_scope", "noise_std", "kernel_variance", "beta_variance", "M"}
_EST_KEYS = {"N", "P", "D", "lambda", "gamma", "kernel_variance", "rff_seed",
             "schedule", "per_slot_maps"}
_MET_KEYS = {"delta", "exclude_self_loops", "mse_window"}


def _check_keys(d: dict, allowed: set, section: str):
    unknown = set(d) - allowed
    if unknown:
        raise ConfigError(f"unknown key(s) in {section}: {sorted(unknown)}")


@dataclass(frozen=True)
class ExperimentConfig:
    """Resolved experiment: data source, estimator, metrics, run count."""

    runs: int
    base_seed: int
    output_dir: Path
    generator: GeneratorConfig | None  # template; per-run seed filled in
    data_csv: str | None
    estimator: EstimatorConfig  # template; per-run rff_seed filled in
    detection: DetectionConfig
    mse_window: int
    emit_every: int
    standardize: bool
    resolved: dict  # JSON echo written into manifests

    def generator_for_run(self, r: int) -> GeneratorConfig:
        if self.generator is None:
            raise ConfigError("config has no generator section")
        return replace(self.generator, seed=self.base_seed + r)

    def estimator_for_run(self, r: int) -> EstimatorConfig:
        return replace(self.estimator, rff_seed=self.estimator.rff_seed + r)

    def run_seeds(self):
        return [{"run": r, "data_seed": self.base_seed + r,
                 "rff_seed": self.estimator.rff_seed + r} for r in range(self.runs)]


def parse_experiment(obj: dict, config_dir: Path | None = None) -> ExperimentConfig:
    """Validate a parsed JSON experiment dict; unknown keys are rejected."""
    if not isinstance(obj, dict):
        raise ConfigError("experiment config must be a JSON object")
    _check_keys(obj, _TOP_KEYS, "experiment config")
    runs = obj.get("runs", 1)
    if not isinstance(runs, int) or runs < 1:
        raise ConfigError(f"runs must be a positive integer, got {runs!r}")
    base_seed = obj.get("base_seed", 0)

    gen_obj = obj.get("generator")
    gen = None
    if gen_obj is not None:
        if "seed" in gen_obj:
            raise ConfigError("generator seed is derived from base_seed; remove 'seed'")
        _check_keys(gen_obj, _GEN_KEYS, "generator section")
        try:
            gen = GeneratorConfig(seed=0, **gen_obj)
        except TypeError as e:
            raise ConfigError(f"generator section: {e}") from None

    data_csv = obj.get("data_csv")
    if gen is None and data_csv is None:
        raise ConfigError("config needs a generator section or a data_csv path")
    if gen is not None and data_csv is not None:
        raise ConfigError("generator and data_csv are mutually exclusive")
    if data_csv is not None and config_dir is not None and not Path(data_csv).is_absolute():
        data_csv = str((config_dir / data_csv).resolve())

    est_obj = obj.get("estimator")
    if est_obj is None:
        raise ConfigError("config needs an estimator section")
    _check_keys(est_obj, _EST_KEYS, "estimator section")
    est_kwargs = dict(est_obj)
    if "lambda" in est_kwargs:
        est_kwargs["lam"] = est_kwargs.pop("lambda")
    try:
        est = EstimatorConfig(**est_kwargs)
    except TypeError as e:
        raise ConfigError(f"estimator section: {e}") from None

    met_obj = obj.get("metrics", {})
    _check_keys(met_obj, _MET_KEYS, "metrics section")
    try:
        detection = DetectionConfig(delta=met_obj.get("delta", 0.05),
                                    exclude_self_loops=met_obj.get("exclude_self_loops", True))
    except ValueError as e:
        raise ConfigError(str(e)) from None
    mse_window = met_obj.get("mse_window", 100)
    if not isinstance(mse_window, int) or mse_window < 1:
        raise ConfigError(f"mse_window must be a positive integer, got {mse_window!r}")

    emit_every = obj.get("emit_every", 1)
    if not isinstance(emit_every, int) or emit_every < 1:
        raise ConfigError(f"emit_every must be a positive integer, got {emit_every!r}")
    standardize = bool(obj.get("standardize", False))

    if gen is not None and gen.N != est.N:
        raise ConfigError(f"generator N={gen.N} does not match estimator N={est.N}")
    if gen is not None and gen.P != est.P:
        raise ConfigError(f"generator P={gen.P} does not match estimator P={est.P}")

    out_dir = Path(os.environ.get(ENV_OUTPUT_DIR) or obj.get("output_dir", "out"))

    resolved = {
        "runs": runs,
        "base_seed": base_seed,
        "output_dir": str(obj.get("output_dir", "out")),
        "generator": None if gen is None else {
            k: getattr(gen, k) for k in
            ("N", "P", "T", "edge_probability", "switch_interval", "drift",
             "drift_scope", "noise_std", "kernel_variance", "beta_variance", "M")
        },
        "data_csv": data_csv,
        "estimator": io.config_dict(est),
        "metrics": {"delta": detection.delta,
                    "exclude_self_loops": detection.exclude_self_loops,
                    "mse_window": mse_window},
        "emit_every": emit_every,
        "standardize": standardize,
    }
    return ExperimentConfig(runs=runs, base_seed=base_seed, output_dir=out_dir,
                            generator=gen, data_csv=data_csv, estimator=est,
                            detection=detection, mse_window=mse_window,
                            emit_every=emit_every, standardize=standardize,
                            resolved=resolved)


def load_experiment(path) -> ExperimentConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        with open(path) as fh:
            obj = json.load(fh)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: invalid JSON ({e})") from None
    return parse_experiment(obj, config_dir=path.parent)


def _write_manifest(cfg: ExperimentConfig, command: str, options: dict | None = None):
    path = cfg.output_dir / f"{command}_manifest.json"
    with open(path, "w") as fh:
        json.dump({"command": command, "options": io.jsonable(options or {}),
                   "experiment": io.jsonable(cfg.resolved),
                   "run_seeds": cfg.run_seeds()}, fh, indent=2)
    return path


def _run_prefix(r: int) -> str:
    return f"run{r:03d}"


def _load_run_values(cfg: ExperimentConfig, r: int) -> np.ndarray:
    """The input series for run r: regenerated from config or read from CSV."""
    if cfg.generator is not None:
        return generate(cfg.generator_for_run(r)).values
    values = io.read_data_csv(cfg.data_csv)
    return values


def _standardize(values: np.ndarray):
    """Per-node zero-mean unit-variance scaling; constant nodes keep std 1."""
    mean = values.mean(axis=1, keepdims=True)
    std = values.std(axis=1, keepdims=True)
    std = np.where(std > 0, std, 1.0)
    return (values - mean) / std, mean.ravel(), std.ravel()


def cmd_generate(cfg: ExperimentConfig) -> list[Path]:
    """Write per-run data CSVs and topology JSONL traces."""
    if cfg.generator is None:
        raise ConfigError("generate requires a generator section")
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for r in range(cfg.runs):
        ts = generate(cfg.generator_for_run(r))
        data_path = cfg.output_dir / f"{_run_prefix(r)}_data.csv"
        topo_path = cfg.output_dir / f"{_run_prefix(r)}_topology.jsonl"
        io.write_data_csv(data_path, ts.values)
        io.write_topology_jsonl(topo_path, ts)
        written += [data_path, topo_path]
    written.append(_write_manifest(cfg, "generate"))
    return written


def cmd_estimate(cfg: ExperimentConfig, limit: int | None = None,
                 from_checkpoint=None) -> list[Path]:
    """Stream each run through the estimator; write estimates, predictions, checkpoint."""
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    if from_checkpoint is not None:
        return _resume_estimate(cfg, from_checkpoint)
    written = []
    for r in range(cfg.runs):
        values = _load_run_values(cfg, r)
        if values.shape[0] != cfg.estimator.N:
            raise DataError(f"data has {values.shape[0]} nodes but estimator expects "
                            f"{cfg.estimator.N}")
        if limit is not None:
            if limit <= cfg.estimator.P:
                raise DataError(f"limit must exceed the warm-up length P={cfg.estimator.P}")
            values = values[:, :limit]
        if cfg.standardize:
            values, mean, std = _standardize(values)
        else:
            mean = std = None
        est = OnlineEstimator(cfg.estimator_for_run(r))
        series = est.run(values)
        prefix = _run_prefix(r)
        est_path = cfg.output_dir / f"{prefix}_estimates.csv"
        pred_path = cfg.output_dir / f"{prefix}_predictions.csv"
        ckpt_path = cfg.output_dir / f"{prefix}_checkpoint.json"
        io.write_estimates_csv(est_path, series.group_norms, t_start=cfg.estimator.P,
                               emit_every=cfg.emit_every)
        io.write_predictions_csv(pred_path, series.predictions, t_start=cfg.estimator.P)
        io.write_checkpoint(ckpt_path, est, extra={
            "run": r, "next_t": values.shape[1], "standardize": cfg.standardize,
            "mean": None if mean is None else mean.tolist(),
            "std": None if std is None else std.tolist(),
        })
        written += [est_path, pred_path, ckpt_path]
    written.append(_write_manifest(cfg, "estimate",
                                   {"limit": limit, "from_checkpoint": None}))
    return written


def _resume_estimate(cfg: ExperimentConfig, checkpoint_path) -> list[Path]:
    """Continue a checkpointed run over the remaining samples of its series."""
    est = io.read_checkpoint(checkpoint_path)
    extra = io.checkpoint_extra(checkpoint_path)
    r = extra.get("run", 0)
    next_t = extra["next_t"]
    values = _load_run_values(cfg, r)
    if extra.get("standardize"):
        mean = np.array(extra["mean"])[:, None]
        std = np.array(extra["std"])[:, None]
        values = (values - mean) / std
    if next_t >= values.shape[1]:
        raise DataError(f"checkpoint already covers all {values.shape[1]} samples")
    T = values.shape[1]
    N, P = est.cfg.N, est.cfg.P
    preds = np.full((N, T), np.nan)
    norms = np.zeros((T, N, N, P))
    for t in range(next_t, T):
        out = est.step(values[:, t])
        if out is not None:
            preds[:, t] = out[0]
        norms[t] = est.pseudo_adjacency()
    prefix = _run_prefix(r)
    est_path = cfg.output_dir / f"{prefix}_estimates_resumed.csv"
    pred_path = cfg.output_dir / f"{prefix}_predictions_resumed.csv"
    ckpt_path = cfg.output_dir / f"{prefix}_checkpoint_resumed.json"
    io.write_estimates_csv(est_path, norms, t_start=next_t, emit_every=cfg.emit_every)
    io.write_predictions_csv(pred_path, preds, t_start=next_t)
    io.write_checkpoint(ckpt_path, est, extra={**extra, "next_t": T})
    written = [est_path, pred_path, ckpt_path]
    written.append(_write_manifest(cfg, "estimate",
                                   {"limit": None, "from_checkpoint": str(checkpoint_path)}))
    return written


def cmd_metrics(cfg: ExperimentConfig) -> list[Path]:
    """Detection and error curves from previously written run files."""
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    det_runs = []
    mse_runs = []
    t_grid = None
    mse_t = None
    for r in range(cfg.runs):
        prefix = _run_prefix(r)
        tvals, est = io.read_estimates_csv(cfg.output_dir / f"{prefix}_estimates.csv")
        if t_grid is None:
            t_grid = tvals
        elif not np.array_equal(t_grid, tvals):
            raise DataError("runs have mismatched estimate time axes")
        T_full = int(tvals[-1]) + 1
        coeffs, active = io.read_topology_jsonl(
            cfg.output_dir / f"{prefix}_topology.jsonl", T_full)
        det_runs.append((est, active[tvals]))
        pt, preds = io.read_predictions_csv(cfg.output_dir / f"{prefix}_predictions.csv")
        if mse_t is None:
            mse_t = pt
        elif not np.array_equal(mse_t, pt):
            raise DataError("runs have mismatched prediction time axes")
        values = _load_run_values(cfg, r)
        if cfg.standardize:
            values, _, _ = _standardize(values)
        if values.shape[1] <= int(pt[-1]):
            raise DataError("predictions extend past the data series")
        mse_runs.append((values[:, pt], preds))
    pmd, pfa = pmd_pfa(det_runs, cfg.detection)
    if cfg.runs > 1:
        mse = mse_curve(runs=mse_runs)
    else:
        y, yhat = mse_runs[0]
        mse = mse_curve(y, yhat, window=cfg.mse_window)
    pmd_path = cfg.output_dir / "pmd.csv"
    pfa_path = cfg.output_dir / "pfa.csv"
    mse_path = cfg.output_dir / "mse.csv"
    io.write_metric_csv(pmd_path, t_grid, pmd)
    io.write_metric_csv(pfa_path, t_grid, pfa)
    io.write_metric_csv(mse_path, mse_t, mse)
    report = {
        "experiment": cfg.resolved,
        "run_seeds": cfg.run_seeds(),
        "curves": {
            "t_detection": t_grid.tolist(),
            "pmd": io.jsonable(pmd.tolist()),
            "pfa": io.jsonable(pfa.tolist()),
            "t_mse": mse_t.tolist(),
            "mse": io.jsonable(mse.tolist()),
        },
    }
    report_path = cfg.output_dir / "report.json"
    with open(report_path, "w") as fh:
        json.dump(report, fh)
    manifest = _write_manifest(cfg, "metrics")
    return [pmd_path, pfa_path, mse_path, report_path, manifest]


def cmd_bench(cfg: ExperimentConfig, T: int | None = None,
              reference: bool = False) -> list[Path]:
    """Per-iteration wall-clock timing of the streaming loop.

    With reference=True the loop runs the growing-dictionary kernel
    estimator instead, whose cost increases with every stored sample.
    """
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    if cfg.generator is not None:
        gen = cfg.generator_for_run(0)
        if T is not None:
            if T <= gen.P:
                raise DataError(f"bench horizon T={T} must exceed P={gen.P}")
            gen = replace(gen, T=T)
        values = generate(gen).values
    else:
        values = io.read_data_csv(cfg.data_csv)
        if T is not None:
            if T <= cfg.estimator.P:
                raise DataError(f"bench horizon T={T} must exceed P={cfg.estimator.P}")
            if T > values.shape[1]:
                raise DataError(f"bench horizon T={T} exceeds the series length")
            values = values[:, :T]
    if cfg.standardize:
        values, _, _ = _standardize(values)
    if reference:
        runner = GrowingDictionaryEstimator(cfg.estimator.N, cfg.estimator.P,
                                            kernel_variance=cfg.estimator.kernel_variance)
    else:
        runner = OnlineEstimator(cfg.estimator_for_run(0))
    times = []
    t_idx = []
    for t in range(values.shape[1]):
        t0 = time.perf_counter_ns()
        out = runner.step(values[:, t])
        dt = time.perf_counter_ns() - t0
        if out is not None:
            times.append(dt * 1e-9)
            t_idx.append(t)
    name = "bench_reference.csv" if reference else "bench.csv"
    path = cfg.output_dir / name
    with open(path, "w") as fh:
        fh.write("t,seconds\n")
        for t, s in zip(t_idx, times):
            fh.write(f"{t},{s!r}\n")
    manifest = _write_manifest(cfg, "bench_reference" if reference else "bench",
                               {"T": T, "reference": reference})
    return [path, manifest]


def replay(manifest_path) -> list[Path]:
    """Re-execute a recorded command from its manifest."""
    manifest_path = Path(manifest_path)
    if not manifest_path.exists():
        raise ConfigError(f"manifest not found: {manifest_path}")
    with open(manifest_path) as fh:
        obj = json.load(fh)
    for key in ("command", "experiment"):
        if key not in obj:
            raise ConfigError(f"manifest missing {key!r}")
    cfg = parse_experiment(obj["experiment"], config_dir=manifest_path.parent)
    options = obj.get("options", {})
    command = obj["command"]
    if command == "generate":
        return cmd_generate(cfg)
    if command == "estimate":
        return cmd_estimate(cfg, limit=options.get("limit"),
                            from_checkpoint=options.get("from_checkpoint"))
    if command == "metrics":
        return cmd_metrics(cfg)
    if command in ("bench", "bench_reference"):
        return cmd_bench(cfg, T=options.get("T"), reference=bool(options.get("reference")))
    raise ConfigError(f"manifest has unknown command {command!r}")
