"""File formats: data/prediction/metric CSVs, topology JSONL, checkpoints.

All numeric text is written with Python's shortest round-trip float
representation, so re-running a recorded experiment reproduces files
byte for byte.  No timestamps are embedded anywhere.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .exceptions import DataError
from .estimator import CoefficientState, EstimatorConfig, OnlineEstimator
from .generator import TimeSeries


def _fmt(x) -> str:
    return repr(float(x))


def jsonable(obj):
    """Recursively convert numpy scalars/arrays for json.dump; NaN becomes None."""
    if isinstance(obj, dict):
        return {k: jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return None if math.isnan(f) else f
    return obj


def write_data_csv(path, values: np.ndarray):
    """Series as `t,node_1,...,node_N`, one row per time index."""
    values = np.asarray(values)
    N, T = values.shape
    with open(path, "w") as fh:
        fh.write("t," + ",".join(f"node_{n + 1}" for n in range(N)) + "\n")
        for t in range(T):
            fh.write(str(t) + "," + ",".join(_fmt(v) for v in values[:, t]) + "\n")


def read_data_csv(path) -> np.ndarray:
    """Read a data CSV back into an (N, T) array."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"data file not found: {path}")
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        if not header or header[0] != "t" or len(header) < 2:
            raise DataError(f"{path}: expected header 't,node_1,...', got {header!r}")
        rows = []
        for line in fh:
            parts = line.strip().split(",")
            if len(parts) != len(header):
                raise DataError(f"{path}: row width {len(parts)} != header width {len(header)}")
            rows.append([float(v) for v in parts])
    if not rows:
        raise DataError(f"{path}: no data rows")
    arr = np.array(rows)
    t = arr[:, 0].astype(int)
    if not np.array_equal(t, np.arange(len(t))):
        raise DataError(f"{path}: time column must be 0..T-1")
    return arr[:, 1:].T.copy()


def write_topology_jsonl(path, ts: TimeSeries):
    """Ground-truth trace as JSON lines (t, coefficient array, active mask).

    A line is emitted at the first modeled sample and whenever the
    topology differs from the previously written one; readers
    forward-fill between lines.
    """
    P = ts.config.P
    with open(path, "w") as fh:
        prev = None
        for t in range(P, ts.values.shape[1]):
            snap = (ts.coeffs[t], ts.active[t])
            if prev is not None and np.array_equal(prev[0], snap[0]) and np.array_equal(prev[1], snap[1]):
                continue
            fh.write(json.dumps({"t": t, "coeffs": snap[0].tolist(),
                                 "active": snap[1].tolist()}) + "\n")
            prev = snap


def read_topology_jsonl(path, T: int):
    """Forward-fill a topology JSONL into (T, N, N, P) coeff and active arrays.

    Rows before the first recorded t repeat the first record.
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"topology file not found: {path}")
    records = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line:
                obj = json.loads(line)
                records.append((int(obj["t"]), np.array(obj["coeffs"], dtype=float),
                                np.array(obj["active"], dtype=bool)))
    if not records:
        raise DataError(f"{path}: no topology records")
    records.sort(key=lambda r: r[0])
    shape = records[0][1].shape
    coeffs = np.zeros((T,) + shape)
    active = np.zeros((T,) + shape, dtype=bool)
    coeffs[: records[0][0] + 1] = records[0][1]
    active[: records[0][0] + 1] = records[0][2]
    for (t0, c, a), nxt in zip(records, records[1:] + [(T, None, None)]):
        if t0 >= T:
            break
        coeffs[t0 : min(nxt[0], T)] = c
        active[t0 : min(nxt[0], T)] = a
    return coeffs, active


def estimate_column_names(N: int, P: int):
    """Flattened pseudo-adjacency header, lexicographic in (n, n', p), 1-based."""
    return [f"b_{n + 1}_{m + 1}_{p + 1}" for n in range(N) for m in range(N) for p in range(P)]


def write_estimates_csv(path, group_norms: np.ndarray, t_start: int, emit_every: int = 1):
    """Pseudo-adjacency trace, one row per (thinned) time index from t_start on."""
    T, N, _, P = group_norms.shape
    cols = estimate_column_names(N, P)
    with open(path, "w") as fh:
        fh.write("t," + ",".join(cols) + "\n")
        for t in range(t_start, T, emit_every):
            fh.write(str(t) + "," + ",".join(_fmt(v) for v in group_norms[t].ravel()) + "\n")


def read_estimates_csv(path):
    """Read an estimates CSV into (t_values, (rows, N, N, P) array)."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"estimates file not found: {path}")
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        if header[0] != "t" or len(header) < 2:
            raise DataError(f"{path}: malformed estimates header")
        # infer (N, P) from the trailing column name b_N_N_P
        last = header[-1].split("_")
        if len(last) != 4 or last[0] != "b":
            raise DataError(f"{path}: malformed estimates header column {header[-1]!r}")
        N, P = int(last[1]), int(last[3])
        if header[1:] != estimate_column_names(N, P):
            raise DataError(f"{path}: estimate columns are not in lexicographic (n, n', p) order")
        rows, tvals = [], []
        for line in fh:
            parts = line.strip().split(",")
            if len(parts) != len(header):
                raise DataError(f"{path}: row width mismatch")
            tvals.append(int(parts[0]))
            rows.append([float(v) for v in parts[1:]])
    if not rows:
        raise DataError(f"{path}: no estimate rows")
    return np.array(tvals), np.array(rows).reshape(len(rows), N, N, P)


def write_predictions_csv(path, predictions: np.ndarray, t_start: int):
    N, T = predictions.shape
    with open(path, "w") as fh:
        fh.write("t," + ",".join(f"node_{n + 1}" for n in range(N)) + "\n")
        for t in range(t_start, T):
            fh.write(str(t) + "," + ",".join(_fmt(v) for v in predictions[:, t]) + "\n")


def read_predictions_csv(path):
    """Read predictions back into (t_values, (N, rows) array)."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"predictions file not found: {path}")
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        if header[0] != "t":
            raise DataError(f"{path}: malformed predictions header")
        rows, tvals = [], []
        for line in fh:
            parts = line.strip().split(",")
            tvals.append(int(parts[0]))
            rows.append([float(v) for v in parts[1:]])
    return np.array(tvals), np.array(rows).T


def write_metric_csv(path, t_values, values):
    """Metric curve as `t,value`; undefined entries are written as nan."""
    with open(path, "w") as fh:
        fh.write("t,value\n")
        for t, v in zip(t_values, values):
            fh.write(f"{int(t)},{'nan' if not np.isfinite(v) else _fmt(v)}\n")


def write_checkpoint(path, estimator: OnlineEstimator, extra: dict | None = None):
    """JSON snapshot sufficient to resume the run bit-exactly."""
    cfg = estimator.cfg
    obj = {
        "config": config_dict(cfg),
        "t": int(estimator.state.t),
        "alpha": estimator.state.alpha.tolist(),
        "history": None if estimator.history is None else estimator.history.tolist(),
        "warmed_up": bool(estimator.warmed_up),
    }
    if extra:
        obj["extra"] = jsonable(extra)
    with open(path, "w") as fh:
        json.dump(obj, fh)


def read_checkpoint(path) -> OnlineEstimator:
    path = Path(path)
    if not path.exists():
        raise DataError(f"checkpoint not found: {path}")
    with open(path) as fh:
        obj = json.load(fh)
    cfg = config_from_dict(obj["config"])
    state = CoefficientState(alpha=np.array(obj["alpha"], dtype=float), t=obj["t"])
    history = None if obj["history"] is None else np.array(obj["history"], dtype=float)
    return OnlineEstimator(cfg, state=state, history=history)


def checkpoint_extra(path) -> dict:
    with open(path) as fh:
        return json.load(fh).get("extra", {})


def config_dict(cfg: EstimatorConfig) -> dict:
    return {
        "N": cfg.N, "P": cfg.P, "D": cfg.D, "lambda": cfg.lam, "gamma": cfg.gamma,
        "kernel_variance": cfg.kernel_variance, "rff_seed": cfg.rff_seed,
        "schedule": cfg.schedule, "per_slot_maps": cfg.per_slot_maps,
    }


def config_from_dict(d: dict) -> EstimatorConfig:
    return EstimatorConfig(
        N=d["N"], P=d["P"], D=d["D"], lam=d["lambda"], gamma=d["gamma"],
        kernel_variance=d["kernel_variance"], rff_seed=d["rff_seed"],
        schedule=d.get("schedule", "constant"), per_slot_maps=d.get("per_slot_maps", False),
    )
