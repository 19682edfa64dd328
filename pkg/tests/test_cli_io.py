import json
import os

import numpy as np
import pytest

from rffgraph import (
    DataError,
    ConfigError,
    EstimatorConfig,
    GeneratorConfig,
    OnlineEstimator,
    generate,
)
from rffgraph import io
from rffgraph import experiment
from rffgraph.cli import main as cli_main


BASE = {
    "runs": 2,
    "base_seed": 3,
    "output_dir": "out",
    "generator": {"N": 3, "P": 2, "T": 120, "edge_probability": 0.3,
                  "switch_interval": 50, "noise_std": 0.1},
    "estimator": {"N": 3, "P": 2, "D": 8, "lambda": 0.1, "gamma": 100.0,
                  "kernel_variance": 0.1, "rff_seed": 5},
    "metrics": {"delta": 0.05, "mse_window": 20},
}


def _write_cfg(tmp_path, obj, name="exp.json"):
    path = tmp_path / name
    with open(path, "w") as fh:
        json.dump(obj, fh)
    return path


def _cfg_with(tmp_path, **updates):
    obj = json.loads(json.dumps(BASE))
    obj.update(updates)
    obj["output_dir"] = str(tmp_path / "out")
    return _write_cfg(tmp_path, obj)


# --- file round trips ---------------------------------------------------------

def test_data_csv_round_trip(tmp_path):
    values = np.random.default_rng(0).normal(size=(3, 40))
    path = tmp_path / "d.csv"
    io.write_data_csv(path, values)
    back = io.read_data_csv(path)
    assert np.array_equal(back, values)
    header = path.read_text().splitlines()[0]
    assert header == "t,node_1,node_2,node_3"


def test_data_csv_read_errors(tmp_path):
    with pytest.raises(DataError):
        io.read_data_csv(tmp_path / "missing.csv")
    bad = tmp_path / "bad.csv"
    bad.write_text("x,node_1\n0,1.0\n")
    with pytest.raises(DataError):
        io.read_data_csv(bad)
    ragged = tmp_path / "ragged.csv"
    ragged.write_text("t,node_1\n0,1.0,2.0\n")
    with pytest.raises(DataError):
        io.read_data_csv(ragged)


def test_topology_jsonl_round_trip(tmp_path):
    ts = generate(GeneratorConfig(N=3, P=2, T=90, edge_probability=0.4,
                                  switch_interval=30, noise_std=0.1, seed=9))
    path = tmp_path / "topo.jsonl"
    io.write_topology_jsonl(path, ts)
    coeffs, active = io.read_topology_jsonl(path, T=90)
    assert np.array_equal(coeffs[2:], ts.coeffs[2:])
    assert np.array_equal(active[2:], ts.active[2:])
    # change-only encoding: static stretches share one record
    n_lines = len(path.read_text().splitlines())
    assert n_lines == 1 + (90 - 2) // 30


def test_estimates_csv_round_trip(tmp_path):
    norms = np.abs(np.random.default_rng(1).normal(size=(30, 3, 3, 2)))
    path = tmp_path / "est.csv"
    io.write_estimates_csv(path, norms, t_start=2, emit_every=4)
    tvals, back = io.read_estimates_csv(path)
    assert np.array_equal(tvals, np.arange(2, 30, 4))
    assert np.array_equal(back, norms[tvals])
    header = path.read_text().splitlines()[0].split(",")
    assert header[1] == "b_1_1_1" and header[-1] == "b_3_3_2"


def test_predictions_csv_round_trip(tmp_path):
    preds = np.random.default_rng(2).normal(size=(2, 25))
    path = tmp_path / "p.csv"
    io.write_predictions_csv(path, preds, t_start=3)
    tvals, back = io.read_predictions_csv(path)
    assert np.array_equal(tvals, np.arange(3, 25))
    assert np.array_equal(back, preds[:, 3:])


def test_checkpoint_round_trip_and_bit_exact_resume(tmp_path):
    values = generate(GeneratorConfig(N=2, P=1, T=80, edge_probability=0.5,
                                      noise_std=0.2, seed=5)).values
    cfg = EstimatorConfig(N=2, P=1, D=4, lam=0.05, gamma=50.0, rff_seed=2)
    full = OnlineEstimator(cfg).run(values)

    est = OnlineEstimator(cfg)
    for t in range(40):
        est.step(values[:, t])
    ck = tmp_path / "ck.json"
    io.write_checkpoint(ck, est, extra={"next_t": 40})
    resumed = io.read_checkpoint(ck)
    assert np.array_equal(resumed.state.alpha, est.state.alpha)
    for t in range(40, 80):
        resumed.step(values[:, t])
    assert np.array_equal(resumed.state.alpha, full.state.alpha)


# --- config parsing -----------------------------------------------------------

def test_unknown_keys_rejected(tmp_path):
    for mutate in (
        lambda o: o.update(surprise=1),
        lambda o: o["generator"].update(surprise=1),
        lambda o: o["estimator"].update(surprise=1),
        lambda o: o["metrics"].update(surprise=1),
    ):
        obj = json.loads(json.dumps(BASE))
        mutate(obj)
        with pytest.raises(ConfigError, match="unknown key|surprise"):
            experiment.parse_experiment(obj)


def test_config_requires_estimator_and_source():
    with pytest.raises(ConfigError):
        experiment.parse_experiment({"estimator": BASE["estimator"]})
    obj = json.loads(json.dumps(BASE))
    del obj["estimator"]
    with pytest.raises(ConfigError):
        experiment.parse_experiment(obj)
    obj = json.loads(json.dumps(BASE))
    obj["data_csv"] = "x.csv"
    with pytest.raises(ConfigError, match="mutually exclusive"):
        experiment.parse_experiment(obj)


def test_config_rejects_explicit_generator_seed():
    obj = json.loads(json.dumps(BASE))
    obj["generator"]["seed"] = 4
    with pytest.raises(ConfigError, match="base_seed"):
        experiment.parse_experiment(obj)


def test_config_rejects_shape_mismatch():
    obj = json.loads(json.dumps(BASE))
    obj["estimator"]["N"] = 4
    with pytest.raises(ConfigError, match="does not match"):
        experiment.parse_experiment(obj)


def test_per_run_seed_derivation():
    cfg = experiment.parse_experiment(json.loads(json.dumps(BASE)))
    assert cfg.generator_for_run(0).seed == 3
    assert cfg.generator_for_run(4).seed == 7
    assert cfg.estimator_for_run(2).rff_seed == 7
    assert cfg.run_seeds()[1] == {"run": 1, "data_seed": 4, "rff_seed": 6}


# --- pipeline and CLI ----------------------------------------------------------

def test_full_pipeline_products(tmp_path):
    cfg_path = _cfg_with(tmp_path)
    assert cli_main(["generate", str(cfg_path)]) == 0
    assert cli_main(["estimate", str(cfg_path)]) == 0
    assert cli_main(["metrics", str(cfg_path)]) == 0
    out = tmp_path / "out"
    for name in ("run000_data.csv", "run000_topology.jsonl", "run001_data.csv",
                 "run000_estimates.csv", "run000_predictions.csv",
                 "run000_checkpoint.json", "pmd.csv", "pfa.csv", "mse.csv",
                 "report.json", "generate_manifest.json"):
        assert (out / name).exists(), name
    report = json.loads((out / "report.json").read_text())
    assert report["run_seeds"][0]["data_seed"] == 3
    assert len(report["curves"]["pmd"]) == len(report["curves"]["t_detection"])


def test_metrics_report_serializes_undefined_as_null(tmp_path):
    obj = json.loads(json.dumps(BASE))
    obj["runs"] = 1
    obj["generator"].update(edge_probability=0.0, switch_interval=0)
    obj["output_dir"] = str(tmp_path / "out")
    cfg_path = _write_cfg(tmp_path, obj)
    assert cli_main(["generate", str(cfg_path)]) == 0
    assert cli_main(["estimate", str(cfg_path)]) == 0
    assert cli_main(["metrics", str(cfg_path)]) == 0
    report = json.loads((tmp_path / "out" / "report.json").read_text())
    assert all(v is None for v in report["curves"]["pmd"])  # no true edges
    pmd_rows = (tmp_path / "out" / "pmd.csv").read_text().splitlines()[1:]
    assert all(row.endswith(",nan") for row in pmd_rows)


def test_emit_every_thins_estimates(tmp_path):
    cfg_path = _cfg_with(tmp_path, runs=1)
    assert cli_main(["estimate", str(cfg_path), "--emit-every", "10"]) == 0
    tvals, _ = io.read_estimates_csv(tmp_path / "out" / "run000_estimates.csv")
    assert np.array_equal(tvals, np.arange(2, 120, 10))


def test_standardize_flag(tmp_path):
    cfg_path = _cfg_with(tmp_path, runs=1)
    assert cli_main(["estimate", str(cfg_path), "--standardize"]) == 0
    manifest = json.loads((tmp_path / "out" / "estimate_manifest.json").read_text())
    assert manifest["experiment"]["standardize"] is True
    ck = json.loads((tmp_path / "out" / "run000_checkpoint.json").read_text())
    values = generate(GeneratorConfig(N=3, P=2, T=120, edge_probability=0.3,
                                      switch_interval=50, noise_std=0.1, seed=3)).values
    assert np.allclose(ck["extra"]["mean"], values.mean(axis=1))


def test_cli_exit_codes(tmp_path):
    # config error: invalid JSON
    bad = tmp_path / "bad.json"
    bad.write_text("{nope")
    assert cli_main(["generate", str(bad)]) == 2
    # config error: unknown key
    obj = json.loads(json.dumps(BASE))
    obj["unknown"] = 1
    assert cli_main(["generate", str(_write_cfg(tmp_path, obj, "u.json"))]) == 2
    # data error: metrics before estimate
    cfg_path = _cfg_with(tmp_path)
    assert cli_main(["metrics", str(cfg_path)]) == 3
    # data error: estimate against a missing csv
    obj = json.loads(json.dumps(BASE))
    del obj["generator"]
    obj["data_csv"] = str(tmp_path / "nope.csv")
    obj["output_dir"] = str(tmp_path / "out")
    assert cli_main(["estimate", str(_write_cfg(tmp_path, obj, "m.json"))]) == 3
    # numeric divergence: absurdly large step
    obj = json.loads(json.dumps(BASE))
    obj["runs"] = 1
    obj["estimator"]["gamma"] = 1e-9
    obj["estimator"]["lambda"] = 0.0
    obj["output_dir"] = str(tmp_path / "out")
    assert cli_main(["estimate", str(_write_cfg(tmp_path, obj, "d.json"))]) == 4


def test_limit_and_resume_via_cli(tmp_path):
    cfg_path = _cfg_with(tmp_path, runs=1)
    assert cli_main(["estimate", str(cfg_path)]) == 0
    full_est = (tmp_path / "out" / "run000_estimates.csv").read_bytes()

    out2 = tmp_path / "out2"
    env_cfg = _cfg_with(tmp_path, runs=1)
    os.environ[experiment.ENV_OUTPUT_DIR] = str(out2)
    try:
        assert cli_main(["estimate", str(env_cfg), "--limit", "60"]) == 0
        assert cli_main(["estimate", str(env_cfg), "--from-checkpoint",
                         str(out2 / "run000_checkpoint.json")]) == 0
    finally:
        del os.environ[experiment.ENV_OUTPUT_DIR]
    t_res, res = io.read_estimates_csv(out2 / "run000_estimates_resumed.csv")
    t_full, full = io.read_estimates_csv(tmp_path / "out" / "run000_estimates.csv")
    sel = np.isin(t_full, t_res)
    assert np.array_equal(full[sel], res)
    assert full_est == (tmp_path / "out" / "run000_estimates.csv").read_bytes()


def test_bench_outputs_and_errors(tmp_path):
    cfg_path = _cfg_with(tmp_path, runs=1)
    assert cli_main(["bench", str(cfg_path), "--T", "60"]) == 0
    rows = (tmp_path / "out" / "bench.csv").read_text().splitlines()
    assert rows[0] == "t,seconds"
    assert len(rows) - 1 == 58  # T minus warm-up
    assert cli_main(["bench", str(cfg_path), "--T", "60", "--reference"]) == 0
    assert (tmp_path / "out" / "bench_reference.csv").exists()
    # horizon shorter than warm-up is a data error
    assert cli_main(["bench", str(cfg_path), "--T", "2"]) == 3


def test_replay_is_byte_identical(tmp_path):
    cfg_path = _cfg_with(tmp_path)
    assert cli_main(["generate", str(cfg_path)]) == 0
    assert cli_main(["estimate", str(cfg_path)]) == 0
    assert cli_main(["metrics", str(cfg_path)]) == 0
    out = tmp_path / "out"
    originals = {p.name: p.read_bytes() for p in out.iterdir()}

    replay_dir = tmp_path / "replayed"
    os.environ[experiment.ENV_OUTPUT_DIR] = str(replay_dir)
    try:
        for manifest in ("generate_manifest.json", "estimate_manifest.json",
                         "metrics_manifest.json"):
            assert cli_main(["replay", str(out / manifest)]) == 0
    finally:
        del os.environ[experiment.ENV_OUTPUT_DIR]
    for name, blob in originals.items():
        if "manifest" in name:
            continue
        assert (replay_dir / name).read_bytes() == blob, name


def test_env_var_overrides_output_dir(tmp_path):
    cfg_path = _cfg_with(tmp_path, runs=1)
    target = tmp_path / "elsewhere"
    os.environ[experiment.ENV_OUTPUT_DIR] = str(target)
    try:
        assert cli_main(["generate", str(cfg_path)]) == 0
    finally:
        del os.environ[experiment.ENV_OUTPUT_DIR]
    assert (target / "run000_data.csv").exists()
    assert not (tmp_path / "out").exists()


# --- shipped presets ------------------------------------------------------------

PRESETS = os.path.join(os.path.dirname(__file__), "..", "configs")


def _load_preset(name):
    with open(os.path.join(PRESETS, name)) as fh:
        return json.load(fh)


def test_presets_validate():
    for name in ("switching.json", "drift.json", "standardized.json"):
        cfg = experiment.parse_experiment(_load_preset(name))
        assert cfg.runs >= 1


def test_switching_preset_runs_end_to_end(tmp_path):
    obj = _load_preset("switching.json")
    obj.update(runs=2, output_dir=str(tmp_path / "out"))
    obj["generator"]["T"] = 300
    cfg_path = _write_cfg(tmp_path, obj)
    for command in ("generate", "estimate", "metrics"):
        assert cli_main([command, str(cfg_path)]) == 0
    assert (tmp_path / "out" / "report.json").exists()


def test_drift_preset_runs_reduced(tmp_path):
    obj = _load_preset("drift.json")
    obj.update(runs=1, output_dir=str(tmp_path / "out"))
    obj["generator"]["T"] = 200
    cfg_path = _write_cfg(tmp_path, obj)
    assert cli_main(["generate", str(cfg_path)]) == 0
    assert cli_main(["estimate", str(cfg_path)]) == 0


def test_standardized_preset_accepts_all_feature_counts(tmp_path):
    for D in (10, 50, 100):
        obj = _load_preset("standardized.json")
        obj["estimator"]["D"] = D
        obj["generator"]["T"] = 150
        obj["output_dir"] = str(tmp_path / f"out{D}")
        cfg_path = _write_cfg(tmp_path, obj, f"std{D}.json")
        assert cli_main(["estimate", str(cfg_path)]) == 0
