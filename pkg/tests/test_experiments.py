import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qfeatures import datasets, experiments, features, kernels
from qfeatures.errors import ConfigError, IngestionError
from qfeatures.experiments import ExperimentConfig, GridPoint
from qfeatures.io import read_rows

INI = """
[experiment]
name = {name}

[dataset]
name = magic04
path = {path}
n_train = 60
n_test = {n_test}
seed = 0

[encoder]
n_qubits = 10

[kernel]
kind = {kind}
gamma = 0.1
subsets = {subsets}
alphas =
block_sum = false

[features]
method = {method}
D = {D}
n_s = 200
mode = sampled
seed = 0

[learner]
task = classification
lambda = 0.001
C = 1.0
lambda_convention = standard

[metrics]
dq_subset = 25
repetitions = 3
"""


@pytest.fixture
def magic_file(tmp_path):
    rng = np.random.default_rng(0)
    X = rng.normal(size=(100, 10))
    y = np.where(X[:, 8] + X[:, 9] > 0, "g", "h")
    p = tmp_path / "toy_magic.data"
    p.write_text("".join(",".join(f"{v:.5f}" for v in x) + f",{c}\n" for x, c in zip(X, y)))
    return p


def _cfg(path, method="dqf", kind="inner-product", subsets="9,10", D=16, n_test=40, name="toy"):
    return ExperimentConfig.from_ini(
        INI.format(path=path, method=method, kind=kind, subsets=subsets, D=D, n_test=n_test, name=name)
    )


# --- config


def test_config_round_trip(magic_file):
    cfg = _cfg(magic_file, "rqf", "laplace", "1,2;3,4", 20)
    back = ExperimentConfig.from_ini(cfg.to_ini())
    assert back == cfg
    assert back.config_hash() == cfg.config_hash()
    assert cfg.features.D == 20 and cfg.learner.C == 1.0


def test_shipped_configs_parse():
    stems = experiments.TABLE_CONFIGS[2] + experiments.TABLE_CONFIGS[3]
    for stem in stems:
        cfg = ExperimentConfig.from_file(experiments.default_config_dir() / f"{stem}.ini")
        assert cfg.name == stem
        assert cfg.metrics.repetitions == 3 and cfg.features.n_s == 500


@pytest.mark.parametrize(
    "kw,match",
    [
        (dict(method="rqf", kind="inner-product"), "distance kernel"),
        (dict(method="dqf", kind="laplace"), "inner-product"),
        (dict(subsets="10,11"), "exceeds"),
        (dict(method="rqf", kind="laplace", D=7), "even D"),
        (dict(method="nystrom", D=0), "landmarks"),
    ],
)
def test_infeasible_configs_rejected(magic_file, kw, match):
    with pytest.raises(ConfigError, match=match):
        _cfg(magic_file, **kw)


def test_garbled_config_is_config_error():
    with pytest.raises(ConfigError):
        ExperimentConfig.from_ini("[dataset]\nname = magic04\n")


# --- running


def test_run_experiment_rows(magic_file):
    res = experiments.run_experiment(_cfg(magic_file))
    trials = [r for r in res.rows if isinstance(r["trial"], int)]
    mean = res.summary()
    assert [r["trial"] for r in res.rows] == [0, 1, 2, "mean", "sem"]
    assert mean["n_features"] == 16
    assert mean["d_q"] == pytest.approx(np.mean([r["d_q"] for r in trials]))
    assert 0 <= mean["accuracy"] <= 1
    for r in res.rows:
        assert r["config_hash"] == res.config.config_hash()
        assert r["code_version"] and r["split_fingerprint"] == res.split_fingerprint


def test_dq_matches_direct_computation(magic_file):
    cfg = _cfg(magic_file)
    ctx = experiments.prepare(cfg)
    Ztr, _ = experiments.trial_features(ctx, 1)
    fmap = cfg.feature_map()
    exact = kernels.gram_matrix(ctx.split.X_train[ctx.dq_idx], kernels.KernelEvaluator(replace(fmap, mode="exact")))
    sub = Ztr[ctx.dq_idx]
    res = experiments.run_experiment(cfg)
    assert res.rows[1]["d_q"] == pytest.approx(np.mean(np.abs(sub @ sub.T - exact)), abs=1e-15)


@pytest.mark.parametrize("method,kind,D", [("dqf", "inner-product", 16), ("rqf", "laplace", 40), ("nystrom", "inner-product", 10)])
def test_results_independent_of_thread_count(magic_file, method, kind, D):
    cfg = _cfg(magic_file, method, kind, "9,10" if kind == "inner-product" else "7,8;9,10", D)
    a = experiments.run_experiment(cfg, threads=1).rows
    b = experiments.run_experiment(cfg, threads=3).rows
    assert a == b


def test_master_seed_changes_trials(magic_file):
    cfg = _cfg(magic_file)
    a = experiments.run_experiment(cfg, master_seed=1).rows
    b = experiments.run_experiment(cfg, master_seed=2).rows
    assert a[0]["d_q"] != b[0]["d_q"]


def test_trial_features_depend_only_on_trial_index(magic_file):
    ctx = experiments.prepare(_cfg(magic_file, "rqf", "laplace", "9,10", 20))
    first = experiments.trial_features(ctx, 2)
    experiments.trial_features(ctx, 0)
    again = experiments.trial_features(ctx, 2)
    assert all(np.array_equal(x, y) for x, y in zip(first, again))


def test_empty_test_set_marker(magic_file):
    res = experiments.run_experiment(_cfg(magic_file, n_test=0))
    assert res.summary()["accuracy"] is None
    assert "metrics omitted" in res.summary()["status"]


def test_lambda_convention_override(magic_file):
    txt = _cfg(magic_file).to_ini().replace("task = classification", "task = regression")
    cfg = ExperimentConfig.from_ini(txt)
    std = experiments.prepare(cfg)
    eq2 = experiments.prepare(cfg, lambda_convention="eq2")
    assert std.lam == 0.001
    assert eq2.lam == pytest.approx(2 * 0.001 * 60)


def test_missing_dataset_raises(tmp_path):
    cfg = _cfg(tmp_path / "absent.data")
    with pytest.raises(IngestionError):
        experiments.run_experiment(cfg)


def test_reproduce_table_marks_missing_data(tmp_path, monkeypatch):
    monkeypatch.setenv(datasets.DATA_ENV, str(tmp_path / "empty"))
    path, rows = experiments.reproduce_table(2, 0, tmp_path / "out")
    assert len(rows) == len(experiments.TABLE_CONFIGS[2])
    assert all(r["status"].startswith("missing-data") for r in rows)
    comments, back = read_rows(path)
    assert comments["code_version"]
    assert [r["experiment"] for r in back] == list(experiments.TABLE_CONFIGS[2])


def test_write_results_is_byte_stable(magic_file, tmp_path):
    res = experiments.run_experiment(_cfg(magic_file))
    a = experiments.write_results(tmp_path / "a.csv", res.rows).read_bytes()
    b = experiments.write_results(tmp_path / "b.csv", experiments.run_experiment(_cfg(magic_file)).rows).read_bytes()
    assert a == b


# --- bound verification


def test_bound_coverage_at_prescribed_budget():
    row = experiments.verify_bounds("dqf-shots", [GridPoint(0.3, 0.1, 20, 4)], repetitions=50, seed=0)[0]
    assert row["budget"] == features.required_shots_dqf(0.3, 0.1, 20, 4)
    assert not row["flagged"]


def test_bound_huge_epsilon_never_fails():
    row = experiments.verify_bounds("dqf-shots", [GridPoint(2.0, 0.1, 20, 2)], repetitions=50, seed=0)[0]
    assert row["failures"] == 0
    assert row["budget"] == math.ceil(18 * 4 / 4 * math.log(2 * 20 / 0.1))


def test_bound_halving_eventually_fails():
    pt = GridPoint(0.3, 0.1, 20, 4)
    scale = 1.0
    for _ in range(20):
        row = experiments.verify_bounds("dqf-shots", [pt], repetitions=50, seed=0, budget_scale=scale)[0]
        if row["flagged"]:
            break
        scale /= 2
    assert row["flagged"], "failure fraction never exceeded delta"


@pytest.mark.parametrize("kind", ["rqf-shots", "rqf-dim"])
def test_rqf_bounds_cover(kind):
    row = experiments.verify_bounds(kind, [GridPoint(0.5, 0.1, 10, 2, 1.0)], repetitions=30, seed=1)[0]
    assert row["allowed"] == 0.05 and row["threshold"] == 0.25
    assert not row["flagged"]


def test_bound_kind_validation():
    with pytest.raises(Exception):
        experiments.verify_bounds("other", [GridPoint(0.3, 0.1, 20, 4)])


# --- regime advisory


def test_regime_examples():
    assert experiments.regime_advice(100, 100, 1e4) == "no-generalization"
    assert experiments.regime_advice(1e4, 16, 1e4) == "features"
    assert experiments.regime_advice(100, 50, 1e4) == "exact-kernel"
    assert experiments.regime_advice(1e6, 2000, 1e4) == "neither"
    assert experiments.regime_advice(1e4, 90, 10) == "neither"


@given(st.floats(1, 1e8), st.floats(1, 1e8), st.floats(1, 1e8))
def test_regime_advice_is_total(M, N, M0):
    label = experiments.regime_advice(M, N, M0)
    assert label in experiments.REGIMES
    if N >= M:
        assert label == "no-generalization"
    if label == "features":
        assert N < math.sqrt(M) and M * N**4 <= M0**3
