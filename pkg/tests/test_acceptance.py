"""Acceptance criteria 1-11, each at its stated tolerance.

Every test records one PASS/FAIL line, shown in the terminal summary
(section "acceptance criteria"). Data-driven criteria read the benchmark
files from $QKF_DATA_DIR (default ./data). A missing file makes the
criterion fail with the reason, not skip.
"""

import math
import time

import numpy as np
import pytest

import oracles
from conftest import ACCEPTANCE
from qfeatures import experiments, features, haar, kernels, learners
from qfeatures.errors import IngestionError
from qfeatures.experiments import ExperimentConfig, GridPoint
from qfeatures.features import FeatureMapConfig
from qfeatures.kernels import KernelEvaluator, KernelProfile
from qfeatures.sim import QubitSubset


def record(k, ok, detail):
    ACCEPTANCE[k] = (bool(ok), detail)
    print(f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, detail


def _ptrace(rho, keep, n):
    t = rho.reshape((2,) * (2 * n))
    rest = [q for q in range(1, n + 1) if q not in keep]
    for k, q in enumerate(sorted(rest, reverse=True)):
        t = np.trace(t, axis1=q - 1, axis2=q - 1 + n - k)
    return t.reshape(2 ** len(keep), 2 ** len(keep))


def _random_subset(n, rng):
    m = int(rng.integers(1, n + 1))
    return tuple(sorted(int(q) for q in rng.choice(np.arange(1, n + 1), size=m, replace=False)))


def _run(stem, **kw):
    cfg = ExperimentConfig.from_file(experiments.default_config_dir() / f"{stem}.ini")
    return experiments.run_experiment(cfg, **kw).summary()


def test_criterion_01_dqf_identity():
    t0 = time.perf_counter()
    rng = np.random.default_rng(101)
    worst = 0.0
    for i in range(500):
        n = 2 + i % 5
        keep = _random_subset(n, rng)
        x, x2 = rng.uniform(0, np.pi, (2, n))
        psi, psi2 = oracles.state(x), oracles.state(x2)
        r = _ptrace(np.outer(psi, psi.conj()), keep, n)
        r2 = _ptrace(np.outer(psi2, psi2.conj()), keep, n)
        cfg = FeatureMapConfig(((QubitSubset(keep), 1.0),))
        worst = max(worst, abs(features.dqf(x, cfg) @ features.dqf(x2, cfg) - np.trace(r @ r2).real))
    dt = time.perf_counter() - t0
    record(1, worst < 1e-10 and dt < 30, f"max |z.z' - Tr(rho rho')| = {worst:.2e} over 500 pairs, {dt:.1f}s")


def test_criterion_02_rqf_normalization():
    t0 = time.perf_counter()
    rng = np.random.default_rng(202)
    worst = 0.0
    for i in range(100):
        n = int(rng.integers(2, 7))
        K = int(rng.integers(1, 4))
        blocks = tuple((QubitSubset(_random_subset(n, rng)[:3]), float(rng.uniform(0.1, 3))) for _ in range(K))
        kind = "laplace" if i % 2 else "gaussian-sq"
        cfg = FeatureMapConfig(blocks, KernelProfile(kind, float(rng.uniform(0.01, 3)), block_sum=True))
        om = features.sample_block_omegas(cfg, 2 * int(rng.integers(K, 200)), seed=i)
        z = features.rqf(rng.uniform(0, np.pi, n), cfg, om)
        worst = max(worst, abs(z @ z - cfg.alphas.sum()))
    dt = time.perf_counter() - t0
    record(2, worst < 1e-12 and dt < 5, f"max |z.z - sum alpha| = {worst:.2e} over 100 configs, {dt:.2f}s")


def test_criterion_03_frequency_laws():
    t0 = time.perf_counter()
    rng = np.random.default_rng(303)
    N = 4
    # realistic differences: Pauli vectors of encoded 2-qubit marginals
    cfg = FeatureMapConfig.single(1, 2)
    cs = features.pauli_vectors(rng.uniform(0, np.pi, (40, 3)), cfg)[0]
    deltas = cs[:20] - cs[20:]
    gamma = 1.0
    errs = {}
    for kind in ("gaussian-sq", "laplace"):
        om = features.sample_omegas(KernelProfile(kind, gamma), N * N, 1_000_000, np.random.default_rng(kind == "laplace"))
        mc = np.cos(om.vectors @ deltas.T).mean(axis=0)
        r = np.linalg.norm(deltas, axis=1)
        if kind == "gaussian-sq":
            target = np.exp(-gamma * N * r**2 / 4)
        else:
            target = np.exp(-gamma * math.sqrt(N) * r)
        errs[kind] = float(np.abs(mc - target).max())
    dt = time.perf_counter() - t0
    ok = max(errs.values()) < 0.005 and dt < 120
    record(3, ok, f"max MC error gaussian {errs['gaussian-sq']:.4f}, cauchy {errs['laplace']:.4f} (tol 0.005), {dt:.1f}s")


def test_criterion_04_shot_bound_coverage():
    t0 = time.perf_counter()
    row = experiments.verify_bounds("dqf-shots", [GridPoint(0.3, 0.1, 50, 4)], repetitions=200, seed=0)[0]
    dt = time.perf_counter() - t0
    ok = not row["flagged"] and dt < 300
    record(4, ok, f"n_s={row['budget']}: {row['failures']}/200 failures, binomial p={row['p_value']:.3g}, {dt:.1f}s")


def test_criterion_05_rqf_rate():
    t0 = time.perf_counter()
    cfg = FeatureMapConfig.single(1, 2, profile=KernelProfile("gaussian-sq", 1.0))
    X = np.random.default_rng(505).uniform(0, np.pi, (50, 4))
    c = features.pauli_vectors(X, cfg)
    G = kernels.kernel_matrix(c, c, cfg.subsets, cfg.profile)
    sup = {100: [], 400: []}
    for seed in range(20):
        for D in sup:
            Z = features.rqf_from_pauli(c, cfg, features.sample_block_omegas(cfg, D, seed))
            sup[D].append(np.abs(Z @ Z.T - G).max())
    ratio = np.mean(sup[400]) / np.mean(sup[100])
    dt = time.perf_counter() - t0
    record(5, 0.35 <= ratio <= 0.7 and dt < 120, f"mean sup-error D=400 / D=100 = {ratio:.3f} (band [0.35, 0.7]), {dt:.1f}s")


def test_criterion_06_nystrom_exactness():
    t0 = time.perf_counter()
    cfg = FeatureMapConfig.single(1, 2, 3, profile=KernelProfile("laplace", 0.5))
    X = np.random.default_rng(606).uniform(0, np.pi, (60, 5))
    ev = KernelEvaluator(cfg)
    ny, rec = kernels.nystrom_features(X, ev, 60, 0)
    Z = ny(X)
    err = np.abs(Z @ Z.T - kernels.gram_matrix(X, ev)).max()
    dt = time.perf_counter() - t0
    record(6, err < 1e-8 and rec.n_dropped == 0 and dt < 10, f"max Gram error {err:.2e} with 60 landmarks, {dt:.2f}s")


def test_criterion_07_primal_dual_ridge():
    t0 = time.perf_counter()
    rng = np.random.default_rng(707)
    worst = 0.0
    for _ in range(20):
        M, D = int(rng.integers(20, 200)), int(rng.integers(2, 64))
        Z, Zt, y = rng.normal(size=(M, D)), rng.normal(size=(30, D)), rng.normal(size=M)
        lam = float(10 ** rng.uniform(-3, 1))
        dual = learners.kernel_ridge_fit(Z @ Z.T, y, lam).predict(Zt @ Z.T)
        primal = learners.ridge_fit(Z, y, lam).predict(Zt)
        worst = max(worst, np.abs(dual - primal).max())
    dt = time.perf_counter() - t0
    record(7, worst < 1e-8 and dt < 10, f"max prediction gap {worst:.2e} over 20 problems, {dt:.2f}s")


def _band_check(parts):
    ok = all(p[0] for p in parts)
    return ok, "; ".join(p[1] for p in parts)


def _wine_part(stem, dq_band, mse_band):
    try:
        t0 = time.perf_counter()
        s = _run(stem)
    except IngestionError as exc:
        return False, f"wine-quality: {exc}"
    dt = time.perf_counter() - t0
    ok = dq_band[0] <= s["d_q"] <= dq_band[1] and mse_band[0] <= s["mse"] <= mse_band[1] and dt <= 600
    return ok, f"wine d_Q={s['d_q']:.4f} {list(dq_band)}, MSE={s['mse']:.3f} {list(mse_band)}, {dt:.0f}s"


def _magic_part(stem, dq_band, acc_min, limit):
    try:
        t0 = time.perf_counter()
        s = _run(stem)
    except IngestionError as exc:
        return False, f"magic04: {exc}"
    dt = time.perf_counter() - t0
    ok = s["accuracy"] >= acc_min and dt <= limit
    text = f"magic04 acc={s['accuracy']:.4f} (>= {acc_min})"
    if dq_band:
        ok = ok and dq_band[0] <= s["d_q"] <= dq_band[1]
        text = f"magic04 d_Q={s['d_q']:.4f} {list(dq_band)}, " + text
    return ok, f"{text}, {dt:.0f}s"


@pytest.mark.slow
def test_criterion_08_table2_bands():
    parts = [
        _wine_part("table2_wine_dqf16", (0.002, 0.02), (0.45, 0.70)),
        _magic_part("table2_magic04_dqf64", (0.005, 0.03), 0.78, 3600),
    ]
    record(8, *_band_check(parts))


@pytest.mark.slow
def test_criterion_09_table3_bands():
    parts = [
        _wine_part("table3_wine_rqf100", (0.01, 0.04), (0.42, 0.65)),
        _magic_part("table3_magic04_rqf200", None, 0.82, 3600),
    ]
    record(9, *_band_check(parts))


def test_criterion_10_haar_moments():
    t0 = time.perf_counter()
    n, R = 4, 10_000
    spec = haar.ReducedObservableSpec(n, QubitSubset.of(1), (1, 6))
    rows = haar.haar_moment_report(spec, R, 1010)
    budget = 10 / 2**n
    diag = [r for r in rows if r.j == r.l and r.a == r.b and r.a == 1]
    off = [r for r in rows if not (r.j == r.l and r.a == r.b)]
    pred = 2 ** (2 * n - 1) / (2 ** (2 * n) - 1)
    diag_ok = all(abs(r.moment1_est - pred) <= 3 * r.moment1_se for r in diag)
    off_ok = all(r.moment1_est <= 3 * r.moment1_se + budget and r.moment2_est <= 3 * r.moment2_se + budget for r in off)
    trend = []
    for k in (3, 4, 5, 6):
        sp = haar.ReducedObservableSpec(k, QubitSubset.of(1), (1, 6))
        rs = haar.haar_moment_report(sp, R, 2020 + k)
        trend.append(float(np.mean([r.moment2_est for r in rs if r.j != r.l])))
    trend_ok = all(a > b for a, b in zip(trend, trend[1:]))
    dt = time.perf_counter() - t0
    detail = (
        f"diag(a=1) {[round(r.moment1_est, 4) for r in diag]} vs {pred:.5f} (3 SE), "
        f"off-diag within 3 sigma + {budget:.3f}: {off_ok}, off-diag E|O|^2 n=3..6 {[round(t, 4) for t in trend]}, {dt:.0f}s"
    )
    record(10, diag_ok and off_ok and trend_ok and dt < 600, detail)


@pytest.mark.slow
def test_criterion_11_determinism(tmp_path):
    t0 = time.perf_counter()
    a_path, a_rows = experiments.reproduce_table(2, 7, tmp_path / "a", threads=3)
    b_path, _ = experiments.reproduce_table(2, 7, tmp_path / "b", threads=3)
    identical = a_path.read_bytes() == b_path.read_bytes()
    missing = sorted({r["experiment"] for r in a_rows if str(r.get("status", "")).startswith("missing-data")})
    dt = time.perf_counter() - t0
    detail = f"byte-identical: {identical}, {dt:.0f}s"
    if missing:
        detail += f"; rows not computed (missing data): {', '.join(missing)}"
    record(11, identical and not missing, detail)


@pytest.mark.slow
def test_determinism_on_available_data(tmp_path):
    # criterion 11 restricted to the datasets that are present
    a, rows = experiments.reproduce_table(2, 7, tmp_path / "a", threads=2, only=["magic04"])
    b, _ = experiments.reproduce_table(2, 7, tmp_path / "b", threads=1, only=["magic04"])
    if any(str(r.get("status", "")).startswith("missing-data") for r in rows):
        pytest.skip("magic04 file not present")
    assert a.read_bytes() == b.read_bytes()
