"""Config-driven experiment runner, bound verification and the regime advisory.

Every random draw is taken from ``stream(master_seed, trial, stage, ...)``, so
results do not depend on the order in which trials or samples are processed.
"""

from __future__ import annotations

import configparser
import hashlib
import io as _io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy import stats

from . import __version__, datasets, features, kernels, learners, sim
from .errors import ConfigError, IngestionError, InvalidInputError
from .features import FeatureMapConfig
from .io import write_rows
from .kernels import KernelEvaluator, KernelProfile
from .rng import stream
from .sim import QubitSubset

METHODS = ("dqf", "rqf", "nystrom")
TASKS = ("regression", "classification")


# ---------------------------------------------------------------------------
# config


@dataclass(frozen=True)
class DatasetBlock:
    name: str
    path: str = ""
    n_train: int = 0
    n_test: int = 0
    seed: int = 0


@dataclass(frozen=True)
class KernelBlock:
    kind: str = "inner-product"
    gamma: float = 1.0
    subsets: tuple[QubitSubset, ...] = ()
    alphas: tuple[float, ...] = ()
    block_sum: bool = False


@dataclass(frozen=True)
class FeaturesBlock:
    method: str = "dqf"
    D: int = 0
    n_s: int = 500
    mode: str = "sampled"
    seed: int = 0


@dataclass(frozen=True)
class LearnerBlock:
    task: str = "regression"
    lam: float = 1e-3
    C: float = 1.0
    lambda_convention: str = "standard"


@dataclass(frozen=True)
class MetricsBlock:
    dq_subset: int = 1000
    repetitions: int = 3


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    dataset: DatasetBlock
    n_qubits: int
    kernel: KernelBlock
    features: FeaturesBlock
    learner: LearnerBlock
    metrics: MetricsBlock = field(default_factory=MetricsBlock)

    def __post_init__(self):
        k, f, l, m = self.kernel, self.features, self.learner, self.metrics
        if not k.subsets:
            raise ConfigError("kernel.subsets must name at least one block")
        for q in k.subsets:
            if q.indices[-1] > self.n_qubits:
                raise ConfigError(f"subset {q} exceeds encoder width {self.n_qubits}")
        if k.alphas and len(k.alphas) != len(k.subsets):
            raise ConfigError("kernel.alphas must match the number of subsets")
        if f.method not in METHODS:
            raise ConfigError(f"features.method must be one of {METHODS}")
        if f.method == "dqf" and k.kind != "inner-product":
            raise ConfigError("dqf features realize the inner-product kernel only")
        if f.method == "rqf":
            if k.kind == "inner-product":
                raise ConfigError("rqf features need a distance kernel (gaussian-sq or laplace)")
            if k.kind == "gaussian-sq" and len(k.subsets) > 1 and not k.block_sum:
                raise ConfigError("multi-block rqf approximates the block-sum kernel; set block_sum = true")
            if f.D < 2 or f.D % 2 or f.D // 2 < len(k.subsets):
                raise ConfigError("rqf needs an even D with at least one frequency per block")
        if f.method == "nystrom" and f.D < 1:
            raise ConfigError("nystrom needs D >= 1 landmarks")
        if f.mode not in features.MODES or f.n_s < 1:
            raise ConfigError("features.mode must be exact|sampled and n_s >= 1")
        if l.task not in TASKS:
            raise ConfigError(f"learner.task must be one of {TASKS}")
        if l.lambda_convention not in learners.LAMBDA_CONVENTIONS:
            raise ConfigError(f"learner.lambda_convention must be one of {learners.LAMBDA_CONVENTIONS}")
        if m.repetitions < 1 or m.dq_subset < 1:
            raise ConfigError("metrics.repetitions and metrics.dq_subset must be >= 1")
        try:
            self.feature_map()
        except InvalidInputError as exc:
            raise ConfigError(str(exc)) from exc

    def feature_map(self) -> FeatureMapConfig:
        k, f = self.kernel, self.features
        alphas = k.alphas or tuple(1.0 for _ in k.subsets)
        return FeatureMapConfig(
            tuple(zip(k.subsets, alphas)), KernelProfile(k.kind, k.gamma, k.block_sum), f.mode, f.n_s
        )

    # --- INI round trip

    def to_ini(self) -> str:
        cp = configparser.ConfigParser()
        cp.optionxform = str
        cp["experiment"] = {"name": self.name}
        d = self.dataset
        cp["dataset"] = {"name": d.name, "path": d.path, "n_train": str(d.n_train), "n_test": str(d.n_test), "seed": str(d.seed)}
        cp["encoder"] = {"n_qubits": str(self.n_qubits)}
        k = self.kernel
        cp["kernel"] = {
            "kind": k.kind,
            "gamma": repr(k.gamma),
            "subsets": ";".join(",".join(map(str, q.indices)) for q in k.subsets),
            "alphas": ",".join(repr(a) for a in k.alphas),
            "block_sum": str(k.block_sum).lower(),
        }
        f = self.features
        cp["features"] = {"method": f.method, "D": str(f.D), "n_s": str(f.n_s), "mode": f.mode, "seed": str(f.seed)}
        l = self.learner
        cp["learner"] = {"task": l.task, "lambda": repr(l.lam), "C": repr(l.C), "lambda_convention": l.lambda_convention}
        cp["metrics"] = {"dq_subset": str(self.metrics.dq_subset), "repetitions": str(self.metrics.repetitions)}
        buf = _io.StringIO()
        cp.write(buf)
        return buf.getvalue()

    def config_hash(self) -> str:
        return hashlib.sha256(self.to_ini().encode()).hexdigest()[:16]

    @classmethod
    def from_ini(cls, text: str) -> "ExperimentConfig":
        cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
        cp.optionxform = str  # keep "D" and "C"
        try:
            cp.read_string(text)
            ds = cp["dataset"]
            dataset = DatasetBlock(
                ds.get("name"), ds.get("path", ""), ds.getint("n_train", 0), ds.getint("n_test", 0), ds.getint("seed", 0)
            )
            kn = cp["kernel"]
            subsets = tuple(
                QubitSubset(tuple(int(i) for i in blk.split(","))) for blk in kn.get("subsets", "").split(";") if blk.strip()
            )
            alphas = tuple(float(a) for a in kn.get("alphas", "").split(",") if a.strip())
            kernel = KernelBlock(kn.get("kind", "inner-product"), kn.getfloat("gamma", 1.0), subsets, alphas, kn.getboolean("block_sum", False))
            ft = cp["features"]
            feats = FeaturesBlock(ft.get("method", "dqf"), ft.getint("D", 0), ft.getint("n_s", 500), ft.get("mode", "sampled"), ft.getint("seed", 0))
            ln = cp["learner"]
            learner = LearnerBlock(
                ln.get("task", "regression"), ln.getfloat("lambda", 1e-3), ln.getfloat("C", 1.0), ln.get("lambda_convention", "standard")
            )
            mt = cp["metrics"] if cp.has_section("metrics") else {}
            metrics = MetricsBlock(int(mt.get("dq_subset", 1000)), int(mt.get("repetitions", 3)))
            name = cp.get("experiment", "name", fallback=dataset.name)
            n_qubits = cp.getint("encoder", "n_qubits")
        except (KeyError, ValueError, configparser.Error, InvalidInputError) as exc:
            raise ConfigError(f"bad experiment config: {exc}") from exc
        return cls(name, dataset, n_qubits, kernel, feats, learner, metrics)

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        return cls.from_ini(Path(path).read_text())


# ---------------------------------------------------------------------------
# running


RESULT_COLUMNS = (
    "experiment", "dataset", "method", "kernel", "n_features", "trial", "d_q", "mse", "mse_standardized",
    "accuracy", "status", "dq_subset", "lambda_convention", "master_seed", "config_hash", "split_fingerprint", "code_version",
)


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    master_seed: int
    rows: list[dict]
    split_fingerprint: str = ""
    metadata: dict = field(default_factory=dict)

    def summary(self) -> dict:
        return {r["trial"]: r for r in self.rows}["mean"]


@dataclass
class ExperimentContext:
    cfg: ExperimentConfig
    fmap: FeatureMapConfig
    split: datasets.DatasetSplit
    seed: int
    dq_idx: np.ndarray
    Q_exact: np.ndarray
    lam: float


def _features_for_trial(ctx: ExperimentContext, t: int):
    cfg, fmap, sp, seed = ctx.cfg, ctx.fmap, ctx.split, ctx.seed
    method = cfg.features.method
    if method == "dqf":
        Ztr = features.dqf_matrix(sp.X_train, fmap, seed, sp.train_ids, t)
        Zte = features.dqf_matrix(sp.X_test, fmap, seed, sp.test_ids, t)
        return Ztr, Zte
    if method == "rqf":
        omegas = features.sample_block_omegas(fmap, cfg.features.D, seed, t)
        Ztr = features.rqf_matrix(sp.X_train, fmap, omegas, seed, sp.train_ids, t)
        Zte = features.rqf_matrix(sp.X_test, fmap, omegas, seed, sp.test_ids, t)
        return Ztr, Zte
    n_s = fmap.n_s if fmap.sampled else None
    ev = KernelEvaluator(fmap, n_s=n_s, seed=seed, tags=(t, "shots"))
    reps_tr = ev.represent(sp.X_train, ids=sp.train_ids)
    reps_te = ev.represent(sp.X_test, ids=sp.test_ids) if len(sp.X_test) else None
    ny, _ = kernels.nystrom_features(sp.X_train, ev, cfg.features.D, stream(seed, t, "landmarks"), reps=reps_tr)
    Ztr = ny.from_reps(reps_tr)
    Zte = ny.from_reps(reps_te) if reps_te is not None else np.empty((0, ny.n_features))
    return Ztr, Zte


def _run_trial(ctx: ExperimentContext, t: int) -> dict:
    sp = ctx.split
    Ztr, Zte = _features_for_trial(ctx, t)
    sub = Ztr[ctx.dq_idx]
    dq = kernels.kernel_discrepancy(sub @ sub.T, ctx.Q_exact)
    row = {"trial": t, "n_features": Ztr.shape[1], "d_q": dq, "status": "ok"}
    model = fit_model(ctx, Ztr, t)
    m = learners.evaluate(model, Zte, sp.y_test)
    if m.empty:
        row["status"] = "ok; no test set, metrics omitted"
    elif m.mse is not None:
        row["mse"] = m.mse
        row["mse_standardized"] = m.mse / float(np.var(sp.y_train))
    else:
        row["accuracy"] = m.accuracy
    return row


def _mean_sem(values: Sequence[float]) -> tuple[float | None, float | None]:
    vals = [v for v in values if v is not None]
    if not vals:
        return None, None
    arr = np.array(vals, dtype=float)
    sem = float(arr.std(ddof=1) / math.sqrt(arr.size)) if arr.size > 1 else 0.0
    return float(arr.mean()), sem


def prepare(
    cfg: ExperimentConfig,
    master_seed: int | None = None,
    dq_subset: int | None = None,
    lambda_convention: str | None = None,
    split: datasets.DatasetSplit | None = None,
) -> ExperimentContext:
    """Load and split the data, fix the d_Q subset and its exact Gram."""
    seed = cfg.features.seed if master_seed is None else int(master_seed)
    if lambda_convention is not None:
        cfg = replace(cfg, learner=replace(cfg.learner, lambda_convention=lambda_convention))
    if dq_subset is not None:
        cfg = replace(cfg, metrics=replace(cfg.metrics, dq_subset=int(dq_subset)))
    fmap = cfg.feature_map()
    if split is None:
        ds = cfg.dataset
        raw = datasets.load(ds.name, ds.path or None)
        split = datasets.scale_and_split(raw, ds.n_train, ds.n_test, ds.seed)
    if split.d != cfg.n_qubits:
        raise ConfigError(f"encoder width {cfg.n_qubits} does not match dataset dimension {split.d}")
    M = len(split.y_train)
    k = min(cfg.metrics.dq_subset, M)
    dq_idx = np.sort(stream(seed, "dq-subset").choice(M, size=k, replace=False))
    exact = KernelEvaluator(replace(fmap, mode="exact"))
    Q_exact = kernels.gram_matrix(split.X_train[dq_idx], exact)
    lam = learners.effective_lambda(cfg.learner.lam, M, cfg.learner.lambda_convention)
    return ExperimentContext(cfg, fmap, split, seed, dq_idx, Q_exact, lam)


def trial_features(ctx: ExperimentContext, t: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Train and test feature matrices for one trial."""
    return _features_for_trial(ctx, t)


def fit_model(ctx: ExperimentContext, Ztr: np.ndarray, t: int = 0):
    if ctx.cfg.learner.task == "regression":
        return learners.ridge_fit(Ztr, ctx.split.y_train, ctx.lam)
    return learners.svm_fit(Ztr, ctx.split.y_train, ctx.cfg.learner.C, rng=stream(ctx.seed, t, "svm"))


def run_experiment(
    cfg: ExperimentConfig,
    master_seed: int | None = None,
    threads: int = 1,
    dq_subset: int | None = None,
    lambda_convention: str | None = None,
    split: datasets.DatasetSplit | None = None,
) -> ExperimentResult:
    """Run ``repetitions`` trials; returns per-trial rows plus ``mean`` and ``sem`` rows."""
    ctx = prepare(cfg, master_seed, dq_subset, lambda_convention, split)
    cfg, split, seed, k = ctx.cfg, ctx.split, ctx.seed, len(ctx.dq_idx)
    lam = ctx.lam

    trials = range(cfg.metrics.repetitions)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(lambda t: _run_trial(ctx, t), trials))
    else:
        rows = [_run_trial(ctx, t) for t in trials]
    rows.sort(key=lambda r: r["trial"])

    mean, sem = {"trial": "mean"}, {"trial": "sem"}
    for key in ("d_q", "mse", "mse_standardized", "accuracy"):
        mean[key], sem[key] = _mean_sem([r.get(key) for r in rows])
    for agg in (mean, sem):
        agg["n_features"] = rows[0]["n_features"]
        agg["status"] = rows[0]["status"]
    rows += [mean, sem]
    prov = {
        "experiment": cfg.name,
        "dataset": cfg.dataset.name,
        "method": cfg.features.method,
        "kernel": cfg.kernel.kind,
        "dq_subset": k,
        "lambda_convention": cfg.learner.lambda_convention,
        "master_seed": seed,
        "config_hash": cfg.config_hash(),
        "split_fingerprint": split.fingerprint(),
        "code_version": __version__,
    }
    rows = [{**prov, **r} for r in rows]
    return ExperimentResult(cfg, seed, rows, split.fingerprint(), {"lambda_effective": lam})


def missing_rows(cfg: ExperimentConfig, seed: int, reason: str) -> list[dict]:
    return [
        {
            "experiment": cfg.name, "dataset": cfg.dataset.name, "method": cfg.features.method, "kernel": cfg.kernel.kind,
            "trial": "mean", "status": f"missing-data: {reason}", "master_seed": seed, "config_hash": cfg.config_hash(),
            "lambda_convention": cfg.learner.lambda_convention, "code_version": __version__,
        }
    ]


def write_results(path, rows: Sequence[dict]) -> Path:
    return write_rows(path, RESULT_COLUMNS, rows, {"code_version": __version__})


# ---------------------------------------------------------------------------
# table reproduction


TABLE_CONFIGS = {
    2: (
        "table2_wine_dqf16", "table2_wine_nystrom16", "table2_wine_nystrom100",
        "table2_magic04_dqf64", "table2_magic04_nystrom64", "table2_magic04_nystrom100",
    ),
    3: (
        "table3_wine_rqf100", "table3_wine_rqf200", "table3_wine_nystrom100", "table3_wine_nystrom200",
        "table3_magic04_rqf100", "table3_magic04_rqf200", "table3_magic04_nystrom100", "table3_magic04_nystrom200",
    ),
}


def default_config_dir() -> Path:
    here = Path(__file__).resolve()
    for parent in here.parents:
        if (parent / "configs").is_dir():
            return parent / "configs"
    return Path("configs")


def reproduce_table(
    table: int,
    seed: int,
    out_dir,
    config_dir=None,
    threads: int = 1,
    dq_subset: int | None = None,
    lambda_convention: str | None = None,
    only: Sequence[str] | None = None,
) -> tuple[Path, list[dict]]:
    """Run every config of a table; missing datasets produce a marked row, not a crash."""
    if table not in TABLE_CONFIGS:
        raise ConfigError("table must be 2 or 3")
    config_dir = Path(config_dir) if config_dir else default_config_dir()
    all_rows: list[dict] = []
    for stem in TABLE_CONFIGS[table]:
        cfg = ExperimentConfig.from_file(config_dir / f"{stem}.ini")
        if only and cfg.dataset.name not in only:
            continue
        try:
            res = run_experiment(cfg, seed, threads, dq_subset, lambda_convention)
            all_rows += res.rows
        except IngestionError as exc:
            all_rows += missing_rows(cfg, seed, str(exc))
    path = write_results(Path(out_dir) / f"table{table}.csv", all_rows)
    return path, all_rows


# ---------------------------------------------------------------------------
# bound verification


BOUND_KINDS = ("dqf-shots", "rqf-shots", "rqf-dim")
BOUND_COLUMNS = (
    "kind", "epsilon", "delta", "M", "N_q", "L_f", "sigma_p", "budget", "budget_scale", "threshold",
    "allowed", "repetitions", "failures", "failure_fraction", "p_value", "flagged",
)


@dataclass(frozen=True)
class GridPoint:
    epsilon: float
    delta: float
    M: int
    N_q: int
    L_f: float = 1.0  # gamma of the gaussian-sq profile for rqf kinds


def _shots_dqf_formula(eps, delta, M, N_q) -> int:
    # the calculator restricts eps to (0, 1); the formula itself stays valid above that
    if eps < 1:
        return features.required_shots_dqf(eps, delta, M, N_q)
    return int(math.ceil(18 * N_q**2 / eps**2 * math.log(2 * M / delta)))


def _bound_data(pt: GridPoint, seed: int, index: int) -> tuple[FeatureMapConfig, np.ndarray]:
    m = int(round(math.log2(pt.N_q)))
    if 2**m != pt.N_q:
        raise InvalidInputError("N_q must be a power of two")
    n = m + 2
    X = stream(seed, "bounds-data", index).uniform(0, np.pi, size=(pt.M, n))
    q = QubitSubset(tuple(range(1, m + 1)))
    return FeatureMapConfig(((q, 1.0),), KernelProfile("gaussian-sq", pt.L_f)), X


def _noisy(c: np.ndarray, N: int, n_s: int, rng) -> np.ndarray:
    out = c.copy()
    out[:, 1:] = sim.sample_pauli_expectations(c[:, 1:] * N, n_s, rng) / N
    return out


def verify_bounds(kind: str, grid: Sequence[GridPoint], repetitions: int = 200, seed: int = 0, budget_scale: float = 1.0) -> list[dict]:
    """Failure fraction of each prescribed budget over seeded repetitions.

    dqf-shots: sup |z~^T z~' - Q| >= eps at n_s = required_shots_dqf.
    rqf-shots: sup |F(c~ - c~') - F(c - c')| >= eps/2 at n_s = required_shots_rqf (allowed delta/2).
    rqf-dim:   sup |z^T z' - F| >= eps/2 with exact c at D = required_dimension_rqf (allowed delta/2).
    A point is flagged when P(Binomial(R, allowed) >= failures) < 0.01.
    """
    if kind not in BOUND_KINDS:
        raise InvalidInputError(f"kind must be one of {BOUND_KINDS}")
    out = []
    for gi, pt in enumerate(grid):
        fmap, X = _bound_data(pt, seed, gi)
        N = pt.N_q
        c = sim.block_pauli_vectors(X, fmap.blocks)[0]
        sp = None
        if kind == "dqf-shots":
            budget = _shots_dqf_formula(pt.epsilon, pt.delta, pt.M, N)
            threshold, allowed = pt.epsilon, pt.delta
        elif kind == "rqf-shots":
            budget = features.required_shots_rqf(pt.epsilon, pt.delta, pt.M, N, pt.L_f)
            threshold, allowed = pt.epsilon / 2, pt.delta / 2
        else:
            sp = features.sigma_p(fmap.profile, N)
            budget = features.required_dimension_rqf(pt.epsilon, pt.delta, N, sp)
            threshold, allowed = pt.epsilon / 2, pt.delta / 2
        budget = max(1, int(math.ceil(budget * budget_scale)))
        if kind == "rqf-dim":
            budget += budget % 2
        Q = kernels.kernel_matrix([c], [c], fmap.subsets, fmap.profile)
        failures = 0
        for r in range(repetitions):
            rng = stream(seed, "bounds", kind, gi, r)
            if kind == "dqf-shots":
                Z = np.sqrt(N) * _noisy(c, N, budget, rng)
                err = np.abs(Z @ Z.T - N * (c @ c.T)).max()
            elif kind == "rqf-shots":
                ct = _noisy(c, N, budget, rng)
                err = np.abs(kernels.kernel_matrix([ct], [ct], fmap.subsets, fmap.profile) - Q).max()
            else:
                om = features.sample_omegas(fmap.profile, N * N, budget // 2, rng)
                Z = features.rqf_from_pauli([c], fmap, [om])
                err = np.abs(Z @ Z.T - Q).max()
            failures += bool(err >= threshold)
        p = float(stats.binom.sf(failures - 1, repetitions, allowed)) if failures else 1.0
        out.append(
            {
                "kind": kind, "epsilon": pt.epsilon, "delta": pt.delta, "M": pt.M, "N_q": N,
                "L_f": pt.L_f if kind != "dqf-shots" else None, "sigma_p": sp, "budget": budget,
                "budget_scale": budget_scale, "threshold": threshold, "allowed": allowed, "repetitions": repetitions,
                "failures": failures, "failure_fraction": failures / repetitions, "p_value": p, "flagged": p < 0.01,
            }
        )
    return out


# ---------------------------------------------------------------------------
# regime advisory


REGIMES = ("no-generalization", "exact-kernel", "features", "neither")


def regime_advice(M: float, N_q: float, M0: float) -> str:
    """Schematic regime map with all big-O crossover constants set to 1."""
    if min(M, N_q, M0) <= 0:
        raise InvalidInputError("M, N_q and M0 must be positive")
    if N_q >= M:
        return "no-generalization"
    if N_q >= math.sqrt(M):
        return "exact-kernel" if M <= M0 else "neither"
    if M * N_q**4 <= M0**3:
        return "features"
    return "neither"
