"""Command-line entry point: ``qfeatures <subcommand> ...``.

Outputs are CSV files under ``--out`` with fixed headers (see README).
The dataset root is taken from $QKF_DATA_DIR (default ./data).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import experiments, haar, io, kernels, learners
from .errors import ConfigError, IngestionError, InvalidInputError
from .experiments import ExperimentConfig, GridPoint
from .sim import QubitSubset


def _common(p: argparse.ArgumentParser, config: bool = True) -> None:
    if config:
        p.add_argument("--config", required=True, type=Path, help="experiment INI file")
    p.add_argument("--seed", type=int, default=None, help="master seed (default: features.seed of the config)")
    p.add_argument("--out", type=Path, default=Path("results"), help="output directory")
    p.add_argument("--threads", type=int, default=1, help="worker threads for independent trials")
    p.add_argument("--dq-subset", type=int, default=None, help="d_Q subset size (default: config value)")
    p.add_argument("--lambda-convention", choices=("standard", "eq2"), default=None)


def _context(args):
    cfg = ExperimentConfig.from_file(args.config)
    return cfg, experiments.prepare(cfg, args.seed, args.dq_subset, args.lambda_convention)


def cmd_features(args) -> int:
    cfg, ctx = _context(args)
    Ztr, Zte = experiments.trial_features(ctx, args.trial)
    meta = {"experiment": cfg.name, "method": cfg.features.method, "master_seed": ctx.seed, "trial": args.trial,
            "config_hash": cfg.config_hash()}
    a = io.write_features_csv(args.out / f"{cfg.name}_features_train.csv", Ztr, ctx.split.train_ids, comments=meta)
    b = io.write_features_csv(args.out / f"{cfg.name}_features_test.csv", Zte, ctx.split.test_ids, comments=meta)
    print(f"wrote {a} and {b}")
    return 0


def cmd_train(args) -> int:
    cfg, ctx = _context(args)
    Ztr, _ = experiments.trial_features(ctx, args.trial)
    model = experiments.fit_model(ctx, Ztr, args.trial)
    args.out.mkdir(parents=True, exist_ok=True)
    path = args.out / f"{cfg.name}_model.txt"
    learners.save_model(model, path)
    print(f"wrote {path}")
    return 0


def cmd_evaluate(args) -> int:
    cfg, ctx = _context(args)
    model = learners.load_model(args.model) if args.model else None
    Ztr, Zte = experiments.trial_features(ctx, args.trial)
    if model is None:
        model = experiments.fit_model(ctx, Ztr, args.trial)
    m = learners.evaluate(model, Zte, ctx.split.y_test)
    row = {"experiment": cfg.name, "task": m.task, "n_test": m.n_test, "mse": m.mse, "accuracy": m.accuracy,
           "status": "no test set, metrics omitted" if m.empty else "ok"}
    path = io.write_rows(args.out / f"{cfg.name}_metrics.csv", list(row), [row], {"master_seed": ctx.seed})
    print(f"wrote {path}: {row}")
    return 0


def cmd_dq(args) -> int:
    cfg, ctx = _context(args)
    Ztr, _ = experiments.trial_features(ctx, args.trial)
    sub = Ztr[ctx.dq_idx]
    Qa = sub @ sub.T
    dq = kernels.kernel_discrepancy(Qa, ctx.Q_exact)
    ids = ctx.split.train_ids[ctx.dq_idx]
    k = cfg.kernel
    subsets = ";".join(str(q) for q in k.subsets)
    n_s = cfg.features.n_s if cfg.features.mode == "sampled" else None
    io.write_gram_csv(args.out / f"{cfg.name}_gram_exact.csv", ctx.Q_exact, ids, k.kind, k.gamma, subsets, None, ctx.seed)
    io.write_gram_csv(args.out / f"{cfg.name}_gram_approx.csv", Qa, ids, k.kind, k.gamma, subsets, n_s, ctx.seed)
    row = {"experiment": cfg.name, "method": cfg.features.method, "trial": args.trial, "dq_subset": len(ids), "d_q": dq}
    path = io.write_rows(args.out / f"{cfg.name}_dq.csv", list(row), [row], {"master_seed": ctx.seed})
    print(f"wrote {path}: d_Q = {dq:.6g}")
    return 0


def cmd_bounds(args) -> int:
    seed = 0 if args.seed is None else args.seed
    pt = GridPoint(args.epsilon, args.delta, args.M, args.Nq, args.Lf)
    rows = experiments.verify_bounds(args.kind, [pt], args.repetitions, seed, args.budget_scale)
    path = io.write_rows(args.out / f"bounds_{args.kind}.csv", experiments.BOUND_COLUMNS, rows, {"master_seed": seed})
    for r in rows:
        print(f"{r['kind']}: budget={r['budget']} failures={r['failures']}/{r['repetitions']} flagged={r['flagged']}")
    print(f"wrote {path}")
    return 0


def cmd_haar(args) -> int:
    seed = 0 if args.seed is None else args.seed
    q = QubitSubset(tuple(range(1, args.m + 1)))
    spec = haar.ReducedObservableSpec(args.n, q, tuple(args.paulis))
    rows = haar.haar_moment_report(spec, args.R, seed)
    args.out.mkdir(parents=True, exist_ok=True)
    path = args.out / f"haar_n{args.n}_m{args.m}.csv"
    haar.write_report_csv(rows, path)
    print(f"wrote {path} ({len(rows)} rows)")
    return 0


def cmd_advice(args) -> int:
    label = experiments.regime_advice(args.M, args.Nq, args.M0)
    print(f"{label}  (schematic: crossover constants taken as 1)")
    return 0


def cmd_reproduce(args) -> int:
    seed = 0 if args.seed is None else args.seed
    path, rows = experiments.reproduce_table(
        args.table, seed, args.out, args.config_dir, args.threads, args.dq_subset, args.lambda_convention, args.only
    )
    for r in rows:
        if r.get("trial") == "mean":
            metric = r.get("mse") if r.get("mse") is not None else r.get("accuracy")
            print(f"{r['experiment']:<28} features={r.get('n_features')} d_Q={r.get('d_q')} metric={metric} [{r['status']}]")
    print(f"wrote {path}")
    missing = any(str(r.get("status", "")).startswith("missing-data") for r in rows)
    return 2 if missing else 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qfeatures", description="Quantum-kernel feature maps by exact simulation.")
    sub = ap.add_subparsers(dest="command", required=True)

    for name, fn, helptext in (
        ("features", cmd_features, "write train/test feature matrices"),
        ("train", cmd_train, "fit the configured learner and save the model"),
        ("evaluate", cmd_evaluate, "evaluate a model on the test split"),
        ("dq", cmd_dq, "kernel discrepancy d_Q and Gram matrices on the d_Q subset"),
    ):
        p = sub.add_parser(name, help=helptext)
        _common(p)
        p.add_argument("--trial", type=int, default=0)
        if name == "evaluate":
            p.add_argument("--model", type=Path, default=None, help="model file from `train` (default: refit)")
        p.set_defaults(func=fn)

    p = sub.add_parser("bounds", help="Monte-Carlo coverage of the sample-size bounds")
    _common(p, config=False)
    p.add_argument("--kind", choices=experiments.BOUND_KINDS, default="dqf-shots")
    p.add_argument("--epsilon", type=float, default=0.3)
    p.add_argument("--delta", type=float, default=0.1)
    p.add_argument("--M", type=int, default=50)
    p.add_argument("--Nq", type=int, default=4)
    p.add_argument("--Lf", type=float, default=1.0, help="gamma of the gaussian-sq profile (rqf kinds)")
    p.add_argument("--repetitions", type=int, default=200)
    p.add_argument("--budget-scale", type=float, default=1.0)
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("haar", help="Haar moments of reduced-observable elements")
    _common(p, config=False)
    p.add_argument("--n", type=int, default=4)
    p.add_argument("--m", type=int, default=1)
    p.add_argument("--paulis", type=int, nargs="+", default=[1, 6], help="non-identity Pauli indices on n qubits")
    p.add_argument("--R", type=int, default=10_000)
    p.set_defaults(func=cmd_haar)

    p = sub.add_parser("advice", help="schematic regime advisory")
    p.add_argument("--M", type=float, required=True)
    p.add_argument("--Nq", type=float, required=True)
    p.add_argument("--M0", type=float, required=True)
    p.set_defaults(func=cmd_advice)

    p = sub.add_parser("reproduce-table", help="run every config of a results table")
    p.add_argument("table", type=int, choices=(2, 3))
    _common(p, config=False)
    p.add_argument("--config-dir", type=Path, default=None)
    p.add_argument("--only", nargs="+", default=None, help="restrict to these dataset names")
    p.set_defaults(func=cmd_reproduce)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, IngestionError, InvalidInputError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
