"""Empirical coverage of the shot and dimension budgets.

For each kind, the prescribed budget is shrunk by powers of two until the
failure fraction exceeds delta, showing how conservative the bound is.
"""

from __future__ import annotations

import argparse
import csv

from qfeatures.experiments import GridPoint, verify_bounds


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--kinds", nargs="+", default=["dqf-shots", "rqf-shots", "rqf-dim"])
    ap.add_argument("--epsilon", type=float, default=0.3)
    ap.add_argument("--delta", type=float, default=0.1)
    ap.add_argument("--M", type=int, default=20)
    ap.add_argument("--Nq", type=int, default=4)
    ap.add_argument("--repetitions", type=int, default=100)
    ap.add_argument("--max-halvings", type=int, default=16)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="bound_study.csv")
    args = ap.parse_args()
    pt = GridPoint(args.epsilon, args.delta, args.M, args.Nq)
    rows = []
    for kind in args.kinds:
        for h in range(args.max_halvings + 1):
            row = verify_bounds(kind, [pt], args.repetitions, args.seed, budget_scale=2.0**-h)[0]
            row = {"kind": kind, "budget_scale": 2.0**-h, **row}
            rows.append(row)
            print(f"{kind:<10} scale=2^-{h:<2} budget={row['budget']:<8} failures={row['failures']}/{args.repetitions}")
            if row["flagged"]:
                break
    with open(args.out, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]))
        w.writeheader()
        w.writerows(rows)
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
