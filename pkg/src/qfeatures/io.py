"""CSV writers with fixed headers. Floats are written with repr for exact round-trips."""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

NA = "NA"


def fmt(v) -> str:
    if v is None:
        return NA
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_rows(path, columns: Sequence[str], rows: Iterable[Mapping], comments: Mapping | None = None) -> Path:
    """Optional ``# key=value`` comment lines, a header row, then one line per row."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        for k, v in (comments or {}).items():
            fh.write(f"# {k}={fmt(v)}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([fmt(r.get(c)) for c in columns])
    return path


def read_rows(path) -> tuple[dict, list[dict]]:
    lines = Path(path).read_text().splitlines()
    comments = {}
    while lines and lines[0].startswith("# "):
        k, v = lines.pop(0)[2:].split("=", 1)
        comments[k] = v
    reader = csv.DictReader(lines)
    return comments, list(reader)


def write_features_csv(path, Z: np.ndarray, ids: Sequence[int], layout=None, comments: Mapping | None = None) -> Path:
    """Rows ``row_id, z1..zD``; block layout goes into the comment header."""
    comments = dict(comments or {})
    if layout is not None:
        comments["layout"] = ";".join(f"{b.kind}:{b.block}:{b.length}" for b in layout)
    cols = ["row_id"] + [f"z{j + 1}" for j in range(Z.shape[1])]
    rows = ({"row_id": int(i), **{f"z{j + 1}": v for j, v in enumerate(z)}} for i, z in zip(ids, Z))
    return write_rows(path, cols, rows, comments)


def read_features_csv(path) -> tuple[dict, np.ndarray, np.ndarray]:
    comments, rows = read_rows(path)
    if not rows:
        return comments, np.empty(0, dtype=int), np.empty((0, 0))
    keys = [k for k in rows[0] if k != "row_id"]
    ids = np.array([int(r["row_id"]) for r in rows])
    Z = np.array([[float(r[k]) for k in keys] for r in rows])
    return comments, ids, Z


def write_gram_csv(path, G: np.ndarray, ids: Sequence[int], kind: str, gamma: float, subsets: str, n_s, seed: int) -> Path:
    """Header names kernel kind, gamma, subsets, n_s and seed; then one row per sample."""
    comments = {"kernel": kind, "gamma": gamma, "subsets": subsets, "n_s": n_s if n_s else "exact", "seed": seed}
    cols = ["row_id"] + [f"k{int(i)}" for i in ids]
    rows = ({"row_id": int(i), **{f"k{int(j)}": v for j, v in zip(ids, g)}} for i, g in zip(ids, G))
    return write_rows(path, cols, rows, comments)
