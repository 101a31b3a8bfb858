"""Benchmark dataset ingestion, angle scaling and seeded train/test splits."""

from __future__ import annotations

import csv
import json
import os
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import IngestionError, InvalidInputError

DATA_ENV = "QKF_DATA_DIR"
WINE_COLUMNS = (
    "fixed acidity",
    "volatile acidity",
    "citric acid",
    "residual sugar",
    "chlorides",
    "free sulfur dioxide",
    "total sulfur dioxide",
    "density",
    "pH",
    "sulphates",
    "alcohol",
)
MAGIC_COLUMNS = ("fLength", "fWidth", "fSize", "fConc", "fConc1", "fAsym", "fM3Long", "fM3Trans", "fAlpha", "fDist")
MAGIC_LABELS = {"g": 1.0, "h": -1.0}
DEFAULT_FILES = {"wine-quality": "winequality-white.csv", "magic04": "magic04.data"}
DEFAULT_SPLITS = {"wine-quality": (4000, 898), "magic04": (18500, 520)}


@dataclass(frozen=True)
class RawTable:
    name: str
    features: np.ndarray  # (rows, d)
    labels: np.ndarray
    columns: tuple[str, ...]
    task: str  # regression | classification

    @property
    def n_rows(self) -> int:
        return len(self.labels)


@dataclass(frozen=True)
class ScalingRecord:
    """Per-feature training min/max; constant columns map to pi/2."""

    minimum: np.ndarray
    maximum: np.ndarray

    @property
    def constant(self) -> np.ndarray:
        return self.maximum == self.minimum

    def apply(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        span = np.where(self.constant, 1.0, self.maximum - self.minimum)
        out = np.pi * ((X - self.minimum) / span)  # divide first so the max maps to pi exactly
        out[:, self.constant] = np.pi / 2
        return np.clip(out, 0.0, np.pi)

    def to_json(self) -> str:
        return json.dumps({"min": self.minimum.tolist(), "max": self.maximum.tolist()})

    @classmethod
    def from_json(cls, text: str) -> "ScalingRecord":
        d = json.loads(text)
        return cls(np.array(d["min"], dtype=float), np.array(d["max"], dtype=float))


@dataclass(frozen=True)
class DatasetSplit:
    name: str
    X_train: np.ndarray
    y_train: np.ndarray
    X_test: np.ndarray
    y_test: np.ndarray
    train_ids: np.ndarray  # row indices in the source file
    test_ids: np.ndarray
    scaling: ScalingRecord
    seed: int
    task: str

    @property
    def d(self) -> int:
        return self.X_train.shape[1]

    def fingerprint(self) -> str:
        """Short hash of the row assignment, for auditing splits."""
        import hashlib

        h = hashlib.sha256()
        h.update(np.asarray(self.train_ids, dtype=np.int64).tobytes())
        h.update(b"|")
        h.update(np.asarray(self.test_ids, dtype=np.int64).tobytes())
        return h.hexdigest()[:16]


def data_dir() -> Path:
    return Path(os.environ.get(DATA_ENV, "data"))


def resolve_path(name: str, path=None) -> Path:
    """Explicit path, else the default file name under $QKF_DATA_DIR (default ./data)."""
    if path:
        p = Path(path)
        return p if p.is_absolute() or p.exists() else data_dir() / p
    if name not in DEFAULT_FILES:
        raise InvalidInputError(f"unknown dataset {name!r}")
    return data_dir() / DEFAULT_FILES[name]


def _open(path) -> Path:
    p = Path(path)
    if not p.is_file():
        raise IngestionError(f"dataset file not found: {p}")
    return p


def load_wine_quality(path) -> RawTable:
    """Semicolon-delimited wine-quality CSV: 11 features plus integer ``quality``."""
    with _open(path).open(newline="") as fh:
        reader = csv.reader(fh, delimiter=";")
        header = next(reader, None)
        if header is None:
            raise IngestionError("wine-quality file is empty")
        header = [h.strip() for h in header]
        expected = list(WINE_COLUMNS) + ["quality"]
        if len(header) != len(expected):
            raise IngestionError(f"expected {len(expected)} columns, found {len(header)}")
        for got, want in zip(header, expected):
            if got != want:
                raise IngestionError(f"unexpected column {got!r} (expected {want!r})")
        rows = []
        for i, row in enumerate(reader):
            if not row:
                continue
            if len(row) != len(expected):
                raise IngestionError(f"row {i}: expected {len(expected)} fields, found {len(row)}")
            try:
                rows.append([float(v) for v in row])
            except ValueError as exc:
                raise IngestionError(f"row {i}: non-numeric field ({exc})") from None
    if not rows:
        raise IngestionError("wine-quality file has a header but no rows")
    arr = np.array(rows)
    q = arr[:, -1]
    if np.any(q != np.round(q)):
        raise IngestionError("column 'quality' must hold integer scores")
    return RawTable("wine-quality", arr[:, :-1], q, WINE_COLUMNS, "regression")


def load_magic04(path) -> RawTable:
    """Comma-delimited magic04: 10 features plus class letter (g -> +1, h -> -1).

    Lines starting with '@' (ARFF-style headers) are skipped.
    """
    feats, labels = [], []
    with _open(path).open(newline="") as fh:
        for i, row in enumerate(csv.reader(fh)):
            if not row or row[0].lstrip().startswith("@"):
                continue
            if len(row) != 11:
                raise IngestionError(f"row {i}: expected 11 fields, found {len(row)}")
            letter = row[-1].strip()
            if letter not in MAGIC_LABELS:
                raise IngestionError(f"row {i}: unknown class label {letter!r}")
            try:
                feats.append([float(v) for v in row[:-1]])
            except ValueError as exc:
                raise IngestionError(f"row {i}: non-numeric field ({exc})") from None
            labels.append(MAGIC_LABELS[letter])
    if not feats:
        raise IngestionError("magic04 file has no data rows")
    return RawTable("magic04", np.array(feats), np.array(labels), MAGIC_COLUMNS, "classification")


LOADERS = {"wine-quality": load_wine_quality, "magic04": load_magic04}


def load(name: str, path=None) -> RawTable:
    if name not in LOADERS:
        raise InvalidInputError(f"unknown dataset {name!r}")
    return LOADERS[name](resolve_path(name, path))


def fit_scaling(X_train) -> ScalingRecord:
    X_train = np.asarray(X_train, dtype=float)
    rec = ScalingRecord(X_train.min(axis=0), X_train.max(axis=0))
    if np.any(rec.constant):
        cols = np.flatnonzero(rec.constant).tolist()
        warnings.warn(f"constant training feature(s) {cols} mapped to pi/2", stacklevel=2)
    return rec


def scale_and_split(raw: RawTable, M_train: int, M_test: int, seed: int) -> DatasetSplit:
    """Seeded shuffle, min-max to [0, pi] from the training rows only, test rows clipped."""
    if M_train < 1 or M_test < 0:
        raise InvalidInputError("need M_train >= 1 and M_test >= 0")
    if M_train + M_test > raw.n_rows:
        raise InvalidInputError(f"split {M_train}+{M_test} exceeds {raw.n_rows} rows")
    perm = np.random.default_rng(seed).permutation(raw.n_rows)
    tr, te = perm[:M_train], perm[M_train : M_train + M_test]
    scaling = fit_scaling(raw.features[tr])
    return DatasetSplit(
        raw.name,
        scaling.apply(raw.features[tr]),
        raw.labels[tr].astype(float),
        scaling.apply(raw.features[te]),
        raw.labels[te].astype(float),
        tr,
        te,
        scaling,
        int(seed),
        raw.task,
    )


# ---------------------------------------------------------------------------
# cache


def write_split_csv(split: DatasetSplit, path) -> None:
    """Header comment lines (name, seed, task, scaling), then split,row_id,label,x1..xd rows."""
    with Path(path).open("w", newline="") as fh:
        fh.write(f"# name={split.name}\n# seed={split.seed}\n# task={split.task}\n")
        fh.write(f"# scaling={split.scaling.to_json()}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["split", "row_id", "label"] + [f"x{j + 1}" for j in range(split.d)])
        for part, X, y, ids in (("train", split.X_train, split.y_train, split.train_ids), ("test", split.X_test, split.y_test, split.test_ids)):
            for x, lab, i in zip(X, y, ids):
                w.writerow([part, int(i), repr(float(lab))] + [repr(float(v)) for v in x])


def read_split_csv(path) -> DatasetSplit:
    meta, rows = {}, []
    with Path(path).open(newline="") as fh:
        lines = fh.read().splitlines()
    body_start = 0
    for body_start, line in enumerate(lines):
        if not line.startswith("# "):
            break
        key, val = line[2:].split("=", 1)
        meta[key] = val
    reader = csv.reader(lines[body_start + 1 :])
    rows = list(reader)
    parts = {"train": [], "test": []}
    for r in rows:
        parts[r[0]].append(r[1:])

    def unpack(rs, d):
        if not rs:
            return np.empty((0, d)), np.empty(0), np.empty(0, dtype=int)
        a = np.array(rs, dtype=float)
        return a[:, 2:], a[:, 1], a[:, 0].astype(int)

    d = len(lines[body_start].split(",")) - 3
    Xtr, ytr, itr = unpack(parts["train"], d)
    Xte, yte, ite = unpack(parts["test"], d)
    return DatasetSplit(
        meta["name"], Xtr, ytr, Xte, yte, itr, ite, ScalingRecord.from_json(meta["scaling"]), int(meta["seed"]), meta["task"]
    )
