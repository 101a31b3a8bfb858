"""Linear ridge, kernel ridge, linear soft-margin SVM, and evaluation metrics."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numba
import numpy as np

from .errors import InvalidInputError, SingularMatrixError

FORMAT_VERSION = 1
CONDITION_LIMIT = 1e14
LAMBDA_CONVENTIONS = ("standard", "eq2")


def effective_lambda(lam: float, M: int, convention: str = "standard") -> float:
    """Map a reported lambda to the one used in (Q + lambda I) a = y.

    ``eq2`` takes the stationarity condition of the 1/M-averaged squared loss
    with a lambda a^T Q a penalty literally, which gives 2 lambda M.
    """
    if convention not in LAMBDA_CONVENTIONS:
        raise InvalidInputError(f"lambda convention must be one of {LAMBDA_CONVENTIONS}")
    return lam if convention == "standard" else 2.0 * lam * M


def _as_xy(Z, y):
    Z = np.asarray(Z, dtype=float)
    y = np.asarray(y, dtype=float)
    if Z.ndim != 2 or y.ndim != 1 or len(Z) != len(y):
        raise InvalidInputError("expected Z of shape (M, D) and y of shape (M,)")
    if Z.shape[0] < 1 or Z.shape[1] < 1:
        raise InvalidInputError("need at least one sample and one feature")
    if not (np.all(np.isfinite(Z)) and np.all(np.isfinite(y))):
        raise InvalidInputError("inputs must be finite")
    return Z, y


# ---------------------------------------------------------------------------
# ridge


@dataclass
class RidgeModel:
    weights: np.ndarray  # feature weights; intercept stored separately
    intercept: float
    lam: float
    kind: str = "ridge"

    def __post_init__(self):
        if not np.all(np.isfinite(self.weights)) or not math.isfinite(self.intercept):
            raise InvalidInputError("ridge weights must be finite")

    @property
    def coef(self) -> np.ndarray:
        """Weights with the intercept appended (length D + 1)."""
        return np.append(self.weights, self.intercept)

    def predict(self, Z) -> np.ndarray:
        return np.asarray(Z, dtype=float) @ self.weights + self.intercept


def ridge_fit(Z, y, lam: float) -> RidgeModel:
    """argmin ||y - Zw - b||^2 + lam ||w||^2 with the intercept b unpenalized."""
    Z, y = _as_xy(Z, y)
    if lam < 0 or not math.isfinite(lam):
        raise InvalidInputError("lambda must be finite and nonnegative")
    zbar, ybar = Z.mean(axis=0), y.mean()
    Zc = Z - zbar
    A = Zc.T @ Zc
    A[np.diag_indices_from(A)] += lam
    rhs = Zc.T @ (y - ybar)
    if lam == 0:
        if np.linalg.matrix_rank(Zc) < Z.shape[1]:
            raise SingularMatrixError("normal equations are singular at lambda = 0")
    try:
        w = np.linalg.solve(A, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularMatrixError(str(exc)) from exc
    return RidgeModel(w, float(ybar - zbar @ w), lam)


def ridge_objective(model: RidgeModel, Z, y) -> float:
    r = np.asarray(y) - model.predict(Z)
    return float(r @ r + model.lam * model.weights @ model.weights)


# ---------------------------------------------------------------------------
# kernel ridge


@dataclass
class KernelRidgeModel:
    """f(x) = b + sum_j a_j Q(x_j, x).

    ``train_handle`` is whatever the caller needs to produce kernel columns
    against the training set (e.g. representations). It is not serialized.
    """

    coefficients: np.ndarray
    intercept: float
    lam: float
    metadata: dict = field(default_factory=dict)
    train_handle: object = field(default=None, repr=False)
    kind: str = "kernel-ridge"

    def __post_init__(self):
        if not np.all(np.isfinite(self.coefficients)) or not math.isfinite(self.intercept):
            raise InvalidInputError("kernel ridge coefficients must be finite")

    def predict(self, K_cols) -> np.ndarray:
        """``K_cols[i, j] = Q(x_test_i, x_train_j)``."""
        K_cols = np.atleast_2d(np.asarray(K_cols, dtype=float))
        if K_cols.shape[1] != self.coefficients.size:
            raise InvalidInputError("kernel columns do not match the training set size")
        return K_cols @ self.coefficients + self.intercept


def kernel_ridge_fit(Q, y, lam: float, handle=None) -> KernelRidgeModel:
    """Kernel ridge with an unpenalized intercept.

    Solves (HQH + lam I) a = H y with H = I - 11^T/M. The solution has
    sum(a) = 0, so the centered prediction reduces to b + sum_j a_j Q(x_j, x)
    with b = mean(y) - a^T (Q 1 / M). On Q = Z Z^T this equals ridge_fit(Z).
    """
    Q = np.asarray(Q, dtype=float)
    y = np.asarray(y, dtype=float)
    M = y.size
    if Q.shape != (M, M):
        raise InvalidInputError("Gram matrix must be M x M for M labels")
    if not np.allclose(Q, Q.T, atol=1e-10, rtol=0):
        raise InvalidInputError("Gram matrix must be symmetric")
    if not lam > 0:
        raise InvalidInputError("kernel ridge needs lambda > 0")
    row_mean = Q.mean(axis=1)
    Qc = Q - row_mean[:, None] - row_mean[None, :] + row_mean.mean()
    A = Qc + lam * np.eye(M)
    ybar = y.mean()
    cond = float(np.linalg.cond(A))
    meta = {"condition": cond, "lambda": lam}
    if not cond < CONDITION_LIMIT:
        meta["warning"] = f"ill-conditioned solve: condition estimate {cond:.3e} > {CONDITION_LIMIT:.0e}"
    try:
        a = np.linalg.solve(A, y - ybar)
    except np.linalg.LinAlgError as exc:
        raise SingularMatrixError(str(exc)) from exc
    a -= a.mean()  # exact in arithmetic; removes roundoff drift
    return KernelRidgeModel(a, float(ybar - a @ row_mean), lam, meta, handle)


# ---------------------------------------------------------------------------
# linear SVM by dual coordinate descent


@dataclass
class SvmModel:
    weights: np.ndarray
    bias: float
    C: float
    metadata: dict = field(default_factory=dict)
    kind: str = "svm"

    def __post_init__(self):
        if not np.all(np.isfinite(self.weights)) or not math.isfinite(self.bias):
            raise InvalidInputError("SVM parameters must be finite")

    def decision_function(self, Z) -> np.ndarray:
        return np.asarray(Z, dtype=float) @ self.weights + self.bias

    def predict(self, Z) -> np.ndarray:
        return np.where(self.decision_function(Z) >= 0, 1.0, -1.0)


@numba.njit(cache=True, nogil=True)
def _primal_dual(Zb, y, alpha, w, C):
    hinge = 0.0
    for i in range(Zb.shape[0]):
        m = 1.0 - y[i] * (Zb[i] @ w)
        if m > 0:
            hinge += m
    ww = w @ w
    return 0.5 * ww + C * hinge, alpha.sum() - 0.5 * ww


@numba.njit(cache=True, nogil=True)
def _dcd(Zb, y, C, seed, max_epochs, gap_tol):
    M, D = Zb.shape
    np.random.seed(seed)
    alpha = np.zeros(M)
    w = np.zeros(D)
    qii = np.empty(M)
    for i in range(M):
        qii[i] = Zb[i] @ Zb[i]
    gap = np.inf
    epoch = 0
    while epoch < max_epochs:
        order = np.random.permutation(M)
        for t in range(M):
            i = order[t]
            if qii[i] == 0.0:
                continue
            g = y[i] * (Zb[i] @ w) - 1.0
            a_old = alpha[i]
            a_new = min(max(a_old - g / qii[i], 0.0), C)
            if a_new != a_old:
                w += (a_new - a_old) * y[i] * Zb[i]
                alpha[i] = a_new
        epoch += 1
        p, d = _primal_dual(Zb, y, alpha, w, C)
        gap = p - d
        if gap <= gap_tol:
            break
    return w, alpha, gap, epoch


def svm_fit(Z, y, C: float = 1.0, rng=0, max_epochs: int = 1000, bias_scale: float = 1.0) -> SvmModel:
    """Soft-margin linear SVM (hinge loss) by dual coordinate descent.

    The bias enters as an extra constant feature ``bias_scale``, so the solved
    objective is 1/2 (||w||^2 + b^2 / bias_scale^2) + C sum hinge. Stops at
    duality gap <= 1e-4 C M or after ``max_epochs`` epochs. The epoch
    permutations come from an integer seed drawn from ``rng``.
    """
    Z, y = _as_xy(Z, y)
    if not C > 0:
        raise InvalidInputError("C must be positive")
    labels = set(np.unique(y).tolist())
    if not labels <= {-1.0, 1.0}:
        raise InvalidInputError("SVM labels must be -1 or +1")
    if len(labels) < 2:
        raise InvalidInputError("SVM needs both classes in the training set")
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    seed = int(rng.integers(2**31 - 1))
    Zb = np.ascontiguousarray(np.hstack([Z, np.full((len(Z), 1), bias_scale)]))
    tol = 1e-4 * C * len(y)
    w, alpha, gap, epochs = _dcd(Zb, y, float(C), seed, int(max_epochs), tol)
    meta = {"duality_gap": float(gap), "gap_tolerance": tol, "epochs": int(epochs), "converged": bool(gap <= tol)}
    return SvmModel(w[:-1].copy(), float(w[-1] * bias_scale), C, meta)


def svm_objective(w, b, Z, y, C) -> float:
    """1/2 ||w||^2 + C sum max(0, 1 - y (w^T z + b))."""
    m = 1.0 - np.asarray(y) * (np.asarray(Z) @ w + b)
    return float(0.5 * np.dot(w, w) + C * np.maximum(m, 0).sum())


# ---------------------------------------------------------------------------
# metrics


@dataclass(frozen=True)
class Metrics:
    task: str
    n_test: int
    mse: float | None = None
    accuracy: float | None = None

    @property
    def empty(self) -> bool:
        return self.n_test == 0


def mean_squared_error(y, y_hat) -> float:
    y, y_hat = np.asarray(y, dtype=float), np.asarray(y_hat, dtype=float)
    return float(np.mean((y - y_hat) ** 2))


def accuracy(y, y_hat) -> float:
    y, y_hat = np.asarray(y), np.asarray(y_hat)
    return float(np.mean(np.sign(y_hat) == np.sign(y)))


def evaluate(model, X_eval, y_test) -> Metrics:
    """MSE for ridge models, sign accuracy for the SVM.

    ``X_eval`` is a feature matrix, or kernel columns for a kernel ridge model.
    An empty test set returns a record with no metric values.
    """
    y_test = np.asarray(y_test, dtype=float)
    task = "classification" if isinstance(model, SvmModel) else "regression"
    if y_test.size == 0:
        return Metrics(task, 0)
    if len(X_eval) != y_test.size:
        raise InvalidInputError("evaluation inputs and labels differ in length")
    if task == "classification":
        return Metrics(task, y_test.size, accuracy=accuracy(y_test, model.decision_function(X_eval)))
    return Metrics(task, y_test.size, mse=mean_squared_error(y_test, model.predict(X_eval)))


# ---------------------------------------------------------------------------
# serialization


def save_model(model, path) -> None:
    """Versioned flat text: a header of key=value lines, then one value per line."""
    if isinstance(model, RidgeModel):
        header = {"lambda": model.lam, "intercept": model.intercept}
        body = model.weights
    elif isinstance(model, KernelRidgeModel):
        header = {"lambda": model.lam, "intercept": model.intercept}
        body = model.coefficients
    elif isinstance(model, SvmModel):
        header = {"C": model.C, "intercept": model.bias}
        body = model.weights
    else:
        raise InvalidInputError(f"cannot serialize {type(model).__name__}")
    lines = [f"# qfeatures-model v{FORMAT_VERSION}", f"kind={model.kind}", f"dim={body.size}"]
    lines += [f"{k}={float(v)!r}" for k, v in header.items()]
    lines.append("---")
    lines += [repr(float(v)) for v in body]
    Path(path).write_text("\n".join(lines) + "\n")


def load_model(path):
    text = Path(path).read_text().splitlines()
    if not text or not text[0].startswith("# qfeatures-model v"):
        raise InvalidInputError("not a qfeatures model file")
    version = int(text[0].rsplit("v", 1)[1])
    if version != FORMAT_VERSION:
        raise InvalidInputError(f"unsupported model format version {version}")
    sep = text.index("---")
    header = dict(line.split("=", 1) for line in text[1:sep])
    body = np.array([float(v) for v in text[sep + 1 :]])
    if body.size != int(header["dim"]):
        raise InvalidInputError("model body length does not match its header")
    kind, b = header["kind"], float(header["intercept"])
    if kind == "ridge":
        return RidgeModel(body, b, float(header["lambda"]))
    if kind == "kernel-ridge":
        return KernelRidgeModel(body, b, float(header["lambda"]))
    if kind == "svm":
        return SvmModel(body, b, float(header["C"]))
    raise InvalidInputError(f"unknown model kind {kind!r}")
