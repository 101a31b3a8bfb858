import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qfeatures import learners
from qfeatures.errors import InvalidInputError, SingularMatrixError
from qfeatures.learners import KernelRidgeModel, RidgeModel, SvmModel


def _svd_ridge(Z, y, lam):
    # independent solve: center, then w = V diag(s / (s^2 + lam)) U^T yc
    zbar, ybar = Z.mean(0), y.mean()
    U, s, Vt = np.linalg.svd(Z - zbar, full_matrices=False)
    w = Vt.T @ ((s / (s**2 + lam)) * (U.T @ (y - ybar)))
    return w, ybar - zbar @ w


# --- ridge


def test_ridge_interpolates_noiseless_data(rng):
    Z = rng.normal(size=(40, 6))
    w_star = rng.normal(size=6)
    m = learners.ridge_fit(Z, Z @ w_star + 0.7, 0.0)
    assert np.allclose(m.weights, w_star, atol=1e-8)
    assert m.intercept == pytest.approx(0.7, abs=1e-8)


def test_ridge_large_lambda_limit(rng):
    Z = rng.normal(size=(30, 4))
    y = rng.normal(size=30) + 3
    m = learners.ridge_fit(Z, y, 1e12)
    assert np.abs(m.weights).max() < 1e-9
    assert np.allclose(m.predict(Z), y.mean(), atol=1e-8)


@pytest.mark.parametrize("lam", [1e-3, 0.1, 10.0])
def test_ridge_matches_svd_oracle(lam, rng):
    Z = rng.normal(size=(200, 16))
    y = rng.normal(size=200)
    m = learners.ridge_fit(Z, y, lam)
    w, b = _svd_ridge(Z, y, lam)
    assert np.allclose(m.weights, w, atol=1e-8)
    assert m.intercept == pytest.approx(b, abs=1e-8)
    assert m.coef.shape == (17,)


def test_ridge_minimizes_objective(rng):
    Z = rng.normal(size=(50, 5))
    y = rng.normal(size=50)
    m = learners.ridge_fit(Z, y, 0.5)
    base = learners.ridge_objective(m, Z, y)
    for _ in range(20):
        pert = RidgeModel(m.weights + 1e-3 * rng.normal(size=5), m.intercept + 1e-3 * rng.normal(), 0.5)
        assert learners.ridge_objective(pert, Z, y) >= base


def test_ridge_singular_at_zero_lambda(rng):
    Z = rng.normal(size=(10, 3))
    Z = np.hstack([Z, Z[:, :1]])
    with pytest.raises(SingularMatrixError):
        learners.ridge_fit(Z, rng.normal(size=10), 0.0)


def test_ridge_input_validation():
    with pytest.raises(InvalidInputError):
        learners.ridge_fit(np.ones((3, 2)), np.ones(4), 1.0)
    with pytest.raises(InvalidInputError):
        learners.ridge_fit(np.ones((3, 2)), np.ones(3), -1.0)
    with pytest.raises(InvalidInputError):
        learners.ridge_fit(np.full((3, 2), np.nan), np.ones(3), 1.0)


def test_lambda_conventions():
    assert learners.effective_lambda(0.001, 1000, "standard") == 0.001
    assert learners.effective_lambda(0.001, 1000, "eq2") == pytest.approx(2.0)
    with pytest.raises(InvalidInputError):
        learners.effective_lambda(0.001, 10, "other")


# --- kernel ridge


def test_kernel_ridge_identity_gram(rng):
    y = rng.normal(size=8)
    m = learners.kernel_ridge_fit(np.eye(8), y, 0.3)
    assert np.allclose(m.coefficients, (y - y.mean()) / 1.3)


def test_kernel_ridge_hand_solve():
    m = learners.kernel_ridge_fit(np.eye(2), np.array([1.0, -1.0]), 1.0)
    assert np.allclose(m.coefficients, [0.5, -0.5])
    assert m.intercept == pytest.approx(0.0)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_primal_dual_ridge_identity(seed):
    rng = np.random.default_rng(seed)
    M, D = int(rng.integers(5, 60)), int(rng.integers(1, 30))
    lam = float(10 ** rng.uniform(-3, 1))
    Z, Zt = rng.normal(size=(M, D)), rng.normal(size=(7, D))
    y = rng.normal(size=M)
    dual = learners.kernel_ridge_fit(Z @ Z.T, y, lam)
    primal = learners.ridge_fit(Z, y, lam)
    assert np.allclose(dual.predict(Zt @ Z.T), primal.predict(Zt), atol=1e-8)


def test_kernel_ridge_conditioning_warning():
    z = 1000 * np.arange(4.0)[:, None]
    m = learners.kernel_ridge_fit(z @ z.T, np.arange(4.0), 1e-9)
    assert m.metadata["condition"] > 1e14
    assert "warning" in m.metadata
    ok = learners.kernel_ridge_fit(np.eye(4), np.arange(4.0), 1.0)
    assert "warning" not in ok.metadata


def test_kernel_ridge_validation():
    with pytest.raises(InvalidInputError):
        learners.kernel_ridge_fit(np.eye(3), np.ones(2), 1.0)
    with pytest.raises(InvalidInputError):
        learners.kernel_ridge_fit(np.array([[1.0, 0.5], [0.0, 1.0]]), np.ones(2), 1.0)
    m = learners.kernel_ridge_fit(np.eye(3), np.ones(3), 1.0)
    with pytest.raises(InvalidInputError):
        m.predict(np.ones((2, 4)))


# --- SVM


def test_svm_separable_blobs(rng):
    a = rng.normal(size=(40, 2)) * 0.3 + [2, 2]
    b = rng.normal(size=(40, 2)) * 0.3 - [2, 2]
    Z = np.vstack([a, b])
    y = np.r_[np.ones(40), -np.ones(40)]
    m = learners.svm_fit(Z, y, C=1.0, rng=0)
    assert np.all(m.predict(Z) == y)
    # nearest-centroid rule agrees on the training points
    ca, cb = a.mean(0), b.mean(0)
    centroid = np.where(((Z - ca) ** 2).sum(1) < ((Z - cb) ** 2).sum(1), 1.0, -1.0)
    assert np.all(m.predict(Z) == centroid)
    assert m.metadata["converged"]


def test_svm_xor_matches_grid_search():
    Z = np.array([[1.0, 1.0], [-1.0, -1.0], [1.0, -1.0], [-1.0, 1.0]])
    y = np.array([1.0, 1.0, -1.0, -1.0])
    C = 1.0
    m = learners.svm_fit(Z, y, C=C, rng=0)
    got = learners.svm_objective(m.weights, m.bias, Z, y, C)
    grid = np.linspace(-2, 2, 81)
    best = min(learners.svm_objective(np.array([w1, w2]), b, Z, y, C) for w1, w2, b in itertools.product(grid, grid, grid))
    assert got == pytest.approx(best, abs=1e-3)


def _primal_objective(w, b, Z, y, C):
    # objective actually solved: bias penalized as an augmented feature of scale 1
    return 0.5 * (w @ w + b * b) + C * np.maximum(0, 1 - y * (Z @ w + b)).sum()


def test_svm_reaches_primal_optimum(rng):
    from scipy.optimize import minimize

    Z = rng.normal(size=(60, 3))
    y = np.sign(Z[:, 0] + 0.5 * rng.normal(size=60))
    m = learners.svm_fit(Z, y, C=0.5, rng=1)
    ours = _primal_objective(m.weights, m.bias, Z, y, 0.5)
    res = minimize(lambda v: _primal_objective(v[:3], v[3], Z, y, 0.5), np.zeros(4), method="Powell",
                   options={"xtol": 1e-10, "ftol": 1e-12, "maxiter": 100_000})
    assert ours <= res.fun + 1e-4 * 0.5 * 60
    assert m.metadata["duality_gap"] <= m.metadata["gap_tolerance"]


def test_svm_is_seeded(rng):
    Z = rng.normal(size=(50, 4))
    y = np.sign(rng.normal(size=50))
    a = learners.svm_fit(Z, y, rng=np.random.default_rng(3))
    b = learners.svm_fit(Z, y, rng=np.random.default_rng(3))
    assert np.array_equal(a.weights, b.weights) and a.bias == b.bias


def test_svm_validation():
    with pytest.raises(InvalidInputError):
        learners.svm_fit(np.ones((3, 2)), np.ones(3))
    with pytest.raises(InvalidInputError):
        learners.svm_fit(np.ones((3, 2)), np.array([0.0, 1.0, 2.0]))
    with pytest.raises(InvalidInputError):
        learners.svm_fit(np.ones((2, 2)), np.array([1.0, -1.0]), C=0.0)


# --- metrics and evaluation


def test_metrics_examples(rng):
    y = rng.normal(size=20)
    assert learners.mean_squared_error(y, y) == 0.0
    assert learners.mean_squared_error(y, np.full(20, y.mean())) == pytest.approx(np.var(y))
    s = np.sign(y)
    assert learners.accuracy(s, s) == 1.0


def test_evaluate_dispatch(rng):
    Z = rng.normal(size=(30, 3))
    y = Z @ [1.0, -1.0, 0.5]
    r = learners.evaluate(learners.ridge_fit(Z, y, 1e-6), Z, y)
    assert r.task == "regression" and r.mse < 1e-8 and r.accuracy is None
    s = learners.svm_fit(Z, np.sign(y), rng=0)
    c = learners.evaluate(s, Z, np.sign(y))
    assert c.task == "classification" and c.mse is None and c.accuracy > 0.9


def test_evaluate_empty_test_set(rng):
    m = learners.ridge_fit(rng.normal(size=(5, 2)), rng.normal(size=5), 1.0)
    r = learners.evaluate(m, np.empty((0, 2)), np.empty(0))
    assert r.empty and r.mse is None


# --- serialization


@pytest.mark.parametrize(
    "model",
    [
        RidgeModel(np.array([0.1, -2.5, 1e-17]), 0.3, 1e-3),
        KernelRidgeModel(np.array([1.0, -1.0]), 2.0, 0.5),
        SvmModel(np.array([0.25, 1 / 3]), -0.1, 1.0),
    ],
)
def test_model_round_trip(model, tmp_path):
    path = tmp_path / "model.txt"
    learners.save_model(model, path)
    assert path.read_text().startswith("# qfeatures-model v1")
    back = learners.load_model(path)
    assert type(back) is type(model)
    Z = np.array([[1.0, 2.0, 3.0][: len(getattr(model, "weights", getattr(model, "coefficients", None)))]])
    assert np.array_equal(back.predict(Z), model.predict(Z))


def test_load_rejects_foreign_files(tmp_path):
    p = tmp_path / "x.txt"
    p.write_text("hello\n")
    with pytest.raises(InvalidInputError):
        learners.load_model(p)
    p.write_text("# qfeatures-model v9\nkind=svm\n---\n")
    with pytest.raises(InvalidInputError):
        learners.load_model(p)
