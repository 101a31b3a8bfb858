"""Exact RDM kernels, Gram matrices, the d_Q discrepancy and Nystrom features.

Kernels are evaluated on Pauli-vector representations. A sample x is held
as one vector c_k(x) = Tr(P_j rho_{q_k}(x)) / N_k per block k. The identities

    Tr(rho rho')            = N   <c, c'>
    (1/4) Tr((rho - rho')^2) = N/4 ||c - c'||^2

make every kernel a cheap function of these vectors. It also lets exact and
shot-noise representations share one code path.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.spatial.distance import cdist

from . import sim
from .errors import DegenerateKernelError, InvalidInputError
from .rng import as_generator

PROFILE_KINDS = ("inner-product", "gaussian-sq", "laplace")


@dataclass(frozen=True)
class KernelProfile:
    """Shape of the kernel built from block RDMs.

    inner-product
        sum_k alpha_k Tr(rho_k rho_k').
    gaussian-sq
        exp(-gamma * sum_k alpha_k d_k) with d_k = (1/4) Tr((rho_k - rho_k')^2).
    laplace
        sum_k alpha_k exp(-gamma ||rho_k - rho_k'||_HS). This is the benchmark
        distance kernel, with a sum of exponentials over blocks.

    ``block_sum=True`` turns gaussian-sq into sum_k alpha_k exp(-gamma d_k).
    This is the kernel that concatenated per-block random features
    approximate.
    """

    kind: str = "inner-product"
    gamma: float = 1.0
    block_sum: bool = False

    def __post_init__(self):
        if self.kind not in PROFILE_KINDS:
            raise InvalidInputError(f"unknown kernel profile {self.kind!r}")
        if not np.isfinite(self.gamma) or self.gamma < 0:
            raise InvalidInputError("gamma must be finite and nonnegative")

    @property
    def is_distance(self) -> bool:
        return self.kind != "inner-product"

    @property
    def sums_blocks(self) -> bool:
        """Whether the kernel is a weighted sum of per-block kernels."""
        return self.kind != "gaussian-sq" or self.block_sum

    @property
    def lipschitz(self) -> float:
        """L_f of f(c) = exp(-gamma c) on c >= 0."""
        if self.kind != "gaussian-sq":
            raise InvalidInputError("Lipschitz constant is defined for the gaussian-sq profile")
        return self.gamma


# ---------------------------------------------------------------------------
# kernel values from Pauli vectors


def _block_values(kind: str, gamma: float, A: np.ndarray, B: np.ndarray, dim: int) -> np.ndarray:
    if kind == "inner-product":
        return dim * (A @ B.T)
    sq = cdist(A, B, "sqeuclidean")
    if kind == "gaussian-sq":
        return dim / 4 * sq
    # ||rho - rho'||_HS = sqrt(N) ||c - c'||
    return np.exp(-gamma * np.sqrt(dim * sq))


def kernel_matrix(reps_a: Sequence[np.ndarray], reps_b: Sequence[np.ndarray], blocks, profile: KernelProfile) -> np.ndarray:
    """Kernel between two sets of block Pauli vectors."""
    total = None
    for (q, alpha), A, B in zip(blocks, reps_a, reps_b):
        vals = _block_values(profile.kind, profile.gamma, A, B, q.dim)
        if profile.kind == "gaussian-sq" and profile.block_sum:
            vals = np.exp(-profile.gamma * vals)
        total = alpha * vals if total is None else total + alpha * vals
    if profile.kind == "gaussian-sq" and not profile.block_sum:
        total = np.exp(-profile.gamma * total)
    return total


@dataclass
class KernelEvaluator:
    """Kernel over data instances, backed by exact or shot-estimated RDMs.

    With ``n_s`` set, each sample's Pauli vector is replaced by an n_s-shot
    estimate drawn from stream ``(seed, *tags, sample id, block)``.
    """

    cfg: object
    n_s: int | None = None
    seed: int = 0
    tags: tuple = ("kernel-shots",)

    @property
    def blocks(self):
        return self.cfg.subsets

    @property
    def profile(self) -> KernelProfile:
        return self.cfg.profile

    def represent(self, X, ids=None) -> list[np.ndarray]:
        X = np.atleast_2d(X)
        reps = sim.block_pauli_vectors(X, [q for q, _ in self.blocks])
        if self.n_s is None:
            return reps
        ids = np.arange(len(X)) if ids is None else ids
        return sim.estimate_pauli_vectors(reps, self.n_s, self.seed, ids, *self.tags)

    def matrix(self, reps_a, reps_b) -> np.ndarray:
        return kernel_matrix(reps_a, reps_b, self.blocks, self.profile)

    def __call__(self, x, x2) -> float:
        ra = self.represent(np.asarray(x)[None], ids=[0])
        rb = self.represent(np.asarray(x2)[None], ids=[1])
        return float(self.matrix(ra, rb)[0, 0])


def _single_rdms(x, cfg) -> list[sim.ReducedDensityMatrix]:
    state = sim.encode(x)
    return [sim.reduced_density_matrix(state, q) for q, _ in cfg.subsets]


def inner_product_kernel(x, x2, cfg) -> float:
    """sum_k alpha_k Tr(rho_k(x) rho_k(x')) from explicit RDMs."""
    ra, rb = _single_rdms(x, cfg), _single_rdms(x2, cfg)
    return float(
        sum(alpha * np.real(np.trace(a.matrix @ b.matrix)) for (_, alpha), a, b in zip(cfg.subsets, ra, rb))
    )


def distance_kernel(x, x2, cfg) -> float:
    """Distance-profile kernel from explicit RDMs."""
    profile = cfg.profile
    if not profile.is_distance:
        raise InvalidInputError("distance_kernel needs a gaussian-sq or laplace profile")
    ra, rb = _single_rdms(x, cfg), _single_rdms(x2, cfg)
    alphas = [alpha for _, alpha in cfg.subsets]
    if profile.kind == "laplace":
        # un-halved HS norm: ||rho - rho'||_HS = 2 ||(rho - rho')/2||_HS
        return float(sum(a * np.exp(-profile.gamma * 2 * sim.hs_norm(r1, r2)) for a, r1, r2 in zip(alphas, ra, rb)))
    dists = [sim.hs_distance_sq(r1, r2) for r1, r2 in zip(ra, rb)]
    if profile.block_sum:
        return float(sum(a * np.exp(-profile.gamma * d) for a, d in zip(alphas, dists)))
    return float(np.exp(-profile.gamma * sum(a * d for a, d in zip(alphas, dists))))


def gram_matrix(X, evaluator: KernelEvaluator, ids=None) -> np.ndarray:
    """Symmetric Gram matrix; representations are computed once per sample."""
    reps = evaluator.represent(X, ids=ids)
    G = evaluator.matrix(reps, reps)
    upper = np.triu(G)
    return upper + np.triu(G, 1).T


def kernel_discrepancy(q_approx, q_exact, subset=None) -> float:
    """d_Q: mean absolute deviation over all ordered pairs, diagonal included.

    Arguments are Gram matrices over the same subset, or callables that
    produce one when given ``subset``.
    """
    A = q_approx(subset) if callable(q_approx) else np.asarray(q_approx)
    B = q_exact(subset) if callable(q_exact) else np.asarray(q_exact)
    if A.shape != B.shape or A.size == 0:
        raise InvalidInputError("d_Q needs two nonempty Gram matrices of equal shape")
    return float(np.mean(np.abs(A - B)))


# ---------------------------------------------------------------------------
# Nystrom


@dataclass
class NystromRecord:
    landmark_index: np.ndarray
    eigenvalues: np.ndarray
    n_dropped: int
    cutoff: float


@dataclass
class NystromFeatures:
    """z(x) = diag(1/sqrt(lambda)) B^T (Q(x, xhat_1), ..., Q(x, xhat_D))."""

    evaluator: KernelEvaluator
    landmark_reps: list[np.ndarray]
    transform: np.ndarray  # (S, D)
    record: NystromRecord = field(repr=False)

    @property
    def n_features(self) -> int:
        return self.transform.shape[0]

    def from_reps(self, reps) -> np.ndarray:
        return self.evaluator.matrix(reps, self.landmark_reps) @ self.transform.T

    def __call__(self, X, ids=None) -> np.ndarray:
        return self.from_reps(self.evaluator.represent(X, ids=ids))


def nystrom_features(
    X_train,
    evaluator: KernelEvaluator,
    n_landmarks: int,
    rng,
    reps=None,
    rel_cutoff: float = 1e-10,
) -> tuple[NystromFeatures, NystromRecord]:
    """Landmark features from a uniform sample of the training set.

    ``reps`` may carry precomputed representations of X_train so that
    landmarks reuse the same (possibly noisy) Pauli vectors as the data.
    """
    rng = as_generator(rng)
    M = len(X_train) if reps is None else len(reps[0])
    if not 1 <= n_landmarks <= M:
        raise InvalidInputError(f"landmark count {n_landmarks} must lie in [1, {M}]")
    idx = np.sort(rng.choice(M, size=n_landmarks, replace=False))
    if reps is None:
        lreps = evaluator.represent(np.asarray(X_train)[idx], ids=idx)
    else:
        lreps = [r[idx] for r in reps]
    Qhat = evaluator.matrix(lreps, lreps)
    Qhat = (Qhat + Qhat.T) / 2
    lam, vecs = np.linalg.eigh(Qhat)
    cutoff = rel_cutoff * max(lam.max(), 0.0)
    keep = lam > cutoff
    if not np.any(keep):
        raise DegenerateKernelError("landmark Gram matrix has no eigenvalue above the cutoff")
    lam, vecs = lam[keep], vecs[:, keep]
    transform = (vecs / np.sqrt(lam)).T
    record = NystromRecord(idx, lam, int((~keep).sum()), cutoff)
    return NystromFeatures(evaluator, lreps, transform, record), record
