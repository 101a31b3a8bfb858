"""Deterministic (DQF) and random (RQF) quantum features, plus sample-size bounds.

DQF block k is sqrt(alpha_k) * Tr(P_j rho_k) / sqrt(N_k) over all Pauli
strings P_j on the block. Inner products of DQF vectors reproduce the
inner-product kernel exactly. RQF block k is

    sqrt(alpha_k) * sqrt(2 / D_k) * [sin(W c_k); cos(W c_k)]

with rows of W drawn from the spectral law of the block's distance profile.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from . import sim
from .errors import InvalidInputError
from .kernels import KernelProfile
from .rng import as_generator, stream
from .sim import QubitSubset

MODES = ("exact", "sampled")


@dataclass(frozen=True)
class FeatureMapConfig:
    """Blocks (q_k, alpha_k), kernel profile, and measurement model."""

    subsets: tuple[tuple[QubitSubset, float], ...]
    profile: KernelProfile = field(default_factory=KernelProfile)
    mode: str = "exact"
    n_s: int = 500

    def __post_init__(self):
        subsets = tuple(
            (q if isinstance(q, QubitSubset) else QubitSubset(tuple(q)), float(a)) for q, a in self.subsets
        )
        if not subsets:
            raise InvalidInputError("at least one block is required")
        if any(not a > 0 for _, a in subsets):
            raise InvalidInputError("block weights must be positive")
        if self.mode not in MODES:
            raise InvalidInputError(f"mode must be one of {MODES}")
        if self.n_s < 1:
            raise InvalidInputError("n_s must be positive")
        object.__setattr__(self, "subsets", subsets)

    @classmethod
    def single(cls, *qubits: int, alpha: float = 1.0, **kw) -> "FeatureMapConfig":
        return cls(((QubitSubset(qubits), alpha),), **kw)

    @property
    def blocks(self) -> list[QubitSubset]:
        return [q for q, _ in self.subsets]

    @property
    def alphas(self) -> np.ndarray:
        return np.array([a for _, a in self.subsets])

    @property
    def sampled(self) -> bool:
        return self.mode == "sampled"

    def check_width(self, n_qubits: int) -> None:
        for q in self.blocks:
            q.check_width(n_qubits)

    @property
    def dqf_dim(self) -> int:
        return sum(q.dim**2 for q in self.blocks)


@dataclass(frozen=True)
class BlockLayout:
    kind: str  # "DQF" | "RQF"
    block: int
    length: int


@dataclass(frozen=True)
class FeatureVector:
    values: np.ndarray
    layout: tuple[BlockLayout, ...]

    def __post_init__(self):
        if sum(b.length for b in self.layout) != self.values.size:
            raise InvalidInputError("layout lengths do not add up to the vector length")
        if not np.all(np.isfinite(self.values)):
            raise InvalidInputError("feature vector has non-finite entries")

    def __matmul__(self, other: "FeatureVector") -> float:
        return float(self.values @ other.values)


@dataclass(frozen=True)
class OmegaSample:
    """D/2 frequency vectors of length dim = N_q**2 for one block."""

    vectors: np.ndarray
    profile: KernelProfile
    seed: int | None = None

    def __post_init__(self):
        if self.vectors.ndim != 2 or not np.all(np.isfinite(self.vectors)):
            raise InvalidInputError("frequencies must be a finite (D/2, dim) array")

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    @property
    def half_d(self) -> int:
        return self.vectors.shape[0]


# ---------------------------------------------------------------------------
# Pauli vectors


def _pauli_vectors_single(x, cfg: FeatureMapConfig, rng) -> list[np.ndarray]:
    x = np.asarray(x, dtype=float)
    cfg.check_width(x.size)
    cs = sim.block_pauli_vectors(x[None], cfg.blocks)
    if not cfg.sampled:
        return [c[0] for c in cs]
    rng = as_generator(rng)
    out = []
    for q, c in zip(cfg.blocks, cs):
        est = c[0].copy()
        est[1:] = sim.sample_pauli_expectations(c[0, 1:] * q.dim, cfg.n_s, rng) / q.dim
        out.append(est)
    return out


def pauli_vectors(X, cfg: FeatureMapConfig, seed: int = 0, ids=None, trial: int = 0) -> list[np.ndarray]:
    """Per-block Pauli vectors for every row of X (shot estimates in sampled mode).

    Shot noise for (sample id, block k) comes from
    ``stream(seed, trial, "shots", id, k)``.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    cfg.check_width(X.shape[1])
    cs = sim.block_pauli_vectors(X, cfg.blocks)
    if not cfg.sampled:
        return cs
    ids = np.arange(len(X)) if ids is None else np.asarray(ids)
    return sim.estimate_pauli_vectors(cs, cfg.n_s, seed, ids, trial, "shots")


# ---------------------------------------------------------------------------
# DQF


def dqf_from_pauli(cs: Sequence[np.ndarray], cfg: FeatureMapConfig) -> np.ndarray:
    blocks = [np.sqrt(a) * np.sqrt(q.dim) * c for (q, a), c in zip(cfg.subsets, cs)]
    return np.concatenate(blocks, axis=-1)


def _dqf_layout(cfg) -> tuple[BlockLayout, ...]:
    return tuple(BlockLayout("DQF", k, q.dim**2) for k, q in enumerate(cfg.blocks))


def dqf(x, cfg: FeatureMapConfig, rng=None) -> FeatureVector:
    cs = _pauli_vectors_single(x, cfg, rng)
    return FeatureVector(dqf_from_pauli(cs, cfg), _dqf_layout(cfg))


def dqf_matrix(X, cfg: FeatureMapConfig, seed: int = 0, ids=None, trial: int = 0) -> np.ndarray:
    """DQF rows for a dataset, shape (M, sum_k N_k**2)."""
    return dqf_from_pauli(pauli_vectors(X, cfg, seed, ids, trial), cfg)


def subsample_blocks(cfg: FeatureMapConfig, m: int, rng) -> FeatureMapConfig:
    """Draw m blocks with replacement, p(k) proportional to sqrt(alpha_k); weights reset to 1."""
    if m <= 0:
        raise InvalidInputError("number of sampled blocks must be positive")
    rng = as_generator(rng)
    p = np.sqrt(cfg.alphas)
    p /= p.sum()
    picks = rng.choice(len(p), size=m, replace=True, p=p)
    return replace(cfg, subsets=tuple((cfg.blocks[k], 1.0) for k in picks))


# ---------------------------------------------------------------------------
# RQF


def sample_omegas(profile: KernelProfile, dim: int, half_d: int, rng, seed: int | None = None) -> OmegaSample:
    """Frequencies whose characteristic function is the block kernel in c-space.

    gaussian-sq: exp(-gamma N/4 ||Delta||^2)  <-  omega ~ Normal(0, gamma N / 2 I)
    laplace:     exp(-gamma sqrt(N) ||Delta||) <- omega = gamma sqrt(N) g / |u|
    with N = sqrt(dim), g ~ Normal(0, I), u ~ Normal(0, 1).
    """
    if profile.kind not in ("gaussian-sq", "laplace"):
        raise InvalidInputError(f"profile {profile.kind!r} has no spectral sampler")
    if dim < 1 or half_d < 1:
        raise InvalidInputError("dim and half_d must be positive")
    rng = as_generator(rng)
    n_q = np.sqrt(dim)
    g = rng.standard_normal((half_d, dim))
    if profile.kind == "gaussian-sq":
        w = np.sqrt(profile.gamma * n_q / 2) * g
    else:
        u = rng.standard_normal((half_d, 1))
        w = profile.gamma * np.sqrt(n_q) * g / np.abs(u)
    return OmegaSample(w, profile, seed)


def split_frequencies(D: int, n_blocks: int) -> list[int]:
    """Spread D/2 frequencies over blocks as evenly as possible."""
    if D < 2 or D % 2:
        raise InvalidInputError("feature dimension D must be a positive even number")
    half = D // 2
    if half < n_blocks:
        raise InvalidInputError(f"D={D} gives fewer than one frequency per block")
    base, extra = divmod(half, n_blocks)
    return [base + (1 if k < extra else 0) for k in range(n_blocks)]


def sample_block_omegas(cfg: FeatureMapConfig, D: int, seed: int, trial: int = 0) -> list[OmegaSample]:
    """One OmegaSample per block drawn from stream (seed, trial, "omega", k)."""
    _check_rqf_profile(cfg)
    return [
        sample_omegas(cfg.profile, q.dim**2, h, stream(seed, trial, "omega", k), seed)
        for k, (q, h) in enumerate(zip(cfg.blocks, split_frequencies(D, len(cfg.blocks))))
    ]


def _check_rqf_profile(cfg: FeatureMapConfig) -> None:
    if not cfg.profile.is_distance:
        raise InvalidInputError("random features need a distance profile")
    if not cfg.profile.sums_blocks and len(cfg.subsets) > 1:
        raise InvalidInputError(
            "concatenated random features approximate a block-sum kernel; "
            "use block_sum=True for multi-block gaussian-sq"
        )


def rqf_from_pauli(cs: Sequence[np.ndarray], cfg: FeatureMapConfig, omegas: Sequence[OmegaSample]) -> np.ndarray:
    if len(omegas) != len(cfg.subsets):
        raise InvalidInputError("need one OmegaSample per block")
    parts = []
    for (q, a), c, om in zip(cfg.subsets, cs, omegas):
        if om.dim != q.dim**2:
            raise InvalidInputError(f"frequency dimension {om.dim} does not match block size {q.dim**2}")
        phase = c @ om.vectors.T
        scale = np.sqrt(a) * np.sqrt(1.0 / om.half_d)  # sqrt(2 / D_k), D_k = 2 half_d
        parts += [scale * np.sin(phase), scale * np.cos(phase)]
    return np.concatenate(parts, axis=-1)


def rqf(x, cfg: FeatureMapConfig, omegas: Sequence[OmegaSample], rng=None) -> FeatureVector:
    _check_rqf_profile(cfg)
    cs = _pauli_vectors_single(x, cfg, rng)
    layout = tuple(BlockLayout("RQF", k, 2 * om.half_d) for k, om in enumerate(omegas))
    return FeatureVector(rqf_from_pauli(cs, cfg, omegas), layout)


def rqf_matrix(X, cfg: FeatureMapConfig, omegas, seed: int = 0, ids=None, trial: int = 0) -> np.ndarray:
    _check_rqf_profile(cfg)
    return rqf_from_pauli(pauli_vectors(X, cfg, seed, ids, trial), cfg, omegas)


# ---------------------------------------------------------------------------
# sample-size bounds


def _check_eps_delta(epsilon, delta, M=1):
    if not 0 < epsilon < 1:
        raise InvalidInputError("epsilon must lie in (0, 1)")
    if not 0 < delta < 1:
        raise InvalidInputError("delta must lie in (0, 1)")
    if M < 1:
        raise InvalidInputError("M must be at least 1")


def required_shots_dqf(epsilon: float, delta: float, M: int, n_q: int) -> int:
    """ceil(18 N^2 / eps^2 * log(2M / delta))."""
    _check_eps_delta(epsilon, delta, M)
    return int(np.ceil(18 * n_q**2 / epsilon**2 * np.log(2 * M / delta)))


def required_shots_rqf(epsilon: float, delta: float, M: int, n_q: int, lipschitz: float) -> int:
    """ceil(8 N^2 L_f^2 / eps^2 * log(4M / delta))."""
    _check_eps_delta(epsilon, delta, M)
    if lipschitz < 0:
        raise InvalidInputError("Lipschitz constant must be nonnegative")
    return int(np.ceil(8 * n_q**2 * lipschitz**2 / epsilon**2 * np.log(4 * M / delta)))


def required_dimension_rqf(epsilon: float, delta: float, n_q: int, sigma_p: float) -> int:
    """ceil(32 (N^2 + 2) / eps^2 * log(2112 sigma_p^2 / (eps^2 delta)))."""
    _check_eps_delta(epsilon, delta)
    if not sigma_p > 0:
        raise InvalidInputError("sigma_p must be positive")
    return int(np.ceil(32 * (n_q**2 + 2) / epsilon**2 * np.log(2112 * sigma_p**2 / (epsilon**2 * delta))))


def sigma_p(profile: KernelProfile, n_q: int) -> float:
    """E[omega^T omega] for the gaussian-sq sampler: dim * gamma N / 2."""
    if profile.kind != "gaussian-sq":
        raise InvalidInputError("sigma_p is finite only for the gaussian-sq profile")
    return n_q**2 * profile.gamma * n_q / 2
