"""Exact simulation of the data-encoding circuit, reduced density matrices
and Pauli expectations.

Qubits are labelled 1..n, qubit 1 being the most significant bit of a basis
index. The encoding circuit is

    U(x) = U_ent  (RY(x_1) ⊗ ... ⊗ RY(x_n))  H^{⊗n}

where U_ent applies CNOT(j, j+1), CNOT(j, j+2), ..., CNOT(j, n) for
j = 1, ..., n in that order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from itertools import product
from typing import Sequence

import numpy as np

from .errors import InvalidInputError

PAULI_LETTERS = "IXYZ"

_I2 = np.eye(2, dtype=complex)
_X = np.array([[0, 1], [1, 0]], dtype=complex)
_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
_Z = np.array([[1, 0], [0, -1]], dtype=complex)
_PAULI_1Q = (_I2, _X, _Y, _Z)

HADAMARD = np.array([[1, 1], [1, -1]]) / np.sqrt(2)


def ry(theta: float) -> np.ndarray:
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -s], [s, c]])


# ---------------------------------------------------------------------------
# domain types


@dataclass(frozen=True)
class Statevector:
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes)
        n = int(np.log2(amps.size)) if amps.size else 0
        if amps.ndim != 1 or amps.size < 2 or 2**n != amps.size:
            raise InvalidInputError("amplitude vector length must be 2**n with n >= 1")
        if abs(np.linalg.norm(amps) - 1.0) > 1e-12:
            raise InvalidInputError("statevector is not normalised")
        object.__setattr__(self, "amplitudes", amps)

    @property
    def n_qubits(self) -> int:
        return int(np.log2(self.amplitudes.size))


@dataclass(frozen=True)
class QubitSubset:
    """Strictly increasing 1-based qubit labels."""

    indices: tuple[int, ...]

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices)
        if not idx:
            raise InvalidInputError("qubit subset must be nonempty")
        if any(b <= a for a, b in zip(idx, idx[1:])):
            raise InvalidInputError(f"qubit subset {idx} must be strictly increasing")
        if idx[0] < 1:
            raise InvalidInputError(f"qubit labels start at 1, got {idx}")
        object.__setattr__(self, "indices", idx)

    @classmethod
    def of(cls, *indices: int) -> "QubitSubset":
        return cls(tuple(indices))

    @property
    def size(self) -> int:
        return len(self.indices)

    @property
    def dim(self) -> int:
        """N_q = 2**m."""
        return 2 ** len(self.indices)

    def check_width(self, n_qubits: int) -> None:
        if self.indices[-1] > n_qubits:
            raise InvalidInputError(
                f"qubit subset {self.indices} exceeds circuit width {n_qubits}"
            )

    def __str__(self) -> str:
        return "{" + ",".join(map(str, self.indices)) + "}"


@dataclass(frozen=True)
class ReducedDensityMatrix:
    matrix: np.ndarray
    atol: float = field(default=1e-10, repr=False, compare=False)

    def __post_init__(self):
        rho = np.asarray(self.matrix, dtype=complex)
        d = rho.shape[0]
        if rho.ndim != 2 or rho.shape != (d, d) or d < 2 or d & (d - 1):
            raise InvalidInputError("density matrix must be square with power-of-two size")
        if np.max(np.abs(rho - rho.conj().T)) > self.atol:
            raise InvalidInputError("density matrix is not Hermitian")
        if abs(np.trace(rho) - 1.0) > self.atol:
            raise InvalidInputError("density matrix trace differs from 1")
        if np.linalg.eigvalsh(rho).min() < -self.atol:
            raise InvalidInputError("density matrix has a negative eigenvalue")
        object.__setattr__(self, "matrix", rho)

    @property
    def m_qubits(self) -> int:
        return int(np.log2(self.matrix.shape[0]))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def purity(self) -> float:
        return float(np.real(np.trace(self.matrix @ self.matrix)))


@dataclass(frozen=True)
class PauliString:
    letters: str

    def __post_init__(self):
        if not self.letters or any(ch not in PAULI_LETTERS for ch in self.letters):
            raise InvalidInputError(f"invalid Pauli string {self.letters!r}")

    @classmethod
    def from_index(cls, index: int, m_qubits: int) -> "PauliString":
        """Base-4 digits I=0, X=1, Y=2, Z=3; qubit 1 is the leading digit."""
        if not 0 <= index < 4**m_qubits:
            raise InvalidInputError(f"Pauli index {index} out of range for {m_qubits} qubits")
        digits = []
        for _ in range(m_qubits):
            index, r = divmod(index, 4)
            digits.append(PAULI_LETTERS[r])
        return cls("".join(reversed(digits)))

    @property
    def m_qubits(self) -> int:
        return len(self.letters)

    @property
    def index(self) -> int:
        j = 0
        for ch in self.letters:
            j = 4 * j + PAULI_LETTERS.index(ch)
        return j

    def matrix(self) -> np.ndarray:
        out = np.ones((1, 1), dtype=complex)
        for ch in self.letters:
            out = np.kron(out, _PAULI_1Q[PAULI_LETTERS.index(ch)])
        return out


@lru_cache(maxsize=None)
def pauli_basis(m_qubits: int) -> np.ndarray:
    """All 4**m Pauli matrices in canonical index order, shape (4**m, 2**m, 2**m)."""
    mats = []
    for digits in product(range(4), repeat=m_qubits):
        out = np.ones((1, 1), dtype=complex)
        for d in digits:
            out = np.kron(out, _PAULI_1Q[d])
        mats.append(out)
    basis = np.array(mats)
    basis.setflags(write=False)
    return basis


# ---------------------------------------------------------------------------
# circuit


def _check_angles(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size < 1:
        raise InvalidInputError("angle vector must be one-dimensional and nonempty")
    if not np.all(np.isfinite(x)):
        raise InvalidInputError("angles must be finite")
    return x


def apply_single_qubit(state: np.ndarray, gate: np.ndarray, qubit: int, n: int) -> np.ndarray:
    psi = state.reshape((2,) * n)
    psi = np.tensordot(gate, psi, axes=([1], [qubit - 1]))
    return np.moveaxis(psi, 0, qubit - 1).reshape(-1)


def apply_cnot(state: np.ndarray, control: int, target: int, n: int) -> np.ndarray:
    psi = state.reshape((2,) * n).copy()
    sl = [slice(None)] * n
    sl[control - 1] = 1
    sub = psi[tuple(sl)]
    # target axis index shifts down by one when control precedes it
    t_axis = target - 1 - (1 if control < target else 0)
    psi[tuple(sl)] = np.flip(sub, axis=t_axis)
    return psi.reshape(-1)


def entangler_pairs(n: int) -> list[tuple[int, int]]:
    """CNOT (control, target) pairs in application order."""
    return [(j, k) for j in range(1, n + 1) for k in range(j + 1, n + 1)]


def encode(x: Sequence[float]) -> Statevector:
    """Gate-by-gate application of U(x) to |0...0>."""
    x = _check_angles(x)
    n = x.size
    state = np.zeros(2**n)
    state[0] = 1.0
    for q in range(1, n + 1):
        state = apply_single_qubit(state, HADAMARD, q, n)
    for q in range(1, n + 1):
        state = apply_single_qubit(state, ry(x[q - 1]), q, n)
    for c, t in entangler_pairs(n):
        state = apply_cnot(state, c, t, n)
    return Statevector(state)


@lru_cache(maxsize=None)
def _entangler_source_index(n: int) -> np.ndarray:
    """Gather index g with (U_ent psi)[i] = psi[g[i]]."""
    idx = np.arange(2**n)
    bits = (idx[:, None] >> (n - 1 - np.arange(n))) & 1
    for c, t in entangler_pairs(n):
        bits[:, t - 1] ^= bits[:, c - 1]
    dest = bits @ (1 << (n - 1 - np.arange(n)))
    src = np.empty_like(idx)
    src[dest] = idx
    src.setflags(write=False)
    return src


def encode_batch(X) -> np.ndarray:
    """Vectorised U(x)|0> for each row of X; returns real array (M, 2**n)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if not np.all(np.isfinite(X)):
        raise InvalidInputError("angles must be finite")
    M, n = X.shape
    c, s = np.cos(X / 2), np.sin(X / 2)
    # RY(x) H |0> = ((c - s), (c + s)) / sqrt(2)
    local = np.stack([c - s, c + s], axis=-1) / np.sqrt(2)
    state = local[:, 0, :]
    for q in range(1, n):
        state = (state[:, :, None] * local[:, q, None, :]).reshape(M, -1)
    return state[:, _entangler_source_index(n)]


def circuit_unitary(x: Sequence[float]) -> np.ndarray:
    """Dense 2**n x 2**n matrix of U(x)."""
    x = _check_angles(x)
    local = np.ones((1, 1))
    for theta in x:
        local = np.kron(local, ry(theta) @ HADAMARD)
    return local[_entangler_source_index(x.size), :]


# ---------------------------------------------------------------------------
# reduced states and expectations


def split_subsystem(states: np.ndarray, keep: tuple[int, ...], n: int) -> np.ndarray:
    """Reshape (M, 2**n) amplitudes to (M, 2**m, 2**(n-m)) with the kept qubits as rows."""
    M = states.shape[0]
    m = len(keep)
    psi = states.reshape((M,) + (2,) * n)
    rest = [q for q in range(1, n + 1) if q not in keep]
    axes = [0] + list(keep) + rest
    return np.transpose(psi, axes).reshape(M, 2**m, 2 ** (n - m))


def _partial_trace_batch(states: np.ndarray, keep: tuple[int, ...], n: int) -> np.ndarray:
    A = split_subsystem(states, keep, n)
    return A @ np.conj(np.swapaxes(A, 1, 2))


def reduced_density_matrix(state: Statevector, q: QubitSubset) -> ReducedDensityMatrix:
    n = state.n_qubits
    q.check_width(n)
    rho = _partial_trace_batch(state.amplitudes[None, :], q.indices, n)[0]
    return ReducedDensityMatrix(rho)


def reduced_density_matrices(states: np.ndarray, q: QubitSubset) -> np.ndarray:
    """Batched partial trace, (M, 2**n) -> (M, 2**m, 2**m); no validation."""
    states = np.atleast_2d(states)
    n = int(np.log2(states.shape[1]))
    q.check_width(n)
    return _partial_trace_batch(states, q.indices, n)


def pauli_expectation(rdm: ReducedDensityMatrix, p: PauliString) -> float:
    if p.m_qubits != rdm.m_qubits:
        raise InvalidInputError(
            f"Pauli string on {p.m_qubits} qubits applied to {rdm.m_qubits}-qubit state"
        )
    val = np.trace(p.matrix() @ rdm.matrix)
    assert abs(val.imag) < 1e-10, "expectation of a Hermitian observable must be real"
    return float(val.real)


def pauli_expectations(rhos: np.ndarray) -> np.ndarray:
    """Tr(P_j rho) for every canonical Pauli j; (M, d, d) -> (M, d**2) real."""
    rhos = np.asarray(rhos)
    m = int(np.log2(rhos.shape[-1]))
    vals = np.einsum("pij,mji->mp", pauli_basis(m), rhos)
    return vals.real


def pauli_vector(rdm: ReducedDensityMatrix) -> np.ndarray:
    """c_j = Tr(P_j rho) / N_q in canonical order."""
    return pauli_expectations(rdm.matrix[None])[0] / rdm.dim


def from_pauli_vector(c: np.ndarray) -> np.ndarray:
    """Inverse of pauli_vector: sum_j c_j P_j."""
    m = int(round(np.log(len(c)) / np.log(4)))
    return np.tensordot(c, pauli_basis(m), axes=1)


def hs_distance_sq(a: ReducedDensityMatrix, b: ReducedDensityMatrix) -> float:
    """Squared Hilbert-Schmidt distance of the half-difference, (1/4) Tr((a - b)^2)."""
    if a.dim != b.dim:
        raise InvalidInputError("density matrices have different dimensions")
    diff = a.matrix - b.matrix
    return float(np.real(np.trace(diff @ diff))) / 4


def hs_norm(a: ReducedDensityMatrix, b: ReducedDensityMatrix) -> float:
    """|| (a - b) / 2 ||_HS."""
    return float(np.sqrt(max(hs_distance_sq(a, b), 0.0)))


# ---------------------------------------------------------------------------
# shot noise


def sample_pauli_expectation(mu: float, n_s: int, rng: np.random.Generator) -> float:
    """Mean of n_s simulated +-1 outcomes of a Pauli measurement with exact mean mu."""
    return float(sample_pauli_expectations(np.array([mu]), n_s, rng)[0])


def sample_pauli_expectations(mus, n_s: int, rng: np.random.Generator) -> np.ndarray:
    mus = np.asarray(mus, dtype=float)
    if n_s < 1:
        raise InvalidInputError("n_s must be a positive integer")
    if np.any(np.abs(mus) > 1 + 1e-10):
        raise InvalidInputError("Pauli expectation must lie in [-1, 1]")
    p = np.clip((1 + mus) / 2, 0.0, 1.0)
    k = rng.binomial(n_s, p)
    return 2 * k / n_s - 1


# ---------------------------------------------------------------------------
# batched pipeline helpers


def block_pauli_vectors(X, subsets: Sequence[QubitSubset], chunk: int = 2048) -> list[np.ndarray]:
    """Exact Pauli vectors c_k(x) for every row of X and every subset.

    Returns one (M, N_k**2) array per subset. States are simulated once per
    row and shared across subsets.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    M, n = X.shape
    for q in subsets:
        q.check_width(n)
    out = [np.empty((M, q.dim**2)) for q in subsets]
    for start in range(0, M, chunk):
        states = encode_batch(X[start : start + chunk])
        for k, q in enumerate(subsets):
            rhos = _partial_trace_batch(states, q.indices, n)
            out[k][start : start + chunk] = pauli_expectations(rhos) / q.dim
    return out


def estimate_pauli_vectors(cs: Sequence[np.ndarray], n_s: int, seed: int, ids, *tags) -> list[np.ndarray]:
    """Shot-noise estimates of Pauli vectors.

    Each (sample id, block) pair draws from its own stream
    ``stream(seed, *tags, id, k)``. The identity entry stays exact.
    """
    from .rng import stream

    ids = np.asarray(ids)
    out = []
    for k, c in enumerate(cs):
        dim = int(round(np.sqrt(c.shape[1])))
        est = np.empty_like(c)
        est[:, 0] = c[:, 0]
        mus = c[:, 1:] * dim
        for i, sid in enumerate(ids):
            rng = stream(seed, *tags, int(sid), k)
            est[i, 1:] = sample_pauli_expectations(mus[i], n_s, rng) / dim
        out.append(est)
    return out
