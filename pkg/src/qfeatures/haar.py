"""Haar moments of reduced-observable matrix elements and the RO kernels.

For Paulis P_j, P_l on n qubits and a reference state rho = |psi><psi|,

    O_{jl}^{ab}(U) = <a| Tr_{!=q}(U P_j U^+ rho U P_l U^+) |b>
                   = sum_k phi_j(a, k) conj(phi_l(b, k)),   phi_j = U P_j U^+ |psi>,

with the amplitudes of phi split into (kept qubits q, traced qubits).
"""

from __future__ import annotations

import csv
from dataclasses import astuple, dataclass
from itertools import permutations
from pathlib import Path
from typing import Sequence

import numpy as np

from . import sim
from .errors import InvalidInputError
from .rng import as_generator
from .sim import PauliString, QubitSubset

MAX_QUBITS = 6


def sample_haar_unitary(n: int, rng, size: int | None = None) -> np.ndarray:
    """Haar-random unitaries on n qubits: QR of a complex Ginibre matrix, phases fixed by diag(R)."""
    if not 1 <= n <= MAX_QUBITS:
        raise InvalidInputError(f"n must lie in 1..{MAX_QUBITS}")
    rng = as_generator(rng)
    d = 2**n
    shape = (1 if size is None else size, d, d)
    G = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)
    Q, R = np.linalg.qr(G)
    diag = np.diagonal(R, axis1=1, axis2=2)
    Q = Q * (diag / np.abs(diag))[:, None, :]
    return Q[0] if size is None else Q


# ---------------------------------------------------------------------------
# Weingarten values


def _cycle_count(perm: Sequence[int]) -> int:
    seen, cycles = set(), 0
    for start in range(len(perm)):
        if start not in seen:
            cycles += 1
            i = start
            while i not in seen:
                seen.add(i)
                i = perm[i]
    return cycles


def weingarten_identity_bruteforce(d: int, k: int = 4) -> float:
    """Wg(identity) on S_k by inverting the Gram matrix G(s, t) = d ** cycles(s^-1 t)."""
    if d < k:
        raise InvalidInputError("the Gram matrix is singular for d < k")
    perms = list(permutations(range(k)))
    inv = {p: tuple(np.argsort(p)) for p in perms}
    G = np.array([[float(d) ** _cycle_count([inv[s][t[i]] for i in range(k)]) for t in perms] for s in perms])
    ident = perms.index(tuple(range(k)))
    return float(np.linalg.inv(G)[ident, ident])


def weingarten_identity_s4(d: int) -> float:
    """(d^4 - 8 d^2 + 6) / (d^2 (d^2 - 1)(d^2 - 4)(d^2 - 9))."""
    d2 = float(d) ** 2
    return (d2**2 - 8 * d2 + 6) / (d2 * (d2 - 1) * (d2 - 4) * (d2 - 9))


def misprinted_wg_closed_form(d: int) -> float:
    """Variant (d^4 - d^2 + 6) / (d^8 - 14 d^6 + 49 d^4 - 36 d^2), kept only for comparison.

    Its numerator disagrees with the brute-force value; see weingarten_identity_s4.
    """
    d2 = float(d) ** 2
    return (d2**2 - d2 + 6) / (d2**4 - 14 * d2**3 + 49 * d2**2 - 36 * d2)


def first_moment_prediction(n: int, m: int) -> float:
    """Leading diagonal first moment 2^(2n-m) / (2^(2n) - 1)."""
    return 2.0 ** (2 * n - m) / (4.0**n - 1)


def first_moment_exact(n: int, m: int, a: int) -> float:
    """Exact E[O_jj^aa] for rho = |0><0|: the prediction, minus 1/(4^n - 1) when a = 0."""
    return first_moment_prediction(n, m) - (1.0 / (4.0**n - 1) if a == 0 else 0.0)


def second_moment_prediction(n: int, m: int) -> float:
    """Leading diagonal second moment 2^(4n-2m) Wg([1,1,1,1])."""
    return 2.0 ** (4 * n - 2 * m) * weingarten_identity_s4(2**n)


# ---------------------------------------------------------------------------
# reduced observables


@dataclass(frozen=True)
class ReducedObservableSpec:
    """n qubits, kept subset q, non-identity Pauli indices over n qubits, weights gamma_j.

    The reference state is |0...0> unless ``psi`` is given.
    """

    n: int
    q: QubitSubset
    paulis: tuple[int, ...]
    gammas: tuple[float, ...] | None = None
    psi: np.ndarray | None = None

    def __post_init__(self):
        if not 1 <= self.n <= MAX_QUBITS:
            raise InvalidInputError(f"n must lie in 1..{MAX_QUBITS}")
        q = self.q if isinstance(self.q, QubitSubset) else QubitSubset(tuple(self.q))
        q.check_width(self.n)
        object.__setattr__(self, "q", q)
        paulis = tuple(int(j) for j in self.paulis)
        if not paulis or any(not 0 < j < 4**self.n for j in paulis):
            raise InvalidInputError("Pauli indices must be non-identity strings on n qubits")
        object.__setattr__(self, "paulis", paulis)
        gammas = tuple(1.0 for _ in paulis) if self.gammas is None else tuple(map(float, self.gammas))
        if len(gammas) != len(paulis):
            raise InvalidInputError("need one coefficient per Pauli")
        object.__setattr__(self, "gammas", gammas)

    @property
    def m(self) -> int:
        return self.q.size

    def reference(self) -> np.ndarray:
        if self.psi is not None:
            return np.asarray(self.psi, dtype=complex)
        e0 = np.zeros(2**self.n, dtype=complex)
        e0[0] = 1.0
        return e0

    def pauli_matrices(self) -> np.ndarray:
        return np.array([PauliString.from_index(j, self.n).matrix() for j in self.paulis])


def _phis(U: np.ndarray, spec: ReducedObservableSpec) -> np.ndarray:
    """phi_j = U P_j U^+ psi for a batch of unitaries, shape (R, J, 2^n)."""
    U = U[None] if U.ndim == 2 else U
    v = np.einsum("rji,j->ri", U.conj(), spec.reference())  # U^+ psi
    Pv = np.einsum("pij,rj->rpi", spec.pauli_matrices(), v)
    return np.einsum("rij,rpj->rpi", U, Pv)


def observable_blocks(U: np.ndarray, spec: ReducedObservableSpec) -> np.ndarray:
    """O_{jl}^{ab} for all j, l, a, b; shape (R, J, J, 2^m, 2^m)."""
    phi = _phis(U, spec)
    R, J, _ = phi.shape
    A = sim.split_subsystem(phi.reshape(R * J, -1), spec.q.indices, spec.n).reshape(R, J, 2**spec.m, -1)
    return np.einsum("rjak,rlbk->rjlab", A, A.conj())


def reduced_observable_element(U, spec: ReducedObservableSpec, a: int, b: int, j: int = 0, l: int = 0) -> complex:
    """O_{jl}^{ab}(U), with j, l positions in ``spec.paulis``."""
    d = 2**spec.m
    if not (0 <= a < d and 0 <= b < d):
        raise InvalidInputError(f"basis labels must lie in 0..{d - 1}")
    if not (0 <= j < len(spec.paulis) and 0 <= l < len(spec.paulis)):
        raise InvalidInputError("Pauli positions out of range")
    return complex(observable_blocks(np.asarray(U), spec)[0, j, l, a, b])


# ---------------------------------------------------------------------------
# moment report


@dataclass(frozen=True)
class MomentRow:
    n: int
    m: int
    j: int
    l: int
    a: int
    b: int
    R: int
    moment1_est: float
    moment1_se: float
    moment1_pred: float
    moment2_est: float
    moment2_se: float
    moment2_pred: float

    @property
    def diagonal(self) -> bool:
        return self.j == self.l and self.a == self.b


REPORT_COLUMNS = ("n", "m", "j", "ℓ", "a", "b", "R", "moment1_est", "moment1_se", "moment1_pred", "moment2_est", "moment2_se", "moment2_pred")


def haar_moment_report(spec: ReducedObservableSpec, R: int, rng, chunk: int = 1000) -> list[MomentRow]:
    """Monte-Carlo first and second moments of O_{jl}^{ab} over Haar U.

    One row per ordered Pauli pair and (a, b). moment1 is |mean O| with the
    complex standard error; moment2 is mean |O|^2.
    """
    if R < 1000:
        raise InvalidInputError("a moment report needs R >= 1000 draws")
    rng = as_generator(rng)
    J, d = len(spec.paulis), 2**spec.m
    s1 = np.zeros((J, J, d, d), dtype=complex)
    s2 = np.zeros((J, J, d, d))  # sum |O|^2
    s4 = np.zeros((J, J, d, d))  # sum |O|^4
    done = 0
    while done < R:
        k = min(chunk, R - done)
        O = observable_blocks(sample_haar_unitary(spec.n, rng, size=k), spec)
        a2 = np.abs(O) ** 2
        s1 += O.sum(axis=0)
        s2 += a2.sum(axis=0)
        s4 += (a2**2).sum(axis=0)
        done += k
    mean1 = s1 / R
    mean2 = s2 / R
    var1 = np.maximum(mean2 - np.abs(mean1) ** 2, 0) * R / (R - 1)
    var2 = np.maximum(s4 / R - mean2**2, 0) * R / (R - 1)
    p1, p2 = first_moment_prediction(spec.n, spec.m), second_moment_prediction(spec.n, spec.m)
    rows = []
    for jj in range(J):
        for ll in range(J):
            for a in range(d):
                for b in range(d):
                    diag = jj == ll and a == b
                    rows.append(
                        MomentRow(
                            spec.n, spec.m, spec.paulis[jj], spec.paulis[ll], a, b, R,
                            float(abs(mean1[jj, ll, a, b])), float(np.sqrt(var1[jj, ll, a, b] / R)), p1 if diag else 0.0,
                            float(mean2[jj, ll, a, b]), float(np.sqrt(var2[jj, ll, a, b] / R)), p2 if diag else 0.0,
                        )
                    )
    return rows


def write_report_csv(rows: Sequence[MomentRow], path) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(REPORT_COLUMNS)
        for r in rows:
            w.writerow([v if isinstance(v, int) else repr(v) for v in astuple(r)])


# ---------------------------------------------------------------------------
# RO kernels


def reduced_observables(U, spec: ReducedObservableSpec) -> tuple[np.ndarray, np.ndarray]:
    """(A~, A): the full reduced observable and its j = l part, each 2^m x 2^m."""
    O = observable_blocks(np.asarray(U), spec)[0]
    g = np.asarray(spec.gammas)
    full = np.einsum("j,l,jlab->ab", g, g, O)
    diag = np.einsum("j,jjab->ab", g**2, O)
    return full, diag


def ro_rdms(U, spec: ReducedObservableSpec) -> np.ndarray:
    """RDMs of rho_j = U P_j U^+ rho U P_j U^+ on q, shape (J, 2^m, 2^m)."""
    O = observable_blocks(np.asarray(U), spec)[0]
    return np.array([O[j, j] for j in range(len(spec.paulis))])


@dataclass(frozen=True)
class RoKernelPair:
    q_ro: float
    q_ro_reduced: float

    @property
    def difference(self) -> float:
        return self.q_ro - self.q_ro_reduced


def ro_kernel_pair(x, x2, spec: ReducedObservableSpec, unitaries=None) -> RoKernelPair:
    """Q^RO = Tr(A~(x) A~(x')) and its j = l reduction Tr(A(x) A(x')).

    U(x) is the encoding circuit unless ``unitaries = (U, U')`` is given.
    """
    if unitaries is None:
        x, x2 = np.asarray(x, dtype=float), np.asarray(x2, dtype=float)
        if x.size != spec.n or x2.size != spec.n:
            raise InvalidInputError("angle vectors must have length n")
        unitaries = (sim.circuit_unitary(x), sim.circuit_unitary(x2))
    Ua, Ub = unitaries
    fa, da = reduced_observables(Ua, spec)
    fb, db = reduced_observables(Ub, spec)
    return RoKernelPair(float(np.real(np.trace(fa @ fb))), float(np.real(np.trace(da @ db))))
