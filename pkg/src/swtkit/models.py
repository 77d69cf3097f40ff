"""Benchmark spin-chain Hamiltonians and unperturbed subspace bases.

The chain has two weakly attached end spins.  Spins are numbered from 0 in
code: the end spins are 0 and ``n - 1``, the inner chain is ``1 .. n - 2``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from itertools import product

import numpy as np

from .dense import eigh, window_gap
from .errors import AmbiguousWindowError, DegeneracyError, ModelError, ValidationError
from .pauli import PauliString, PauliSum
from .policy import DEFAULT_POLICY, NumericPolicy

MIN_SPINS = 4


@dataclass(frozen=True)
class ModelSpec:
    n_spins: int = 4
    epsilon: float = 1.0

    def __post_init__(self):
        if int(self.n_spins) != self.n_spins or self.n_spins < MIN_SPINS:
            raise ModelError(f"n_spins must be an integer >= {MIN_SPINS}, got {self.n_spins}")
        if not math.isfinite(self.epsilon):
            raise ModelError("epsilon must be finite")

    def h0(self) -> PauliSum:
        return heisenberg_h0(self.n_spins)

    def v(self) -> PauliSum:
        return heisenberg_v(self.n_spins)

    def hamiltonian(self) -> PauliSum:
        return self.h0() + self.epsilon * self.v()


def _check_n(n_spins: int) -> None:
    if int(n_spins) != n_spins or n_spins < MIN_SPINS:
        raise ModelError(f"the chain needs at least {MIN_SPINS} spins, got {n_spins}")


def _heisenberg_link(n: int, a: int, b: int, coupling: float) -> list[tuple[float, PauliString]]:
    return [(coupling, PauliString.from_sparse(n, {a: c, b: c})) for c in "XYZ"]


def heisenberg_chain(n_qubits: int, links, coupling: float) -> PauliSum:
    terms = []
    for a, b in links:
        terms += _heisenberg_link(n_qubits, a, b, coupling)
    return PauliSum(n_qubits, terms)


def heisenberg_h0(n_spins: int) -> PauliSum:
    """Inner chain ``2 sum (XX + YY + ZZ)`` on spins 1..n-2, end spins decoupled."""
    _check_n(n_spins)
    return heisenberg_chain(n_spins, [(i, i + 1) for i in range(1, n_spins - 2)], 2.0)


def heisenberg_v(n_spins: int) -> PauliSum:
    """Unit Heisenberg links from each end spin to its neighbour."""
    _check_n(n_spins)
    return heisenberg_chain(n_spins, [(0, 1), (n_spins - 2, n_spins - 1)], 1.0)


@dataclass
class SubspaceBasis:
    """Ordered orthonormal basis of an unperturbed subspace.

    ``g_relations[(i, j)]`` is a Pauli string G with ``|j> = G |i>``.
    """

    n_qubits: int
    states: np.ndarray  # shape (M, 2**n)
    labels: list[str] = field(default_factory=list)
    g_relations: dict[tuple[int, int], PauliString] = field(default_factory=dict)

    def __post_init__(self):
        self.states = np.atleast_2d(np.asarray(self.states, dtype=complex))
        if self.states.shape[1] != 1 << self.n_qubits:
            raise ValidationError("state length does not match the qubit count")
        if not self.labels:
            self.labels = [str(i) for i in range(len(self.states))]

    @property
    def size(self) -> int:
        return self.states.shape[0]

    @property
    def matrix(self) -> np.ndarray:
        """Basis states as columns."""
        return self.states.T

    def state(self, i: int) -> np.ndarray:
        return self.states[i]

    def relation(self, i: int, j: int) -> PauliString | None:
        return self.g_relations.get((i, j))

    def verify(self, policy: NumericPolicy = DEFAULT_POLICY) -> None:
        gram = self.states.conj() @ self.states.T
        if np.max(np.abs(gram - np.eye(self.size))) > policy.orthonormal_tol:
            raise ValidationError("basis states are not orthonormal")
        for (i, j), g in self.g_relations.items():
            mapped = g.to_dense(policy) @ self.states[i]
            if np.linalg.norm(mapped - self.states[j]) > policy.orthonormal_tol:
                raise ValidationError(f"G relation {g} does not map state {i} to {j}")

    def rephased(self, phases) -> "SubspaceBasis":
        """Multiply state i by ``exp(1j * phases[i])``; G relations are dropped."""
        factors = np.exp(1j * np.asarray(phases, dtype=float))[:, None]
        return SubspaceBasis(self.n_qubits, self.states * factors, list(self.labels))

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    def to_dict(self) -> dict:
        return {
            "n_qubits": self.n_qubits,
            "labels": self.labels,
            "states": [[[float(a.real), float(a.imag)] for a in s] for s in self.states],
            "g_relations": {f"{i},{j}": g.letters for (i, j), g in sorted(self.g_relations.items())},
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SubspaceBasis":
        states = np.array([[complex(re, im) for re, im in s] for s in data["states"]])
        rel = {}
        for key, letters in data.get("g_relations", {}).items():
            i, j = (int(p) for p in key.split(","))
            rel[(i, j)] = PauliString.from_label(letters)
        return cls(int(data["n_qubits"]), states, list(data.get("labels", [])), rel)


def _fix_phase(vec: np.ndarray) -> np.ndarray:
    """Make the first significant amplitude real and positive."""
    idx = int(np.argmax(np.abs(vec) > 1e-8))
    return vec * (abs(vec[idx]) / vec[idx])


def middle_chain_ground_state(n_spins: int, policy: NumericPolicy = DEFAULT_POLICY) -> tuple[float, np.ndarray]:
    """Ground energy and state of the inner chain (spins 1..n-2) on its own."""
    _check_n(n_spins)
    m = n_spins - 2
    h_mid = heisenberg_chain(m, [(i, i + 1) for i in range(m - 1)], 2.0)
    spec = eigh(h_mid.to_dense(policy), policy)
    vals = spec.eigenvalues
    if vals[1] - vals[0] < policy.degeneracy_tol:
        raise DegeneracyError("the inner chain has a degenerate ground state")
    return float(vals[0]), _fix_phase(spec.eigenvectors[:, 0])


def ground_basis(n_spins: int, policy: NumericPolicy = DEFAULT_POLICY) -> SubspaceBasis:
    """Four states ``|mu> (x) |GS> (x) |nu>`` ordered (mu, nu) = 00, 01, 10, 11.

    Flipping an end spin is a single X, so every pair of states is linked by
    one of X on spin 0, X on spin n-1, or both.
    """
    _, gs = middle_chain_ground_state(n_spins, policy)
    e = np.eye(2)
    pairs = list(product((0, 1), repeat=2))
    states = np.array([np.kron(np.kron(e[mu], gs), e[nu]) for mu, nu in pairs])
    relations = {}
    for i, (mu_i, nu_i) in enumerate(pairs):
        for j, (mu_j, nu_j) in enumerate(pairs):
            if i == j:
                continue
            flips = {}
            if mu_i != mu_j:
                flips[0] = "X"
            if nu_i != nu_j:
                flips[n_spins - 1] = "X"
            relations[(i, j)] = PauliString.from_sparse(n_spins, flips)
    labels = [f"{mu}{nu}" for mu, nu in pairs]
    return SubspaceBasis(n_spins, states, labels, relations)


def window_subspace(h0, k: int, m: int, policy: NumericPolicy = DEFAULT_POLICY) -> tuple[SubspaceBasis, float]:
    """Eigenvectors ``k .. k+m-1`` (0-based, ascending) of ``h0`` and the window gap."""
    h0 = h0.to_dense(policy) if hasattr(h0, "to_dense") else np.asarray(h0, dtype=complex)
    dim = h0.shape[0]
    n = int(round(math.log2(dim)))
    if 1 << n != dim:
        raise ValidationError("operator dimension is not a power of two")
    if k < 0 or m < 1 or k + m > dim:
        raise ValidationError(f"window k={k}, m={m} does not fit dimension {dim}")
    spec = eigh(h0, policy)
    vals = spec.eigenvalues
    if k > 0 and vals[k] - vals[k - 1] < policy.window_tol:
        raise AmbiguousWindowError("lower window edge splits a degenerate level")
    if k + m < dim and vals[k + m] - vals[k + m - 1] < policy.window_tol:
        raise AmbiguousWindowError("upper window edge splits a degenerate level")
    states = spec.eigenvectors[:, k:k + m].T.copy()
    basis = SubspaceBasis(n, states, [f"E{k + i}" for i in range(m)])
    return basis, window_gap(vals, k, m)
