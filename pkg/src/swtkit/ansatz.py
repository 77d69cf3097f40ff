"""Parameterized products of Pauli exponentials approximating the SWT unitary.

``factors`` are stored in application order: ``factors[0]`` acts on the
state first, so ``U(theta) = F[-1] ... F[1] F[0]`` with
``F[k] = exp(i * generator * scale * theta[parameter_index])``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .errors import ValidationError
from .pauli import PauliString, PauliSum, hermitian_commutator
from .statevector import (
    StateVector,
    entangling_pairs,
    pauli_rotation_gates,
    pauli_rotation_vec,
    two_qubit_error_vec,
)


@dataclass(frozen=True)
class Factor:
    generator: PauliString
    parameter_index: int
    scale: float = 0.5


@dataclass(frozen=True)
class ParameterizedCircuit:
    n_qubits: int
    factors: tuple[Factor, ...]
    n_parameters: int

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(self.factors))
        used = set()
        for f in self.factors:
            if f.generator.n_qubits != self.n_qubits:
                raise ValidationError("factor acts on the wrong number of qubits")
            if not 0 <= f.parameter_index < self.n_parameters:
                raise ValidationError(f"parameter index {f.parameter_index} out of range")
            used.add(f.parameter_index)
        if used != set(range(self.n_parameters)):
            raise ValidationError("every parameter must drive at least one factor")

    @property
    def is_trivial(self) -> bool:
        return not self.factors

    def check_theta(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float).reshape(-1)
        if theta.shape[0] != self.n_parameters:
            raise ValidationError(f"expected {self.n_parameters} parameters, got {theta.shape[0]}")
        return theta

    def angles(self, theta) -> list[float]:
        """Rotation angle of each factor in the ``exp(i sigma angle / 2)`` convention."""
        theta = self.check_theta(theta)
        return [2.0 * f.scale * theta[f.parameter_index] for f in self.factors]

    def unitary(self, theta) -> np.ndarray:
        """Dense ``U(theta)``; each factor is ``cos(a/2) I + i sin(a/2) sigma``."""
        dim = 1 << self.n_qubits
        u = np.eye(dim, dtype=complex)
        for f, angle in zip(self.factors, self.angles(theta)):
            sigma = f.generator.to_dense()
            u = (np.cos(angle / 2) * np.eye(dim) + 1j * np.sin(angle / 2) * sigma) @ u
        return u

    @property
    def n_entangling_steps(self) -> int:
        return sum(len(entangling_pairs(f.generator)) for f in self.factors)

    def to_text(self) -> str:
        lines = [f"{f.generator.letters} {f.parameter_index} {float(f.scale)!r}" for f in self.factors]
        return "\n".join(lines) + ("\n" if lines else "")

    @classmethod
    def from_text(cls, text: str, n_qubits: int | None = None) -> "ParameterizedCircuit":
        factors = []
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 3:
                raise ValidationError(f"line {lineno}: expected '<letters> <parameter_index> <scale>'")
            factors.append(Factor(PauliString.from_label(parts[0]), int(parts[1]), float(parts[2])))
        if n_qubits is None:
            if not factors:
                raise ValidationError("empty circuit text needs an explicit qubit count")
            n_qubits = factors[0].generator.n_qubits
        n_params = 1 + max((f.parameter_index for f in factors), default=-1)
        return cls(n_qubits, tuple(factors), n_params)


def ansatz_from_commutator(h0: PauliSum, v: PauliSum) -> ParameterizedCircuit:
    """One independently parameterized factor per string of ``-i [H0, V]``.

    Commuting inputs give the empty circuit, i.e. ``U = I``.
    """
    comm = hermitian_commutator(h0, v)
    factors = tuple(Factor(s, k, 0.5) for k, s in enumerate(comm.strings))
    return ParameterizedCircuit(h0.n_qubits, factors, len(factors))


# (generator, parameter) pairs in application order; mirror-image factors share a parameter
_PRESET_N4 = (
    ("XYZI", 0),
    ("YXZI", 1),
    ("ZXYI", 2),
    ("IYXZ", 2),
    ("IZXY", 1),
    ("IZYX", 0),
)


def preset_n4_ansatz() -> ParameterizedCircuit:
    """Six weight-3 factors with three shared parameters for the four-spin chain."""
    factors = tuple(Factor(PauliString.from_label(s), k, 0.5) for s, k in _PRESET_N4)
    return ParameterizedCircuit(4, factors, 3)


def apply_ansatz_vec(vec: np.ndarray, circuit: ParameterizedCircuit, theta, adjoint: bool = False) -> np.ndarray:
    order = list(zip(circuit.factors, circuit.angles(theta)))
    if adjoint:
        order = [(f, -a) for f, a in reversed(order)]
    for f, angle in order:
        vec = pauli_rotation_vec(vec, f.generator, angle)
    return vec


def apply_ansatz(state: StateVector, circuit: ParameterizedCircuit, theta, adjoint: bool = False) -> StateVector:
    """``U(theta)|psi>`` or, with ``adjoint``, ``U(theta)^dag |psi>``."""
    if state.n_qubits != circuit.n_qubits:
        raise ValidationError("circuit and state sizes differ")
    return StateVector(state.n_qubits, apply_ansatz_vec(state.amplitudes, circuit, theta, adjoint),
                       state.normalized)


def noisy_segments(circuit: "ParameterizedCircuit", theta, adjoint: bool = False):
    """Dense gate products between consecutive entangling steps, plus each step's qubit pair."""
    theta = tuple(float(t) for t in circuit.check_theta(theta))
    return _noisy_segments(circuit, theta, bool(adjoint))


@lru_cache(maxsize=64)
def _noisy_segments(circuit: ParameterizedCircuit, theta: tuple[float, ...], adjoint: bool):
    n = circuit.n_qubits
    order = list(zip(circuit.factors, circuit.angles(theta)))
    if adjoint:
        order = [(f, -a) for f, a in reversed(order)]
    eye = np.eye(1 << n, dtype=complex)
    segments, pairs = [], []

    def cut(m, control, target):
        segments.append(m)
        pairs.append((control, target))
        return eye.copy()

    current = eye.copy()
    for f, angle in order:
        current = pauli_rotation_gates(current, f.generator, angle, cut)
    segments.append(current)
    return tuple(segments), tuple(pairs)


def apply_ansatz_with_errors(vec: np.ndarray, circuit: ParameterizedCircuit, theta, adjoint: bool,
                             errors: dict[int, int]) -> np.ndarray:
    """Gate-level ansatz with two-qubit Pauli errors after chosen entangling steps.

    Entangling steps are numbered in execution order across the whole
    circuit; ``errors[step]`` indexes ``TWO_QUBIT_ERRORS``.
    """
    segments, pairs = noisy_segments(circuit, theta, adjoint)
    n = circuit.n_qubits
    for step, (control, target) in enumerate(pairs):
        vec = segments[step] @ vec
        kind = errors.get(step)
        if kind is not None:
            vec = two_qubit_error_vec(vec, n, control, target, kind)
    return segments[-1] @ vec


def prune_ansatz(circuit: ParameterizedCircuit, cost: Callable[[np.ndarray], float],
                 threshold: float = 1e-3, step: float = 1e-4) -> ParameterizedCircuit:
    """Extension: drop parameters whose cost gradient at theta = 0 is below ``threshold``.

    The gradient is a central finite difference.  Surviving parameters are
    renumbered in their original order.
    """
    keep = []
    zero = np.zeros(circuit.n_parameters)
    for k in range(circuit.n_parameters):
        e = np.zeros_like(zero)
        e[k] = step
        grad = (cost(zero + e) - cost(zero - e)) / (2 * step)
        if abs(grad) >= threshold:
            keep.append(k)
    remap = {old: new for new, old in enumerate(keep)}
    factors = tuple(Factor(f.generator, remap[f.parameter_index], f.scale)
                    for f in circuit.factors if f.parameter_index in remap)
    return ParameterizedCircuit(circuit.n_qubits, factors, len(keep))


def circuit_or_unitary_states(basis_cols: np.ndarray, circuit, theta: Sequence[float] | None) -> np.ndarray:
    """Columns ``U^dag |phi_i>`` for a circuit or an injected dense unitary."""
    if isinstance(circuit, ParameterizedCircuit):
        return np.stack([apply_ansatz_vec(c, circuit, theta, adjoint=True) for c in basis_cols.T], axis=1)
    u = np.asarray(circuit, dtype=complex)
    return u.conj().T @ basis_cols
