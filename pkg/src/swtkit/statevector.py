"""Deterministic n-qubit state-vector simulator.

Qubit 0 is the most significant bit of the amplitude index.  Gates return
new states; nothing is mutated in place.  Sampling uses Philox streams
derived from ``ShotPlan.rng_seed`` so runs reproduce bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .errors import ContractError, DimensionError, ResourceError, ValidationError
from .pauli import PauliString, PauliSum
from .policy import DEFAULT_POLICY

SQRT_HALF = 1 / math.sqrt(2)
# normalized g-superposition = sqrt(2) * (I +- G)/2 |phi>
G_SUPERPOSITION_NORM = SQRT_HALF


@dataclass(frozen=True, eq=False)
class StateVector:
    n_qubits: int
    amplitudes: np.ndarray
    normalized: bool = True

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if amps.shape[0] != 1 << self.n_qubits:
            raise DimensionError(f"{amps.shape[0]} amplitudes for {self.n_qubits} qubits")
        if self.n_qubits > DEFAULT_POLICY.max_state_qubits:
            raise ResourceError(f"{self.n_qubits} qubits exceeds the simulator cap")
        if self.normalized and abs(np.linalg.norm(amps) - 1) > 1e-10:
            raise ContractError("state is not normalized")
        object.__setattr__(self, "amplitudes", amps)

    @property
    def dim(self) -> int:
        return 1 << self.n_qubits

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def renormalized(self) -> "StateVector":
        return StateVector(self.n_qubits, self.amplitudes / self.norm)


def _wrap(vec: np.ndarray, like: StateVector, normalized: bool | None = None) -> StateVector:
    return StateVector(like.n_qubits, vec, like.normalized if normalized is None else normalized)


def _check(state: StateVector, n: int) -> None:
    if state.n_qubits != n:
        raise DimensionError(f"state has {state.n_qubits} qubits, operator has {n}")


def computational_state(bits: str | int, n_qubits: int | None = None) -> StateVector:
    if isinstance(bits, str):
        if any(b not in "01" for b in bits):
            raise ValidationError(f"invalid bitstring {bits!r}")
        n_qubits = len(bits) if n_qubits is None else n_qubits
        index = int(bits, 2)
    else:
        if n_qubits is None:
            raise ValidationError("integer basis index needs n_qubits")
        index = bits
    vec = np.zeros(1 << n_qubits, dtype=complex)
    vec[index] = 1.0
    return StateVector(n_qubits, vec)


def basis_member(basis, i: int) -> StateVector:
    return StateVector(basis.n_qubits, basis.state(i))


def g_superposition(basis, i: int, g: PauliString, sign: int = 1) -> StateVector:
    """``(|phi_i> + sign * G|phi_i>) / sqrt(2)`` for a recorded G relation."""
    if sign not in (1, -1):
        raise ValidationError("sign must be +1 or -1")
    if g not in {rel for (a, _), rel in basis.g_relations.items() if a == i}:
        raise ValidationError(f"{g} is not a recorded G relation of basis state {i}")
    phi = basis.state(i)
    vec = (phi + sign * apply_pauli_vec(phi, g)) * SQRT_HALF
    return StateVector(basis.n_qubits, vec)


def prepare_state(bits: str | None = None, *, basis=None, index: int | None = None,
                  g: PauliString | None = None, sign: int = 1) -> StateVector:
    """Prepare a bitstring, a basis member, or a G superposition of a basis member."""
    if bits is not None:
        return computational_state(bits)
    if basis is None or index is None:
        raise ValidationError("need either a bitstring or (basis, index)")
    if g is None:
        return basis_member(basis, index)
    return g_superposition(basis, index, g, sign)


def apply_pauli_vec(vec: np.ndarray, sigma: PauliString) -> np.ndarray:
    idx = np.arange(vec.shape[0])
    out = np.empty_like(vec)
    phases = sigma.phases(idx).reshape((-1,) + (1,) * (vec.ndim - 1))
    out[idx ^ sigma.x] = phases * vec
    return out


def apply_pauli(state: StateVector, sigma: PauliString) -> StateVector:
    _check(state, sigma.n_qubits)
    return _wrap(apply_pauli_vec(state.amplitudes, sigma), state)


def apply_pauli_sum_vec(vec: np.ndarray, op: PauliSum) -> np.ndarray:
    out = np.zeros_like(vec)
    for c, s in op:
        out += c * apply_pauli_vec(vec, s)
    return out


def apply_pauli_sum(state: StateVector, op: PauliSum) -> StateVector:
    _check(state, op.n_qubits)
    return _wrap(apply_pauli_sum_vec(state.amplitudes, op), state, normalized=False)


def pauli_rotation_vec(vec: np.ndarray, sigma: PauliString, angle: float) -> np.ndarray:
    """``exp(+i sigma angle / 2) vec``."""
    half = 0.5 * angle
    return math.cos(half) * vec + 1j * math.sin(half) * apply_pauli_vec(vec, sigma)


def apply_pauli_rotation(state: StateVector, sigma: PauliString, angle: float) -> StateVector:
    _check(state, sigma.n_qubits)
    return _wrap(pauli_rotation_vec(state.amplitudes, sigma, angle), state)


# --- gate-level primitives (used by the noisy trajectory path) -------------

_H = np.array([[1, 1], [1, -1]], dtype=complex) * SQRT_HALF
_S = np.diag([1, 1j])
_SDG = np.diag([1, -1j])


def _apply_1q(vec: np.ndarray, n: int, q: int, gate: np.ndarray) -> np.ndarray:
    # trailing axes (e.g. matrix columns) ride along untouched
    t = vec.reshape((1 << q, 2, 1 << (n - q - 1), -1))
    return np.einsum("ab,ibjk->iajk", gate, t).reshape(vec.shape)


def _rz(vec: np.ndarray, n: int, q: int, phi: float) -> np.ndarray:
    """``exp(-i phi Z / 2)`` on qubit q."""
    return _apply_1q(vec, n, q, np.diag([np.exp(-0.5j * phi), np.exp(0.5j * phi)]))


def _cnot(vec: np.ndarray, n: int, control: int, target: int) -> np.ndarray:
    idx = np.arange(vec.shape[0])
    cbit = 1 << (n - 1 - control)
    tbit = 1 << (n - 1 - target)
    src = np.where(idx & cbit, idx ^ tbit, idx)
    return vec[src]


def entangling_pairs(sigma: PauliString) -> list[tuple[int, int]]:
    """CNOTs of the ladder realizing a Pauli rotation, in application order."""
    sup = sigma.support
    down = [(sup[k], sup[k + 1]) for k in range(len(sup) - 1)]
    return down + down[::-1]


def pauli_rotation_gates(vec: np.ndarray, sigma: PauliString, angle: float,
                         after_cnot: Callable[[np.ndarray, int, int], np.ndarray] | None = None) -> np.ndarray:
    """Gate-level ``exp(+i sigma angle / 2)``: basis change, CNOT ladder, Rz, undo.

    ``after_cnot(vec, control, target)`` runs after every CNOT and may insert
    an error.
    """
    n = sigma.n_qubits
    letters = sigma.letters
    sup = sigma.support
    if not sup:
        return np.exp(0.5j * angle) * vec
    for q in sup:
        if letters[q] == "X":
            vec = _apply_1q(vec, n, q, _H)
        elif letters[q] == "Y":
            vec = _apply_1q(vec, n, q, _H @ _SDG)
    pairs = entangling_pairs(sigma)
    half = len(pairs) // 2
    for c, t in pairs[:half]:
        vec = _cnot(vec, n, c, t)
        if after_cnot is not None:
            vec = after_cnot(vec, c, t)
    vec = _rz(vec, n, sup[-1], -angle)
    for c, t in pairs[half:]:
        vec = _cnot(vec, n, c, t)
        if after_cnot is not None:
            vec = after_cnot(vec, c, t)
    for q in sup:
        if letters[q] == "X":
            vec = _apply_1q(vec, n, q, _H)
        elif letters[q] == "Y":
            vec = _apply_1q(vec, n, q, _S @ _H)
    return vec


def apply_dense_controlled(state: StateVector, unitary: np.ndarray,
                           power_schedule: Sequence[int] | None = None) -> StateVector:
    """Apply ``sum_x |x><x| (x) U^x`` with ancillas in front of the data register.

    ``power_schedule[a]`` is the power of U controlled by ancilla ``a``; the
    default ``2**(l-1-a)`` makes the ancilla integer x select ``U^x``.
    """
    unitary = np.asarray(unitary, dtype=complex)
    dim = unitary.shape[0]
    n_data = int(round(math.log2(dim)))
    if 1 << n_data != dim or unitary.shape != (dim, dim):
        raise DimensionError("unitary dimension is not a power of two")
    n_anc = state.n_qubits - n_data
    if n_anc < 1:
        raise DimensionError("state has no room for an ancilla register")
    if np.max(np.abs(unitary.conj().T @ unitary - np.eye(dim))) > 1e-10:
        raise ContractError("controlled operator is not unitary")
    if power_schedule is None:
        power_schedule = [1 << (n_anc - 1 - a) for a in range(n_anc)]
    if len(power_schedule) != n_anc:
        raise DimensionError("power schedule length must equal the ancilla count")
    joint = controlled_powers(state.amplitudes.reshape(1 << n_anc, dim), unitary, power_schedule)
    return _wrap(joint.reshape(-1), state)


def controlled_powers(joint: np.ndarray, unitary: np.ndarray, power_schedule: Sequence[int]) -> np.ndarray:
    """Array-level kernel: rows are ancilla basis states, columns data amplitudes."""
    n_anc = len(power_schedule)
    rows = np.arange(joint.shape[0])
    out = joint.copy()
    for a, power in enumerate(power_schedule):
        mask = (rows >> (n_anc - 1 - a)) & 1 == 1
        up = np.linalg.matrix_power(unitary, int(power))
        out[mask] = out[mask] @ up.T
    return out


def inner_product(a: StateVector, b: StateVector) -> complex:
    if a.n_qubits != b.n_qubits:
        raise DimensionError("states of different size")
    return complex(np.vdot(a.amplitudes, b.amplitudes))


# --- measurement -----------------------------------------------------------

@dataclass(frozen=True)
class ShotPlan:
    """Sampling settings; ``shots=None`` selects exact expectations."""

    shots: int | None = None
    rng_seed: int = 0
    readout_flip_prob: float = 0.0
    pauli_error_prob: float = 0.0

    def __post_init__(self):
        if self.shots is not None and (int(self.shots) != self.shots or self.shots < 1):
            raise ValidationError("shots must be a positive integer or None")
        if not 0.0 <= self.readout_flip_prob < 0.5:
            raise ValidationError("readout_flip_prob must lie in [0, 0.5)")
        if not 0.0 <= self.pauli_error_prob < 1.0:
            raise ValidationError("pauli_error_prob must lie in [0, 1)")
        if not 0 <= int(self.rng_seed) < 2**64:
            raise ValidationError("rng_seed must be a 64-bit unsigned integer")

    @property
    def exact(self) -> bool:
        return self.shots is None

    def generator(self, *stream: int) -> np.random.Generator:
        """Independent Philox stream for the given key path."""
        seq = np.random.SeedSequence(int(self.rng_seed), spawn_key=tuple(int(s) for s in stream))
        return np.random.Generator(np.random.Philox(seq))


def _to_z_basis(vec: np.ndarray, sigma: PauliString) -> np.ndarray:
    n = sigma.n_qubits
    letters = sigma.letters
    for q in sigma.support:
        if letters[q] == "X":
            vec = _apply_1q(vec, n, q, _H)
        elif letters[q] == "Y":
            vec = _apply_1q(vec, n, q, _H @ _SDG)
    return vec


def _eigenvalues(outcomes: np.ndarray, sigma: PauliString, rng: np.random.Generator,
                 readout_flip_prob: float) -> np.ndarray:
    n = sigma.n_qubits
    bits = np.stack([(outcomes >> (n - 1 - q)) & 1 for q in sigma.support], axis=1)
    if readout_flip_prob > 0:
        bits ^= (rng.random(bits.shape) < readout_flip_prob).astype(bits.dtype)
    return 1.0 - 2.0 * (bits.sum(axis=1) % 2)


def sample_outcomes(vec: np.ndarray, sigma: PauliString, shots: int, rng: np.random.Generator,
                    readout_flip_prob: float = 0.0) -> np.ndarray:
    """Sampled +-1 eigenvalues of ``sigma`` for ``shots`` projective measurements."""
    if sigma.is_identity:
        return np.ones(shots)
    rotated = _to_z_basis(vec, sigma)
    probs = np.abs(rotated) ** 2
    probs = probs / probs.sum()
    outcomes = rng.choice(probs.shape[0], size=shots, p=probs)
    return _eigenvalues(outcomes, sigma, rng, readout_flip_prob)


def sample_columns(states: np.ndarray, sigma: PauliString, rng: np.random.Generator,
                   readout_flip_prob: float = 0.0) -> np.ndarray:
    """One measurement of ``sigma`` on each column of ``states``."""
    if sigma.is_identity:
        return np.ones(states.shape[1])
    probs = np.abs(_to_z_basis(states, sigma)) ** 2
    cdf = np.cumsum(probs / probs.sum(axis=0), axis=0)
    u = rng.random(states.shape[1])
    outcomes = np.minimum((cdf < u).sum(axis=0), states.shape[0] - 1)
    return _eigenvalues(outcomes, sigma, rng, readout_flip_prob)


def estimate_expectation(state: StateVector, sigma: PauliString, plan: ShotPlan = ShotPlan(),
                         rng: np.random.Generator | None = None) -> float:
    """Exact ``<psi|sigma|psi>`` or its shot estimate under ``plan``."""
    _check(state, sigma.n_qubits)
    vec = state.amplitudes
    if plan.exact:
        return float(np.real(np.vdot(vec, apply_pauli_vec(vec, sigma))))
    rng = plan.generator() if rng is None else rng
    return float(sample_outcomes(vec, sigma, plan.shots, rng, plan.readout_flip_prob).mean())


TWO_QUBIT_ERRORS = [(a, b) for a in "IXYZ" for b in "IXYZ" if (a, b) != ("I", "I")]


def sample_error_patterns(n_steps: int, shots: int, prob: float,
                          rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Per-shot error flags ``(shots, n_steps)`` and ``TWO_QUBIT_ERRORS`` indices."""
    hits = rng.random((shots, n_steps)) < prob
    kinds = rng.integers(0, len(TWO_QUBIT_ERRORS), size=(shots, n_steps))
    return hits, kinds


def estimate_expectation_trajectories(vec: np.ndarray, segments: Sequence[np.ndarray],
                                      pairs: Sequence[tuple[int, int]], sigma: PauliString,
                                      plan: ShotPlan, rng: np.random.Generator) -> float:
    """Shot estimate with stochastic two-qubit Pauli errors after entangling steps.

    The circuit is ``segments[-1] E_k ... E_0 segments[0]`` where ``E_s`` is
    an optional error on qubit pair ``pairs[s]``.  Every shot draws its own
    error pattern; shots without errors share one clean state and faulty
    shots are propagated together as matrix columns.  With
    ``pauli_error_prob == 0`` no extra random numbers are drawn, so the
    result equals the noiseless shot estimate for the same stream.
    """
    if plan.exact:
        raise ValidationError("trajectory sampling needs a finite shot count")
    if len(segments) != len(pairs) + 1:
        raise DimensionError("need one more segment than entangling steps")
    n = sigma.n_qubits
    clean = vec
    for seg in segments:
        clean = seg @ clean
    if plan.pauli_error_prob == 0 or not pairs:
        return float(sample_outcomes(clean, sigma, plan.shots, rng, plan.readout_flip_prob).mean())
    hits, kinds = sample_error_patterns(len(pairs), plan.shots, plan.pauli_error_prob, rng)
    faulty = np.flatnonzero(hits.any(axis=1))
    n_clean = plan.shots - faulty.size
    total = 0.0
    if n_clean:
        total += sample_outcomes(clean, sigma, n_clean, rng, plan.readout_flip_prob).sum()
    if faulty.size:
        hits, kinds = hits[faulty], kinds[faulty]
        states = np.repeat(vec[:, None], faulty.size, axis=1)
        for step, (control, target) in enumerate(pairs):
            states = segments[step] @ states
            cols = np.flatnonzero(hits[:, step])
            if cols.size:
                errs = _error_matrices(n, control, target)[kinds[cols, step]]
                states[:, cols] = np.einsum("kab,bk->ak", errs, states[:, cols])
        states = segments[-1] @ states
        total += sample_columns(states, sigma, rng, plan.readout_flip_prob).sum()
    return total / plan.shots


@lru_cache(maxsize=256)
def _error_matrices(n: int, control: int, target: int) -> np.ndarray:
    return np.stack([PauliString.from_sparse(n, {control: a, target: b}).to_dense()
                     for a, b in TWO_QUBIT_ERRORS])


def two_qubit_error_vec(vec: np.ndarray, n: int, control: int, target: int, kind: int) -> np.ndarray:
    a, b = TWO_QUBIT_ERRORS[kind]
    return apply_pauli_vec(vec, PauliString.from_sparse(n, {control: a, target: b}))
