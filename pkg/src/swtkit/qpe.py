"""Simulated fault-tolerant SWT: QPE reflections, QPE square root, Pauli H_eff fit.

Both pipelines follow the same five steps on an ``l``-qubit ancilla
register placed in front of the data register:

1. ancillas in ``|+>^l``;
2. controlled powers ``sum_x |x><x| (x) W^x``;
3. Fourier readout ``|x> -> 2^{-l/2} sum_k exp(2 pi i k x / 2^l) |k>``,
   which concentrates an eigenphase ``exp(-i phi)`` of W at
   ``k ~ 2^l phi / 2 pi``;
4. a diagonal gate on the ancillas;
5. the inverse of steps 3 and 2, returning the ancillas to ``|+>^l``.

Controlled powers are exact dense matrix powers.  The data-register output
is the component with ancillas back in ``|+>^l``; its squared norm is the
ancilla overlap and the rest is leakage.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import product
from typing import Iterable, Sequence

import numpy as np
import scipy.linalg as sla

from .dense import (
    direct_rotation,
    eigh,
    exact_effective_hamiltonian,
    projector_from_basis,
    reflection,
    window_gap,
)
from .errors import ResourceError, SchedulingError, ValidationError
from .pauli import PauliString, PauliSum
from .policy import DEFAULT_POLICY, NumericPolicy
from .statevector import StateVector, controlled_powers

PRINCIPAL = "principal"
LITERAL = "literal"


@dataclass(frozen=True)
class QpeConfig:
    l: int
    t: float
    shift: float
    k_threshold: int
    threshold_energy: float | None = None

    def to_dict(self) -> dict:
        return {"l": self.l, "t": self.t, "shift": self.shift, "k_threshold": self.k_threshold,
                "threshold_energy": self.threshold_energy}


def _dense(h, policy=DEFAULT_POLICY) -> np.ndarray:
    return h.to_dense(policy) if hasattr(h, "to_dense") else np.asarray(h, dtype=complex)


def schedule_time(h, l: int, threshold_energy: float, policy: NumericPolicy = DEFAULT_POLICY) -> QpeConfig:
    """Shift the spectrum to start at 0 and scale it into ``[0, 2 pi)``.

    The top eigenvalue lands exactly on bin ``2^l - 1``.  The flip threshold
    is ``ceil(2^l (E_thr - shift) t / 2 pi)`` clamped to ``[0, 2^l)``.
    """
    if l < 1:
        raise ValidationError("need at least one ancilla")
    vals = eigh(_dense(h, policy), policy).eigenvalues
    e_min, e_max = float(vals[0]), float(vals[-1])
    width = e_max - e_min
    if width < policy.degeneracy_tol:
        raise SchedulingError("spectrum has zero width; nothing to resolve")
    if not e_min < threshold_energy < e_max:
        raise SchedulingError("threshold must lie strictly inside the spectral range")
    n_bins = 1 << l
    t = 2 * math.pi * (1 - 1 / n_bins) / width
    scaled = (vals - e_min) * t
    if np.any(scaled < -1e-12) or np.any(scaled >= 2 * math.pi):
        raise SchedulingError("scaled spectrum escapes [0, 2 pi)")
    k_th = math.ceil(n_bins * (threshold_energy - e_min) * t / (2 * math.pi) - 1e-12)
    k_th = min(max(k_th, 0), n_bins - 1)
    return QpeConfig(l, t, e_min, k_th, float(threshold_energy))


def _check_joint(n_qubits: int, l: int, policy: NumericPolicy) -> None:
    if l < 1:
        raise ValidationError("need at least one ancilla")
    if n_qubits + l > policy.max_state_qubits:
        raise ResourceError(f"joint register of {n_qubits + l} qubits exceeds the cap "
                            f"of {policy.max_state_qubits}")


def phase_flip_weights(l: int, k_threshold: int) -> np.ndarray:
    n_bins = 1 << l
    if not 0 <= k_threshold <= n_bins:
        raise ValidationError(f"k_threshold must lie in [0, {n_bins}]")
    return np.where(np.arange(n_bins) < k_threshold, 1.0, -1.0).astype(complex)


def phase_flip_gate(l: int, k_threshold: int) -> np.ndarray:
    """``diag(+1 for k < k_th, -1 for k >= k_th)`` on the ancilla register."""
    return np.diag(phase_flip_weights(l, k_threshold))


def half_phase_gate(l: int, branch: str = PRINCIPAL) -> np.ndarray:
    return np.diag(half_phase_weights(l, branch))


def half_phase_weights(l: int, branch: str = PRINCIPAL) -> np.ndarray:
    """Diagonal gate turning a stored eigenphase into half of it.

    ``literal`` applies ``exp(-i pi k / 2^l)`` for every bin, which halves
    phases taken in ``(-2 pi, 0]``.  ``principal`` reads bins ``k >= 2^(l-1)``
    as ``k - 2^l``, halving phases in ``(-pi, pi]``; this matches the
    direct-rotation square root.
    """
    n_bins = 1 << l
    k = np.arange(n_bins)
    if branch == PRINCIPAL:
        k = np.where(k < n_bins // 2, k, k - n_bins)
    elif branch != LITERAL:
        raise ValidationError(f"unknown branch {branch!r}")
    return np.exp(-1j * math.pi * k / n_bins)


def _pipeline(psi: np.ndarray, unitary: np.ndarray, l: int, weights: np.ndarray) -> np.ndarray:
    n_bins = 1 << l
    schedule = [1 << (l - 1 - a) for a in range(l)]
    joint = np.tile(psi, (n_bins, 1)) / math.sqrt(n_bins)
    joint = controlled_powers(joint, unitary, schedule)
    joint = np.fft.ifft(joint, axis=0, norm="ortho")
    joint = weights[:, None] * joint
    joint = np.fft.fft(joint, axis=0, norm="ortho")
    return controlled_powers(joint, unitary.conj().T, schedule)


@dataclass
class QpeOutcome:
    joint: StateVector
    data: np.ndarray
    l: int
    warnings: list[str] = field(default_factory=list)

    @property
    def ancilla_overlap(self) -> float:
        return float(np.vdot(self.data, self.data).real)

    @property
    def leakage(self) -> float:
        return 1.0 - self.ancilla_overlap

    @property
    def state(self) -> StateVector:
        n = self.joint.n_qubits - self.l
        return StateVector(n, self.data / np.linalg.norm(self.data))

    def fidelity(self, target) -> float:
        """``|<+^l (x) target | joint>|^2``; leakage counts as infidelity."""
        target = target.amplitudes if isinstance(target, StateVector) else np.asarray(target)
        return float(abs(np.vdot(target, self.data)) ** 2)


def _run(state: StateVector, unitary: np.ndarray, l: int, weights: np.ndarray,
         policy: NumericPolicy) -> QpeOutcome:
    _check_joint(state.n_qubits, l, policy)
    if unitary.shape != (state.dim, state.dim):
        raise ValidationError("unitary and state dimensions disagree")
    joint = _pipeline(state.amplitudes, unitary, l, weights)
    data = joint.sum(axis=0) / math.sqrt(1 << l)
    return QpeOutcome(StateVector(state.n_qubits + l, joint.reshape(-1), normalized=False), data, l)


def _weights(state: StateVector, vecs: np.ndarray) -> np.ndarray:
    return np.abs(vecs.conj().T @ state.amplitudes) ** 2


def reflection_via_qpe(state: StateVector, h, config: QpeConfig,
                       policy: NumericPolicy = DEFAULT_POLICY) -> QpeOutcome:
    """Approximate ``R_P |psi>``: flip the sign of components above the threshold."""
    _check_joint(state.n_qubits, config.l, policy)
    hd = _dense(h, policy)
    spec = eigh(hd, policy)
    phases = (spec.eigenvalues - config.shift) * config.t
    unitary = spec.eigenvectors @ np.diag(np.exp(-1j * phases)) @ spec.eigenvectors.conj().T
    weights = phase_flip_weights(config.l, config.k_threshold)
    out = _run(state, unitary, config.l, weights, policy)
    n_bins = 1 << config.l
    bins = n_bins * phases / (2 * math.pi)
    if config.threshold_energy is not None:
        edge = n_bins * (config.threshold_energy - config.shift) * config.t / (2 * math.pi)
    else:
        edge = config.k_threshold - 0.5
    present = _weights(state, spec.eigenvectors) > 1e-12
    close = present & (np.abs(bins - edge) < 0.5)
    if np.any(close):
        out.warnings.append(
            f"{int(close.sum())} populated eigenvalue(s) within half a bin of the threshold")
    return out


def eigenphases(w: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    t, z = sla.schur(np.asarray(w, dtype=complex), output="complex")
    return np.angle(np.diag(t)), z


def swt_via_qpe(state: StateVector, reflection_product: np.ndarray, l: int, branch: str = PRINCIPAL,
                policy: NumericPolicy = DEFAULT_POLICY) -> QpeOutcome:
    """Approximate ``U |psi> = sqrt(R_P0 R_P) |psi>`` by concatenated QPE."""
    _check_joint(state.n_qubits, l, policy)
    w = np.asarray(reflection_product, dtype=complex)
    if np.max(np.abs(w.conj().T @ w - np.eye(w.shape[0]))) > 1e-10:
        raise ValidationError("reflection product is not unitary")
    out = _run(state, w, l, half_phase_weights(l, branch), policy)
    phases, vecs = eigenphases(w)
    present = _weights(state, vecs) > 1e-12
    guard = 2 * math.pi / (1 << l)
    if branch == PRINCIPAL:
        near_cut = np.abs(np.abs(phases) - math.pi) < guard
    else:
        near_cut = (phases > 0) & (phases < guard)
    if np.any(present & near_cut):
        out.warnings.append("populated eigenphase within one bin of the square-root branch cut")
    return out


def qpe_reflection_operator(h, config: QpeConfig, policy: NumericPolicy = DEFAULT_POLICY) -> np.ndarray:
    """Unitary part of the data-register map realized by ``reflection_via_qpe``.

    Each eigenvector of H is mapped to ``c(E)`` times itself, with ``c`` the
    ancilla-projected amplitude; the phase ``c / |c|`` is kept.
    """
    spec = eigh(_dense(h, policy), policy)
    phases = (spec.eigenvalues - config.shift) * config.t
    weights = phase_flip_weights(config.l, config.k_threshold)
    joint = _pipeline(np.ones(len(phases), dtype=complex), np.diag(np.exp(-1j * phases)), config.l, weights)
    c = joint.sum(axis=0) / math.sqrt(1 << config.l)
    return spec.eigenvectors @ np.diag(c / np.abs(c)) @ spec.eigenvectors.conj().T


def reflection_product(basis, h, k: int = 0, *, nested_config: QpeConfig | None = None,
                       policy: NumericPolicy = DEFAULT_POLICY) -> np.ndarray:
    """``R_P0 R_P`` with ``P`` the span of levels ``k .. k+M-1`` of H.

    By default ``R_P`` is exact; with ``nested_config`` it is replaced by the
    QPE-realized reflection so both QPE stages contribute error.
    """
    hd = _dense(h, policy)
    r_p0 = reflection(projector_from_basis(basis, policy))
    if nested_config is not None:
        return r_p0 @ qpe_reflection_operator(hd, nested_config, policy)
    m = basis.size
    spec = eigh(hd, policy)
    return r_p0 @ reflection(projector_from_basis(spec.subset(k, k + m), policy))


def reflection_threshold(h0, k: int, m: int, policy: NumericPolicy = DEFAULT_POLICY) -> float:
    """Upper flip threshold ``E_{K+M+1}^(0) - gap / 2`` of the unperturbed window."""
    vals = eigh(_dense(h0, policy), policy).eigenvalues
    return float(vals[k + m] - window_gap(vals, k, m) / 2)


# --- Pauli-basis reconstruction of H_eff -----------------------------------

HILBERT = "hilbert"
SUBSPACE = "subspace"


def heff_pauli_reconstruction(h: PauliSum, u: np.ndarray, basis, ansatz_set: Sequence[PauliString],
                              normalization: str = HILBERT,
                              policy: NumericPolicy = DEFAULT_POLICY) -> dict[PauliString, float]:
    """Coefficients ``g_tau`` of ``H_eff ~ sum_tau g_tau tau`` from density-matrix traces.

    For every Hamiltonian term ``h_i sigma_i`` the state
    ``rho_i = (sigma_i + 1) / 2^n`` is rotated by U and projected onto P0;
    ``g_tau = sum_i h_i [Tr(tau P0 U rho_i U^dag P0) - 2^-n Tr(tau P0)]``.

    ``hilbert`` returns those numbers, the expansion of the full-space
    operator ``P0 U H U^dag P0`` in the trace-orthogonal Pauli basis.
    ``subspace`` refits the same traces in the metric ``Tr(P0 tau P0 tau')``,
    which reproduces ``H_eff`` on P0 whenever it lies in the span of the
    projected ansatz, even if the ansatz is far from a complete basis.
    """
    if normalization not in (HILBERT, SUBSPACE):
        raise ValidationError(f"unknown normalization {normalization!r}")
    ansatz_set = list(ansatz_set)
    if not ansatz_set:
        return {}
    n = h.n_qubits
    if n > policy.max_dense_qubits:
        raise ResourceError("dense reconstruction exceeds the qubit cap")
    dim = 1 << n
    u = np.asarray(u, dtype=complex)
    p0 = projector_from_basis(basis, policy)
    taus = [tau.to_dense(policy) for tau in ansatz_set]
    tr_tau_p0 = np.array([np.trace(t @ p0) for t in taus])
    g = np.zeros(len(taus), dtype=complex)
    for coeff, sigma in h.real_terms():
        rho = (sigma.to_dense(policy) + np.eye(dim)) / dim
        block = p0 @ u @ rho @ u.conj().T @ p0
        # Tr(tau X) = sum_ab tau_ba X_ab
        g += coeff * (np.array([np.sum(t.T * block) for t in taus]) - tr_tau_p0 / dim)
    if normalization == SUBSPACE:
        gram = np.array([[np.trace(p0 @ a @ p0 @ b) for b in taus] for a in taus])
        g = np.linalg.lstsq(gram, g * dim, rcond=None)[0]
    return {tau: float(val.real) for tau, val in zip(ansatz_set, g)}


def reconstructed_operator(coefficients: dict[PauliString, float], n_qubits: int) -> PauliSum:
    return PauliSum(n_qubits, ((c, s) for s, c in coefficients.items()))


def restricted_matrix(op, basis) -> np.ndarray:
    """``<phi_i| op |phi_j>`` for a PauliSum or dense operator."""
    mat = _dense(op)
    cols = basis.matrix
    return cols.conj().T @ mat @ cols


def pauli_basis_completion(ansatz_set: Iterable[PauliString], n_qubits: int) -> list[PauliString]:
    """``ansatz_set`` followed by every other n-qubit Pauli string in canonical order."""
    head = list(ansatz_set)
    seen = set(head)
    tail = [PauliString.from_label("".join(p)) for p in product("IXYZ", repeat=n_qubits)]
    return head + [s for s in tail if s not in seen]


# --- study driver ----------------------------------------------------------

def qpe_study(h0: PauliSum, v: PauliSum, epsilon: float, basis, ls: Sequence[int], k: int = 0,
              nested: bool = False, branch: str = PRINCIPAL,
              policy: NumericPolicy = DEFAULT_POLICY) -> dict:
    """Fidelity of the QPE square root against direct rotation for each ``l``."""
    for l in ls:
        _check_joint(basis.n_qubits, l, policy)
    h = (h0 + float(epsilon) * v).to_dense(policy)
    m = basis.size
    threshold = reflection_threshold(h0, k, m, policy)
    spec = eigh(h, policy)
    p0 = projector_from_basis(basis, policy)
    u_exact = direct_rotation(p0, projector_from_basis(spec.subset(k, k + m), policy), policy)
    rows = []
    for l in ls:
        config = schedule_time(h, l, threshold, policy)
        w = reflection_product(basis, h, k, nested_config=config if nested else None, policy=policy)
        fids, leaks, notes = [], [], []
        for i in range(m):
            psi = StateVector(basis.n_qubits, basis.state(i))
            out = swt_via_qpe(psi, w, l, branch, policy)
            fids.append(out.fidelity(u_exact @ psi.amplitudes))
            leaks.append(out.leakage)
            notes += out.warnings
        rows.append({**config.to_dict(), "fidelities": fids, "ancilla_leakage": leaks,
                     "warnings": sorted(set(notes))})
    monotone = all(
        all(b >= a - 1e-12 for a, b in zip(r0["fidelities"], r1["fidelities"]))
        for r0, r1 in zip(rows, rows[1:])
    )
    return {"threshold_energy": threshold, "nested": nested, "branch": branch,
            "rows": rows, "monotone": monotone}


def reflection_study(h, threshold: float, ls: Sequence[int], policy: NumericPolicy = DEFAULT_POLICY) -> dict:
    """Sign recovered by ``reflection_via_qpe`` on every eigenvector of H."""
    hd = _dense(h, policy)
    spec = eigh(hd, policy)
    n = int(round(math.log2(hd.shape[0])))
    for l in ls:
        _check_joint(n, l, policy)
    rows = []
    for l in ls:
        config = schedule_time(hd, l, threshold, policy)
        overlaps = []
        for idx in range(len(spec.eigenvalues)):
            vec = spec.eigenvectors[:, idx]
            out = reflection_via_qpe(StateVector(n, vec), hd, config, policy)
            overlaps.append(float(np.vdot(vec, out.data).real))
        expected = [1.0 if e < threshold else -1.0 for e in spec.eigenvalues]
        rows.append({**config.to_dict(), "eigenvalues": [float(e) for e in spec.eigenvalues],
                     "overlaps": overlaps, "expected_signs": expected,
                     "signs_correct": all(np.sign(o) == s for o, s in zip(overlaps, expected))})
    return {"threshold_energy": threshold, "rows": rows}


def exact_reference(h0: PauliSum, v: PauliSum, epsilon: float, basis, k: int = 0,
                    policy: NumericPolicy = DEFAULT_POLICY):
    h = (h0 + float(epsilon) * v).to_dense(policy)
    spec = eigh(h, policy)
    m = basis.size
    u = direct_rotation(projector_from_basis(basis, policy),
                        projector_from_basis(spec.subset(k, k + m), policy), policy)
    return u, exact_effective_hamiltonian(h, u, basis, policy)
