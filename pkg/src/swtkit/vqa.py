"""Hybrid variational SWT: transition amplitudes, block-diagonality cost, H_eff.

Transition amplitudes ``<phi_i| U H U^dag |phi_j>`` are evaluated by one of
two backends:

``exact_amplitudes``
    state preparation, ansatz application and inner products.
``g_decomposition_shots``
    what hardware would measure: a direct expectation for ``i == j`` and,
    for ``i != j`` with ``|phi_j> = G |phi_i>``, the real part
    ``(<+|O|+> - <-|O|->) / 2`` over ``|+-> = (I +- G)|phi_i> / sqrt(2)``.
    Expectations are exact or sampled according to the shot plan.

``circuit`` may be a :class:`ParameterizedCircuit` or a dense unitary; the
latter injects an arbitrary ``U`` (``theta`` is then ignored).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .ansatz import ParameterizedCircuit, circuit_or_unitary_states, noisy_segments
from .dense import EffectiveHamiltonian, eigh
from .errors import BackendUnsupportedError, ValidationError
from .pauli import PauliString, PauliSum, pauli_square
from .policy import DEFAULT_POLICY
from .statevector import (
    SQRT_HALF,
    ShotPlan,
    apply_pauli_sum_vec,
    apply_pauli_vec,
    estimate_expectation_trajectories,
    sample_outcomes,
)

EXACT = "exact_amplitudes"
G_DECOMPOSITION = "g_decomposition_shots"
BACKENDS = (EXACT, G_DECOMPOSITION)


@dataclass(frozen=True)
class CostConfig:
    backend: str = EXACT
    shot_plan: ShotPlan = field(default_factory=ShotPlan)
    monte_carlo_pairs: int | None = None

    def __post_init__(self):
        if self.backend not in BACKENDS:
            raise ValidationError(f"unknown backend {self.backend!r}; choose from {BACKENDS}")
        if self.monte_carlo_pairs is not None and self.monte_carlo_pairs < 1:
            raise ValidationError("monte_carlo_pairs must be positive")

    def to_dict(self) -> dict:
        plan = self.shot_plan
        return {
            "backend": self.backend,
            "shots": plan.shots,
            "rng_seed": plan.rng_seed,
            "readout_flip_prob": plan.readout_flip_prob,
            "pauli_error_prob": plan.pauli_error_prob,
            "monte_carlo_pairs": self.monte_carlo_pairs,
        }


class _Evaluator:
    """Amplitude machinery for one (basis, circuit, theta, config, stream)."""

    def __init__(self, basis, circuit, theta, config: CostConfig, stream=(0,)):
        self.basis = basis
        self.circuit = circuit
        self.theta = None if not isinstance(circuit, ParameterizedCircuit) else circuit.check_theta(theta)
        self.config = config
        self.plan = config.shot_plan
        self.stream = tuple(int(s) for s in stream)
        self.cols = basis.matrix
        self.psi = circuit_or_unitary_states(self.cols, circuit, self.theta)
        self.variances: dict = {}

    # -- exact backend --
    def exact_amplitude(self, i: int, j: int, sigma: PauliString) -> complex:
        return complex(np.vdot(self.psi[:, i], apply_pauli_vec(self.psi[:, j], sigma)))

    # -- measured expectations --
    def _rotate(self, vec: np.ndarray) -> np.ndarray:
        if isinstance(self.circuit, ParameterizedCircuit):
            return circuit_or_unitary_states(vec[:, None], self.circuit, self.theta)[:, 0]
        return self.circuit.conj().T @ vec

    def expectation(self, prep: np.ndarray, sigma: PauliString, key: tuple) -> float:
        """``<prep| U sigma U^dag |prep>``, exact or sampled."""
        if self.plan.exact or sigma.is_identity:
            rotated = self._rotate(prep)
            return float(np.real(np.vdot(rotated, apply_pauli_vec(rotated, sigma))))
        rng = self.plan.generator(*self.stream, *key)
        if self.plan.pauli_error_prob > 0 and isinstance(self.circuit, ParameterizedCircuit):
            segments, pairs = noisy_segments(self.circuit, self.theta, adjoint=True)
            return estimate_expectation_trajectories(prep, segments, pairs, sigma, self.plan, rng)
        rotated = self._rotate(prep)
        return float(sample_outcomes(rotated, sigma, self.plan.shots, rng,
                                     self.plan.readout_flip_prob).mean())

    def g_amplitude(self, i: int, j: int, sigma: PauliString, term: int = 0) -> tuple[float, float]:
        """Real amplitude and its single-shot variance for the G-decomposition."""
        phi = self.cols[:, i]
        if i == j:
            e = self.expectation(phi, sigma, (i, j, term, 0))
            return e, 1.0 - e * e
        g = self.basis.relation(i, j)
        if g is None:
            raise BackendUnsupportedError(f"no G relation links basis states {i} and {j}")
        g_phi = apply_pauli_vec(phi, g)
        e_plus = self.expectation((phi + g_phi) * SQRT_HALF, sigma, (i, j, term, 1))
        e_minus = self.expectation((phi - g_phi) * SQRT_HALF, sigma, (i, j, term, 2))
        return 0.5 * (e_plus - e_minus), 0.25 * ((1 - e_plus ** 2) + (1 - e_minus ** 2))

    def amplitude(self, i: int, j: int, sigma: PauliString, term: int = 0) -> complex:
        if self.config.backend == EXACT:
            return self.exact_amplitude(i, j, sigma)
        return complex(self.g_amplitude(i, j, sigma, term)[0])

    def operator_entry(self, i: int, j: int, op: PauliSum) -> tuple[complex, float]:
        """``<phi_i|U op U^dag|phi_j>`` summed over terms, with a shot standard error."""
        if self.config.backend == EXACT:
            value = complex(np.vdot(self.psi[:, i], apply_pauli_sum_vec(self.psi[:, j], op)))
            return value, 0.0
        total = 0.0
        var = 0.0
        for t, (c, s) in enumerate(op):
            amp, single_var = self.g_amplitude(i, j, s, t)
            total += c * amp
            var += abs(c) ** 2 * single_var
        stderr = 0.0 if self.plan.exact else math.sqrt(max(var, 0.0) / self.plan.shots)
        return complex(total), stderr


def transition_amplitude(basis, i: int, j: int, observable: PauliString, circuit, theta,
                         config: CostConfig = CostConfig(), stream=(0,)) -> complex:
    """``<phi_i| U(theta) sigma U(theta)^dag |phi_j>`` via the configured backend."""
    m = basis.size
    if not (0 <= i < m and 0 <= j < m):
        raise ValidationError(f"basis indices ({i}, {j}) out of range for M={m}")
    return _Evaluator(basis, circuit, theta, config, stream).amplitude(i, j, observable)


def heff_matrix(basis, h: PauliSum, circuit, theta, config: CostConfig = CostConfig(),
                stream=(0,)) -> tuple[np.ndarray, np.ndarray]:
    """Raw ``M x M`` matrix of ``<phi_i|U H U^dag|phi_j>`` and per-entry standard errors."""
    ev = _Evaluator(basis, circuit, theta, config, stream)
    return _heff_from(ev, h)


def _heff_from(ev: _Evaluator, h: PauliSum, pairs=None):
    m = ev.basis.size
    mat = np.zeros((m, m), dtype=complex)
    err = np.zeros((m, m))
    if ev.config.backend == EXACT and pairs is None:
        mat = ev.psi.conj().T @ np.stack([apply_pauli_sum_vec(ev.psi[:, j], h) for j in range(m)], axis=1)
        return mat, err
    for i, j in (pairs if pairs is not None else np.ndindex(m, m)):
        mat[i, j], err[i, j] = ev.operator_entry(i, j, h)
    return mat, err


def signed_cost_c(basis, h: PauliSum, circuit, theta, config: CostConfig = CostConfig(),
                  stream=(0,)) -> float:
    """Signed second-order coefficient ``C`` (before taking the absolute value)."""
    m = basis.size
    if config.monte_carlo_pairs is not None and config.monte_carlo_pairs > m * m:
        raise ValidationError(f"monte_carlo_pairs exceeds M^2 = {m * m}")
    ev = _Evaluator(basis, circuit, theta, config, stream)
    if ev.config.backend == EXACT:
        h_psi = np.stack([apply_pauli_sum_vec(ev.psi[:, j], h) for j in range(m)], axis=1)
        diag_h2 = float(np.sum(np.abs(h_psi) ** 2))
    else:
        h2 = pauli_square(h)
        diag_h2 = sum(ev.operator_entry(i, i, h2)[0].real for i in range(m))
    if config.monte_carlo_pairs is None:
        mat, _ = _heff_from(ev, h)
        off = float(np.sum(np.abs(mat) ** 2))
    else:
        rng = ev.plan.generator(*ev.stream, 1 << 30)
        pairs = [tuple(p) for p in rng.integers(0, m, size=(config.monte_carlo_pairs, 2))]
        unique = sorted(set(pairs))
        mat, _ = _heff_from(ev, h, unique)
        off = m * m * float(np.mean([abs(mat[p]) ** 2 for p in pairs]))
    return (diag_h2 - off) / m


def cost_c(basis, h: PauliSum, circuit, theta, config: CostConfig = CostConfig(), stream=(0,)) -> float:
    """Block-diagonality cost ``|C|``; zero iff ``U H U^dag`` is block diagonal."""
    return abs(signed_cost_c(basis, h, circuit, theta, config, stream))


class CostFunction:
    """``theta -> cost_c`` with a fresh shot stream for every evaluation."""

    def __init__(self, basis, h: PauliSum, circuit, config: CostConfig = CostConfig()):
        self.basis = basis
        self.h = h
        self.circuit = circuit
        self.config = config
        self.evaluations = 0

    def __call__(self, theta) -> float:
        stream = (self.evaluations,)
        self.evaluations += 1
        return cost_c(self.basis, self.h, self.circuit, theta, self.config, stream)


def evolution_operator(h, t: float) -> np.ndarray:
    hd = h.to_dense() if hasattr(h, "to_dense") else np.asarray(h, dtype=complex)
    spec = eigh(hd)
    return spec.eigenvectors @ np.diag(np.exp(-1j * spec.eigenvalues * t)) @ spec.eigenvectors.conj().T


def cost_evolution(basis, h, circuit, theta, t: float) -> float:
    """``-(1/M) sum_ij |<phi_i| U exp(-iHt) U^dag |phi_j>|^2``, in ``[-1, 0]``."""
    cols = basis.matrix
    psi = circuit_or_unitary_states(cols, circuit, theta)
    amps = psi.conj().T @ evolution_operator(h, t) @ psi
    return -float(np.sum(np.abs(amps) ** 2)) / basis.size


def reconstruct_heff(basis, h: PauliSum, circuit, theta, config: CostConfig = CostConfig(),
                     reference: EffectiveHamiltonian | None = None, stream=(0,),
                     policy=DEFAULT_POLICY) -> EffectiveHamiltonian:
    """Effective Hamiltonian from transition amplitudes, diagonalized classically.

    Sampled matrices are Hermitized as ``(X + X^dag) / 2``; the raw matrix and
    its deviation are kept.  Eigenstates are lifted with the noiseless
    ``U(theta)^dag`` so fidelities against ``reference`` compare full states.
    """
    ev = _Evaluator(basis, circuit, theta, config, stream)
    raw, err = _heff_from(ev, h)
    sampled = config.backend == G_DECOMPOSITION and not config.shot_plan.exact
    heff = EffectiveHamiltonian.from_matrix(
        raw, basis.labels, lift=ev.psi, hermitize=sampled, policy=policy,
        stderr=err if sampled else None,
        metadata={"config": config.to_dict()},
    )
    if reference is not None:
        heff.compare(reference, policy)
    return heff
