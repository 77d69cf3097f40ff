"""Schrieffer-Wolff effective Hamiltonians: exact, variational and QPE routes."""

from .ansatz import Factor, ParameterizedCircuit, ansatz_from_commutator, apply_ansatz, preset_n4_ansatz
from .dense import (
    EffectiveHamiltonian,
    direct_rotation,
    eigh,
    exact_effective_hamiltonian,
    perturbation_gap_report,
    solve_exact,
    trace_c,
)
from .errors import (
    ContractError,
    ResourceError,
    SWTError,
    ValidationError,
)
from .models import ModelSpec, SubspaceBasis, ground_basis, heisenberg_h0, heisenberg_v, window_subspace
from .pauli import PauliString, PauliSum, hermitian_commutator, pauli_multiply
from .policy import DEFAULT_POLICY, NumericPolicy
from .qpe import (
    QpeConfig,
    heff_pauli_reconstruction,
    phase_flip_gate,
    reflection_via_qpe,
    schedule_time,
    swt_via_qpe,
)
from .spsa import SpsaOptions, spsa_minimize
from .statevector import ShotPlan, StateVector
from .vqa import CostConfig, cost_c, cost_evolution, reconstruct_heff, transition_amplitude

__all__ = [
    "ContractError", "CostConfig", "DEFAULT_POLICY", "EffectiveHamiltonian", "Factor", "ModelSpec",
    "NumericPolicy", "ParameterizedCircuit", "PauliString", "PauliSum", "QpeConfig", "ResourceError",
    "SWTError", "ShotPlan", "SpsaOptions", "StateVector", "SubspaceBasis", "ValidationError",
    "ansatz_from_commutator", "apply_ansatz", "cost_c", "cost_evolution", "direct_rotation", "eigh",
    "exact_effective_hamiltonian", "ground_basis", "heff_pauli_reconstruction", "heisenberg_h0",
    "heisenberg_v", "hermitian_commutator", "pauli_multiply", "perturbation_gap_report",
    "phase_flip_gate", "preset_n4_ansatz", "reconstruct_heff", "reflection_via_qpe", "schedule_time",
    "solve_exact", "spsa_minimize", "swt_via_qpe", "trace_c", "transition_amplitude", "window_subspace",
]
