"""Fast invariant suite behind ``swt check``.

Each check is a function returning ``(passed, detail)``; ``run_checks``
collects them into :class:`CheckResult` records.  Everything runs on the
four-spin chain and finishes in a few seconds.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import qpe
from .ansatz import preset_n4_ansatz
from .dense import solve_exact, trace_c
from .models import ModelSpec, ground_basis
from .pauli import PauliString, pauli_multiply
from .statevector import StateVector
from .vqa import EXACT, G_DECOMPOSITION, CostConfig, heff_matrix, signed_cost_c


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float


def _random_string(rng: np.random.Generator, n: int) -> PauliString:
    return PauliString.from_label("".join(rng.choice(list("IXYZ"), size=n)))


def check_pauli_products() -> tuple[bool, str]:
    rng = np.random.default_rng(0)
    worst = 0.0
    for _ in range(50):
        a, b = _random_string(rng, 3), _random_string(rng, 3)
        phase, c = pauli_multiply(a, b)
        worst = max(worst, float(np.max(np.abs(a.to_dense() @ b.to_dense() - phase * c.to_dense()))))
    return worst < 1e-12, f"max deviation {worst:.2e}"


def check_exact_heff() -> tuple[bool, str]:
    model = ModelSpec(4, 1.0)
    sol = solve_exact(model.h0(), model.v(), model.epsilon, ground_basis(4))
    d_eig = float(np.max(np.abs(sol.heff.eigenvalues - sol.target_eigenvalues)))
    d_proj = float(np.max(np.abs(sol.u @ sol.p @ sol.u.conj().T - sol.p0)))
    return max(d_eig, d_proj) < 1e-8, f"eigenvalue dev {d_eig:.2e}, projector dev {d_proj:.2e}"


def check_trace_identity() -> tuple[bool, str]:
    model = ModelSpec(4, 1.0)
    basis, h, circuit = ground_basis(4), model.hamiltonian(), preset_n4_ansatz()
    hd = h.to_dense()
    rng = np.random.default_rng(1)
    worst = 0.0
    for _ in range(10):
        theta = rng.uniform(-np.pi, np.pi, 3)
        u = circuit.unitary(theta)
        p = u.conj().T @ (basis.matrix @ basis.matrix.conj().T) @ u
        worst = max(worst, abs(signed_cost_c(basis, h, circuit, theta) - trace_c(hd, p, basis.size)))
    return worst < 1e-10, f"max deviation {worst:.2e}"


def check_g_decomposition() -> tuple[bool, str]:
    model = ModelSpec(4, 1.0)
    basis, h, circuit = ground_basis(4), model.hamiltonian(), preset_n4_ansatz()
    theta = np.array([0.3, -0.7, 1.1])
    direct, _ = heff_matrix(basis, h, circuit, theta, CostConfig(EXACT))
    decomposed, _ = heff_matrix(basis, h, circuit, theta, CostConfig(G_DECOMPOSITION))
    dev = float(np.max(np.abs(direct - decomposed)))
    return dev < 1e-12, f"max deviation {dev:.2e}"


def check_qpe_pipeline() -> tuple[bool, str]:
    model = ModelSpec(4, 1.0)
    basis = ground_basis(4)
    h = model.hamiltonian().to_dense()
    w = qpe.reflection_product(basis, h)
    norms = []
    for i in range(basis.size):
        out = qpe.swt_via_qpe(StateVector(4, basis.state(i)), w, 4)
        norms.append(out.joint.norm)
    dev = float(np.max(np.abs(np.array(norms) - 1.0)))
    return dev < 1e-10, f"joint-state norm deviation {dev:.2e}"


def check_grid_reflection() -> tuple[bool, str]:
    # eigenvalues on the QPE grid: the flip is exact
    l = 3
    levels = np.array([0.0, 2.0, 5.0, 7.0])
    h = np.diag(levels).astype(complex)
    config = qpe.schedule_time(h, l, 3.0)
    worst = 0.0
    for idx, e in enumerate(levels):
        vec = np.eye(4)[idx].astype(complex)
        out = qpe.reflection_via_qpe(StateVector(2, vec), h, config)
        expected = vec if e < 3.0 else -vec
        worst = max(worst, float(np.max(np.abs(out.data - expected))))
    return worst < 1e-10, f"max deviation {worst:.2e}"


def check_pauli_reconstruction() -> tuple[bool, str]:
    model = ModelSpec(4, 1.0)
    basis = ground_basis(4)
    u, heff = qpe.exact_reference(model.h0(), model.v(), 1.0, basis)
    labels = ["IIII", "XIIX", "YIIY", "ZIIZ"]
    ansatz = qpe.pauli_basis_completion([PauliString.from_label(s) for s in labels], 4)
    g = qpe.heff_pauli_reconstruction(model.hamiltonian(), u, basis, ansatz)
    rebuilt = qpe.restricted_matrix(qpe.reconstructed_operator(g, 4), basis)
    dev = float(np.max(np.abs(rebuilt - heff.matrix)))
    return dev < 1e-6, f"max deviation {dev:.2e}"


CHECKS: dict[str, Callable[[], tuple[bool, str]]] = {
    "pauli_products": check_pauli_products,
    "exact_heff": check_exact_heff,
    "trace_identity": check_trace_identity,
    "g_decomposition": check_g_decomposition,
    "qpe_norm": check_qpe_pipeline,
    "grid_reflection": check_grid_reflection,
    "pauli_reconstruction": check_pauli_reconstruction,
}


def run_checks(names=None) -> list[CheckResult]:
    results = []
    for name in names or CHECKS:
        start = time.perf_counter()
        passed, detail = CHECKS[name]()
        results.append(CheckResult(name, bool(passed), detail, time.perf_counter() - start))
    return results
