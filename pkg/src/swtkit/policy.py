from __future__ import annotations

from dataclasses import dataclass, fields, replace


@dataclass(frozen=True)
class NumericPolicy:
    """Tolerances shared by every module; override per call or via config."""

    drop_tol: float = 1e-12
    hermitian_tol: float = 1e-10
    orthonormal_tol: float = 1e-10
    degeneracy_tol: float = 1e-8
    window_tol: float = 1e-10
    branch_guard: float = 1e-6
    cluster_tol: float = 1e-6
    max_dense_qubits: int = 12
    max_state_qubits: int = 20

    def updated(self, **overrides) -> "NumericPolicy":
        known = {f.name: f.type for f in fields(self)}
        clean = {}
        for key, value in overrides.items():
            if key not in known:
                raise KeyError(f"unknown tolerance {key!r}")
            clean[key] = int(value) if key.startswith("max_") else float(value)
        return replace(self, **clean)


DEFAULT_POLICY = NumericPolicy()
