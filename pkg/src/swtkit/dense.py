"""Exact dense-matrix engine used as ground truth by every other algorithm."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg as sla

from .errors import (
    BranchAmbiguityError,
    ContractError,
    DimensionError,
    SubspaceDimensionError,
)
from .policy import DEFAULT_POLICY, NumericPolicy


@dataclass(frozen=True)
class SpectralDecomposition:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray  # columns

    def __len__(self) -> int:
        return len(self.eigenvalues)

    def subset(self, start: int, stop: int) -> np.ndarray:
        return self.eigenvectors[:, start:stop]


def _as_square(a) -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {a.shape}")
    return a


def hermiticity_deviation(a: np.ndarray) -> float:
    return float(np.max(np.abs(a - a.conj().T))) if a.size else 0.0


def degenerate_clusters(values: Sequence[float], tol: float) -> list[range]:
    """Group consecutive sorted values closer than ``tol``."""
    clusters = []
    start = 0
    for k in range(1, len(values) + 1):
        if k == len(values) or values[k] - values[k - 1] > tol:
            clusters.append(range(start, k))
            start = k
    return clusters


def eigh(a, policy: NumericPolicy = DEFAULT_POLICY) -> SpectralDecomposition:
    """Ascending spectral decomposition of a Hermitian matrix.

    Degenerate clusters are re-orthonormalized in the diagonalizer's output
    order so repeated calls give identical eigenvectors.
    """
    a = _as_square(a)
    if hermiticity_deviation(a) > policy.hermitian_tol:
        raise ContractError("eigh requires a Hermitian matrix")
    vals, vecs = np.linalg.eigh(a)
    for cluster in degenerate_clusters(vals, policy.degeneracy_tol):
        if len(cluster) > 1:
            block = vecs[:, cluster.start:cluster.stop]
            q, r = np.linalg.qr(block)
            # undo the sign freedom of QR so Gram-Schmidt keeps input orientation
            q = q * np.where(np.diag(r).real < 0, -1, 1)
            vecs[:, cluster.start:cluster.stop] = q
    return SpectralDecomposition(vals, vecs)


def _columns(states) -> np.ndarray:
    if hasattr(states, "matrix"):
        return states.matrix
    cols = np.asarray(states, dtype=complex)
    if cols.ndim == 1:
        cols = cols[:, None]
    return cols


def projector_from_basis(states, policy: NumericPolicy = DEFAULT_POLICY) -> np.ndarray:
    """``sum_i |v_i><v_i|`` for a SubspaceBasis or a matrix of orthonormal columns."""
    cols = _columns(states)
    gram = cols.conj().T @ cols
    if np.max(np.abs(gram - np.eye(gram.shape[0]))) > policy.orthonormal_tol:
        raise ContractError("projector inputs are not orthonormal")
    return cols @ cols.conj().T


def reflection(projector: np.ndarray) -> np.ndarray:
    """``R = 2P - I``."""
    projector = _as_square(projector)
    return 2.0 * projector - np.eye(projector.shape[0])


def projector_rank(projector: np.ndarray) -> int:
    return int(round(float(np.trace(projector).real)))


def unitary_sqrt(w: np.ndarray, guard: float = DEFAULT_POLICY.branch_guard) -> np.ndarray:
    """Principal square root of a unitary: half-angles of phases in (-pi, pi]."""
    w = _as_square(w)
    t, z = sla.schur(w, output="complex")
    phases = np.angle(np.diag(t))
    if np.any(np.abs(np.abs(phases) - np.pi) < guard):
        raise BranchAmbiguityError("an eigenphase lies on the square-root branch cut at pi")
    phases = np.where(phases <= -np.pi, np.pi, phases)
    return z @ np.diag(np.exp(0.5j * phases)) @ z.conj().T


def direct_rotation(p0: np.ndarray, p: np.ndarray, policy: NumericPolicy = DEFAULT_POLICY) -> np.ndarray:
    """Unitary ``U = sqrt(R_P0 R_P)`` with ``U P U^dag = P0``."""
    p0, p = _as_square(p0), _as_square(p)
    if p0.shape != p.shape:
        raise DimensionError("projectors act on different spaces")
    if projector_rank(p0) != projector_rank(p):
        raise SubspaceDimensionError(
            f"projector ranks differ: {projector_rank(p0)} vs {projector_rank(p)}"
        )
    return unitary_sqrt(reflection(p0) @ reflection(p), policy.branch_guard)


@dataclass
class EffectiveHamiltonian:
    """M x M effective Hamiltonian in a subspace basis and its spectrum.

    ``states`` optionally holds the eigenvectors lifted back to the full
    Hilbert space (columns), which is what fidelities compare when present.
    """

    matrix: np.ndarray
    labels: list[str]
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    states: np.ndarray | None = None
    fidelities: np.ndarray | None = None
    hermiticity_deviation: float = 0.0
    raw_matrix: np.ndarray | None = None
    stderr: np.ndarray | None = None
    metadata: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def from_matrix(cls, matrix, labels=None, lift: np.ndarray | None = None,
                    hermitize: bool = False, policy: NumericPolicy = DEFAULT_POLICY,
                    **extra) -> "EffectiveHamiltonian":
        """Diagonalize ``matrix``; ``lift`` maps subspace coordinates to full states."""
        raw = _as_square(matrix)
        deviation = hermiticity_deviation(raw)
        mat = 0.5 * (raw + raw.conj().T) if hermitize else raw
        spec = eigh(mat, policy.updated(hermitian_tol=max(policy.hermitian_tol, 1e-9)))
        labels = list(labels) if labels is not None else [str(i) for i in range(mat.shape[0])]
        states = None if lift is None else np.asarray(lift) @ spec.eigenvectors
        return cls(mat, labels, spec.eigenvalues, spec.eigenvectors, states=states,
                   hermiticity_deviation=deviation,
                   raw_matrix=raw if hermitize else None, **extra)

    def compare(self, reference: "EffectiveHamiltonian", policy: NumericPolicy = DEFAULT_POLICY) -> np.ndarray:
        """Per-eigenstate fidelity against ``reference`` (ascending order).

        Degenerate clusters of the reference are compared by normalized
        subspace overlap, shared by every member of the cluster.
        """
        if reference.dim != self.dim:
            raise DimensionError("effective Hamiltonians of different size")
        if self.states is not None and reference.states is not None:
            mine, theirs = self.states, reference.states
        else:
            mine, theirs = self.eigenvectors, reference.eigenvectors
        scale = max(1.0, float(np.max(np.abs(reference.eigenvalues))))
        fids = np.empty(self.dim)
        for cluster in degenerate_clusters(reference.eigenvalues, policy.cluster_tol * scale):
            sl = slice(cluster.start, cluster.stop)
            overlap = theirs[:, sl].conj().T @ mine[:, sl]
            fids[sl] = np.sum(np.abs(overlap) ** 2) / len(cluster)
        self.fidelities = fids
        return fids

    def to_dict(self) -> dict:
        out = {
            "labels": self.labels,
            "heff_matrix": _complex_rows(self.matrix),
            "eigenvalues": [float(v) for v in self.eigenvalues],
            "hermiticity_deviation": self.hermiticity_deviation,
        }
        if self.fidelities is not None:
            out["fidelities"] = [float(f) for f in self.fidelities]
        if self.stderr is not None:
            out["stderr"] = [[float(v) for v in row] for row in np.real(self.stderr)]
        if self.raw_matrix is not None:
            out["raw_matrix"] = _complex_rows(self.raw_matrix)
        return out


def _complex_rows(mat: np.ndarray) -> list[list[list[float]]]:
    return [[[float(v.real), float(v.imag)] for v in row] for row in np.asarray(mat)]


def exact_effective_hamiltonian(h: np.ndarray, u: np.ndarray, basis,
                                policy: NumericPolicy = DEFAULT_POLICY) -> EffectiveHamiltonian:
    """``<phi_i| U H U^dag |phi_j>`` with eigenstates lifted by ``U^dag``."""
    h, u = _as_square(h), _as_square(u)
    cols = _columns(basis)
    if cols.shape[0] != h.shape[0] or u.shape != h.shape:
        raise DimensionError("H, U and basis dimensions disagree")
    if np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))) > 1e-9:
        raise ContractError("U is not unitary")
    lifted = u.conj().T @ cols
    heff = lifted.conj().T @ h @ lifted
    labels = getattr(basis, "labels", None)
    return EffectiveHamiltonian.from_matrix(heff, labels, lift=lifted, policy=policy)


@dataclass(frozen=True)
class GapReport:
    gap: float
    v_norm: float
    condition_met: bool

    def to_dict(self) -> dict:
        out = {"gap": self.gap, "v_norm": self.v_norm, "condition_met": self.condition_met}
        if not self.condition_met:
            out["warning"] = "perturbation norm not below half the gap; block structure not guaranteed"
        return out


def window_gap(eigenvalues: Sequence[float], k: int, m: int) -> float:
    """Separation of levels ``k .. k+m-1`` (0-based) from the rest of the spectrum.

    A side with no levels beyond it does not constrain the gap; a window
    covering the whole spectrum has infinite gap.
    """
    vals = np.asarray(eigenvalues, dtype=float)
    gaps = []
    if k > 0:
        gaps.append(vals[k] - vals[k - 1])
    if k + m < len(vals):
        gaps.append(vals[k + m] - vals[k + m - 1])
    return float(min(gaps)) if gaps else float("inf")


def operator_norm(a: np.ndarray) -> float:
    a = _as_square(a)
    if a.size == 0:
        return 0.0
    if hermiticity_deviation(a) < 1e-10:
        return float(np.max(np.abs(np.linalg.eigvalsh(a))))
    return float(np.linalg.norm(a, 2))


def perturbation_gap_report(h0, v, epsilon: float, k: int, m: int,
                            policy: NumericPolicy = DEFAULT_POLICY) -> GapReport:
    """Advisory check of ``||eps V|| < gap / 2``; never blocks a computation."""
    h0 = _dense(h0, policy)
    v = _dense(v, policy)
    vals = eigh(h0, policy).eigenvalues
    gap = window_gap(vals, k, m)
    v_norm = abs(float(epsilon)) * operator_norm(v)
    return GapReport(gap, v_norm, bool(v_norm < gap / 2))


def _dense(op, policy) -> np.ndarray:
    if hasattr(op, "to_dense"):
        return op.to_dense(policy)
    return _as_square(op)


def trace_c(h: np.ndarray, p: np.ndarray, m: int) -> float:
    """``(1/M) Tr(P H Q Q H P)``: the squared size of the off-diagonal block."""
    h, p = _as_square(h), _as_square(p)
    q = np.eye(p.shape[0]) - p
    hpq = p @ h @ q
    return float(np.real(np.trace(hpq @ hpq.conj().T))) / m


@dataclass
class ExactSolution:
    """Everything the direct-rotation route produces for one model."""

    h: np.ndarray
    p0: np.ndarray
    p: np.ndarray
    u: np.ndarray
    heff: EffectiveHamiltonian
    gap_report: GapReport
    target_eigenvalues: np.ndarray
    spectrum: SpectralDecomposition


def solve_exact(h0, v, epsilon: float, basis, k: int = 0,
                policy: NumericPolicy = DEFAULT_POLICY) -> ExactSolution:
    """Direct-rotation effective Hamiltonian for ``H = H0 + eps V``.

    ``basis`` spans the unperturbed window starting at level ``k``; the
    perturbed window is the same range of levels of ``H``.
    """
    h0d, vd = _dense(h0, policy), _dense(v, policy)
    h = h0d + float(epsilon) * vd
    cols = _columns(basis)
    m = cols.shape[1]
    report = perturbation_gap_report(h0d, vd, epsilon, k, m, policy)
    spectrum = eigh(h, policy)
    p0 = projector_from_basis(cols, policy)
    p = projector_from_basis(spectrum.subset(k, k + m), policy)
    u = direct_rotation(p0, p, policy)
    heff = exact_effective_hamiltonian(h, u, basis, policy)
    return ExactSolution(h, p0, p, u, heff, report, spectrum.eigenvalues[k:k + m], spectrum)
