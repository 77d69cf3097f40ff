from __future__ import annotations

import json

import numpy as np
import pytest
import scipy.linalg as sla
from hypothesis import given, settings
from hypothesis import strategies as st

from swtkit.dense import (
    direct_rotation,
    eigh,
    exact_effective_hamiltonian,
    perturbation_gap_report,
    projector_from_basis,
    reflection,
    solve_exact,
    trace_c,
    window_gap,
)
from swtkit.errors import BranchAmbiguityError, ContractError, SubspaceDimensionError
from swtkit.models import heisenberg_h0, heisenberg_v
from swtkit.pauli import PauliString, PauliSum

X = np.array([[0, 1], [1, 0]], dtype=complex)
PLUS = np.array([1, 1]) / np.sqrt(2)


def _random_hermitian(rng, dim):
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return a + a.conj().T


class TestEigh:
    def test_diagonal(self):
        assert np.allclose(eigh(np.diag([3.0, 1.0])).eigenvalues, [1, 3])

    def test_pauli_x(self):
        assert np.allclose(eigh(X).eigenvalues, [-1, 1])

    def test_heisenberg_lowest_four_separated(self):
        h = (heisenberg_h0(4) + heisenberg_v(4)).to_dense()
        spec = eigh(h)
        assert len(spec) == 16
        assert spec.eigenvalues[3] < spec.eigenvalues[4] - 1e-6
        residual = h @ spec.eigenvectors - spec.eigenvectors * spec.eigenvalues
        assert np.max(np.linalg.norm(residual, axis=0)) < 1e-9
        assert np.allclose(spec.eigenvectors.conj().T @ spec.eigenvectors, np.eye(16), atol=1e-10)

    def test_non_hermitian(self):
        with pytest.raises(ContractError):
            eigh(np.array([[0, 1], [0, 0]]))

    def test_deterministic(self):
        h = heisenberg_h0(4).to_dense()
        assert np.array_equal(eigh(h).eigenvectors, eigh(h).eigenvectors)


class TestProjector:
    def test_single_state(self):
        assert np.allclose(projector_from_basis(np.array([1, 0])), np.diag([1, 0]))

    def test_ground_space_commutes(self, basis4):
        p = projector_from_basis(basis4)
        h0 = heisenberg_h0(4).to_dense()
        assert np.allclose(p @ p, p, atol=1e-10)
        assert np.isclose(np.trace(p).real, 4)
        assert np.max(np.abs(p @ h0 - h0 @ p)) < 1e-10

    def test_full_basis(self, rng):
        q, _ = np.linalg.qr(rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8)))
        assert np.allclose(projector_from_basis(q), np.eye(8))

    def test_non_orthonormal(self):
        with pytest.raises(ContractError):
            projector_from_basis(np.array([[1, 1], [0, 1]]))

    def test_reflection_squares_to_identity(self, basis4):
        r = reflection(projector_from_basis(basis4))
        assert np.max(np.abs(r @ r - np.eye(16))) < 1e-10


class TestDirectRotation:
    def test_coincident(self, basis4):
        p = projector_from_basis(basis4)
        assert np.allclose(direct_rotation(p, p), np.eye(16), atol=1e-12)

    def test_one_qubit(self):
        p0 = np.diag([1.0, 0.0]).astype(complex)
        p = np.outer(PLUS, PLUS).astype(complex)
        u = direct_rotation(p0, p)
        # R_P0 R_P = ZX is a quarter turn; its square root is an eighth turn
        c, s = np.cos(np.pi / 4), np.sin(np.pi / 4)
        expected = np.array([[c, s], [-s, c]])
        assert np.allclose(u, expected, atol=1e-12)
        assert np.allclose(u @ p @ u.conj().T, p0, atol=1e-12)
        out = u @ PLUS
        assert np.isclose(abs(out[0]), 1.0)

    def test_heisenberg_mapping(self, exact4):
        u, p, p0 = exact4.u, exact4.p, exact4.p0
        eye = np.eye(16)
        assert np.max(np.abs(u.conj().T @ u - eye)) < 1e-9
        assert np.max(np.abs(u @ p @ u.conj().T - p0)) < 1e-8
        assert np.max(np.abs(u @ (eye - p) @ u.conj().T - (eye - p0))) < 1e-8
        assert np.max(np.abs(u @ u - reflection(p0) @ reflection(p))) < 1e-8
        args = np.angle(np.linalg.eigvals(u))
        assert np.all((args > -np.pi / 2) & (args <= np.pi / 2 + 1e-12))

    def test_rank_mismatch(self):
        with pytest.raises(SubspaceDimensionError):
            direct_rotation(np.diag([1.0, 0.0]), np.eye(2))

    def test_branch_cut(self):
        # orthogonal subspaces give R_P0 R_P = -I
        with pytest.raises(BranchAmbiguityError):
            direct_rotation(np.diag([1.0, 0.0]), np.diag([0.0, 1.0]))

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_square_root_property(self, seed):
        rng = np.random.default_rng(seed)
        base = np.eye(4, dtype=complex)[:, :2]
        # small random tilt keeps the eigenphases well away from pi
        tilt = sla.expm(1j * 0.3 * _random_hermitian(rng, 4) / 4)
        p0 = projector_from_basis(base)
        p = projector_from_basis(tilt @ base)
        u = direct_rotation(p0, p)
        assert np.max(np.abs(u @ u - reflection(p0) @ reflection(p))) < 1e-8
        assert np.max(np.abs(u @ p @ u.conj().T - p0)) < 1e-8


class TestEffectiveHamiltonian:
    def test_unperturbed(self, basis4):
        h0 = heisenberg_h0(4).to_dense()
        heff = exact_effective_hamiltonian(h0, np.eye(16), basis4)
        assert np.allclose(heff.matrix, -6 * np.eye(4), atol=1e-10)
        assert np.allclose(heff.eigenvalues, -6)

    def test_matches_lowest_eigenvalues(self, exact4):
        lowest = np.linalg.eigvalsh(exact4.h)[:4]
        assert np.max(np.abs(exact4.heff.eigenvalues - lowest)) < 1e-8
        assert np.max(np.abs(exact4.heff.matrix - exact4.heff.matrix.conj().T)) < 1e-10

    def test_commuting_perturbation(self, basis4):
        h0 = heisenberg_h0(4)
        v = PauliSum(4, [(1.0, PauliString.from_label("ZIIZ"))])
        sol = solve_exact(h0, v, 1.0, basis4)
        assert np.allclose(sol.u, np.eye(16), atol=1e-10)
        cols = basis4.matrix
        assert np.allclose(sol.heff.matrix, cols.conj().T @ sol.h @ cols, atol=1e-10)

    def test_rephasing_invariance(self, exact4, basis4, rng):
        phases = np.exp(1j * rng.uniform(0, 2 * np.pi, 4))
        rephased = basis4.matrix * phases
        heff = exact_effective_hamiltonian(exact4.h, exact4.u, rephased)
        assert np.max(np.abs(heff.eigenvalues - exact4.heff.eigenvalues)) < 1e-8

    def test_non_unitary(self, basis4):
        with pytest.raises(ContractError):
            exact_effective_hamiltonian(np.eye(16), 2 * np.eye(16), basis4)

    def test_report_serializes(self, exact4):
        data = json.loads(json.dumps(exact4.heff.to_dict()))
        assert len(data["heff_matrix"]) == 4
        assert len(data["eigenvalues"]) == 4


class TestGapReport:
    def test_default_model(self):
        report = perturbation_gap_report(heisenberg_h0(4), heisenberg_v(4), 1.0, 0, 4)
        assert report.gap == pytest.approx(8.0)
        assert report.v_norm == pytest.approx(6.0)
        assert report.condition_met is False
        assert "warning" in report.to_dict()

    def test_zero_epsilon(self):
        report = perturbation_gap_report(heisenberg_h0(4), heisenberg_v(4), 0.0, 0, 4)
        assert report.v_norm == 0.0
        assert report.condition_met

    def test_half_epsilon(self):
        report = perturbation_gap_report(heisenberg_h0(4), heisenberg_v(4), 0.5, 0, 4)
        assert report.v_norm == pytest.approx(3.0)
        assert report.condition_met

    def test_window_gap_sides(self):
        vals = [0.0, 1.0, 3.0, 7.0]
        assert window_gap(vals, 1, 2) == 1.0
        assert window_gap(vals, 0, 3) == 4.0
        assert window_gap(vals, 0, 4) == float("inf")


class TestTraceC:
    def test_block_diagonal(self):
        h = np.diag([1.0, -2.0, 0.5, 3.0])
        assert trace_c(h, np.diag([1.0, 0, 1, 0]), 2) == 0.0

    def test_pauli_x(self):
        assert trace_c(X, np.diag([1.0, 0.0]), 1) == pytest.approx(1.0)

    def test_exact_eigenspace(self, exact4):
        assert abs(trace_c(exact4.h, exact4.p, 4)) < 1e-9

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_non_negative(self, seed):
        rng = np.random.default_rng(seed)
        h = _random_hermitian(rng, 8)
        q, _ = np.linalg.qr(rng.normal(size=(8, 3)) + 1j * rng.normal(size=(8, 3)))
        assert trace_c(h, projector_from_basis(q), 3) >= -1e-12
