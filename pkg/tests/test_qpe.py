from __future__ import annotations

import math

import numpy as np
import pytest

from swtkit import qpe
from swtkit.dense import eigh, projector_from_basis, reflection
from swtkit.errors import ResourceError, SchedulingError, ValidationError
from swtkit.models import heisenberg_h0
from swtkit.pauli import PauliString
from swtkit.statevector import StateVector

END_PAIRS = ["IIII", "XIIX", "YIIY", "ZIIZ"]


def _basis_states(basis):
    return [StateVector(basis.n_qubits, basis.state(i)) for i in range(basis.size)]


@pytest.fixture(scope="module")
def w4(model4, basis4):
    return qpe.reflection_product(basis4, model4.hamiltonian())


class TestSchedule:
    def test_threshold_bin(self):
        width = 3.0
        # (thr - E_min) t / 2 pi = 0.25 with t = 2 pi (1 - 1/8) / width
        thr = 0.25 * width / (1 - 1 / 8)
        config = qpe.schedule_time(np.diag([0.0, width]), 3, thr)
        assert config.k_threshold == 2
        assert config.shift == 0.0
        assert config.t == pytest.approx(2 * math.pi * 7 / 8 / width)

    def test_heisenberg(self, model4):
        h = model4.hamiltonian().to_dense()
        thr = qpe.reflection_threshold(model4.h0(), 0, 4)
        assert thr == pytest.approx(-2.0)
        config = qpe.schedule_time(h, 6, thr)
        scaled = (np.linalg.eigvalsh(h) - config.shift) * config.t
        assert scaled.min() >= -1e-12 and scaled.max() < 2 * math.pi
        assert 0 <= config.k_threshold < 64

    @pytest.mark.parametrize("thr", [0.01, 0.5, 0.99])
    def test_single_ancilla(self, thr):
        assert qpe.schedule_time(np.diag([0.0, 1.0]), 1, thr).k_threshold == 1

    def test_zero_width(self):
        with pytest.raises(SchedulingError):
            qpe.schedule_time(np.eye(2), 3, 1.0)

    def test_threshold_outside(self):
        with pytest.raises(SchedulingError):
            qpe.schedule_time(np.diag([0.0, 1.0]), 3, 2.0)

    def test_no_ancilla(self):
        with pytest.raises(ValidationError):
            qpe.schedule_time(np.diag([0.0, 1.0]), 0, 0.5)


class TestPhaseFlipGate:
    def test_one_ancilla(self):
        assert np.array_equal(qpe.phase_flip_gate(1, 1), np.diag([1, -1]))

    def test_all_flipped(self):
        assert np.array_equal(qpe.phase_flip_gate(3, 0), -np.eye(8))

    def test_none_flipped(self):
        assert np.array_equal(qpe.phase_flip_gate(3, 8), np.eye(8))

    def test_out_of_range(self):
        with pytest.raises(ValidationError):
            qpe.phase_flip_gate(2, 5)


class TestHalfPhase:
    def test_principal_reads_upper_bins_as_negative(self):
        w = qpe.half_phase_weights(2)
        assert np.allclose(w, np.exp(-1j * math.pi * np.array([0, 1, -2, -1]) / 4))

    def test_literal(self):
        w = qpe.half_phase_weights(2, qpe.LITERAL)
        assert np.allclose(w, np.exp(-1j * math.pi * np.arange(4) / 4))

    def test_unknown_branch(self):
        with pytest.raises(ValidationError):
            qpe.half_phase_weights(2, "other")


class TestReflection:
    def test_grid_aligned_is_exact(self):
        levels = np.array([0.0, 2.0, 5.0, 7.0])
        h = np.diag(levels)
        config = qpe.schedule_time(h, 3, 3.0)
        assert config.k_threshold == 3
        r_exact = np.diag(np.where(levels < 3.0, 1.0, -1.0))
        rng = np.random.default_rng(0)
        vec = rng.normal(size=4) + 1j * rng.normal(size=4)
        state = StateVector(2, vec / np.linalg.norm(vec))
        out = qpe.reflection_via_qpe(state, h, config)
        assert np.max(np.abs(out.data - r_exact @ state.amplitudes)) < 1e-10
        assert out.leakage < 1e-10
        assert not out.warnings

    @pytest.mark.parametrize("l", [4, 6, 8])
    def test_eigenvectors(self, model4, l):
        h = model4.hamiltonian().to_dense()
        thr = qpe.reflection_threshold(model4.h0(), 0, 4)
        config = qpe.schedule_time(h, l, thr)
        spec = eigh(h)
        for e, vec in zip(spec.eigenvalues, spec.eigenvectors.T):
            out = qpe.reflection_via_qpe(StateVector(4, vec), h, config)
            sign = 1.0 if e < thr else -1.0
            assert out.fidelity(sign * vec) >= 1 - 2.0 ** (-l + 2)
            assert np.sign(np.vdot(vec, out.data).real) == sign

    def test_norm_preserved(self, model4):
        h = model4.hamiltonian().to_dense()
        config = qpe.schedule_time(h, 5, -2.0)
        rng = np.random.default_rng(1)
        vec = rng.normal(size=16) + 1j * rng.normal(size=16)
        out = qpe.reflection_via_qpe(StateVector(4, vec / np.linalg.norm(vec)), h, config)
        assert abs(np.linalg.norm(out.joint.amplitudes) - 1) < 1e-10

    def test_resolution_warning(self):
        h = np.diag([0.0, 1.0])
        # the populated eigenvalue 1 sits right next to the threshold
        config = qpe.schedule_time(h, 2, 0.999)
        out = qpe.reflection_via_qpe(StateVector(1, np.array([0.6, 0.8])), h, config)
        assert out.warnings
        quiet = qpe.reflection_via_qpe(StateVector(1, np.array([0.6, 0.8])), h, qpe.schedule_time(h, 2, 0.5))
        assert not quiet.warnings

    def test_cap(self, model4):
        h = model4.hamiltonian().to_dense()
        config = qpe.QpeConfig(30, 0.1, -10.0, 3)
        with pytest.raises(ResourceError):
            qpe.reflection_via_qpe(StateVector(4, np.eye(16)[0]), h, config)


class TestSwt:
    def test_identity_product(self, basis4):
        for psi in _basis_states(basis4):
            out = qpe.swt_via_qpe(psi, np.eye(16), 4)
            assert np.max(np.abs(out.data - psi.amplitudes)) < 1e-12

    def test_coincident_projectors(self, basis4):
        p0 = projector_from_basis(basis4)
        w = reflection(p0) @ reflection(p0)
        psi = _basis_states(basis4)[1]
        out = qpe.swt_via_qpe(psi, w, 3)
        assert np.max(np.abs(out.data - psi.amplitudes)) < 1e-12

    def test_fidelity_at_l8(self, w4, basis4, exact4):
        for psi in _basis_states(basis4):
            out = qpe.swt_via_qpe(psi, w4, 8)
            assert out.fidelity(exact4.u @ psi.amplitudes) >= 0.99

    def test_leakage_decreases(self, w4, basis4):
        leaks = []
        for l in (4, 6, 8):
            leaks.append([qpe.swt_via_qpe(psi, w4, l).leakage for psi in _basis_states(basis4)])
        leaks = np.array(leaks)
        assert np.all(np.diff(leaks, axis=0) < 0)

    def test_twice_approximates_product(self, w4, basis4, exact4):
        l = 8
        for psi in _basis_states(basis4):
            first = qpe.swt_via_qpe(psi, w4, l)
            f1 = first.fidelity(exact4.u @ psi.amplitudes)
            second = qpe.swt_via_qpe(first.state, w4, l)
            f2 = second.fidelity(w4 @ psi.amplitudes)
            assert f2 >= f1 ** 2 - 2 * max(first.leakage, second.leakage)

    def test_literal_branch_differs(self, w4, basis4, exact4):
        psi = _basis_states(basis4)[0]
        out = qpe.swt_via_qpe(psi, w4, 8, qpe.LITERAL)
        assert out.fidelity(exact4.u @ psi.amplitudes) < 0.5

    def test_branch_warning(self):
        # eigenphase pi sits on the principal cut
        psi = StateVector(1, np.array([1.0, 0.0]))
        out = qpe.swt_via_qpe(psi, np.diag([-1.0, 1.0]), 3)
        assert out.warnings

    def test_non_unitary(self, basis4):
        with pytest.raises(ValidationError):
            qpe.swt_via_qpe(_basis_states(basis4)[0], 2 * np.eye(16), 3)

    def test_cap(self, w4, basis4):
        with pytest.raises(ResourceError):
            qpe.swt_via_qpe(_basis_states(basis4)[0], w4, 20)


class TestStudy:
    def test_monotone_and_rows(self, model4, basis4):
        study = qpe.qpe_study(model4.h0(), model4.v(), 1.0, basis4, [4, 6])
        assert study["monotone"]
        assert [row["l"] for row in study["rows"]] == [4, 6]
        for row in study["rows"]:
            assert set(row) >= {"l", "t", "shift", "k_threshold", "fidelities", "ancilla_leakage"}

    def test_nested_matches_exact_reflection(self, model4, basis4):
        plain = qpe.qpe_study(model4.h0(), model4.v(), 1.0, basis4, [6])
        nested = qpe.qpe_study(model4.h0(), model4.v(), 1.0, basis4, [6], nested=True)
        assert np.allclose(plain["rows"][0]["fidelities"], nested["rows"][0]["fidelities"], atol=1e-6)

    def test_reflection_study_signs(self, model4):
        study = qpe.reflection_study(model4.hamiltonian(), -2.0, [6])
        assert study["rows"][0]["signs_correct"]


class TestPauliReconstruction:
    def test_identity_unitary(self, basis4):
        h0 = heisenberg_h0(4)
        eye = PauliString.identity(4)
        g = qpe.heff_pauli_reconstruction(h0, np.eye(16), basis4, [eye])
        p0 = projector_from_basis(basis4)
        expected = np.trace(p0 @ h0.to_dense() @ p0).real / 16
        assert g[eye] == pytest.approx(expected)
        assert g[eye] == pytest.approx(-1.5)

    def test_empty_set(self, basis4):
        assert qpe.heff_pauli_reconstruction(heisenberg_h0(4), np.eye(16), basis4, []) == {}

    def test_complete_basis_exact(self, model4, basis4, exact4):
        head = [PauliString.from_label(s) for s in END_PAIRS]
        ansatz = qpe.pauli_basis_completion(head, 4)
        assert len(ansatz) == 256
        g = qpe.heff_pauli_reconstruction(model4.hamiltonian(), exact4.u, basis4, ansatz)
        rebuilt = qpe.restricted_matrix(qpe.reconstructed_operator(g, 4), basis4)
        assert np.max(np.abs(rebuilt - exact4.heff.matrix)) < 1e-9
        couplings = [g[s] for s in head[1:]]
        assert max(couplings) - min(couplings) < 1e-9

    def test_subspace_normalization(self, model4, basis4, exact4):
        head = [PauliString.from_label(s) for s in END_PAIRS]
        g = qpe.heff_pauli_reconstruction(model4.hamiltonian(), exact4.u, basis4, head, qpe.SUBSPACE)
        rebuilt = qpe.restricted_matrix(qpe.reconstructed_operator(g, 4), basis4)
        assert np.max(np.abs(rebuilt - exact4.heff.matrix)) < 1e-6
        couplings = [g[s] for s in head[1:]]
        assert max(couplings) - min(couplings) < 1e-6

    def test_unknown_normalization(self, basis4):
        with pytest.raises(ValidationError):
            qpe.heff_pauli_reconstruction(heisenberg_h0(4), np.eye(16), basis4,
                                          [PauliString.identity(4)], "other")
