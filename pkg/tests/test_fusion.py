import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from duetsim import gates as G
from duetsim.fusion import FusionConfig, fuse, fused_matrix
from duetsim.gates import PermutationGate
from duetsim.statevec import run_circuit_sv

from oracles import full_operator, gate_to_full, random_gate_sequence


def final_state(gates, n):
    return run_circuit_sv(list(gates), n).amplitudes


class TestFusedMatrix:
    def test_single_x_expanded(self):
        g = fused_matrix([G.x(0)], [0, 1])
        np.testing.assert_allclose(g.matrix, full_operator(2, G.PAULI_MATS["X"], (0,)), atol=0)

    def test_double_cnot_is_identity(self):
        g = fused_matrix([G.cx(0, 1), G.cx(0, 1)], [0, 1])
        np.testing.assert_allclose(g.matrix, np.eye(4), atol=1e-15)

    def test_random_two_qubit_products_match_oracle(self):
        rng = np.random.default_rng(3)
        seq = []
        for _ in range(5):
            targets = tuple(rng.choice(3, size=2, replace=False).tolist())
            seq.append(G.unitary(G.random_unitary(4, rng), targets))
        g = fused_matrix(seq, [0, 1, 2])
        expected = np.eye(8, dtype=np.complex128)
        for gate in seq:
            expected = gate_to_full(gate, 3) @ expected
        np.testing.assert_allclose(g.matrix, expected, atol=1e-13)

    def test_qubit_outside_union_rejected(self):
        with pytest.raises(Exception):
            fused_matrix([G.x(5)], [0, 1])


class TestFuse:
    def test_double_hadamard_fuses_to_identity(self):
        fc = fuse([G.h(0), G.h(0)], FusionConfig(max_fused_gate_size=2))
        assert len(fc) == 1
        np.testing.assert_allclose(fc.gates[0].matrix, np.eye(2), atol=1e-15)

    def test_diagonal_run_becomes_single_diagonal(self):
        circ = [G.cz(0, 1), G.rz(0.4, 1), G.cz(1, 2)]
        fc = fuse(circ, FusionConfig(max_fused_gate_size=2, max_fused_diagonal_gate_size=3))
        assert len(fc) == 1
        fused = fc.gates[0]
        assert isinstance(fused, PermutationGate) and fused.is_diagonal
        expected = np.eye(8, dtype=np.complex128)
        for gate in circ:
            expected = gate_to_full(gate, 3) @ expected
        np.testing.assert_allclose(gate_to_full(fused, 3), expected, atol=1e-14)

    def test_random_circuit_equivalence_and_reduction(self):
        rng = np.random.default_rng(17)
        n = 8
        seq = random_gate_sequence(n, 200, rng, max_arity=2)
        fc = fuse(seq, FusionConfig(max_fused_gate_size=4))
        assert len(fc) < len(seq)
        np.testing.assert_allclose(final_state(fc.gates, n), final_state(seq, n), atol=1e-10)

    def test_oversized_gates_pass_through(self):
        rng = np.random.default_rng(1)
        big = G.unitary(G.random_unitary(32, rng), (0, 1, 2, 3, 4))
        fc = fuse([big, G.h(0)], FusionConfig(max_fused_gate_size=2))
        assert len(fc) == 2
        assert fc.gates[0] is big

    def test_provenance_partitions_sources(self):
        rng = np.random.default_rng(23)
        seq = random_gate_sequence(6, 60, rng, max_arity=2)
        fc = fuse(seq, FusionConfig(max_fused_gate_size=3))
        covered = sorted(i for grp in fc.provenance for i in grp)
        assert covered == list(range(len(seq)))
        # per-qubit timeline order: for every qubit, window index is
        # non-decreasing along its gate sequence
        for q in range(6):
            windows = [
                w
                for w, grp in enumerate(fc.provenance)
                for i in sorted(grp)
                if q in set(seq[i].qubits)
            ]
            assert windows == sorted(windows)

    def test_diagonal_absorbed_into_dense_window_without_growth(self):
        rng = np.random.default_rng(5)
        circ = [
            G.unitary(G.random_unitary(4, rng), (0, 1)),
            G.rz(0.3, 0),  # inside the dense window's qubit set
            G.unitary(G.random_unitary(4, rng), (0, 1)),
        ]
        fc = fuse(circ, FusionConfig(max_fused_gate_size=2))
        assert len(fc) == 1
        np.testing.assert_allclose(final_state(fc.gates, 2), final_state(circ, 2), atol=1e-12)


class TestFusionInvariants:
    @settings(max_examples=40)
    @given(seed=st.integers(0, 2**31))
    def test_semantic_equivalence(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(2, 7))
        seq = random_gate_sequence(n, int(rng.integers(5, 40)), rng, max_arity=2)
        fc = fuse(seq, FusionConfig(max_fused_gate_size=4, max_fused_diagonal_gate_size=6))
        np.testing.assert_allclose(final_state(fc.gates, n), final_state(seq, n), atol=1e-10)

    @settings(max_examples=30)
    @given(seed=st.integers(0, 2**31))
    def test_semantic_equivalence_with_controlled_gates(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(3, 7))
        seq = []
        for _ in range(int(rng.integers(5, 30))):
            kind = rng.integers(0, 4)
            if kind == 0:
                a, b = rng.choice(n, size=2, replace=False)
                seq.append(G.x(int(a), controls=((int(b), int(rng.integers(2))),)))
            elif kind == 1:
                a, b = rng.choice(n, size=2, replace=False)
                seq.append(G.cp(float(rng.uniform(0, 2 * np.pi)), int(a), int(b)))
            elif kind == 2:
                a, b = rng.choice(n, size=2, replace=False)
                seq.append(
                    G.DenseGate(
                        G.random_unitary(2, rng), (int(a),), controls=((int(b), 1),)
                    )
                )
            else:
                seq.append(G.h(int(rng.integers(n))))
        fc = fuse(seq, FusionConfig(max_fused_gate_size=3, max_fused_diagonal_gate_size=4))
        np.testing.assert_allclose(final_state(fc.gates, n), final_state(seq, n), atol=1e-10)

    @given(seed=st.integers(0, 2**31))
    def test_idempotence(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(2, 8))
        seq = random_gate_sequence(n, int(rng.integers(3, 50)), rng, max_arity=3)
        cfg = FusionConfig(max_fused_gate_size=4, max_fused_diagonal_gate_size=5)
        once = fuse(seq, cfg)
        twice = fuse(once.gates, cfg)
        assert len(twice) == len(once)

    @given(seed=st.integers(0, 2**31))
    def test_diagonal_only_circuits_never_produce_dense_gates(self, seed):
        rng = np.random.default_rng(seed)
        n = 8
        circ = []
        for _ in range(40):
            if rng.random() < 0.5:
                circ.append(G.rz(float(rng.uniform(0, 2 * np.pi)), int(rng.integers(0, n))))
            else:
                a, b = rng.choice(n, size=2, replace=False)
                circ.append(G.cz(int(a), int(b)))
        fc = fuse(circ, FusionConfig(max_fused_gate_size=2, max_fused_diagonal_gate_size=4))
        assert all(isinstance(g, PermutationGate) and g.is_diagonal for g in fc.gates)

    def test_aligned_diagonal_circuit_packs_to_span_over_max(self):
        # gates grouped within window-sized qubit blocks reach the ideal count
        n, dmax = 8, 4
        circ = [G.rz(0.1 * (q + 1), q) for q in range(n)]
        for q in range(0, n - 1, 2):
            circ.append(G.cz(q, q + 1))
        fc = fuse(circ, FusionConfig(max_fused_gate_size=2, max_fused_diagonal_gate_size=dmax))
        assert all(isinstance(g, PermutationGate) and g.is_diagonal for g in fc.gates)
        assert len(fc) == -(-n // dmax)
