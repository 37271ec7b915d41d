import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.linalg import expm

from flatband.circuit import (
    Circuit,
    Gate,
    bond_groups,
    compression_ratio,
    depth,
    n_steps,
    trotter_circuit,
    trotter_step,
)
from flatband.hamiltonian import HamiltonianTerms, PauliTerm, hopping_terms, interaction_terms, to_matrix
from flatband.lattice import LatticeSpec, build_diamond_chain, build_embedded_chain
from flatband.simulator import SectorPropagator, apply_circuit, prepare_initial

HOP2 = HamiltonianTerms(2, (PauliTerm(-0.5, "XX"), PauliTerm(-0.5, "YY")))
CNOT = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]])


def test_single_bond_is_givens_rotation():
    dt = 0.37
    (gate,) = trotter_step(HOP2, dt).gates
    c, s = np.cos(dt), np.sin(dt)
    ref = np.array([[1, 0, 0, 0], [0, c, 1j * s, 0], [0, 1j * s, c, 0], [0, 0, 0, 1]])
    np.testing.assert_allclose(gate.matrix, ref, atol=1e-14)


def test_commuting_terms_are_exact():
    terms = HamiltonianTerms(3, (PauliTerm(0.4, "ZZI"), PauliTerm(-0.7, "IZZ"), PauliTerm(0.2, "ZIZ")))
    u = trotter_step(terms, 0.3).unitary()
    np.testing.assert_allclose(u, expm(-0.3j * to_matrix(terms)), atol=1e-12)


def test_zero_dt_gives_identity_gates():
    terms = hopping_terms(build_diamond_chain(1, 0.0))
    for g in trotter_step(terms, 0.0).gates:
        np.testing.assert_allclose(g.matrix, np.eye(4))


def test_step_counts():
    terms = hopping_terms(build_diamond_chain(4, 0.0))
    assert n_steps(0.1, 0.1) == 1
    step_depth = depth(trotter_step(terms, 0.1))
    assert step_depth == 4
    assert depth(trotter_circuit(terms, 6.0, 0.1)) == 60 * step_depth
    with pytest.raises(ValueError):
        trotter_circuit(terms, 0.25, 0.1)


def test_depth_examples():
    assert depth(Circuit(4)) == 0
    assert depth(Circuit(4, (Gate((0, 1), CNOT),))) == 1
    assert depth(Circuit(4, (Gate((0, 1), CNOT), Gate((2, 3), CNOT)))) == 1
    assert depth(Circuit(3, (Gate((0, 1), CNOT), Gate((1, 2), CNOT)))) == 2


def test_single_qubit_layers_do_not_count():
    h = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
    c = Circuit(2, (Gate((0,), h), Gate((0, 1), CNOT), Gate((1,), h)))
    assert len(c.layers) == 3 and depth(c) == 1


def test_compression_ratio():
    assert compression_ratio(100, 15) == 85.0
    assert compression_ratio(7, 7) == 0.0
    with pytest.raises(ValueError):
        compression_ratio(0, 0)


def test_bond_groups_disjoint_and_chain_split():
    groups = bond_groups([(0, 1), (1, 2), (2, 3), (3, 4)])
    assert groups == [[(0, 1), (2, 3)], [(1, 2), (3, 4)]]
    spec = build_diamond_chain(4, 0.0)
    for group in bond_groups([(i, j) for i, j, _ in spec.edges]):
        qubits = [q for bond in group for q in bond]
        assert len(qubits) == len(set(qubits))


def test_interaction_adds_single_qubit_gates():
    spec = build_embedded_chain(2, 2, 1.0, True)
    step = trotter_step(hopping_terms(spec) + interaction_terms(spec, 2.0), 0.1)
    assert sum(not g.is_two_qubit for g in step.gates) == spec.n_sites
    assert sum(g.is_two_qubit for g in step.gates) == len(spec.edges)


def test_trotter_first_order():
    spec = build_diamond_chain(4, 0.0)
    terms = hopping_terms(spec)
    psi0 = prepare_initial(13, [6])
    exact = SectorPropagator(terms, 1).evolve(psi0, 2.0).amplitudes
    errs = [
        np.linalg.norm(apply_circuit(psi0, trotter_circuit(terms, 2.0, dt)).amplitudes - exact)
        for dt in (0.2, 0.1, 0.05)
    ]
    for a, b in zip(errs, errs[1:]):
        assert 0.75 * 2 <= a / b <= 1.25 * 2


def test_non_unitary_gate_rejected():
    with pytest.raises(ValueError):
        Gate((0,), np.array([[1, 0], [0, 2]]))
    with pytest.raises(ValueError):
        Gate((0, 0), np.eye(4))
    with pytest.raises(ValueError):
        Circuit(1, (Gate((0, 1), np.eye(4)),))


def test_three_qubit_term_rejected():
    with pytest.raises(ValueError):
        trotter_step(HamiltonianTerms(3, (PauliTerm(1.0, "XXX"),)), 0.1)


def test_text_roundtrip():
    spec = build_diamond_chain(1, 0.9)
    circ = trotter_circuit(hopping_terms(spec) + interaction_terms(spec, 1.0), 0.3, 0.1)
    back = Circuit.from_text(circ.to_text())
    assert back.n_qubits == circ.n_qubits and len(back) == len(circ)
    np.testing.assert_array_equal(back.unitary(), circ.unitary())


@settings(max_examples=20, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 4), st.integers(0, 4)).filter(lambda p: p[0] != p[1]), max_size=12))
def test_depth_bounds(pairs):
    circ = Circuit(5, tuple(Gate(p, CNOT) for p in pairs))
    d = depth(circ)
    assert d <= len(pairs)
    assert d >= max((sum(q in p for p in pairs) for q in range(5)), default=0)


def test_repeat_and_concat():
    c = trotter_step(HOP2, 0.2)
    np.testing.assert_allclose((c + c).unitary(), c.repeat(2).unitary())
    np.testing.assert_allclose(c.repeat(3).unitary(), expm(-0.6j * to_matrix(HOP2)), atol=1e-12)
