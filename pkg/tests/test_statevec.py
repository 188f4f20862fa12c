import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles as O
from oneway.stabilizer import Graph, random_graph
from oneway.statevec import (
    X_BASIS,
    Y_BASIS,
    Z_BASIS,
    EquatorialBasis,
    ForbiddenBranchError,
    StateVector,
    apply_1q,
    apply_cphase,
    apply_unitary,
    basis_state,
    branch_probability,
    equal_up_to_global_phase,
    evolve_ising,
    fidelity,
    is_unitary,
    measure,
    new_plus_state,
    product_state,
    random_state,
    random_unitary,
)

angles = st.floats(-2 * math.pi, 2 * math.pi, allow_nan=False)


def test_plus_state_amplitudes():
    s = new_plus_state(3)
    assert np.allclose(s.amplitudes, np.full(8, 1 / math.sqrt(8)))


def test_basis_state_little_endian():
    s = basis_state([1, 0, 0])
    assert s.amplitudes[1] == 1


def test_product_state_order():
    s = product_state([np.array([0, 1]), np.array([1, 0])])
    assert s.amplitudes[1] == 1


def test_rejects_unnormalized():
    with pytest.raises(ValueError):
        StateVector(np.array([1.0, 1.0], dtype=complex))


def test_from_amplitudes_normalizes():
    s = StateVector.from_amplitudes([1, 1j], normalize=True)
    assert math.isclose(s.norm(), 1.0)


def test_csv_round_trip(rng):
    s = random_state(3, rng)
    assert np.allclose(StateVector.from_csv(s.to_csv()).amplitudes, s.amplitudes)


def test_cphase_matches_dense(rng):
    s = random_state(4, rng)
    got = apply_cphase(s, 1, 3).amplitudes
    assert np.allclose(got, O.cz_matrix(4, 1, 3) @ s.amplitudes)


def test_apply_1q_matches_dense(rng):
    s = random_state(3, rng)
    u = O.random_u2(rng)
    assert np.allclose(apply_1q(s, 2, u).amplitudes, O.site_op(3, 2, u) @ s.amplitudes)


def test_apply_unitary_qubit_order(rng):
    s = random_state(3, rng)
    # qubits[0] is the control (low bit of the 4x4 index)
    got = apply_unitary(s, O.cnot(2, 0, 1), [2, 0]).amplitudes
    assert np.allclose(got, O.cnot(3, 2, 0) @ s.amplitudes)


def test_random_unitary_is_unitary(rng):
    assert is_unitary(random_unitary(8, rng))


@given(st.integers(0, 1000))
def test_ising_at_pi_over_g_is_cphase(seed):
    rng = np.random.default_rng(seed)
    g = Graph.from_edges(3, [(0, 1), (1, 2)]) if seed % 2 else random_graph(4, 0.5, rng)
    s = random_state(g.n, rng)
    want = s
    for i, j in g.sorted_edges():
        want = apply_cphase(want, i, j)
    gval = 0.3 + seed % 5
    assert equal_up_to_global_phase(evolve_ising(s, g, gval, math.pi / gval), want)


@given(angles)
def test_equatorial_eigenvectors(phi):
    b, _ = EquatorialBasis(phi).canonical()
    for s in (0, 1):
        v = b.eigenvector(s)
        op = math.cos(b.angle) * O.X + math.sin(b.angle) * O.Y
        assert np.allclose(op @ v, (-1) ** s * v)


def test_canonical_flips_sign():
    b, flipped = EquatorialBasis(math.pi + 0.2).canonical()
    assert flipped and math.isclose(b.angle, 0.2)


def test_measure_probabilities_sum(rng):
    s = random_state(3, rng)
    for basis in (X_BASIS, Y_BASIS, Z_BASIS):
        total = sum(branch_probability(s, 1, basis, k) for k in (0, 1))
        assert math.isclose(total, 1.0)


def test_measure_removes_qubit(rng):
    s = random_state(3, rng)
    res = measure(s, 0, X_BASIS, branch=1)
    # qubit 0 gone: post = <-|_0 psi, normalized
    minus = np.array([1, -1]) / math.sqrt(2)
    want = s.tensor() @ minus.conj()
    want = want.ravel() / np.linalg.norm(want)
    assert res.post_state.n_qubits == 2
    assert equal_up_to_global_phase(res.post_state, StateVector(want))
    assert math.isclose(res.probability, float(np.linalg.norm(s.tensor() @ minus.conj()) ** 2))


def test_forbidden_branch():
    with pytest.raises(ForbiddenBranchError):
        measure(basis_state([0]), 0, Z_BASIS, branch=1)


def test_measure_seeded_reproducible(rng):
    s = random_state(2, rng)
    a = measure(s, 1, X_BASIS, rng=np.random.default_rng(5))
    b = measure(s, 1, X_BASIS, rng=np.random.default_rng(5))
    assert a.outcome == b.outcome


def test_fidelity_phase_invariant(rng):
    s = random_state(2, rng)
    t = StateVector(s.amplitudes * np.exp(0.7j))
    assert math.isclose(fidelity(s, t), 1.0)
