import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles as O
from oneway.stabilizer import (
    Graph,
    GraphFormatError,
    Multigraph,
    PauliOperator,
    conjugate_by_cphase,
    contract_edges,
    cycle_graph,
    delete_vertex_z,
    expectation,
    format_graph,
    graph_state,
    grid_graph,
    load_graph,
    parse_graph,
    partition_labels,
    path_graph,
    random_graph,
    reduce_multigraph,
    save_graph,
    stabilizer_generators,
)
from oneway.statevec import Z_BASIS, equal_up_to_global_phase, measure, random_state

labels = st.text(alphabet="IXYZ", min_size=1, max_size=4)


@st.composite
def graphs(draw, max_n=6):
    n = draw(st.integers(1, max_n))
    pairs = [(u, v) for u in range(n) for v in range(u + 1, n)]
    chosen = draw(st.lists(st.sampled_from(pairs), unique=True)) if pairs else []
    return Graph.from_edges(n, chosen)


@given(labels)
def test_pauli_matrix_matches_label(label):
    assert np.allclose(PauliOperator.from_label(label).to_matrix(), O.pauli_matrix(label))


@given(st.data())
def test_pauli_product_matches_matrices(data):
    n = data.draw(st.integers(1, 3))
    a = data.draw(st.text(alphabet="IXYZ", min_size=n, max_size=n))
    b = data.draw(st.text(alphabet="IXYZ", min_size=n, max_size=n))
    pa, pb = PauliOperator.from_label(a), PauliOperator.from_label(b)
    assert np.allclose((pa * pb).to_matrix(), O.pauli_matrix(a) @ O.pauli_matrix(b))
    ma, mb = O.pauli_matrix(a), O.pauli_matrix(b)
    assert pa.commutes_with(pb) == np.allclose(ma @ mb, mb @ ma)


def test_y_convention():
    y = PauliOperator.from_label("Y")
    assert y.is_hermitian()
    assert np.allclose(y.to_matrix(), O.Y)


@given(graphs())
def test_graph_state_matches_dense(g):
    assert np.allclose(graph_state(g).amplitudes, O.dense_graph_state(g.n, g.sorted_edges()))


@given(graphs())
def test_generators_stabilize(g):
    s = graph_state(g)
    for k in stabilizer_generators(g):
        assert abs(expectation(s, k) - 1) < 1e-10


@given(graphs(max_n=4), st.data())
def test_cphase_conjugation(g, data):
    if g.n < 2:
        return
    label = data.draw(st.text(alphabet="IXYZ", min_size=g.n, max_size=g.n))
    i, j = data.draw(st.sampled_from([(u, v) for u in range(g.n) for v in range(u + 1, g.n)]))
    p = PauliOperator.from_label(label)
    cz = O.cz_matrix(g.n, i, j)
    assert np.allclose(conjugate_by_cphase(p, (i, j)).to_matrix(), cz @ p.to_matrix() @ cz)


@pytest.mark.parametrize("v,s", [(0, 0), (1, 1), (2, 1), (3, 0)])
def test_z_deletion_rule(v, s):
    g = Graph.from_edges(4, [(0, 1), (1, 2), (2, 3), (1, 3)])
    post = measure(graph_state(g), v, Z_BASIS, branch=s).post_state
    reduced, corr = delete_vertex_z(g, v, s)
    assert equal_up_to_global_phase(corr.apply(post), graph_state(reduced))


def test_constructors():
    assert path_graph(4).sorted_edges() == [(0, 1), (1, 2), (2, 3)]
    assert len(cycle_graph(5).edges) == 5
    g = grid_graph(2, 3)
    assert g.n == 6 and len(g.edges) == 7 and (0, 3) in g.edges
    assert random_graph(5, 0.0, np.random.default_rng(0)).edges == frozenset()


def test_duplicate_edge_rejected():
    with pytest.raises(ValueError):
        Graph.from_edges(3, [(0, 1), (1, 0)])


def test_remove_vertex_relabels():
    g = path_graph(4).remove_vertex(1)
    assert g.n == 3 and g.sorted_edges() == [(1, 2)]


def test_multigraph_reduction_parity():
    mg = Multigraph.from_edge_list(3, [(0, 1), (0, 1), (1, 2), (1, 2), (1, 2)])
    assert reduce_multigraph(mg).sorted_edges() == [(1, 2)]


def test_contract_edges_triangle():
    # contracting one side of a triangle leaves a double edge
    mg = contract_edges(Multigraph.from_graph(cycle_graph(3)), [[0, 1]])
    assert mg.counts() == {(0, 1): 2}
    assert reduce_multigraph(mg).edges == frozenset()


def test_contract_rejects_disconnected_set():
    with pytest.raises(ValueError):
        contract_edges(Multigraph.from_graph(path_graph(3)), [[0, 2]])


def test_partition_labels():
    assert partition_labels(5, [[3, 1]]) == [0, 1, 2, 1, 3]


def test_graph_file_round_trip(tmp_path):
    g = grid_graph(2, 2)
    path = tmp_path / "g.txt"
    save_graph(g, path)
    assert load_graph(path) == g
    assert parse_graph(format_graph(g)) == g


@pytest.mark.parametrize(
    "text",
    ["", "2 1\n0 0\n", "2 2\n0 1\n", "2 1\n0 5\n", "3 2\n0 1\n1 0\n", "x y\n"],
)
def test_graph_format_errors(text):
    with pytest.raises(GraphFormatError):
        parse_graph(text)


def test_expectation_complex_for_nonhermitian(rng):
    s = random_state(2, rng)
    xz = PauliOperator.from_label("X") * PauliOperator.from_label("Z")
    dense = O.X @ O.Z
    want = np.vdot(s.amplitudes, np.kron(np.eye(2), dense) @ s.amplitudes)
    assert np.isclose(expectation(s, PauliOperator(2, xz.x, xz.z, xz.phase)), want)
    assert math.isclose(abs(expectation(s, PauliOperator.from_label("II"))), 1.0)
