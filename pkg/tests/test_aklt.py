import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles as O
from oneway.aklt import (
    AXES,
    PAULIS,
    LogicalQubit,
    b_alpha,
    brick_wall,
    build_aklt,
    cg_map,
    chain_rotation,
    check_reduction_consistency,
    dicke_isometry,
    outcome_distribution,
    percolation_mc,
    povm_element,
    predicted_graph,
    reduce_to_graph,
    rotation,
    rz,
    same_axis_clusters,
    sample_povm,
    spans,
    spin_matrices,
    total_spin_squared,
    wire_step,
    xyz_basis,
)
from oneway.stabilizer import Graph, Multigraph, cycle_graph, path_graph
from oneway.statevec import ForbiddenBranchError

angles = st.floats(-math.pi, math.pi, allow_nan=False)


def qubit(rng):
    return LogicalQubit.from_vector(O.random_unit(rng, 2))


def same_axis_probability(lattice, edge):
    dist = outcome_distribution(build_aklt(lattice))
    u, v = edge
    return sum(p for axes, p in dist.items() if axes[u] == axes[v])


def test_spin_algebra():
    for k in (1, 2, 3):
        sx, sy, sz = spin_matrices(k)
        s = k / 2
        assert np.allclose(sx @ sy - sy @ sx, 1j * sz)
        assert np.allclose(sx @ sx + sy @ sy + sz @ sz, s * (s + 1) * np.eye(k + 1))


def test_dicke_isometry():
    v = dicke_isometry(3)
    assert np.allclose(v.conj().T @ v, np.eye(4))
    assert np.isclose(v[0b011, 2], 1 / math.sqrt(3))


def test_povm_complete_and_scaled():
    total = sum(povm_element(a).conj().T @ povm_element(a) for a in AXES)
    assert np.abs(total - np.eye(4)).max() < 1e-12
    sz = spin_matrices(3)[2]
    proj = np.diag([1, 0, 0, 1]).astype(complex)
    assert np.allclose(povm_element("z"), math.sqrt(2 / 3) * proj)
    assert np.allclose(sz @ sz @ proj, 2.25 * proj)


def test_povm_rejects_axis():
    with pytest.raises(ValueError):
        povm_element("w")


def test_closed_spin1_pair_is_singlet():
    # closed double bond: two spin-1 sites form a singlet
    st_ = build_aklt(Multigraph.from_edge_list(2, [(0, 1), (0, 1)]), spin="1")
    assert abs(total_spin_squared(st_)) < 1e-10


def test_open_spin1_pair_has_no_spin2():
    st_ = build_aklt(path_graph(2), spin="1")
    assert total_spin_squared(st_) < 6 - 1e-6


def test_triple_bond_rotation_invariant():
    st_ = build_aklt(Multigraph.from_edge_list(2, [(0, 1)] * 3))
    r = rotation(3, (0.3, -0.5, 0.8), 1.1)
    t = np.einsum("ai,bj,ij->ab", r, r, st_.amplitudes)
    assert abs(abs(np.vdot(st_.amplitudes, t)) - 1) < 1e-10


def test_frozen_same_axis_probabilities():
    assert math.isclose(same_axis_probability(path_graph(2), (0, 1)), O.AKLT_SAME_AXIS_OPEN_PAIR, abs_tol=1e-10)
    tb = Multigraph.from_edge_list(2, [(0, 1)] * 3)
    assert math.isclose(same_axis_probability(tb, (0, 1)), O.AKLT_SAME_AXIS_TRIPLE_BOND, abs_tol=1e-10)


def test_frozen_hexagon_same_axis():
    assert math.isclose(same_axis_probability(cycle_graph(6), (0, 1)), O.AKLT_SAME_AXIS_HEXAGON, abs_tol=1e-10)


def test_sampled_same_axis_matches_exact():
    lattice = cycle_graph(4)
    exact = same_axis_probability(lattice, (0, 1))
    state = build_aklt(lattice)
    rng = np.random.default_rng(11)
    hits = 0
    n = 400
    for _ in range(n):
        o = sample_povm(state, seed=rng).outcome
        hits += o[0] == o[1]
    assert abs(hits / n - exact) < 0.05


def test_distribution_sums_to_one():
    dist = outcome_distribution(build_aklt(path_graph(3)))
    assert math.isclose(sum(dist.values()), 1.0)


def test_forced_outcome_probability_matches_distribution():
    lattice = path_graph(3)
    dist = outcome_distribution(build_aklt(lattice))
    axes, p = max(dist.items(), key=lambda kv: kv[1])
    res = sample_povm(build_aklt(lattice), forced=dict(enumerate(axes)))
    assert math.isclose(res.probability, p, rel_tol=1e-10)


def test_forced_forbidden_outcome():
    # any zero-probability branch of the triple bond must raise
    lattice = Multigraph.from_edge_list(2, [(0, 1)] * 3)
    dist = outcome_distribution(build_aklt(lattice))
    zero = [axes for axes, p in dist.items() if p < 1e-12]
    for axes in zero:
        with pytest.raises(ForbiddenBranchError):
            sample_povm(build_aklt(lattice), forced=dict(enumerate(axes)))


def test_same_axis_clusters_and_reduction():
    g = cycle_graph(4)
    outcome = {0: "x", 1: "x", 2: "z", 3: "y"}
    assert same_axis_clusters(g, outcome) == [[0, 1], [2], [3]]
    red, labels = reduce_to_graph(g, outcome)
    assert red.n == 3 and labels == [0, 0, 1, 2]
    assert red.sorted_edges() == [(0, 1), (0, 2), (1, 2)]


def test_double_edge_cancels():
    # 0-1-2 with an extra bond 0-2; merging 0 and 1 doubles the bond to 2
    g = cycle_graph(3)
    red, _ = reduce_to_graph(g, {0: "x", 1: "x", 2: "y"})
    assert red.edges == frozenset()


def test_predicted_graph_deletes_boundary_z():
    g, labels, deleted = predicted_graph(path_graph(3), {0: "z", 1: "x", 2: "y"})
    assert deleted == [0]
    assert g.sorted_edges() == [(1, 2)]


@pytest.mark.parametrize(
    "lattice",
    [
        path_graph(3),
        Graph.from_edges(4, [(0, 1), (0, 2), (0, 3)]),
        cycle_graph(4),
        Multigraph.from_edge_list(2, [(0, 1)] * 3),
    ],
    ids=["p3", "star4", "c4", "triple"],
)
def test_reduction_consistency_all_outcomes(lattice):
    dist = outcome_distribution(build_aklt(lattice))
    checked = 0
    for axes, p in dist.items():
        if p < 1e-12:
            continue
        rep = check_reduction_consistency(lattice, dict(enumerate(axes)))
        assert rep.passed, rep.mismatches
        checked += 1
    assert checked > 0


def test_brick_wall_degrees():
    g = brick_wall(4, 4)
    degs = [g.degree(v) for v in range(g.n)]
    assert max(degs) == 3 and len(g.edges) == 12 + 6


def test_spans_trivial_cases():
    g = brick_wall(2, 3)
    same = {v: "x" for v in range(g.n)}
    assert spans(g, 3, same)


def test_percolation_reproducible():
    a = percolation_mc(6, 50, seed=1)
    b = percolation_mc(6, 50, seed=1)
    assert a.spanning == b.spanning and 0 <= a.fraction <= 1 and a.half_width >= 0


# ---------------------------------------------------------------------------
# spin-1 wire


def test_cg_map_isometry():
    c = cg_map().reshape(3 * 2, 2)
    assert np.allclose(c.conj().T @ c, np.eye(2))


def test_xyz_basis_corrections(rng):
    q = qubit(rng)
    out = {o.label: o for o in wire_step(q, xyz_basis())}
    assert [out[a].correction for a in "xyz"] == ["X", "XZ", "Z"]
    assert math.isclose(sum(o.probability for o in out.values()), 1.0)
    for o in out.values():
        want = PAULIS[o.correction] @ q.vector()
        assert abs(abs(np.vdot(want, o.state.vector())) - 1) < 1e-10


@given(angles)
def test_b_alpha_step(alpha):
    q = qubit(np.random.default_rng(0))
    out = {o.label: o for o in wire_step(q, b_alpha(alpha))}
    assert math.isclose(sum(o.probability for o in out.values()), 1.0)
    for o in out.values():
        want = rz(o.rotation) @ PAULIS[o.correction] @ q.vector()
        assert abs(abs(np.vdot(want, o.state.vector())) - 1) < 1e-10
    assert out["z"].rotation == 0


@settings(max_examples=30)
@given(angles, angles, st.sampled_from(list(itertools.product("+-z", repeat=2))))
def test_chain_rotation_net(a, b, outs):
    q0 = qubit(np.random.default_rng(5))
    prob, q, frame, net = chain_rotation(q0, [a, b], outs)
    assert math.isclose(prob, 1 / 9, rel_tol=1e-9)
    want = frame @ rz(net) @ q0.vector()
    assert abs(abs(np.vdot(want, q.vector())) - 1) < 1e-10
    if "z" not in outs:
        assert math.isclose(net, a + b, abs_tol=1e-12)
