"""AKLT valence-bond states, the spin-3/2 POVM, graph reduction and wires.

Sites carry ``k`` virtual spin-1/2s projected onto their symmetric
subspace, a spin ``k/2`` with basis index ``w`` = number of virtual 1s
(so ``m = k/2 - w``; virtual |0> is spin up).  Each lattice edge holds a
singlet (|01> - |10>)/sqrt2 between two virtual qubits; virtual qubits not
used by an edge take a boundary state, |0> by default.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations
from typing import Iterable, Mapping, Sequence, Union

import numpy as np

from .entanglement import cut_rank, tensor_entropy
from .stabilizer import Graph, Multigraph, contract_edges, reduce_multigraph
from .statevec import FORBIDDEN_PROB, ForbiddenBranchError

MAX_VIRTUAL = 20
AXES = ("x", "y", "z")
SINGLET = np.array([[0, 1], [-1, 0]], dtype=complex) / math.sqrt(2)  # [a, b] amplitude of |ab>

Lattice = Union[Graph, Multigraph]


# ---------------------------------------------------------------------------
# spin algebra


@lru_cache(maxsize=None)
def spin_matrices(k: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(Sx, Sy, Sz) for spin k/2 in the basis m = k/2, k/2 - 1, ..., -k/2."""
    s = k / 2
    m = s - np.arange(k + 1)
    sz = np.diag(m).astype(complex)
    sp = np.zeros((k + 1, k + 1), dtype=complex)
    for w in range(1, k + 1):
        sp[w - 1, w] = math.sqrt(s * (s + 1) - m[w] * (m[w] + 1))
    sx = (sp + sp.T) / 2
    sy = (sp - sp.T) / 2j
    return sx, sy, sz


@lru_cache(maxsize=None)
def dicke_isometry(k: int) -> np.ndarray:
    """2^k x (k+1) matrix whose column w is the normalized Dicke state of weight w.

    Row index is the virtual bit string read with the first virtual qubit
    most significant.
    """
    v = np.zeros((1 << k, k + 1), dtype=complex)
    for idx in range(1 << k):
        v[idx, bin(idx).count("1")] = 1.0
    return v / np.linalg.norm(v, axis=0)


def rotation(k: int, axis: Sequence[float], angle: float) -> np.ndarray:
    """exp(-i angle n.S) for spin k/2."""
    n = np.asarray(axis, dtype=float)
    n = n / np.linalg.norm(n)
    sx, sy, sz = spin_matrices(k)
    gen = n[0] * sx + n[1] * sy + n[2] * sz
    vals, vecs = np.linalg.eigh(gen)
    return (vecs * np.exp(-1j * angle * vals)) @ vecs.conj().T


@dataclass(frozen=True, eq=False)
class SpinState:
    """Pure state of qudit sites; axis i of ``amplitudes`` is site i."""

    amplitudes: np.ndarray

    def __post_init__(self):
        a = np.array(self.amplitudes, dtype=complex)
        norm = np.linalg.norm(a)
        if abs(norm - 1) > 1e-10:
            raise ValueError(f"state norm {norm} is not 1")
        a.setflags(write=False)
        object.__setattr__(self, "amplitudes", a)

    @property
    def dims(self) -> tuple:
        return self.amplitudes.shape

    @property
    def n_sites(self) -> int:
        return self.amplitudes.ndim

    def apply(self, site: int, op: np.ndarray) -> np.ndarray:
        """Unnormalized ``op`` applied on one site."""
        t = np.tensordot(op, self.amplitudes, axes=([1], [site]))
        return np.moveaxis(t, 0, site)

    def entropy(self, sites: Iterable[int]) -> float:
        return tensor_entropy(self.amplitudes, sites)

    def fidelity(self, other: "SpinState") -> float:
        return float(abs(np.vdot(self.amplitudes, other.amplitudes)) ** 2)


def total_spin_squared(state: SpinState) -> float:
    """<S_tot^2> of a multi-site state."""
    t = state.amplitudes
    total = 0.0
    for comp in range(3):
        acc = np.zeros_like(t)
        for site, d in enumerate(state.dims):
            acc = acc + state.apply(site, spin_matrices(d - 1)[comp])
        total += float(np.vdot(acc, acc).real)
    return total


# ---------------------------------------------------------------------------
# construction


def _edges(lattice: Lattice) -> list[tuple[int, int]]:
    if isinstance(lattice, Multigraph):
        return lattice.edge_list()
    return lattice.sorted_edges()


def virtual_counts(lattice: Lattice, spin: str | int | Sequence[int] = "3/2") -> list[int]:
    if isinstance(spin, str):
        k = {"1/2": 1, "1": 2, "3/2": 3}[spin]
        return [k] * lattice.n
    if isinstance(spin, int):
        return [spin] * lattice.n
    counts = list(spin)
    if len(counts) != lattice.n:
        raise ValueError("one virtual count per site")
    return counts


def build_aklt(
    lattice: Lattice,
    spin: str | int | Sequence[int] = "3/2",
    boundary: np.ndarray | None = None,
) -> SpinState:
    """Singlets on every edge (each copy of a multi-edge), symmetric projection per site.

    ``spin`` is "1", "3/2", an int virtual count, or one count per site.
    Free virtual qubits are set to ``boundary`` (default |0>).
    """
    counts = virtual_counts(lattice, spin)
    total = sum(counts)
    if total > MAX_VIRTUAL:
        raise ValueError(f"{total} virtual qubits exceed the cap of {MAX_VIRTUAL}")
    edges = _edges(lattice)
    used = [0] * lattice.n
    factors: list[tuple[np.ndarray, list[int]]] = []
    offset = np.cumsum([0] + counts)

    def slot(v: int) -> int:
        if used[v] >= counts[v]:
            raise ValueError(f"site {v} has degree above its {counts[v]} virtual qubits")
        used[v] += 1
        return int(offset[v]) + used[v] - 1

    for u, v in edges:
        factors.append((SINGLET, [slot(u), slot(v)]))
    b = np.array([1, 0], dtype=complex) if boundary is None else np.asarray(boundary, dtype=complex)
    b = b / np.linalg.norm(b)
    for v in range(lattice.n):
        while used[v] < counts[v]:
            factors.append((b, [slot(v)]))

    # contract factor by factor, projecting each site as soon as it is complete
    t = np.ones((), dtype=complex)
    labels: list = []  # axis labels: ("v", slot) or ("s", site)
    remaining = [counts[v] for v in range(lattice.n)]
    site_of = {int(offset[v]) + j: v for v in range(lattice.n) for j in range(counts[v])}
    for f, slots in factors:
        t = np.multiply.outer(t, f)
        labels += [("v", s) for s in slots]
        for s in slots:
            v = site_of[s]
            remaining[v] -= 1
            if remaining[v] == 0:
                t, labels = _project_site(t, labels, v, counts[v], int(offset[v]))
    order = [labels.index(("s", v)) for v in range(lattice.n)]
    t = np.transpose(t, order)
    return SpinState(t / np.linalg.norm(t))


def _project_site(t: np.ndarray, labels: list, v: int, k: int, off: int):
    axes = [labels.index(("v", off + j)) for j in range(k)]
    rest = [a for a in range(t.ndim) if a not in axes]
    m = np.transpose(t, axes + rest).reshape(1 << k, -1)
    m = dicke_isometry(k).conj().T @ m
    t = m.reshape((k + 1,) + tuple(t.shape[a] for a in rest))
    return t, [("s", v)] + [labels[a] for a in rest]


# ---------------------------------------------------------------------------
# POVM


@lru_cache(maxsize=None)
def _povm(axis: str) -> np.ndarray:
    sx, sy, sz = spin_matrices(3)
    s = {"x": sx, "y": sy, "z": sz}[axis]
    return (s @ s - 0.25 * np.eye(4)) / math.sqrt(6)


def povm_element(axis: str) -> np.ndarray:
    """F_a = (S_a^2 - 1/4)/sqrt6 on spin 3/2: sqrt(2/3) times the projector onto m_a = +-3/2."""
    if axis not in AXES:
        raise ValueError(f"axis must be one of {AXES}")
    return _povm(axis).copy()


@dataclass
class PovmResult:
    outcome: dict  # site -> axis
    state: SpinState
    probability: float
    site_probabilities: dict = field(default_factory=dict)  # site -> {axis: p}


def sample_povm(
    state: SpinState,
    sites: Iterable[int] | None = None,
    *,
    seed: int | np.random.Generator | None = None,
    forced: Mapping[int, str] | None = None,
) -> PovmResult:
    """Measure the POVM on each listed spin-3/2 site in turn."""
    sites = list(range(state.n_sites)) if sites is None else list(sites)
    if (seed is None) == (forced is None):
        raise ValueError("give exactly one of seed or forced")
    for s in sites:
        if state.dims[s] != 4:
            raise ValueError(f"site {s} is not spin 3/2")
    rng = np.random.default_rng(seed) if forced is None else None
    t = state.amplitudes
    prob = 1.0
    outcome, per_site = {}, {}
    for s in sites:
        cur = SpinState(t)
        branches = {a: cur.apply(s, _povm(a)) for a in AXES}
        probs = {a: float(np.vdot(b, b).real) for a, b in branches.items()}
        per_site[s] = probs
        if forced is not None:
            a = forced[s]
            if probs[a] < FORBIDDEN_PROB:
                raise ForbiddenBranchError(f"outcome {a} on site {s} has probability {probs[a]:.3g}")
        else:
            p = np.array([probs[a] for a in AXES])
            a = AXES[int(rng.choice(3, p=p / p.sum()))]
        outcome[s] = a
        prob *= probs[a]
        t = branches[a] / math.sqrt(probs[a])
    return PovmResult(outcome, SpinState(t), prob, per_site)


def outcome_distribution(state: SpinState) -> dict[tuple, float]:
    """Exact joint POVM distribution over all sites (tiny instances)."""
    out = {}
    n = state.n_sites
    for combo in np.ndindex(*(3,) * n):
        t = state.amplitudes
        for s, a in enumerate(combo):
            t = np.moveaxis(np.tensordot(_povm(AXES[a]), t, axes=([1], [s])), 0, s)
        out[tuple(AXES[a] for a in combo)] = float(np.vdot(t, t).real)
    return out


# ---------------------------------------------------------------------------
# reduction to graph states


def same_axis_clusters(lattice: Lattice, outcome: Mapping[int, str]) -> list[list[int]]:
    """Connected components of the sites joined by same-axis edges."""
    parent = list(range(lattice.n))

    def find(v: int) -> int:
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    for u, v in _edges(lattice):
        if outcome[u] == outcome[v]:
            parent[find(u)] = find(v)
    groups: dict[int, list[int]] = {}
    for v in range(lattice.n):
        groups.setdefault(find(v), []).append(v)
    return sorted(groups.values())


def reduce_to_graph(lattice: Lattice, outcome: Mapping[int, str]) -> tuple[Graph, list[int]]:
    """Contract same-axis edges, then keep odd-multiplicity edges.

    Returns the graph and the site -> vertex map.
    """
    mg = lattice if isinstance(lattice, Multigraph) else Multigraph.from_graph(lattice)
    clusters = same_axis_clusters(lattice, outcome)
    contracted = contract_edges(mg, clusters)
    labels = [0] * lattice.n
    for idx, block in enumerate(sorted(clusters)):
        for v in block:
            labels[v] = idx
    return reduce_multigraph(contracted), labels


@dataclass
class ReductionReport:
    passed: bool
    max_deviation: float
    cuts_checked: int
    graph: Graph
    site_to_vertex: list
    deleted: list  # vertices projected out by the boundary
    mismatches: list = field(default_factory=list)


def _dangling(lattice: Lattice, counts: Sequence[int]) -> list[int]:
    deg = [0] * lattice.n
    for u, v in _edges(lattice):
        deg[u] += 1
        deg[v] += 1
    return [counts[v] - deg[v] for v in range(lattice.n)]


def predicted_graph(lattice: Lattice, outcome: Mapping[int, str]) -> tuple[Graph, list[int], list[int]]:
    """Reduced graph with boundary effects applied.

    A free virtual qubit fixed to |0> inside a z-outcome cluster selects one
    of that cluster's two logical codewords, i.e. measures the logical qubit
    in Z; the vertex is then removed (its edges dropped).  In x or y clusters
    |0> overlaps both codewords equally and acts as a local unitary.
    """
    graph, labels = reduce_to_graph(lattice, outcome)
    counts = virtual_counts(lattice, "3/2")
    free = _dangling(lattice, counts)
    deleted = sorted({labels[v] for v in range(lattice.n) if free[v] and outcome[v] == "z"})
    kept = frozenset(e for e in graph.edges if e[0] not in deleted and e[1] not in deleted)
    return Graph(graph.n, kept), labels, deleted


def check_reduction_consistency(
    lattice: Lattice,
    outcome: Mapping[int, str],
    tol: float = 1e-8,
) -> ReductionReport:
    """Compare every cluster-respecting bipartition entropy with the graph prediction.

    Cuts are unions of merged-site clusters; the graph-state entropy of a
    vertex cut is its GF(2) cut rank.  Equality on all cuts is necessary
    for local-unitary equivalence.
    """
    if lattice.n > 6:
        raise ValueError("consistency check is for patches of at most 6 sites")
    state = sample_povm(build_aklt(lattice), forced=outcome).state
    graph, labels, deleted = predicted_graph(lattice, outcome)
    n_v = graph.n
    worst, mismatches, checked = 0.0, [], 0
    for r in range(1, n_v // 2 + 1):
        for cut in combinations(range(n_v), r):
            if 2 * r == n_v and 0 not in cut:
                continue
            sites = [s for s in range(lattice.n) if labels[s] in cut]
            got = state.entropy(sites)
            want = cut_rank(graph, cut)
            dev = abs(got - want)
            checked += 1
            worst = max(worst, dev)
            if dev > tol:
                mismatches.append((cut, got, want))
    return ReductionReport(not mismatches, worst, checked, graph, labels, deleted, mismatches)


# ---------------------------------------------------------------------------
# brick-wall honeycomb percolation


def brick_wall(rows: int, cols: int) -> Graph:
    """Honeycomb as a brick wall: all horizontal bonds, vertical bonds where r + c is even."""
    idx = lambda r, c: r * cols + c  # noqa: E731
    edges = set()
    for r in range(rows):
        for c in range(cols):
            if c + 1 < cols:
                edges.add((idx(r, c), idx(r, c + 1)))
            if r + 1 < rows and (r + c) % 2 == 0:
                edges.add((idx(r, c), idx(r + 1, c)))
    return Graph(rows * cols, frozenset(edges))


def spans(lattice: Graph, cols: int, outcome: Mapping[int, str]) -> bool:
    """Does the reduced graph connect column 0 to column cols-1?"""
    graph, labels = reduce_to_graph(lattice, outcome)
    parent = list(range(graph.n))

    def find(v: int) -> int:
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    for u, v in graph.edges:
        parent[find(u)] = find(v)
    left = {find(labels[s]) for s in range(lattice.n) if s % cols == 0}
    right = {find(labels[s]) for s in range(lattice.n) if s % cols == cols - 1}
    return bool(left & right)


@dataclass(frozen=True)
class PercolationResult:
    L: int
    trials: int
    spanning: int

    @property
    def fraction(self) -> float:
        return self.spanning / self.trials

    @property
    def half_width(self) -> float:
        p = self.fraction
        return 1.96 * math.sqrt(max(p * (1 - p), 0.0) / self.trials)


def percolation_mc(L: int, trials: int, seed: int) -> PercolationResult:
    """Spanning fraction with i.i.d. uniform site axes on an L x L brick wall."""
    if L < 2 or trials < 1:
        raise ValueError("need L >= 2 and at least one trial")
    lattice = brick_wall(L, L)
    rng = np.random.default_rng(seed)
    hits = 0
    for _ in range(trials):
        draw = rng.integers(0, 3, size=lattice.n)
        hits += spans(lattice, L, {s: AXES[a] for s, a in enumerate(draw)})
    return PercolationResult(L, trials, hits)


# ---------------------------------------------------------------------------
# spin-1 chain wire


PAULIS = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
    "XZ": np.array([[0, -1], [1, 0]], dtype=complex),
}

# spin-1 kets in the order m = +1, 0, -1
KET_X = np.array([-1, 0, 1], dtype=complex) / math.sqrt(2)
KET_Y = np.array([1, 0, 1], dtype=complex) / math.sqrt(2)
KET_Z = np.array([0, 1, 0], dtype=complex)


@dataclass(frozen=True)
class LogicalQubit:
    a0: complex
    a1: complex

    def __post_init__(self):
        n = abs(self.a0) ** 2 + abs(self.a1) ** 2
        if abs(n - 1) > 1e-12:
            raise ValueError(f"logical qubit norm^2 {n} is not 1")

    @classmethod
    def from_vector(cls, v: np.ndarray) -> "LogicalQubit":
        v = np.asarray(v, dtype=complex)
        v = v / np.linalg.norm(v)
        return cls(complex(v[0]), complex(v[1]))

    def vector(self) -> np.ndarray:
        return np.array([self.a0, self.a1], dtype=complex)


@dataclass(frozen=True)
class WireBasis:
    labels: tuple
    kets: tuple  # spin-1 vectors, m = +1, 0, -1
    rotations: tuple = (0.0, 0.0, 0.0)  # logical z-rotation induced by each outcome

    def __post_init__(self):
        m = np.stack(self.kets, axis=1)
        if not np.allclose(m.conj().T @ m, np.eye(3), atol=1e-12):
            raise ValueError("wire basis is not orthonormal")


def xyz_basis() -> WireBasis:
    return WireBasis(("x", "y", "z"), (KET_X, KET_Y, KET_Z))


def b_alpha(alpha: float) -> WireBasis:
    """{(1 +- e^{-ia})/2 |x> + (1 -+ e^{-ia})/2 |y>, |z>}; alpha = 0 gives x, y, z."""
    e = np.exp(-1j * alpha)
    plus = (1 + e) / 2 * KET_X + (1 - e) / 2 * KET_Y
    minus = (1 - e) / 2 * KET_X + (1 + e) / 2 * KET_Y
    return WireBasis(("+", "-", "z"), (plus, minus, KET_Z), (alpha, alpha, 0.0))


def cg_map() -> np.ndarray:
    """3 x 2 x 2 tensor C[spin1, logical_out, logical_in] of the decoupled site.

    Coupling the site's spin 1 to the rest of the chain (spin 1/2) within
    the total-spin-1/2 sector gives
    sqrt(2/3)[(a0/sqrt2 |0> + a1 |-1>) |G0> - (a0 |+1> + a1/sqrt2 |0>) |G1>].
    """
    c = np.zeros((3, 2, 2), dtype=complex)
    r = math.sqrt(2 / 3)
    c[1, 0, 0] = r / math.sqrt(2)  # a0 |0> G0
    c[2, 0, 1] = r  # a1 |-1> G0
    c[0, 1, 0] = -r  # a0 |+1> G1
    c[1, 1, 1] = -r / math.sqrt(2)  # a1 |0> G1
    return c


def rz(angle: float) -> np.ndarray:
    return np.diag([1.0, np.exp(1j * angle)])


def _factor(kraus: np.ndarray, rot: float) -> str:
    """The Pauli P with ``kraus`` proportional to R^z(rot) P."""
    u = rz(-rot) @ kraus
    u = u / math.sqrt(abs(np.linalg.det(u)))
    for name, p in PAULIS.items():
        if abs(abs(np.trace(p.conj().T @ u)) - 2) < 1e-10:
            return name
    raise ValueError("Kraus operator is not the stated z-rotation times a Pauli")


@dataclass(frozen=True)
class WireOutcome:
    label: str
    probability: float
    state: LogicalQubit  # normalized post-measurement logical state
    correction: str  # Pauli P in  state ~ R^z(rotation) P q
    rotation: float


def wire_step(q: LogicalQubit, basis: WireBasis) -> list[WireOutcome]:
    """Decouple one spin-1 site and measure it in ``basis``."""
    c = cg_map()
    out = []
    for label, ket, rot in zip(basis.labels, basis.kets, basis.rotations):
        kraus = np.tensordot(ket.conj(), c, axes=([0], [0]))
        v = kraus @ q.vector()
        p = float(np.vdot(v, v).real)
        corr = _factor(kraus, rot)
        state = LogicalQubit.from_vector(v) if p > FORBIDDEN_PROB else q
        out.append(WireOutcome(label, p, state, corr, rot))
    return out


def pauli_x_part(name: str) -> int:
    return 1 if "X" in name else 0


def chain_rotation(q: LogicalQubit, angles: Sequence[float], outcomes: Sequence[str]):
    """Run B(.) steps along a forced outcome sequence with adaptive signs.

    Step k measures in B(theta_k) with theta_k = -(-1)^x angles[k], where x
    is the X content of the Pauli frame so far: a rotating outcome always
    carries an X, so R^z(theta) lands as R^z(+angles[k]) behind the frame.
    Returns (probability, final logical state, accumulated Pauli frame,
    net rotation actually applied).  A z outcome applies no rotation.
    """
    frame = np.eye(2, dtype=complex)
    x_acc = 0
    net = 0.0
    prob = 1.0
    for alpha, want in zip(angles, outcomes):
        theta = -((-1) ** x_acc) * alpha
        res = {o.label: o for o in wire_step(q, b_alpha(theta))}[want]
        prob *= res.probability
        q = res.state
        p = PAULIS[res.correction]
        frame = p @ frame
        x_acc ^= pauli_x_part(res.correction)
        if want != "z":
            net += alpha
    return prob, q, frame, net
