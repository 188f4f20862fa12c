"""Graph states, Pauli operators on bitmasks, and graph rewrite rules.

Pauli convention
----------------
A :class:`PauliOperator` is ``i**phase * prod_a X_a^{x_a} Z_a^{z_a}`` where on
each site the X factor stands to the left of the Z factor.  Y is therefore
stored as ``i * X Z`` (phase 1, both bits set).  Multiplying two such operators
only requires moving the Z part of the left factor past the X part of the
right one, which contributes ``(-1)**popcount(z1 & x2)``.

Worked example (site 0 only)::

    X * Z  -> x=1, z=1, phase 0        (the operator XZ = -iY)
    Z * X  -> x=1, z=1, phase 2        (ZX = -XZ)
    (X * Z) * (X * Z) -> phase 2 and empty masks, i.e. (XZ)^2 = -I
"""

from __future__ import annotations

import itertools
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from .statevec import X as _X, Z as _Z, StateVector, MAX_QUBITS, _apply_cz, new_plus_state


def _popcount(v: int) -> int:
    return bin(v).count("1")


@dataclass(frozen=True)
class PauliOperator:
    n: int
    x: int = 0
    z: int = 0
    phase: int = 0  # power of i

    def __post_init__(self):
        if self.x >> self.n or self.z >> self.n:
            raise ValueError("mask has bits outside the register")
        object.__setattr__(self, "phase", self.phase % 4)

    @classmethod
    def identity(cls, n: int) -> "PauliOperator":
        return cls(n)

    @classmethod
    def from_sites(cls, n: int, sites: Mapping[int, str], sign: int = 1) -> "PauliOperator":
        """Build e.g. ``{0: 'X', 2: 'Y'}``; ``sign`` is +1 or -1."""
        if sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")
        x = z = 0
        phase = 0 if sign == 1 else 2
        for q, label in sites.items():
            if not 0 <= q < n:
                raise IndexError(f"site {q} outside {n} qubits")
            label = label.upper()
            if label == "X":
                x |= 1 << q
            elif label == "Z":
                z |= 1 << q
            elif label == "Y":
                x |= 1 << q
                z |= 1 << q
                phase += 1
            elif label != "I":
                raise ValueError(f"unknown Pauli label {label!r}")
        return cls(n, x, z, phase)

    @classmethod
    def from_label(cls, label: str, sign: int = 1) -> "PauliOperator":
        """``label[q]`` is the factor on qubit q, e.g. ``'XZI'`` = X_0 Z_1."""
        return cls.from_sites(len(label), dict(enumerate(label)), sign)

    @property
    def coefficient(self) -> complex:
        return 1j**self.phase

    def __mul__(self, other: "PauliOperator") -> "PauliOperator":
        if self.n != other.n:
            raise ValueError("Pauli operators act on different register sizes")
        phase = self.phase + other.phase + 2 * _popcount(self.z & other.x)
        return PauliOperator(self.n, self.x ^ other.x, self.z ^ other.z, phase)

    def commutes_with(self, other: "PauliOperator") -> bool:
        return (_popcount(self.x & other.z) + _popcount(self.z & other.x)) % 2 == 0

    def is_hermitian(self) -> bool:
        # (XZ)^dagger = -XZ, so each Y-like site contributes a factor i to the check
        return (self.phase + _popcount(self.x & self.z)) % 2 == 0

    def square_sign(self) -> int:
        p = self * self
        assert p.x == 0 and p.z == 0 and p.phase in (0, 2)
        return 1 if p.phase == 0 else -1

    def label(self) -> str:
        """Site-wise label with Y restored; the leading sign absorbs the rest of the phase."""
        chars = []
        phase = self.phase
        for q in range(self.n):
            xb, zb = (self.x >> q) & 1, (self.z >> q) & 1
            if xb and zb:
                chars.append("Y")
                phase -= 1  # XZ = -iY
            else:
                chars.append("X" if xb else ("Z" if zb else "I"))
        sign = {0: "+", 1: "+i", 2: "-", 3: "-i"}[phase % 4]
        return sign + "".join(chars)

    def __str__(self) -> str:
        return self.label()

    def to_matrix(self) -> np.ndarray:
        m = np.ones((1, 1), dtype=complex)
        for q in range(self.n):
            site = np.eye(2, dtype=complex)
            if (self.x >> q) & 1:
                site = site @ _X
            if (self.z >> q) & 1:
                site = site @ _Z
            m = np.kron(site, m)
        return self.coefficient * m

    def apply_to_array(self, amps: np.ndarray) -> np.ndarray:
        idx = np.arange(amps.size, dtype=np.int64)
        src = idx ^ self.x
        signs = 1 - 2 * (np.bitwise_count(src & self.z).astype(np.int64) & 1)
        return self.coefficient * signs * amps[src]

    def apply(self, state: StateVector) -> StateVector:
        if state.n_qubits != self.n:
            raise ValueError(f"operator on {self.n} qubits, state has {state.n_qubits}")
        return StateVector(self.apply_to_array(state.amplitudes))


def expectation(state: StateVector, p: PauliOperator) -> float | complex:
    """<state|p|state>; returned as a float when p is Hermitian."""
    if state.n_qubits != p.n:
        raise ValueError(f"operator on {p.n} qubits, state has {state.n_qubits}")
    val = complex(np.vdot(state.amplitudes, p.apply_to_array(state.amplitudes)))
    if p.is_hermitian():
        return val.real
    return val


def conjugate_by_cphase(p: PauliOperator, edge: tuple[int, int]) -> PauliOperator:
    """cPhase_ab  p  cPhase_ab^dagger.

    X_a -> X_a Z_b, X_b -> Z_a X_b, Z unchanged; the site factors are
    rewritten one at a time and multiplied back in their original order so
    the phase comes out of the ordinary Pauli product.
    """
    a, b = edge
    if a == b:
        raise ValueError("cPhase needs two distinct qubits")
    n = p.n
    out = PauliOperator(n, phase=p.phase)
    for q in range(n):
        if (p.x >> q) & 1:
            if q == a:
                out = out * PauliOperator(n, x=1 << a) * PauliOperator(n, z=1 << b)
            elif q == b:
                out = out * PauliOperator(n, x=1 << b) * PauliOperator(n, z=1 << a)
            else:
                out = out * PauliOperator(n, x=1 << q)
        if (p.z >> q) & 1:
            out = out * PauliOperator(n, z=1 << q)
    return out


# ---------------------------------------------------------------------------
# graphs


def _norm_edge(u: int, v: int) -> tuple[int, int]:
    return (u, v) if u < v else (v, u)


@dataclass(frozen=True)
class Graph:
    n: int
    edges: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        if self.n < 0:
            raise ValueError("vertex count must be non-negative")
        norm = set()
        for e in self.edges:
            u, v = (int(w) for w in e)
            if u == v:
                raise ValueError(f"self-loop on vertex {u}")
            if not (0 <= u < self.n and 0 <= v < self.n):
                raise ValueError(f"edge ({u}, {v}) outside {self.n} vertices")
            norm.add(_norm_edge(u, v))
        object.__setattr__(self, "edges", frozenset(norm))

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int]]) -> "Graph":
        edges = list(edges)
        seen = set()
        for u, v in edges:
            e = _norm_edge(u, v)
            if e in seen:
                raise ValueError(f"duplicate edge {e}")
            seen.add(e)
        return cls(n, frozenset(edges))

    def sorted_edges(self) -> list[tuple[int, int]]:
        return sorted(self.edges)

    def neighbors(self, v: int) -> list[int]:
        return sorted(b if a == v else a for a, b in self.edges if v in (a, b))

    def degree(self, v: int) -> int:
        return sum(1 for e in self.edges if v in e)

    def adjacency(self) -> np.ndarray:
        a = np.zeros((self.n, self.n), dtype=np.uint8)
        for u, v in self.edges:
            a[u, v] = a[v, u] = 1
        return a

    def remove_vertex(self, v: int) -> "Graph":
        """Drop ``v`` and relabel the vertices above it down by one."""
        if not 0 <= v < self.n:
            raise ValueError(f"vertex {v} not in graph")
        shift = lambda w: w - 1 if w > v else w  # noqa: E731
        return Graph(self.n - 1, frozenset(
            (shift(a), shift(b)) for a, b in self.edges if v not in (a, b)
        ))


def path_graph(n: int) -> Graph:
    return Graph(n, frozenset((i, i + 1) for i in range(n - 1)))


def cycle_graph(n: int) -> Graph:
    if n < 3:
        raise ValueError("a cycle needs at least 3 vertices")
    return Graph(n, frozenset(_norm_edge(i, (i + 1) % n) for i in range(n)))


def grid_graph(rows: int, cols: int) -> Graph:
    """Square lattice; vertex (r, c) has index r * cols + c."""
    edges = set()
    for r in range(rows):
        for c in range(cols):
            v = r * cols + c
            if c + 1 < cols:
                edges.add((v, v + 1))
            if r + 1 < rows:
                edges.add((v, v + cols))
    return Graph(rows * cols, frozenset(edges))


def random_graph(n: int, p: float, rng: np.random.Generator) -> Graph:
    edges = [(u, v) for u, v in itertools.combinations(range(n), 2) if rng.random() < p]
    return Graph(n, frozenset(edges))


def graph_state(graph: Graph) -> StateVector:
    """|G> = prod_{edges} cPhase |+>^n."""
    if graph.n > MAX_QUBITS:
        raise ValueError(f"{graph.n} vertices exceeds the state-vector cap {MAX_QUBITS}")
    if graph.n == 0:
        return StateVector(np.ones(1, dtype=complex))
    t = new_plus_state(graph.n).tensor()
    for u, v in graph.sorted_edges():
        t = _apply_cz(t, graph.n, u, v)
    return StateVector(t.reshape(-1))


def stabilizer_generators(graph: Graph) -> list[PauliOperator]:
    """K_a = X_a prod_{b in Nb(a)} Z_b, one per vertex."""
    gens = []
    for a in range(graph.n):
        z = 0
        for b in graph.neighbors(a):
            z |= 1 << b
        gens.append(PauliOperator(graph.n, x=1 << a, z=z))
    return gens


def delete_vertex_z(graph: Graph, v: int, s: int) -> tuple[Graph, PauliOperator]:
    """Effect of measuring vertex ``v`` of |G> in the Z basis with outcome ``s``.

    The post-measurement state equals ``correction |G - v>``; applying the
    (self-inverse) correction to it therefore recovers the reduced graph state.
    Vertices above ``v`` are relabeled down by one, matching the register
    compaction of :func:`oneway.statevec.measure`.
    """
    if not 0 <= v < graph.n:
        raise ValueError(f"vertex {v} not in graph")
    reduced = graph.remove_vertex(v)
    z = 0
    if s:
        for w in graph.neighbors(v):
            z |= 1 << (w - 1 if w > v else w)
    return reduced, PauliOperator(reduced.n, z=z)


# ---------------------------------------------------------------------------
# multigraphs (AKLT reduction)


@dataclass(frozen=True)
class Multigraph:
    n: int
    multiplicity: tuple = ()  # sorted ((u, v), m) pairs, u < v, m >= 1

    def __post_init__(self):
        counts: Counter = Counter()
        for (u, v), m in self.multiplicity:
            if u == v:
                raise ValueError(f"self-loop on vertex {u}")
            if not (0 <= u < self.n and 0 <= v < self.n):
                raise ValueError(f"edge ({u}, {v}) outside {self.n} vertices")
            if m < 1:
                raise ValueError("multiplicities must be >= 1")
            counts[_norm_edge(u, v)] += m
        object.__setattr__(self, "multiplicity", tuple(sorted(counts.items())))

    @classmethod
    def from_edge_list(cls, n: int, edges: Iterable[tuple[int, int]]) -> "Multigraph":
        return cls(n, tuple(((u, v), 1) for u, v in edges))

    @classmethod
    def from_graph(cls, graph: Graph) -> "Multigraph":
        return cls.from_edge_list(graph.n, graph.sorted_edges())

    def counts(self) -> dict[tuple[int, int], int]:
        return dict(self.multiplicity)

    def edge_list(self) -> list[tuple[int, int]]:
        """Every edge repeated by its multiplicity."""
        return [e for e, m in self.multiplicity for _ in range(m)]

    def degree(self, v: int) -> int:
        return sum(m for e, m in self.multiplicity if v in e)


def reduce_multigraph(mg: Multigraph) -> Graph:
    """Keep an edge iff its multiplicity is odd."""
    return Graph(mg.n, frozenset(e for e, m in mg.multiplicity if m % 2))


def partition_labels(n: int, merge_sets: Iterable[Iterable[int]]) -> list[int]:
    """Vertex -> block index; unlisted vertices are singletons.

    Blocks are numbered in order of their smallest member.
    """
    owner = list(range(n))
    seen: set[int] = set()
    for block in merge_sets:
        block = sorted(set(block))
        if not block:
            continue
        for v in block:
            if not 0 <= v < n:
                raise ValueError(f"vertex {v} outside {n} vertices")
            if v in seen:
                raise ValueError(f"vertex {v} appears in two merge sets")
            seen.add(v)
            owner[v] = block[0]
    reps = sorted(set(owner))
    index = {r: k for k, r in enumerate(reps)}
    return [index[owner[v]] for v in range(n)]


def contract_edges(mg: Multigraph, merge_sets: Iterable[Iterable[int]]) -> Multigraph:
    """Merge each vertex set into one vertex.

    Every merge set must be connected through edges among its own members.
    Edges inside a set become self-loops and are discarded; all others keep
    their multiplicity.
    """
    merge_sets = [sorted(set(b)) for b in merge_sets]
    labels = partition_labels(mg.n, merge_sets)
    adj: dict[int, set[int]] = {v: set() for v in range(mg.n)}
    for (u, v), _ in mg.multiplicity:
        adj[u].add(v)
        adj[v].add(u)
    for block in merge_sets:
        if len(block) < 2:
            continue
        members = set(block)
        stack, reached = [block[0]], {block[0]}
        while stack:
            w = stack.pop()
            for y in adj[w] & members:
                if y not in reached:
                    reached.add(y)
                    stack.append(y)
        if reached != members:
            raise ValueError(f"merge set {block} is not connected by its internal edges")
    counts: Counter = Counter()
    for (u, v), m in mg.multiplicity:
        lu, lv = labels[u], labels[v]
        if lu != lv:
            counts[_norm_edge(lu, lv)] += m
    n_new = (max(labels) + 1) if labels else 0
    return Multigraph(n_new, tuple(counts.items()))


# ---------------------------------------------------------------------------
# edge-list file format: header "n m", then m lines "u v" (0-indexed)


class GraphFormatError(ValueError):
    pass


def parse_graph(text: str) -> Graph:
    lines = [(k, ln.strip()) for k, ln in enumerate(text.splitlines(), start=1)]
    lines = [(k, ln) for k, ln in lines if ln and not ln.startswith("#")]
    if not lines:
        raise GraphFormatError("line 1: missing 'n m' header")
    k, header = lines[0]
    try:
        n, m = (int(tok) for tok in header.split())
    except ValueError as exc:
        raise GraphFormatError(f"line {k}: expected 'n m', got {header!r}") from exc
    if n < 0 or m < 0:
        raise GraphFormatError(f"line {k}: negative count in header")
    body = lines[1:]
    if len(body) != m:
        raise GraphFormatError(f"line {k}: header announces {m} edges, found {len(body)}")
    seen = set()
    for k, ln in body:
        try:
            u, v = (int(tok) for tok in ln.split())
        except ValueError as exc:
            raise GraphFormatError(f"line {k}: expected 'u v', got {ln!r}") from exc
        if u == v:
            raise GraphFormatError(f"line {k}: self-loop on vertex {u}")
        if not (0 <= u < n and 0 <= v < n):
            raise GraphFormatError(f"line {k}: vertex out of range 0..{n - 1}")
        e = _norm_edge(u, v)
        if e in seen:
            raise GraphFormatError(f"line {k}: duplicate edge {e}")
        seen.add(e)
    return Graph(n, frozenset(seen))


def format_graph(graph: Graph) -> str:
    out = [f"{graph.n} {len(graph.edges)}"]
    out += [f"{u} {v}" for u, v in graph.sorted_edges()]
    return "\n".join(out) + "\n"


def load_graph(path: str | Path) -> Graph:
    return parse_graph(Path(path).read_text())


def save_graph(graph: Graph, path: str | Path) -> None:
    Path(path).write_text(format_graph(graph))
