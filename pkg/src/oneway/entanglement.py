"""Entanglement measures for small states: entropy, width, geometric measure."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .stabilizer import Graph
from .statevec import StateVector

EIG_FLOOR = 1e-12
MAX_WIDTH_QUBITS = 8
MAX_GE_QUBITS = 12

EXACT, BRUTE_FORCE, UPPER_BOUND, MONTE_CARLO = "exact", "brute-force", "upper-bound", "monte-carlo"


@dataclass(frozen=True)
class Bipartition:
    n: int
    a: frozenset

    def __post_init__(self):
        a = frozenset(int(q) for q in self.a)
        if not a or len(a) >= self.n or not all(0 <= q < self.n for q in a):
            raise ValueError(f"{sorted(a)} is not a proper non-empty subset of {self.n} qubits")
        object.__setattr__(self, "a", a)

    @property
    def b(self) -> frozenset:
        return frozenset(range(self.n)) - self.a

    @classmethod
    def from_mask(cls, n: int, mask: int) -> "Bipartition":
        return cls(n, frozenset(q for q in range(n) if mask >> q & 1))


def schmidt_entropy(matrix: np.ndarray) -> float:
    """Entropy in bits of the squared singular values of a bipartite matrix."""
    s = np.linalg.svd(matrix, compute_uv=False)
    p = s**2
    p = p[p > EIG_FLOOR]
    p = p / p.sum()
    return float(max(-np.sum(p * np.log2(p)), 0.0))


def tensor_entropy(t: np.ndarray, axes: Iterable[int]) -> float:
    """Entropy across (axes, remaining axes) of a normalized pure-state tensor."""
    axes = sorted(set(axes))
    rest = [a for a in range(t.ndim) if a not in axes]
    if not axes or not rest:
        return 0.0
    da = int(np.prod([t.shape[a] for a in axes]))
    m = np.transpose(t, axes + rest).reshape(da, -1)
    return schmidt_entropy(m)


def vn_entropy(state: StateVector, cut: Bipartition | Iterable[int]) -> float:
    """S(rho_A) in bits; qubit q is tensor axis n-1-q."""
    n = state.n_qubits
    if not isinstance(cut, Bipartition):
        cut = Bipartition(n, frozenset(cut))
    if cut.n != n:
        raise ValueError("cut and state sizes differ")
    return tensor_entropy(state.tensor(), [n - 1 - q for q in cut.a])


def cut_rank(graph: Graph, a: Iterable[int]) -> int:
    """GF(2) rank of the A x B adjacency block (graph-state entropy in bits)."""
    a = sorted(set(a))
    b = [v for v in range(graph.n) if v not in a]
    rows = []
    adj = graph.adjacency()
    for u in a:
        rows.append(sum(int(adj[u, w]) << j for j, w in enumerate(b)))
    rank = 0
    for bit in range(len(b)):
        pivot = next((r for r in rows if r >> bit & 1), None)
        if pivot is None:
            continue
        rows.remove(pivot)
        rows = [r ^ pivot if r >> bit & 1 else r for r in rows]
        rank += 1
    return rank


# ---------------------------------------------------------------------------
# entanglement width


@dataclass(frozen=True)
class WidthResult:
    value: float
    splits: tuple  # edge bipartitions of an optimal tree, as masks avoiding qubit 0
    trees_examined: int


def _insert_trees(n: int) -> Iterable[frozenset]:
    """All unrooted binary trees on leaves 0..n-1, as sets of edge splits.

    Each edge is the mask of the side away from leaf 0.  Trees grow by
    attaching leaf k to every edge of each tree on leaves 0..k-1, which
    yields each labeled tree exactly once, (2n-5)!! in total.
    """
    start = frozenset({0b010, 0b100, 0b110})  # star on leaves 0, 1, 2

    def grow(tree: frozenset, k: int):
        if k == n:
            yield tree
            return
        bit = 1 << k
        for s in tree:
            new = {t | bit if (t & s) == s and t != s else t for t in tree if t != s}
            new |= {s, s | bit, bit}
            yield from grow(frozenset(new), k + 1)

    yield from grow(start, 3)


def entanglement_width(state: StateVector) -> WidthResult:
    """min over binary trees of the max entropy across their edges.

    Trees with degree-2 or dangling internal vertices induce no new cuts, so
    binary trees suffice.  Entropies are computed once per split.
    """
    n = state.n_qubits
    if n > MAX_WIDTH_QUBITS:
        raise ValueError(f"tree enumeration is capped at {MAX_WIDTH_QUBITS} qubits")
    if n == 1:
        return WidthResult(0.0, (), 1)
    full = (1 << n) - 1
    cache: dict[int, float] = {}

    def ent(mask: int) -> float:
        if mask not in cache:
            cache[mask] = vn_entropy(state, Bipartition.from_mask(n, mask))
        return cache[mask]

    if n == 2:
        return WidthResult(ent(0b10), (0b10,), 1)
    best, best_tree, count = math.inf, (), 0
    for tree in _insert_trees(n):
        count += 1
        worst = 0.0
        for s in tree:
            worst = max(worst, ent(s & full))
            if worst >= best:
                break
        if worst < best:
            best, best_tree = worst, tuple(sorted(tree))
    return WidthResult(best, best_tree, count)


def count_binary_trees(n: int) -> int:
    return math.prod(range(1, 2 * n - 4, 2)) if n >= 3 else 1


# ---------------------------------------------------------------------------
# geometric entanglement


@dataclass
class GEResult:
    lambda_max: float  # best overlap |<product|psi>| found
    e_g: float  # -log2 lambda_max^2
    overlaps: list = field(default_factory=list)  # best overlap after each restart
    iterations: list = field(default_factory=list)
    provenance: str = UPPER_BOUND
    bracket: tuple | None = None  # (low, high) on E_G from the grid oracle


def _contract_except(t: np.ndarray, vecs: Sequence[np.ndarray], keep: int) -> np.ndarray:
    """<prod_{j != keep} v_j | psi>, a vector over the kept qubit."""
    n = t.ndim
    out = t
    # contract from the last axis so lower axis indices stay valid
    for ax in range(n - 1, -1, -1):
        q = n - 1 - ax
        if q == keep:
            continue
        out = np.tensordot(out, vecs[q].conj(), axes=([ax], [0]))
    return out


def _sweep_product(t: np.ndarray, vecs: list[np.ndarray], tol: float, max_sweeps: int) -> tuple[float, int]:
    n = t.ndim
    prev = -1.0
    overlap = 0.0
    for it in range(1, max_sweeps + 1):
        for q in range(n):
            v = _contract_except(t, vecs, q)
            norm = float(np.linalg.norm(v))
            if norm == 0:
                continue
            vecs[q] = v / norm
            overlap = norm
        if overlap - prev < tol:
            return overlap, it
        prev = overlap
    return overlap, max_sweeps


def _random_qubit(rng: np.random.Generator) -> np.ndarray:
    v = rng.normal(size=2) + 1j * rng.normal(size=2)
    return v / np.linalg.norm(v)


def geometric_entanglement(
    state: StateVector,
    restarts: int = 8,
    seed: int = 0,
    tol: float = 1e-12,
    max_sweeps: int = 2000,
    with_oracle: bool = True,
) -> GEResult:
    """Best product-state overlap by alternating single-qubit updates.

    The optimal qubit state with all others fixed is the normalized partial
    overlap vector, so each update is exact and the overlap never drops.
    The result bounds E_G from above; for n <= 3 a grid oracle brackets it.
    """
    n = state.n_qubits
    if n > MAX_GE_QUBITS:
        raise ValueError(f"geometric entanglement is capped at {MAX_GE_QUBITS} qubits")
    rng = np.random.default_rng(seed)
    t = state.tensor()
    best, overlaps, iters = 0.0, [], []
    for _ in range(restarts):
        vecs = [_random_qubit(rng) for _ in range(n)]
        ov, it = _sweep_product(t, vecs, tol, max_sweeps)
        best = max(best, ov)
        overlaps.append(best)
        iters.append(it)
    best = min(best, 1.0)
    res = GEResult(best, max(float(-math.log2(best**2)), 0.0) + 0.0, overlaps, iters)
    if with_oracle and n <= 3:
        lo, hi = ge_grid_oracle(state)
        res.bracket = (lo, hi)
        res.provenance = BRUTE_FORCE
    return res


def _sphere_grid(resolution: float) -> np.ndarray:
    theta = np.arange(0.0, math.pi + resolution / 2, resolution)
    phi = np.arange(0.0, 2 * math.pi, resolution)
    th, ph = np.meshgrid(theta, phi, indexing="ij")
    th, ph = th.ravel(), ph.ravel()
    return np.stack([np.cos(th / 2), np.exp(1j * ph) * np.sin(th / 2)], axis=1)


def ge_grid_oracle(state: StateVector, resolution: float = 1e-2) -> tuple[float, float]:
    """Bracket (low, high) on E_G for n <= 3.

    Qubit 0 scans a spherical grid; the rest is optimized exactly: for n = 2
    the best overlap is the norm of the partial contraction, for n = 3 the
    top singular value of the remaining 2x2 matrix.  The grid maximum is a
    lower bound on Lambda_max; any state lies within Bloch angle
    ``resolution`` of a grid point, a vector distance below ``resolution``,
    and the overlap is 1-Lipschitz in that distance, giving the upper bound.
    """
    n = state.n_qubits
    if not 1 <= n <= 3:
        raise ValueError("grid oracle handles 1 to 3 qubits")
    grid = _sphere_grid(resolution)
    # qubit 0 is the last axis
    m = state.amplitudes.reshape(-1, 2)  # rows: other qubits, cols: qubit 0
    partial = grid.conj() @ m.T  # (points, 2^(n-1))
    if n == 1:
        vals = np.abs(partial[:, 0])
    elif n == 2:
        vals = np.linalg.norm(partial, axis=1)
    else:
        vals = np.linalg.svd(partial.reshape(-1, 2, 2), compute_uv=False)[:, 0]
    lam = float(vals.max())
    lam_hi = min(lam + resolution, 1.0)
    return float(-math.log2(lam_hi**2)), float(-math.log2(lam**2))


def max_outcome_probability(state: StateVector, bases: Sequence[np.ndarray]) -> float:
    """Largest outcome probability of a product measurement.

    ``bases[q]`` is a 2x2 matrix whose columns are qubit q's basis vectors.
    """
    n = state.n_qubits
    if len(bases) != n:
        raise ValueError("need one basis per qubit")
    t = state.tensor()
    for q, b in enumerate(bases):
        b = np.asarray(b, dtype=complex)
        if b.shape != (2, 2) or not np.allclose(b.conj().T @ b, np.eye(2), atol=1e-10):
            raise ValueError(f"basis for qubit {q} is not orthonormal")
        ax = n - 1 - q
        t = np.moveaxis(np.tensordot(b.conj().T, t, axes=([1], [ax])), 0, ax)
    return float(np.max(np.abs(t) ** 2))
