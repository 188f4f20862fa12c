"""Dense state-vector simulator.

Basis indexing is little-endian: qubit 0 is the least significant bit of the
basis index, and |0> is the +1 eigenstate of Z.  Internally a state of ``n``
qubits is viewed as a tensor of shape ``(2,) * n`` whose axis ``n - 1 - q``
carries qubit ``q``; the low-level kernels below work on such tensors and
tolerate extra trailing (batch) axes, which the pattern engine uses to push
several input states through one branch at a time.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

MAX_QUBITS = 24
NORM_TOL = 1e-10
UNITARY_TOL = 1e-10
# Branches below this probability are treated as forbidden, not round-off.
FORBIDDEN_PROB = 1e-12

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
H = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)


def exp_iz(theta: float) -> np.ndarray:
    """exp(i theta Z / 2)."""
    return np.diag([np.exp(0.5j * theta), np.exp(-0.5j * theta)])


def exp_ix(theta: float) -> np.ndarray:
    """exp(i theta X / 2)."""
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return np.array([[c, 1j * s], [1j * s, c]], dtype=complex)


class ForbiddenBranchError(ValueError):
    """A measurement branch was forced whose probability is (numerically) zero."""


@dataclass(frozen=True, eq=False)
class StateVector:
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        n = amps.size.bit_length() - 1
        if amps.size == 0 or 1 << n != amps.size:
            raise ValueError(f"amplitude count {amps.size} is not a power of two")
        if n > MAX_QUBITS:
            raise ValueError(f"{n} qubits exceeds the cap of {MAX_QUBITS}")
        norm = float(np.vdot(amps, amps).real)
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"state is not normalized (norm^2 = {norm!r})")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def from_amplitudes(cls, amplitudes, normalize: bool = False) -> "StateVector":
        amps = np.asarray(amplitudes, dtype=complex).reshape(-1)
        if normalize:
            norm = np.linalg.norm(amps)
            if norm == 0:
                raise ValueError("cannot normalize the zero vector")
            amps = amps / norm
        return cls(amps)

    @property
    def n_qubits(self) -> int:
        return self.amplitudes.size.bit_length() - 1

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def tensor(self) -> np.ndarray:
        return self.amplitudes.reshape((2,) * self.n_qubits)

    def norm(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    def to_csv(self) -> str:
        """Amplitude dump: header then one ``index,real,imag`` row per amplitude."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["index", "real", "imag"])
        for k, a in enumerate(self.amplitudes):
            w.writerow([k, repr(float(a.real)), repr(float(a.imag))])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "StateVector":
        rows = list(csv.reader(io.StringIO(text)))
        if not rows or [c.strip() for c in rows[0]] != ["index", "real", "imag"]:
            raise ValueError("amplitude CSV must start with the header 'index,real,imag'")
        entries = {}
        for lineno, row in enumerate(rows[1:], start=2):
            if not row:
                continue
            try:
                k, re_, im = int(row[0]), float(row[1]), float(row[2])
            except (ValueError, IndexError) as exc:
                raise ValueError(f"line {lineno}: malformed amplitude row {row!r}") from exc
            entries[k] = complex(re_, im)
        dim = max(entries) + 1 if entries else 0
        amps = np.zeros(dim, dtype=complex)
        for k, a in entries.items():
            amps[k] = a
        return cls.from_amplitudes(amps, normalize=True)


@dataclass(frozen=True)
class EquatorialBasis:
    """Measurement basis: cos(phi) X + sin(phi) Y on the equator, or Z.

    Eigenstates of the equatorial observable are (|0> +/- e^{i phi}|1>)/sqrt(2)
    with outcome bit s = 0 for '+'.
    """

    angle: float = 0.0
    axis: str = "equator"

    def __post_init__(self):
        if self.axis not in ("equator", "z"):
            raise ValueError(f"unknown basis axis {self.axis!r}")

    def canonical(self) -> tuple["EquatorialBasis", bool]:
        """Shift the angle into (-pi/2, pi/2]; ``True`` means outcome labels swap."""
        if self.axis == "z":
            return self, False
        phi = math.remainder(self.angle, 2 * math.pi)  # [-pi, pi]
        flip = False
        if phi <= -math.pi / 2:
            phi += math.pi
            flip = True
        elif phi > math.pi / 2:
            phi -= math.pi
            flip = True
        return EquatorialBasis(phi, "equator"), flip

    def is_canonical(self) -> bool:
        return self.axis == "z" or (-math.pi / 2 < self.angle <= math.pi / 2)

    def eigenvector(self, s: int) -> np.ndarray:
        if self.axis == "z":
            return np.array([1, 0], dtype=complex) if s == 0 else np.array([0, 1], dtype=complex)
        sign = 1 if s == 0 else -1
        return np.array([1, sign * np.exp(1j * self.angle)], dtype=complex) / math.sqrt(2)


X_BASIS = EquatorialBasis(0.0)
Y_BASIS = EquatorialBasis(math.pi / 2)
Z_BASIS = EquatorialBasis(0.0, "z")


@dataclass(frozen=True, eq=False)
class MeasureResult:
    outcome: int
    probability: float
    post_state: StateVector


# ---------------------------------------------------------------------------
# tensor kernels (axis for qubit q in an n-qubit tensor is n - 1 - q)


def _axis(n: int, q: int) -> int:
    return n - 1 - q


def _apply_1q(t: np.ndarray, n: int, q: int, u: np.ndarray) -> np.ndarray:
    t = np.tensordot(u, t, axes=([1], [_axis(n, q)]))
    return np.moveaxis(t, 0, _axis(n, q))


def _apply_cz(t: np.ndarray, n: int, i: int, j: int) -> np.ndarray:
    t = t.copy()
    idx = [slice(None)] * t.ndim
    idx[_axis(n, i)] = 1
    idx[_axis(n, j)] = 1
    t[tuple(idx)] *= -1
    return t


def _project(t: np.ndarray, n: int, q: int, basis: EquatorialBasis, s: int) -> np.ndarray:
    """Unnormalized projection onto an eigenstate; the measured axis is removed."""
    a = _axis(n, q)
    t0 = np.take(t, 0, axis=a)
    t1 = np.take(t, 1, axis=a)
    if basis.axis == "z":
        return t0 if s == 0 else t1
    c = (1 if s == 0 else -1) * np.exp(-1j * basis.angle)
    return (t0 + c * t1) / math.sqrt(2)


def _append_plus(t: np.ndarray) -> np.ndarray:
    """Add a |+> qubit as the new most significant qubit (new axis 0)."""
    return np.stack([t, t], axis=0) / math.sqrt(2)


# ---------------------------------------------------------------------------
# public operations


def _check_qubit(state: StateVector, q: int) -> None:
    if not 0 <= q < state.n_qubits:
        raise IndexError(f"qubit {q} out of range for {state.n_qubits} qubits")


def new_plus_state(n: int) -> StateVector:
    if not 1 <= n <= MAX_QUBITS:
        raise ValueError(f"qubit count must be in [1, {MAX_QUBITS}], got {n}")
    return StateVector(np.full(1 << n, 2.0 ** (-n / 2), dtype=complex))


def basis_state(bits: Sequence[int]) -> StateVector:
    """Computational basis state; ``bits[q]`` is the value of qubit q."""
    index = sum(int(b) << q for q, b in enumerate(bits))
    amps = np.zeros(1 << len(bits), dtype=complex)
    amps[index] = 1.0
    return StateVector(amps)


def product_state(single_qubit_states: Iterable[np.ndarray]) -> StateVector:
    """Tensor product; the first vector is qubit 0."""
    amps = np.ones(1, dtype=complex)
    for v in single_qubit_states:
        amps = np.kron(np.asarray(v, dtype=complex), amps)
    return StateVector.from_amplitudes(amps, normalize=True)


def random_state(n: int, rng: np.random.Generator) -> StateVector:
    v = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
    return StateVector.from_amplitudes(v, normalize=True)


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary via QR with phase fix."""
    m = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(m)
    d = np.diag(r)
    return q * (d / np.abs(d))


def apply_cphase(state: StateVector, i: int, j: int) -> StateVector:
    if i == j:
        raise ValueError("cPhase needs two distinct qubits")
    _check_qubit(state, i)
    _check_qubit(state, j)
    n = state.n_qubits
    return StateVector(_apply_cz(state.tensor(), n, i, j).reshape(-1))


def is_unitary(u: np.ndarray, tol: float = UNITARY_TOL) -> bool:
    u = np.asarray(u)
    return u.ndim == 2 and u.shape[0] == u.shape[1] and np.allclose(
        u.conj().T @ u, np.eye(u.shape[0]), atol=tol, rtol=0
    )


def apply_1q(state: StateVector, q: int, u: np.ndarray) -> StateVector:
    u = np.asarray(u, dtype=complex)
    if u.shape != (2, 2) or not is_unitary(u):
        raise ValueError("apply_1q needs a 2x2 unitary")
    _check_qubit(state, q)
    n = state.n_qubits
    return StateVector(_apply_1q(state.tensor(), n, q, u).reshape(-1))


def apply_unitary(state: StateVector, u: np.ndarray, qubits: Sequence[int]) -> StateVector:
    """Apply a 2^k x 2^k unitary to ``qubits``; ``qubits[0]`` is the LSB of ``u``'s index."""
    k = len(qubits)
    u = np.asarray(u, dtype=complex)
    if u.shape != (1 << k, 1 << k) or not is_unitary(u):
        raise ValueError(f"expected a {1 << k}x{1 << k} unitary")
    if len(set(qubits)) != k:
        raise ValueError("repeated qubit index")
    for q in qubits:
        _check_qubit(state, q)
    n = state.n_qubits
    # u as a tensor: output axes then input axes, most significant (qubits[-1]) first
    ut = u.reshape((2,) * (2 * k))
    axes = [_axis(n, q) for q in reversed(qubits)]
    t = np.tensordot(ut, state.tensor(), axes=(list(range(k, 2 * k)), axes))
    t = np.moveaxis(t, list(range(k)), axes)
    return StateVector(t.reshape(-1))


def _edge_counts(n: int, edges: Iterable[tuple[int, int]]) -> np.ndarray:
    idx = np.arange(1 << n, dtype=np.int64)
    m = np.zeros(1 << n, dtype=np.int64)
    for i, j in edges:
        m += (idx >> i) & (idx >> j) & 1
    return m


def evolve_ising(state: StateVector, graph, g: float, t: float) -> StateVector:
    """Evolve under g * sum_{(i,j) in E} |11><11| for time t (hbar = 1).

    At t = pi / g every edge contributes exactly one cPhase.
    """
    if graph.n != state.n_qubits:
        raise ValueError(f"graph has {graph.n} vertices, state has {state.n_qubits} qubits")
    m = _edge_counts(state.n_qubits, graph.edges)
    return StateVector(state.amplitudes * np.exp(-1j * g * t * m))


def branch_probability(state: StateVector, q: int, basis: EquatorialBasis, s: int) -> float:
    _check_qubit(state, q)
    proj = _project(state.tensor(), state.n_qubits, q, basis, s)
    return float(np.vdot(proj, proj).real)


def measure(
    state: StateVector,
    q: int,
    basis: EquatorialBasis,
    rng: np.random.Generator | None = None,
    branch: int | None = None,
) -> MeasureResult:
    """Projectively measure qubit ``q`` and drop it from the register.

    Exactly one of ``rng`` (sample) or ``branch`` (force outcome) is used.
    Qubits above ``q`` shift down by one index; measuring the last qubit
    leaves a zero-qubit state (a unit-modulus scalar).
    """
    _check_qubit(state, q)
    if not basis.is_canonical():
        raise ValueError(f"basis angle {basis.angle} is not canonical; call .canonical() first")
    n = state.n_qubits
    t = state.tensor()
    proj = {s: _project(t, n, q, basis, s) for s in (0, 1)}
    probs = {s: float(np.vdot(v, v).real) for s, v in proj.items()}
    if branch is None:
        if rng is None:
            raise ValueError("either rng or branch must be given")
        s = 0 if rng.random() < probs[0] / (probs[0] + probs[1]) else 1
    else:
        s = int(branch)
        if s not in (0, 1):
            raise ValueError(f"branch must be 0 or 1, got {branch!r}")
        if probs[s] < FORBIDDEN_PROB:
            raise ForbiddenBranchError(f"outcome {s} on qubit {q} has probability {probs[s]:.3g}")
    post = proj[s].reshape(-1) / math.sqrt(probs[s])
    return MeasureResult(s, probs[s], StateVector(post))


def inner(a: StateVector, b: StateVector) -> complex:
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch: {a.dim} vs {b.dim}")
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def fidelity(a: StateVector, b: StateVector) -> float:
    return abs(inner(a, b)) ** 2


def equal_up_to_global_phase(a: StateVector, b: StateVector, tol: float = 1e-10) -> bool:
    return abs(inner(a, b)) >= 1 - tol
