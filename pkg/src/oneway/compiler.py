"""Lower small circuits over {Rot, CNOT, H} to one composed measurement pattern."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence, Union

import numpy as np

from .pattern import (
    CNOT_MATRIX,
    MeasurementPattern,
    branch_fidelities,
    byproduct_for,
    cnot_pattern,
    compose,
    enumerate_branches,
    euler_unitary,
    identity_wire,
    permute_logical,
    rotation_pattern,
    run_pattern,
    temporal_rounds,
    tensor,
)
from .stabilizer import Graph, graph_state, grid_graph
from .statevec import (
    Z_BASIS,
    StateVector,
    apply_1q,
    apply_unitary,
    fidelity,
    measure,
    new_plus_state,
    random_state,
)
from .statevec import Z as PAULI_Z

MAX_WIDTH = 3
MAX_EXHAUSTIVE_MEASURED = 16

# H = i * Rot(pi/2, pi/2, pi/2); the global phase is irrelevant
H_EULER = (math.pi / 2, math.pi / 2, math.pi / 2)


class CircuitError(ValueError):
    pass


@dataclass(frozen=True)
class Rot:
    q: int
    zeta: float
    eta: float
    xi: float


@dataclass(frozen=True)
class CNOT:
    c: int
    t: int


@dataclass(frozen=True)
class Had:
    q: int


Gate = Union[Rot, CNOT, Had]


@dataclass(frozen=True)
class Circuit:
    width: int
    gates: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        if self.width < 1:
            raise CircuitError("circuit needs at least one qubit")
        for g in self.gates:
            qs = _gate_qubits(g)
            if any(not 0 <= q < self.width for q in qs):
                raise CircuitError(f"gate {g} acts outside the {self.width}-qubit register")
            if len(set(qs)) != len(qs):
                raise CircuitError(f"gate {g} repeats a qubit")

    @property
    def n_rotations(self) -> int:
        return sum(isinstance(g, (Rot, Had)) for g in self.gates)

    def to_text(self) -> str:
        lines = [f"QUBITS {self.width}"]
        for g in self.gates:
            if isinstance(g, Rot):
                lines.append(f"ROT {g.q} {g.zeta!r} {g.eta!r} {g.xi!r}")
            elif isinstance(g, CNOT):
                lines.append(f"CNOT {g.c} {g.t}")
            else:
                lines.append(f"H {g.q}")
        return "\n".join(lines) + "\n"


def _gate_qubits(g: Gate) -> tuple:
    if isinstance(g, CNOT):
        return (g.c, g.t)
    if isinstance(g, (Rot, Had)):
        return (g.q,)
    raise CircuitError(f"unsupported gate {g!r}")


def parse_circuit(text: str, width: int | None = None) -> Circuit:
    """Parse ``ROT q zeta eta xi`` / ``CNOT c t`` / ``H q`` lines.

    An optional ``QUBITS w`` line fixes the width; otherwise it is the
    highest qubit index plus one.  ``#`` starts a comment.
    """
    gates: list = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        op, *args = line.split()
        op = op.upper()
        try:
            if op == "QUBITS" and len(args) == 1:
                width = int(args[0])
            elif op == "ROT" and len(args) == 4:
                gates.append(Rot(int(args[0]), *(float(a) for a in args[1:])))
            elif op == "CNOT" and len(args) == 2:
                gates.append(CNOT(int(args[0]), int(args[1])))
            elif op == "H" and len(args) == 1:
                gates.append(Had(int(args[0])))
            else:
                raise CircuitError(f"line {lineno}: cannot parse {raw.strip()!r}")
        except ValueError as exc:
            if isinstance(exc, CircuitError):
                raise
            raise CircuitError(f"line {lineno}: {exc}") from exc
    if width is None:
        width = 1 + max((q for g in gates for q in _gate_qubits(g)), default=0)
    return Circuit(width, tuple(gates))


def gate_matrix(g: Gate) -> np.ndarray:
    if isinstance(g, Rot):
        return euler_unitary(g.zeta, g.eta, g.xi)
    if isinstance(g, Had):
        return np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
    return CNOT_MATRIX


def reference_simulate(c: Circuit, state: StateVector) -> StateVector:
    """Circuit-model oracle: apply the gate matrices in order."""
    if state.n_qubits != c.width:
        raise CircuitError(f"circuit has {c.width} qubits, state has {state.n_qubits}")
    for g in c.gates:
        if isinstance(g, CNOT):
            state = apply_unitary(state, CNOT_MATRIX, (g.c, g.t))
        else:
            state = apply_1q(state, g.q, gate_matrix(g))
    return state


def circuit_unitary(c: Circuit) -> np.ndarray:
    dim = 1 << c.width
    u = np.eye(dim, dtype=complex)
    cols = []
    for j in range(dim):
        cols.append(reference_simulate(c, StateVector(u[:, j])).amplitudes)
    return np.stack(cols, axis=1)


def gate_pattern(g: Gate) -> MeasurementPattern:
    if isinstance(g, Rot):
        return rotation_pattern(g.zeta, g.eta, g.xi)
    if isinstance(g, Had):
        return rotation_pattern(*H_EULER)
    return cnot_pattern()


def layer_pattern(g: Gate, width: int, wire_length: int = 0) -> MeasurementPattern:
    """Gate pattern on its qubits, identity wires on every idle qubit."""
    targets = _gate_qubits(g)
    order = list(targets) + [q for q in range(width) if q not in targets]
    p = gate_pattern(g)
    for _ in order[len(targets):]:
        p = tensor(p, identity_wire(wire_length))
    return permute_logical(p, [order.index(i) for i in range(width)])


def compile_circuit(c: Circuit, wire_length: int = 0) -> MeasurementPattern:
    """Compose one layer pattern per gate.

    Idle qubits get even-length identity wires; the default length 0 (the
    bare qubit) keeps 2-qubit circuits within the desk-scale register.  An
    empty circuit compiles to bare wires.
    """
    if c.width > MAX_WIDTH:
        raise CircuitError(f"width {c.width} exceeds the desk-scale cap of {MAX_WIDTH}")
    if not c.gates:
        p = identity_wire(wire_length)
        for _ in range(c.width - 1):
            p = tensor(p, identity_wire(wire_length))
        return p
    p = layer_pattern(c.gates[0], c.width, wire_length)
    for g in c.gates[1:]:
        p = compose(p, layer_pattern(g, c.width, wire_length))
    return p


def expected_size(c: Circuit, wire_length: int = 0) -> int:
    """Sum of layer sizes minus the qubits identified at each seam."""
    if not c.gates:
        return c.width * (wire_length + 1)
    sizes = [
        len(gate_pattern(g).qubits) + (c.width - len(_gate_qubits(g))) * (wire_length + 1)
        for g in c.gates
    ]
    return sum(sizes) - c.width * (len(c.gates) - 1)


@dataclass
class CompilationReport:
    pattern_qubits: int
    measured_qubits: int
    rounds: int
    inputs_tested: int
    branches_verified: int
    min_fidelity: float
    mode: str
    byproducts: list = field(default_factory=list)  # (outcomes, z, x) per branch, first input

    @property
    def passed(self) -> bool:
        return self.min_fidelity >= 1 - 1e-9

    def to_dict(self) -> dict:
        return {
            "pattern_qubits": self.pattern_qubits,
            "measured_qubits": self.measured_qubits,
            "rounds": self.rounds,
            "inputs_tested": self.inputs_tested,
            "branches_verified": self.branches_verified,
            "min_fidelity": self.min_fidelity,
            "mode": self.mode,
            "passed": self.passed,
        }


def verify(
    c: Circuit,
    n_random_inputs: int = 4,
    *,
    exhaustive: bool = True,
    trials: int = 100,
    seed: int = 0,
    pattern: MeasurementPattern | None = None,
    keep_byproducts: bool = False,
) -> CompilationReport:
    """Compare corrected pattern outputs with the circuit oracle.

    Exhaustive mode walks every outcome branch for a batch of random inputs
    (plus |+...+>); sampled mode draws ``trials`` (input, branch) pairs.
    Fidelity is |<oracle|corrected>|^2.
    """
    p = compile_circuit(c) if pattern is None else pattern
    rng = np.random.default_rng(seed)
    n_meas = len(p.measurements)
    inputs = [new_plus_state(c.width)] + [random_state(c.width, rng) for _ in range(n_random_inputs)]
    rounds = len(temporal_rounds(p))
    if exhaustive:
        if n_meas > MAX_EXHAUSTIVE_MEASURED:
            raise CircuitError(f"{n_meas} measured qubits is too many for exhaustive verification")
        batch = np.stack([s.amplitudes for s in inputs], axis=1)
        expected = np.stack([reference_simulate(c, s).amplitudes for s in inputs], axis=1)
        worst, count, byps = 1.0, 0, []
        for br in enumerate_branches(p, batch):
            out = br.corrected()
            fid = np.abs(np.sum(expected.conj() * out, axis=0)) ** 2
            # columns that cannot reach this branch carry no state
            fid = np.where(br.probabilities > 1e-12, fid, 1.0)
            worst = min(worst, float(fid.min()))
            count += 1
            if keep_byproducts:
                byps.append((br.outcomes, br.byproduct.z, br.byproduct.x))
        return CompilationReport(len(p.qubits), n_meas, rounds, len(inputs), count, worst, "exhaustive", byps)
    worst = 1.0
    for _ in range(trials):
        s = inputs[int(rng.integers(len(inputs)))]
        _, raw, byp = run_pattern(p, s, seed=rng)
        worst = min(worst, fidelity(byp.correct(raw), reference_simulate(c, s)))
    return CompilationReport(len(p.qubits), n_meas, rounds, len(inputs), trials, worst, "sampled")


def random_circuit(rng: np.random.Generator, width: int = 2, max_rot: int = 3, max_cnot: int = 2) -> Circuit:
    n_rot = int(rng.integers(0, max_rot + 1))
    n_cnot = int(rng.integers(0, max_cnot + 1))
    kinds = ["R"] * n_rot + ["C"] * n_cnot
    rng.shuffle(kinds)
    gates: list = []
    for k in kinds:
        if k == "R":
            gates.append(Rot(int(rng.integers(width)), *rng.uniform(-math.pi, math.pi, 3)))
        else:
            c, t = rng.choice(width, size=2, replace=False)
            gates.append(CNOT(int(c), int(t)))
    return Circuit(width, tuple(gates))


# ---------------------------------------------------------------------------
# grid demo: carve a compiled pattern out of a rectangular cluster


GRID_ROWS, GRID_COLS = 3, 6


@dataclass
class GridDemoReport:
    grid_qubits: int
    removed: int
    removal_outcomes: dict
    carve_fidelity: float
    branches: int
    min_fidelity: float

    @property
    def passed(self) -> bool:
        return self.carve_fidelity >= 1 - 1e-10 and self.min_fidelity >= 1 - 1e-10

    def to_dict(self) -> dict:
        return {
            "grid_qubits": self.grid_qubits,
            "removed": self.removed,
            "removal_outcomes": {str(k): v for k, v in self.removal_outcomes.items()},
            "carve_fidelity": self.carve_fidelity,
            "branches": self.branches,
            "min_fidelity": self.min_fidelity,
            "passed": self.passed,
        }


def grid_demo(zeta: float, eta: float, xi: float, seed: int = 0) -> GridDemoReport:
    """Rot(0) then CNOT(0,1) embedded in a 3x6 cluster.

    Layout (row, col): rotation chain along row 0 from column 0 to 4, the
    target input at (2, 4), the CNOT ancilla at (1, 4) and the target output
    at (1, 5).  Every other site is measured in Z; the Z corrections on the
    neighbours are applied, which must leave exactly the pattern's graph
    state with both logical inputs in |+>.  The pattern is then run on that
    carved resource across all branches.
    """
    c = Circuit(2, (Rot(0, zeta, eta, xi), CNOT(0, 1)))
    p = compile_circuit(c)
    # compiled ids: chain 1..5, target input 6, ancilla 7, target output 8
    site = {1: (0, 0), 2: (0, 1), 3: (0, 2), 4: (0, 3), 5: (0, 4), 6: (2, 4), 7: (1, 4), 8: (1, 5)}
    if sorted(site) != sorted(p.qubits):
        raise CircuitError("unexpected compiled layout")
    idx = {q: r * GRID_COLS + col for q, (r, col) in site.items()}
    grid = grid_graph(GRID_ROWS, GRID_COLS)
    used = set(idx.values())
    induced = {(a, b) for a, b in grid.edges if a in used and b in used}
    mapped = {tuple(sorted((idx[a], idx[b]))) for a, b in p.edges}
    if induced != mapped:
        raise CircuitError("pattern graph is not the induced subgraph of the grid")

    rng = np.random.default_rng(seed)
    state = graph_state(grid)
    live = list(range(grid.n))  # grid site held by each register qubit
    outcomes = {}
    for v in sorted(set(range(grid.n)) - used):
        pos = live.index(v)
        res = measure(state, pos, Z_BASIS, rng=rng)
        state = res.post_state
        live.pop(pos)
        outcomes[v] = res.outcome
        if res.outcome:
            for w in grid.neighbors(v):
                if w in live:
                    state = apply_1q(state, live.index(w), PAULI_Z)
    # reorder register to the pattern's qubit order and compare with |G_pattern>
    order = [live.index(idx[q]) for q in p.qubits]
    n = len(order)
    t = state.tensor().transpose([n - 1 - order[n - 1 - j] for j in range(n)])
    carved = StateVector(t.reshape(-1))
    local = {q: i for i, q in enumerate(p.qubits)}
    target = graph_state(Graph.from_edges(n, [(local[a], local[b]) for a, b in p.edges]))
    carve_fid = fidelity(carved, target)

    plus = new_plus_state(2).amplitudes
    expected = p.reference @ plus
    worst, count = 1.0, 0
    for br in enumerate_branches(p, plus, prepared_state=carved.amplitudes):
        out = br.corrected()[:, 0]
        worst = min(worst, float(abs(np.vdot(expected, out)) ** 2))
        count += 1
    return GridDemoReport(grid.n, grid.n - len(used), outcomes, carve_fid, count, worst)
