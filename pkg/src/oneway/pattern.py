"""Measurement patterns: adaptive angles, byproduct tracking and execution.

A pattern entangles its input qubits with fresh |+> qubits along ``edges``,
measures every non-output qubit, and leaves the output register in
``Z^z X^x U |in>`` where ``U`` is the pattern's declared reference unitary and
the byproduct exponents ``z``, ``x`` are parities of recorded outcomes.

Outcome convention: on an equatorial measurement at effective angle ``phi``
the recorded bit ``s`` labels the eigenstate ``(|0> + (-1)^s e^{i phi}|1>)/sqrt2``
regardless of how the angle is canonicalized for the observable.  All
parity sets (angle sign dependencies and byproduct rules) refer to these
recorded bits.
"""

from __future__ import annotations

import heapq
import json
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Iterator, Mapping, Sequence

import numpy as np

from .statevec import (
    FORBIDDEN_PROB,
    H,
    EquatorialBasis,
    ForbiddenBranchError,
    StateVector,
    _append_plus,
    _apply_cz,
    _project,
    exp_ix,
    exp_iz,
)
from .stabilizer import PauliOperator

_Z_BASIS = EquatorialBasis(0.0, "z")


class PatternError(ValueError):
    """Malformed pattern: bad input/output sets, dangling or cyclic dependencies."""


@dataclass(frozen=True)
class AngleExpr:
    """Effective angle ``static_sign * (-1)^(sum of sign_deps outcomes) * base``.

    ``fixed`` marks a Pauli-basis measurement (X at 0, Y at pi/2) whose basis
    is not a free parameter; such a spec never carries sign dependencies.
    """

    base: float
    sign_deps: frozenset = frozenset()
    static_sign: int = 1
    fixed: bool = False

    def __post_init__(self):
        object.__setattr__(self, "sign_deps", frozenset(self.sign_deps))
        if self.static_sign not in (1, -1):
            raise PatternError("static_sign must be +1 or -1")
        if self.fixed and self.sign_deps:
            raise PatternError("a fixed Pauli-basis angle cannot depend on outcomes")

    def resolve(self, outcomes: Mapping[int, int]) -> float:
        parity = sum(outcomes[d] for d in self.sign_deps) % 2
        return self.static_sign * (-1) ** parity * self.base


@dataclass(frozen=True)
class Measurement:
    plane: str  # "XY" (equatorial) or "Z"
    angle: AngleExpr | None = None

    def __post_init__(self):
        if self.plane not in ("XY", "Z"):
            raise PatternError(f"unknown measurement plane {self.plane!r}")
        if (self.plane == "XY") != (self.angle is not None):
            raise PatternError("XY measurements need an angle, Z measurements must not have one")

    @property
    def deps(self) -> frozenset:
        return self.angle.sign_deps if self.angle is not None else frozenset()


def measure_xy(base: float, sign_deps: Iterable[int] = (), static_sign: int = 1) -> Measurement:
    return Measurement("XY", AngleExpr(base, frozenset(sign_deps), static_sign))


MEASURE_X = Measurement("XY", AngleExpr(0.0, fixed=True))
MEASURE_Y = Measurement("XY", AngleExpr(math.pi / 2, fixed=True))
MEASURE_Z = Measurement("Z")


@dataclass(frozen=True)
class ByproductOperator:
    """Correction ``Z^z X^x`` per logical output qubit (global phase dropped)."""

    z: tuple = ()
    x: tuple = ()

    def __post_init__(self):
        if len(self.z) != len(self.x):
            raise ValueError("z and x exponent lists differ in length")
        object.__setattr__(self, "z", tuple(int(b) & 1 for b in self.z))
        object.__setattr__(self, "x", tuple(int(b) & 1 for b in self.x))

    @classmethod
    def identity(cls, k: int) -> "ByproductOperator":
        return cls((0,) * k, (0,) * k)

    def __mul__(self, other: "ByproductOperator") -> "ByproductOperator":
        return ByproductOperator(
            tuple(a ^ b for a, b in zip(self.z, other.z)),
            tuple(a ^ b for a, b in zip(self.x, other.x)),
        )

    def is_identity(self) -> bool:
        return not any(self.z) and not any(self.x)

    def inverse_pauli(self) -> PauliOperator:
        """``X^x Z^z``, which exactly undoes ``Z^z X^x``."""
        k = len(self.z)
        xm = sum(b << q for q, b in enumerate(self.x))
        zm = sum(b << q for q, b in enumerate(self.z))
        return PauliOperator(k, x=xm, z=zm)

    def correct_array(self, amps: np.ndarray) -> np.ndarray:
        """Undo the byproduct on amplitudes of shape (2^k,) or (2^k, batch)."""
        if amps.ndim == 1:
            return self.inverse_pauli().apply_to_array(amps)
        return np.stack([self.correct_array(amps[:, j]) for j in range(amps.shape[1])], axis=1)

    def correct(self, state: StateVector) -> StateVector:
        return self.inverse_pauli().apply(state)


@dataclass(frozen=True, eq=False)
class MeasurementPattern:
    qubits: tuple
    inputs: tuple
    outputs: tuple
    edges: frozenset
    measurements: Mapping[int, Measurement]
    byproducts: Mapping[int, tuple]  # output -> (z_deps, x_deps)
    reference: np.ndarray
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "qubits", tuple(self.qubits))
        object.__setattr__(self, "inputs", tuple(self.inputs))
        object.__setattr__(self, "outputs", tuple(self.outputs))
        object.__setattr__(
            self, "edges", frozenset((min(a, b), max(a, b)) for a, b in self.edges)
        )
        object.__setattr__(self, "measurements", dict(self.measurements))
        object.__setattr__(
            self,
            "byproducts",
            {o: (frozenset(z), frozenset(x)) for o, (z, x) in self.byproducts.items()},
        )
        ref = np.asarray(self.reference, dtype=complex)
        object.__setattr__(self, "reference", ref)
        self._validate()

    def _validate(self) -> None:
        qs = set(self.qubits)
        if len(qs) != len(self.qubits):
            raise PatternError("duplicate qubit ids")
        for name, group in (("input", self.inputs), ("output", self.outputs)):
            if len(set(group)) != len(group) or not set(group) <= qs:
                raise PatternError(f"{name} set must be distinct known qubits")
        for a, b in self.edges:
            if a == b or a not in qs or b not in qs:
                raise PatternError(f"bad edge ({a}, {b})")
        measured = set(self.measurements)
        if measured != qs - set(self.outputs):
            raise PatternError("exactly the non-output qubits must carry a measurement")
        if set(self.byproducts) != set(self.outputs):
            raise PatternError("every output needs a byproduct rule")
        for q, m in self.measurements.items():
            if not m.deps <= measured or q in m.deps:
                raise PatternError(f"qubit {q} depends on unmeasured qubits or itself")
        for o, (z, x) in self.byproducts.items():
            if not (z | x) <= measured:
                raise PatternError(f"byproduct of output {o} refers to unmeasured qubits")
        k = len(self.inputs)
        if len(self.outputs) != k or self.reference.shape != (1 << k, 1 << k):
            raise PatternError("reference unitary must map the input register onto the output register")
        temporal_rounds(self)  # raises on cycles

    @property
    def width(self) -> int:
        return len(self.inputs)

    @property
    def measured(self) -> list[int]:
        return [q for q in self.qubits if q in self.measurements]

    def neighbors(self, q: int) -> list[int]:
        return sorted(b if a == q else a for a, b in self.edges if q in (a, b))

    def measurement_order(self) -> list[int]:
        """A dependency-respecting order that follows ``qubits`` where possible.

        Keeping close to construction order measures composite patterns layer
        by layer, so few qubits are live at once.
        """
        rank = {q: i for i, q in enumerate(self.qubits)}
        waiting = {q: set(m.deps) for q, m in self.measurements.items()}
        users: dict[int, list[int]] = {q: [] for q in waiting}
        for q, deps in waiting.items():
            for d in deps:
                users[d].append(q)
        ready = [(rank[q], q) for q, deps in waiting.items() if not deps]
        heapq.heapify(ready)
        order = []
        while ready:
            _, q = heapq.heappop(ready)
            order.append(q)
            for u in users[q]:
                waiting[u].discard(q)
                if not waiting[u]:
                    heapq.heappush(ready, (rank[u], u))
        return order

    def to_dict(self) -> dict:
        def meas(m: Measurement) -> dict:
            if m.plane == "Z":
                return {"plane": "Z"}
            a = m.angle
            return {
                "plane": "XY",
                "base": a.base,
                "sign_deps": sorted(a.sign_deps),
                "static_sign": a.static_sign,
                "fixed": a.fixed,
            }

        return {
            "name": self.name,
            "qubits": list(self.qubits),
            "inputs": list(self.inputs),
            "outputs": list(self.outputs),
            "edges": [list(e) for e in sorted(self.edges)],
            "measurements": {str(q): meas(self.measurements[q]) for q in self.measured},
            "byproducts": {
                str(o): {"z": sorted(self.byproducts[o][0]), "x": sorted(self.byproducts[o][1])}
                for o in self.outputs
            },
            "reference": [[[float(v.real), float(v.imag)] for v in row] for row in self.reference],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, d: Mapping) -> "MeasurementPattern":
        try:
            meas = {}
            for q, m in d["measurements"].items():
                if m["plane"] == "Z":
                    meas[int(q)] = MEASURE_Z
                else:
                    meas[int(q)] = Measurement("XY", AngleExpr(
                        float(m["base"]), frozenset(m.get("sign_deps", ())),
                        int(m.get("static_sign", 1)), bool(m.get("fixed", False)),
                    ))
            byp = {int(o): (frozenset(r["z"]), frozenset(r["x"])) for o, r in d["byproducts"].items()}
            ref = np.array([[complex(re, im) for re, im in row] for row in d["reference"]])
            return cls(
                tuple(d["qubits"]), tuple(d["inputs"]), tuple(d["outputs"]),
                frozenset(tuple(e) for e in d["edges"]), meas, byp, ref, d.get("name", ""),
            )
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, PatternError):
                raise
            raise PatternError(f"malformed pattern document: {exc}") from exc

    @classmethod
    def from_json(cls, text: str) -> "MeasurementPattern":
        return cls.from_dict(json.loads(text))


def temporal_rounds(p: MeasurementPattern) -> list[set]:
    """Layer measured qubits by their angle dependencies.

    Dependency-free qubits form round 0; dependencies are structural, so a
    zero base angle still counts.
    """
    deps = {q: set(m.deps) for q, m in p.measurements.items()}
    level: dict[int, int] = {}
    visiting: set[int] = set()

    def depth(q: int) -> int:
        if q in level:
            return level[q]
        if q in visiting:
            raise PatternError(f"cyclic measurement dependency through qubit {q}")
        visiting.add(q)
        d = 1 + max((depth(r) for r in deps[q]), default=-1)
        visiting.discard(q)
        level[q] = d
        return d

    for q in deps:
        depth(q)
    if not level:
        return []
    rounds: list[set] = [set() for _ in range(max(level.values()) + 1)]
    for q, d in level.items():
        rounds[d].add(q)
    return rounds


# ---------------------------------------------------------------------------
# built-in patterns


def _chain_reference(thetas: Sequence[float]) -> np.ndarray:
    u = np.eye(2, dtype=complex)
    for th in thetas:
        u = H @ exp_iz(th) @ u
    return u


def chain_pattern(
    thetas: Sequence[float],
    fixed: Sequence[bool] | None = None,
    reference: np.ndarray | None = None,
    name: str = "chain",
) -> MeasurementPattern:
    """Linear cluster of ``len(thetas) + 1`` qubits simulating prod_k H e^{i theta_k Z/2}.

    Qubits are numbered 1..L+1 with qubit 1 the input.  Each link turns the
    accumulated byproduct ``Z^a X^b`` into ``Z^b X^(a+s_k)`` and flips the
    sign of its own angle when ``b`` is odd, which fixes the sign
    dependencies and the final byproduct rule.
    """
    fixed = list(fixed) if fixed is not None else [False] * len(thetas)
    if len(fixed) != len(thetas):
        raise ValueError("fixed flags must match thetas")
    n_links = len(thetas)
    qubits = tuple(range(1, n_links + 2))
    meas = {}
    a, b = frozenset(), frozenset()
    for k, (th, fx) in enumerate(zip(thetas, fixed), start=1):
        if fx:
            if th not in (0.0, math.pi / 2):
                raise ValueError("fixed links must be X (0) or Y (pi/2) measurements")
            meas[k] = MEASURE_X if th == 0.0 else MEASURE_Y
            if th != 0.0 and b:
                raise ValueError("a fixed Y link cannot follow an odd X byproduct")
        else:
            meas[k] = measure_xy(th, b)
        a, b = b, a ^ {k}
    out = n_links + 1
    ref = _chain_reference(thetas) if reference is None else reference
    return MeasurementPattern(
        qubits, (1,), (out,), frozenset((k, k + 1) for k in range(1, out)),
        meas, {out: (a, b)}, ref, name,
    )


def euler_unitary(zeta: float, eta: float, xi: float) -> np.ndarray:
    """exp(-i zeta X/2) exp(-i eta Z/2) exp(-i xi X/2)."""
    return exp_ix(-zeta) @ exp_iz(-eta) @ exp_ix(-xi)


def rotation_pattern(zeta: float, eta: float, xi: float, three_link: bool = False) -> MeasurementPattern:
    """General one-qubit rotation on a linear cluster.

    Default: 5 qubits, phi_1 = 0 (X), phi_2 = -(-1)^{s1} xi,
    phi_3 = -(-1)^{s2} eta, phi_4 = -(-1)^{s1+s3} zeta, byproduct
    Z^{s1+s3} X^{s2+s4}.  With ``three_link`` the first X link is dropped
    and the angles act directly: the 4-qubit chain then simulates
    H e^{-i zeta Z/2} e^{-i eta X/2} e^{-i xi Z/2}, which is a general
    rotation but not in the X-Z-X Euler form.
    """
    if three_link:
        return chain_pattern([-xi, -eta, -zeta], name="rotation3")
    return chain_pattern(
        [0.0, -xi, -eta, -zeta],
        fixed=[True, False, False, False],
        reference=euler_unitary(zeta, eta, xi),
        name="rotation",
    )


def identity_wire(length: int = 0) -> MeasurementPattern:
    """Even-length X-measured chain; ``length=0`` is a bare qubit (input = output)."""
    if length < 0 or length % 2:
        raise ValueError("identity wires need a non-negative even length")
    if length == 0:
        return MeasurementPattern((1,), (1,), (1,), frozenset(), {}, {1: ((), ())}, np.eye(2), "wire")
    return chain_pattern([0.0] * length, fixed=[True] * length, reference=np.eye(2), name="wire")


CNOT_MATRIX = np.array(
    # little-endian: index = control + 2 * target
    [[1, 0, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0], [0, 1, 0, 0]], dtype=complex
)


def cnot_pattern() -> MeasurementPattern:
    """Four-qubit star: control 1 stays put, target moves 2 -> 4 via 3.

    Qubits 2 and 3 are measured in X; byproduct Z_c^{s2} on the control and
    Z_t^{s2} X_t^{s3} on the target.
    """
    return MeasurementPattern(
        (1, 2, 3, 4), (1, 2), (1, 4),
        frozenset({(1, 3), (2, 3), (3, 4)}),
        {2: MEASURE_X, 3: MEASURE_X},
        {1: ({2}, set()), 4: ({2}, {3})},
        CNOT_MATRIX, "cnot",
    )


# ---------------------------------------------------------------------------
# structural operations


def relabel(p: MeasurementPattern, mapping: Mapping[int, int]) -> MeasurementPattern:
    m = lambda q: mapping.get(q, q)  # noqa: E731
    ms = lambda s: frozenset(m(q) for q in s)  # noqa: E731
    meas = {}
    for q, spec in p.measurements.items():
        if spec.angle is not None:
            spec = Measurement("XY", replace(spec.angle, sign_deps=ms(spec.angle.sign_deps)))
        meas[m(q)] = spec
    return MeasurementPattern(
        tuple(m(q) for q in p.qubits), tuple(m(q) for q in p.inputs), tuple(m(q) for q in p.outputs),
        frozenset((m(a), m(b)) for a, b in p.edges), meas,
        {m(o): (ms(z), ms(x)) for o, (z, x) in p.byproducts.items()},
        p.reference, p.name,
    )


def _permute_unitary(u: np.ndarray, perm: Sequence[int]) -> np.ndarray:
    """Reorder logical qubits: new qubit i is old qubit ``perm[i]``."""
    k = len(perm)
    if k <= 1:
        return u
    # tensor axes: output bits (MSB first) then input bits (MSB first)
    t = u.reshape((2,) * (2 * k))
    ax = lambda q: k - 1 - q  # noqa: E731
    out_axes = [ax(perm[ax(j)]) for j in range(k)]
    t = t.transpose(out_axes + [k + a for a in out_axes])
    return t.reshape(1 << k, 1 << k)


def permute_logical(p: MeasurementPattern, perm: Sequence[int]) -> MeasurementPattern:
    """Same pattern with logical qubit ``i`` taken from old logical ``perm[i]``."""
    if sorted(perm) != list(range(p.width)):
        raise ValueError("perm must be a permutation of the logical qubits")
    return MeasurementPattern(
        p.qubits, tuple(p.inputs[j] for j in perm), tuple(p.outputs[j] for j in perm),
        p.edges, p.measurements, p.byproducts, _permute_unitary(p.reference, perm), p.name,
    )


def tensor(p: MeasurementPattern, q: MeasurementPattern) -> MeasurementPattern:
    """Side-by-side patterns; ``p``'s logical qubits come first (least significant)."""
    shift = max(p.qubits) + 1 - min(q.qubits)
    q2 = relabel(q, {v: v + shift for v in q.qubits})
    return MeasurementPattern(
        p.qubits + q2.qubits, p.inputs + q2.inputs, p.outputs + q2.outputs,
        p.edges | q2.edges, {**p.measurements, **q2.measurements},
        {**p.byproducts, **q2.byproducts},
        np.kron(q2.reference, p.reference), f"{p.name}*{q.name}",
    )


def compose(
    p1: MeasurementPattern,
    p2: MeasurementPattern,
    wiring: Mapping[int, int] | None = None,
) -> MeasurementPattern:
    """Run ``p1`` then ``p2``, identifying ``p1`` outputs with ``p2`` inputs.

    ``wiring`` maps p1 output ids to p2 input ids (default: positional).  The
    byproduct left by ``p1`` on an identified qubit ``o`` is pushed through
    ``p2``'s entangling gates (X_o -> X_o Z_w for every p2-neighbour w) and
    absorbed: an X on a parametric equatorial qubit flips the sign of its
    angle, a Z (or an X on a Y- or Z-measured qubit) relabels its outcome,
    and whatever lands on a p2 output joins the final byproduct.
    """
    if wiring is None:
        if p1.width != p2.width:
            raise PatternError("positional wiring needs equal widths")
        wiring = dict(zip(p1.outputs, p2.inputs))
    wiring = dict(wiring)
    if sorted(wiring) != sorted(p1.outputs) or sorted(wiring.values()) != sorted(p2.inputs):
        raise PatternError("wiring must be a bijection from p1 outputs onto p2 inputs")

    # relabel p2: inputs become the wired p1 outputs, everything else fresh
    to_p1 = {i: o for o, i in wiring.items()}
    fresh = max(p1.qubits) + 1
    mapping = {}
    for q in p2.qubits:
        if q in to_p1:
            mapping[q] = to_p1[q]
        else:
            mapping[q] = fresh
            fresh += 1
    q2 = relabel(p2, mapping)
    if p1.edges & q2.edges:
        raise PatternError("p1 and p2 both entangle the same pair of identified qubits")

    # Pauli frame entering p2, as parity sets over p1 outcomes
    pz: dict[int, frozenset] = {q: frozenset() for q in q2.qubits}
    px: dict[int, frozenset] = {q: frozenset() for q in q2.qubits}
    for o in p1.outputs:
        bz, bx = p1.byproducts[o]
        pz[o] ^= bz
        px[o] ^= bx
        for w in q2.neighbors(o):
            pz[w] ^= bx

    # outcome relabeling of p2-measured qubits, and the angle sign flips
    flips: dict[int, frozenset] = {}
    extra_sign: dict[int, frozenset] = {}
    for q, spec in q2.measurements.items():
        if spec.plane == "Z":
            flips[q] = px[q]
        elif spec.angle.fixed:
            # -0 = 0; -(pi/2) = pi/2 with the eigenstate labels swapped
            flips[q] = pz[q] ^ px[q] if spec.angle.base != 0.0 else pz[q]
        else:
            flips[q] = pz[q]
            extra_sign[q] = px[q]

    def subst(s: frozenset) -> frozenset:
        out = frozenset()
        for r in s:
            out ^= {r} ^ flips[r] if r in flips else {r}
        return out

    meas = dict(p1.measurements)
    for q, spec in q2.measurements.items():
        if spec.angle is not None and not spec.angle.fixed:
            deps = subst(spec.angle.sign_deps) ^ extra_sign[q]
            spec = Measurement("XY", replace(spec.angle, sign_deps=deps))
        meas[q] = spec
    byp = {}
    for o in q2.outputs:
        z, x = q2.byproducts[o]
        byp[o] = (subst(z) ^ pz[o], subst(x) ^ px[o])

    # logical order: p2 input j carries p1 logical perm[j]
    perm = [p1.outputs.index(to_p1[i]) for i in p2.inputs]
    ref = q2.reference @ _permute_unitary(p1.reference, perm)
    qubits = p1.qubits + tuple(q for q in q2.qubits if q not in set(p1.qubits))
    return MeasurementPattern(
        qubits, p1.inputs, q2.outputs, p1.edges | q2.edges, meas, byp, ref,
        f"{p1.name}>{p2.name}",
    )


# ---------------------------------------------------------------------------
# execution


@dataclass
class OutcomeRecord:
    outcomes: dict = field(default_factory=dict)  # qubit -> recorded bit
    angles: dict = field(default_factory=dict)  # qubit -> effective angle used
    probability: float = 1.0
    order: tuple = ()


def _schedule(p: MeasurementPattern, prepared: bool = False) -> tuple[list, list]:
    """Branch-independent op list: ("add",), ("cz", i, j), ("measure", q, pos).

    Qubits are brought in lazily, just before a neighbour is measured, so
    chains never hold more than a few live qubits.  Returns the op list and
    the final register layout (qubit ids by register index).
    """
    present = list(p.inputs) if not prepared else list(p.qubits)
    applied = set() if not prepared else set(p.edges)
    done: set = set()
    ops: list = []

    def bring(qs: Iterable[int]) -> None:
        for q in qs:
            if q not in present and q not in done:
                present.append(q)
                ops.append(("add",))
        for a, b in sorted(p.edges - applied):
            if a in present and b in present:
                applied.add((a, b))
                ops.append(("cz", present.index(a), present.index(b)))

    for q in p.measurement_order():
        bring([q] + p.neighbors(q))
        ops.append(("measure", q, present.index(q)))
        present.remove(q)
        done.add(q)
    bring(p.outputs)
    return ops, present


def _outcome_basis(spec: Measurement, outcomes: Mapping[int, int]) -> tuple[EquatorialBasis, float]:
    if spec.plane == "Z":
        return _Z_BASIS, 0.0
    phi = spec.angle.resolve(outcomes)
    return EquatorialBasis(phi), phi


def _walk(
    p: MeasurementPattern,
    t: np.ndarray,
    ops: list,
    start: int,
    n_live: int,
    outcomes: dict,
    angles: dict,
    choose: Callable[[int, np.ndarray, np.ndarray], Iterable[int]],
) -> Iterator[tuple[np.ndarray, dict, dict]]:
    for k in range(start, len(ops)):
        op = ops[k]
        if op[0] == "add":
            t = _append_plus(t)
            n_live += 1
        elif op[0] == "cz":
            t = _apply_cz(t, n_live, op[1], op[2])
        else:
            _, q, pos = op
            basis, phi = _outcome_basis(p.measurements[q], outcomes)
            branches = [_project(t, n_live, pos, basis, s) for s in (0, 1)]
            axes = tuple(range(n_live - 1))
            weights = np.array([np.sum(np.abs(b) ** 2, axis=axes) for b in branches])
            for s in choose(q, weights, np.sum(np.abs(t) ** 2, axis=tuple(range(n_live)))):
                outcomes[q] = s
                angles[q] = phi
                yield from _walk(p, branches[s], ops, k + 1, n_live - 1, outcomes, angles, choose)
                del outcomes[q]
                del angles[q]
            return
    yield t, outcomes, angles


def _finalize(p: MeasurementPattern, t: np.ndarray, layout: list) -> np.ndarray:
    """Move outputs into logical order; returns shape (2^k, batch)."""
    m = len(layout)
    k = p.width
    src = [m - 1 - layout.index(p.outputs[k - 1 - j]) for j in range(k)]
    t = t.transpose(src + [m])
    return t.reshape(1 << k, -1)


def byproduct_for(p: MeasurementPattern, outcomes: Mapping[int, int]) -> ByproductOperator:
    z = [sum(outcomes[d] for d in p.byproducts[o][0]) % 2 for o in p.outputs]
    x = [sum(outcomes[d] for d in p.byproducts[o][1]) % 2 for o in p.outputs]
    return ByproductOperator(tuple(z), tuple(x))


def run_pattern(
    p: MeasurementPattern,
    input_state: StateVector,
    *,
    seed: int | np.random.Generator | None = None,
    branch: Mapping[int, int] | None = None,
) -> tuple[OutcomeRecord, StateVector, ByproductOperator]:
    """Execute once, sampling outcomes (``seed``) or forcing them (``branch``).

    Returns the outcome record, the raw (uncorrected) output state and the
    byproduct to undo.  Forcing a branch of probability below 1e-12 raises
    :class:`ForbiddenBranchError`.
    """
    if input_state.n_qubits != p.width:
        raise ValueError(f"pattern has {p.width} inputs, state has {input_state.n_qubits} qubits")
    if (seed is None) == (branch is None):
        raise ValueError("give exactly one of seed or branch")
    rng = np.random.default_rng(seed) if branch is None else None
    probability = [1.0]

    def choose(q, weights, total):
        w = weights[:, 0] / total[0]
        if branch is not None:
            s = int(branch[q])
            if w[s] < FORBIDDEN_PROB:
                raise ForbiddenBranchError(f"outcome {s} on qubit {q} has probability {w[s]:.3g}")
        else:
            s = 0 if rng.random() < w[0] / (w[0] + w[1]) else 1
        probability[0] *= w[s]
        return (s,)

    ops, layout = _schedule(p)
    t = input_state.tensor()[..., np.newaxis]
    out, outcomes, angles = next(_walk(p, t, ops, 0, p.width, {}, {}, choose))
    outcomes, angles = dict(outcomes), dict(angles)
    amps = _finalize(p, out, layout)[:, 0]
    amps = amps / np.linalg.norm(amps)
    record = OutcomeRecord(outcomes, angles, probability[0], tuple(p.measurement_order()))
    return record, StateVector(amps), byproduct_for(p, outcomes)


@dataclass
class Branch:
    outcomes: dict
    angles: dict
    probabilities: np.ndarray  # per input column
    raw: np.ndarray  # normalized raw outputs, (2^k, batch)
    byproduct: ByproductOperator

    def corrected(self) -> np.ndarray:
        return self.byproduct.correct_array(self.raw)


def enumerate_branches(
    p: MeasurementPattern,
    inputs: np.ndarray,
    prepared_state: np.ndarray | None = None,
) -> Iterator[Branch]:
    """Depth-first walk over every outcome branch with non-negligible probability.

    ``inputs`` has shape (2^k,) or (2^k, batch) with normalized columns; all
    columns share each branch's measurement sequence.  Alternatively pass a
    ``prepared_state`` (shape (2^n,) over ``p.qubits`` in order) that already
    holds the entangled resource; ``inputs`` is then ignored.
    """
    if prepared_state is None:
        inputs = np.asarray(inputs, dtype=complex)
        if inputs.ndim == 1:
            inputs = inputs[:, np.newaxis]
        if inputs.shape[0] != 1 << p.width:
            raise ValueError(f"inputs must have {1 << p.width} rows")
        t = inputs.reshape((2,) * p.width + (inputs.shape[1],))
        ops, layout = _schedule(p)
        n0 = p.width
    else:
        n0 = len(p.qubits)
        t = np.asarray(prepared_state, dtype=complex).reshape((2,) * n0 + (1,))
        ops, layout = _schedule(p, prepared=True)
    norms = np.sum(np.abs(t) ** 2, axis=tuple(range(n0)))

    def choose(q, weights, total):
        return [s for s in (0, 1) if np.max(weights[s] / norms) >= FORBIDDEN_PROB]

    for out, outcomes, angles in _walk(p, t, ops, 0, n0, {}, {}, choose):
        raw = _finalize(p, out, layout)
        col = np.sum(np.abs(raw) ** 2, axis=0)
        probs = col / norms
        with np.errstate(invalid="ignore", divide="ignore"):
            raw = np.where(col > 0, raw / np.sqrt(col), 0)
        yield Branch(dict(outcomes), dict(angles), probs, raw, byproduct_for(p, outcomes))


def branch_fidelities(p: MeasurementPattern, inputs: np.ndarray) -> Iterator[tuple[Branch, np.ndarray]]:
    """Per branch: |<U in | corrected out>|^2 for every input column."""
    inputs = np.asarray(inputs, dtype=complex)
    if inputs.ndim == 1:
        inputs = inputs[:, np.newaxis]
    expected = p.reference @ inputs
    for br in enumerate_branches(p, inputs):
        fid = np.abs(np.sum(expected.conj() * br.corrected(), axis=0)) ** 2
        yield br, fid
