"""GHZ correlations, the hidden-variable contradiction, and the measurement OR gate."""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product
from typing import Sequence

import numpy as np

from .stabilizer import PauliOperator, expectation, graph_state, path_graph
from .statevec import (
    FORBIDDEN_PROB,
    H,
    X_BASIS,
    Y_BASIS,
    StateVector,
    apply_1q,
    branch_probability,
    fidelity,
    measure,
)

# label[q] acts on qubit q; expected eigenvalue on |GHZ>
GHZ_STABILIZERS = {"XXX": 1, "XYY": -1, "YXY": -1, "YYX": -1}
OBSERVABLES = ("X1", "X2", "X3", "Y1", "Y2", "Y3")


def ghz_state() -> StateVector:
    amps = np.zeros(8, dtype=complex)
    amps[0] = amps[7] = 1 / math.sqrt(2)
    return StateVector(amps)


@dataclass
class GhzReport:
    expectations: dict  # label -> <GHZ|P|GHZ>
    cluster_fidelity: float  # |<phi_3| H_1 H_3 |GHZ>|^2

    @property
    def passed(self) -> bool:
        signs = all(abs(self.expectations[k] - v) < 1e-10 for k, v in GHZ_STABILIZERS.items())
        return signs and abs(self.cluster_fidelity - 1) < 1e-10


def ghz_checks() -> GhzReport:
    ghz = ghz_state()
    exps = {k: float(np.real(expectation(ghz, PauliOperator.from_label(k)))) for k in GHZ_STABILIZERS}
    rotated = apply_1q(apply_1q(ghz, 0, H), 2, H)
    return GhzReport(exps, fidelity(rotated, graph_state(path_graph(3))))


def hvm_constraints() -> list[tuple[tuple[str, str, str], int]]:
    """Product constraints implied by the four stabilizers."""
    out = []
    for label, sign in GHZ_STABILIZERS.items():
        out.append((tuple(f"{p}{q + 1}" for q, p in enumerate(label)), sign))
    return out


def hvm_exhaustive(constraints: Sequence[tuple[tuple[str, str, str], int]] | None = None) -> int:
    """Count the +-1 value assignments to X1..Y3 meeting every product constraint."""
    constraints = hvm_constraints() if constraints is None else list(constraints)
    count = 0
    for values in product((1, -1), repeat=len(OBSERVABLES)):
        v = dict(zip(OBSERVABLES, values))
        if all(math.prod(v[o] for o in obs) == sign for obs, sign in constraints):
            count += 1
    return count


@dataclass(frozen=True)
class OrRun:
    a: int
    b: int
    bases: tuple  # q1, q2, q3: 0 = X, 1 = Y
    outcomes: tuple  # s1, s2, s3
    probability: float

    @property
    def output(self) -> int:
        return self.outcomes[0] ^ self.outcomes[1] ^ self.outcomes[2]


def or_bases(a: int, b: int) -> tuple:
    return (a, b, a ^ b)


def _run_or(a: int, b: int, branch: tuple | None, rng: np.random.Generator | None) -> OrRun | None:
    bases = or_bases(a, b)
    state = ghz_state()
    outcomes = [0, 0, 0]
    prob = 1.0
    # measure the top qubit first so lower indices stay put
    for q in (2, 1, 0):
        basis = Y_BASIS if bases[q] else X_BASIS
        if branch is not None:
            p = branch_probability(state, q, basis, branch[q])
            if p < FORBIDDEN_PROB:
                return None
            res = measure(state, q, basis, branch=branch[q])
        else:
            res = measure(state, q, basis, rng=rng)
        outcomes[q] = res.outcome
        prob *= res.probability
        state = res.post_state
    return OrRun(a, b, bases, tuple(outcomes), prob)


def mbqc_or(a: int, b: int, seed: int | None = None) -> OrRun:
    """One sampled run; ``output`` is s1 xor s2 xor s3."""
    if a not in (0, 1) or b not in (0, 1):
        raise ValueError("inputs are bits")
    return _run_or(a, b, None, np.random.default_rng(seed))


def mbqc_or_branches(a: int, b: int) -> list[OrRun]:
    """Every outcome triple of non-negligible probability."""
    if a not in (0, 1) or b not in (0, 1):
        raise ValueError("inputs are bits")
    runs = [_run_or(a, b, br, None) for br in product((0, 1), repeat=3)]
    return [r for r in runs if r is not None]
