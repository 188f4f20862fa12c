"""Monte-Carlo model of heralded linear-cluster growth.

Each attempt fuses a fresh qubit onto the chain end: success adds one
qubit, failure costs two (the end qubit is lost and its neighbour is
Z-measured away).  Mean drift per attempt is ``3p - 2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

BLOCK = 8192  # trials per independently seeded block


@dataclass(frozen=True)
class GrowthParams:
    p: float
    steps: int = 20
    trials: int = 100_000
    seed: int = 0
    initial_length: int = 3

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ValueError("p must lie in [0, 1]")
        if self.steps < 1 or self.trials < 1 or self.initial_length < 0:
            raise ValueError("steps and trials must be positive, initial_length non-negative")


@dataclass(frozen=True)
class GrowthStats:
    p: float
    drift: float
    stderr: float
    half_width: float  # 95% confidence
    extinction: float  # fraction of clamped runs that reached length 0
    trials: int

    @property
    def analytic(self) -> float:
        return 3 * self.p - 2


def step(length: int, p: float, rng: np.random.Generator) -> int:
    """One attempt: ``length + 1`` with probability p, else ``max(length - 2, 0)``."""
    if length < 0:
        raise ValueError("length must be non-negative")
    return apply_step(length, bool(rng.random() < p))


def apply_step(length, success, clamp: bool = True):
    """Deterministic update; works elementwise on arrays."""
    grown = np.where(success, length + 1, length - 2)
    if clamp:
        grown = np.maximum(grown, 0)
    return grown if isinstance(grown, np.ndarray) and grown.ndim else int(grown)


def _block_seeds(seed: int, trials: int) -> list[tuple[int, np.random.SeedSequence]]:
    n_blocks = -(-trials // BLOCK)
    children = np.random.SeedSequence(seed).spawn(n_blocks)
    return [(min(BLOCK, trials - i * BLOCK), ss) for i, ss in enumerate(children)]


def simulate(params: GrowthParams) -> GrowthStats:
    """Run ``trials`` trajectories of ``steps`` attempts.

    Drift comes from trajectories started at ``2*steps + 2`` so clamping can
    never trigger; extinction from the same attempt outcomes replayed from
    ``initial_length`` with clamping on.  Blocks of trials draw from
    independent child seeds, so results do not depend on execution order.
    """
    start = 2 * params.steps + 2
    drift_sum = 0.0
    drift_sq = 0.0
    extinct = 0
    for size, ss in _block_seeds(params.seed, params.trials):
        rng = np.random.default_rng(ss)
        success = rng.random((params.steps, size)) < params.p
        free = np.full(size, start, dtype=np.int64)
        clamped = np.full(size, params.initial_length, dtype=np.int64)
        died = np.zeros(size, dtype=bool)
        for row in success:
            free = apply_step(free, row, clamp=False)
            clamped = apply_step(clamped, row)
            died |= clamped == 0
        d = (free - start) / params.steps
        drift_sum += float(d.sum())
        drift_sq += float((d * d).sum())
        extinct += int(died.sum())
    n = params.trials
    mean = drift_sum / n
    var = max(drift_sq / n - mean * mean, 0.0) * n / max(n - 1, 1)
    se = math.sqrt(var / n)
    return GrowthStats(params.p, mean, se, 1.96 * se, extinct / n, n)


def threshold_scan(p_grid, params: GrowthParams) -> list[GrowthStats]:
    """Drift at each p, all points sharing ``params.seed``.

    Shared seeds give common random numbers: attempt success is ``u < p``
    with the same uniforms ``u`` at every p, so the estimated drift is
    monotone in p by construction.
    """
    grid = [float(p) for p in p_grid]
    if not grid:
        raise ValueError("empty p grid")
    return [
        simulate(GrowthParams(p, params.steps, params.trials, params.seed, params.initial_length))
        for p in sorted(grid)
    ]


def zero_crossing(rows: list[GrowthStats]) -> float | None:
    """Linear interpolation of the first sign change in drift, if any."""
    for a, b in zip(rows, rows[1:]):
        if a.drift == 0:
            return a.p
        if a.drift < 0 < b.drift or a.drift > 0 > b.drift:
            return a.p + (b.p - a.p) * (-a.drift) / (b.drift - a.drift)
    if rows and rows[-1].drift == 0:
        return rows[-1].p
    return None
