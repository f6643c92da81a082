"""
qinvert - Tradeoff Attacks

The upper-bound side of the time-space tradeoff: Hellman tables for
functions, cycle checkpoints for permutations and restricted-range Grover
search, each measured as an (S, T, epsilon) point. Every answer an attack
returns is checked with one oracle call before it counts toward epsilon.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .core import (
    FunctionTable,
    InvalidParameterError,
    PermutationTable,
    derive_seed,
    rng_for,
    sample_function,
    sample_permutation,
)
from .ranking import bits_for
from .resources import DEFAULT_LIMITS, SimulationLimits, TrialPool
from .statevector import grover_closed_form, grover_invert

logger = logging.getLogger(__name__)

DEFAULT_CHALLENGES = 1000
RECORD_FIELDS = ("method", "n", "m", "s_bits", "t_worst", "t_mean", "epsilon", "seed")


@dataclass(frozen=True)
class TradeoffRecord:
    """One measured (S, T, epsilon) point."""
    method: str
    n: int
    m: int
    s_bits: int
    t_worst: int
    t_mean: float
    epsilon: float
    seed: int
    wrong_answers: int = 0

    def __post_init__(self):
        if not 0.0 <= self.epsilon <= 1.0:
            raise InvalidParameterError(f"epsilon={self.epsilon} outside [0, 1]")
        counts = (self.n, self.m, self.s_bits, self.t_worst, self.wrong_answers)
        if min(counts) < 0 or self.t_mean < 0:
            raise InvalidParameterError("Tradeoff record counts must be nonnegative")

    def to_row(self) -> Tuple:
        return tuple(getattr(self, name) for name in RECORD_FIELDS)


class CountingOracle:
    """Classical oracle access to a table that counts evaluations."""

    def __init__(self, f: FunctionTable):
        self.f = f
        self.queries = 0

    def __call__(self, x: int) -> int:
        self.queries += 1
        return int(self.f.entries[x])


def _affine_reducer(domain: int, seed: int) -> Tuple[int, int]:
    rng = rng_for(seed)
    while True:
        a = int(rng.integers(1, domain)) if domain > 1 else 1
        if math.gcd(a, domain) == 1:
            return a, int(rng.integers(0, domain))


@dataclass(frozen=True)
class HellmanTableSet:
    """
    r Hellman tables over f. Table i walks x -> g_i(f(x)) with the affine
    reducer g_i(z) = (a_i z + b_i) mod m and keeps endpoint -> starts.
    """
    m: int
    n: int
    m_chains: int
    t_len: int
    reducers: Tuple[Tuple[int, int], ...]
    endpoints: Tuple[Mapping[int, Tuple[int, ...]], ...] = field(repr=False)

    @property
    def r(self) -> int:
        return len(self.reducers)

    @property
    def stored_pairs(self) -> int:
        return sum(len(starts) for table in self.endpoints for starts in table.values())

    @property
    def s_bits(self) -> int:
        """Stored (endpoint, start) pairs plus the reducer coefficients."""
        return self.stored_pairs * 2 * bits_for(self.m) + self.r * 2 * bits_for(self.m)

    @property
    def t_worst(self) -> int:
        return self.r * self.t_len * (self.t_len + 1) // 2


def hellman_build(f: FunctionTable, m_chains: int, t_len: int, r: int, seed: int,
                  limits: Optional[SimulationLimits] = None,
                  workers: int = 1) -> HellmanTableSet:
    """
    Build r Hellman tables of m_chains chains of length t_len.

    Raises:
        InvalidParameterError: If a size is not positive
        WorkCapExceeded: If r*m_chains*t_len exceeds the work cap
    """
    if min(m_chains, t_len, r) < 1:
        raise InvalidParameterError("m_chains, t_len and r must be positive")
    (limits or DEFAULT_LIMITS).check_hellman_work(r * m_chains * t_len, f.m)
    entries = f.entries

    def build(i: int) -> Tuple[Tuple[int, int], Dict[int, Tuple[int, ...]]]:
        table_seed = derive_seed(seed, "hellman", i)
        a, b = _affine_reducer(f.m, derive_seed(table_seed, "reducer"))
        starts = rng_for(derive_seed(table_seed, "starts")).integers(0, f.m, size=m_chains)
        points = starts.astype(np.int64)
        for _ in range(t_len):
            points = (a * entries[points] + b) % f.m
        grouped: Dict[int, List[int]] = {}
        for end, start in zip(points.tolist(), starts.tolist()):
            grouped.setdefault(end, []).append(start)
        return (a, b), {end: tuple(sorted(s)) for end, s in sorted(grouped.items())}

    built = TrialPool(workers).map(build, range(r))
    logger.debug("Built %d Hellman tables (%d chains of length %d)", r, m_chains, t_len)
    return HellmanTableSet(f.m, f.n, m_chains, t_len,
                           tuple(reducer for reducer, _ in built),
                           tuple(table for _, table in built))


def hellman_invert(tables: HellmanTableSet, oracle: CountingOracle, y: int) -> Optional[int]:
    """
    Look for a preimage of y; every candidate is checked with one oracle call.

    Each table gets t_len*(t_len+1)/2 queries. Merged chains and false alarms
    stop a table once its share is spent, so a call never makes more than
    ``tables.t_worst`` queries.

    Returns:
        x with f(x) = y, or None on a miss. Queries are counted by the oracle.
    """
    t = tables.t_len
    share = t * (t + 1) // 2
    for (a, b), table in zip(tables.reducers, tables.endpoints):
        spent = 0
        z = (a * y + b) % tables.m
        for j in range(t):
            walk = t - j
            for start in table.get(z, ()):
                if spent + walk > share:
                    break
                spent += walk
                w = start
                for _ in range(walk - 1):
                    w = (a * oracle(w) + b) % tables.m
                if oracle(w) == y:
                    return w
            if j == t - 1 or spent + 1 > share:
                break
            spent += 1
            z = (a * oracle(z) + b) % tables.m
    return None


@dataclass(frozen=True)
class CheckpointIndex:
    """Anchors along the cycles of a permutation, each mapped to the previous anchor."""
    n: int
    t_len: int
    checkpoints: Mapping[int, int] = field(repr=False)
    cycle_count: int = 0

    @property
    def s_bits(self) -> int:
        return len(self.checkpoints) * 2 * bits_for(self.n)


def checkpoint_build(pi: PermutationTable, t_len: int, seed: int = 0) -> CheckpointIndex:
    """
    Put an anchor every t_len steps along each cycle of pi.

    A cycle no longer than t_len gets one anchor mapped to itself. The seed is
    accepted for interface symmetry; the construction is deterministic.

    Raises:
        InvalidParameterError: If t_len < 1
    """
    if t_len < 1:
        raise InvalidParameterError("t_len must be at least 1")
    checkpoints: Dict[int, int] = {}
    cycles = pi.cycles()
    for cycle in cycles:
        anchors = cycle[::t_len]
        for k, anchor in enumerate(anchors):
            checkpoints[anchor] = anchors[k - 1]
    logger.debug("Checkpoint index: %d anchors over %d cycles", len(checkpoints), len(cycles))
    return CheckpointIndex(pi.n, t_len, checkpoints, len(cycles))


def checkpoint_invert(index: CheckpointIndex, oracle: CountingOracle, y: int) -> int:
    """
    Walk forward from y to an anchor, jump to the previous anchor and walk
    forward to the predecessor of y. At most 2*t_len oracle calls.
    """
    z = y
    steps = 0
    while z not in index.checkpoints:
        z = oracle(z)
        steps += 1
        if steps > index.t_len:
            raise InvalidParameterError("Checkpoint index was not built for this permutation")
    w = index.checkpoints[z]
    for _ in range(2 * index.t_len + 1):
        nxt = oracle(w)
        if nxt == y:
            return w
        w = nxt
    raise InvalidParameterError("Checkpoint index was not built for this permutation")


def _challenges(f: FunctionTable, count: int, seed: int, uniform_y: bool) -> np.ndarray:
    rng = rng_for(seed)
    if uniform_y:
        return rng.integers(0, f.n, size=count)
    return f.entries[rng.integers(0, f.m, size=count)]


def _measure(method: str, f: FunctionTable, s_bits: int, solve, ys: Sequence[int],
             seed: int, workers: int = 1) -> TradeoffRecord:
    def one(y: int) -> Tuple[Optional[bool], int]:
        oracle = CountingOracle(f)
        x = solve(oracle, int(y))
        if x is None:
            return None, oracle.queries
        return int(f.entries[x]) == int(y), oracle.queries

    results = TrialPool(workers, desc=method).map(one, list(ys))
    queries = [q for _, q in results]
    epsilon = sum(ok is True for ok, _ in results) / len(results)
    wrong = sum(ok is False for ok, _ in results)
    return TradeoffRecord(method, f.n, f.m, s_bits, max(queries), float(np.mean(queries)),
                          epsilon, seed, wrong_answers=wrong)


def hellman_attack(f: FunctionTable, m_chains: int, t_len: int, r: int, seed: int,
                   challenges: int = DEFAULT_CHALLENGES, workers: int = 1,
                   limits: Optional[SimulationLimits] = None) -> List[TradeoffRecord]:
    """
    Build tables and measure them under both challenge distributions.

    Returns:
        [record for y = f(uniform x), record for uniform y]
    """
    tables = hellman_build(f, m_chains, t_len, r, seed, limits=limits, workers=workers)

    def solve(oracle, y):
        return hellman_invert(tables, oracle, y)

    out = []
    for method, uniform in (("hellman", False), ("hellman-uniform-y", True)):
        ys = _challenges(f, challenges, derive_seed(seed, "challenges", method), uniform)
        out.append(_measure(method, f, tables.s_bits, solve, ys, seed, workers))
    return out


def checkpoint_attack(pi: PermutationTable, t_len: int, seed: int,
                      challenges: Optional[int] = DEFAULT_CHALLENGES,
                      workers: int = 1) -> TradeoffRecord:
    """Measure the checkpoint attack; ``challenges=None`` tries every y."""
    index = checkpoint_build(pi, t_len, seed)
    if challenges is None:
        ys: Sequence[int] = range(pi.n)
    else:
        ys = _challenges(pi, challenges, derive_seed(seed, "challenges", "checkpoint"), True)
    return _measure("checkpoint", pi, index.s_bits,
                    lambda oracle, y: checkpoint_invert(index, oracle, y), ys, seed, workers)


def grover_iterations(range_size: int) -> int:
    return max(1, int(math.floor(math.pi / 4 * math.sqrt(range_size))))


def grover_point(n: int, epsilon_target: float, mode: str = "analytic", seed: int = 0,
                 limits: Optional[SimulationLimits] = None) -> TradeoffRecord:
    """
    Grover search restricted to the first ceil(epsilon*n) inputs of a
    permutation.

    Analytic mode uses the closed form; simulate mode runs the search on a
    sampled permutation. Either way epsilon is the covered fraction times the
    per-challenge success probability.

    Raises:
        InvalidParameterError: For epsilon outside (0, 1] or an unknown mode
    """
    if not 0.0 < epsilon_target <= 1.0:
        raise InvalidParameterError(f"epsilon={epsilon_target} outside (0, 1]")
    if n < 1:
        raise InvalidParameterError("n must be positive")
    r = math.ceil(epsilon_target * n - 1e-12)
    t = grover_iterations(r)
    if mode == "analytic":
        success = grover_closed_form(r, 1, t)
    elif mode == "simulate":
        (limits or DEFAULT_LIMITS).check_amplitudes(r, "Grover range")
        pi = sample_permutation(n, seed)
        restricted = FunctionTable(m=r, n=n, entries=pi.entries[:r])
        success = grover_invert(restricted, int(pi.entries[0]), t)
    else:
        raise InvalidParameterError(f"Unknown Grover mode '{mode}'")
    return TradeoffRecord("grover", n, n, 0, t, float(t), min(1.0, r / n * success), seed)


@dataclass(frozen=True)
class SweepConfig:
    """One point of a sweep: a method and its parameters."""
    method: str
    n: int
    m: Optional[int] = None
    params: Mapping[str, Any] = field(default_factory=dict)


def run_config(config: SweepConfig, seed: int, workers: int = 1,
               limits: Optional[SimulationLimits] = None) -> List[TradeoffRecord]:
    p = dict(config.params)
    challenges = int(p.get("challenges", DEFAULT_CHALLENGES))
    if config.method == "hellman":
        f = sample_function(config.m or config.n, config.n, derive_seed(seed, "table"))
        side = max(1, math.ceil(config.n ** (1 / 3) - 1e-9))
        return hellman_attack(f, int(p.get("m_chains", side)), int(p.get("t_len", side)),
                              int(p.get("tables", side)), seed, challenges, workers, limits)
    if config.method == "checkpoint":
        pi = sample_permutation(config.n, derive_seed(seed, "table"))
        t_len = int(p.get("t_len", math.isqrt(config.n) or 1))
        return [checkpoint_attack(pi, t_len, seed, challenges, workers)]
    if config.method == "grover":
        return [grover_point(config.n, float(p.get("epsilon", 1.0)),
                             str(p.get("mode", "analytic")), seed, limits)]
    raise InvalidParameterError(f"Unknown sweep method '{config.method}'")


def sweep(configs: Sequence[SweepConfig], seed: int, workers: int = 1,
          limits: Optional[SimulationLimits] = None) -> List[TradeoffRecord]:
    """
    Run every config with a seed derived from ``seed`` and its position.

    Hellman configs contribute two records, one per challenge distribution.
    """
    records: List[TradeoffRecord] = []
    for i, config in enumerate(configs):
        records.extend(run_config(config, derive_seed(seed, "sweep", i), workers, limits))
    return records


def reference_curve(kind: str, n: int, epsilon: float,
                    s_values: Sequence[float]) -> List[Tuple[float, float]]:
    """
    Lower-bound reference T(S) with constants set to 1.

    Permutations: S*T + T^2 = epsilon*n. Functions: S*T^2 = epsilon*n, with
    S = 0 read as T^2 = epsilon*n.
    """
    target = epsilon * n
    out = []
    for s in s_values:
        if kind == "permutation":
            t = (-s + math.sqrt(s * s + 4 * target)) / 2
        elif kind == "function":
            t = math.sqrt(target / max(s, 1.0))
        else:
            raise InvalidParameterError(f"Unknown curve kind '{kind}'")
        out.append((float(s), t))
    return out
