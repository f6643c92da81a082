"""
qinvert - Inversion Reductions

Turns an inverter (advice plus a few queries) into a variable-length random
access code for the inverse table, for permutations and for functions.

Both schemes sample a random subset R of the domain from the shared
randomness and keep the good set G: points of R the inverter handles whose
runs put little query magnitude on the rest of R. Encodings store G, the
table off G and copies of the advice; decoders rebuild the table with all of
G mapped to the challenge and run the inverter on it. Tables the inverter
does not help with fall back to storing the whole table.
"""

import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import product
from typing import Any, Dict, FrozenSet, List, Mapping, Optional, Tuple

import numpy as np

from .core import (
    EncodingError,
    FunctionTable,
    InvalidParameterError,
    InvariantViolation,
    PermutationTable,
    derive_seed,
    rng_for,
)
from .hashing import collision_rate, sample_hash
from .inverters import Inverter
from .qrac import (
    CodeReport,
    CodeScheme,
    DecodeResult,
    Encoding,
    Family,
    QuantumRegister,
    evaluate_code,
)
from .ranking import (
    BitReader,
    BitWriter,
    bits_for,
    injection_count,
    rank_function,
    rank_injection,
    rank_permutation,
    rank_subset,
    unrank_function,
    unrank_injection,
    unrank_permutation,
    unrank_subset,
)
from .resources import DEFAULT_LIMITS, SimulationLimits, TrialPool

logger = logging.getLogger(__name__)

PROB_CUTOFF = 1e-15
TIE_TOLERANCE = 1e-12
REGIME_FACTOR = 8
MAJORITY_SAMPLES = 20_000


def t_eff(t: int) -> int:
    """Query count used in formulas; zero-query inverters count as one."""
    return max(1, t)


@dataclass(frozen=True)
class SchemeParams:
    """
    Constants of the reductions.

    Raises:
        InvalidParameterError: If a constant is out of range or
            5*gamma^2/c_const >= 1
    """
    gamma: float = 0.01
    c_const: float = 0.04
    rho: Optional[int] = None
    big_c: float = 4.0
    success_threshold: float = 2.0 / 3.0
    epsilon: float = 0.5

    def __post_init__(self):
        if not 0.0 < self.gamma < 1.0:
            raise InvalidParameterError(f"gamma={self.gamma} outside (0, 1)")
        if not 0.0 < self.c_const < 1.0:
            raise InvalidParameterError(f"c_const={self.c_const} outside (0, 1)")
        if 5 * self.gamma ** 2 / self.c_const >= 1:
            raise InvalidParameterError(
                f"5*gamma^2/c = {5 * self.gamma ** 2 / self.c_const:.4f} must be below 1"
            )
        if self.rho is not None and self.rho < 1:
            raise InvalidParameterError("rho must be at least 1")
        if self.big_c <= 0:
            raise InvalidParameterError("big_c must be positive")
        if not 0.0 < self.success_threshold <= 1.0:
            raise InvalidParameterError("success_threshold must be in (0, 1]")
        if not 0.0 < self.epsilon <= 1.0:
            raise InvalidParameterError(f"epsilon={self.epsilon} outside (0, 1]")

    @property
    def epsilon_prime(self) -> float:
        return self.epsilon / 2

    def r_probability(self, t: int) -> float:
        return self.gamma / t_eff(t) ** 2

    def magnitude_threshold(self, t: int) -> float:
        return self.c_const / t_eff(t)

    def rho_permutation(self, n: int) -> int:
        if self.rho is not None:
            return self.rho
        return max(1, math.ceil(10 * math.log(n / self.epsilon)))

    def k_threshold(self, m: int, n: int) -> float:
        """K = (2m/n + 1) * C * log2(m/epsilon)."""
        return (2 * m / n + 1) * self.big_c * math.log2(m / self.epsilon)

    def rho_function(self, m: int, n: int) -> int:
        if self.rho is not None:
            return self.rho
        loglog = math.log(math.log2(n)) if n > 2 else 0.0
        return max(1, math.ceil(self.k_threshold(m, n) * 10 * loglog))

    def tag_bits(self, m: int, n: int) -> int:
        loglog = math.log2(math.log2(n)) if n > 2 else 0.0
        return max(1, math.ceil(math.log2(self.k_threshold(m, n)) + loglog))

    def g_threshold_permutation(self, n: int, t: int) -> float:
        return self.epsilon_prime * self.gamma * n / (4 * t_eff(t) ** 2)

    def g_threshold_function(self, m: int, n: int, t: int) -> float:
        return self.epsilon * self.gamma * m / (8 * self.k_threshold(m, n) * t_eff(t) ** 2)


DEFAULT_PARAMS = SchemeParams()


@dataclass(frozen=True)
class InverterProfile:
    """
    Exact behaviour of an inverter on every challenge in the image of f.

    ``success[y]`` is the mass on preimages of y; ``top[y]`` is the most
    probable output, lowest index on ties, or -1 for challenges not in the image.
    """
    table: FunctionTable
    advice: QuantumRegister
    success: np.ndarray = field(repr=False)
    top: np.ndarray = field(repr=False)

    def invertible_fraction(self) -> float:
        """Average over uniform x of the success probability on f(x)."""
        return float(self.success[self.table.entries].mean())

    def success_set(self, criterion: str, threshold: float) -> FrozenSet[int]:
        entries = self.table.entries
        if criterion == "threshold":
            hits = self.success[entries] >= threshold - TIE_TOLERANCE
        elif criterion == "argmax":
            hits = self.top[entries] == np.arange(self.table.m)
        else:
            raise InvalidParameterError(f"Unknown success criterion '{criterion}'")
        return frozenset(int(x) for x in np.flatnonzero(hits))


def profile_inverter(inv: Inverter, f: FunctionTable,
                     advice: Optional[QuantumRegister] = None) -> InverterProfile:
    advice = inv.prepare_advice(f) if advice is None else advice
    success = np.zeros(f.n)
    top = np.full(f.n, -1, dtype=np.int64)
    for y in sorted(f.image()):
        dist = inv.output_distribution(f, y, advice)
        success[y] = float(dist[f.entries == y].sum())
        top[y] = int(np.flatnonzero(dist >= dist.max() - TIE_TOLERANCE)[0])
    return InverterProfile(f, advice, success, top)


def _criterion_for(f: FunctionTable) -> str:
    return "threshold" if isinstance(f, PermutationTable) else "argmax"


def compute_success_set_I(inv: Inverter, f: FunctionTable,
                          params: SchemeParams = DEFAULT_PARAMS,
                          criterion: Optional[str] = None,
                          profile: Optional[InverterProfile] = None) -> FrozenSet[int]:
    """
    Domain points the inverter handles on their own image.

    For permutations x is in I when the exact success probability on pi(x)
    reaches the success threshold. For functions x is in I when f(x)'s run
    outputs x as its most probable answer (ties to the lowest index).

    Raises:
        DimensionMismatchError: If f does not fit the inverter
    """
    profile = profile or profile_inverter(inv, f)
    return profile.success_set(criterion or _criterion_for(f), params.success_threshold)


def sample_R(domain: int, t: int, gamma: float, seed: int) -> FrozenSet[int]:
    """
    Include each domain point independently with probability gamma/T^2.

    Raises:
        InvalidParameterError: If the probability exceeds 1
    """
    p = gamma / t_eff(t) ** 2
    if not 0.0 <= p <= 1.0:
        raise InvalidParameterError(f"Inclusion probability {p} outside [0, 1]")
    draws = rng_for(seed).random(domain)
    return frozenset(int(x) for x in np.flatnonzero(draws < p))


@dataclass(frozen=True)
class GoodSets:
    """I, R, H = R & I, the violators J within H, and G = H - J."""
    set_i: FrozenSet[int]
    set_r: FrozenSet[int]
    set_h: FrozenSet[int]
    set_j: FrozenSet[int]
    set_g: FrozenSet[int]
    magnitudes: Mapping[int, float] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if not (self.set_g <= self.set_h <= self.set_r and self.set_g <= self.set_i):
            raise InvariantViolation("Good set is not nested inside H, R and I")
        if self.set_g & self.set_j:
            raise InvariantViolation("Good set overlaps the violators")


def compute_good_set_G(inv: Inverter, f: FunctionTable, r_set: FrozenSet[int],
                       params: SchemeParams = DEFAULT_PARAMS,
                       profile: Optional[InverterProfile] = None,
                       criterion: Optional[str] = None) -> GoodSets:
    """
    Keep the points of R & I whose run on f(x) puts at most c/T query
    magnitude on R minus {x}.
    """
    profile = profile or profile_inverter(inv, f)
    set_i = profile.success_set(criterion or _criterion_for(f), params.success_threshold)
    set_h = frozenset(r_set) & set_i
    limit = params.magnitude_threshold(inv.t_queries)
    magnitudes = {}
    for x in sorted(set_h):
        run = inv.run(f, f(x), profile.advice)
        magnitudes[x] = run.transcript.mass_on(set(r_set) - {x})
    set_j = frozenset(x for x, q in magnitudes.items() if q > limit + TIE_TOLERANCE)
    return GoodSets(set_i, frozenset(r_set), set_h, set_j, set_h - set_j, magnitudes)


def _poly_mul(a: np.ndarray, b: np.ndarray, degree: int) -> np.ndarray:
    return np.convolve(a, b)[:degree + 1]


def _poly_pow(base: np.ndarray, exponent: int, degree: int) -> np.ndarray:
    result = np.ones(1)
    while exponent:
        if exponent & 1:
            result = _poly_mul(result, base, degree)
        exponent >>= 1
        if exponent:
            base = _poly_mul(base, base, degree)
    return result


def plurality_distribution(probs: np.ndarray, rho: int,
                           limits: Optional[SimulationLimits] = None,
                           seed: int = 0) -> Dict[int, float]:
    """
    Probability that each outcome is the strict plurality winner of rho
    independent runs with the given outcome distribution.

    Ties lose, so the values may sum to less than one. Up to
    ``majority_exact_max`` runs the answer is exact, grouping outcomes of
    equal probability; beyond that it is estimated from multinomial draws.
    """
    limits = limits or DEFAULT_LIMITS
    probs = np.asarray(probs, dtype=np.float64)
    support = np.flatnonzero(probs > PROB_CUTOFF)
    p = probs[support] / probs[support].sum()
    best = int(np.argmax(p))
    if p[best] >= 1.0 - TIE_TOLERANCE:
        return {int(support[best]): 1.0}
    if rho == 1:
        return {int(s): float(q) for s, q in zip(support, p)}
    if rho > limits.majority_exact_max:
        return _plurality_sampled(support, p, rho, seed)

    values, inverse = np.unique(np.round(p, 13), return_inverse=True)
    counts = np.bincount(inverse)
    factorials = np.array([math.factorial(j) for j in range(rho + 1)], dtype=np.float64)
    win_by_group = np.zeros(len(values))
    for g, v in enumerate(values):
        total = 0.0
        for k in range(1, rho + 1):
            degree = rho - k
            poly = np.ones(1)
            for h, w in enumerate(values):
                others = counts[h] - (1 if h == g else 0)
                if others == 0:
                    continue
                j = np.arange(min(k, degree + 1))
                poly = _poly_mul(poly, _poly_pow(w ** j / factorials[j], others, degree), degree)
            if len(poly) > degree:
                total += v ** k / factorials[k] * poly[degree]
        win_by_group[g] = factorials[rho] * total
    return {int(s): float(win_by_group[inverse[i]]) for i, s in enumerate(support)
            if win_by_group[inverse[i]] > 0}


def _plurality_sampled(support: np.ndarray, p: np.ndarray, rho: int, seed: int,
                       samples: int = MAJORITY_SAMPLES, chunk: int = 2000) -> Dict[int, float]:
    rng = rng_for(seed)
    wins = np.zeros(len(support))
    remaining = samples
    while remaining:
        c = min(chunk, remaining)
        counts = rng.multinomial(rho, p, size=c)
        top = counts.max(axis=1)
        is_top = counts == top[:, None]
        unique = is_top.sum(axis=1) == 1
        wins += np.bincount(np.argmax(counts[unique], axis=1), minlength=len(support))
        remaining -= c
    return {int(s): float(w / samples) for s, w in zip(support, wins) if w}


def _most_likely(distribution: Mapping[Any, float]) -> Any:
    if not distribution:
        return None
    return max(distribution.items(), key=lambda kv: kv[1])[0]


@dataclass(frozen=True)
class SchemeAnalysis:
    """What the encoder learned about one (table, randomness) pair."""
    profile: InverterProfile
    goods: GoodSets
    fraction: float
    threshold: float
    case: str
    reason: str


class ReductionScheme:
    """
    Shared machinery of the permutation and function schemes.

    Schemes are stateless apart from a small cache of inverter profiles,
    which makes repeated encodings of one table under different randomness
    cheap.
    """

    kind = "reduction"

    def __init__(self, inv: Inverter, params: SchemeParams = DEFAULT_PARAMS,
                 limits: Optional[SimulationLimits] = None):
        self.inv = inv
        self.params = params
        self.limits = limits or DEFAULT_LIMITS
        self.profile = lru_cache(maxsize=8)(self._profile)

    @property
    def m(self) -> int:
        return self.inv.m

    @property
    def n(self) -> int:
        return self.inv.n

    @property
    def rho(self) -> int:
        raise NotImplementedError

    @property
    def name(self) -> str:
        return f"{self.kind}[{self.inv.label}]"

    def _profile(self, table: FunctionTable) -> InverterProfile:
        return profile_inverter(self.inv, table)

    def r_set(self, seed: int) -> FrozenSet[int]:
        return sample_R(self.m, self.inv.t_queries, self.params.gamma, derive_seed(seed, "R"))

    def analyze(self, table: FunctionTable, seed: int) -> SchemeAnalysis:
        raise NotImplementedError

    def expected_case_b_bits(self, goods: GoodSets) -> int:
        raise NotImplementedError

    def encode(self, table: FunctionTable, seed: int) -> Encoding:
        raise NotImplementedError

    def decode(self, enc: Encoding, y: int, seed: int,
               family: Optional[Family] = None) -> DecodeResult:
        raise NotImplementedError

    def family(self) -> Family:
        raise NotImplementedError

    def as_code_scheme(self) -> CodeScheme:
        return CodeScheme(self.name, self.encode, self.decode, view="inverse",
                          randomness_space=None)

    def _advice_registers(self, advice: QuantumRegister, writer: BitWriter) -> Tuple[QuantumRegister, ...]:
        writer.note(f"advice x{self.rho}", self.rho * advice.qubits)
        return (advice,) * self.rho

    def _g_within_r(self, goods: GoodSets) -> Tuple[int, int]:
        ordered = sorted(goods.set_r)
        position = {x: i for i, x in enumerate(ordered)}
        return rank_subset((position[x] for x in goods.set_g), len(ordered)), \
            math.comb(len(ordered), len(goods.set_g))

    def _read_g(self, reader: BitReader, g: int, seed: int) -> List[int]:
        ordered = sorted(self.r_set(seed))
        if g > len(ordered):
            raise EncodingError(f"Encoding claims |G|={g} but R has {len(ordered)} elements")
        positions = unrank_subset(reader.read_ranked(math.comb(len(ordered), g)), len(ordered), g)
        return [ordered[i] for i in positions]


class PermutationScheme(ReductionScheme):
    """
    Encoding of a permutation from an inverter.

    Case A: flag 1 and the rank of the table. Case B: flag 0, |G|-1, G as a
    subset of R, pi off G as an injection, and rho copies of the advice.
    """

    kind = "permutation"

    @property
    def rho(self) -> int:
        return self.params.rho_permutation(self.n)

    def family(self) -> Family:
        return Family("permutation", self.n)

    def _as_permutation(self, table: FunctionTable) -> PermutationTable:
        if isinstance(table, PermutationTable):
            return table
        if not table.is_bijection:
            raise InvalidParameterError("Permutation scheme needs a bijective table")
        return table.as_permutation()

    def analyze(self, table: FunctionTable, seed: int) -> SchemeAnalysis:
        pi = self._as_permutation(table)
        profile = self.profile(pi)
        goods = compute_good_set_G(self.inv, pi, self.r_set(seed), self.params, profile,
                                   criterion="threshold")
        fraction = profile.invertible_fraction()
        threshold = max(1.0, self.params.g_threshold_permutation(self.n, self.inv.t_queries))
        if fraction < self.params.epsilon_prime:
            case, reason = "A", "not-invertible"
        elif len(goods.set_g) < threshold:
            case, reason = "A", "small-G"
        else:
            case, reason = "B", "ok"
        logger.debug("Permutation encode: case %s (%s), |I|=%d |R|=%d |G|=%d",
                     case, reason, len(goods.set_i), len(goods.set_r), len(goods.set_g))
        return SchemeAnalysis(profile, goods, fraction, threshold, case, reason)

    def expected_case_b_bits(self, goods: GoodSets) -> int:
        n, g = self.n, len(goods.set_g)
        return (1 + bits_for(n) + bits_for(math.comb(len(goods.set_r), g))
                + bits_for(injection_count(n, n - g)) + self.rho * self.inv.s_qubits)

    def encode(self, table: FunctionTable, seed: int) -> Encoding:
        """
        Raises:
            InvalidParameterError: If the table is not a permutation
        """
        pi = self._as_permutation(table)
        analysis = self.analyze(pi, seed)
        writer = BitWriter()
        if analysis.case == "A":
            writer.write("flag", 1, 1)
            writer.write_ranked("table", rank_permutation(pi.entries), math.factorial(self.n))
            return Encoding.from_writer(writer, case="A")
        goods = analysis.goods
        g = len(goods.set_g)
        writer.write("flag", 0, 1)
        writer.write_ranked("|G|-1", g - 1, self.n)
        writer.write_ranked("G within R", *self._g_within_r(goods))
        off = [pi(x) for x in range(self.n) if x not in goods.set_g]
        writer.write_ranked("pi off G", rank_injection(off, self.n),
                            injection_count(self.n, self.n - g))
        registers = self._advice_registers(analysis.profile.advice, writer)
        return Encoding.from_writer(writer, registers, case="B")

    def decode(self, enc: Encoding, y: int, seed: int,
               family: Optional[Family] = None) -> DecodeResult:
        """
        Recover pi^-1(y).

        Raises:
            EncodingError: If the encoding is malformed
        """
        n = self.n
        reader = BitReader(enc.classical_bits)
        if reader.read(1) == 1:
            rank = reader.read_ranked(math.factorial(n))
            reader.finish()
            return DecodeResult.certain(unrank_permutation(rank, n).index(y))
        g = reader.read_ranked(n) + 1
        good = self._read_g(reader, g, seed)
        off = unrank_injection(reader.read_ranked(injection_count(n, n - g)), n, n - g)
        reader.finish()
        good_set = set(good)
        rest = [x for x in range(n) if x not in good_set]
        values = np.empty(n, dtype=np.int64)
        values[rest] = off
        if y in set(off):
            return DecodeResult.certain(rest[off.index(y)])
        if not enc.quantum_registers:
            raise EncodingError("Case B encoding carries no advice")
        values[good] = y
        modified = FunctionTable(m=n, n=n, entries=values)
        dist = self.inv.output_distribution(modified, y, enc.quantum_registers[0])
        votes = plurality_distribution(dist, len(enc.quantum_registers), self.limits,
                                       seed=derive_seed(seed, "vote", y))
        return DecodeResult(_most_likely(votes), votes)


class FunctionScheme(ReductionScheme):
    """
    Encoding of a function's preimage partition from an inverter.

    Case B adds hash tags of the good points so the decoder can filter the
    inverter's candidates, and stores the off-G values entry by entry.
    """

    kind = "function"

    def __init__(self, inv: Inverter, params: SchemeParams = DEFAULT_PARAMS,
                 limits: Optional[SimulationLimits] = None):
        if inv.m > REGIME_FACTOR * inv.n:
            raise InvalidParameterError(
                f"Function scheme needs m <= {REGIME_FACTOR}n (got m={inv.m}, n={inv.n})"
            )
        if inv.n < 2:
            raise InvalidParameterError("Function scheme needs n >= 2")
        super().__init__(inv, params, limits)
        self.k_threshold = params.k_threshold(inv.m, inv.n)
        self.tag_bits = params.tag_bits(inv.m, inv.n)
        self.in_bits = max(1, bits_for(inv.m))

    @property
    def rho(self) -> int:
        return self.params.rho_function(self.m, self.n)

    def family(self) -> Family:
        return Family("function", self.n, self.m)

    def hash_for(self, seed: int):
        return sample_hash(self.in_bits, self.tag_bits, derive_seed(seed, "hash"))

    def analyze(self, table: FunctionTable, seed: int) -> SchemeAnalysis:
        profile = self.profile(table)
        goods = compute_good_set_G(self.inv, table, self.r_set(seed), self.params, profile,
                                   criterion="argmax")
        fraction = profile.invertible_fraction()
        threshold = max(1.0, self.params.g_threshold_function(self.m, self.n, self.inv.t_queries))
        if table.max_preimage_size > self.k_threshold:
            case, reason = "A", "heavy-image"
        elif fraction < self.params.epsilon / 2:
            case, reason = "A", "not-invertible"
        elif len(goods.set_g) < threshold:
            case, reason = "A", "small-G"
        else:
            case, reason = "B", "ok"
        logger.debug("Function encode: case %s (%s), |I|=%d |R|=%d |G|=%d",
                     case, reason, len(goods.set_i), len(goods.set_r), len(goods.set_g))
        return SchemeAnalysis(profile, goods, fraction, threshold, case, reason)

    def expected_case_b_bits(self, goods: GoodSets) -> int:
        m, n, g = self.m, self.n, len(goods.set_g)
        return (1 + bits_for(m + n) + bits_for(math.comb(len(goods.set_r), g))
                + bits_for(math.comb(n, g)) + (m - g) * bits_for(n) + g * self.tag_bits
                + self.rho * self.inv.s_qubits)

    def encode(self, table: FunctionTable, seed: int) -> Encoding:
        analysis = self.analyze(table, seed)
        writer = BitWriter()
        if analysis.case == "A":
            writer.write("flag", 1, 1)
            writer.write_ranked("table", rank_function(table.entries, self.n), self.n ** self.m)
            return Encoding.from_writer(writer, case="A")
        good = sorted(analysis.goods.set_g)
        images = sorted(table(x) for x in good)
        if len(set(images)) != len(good):
            raise InvariantViolation("Good points do not have distinct images")
        owner = {table(x): x for x in good}
        h = self.hash_for(seed)
        writer.write("flag", 0, 1)
        writer.write("|G|", len(good), bits_for(self.m + self.n), math.log2(self.m + self.n))
        writer.write_ranked("G within R", *self._g_within_r(analysis.goods))
        writer.write_ranked("f(G)", rank_subset(images, self.n), math.comb(self.n, len(good)))
        good_set = set(good)
        writer.write_values("f off G", [table(x) for x in range(self.m) if x not in good_set],
                            self.n)
        writer.write_values("tags", [h.eval_int(owner[y]) for y in images], 1 << self.tag_bits)
        registers = self._advice_registers(analysis.profile.advice, writer)
        return Encoding.from_writer(writer, registers, case="B")

    def decode(self, enc: Encoding, y: int, seed: int,
               family: Optional[Family] = None) -> DecodeResult:
        """
        Recover the preimage set of y.

        Raises:
            EncodingError: If the encoding is malformed
        """
        m, n = self.m, self.n
        reader = BitReader(enc.classical_bits)
        if reader.read(1) == 1:
            rank = reader.read_ranked(n ** m)
            reader.finish()
            values = unrank_function(rank, m, n)
            return DecodeResult.certain(frozenset(x for x, v in enumerate(values) if v == y))
        g = reader.read(bits_for(m + n))
        if g > min(m, n):
            raise EncodingError(f"Encoding claims |G|={g} for m={m}, n={n}")
        good = self._read_g(reader, g, seed)
        images = unrank_subset(reader.read_ranked(math.comb(n, g)), n, g)
        good_set = set(good)
        rest = [x for x in range(m) if x not in good_set]
        off = reader.read_values(n, len(rest))
        tags = reader.read_values(1 << self.tag_bits, g)
        reader.finish()
        off_preimages = frozenset(x for x, v in zip(rest, off) if v == y)
        if y not in images:
            return DecodeResult.certain(off_preimages)
        if not enc.quantum_registers:
            raise EncodingError("Case B encoding carries no advice")
        values = np.empty(m, dtype=np.int64)
        values[rest] = off
        values[good] = y
        modified = FunctionTable(m=m, n=n, entries=values)
        dist = self.inv.output_distribution(modified, y, enc.quantum_registers[0])
        h = self.hash_for(seed)
        tag = tags[images.index(y)]
        keep = [z for z in np.flatnonzero(dist > PROB_CUTOFF) if h.eval_int(int(z)) == tag]
        kept_mass = float(dist[keep].sum()) if keep else 0.0
        miss = (1.0 - kept_mass) ** len(enc.quantum_registers)
        out: Dict[FrozenSet[int], float] = {}
        for z in keep:
            key = off_preimages | {int(z)}
            out[key] = out.get(key, 0.0) + (1.0 - miss) * float(dist[z]) / kept_mass
        if miss > 0:
            out[off_preimages] = out.get(off_preimages, 0.0) + miss
        return DecodeResult(_most_likely(out), out)


def _scheme_for(kind: str, inv: Inverter, params: SchemeParams,
                limits: Optional[SimulationLimits]) -> ReductionScheme:
    if kind == "permutation":
        return PermutationScheme(inv, params, limits)
    if kind == "function":
        return FunctionScheme(inv, params, limits)
    raise InvalidParameterError(f"Unknown scheme kind '{kind}'")


def encode_permutation(pi: PermutationTable, inv: Inverter,
                       params: SchemeParams = DEFAULT_PARAMS, seed: int = 0) -> Encoding:
    return PermutationScheme(inv, params).encode(pi, seed)


def decode_permutation(enc: Encoding, y: int, inv: Inverter,
                       params: SchemeParams = DEFAULT_PARAMS, seed: int = 0) -> DecodeResult:
    return PermutationScheme(inv, params).decode(enc, y, seed)


def encode_function(f: FunctionTable, inv: Inverter,
                    params: SchemeParams = DEFAULT_PARAMS, seed: int = 0) -> Encoding:
    return FunctionScheme(inv, params).encode(f, seed)


def decode_function(enc: Encoding, y: int, inv: Inverter,
                    params: SchemeParams = DEFAULT_PARAMS, seed: int = 0) -> DecodeResult:
    return FunctionScheme(inv, params).decode(enc, y, seed)


@dataclass(frozen=True)
class ClaimStats:
    """Good-set statistics over many draws of R for one fixed table."""
    trials: int
    i_size: int
    i_reference: float
    h_threshold: float
    g_threshold: float
    j_threshold: float
    pr_h: float
    pr_g: float
    pr_g_equals_h: float
    pr_j: float
    mean_r: float
    mean_h: float
    mean_g: float
    case_b_fraction: float
    correlation_7_8: float
    correlation_std_err: float
    max_gap: float
    gap_bound: float
    gap_within_sqrt_c: bool
    accounting_checked: int
    accounting_mismatches: int

    def to_record(self) -> Dict[str, Any]:
        return dict(self.__dict__)


@dataclass(frozen=True)
class SchemeMeasurement:
    """A code report plus good-set statistics."""
    report: Optional[CodeReport]
    claims: ClaimStats


def _correlation(a: np.ndarray, b: np.ndarray) -> float:
    if len(a) < 2 or a.std() == 0 or b.std() == 0:
        return 0.0
    return float(np.corrcoef(a, b)[0, 1])


def measure_scheme(kind: str, inv: Inverter, params: SchemeParams = DEFAULT_PARAMS,
                   trials: int = 100, seed: int = 0, code_trials: Optional[int] = None,
                   accounting_trials: int = 50, workers: int = 1, progress: bool = False,
                   limits: Optional[SimulationLimits] = None) -> SchemeMeasurement:
    """
    Measure a reduction scheme end to end.

    Good-set statistics fix one table drawn from ``seed`` and vary R over
    ``trials`` derived seeds. The code report draws fresh tables, challenges
    and randomness for ``code_trials`` Monte Carlo trials (0 skips it).

    Args:
        kind: "permutation" or "function"
        inv: Inverter the scheme is built from
        params: Scheme constants
        trials: Number of R draws for the good-set statistics
        seed: Base seed
        code_trials: Monte Carlo trials for the code report; defaults to trials
        accounting_trials: How many of the R draws also encode and check lengths
        workers: Thread count
        progress: Show progress bars
        limits: Resource caps

    Returns:
        SchemeMeasurement
    """
    scheme = _scheme_for(kind, inv, params, limits)
    family = scheme.family()
    table = family.sample(derive_seed(seed, "table"))
    profile = scheme.profile(table)
    criterion = "threshold" if kind == "permutation" else "argmax"
    set_i = profile.success_set(criterion, params.success_threshold)
    t2 = t_eff(inv.t_queries) ** 2
    h_threshold = len(set_i) * params.gamma / (2 * t2)
    j_threshold = 10 * len(set_i) * params.gamma ** 2 / (params.c_const * t2)
    if kind == "permutation":
        i_reference = params.epsilon_prime * inv.n
    else:
        i_reference = params.epsilon * inv.m / (2 * scheme.k_threshold)

    watched = min(set_i) if set_i else 0
    watched_run = inv.run(table, table(watched), profile.advice)
    limit = params.magnitude_threshold(inv.t_queries)
    gap_bound = 2 * math.sqrt(params.c_const)

    def one(s: int) -> Dict[str, Any]:
        trial_seed = derive_seed(seed, "claims", s)
        analysis = scheme.analyze(table, trial_seed)
        goods = analysis.goods
        r_set = goods.set_r
        gaps = []
        for x in sorted(goods.set_g):
            modified = table.with_values(goods.set_g, table(x))
            gaps.append(inv.swapping_gap(table, modified, table(x), profile.advice).distance)
        checked = mismatch = 0
        if s < accounting_trials and analysis.case == "B":
            enc = scheme.encode(table, trial_seed)
            checked = 1
            mismatch = int(enc.length_bits != scheme.expected_case_b_bits(goods))
        return {
            "r": len(r_set), "h": len(goods.set_h), "j": len(goods.set_j),
            "g": len(goods.set_g), "case_b": analysis.case == "B",
            "threshold": analysis.threshold,
            "in7": watched in r_set,
            "in8": watched_run.transcript.mass_on(set(r_set) - {watched}) <= limit + TIE_TOLERANCE,
            "gap": max(gaps, default=0.0), "checked": checked, "mismatch": mismatch,
        }

    rows = TrialPool(workers, progress, desc=f"{kind} claims").map(one, range(trials))
    col = {key: np.array([row[key] for row in rows], dtype=np.float64) for key in rows[0]}
    in7, in8 = col["in7"], col["in8"]
    correlation = _correlation(in7, in8)
    max_gap = float(col["gap"].max())
    claims = ClaimStats(
        trials=trials,
        i_size=len(set_i),
        i_reference=i_reference,
        h_threshold=h_threshold,
        g_threshold=float(col["threshold"][0]),
        j_threshold=j_threshold,
        pr_h=float(np.mean(col["h"] >= h_threshold)),
        pr_g=float(np.mean(col["g"] >= col["threshold"])),
        pr_g_equals_h=float(np.mean(col["g"] == col["h"])),
        pr_j=float(np.mean(col["j"] <= j_threshold)),
        mean_r=float(col["r"].mean()),
        mean_h=float(col["h"].mean()),
        mean_g=float(col["g"].mean()),
        case_b_fraction=float(col["case_b"].mean()),
        correlation_7_8=correlation,
        correlation_std_err=1.0 / math.sqrt(trials),
        max_gap=max_gap,
        gap_bound=gap_bound,
        gap_within_sqrt_c=max_gap <= math.sqrt(params.c_const) + 1e-9,
        accounting_checked=int(col["checked"].sum()),
        accounting_mismatches=int(col["mismatch"].sum()),
    )
    if claims.accounting_mismatches:
        logger.warning("%d case-B encodings disagree with their component sum",
                       claims.accounting_mismatches)
    if max_gap > gap_bound + 1e-9:
        logger.warning("Case-B swapping gap %.6f exceeds 2*sqrt(c) = %.6f", max_gap, gap_bound)

    code_trials = trials if code_trials is None else code_trials
    report = None
    if code_trials:
        report = evaluate_code(scheme.as_code_scheme(), family, mode="mc", trials=code_trials,
                               seed=derive_seed(seed, "code"), workers=workers,
                               progress=progress, limits=scheme.limits)
    return SchemeMeasurement(report, claims)


def heavy_image_fraction(m: int, n: int, k_threshold: float, trials: int = 10_000,
                         seed: int = 0, exhaustive_max: int = 200_000) -> float:
    """
    Fraction of functions [m] -> [n] with an image of more than K preimages.

    Enumerates every function when there are at most ``exhaustive_max`` of
    them, otherwise samples ``trials`` uniformly.
    """
    if m < 1 or n < 1:
        raise InvalidParameterError("m and n must be positive")
    if n ** m <= exhaustive_max:
        heavy = sum(1 for values in product(range(n), repeat=m)
                    if np.bincount(values, minlength=n).max() > k_threshold)
        return heavy / n ** m
    tables = rng_for(seed).integers(0, n, size=(trials, m))
    heavy = sum(1 for row in tables if np.bincount(row, minlength=n).max() > k_threshold)
    return heavy / trials


def hash_filter_acceptance(m: int, n: int, params: SchemeParams = DEFAULT_PARAMS,
                           trials: int = 100_000, seed: int = 0) -> Tuple[float, float]:
    """
    Empirical rate at which a wrong candidate passes the tag filter, and the
    ideal rate 2^-tag_bits.
    """
    bits = params.tag_bits(m, n)
    rate = collision_rate(max(1, bits_for(m)), bits, trials, seed)
    return rate, 2.0 ** -bits
