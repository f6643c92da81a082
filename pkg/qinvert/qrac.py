"""
qinvert - Variable-Length Random Access Codes

Pluggable encode/decode schemes over function and permutation families,
exact and Monte Carlo measurement of average length L and decoding
success delta, and a numerical audit of the entropy inequalities behind the
length lower bound on tiny families.

Length accounting counts one classical bit and one qubit identically.
"""

import logging
import math
from dataclasses import dataclass, field
from itertools import permutations, product
from typing import Any, Callable, Dict, Iterator, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .core import (
    EncodingError,
    FunctionTable,
    InvalidParameterError,
    InvariantViolation,
    PermutationTable,
    derive_seed,
    rng_for,
    sample_function,
    sample_permutation,
)
from .entropy import (
    BoundInput,
    ClassicalQuantumState,
    DensityMatrix,
    binary_entropy,
    conditional_entropy,
    log2_factorial,
    mutual_information,
    partition_element_entropy,
    qracvl_bound,
    shannon_entropy,
    von_neumann_entropy,
)
from .ranking import (
    BitReader,
    BitWriter,
    LengthComponent,
    bits_for,
    rank_function,
    rank_permutation,
    unrank_function,
    unrank_permutation,
)
from .resources import DEFAULT_LIMITS, SimulationLimits, TrialPool

logger = logging.getLogger(__name__)

AMPLITUDE_TOLERANCE = 1e-10
MODES = ("exact", "mc")
VIEWS = ("forward", "inverse")


@dataclass(frozen=True, eq=False)
class QuantumRegister:
    """
    A quantum part of an encoding.

    Basis-state registers carry only their index, which keeps registers of
    many qubits cheap; dense registers carry all 2^qubits amplitudes.
    """
    qubits: int
    basis_index: Optional[int] = None
    amplitudes: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        if self.qubits < 0:
            raise InvalidParameterError("Register needs a nonnegative qubit count")
        if (self.basis_index is None) == (self.amplitudes is None):
            raise InvalidParameterError("Register needs exactly one of basis_index or amplitudes")
        if self.basis_index is not None:
            if not 0 <= self.basis_index < (1 << self.qubits):
                raise EncodingError(
                    f"Basis index {self.basis_index} does not fit {self.qubits} qubits"
                )
            return
        amps = np.array(self.amplitudes, dtype=np.complex128).ravel()
        if amps.size != 1 << self.qubits:
            raise EncodingError(f"{amps.size} amplitudes for a {self.qubits}-qubit register")
        norm = float(np.linalg.norm(amps))
        if abs(norm - 1.0) > AMPLITUDE_TOLERANCE:
            raise InvariantViolation(f"Quantum register not normalized (norm {norm})")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def is_basis(self) -> bool:
        return self.basis_index is not None

    def vector(self) -> np.ndarray:
        """Dense amplitudes; only sensible for small registers."""
        if self.amplitudes is not None:
            return self.amplitudes
        out = np.zeros(1 << self.qubits, dtype=np.complex128)
        out[self.basis_index] = 1.0
        return out


@dataclass(frozen=True)
class Encoding:
    """Classical bitstring plus quantum registers, with a per-field ledger."""
    classical_bits: str
    quantum_registers: Tuple[QuantumRegister, ...] = ()
    components: Tuple[LengthComponent, ...] = ()
    case: str = ""

    def __post_init__(self):
        object.__setattr__(self, "quantum_registers", tuple(self.quantum_registers))
        object.__setattr__(self, "components", tuple(self.components))
        if any(c not in "01" for c in self.classical_bits):
            raise EncodingError("Classical part contains characters other than 0 and 1")

    @property
    def length_bits(self) -> int:
        return len(self.classical_bits) + sum(r.qubits for r in self.quantum_registers)

    @property
    def ideal_bits(self) -> float:
        return sum(c.ideal_bits for c in self.components)

    def check_accounting(self) -> None:
        """
        Raises:
            InvariantViolation: If the ledger does not add up to length_bits
        """
        if not self.components:
            return
        realized = sum(c.realized_bits for c in self.components)
        if realized != self.length_bits:
            raise InvariantViolation(
                f"Encoding ledger sums to {realized} bits but the encoding has {self.length_bits}"
            )

    @classmethod
    def from_writer(cls, writer: BitWriter, registers: Sequence[QuantumRegister] = (),
                    case: str = "") -> "Encoding":
        enc = cls(writer.bits, tuple(registers), tuple(writer.components), case)
        enc.check_accounting()
        return enc


@dataclass(frozen=True)
class DecodeResult:
    """A decoder's answer and its full output distribution."""
    value: Any
    distribution: Mapping[Any, float]

    @classmethod
    def certain(cls, value: Any) -> "DecodeResult":
        return cls(value, {value: 1.0})

    def probability_of(self, truth: Any) -> float:
        return float(self.distribution.get(truth, 0.0))

    @property
    def failure_mass(self) -> float:
        """Probability that the decoder outputs nothing (e.g. a tied vote)."""
        return max(0.0, 1.0 - sum(self.distribution.values()))


@dataclass(frozen=True)
class Family:
    """
    Uniform distribution over permutations of [n] or functions [m] -> [n].

    Under the forward view coordinate i is f(i); under the inverse view
    coordinate y is the preimage of y (an index for permutations, a set for
    functions).
    """
    kind: str
    n: int
    m: Optional[int] = None

    def __post_init__(self):
        if self.kind not in ("permutation", "function"):
            raise InvalidParameterError(f"Unknown family kind '{self.kind}'")
        if self.m is None:
            object.__setattr__(self, "m", self.n)
        if self.kind == "permutation" and self.m != self.n:
            raise InvalidParameterError("Permutation family needs m = n")
        if self.n < 1 or self.m < 1:
            raise InvalidParameterError("Family sizes must be positive")

    @property
    def label(self) -> str:
        return f"S_{self.n}" if self.kind == "permutation" else f"F({self.m},{self.n})"

    @property
    def size(self) -> int:
        return math.factorial(self.n) if self.kind == "permutation" else self.n ** self.m

    def tables(self) -> Iterator[FunctionTable]:
        """Every member in lexicographic order."""
        if self.kind == "permutation":
            for p in permutations(range(self.n)):
                yield PermutationTable.from_values(p)
        else:
            for values in product(range(self.n), repeat=self.m):
                yield FunctionTable.from_values(values, self.n)

    def sample(self, seed: int) -> FunctionTable:
        if self.kind == "permutation":
            return sample_permutation(self.n, seed)
        return sample_function(self.m, self.n, seed)

    def coordinates(self, view: str = "forward") -> int:
        _check_view(view)
        return self.m if view == "forward" else self.n

    def truth(self, table: FunctionTable, index: int, view: str = "forward") -> Any:
        """Value of coordinate ``index`` of the table under a view."""
        if view == "forward":
            return table(index)
        _check_view(view)
        bag = table.preimages(index)
        if self.kind == "permutation":
            return next(iter(bag))
        return bag

    def s_x(self) -> float:
        if self.kind == "permutation":
            return log2_factorial(self.n)
        return self.m * math.log2(self.n)

    def s_xj(self, view: str = "forward") -> float:
        if view == "inverse" and self.kind == "function":
            return partition_element_entropy(self.m, self.n)
        _check_view(view)
        return math.log2(self.n)

    def bound(self, delta: float, view: str = "forward") -> float:
        return qracvl_bound(BoundInput(self.s_x(), self.s_xj(view), self.coordinates(view),
                                       min(1.0, max(0.0, delta))))


def _check_view(view: str) -> None:
    if view not in VIEWS:
        raise InvalidParameterError(f"Unknown view '{view}'")


EncodeFn = Callable[[FunctionTable, int], Encoding]
DecodeFn = Callable[[Encoding, int, int, Family], DecodeResult]


@dataclass(frozen=True)
class CodeScheme:
    """
    An (encode, decode) pair sharing randomness.

    ``randomness_space`` is the number of shared-randomness values in exact
    mode; None means 64-bit seeds, which only Monte Carlo can average over.
    """
    name: str
    encode: EncodeFn = field(repr=False)
    decode: DecodeFn = field(repr=False)
    view: str = "forward"
    randomness_space: Optional[int] = 1

    def __post_init__(self):
        _check_view(self.view)

    def randomness_for(self, seed: int) -> int:
        if self.randomness_space is None:
            return seed
        return seed % self.randomness_space


@dataclass(frozen=True)
class CodeReport:
    """Measured (L, delta) of a scheme and the bound evaluated at delta."""
    scheme: str
    family: str
    l_avg: float
    delta: float
    bound: float
    slack: float
    mode: str
    trials: int
    std_err: float

    @property
    def accepted(self) -> bool:
        return self.slack >= -3 * self.std_err - 1e-9

    def to_record(self) -> Dict[str, Any]:
        return {
            "scheme": self.scheme, "family": self.family, "l_avg": self.l_avg,
            "delta": self.delta, "bound": self.bound, "slack": self.slack,
            "mode": self.mode, "trials": self.trials, "std_err": self.std_err,
        }


CODE_REPORT_FIELDS = ("scheme", "family", "l_avg", "delta", "bound", "slack", "mode",
                      "trials", "std_err")


def _score(scheme: CodeScheme, family: Family, table: FunctionTable, randomness: int,
           indices: Sequence[int]) -> Tuple[int, List[float]]:
    enc = scheme.encode(table, randomness)
    hits = [scheme.decode(enc, i, randomness, family).probability_of(
        family.truth(table, i, scheme.view)) for i in indices]
    return enc.length_bits, hits


def evaluate_code(scheme: CodeScheme, family: Family, mode: str = "exact", trials: int = 1000,
                  seed: int = 0, workers: int = 1, progress: bool = False,
                  limits: Optional[SimulationLimits] = None) -> CodeReport:
    """
    Measure L and delta of a scheme over a family.

    Exact mode enumerates every (table, coordinate, randomness) triple.
    Monte Carlo mode draws table, coordinate and randomness per trial from
    seeds derived from ``seed`` and the trial index, so results do not depend
    on the worker count.

    Args:
        scheme: Code to measure
        family: Distribution of tables
        mode: "exact" or "mc"
        trials: Monte Carlo trial count
        seed: Base seed
        workers: Thread count for trials
        progress: Show a progress bar
        limits: Resource caps

    Returns:
        CodeReport; std_err is 0 in exact mode

    Raises:
        EnumerationCapExceeded: If exact mode would exceed the triple cap
        InvalidParameterError: For an unknown mode or an unbounded randomness
            space in exact mode
    """
    limits = limits or DEFAULT_LIMITS
    if mode not in MODES:
        raise InvalidParameterError(f"Unknown mode '{mode}' (expected exact or mc)")
    coords = family.coordinates(scheme.view)
    pool = TrialPool(workers, progress, desc=scheme.name)

    if mode == "exact":
        if scheme.randomness_space is None:
            raise InvalidParameterError(
                f"Scheme {scheme.name} draws 64-bit randomness; use Monte Carlo mode"
            )
        limits.check_triples(family.size * coords * scheme.randomness_space)
        jobs = [(t, r) for t in family.tables() for r in range(scheme.randomness_space)]
        results = pool.map(lambda job: _score(scheme, family, job[0], job[1], range(coords)), jobs)
        l_avg = float(np.mean([length for length, _ in results]))
        delta = float(np.mean([h for _, hits in results for h in hits]))
        bound = family.bound(delta, scheme.view)
        return CodeReport(scheme.name, family.label, l_avg, delta, bound, l_avg - bound,
                          "exact", len(jobs) * coords, 0.0)

    if trials < 1:
        raise InvalidParameterError("Monte Carlo needs at least one trial")

    def one(t: int) -> Tuple[int, List[float]]:
        trial_seed = derive_seed(seed, "trial", t)
        table = family.sample(derive_seed(trial_seed, "table"))
        index = int(rng_for(derive_seed(trial_seed, "index")).integers(coords))
        r = scheme.randomness_for(derive_seed(trial_seed, "R"))
        return _score(scheme, family, table, r, [index])

    results = pool.map(one, range(trials))
    lengths = np.array([length for length, _ in results], dtype=np.float64)
    hits = np.array([h[0] for _, h in results], dtype=np.float64)
    l_avg, delta = float(lengths.mean()), float(hits.mean())
    se_l = float(lengths.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
    se_d = float(hits.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
    bound = family.bound(delta, scheme.view)
    sensitivity = max(abs(family.bound(delta + se_d, scheme.view) - bound),
                      abs(family.bound(delta - se_d, scheme.view) - bound))
    std_err = se_l + sensitivity
    report = CodeReport(scheme.name, family.label, l_avg, delta, bound, l_avg - bound,
                        "mc", trials, std_err)
    if not report.accepted:
        logger.warning("Scheme %s: L=%.4f below bound %.4f beyond 3 standard errors",
                       scheme.name, l_avg, bound)
    return report


def baseline_fraction_code(theta: float, default: int = 0) -> CodeScheme:
    """
    Store f(i) verbatim for the first ceil(theta*m) indices.

    Decoding any other index returns ``default``. The code has no header, so
    its length is ceil(theta*m) * ceil(log2 n) bits.
    """
    if not 0.0 <= theta <= 1.0:
        raise InvalidParameterError(f"theta={theta} outside [0, 1]")

    def stored(m: int) -> int:
        return math.ceil(theta * m - 1e-12)

    def encode(table: FunctionTable, randomness: int) -> Encoding:
        writer = BitWriter()
        for i in range(stored(table.m)):
            writer.write_ranked(f"f({i})", table(i), table.n)
        return Encoding.from_writer(writer, case="baseline")

    def decode(enc: Encoding, index: int, randomness: int, family: Family) -> DecodeResult:
        k = stored(family.m)
        if index >= k:
            return DecodeResult.certain(default)
        width = bits_for(family.n)
        reader = BitReader(enc.classical_bits)
        reader.pos = index * width
        return DecodeResult.certain(reader.read_ranked(family.n))

    return CodeScheme(f"baseline-{theta:g}", encode, decode)


def full_table_code(view: str = "forward") -> CodeScheme:
    """One flag bit followed by the rank of the whole table."""

    def encode(table: FunctionTable, randomness: int) -> Encoding:
        writer = BitWriter()
        writer.write("flag", 1, 1)
        if isinstance(table, PermutationTable):
            writer.write_ranked("table", rank_permutation(table.entries), math.factorial(table.n))
        else:
            writer.write_ranked("table", rank_function(table.entries, table.n), table.n ** table.m)
        return Encoding.from_writer(writer, case="A")

    def decode(enc: Encoding, index: int, randomness: int, family: Family) -> DecodeResult:
        reader = BitReader(enc.classical_bits)
        if reader.read(1) != 1:
            raise EncodingError("Full-table encoding must start with flag 1")
        if family.kind == "permutation":
            rank = reader.read_ranked(math.factorial(family.n))
            table: FunctionTable = PermutationTable.from_values(unrank_permutation(rank, family.n))
        else:
            rank = reader.read_ranked(family.n ** family.m)
            table = FunctionTable.from_values(unrank_function(rank, family.m, family.n), family.n)
        reader.finish()
        return DecodeResult.certain(family.truth(table, index, view))

    return CodeScheme(f"full-table-{view}", encode, decode, view=view)


def empty_code(default: int = 0) -> CodeScheme:
    """Zero-length code whose decoder always answers ``default``."""
    return CodeScheme(
        "empty",
        lambda table, randomness: Encoding(""),
        lambda enc, index, randomness, family: DecodeResult.certain(default),
    )


@dataclass(frozen=True)
class AuditStep:
    """One inequality of the chain: slack = right - left, >= 0 when it holds."""
    step_id: str
    relation: str
    left: float
    right: float

    @property
    def slack(self) -> float:
        return self.right - self.left

    @property
    def holds(self) -> bool:
        return self.slack >= -1e-9


def _padded_state(enc: Encoding, length_width: int, content_width: int) -> DensityMatrix:
    """|length>|bits, registers, 0...0> as a density matrix on the padded space."""
    fill = content_width - enc.length_bits
    bits_value = int(enc.classical_bits, 2) if enc.classical_bits else 0
    classical = np.zeros(1 << len(enc.classical_bits))
    classical[bits_value] = 1.0
    vector = np.zeros(1 << length_width)
    vector[enc.length_bits] = 1.0
    vector = np.kron(vector, classical)
    diagonal = all(r.is_basis for r in enc.quantum_registers)
    for reg in enc.quantum_registers:
        part = reg.vector()
        vector = np.kron(vector, np.abs(part) if diagonal else part)
    padding = np.zeros(1 << fill)
    padding[0] = 1.0
    vector = np.kron(vector, padding)
    if diagonal:
        return DensityMatrix.diagonal(np.abs(vector) ** 2)
    return DensityMatrix.pure(vector)


def audit_bound_chain(scheme: CodeScheme, family: Family,
                      limits: Optional[SimulationLimits] = None) -> List[AuditStep]:
    """
    Evaluate each inequality of the length-bound chain on an explicit state.

    Builds the classical-quantum state over (X_1..X_N, R, Q) with X_i the
    coordinates of the scheme's view and Q the encoding, padded with a
    length register and zeroed fill qubits so encodings of every length live
    in one space. The decoder's exact output distributions give the joint
    law of (X_J, Dec) for a uniform coordinate J.

    Returns:
        Steps in chain order, each with its slack

    Raises:
        EnumerationCapExceeded: If the family, randomness or padded encoding
            is too large
        InvalidParameterError: If the randomness space is unbounded
    """
    limits = limits or DEFAULT_LIMITS
    if scheme.randomness_space is None:
        raise InvalidParameterError("Audit needs a finite randomness space")
    view = scheme.view
    coords = family.coordinates(view)
    space = scheme.randomness_space
    limits.check_audit(family.size * space, 0)

    entries = []
    for table in family.tables():
        for r in range(space):
            entries.append((table, r, scheme.encode(table, r)))
    longest = max(enc.length_bits for _, _, enc in entries)
    length_width = bits_for(longest + 1)
    limits.check_audit(len(entries), length_width + longest)

    p = 1.0 / len(entries)
    branches = []
    joint_xd: Dict[Tuple[Any, Any], float] = {}
    for table, r, enc in entries:
        label = tuple(family.truth(table, i, view) for i in range(coords)) + (r,)
        branches.append((p, label, _padded_state(enc, length_width, longest)))
        for i in range(coords):
            truth = label[i]
            result = scheme.decode(enc, i, r, family)
            for value, mass in result.distribution.items():
                key = (truth, value)
                joint_xd[key] = joint_xd.get(key, 0.0) + p * mass / coords
            if result.failure_mass > 0:
                key = (truth, "<fail>")
                joint_xd[key] = joint_xd.get(key, 0.0) + p * result.failure_mass / coords
    state = ClassicalQuantumState(branches)

    xs = list(range(coords))
    r_pos = coords
    q = ClassicalQuantumState.QUANTUM
    i_qr_x = mutual_information(state, {q, r_pos}, xs)
    i_q_x_r = mutual_information(state, {q}, xs, given={r_pos})
    s_q_r = conditional_entropy(state, {r_pos}, of={q})
    s_q = state.entropy({q})
    l_avg = float(np.mean([enc.length_bits for _, _, enc in entries]))
    s_x = state.entropy(xs)
    per_coordinate = sum(conditional_entropy(state, {q, r_pos}, of={i}) for i in xs)

    truth_marginal: Dict[Any, float] = {}
    dec_marginal: Dict[Any, float] = {}
    for (truth, value), mass in joint_xd.items():
        truth_marginal[truth] = truth_marginal.get(truth, 0.0) + mass
        dec_marginal[value] = dec_marginal.get(value, 0.0) + mass
    delta = sum(mass for (truth, value), mass in joint_xd.items() if truth == value)
    delta = min(1.0, max(0.0, delta))
    s_xj = shannon_entropy(truth_marginal.values())
    s_xj_dec = shannon_entropy(joint_xd.values()) - shannon_entropy(dec_marginal.values())
    fano = binary_entropy(delta) + (1 - delta) * s_xj

    steps = [
        AuditStep("chain-rule", "I(Q,R;X) = I(Q;X|R)", abs(i_qr_x - i_q_x_r), 0.0),
        AuditStep("holevo", "I(Q;X|R) <= S(Q|R)", i_q_x_r, s_q_r),
        AuditStep("conditioning", "S(Q|R) <= S(Q)", s_q_r, s_q),
        AuditStep("register-length", "S(Q) <= L", s_q, l_avg),
        AuditStep("subadditivity", "S(X) - sum_i S(X_i|Q,R) <= I(Q,R;X)", s_x - per_coordinate, i_qr_x),
        AuditStep("data-processing", "S(X_J|Q,R,J) <= S(X_J|Dec)", per_coordinate / coords, s_xj_dec),
        AuditStep("fano", "S(X_J|Dec) <= H(delta) + (1-delta) S(X_J)", s_xj_dec, fano),
        AuditStep("bound", "S(X) - N(H(delta) + (1-delta) S(X_J)) <= L",
                  s_x - coords * fano, l_avg),
    ]
    for step in steps:
        if not step.holds:
            logger.warning("Audit step %s violated: %s (slack %.3e)",
                           step.step_id, step.relation, step.slack)
    return steps


def padded_entropy(register: QuantumRegister, fill: int) -> float:
    """Entropy of a register after appending ``fill`` zeroed qubits."""
    vector = register.vector()
    padding = np.zeros(1 << fill)
    padding[0] = 1.0
    return von_neumann_entropy(DensityMatrix.pure(np.kron(vector, padding)))
