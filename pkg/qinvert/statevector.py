"""
qinvert - Statevector Simulation

Exact dense simulation of oracle algorithms over three registers
(query, response, work). Every oracle call records the query magnitude on
each query-register value immediately before it acts, which is what the
swapping bound and the good-set conditions consume.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, List, NamedTuple, Optional, Tuple

import numpy as np

from .core import (
    DimensionMismatchError,
    FunctionTable,
    InvalidParameterError,
    InvariantViolation,
    rng_for,
)
from .resources import DEFAULT_LIMITS, QueryBudget, QueryBudgetExceeded, SimulationLimits

logger = logging.getLogger(__name__)

NORM_TOLERANCE = 1e-10
UNITARY_TOLERANCE = 1e-10

REGISTERS = ("query", "response", "work")


@dataclass(frozen=True)
class RegisterLayout:
    """Dimensions of the query, response and work registers."""
    query_dim: int
    response_dim: int = 1
    work_dim: int = 1

    def __post_init__(self):
        for name in REGISTERS:
            if getattr(self, f"{name}_dim") < 1:
                raise InvalidParameterError(f"Register {name} needs dimension >= 1")
        if self.work_dim & (self.work_dim - 1):
            raise InvalidParameterError(f"work_dim must be a power of 2 (got {self.work_dim})")

    @classmethod
    def for_table(cls, f: FunctionTable, work_dim: int = 1) -> "RegisterLayout":
        return cls(query_dim=f.m, response_dim=f.n, work_dim=work_dim)

    @property
    def shape(self) -> Tuple[int, int, int]:
        return (self.query_dim, self.response_dim, self.work_dim)

    @property
    def size(self) -> int:
        return self.query_dim * self.response_dim * self.work_dim

    def dim(self, register: str) -> int:
        if register == "all":
            return self.size
        return self.shape[axis_of(register)]


def axis_of(register: str) -> int:
    try:
        return REGISTERS.index(register)
    except ValueError:
        raise InvalidParameterError(f"Unknown register '{register}'") from None


class StateVector:
    """
    A normalized state over a RegisterLayout.

    Amplitudes are held as a (query, response, work) tensor. A state is owned
    by one run at a time; every operation here returns a new state.
    """

    def __init__(self, layout: RegisterLayout, amplitudes: np.ndarray,
                 limits: Optional[SimulationLimits] = None, check: bool = True):
        (limits or DEFAULT_LIMITS).check_amplitudes(layout.size)
        tensor = np.asarray(amplitudes, dtype=np.complex128)
        if tensor.size != layout.size:
            raise DimensionMismatchError(
                f"Layout {layout.shape} needs {layout.size} amplitudes, got {tensor.size}"
            )
        self.layout = layout
        self.tensor = tensor.reshape(layout.shape)
        if check:
            _check_norm(self.tensor, "construction")

    @classmethod
    def basis(cls, layout: RegisterLayout, query: int = 0, response: int = 0,
              work: int = 0, limits: Optional[SimulationLimits] = None) -> "StateVector":
        """The basis state |query>|response>|work>."""
        (limits or DEFAULT_LIMITS).check_amplitudes(layout.size)
        tensor = np.zeros(layout.shape, dtype=np.complex128)
        tensor[query, response, work] = 1.0
        return cls(layout, tensor, limits=limits)

    @classmethod
    def with_work(cls, layout: RegisterLayout, work_amplitudes: np.ndarray,
                  limits: Optional[SimulationLimits] = None) -> "StateVector":
        """|0>|0> tensored with the given work-register state."""
        (limits or DEFAULT_LIMITS).check_amplitudes(layout.size)
        work = np.asarray(work_amplitudes, dtype=np.complex128).ravel()
        if work.size != layout.work_dim:
            raise DimensionMismatchError(
                f"Work register has dimension {layout.work_dim}, advice has {work.size}"
            )
        tensor = np.zeros(layout.shape, dtype=np.complex128)
        tensor[0, 0, :] = work
        return cls(layout, tensor, limits=limits)

    @property
    def amplitudes(self) -> np.ndarray:
        return self.tensor.ravel()

    def norm(self) -> float:
        return float(np.linalg.norm(self.tensor))

    def probabilities(self, register: str = "query") -> np.ndarray:
        """Marginal distribution of measuring one register."""
        axis = axis_of(register)
        others = tuple(a for a in range(3) if a != axis)
        return np.sum(np.abs(self.tensor) ** 2, axis=others)

    def distance(self, other: "StateVector") -> float:
        if self.layout != other.layout:
            raise DimensionMismatchError("States have different layouts")
        return float(np.linalg.norm(self.tensor - other.tensor))

    def __repr__(self) -> str:
        return f"StateVector(layout={self.layout.shape})"


def _check_norm(tensor: np.ndarray, where: str) -> None:
    drift = abs(float(np.linalg.norm(tensor)) - 1.0)
    if drift > NORM_TOLERANCE:
        raise InvariantViolation(f"Norm drifted by {drift:.3e} after {where}")


def _apply_on_axis(tensor: np.ndarray, matrix: np.ndarray, register: str) -> np.ndarray:
    if register == "all":
        return (matrix @ tensor.ravel()).reshape(tensor.shape)
    axis = axis_of(register)
    moved = np.tensordot(matrix, tensor, axes=([1], [axis]))
    return np.moveaxis(moved, 0, axis)


@dataclass(frozen=True)
class QueryTranscript:
    """Accumulated query magnitude per query-register value."""
    per_position: np.ndarray = field(repr=False)
    queries_made: int

    def __post_init__(self):
        per_position = np.array(self.per_position, dtype=np.float64)
        per_position.setflags(write=False)
        object.__setattr__(self, "per_position", per_position)
        if np.any(per_position < -1e-12):
            raise InvariantViolation("Negative query magnitude")
        if per_position.sum() > self.queries_made + 1e-9:
            raise InvariantViolation(
                f"Total query magnitude {per_position.sum():.12f} exceeds "
                f"{self.queries_made} queries"
            )

    @property
    def total(self) -> float:
        return float(self.per_position.sum())

    def mass_on(self, positions) -> float:
        idx = np.fromiter((int(p) for p in positions), dtype=np.int64)
        if idx.size == 0:
            return 0.0
        return float(self.per_position[idx].sum())


class Step:
    """One unitary step of an oracle algorithm."""
    is_oracle_call = False
    textual = True

    def apply(self, tensor: np.ndarray, f: Optional[FunctionTable]) -> np.ndarray:
        raise NotImplementedError

    def describe(self) -> str:
        raise NotImplementedError

    def check_layout(self, layout: RegisterLayout, f: Optional[FunctionTable]) -> None:
        pass


@dataclass(frozen=True)
class PrepareUniform(Step):
    """Unitary taking |0> to the uniform superposition (unitary DFT)."""
    register: str = "query"

    def apply(self, tensor, f):
        return np.fft.ifft(tensor, axis=axis_of(self.register), norm="ortho")

    def describe(self):
        return "PREP_UNIFORM" if self.register == "query" else f"PREP_UNIFORM {self.register}"


@dataclass(frozen=True)
class Diffuse(Step):
    """Inversion about the mean, 2|u><u| - I, on one register."""
    register: str = "query"

    def apply(self, tensor, f):
        mean = tensor.mean(axis=axis_of(self.register), keepdims=True)
        return 2 * mean - tensor

    def describe(self):
        return "DIFFUSE" if self.register == "query" else f"DIFFUSE {self.register}"


@dataclass(frozen=True)
class OracleCall(Step):
    """The additive oracle |x>|b>|w> -> |x>|b + f(x) mod n>|w>."""
    is_oracle_call = True

    def check_layout(self, layout, f):
        if f is None or layout.query_dim != f.m or layout.response_dim != f.n:
            raise DimensionMismatchError(
                f"Oracle needs query_dim=m and response_dim=n, layout is {layout.shape}"
                + ("" if f is None else f" for table m={f.m}, n={f.n}")
            )

    def apply(self, tensor, f):
        n = tensor.shape[1]
        shift = (np.arange(n)[None, :] - f.entries[:, None]) % n
        return np.take_along_axis(tensor, shift[:, :, None].repeat(tensor.shape[2], axis=2), axis=1)

    def describe(self):
        return "ORACLE"


@dataclass(frozen=True)
class PhaseFlip(Step):
    """
    Sign flip on basis states satisfying a predicate.

    Predicates: ``preimage:<y>`` (f(query) = y, an oracle call in phase form),
    ``query:<k>``, ``response:<k>`` and ``zero`` (all registers zero).
    """
    predicate: str

    def __post_init__(self):
        kind, _, value = self.predicate.partition(":")
        if kind == "zero" and not value:
            return
        if kind not in ("preimage", "query", "response") or not value.lstrip("-").isdigit():
            raise InvalidParameterError(f"Unknown phase-flip predicate '{self.predicate}'")

    @property
    def kind(self) -> str:
        return self.predicate.partition(":")[0]

    @property
    def value(self) -> int:
        return int(self.predicate.partition(":")[2] or 0)

    @property
    def is_oracle_call(self) -> bool:  # type: ignore[override]
        return self.kind == "preimage"

    def check_layout(self, layout, f):
        if self.kind == "preimage" and (f is None or layout.query_dim != f.m):
            raise DimensionMismatchError("Phase oracle needs query_dim = m")

    def apply(self, tensor, f):
        out = tensor.copy()
        if self.kind == "zero":
            out[0, 0, 0] *= -1
        elif self.kind == "preimage":
            out[f.entries == self.value] *= -1
        elif self.kind == "query":
            out[self.value] *= -1
        else:
            out[:, self.value] *= -1
        return out

    def describe(self):
        return f"PHASEFLIP {self.predicate}"


@dataclass(frozen=True, eq=False)
class MatrixStep(Step):
    """An explicit unitary on a named register ("all" acts on the full space)."""
    matrix: np.ndarray = field(repr=False)
    register: str = "query"
    source: Optional[str] = None

    def __post_init__(self):
        matrix = np.array(self.matrix, dtype=np.complex128)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise InvalidParameterError(f"Matrix must be square, got shape {matrix.shape}")
        error = np.abs(matrix @ matrix.conj().T - np.eye(matrix.shape[0])).max()
        if error > UNITARY_TOLERANCE:
            raise InvariantViolation(f"Matrix is not unitary (error {error:.3e})")
        matrix.setflags(write=False)
        object.__setattr__(self, "matrix", matrix)
        if self.register != "all":
            axis_of(self.register)

    @property
    def textual(self) -> bool:  # type: ignore[override]
        return self.source is not None

    def check_layout(self, layout, f):
        if self.matrix.shape[0] != layout.dim(self.register):
            raise DimensionMismatchError(
                f"Matrix of size {self.matrix.shape[0]} on register {self.register} "
                f"of dimension {layout.dim(self.register)}"
            )

    def apply(self, tensor, f):
        return _apply_on_axis(tensor, self.matrix, self.register)

    def describe(self):
        suffix = "" if self.register == "query" else f" {self.register}"
        return f"MATRIX {self.source}{suffix}"


@dataclass(frozen=True, eq=False)
class Prepare(Step):
    """
    Householder reflection taking |0> to a target state on one register.

    The target is rephased so that its first amplitude is real and
    nonnegative; measurement statistics are unaffected.
    """
    target: np.ndarray = field(repr=False)
    register: str = "query"
    textual = False

    def __post_init__(self):
        target = np.array(self.target, dtype=np.complex128).ravel()
        norm = np.linalg.norm(target)
        if norm == 0:
            raise InvalidParameterError("Cannot prepare the zero vector")
        target = target / norm
        if target[0] != 0:
            target = target * (abs(target[0]) / target[0])
        target.setflags(write=False)
        object.__setattr__(self, "target", target)

    def check_layout(self, layout, f):
        if self.target.size != layout.dim(self.register):
            raise DimensionMismatchError("Prepare target does not match register dimension")

    def apply(self, tensor, f):
        v = -self.target.copy()
        v[0] += 1.0
        vv = float(np.real(np.vdot(v, v)))
        if vv < 1e-30:
            return tensor
        axis = axis_of(self.register)
        overlap = np.tensordot(v.conj(), tensor, axes=([0], [axis]))
        update = np.multiply.outer(v, overlap) * (2.0 / vv)
        return tensor - np.moveaxis(update, 0, axis)

    def describe(self):
        return f"PREPARE <{self.target.size}>"


@dataclass(frozen=True)
class BasisPermutation(Step):
    """Permutes the basis of one register: |i> -> |perm[i]>."""
    perm: Tuple[int, ...]
    register: str = "query"
    textual = False

    def check_layout(self, layout, f):
        if len(self.perm) != layout.dim(self.register):
            raise DimensionMismatchError("Permutation size does not match register")

    def apply(self, tensor, f):
        inverse = np.empty(len(self.perm), dtype=np.int64)
        inverse[np.asarray(self.perm)] = np.arange(len(self.perm))
        return np.take(tensor, inverse, axis=axis_of(self.register))

    def describe(self):
        return f"PERMUTE {' '.join(map(str, self.perm))}"


@dataclass(frozen=True)
class OracleAlgorithm:
    """
    A sequence of unitary steps with at most ``t_max`` oracle calls.

    Raises:
        QueryBudgetExceeded: If the steps contain more oracle calls than t_max
    """
    t_max: int
    steps: Tuple[Step, ...]
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "steps", tuple(self.steps))
        if self.t_max < 0:
            raise InvalidParameterError("t_max must be nonnegative")
        if self.oracle_calls > self.t_max:
            raise QueryBudgetExceeded(
                f"Query budget {self.t_max} exceeded (algorithm has {self.oracle_calls} "
                f"oracle calls) in {self.name or 'algorithm'}",
                value=self.oracle_calls, limit=self.t_max,
            )

    @property
    def oracle_calls(self) -> int:
        return sum(1 for s in self.steps if s.is_oracle_call)

    @property
    def uses_response_oracle(self) -> bool:
        return any(isinstance(s, OracleCall) for s in self.steps)

    def layout_for(self, f: FunctionTable, work_dim: int = 1) -> RegisterLayout:
        """Smallest layout that runs this algorithm against f."""
        response = f.n if self.uses_response_oracle else 1
        for s in self.steps:
            if isinstance(s, (MatrixStep, Prepare, BasisPermutation)) and s.register == "response":
                response = f.n
        return RegisterLayout(query_dim=f.m, response_dim=response, work_dim=work_dim)


def run_with_transcript(alg: OracleAlgorithm, f: FunctionTable,
                        initial: StateVector) -> Tuple[StateVector, QueryTranscript]:
    """
    Execute every step of alg against f.

    Args:
        alg: Algorithm to run
        f: Oracle table
        initial: Initial state (not modified)

    Returns:
        (final state, transcript of query magnitudes)

    Raises:
        DimensionMismatchError: If a step does not fit the layout or table
        QueryBudgetExceeded: If more oracle calls execute than t_max
    """
    layout = initial.layout
    tensor = initial.tensor.copy()
    budget = QueryBudget(alg.t_max, label=alg.name)
    per_position = np.zeros(layout.query_dim)
    for index, step in enumerate(alg.steps):
        step.check_layout(layout, f)
        if step.is_oracle_call:
            budget.consume_query(step.describe())
            per_position += np.sum(np.abs(tensor) ** 2, axis=(1, 2))
        tensor = step.apply(tensor, f)
        _check_norm(tensor, f"step {index} ({step.describe()})")
    return StateVector(layout, tensor, check=False), QueryTranscript(per_position, budget.queries)


def apply_oracle(state: StateVector, f: FunctionTable) -> StateVector:
    """Apply the additive oracle of f once."""
    step = OracleCall()
    step.check_layout(state.layout, f)
    return StateVector(state.layout, step.apply(state.tensor, f))


def grover_algorithm(m: int, y: int, k: int, name: str = "grover") -> OracleAlgorithm:
    """Uniform preparation followed by k (phase oracle, diffusion) iterations."""
    if k < 0:
        raise InvalidParameterError("Iteration count must be nonnegative")
    steps: List[Step] = [PrepareUniform()]
    for _ in range(k):
        steps += [PhaseFlip(f"preimage:{y}"), Diffuse()]
    return OracleAlgorithm(t_max=k, steps=tuple(steps), name=name)


def grover_closed_form(m: int, marked: int, k: int) -> float:
    """sin^2((2k+1) theta) with sin(theta) = sqrt(marked/m)."""
    if marked <= 0:
        return 0.0
    theta = math.asin(math.sqrt(marked / m))
    return math.sin((2 * k + 1) * theta) ** 2


def grover_invert(f: FunctionTable, y: int, k: int) -> float:
    """
    Exact success probability of k Grover iterations for a preimage of y.

    If y has no preimage the phase oracle never acts, the state stays
    uniform and the returned mass on preimages is 0.
    """
    alg = grover_algorithm(f.m, y, k)
    initial = StateVector.basis(RegisterLayout(query_dim=f.m))
    final, _ = run_with_transcript(alg, f, initial)
    return float(final.probabilities("query")[f.entries == y].sum())


class SwappingGap(NamedTuple):
    """Distance between final states and its swapping bound 2*sqrt(T*sum q)."""
    distance: float
    bound: float

    @property
    def unscaled(self) -> float:
        return self.bound / 2

    @property
    def holds(self) -> bool:
        return self.distance <= self.bound + 1e-9


def swapping_gap(alg: OracleAlgorithm, f: FunctionTable, f2: FunctionTable,
                 initial: StateVector) -> SwappingGap:
    """
    Compare final states of alg under f and f2.

    The bound uses the query magnitudes of the run under ``f`` on the
    positions where the tables differ, with T the number of oracle calls made.
    Each call can move the state by at most twice the root of its magnitude on
    those positions, hence the factor 2.

    Raises:
        DimensionMismatchError: If the tables have different sizes
    """
    if (f.m, f.n) != (f2.m, f2.n):
        raise DimensionMismatchError("Tables passed to swapping_gap differ in size")
    final_f, transcript = run_with_transcript(alg, f, initial)
    final_f2, _ = run_with_transcript(alg, f2, initial)
    differ = np.flatnonzero(f.entries != f2.entries)
    magnitude = transcript.mass_on(differ)
    bound = 2.0 * math.sqrt(max(0.0, transcript.queries_made * magnitude))
    gap = SwappingGap(final_f.distance(final_f2), bound)
    if not gap.holds:
        logger.warning("Swapping bound violated: distance %.12f > bound %.12f", gap.distance, bound)
    return gap


def output_distribution(alg: OracleAlgorithm, f: FunctionTable,
                        advice: Optional[np.ndarray] = None) -> np.ndarray:
    """Distribution of the measured query register after running alg from |0>."""
    work = None if advice is None else np.asarray(advice, dtype=np.complex128).ravel()
    layout = alg.layout_for(f, work_dim=1 if work is None else work.size)
    initial = StateVector.basis(layout) if work is None else StateVector.with_work(layout, work)
    final, _ = run_with_transcript(alg, f, initial)
    return final.probabilities("query")


def success_probability(alg: OracleAlgorithm, advice: Optional[np.ndarray], f: FunctionTable,
                        y: int, accept: Optional[Callable[[int], bool]] = None) -> float:
    """
    Exact probability that the measured output is accepted.

    Args:
        alg: Inversion algorithm for challenge y
        advice: Work-register amplitudes, or None
        f: Oracle table
        y: Challenge
        accept: Predicate on the measured x; defaults to f(x) = y

    Returns:
        Probability mass on accepted outputs
    """
    probs = output_distribution(alg, f, advice)
    if accept is None:
        return float(probs[f.entries == y].sum())
    mask = np.fromiter((bool(accept(x)) for x in range(f.m)), dtype=bool, count=f.m)
    return float(probs[mask].sum())


def haar_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary from the QR decomposition of a Ginibre matrix."""
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / math.sqrt(2)
    q, r = np.linalg.qr(z)
    phases = np.diag(r) / np.abs(np.diag(r))
    return q * phases


def random_algorithm(layout: RegisterLayout, t: int, seed: int, local: bool = False) -> OracleAlgorithm:
    """
    Random unitaries interleaved with t additive oracle calls.

    With ``local`` the unitaries act on each register separately, which keeps
    large layouts cheap; otherwise each one acts on the full space.
    """
    rng = rng_for(seed)

    def layer() -> List[Step]:
        if not local:
            return [MatrixStep(haar_unitary(layout.size, rng), register="all")]
        return [MatrixStep(haar_unitary(layout.dim(r), rng), register=r)
                for r in REGISTERS if layout.dim(r) > 1]

    steps: List[Step] = layer()
    for _ in range(t):
        steps += [OracleCall()] + layer()
    return OracleAlgorithm(t_max=t, steps=tuple(steps), name="random")
