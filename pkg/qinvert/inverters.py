"""
qinvert - Inverters

An inverter is a pair (advice, algorithm): advice of S qubits prepared from
the whole table, and an algorithm that, given a challenge y and the advice,
makes at most T oracle calls and outputs a candidate preimage.

Three example inverters are provided: table advice storing part of the
inverse table, Grover search with no advice, and a noisy inverter that is
right with a fixed probability.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from .core import DimensionMismatchError, FunctionTable, InvalidParameterError
from .qrac import QuantumRegister
from .ranking import bits_for
from .statevector import (
    OracleAlgorithm,
    Prepare,
    PrepareUniform,
    QueryTranscript,
    StateVector,
    SwappingGap,
    grover_algorithm,
    run_with_transcript,
    swapping_gap,
)

logger = logging.getLogger(__name__)

INVERTER_KINDS = ("table-advice", "grover", "noisy")


@dataclass(frozen=True)
class InversionRun:
    """Exact output distribution of one run and its query transcript."""
    distribution: np.ndarray = field(repr=False)
    transcript: QueryTranscript

    def mass_on(self, xs) -> float:
        idx = np.fromiter((int(x) for x in xs), dtype=np.int64)
        return float(self.distribution[idx].sum()) if idx.size else 0.0


class Inverter:
    """
    Base class for inverters on tables [m] -> [n].

    Subclasses define ``s_qubits``, ``prepare_advice`` and ``algorithm``.
    Inverters are immutable and safe to share across threads.
    """

    kind = "inverter"

    def __init__(self, m: int, n: int, t_queries: int):
        if m < 1 or n < 1:
            raise InvalidParameterError(f"Inverter sizes must be positive (m={m}, n={n})")
        if t_queries < 0:
            raise InvalidParameterError("t_queries must be nonnegative")
        self.m = m
        self.n = n
        self.t_queries = t_queries

    @property
    def s_qubits(self) -> int:
        raise NotImplementedError

    @property
    def label(self) -> str:
        return self.kind

    def prepare_advice(self, f: FunctionTable) -> QuantumRegister:
        raise NotImplementedError

    def algorithm(self, y: int, advice: QuantumRegister) -> Tuple[OracleAlgorithm, Optional[np.ndarray]]:
        """
        Algorithm template for challenge y.

        Returns:
            (algorithm, work-register amplitudes or None). Basis-state advice
            may be read classically while building the template.
        """
        raise NotImplementedError

    def check_table(self, f: FunctionTable) -> None:
        if (f.m, f.n) != (self.m, self.n):
            raise DimensionMismatchError(
                f"Inverter built for [{self.m}] -> [{self.n}], table is [{f.m}] -> [{f.n}]"
            )

    def _start(self, f: FunctionTable, y: int,
               advice: QuantumRegister) -> Tuple[OracleAlgorithm, StateVector]:
        self.check_table(f)
        alg, work = self.algorithm(y, advice)
        layout = alg.layout_for(f, work_dim=1 if work is None else work.size)
        if work is None:
            return alg, StateVector.basis(layout)
        return alg, StateVector.with_work(layout, work)

    def run(self, f: FunctionTable, y: int, advice: QuantumRegister) -> InversionRun:
        """
        Execute the algorithm for y against oracle f with the given advice.

        Raises:
            DimensionMismatchError: If f does not match the inverter's sizes
            QueryBudgetExceeded: If the template makes more than t_queries calls
        """
        alg, initial = self._start(f, y, advice)
        final, transcript = run_with_transcript(alg, f, initial)
        return InversionRun(final.probabilities("query"), transcript)

    def swapping_gap(self, f: FunctionTable, f2: FunctionTable, y: int,
                     advice: QuantumRegister) -> SwappingGap:
        """Distance between the runs on y under f and under f2, with its bound."""
        alg, initial = self._start(f, y, advice)
        return swapping_gap(alg, f, f2, initial)

    def output_distribution(self, f: FunctionTable, y: int, advice: QuantumRegister) -> np.ndarray:
        return self.run(f, y, advice).distribution

    def success_probability(self, f: FunctionTable, y: int,
                            advice: Optional[QuantumRegister] = None) -> float:
        """Exact probability that the output is a preimage of y under f."""
        advice = self.prepare_advice(f) if advice is None else advice
        dist = self.output_distribution(f, y, advice)
        return float(dist[f.entries == y].sum())

    def __repr__(self) -> str:
        return f"{type(self).__name__}(m={self.m}, n={self.n}, S={self.s_qubits}, T={self.t_queries})"


def _one_hot(size: int, index: int) -> np.ndarray:
    out = np.zeros(size)
    out[index] = 1.0
    return out


class TableAdviceInverter(Inverter):
    """
    Stores the lowest preimage of every y < ceil(theta*n) in its advice.

    Stored challenges are answered with no queries; the rest get a uniform
    guess.
    """

    kind = "table-advice"

    def __init__(self, m: int, n: int, theta: float):
        super().__init__(m, n, t_queries=0)
        if not 0.0 <= theta <= 1.0:
            raise InvalidParameterError(f"theta={theta} outside [0, 1]")
        self.theta = theta
        self.stored = math.ceil(theta * n - 1e-12)
        self.width = max(1, bits_for(m))

    @property
    def s_qubits(self) -> int:
        return self.stored * self.width

    @property
    def label(self) -> str:
        return f"table-advice-{self.theta:g}"

    def prepare_advice(self, f: FunctionTable) -> QuantumRegister:
        self.check_table(f)
        index = 0
        for y in range(self.stored):
            bag = f.preimages(y)
            index |= (min(bag) if bag else 0) << (y * self.width)
        return QuantumRegister(self.s_qubits, basis_index=index)

    def stored_preimage(self, y: int, advice: QuantumRegister) -> Optional[int]:
        if not 0 <= y < self.stored:
            return None
        if not advice.is_basis:
            raise InvalidParameterError("Table advice must be a basis state")
        return (advice.basis_index >> (y * self.width)) & ((1 << self.width) - 1)

    def algorithm(self, y, advice):
        x = self.stored_preimage(y, advice)
        if x is None:
            steps = (PrepareUniform(),)
        else:
            steps = (Prepare(_one_hot(self.m, x)),)
        return OracleAlgorithm(t_max=0, steps=steps, name=self.label), None


class GroverInverter(Inverter):
    """Grover search with T iterations and no advice."""

    kind = "grover"

    def __init__(self, m: int, n: int, t_queries: int):
        super().__init__(m, n, t_queries)

    @property
    def s_qubits(self) -> int:
        return 0

    @property
    def label(self) -> str:
        return f"grover-{self.t_queries}"

    def prepare_advice(self, f: FunctionTable) -> QuantumRegister:
        self.check_table(f)
        return QuantumRegister(0, basis_index=0)

    def algorithm(self, y, advice):
        return grover_algorithm(self.m, y, self.t_queries, name=self.label), None


class NoisyInverter(Inverter):
    """
    Returns the lowest preimage with probability p, otherwise a uniformly
    random non-preimage.

    The advice is the forward table; the output distribution is prepared
    directly with no oracle calls.
    """

    kind = "noisy"

    def __init__(self, m: int, n: int, p: float):
        super().__init__(m, n, t_queries=0)
        if not 0.0 <= p <= 1.0:
            raise InvalidParameterError(f"p={p} outside [0, 1]")
        self.p = p
        self.width = max(1, bits_for(n))

    @property
    def s_qubits(self) -> int:
        return self.m * self.width

    @property
    def label(self) -> str:
        return f"noisy-{self.p:g}"

    def prepare_advice(self, f: FunctionTable) -> QuantumRegister:
        self.check_table(f)
        index = 0
        for x, v in enumerate(f):
            index |= v << (x * self.width)
        return QuantumRegister(self.s_qubits, basis_index=index)

    def table_from_advice(self, advice: QuantumRegister) -> np.ndarray:
        if not advice.is_basis:
            raise InvalidParameterError("Noisy-inverter advice must be a basis state")
        mask = (1 << self.width) - 1
        return np.array([(advice.basis_index >> (x * self.width)) & mask for x in range(self.m)],
                        dtype=np.int64)

    def distribution_for(self, y: int, advice: QuantumRegister) -> np.ndarray:
        entries = self.table_from_advice(advice)
        preimage = entries == y
        dist = np.zeros(self.m)
        if not preimage.any():
            dist[:] = 1.0 / self.m
            return dist
        junk = ~preimage
        x_star = int(np.flatnonzero(preimage)[0])
        if not junk.any():
            dist[x_star] = 1.0
            return dist
        dist[junk] = (1.0 - self.p) / junk.sum()
        dist[x_star] += self.p
        return dist

    def algorithm(self, y, advice):
        target = np.sqrt(self.distribution_for(y, advice))
        return OracleAlgorithm(t_max=0, steps=(Prepare(target),), name=self.label), None


def make_example_inverter(kind: str, m: int, n: int, theta: float = 0.5,
                          t_queries: int = 1, p: float = 0.6) -> Inverter:
    """
    Build one of the example inverters.

    Args:
        kind: "table-advice", "grover" or "noisy"
        m: Domain size
        n: Codomain size
        theta: Stored fraction for table advice
        t_queries: Iterations for Grover
        p: Correctness probability for the noisy inverter

    Raises:
        InvalidParameterError: For an unknown kind or invalid parameters
    """
    if kind == "table-advice":
        return TableAdviceInverter(m, n, theta)
    if kind == "grover":
        return GroverInverter(m, n, t_queries)
    if kind == "noisy":
        return NoisyInverter(m, n, p)
    raise InvalidParameterError(f"Unknown inverter kind '{kind}' (expected one of {INVERTER_KINDS})")
