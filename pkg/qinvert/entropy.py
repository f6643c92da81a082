"""
qinvert - Entropy Toolkit

Shannon and von Neumann entropies, classical-quantum states with subsystem
selectors, conditional entropy and the subadditivity check, and the
variable-length random-access-code lower bound with its permutation and
partition specializations. All entropies are in bits.
"""

import math
from dataclasses import dataclass
from itertools import product
from typing import Collection, Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from .core import InvalidParameterError, InvariantViolation, rng_for

EIGEN_CUTOFF = 1e-12
STATE_TOLERANCE = 1e-10
LOG2_E = math.log2(math.e)

Selector = Union[int, str]


def binary_entropy(p: float) -> float:
    """
    H(p) = -p log2 p - (1-p) log2 (1-p), with H(0) = H(1) = 0.

    Raises:
        InvalidParameterError: If p is outside [0, 1]
    """
    if not 0.0 <= p <= 1.0:
        raise InvalidParameterError(f"Probability {p} outside [0, 1]")
    if p == 0.0 or p == 1.0:
        return 0.0
    return -p * math.log2(p) - (1 - p) * math.log2(1 - p)


def shannon_entropy(probs: Iterable[float]) -> float:
    values = np.asarray(list(probs) if not isinstance(probs, np.ndarray) else probs,
                        dtype=np.float64)
    values = values[values > EIGEN_CUTOFF]
    return float(-np.sum(values * np.log2(values))) if values.size else 0.0


def fact_gap(p: float) -> float:
    """p*log2(e/p) - H(p); nonnegative on (0, 1]."""
    if not 0.0 < p <= 1.0:
        raise InvalidParameterError(f"Probability {p} outside (0, 1]")
    return p * math.log2(math.e / p) - binary_entropy(p)


def log2_factorial(n: int) -> float:
    return math.lgamma(n + 1) / math.log(2)


class DensityMatrix:
    """
    A density matrix, optionally split into subsystems of the given dims.

    Diagonal matrices are kept as their diagonal, which keeps classical
    encodings cheap to mix.

    Raises:
        InvariantViolation: If the matrix is not Hermitian, not unit trace
            or not positive semidefinite
    """

    def __init__(self, matrix: np.ndarray, dims: Optional[Sequence[int]] = None,
                 check: bool = True):
        matrix = np.asarray(matrix, dtype=np.complex128)
        if matrix.ndim == 1:
            self._diagonal: Optional[np.ndarray] = matrix.real.astype(np.float64)
            self._matrix: Optional[np.ndarray] = None
            dim = matrix.size
        else:
            if matrix.shape[0] != matrix.shape[1]:
                raise InvariantViolation(f"Density matrix must be square, got {matrix.shape}")
            self._diagonal = None
            self._matrix = matrix
            dim = matrix.shape[0]
        self.dim = dim
        self.dims = tuple(dims) if dims is not None else (dim,)
        if int(np.prod(self.dims)) != dim:
            raise InvariantViolation(f"Subsystem dims {self.dims} do not multiply to {dim}")
        if check:
            self._validate()

    @classmethod
    def diagonal(cls, probs: Sequence[float], dims: Optional[Sequence[int]] = None) -> "DensityMatrix":
        return cls(np.asarray(probs, dtype=np.float64), dims=dims)

    @classmethod
    def pure(cls, vector: Sequence[complex], dims: Optional[Sequence[int]] = None) -> "DensityMatrix":
        v = np.asarray(vector, dtype=np.complex128).ravel()
        return cls(np.outer(v, v.conj()), dims=dims)

    @classmethod
    def basis(cls, index: int, dim: int) -> "DensityMatrix":
        probs = np.zeros(dim)
        probs[index] = 1.0
        return cls.diagonal(probs)

    @classmethod
    def maximally_mixed(cls, dim: int) -> "DensityMatrix":
        return cls.diagonal(np.full(dim, 1.0 / dim))

    @property
    def is_diagonal(self) -> bool:
        return self._diagonal is not None

    @property
    def matrix(self) -> np.ndarray:
        if self._matrix is None:
            return np.diag(self._diagonal).astype(np.complex128)
        return self._matrix

    def diagonal_values(self) -> np.ndarray:
        if self._diagonal is not None:
            return self._diagonal
        return np.real(np.diag(self._matrix))

    def eigenvalues(self) -> np.ndarray:
        if self._diagonal is not None:
            return self._diagonal
        return np.linalg.eigvalsh(self._matrix)

    def _validate(self) -> None:
        if self._matrix is not None:
            herm = np.abs(self._matrix - self._matrix.conj().T).max()
            if herm > STATE_TOLERANCE:
                raise InvariantViolation(f"Density matrix not Hermitian (error {herm:.3e})")
        trace = float(self.diagonal_values().sum())
        if abs(trace - 1.0) > STATE_TOLERANCE:
            raise InvariantViolation(f"Density matrix trace is {trace}")
        if self.eigenvalues().min() < -STATE_TOLERANCE:
            raise InvariantViolation("Density matrix has a negative eigenvalue")

    def partial_trace(self, keep: Collection[int]) -> "DensityMatrix":
        """Reduced state on the kept subsystems (in index order)."""
        keep = sorted(set(keep))
        if any(i < 0 or i >= len(self.dims) for i in keep):
            raise InvalidParameterError(f"Subsystems {keep} outside {len(self.dims)} parts")
        kept_dims = tuple(self.dims[i] for i in keep)
        size = int(np.prod(kept_dims)) if kept_dims else 1
        if self._diagonal is not None:
            tensor = self._diagonal.reshape(self.dims)
            drop = tuple(i for i in range(len(self.dims)) if i not in keep)
            return DensityMatrix(tensor.sum(axis=drop).reshape(size), dims=kept_dims or (1,),
                                 check=False)
        tensor = self._matrix.reshape(self.dims + self.dims)
        for i in sorted((i for i in range(len(self.dims)) if i not in keep), reverse=True):
            half = tensor.ndim // 2
            tensor = np.trace(tensor, axis1=i, axis2=i + half)
        return DensityMatrix(tensor.reshape(size, size), dims=kept_dims or (1,), check=False)


def von_neumann_entropy(rho: DensityMatrix) -> float:
    """Shannon entropy of the spectrum; eigenvalues below 1e-12 count as 0."""
    return shannon_entropy(np.clip(rho.eigenvalues(), 0.0, None))


def _mix(parts: List[Tuple[float, DensityMatrix]]) -> DensityMatrix:
    total = sum(p for p, _ in parts)
    if all(rho.is_diagonal for _, rho in parts):
        acc = sum(p * rho.diagonal_values() for p, rho in parts)
        return DensityMatrix(np.asarray(acc) / total, check=False)
    acc = sum(p * rho.matrix for p, rho in parts)
    return DensityMatrix(np.asarray(acc) / total, check=False)


class ClassicalQuantumState:
    """
    A classical-quantum state sum_b p_b |label_b><label_b| (x) rho_b.

    Classical subsystems are addressed by their position in the label tuple,
    the quantum part by the selector "Q".
    """

    QUANTUM = "Q"

    def __init__(self, branches: Iterable[Tuple[float, Tuple, DensityMatrix]]):
        self.branches = [(float(p), tuple(label), rho) for p, label, rho in branches]
        if not self.branches:
            raise InvalidParameterError("A classical-quantum state needs at least one branch")
        probs = np.array([p for p, _, _ in self.branches])
        if np.any(probs < 0) or abs(probs.sum() - 1.0) > STATE_TOLERANCE:
            raise InvariantViolation(f"Branch probabilities sum to {probs.sum()}")
        widths = {len(label) for _, label, _ in self.branches}
        dims = {rho.dim for _, _, rho in self.branches}
        if len(widths) != 1 or len(dims) != 1:
            raise InvariantViolation("Branches disagree on label width or quantum dimension")
        self.label_width = widths.pop()
        self.quantum_dim = dims.pop()

    def subsystems(self) -> FrozenSet[Selector]:
        return frozenset(range(self.label_width)) | {self.QUANTUM}

    def _split(self, selector: Iterable[Selector]) -> Tuple[Tuple[int, ...], bool]:
        chosen = set(selector)
        quantum = self.QUANTUM in chosen
        chosen.discard(self.QUANTUM)
        bad = [c for c in chosen if not isinstance(c, int) or not 0 <= c < self.label_width]
        if bad:
            raise InvalidParameterError(f"Invalid subsystem selector {bad}")
        return tuple(sorted(chosen)), quantum

    def entropy(self, selector: Iterable[Selector]) -> float:
        """Joint entropy of the selected classical positions and optionally Q."""
        positions, quantum = self._split(selector)
        groups: Dict[Tuple, List[Tuple[float, DensityMatrix]]] = {}
        for p, label, rho in self.branches:
            if p > 0:
                groups.setdefault(tuple(label[i] for i in positions), []).append((p, rho))
        weights = np.array([sum(p for p, _ in parts) for parts in groups.values()])
        value = shannon_entropy(weights)
        if quantum:
            for weight, parts in zip(weights, groups.values()):
                value += float(weight) * von_neumann_entropy(_mix(parts))
        return value

    def marginal(self, positions: Sequence[int]) -> Dict[Tuple, float]:
        out: Dict[Tuple, float] = {}
        for p, label, _ in self.branches:
            key = tuple(label[i] for i in positions)
            out[key] = out.get(key, 0.0) + p
        return out


JointState = Union[ClassicalQuantumState, DensityMatrix]


def _joint_entropy(joint: JointState, selector: Iterable[Selector]) -> float:
    selector = list(selector)
    if isinstance(joint, ClassicalQuantumState):
        return joint.entropy(selector)
    if not selector:
        return 0.0
    return von_neumann_entropy(joint.partial_trace(selector))


def _all_subsystems(joint: JointState) -> FrozenSet[Selector]:
    if isinstance(joint, ClassicalQuantumState):
        return joint.subsystems()
    return frozenset(range(len(joint.dims)))


def conditional_entropy(joint: JointState, condition_on: Iterable[Selector],
                        of: Optional[Iterable[Selector]] = None) -> float:
    """
    S(A|B) = S(AB) - S(B).

    Args:
        joint: A classical-quantum state or a density matrix with subsystem dims
        condition_on: Selector for B
        of: Selector for A; defaults to every subsystem not in B

    Raises:
        InvalidParameterError: If A and B overlap or name unknown subsystems
    """
    cond = frozenset(condition_on)
    everything = _all_subsystems(joint)
    target = (everything - cond) if of is None else frozenset(of)
    if cond & target:
        raise InvalidParameterError("Conditioned and target subsystems overlap")
    if not (cond | target) <= everything:
        raise InvalidParameterError("Selector names an unknown subsystem")
    return _joint_entropy(joint, cond | target) - _joint_entropy(joint, cond)


def mutual_information(joint: JointState, a: Iterable[Selector], b: Iterable[Selector],
                       given: Iterable[Selector] = ()) -> float:
    """I(A;B|C) = S(AC) + S(BC) - S(ABC) - S(C)."""
    a, b, c = frozenset(a), frozenset(b), frozenset(given)
    return (_joint_entropy(joint, a | c) + _joint_entropy(joint, b | c)
            - _joint_entropy(joint, a | b | c) - _joint_entropy(joint, c))


def check_subadditivity(parts: Sequence[Iterable[Selector]], q: Iterable[Selector],
                        joint: ClassicalQuantumState) -> float:
    """
    Slack sum_i S(X_i|Q) - S(X|Q) where X is the union of the parts.

    Raises:
        InvalidParameterError: If two parts overlap
    """
    frozen = [frozenset(p) for p in parts]
    union: FrozenSet[Selector] = frozenset()
    for part in frozen:
        if union & part:
            raise InvalidParameterError("Subadditivity parts overlap")
        union |= part
    cond = frozenset(q)
    total = sum(conditional_entropy(joint, cond, of=part) for part in frozen)
    return total - conditional_entropy(joint, cond, of=union)


def random_density_matrix(dim: int, rng: np.random.Generator, rank: Optional[int] = None) -> DensityMatrix:
    rank = rank or dim
    g = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))
    rho = g @ g.conj().T
    rho = (rho + rho.conj().T) / 2
    return DensityMatrix(rho / np.trace(rho).real)


def random_cq_state(part_dims: Sequence[int], q_dim: int, seed: int) -> ClassicalQuantumState:
    """Random joint distribution over the parts with a random quantum state per branch."""
    rng = rng_for(seed)
    labels = list(product(*(range(d) for d in part_dims)))
    weights = rng.dirichlet(np.ones(len(labels)))
    weights = weights / weights.sum()
    return ClassicalQuantumState(
        (float(w), label, random_density_matrix(q_dim, rng)) for w, label in zip(weights, labels)
    )


@dataclass(frozen=True)
class BoundInput:
    """Inputs of the random-access-code length bound."""
    s_x: float
    s_xj: float
    n: int
    delta: float

    def __post_init__(self):
        if not 0.0 <= self.delta <= 1.0:
            raise InvalidParameterError(f"delta={self.delta} outside [0, 1]")
        if self.s_x < 0 or self.s_xj < 0 or self.n < 1:
            raise InvalidParameterError("Entropies must be nonnegative and n >= 1")


def qracvl_bound(b: BoundInput) -> float:
    """
    Lower bound on average encoding length, clamped at 0.

    L >= S(X) - N * (H(delta) + (1 - delta) * S(X_J))
    """
    return max(0.0, b.s_x - b.n * (binary_entropy(b.delta) + (1 - b.delta) * b.s_xj))


def permutation_bound(n: int, delta: float) -> float:
    """Bound for uniform permutations: S(X) = log2 n!, S(X_J) = log2 n."""
    if n < 1:
        raise InvalidParameterError("n must be positive")
    return qracvl_bound(BoundInput(log2_factorial(n), math.log2(n), n, delta))


def permutation_corollary_floor(n: int, k: float) -> float:
    """
    Explicit floor for delta = 1 - k/n via H(p) <= p log2(e/p):
    log2 n! - k*(log2(e n / k) + log2 n).
    """
    if k <= 0:
        return log2_factorial(n)
    return log2_factorial(n) - k * (math.log2(math.e * n / k) + math.log2(n))


def partition_element_entropy(m: int, n: int) -> float:
    """Entropy of one preimage bag of a uniform f: [m] -> [n], m * H(1/n)."""
    if m < 1 or n < 1:
        raise InvalidParameterError("m and n must be positive")
    return m * binary_entropy(1.0 / n)


def partition_bound(m: int, n: int, delta: float) -> float:
    """Bound for the inverse-partition view of uniform functions [m] -> [n]."""
    return qracvl_bound(BoundInput(m * math.log2(n), partition_element_entropy(m, n), n, delta))


def partition_corollary_floor(m: int, n: int, beta: float) -> float:
    """
    Explicit floor for delta = 1 - beta via H(p) <= p log2(e/p):
    m log2 n - n*beta*log2(e/beta) - m*beta*(log2 n + log2 e).
    """
    if beta <= 0:
        return m * math.log2(n)
    return (m * math.log2(n) - n * beta * math.log2(math.e / beta)
            - m * beta * (math.log2(n) + LOG2_E))
