"""
qinvert - Core Module

This module provides the ground-truth objects every other module consumes:
explicit function and permutation tables, their inverse-partition view,
seeded sampling and the package-wide exception hierarchy.
"""

import hashlib
from dataclasses import dataclass, field
from typing import FrozenSet, Iterable, Iterator, List, Optional, Sequence, Tuple

import numpy as np


class QInvertError(Exception):
    """Base exception for all qinvert errors."""
    pass


class InvalidParameterError(QInvertError, ValueError):
    """Raised when an argument violates an operation's precondition."""
    pass


class DimensionMismatchError(QInvertError):
    """Raised when register layouts or table sizes do not agree."""
    pass


class InvariantViolation(QInvertError):
    """Raised when a checked invariant (norm, unitarity, accounting) fails."""
    pass


class EncodingError(QInvertError):
    """Raised for malformed encodings, out-of-range ranks and bad text formats."""
    pass


def derive_seed(base: int, *path: object) -> int:
    """
    Derive a child seed from a base seed and a path of labels.

    The result is stable across platforms and Python versions, which makes
    per-trial seeds reproducible no matter how trials are scheduled.

    Args:
        base: Base seed
        *path: Labels (trial index, purpose strings) identifying the child

    Returns:
        An unsigned 64-bit integer seed
    """
    content = ":".join([str(int(base))] + [str(p) for p in path])
    digest = hashlib.sha256(content.encode()).digest()
    return int.from_bytes(digest[:8], "big")


def rng_for(seed: int) -> np.random.Generator:
    """Counter-based generator for a seed; never touches global state."""
    return np.random.Generator(np.random.Philox(key=int(seed) & ((1 << 64) - 1)))


def _frozen_entries(entries: Iterable[int]) -> np.ndarray:
    array = np.array(list(entries) if not isinstance(entries, np.ndarray) else entries,
                     dtype=np.int64)
    if array.ndim != 1:
        raise InvalidParameterError("Table entries must be one-dimensional")
    array = array.copy()
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class FunctionTable:
    """
    Explicit truth table of f: [m] -> [n], 0-based on both sides.

    Tables are immutable: the entry array is read-only and safe to share
    across worker threads.
    """
    m: int
    n: int
    entries: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.m < 1 or self.n < 1:
            raise InvalidParameterError(f"Table sizes must be positive (m={self.m}, n={self.n})")
        object.__setattr__(self, "entries", _frozen_entries(self.entries))
        if self.entries.shape[0] != self.m:
            raise InvalidParameterError(
                f"Table declares m={self.m} but has {self.entries.shape[0]} entries"
            )
        if self.m and (self.entries.min() < 0 or self.entries.max() >= self.n):
            raise InvalidParameterError(f"Table entry outside codomain [0, {self.n})")

    @classmethod
    def from_values(cls, values: Sequence[int], n: int) -> "FunctionTable":
        """Build a table from a sequence of codomain indices."""
        return cls(m=len(values), n=n, entries=np.asarray(values, dtype=np.int64))

    def __call__(self, x: int) -> int:
        return int(self.entries[x])

    def __len__(self) -> int:
        return self.m

    def __iter__(self) -> Iterator[int]:
        return (int(v) for v in self.entries)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FunctionTable):
            return NotImplemented
        return (self.m, self.n) == (other.m, other.n) and bool(
            np.array_equal(self.entries, other.entries)
        )

    def __hash__(self) -> int:
        return hash((self.m, self.n, self.entries.tobytes()))

    def __repr__(self) -> str:
        return f"{type(self).__name__}(m={self.m}, n={self.n}, entries={self.entries.tolist()})"

    def preimages(self, y: int) -> FrozenSet[int]:
        """All x with f(x) = y."""
        return frozenset(int(x) for x in np.flatnonzero(self.entries == y))

    def preimage_counts(self) -> np.ndarray:
        """Number of preimages of every codomain value."""
        return np.bincount(self.entries, minlength=self.n)

    @property
    def max_preimage_size(self) -> int:
        return int(self.preimage_counts().max())

    @property
    def is_bijection(self) -> bool:
        return self.m == self.n and self.max_preimage_size == 1

    def image(self) -> FrozenSet[int]:
        return frozenset(int(v) for v in np.unique(self.entries))

    def with_values(self, positions: Iterable[int], value: int) -> "FunctionTable":
        """
        Copy of this table with every listed position remapped to one value.

        The result is always a plain FunctionTable, even when called on a
        permutation, since the remapped table is generally not a bijection.
        """
        entries = self.entries.copy()
        idx = np.fromiter((int(p) for p in positions), dtype=np.int64)
        if idx.size:
            entries[idx] = value
        return FunctionTable(m=self.m, n=self.n, entries=entries)

    def as_permutation(self) -> "PermutationTable":
        return PermutationTable.from_values(self.entries, self.n)


@dataclass(frozen=True, eq=False, repr=False)
class PermutationTable(FunctionTable):
    """A FunctionTable with m = n whose entries form a bijection."""

    def __post_init__(self):
        super().__post_init__()
        if self.m != self.n:
            raise InvalidParameterError(f"Permutation needs m = n (got m={self.m}, n={self.n})")
        if not np.array_equal(np.sort(self.entries), np.arange(self.n)):
            raise InvalidParameterError("Permutation entries are not a bijection")

    @classmethod
    def from_values(cls, values: Sequence[int], n: Optional[int] = None) -> "PermutationTable":
        size = len(values)
        return cls(m=size, n=size if n is None else n, entries=np.asarray(values, dtype=np.int64))

    @classmethod
    def identity(cls, n: int) -> "PermutationTable":
        return cls(m=n, n=n, entries=np.arange(n, dtype=np.int64))

    def inverse(self) -> "PermutationTable":
        inv = np.empty(self.n, dtype=np.int64)
        inv[self.entries] = np.arange(self.n, dtype=np.int64)
        return PermutationTable(m=self.n, n=self.n, entries=inv)

    def cycles(self) -> List[Tuple[int, ...]]:
        """Cycle decomposition, each cycle starting at its smallest element."""
        seen = np.zeros(self.n, dtype=bool)
        out: List[Tuple[int, ...]] = []
        entries = self.entries
        for start in range(self.n):
            if seen[start]:
                continue
            cycle = []
            x = start
            while not seen[x]:
                seen[x] = True
                cycle.append(x)
                x = int(entries[x])
            out.append(tuple(cycle))
        return out


@dataclass(frozen=True)
class InversePartition:
    """
    The inverse view of f: bag y holds every x with f(x) = y.

    An empty bag stands for "y has no preimage".
    """
    m: int
    bags: Tuple[FrozenSet[int], ...]

    def __post_init__(self):
        object.__setattr__(self, "bags", tuple(frozenset(b) for b in self.bags))
        seen = set()
        for y, bag in enumerate(self.bags):
            if seen & bag:
                raise InvalidParameterError(f"Bag {y} overlaps an earlier bag")
            seen |= bag
        if seen != set(range(self.m)):
            raise InvalidParameterError("Bags do not cover the domain exactly")

    @property
    def n(self) -> int:
        return len(self.bags)

    def rebuild(self) -> FunctionTable:
        """Reconstruct the forward table."""
        entries = np.empty(self.m, dtype=np.int64)
        for y, bag in enumerate(self.bags):
            for x in bag:
                entries[x] = y
        return FunctionTable(m=self.m, n=self.n, entries=entries)


def sample_function(m: int, n: int, seed: int) -> FunctionTable:
    """
    Sample f uniformly from all functions [m] -> [n].

    Args:
        m: Domain size
        n: Codomain size
        seed: 64-bit seed

    Raises:
        InvalidParameterError: If either size is zero
    """
    if m < 1 or n < 1:
        raise InvalidParameterError(f"Cannot sample a function with m={m}, n={n}")
    entries = rng_for(seed).integers(0, n, size=m, dtype=np.int64)
    return FunctionTable(m=m, n=n, entries=entries)


def sample_permutation(n: int, seed: int) -> PermutationTable:
    """Sample a uniform permutation of [n] with an unbiased shuffle."""
    if n < 1:
        raise InvalidParameterError(f"Cannot sample a permutation with n={n}")
    return PermutationTable(m=n, n=n, entries=rng_for(seed).permutation(n).astype(np.int64))


def invert_partition(f: FunctionTable) -> InversePartition:
    """Split the domain of f into its n preimage bags."""
    order = np.argsort(f.entries, kind="stable")
    counts = f.preimage_counts()
    bags = []
    offset = 0
    for y in range(f.n):
        c = int(counts[y])
        bags.append(frozenset(int(x) for x in order[offset:offset + c]))
        offset += c
    return InversePartition(m=f.m, bags=tuple(bags))
