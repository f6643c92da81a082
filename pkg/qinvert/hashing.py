"""
qinvert - Universal Hashing

The affine GF(2) family h(x) = Mx + b. For any fixed x != x' a uniformly
drawn member collides with probability exactly 2^-out_bits. Bit vectors are
little-endian when converted to and from integers.
"""

from dataclasses import dataclass, field
from itertools import product
from typing import Sequence, Union

import numpy as np

from .core import DimensionMismatchError, InvalidParameterError, rng_for

BitsLike = Union[Sequence[int], np.ndarray]


def int_to_bits(value: int, width: int) -> np.ndarray:
    return np.array([(value >> i) & 1 for i in range(width)], dtype=np.uint8)


def bits_to_int(bits: BitsLike) -> int:
    return sum(int(b) << i for i, b in enumerate(bits))


@dataclass(frozen=True, eq=False)
class AffineHash:
    """One member of the affine family: out_bits x in_bits matrix plus offset."""
    in_bits: int
    out_bits: int
    matrix: np.ndarray = field(repr=False)
    offset: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.in_bits < 1 or self.out_bits < 1:
            raise InvalidParameterError("Hash sizes must be positive")
        matrix = np.asarray(self.matrix, dtype=np.uint8) & 1
        offset = np.asarray(self.offset, dtype=np.uint8).ravel() & 1
        if matrix.shape != (self.out_bits, self.in_bits) or offset.shape != (self.out_bits,):
            raise DimensionMismatchError(
                f"Hash matrix {matrix.shape} / offset {offset.shape} do not match "
                f"({self.out_bits}, {self.in_bits})"
            )
        matrix.setflags(write=False)
        offset.setflags(write=False)
        object.__setattr__(self, "matrix", matrix)
        object.__setattr__(self, "offset", offset)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, AffineHash):
            return NotImplemented
        return (self.in_bits == other.in_bits and self.out_bits == other.out_bits
                and np.array_equal(self.matrix, other.matrix)
                and np.array_equal(self.offset, other.offset))

    def __hash__(self) -> int:
        return hash((self.in_bits, self.out_bits, self.matrix.tobytes(), self.offset.tobytes()))

    def eval(self, x: BitsLike) -> np.ndarray:
        """
        Tag of a bit vector: matrix * x xor offset over GF(2).

        Raises:
            DimensionMismatchError: If len(x) != in_bits
        """
        vector = np.asarray(x, dtype=np.uint8).ravel()
        if vector.size != self.in_bits:
            raise DimensionMismatchError(f"Hash expects {self.in_bits} bits, got {vector.size}")
        return ((self.matrix.astype(np.int64) @ (vector & 1)) + self.offset) % 2

    def eval_int(self, value: int) -> int:
        return bits_to_int(self.eval(int_to_bits(value, self.in_bits)))


def sample_hash(in_bits: int, out_bits: int, seed: int) -> AffineHash:
    """
    Draw a family member uniformly.

    Raises:
        InvalidParameterError: If either size is zero
    """
    if in_bits < 1 or out_bits < 1:
        raise InvalidParameterError(f"Hash sizes must be positive (got {in_bits}, {out_bits})")
    rng = rng_for(seed)
    matrix = rng.integers(0, 2, size=(out_bits, in_bits), dtype=np.uint8)
    offset = rng.integers(0, 2, size=out_bits, dtype=np.uint8)
    return AffineHash(in_bits, out_bits, matrix, offset)


def family_members(in_bits: int, out_bits: int):
    """Every member of the family; only sensible for tiny sizes."""
    width = in_bits * out_bits + out_bits
    if width > 20:
        raise InvalidParameterError(f"Family of 2^{width} members is too large to enumerate")
    for bits in product((0, 1), repeat=width):
        flat = np.array(bits, dtype=np.uint8)
        yield AffineHash(in_bits, out_bits,
                         flat[:in_bits * out_bits].reshape(out_bits, in_bits),
                         flat[in_bits * out_bits:])


def family_collision_probability(in_bits: int, out_bits: int, x: int, x2: int) -> float:
    """Exact probability, over the whole family, that x and x2 collide."""
    a, b = int_to_bits(x, in_bits), int_to_bits(x2, in_bits)
    members = hits = 0
    for h in family_members(in_bits, out_bits):
        members += 1
        hits += int(np.array_equal(h.eval(a), h.eval(b)))
    return hits / members


def collision_rate(in_bits: int, out_bits: int, pairs: int, seed: int,
                   chunk: int = 100_000) -> float:
    """
    Fraction of sampled (h, x != x') whose tags collide.

    Raises:
        InvalidParameterError: If pairs < 1 or in_bits is too large to sample
    """
    if pairs < 1:
        raise InvalidParameterError("collision_rate needs at least one pair")
    if not 1 <= in_bits <= 62 or out_bits < 1:
        raise InvalidParameterError("collision_rate supports 1 <= in_bits <= 62")
    rng = rng_for(seed)
    weights = (1 << np.arange(in_bits, dtype=np.int64))
    collisions = 0
    remaining = pairs
    while remaining:
        c = min(chunk, remaining)
        matrices = rng.integers(0, 2, size=(c, out_bits, in_bits), dtype=np.int64)
        offsets = rng.integers(0, 2, size=(c, out_bits), dtype=np.int64)
        x = rng.integers(0, 1 << in_bits, size=c, dtype=np.int64)
        diff = rng.integers(1, 1 << in_bits, size=c, dtype=np.int64)
        xb = ((x[:, None] & weights) > 0).astype(np.int64)
        x2b = (((x ^ diff)[:, None] & weights) > 0).astype(np.int64)
        tags = (np.einsum("cij,cj->ci", matrices, xb) + offsets) % 2
        tags2 = (np.einsum("cij,cj->ci", matrices, x2b) + offsets) % 2
        collisions += int(np.all(tags == tags2, axis=1).sum())
        remaining -= c
    return collisions / pairs
