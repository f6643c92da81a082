"""
qinvert - Rank/Unrank Codecs

Lexicographic ranking of subsets (combinadics), injections and permutations
(factoradic digits over a Fenwick tree) and functions (mixed radix), plus the
bit writer/reader that turns ranks into fixed-width fields. Each field is
ceil(log2(count)) bits wide and the writer keeps a ledger of ideal versus
realized widths.
"""

import math
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence, Tuple

from .core import EncodingError


class Fenwick:
    """Prefix counts over [0, n) for picking the k-th unused element."""

    def __init__(self, n: int, filled: bool = True):
        self.n = n
        self.tree = [0] * (n + 1)
        if filled:
            for i in range(1, n + 1):
                self.tree[i] += 1
                parent = i + (i & -i)
                if parent <= n:
                    self.tree[parent] += self.tree[i]

    def add(self, i: int, v: int = 1) -> None:
        i += 1
        while i <= self.n:
            self.tree[i] += v
            i += i & -i

    def prefix(self, i: int) -> int:
        """Sum over [0, i)."""
        s = 0
        while i > 0:
            s += self.tree[i]
            i -= i & -i
        return s

    def find_index(self, k: int) -> int:
        """0-based index of the k-th (0-based) element still present."""
        i = 0
        bit = 1 << self.n.bit_length()
        while bit:
            nxt = i + bit
            if nxt <= self.n and self.tree[nxt] <= k:
                k -= self.tree[nxt]
                i = nxt
            bit >>= 1
        return i


def bits_for(count: int) -> int:
    """Realized width of a field with ``count`` possible values."""
    if count < 1:
        raise EncodingError(f"Cannot encode a field with {count} values")
    return (count - 1).bit_length()


def ideal_bits(count: int) -> float:
    return math.log2(count) if count > 1 else 0.0


def injection_count(n: int, k: int) -> int:
    return math.perm(n, k)


def rank_injection(values: Sequence[int], n: int) -> int:
    """Rank of distinct values drawn from [0, n), in [0, n!/(n-k)!)."""
    fw = Fenwick(n)
    rank = 0
    for i, x in enumerate(values):
        x = int(x)
        if not 0 <= x < n:
            raise EncodingError(f"Value {x} outside [0, {n})")
        idx = fw.prefix(x)
        if fw.prefix(x + 1) == idx:
            raise EncodingError(f"Value {x} repeated in injection")
        rank = rank * (n - i) + idx
        fw.add(x, -1)
    return rank


def unrank_injection(rank: int, n: int, k: int) -> List[int]:
    if not 0 <= rank < injection_count(n, k):
        raise EncodingError(f"Injection rank {rank} out of range for n={n}, k={k}")
    digits = [0] * k
    for i in range(k - 1, -1, -1):
        rank, digits[i] = divmod(rank, n - i)
    fw = Fenwick(n)
    out = []
    for d in digits:
        x = fw.find_index(d)
        out.append(x)
        fw.add(x, -1)
    return out


def rank_permutation(perm: Sequence[int]) -> int:
    return rank_injection(perm, len(perm))


def unrank_permutation(rank: int, n: int) -> List[int]:
    return unrank_injection(rank, n, n)


def rank_subset(subset: Iterable[int], universe: int) -> int:
    """Combinadic rank of a subset of [0, universe), in [0, C(universe, k))."""
    items = sorted(int(c) for c in subset)
    if items and (items[0] < 0 or items[-1] >= universe):
        raise EncodingError(f"Subset element outside [0, {universe})")
    if len(set(items)) != len(items):
        raise EncodingError("Subset has repeated elements")
    return sum(math.comb(c, i + 1) for i, c in enumerate(items))


def unrank_subset(rank: int, universe: int, k: int) -> List[int]:
    if not 0 <= rank < math.comb(universe, k):
        raise EncodingError(f"Subset rank {rank} out of range for C({universe}, {k})")
    out = []
    upper = universe
    for i in range(k, 0, -1):
        lo, hi = i - 1, upper - 1
        # largest c in [i-1, upper) with C(c, i) <= rank
        while lo < hi:
            mid = (lo + hi + 1) // 2
            if math.comb(mid, i) <= rank:
                lo = mid
            else:
                hi = mid - 1
        out.append(lo)
        rank -= math.comb(lo, i)
        upper = lo
    return sorted(out)


def rank_function(values: Sequence[int], n: int) -> int:
    """Mixed-radix rank of a table of values in [0, n), in [0, n^m)."""
    rank = 0
    for v in values:
        v = int(v)
        if not 0 <= v < n:
            raise EncodingError(f"Value {v} outside [0, {n})")
        rank = rank * n + v
    return rank


def unrank_function(rank: int, m: int, n: int) -> List[int]:
    if not 0 <= rank < n ** m:
        raise EncodingError(f"Function rank {rank} out of range for {n}^{m}")
    out = [0] * m
    for i in range(m - 1, -1, -1):
        rank, out[i] = divmod(rank, n)
    return out


@dataclass(frozen=True)
class LengthComponent:
    """One field of an encoding: its name, ideal and realized width."""
    name: str
    ideal_bits: float
    realized_bits: int


class BitWriter:
    """Builds a classical bitstring field by field."""

    def __init__(self):
        self._parts: List[str] = []
        self.components: List[LengthComponent] = []

    def write(self, name: str, value: int, width: int, ideal: Optional[float] = None) -> None:
        if width < 0 or value < 0 or (width == 0 and value != 0) or value >> width:
            raise EncodingError(f"Value {value} does not fit {width} bits in field '{name}'")
        if width:
            self._parts.append(format(value, f"0{width}b"))
        self.components.append(LengthComponent(name, float(width if ideal is None else ideal), width))

    def write_ranked(self, name: str, rank: int, count: int) -> None:
        """Write a rank among ``count`` objects in ceil(log2 count) bits."""
        if not 0 <= rank < count:
            raise EncodingError(f"Rank {rank} out of range for {count} values in '{name}'")
        self.write(name, rank, bits_for(count), ideal_bits(count))

    def write_values(self, name: str, values: Sequence[int], count: int) -> None:
        """Write each value as a ranked field among ``count``, under one ledger entry."""
        width = bits_for(count)
        values = [int(v) for v in values]
        for v in values:
            if not 0 <= v < count:
                raise EncodingError(f"Value {v} out of range for {count} values in '{name}'")
        if width:
            self._parts.append("".join(format(v, f"0{width}b") for v in values))
        self.components.append(
            LengthComponent(name, len(values) * ideal_bits(count), len(values) * width)
        )

    def note(self, name: str, qubits: int) -> None:
        """Record a quantum component in the ledger."""
        self.components.append(LengthComponent(name, float(qubits), qubits))

    @property
    def bits(self) -> str:
        return "".join(self._parts)


class BitReader:
    """Reads fields back in the order they were written."""

    def __init__(self, bits: str):
        if any(c not in "01" for c in bits):
            raise EncodingError("Bitstring contains characters other than 0 and 1")
        self.bits = bits
        self.pos = 0

    def read(self, width: int) -> int:
        if self.pos + width > len(self.bits):
            raise EncodingError(
                f"Encoding truncated: need {width} bits at offset {self.pos}, "
                f"have {len(self.bits) - self.pos}"
            )
        chunk = self.bits[self.pos:self.pos + width]
        self.pos += width
        return int(chunk, 2) if chunk else 0

    def read_ranked(self, count: int) -> int:
        rank = self.read(bits_for(count))
        if rank >= count:
            raise EncodingError(f"Rank {rank} out of range for {count} values")
        return rank

    def read_values(self, count: int, k: int) -> List[int]:
        return [self.read_ranked(count) for _ in range(k)]

    def finish(self) -> None:
        if self.pos != len(self.bits):
            raise EncodingError(f"{len(self.bits) - self.pos} trailing bits in encoding")


def component_total(components: Sequence[LengthComponent]) -> Tuple[float, int]:
    return (sum(c.ideal_bits for c in components), sum(c.realized_bits for c in components))
