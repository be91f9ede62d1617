"""Bit-packed linear algebra over GF(2).

Vectors are stored as little-endian arrays of 64-bit words: bit ``j`` of a
vector lives in word ``j // 64`` at position ``j % 64``. Bits past ``length``
are always zero.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Iterator, Sequence

import numpy as np
from numba import njit

from .errors import ResourceError

WORD_BITS = 64
DEFAULT_ENUMERATION_CAP = 30

_ONE = np.uint64(1)


def n_words(length: int) -> int:
    return (length + WORD_BITS - 1) // WORD_BITS


def _tail_mask(length: int) -> np.uint64:
    rem = length % WORD_BITS
    if rem == 0:
        return np.uint64(0xFFFFFFFFFFFFFFFF)
    return np.uint64((1 << rem) - 1)


@dataclass(frozen=True, eq=False)
class BitVector:
    """Fixed-length vector over GF(2)."""

    length: int
    words: np.ndarray

    def __post_init__(self) -> None:
        words = np.ascontiguousarray(self.words, dtype=np.uint64).copy()
        if words.shape != (n_words(self.length),):
            raise ValueError(
                f"expected {n_words(self.length)} words for length {self.length}, got {words.shape}"
            )
        if self.length and words[-1] & ~_tail_mask(self.length):
            raise ValueError("bits beyond length must be zero")
        words.setflags(write=False)
        object.__setattr__(self, "words", words)

    @classmethod
    def zeros(cls, length: int) -> BitVector:
        return cls(length, np.zeros(n_words(length), dtype=np.uint64))

    @classmethod
    def from_indices(cls, length: int, indices: Iterable[int]) -> BitVector:
        words = np.zeros(n_words(length), dtype=np.uint64)
        for i in indices:
            if not 0 <= i < length:
                raise IndexError(f"bit index {i} out of range for length {length}")
            words[i // WORD_BITS] ^= _ONE << np.uint64(i % WORD_BITS)
        return cls(length, words)

    @classmethod
    def from_bits(cls, bits: Sequence[int] | str) -> BitVector:
        """Build from a 0/1 sequence or a string such as ``"110"`` (index 0 first)."""
        if isinstance(bits, str):
            bits = [int(c) for c in bits]
        bits = list(bits)
        return cls.from_indices(len(bits), (i for i, b in enumerate(bits) if b))

    def bits(self) -> np.ndarray:
        if self.length == 0:
            return np.zeros(0, dtype=np.uint8)
        raw = np.unpackbits(self.words.view(np.uint8), bitorder="little")
        return raw[: self.length]

    def indices(self) -> list[int]:
        return [int(i) for i in np.flatnonzero(self.bits())]

    def popcount(self) -> int:
        return int(np.bitwise_count(self.words).sum())

    def to_int(self) -> int:
        """Integer whose bit ``j`` equals bit ``j`` of this vector."""
        value = 0
        for k, w in enumerate(self.words):
            value |= int(w) << (WORD_BITS * k)
        return value

    def any(self) -> bool:
        return bool(self.words.any())

    def _check(self, other: BitVector) -> None:
        if self.length != other.length:
            raise ValueError(f"length mismatch: {self.length} != {other.length}")

    def __xor__(self, other: BitVector) -> BitVector:
        self._check(other)
        return BitVector(self.length, self.words ^ other.words)

    def __and__(self, other: BitVector) -> BitVector:
        self._check(other)
        return BitVector(self.length, self.words & other.words)

    def dot(self, other: BitVector) -> int:
        """GF(2) inner product (parity of the overlap)."""
        return (self & other).popcount() & 1

    def __getitem__(self, i: int) -> int:
        if not 0 <= i < self.length:
            raise IndexError(i)
        return int((self.words[i // WORD_BITS] >> np.uint64(i % WORD_BITS)) & _ONE)

    def __len__(self) -> int:
        return self.length

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BitVector):
            return NotImplemented
        return self.length == other.length and bool(np.array_equal(self.words, other.words))

    def __hash__(self) -> int:
        return hash((self.length, self.words.tobytes()))

    def __repr__(self) -> str:
        return f"BitVector('{''.join(map(str, self.bits()))}')"


@dataclass(frozen=True, eq=False)
class BitMatrix:
    """Dense GF(2) matrix; row ``i`` is ``data[i]`` packed like a :class:`BitVector`."""

    rows: int
    cols: int
    data: np.ndarray

    def __post_init__(self) -> None:
        data = np.ascontiguousarray(self.data, dtype=np.uint64).reshape(self.rows, n_words(self.cols)).copy()
        if self.rows and self.cols and (data[:, -1] & ~_tail_mask(self.cols)).any():
            raise ValueError("bits beyond cols must be zero")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    @classmethod
    def from_rows(cls, rows: Sequence[BitVector], cols: int | None = None) -> BitMatrix:
        if cols is None:
            if not rows:
                raise ValueError("cols is required for an empty row list")
            cols = rows[0].length
        for r in rows:
            if r.length != cols:
                raise ValueError(f"row length {r.length} != cols {cols}")
        data = np.zeros((len(rows), n_words(cols)), dtype=np.uint64)
        for i, r in enumerate(rows):
            data[i] = r.words
        return cls(len(rows), cols, data)

    @classmethod
    def from_dense(cls, array: np.ndarray | Sequence[Sequence[int]]) -> BitMatrix:
        arr = np.asarray(array, dtype=np.uint8) & 1
        if arr.ndim != 2:
            raise ValueError("expected a 2-D array")
        rows, cols = arr.shape
        if cols == 0:
            return cls(rows, 0, np.zeros((rows, 0), dtype=np.uint64))
        padded = np.zeros((rows, n_words(cols) * WORD_BITS), dtype=np.uint8)
        padded[:, :cols] = arr
        packed = np.packbits(padded, axis=1, bitorder="little")
        return cls(rows, cols, packed.view(np.uint64).reshape(rows, n_words(cols)))

    def to_dense(self) -> np.ndarray:
        if self.rows == 0 or self.cols == 0:
            return np.zeros((self.rows, self.cols), dtype=np.uint8)
        raw = np.unpackbits(self.data.view(np.uint8), axis=1, bitorder="little")
        return raw[:, : self.cols]

    def row(self, i: int) -> BitVector:
        return BitVector(self.cols, self.data[i])

    def row_vectors(self) -> list[BitVector]:
        return [self.row(i) for i in range(self.rows)]

    def transpose(self) -> BitMatrix:
        return BitMatrix.from_dense(self.to_dense().T)

    def matvec(self, v: BitVector) -> BitVector:
        """Product ``m · v`` over GF(2); result has one bit per row."""
        if v.length != self.cols:
            raise ValueError(f"length mismatch: {v.length} != {self.cols}")
        parities = np.bitwise_count(self.data & v.words).sum(axis=1) & 1
        return BitVector.from_bits(parities.tolist())

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BitMatrix):
            return NotImplemented
        return (self.rows, self.cols) == (other.rows, other.cols) and bool(
            np.array_equal(self.data, other.data)
        )

    __hash__ = None  # type: ignore[assignment]


def _rref(m: BitMatrix) -> tuple[np.ndarray, list[int]]:
    """Reduced row echelon form; returns the work array and pivot columns."""
    work = m.data.copy()
    pivots: list[int] = []
    r = 0
    for col in range(m.cols):
        if r == m.rows:
            break
        w, bit = divmod(col, WORD_BITS)
        mask = _ONE << np.uint64(bit)
        hits = np.flatnonzero(work[r:, w] & mask)
        if hits.size == 0:
            continue
        p = r + int(hits[0])
        if p != r:
            work[[r, p]] = work[[p, r]]
        others = np.flatnonzero(work[:, w] & mask)
        others = others[others != r]
        work[others] ^= work[r]
        pivots.append(col)
        r += 1
    return work, pivots


def rank(m: BitMatrix) -> int:
    return len(_rref(m)[1])


def kernel_basis(m: BitMatrix) -> list[BitVector]:
    """Null-space basis of ``m``; one vector per free column, in ascending column order."""
    work, pivots = _rref(m)
    pivot_set = set(pivots)
    basis = []
    for f in range(m.cols):
        if f in pivot_set:
            continue
        w, bit = divmod(f, WORD_BITS)
        col_bits = (work[: len(pivots), w] >> np.uint64(bit)) & _ONE
        support = [f] + [pivots[i] for i in np.flatnonzero(col_bits)]
        basis.append(BitVector.from_indices(m.cols, support))
    return basis


def in_span(basis: Sequence[BitVector], v: BitVector) -> bool:
    for b in basis:
        if b.length != v.length:
            raise ValueError(f"length mismatch: {b.length} != {v.length}")
    if not v.any():
        return True
    if not basis:
        return False
    base = BitMatrix.from_rows(list(basis), v.length)
    return rank(base) == rank(BitMatrix.from_rows([*basis, v], v.length))


def independent_subset(vectors: Sequence[BitVector]) -> list[int]:
    """Indices of a greedy first-come maximal independent subset."""
    chosen: list[int] = []
    reduced: list[tuple[int, np.ndarray]] = []  # (pivot bit, words)
    for idx, v in enumerate(vectors):
        words = v.words.copy()
        for pivot, rw in reduced:
            if (words[pivot // WORD_BITS] >> np.uint64(pivot % WORD_BITS)) & _ONE:
                words ^= rw
        nz = np.flatnonzero(words)
        if nz.size == 0:
            continue
        k = int(nz[0])
        low = int(words[k]) & -int(words[k])
        pivot = k * WORD_BITS + low.bit_length() - 1
        reduced.append((pivot, words))
        chosen.append(idx)
    return chosen


def _check_enumerable(basis: Sequence[BitVector], cap: int) -> None:
    if len(basis) > cap:
        raise ResourceError(f"span dimension {len(basis)} exceeds enumeration cap {cap}")
    if __debug__ and basis:
        lengths = {b.length for b in basis}
        if len(lengths) != 1:
            raise ValueError("basis vectors must share a length")
        if rank(BitMatrix.from_rows(list(basis))) != len(basis):
            raise ValueError("basis vectors are not independent")


def _iter_span(basis: Sequence[BitVector], length: int) -> Iterator[BitVector]:
    current = np.zeros(n_words(length), dtype=np.uint64)
    yield BitVector(length, current)
    for i in range(1, 1 << len(basis)):
        j = (i & -i).bit_length() - 1
        current ^= basis[j].words
        yield BitVector(length, current)


def enumerate_span(
    basis: Sequence[BitVector],
    visitor: Callable[[BitVector], object],
    length: int | None = None,
    cap: int = DEFAULT_ENUMERATION_CAP,
) -> None:
    """Call ``visitor`` once per element of the span, in Gray-code order.

    Consecutive elements differ by exactly one basis vector. ``length`` is only
    needed when ``basis`` is empty.
    """
    _check_enumerable(basis, cap)
    if length is None:
        if not basis:
            raise ValueError("length is required for an empty basis")
        length = basis[0].length
    for element in _iter_span(basis, length):
        visitor(element)


_M1 = np.uint64(0x5555555555555555)
_M2 = np.uint64(0x3333333333333333)
_M4 = np.uint64(0x0F0F0F0F0F0F0F0F)
_H01 = np.uint64(0x0101010101010101)
_S1 = np.uint64(1)
_S2 = np.uint64(2)
_S4 = np.uint64(4)
_S56 = np.uint64(56)


@njit(cache=True, nogil=True)
def _popcount64(x):
    x = x - ((x >> _S1) & _M1)
    x = (x & _M2) + ((x >> _S2) & _M2)
    x = (x + (x >> _S4)) & _M4
    return (x * _H01) >> _S56


@njit(cache=True, nogil=True)
def _span_weight_counts(basis_words, length):
    n_basis, n_w = basis_words.shape
    counts = np.zeros(length + 1, dtype=np.int64)
    current = np.zeros(n_w, dtype=np.uint64)
    counts[0] += 1
    total = np.int64(1) << n_basis
    for i in range(1, total):
        j = 0
        while (i >> j) & 1 == 0:
            j += 1
        weight = 0
        for w in range(n_w):
            current[w] ^= basis_words[j, w]
            weight += np.int64(_popcount64(current[w]))
        counts[weight] += 1
    return counts


def span_weight_counts(
    basis: Sequence[BitVector], length: int, cap: int = DEFAULT_ENUMERATION_CAP
) -> np.ndarray:
    """Histogram of Hamming weights over the span: ``counts[w]`` elements have weight ``w``."""
    _check_enumerable(basis, cap)
    words = np.zeros((len(basis), n_words(length)), dtype=np.uint64)
    for i, b in enumerate(basis):
        if b.length != length:
            raise ValueError(f"length mismatch: {b.length} != {length}")
        words[i] = b.words
    return _span_weight_counts(words, length)
