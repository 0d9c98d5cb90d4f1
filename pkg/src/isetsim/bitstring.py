"""Bit-string states for one particle (1 x N) and for the singlet (2 x N).

Entries are int8 arrays over {+1, -1}.  Positions ``k`` are 1-based to match
the trajectory index.  Ordering for a nonzero phase index ``l`` is a right
cyclic shift of the canonical (+1 first) string; the model only fixes the
composition, so this ordering is a convention.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import ParameterError
from .geometry import RationalCosine, _lattice_size


def _check_n(N: int, n: int) -> None:
    if not 1 <= n <= N // 2:
        raise ParameterError(f"lattice index n={n} outside 1..{N // 2}")


def _check_k(N: int, k: int) -> None:
    if not 1 <= k <= N:
        raise ParameterError(f"trajectory index k={k} outside 1..{N}")


@dataclass(frozen=True)
class BitStringSingle:
    entries: np.ndarray = field(repr=False)
    n: int
    l: int
    plus_count: int
    minus_count: int

    @property
    def N(self) -> int:
        return len(self.entries)

    @property
    def mean(self) -> Fraction:
        return Fraction(self.plus_count - self.minus_count, self.N)

    @property
    def cosine(self) -> RationalCosine:
        return RationalCosine.from_index(self.N, self.n, "single")

    def to_text(self) -> str:
        return entries_to_text(self.entries)


@dataclass(frozen=True)
class BitStringSinglet:
    row1: np.ndarray = field(repr=False)
    row2: np.ndarray = field(repr=False)
    n: int
    counts: dict = field(repr=False)

    @property
    def N(self) -> int:
        return len(self.row1)

    @property
    def cosine(self) -> RationalCosine:
        return RationalCosine.from_index(self.N, self.n, "bell")

    def to_text(self) -> str:
        return entries_to_text(self.row1) + "\n" + entries_to_text(self.row2)


def build_single(params, n: int, l: int = 0) -> BitStringSingle:
    N = _lattice_size(params)
    _check_n(N, n)
    if not 0 <= l <= N:
        raise ParameterError(f"phase index l={l} outside 0..{N}")
    minus = 2 * n - 1
    plus = N - minus
    entries = np.empty(N, dtype=np.int8)
    entries[:plus] = 1
    entries[plus:] = -1
    if l % N:
        entries = np.roll(entries, l)
    entries.setflags(write=False)
    return BitStringSingle(entries, n, l, plus, minus)


def build_singlet(params, n: int) -> BitStringSinglet:
    N = _lattice_size(params)
    _check_n(N, n)
    half = N // 2
    row1 = np.concatenate([np.ones(half, np.int8), -np.ones(half, np.int8)])
    row2 = np.concatenate([
        np.ones(n, np.int8), -np.ones(half - n, np.int8),
        -np.ones(n, np.int8), np.ones(half - n, np.int8),
    ])
    counts = column_counts(row1, row2)
    row1.setflags(write=False)
    row2.setflags(write=False)
    return BitStringSinglet(row1, row2, n, counts)


def column_counts(row1: np.ndarray, row2: np.ndarray) -> dict:
    r1 = np.asarray(row1)
    r2 = np.asarray(row2)
    return {
        (1, 1): int(np.sum((r1 == 1) & (r2 == 1))),
        (-1, -1): int(np.sum((r1 == -1) & (r2 == -1))),
        (1, -1): int(np.sum((r1 == 1) & (r2 == -1))),
        (-1, 1): int(np.sum((r1 == -1) & (r2 == 1))),
    }


def outcome_single(bits: BitStringSingle, k: int) -> int:
    _check_k(bits.N, k)
    return int(bits.entries[k - 1])


def outcome_pair(bits: BitStringSinglet, k: int) -> tuple[int, int]:
    _check_k(bits.N, k)
    return int(bits.row1[k - 1]), int(bits.row2[k - 1])


def correlation_exact(bits: BitStringSinglet) -> Fraction:
    """Mean of O1*O2 over all columns, from the column counts."""
    c = bits.counts
    agree = c[(1, 1)] + c[(-1, -1)]
    disagree = c[(1, -1)] + c[(-1, 1)]
    return Fraction(agree - disagree, bits.N)


# vectorized outcome maps used by the ensembles; they must agree with the
# array layouts above (checked in the tests)

def single_outcomes(N: int, n: np.ndarray, k: np.ndarray) -> np.ndarray:
    """Entries of the canonical (l = 0) single-particle string at 1-based ``k``."""
    n = np.asarray(n)
    k = np.asarray(k)
    return np.where(k <= N - (2 * n - 1), 1, -1).astype(np.int8)


def singlet_outcomes(N: int, n: np.ndarray, k: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    n = np.asarray(n)
    k = np.asarray(k)
    half = N // 2
    o1 = np.where(k <= half, 1, -1).astype(np.int8)
    first = k <= half
    pos = np.where(first, k, k - half)
    in_head = pos <= n
    o2 = np.where(first, np.where(in_head, 1, -1), np.where(in_head, -1, 1)).astype(np.int8)
    return o1, o2


def differing_columns(N: int, n1: int, n2: int) -> int:
    """Number of columns where row 2 differs between lattice indices n1 and n2."""
    return 2 * abs(n1 - n2)


# text form: one row per line, '+' for +1 and '-' for -1

def entries_to_text(entries) -> str:
    return "".join("+" if e > 0 else "-" for e in entries)


def text_to_entries(text: str) -> np.ndarray:
    bad = set(text) - {"+", "-"}
    if bad:
        raise ParameterError(f"unexpected characters in bit string: {sorted(bad)}")
    return np.array([1 if ch == "+" else -1 for ch in text], dtype=np.int8)


def single_from_text(text: str, l: int = 0) -> BitStringSingle:
    entries = text_to_entries(text.strip())
    N = len(entries)
    minus = int(np.sum(entries == -1))
    if minus % 2 == 0:
        raise ParameterError("a single-particle string has an odd number of -1 entries")
    bits = build_single(N, (minus + 1) // 2, l)
    if not np.array_equal(bits.entries, entries):
        raise ParameterError("text does not match the string layout for its composition and phase")
    return bits


def singlet_from_text(text: str) -> BitStringSinglet:
    lines = text.strip().splitlines()
    if len(lines) != 2:
        raise ParameterError("a singlet string has exactly two rows")
    r1, r2 = text_to_entries(lines[0]), text_to_entries(lines[1])
    N = len(r1)
    n = int(np.sum((r1 == 1) & (r2 == 1)))
    bits = build_singlet(N, n)
    if not (np.array_equal(bits.row1, r1) and np.array_equal(bits.row2, r2)):
        raise ParameterError("text does not match the singlet layout")
    return bits
