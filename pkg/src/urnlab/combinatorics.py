"""Sample compositions and the factorial primitives built on them.

A sample of size ``s`` drawn from ``k`` colors is recorded as a composition
``(s_1, ..., s_k)`` of ``s`` into nonnegative parts.  Compositions are listed
in reverse-lexicographic order: ``x`` precedes ``y`` when they agree on a
prefix and ``x`` is larger at the first position where they differ.  The
first composition is ``s*e_1`` and the last is ``s*e_k``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Sequence

from .errors import InvalidArgument

__all__ = [
    "Composition",
    "count_compositions",
    "iter_compositions",
    "enumerate_compositions",
    "composition_rank",
    "falling_factorial",
    "multinomial",
    "format_label",
]


@dataclass(frozen=True)
class Composition:
    parts: tuple[int, ...]
    rank: int

    @property
    def k(self) -> int:
        return len(self.parts)

    @property
    def s(self) -> int:
        return sum(self.parts)

    @property
    def label(self) -> str:
        return format_label(self.parts)

    def __iter__(self):
        return iter(self.parts)

    def __len__(self):
        return len(self.parts)

    def __getitem__(self, i):
        return self.parts[i]


def format_label(parts: Sequence[int]) -> str:
    """Row label in the style ``201``; parts above 9 are comma separated."""
    if all(0 <= p <= 9 for p in parts):
        return "".join(str(p) for p in parts)
    return ",".join(str(p) for p in parts)


def _check_ks(k: int, s: int) -> None:
    if int(k) != k or int(s) != s:
        raise InvalidArgument(f"k and s must be integers, got k={k!r}, s={s!r}")
    if k < 1 or s < 1:
        raise InvalidArgument(f"need k >= 1 and s >= 1, got k={k}, s={s}")


def count_compositions(k: int, s: int) -> int:
    """Number of compositions of ``s`` into ``k`` nonnegative parts."""
    _check_ks(k, s)
    return math.comb(s + k - 1, s)


def _successor(x: list[int]) -> bool:
    # Rightmost nonzero entry that is not the last one gives one unit to
    # its right neighbour, which also collects everything further right.
    k = len(x)
    for r in range(k - 2, -1, -1):
        if x[r] > 0:
            tail = sum(x[r + 1:])
            x[r] -= 1
            x[r + 1] = tail + 1
            for j in range(r + 2, k):
                x[j] = 0
            return True
    return False


def iter_compositions(k: int, s: int) -> Iterator[Composition]:
    """Stream compositions in reverse-lex order without materializing them."""
    _check_ks(k, s)
    x = [s] + [0] * (k - 1)
    rank = 0
    while True:
        yield Composition(tuple(x), rank)
        if not _successor(x):
            return
        rank += 1


def enumerate_compositions(k: int, s: int) -> list[Composition]:
    return list(iter_compositions(k, s))


def composition_rank(parts: Sequence[int]) -> int:
    """Position of ``parts`` in the reverse-lex enumeration (0-based)."""
    parts = [int(p) for p in parts]
    k, s = len(parts), sum(parts)
    if any(p < 0 for p in parts):
        raise InvalidArgument(f"negative part in {parts}")
    _check_ks(k, s)
    rank = 0
    remaining = s
    for i in range(k - 1):
        # every composition with a larger value at position i comes first
        slots = k - i - 1
        for v in range(parts[i] + 1, remaining + 1):
            rank += math.comb(remaining - v + slots - 1, slots - 1)
        remaining -= parts[i]
    return rank


def falling_factorial(z, r: int):
    """``z (z-1) ... (z-r+1)``, with ``(z)_0 = 1``.

    Integer ``z`` gives an exact Python integer; anything else is multiplied
    in the type of ``z``.
    """
    if int(r) != r or r < 0:
        raise InvalidArgument(f"r must be a nonnegative integer, got {r!r}")
    out = 1
    for j in range(int(r)):
        out = out * (z - j)
    return out


def multinomial(s: int, c) -> int:
    parts = tuple(c.parts) if isinstance(c, Composition) else tuple(int(p) for p in c)
    if any(p < 0 for p in parts):
        raise InvalidArgument(f"negative part in {parts}")
    if sum(parts) != s:
        raise InvalidArgument(f"parts {parts} do not sum to s={s}")
    out = math.factorial(s)
    for p in parts:
        out //= math.factorial(p)
    return out
