"""Integer-indexed dyadic intervals, tiles and bitiles on the unit interval.

Everything here is exact: intervals are (scale, position) pairs, frequency
windows are integer ranges, and all order relations reduce to integer shifts
and comparisons.  No floating point enters this module.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator


@dataclass(frozen=True, order=True)
class DyadicInterval:
    """The half-open interval [pos * 2^-k, (pos + 1) * 2^-k)."""

    k: int
    pos: int

    def __post_init__(self) -> None:
        if self.k < 0 or self.pos < 0:
            raise ValueError(f"invalid dyadic interval (k={self.k}, pos={self.pos})")

    @property
    def length(self) -> Fraction:
        return Fraction(1, 1 << self.k)

    @property
    def left(self) -> Fraction:
        return Fraction(self.pos, 1 << self.k)

    @property
    def right(self) -> Fraction:
        return Fraction(self.pos + 1, 1 << self.k)

    def contains(self, other: "DyadicInterval") -> bool:
        """True iff other is a subset of self."""
        return other.k >= self.k and (other.pos >> (other.k - self.k)) == self.pos

    def strictly_contains(self, other: "DyadicInterval") -> bool:
        return self.contains(other) and self != other

    def disjoint_from(self, other: "DyadicInterval") -> bool:
        return not (self.contains(other) or other.contains(self))

    def parent(self) -> "DyadicInterval":
        if self.k == 0:
            raise ValueError("interval at scale 0 has no parent inside [0,1)")
        return DyadicInterval(self.k - 1, self.pos >> 1)

    def halves(self) -> tuple["DyadicInterval", "DyadicInterval"]:
        return (
            DyadicInterval(self.k + 1, 2 * self.pos),
            DyadicInterval(self.k + 1, 2 * self.pos + 1),
        )

    def cells(self, levels: int) -> range:
        """Grid cell indices covered at resolution 2^levels."""
        if levels < self.k:
            raise ValueError(f"interval finer than grid: k={self.k} > L={levels}")
        width = 1 << (levels - self.k)
        return range(self.pos * width, (self.pos + 1) * width)

    def in_unit_interval(self) -> bool:
        return self.pos < (1 << self.k)


def unit_intervals(max_k: int) -> Iterator[DyadicInterval]:
    """All dyadic subintervals of [0,1) with scale exponent at most max_k."""
    for k in range(max_k + 1):
        for pos in range(1 << k):
            yield DyadicInterval(k, pos)


@dataclass(frozen=True, order=True)
class Tile:
    """Area-1 rectangle: time interval I and frequency window |I|^-1 [n, n+1)."""

    time: DyadicInterval
    n: int

    def __post_init__(self) -> None:
        if self.n < 0:
            raise ValueError(f"negative frequency index {self.n}")

    # Frequency endpoints n * 2^k and (n+1) * 2^k as exact integers.
    @property
    def freq_lo(self) -> int:
        return self.n << self.time.k

    @property
    def freq_hi(self) -> int:
        return (self.n + 1) << self.time.k


def _freq_superset(lo1: int, hi1: int, lo2: int, hi2: int) -> bool:
    """[lo1, hi1) contains [lo2, hi2)."""
    return lo1 <= lo2 and hi2 <= hi1


def tile_le(p: Tile, p2: Tile) -> bool:
    """Time-frequency order: I_p inside I_p2 while the frequency window widens."""
    return p2.time.contains(p.time) and _freq_superset(
        p.freq_lo, p.freq_hi, p2.freq_lo, p2.freq_hi
    )


def tiles_disjoint(p: Tile, p2: Tile) -> bool:
    """Disjointness of the rectangles in the phase plane."""
    if p.time.disjoint_from(p2.time):
        return True
    return p.freq_hi <= p2.freq_lo or p2.freq_hi <= p.freq_lo


@dataclass(frozen=True, order=True)
class Bitile:
    """Area-2 rectangle: I x |I|^-1 [2m, 2m+2), split into down- and up-tiles."""

    time: DyadicInterval
    m: int

    def __post_init__(self) -> None:
        if self.m < 0:
            raise ValueError(f"negative frequency pair index {self.m}")

    @property
    def down(self) -> Tile:
        return Tile(self.time, 2 * self.m)

    @property
    def up(self) -> Tile:
        return Tile(self.time, 2 * self.m + 1)

    @property
    def freq_lo(self) -> int:
        return (2 * self.m) << self.time.k

    @property
    def freq_hi(self) -> int:
        return (2 * self.m + 2) << self.time.k

    @property
    def freq_center(self) -> int:
        """Center of the frequency window; exact integer (2m+1) * 2^k."""
        return (2 * self.m + 1) << self.time.k

    def key(self) -> tuple[int, int, int]:
        """Canonical total order used for all deterministic tie-breaks."""
        return (self.time.k, self.time.pos, self.m)

    def to_json(self) -> dict:
        return {"k": self.time.k, "pos": self.time.pos, "m": self.m}

    @staticmethod
    def from_json(obj: dict) -> "Bitile":
        return Bitile(DyadicInterval(int(obj["k"]), int(obj["pos"])), int(obj["m"]))


def bitile_le(P: Bitile, P2: Bitile) -> bool:
    return P2.time.contains(P.time) and _freq_superset(
        P.freq_lo, P.freq_hi, P2.freq_lo, P2.freq_hi
    )


def bitile_lt(P: Bitile, P2: Bitile) -> bool:
    return P != P2 and bitile_le(P, P2)


def bitile_le_d(P: Bitile, P2: Bitile) -> bool:
    return tile_le(P.down, P2.down)


def bitile_le_u(P: Bitile, P2: Bitile) -> bool:
    return tile_le(P.up, P2.up)


def bitiles_overlap(P: Bitile, P2: Bitile) -> bool:
    return not (
        P.time.disjoint_from(P2.time)
        or P.freq_hi <= P2.freq_lo
        or P2.freq_hi <= P.freq_lo
    )


MAX_LEVELS = 20


@dataclass(frozen=True)
class BitileUniverse:
    """All bitiles relevant at resolution 2^L, in canonical (k, pos, m) order.

    A bitile qualifies when its time interval sits inside [0,1) with
    |I| >= 2^-L and its up-tile frequency window meets [0, 2^L]; the closed
    right endpoint keeps the bitiles whose up-tiles fire exactly at the full
    cutoff N = 2^L, so that reconstruction at the top cutoff stays inside
    the universe.
    """

    L: int
    items: tuple[Bitile, ...]

    def __contains__(self, P: Bitile) -> bool:
        return P in self._index

    @property
    def _index(self) -> frozenset:
        # frozen dataclass: cache via object.__setattr__ on first use
        cached = self.__dict__.get("_index_cache")
        if cached is None:
            cached = frozenset(self.items)
            object.__setattr__(self, "_index_cache", cached)
        return cached


def bitile_universe(L: int) -> BitileUniverse:
    """Enumerate the finite bitile universe at resolution exponent L."""
    if not 1 <= L <= MAX_LEVELS:
        raise ValueError(f"resolution exponent L={L} outside [1, {MAX_LEVELS}]")
    items: list[Bitile] = []
    top = 1 << L
    for k in range(L + 1):
        for pos in range(1 << k):
            m = 0
            # up-tile window [(2m+1)*2^k, (2m+2)*2^k) must meet [0, 2^L]
            while (2 * m + 1) << k <= top:
                items.append(Bitile(DyadicInterval(k, pos), m))
                m += 1
    items.sort(key=Bitile.key)
    return BitileUniverse(L, tuple(items))


def universe_size(L: int) -> int:
    """Closed-form count: scales k < L give 2^(L-1) each, k = L gives 2^L."""
    return L * (1 << (L - 1)) + (1 << L)
