"""Deterministic pseudo-random instance generation.

All randomness flows through a splitmix64 stream so that instances are
reproducible bit-for-bit from a seed, independently of Python's hash
randomization or platform.  Signal values are rationals with denominator
2^16.
"""

from __future__ import annotations

from fractions import Fraction
from math import ceil

from .dyadic import Bitile, bitile_universe
from .signal import FrequencyChoice, LevelSet, NormPlugin, Signal, value_norm

MASK64 = (1 << 64) - 1
VALUE_DENOM_BITS = 16


class SplitMix64:
    """splitmix64: 64-bit state advanced by the golden-gamma increment."""

    def __init__(self, seed: int) -> None:
        self.state = seed & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        return z ^ (z >> 31)

    def below(self, n: int) -> int:
        """Uniform integer in [0, n) by rejection."""
        if n <= 0:
            raise ValueError("need a positive bound")
        limit = MASK64 - (MASK64 % n)
        while True:
            x = self.next_u64()
            if x < limit:
                return x % n

    def fraction(self) -> Fraction:
        """Uniform rational in [-1, 1) with denominator 2^16."""
        num = self.below(1 << (VALUE_DENOM_BITS + 1)) - (1 << VALUE_DENOM_BITS)
        return Fraction(num, 1 << VALUE_DENOM_BITS)

    def shuffle(self, items: list) -> None:
        for i in range(len(items) - 1, 0, -1):
            j = self.below(i + 1)
            items[i], items[j] = items[j], items[i]


def gen_signal(L: int, d: int, kind: str, rng: SplitMix64) -> Signal:
    def one_value():
        if kind == "matrix":
            return tuple(
                tuple(rng.fraction() for _ in range(d)) for _ in range(d)
            )
        return tuple(rng.fraction() for _ in range(d))

    return Signal(L, d, kind, tuple(one_value() for _ in range(1 << L)))


def gen_dual_function(
    L: int, d: int, kind: str, plugin: NormPlugin, rng: SplitMix64
) -> Signal:
    """Random signal scaled cellwise so the pointwise dual norm is <= 1.

    The scale is the rational 1/ceil(norm) so values stay exact.
    """
    raw = gen_signal(L, d, kind, rng)
    dual = plugin.dual()
    vals = []
    for v in raw.samples:
        n = value_norm(v, dual)
        scale = Fraction(1, max(1, ceil(n * (1 + 1e-12))))
        vals.append(_scale_value(v, scale))
    return Signal(L, d, kind, tuple(vals))


def _scale_value(v, c):
    if isinstance(v, tuple):
        return tuple(_scale_value(x, c) for x in v)
    return v * c


def gen_levelset(L: int, measure, rng: SplitMix64) -> LevelSet:
    """Cell union with popcount floor(measure * 2^L), cells chosen by a
    seeded shuffle."""
    cells = list(range(1 << L))
    rng.shuffle(cells)
    count = int(Fraction(measure) * (1 << L))
    return LevelSet.from_cells(L, cells[:count])


def gen_nfun(L: int, rng: SplitMix64) -> FrequencyChoice:
    """Uniform cutoffs over the closed range [0, 2^L]."""
    top = (1 << L) + 1
    return FrequencyChoice(L, tuple(rng.below(top) for _ in range(1 << L)))


def gen_collection(L: int, count: int, rng: SplitMix64) -> list[Bitile]:
    """Random subset of the bitile universe, canonical order, no repeats."""
    items = list(bitile_universe(L).items)
    rng.shuffle(items)
    picked = items[: min(count, len(items))]
    picked.sort(key=Bitile.key)
    return picked


def gen_up_tree_members(L: int, top: Bitile, count: int, rng: SplitMix64) -> list[Bitile]:
    """Random members below `top` in the up-tile order, drawn from the
    universe at resolution L."""
    from .dyadic import bitile_le_u

    pool = [P for P in bitile_universe(L).items if bitile_le_u(P, top)]
    rng.shuffle(pool)
    picked = pool[: min(count, len(pool))]
    picked.sort(key=Bitile.key)
    return picked


def gen_tree_members(L: int, top: Bitile, count: int, rng: SplitMix64) -> list[Bitile]:
    """Random members below `top` in the full tile order."""
    from .dyadic import bitile_le

    pool = [P for P in bitile_universe(L).items if bitile_le(P, top)]
    rng.shuffle(pool)
    picked = pool[: min(count, len(pool))]
    picked.sort(key=Bitile.key)
    return picked


def gen_tree_family(L: int, rng: SplitMix64, members_per_tree: int = 6):
    """Random family of up-trees over a random dyadic partition of [0,1).

    Tops sit on pairwise disjoint time intervals, and members of a single
    up-tree automatically have pairwise disjoint down-tiles, so the family
    is always admissible for tile-type estimation.  Members at the finest
    scale are excluded so every Haar pattern stays grid-constant.
    """
    from .dyadic import DyadicInterval
    from .timefreq import Tree, TreeFamily

    parts: list[DyadicInterval] = []

    def split(I: DyadicInterval) -> None:
        if I.k < L - 1 and rng.below(2) == 0:
            left, right = I.halves()
            split(left)
            split(right)
        else:
            parts.append(I)

    split(DyadicInterval(0, 0))
    trees = []
    for I in parts:
        m_count = 1 << (L - I.k - 1) if I.k < L else 1
        top = Bitile(I, rng.below(m_count))
        members = [
            P
            for P in gen_up_tree_members(L, top, members_per_tree, rng)
            if P.time.k < L
        ]
        if members:
            trees.append(Tree.build(top, members))
    return TreeFamily(tuple(trees))
