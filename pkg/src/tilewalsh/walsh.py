"""Rademacher, Walsh and Haar evaluation on the dyadic grid, wave packets,
and the fast Walsh-Hadamard transform in Walsh-Paley ordering.

All +-1 sign patterns are exact integers.  The only irrational scale that
ever appears is |I|^(-1/2); it is carried symbolically as a power of
sqrt(2) (see Root2Scaled) so that pairings of rational signals stay exact.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

from .dyadic import DyadicInterval, Tile


def bit_reverse(x: int, bits: int) -> int:
    r = 0
    for _ in range(bits):
        r = (r << 1) | (x & 1)
        x >>= 1
    return r


def rademacher(i: int, cell: int, L: int) -> int:
    """Value of the square wave of frequency 2^i on grid cell `cell`.

    Constant on cells only when i <= L-1; +1 on the left half of each
    period, -1 on the right half.
    """
    if not 0 <= i < L:
        raise ValueError(f"rademacher index i={i} not constant on 2^-{L} cells")
    if not 0 <= cell < (1 << L):
        raise ValueError(f"cell {cell} outside grid of 2^{L} cells")
    return -1 if (cell >> (L - 1 - i)) & 1 else 1


def walsh_value(n: int, cell: int, L: int) -> int:
    """w_n on one cell: product of Rademacher signs over the set bits of n."""
    if not 0 <= n < (1 << L):
        raise ValueError(f"walsh index n={n} outside [0, 2^{L})")
    return -1 if (n & bit_reverse(cell, L)).bit_count() & 1 else 1


@lru_cache(maxsize=4096)
def walsh(n: int, L: int) -> tuple[int, ...]:
    """Sample vector of the Walsh function w_n on the 2^L grid (Paley order)."""
    if not 0 <= n < (1 << L):
        raise ValueError(f"walsh index n={n} outside [0, 2^{L})")
    return tuple(walsh_value(n, j, L) for j in range(1 << L))


@dataclass(frozen=True)
class Root2Scaled:
    """Exact value frac * 2^(half_exp / 2); half_exp is normalized to {0, 1}."""

    frac: Fraction
    half_exp: int = 0

    @staticmethod
    def make(frac: Fraction, half_exp: int = 0) -> "Root2Scaled":
        frac = Fraction(frac)
        if frac == 0:
            return Root2Scaled(frac, 0)
        if half_exp & 1:
            shift = (half_exp - 1) // 2
            return Root2Scaled(frac * Fraction(2) ** shift, 1)
        return Root2Scaled(frac * Fraction(2) ** (half_exp // 2), 0)

    def __mul__(self, other):
        if isinstance(other, Root2Scaled):
            return Root2Scaled.make(self.frac * other.frac, self.half_exp + other.half_exp)
        return Root2Scaled.make(self.frac * other, self.half_exp)

    __rmul__ = __mul__

    def __float__(self) -> float:
        return float(self.frac) * (2.0 ** 0.5 if self.half_exp else 1.0)

    def is_rational(self) -> bool:
        return self.half_exp == 0 or self.frac == 0


@dataclass(frozen=True)
class WavePacket:
    """Walsh function rescaled to a tile's time interval, zero elsewhere.

    `pattern` holds the exact {-1, 0, +1} samples of the L-infinity
    normalized packet on the full grid; the L2-normalized packet multiplies
    it by 2^(k/2) where 2^-k is the time interval length.
    """

    tile: Tile
    L: int
    mode: str  # "inf" | "l2"
    pattern: tuple[int, ...]

    @property
    def half_exp(self) -> int:
        """L2 normalization as a power of sqrt(2): values = pattern * 2^(k/2)."""
        return self.tile.time.k if self.mode == "l2" else 0

    def values_exact(self) -> tuple[Root2Scaled, ...]:
        e = self.half_exp
        return tuple(Root2Scaled.make(Fraction(s), e) for s in self.pattern)

    def values_float(self) -> tuple[float, ...]:
        scale = 2.0 ** (self.half_exp / 2.0)
        return tuple(s * scale for s in self.pattern)


def wave_packet_pattern(P: Tile, L: int) -> tuple[int, ...]:
    """Exact sign pattern of the L-infinity normalized packet of tile P."""
    I = P.time
    if I.k > L:
        raise ValueError(f"tile time interval finer than grid: k={I.k} > L={L}")
    if not I.in_unit_interval():
        raise ValueError("tile time interval outside [0,1)")
    local_levels = L - I.k
    if P.n != 0 and P.n >= (1 << local_levels):
        raise ValueError(
            f"frequency index n={P.n} beyond grid resolution for |I|=2^-{I.k} at L={L}"
        )
    out = [0] * (1 << L)
    base = I.pos << local_levels
    if local_levels == 0:
        out[base] = 1  # single-cell tile, necessarily n = 0
    else:
        for j in range(1 << local_levels):
            out[base + j] = walsh_value(P.n, j, local_levels)
    return tuple(out)


def wave_packet(P: Tile, L: int, mode: str = "inf") -> WavePacket:
    if mode not in ("inf", "l2"):
        raise ValueError(f"unknown normalization mode {mode!r}")
    return WavePacket(P, L, mode, wave_packet_pattern(P, L))


def haar_pattern(I: DyadicInterval, L: int) -> tuple[int, ...]:
    """L-infinity normalized Haar pattern: +1 on the left half, -1 on the right."""
    return wave_packet_pattern(Tile(I, 1), L)


def fwht(samples: Sequence, normalize: bool = True) -> list:
    """Walsh coefficients of a sample vector, in Walsh-Paley order.

    coefficient[n] = 2^-L sum_j samples[j] * w_n(cell j), computed by an
    in-place butterfly after a bit-reversal permutation; exact for rational
    input.  With normalize=False the 2^-L weight is skipped.
    """
    size = len(samples)
    if size == 0 or size & (size - 1):
        raise ValueError(f"sample count {size} is not a power of two")
    L = size.bit_length() - 1
    buf = [samples[bit_reverse(j, L)] for j in range(size)]
    h = 1
    while h < size:
        for start in range(0, size, 2 * h):
            for j in range(start, start + h):
                a, b = buf[j], buf[j + h]
                buf[j], buf[j + h] = a + b, a - b
        h *= 2
    if normalize:
        w = Fraction(1, size)
        buf = [x * w for x in buf]
    return buf


def ifwht(coefficients: Sequence) -> list:
    """Inverse of fwht: samples[j] = sum_n coefficient[n] * w_n(cell j)."""
    size = len(coefficients)
    if size == 0 or size & (size - 1):
        raise ValueError(f"coefficient count {size} is not a power of two")
    L = size.bit_length() - 1
    buf = list(coefficients)
    h = 1
    while h < size:
        for start in range(0, size, 2 * h):
            for j in range(start, start + h):
                a, b = buf[j], buf[j + h]
                buf[j], buf[j + h] = a + b, a - b
        h *= 2
    return [buf[bit_reverse(j, L)] for j in range(size)]


def pairing_inf(samples: Sequence, P: Tile, L: int):
    """Integral of a sample vector against the L-infinity normalized packet.

    Returns 2^-L * sum over the tile's cells of samples[j] * pattern[j];
    exact for rational samples.
    """
    I = P.time
    pattern = wave_packet_pattern(P, L)
    acc = None
    for j in I.cells(L):
        s = pattern[j]
        if s == 0:
            continue
        term = samples[j] if s > 0 else -samples[j]
        acc = term if acc is None else acc + term
    if acc is None:
        return Fraction(0)
    return acc * Fraction(1, 1 << L)
