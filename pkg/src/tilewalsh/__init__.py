"""Discrete Walsh time-frequency analysis on the dyadic grid.

Exact integer-indexed tiles and bitiles, Walsh/Haar wave packets with a
fast Walsh-Hadamard transform, the linearized Carleson operator in direct
and bitile form, and greedy density/size tree decompositions that emit
machine-checkable certificates.
"""

from .certificates import Certificate
from .dyadic import Bitile, BitileUniverse, DyadicInterval, Tile, bitile_universe
from .signal import FrequencyChoice, LevelSet, NormPlugin, Signal
from .timefreq import Tree, TreeFamily

__all__ = [
    "Bitile",
    "BitileUniverse",
    "Certificate",
    "DyadicInterval",
    "FrequencyChoice",
    "LevelSet",
    "NormPlugin",
    "Signal",
    "Tile",
    "Tree",
    "TreeFamily",
    "bitile_universe",
]

__version__ = "0.1.0"
