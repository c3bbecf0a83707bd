"""Trees of bitiles, the up-tree sign identity, density and size
functionals, and the tree-lemma sums with their interval diagnostics."""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, Sequence

from .certificates import Certificate
from .dyadic import (
    Bitile,
    DyadicInterval,
    bitile_le,
    bitile_le_d,
    bitile_le_u,
    tiles_disjoint,
)
from .signal import (
    FrequencyChoice,
    LevelSet,
    NormPlugin,
    Signal,
    value_norm,
    value_norm_pow,
)
from .walsh import bit_reverse, walsh, walsh_value


# ---------------------------------------------------------------------------
# trees

@dataclass(frozen=True)
class Tree:
    """A top bitile together with member bitiles below it in the tile order.

    The top need not be a member.  up_part() filters members below the top
    in the up-tile order (used by the size functional); split() separates
    the down-ordered members from the rest (used by the tree-lemma sums).
    """

    top: Bitile
    members: tuple[Bitile, ...]

    def __post_init__(self) -> None:
        for P in self.members:
            if not bitile_le(P, self.top):
                raise ValueError(f"member {P} not below top {self.top}")

    @staticmethod
    def build(top: Bitile, members: Iterable[Bitile]) -> "Tree":
        return Tree(top, tuple(sorted(set(members), key=Bitile.key)))

    def up_part(self) -> tuple[Bitile, ...]:
        return tuple(P for P in self.members if bitile_le_u(P, self.top))

    def split(self) -> tuple[tuple[Bitile, ...], tuple[Bitile, ...]]:
        """(down members, remaining members); the top itself counts as down."""
        down = tuple(P for P in self.members if bitile_le_d(P, self.top))
        down_set = set(down)
        rest = tuple(P for P in self.members if P not in down_set)
        return down, rest

    @property
    def time(self) -> DyadicInterval:
        return self.top.time

    def to_json(self) -> dict:
        return {
            "top": self.top.to_json(),
            "members": [P.to_json() for P in self.members],
        }

    @staticmethod
    def from_json(obj: dict) -> "Tree":
        return Tree.build(
            Bitile.from_json(obj["top"]),
            (Bitile.from_json(p) for p in obj["members"]),
        )


@dataclass(frozen=True)
class TreeFamily:
    """A list of trees; tile-type estimation requires all down-tiles of all
    (member, tree) pairs to be pairwise disjoint."""

    trees: tuple[Tree, ...]

    def down_disjointness_violations(self) -> list[tuple[Bitile, int, Bitile, int]]:
        pairs = [
            (P, idx) for idx, tree in enumerate(self.trees) for P in tree.members
        ]
        bad = []
        for a in range(len(pairs)):
            Pa, ia = pairs[a]
            for b in range(a + 1, len(pairs)):
                Pb, ib = pairs[b]
                if not tiles_disjoint(Pa.down, Pb.down):
                    bad.append((Pa, ia, Pb, ib))
        return bad


# ---------------------------------------------------------------------------
# ancestor enumeration

def bitile_ancestors(P: Bitile) -> Iterator[Bitile]:
    """All bitiles above P in the tile order with time interval in [0,1),
    in a fixed deterministic order (coarser scales first)."""
    k, pos, m = P.time.k, P.time.pos, P.m
    for kp in range(k + 1):
        delta = k - kp
        posp = pos >> delta
        # frequency windows [2m' 2^kp, (2m'+2) 2^kp) inside [2m 2^k, (2m+2) 2^k)
        first = m << delta
        for mp in range(first, first + (1 << delta)):
            yield Bitile(DyadicInterval(kp, posp), mp)


def up_ancestors(P: Bitile) -> Iterator[Bitile]:
    """All bitiles T with P below T in the up-tile order, I_T in [0,1)."""
    k, pos, m = P.time.k, P.time.pos, P.m
    for kp in range(k + 1):
        delta = k - kp
        posp = pos >> delta
        if delta == 0:
            yield Bitile(DyadicInterval(kp, posp), m)
            continue
        # odd o = 2m'+1 with (2m+1) 2^delta <= o and o+1 <= (2m+2) 2^delta
        o = ((2 * m + 1) << delta) + 1
        end = ((2 * m + 2) << delta) - 1
        while o <= end:
            yield Bitile(DyadicInterval(kp, posp), (o - 1) // 2)
            o += 2


# ---------------------------------------------------------------------------
# the up-tree sign identity

def epsilon_pt(P: Bitile, T: Bitile) -> int:
    """Constant sign relating the down packet of P to the up packet of T
    times the Haar pattern of I_P, for P below T in the up-tile order.

    Evaluates the finished digit product at the left endpoint of I_P; any
    interior point gives the same value.
    """
    if not bitile_le_u(P, T):
        raise ValueError(f"{P} is not below {T} in the up-tile order")
    k = P.time.k - T.time.k
    if k == 0:
        return 1
    p_loc = P.time.pos - (T.time.pos << k)
    n_t = 2 * T.m + 1
    bits = (n_t & ((1 << k) - 1)) & bit_reverse(p_loc, k)
    return -1 if bits.bit_count() & 1 else 1


def verify_tree_identity(P: Bitile, T: Bitile, L: int) -> bool:
    """Pointwise exact check that the down packet of P equals
    epsilon_pt * (up packet of T, sup-normalized) * (Haar function of I_P)
    on every grid cell."""
    if not bitile_le_u(P, T):
        raise ValueError(f"{P} is not below {T} in the up-tile order")
    if P.time.k >= L:
        raise ValueError("Haar pattern of I_P not grid-constant at this resolution")
    n_t = 2 * T.m + 1
    if n_t >= (1 << (L - T.time.k)):
        raise ValueError("up packet of T oscillates below cell scale")
    eps = epsilon_pt(P, T)
    kP, kT = P.time.k, T.time.k
    n_d = 2 * P.m
    if n_d >= (1 << (L - kP)):
        raise ValueError("down packet of P oscillates below cell scale")
    baseP = P.time.pos << (L - kP)
    baseT = T.time.pos << (L - kT)
    half = 1 << (L - kP - 1)
    for jl in range(1 << (L - kP)):
        j = baseP + jl
        lhs = walsh_value(n_d, jl, L - kP) if L > kP else 1
        wT = walsh_value(n_t, j - baseT, L - kT)
        haar = 1 if jl < half else -1
        if lhs != eps * wT * haar:
            return False
    return True


# ---------------------------------------------------------------------------
# wave packet sums over member sets

def down_coefficients_inf(f: Signal, members: Sequence[Bitile]) -> dict[Bitile, list[Fraction]]:
    """Sup-normalized pairings of every component of f with each member's
    down packet; exact rationals."""
    comps = f.components()
    weight = Fraction(1, f.cells)
    out: dict[Bitile, list[Fraction]] = {}
    for P in members:
        k = P.time.k
        local = f.L - k
        base = P.time.pos << local
        pattern = walsh(2 * P.m, local) if local else (1,)
        coeffs = []
        for comp in comps:
            acc = Fraction(0)
            for jl, s in enumerate(pattern):
                acc = acc + comp[base + jl] if s > 0 else acc - comp[base + jl]
            coeffs.append(acc * weight)
        out[P] = coeffs
    return out


def down_packet_sum(
    members: Sequence[Bitile],
    f: Signal,
    coeffs: dict[Bitile, list[Fraction]] | None = None,
    signs: dict[Bitile, int] | None = None,
    cell_mask: dict[Bitile, LevelSet] | None = None,
) -> Signal:
    """sum over members of <f, down packet> * down packet, optionally with
    per-member signs and per-member cell restrictions; exact."""
    if coeffs is None:
        coeffs = down_coefficients_inf(f, members)
    ncomp = len(f.components())
    out = [[Fraction(0)] * f.cells for _ in range(ncomp)]
    for P in members:
        k = P.time.k
        local = f.L - k
        base = P.time.pos << local
        pattern = walsh(2 * P.m, local) if local else (1,)
        eps = 1 if signs is None else signs[P]
        factor = Fraction(eps * (1 << k))
        mask = cell_mask.get(P) if cell_mask is not None else None
        for i in range(ncomp):
            c = coeffs[P][i] * factor
            if c == 0:
                continue
            row = out[i]
            for jl, s in enumerate(pattern):
                j = base + jl
                if mask is not None and j not in mask:
                    continue
                row[j] = row[j] + c if s > 0 else row[j] - c
    return f.with_components(out)


# ---------------------------------------------------------------------------
# density

class DensityCounter:
    """Per-interval cumulative histograms of the cutoff values over the
    cells of a level set; supports O(1) exact window counts."""

    def __init__(self, E: LevelSet, Nfun: FrequencyChoice) -> None:
        if E.L != Nfun.L:
            raise ValueError("resolution mismatch between set and cutoff choice")
        self.L = E.L
        top = (1 << self.L) + 1  # cutoffs live in [0, 2^L]
        self.top = top
        cells = 1 << self.L
        # hist[(k, pos)] = cumulative counts: entry t = #cells in I, in E, N < t
        self.cum: dict[tuple[int, int], list[int]] = {}
        level = []
        for j in range(cells):
            h = [0] * (top + 1)
            if j in E:
                for t in range(Nfun[j] + 1, top + 1):
                    h[t] = 1
            level.append(h)
            self.cum[(self.L, j)] = h
        k = self.L
        while k > 0:
            nxt = []
            for i in range(len(level) // 2):
                a, b = level[2 * i], level[2 * i + 1]
                h = [x + y for x, y in zip(a, b)]
                nxt.append(h)
                self.cum[(k - 1, i)] = h
            level = nxt
            k -= 1

    def count(self, I: DyadicInterval, freq_lo: int, freq_hi: int) -> int:
        """Number of cells of I in E whose cutoff lies in [freq_lo, freq_hi)."""
        lo = min(freq_lo, self.top)
        hi = min(freq_hi, self.top)
        if hi <= lo:
            return 0
        h = self.cum[(I.k, I.pos)]
        return h[hi] - h[lo]


def local_density(
    P: Bitile, counter: DensityCounter
) -> tuple[Fraction, Bitile]:
    """Largest occupied fraction over the ancestors of P, with the first
    maximizing ancestor (deterministic enumeration order) as witness."""
    best = Fraction(0)
    witness = P
    for Pp in bitile_ancestors(P):
        cnt = counter.count(Pp.time, Pp.freq_lo, Pp.freq_hi)
        if cnt == 0:
            continue
        frac = Fraction(cnt, 1 << (counter.L - Pp.time.k))
        if frac > best:
            best = frac
            witness = Pp
    return best, witness


def density(
    coll: Iterable[Bitile],
    E: LevelSet,
    Nfun: FrequencyChoice,
    counter: DensityCounter | None = None,
) -> Fraction:
    """Density of a bitile collection relative to the set E and cutoff N."""
    if counter is None:
        counter = DensityCounter(E, Nfun)
    best = Fraction(0)
    for P in coll:
        frac, _ = local_density(P, counter)
        if frac > best:
            best = frac
    return best


def up_cells(P: Bitile, E: LevelSet, Nfun: FrequencyChoice) -> list[int]:
    """Cells of E inside I_P whose cutoff lands in the up-tile window of P."""
    lo, hi = P.up.freq_lo, P.up.freq_hi
    return [
        j for j in P.time.cells(E.L) if j in E and lo <= Nfun[j] < hi
    ]


# ---------------------------------------------------------------------------
# size

def tree_delta_pow(
    tree: Tree,
    f: Signal,
    q,
    plugin: NormPlugin,
    coeffs: dict[Bitile, list[Fraction]] | None = None,
):
    """q-th power of the normalized L^q mass of the up-part packet sum;
    exact Fraction where representable, float otherwise."""
    up = tree.up_part()
    if not up:
        return Fraction(0)
    if coeffs is None:
        coeffs = down_coefficients_inf(f, up)
    is_q2 = (q == 2) and (
        plugin.name == "euclidean" or (plugin.name == "schatten" and plugin.p == 2)
    )
    if is_q2:
        # distinct up-tree members carry orthogonal down packets, so the
        # quadratic mass collapses to a coefficient sum
        acc = Fraction(0)
        exact = True
        for P in up:
            scale = 1 << P.time.k
            for c in coeffs[P]:
                if not isinstance(c, Fraction):
                    exact = False
                    break
                acc += c * c * scale
            if not exact:
                break
        if exact:
            return acc * (1 << tree.top.time.k)
    g = down_packet_sum(up, f, coeffs=coeffs)
    scale = Fraction(1 << tree.top.time.k, f.cells)
    acc_exact = Fraction(0)
    for v in g.samples:
        nv = value_norm_pow(v, plugin, q)
        if nv is None:
            break
        acc_exact += nv
    else:
        return acc_exact * scale
    total = 0.0
    qf = float(q)
    for v in g.samples:
        total += value_norm(v, plugin) ** qf
    return total * float(scale)


def tree_delta(tree: Tree, f: Signal, q, plugin: NormPlugin) -> float:
    pow_val = tree_delta_pow(tree, f, q, plugin)
    return float(pow_val) ** (1.0 / float(q))


def hilbert_member_weights(
    coll: Sequence[Bitile], coeffs: dict[Bitile, list[Fraction]]
) -> dict[Bitile, Fraction]:
    """Per-member quadratic mass 2^k sum of squared coefficients; the
    building block of the q = 2 Parseval evaluation of Delta."""
    return {
        P: sum((c * c for c in coeffs[P]), Fraction(0)) * (1 << P.time.k)
        for P in coll
    }


def hilbert_top_sums(
    coll: Sequence[Bitile], weights: dict[Bitile, Fraction]
) -> dict[Bitile, Fraction]:
    """For every candidate top, the sum of member weights below it in the
    up-tile order.  Delta(T)^2 of the complete up-tree is sum * 2^{k_T}."""
    sums: dict[Bitile, Fraction] = {}
    for P in sorted(coll, key=Bitile.key):
        w = weights[P]
        for T in up_ancestors(P):
            sums[T] = sums.get(T, Fraction(0)) + w
    return sums


def candidate_tops(coll: Iterable[Bitile]) -> list[Bitile]:
    """All grid bitiles that dominate some collection member in the up-tile
    order, in canonical order."""
    tops: set[Bitile] = set()
    for P in coll:
        tops.update(up_ancestors(P))
    return sorted(tops, key=Bitile.key)


def complete_up_tree(top: Bitile, coll: Iterable[Bitile]) -> Tree:
    return Tree.build(top, (P for P in coll if bitile_le_u(P, top)))


def size_pow(
    coll: Sequence[Bitile],
    f: Signal,
    q,
    plugin: NormPlugin,
    tops: Sequence[Bitile] | None = None,
    coeffs: dict[Bitile, list[Fraction]] | None = None,
):
    """(q-th power of size, witness tree).  The size is computed over the
    complete up-tree below every candidate top; for the Hilbert q = 2 case
    this equals the supremum over all up-subtrees."""
    coll = list(coll)
    if not coll:
        return Fraction(0), None
    if coeffs is None:
        coeffs = down_coefficients_inf(f, coll)
    is_q2 = (q == 2) and (
        plugin.name == "euclidean" or (plugin.name == "schatten" and plugin.p == 2)
    )
    if is_q2 and tops is None:
        # Parseval: Delta^2 of every complete up-tree from one sweep
        weights = hilbert_member_weights(coll, coeffs)
        sums = hilbert_top_sums(coll, weights)
        best = Fraction(0)
        best_top = None
        for T in sorted(sums, key=Bitile.key):
            val = sums[T] * (1 << T.time.k)
            if val > best:
                best = val
                best_top = T
        witness = complete_up_tree(best_top, coll) if best_top is not None else None
        return best, witness
    if tops is None:
        tops = candidate_tops(coll)
    best = Fraction(0)
    witness = None
    for T in tops:
        tree = complete_up_tree(T, coll)
        if not tree.members:
            continue
        val = tree_delta_pow(tree, f, q, plugin, coeffs=coeffs)
        if _pow_gt(val, best):
            best = val
            witness = tree
    return best, witness


def _pow_gt(a, b) -> bool:
    if isinstance(a, Fraction) and isinstance(b, Fraction):
        return a > b
    return float(a) > float(b)


def size(
    coll: Sequence[Bitile],
    f: Signal,
    q,
    plugin: NormPlugin,
    tops: Sequence[Bitile] | None = None,
) -> tuple[float, Tree | None]:
    pow_val, witness = size_pow(coll, f, q, plugin, tops)
    return float(pow_val) ** (1.0 / float(q)), witness


# ---------------------------------------------------------------------------
# tree-lemma machinery

def member_form_products(
    tree_members: Sequence[Bitile],
    f: Signal,
    g: Signal,
    E: LevelSet,
    Nfun: FrequencyChoice,
) -> dict[Bitile, Fraction]:
    """Signed per-member bilinear terms
    < <f, down packet>, <down packet, g restricted to E_{P_u}> >; exact."""
    fco = down_coefficients_inf(f, tree_members)
    terms: dict[Bitile, Fraction] = {}
    gcomps = g.components()
    weight = Fraction(1, g.cells)
    for P in tree_members:
        k = P.time.k
        local = g.L - k
        base = P.time.pos << local
        pattern = walsh(2 * P.m, local) if local else (1,)
        lo, hi = P.up.freq_lo, P.up.freq_hi
        gvec = []
        for comp in gcomps:
            acc = Fraction(0)
            for jl, s in enumerate(pattern):
                j = base + jl
                if j in E and lo <= Nfun[j] < hi:
                    acc = acc + comp[j] if s > 0 else acc - comp[j]
            gvec.append(acc * weight)
        fvec = fco[P]
        prod = Fraction(0)
        for a, b in zip(fvec, gvec):
            prod += a * b
        terms[P] = prod * (1 << k)
    return terms


def member_form_terms(
    tree_members: Sequence[Bitile],
    f: Signal,
    g: Signal,
    E: LevelSet,
    Nfun: FrequencyChoice,
) -> dict[Bitile, Fraction]:
    """Absolute values of member_form_products."""
    return {
        P: abs(v)
        for P, v in member_form_products(tree_members, f, g, E, Nfun).items()
    }


def maximal_gap_intervals(members: Sequence[Bitile], L: int) -> list[DyadicInterval]:
    """Maximal dyadic intervals inside the union of member time intervals
    that contain no member time interval."""
    times = {P.time for P in members}
    covered = set()
    for I in times:
        covered.update(I.cells(L))
    out: list[DyadicInterval] = []

    def walk(J: DyadicInterval) -> None:
        cells = set(J.cells(L))
        if not cells & covered:
            return
        if cells <= covered and not any(J.contains(I) for I in times):
            out.append(J)
            return
        if J.k == L:
            return
        a, b = J.halves()
        walk(a)
        walk(b)

    walk(DyadicInterval(0, 0))
    return sorted(out)


def gap_set(
    J: DyadicInterval,
    members: Sequence[Bitile],
    E: LevelSet,
    Nfun: FrequencyChoice,
) -> LevelSet:
    """Cells of J covered by some E_{P_u} with I_P strictly containing J."""
    mask = 0
    for P in members:
        if not P.time.strictly_contains(J):
            continue
        lo, hi = P.up.freq_lo, P.up.freq_hi
        for j in J.cells(E.L):
            if j in E and lo <= Nfun[j] < hi:
                mask |= 1 << j
    return LevelSet(E.L, mask)


def gj_certificate(
    tree: Tree, E: LevelSet, Nfun: FrequencyChoice
) -> list[Certificate]:
    """For every maximal gap interval J, the exact check
    |G_J| <= 2 density(tree) |J|."""
    dens = density(tree.members, E, Nfun)
    certs = []
    for J in maximal_gap_intervals(tree.members, E.L):
        GJ = gap_set(J, tree.members, E, Nfun)
        certs.append(
            Certificate.make(
                "gap_interval_measure",
                GJ.measure,
                2 * dens * J.length,
                theorem_backed=True,
                context={"J": {"k": J.k, "pos": J.pos}, "cells": GJ.count},
            )
        )
    return certs


def tree_form_sum(
    tree: Tree,
    f: Signal,
    g: Signal,
    E: LevelSet,
    Nfun: FrequencyChoice,
    q=2,
    plugin: NormPlugin | None = None,
) -> tuple[Fraction, dict]:
    """Exact bilinear tree sum plus the interval diagnostics used to bound
    it: gap intervals, their occupied subsets, and the down/up split sums."""
    if plugin is None:
        plugin = NormPlugin("euclidean")
    dual = plugin.dual()
    if any(value_norm(v, dual) > 1 + 1e-9 for v in g.samples):
        warnings.warn("dual function exceeds pointwise norm one", stacklevel=2)
    products = member_form_products(tree.members, f, g, E, Nfun)
    lhs = sum((abs(v) for v in products.values()), Fraction(0))

    dens = density(tree.members, E, Nfun)
    size_val, _ = size(tree.members, f, q, plugin)
    top_len = tree.time.length
    rhs = size_val * float(dens) * float(top_len)
    ratio = float(lhs) / rhs if rhs > 0 else (0.0 if lhs == 0 else float("inf"))

    jays = maximal_gap_intervals(tree.members, f.L)
    down, rest = tree.split()
    fco = down_coefficients_inf(f, tree.members)
    split_norms = []
    for J in jays:
        GJ = gap_set(J, tree.members, E, Nfun)
        row = {"J": {"k": J.k, "pos": J.pos}, "gap_cells": GJ.count}
        for label, part in (("down", down), ("up", rest)):
            active = [P for P in part if P.time.strictly_contains(J)]
            if not active:
                row[f"{label}_l1"] = 0.0
                continue
            signs = {}
            masks = {}
            for P in active:
                signs[P] = 1 if products[P] >= 0 else -1
                masks[P] = LevelSet.from_cells(E.L, up_cells(P, E, Nfun))
            h = down_packet_sum(active, f, coeffs=fco, signs=signs, cell_mask=masks)
            l1 = 0.0
            for j in J.cells(f.L):
                l1 += value_norm(h.samples[j], plugin)
            row[f"{label}_l1"] = l1 / f.cells
        split_norms.append(row)

    diagnostics = {
        "density": dens,
        "size": size_val,
        "top_length": top_len,
        "ratio": ratio,
        "gap_intervals": [{"k": J.k, "pos": J.pos} for J in jays],
        "split_sums": split_norms,
    }
    return lhs, diagnostics
