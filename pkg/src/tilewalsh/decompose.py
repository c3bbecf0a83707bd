"""Greedy tree decompositions with exact certificates: the density split,
the minimal-center size split, the leveled full decomposition, tile-type
estimation, and restricted weak-type experiments."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .certificates import Certificate
from .dyadic import (
    Bitile,
    bitile_le,
    bitile_lt,
)
from .operators import carleson_bitile
from .dyadic import bitile_universe
from .signal import (
    FrequencyChoice,
    LevelSet,
    NormPlugin,
    Signal,
    dual_pair,
    lq_norm,
    lq_norm_pow,
    maximal_function,
    value_is_zero,
    value_norm,
)
from .timefreq import (
    DensityCounter,
    Tree,
    TreeFamily,
    candidate_tops,
    complete_up_tree,
    density,
    down_coefficients_inf,
    down_packet_sum,
    hilbert_member_weights,
    hilbert_top_sums,
    local_density,
    member_form_products,
    size_pow,
    tree_delta_pow,
    up_ancestors,
)
from .walsh import haar_pattern


# ---------------------------------------------------------------------------
# results

@dataclass(frozen=True)
class DensityDecomposition:
    sparse: tuple[Bitile, ...]
    trees: tuple[Tree, ...]
    certificates: tuple[Certificate, ...]
    density: Fraction


@dataclass(frozen=True)
class SizeDecomposition:
    small: tuple[Bitile, ...]
    trees: tuple[Tree, ...]
    certificates: tuple[Certificate, ...]
    size_pow: Fraction | float
    stats: dict = field(default_factory=dict)


@dataclass(frozen=True)
class LevelRecord:
    n: int
    trees: tuple[Tree, ...]
    certificates: tuple[Certificate, ...]


@dataclass(frozen=True)
class LeveledForest:
    levels: tuple[LevelRecord, ...]
    residual: tuple[Bitile, ...]
    certificates: tuple[Certificate, ...]

    def all_certificates(self) -> list[Certificate]:
        out = list(self.certificates)
        for rec in self.levels:
            out.extend(rec.certificates)
        return out

    def all_trees(self) -> list[tuple[int, Tree]]:
        return [(rec.n, tree) for rec in self.levels for tree in rec.trees]


# ---------------------------------------------------------------------------
# density lemma

def _two_pow(n: int | float):
    """2^n as an exact Fraction for integer n, float otherwise."""
    if isinstance(n, int) or (isinstance(n, Fraction) and n.denominator == 1):
        n = int(n)
        return Fraction(1 << n) if n >= 0 else Fraction(1, 1 << -n)
    return 2.0 ** float(n)


def density_decompose(
    coll: Sequence[Bitile],
    E: LevelSet,
    Nfun: FrequencyChoice,
    q,
) -> DensityDecomposition:
    """Split a collection into a sparse part whose density drops by 2^-q
    and trees whose top time intervals carry at most 2^q / density |E|
    total length; the constructive greedy from the density lemma."""
    coll = sorted(set(coll), key=Bitile.key)
    counter = DensityCounter(E, Nfun)
    local: dict[Bitile, tuple[Fraction, Bitile]] = {
        P: local_density(P, counter) for P in coll
    }
    dens = max((v[0] for v in local.values()), default=Fraction(0))
    threshold = dens * _two_pow(-q) if dens else Fraction(0)

    sparse = [P for P in coll if local[P][0] <= threshold]
    rest = [P for P in coll if local[P][0] > threshold]
    witnesses = sorted({local[P][1] for P in rest}, key=Bitile.key)
    tops = [
        W for W in witnesses if not any(bitile_lt(W, W2) for W2 in witnesses)
    ]

    trees: list[Tree] = []
    remaining = set(rest)
    for T in tops:
        members = [P for P in sorted(remaining, key=Bitile.key) if bitile_le(P, T)]
        if not members:
            continue
        remaining.difference_update(members)
        trees.append(Tree.build(T, members))
    if remaining:
        raise RuntimeError("density split failed to assign every dense bitile")

    sparse_density = max((local[P][0] for P in sparse), default=Fraction(0))
    certs = [
        Certificate.make(
            "density_sparse",
            sparse_density,
            threshold,
            theorem_backed=True,
            context={"q": q, "density": dens},
        )
    ]
    if dens > 0:
        mass = sum((t.time.length for t in trees), Fraction(0))
        bound = _two_pow(q) / dens * E.measure
        certs.append(
            Certificate.make(
                "density_mass",
                mass,
                bound,
                theorem_backed=True,
                context={"q": q, "trees": len(trees), "set_measure": E.measure},
            )
        )
    return DensityDecomposition(tuple(sparse), tuple(trees), tuple(certs), dens)


# ---------------------------------------------------------------------------
# size lemma

def _pow_gt(a, b) -> bool:
    if isinstance(a, Fraction) and isinstance(b, Fraction):
        return a > b
    return float(a) > float(b)


def size_decompose(
    coll: Sequence[Bitile],
    f: Signal,
    q,
    plugin: NormPlugin,
) -> SizeDecomposition:
    """Greedy extraction of trees whose up-part mass exceeds half the
    collection size, choosing the qualifying maximal tree with the minimal
    top frequency center; ties fall back to the canonical bitile order."""
    coll = sorted(set(coll), key=Bitile.key)
    coeffs = down_coefficients_inf(f, coll)
    zero = [P for P in coll if all(c == 0 for c in coeffs[P])]
    active = [P for P in coll if P not in set(zero)]

    sigma_pow, _ = size_pow(active, f, q, plugin, coeffs=coeffs)
    threshold_pow = sigma_pow * _two_pow(-q)

    hilbert = _is_hilbert_case(q, plugin)
    if hilbert:
        weights = hilbert_member_weights(active, coeffs)
        sums = hilbert_top_sums(active, weights)
    trees: list[Tree] = []
    up_parts: list[tuple[Bitile, ...]] = []
    remaining = list(active)
    rounds = 0
    while remaining:
        rounds += 1
        if rounds > len(coll) + 1:
            raise RuntimeError("size split failed to terminate")
        if hilbert:
            qualifying = [
                T
                for T in sorted(sums, key=Bitile.key)
                if sums[T] > 0 and _pow_gt(sums[T] * (1 << T.time.k), threshold_pow)
            ]
        else:
            qualifying = []
            for T in candidate_tops(remaining):
                tree = complete_up_tree(T, remaining)
                if not tree.members:
                    continue
                val = tree_delta_pow(tree, f, q, plugin, coeffs=coeffs)
                if _pow_gt(val, threshold_pow):
                    qualifying.append(T)
        if not qualifying:
            break
        maximal = [
            T for T in qualifying if not any(bitile_lt(T, T2) for T2 in qualifying)
        ]
        pick = min(maximal, key=lambda T: (T.freq_center, T.key()))
        members = [P for P in remaining if bitile_le(P, pick)]
        tree = Tree.build(pick, members)
        trees.append(tree)
        up_parts.append(tree.up_part())
        removed = set(members)
        if hilbert:
            for P in members:
                w = weights[P]
                if w:
                    for T in up_ancestors(P):
                        sums[T] -= w
        remaining = [P for P in remaining if P not in removed]

    small = sorted(set(remaining) | set(zero), key=Bitile.key)
    small_pow, _ = size_pow(small, f, q, plugin, coeffs=coeffs)

    certs = [
        Certificate.make(
            "size_small",
            small_pow,
            threshold_pow,
            theorem_backed=True,
            context={"q": q, "note": "q-th powers of size; threshold is (size/2)^q"},
        )
    ]

    violations = 0
    flat = [(P, i) for i, up in enumerate(up_parts) for P in up]
    from .dyadic import tiles_disjoint

    for a in range(len(flat)):
        for b in range(a + 1, len(flat)):
            if not tiles_disjoint(flat[a][0].down, flat[b][0].down):
                violations += 1
    certs.append(
        Certificate.make(
            "down_tile_disjointness",
            violations,
            0,
            theorem_backed=True,
            context={"pairs_checked": len(flat) * (len(flat) - 1) // 2},
        )
    )

    mass = sum((t.time.length for t in trees), Fraction(0))
    fq_pow = lq_norm_pow(f, q, plugin)
    if fq_pow is None:
        fq_pow = lq_norm(f, q, plugin) ** float(q)
    if fq_pow and float(fq_pow) > 0:
        mass_constant = float(mass) * float(sigma_pow) / float(fq_pow)
    else:
        mass_constant = 0.0
    stats = {
        "top_length_sum": mass,
        "size_pow": sigma_pow,
        "mass_constant": mass_constant,
        "trees": len(trees),
    }
    return SizeDecomposition(
        tuple(small), tuple(trees), tuple(certs), sigma_pow, stats
    )


# ---------------------------------------------------------------------------
# full leveled decomposition

def _is_hilbert_case(q, plugin: NormPlugin) -> bool:
    return q == 2 and (
        plugin.name == "euclidean" or (plugin.name == "schatten" and plugin.p == 2)
    )


def full_decompose(
    coll: Sequence[Bitile],
    f: Signal,
    E: LevelSet,
    Nfun: FrequencyChoice,
    q,
    plugin: NormPlugin,
) -> LeveledForest:
    """Alternate the density and size splits level by level, tagging the
    extracted trees with the level exponent n and emitting the density,
    size and mass certificates at every level."""
    if E.count == 0:
        raise ValueError("empty level set: level exponents undefined")
    fq_pow = lq_norm_pow(f, q, plugin)
    if fq_pow is None:
        fq_pow = lq_norm(f, q, plugin) ** float(q)
    if not float(fq_pow) > 0:
        raise ValueError("zero signal: level exponents undefined")

    coll = sorted(set(coll), key=Bitile.key)
    coeffs = down_coefficients_inf(f, coll)
    dens0 = density(coll, E, Nfun)
    size0_pow, _ = size_pow(coll, f, q, plugin, coeffs=coeffs)

    # smallest integer n with density <= min(1, 2^(nq) |E|)
    # and size^q <= 2^(nq) |f|_q^q
    L = f.L
    n_max = None
    for n in range(-16 * L - 64, 16 * L + 65):
        tag = _two_pow(n * q) if isinstance(q, int) else 2.0 ** (n * float(q))
        ok_d = _le(dens0, _min_one(tag * E.measure))
        ok_s = _le(size0_pow, tag * fq_pow)
        if ok_d and ok_s:
            n_max = n
            break
    if n_max is None:
        raise RuntimeError("could not locate a starting level")

    hilbert = _is_hilbert_case(q, plugin)
    levels: list[LevelRecord] = []
    active = list(coll)
    n = n_max
    while True:
        nonzero = [P for P in active if any(c != 0 for c in coeffs[P])]
        if not nonzero:
            break
        dres = density_decompose(active, E, Nfun, q)
        sres = size_decompose(dres.sparse, f, q, plugin)
        level_trees = tuple(dres.trees) + tuple(sres.trees)
        tag = _two_pow(n * q) if isinstance(q, int) else 2.0 ** (n * float(q))
        tag_size = tag * fq_pow

        certs: list[Certificate] = list(dres.certificates) + list(sres.certificates)
        members = [P for t in level_trees for P in t.members]
        level_density = density(members, E, Nfun) if members else Fraction(0)
        certs.append(
            Certificate.make(
                "level_density",
                level_density,
                _min_one(tag * E.measure),
                theorem_backed=True,
                context={"n": n},
            )
        )
        level_size_pow = Fraction(0)
        for t in level_trees:
            v, _ = size_pow(t.members, f, q, plugin, coeffs=coeffs)
            if _pow_gt(v, level_size_pow):
                level_size_pow = v
        certs.append(
            Certificate.make(
                "level_size",
                level_size_pow,
                tag_size,
                theorem_backed=hilbert,
                context={"n": n, "note": "q-th powers"},
            )
        )
        mass = sum((t.time.length for t in level_trees), Fraction(0))
        certs.append(
            Certificate.make(
                "level_mass",
                mass,
                mass,
                theorem_backed=False,
                context={"n": n, "mass_constant": float(mass) * float(tag)},
            )
        )
        levels.append(LevelRecord(n, level_trees, tuple(certs)))
        active = list(sres.small)
        n -= 1

    residual = tuple(sorted(set(active), key=Bitile.key))
    top_certs = [
        Certificate.make(
            "residual_zero_contribution",
            sum(1 for P in residual if any(c != 0 for c in coeffs[P])),
            0,
            theorem_backed=True,
            context={"residual": len(residual)},
        )
    ]
    span = n_max - (levels[-1].n if levels else n_max)
    top_certs.append(
        Certificate.make(
            "level_span",
            span,
            4 * L,
            theorem_backed=False,
            context={"n_max": n_max, "levels": len(levels)},
        )
    )
    return LeveledForest(tuple(levels), residual, tuple(top_certs))


def _min_one(x):
    if isinstance(x, Fraction):
        return x if x < 1 else Fraction(1)
    return min(1.0, float(x))


def _le(a, b) -> bool:
    if isinstance(a, Fraction) and isinstance(b, Fraction):
        return a <= b
    return float(a) <= float(b) * (1 + 1e-12)


# ---------------------------------------------------------------------------
# the bilinear form over the full universe

def carleson_form_certificate(
    f: Signal,
    g: Signal,
    E: LevelSet,
    Nfun: FrequencyChoice,
    q,
    plugin: NormPlugin,
) -> dict:
    """Decompose the whole bitile universe, evaluate the bilinear form
    grouped by level and tree, and report the ratio against
    |E|^(1/q') |f|_q together with per-tree tree-lemma ratios."""
    if any(value_norm(v, plugin.dual()) > 1 + 1e-9 for v in g.samples):
        warnings.warn("dual function exceeds pointwise norm one", stacklevel=2)
    U = bitile_universe(f.L)
    coll = list(U.items)
    forest = full_decompose(coll, f, E, Nfun, q, plugin)
    products = member_form_products(coll, f, g, E, Nfun)

    total = sum((abs(v) for v in products.values()), Fraction(0))
    qf = float(q)
    qprime = qf / (qf - 1.0)
    fq = lq_norm(f, q, plugin)
    bound = float(E.measure) ** (1.0 / qprime) * fq
    ratio = float(total) / bound if bound > 0 else 0.0

    counter = DensityCounter(E, Nfun)
    level_rows = []
    majorant = 0.0
    for rec in forest.levels:
        tag = 2.0 ** (rec.n * qf)
        tree_rows = []
        level_mass = 0.0
        for tree in rec.trees:
            form = sum((abs(products[P]) for P in tree.members), Fraction(0))
            dens = density(tree.members, E, Nfun, counter=counter)
            spow, _ = size_pow(tree.members, f, q, plugin)
            size_val = float(spow) ** (1.0 / qf)
            rhs = size_val * float(dens) * float(tree.time.length)
            tree_rows.append(
                {
                    "top": tree.top.to_json(),
                    "members": len(tree.members),
                    "form": form,
                    "tree_lemma_ratio": float(form) / rhs if rhs > 0 else 0.0,
                }
            )
            level_mass += float(tree.time.length)
        level_rows.append({"n": rec.n, "trees": tree_rows})
        majorant += min(1.0, tag * float(E.measure)) * 2.0 ** rec.n * fq * level_mass

    return {
        "form_total": total,
        "bound": bound,
        "ratio": ratio,
        "majorant": majorant,
        "levels": level_rows,
        "certificates": forest.all_certificates(),
        "residual": len(forest.residual),
    }


# ---------------------------------------------------------------------------
# tile-type estimation

def haar_packet_sum(
    members: Sequence[Bitile],
    f: Signal,
    coeffs: dict[Bitile, list[Fraction]] | None = None,
) -> Signal:
    """sum over members of <f, down packet> h_{I_P}; exact."""
    if coeffs is None:
        coeffs = down_coefficients_inf(f, members)
    ncomp = len(f.components())
    out = [[Fraction(0)] * f.cells for _ in range(ncomp)]
    for P in members:
        k = P.time.k
        if k >= f.L:
            raise ValueError(
                "Haar pattern of a finest-scale member is not grid-constant"
            )
        pattern = haar_pattern(P.time, f.L)
        factor = Fraction(1 << k)
        for i in range(ncomp):
            c = coeffs[P][i] * factor
            if c == 0:
                continue
            row = out[i]
            for j in P.time.cells(f.L):
                s = pattern[j]
                row[j] = row[j] + c if s > 0 else row[j] - c
    return f.with_components(out)


def tile_type_constant(
    family: TreeFamily,
    f: Signal,
    q,
    plugin: NormPlugin,
) -> tuple[float, list[Certificate]]:
    """Ratio (sum over trees of |packet sum|_q^q)^(1/q) / |f|_q for a family
    with pairwise disjoint down-tiles; also certifies per tree that the
    packet form and its Haar form have equal L^q norms."""
    violations = family.down_disjointness_violations()
    if violations:
        raise ValueError(
            f"{len(violations)} down-tile disjointness violations in family"
        )
    certs: list[Certificate] = []
    hilbert = _is_hilbert_case(q, plugin)
    total_pow = Fraction(0)
    exact_total = True
    for idx, tree in enumerate(family.trees):
        coeffs = down_coefficients_inf(f, tree.members)
        u = down_packet_sum(tree.members, f, coeffs=coeffs)
        u_haar = haar_packet_sum(tree.members, f, coeffs=coeffs)
        upow = lq_norm_pow(u, q, plugin)
        hpow = lq_norm_pow(u_haar, q, plugin)
        if upow is None or hpow is None:
            upow_f = lq_norm(u, q, plugin) ** float(q)
            hpow_f = lq_norm(u_haar, q, plugin) ** float(q)
            certs.append(
                Certificate.make(
                    "packet_haar_norm_equality",
                    abs(upow_f - hpow_f),
                    1e-9 * max(1.0, abs(upow_f)),
                    theorem_backed=True,
                    context={"tree": idx},
                )
            )
            total_pow = float(total_pow) + upow_f
            exact_total = False
        else:
            certs.append(
                Certificate.make(
                    "packet_haar_norm_equality",
                    abs(upow - hpow),
                    Fraction(0),
                    theorem_backed=True,
                    context={"tree": idx},
                )
            )
            if exact_total:
                total_pow = total_pow + upow
            else:
                total_pow = float(total_pow) + float(upow)

    fq_pow = lq_norm_pow(f, q, plugin)
    if fq_pow is None:
        fq_pow = lq_norm(f, q, plugin) ** float(q)
    ratio = (
        (float(total_pow) / float(fq_pow)) ** (1.0 / float(q))
        if float(fq_pow) > 0
        else 0.0
    )
    certs.append(
        Certificate.make(
            "tile_type_ratio_pow",
            total_pow,
            fq_pow,
            theorem_backed=hilbert,
            context={
                "q": q,
                "norm": plugin.spec(),
                "ratio": ratio,
                "note": "ratio <= 1 is a theorem only in the Hilbert q=2 case",
            },
        )
    )
    return ratio, certs


# ---------------------------------------------------------------------------
# restricted weak type

def restricted_weak_type(
    F: LevelSet,
    E: LevelSet,
    f: Signal,
    g: Signal,
    Nfun: FrequencyChoice,
    p,
    q,
    plugin: NormPlugin,
) -> dict:
    """Evaluate the bilinear form against the restricted weak-type bounds.

    When |E| > |F|, removes the set where the maximal function of 1_F
    exceeds 2|F|/|E| and certifies exactly that at least half of E
    survives; the form is then tested against |F| (1 + log|E|/|F|), and in
    the opposite regime against |E| (1 + log|F|/|E|).
    """
    if E.count == 0 or F.count == 0:
        raise ValueError("both sets must be nonempty")
    for j in range(f.cells):
        if j not in F and not value_is_zero(f.samples[j]):
            raise ValueError("signal not supported on F")
        if j not in E and not value_is_zero(g.samples[j]):
            raise ValueError("dual function not supported on E")
    if any(value_norm(v, plugin) > 1 + 1e-9 for v in f.samples):
        warnings.warn("signal exceeds pointwise norm one", stacklevel=2)
    if any(value_norm(v, plugin.dual()) > 1 + 1e-9 for v in g.samples):
        warnings.warn("dual function exceeds pointwise norm one", stacklevel=2)

    certs: list[Certificate] = []
    eF, eE = F.measure, E.measure
    if eE > eF:
        M = maximal_function(F.indicator(), plugin).scalar_samples()
        thresh = 2 * eF / eE
        G = LevelSet.from_cells(E.L, (j for j in range(len(M)) if M[j] > thresh))
        Etilde = E.minus(G)
        certs.append(
            Certificate.make(
                "major_subset",
                eE,
                2 * Etilde.measure,
                theorem_backed=True,
                context={"exceptional_measure": G.measure},
            )
        )
        gt = g.with_components(
            [
                [x if j in Etilde else Fraction(0) for j, x in enumerate(comp)]
                for comp in g.components()
            ]
        )
        regime = "E>F"
        log_bound = float(eF) * (1.0 + math.log(float(eE) / float(eF)))
    else:
        G = LevelSet.empty(E.L)
        Etilde = E
        gt = g
        regime = "E<=F"
        log_bound = float(eE) * (1.0 + math.log(float(eF) / float(eE)))

    U = bitile_universe(f.L)
    Cf = carleson_bitile(f, Nfun, U)
    form = Fraction(0)
    for j in range(f.cells):
        form += dual_pair(Cf.samples[j], gt.samples[j])
    form = abs(form * Fraction(1, f.cells))

    pf = float(p)
    pprime = pf / (pf - 1.0)
    lorentz_bound = float(eF) ** (1.0 / pf) * float(eE) ** (1.0 / pprime)
    return {
        "regime": regime,
        "form": form,
        "log_bound": log_bound,
        "log_ratio": float(form) / log_bound if log_bound > 0 else 0.0,
        "lorentz_bound": lorentz_bound,
        "lorentz_ratio": float(form) / lorentz_bound if lorentz_bound > 0 else 0.0,
        "exceptional": G.cells(),
        "major_subset": Etilde.cells(),
        "certificates": certs,
    }
