"""Command-line driver.

Every subcommand is deterministic: given the same flags and seed, output
files are byte-identical.  Numbers are serialized as strings ("num/den"
for rationals, repr for floats) so reports round-trip without float
ambiguity.  Exit code 0 means every theorem-backed certificate passed;
empirical ratios never affect the exit code.

The TILEWALSH_THREADS environment variable caps worker parallelism; the
library is sequential, so any cap yields identical output.
"""

from __future__ import annotations

import csv
import os
import sys
from fractions import Fraction
from pathlib import Path

import click

from .certificates import Certificate, all_theorem_backed_pass
from .decompose import (
    carleson_form_certificate,
    density_decompose,
    full_decompose,
    restricted_weak_type,
    size_decompose,
    tile_type_constant,
)
from .dyadic import bitile_universe
from .gen import (
    SplitMix64,
    gen_dual_function,
    gen_levelset,
    gen_nfun,
    gen_signal,
    gen_tree_family,
)
from .operators import carleson_bitile, carleson_direct, walsh_coefficients
from .signal import (
    NormPlugin,
    Signal,
    dump_json,
    levelset_from_json,
    levelset_to_json,
    load_json,
    nfun_from_json,
    nfun_to_json,
    signal_from_json,
    signal_to_json,
    _num_to_json,
    _value_from_json,
    _value_to_json,
)


def _threads() -> int:
    raw = os.environ.get("TILEWALSH_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise click.ClickException(f"TILEWALSH_THREADS must be an integer, got {raw!r}")


def _jsonify(obj):
    if isinstance(obj, Certificate):
        return obj.to_json()
    if isinstance(obj, dict):
        return {str(k): _jsonify(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonify(x) for x in obj]
    if isinstance(obj, bool) or obj is None:
        return obj
    if isinstance(obj, (Fraction, float)):
        return _num_to_json(obj)
    return obj


def _report(config: dict, payload: dict, certificates) -> dict:
    return _jsonify(
        {
            "levels": config.get("levels"),
            "seed": config.get("seed"),
            "params": config,
            "certificates": list(certificates),
            **payload,
        }
    )


def _write_report(report: dict, out: str) -> None:
    dump_json(report, out)


def _write_csv(rows: list[tuple], out_json: str) -> None:
    path = Path(out_json).with_suffix(".csv")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["name", "value"])
        for name, value in rows:
            writer.writerow([name, _num_to_json(value) if isinstance(value, (Fraction, float)) else value])


def _exit(certs) -> None:
    if not all_theorem_backed_pass(certs):
        sys.exit(1)


def _load_signal(path: str) -> Signal:
    try:
        return signal_from_json(load_json(path))
    except (OSError, KeyError, ValueError) as exc:
        raise click.ClickException(f"malformed signal file {path}: {exc}")


def _norm_plugin(norm: str, q) -> NormPlugin:
    try:
        return NormPlugin.parse(norm, q=q)
    except ValueError as exc:
        raise click.ClickException(str(exc))


opt_levels = click.option("--levels", type=int, default=4, show_default=True, help="resolution exponent L")
opt_dim = click.option("--dim", type=int, default=1, show_default=True, help="value dimension d")
opt_kind = click.option("--kind", type=click.Choice(["vector", "matrix"]), default="vector", show_default=True)
opt_norm = click.option("--norm", default="euclidean", show_default=True, help="euclidean | lp:<p> | schatten:<p>")
opt_q = click.option("--q", type=float, default=2.0, show_default=True, help="tile-type exponent q >= 2")
opt_seed = click.option("--seed", type=int, default=0, show_default=True)
opt_out = click.option("--out", required=True, help="output path")


def _q_value(q: float):
    return int(q) if float(q).is_integer() else q


@click.group()
def main() -> None:
    """Walsh time-frequency analysis on the dyadic grid."""
    _threads()


@main.command()
@click.option("--in", "infile", required=True, help="signal file (or coefficient dump with --inverse)")
@click.option("--inverse", is_flag=True, help="treat input as coefficients and invert")
@opt_out
def transform(infile, inverse, out):
    """Fast Walsh-Hadamard transform of a signal file; exact rationals."""
    obj = load_json(infile)
    if inverse:
        from .walsh import ifwht

        coefs = [
            [_value_from_json(c) for c in comp] for comp in obj["coefficients"]
        ]
        values = list(zip(*[ifwht(comp) for comp in coefs]))
        g = signal_from_json(
            {
                "levels": obj["levels"],
                "dim": obj["dim"],
                "kind": obj["kind"],
                "values": [
                    _value_to_json(_rebuild_value(flat, int(obj["dim"]), obj["kind"]))
                    for flat in values
                ],
            }
        )
        dump_json(signal_to_json(g), out)
        return
    f = _load_signal(infile)
    dump_json(
        {
            "levels": f.L,
            "dim": f.d,
            "kind": f.kind,
            "coefficients": [
                [_value_to_json(c) for c in comp] for comp in walsh_coefficients(f)
            ],
        },
        out,
    )


def _rebuild_value(flat, d, kind):
    flat = list(flat)
    if kind == "matrix":
        return tuple(tuple(flat[i * d + j] for j in range(d)) for i in range(d))
    return tuple(flat)


@main.command()
@click.option("--in", "infile", required=True, help="signal file")
@click.option("--nfun", required=True, help="frequency choice file")
@opt_out
def carleson(infile, nfun, out):
    """Linearized Carleson operator, direct and bitile forms, with the
    exact-equality oracle flag."""
    f = _load_signal(infile)
    N = nfun_from_json(load_json(nfun))
    if N.L != f.L:
        raise click.ClickException(
            f"resolution mismatch: signal L={f.L}, cutoff L={N.L}"
        )
    direct = carleson_direct(f, N)
    bitile = carleson_bitile(f, N, bitile_universe(f.L))
    identical = direct.samples == bitile.samples
    dump_json(
        {
            "levels": f.L,
            "direct": signal_to_json(direct),
            "bitile": signal_to_json(bitile),
            "identical": identical,
        },
        out,
    )
    if not identical:
        sys.exit(1)


@main.command()
@click.option("--in", "infile", required=True, help="signal file")
@click.option("--set", "setfile", required=True, help="level set file (E)")
@click.option("--nfun", required=True, help="frequency choice file")
@opt_norm
@opt_q
@opt_seed
@opt_out
def decompose(infile, setfile, nfun, norm, q, seed, out):
    """Density/size tree decomposition with certificates.

    With a nonempty set the full leveled decomposition runs; an empty set
    yields the sparse-only density split followed by the size split.
    """
    f = _load_signal(infile)
    E = levelset_from_json(load_json(setfile))
    N = nfun_from_json(load_json(nfun))
    qv = _q_value(q)
    plugin = _norm_plugin(norm, qv)
    config = {
        "command": "decompose",
        "levels": f.L,
        "dim": f.d,
        "kind": f.kind,
        "norm": plugin.spec(),
        "q": qv,
        "seed": seed,
        "in": infile,
        "set": setfile,
        "nfun": nfun,
    }
    if E.count == 0:
        dres = density_decompose(bitile_universe(f.L).items, E, N, qv)
        sres = size_decompose(dres.sparse, f, qv, plugin)
        certs = list(dres.certificates) + list(sres.certificates)
        payload = {
            "mode": "sparse-only",
            "sparse": [P.to_json() for P in dres.sparse],
            "density_trees": [],
            "size_trees": [t.to_json() for t in sres.trees],
            "small": [P.to_json() for P in sres.small],
            "ratios": {"size_mass_constant": sres.stats["mass_constant"]},
        }
    else:
        forest = full_decompose(
            list(bitile_universe(f.L).items), f, E, N, qv, plugin
        )
        certs = forest.all_certificates()
        payload = {
            "mode": "leveled",
            "levels_out": [
                {
                    "n": rec.n,
                    "trees": [t.to_json() for t in rec.trees],
                }
                for rec in forest.levels
            ],
            "residual": [P.to_json() for P in forest.residual],
            "ratios": {
                "tree_count": sum(len(rec.trees) for rec in forest.levels),
            },
        }
    report = _report(config, payload, certs)
    _write_report(report, out)
    _write_csv(
        [(c.name, float(c.lhs) / float(c.rhs) if float(c.rhs) else 0.0) for c in certs],
        out,
    )
    _exit(certs)


@main.command()
@click.option("--in", "infile", default=None, help="signal file (seeded when omitted)")
@click.option("--dual", "dualfile", default=None, help="dual function file (seeded when omitted)")
@click.option("--set", "setfile", default=None, help="level set file (seeded when omitted)")
@click.option("--nfun", default=None, help="frequency choice file (seeded when omitted)")
@opt_levels
@opt_dim
@opt_kind
@opt_norm
@opt_q
@opt_seed
@opt_out
def certify(infile, dualfile, setfile, nfun, levels, dim, kind, norm, q, seed, out):
    """Bilinear Carleson form over the full universe against the
    |E|^(1/q') |f|_q bound, with per-tree tree-lemma ratios."""
    qv = _q_value(q)
    plugin = _norm_plugin(norm, qv)
    rng = SplitMix64(seed)
    f = _load_signal(infile) if infile else gen_signal(levels, dim, kind, rng)
    g = (
        _load_signal(dualfile)
        if dualfile
        else gen_dual_function(f.L, f.d, f.kind, plugin, rng)
    )
    E = (
        levelset_from_json(load_json(setfile))
        if setfile
        else gen_levelset(f.L, Fraction(1, 2), rng)
    )
    N = nfun_from_json(load_json(nfun)) if nfun else gen_nfun(f.L, rng)
    if E.count == 0:
        raise click.ClickException("empty level set: the form bound is void")
    config = {
        "command": "certify",
        "levels": f.L,
        "dim": f.d,
        "kind": f.kind,
        "norm": plugin.spec(),
        "q": qv,
        "seed": seed,
    }
    rep = carleson_form_certificate(f, g, E, N, qv, plugin)
    certs = rep.pop("certificates")
    tree_ratios = [
        (f"tree_n{row['n']}_{i}", t["tree_lemma_ratio"])
        for row in rep["levels"]
        for i, t in enumerate(row["trees"])
    ]
    payload = {
        "form": rep,
        "ratios": {
            "form_over_bound": rep["ratio"],
            "max_tree_lemma_ratio": max(
                (t["tree_lemma_ratio"] for row in rep["levels"] for t in row["trees"]),
                default=0.0,
            ),
        },
    }
    report = _report(config, payload, certs)
    _write_report(report, out)
    _write_csv([("form_over_bound", rep["ratio"])] + tree_ratios, out)
    _exit(certs)


@main.command()
@opt_levels
@opt_dim
@opt_kind
@opt_norm
@opt_q
@opt_seed
@opt_out
def tiletype(levels, dim, kind, norm, q, seed, out):
    """Empirical tile-type ratio for a seeded admissible tree family."""
    qv = _q_value(q)
    plugin = _norm_plugin(norm, qv)
    rng = SplitMix64(seed)
    family = gen_tree_family(levels, rng)
    f = gen_signal(levels, dim, kind, rng)
    config = {
        "command": "tiletype",
        "levels": levels,
        "dim": dim,
        "kind": kind,
        "norm": plugin.spec(),
        "q": qv,
        "seed": seed,
    }
    ratio, certs = tile_type_constant(family, f, qv, plugin)
    payload = {
        "family": [t.to_json() for t in family.trees],
        "ratio": ratio,
        "ratios": {"tile_type": ratio},
    }
    report = _report(config, payload, certs)
    _write_report(report, out)
    _write_csv([("tile_type", ratio)], out)
    _exit(certs)


@main.command()
@opt_levels
@opt_dim
@opt_kind
@opt_norm
@opt_q
@click.option("--p", type=float, default=2.0, show_default=True, help="Lebesgue exponent p in (1, inf)")
@opt_seed
@opt_out
def rwt(levels, dim, kind, norm, q, p, seed, out):
    """Restricted weak-type experiment on seeded sets and signals."""
    qv = _q_value(q)
    plugin = _norm_plugin(norm, qv)
    rng = SplitMix64(seed)
    Fset = gen_levelset(levels, Fraction(1, 4), rng)
    Eset = gen_levelset(levels, Fraction(3, 4), rng)
    N = gen_nfun(levels, rng)
    raw_f = gen_dual_function(levels, dim, kind, plugin, rng)
    raw_g = gen_dual_function(levels, dim, kind, plugin.dual(), rng)
    f = raw_f.with_components(
        [
            [x if j in Fset else Fraction(0) for j, x in enumerate(comp)]
            for comp in raw_f.components()
        ]
    )
    g = raw_g.with_components(
        [
            [x if j in Eset else Fraction(0) for j, x in enumerate(comp)]
            for comp in raw_g.components()
        ]
    )
    config = {
        "command": "rwt",
        "levels": levels,
        "dim": dim,
        "kind": kind,
        "norm": plugin.spec(),
        "q": qv,
        "p": p,
        "seed": seed,
    }
    rep = restricted_weak_type(Fset, Eset, f, g, N, p, qv, plugin)
    certs = rep.pop("certificates")
    payload = {
        "rwt": rep,
        "ratios": {
            "log_ratio": rep["log_ratio"],
            "lorentz_ratio": rep["lorentz_ratio"],
        },
    }
    report = _report(config, payload, certs)
    _write_report(report, out)
    _write_csv([("log_ratio", rep["log_ratio"]), ("lorentz_ratio", rep["lorentz_ratio"])], out)
    _exit(certs)


@main.command()
@opt_levels
@opt_dim
@opt_kind
@opt_norm
@click.option("--measure", default="1/2", show_default=True, help="level set measure (rational)")
@opt_seed
@click.option("--out", required=True, help="output directory")
def gen(levels, dim, kind, norm, measure, seed, out):
    """Deterministic instance files: signal, dual function, level set,
    frequency choice."""
    plugin = _norm_plugin(norm, 2)
    rng = SplitMix64(seed)
    outdir = Path(out)
    outdir.mkdir(parents=True, exist_ok=True)
    f = gen_signal(levels, dim, kind, rng)
    g = gen_dual_function(levels, dim, kind, plugin, rng)
    E = gen_levelset(levels, Fraction(measure), rng)
    N = gen_nfun(levels, rng)
    dump_json(signal_to_json(f), outdir / "signal.json")
    dump_json(signal_to_json(g), outdir / "dual.json")
    dump_json(levelset_to_json(E), outdir / "set.json")
    dump_json(nfun_to_json(N), outdir / "nfun.json")


if __name__ == "__main__":
    main()
