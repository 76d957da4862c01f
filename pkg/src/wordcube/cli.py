"""Command-line front end.

Exit codes: 0 success, 2 config error, 3 capacity error, 4 I/O or file
format error.
"""
from __future__ import annotations

import argparse
import sys
from dataclasses import replace

from . import corpus as corpus_mod
from .embed import EvalPolicy, accuracy_vs_k, all_model_families
from .harness import (FormatError, SpecError, load_matrix, parse_k_grid,
                      parse_spec, run_experiment, run_figure,
                      save_eigensystem, save_matrix, _write_rows)
from .model import (CapacityError, ModelConfig, build_m, build_pmi,
                    sample_config)
from .perturb import prune_corpus_pairs
from .spectral import numeric_eigensystem, spectrum_density


def _config_from_args(args) -> ModelConfig:
    if args.config:
        return ModelConfig.load(args.config)
    strengths = None
    if args.s_values:
        strengths = tuple(float(x) for x in args.s_values.split(","))
    odds = None
    q_mode = "ones"
    if args.q_values:
        odds = tuple(float(x) for x in args.q_values.split(","))
        q_mode = "explicit"
    return sample_config(args.d, args.s_mode, q_mode, args.seed,
                         mu=args.s_mu, sigma=args.s_sigma,
                         strengths=strengths, odds=odds)


def _policy_from_args(args) -> EvalPolicy:
    return EvalPolicy(
        exclusion="exclude_query_triple" if args.exclude_query else "include_all",
        tie_mode=args.tie_mode,
    )


def _cmd_gen(args):
    config = _config_from_args(args)
    mat = build_m(config)
    if args.target == "pmi":
        mat = build_pmi(mat, args.epsilon)
    save_matrix(mat, args.out)
    if args.config_out:
        config.save(args.config_out)
    print(f"wrote {args.out} ({mat.n}x{mat.n}, {mat.space})")


def _cmd_spectrum(args):
    mat = load_matrix(args.matrix)
    eigs = numeric_eigensystem(mat)
    rows = [[r, float(v)] for r, v in enumerate(eigs.values)]
    _write_rows(args.out, ["rank", "value"], rows)
    if args.eigs_out:
        save_eigensystem(eigs, args.eigs_out)
    if args.density_out:
        dens = spectrum_density(eigs.values, bins=args.density_bins)
        rows = [[float(lo), float(hi), float(y)]
                for lo, hi, y in zip(dens.bin_edges[:-1], dens.bin_edges[1:],
                                     dens.density)]
        _write_rows(args.density_out, ["bin_lo", "bin_hi", "density"], rows)
    print(f"wrote {args.out} ({eigs.n} eigenvalues)")


def _eval_matrix(args, mat, families):
    if mat.space == "ratio" and args.target == "pmi":
        mat = build_pmi(mat, args.epsilon)
    eigs = numeric_eigensystem(mat)
    k_values = tuple(k for k in parse_k_grid(args.k_grid) if k <= eigs.n)
    curve = accuracy_vs_k(eigs, families, k_values, _policy_from_args(args),
                          source=args.target)
    rows = []
    for i, k in enumerate(curve.k_values):
        for j, name in enumerate(curve.family_names):
            rows.append([args.target, k, name,
                         float(curve.accuracies[i, j])])
        rows.append([args.target, k, "__mean__", float(curve.mean[i])])
    _write_rows(args.out, ["target", "K", "family", "accuracy"], rows)
    print(f"wrote {args.out}")


def _cmd_embed_eval(args):
    mat = load_matrix(args.matrix)
    if args.analogies:
        dataset = corpus_mod.parse_analogy_file(args.analogies, mat.tokens or ())
        families = list(dataset.families)
        if not families:
            raise SpecError("no in-vocabulary analogy quads")
    else:
        if mat.n_attrs is None or mat.n != (1 << mat.n_attrs):
            raise SpecError("synthetic analogies need a full hypercube matrix; "
                            "pass --analogies for corpus matrices")
        families = all_model_families(mat.n_attrs)
    _eval_matrix(args, mat, families)


def _cmd_perturb_sweep(args):
    spec = parse_spec(args.config)
    if args.out_dir:
        spec = replace(spec, out_dir=args.out_dir)
    if args.workers:
        spec = replace(spec, workers=args.workers)
    result = run_experiment(spec)
    for kind, path in result.files.items():
        print(f"wrote {path} ({kind})")
    if result.failures:
        print(f"{len(result.failures)} grid cells failed; see logs")


def _cmd_corpus_cooc(args):
    with open(args.text, "r", encoding="utf-8", errors="ignore") as fh:
        vocab = corpus_mod.build_vocab(fh, args.vocab_size)
    with open(args.text, "r", encoding="utf-8", errors="ignore") as fh:
        counts = corpus_mod.count_cooc(fh, vocab, window=args.window)
    mat = corpus_mod.cooc_to_m(counts)
    save_matrix(mat, args.out)
    if args.vocab_out:
        vocab.save(args.vocab_out)
    print(f"wrote {args.out} ({mat.n} words, {counts.total} window pairs)")


def _cmd_corpus_eval(args):
    mat = load_matrix(args.matrix)
    mat.require_space("ratio")
    dataset = corpus_mod.parse_analogy_file(args.analogies, mat.tokens or ())
    families = list(dataset.families)
    if not families:
        raise SpecError("no in-vocabulary analogy quads")
    if args.prune_family:
        chosen = next((f for f in families if f.name == args.prune_family), None)
        if chosen is None:
            raise SpecError(f"family {args.prune_family!r} not in the dataset")
        pairs = []
        for quad in chosen.quads:
            pairs.append((quad.b, quad.a))
            pairs.append((quad.c, quad.d))
        mat = prune_corpus_pairs(mat, pairs)
    _eval_matrix(args, mat, families)


def _cmd_figure(args):
    path = run_figure(args.figure_id, out_dir=args.out_dir,
                      replicates=args.replicates, base_seed=args.seed,
                      workers=args.workers)
    print(f"wrote {path}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wordcube")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="build and save a synthetic matrix")
    gen.add_argument("--out", required=True)
    gen.add_argument("--config")
    gen.add_argument("--config-out")
    gen.add_argument("--d", type=int, default=8)
    gen.add_argument("--s-mode", default="uniform",
                     choices=("uniform", "normal", "explicit"))
    gen.add_argument("--s-mu", type=float, default=0.5)
    gen.add_argument("--s-sigma", type=float, default=1e-3)
    gen.add_argument("--s-values")
    gen.add_argument("--q-values")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--target", default="m", choices=("m", "pmi"))
    gen.add_argument("--epsilon", type=float, default=0.0)
    gen.set_defaults(func=_cmd_gen)

    spec = sub.add_parser("spectrum", help="eigendecompose a saved matrix")
    spec.add_argument("--matrix", required=True)
    spec.add_argument("--out", required=True)
    spec.add_argument("--eigs-out")
    spec.add_argument("--density-out")
    spec.add_argument("--density-bins", type=int, default=48)
    spec.set_defaults(func=_cmd_spectrum)

    ev = sub.add_parser("embed-eval", help="accuracy-vs-K curve for a matrix")
    ev.add_argument("--matrix", required=True)
    ev.add_argument("--out", required=True)
    ev.add_argument("--k-grid", required=True)
    ev.add_argument("--target", default="pmi", choices=("m", "pmi"))
    ev.add_argument("--epsilon", type=float, default=0.0)
    ev.add_argument("--analogies")
    ev.add_argument("--tie-mode", default="strict_fail",
                    choices=("strict_fail", "lowest_index"))
    ev.add_argument("--exclude-query", action="store_true")
    ev.set_defaults(func=_cmd_embed_eval)

    pe = sub.add_parser("perturb-sweep", help="run an experiment spec file")
    pe.add_argument("--config", required=True)
    pe.add_argument("--out-dir")
    pe.add_argument("--workers", type=int)
    pe.set_defaults(func=_cmd_perturb_sweep)

    cc = sub.add_parser("corpus-cooc", help="text to co-occurrence matrix")
    cc.add_argument("--text", required=True)
    cc.add_argument("--out", required=True)
    cc.add_argument("--vocab-size", type=int, default=10_000)
    cc.add_argument("--window", type=int, default=5)
    cc.add_argument("--vocab-out")
    cc.set_defaults(func=_cmd_corpus_cooc)

    ce = sub.add_parser("corpus-eval", help="analogy accuracy on a corpus matrix")
    ce.add_argument("--matrix", required=True)
    ce.add_argument("--analogies", required=True)
    ce.add_argument("--out", required=True)
    ce.add_argument("--k-grid", required=True)
    ce.add_argument("--target", default="pmi", choices=("m", "pmi"))
    ce.add_argument("--epsilon", type=float, default=1e-2)
    ce.add_argument("--prune-family")
    ce.add_argument("--tie-mode", default="lowest_index",
                    choices=("strict_fail", "lowest_index"))
    ce.add_argument("--exclude-query", action="store_true")
    ce.set_defaults(func=_cmd_corpus_eval)

    fig = sub.add_parser("figure", help="reproduce the data behind a figure")
    fig.add_argument("figure_id")
    fig.add_argument("--out-dir", default=".")
    fig.add_argument("--replicates", type=int)
    fig.add_argument("--seed", type=int, default=7)
    fig.add_argument("--workers", type=int, default=1)
    fig.set_defaults(func=_cmd_figure)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except CapacityError as exc:
        print(f"capacity error: {exc}", file=sys.stderr)
        return 3
    except (FormatError, OSError) as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 4
    except (SpecError, ValueError, KeyError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
