"""Command-line interface.

Subcommands: prune, search, eval, stats, clusters, gradcheck, traintoy,
convert. All randomness flows from explicit ``--seed`` flags; settings
resolve as flags > CRISP_* environment variables > defaults. Exit codes:
0 success, 1 spec or validation errors, 2 malformed input files. Every
failure writes one machine-parsable line to stderr:
``crisp: error code=<n> kind=<kind> msg="<detail>"``.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from . import io as eio
from .core import PruneSpec
from .errors import CrispError, ParseError
from .evaluation import load_qrels, load_run, ndcg_per_query, search, write_run
from .loss import grad_check, sgd_fit
from .pruning import prune_corpus
from .stats import (
    bundled_token_stats,
    load_token_stats,
    size_table,
    size_table_csv,
)
from .synthetic import demo_batch, planted_task


def _env(name: str, cast, default):
    raw = os.environ.get(f"CRISP_{name}")
    if raw is None:
        return default
    try:
        return cast(raw)
    except ValueError:
        raise ParseError(f"environment variable CRISP_{name}={raw!r} is not a valid {cast.__name__}")


def _resolve(flag, name: str, cast, default):
    if flag is not None:
        return flag
    return _env(name, cast, default)


def _parse_spec(text: str, seed: int) -> PruneSpec:
    try:
        return PruneSpec.parse(text, seed=seed)
    except CrispError:
        raise
    except ValueError as exc:
        raise CrispError(str(exc)) from None


def _cmd_prune(args) -> int:
    seed = _resolve(args.seed, "SEED", int, 0)
    threads = _resolve(args.threads, "THREADS", int, 1)
    spec = _parse_spec(args.spec, seed)
    records = eio.read_embeddings(args.infile)
    fmt = eio.sniff_format(args.infile)
    reps = prune_corpus(records, spec, threads=threads)
    eio.write_embeddings([r.matrix for r in reps], args.out, fmt)
    if spec.is_clustering:
        sidecar = Path(args.out).with_name(Path(args.out).name + ".assignments")
        with open(sidecar, "w", encoding="utf-8") as fh:
            for rep in reps:
                for token, cluster in enumerate(rep.assignments):
                    fh.write(f"{rep.matrix.id} {token} {cluster}\n")
    return 0


def _cmd_search(args) -> int:
    seed = _resolve(args.seed, "SEED", int, 0)
    threads = _resolve(args.threads, "THREADS", int, 1)
    qspec = _parse_spec(args.qspec, seed)
    dspec = _parse_spec(args.dspec, seed)
    queries = eio.read_embeddings(args.queries)
    corpus = eio.read_embeddings(args.corpus)
    pruned_docs = prune_corpus(corpus, dspec, threads=threads)
    run = {}
    for query in queries:
        from .evaluation import _search_pruned

        run[query.id] = _search_pruned(query, pruned_docs, qspec, args.topk, threads)
    with open(args.out, "w", encoding="utf-8") as fh:
        write_run(run, fh, tag=args.tag)
    return 0


def _cmd_eval(args) -> int:
    with open(args.run, "r", encoding="utf-8") as fh:
        run = load_run(fh)
    with open(args.qrels, "r", encoding="utf-8") as fh:
        qrels = load_qrels(fh)
    per_query, skipped = ndcg_per_query(run, qrels, args.k)
    if not per_query:
        raise CrispError("no query in the run has positive relevance judgments")
    for qid in sorted(per_query):
        print(f"{qid} ndcg@{args.k} {per_query[qid]:.4f}")
    print(f"skipped {skipped}")
    print(f"ndcg@{args.k} {sum(per_query.values()) / len(per_query):.4f}")
    return 0


def _cmd_stats(args) -> int:
    if args.tokens is None:
        rows = bundled_token_stats()
    else:
        with open(args.tokens, "r", encoding="utf-8") as fh:
            rows = load_token_stats(fh)
    print(size_table(rows, args.k_doc, args.k_query))
    if args.export:
        with open(args.export, "w", encoding="utf-8") as fh:
            fh.write(size_table_csv(rows, args.k_doc, args.k_query))
    return 0


def _cmd_clusters(args) -> int:
    seed = _resolve(args.seed, "SEED", int, 0)
    spec = _parse_spec(args.spec, seed)
    if not spec.is_clustering:
        raise CrispError(f"clusters requires a clustering spec, got {args.spec!r}")
    records = eio.read_embeddings(args.infile)
    reps = prune_corpus(records, spec)
    for rep in reps:
        for token, cluster in enumerate(rep.assignments):
            print(f"{rep.matrix.id} {token} {cluster}")
    if args.match:
        mspec = _parse_spec(args.match_spec, seed) if args.match_spec else spec
        if not mspec.is_clustering:
            raise CrispError(f"--match-spec must be a clustering spec, got {args.match_spec!r}")
        match_reps = prune_corpus(eio.read_embeddings(args.match), mspec)
        pool = [
            (rep.matrix.id, ci, rep.matrix.rows[ci])
            for rep in match_reps
            for ci in range(rep.m)
        ]
        for rep in reps:
            for ci in range(rep.m):
                centroid = rep.matrix.rows[ci]
                scores = [float(np.dot(centroid, row)) for _, _, row in pool]
                best = int(np.argmax(scores))
                mid, mci, _ = pool[best]
                print(f"match {rep.matrix.id} {ci} {mid} {mci} {scores[best]:.6f}")
    return 0


def _cmd_gradcheck(args) -> int:
    seed = _resolve(args.seed, "SEED", int, 3)
    qspec = _parse_spec(args.qspec, seed)
    dspec = _parse_spec(args.dspec, seed)
    batch = demo_batch(seed=seed, query_spec=qspec, doc_spec=dspec)
    report = grad_check(batch, step=args.step, samples=args.samples, seed=seed)
    item, token, comp = report.worst_coordinate
    print(f"max_rel_error {report.max_rel_error:.3e}")
    print(f"worst_coordinate {item} {token} {comp}")
    print(f"analytic {report.analytic:.12g}")
    print(f"numeric {report.numeric:.12g}")
    print(f"step {report.step:g}")
    if report.max_rel_error < 1e-4:
        print("gradcheck PASS")
        return 0
    print("gradcheck FAIL")
    return 1


def _cmd_traintoy(args) -> int:
    seed = _resolve(args.seed, "SEED", int, 11)
    task = planted_task(seed=seed)
    print(f"initial_accuracy {task.accuracy(task.params):.4f}")
    result = sgd_fit(task.make_batch, task.params, args.lr, args.steps, seed)
    for step, value in enumerate(result.loss_trace):
        if step % max(1, args.steps // 20) == 0 or step == args.steps - 1:
            print(f"step {step} loss {value:.6f}")
    print(f"final_accuracy {task.accuracy(result.embeddings):.4f}")
    return 0


def _cmd_convert(args) -> int:
    records = eio.read_embeddings(args.infile)
    fmt = args.to or ("jsonl" if eio.sniff_format(args.infile) == "binary" else "binary")
    eio.write_embeddings(records, args.out, fmt)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="crisp", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("prune", help="prune an embedding file")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--spec", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--threads", type=int, default=None)
    p.set_defaults(func=_cmd_prune)

    p = sub.add_parser("search", help="brute-force retrieval to a TREC run file")
    p.add_argument("--queries", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--qspec", required=True)
    p.add_argument("--dspec", required=True)
    p.add_argument("--topk", type=int, default=10)
    p.add_argument("--out", required=True)
    p.add_argument("--tag", default="crisp")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--threads", type=int, default=None)
    p.set_defaults(func=_cmd_search)

    p = sub.add_parser("eval", help="NDCG@k of a run file against qrels")
    p.add_argument("--run", required=True)
    p.add_argument("--qrels", required=True)
    p.add_argument("--k", type=int, default=10)
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("stats", help="relative representation sizes from token counts")
    p.add_argument("--tokens", default=None, help="token-count file (default: bundled)")
    p.add_argument("--k-doc", type=int, required=True)
    p.add_argument("--k-query", type=int, required=True)
    p.add_argument("--export", default=None, help="also write CSV here")
    p.set_defaults(func=_cmd_stats)

    p = sub.add_parser("clusters", help="dump cluster membership, optionally matched")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--spec", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--match", default=None)
    p.add_argument("--match-spec", dest="match_spec", default=None)
    p.set_defaults(func=_cmd_clusters)

    p = sub.add_parser("gradcheck", help="finite-difference check on a built-in batch")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--step", type=float, default=1e-5)
    p.add_argument("--samples", type=int, default=64)
    p.add_argument("--qspec", default="full")
    p.add_argument("--dspec", default="full")
    p.set_defaults(func=_cmd_gradcheck)

    p = sub.add_parser("traintoy", help="gradient descent on the planted topic task")
    p.add_argument("--steps", type=int, default=200)
    p.add_argument("--lr", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=_cmd_traintoy)

    p = sub.add_parser("convert", help="convert between JSONL and binary containers")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--to", choices=("jsonl", "binary"), default=None)
    p.set_defaults(func=_cmd_convert)

    return parser


def _fail(code: int, kind: str, msg: str) -> int:
    line = str(msg).replace('"', "'").replace("\n", " ")
    print(f'crisp: error code={code} kind={kind} msg="{line}"', file=sys.stderr)
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ParseError as exc:
        return _fail(2, "parse", str(exc))
    except FileNotFoundError as exc:
        return _fail(2, "io", str(exc))
    except CrispError as exc:
        return _fail(1, "spec", str(exc))
    except ValueError as exc:
        return _fail(1, "value", str(exc))


if __name__ == "__main__":
    sys.exit(main())
