"""Command-line entry point.

Three subcommands mirror the dump operations: ``extractive`` writes a
span-logit log (optionally plus a ranked candidate log), ``generative``
writes a beam-candidate log, and ``embeddings`` augments an existing log
with question vectors. Exit codes match the toolkit convention: 0 on
success, 1 when a run produces nothing usable, 2 for input problems.
"""

from __future__ import annotations

import argparse
import sys

from qacalib import EmptyInputError, SchemaError

from .embeddings import dump_embeddings
from .extractive import dump_extractive
from .generative import dump_generative
from .job import AdapterJob


def _job(args: argparse.Namespace, **overrides) -> AdapterJob:
    fields = dict(
        model=args.model,
        dataset=args.dataset,
        out=args.out,
        split=args.split,
        k=args.k,
        max_answer_length=args.max_answer_length,
        batch_size=args.batch_size,
    )
    fields.update(overrides)
    return AdapterJob(**fields)


def _report(result, out: str) -> None:
    print(f"wrote {result.written} records to {out} (skipped {result.skipped})")
    if result.warnings:
        print(f"warnings: {result.warnings} positive log-probabilities",
              file=sys.stderr)


def cmd_extractive(args: argparse.Namespace) -> int:
    result = dump_extractive(_job(args), candidates_out=args.candidates_out)
    _report(result, args.out)
    return 0


def cmd_generative(args: argparse.Namespace) -> int:
    result = dump_generative(_job(args))
    _report(result, args.out)
    return 0


def cmd_embeddings(args: argparse.Namespace) -> int:
    result = dump_embeddings(_job(args, log=args.log,
                                  embedding_model=args.embedding_model))
    _report(result, args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qadump",
        description="Dump QA model outputs as calibration-toolkit logs.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p: argparse.ArgumentParser, *, default_k: int):
        p.add_argument("--model", required=True,
                       help="checkpoint path or hub id")
        p.add_argument("--dataset", required=True,
                       help="question file (JSONL)")
        p.add_argument("--out", required=True, help="output log path")
        p.add_argument("--split", choices=("train", "validation", "test"),
                       default="validation")
        p.add_argument("--k", type=int, default=default_k,
                       help=f"candidates per question (default {default_k})")
        p.add_argument("--max-answer-length", type=int, default=30)
        p.add_argument("--batch-size", type=int, default=8)

    p = sub.add_parser("extractive", help="dump per-token span logits")
    add_common(p, default_k=20)
    p.add_argument("--candidates-out", metavar="PATH",
                   help="also write ranked top-k candidates here")
    p.set_defaults(func=cmd_extractive)

    p = sub.add_parser("generative", help="dump beam-search candidates")
    add_common(p, default_k=10)
    p.set_defaults(func=cmd_generative)

    p = sub.add_parser("embeddings", help="attach question embeddings to a log")
    add_common(p, default_k=20)
    p.add_argument("--log", required=True,
                   help="existing prediction log to augment")
    p.add_argument("--embedding-model", metavar="ID",
                   help="embedding checkpoint (defaults to --model)")
    p.set_defaults(func=cmd_embeddings)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except EmptyInputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (FileNotFoundError, IsADirectoryError, PermissionError, OSError,
            ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
