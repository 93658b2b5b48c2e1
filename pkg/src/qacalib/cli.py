"""Command-line interface.

Subcommands cover the whole pipeline: log validation, candidate extraction,
evaluation, reliability export, temperature fitting, training-mix assembly,
in-context example selection, and correlation reports.

Exit codes: 0 on success, 1 for domain failures (empty results, degenerate
fits, unsatisfiable manifests), 2 for input or schema failures. All output is
deterministic for fixed inputs and flags.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import analysis, corpus_assembly
from .calibrators import FitConfig, fit_dual_temperature, fit_generative_temperature
from .candidate_extraction import ExtractionConfig, extract_top_k_spans
from .confidence_scoring import TemperatureParams, score_records
from .errors import (CorpusError, CorrelationError, EmptyInputError, FitError,
                     NoValidSpanError, SchemaError)
from .prediction_log import (load_prediction_log, load_span_log,
                             partition_by_language, serialize_record)
from .qa_metrics import BinningConfig, format_reliability_csv, reliability_bins
from .reporting import format_rows, reliability_svg


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


def _filter_lang(records: list, lang: str | None) -> list:
    if lang is None:
        return records
    kept = [r for r in records if r.language == lang]
    if not kept:
        raise EmptyInputError(f"no records for language {lang!r}")
    return kept


def _load_temps(path: str | None) -> TemperatureParams | None:
    return None if path is None else TemperatureParams.load(path)


def cmd_validate(args: argparse.Namespace) -> int:
    if args.layout == "span":
        records = load_span_log(args.log)
    else:
        records = load_prediction_log(args.log, expected_kind=args.kind, k_max=args.k)
    languages = sorted({r.language for r in records})
    print(f"OK: {len(records)} records, {len(languages)} languages "
          f"({', '.join(languages)})")
    return 0


def cmd_evaluate(args: argparse.Namespace) -> int:
    records = _filter_lang(load_prediction_log(args.log, k_max=args.k), args.lang)
    scored = score_records(records, _load_temps(args.temperature))
    table = analysis.per_language_table(scored, BinningConfig(args.bins))
    rows = [[r.language, str(r.n), f"{r.em_rate * 100:.2f}", f"{r.ece * 100:.2f}"]
            for r in table]
    _emit(format_rows(["language", "n", "em", "ece"], rows, args.format), args.out)
    return 0


def cmd_reliability(args: argparse.Namespace) -> int:
    records = _filter_lang(load_prediction_log(args.log, k_max=args.k), args.lang)
    scored = score_records(records, _load_temps(args.temperature))
    table = reliability_bins(scored, BinningConfig(args.bins))
    csv_text = format_reliability_csv(table)
    if args.out is None:
        sys.stdout.write(csv_text)
    else:
        Path(args.out + ".csv").write_text(csv_text, encoding="utf-8")
        Path(args.out + ".svg").write_text(reliability_svg(table), encoding="utf-8")
    return 0


def cmd_fit_temperature(args: argparse.Namespace) -> int:
    cfg = FitConfig(tau_min=args.tau_min, tau_max=args.tau_max,
                    grid_size=args.grid, refine_tol=args.tol)
    if args.family == "extractive":
        records = _filter_lang(load_span_log(args.log), args.lang)
        params = fit_dual_temperature(records, cfg)
    else:
        records = _filter_lang(
            load_prediction_log(args.log, expected_kind="generative", k_max=args.k),
            args.lang)
        params = fit_generative_temperature(records, cfg=cfg)
    if args.out is not None:
        params.save(args.out)
    for name in ("kind", "tau", "tau_start", "tau_end"):
        value = getattr(params, name)
        if value is not None:
            print(f"{name}: {value}")
    print(f"nll_before: {params.fit_nll_before:.6f}")
    print(f"nll_after: {params.fit_nll_after:.6f}")
    print(f"hit_bound: {str(params.hit_bound).lower()}")
    if params.excluded_count:
        print(f"excluded: {params.excluded_count}")
    return 0


def cmd_extract_candidates(args: argparse.Namespace) -> int:
    records = _filter_lang(load_span_log(args.log), args.lang)
    cfg = ExtractionConfig(k=args.k, max_answer_length=args.max_answer_length)
    lines = [serialize_record(extract_top_k_spans(r, cfg, dataset=args.dataset,
                                                  split=args.split))
             for r in records]
    _emit("\n".join(lines) + "\n", args.out)
    return 0


def cmd_assemble(args: argparse.Namespace) -> int:
    corpus = corpus_assembly.load_corpus(args.corpus)
    cfg = corpus_assembly.MixConfig(
        mode=args.mode,
        subset_size=args.n,
        languages=tuple(args.languages.split(",")),
        fewshot_per_lang=args.fewshot_per_lang,
        seed=args.seed,
    )
    if args.mode == "fewshot":
        manifest = corpus_assembly.build_fewshot_manifest(corpus, cfg)
    else:
        manifest = corpus_assembly.build_mix_manifest(corpus, cfg)
    _emit("".join(f"{i}\t{lang}\n" for i, lang in manifest), args.out)
    return 0


def _query_vector(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",")]
    except ValueError:
        raise ValueError(f"--query must be comma-separated numbers, got {text!r}") from None


def cmd_icl_select(args: argparse.Namespace) -> int:
    if args.strategy == "random" and args.seed is None:
        raise ValueError("--strategy random requires --seed")
    if args.query is None and args.queries is None:
        raise ValueError("provide --query or --queries")
    if args.render and args.corpus is None:
        raise ValueError("--render requires --corpus")
    pool = _filter_lang(load_prediction_log(args.pool), args.lang)

    if args.query is not None:
        picked = corpus_assembly.select_icl_examples(
            _query_vector(args.query), pool, args.k, args.strategy, args.seed)
        _emit(",".join(picked) + "\n", args.out)
        return 0

    queries = _filter_lang(load_prediction_log(args.queries), args.lang)
    corpus = corpus_assembly.load_corpus(args.corpus) if args.corpus else None
    lines = []
    for query in queries:
        if query.embedding is None:
            raise SchemaError(f"query record {query.qid!r} has no embedding",
                              field="embedding")
        picked = corpus_assembly.select_icl_examples(
            query.embedding, pool, args.k, args.strategy, args.seed)
        entry = {"qid": query.qid, "shot_qids": picked}
        if args.render:
            shots = [corpus.get(qid, args.lang or query.language) for qid in picked]
            target = corpus.get(query.qid, args.lang or query.language)
            rendered = corpus_assembly.render_prompt(
                target.question, target.context,
                [(s.question, s.context, s.answer) for s in shots])
            entry["rendered_prompt"] = rendered
        lines.append(json.dumps(entry, ensure_ascii=False))
    _emit("\n".join(lines) + "\n", args.out)
    return 0


def cmd_correlate(args: argparse.Namespace) -> int:
    records = _filter_lang(load_prediction_log(args.log, k_max=args.k), args.lang)
    scored = score_records(records, _load_temps(args.temperature))
    cfg = BinningConfig(args.bins)
    if args.parallel:
        by_lang = analysis.parallel_confidence_correlation(scored, source=args.source)
        rows = [[lang, "" if r is None else f"{r:.6f}", str(n)]
                for lang, (r, n) in by_lang.items()]
        _emit(format_rows(["language", "r", "n"], rows, args.format), args.out)
        return 0
    if args.features is None:
        raise ValueError("provide --features or --parallel")
    features = analysis.load_features_csv(args.features)
    metrics = [r for r in analysis.per_language_table(scored, cfg)
               if r.language not in (analysis.MACRO_ALL, analysis.MACRO_NON_EN)]
    report = analysis.correlate_ece_with_features(metrics, features)
    if report.unmatched:
        print(f"unmatched languages: {', '.join(report.unmatched)}", file=sys.stderr)
    rows = [[feature, "" if r is None else f"{r:.6f}", str(n)]
            for feature, r, n in report.rows]
    _emit(format_rows(["feature", "r", "n"], rows, args.format), args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qacalib",
        description="Calibration toolkit for multilingual QA prediction logs.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p: argparse.ArgumentParser, *, bins=False, temperature=False,
                   lang=False, fmt=False, out=False, k=False):
        if bins:
            p.add_argument("--bins", type=int, default=10,
                           help="number of confidence bins (default 10)")
        if temperature:
            p.add_argument("--temperature", metavar="FILE",
                           help="fitted temperature JSON to apply")
        if lang:
            p.add_argument("--lang", metavar="CODE", help="keep only this language")
        if fmt:
            p.add_argument("--format", choices=("table", "csv", "markdown"),
                           default="table", help="output format (default table)")
        if out:
            p.add_argument("--out", metavar="PATH", help="write output here "
                           "instead of stdout")
        if k:
            p.add_argument("--k", type=int, default=20,
                           help="candidate-list size limit (default 20)")

    p = sub.add_parser("validate", help="check a log against its schema")
    p.add_argument("log")
    p.add_argument("--layout", choices=("prediction", "span"), default="prediction")
    p.add_argument("--kind", choices=("extractive", "generative"),
                   help="require this model kind (prediction layout only)")
    add_common(p, k=True)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("evaluate", help="per-language EM and calibration error")
    p.add_argument("log")
    add_common(p, bins=True, temperature=True, lang=True, fmt=True, out=True, k=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("reliability", help="export reliability bins and diagram")
    p.add_argument("log")
    add_common(p, bins=True, temperature=True, lang=True, out=True, k=True)
    p.set_defaults(func=cmd_reliability)

    p = sub.add_parser("fit-temperature", help="fit temperatures on a validation log")
    p.add_argument("log")
    p.add_argument("--family", choices=("extractive", "generative"), required=True)
    p.add_argument("--tau-min", type=float, default=0.05)
    p.add_argument("--tau-max", type=float, default=50.0)
    p.add_argument("--grid", type=int, default=50)
    p.add_argument("--tol", type=float, default=1e-4)
    add_common(p, lang=True, out=True, k=True)
    p.set_defaults(func=cmd_fit_temperature)

    p = sub.add_parser("extract-candidates",
                       help="turn span logits into ranked candidate records")
    p.add_argument("log")
    p.add_argument("--max-answer-length", type=int, default=30)
    p.add_argument("--dataset", default="")
    p.add_argument("--split", choices=("train", "validation", "test"),
                   default="validation")
    add_common(p, lang=True, out=True, k=True)
    p.set_defaults(func=cmd_extract_candidates)

    p = sub.add_parser("assemble", help="build a training-mix manifest")
    p.add_argument("corpus")
    p.add_argument("--mode", choices=corpus_assembly.MIX_MODES + ("fewshot",),
                   required=True)
    p.add_argument("--n", type=int, required=True, help="English subset size")
    p.add_argument("--languages", required=True,
                   help="comma-separated codes, English first")
    p.add_argument("--fewshot-per-lang", type=int, default=1000)
    p.add_argument("--seed", type=int, required=True)
    add_common(p, out=True)
    p.set_defaults(func=cmd_assemble)

    p = sub.add_parser("icl-select", help="pick in-context examples from a pool")
    p.add_argument("pool", help="prediction log with embeddings")
    p.add_argument("--strategy", choices=("adaptive", "random"), default="adaptive")
    p.add_argument("--k", type=int, default=4,
                   help="examples to select per query (default 4)")
    p.add_argument("--query", help="inline comma-separated query vector")
    p.add_argument("--queries", metavar="FILE",
                   help="prediction log of embedded queries")
    p.add_argument("--corpus", metavar="FILE",
                   help="parallel corpus supplying prompt text")
    p.add_argument("--render", action="store_true",
                   help="render full prompts (needs --corpus)")
    p.add_argument("--seed", type=int)
    add_common(p, lang=True, out=True)
    p.set_defaults(func=cmd_icl_select)

    p = sub.add_parser("correlate", help="correlate calibration error with "
                       "language features or parallel confidences")
    p.add_argument("log")
    p.add_argument("--features", metavar="FILE", help="language features CSV")
    p.add_argument("--parallel", action="store_true",
                   help="correlate confidences across parallel items instead")
    p.add_argument("--source", default="en", help="source language (default en)")
    add_common(p, bins=True, temperature=True, lang=True, fmt=True, out=True, k=True)
    p.set_defaults(func=cmd_correlate)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (EmptyInputError, NoValidSpanError, FitError, CorpusError,
            CorrelationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (FileNotFoundError, IsADirectoryError, PermissionError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
