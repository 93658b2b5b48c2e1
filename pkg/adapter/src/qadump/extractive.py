"""Span-logit dumps from extractive QA checkpoints.

Each question becomes one SpanLogitRecord: per-token start and end scores,
a mask marking context tokens, and character offsets into the context
string. Non-context tokens get collapsed offsets (0 before the context,
the last context end after it) so offsets stay monotone. Records whose
gold answer cannot be mapped onto token boundaries are skipped and counted
rather than emitted half-valid.
"""

from __future__ import annotations

import torch
from transformers import AutoModelForQuestionAnswering, AutoTokenizer

from qacalib import (EmptyInputError, ExtractionConfig, SchemaError,
                     SpanLogitRecord, extract_top_k_spans, write_prediction_log,
                     write_span_log)

from .dataset import QAExample, load_qa_dataset
from .job import AdapterJob, DumpResult
from .runtime import batches, model_max_length


class _SkipRecord(Exception):
    pass


def _align_gold(example: QAExample, ctx: list[int],
                offsets: list[tuple[int, int]]) -> tuple[int, int]:
    answer = example.answers[0]
    s_char = example.answer_start
    e_char = s_char + len(answer)
    if example.context[s_char:e_char] != answer:
        raise _SkipRecord("answer_start does not point at the answer text")
    gold_start = gold_end = None
    for t in ctx:
        ts, te = offsets[t]
        if gold_start is None and ts <= s_char < te:
            gold_start = t
        if ts < e_char <= te:
            gold_end = t
    if gold_start is None or gold_end is None or gold_end < gold_start:
        raise _SkipRecord("gold answer does not align with token boundaries")
    return gold_start, gold_end


def _span_record(example: QAExample, seq_ids, offsets, attention,
                 start_logits, end_logits, *, want_gold: bool) -> SpanLogitRecord:
    keep = [t for t in range(len(seq_ids)) if attention[t] == 1]
    ctx = [t for t in keep if seq_ids[t] == 1]
    if not ctx:
        raise _SkipRecord("no context tokens survived tokenization")
    tail = int(offsets[ctx[-1]][1])

    tok_offsets: list[tuple[int, int]] = []
    mask: list[bool] = []
    for t in keep:
        if seq_ids[t] == 1:
            tok_offsets.append((int(offsets[t][0]), int(offsets[t][1])))
            mask.append(True)
        else:
            edge = 0 if t < ctx[0] else tail
            tok_offsets.append((edge, edge))
            mask.append(False)

    gold_start = gold_end = None
    if want_gold and example.answer_start is not None:
        gold_start, gold_end = _align_gold(example, ctx, offsets)

    return SpanLogitRecord(
        qid=example.qid,
        language=example.language,
        start_logits=tuple(float(start_logits[t]) for t in keep),
        end_logits=tuple(float(end_logits[t]) for t in keep),
        context_mask=tuple(mask),
        token_offsets=tuple(tok_offsets),
        context_text=example.context,
        gold_start=gold_start,
        gold_end=gold_end,
    )


def dump_extractive(job: AdapterJob, *, candidates_out: str | None = None) -> DumpResult:
    """Run the checkpoint over the question file and write a span-logit log.

    With ``candidates_out`` the span logits are additionally reduced to a
    ranked top-k prediction log using the toolkit's extraction rules.
    """
    tokenizer = AutoTokenizer.from_pretrained(job.model)
    model = AutoModelForQuestionAnswering.from_pretrained(job.model).eval()
    limit = model_max_length(model, tokenizer)
    examples = load_qa_dataset(job.dataset)

    records = []
    skipped = 0
    for batch in batches(examples, job.batch_size):
        enc = tokenizer([e.question for e in batch], [e.context for e in batch],
                        padding=True, truncation="only_second", max_length=limit,
                        return_offsets_mapping=True, return_tensors="pt")
        offset_mapping = enc.pop("offset_mapping")
        with torch.no_grad():
            out = model(**enc)
        for row, example in enumerate(batch):
            try:
                records.append(_span_record(
                    example,
                    enc.sequence_ids(row),
                    offset_mapping[row].tolist(),
                    enc["attention_mask"][row].tolist(),
                    out.start_logits[row].tolist(),
                    out.end_logits[row].tolist(),
                    want_gold=job.split != "test"))
            except (_SkipRecord, SchemaError):
                skipped += 1
    if not records:
        raise EmptyInputError("every question was skipped; nothing to write")

    write_span_log(job.out, records)
    if candidates_out is not None:
        cfg = ExtractionConfig(k=job.k, max_answer_length=job.max_answer_length)
        write_prediction_log(candidates_out, [
            extract_top_k_spans(rec, cfg, dataset=job.dataset_name,
                                split=job.split)
            for rec in records])
    return DumpResult(written=len(records), skipped=skipped)
