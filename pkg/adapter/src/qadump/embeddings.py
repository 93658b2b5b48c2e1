"""Question embeddings for in-context example pools.

Takes an existing prediction log plus the question file it came from,
embeds each record's question text with an encoder checkpoint (mean-pooled
last hidden states over real tokens), and writes the same records back
with the ``embedding`` field attached.
"""

from __future__ import annotations

import dataclasses

import torch
from transformers import AutoModel, AutoTokenizer

from qacalib import EmptyInputError, SchemaError, load_prediction_log, write_prediction_log

from .dataset import load_qa_dataset
from .job import AdapterJob, DumpResult
from .runtime import batches, model_max_length


def _embed(texts: list[str], tokenizer, model, batch_size: int,
           limit: int) -> list[tuple[float, ...]]:
    vectors: list[tuple[float, ...]] = []
    for chunk in batches(texts, batch_size):
        enc = tokenizer(list(chunk), padding=True, truncation=True,
                        max_length=limit, return_tensors="pt")
        with torch.no_grad():
            hidden = model(**enc).last_hidden_state
        mask = enc["attention_mask"].unsqueeze(-1).to(hidden.dtype)
        pooled = (hidden * mask).sum(dim=1) / mask.sum(dim=1).clamp(min=1.0)
        vectors.extend(tuple(float(x) for x in row) for row in pooled)
    return vectors


def dump_embeddings(job: AdapterJob) -> DumpResult:
    """Attach question embeddings to every record of an existing log."""
    if job.log is None:
        raise ValueError("embedding dumps need an input prediction log")
    model_id = job.embedding_model if job.embedding_model is not None else job.model
    tokenizer = AutoTokenizer.from_pretrained(model_id)
    model = AutoModel.from_pretrained(model_id).eval()
    limit = model_max_length(model, tokenizer)

    by_qid = {e.qid: e for e in load_qa_dataset(job.dataset)}
    kept = []
    texts = []
    skipped = 0
    for rec in load_prediction_log(job.log):
        example = by_qid.get(rec.qid)
        if example is None:
            skipped += 1
            continue
        kept.append(rec)
        texts.append(example.question)
    if not kept:
        raise EmptyInputError("no log record matches the question file")

    vectors = _embed(texts, tokenizer, model, job.batch_size, limit)
    dims = {len(v) for v in vectors}
    if len(dims) != 1:
        raise SchemaError(f"embedding dimension drifted within one dump: {sorted(dims)}",
                          field="embedding")

    write_prediction_log(job.out, [
        dataclasses.replace(rec, embedding=vec)
        for rec, vec in zip(kept, vectors)])
    return DumpResult(written=len(kept), skipped=skipped)
