"""Beam-search candidate dumps from generative (causal LM) checkpoints.

Prompts follow the toolkit's instruction template. Decoding keeps the k
best beams with their raw joint log-probabilities: length penalty is
disabled so ``sequences_scores`` is a plain sum of token log-probabilities
rather than a length-normalized value. Answers are cut at the first
newline, mirroring how the prompt terminates in-context answers.
"""

from __future__ import annotations

import torch
from transformers import AutoModelForCausalLM, AutoTokenizer

from qacalib import (CandidateAnswer, EmptyInputError, PredictionRecord,
                     render_prompt, write_prediction_log)

from .dataset import load_qa_dataset
from .job import AdapterJob, DumpResult
from .runtime import model_max_length


def dump_generative(job: AdapterJob) -> DumpResult:
    """Decode k beams per question and write a generative prediction log."""
    tokenizer = AutoTokenizer.from_pretrained(job.model)
    model = AutoModelForCausalLM.from_pretrained(job.model).eval()
    pad_id = tokenizer.pad_token_id
    if pad_id is None:
        pad_id = tokenizer.eos_token_id
    limit = model_max_length(model, tokenizer)
    prompt_budget = limit - job.max_answer_length
    if prompt_budget < 1:
        raise ValueError(f"max_answer_length {job.max_answer_length} leaves no "
                         f"room for the prompt (model limit {limit})")

    records = []
    skipped = 0
    positive_scores = 0
    for example in load_qa_dataset(job.dataset):
        prompt = render_prompt(example.question, example.context)
        enc = tokenizer(prompt, return_tensors="pt", truncation=True,
                        max_length=prompt_budget)
        with torch.no_grad():
            gen = model.generate(
                **enc,
                num_beams=job.k,
                num_return_sequences=job.k,
                max_new_tokens=job.max_answer_length,
                min_new_tokens=1,
                length_penalty=0.0,
                do_sample=False,
                early_stopping=True,
                output_scores=True,
                return_dict_in_generate=True,
                pad_token_id=pad_id,
            )
        prompt_len = enc["input_ids"].shape[1]
        texts = tokenizer.batch_decode(gen.sequences[:, prompt_len:],
                                       skip_special_tokens=True)
        candidates = []
        for text, score in zip(texts, gen.sequences_scores.tolist()):
            answer = text.split("\n", 1)[0].strip()
            if not answer:
                continue
            if score > 0:
                positive_scores += 1
            candidates.append(CandidateAnswer(text=answer, log_prob=float(score)))
        if not candidates:
            skipped += 1
            continue
        candidates.sort(key=lambda c: -c.log_prob)
        records.append(PredictionRecord(
            qid=example.qid,
            language=example.language,
            dataset=job.dataset_name,
            split=job.split,
            model_kind="generative",
            gold_answers=tuple(example.answers),
            candidates=tuple(candidates),
        ))
    if not records:
        raise EmptyInputError("every question was skipped; nothing to write")

    write_prediction_log(job.out, records)
    return DumpResult(written=len(records), skipped=skipped,
                      warnings=positive_scores)
