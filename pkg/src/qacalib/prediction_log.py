"""Prediction-log data model: records, JSONL parsing, validation, serialization.

Two line formats share a file convention (UTF-8, one JSON object per line):

* prediction records - a question id plus a ranked candidate list, either
  extractive (``start_logit``/``end_logit`` per candidate) or generative
  (``log_prob`` per candidate);
* span-logit records - raw per-token start/end logits over a tokenized
  context, used as input to candidate extraction and temperature fitting.

Parsing is streaming and strict: every failure names the offending line and
field. Records are immutable and hashable so they can round-trip through
serialize/parse unchanged.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Iterable, Iterator

from .errors import EmptyInputError, KindMismatchError, LogWarning, SchemaError

MODEL_KINDS = ("extractive", "generative")
SPLITS = ("train", "validation", "test")

# Language codes the toolkit has metrics conventions for. Codes outside this
# set are accepted with a warning so new languages do not block parsing.
KNOWN_LANGUAGES = frozenset(
    "en ar de el es hi ro ru th tr vi zh ko fi sw id bn te".split()
)

_PREDICTION_KEYS = frozenset(
    ("qid", "language", "dataset", "split", "model_kind", "gold_answers",
     "candidates", "parallel_id", "embedding")
)
_PREDICTION_REQUIRED = ("qid", "language", "dataset", "split", "model_kind",
                        "gold_answers", "candidates")
_SPAN_KEYS = frozenset(
    ("qid", "language", "start_logits", "end_logits", "context_mask",
     "token_offsets", "context_text", "gold_start", "gold_end")
)
_SPAN_REQUIRED = ("qid", "language", "start_logits", "end_logits",
                  "context_mask", "token_offsets", "context_text")


def _check_language(code: object) -> str:
    if not isinstance(code, str) or len(code) != 2 or not code.isascii() \
            or not code.isalpha() or not code.islower():
        raise SchemaError("language must be a 2-letter lowercase code", field="language")
    return code


@dataclass(frozen=True)
class CandidateAnswer:
    """One ranked answer candidate with its kind-specific score fields."""

    text: str
    start_logit: float | None = None
    end_logit: float | None = None
    log_prob: float | None = None

    def __post_init__(self):
        has_span = self.start_logit is not None or self.end_logit is not None
        has_lp = self.log_prob is not None
        if has_span and has_lp:
            raise SchemaError("candidate mixes extractive and generative scores",
                              field="log_prob")
        if has_span:
            if self.start_logit is None or self.end_logit is None:
                missing = "start_logit" if self.start_logit is None else "end_logit"
                raise SchemaError("extractive candidate needs both logits", field=missing)
            for name in ("start_logit", "end_logit"):
                if not math.isfinite(getattr(self, name)):
                    raise SchemaError("score must be finite", field=name)
        elif has_lp:
            if not math.isfinite(self.log_prob):
                raise SchemaError("score must be finite", field="log_prob")
        else:
            raise SchemaError("candidate carries no score fields", field="candidates")

    @property
    def kind(self) -> str:
        return "generative" if self.log_prob is not None else "extractive"


@dataclass(frozen=True)
class PredictionRecord:
    """A scored QA prediction: gold answers plus a ranked candidate list."""

    qid: str
    language: str
    dataset: str
    split: str
    model_kind: str
    gold_answers: tuple[str, ...]
    candidates: tuple[CandidateAnswer, ...]
    parallel_id: str | None = None
    embedding: tuple[float, ...] | None = None

    def __post_init__(self):
        _check_language(self.language)
        if self.split not in SPLITS:
            raise SchemaError(f"split must be one of {SPLITS}", field="split")
        if self.model_kind not in MODEL_KINDS:
            raise SchemaError(f"model_kind must be one of {MODEL_KINDS}", field="model_kind")
        if not self.gold_answers:
            raise SchemaError("gold_answers must be non-empty", field="gold_answers")
        if not self.candidates:
            raise SchemaError("candidates must be non-empty", field="candidates")
        for cand in self.candidates:
            if cand.kind != self.model_kind:
                raise SchemaError(
                    f"candidate score fields do not match model_kind {self.model_kind!r}",
                    field="candidates")
        if self.embedding is not None:
            if not self.embedding:
                raise SchemaError("embedding must be non-empty when present", field="embedding")
            for v in self.embedding:
                if not math.isfinite(v):
                    raise SchemaError("embedding values must be finite", field="embedding")


@dataclass(frozen=True)
class SpanLogitRecord:
    """Per-token start/end logits over a tokenized context window."""

    qid: str
    language: str
    start_logits: tuple[float, ...]
    end_logits: tuple[float, ...]
    context_mask: tuple[bool, ...]
    token_offsets: tuple[tuple[int, int], ...]
    context_text: str
    gold_start: int | None = None
    gold_end: int | None = None

    def __post_init__(self):
        _check_language(self.language)
        n = len(self.start_logits)
        if n < 1:
            raise SchemaError("record must cover at least one token", field="start_logits")
        for name in ("end_logits", "context_mask", "token_offsets"):
            if len(getattr(self, name)) != n:
                raise SchemaError(f"{name} length differs from start_logits", field=name)
        for name in ("start_logits", "end_logits"):
            for v in getattr(self, name):
                if not math.isfinite(v):
                    raise SchemaError("logits must be finite", field=name)
        prev_s = prev_e = 0
        for s, e in self.token_offsets:
            if s < 0 or s > e or e > len(self.context_text):
                raise SchemaError("token offset outside context_text", field="token_offsets")
            if s < prev_s or e < prev_e:
                raise SchemaError("token offsets must be non-decreasing", field="token_offsets")
            prev_s, prev_e = s, e
        if (self.gold_start is None) != (self.gold_end is None):
            raise SchemaError("gold_start and gold_end must be present together",
                              field="gold_start")
        if self.gold_start is not None:
            if not 0 <= self.gold_start <= self.gold_end < n:
                raise SchemaError("gold span out of range", field="gold_start")
            if not (self.context_mask[self.gold_start] and self.context_mask[self.gold_end]):
                raise SchemaError("gold span must lie on context tokens", field="gold_start")

    @property
    def num_tokens(self) -> int:
        return len(self.start_logits)


def _iter_lines(source) -> Iterator[tuple[int, str]]:
    """Yield (line_number, text) pairs from a path, file object, or iterable."""
    if isinstance(source, (str, Path)):
        with open(source, "rb") as fh:
            yield from _iter_lines(fh)
        return
    lines: Iterable = source
    for lineno, raw in enumerate(lines, start=1):
        if isinstance(raw, bytes):
            try:
                raw = raw.decode("utf-8")
            except UnicodeDecodeError as exc:
                raise SchemaError(f"not valid UTF-8: {exc}", line=lineno) from exc
        yield lineno, raw


def _load_object(text: str, lineno: int) -> dict:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON: {exc.msg}", line=lineno) from exc
    if not isinstance(obj, dict):
        raise SchemaError("line is not a JSON object", line=lineno)
    return obj


def _check_keys(obj: dict, allowed: frozenset, required: tuple, lineno: int) -> None:
    for key in obj:
        if key not in allowed:
            raise SchemaError(f"unknown field {key!r}", line=lineno, field=key)
    for key in required:
        if key not in obj:
            raise SchemaError(f"missing field {key!r}", line=lineno, field=key)


def _as_str(obj: dict, key: str, lineno: int) -> str:
    v = obj[key]
    if not isinstance(v, str):
        raise SchemaError(f"{key} must be a string", line=lineno, field=key)
    return v


def _as_number(value, key: str, lineno: int) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaError(f"{key} must be a number", line=lineno, field=key)
    return float(value)


def _candidate_from_obj(obj, lineno: int, allow_empty_text: bool) -> CandidateAnswer:
    if not isinstance(obj, dict):
        raise SchemaError("candidate must be an object", line=lineno, field="candidates")
    keys = set(obj)
    if keys == {"text", "start_logit", "end_logit"}:
        cand = CandidateAnswer(
            text=_as_str(obj, "text", lineno),
            start_logit=_as_number(obj["start_logit"], "start_logit", lineno),
            end_logit=_as_number(obj["end_logit"], "end_logit", lineno),
        )
    elif keys == {"text", "log_prob"}:
        cand = CandidateAnswer(
            text=_as_str(obj, "text", lineno),
            log_prob=_as_number(obj["log_prob"], "log_prob", lineno),
        )
    else:
        raise SchemaError(
            "candidate fields must be text+start_logit+end_logit or text+log_prob",
            line=lineno, field="candidates")
    if cand.text == "" and not (allow_empty_text and cand.kind == "extractive"):
        raise SchemaError("candidate text is empty", line=lineno, field="text")
    if cand.log_prob is not None and cand.log_prob > 0:
        warnings.warn(f"line {lineno}: log_prob {cand.log_prob} is positive",
                      LogWarning, stacklevel=3)
    return cand


def _record_from_obj(obj: dict, lineno: int, k_max: int,
                     allow_empty_text: bool) -> PredictionRecord:
    _check_keys(obj, _PREDICTION_KEYS, _PREDICTION_REQUIRED, lineno)
    golds = obj["gold_answers"]
    if not isinstance(golds, list) or not golds or \
            any(not isinstance(g, str) for g in golds):
        raise SchemaError("gold_answers must be a non-empty list of strings",
                          line=lineno, field="gold_answers")
    raw_cands = obj["candidates"]
    if not isinstance(raw_cands, list) or not raw_cands:
        raise SchemaError("candidates must be a non-empty list",
                          line=lineno, field="candidates")
    if len(raw_cands) > k_max:
        raise SchemaError(f"{len(raw_cands)} candidates exceed the limit of {k_max}",
                          line=lineno, field="candidates")
    cands = tuple(_candidate_from_obj(c, lineno, allow_empty_text) for c in raw_cands)

    parallel_id = obj.get("parallel_id")
    if parallel_id is not None and not isinstance(parallel_id, str):
        raise SchemaError("parallel_id must be a string", line=lineno, field="parallel_id")
    embedding = obj.get("embedding")
    if embedding is not None:
        if not isinstance(embedding, list) or not embedding:
            raise SchemaError("embedding must be a non-empty list",
                              line=lineno, field="embedding")
        embedding = tuple(_as_number(v, "embedding", lineno) for v in embedding)

    try:
        return PredictionRecord(
            qid=_as_str(obj, "qid", lineno),
            language=_as_str(obj, "language", lineno),
            dataset=_as_str(obj, "dataset", lineno),
            split=_as_str(obj, "split", lineno),
            model_kind=_as_str(obj, "model_kind", lineno),
            gold_answers=tuple(golds),
            candidates=cands,
            parallel_id=parallel_id,
            embedding=embedding,
        )
    except SchemaError as exc:
        raise SchemaError(str(exc), line=lineno, field=exc.field) from exc


def _span_from_obj(obj: dict, lineno: int) -> SpanLogitRecord:
    _check_keys(obj, _SPAN_KEYS, _SPAN_REQUIRED, lineno)

    def number_tuple(key: str) -> tuple[float, ...]:
        v = obj[key]
        if not isinstance(v, list):
            raise SchemaError(f"{key} must be a list", line=lineno, field=key)
        return tuple(_as_number(x, key, lineno) for x in v)

    mask = obj["context_mask"]
    if not isinstance(mask, list) or any(not isinstance(b, bool) for b in mask):
        raise SchemaError("context_mask must be a list of booleans",
                          line=lineno, field="context_mask")
    offsets = obj["token_offsets"]
    if not isinstance(offsets, list):
        raise SchemaError("token_offsets must be a list", line=lineno, field="token_offsets")
    pairs = []
    for pair in offsets:
        if not isinstance(pair, list) or len(pair) != 2 or \
                any(isinstance(x, bool) or not isinstance(x, int) for x in pair):
            raise SchemaError("token_offsets entries must be [start, end] integer pairs",
                              line=lineno, field="token_offsets")
        pairs.append((pair[0], pair[1]))

    def gold(key: str) -> int | None:
        v = obj.get(key)
        if v is None:
            return None
        if isinstance(v, bool) or not isinstance(v, int):
            raise SchemaError(f"{key} must be an integer", line=lineno, field=key)
        return v

    try:
        return SpanLogitRecord(
            qid=_as_str(obj, "qid", lineno),
            language=_as_str(obj, "language", lineno),
            start_logits=number_tuple("start_logits"),
            end_logits=number_tuple("end_logits"),
            context_mask=tuple(mask),
            token_offsets=tuple(pairs),
            context_text=_as_str(obj, "context_text", lineno),
            gold_start=gold("gold_start"),
            gold_end=gold("gold_end"),
        )
    except SchemaError as exc:
        raise SchemaError(str(exc), line=lineno, field=exc.field) from exc


def parse_log(source: str | Path | IO | Iterable,
              expected_kind: str | None = None,
              *,
              k_max: int = 20,
              allow_empty_candidate_text: bool = False) -> Iterator[PredictionRecord]:
    """Stream prediction records from a JSONL source.

    ``source`` may be a path, an open file (text or binary), or an iterable
    of lines. Blank lines are skipped. Raises :class:`SchemaError` with the
    line number on the first invalid line, :class:`KindMismatchError` when a
    record's ``model_kind`` differs from ``expected_kind``, and
    :class:`EmptyInputError` when the source holds no records at all.
    """
    if expected_kind is not None and expected_kind not in MODEL_KINDS:
        raise ValueError(f"expected_kind must be one of {MODEL_KINDS}")
    count = 0
    embedding_dim: int | None = None
    warned_languages: set[str] = set()
    for lineno, text in _iter_lines(source):
        if not text.strip():
            continue
        obj = _load_object(text, lineno)
        rec = _record_from_obj(obj, lineno, k_max, allow_empty_candidate_text)
        if expected_kind is not None and rec.model_kind != expected_kind:
            raise KindMismatchError(
                f"expected {expected_kind} record, found {rec.model_kind}",
                line=lineno, field="model_kind")
        if rec.embedding is not None:
            if embedding_dim is None:
                embedding_dim = len(rec.embedding)
            elif len(rec.embedding) != embedding_dim:
                raise SchemaError(
                    f"embedding dimension {len(rec.embedding)} differs from "
                    f"{embedding_dim} seen earlier in the file",
                    line=lineno, field="embedding")
        if rec.language not in KNOWN_LANGUAGES and rec.language not in warned_languages:
            warned_languages.add(rec.language)
            warnings.warn(f"line {lineno}: unknown language code {rec.language!r}",
                          LogWarning, stacklevel=2)
        count += 1
        yield rec
    if count == 0:
        raise EmptyInputError("log holds no records")


def parse_span_log(source: str | Path | IO | Iterable) -> Iterator[SpanLogitRecord]:
    """Stream span-logit records from a JSONL source (same conventions as parse_log)."""
    count = 0
    warned_languages: set[str] = set()
    for lineno, text in _iter_lines(source):
        if not text.strip():
            continue
        rec = _span_from_obj(_load_object(text, lineno), lineno)
        if rec.language not in KNOWN_LANGUAGES and rec.language not in warned_languages:
            warned_languages.add(rec.language)
            warnings.warn(f"line {lineno}: unknown language code {rec.language!r}",
                          LogWarning, stacklevel=2)
        count += 1
        yield rec
    if count == 0:
        raise EmptyInputError("log holds no records")


def serialize_record(rec: PredictionRecord) -> str:
    """Render a prediction record as one JSONL line (no trailing newline)."""
    cands = []
    for c in rec.candidates:
        if c.kind == "extractive":
            cands.append({"text": c.text, "start_logit": c.start_logit,
                          "end_logit": c.end_logit})
        else:
            cands.append({"text": c.text, "log_prob": c.log_prob})
    obj = {
        "qid": rec.qid,
        "language": rec.language,
        "dataset": rec.dataset,
        "split": rec.split,
        "model_kind": rec.model_kind,
        "gold_answers": list(rec.gold_answers),
        "candidates": cands,
    }
    if rec.parallel_id is not None:
        obj["parallel_id"] = rec.parallel_id
    if rec.embedding is not None:
        obj["embedding"] = list(rec.embedding)
    return json.dumps(obj, ensure_ascii=False)


def serialize_span_record(rec: SpanLogitRecord) -> str:
    """Render a span-logit record as one JSONL line (no trailing newline)."""
    obj = {
        "qid": rec.qid,
        "language": rec.language,
        "start_logits": list(rec.start_logits),
        "end_logits": list(rec.end_logits),
        "context_mask": list(rec.context_mask),
        "token_offsets": [list(p) for p in rec.token_offsets],
        "context_text": rec.context_text,
    }
    if rec.gold_start is not None:
        obj["gold_start"] = rec.gold_start
        obj["gold_end"] = rec.gold_end
    return json.dumps(obj, ensure_ascii=False)


def load_prediction_log(path: str | Path, **kwargs) -> list[PredictionRecord]:
    return list(parse_log(path, **kwargs))


def load_span_log(path: str | Path) -> list[SpanLogitRecord]:
    return list(parse_span_log(path))


def write_prediction_log(path: str | Path, records: Iterable[PredictionRecord]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(serialize_record(rec) + "\n")


def write_span_log(path: str | Path, records: Iterable[SpanLogitRecord]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(serialize_span_record(rec) + "\n")


def partition_by_language(records: Iterable[PredictionRecord]) -> dict[str, list[PredictionRecord]]:
    """Group records by language code; keys come back sorted."""
    groups: dict[str, list[PredictionRecord]] = {}
    for rec in records:
        groups.setdefault(rec.language, []).append(rec)
    return {lang: groups[lang] for lang in sorted(groups)}
