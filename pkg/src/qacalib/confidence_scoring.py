"""Candidate confidence vectors and per-record scoring.

Extractive confidences come from a softmax over the candidates' summed
start/end logits, optionally rescaled by a pair of temperatures (one for
start logits, one for end logits). Generative confidences first normalize
the candidates' sequence log-probabilities into a distribution, then
optionally re-soften it with a single temperature over the log scores.

The answer a record commits to is always the argmax of the *untempered*
confidence vector; temperature scaling only reshapes the reported
confidence values.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, asdict
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .errors import EmptyInputError, SchemaError
from .prediction_log import CandidateAnswer, PredictionRecord

TEMPERATURE_KINDS = ("single", "dual")


@dataclass(frozen=True)
class TemperatureParams:
    """A fitted temperature configuration plus fit diagnostics."""

    kind: str
    tau: float | None = None
    tau_start: float | None = None
    tau_end: float | None = None
    fit_nll_before: float | None = None
    fit_nll_after: float | None = None
    hit_bound: bool = False
    excluded_count: int = 0

    def __post_init__(self):
        if self.kind not in TEMPERATURE_KINDS:
            raise SchemaError(f"kind must be one of {TEMPERATURE_KINDS}", field="kind")
        if self.kind == "single":
            required = (("tau", self.tau),)
        else:
            required = (("tau_start", self.tau_start), ("tau_end", self.tau_end))
        for name, value in required:
            if value is None:
                raise SchemaError(f"{self.kind} temperatures need {name}", field=name)
        for name in ("tau", "tau_start", "tau_end"):
            value = getattr(self, name)
            if value is not None and (not math.isfinite(value) or value <= 0):
                raise SchemaError(f"{name} must be a positive finite number", field=name)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, obj: dict) -> "TemperatureParams":
        if not isinstance(obj, dict):
            raise SchemaError("temperature document must be a JSON object")
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(obj) - known
        if unknown:
            raise SchemaError(f"unknown field {sorted(unknown)[0]!r}",
                              field=sorted(unknown)[0])
        if "kind" not in obj:
            raise SchemaError("missing field 'kind'", field="kind")
        return cls(**obj)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n",
                              encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "TemperatureParams":
        try:
            obj = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise SchemaError(f"invalid JSON: {exc.msg}") from exc
        return cls.from_dict(obj)


@dataclass(frozen=True)
class ScoredPrediction:
    """One record reduced to its committed answer and confidence."""

    qid: str
    language: str
    answer_text: str
    confidence: float
    correct: bool
    candidate_confidences: tuple[float, ...]
    parallel_id: str | None = None


def _softmax(scores: np.ndarray) -> np.ndarray:
    shifted = scores - scores.max()
    exp = np.exp(shifted)
    return exp / exp.sum()


def _require_kind(candidates: Sequence[CandidateAnswer], kind: str) -> None:
    if not candidates:
        raise EmptyInputError("no candidates to score")
    for cand in candidates:
        if cand.kind != kind:
            raise ValueError(f"candidate {cand.text!r} is not {kind}")


def extractive_confidences(candidates: Sequence[CandidateAnswer],
                           temps: TemperatureParams | None = None) -> np.ndarray:
    """Softmax over summed span logits, optionally temperature-scaled.

    With ``temps`` (kind ``dual``) the summed logit of candidate i becomes
    start_logit_i / tau_start + end_logit_i / tau_end.
    """
    _require_kind(candidates, "extractive")
    if temps is not None and temps.kind != "dual":
        raise ValueError("extractive scoring takes dual temperatures")
    tau_s = temps.tau_start if temps is not None else 1.0
    tau_e = temps.tau_end if temps is not None else 1.0
    start = np.array([c.start_logit for c in candidates], dtype=np.float64)
    end = np.array([c.end_logit for c in candidates], dtype=np.float64)
    return _softmax(start / tau_s + end / tau_e)


def generative_confidences(candidates: Sequence[CandidateAnswer],
                           temps: TemperatureParams | None = None) -> np.ndarray:
    """Normalized sequence probabilities, optionally re-tempered.

    Without a temperature this is softmax over the raw log-probabilities,
    i.e. each sequence probability divided by the candidates' total. With a
    single temperature T the normalized log-probabilities are divided by T
    and softmaxed again, so T = 1 reproduces the untempered vector.
    """
    _require_kind(candidates, "generative")
    if temps is not None and temps.kind != "single":
        raise ValueError("generative scoring takes a single temperature")
    lp = np.array([c.log_prob for c in candidates], dtype=np.float64)
    shifted = lp - lp.max()
    log_norm = shifted - np.log(np.exp(shifted).sum())
    if temps is None:
        return _softmax(lp)
    return _softmax(log_norm / temps.tau)


def confidences_for(rec: PredictionRecord,
                    temps: TemperatureParams | None = None) -> np.ndarray:
    """Dispatch to the kind-appropriate confidence function."""
    if rec.model_kind == "extractive":
        return extractive_confidences(rec.candidates, temps)
    return generative_confidences(rec.candidates, temps)


def score_record(rec: PredictionRecord,
                 temps: TemperatureParams | None = None,
                 em: Callable[[str, Sequence[str], str], bool] | None = None,
                 *,
                 rerank_with_temps: bool = False) -> ScoredPrediction:
    """Commit a record to an answer and report its (optionally scaled) confidence.

    The answer index is the first argmax of the untempered confidences;
    ``rerank_with_temps=True`` re-picks it from the scaled vector instead
    (only relevant for dual temperatures with tau_start != tau_end, which
    can reorder candidates).
    """
    if em is None:
        from .qa_metrics import exact_match as em
    base = confidences_for(rec, None)
    scaled = confidences_for(rec, temps) if temps is not None else base
    pick = int(np.argmax(scaled if rerank_with_temps else base))
    answer = rec.candidates[pick].text
    return ScoredPrediction(
        qid=rec.qid,
        language=rec.language,
        answer_text=answer,
        confidence=float(scaled[pick]),
        correct=bool(em(answer, rec.gold_answers, rec.language)),
        candidate_confidences=tuple(float(v) for v in scaled),
        parallel_id=rec.parallel_id,
    )


def score_records(records: Sequence[PredictionRecord],
                  temps: TemperatureParams | None = None,
                  em: Callable[[str, Sequence[str], str], bool] | None = None,
                  *,
                  rerank_with_temps: bool = False) -> list[ScoredPrediction]:
    return [score_record(r, temps, em, rerank_with_temps=rerank_with_temps)
            for r in records]
