"""Per-language metric tables and correlation analyses.

Two questions drive this module: how much worse are accuracy and calibration
outside the source language, and which language-level quantities (typological
distances, pretraining share) track the calibration gap. Correlations are
plain sample Pearson r.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .confidence_scoring import ScoredPrediction
from .errors import CorrelationError, EmptyInputError, SchemaError
from .qa_metrics import BinningConfig, compute_ece

MACRO_ALL = "all"
MACRO_NON_EN = "non-en"

_FEATURE_HEADER = ("language", "syntactic", "genetic", "pretrain_size")


@dataclass(frozen=True)
class LanguageFeatureRow:
    """Language-level covariates: typological distances and pretraining share."""

    language: str
    syntactic: float
    genetic: float
    pretrain_size: float
    extras: tuple[tuple[str, float], ...] = ()

    def __post_init__(self):
        for name in ("syntactic", "genetic", "pretrain_size"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")
        for key, v in self.extras:
            if not math.isfinite(v):
                raise ValueError(f"extra feature {key!r} must be finite")

    def value(self, feature: str) -> float:
        if feature in ("syntactic", "genetic", "pretrain_size"):
            return getattr(self, feature)
        for key, v in self.extras:
            if key == feature:
                return v
        raise KeyError(feature)

    @property
    def feature_names(self) -> tuple[str, ...]:
        return ("syntactic", "genetic", "pretrain_size") + tuple(k for k, _ in self.extras)


@dataclass(frozen=True)
class LanguageMetricsRow:
    """Accuracy and calibration error of one language (or a macro average)."""

    language: str
    n: int
    em_rate: float
    ece: float

    def __post_init__(self):
        if self.n < 0:
            raise ValueError("n must be non-negative")
        for name in ("em_rate", "ece"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")


def load_features_csv(path: str | Path) -> list[LanguageFeatureRow]:
    """Read language features from CSV with the fixed leading columns."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise EmptyInputError("features file is empty") from None
        if tuple(header[:4]) != _FEATURE_HEADER:
            raise SchemaError(
                f"features header must start with {','.join(_FEATURE_HEADER)}",
                line=1, field="header")
        extra_names = header[4:]
        rows = []
        seen = set()
        for lineno, cells in enumerate(reader, start=2):
            if not cells:
                continue
            if len(cells) != len(header):
                raise SchemaError(f"expected {len(header)} columns, got {len(cells)}",
                                  line=lineno)
            try:
                values = [float(c) for c in cells[1:]]
            except ValueError as exc:
                raise SchemaError(f"non-numeric feature value: {exc}",
                                  line=lineno) from None
            language = cells[0]
            if language in seen:
                raise SchemaError(f"duplicate language {language!r}",
                                  line=lineno, field="language")
            seen.add(language)
            try:
                rows.append(LanguageFeatureRow(
                    language=language,
                    syntactic=values[0],
                    genetic=values[1],
                    pretrain_size=values[2],
                    extras=tuple(zip(extra_names, values[3:])),
                ))
            except ValueError as exc:
                raise SchemaError(str(exc), line=lineno) from None
    return rows


def macro_average(rows: Sequence[LanguageMetricsRow],
                  label: str = MACRO_ALL) -> LanguageMetricsRow:
    """Unweighted mean of per-language EM and calibration error."""
    if not rows:
        raise EmptyInputError("no rows to average")
    return LanguageMetricsRow(
        language=label,
        n=sum(r.n for r in rows),
        em_rate=sum(r.em_rate for r in rows) / len(rows),
        ece=sum(r.ece for r in rows) / len(rows),
    )


def per_language_table(scored: Iterable[ScoredPrediction],
                       cfg: BinningConfig = BinningConfig()) -> list[LanguageMetricsRow]:
    """Metrics per language plus macro rows over all and non-English languages."""
    groups: dict[str, list[ScoredPrediction]] = {}
    for pred in scored:
        groups.setdefault(pred.language, []).append(pred)
    if not groups:
        raise EmptyInputError("no predictions to tabulate")
    rows = []
    for lang in sorted(groups):
        preds = groups[lang]
        rows.append(LanguageMetricsRow(
            language=lang,
            n=len(preds),
            em_rate=sum(1 for p in preds if p.correct) / len(preds),
            ece=compute_ece(preds, cfg),
        ))
    table = list(rows)
    table.append(macro_average(rows, MACRO_ALL))
    non_en = [r for r in rows if r.language != "en"]
    if non_en:
        table.append(macro_average(non_en, MACRO_NON_EN))
    return table


def transfer_report(rows: Sequence[LanguageMetricsRow]) -> dict[str, float]:
    """Source-versus-transfer gap summary from per-language rows.

    Takes real language rows (no macro labels) and reports English EM and
    calibration error, the non-English macro averages, the non-English error
    rate (1 - EM), and the relative calibration-error increase over English.
    """
    english = next((r for r in rows if r.language == "en"), None)
    if english is None:
        raise EmptyInputError("no English row to compare against")
    non_en = [r for r in rows if r.language != "en"]
    if not non_en:
        raise EmptyInputError("no non-English rows to compare")
    macro = macro_average(non_en, MACRO_NON_EN)
    if english.ece == 0.0:
        raise ValueError("English calibration error is zero; relative increase undefined")
    return {
        "english_em": english.em_rate,
        "english_ece": english.ece,
        "non_english_em": macro.em_rate,
        "non_english_ece": macro.ece,
        "non_english_error": 1.0 - macro.em_rate,
        "relative_ece_increase": (macro.ece - english.ece) / english.ece,
    }


def pearson(x: Sequence[float], y: Sequence[float]) -> float:
    """Sample Pearson correlation coefficient, clamped to [-1, 1]."""
    xa = np.asarray(x, dtype=np.float64)
    ya = np.asarray(y, dtype=np.float64)
    if xa.shape != ya.shape or xa.ndim != 1:
        raise ValueError("x and y must be 1-d sequences of equal length")
    if xa.size < 2:
        raise CorrelationError("correlation needs at least 2 points")
    if not (np.isfinite(xa).all() and np.isfinite(ya).all()):
        raise ValueError("inputs must be finite")
    # Constant inputs are checked exactly; a rounded mean can leave a tiny
    # nonzero variance that the == 0 test below would miss.
    if xa.min() == xa.max() or ya.min() == ya.max():
        raise CorrelationError("correlation undefined for zero-variance input")
    dx = xa - xa.mean()
    dy = ya - ya.mean()
    vx = float(np.dot(dx, dx))
    vy = float(np.dot(dy, dy))
    if vx == 0.0 or vy == 0.0:
        raise CorrelationError("correlation undefined for zero-variance input")
    r = float(np.dot(dx, dy)) / math.sqrt(vx * vy)
    return min(1.0, max(-1.0, r))


@dataclass(frozen=True)
class CorrelationReport:
    """Per-feature correlations with calibration error, plus join diagnostics."""

    rows: tuple[tuple[str, float | None, int], ...]
    unmatched: tuple[str, ...] = ()

    def to_csv(self) -> str:
        lines = ["feature,r,n"]
        for feature, r, n in self.rows:
            lines.append(f"{feature},{'' if r is None else repr(r)},{n}")
        return "\n".join(lines) + "\n"


def correlate_ece_with_features(metrics: Sequence[LanguageMetricsRow],
                                features: Sequence[LanguageFeatureRow]) -> CorrelationReport:
    """Correlate per-language calibration error with each feature column.

    Rows join on the language code; languages present on only one side are
    reported, not errors. A zero-variance feature column yields r = None.
    """
    by_metric = {r.language: r for r in metrics}
    by_feature = {r.language: r for r in features}
    if len(by_metric) != len(metrics):
        raise ValueError("duplicate language in metrics rows")
    shared = sorted(set(by_metric) & set(by_feature))
    unmatched = tuple(sorted(set(by_metric) ^ set(by_feature)))
    if len(shared) < 2:
        raise CorrelationError(f"need at least 2 joined languages, got {len(shared)}")
    names = features[0].feature_names
    for row in features:
        if row.feature_names != names:
            raise ValueError("feature rows disagree on extra feature columns")
    eces = [by_metric[lang].ece for lang in shared]
    rows = []
    for feature in names:
        values = [by_feature[lang].value(feature) for lang in shared]
        try:
            r = pearson(values, eces)
        except CorrelationError:
            r = None
        rows.append((feature, r, len(shared)))
    return CorrelationReport(rows=tuple(rows), unmatched=unmatched)


def parallel_confidence_correlation(scored: Iterable[ScoredPrediction],
                                    source: str = "en") -> dict[str, tuple[float | None, int]]:
    """Correlate confidences on parallel items between a source and each language.

    Records pair up via ``parallel_id``. Each target language maps to
    (r, shared_count); r is None when fewer than two shared items exist or
    either side has zero variance. The first record wins when a language
    repeats a parallel id.
    """
    groups: dict[str, dict[str, float]] = {}
    for pred in scored:
        if pred.parallel_id is None:
            continue
        conf_map = groups.setdefault(pred.language, {})
        conf_map.setdefault(pred.parallel_id, pred.confidence)
    if source not in groups:
        raise EmptyInputError(f"no records with parallel ids for source {source!r}")
    src = groups[source]
    result: dict[str, tuple[float | None, int]] = {}
    for lang in sorted(groups):
        if lang == source:
            continue
        tgt = groups[lang]
        shared = sorted(set(src) & set(tgt))
        if len(shared) < 2:
            result[lang] = (None, len(shared))
            continue
        try:
            r = pearson([src[p] for p in shared], [tgt[p] for p in shared])
        except CorrelationError:
            r = None
        result[lang] = (r, len(shared))
    return result
