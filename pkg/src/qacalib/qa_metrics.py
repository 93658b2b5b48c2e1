"""Answer normalization, exact match, and calibration-error metrics.

Calibration error follows the standard equal-width binning recipe: with M
bins, a confidence c lands in bin ceil(c * M) (clamped to [1, M]), so each
bin m covers the half-open interval ((m-1)/M, m/M]. The expected
calibration error is the bin-count-weighted mean absolute gap between each
bin's accuracy and its mean confidence.
"""

from __future__ import annotations

import math
import unicodedata
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .confidence_scoring import ScoredPrediction
from .errors import EmptyInputError

DEFAULT_ARTICLES: Mapping[str, frozenset[str]] = {"en": frozenset({"a", "an", "the"})}


def normalize_answer(text: str, language: str = "en",
                     articles: Mapping[str, frozenset[str]] | None = None) -> str:
    """Lowercase, strip punctuation, drop language-specific articles, squeeze spaces.

    Punctuation removal covers every Unicode code point in a P* category, so
    it behaves the same for Latin quotes, CJK brackets, and so on. Article
    tokens are dropped only for languages present in ``articles`` (by default
    just English).
    """
    if articles is None:
        articles = DEFAULT_ARTICLES
    lowered = text.lower()
    no_punct = "".join(
        ch for ch in lowered if not unicodedata.category(ch).startswith("P")
    )
    drop = articles.get(language, frozenset())
    kept = [tok for tok in no_punct.split() if tok not in drop]
    return " ".join(kept)


def exact_match(prediction: str, golds: Sequence[str], language: str = "en",
                articles: Mapping[str, frozenset[str]] | None = None) -> bool:
    """True when the normalized prediction equals any normalized gold answer."""
    if not golds:
        raise ValueError("golds must be non-empty")
    pred = normalize_answer(prediction, language, articles)
    return any(pred == normalize_answer(g, language, articles) for g in golds)


def contains_match(prediction: str, golds: Sequence[str], language: str = "en",
                   articles: Mapping[str, frozenset[str]] | None = None) -> bool:
    """True when any normalized gold answer appears inside the normalized prediction.

    A laxer correctness notion for verbose generative answers.
    """
    if not golds:
        raise ValueError("golds must be non-empty")
    pred = normalize_answer(prediction, language, articles)
    return any(normalize_answer(g, language, articles) in pred for g in golds)


@dataclass(frozen=True)
class BinningConfig:
    m: int = 10

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("m must be at least 1")


@dataclass(frozen=True)
class BinRow:
    bin_index: int
    count: int
    mean_confidence: float
    mean_accuracy: float


@dataclass(frozen=True)
class ReliabilityTable:
    """Per-bin counts and means; enough to reconstruct the calibration error."""

    bins: tuple[BinRow, ...]
    total_n: int

    @property
    def m(self) -> int:
        return len(self.bins)

    def ece(self) -> float:
        total = 0.0
        for row in self.bins:
            if row.count:
                total += (row.count / self.total_n) * abs(row.mean_accuracy
                                                          - row.mean_confidence)
        return total

    def merge(self, other: "ReliabilityTable") -> "ReliabilityTable":
        """Pool two tables built with the same number of bins."""
        if self.m != other.m:
            raise ValueError(f"cannot merge tables with {self.m} and {other.m} bins")
        rows = []
        for a, b in zip(self.bins, other.bins):
            count = a.count + b.count
            if count:
                conf = (a.mean_confidence * a.count + b.mean_confidence * b.count) / count
                acc = (a.mean_accuracy * a.count + b.mean_accuracy * b.count) / count
            else:
                conf = acc = 0.0
            rows.append(BinRow(a.bin_index, count, conf, acc))
        return ReliabilityTable(bins=tuple(rows), total_n=self.total_n + other.total_n)


def bin_index(confidence: float, m: int) -> int:
    """Map a confidence in (0, 1] to its 1-based bin."""
    return min(m, max(1, math.ceil(confidence * m)))


def reliability_bins(preds: Iterable[ScoredPrediction],
                     cfg: BinningConfig = BinningConfig()) -> ReliabilityTable:
    """Accumulate predictions into M equal-width confidence bins."""
    counts = [0] * cfg.m
    conf_sums = [0.0] * cfg.m
    correct_sums = [0] * cfg.m
    total = 0
    for pred in preds:
        if not 0.0 < pred.confidence <= 1.0:
            raise ValueError(
                f"confidence {pred.confidence} of {pred.qid!r} is outside (0, 1]")
        b = bin_index(pred.confidence, cfg.m) - 1
        counts[b] += 1
        conf_sums[b] += pred.confidence
        correct_sums[b] += 1 if pred.correct else 0
        total += 1
    if total == 0:
        raise EmptyInputError("no predictions to bin")
    rows = tuple(
        BinRow(bin_index=i + 1, count=counts[i],
               mean_confidence=conf_sums[i] / counts[i] if counts[i] else 0.0,
               mean_accuracy=correct_sums[i] / counts[i] if counts[i] else 0.0)
        for i in range(cfg.m)
    )
    return ReliabilityTable(bins=rows, total_n=total)


def compute_ece(preds: Iterable[ScoredPrediction],
                cfg: BinningConfig = BinningConfig()) -> float:
    """Expected calibration error of a prediction set."""
    return reliability_bins(preds, cfg).ece()


def format_reliability_csv(table: ReliabilityTable) -> str:
    """Render a reliability table as CSV text (trailing newline included)."""
    lines = ["bin,count,mean_confidence,mean_accuracy"]
    for row in table.bins:
        lines.append(f"{row.bin_index},{row.count},{row.mean_confidence!r},"
                     f"{row.mean_accuracy!r}")
    return "\n".join(lines) + "\n"
