"""Job description and result summary shared by all dump commands."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from qacalib import SPLITS


@dataclass(frozen=True)
class AdapterJob:
    """What to run and where to write it.

    ``model`` and ``embedding_model`` are checkpoint paths or hub ids;
    ``dataset`` is a question file (JSONL) and ``log`` an optional existing
    prediction log to augment. ``k`` caps candidates per question (top-k
    spans for extractive models, beams for generative ones).
    """

    model: str
    dataset: str
    out: str
    split: str = "validation"
    k: int = 20
    max_answer_length: int = 30
    batch_size: int = 8
    embedding_model: str | None = None
    log: str | None = None

    def __post_init__(self):
        if self.split not in SPLITS:
            raise ValueError(f"split must be one of {SPLITS}, got {self.split!r}")
        if self.k < 1:
            raise ValueError("k must be at least 1")
        if self.max_answer_length < 1:
            raise ValueError("max_answer_length must be at least 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be at least 1")
        parent = Path(self.out).parent
        if not parent.is_dir():
            raise ValueError(f"output directory {str(parent)!r} does not exist")

    @property
    def dataset_name(self) -> str:
        return Path(self.dataset).stem


@dataclass(frozen=True)
class DumpResult:
    """Counts reported by a dump: records written, skipped, and warnings."""

    written: int
    skipped: int
    warnings: int = 0
