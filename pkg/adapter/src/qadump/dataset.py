"""Question-file loading.

A question file is JSONL with one object per line: ``qid``, ``language``,
``question``, ``context``, ``answers`` (non-empty list of strings), and an
optional ``answer_start`` character offset of the first answer within the
context. Whether that offset actually aligns with model tokenization is the
dump's concern, not the loader's.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path

from qacalib import EmptyInputError, SchemaError

_REQUIRED = frozenset({"qid", "language", "question", "context", "answers"})
_OPTIONAL = frozenset({"answer_start"})
_LANGUAGE = re.compile(r"^[a-z]{2}$")


@dataclass(frozen=True)
class QAExample:
    qid: str
    language: str
    question: str
    context: str
    answers: tuple[str, ...]
    answer_start: int | None = None

    def __post_init__(self):
        for name in ("qid", "question", "context"):
            if not getattr(self, name):
                raise ValueError(f"{name} must be non-empty")
        if not _LANGUAGE.match(self.language):
            raise ValueError(f"language must be a two-letter code, got {self.language!r}")
        if not self.answers or any(not a for a in self.answers):
            raise ValueError("answers must be a non-empty list of non-empty strings")
        if self.answer_start is not None and self.answer_start < 0:
            raise ValueError("answer_start must be non-negative")


def load_qa_dataset(path: str | Path) -> list[QAExample]:
    """Read a question file, validating structure line by line."""
    examples = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise SchemaError(f"invalid JSON: {exc.msg}", line=lineno) from None
            if not isinstance(obj, dict):
                raise SchemaError("expected a JSON object", line=lineno)
            keys = set(obj)
            missing = _REQUIRED - keys
            if missing:
                raise SchemaError(f"missing keys: {', '.join(sorted(missing))}",
                                  line=lineno)
            unknown = keys - _REQUIRED - _OPTIONAL
            if unknown:
                raise SchemaError(f"unknown keys: {', '.join(sorted(unknown))}",
                                  line=lineno)
            answers = obj["answers"]
            if not isinstance(answers, list) or not all(isinstance(a, str)
                                                        for a in answers):
                raise SchemaError("answers must be a list of strings",
                                  line=lineno, field="answers")
            answer_start = obj.get("answer_start")
            if answer_start is not None and (isinstance(answer_start, bool)
                                             or not isinstance(answer_start, int)):
                raise SchemaError("answer_start must be an integer",
                                  line=lineno, field="answer_start")
            try:
                examples.append(QAExample(
                    qid=obj["qid"], language=obj["language"],
                    question=obj["question"], context=obj["context"],
                    answers=tuple(answers), answer_start=answer_start))
            except (ValueError, TypeError) as exc:
                raise SchemaError(str(exc), line=lineno) from None
    if not examples:
        raise EmptyInputError(f"question file {path} has no records")
    return examples
