"""Training-mix manifests, few-shot pools, and in-context example selection.

A parallel corpus holds question/context/answer triples keyed by
(example_id, language), where translations of the same example share an id.
Manifest builders select (id, language) pairs under one of four mixing
modes, all seeded and deterministic:

* ``en`` - n English examples;
* ``en_tr`` - the same n examples, once per configured language;
* ``en_large`` - n * L English examples (size-matched to ``en_tr``);
* ``mixed`` - n * L examples, languages assigned round-robin.

The last three therefore all have size L * n for L configured languages.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import CorpusError, SchemaError
from .prediction_log import PredictionRecord, _check_language, _iter_lines, _load_object

MIX_MODES = ("en", "en_tr", "en_large", "mixed")

# Few-shot prompt scaffolding. The instruction header and the block cues are
# byte-exact, including the trailing spaces on the first and third lines.
PROMPT_INSTRUCTION = (
    "Extract the minimal span word from the \n"
    "following context that best\n"
    "answers the question.  \n"
)
PROMPT_BLOCK = "### Question:\n{question}\n### Context:\n{context}\n### Answer:\n"


@dataclass(frozen=True)
class ParallelCorpusEntry:
    example_id: str
    language: str
    question: str
    context: str
    answer: str

    def __post_init__(self):
        if not self.example_id:
            raise SchemaError("example_id must be non-empty", field="example_id")
        _check_language(self.language)


class Corpus:
    """An indexed set of parallel corpus entries, unique per (id, language)."""

    def __init__(self, entries: Iterable[ParallelCorpusEntry]):
        self.entries = tuple(entries)
        self._by_key: dict[tuple[str, str], ParallelCorpusEntry] = {}
        for entry in self.entries:
            key = (entry.example_id, entry.language)
            if key in self._by_key:
                raise SchemaError(f"duplicate corpus entry {key!r}", field="example_id")
            self._by_key[key] = entry

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, key: tuple[str, str]) -> bool:
        return key in self._by_key

    def get(self, example_id: str, language: str) -> ParallelCorpusEntry:
        try:
            return self._by_key[(example_id, language)]
        except KeyError:
            raise CorpusError(f"corpus has no entry for id {example_id!r} "
                              f"in language {language!r}") from None

    @property
    def languages(self) -> list[str]:
        return sorted({e.language for e in self.entries})

    def ids_for(self, language: str) -> list[str]:
        return sorted(e.example_id for e in self.entries if e.language == language)


def as_corpus(corpus: Corpus | Iterable[ParallelCorpusEntry]) -> Corpus:
    return corpus if isinstance(corpus, Corpus) else Corpus(corpus)


def load_corpus(path: str | Path) -> Corpus:
    """Read a parallel corpus from JSONL lines with the five entry fields."""
    keys = ("example_id", "language", "question", "context", "answer")
    entries = []
    for lineno, text in _iter_lines(path):
        if not text.strip():
            continue
        obj = _load_object(text, lineno)
        for key in obj:
            if key not in keys:
                raise SchemaError(f"unknown field {key!r}", line=lineno, field=key)
        for key in keys:
            if key not in obj:
                raise SchemaError(f"missing field {key!r}", line=lineno, field=key)
            if not isinstance(obj[key], str):
                raise SchemaError(f"{key} must be a string", line=lineno, field=key)
        try:
            entries.append(ParallelCorpusEntry(**obj))
        except SchemaError as exc:
            raise SchemaError(str(exc), line=lineno, field=exc.field) from exc
    return Corpus(entries)


@dataclass(frozen=True)
class MixConfig:
    mode: str
    subset_size: int
    languages: tuple[str, ...]
    fewshot_per_lang: int = 1000
    seed: int = 0

    def __post_init__(self):
        if self.mode not in MIX_MODES + ("fewshot",):
            raise ValueError(f"mode must be one of {MIX_MODES + ('fewshot',)}")
        if self.subset_size < 1:
            raise ValueError("subset_size must be at least 1")
        if not self.languages or self.languages[0] != "en":
            raise ValueError("languages must be non-empty and start with 'en'")
        if len(set(self.languages)) != len(self.languages):
            raise ValueError("languages must be distinct")
        if self.fewshot_per_lang < 1:
            raise ValueError("fewshot_per_lang must be at least 1")


def _english_pool(corpus: Corpus, cfg: MixConfig) -> list[str]:
    pool = corpus.ids_for("en")
    random.Random(cfg.seed).shuffle(pool)
    return pool


def build_mix_manifest(corpus: Corpus | Iterable[ParallelCorpusEntry],
                       cfg: MixConfig) -> list[tuple[str, str]]:
    """Select (example_id, language) pairs for one of the four mixing modes."""
    if cfg.mode not in MIX_MODES:
        raise ValueError(f"build_mix_manifest handles modes {MIX_MODES}; "
                         f"use build_fewshot_manifest for 'fewshot'")
    corpus = as_corpus(corpus)
    pool = _english_pool(corpus, cfg)
    n = cfg.subset_size
    num_langs = len(cfg.languages)
    want = n if cfg.mode in ("en", "en_tr") else n * num_langs
    if len(pool) < want:
        raise CorpusError(f"mode {cfg.mode!r} needs {want} English ids, "
                          f"corpus has {len(pool)}")

    if cfg.mode == "en":
        return [(i, "en") for i in pool[:n]]
    if cfg.mode == "en_large":
        return [(i, "en") for i in pool[:n * num_langs]]
    if cfg.mode == "en_tr":
        manifest = []
        for example_id in pool[:n]:
            for lang in cfg.languages:
                if (example_id, lang) not in corpus:
                    raise CorpusError(f"id {example_id!r} has no {lang!r} translation")
                manifest.append((example_id, lang))
        return manifest
    # mixed: one language per id, cycling through the configured order.
    manifest = []
    for i, example_id in enumerate(pool[:n * num_langs]):
        lang = cfg.languages[i % num_langs]
        if (example_id, lang) not in corpus:
            raise CorpusError(f"id {example_id!r} has no {lang!r} translation")
        manifest.append((example_id, lang))
    return manifest


def build_fewshot_manifest(corpus: Corpus | Iterable[ParallelCorpusEntry],
                           cfg: MixConfig) -> list[tuple[str, str]]:
    """All English entries plus a seeded sample per non-English language."""
    corpus = as_corpus(corpus)
    manifest = [(i, "en") for i in corpus.ids_for("en")]
    rng = random.Random(cfg.seed)
    for lang in cfg.languages[1:]:
        ids = corpus.ids_for(lang)
        if len(ids) < cfg.fewshot_per_lang:
            raise CorpusError(f"language {lang!r} has {len(ids)} entries, "
                              f"needs {cfg.fewshot_per_lang}")
        manifest.extend((i, lang) for i in rng.sample(ids, cfg.fewshot_per_lang))
    return manifest


def select_icl_examples(query_vec: Sequence[float],
                        pool: Sequence[PredictionRecord],
                        k: int,
                        strategy: str = "adaptive",
                        seed: int | None = None) -> list[str]:
    """Pick k in-context example qids from an embedded pool.

    ``adaptive`` ranks by cosine similarity to the query vector (ties keep
    the smaller pool index); ``random`` draws a seeded sample.
    """
    if strategy not in ("adaptive", "random"):
        raise ValueError("strategy must be 'adaptive' or 'random'")
    if k < 1:
        raise ValueError("k must be at least 1")
    if len(pool) < k:
        raise CorpusError(f"pool of {len(pool)} records cannot supply {k} examples")

    if strategy == "random":
        if seed is None:
            raise ValueError("random selection needs a seed")
        rng = random.Random(seed)
        return [pool[i].qid for i in rng.sample(range(len(pool)), k)]

    q = np.asarray(query_vec, dtype=np.float64)
    q_norm = float(np.linalg.norm(q))
    if q_norm == 0.0:
        raise ValueError("query vector has zero norm")
    sims = np.empty(len(pool), dtype=np.float64)
    for i, rec in enumerate(pool):
        if rec.embedding is None:
            raise SchemaError(f"pool record {rec.qid!r} has no embedding",
                              field="embedding")
        e = np.asarray(rec.embedding, dtype=np.float64)
        if e.shape != q.shape:
            raise SchemaError(f"pool record {rec.qid!r} embedding has dimension "
                              f"{e.size}, query has {q.size}", field="embedding")
        e_norm = float(np.linalg.norm(e))
        if e_norm == 0.0:
            raise ValueError(f"pool record {rec.qid!r} embedding has zero norm")
        sims[i] = float(np.dot(q, e)) / (q_norm * e_norm)
    order = np.argsort(-sims, kind="stable")[:k]
    return [pool[int(i)].qid for i in order]


def render_prompt(question: str, context: str,
                  shots: Sequence[tuple[str, str, str]] = ()) -> str:
    """Assemble the few-shot prompt: instruction, shot blocks, query block.

    Each shot is a (question, context, answer) triple; the query block ends
    with the answer cue so the model completes it.
    """
    parts = [PROMPT_INSTRUCTION]
    for shot_q, shot_c, shot_a in shots:
        parts.append(PROMPT_BLOCK.format(question=shot_q, context=shot_c))
        parts.append(shot_a + "\n")
    parts.append(PROMPT_BLOCK.format(question=question, context=context))
    return "".join(parts)


@dataclass(frozen=True)
class PromptManifestEntry:
    """A rendered prompt for one query plus the qids of its shots."""

    qid: str
    rendered_prompt: str
    shot_qids: tuple[str, ...]

    def __post_init__(self):
        if not self.rendered_prompt.endswith("### Answer:\n"):
            raise ValueError("rendered prompt must end with the answer cue")
