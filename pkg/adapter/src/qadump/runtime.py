"""Small helpers shared by the dump implementations."""

from __future__ import annotations

from typing import Iterator, Sequence, TypeVar

T = TypeVar("T")


def batches(items: Sequence[T], size: int) -> Iterator[Sequence[T]]:
    for start in range(0, len(items), size):
        yield items[start:start + size]


def model_max_length(model, tokenizer) -> int:
    """Effective input cap: the tighter of model positions and tokenizer limit."""
    limit = int(tokenizer.model_max_length)
    positions = getattr(model.config, "max_position_embeddings", None)
    if positions:
        limit = min(limit, int(positions))
    return limit
