"""Shared pytest fixtures."""

import pytest


@pytest.fixture
def tmp_jsonl(tmp_path):
    """Write lines to a temp JSONL file and return its path."""
    def write(lines, name="log.jsonl"):
        path = tmp_path / name
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        return path
    return write
