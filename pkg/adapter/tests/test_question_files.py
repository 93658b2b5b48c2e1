"""Question-file loader validation."""

import json

import pytest

from qacalib import EmptyInputError, SchemaError

from qadump import AdapterJob, load_qa_dataset


def write(path, rows):
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row) + "\n")
    return str(path)


GOOD = {"qid": "q1", "language": "en", "question": "Where?",
        "context": "In Paris.", "answers": ["Paris"], "answer_start": 3}


class TestLoader:
    def test_round_trip(self, tmp_path):
        examples = load_qa_dataset(write(tmp_path / "d.jsonl", [GOOD]))
        assert len(examples) == 1
        assert examples[0].qid == "q1"
        assert examples[0].answers == ("Paris",)
        assert examples[0].answer_start == 3

    def test_answer_start_optional(self, tmp_path):
        row = {k: v for k, v in GOOD.items() if k != "answer_start"}
        examples = load_qa_dataset(write(tmp_path / "d.jsonl", [row]))
        assert examples[0].answer_start is None

    def test_missing_key(self, tmp_path):
        row = {k: v for k, v in GOOD.items() if k != "context"}
        with pytest.raises(SchemaError) as err:
            load_qa_dataset(write(tmp_path / "d.jsonl", [row]))
        assert err.value.line == 1
        assert "context" in str(err.value)

    def test_unknown_key(self, tmp_path):
        with pytest.raises(SchemaError):
            load_qa_dataset(write(tmp_path / "d.jsonl", [{**GOOD, "title": "x"}]))

    def test_bad_answers(self, tmp_path):
        with pytest.raises(SchemaError):
            load_qa_dataset(write(tmp_path / "d.jsonl", [{**GOOD, "answers": []}]))
        with pytest.raises(SchemaError):
            load_qa_dataset(write(tmp_path / "d.jsonl",
                                  [{**GOOD, "answers": [7]}]))

    def test_bad_answer_start(self, tmp_path):
        with pytest.raises(SchemaError):
            load_qa_dataset(write(tmp_path / "d.jsonl",
                                  [{**GOOD, "answer_start": "3"}]))
        with pytest.raises(SchemaError):
            load_qa_dataset(write(tmp_path / "d.jsonl",
                                  [{**GOOD, "answer_start": -1}]))

    def test_second_line_reported(self, tmp_path):
        path = tmp_path / "d.jsonl"
        path.write_text(json.dumps(GOOD) + "\n{broken\n", encoding="utf-8")
        with pytest.raises(SchemaError) as err:
            load_qa_dataset(path)
        assert err.value.line == 2

    def test_empty_file(self, tmp_path):
        path = tmp_path / "d.jsonl"
        path.write_text("", encoding="utf-8")
        with pytest.raises(EmptyInputError):
            load_qa_dataset(path)


class TestJob:
    def test_validation(self, tmp_path):
        ok = AdapterJob(model="m", dataset="d.jsonl",
                        out=str(tmp_path / "o.jsonl"))
        assert ok.k == 20
        assert ok.dataset_name == "d"
        with pytest.raises(ValueError):
            AdapterJob(model="m", dataset="d", out=str(tmp_path / "o"), k=0)
        with pytest.raises(ValueError):
            AdapterJob(model="m", dataset="d", out=str(tmp_path / "o"),
                       split="dev")
        with pytest.raises(ValueError):
            AdapterJob(model="m", dataset="d",
                       out=str(tmp_path / "missing" / "o.jsonl"))
