"""Command-line behavior: exit codes, summary lines, file outputs."""

import json
import subprocess
import sys

import pytest

from qacalib import load_prediction_log, load_span_log

from qadump.cli import main


class TestExtractiveCommand:
    def test_writes_span_log_and_reports(self, extractive_checkpoint,
                                         qa_dataset, tmp_path, capsys):
        out = tmp_path / "spans.jsonl"
        code = main(["extractive", "--model", extractive_checkpoint,
                     "--dataset", qa_dataset, "--out", str(out)])
        assert code == 0
        assert capsys.readouterr().out == (
            f"wrote 20 records to {out} (skipped 0)\n")
        assert len(load_span_log(str(out))) == 20

    def test_candidates_out_writes_second_log(self, extractive_checkpoint,
                                              qa_dataset, tmp_path):
        out = tmp_path / "spans.jsonl"
        cands = tmp_path / "cands.jsonl"
        code = main(["extractive", "--model", extractive_checkpoint,
                     "--dataset", qa_dataset, "--out", str(out),
                     "--candidates-out", str(cands), "--k", "2"])
        assert code == 0
        records = load_prediction_log(str(cands), expected_kind="extractive")
        assert all(len(r.candidates) <= 2 for r in records)

    def test_missing_dataset_exits_two(self, extractive_checkpoint, tmp_path,
                                       capsys):
        code = main(["extractive", "--model", extractive_checkpoint,
                     "--dataset", str(tmp_path / "nope.jsonl"),
                     "--out", str(tmp_path / "o.jsonl")])
        assert code == 2
        assert capsys.readouterr().err.startswith("error:")

    def test_malformed_dataset_exits_two(self, extractive_checkpoint,
                                         tmp_path, capsys):
        data = tmp_path / "bad.jsonl"
        data.write_text(json.dumps({"qid": "a"}) + "\n", encoding="utf-8")
        code = main(["extractive", "--model", extractive_checkpoint,
                     "--dataset", str(data),
                     "--out", str(tmp_path / "o.jsonl")])
        assert code == 2
        assert "line 1" in capsys.readouterr().err

    def test_unwritable_output_exits_two(self, extractive_checkpoint,
                                         qa_dataset, tmp_path, capsys):
        code = main(["extractive", "--model", extractive_checkpoint,
                     "--dataset", qa_dataset,
                     "--out", str(tmp_path / "missing" / "o.jsonl")])
        assert code == 2


class TestGenerativeCommand:
    def test_writes_candidate_log(self, generative_checkpoint, qa_dataset,
                                  tmp_path, capsys):
        out = tmp_path / "beams.jsonl"
        code = main(["generative", "--model", generative_checkpoint,
                     "--dataset", qa_dataset, "--out", str(out),
                     "--k", "3", "--max-answer-length", "6"])
        assert code == 0
        summary = capsys.readouterr()
        assert summary.out.startswith("wrote ")
        assert summary.err == ""
        records = load_prediction_log(str(out), expected_kind="generative")
        assert records

    def test_all_skipped_exits_one(self, generative_checkpoint, tmp_path,
                                   capsys, monkeypatch):
        import qadump.generative as mod

        data = tmp_path / "d.jsonl"
        data.write_text(json.dumps({
            "qid": "a", "language": "en", "question": "Where?",
            "context": "In Paris.", "answers": ["Paris"]}) + "\n",
            encoding="utf-8")

        class MuteTokenizer:
            """Makes every beam decode to a bare newline, which the dumper
            must treat as an empty answer."""

            def __init__(self, inner):
                self._inner = inner

            def __call__(self, *args, **kwargs):
                return self._inner(*args, **kwargs)

            def __getattr__(self, name):
                return getattr(self._inner, name)

            def batch_decode(self, sequences, **kwargs):
                return ["\n"] * len(sequences)

        real = mod.AutoTokenizer.from_pretrained
        monkeypatch.setattr(
            mod.AutoTokenizer, "from_pretrained",
            classmethod(lambda cls, mid: MuteTokenizer(real(mid))))
        code = main(["generative", "--model", generative_checkpoint,
                     "--dataset", str(data), "--out", str(tmp_path / "o.jsonl"),
                     "--k", "2", "--max-answer-length", "4"])
        assert code == 1
        assert "nothing to write" in capsys.readouterr().err


class TestEmbeddingsCommand:
    def test_requires_log_flag(self, capsys):
        with pytest.raises(SystemExit):
            main(["embeddings", "--model", "m", "--dataset", "d",
                  "--out", "o"])
        assert "--log" in capsys.readouterr().err

    def test_augments_existing_log(self, extractive_checkpoint,
                                   encoder_checkpoint, qa_dataset, tmp_path,
                                   capsys):
        cands = tmp_path / "cands.jsonl"
        main(["extractive", "--model", extractive_checkpoint,
              "--dataset", qa_dataset, "--out", str(tmp_path / "s.jsonl"),
              "--candidates-out", str(cands)])
        capsys.readouterr()
        out = tmp_path / "emb.jsonl"
        code = main(["embeddings", "--model", extractive_checkpoint,
                     "--embedding-model", encoder_checkpoint,
                     "--dataset", qa_dataset, "--log", str(cands),
                     "--out", str(out)])
        assert code == 0
        assert capsys.readouterr().out == (
            f"wrote 20 records to {out} (skipped 0)\n")
        assert all(r.embedding is not None
                   for r in load_prediction_log(str(out)))


class TestEntryPoint:
    def test_module_invocation(self):
        proc = subprocess.run([sys.executable, "-m", "qadump", "--help"],
                              capture_output=True, text=True)
        assert proc.returncode == 0
        assert "extractive" in proc.stdout
        assert "generative" in proc.stdout
        assert "embeddings" in proc.stdout
