"""Verification sweeps over the library's core guarantees.

Each test covers one externally visible behavior, checks it against an
independently coded oracle or a hand-derived value, and prints a single
PASS or FAIL line so the suite output doubles as a checklist.
"""

import contextlib
import json
import math
import random
import time

import numpy as np
import pytest

from qacalib.analysis import LanguageMetricsRow, pearson, transfer_report
from qacalib.calibrators import (FitConfig, fit_dual_temperature,
                                 fit_single_temperature, nll_position,
                                 smooth_targets)
from qacalib.candidate_extraction import ExtractionConfig, top_k_spans
from qacalib.cli import main
from qacalib.confidence_scoring import (TemperatureParams,
                                        generative_confidences, score_record)
from qacalib.corpus_assembly import (Corpus, MixConfig, ParallelCorpusEntry,
                                     build_mix_manifest, select_icl_examples)
from qacalib.errors import FitWarning
from qacalib.prediction_log import SpanLogitRecord
from qacalib.qa_metrics import BinningConfig, compute_ece

from factories import extractive_record, generative_record, scored

TAU_STAR = 2.0 / math.log(2.0)
NLL_STAR = math.log(3.0) - (2.0 / 3.0) * math.log(2.0)


@pytest.fixture
def criterion(capsys):
    @contextlib.contextmanager
    def _criterion(name):
        try:
            yield
        except BaseException:
            with capsys.disabled():
                print(f"FAIL: {name}")
            raise
        with capsys.disabled():
            print(f"PASS: {name}")

    return _criterion


def reference_ece(preds, m):
    """Interval-membership binning, written independently of the library."""
    bins = [[] for _ in range(m)]
    for p in preds:
        for j in range(1, m + 1):
            if (j - 1) / m < p.confidence <= j / m:
                bins[j - 1].append(p)
                break
    total = 0.0
    for members in bins:
        if not members:
            continue
        conf = sum(p.confidence for p in members) / len(members)
        acc = sum(1 for p in members if p.correct) / len(members)
        total += len(members) / len(preds) * abs(acc - conf)
    return total


def reference_spans(rec, k, max_len):
    """Quadratic enumeration of legal spans, sorted by the published order."""
    ctx = [i for i in range(rec.num_tokens) if rec.context_mask[i]]
    spans = []
    for s in ctx:
        for e in ctx:
            if e < s or e - s + 1 > max_len:
                continue
            spans.append((s, e, rec.start_logits[s] + rec.end_logits[e]))
    spans.sort(key=lambda t: (-t[2], t[0], t[1] - t[0]))
    return spans[:k]


def two_token_span_record(qid, gold, gap=2.0):
    return SpanLogitRecord(
        qid=qid, language="en",
        start_logits=(gap, 0.0), end_logits=(gap, 0.0),
        context_mask=(True, True),
        token_offsets=((0, 3), (4, 9)),
        context_text="the quick",
        gold_start=gold, gold_end=gold)


class TestCalibrationMetrics:
    def test_ece_matches_brute_force(self, criterion):
        with criterion("ECE equals a brute-force oracle on 1000 random instances"):
            rng = random.Random(416)
            started = time.perf_counter()
            for trial in range(1000):
                m = rng.choice((1, 5, 10, 15))
                preds = [scored(1.0 - rng.random(), rng.random() < 0.5,
                                qid=f"q{i}")
                         for i in range(rng.randint(1, 200))]
                ours = compute_ece(preds, BinningConfig(m))
                assert ours == pytest.approx(reference_ece(preds, m), abs=1e-12)
            assert time.perf_counter() - started < 5.0

    def test_perfect_calibration_and_hand_case(self, criterion):
        with criterion("matched sets score zero; two-record hand case is 0.30"):
            matched = []
            for k in range(1, 21):
                conf = k / 20
                matched.extend(scored(conf, j < k, qid=f"m{k}-{j}")
                               for j in range(20))
            assert compute_ece(matched) <= 1e-12

            half = [scored(0.5, i < 5, qid=f"h{i}") for i in range(10)]
            assert compute_ece(half) == 0.0

            hand = [scored(0.95, True, qid="a"), scored(0.55, False, qid="b")]
            ece = compute_ece(hand)
            assert ece == 0.5 * abs(1 - 0.95) + 0.5 * abs(0 - 0.55)
            assert ece == pytest.approx(0.30, abs=1e-15)


class TestSpanExtraction:
    def test_matches_brute_force(self, criterion):
        with criterion("span ranking equals brute force on 1000 random records"):
            rng = random.Random(52)
            started = time.perf_counter()
            checked = 0
            for trial in range(1000):
                n = rng.randint(1, 50)
                mask = [rng.random() < 0.8 for _ in range(n)]
                if not any(mask):
                    mask[rng.randrange(n)] = True
                rec = SpanLogitRecord(
                    qid=f"r{trial}", language="en",
                    start_logits=tuple(float(rng.randint(-4, 4)) for _ in range(n)),
                    end_logits=tuple(float(rng.randint(-4, 4)) for _ in range(n)),
                    context_mask=tuple(mask),
                    token_offsets=tuple((2 * i, 2 * i + 2) for i in range(n)),
                    context_text="ab" * n)
                k = rng.choice((1, 3, 5, 20))
                max_len = rng.randint(1, 12)
                cfg = ExtractionConfig(k=k, max_answer_length=max_len)
                got = [(sp.start_tok, sp.end_tok, sp.z_ans)
                       for sp in top_k_spans(rec, cfg)]
                assert got == reference_spans(rec, k, max_len)
                checked += 1
            assert checked == 1000
            assert time.perf_counter() - started < 10.0


class TestTemperatureFitting:
    def test_closed_form_family(self, criterion):
        with criterion("fit recovers closed-form optimum; boundaries flagged"):
            records = [two_token_span_record("a", 0),
                       two_token_span_record("b", 0),
                       two_token_span_record("c", 1)]
            params = fit_single_temperature(
                lambda tau: nll_position(records, "start", tau))
            assert 2.875 <= params.tau <= 2.895
            assert params.tau == pytest.approx(TAU_STAR, abs=0.01)
            assert params.fit_nll_after == pytest.approx(0.6365, abs=1e-3)
            assert params.fit_nll_after == pytest.approx(NLL_STAR, abs=1e-3)
            assert not params.hit_bound

            dual = fit_dual_temperature(records)
            assert dual.tau_start == pytest.approx(TAU_STAR, abs=0.01)
            assert dual.tau_end == pytest.approx(TAU_STAR, abs=0.01)

            # Half the golds on each side: flattening always helps, so the
            # optimum runs into the upper temperature bound.
            coin = [two_token_span_record(q, g)
                    for q, g in [("d", 0), ("e", 0), ("f", 1), ("g", 1)]]
            with pytest.warns(FitWarning):
                capped = fit_dual_temperature(coin)
            assert capped.hit_bound
            assert capped.tau_start == 50.0

            # Unanimous golds: sharpening always helps, lower bound this time.
            sure = [two_token_span_record(q, 0) for q in "hij"]
            with pytest.warns(FitWarning):
                floored = fit_dual_temperature(sure)
            assert floored.hit_bound
            assert floored.tau_start == 0.05

    def test_scaling_preserves_accuracy(self, criterion):
        with criterion("temperature scaling never changes answers or accuracy"):
            rng = random.Random(90125)
            for trial in range(500):
                texts = [f"c{i}" for i in range(rng.randint(1, 8))]
                cands = tuple((t, rng.uniform(-4, 4), rng.uniform(-4, 4))
                              for t in texts)
                gold = rng.choice(texts + ["absent"])
                rec = extractive_record(qid=f"x{trial}", golds=(gold,),
                                        cands=cands)
                temps = TemperatureParams(kind="dual",
                                          tau_start=rng.uniform(0.1, 10),
                                          tau_end=rng.uniform(0.1, 10))
                plain = score_record(rec)
                tempered = score_record(rec, temps)
                assert tempered.answer_text == plain.answer_text
                assert tempered.correct == plain.correct

            for trial in range(500):
                texts = [f"g{i}" for i in range(rng.randint(1, 8))]
                cands = tuple((t, rng.uniform(-6, -0.01)) for t in texts)
                gold = rng.choice(texts + ["absent"])
                rec = generative_record(qid=f"y{trial}", golds=(gold,),
                                        cands=cands)
                temps = TemperatureParams(kind="single",
                                          tau=rng.uniform(0.1, 10))
                plain = score_record(rec)
                tempered = score_record(rec, temps)
                assert tempered.answer_text == plain.answer_text
                assert tempered.correct == plain.correct

    def test_unit_temperature_identity(self, criterion):
        with criterion("unit temperature reproduces untempered confidences"):
            rng = random.Random(11)
            unit = TemperatureParams(kind="single", tau=1.0)
            for trial in range(200):
                cands = generative_record(
                    cands=tuple((f"t{i}", rng.uniform(-8, -0.01))
                                for i in range(rng.randint(1, 10)))).candidates
                plain = generative_confidences(cands)
                tempered = generative_confidences(cands, unit)
                assert np.max(np.abs(plain - tempered)) <= 1e-12


class TestTransferSummary:
    def test_twelve_language_fixture(self, criterion):
        with criterion("twelve-language transfer summary matches published means"):
            table = {
                "en": (67.52, 7.32), "ar": (37.06, 21.19), "de": (51.84, 14.55),
                "el": (39.18, 18.65), "es": (51.08, 14.0), "hi": (38.23, 21.31),
                "ro": (52.71, 14.36), "ru": (42.17, 19.72), "th": (35.81, 20.72),
                "tr": (39.73, 19.18), "vi": (44.16, 20.19), "zh": (53.05, 14.03),
            }
            rows = [LanguageMetricsRow(lang, 1190, em / 100, ece / 100)
                    for lang, (em, ece) in sorted(table.items())]
            report = transfer_report(rows)
            assert report["non_english_error"] * 100 == pytest.approx(55.91,
                                                                      abs=0.05)
            assert report["non_english_ece"] * 100 == pytest.approx(17.99,
                                                                    abs=0.05)
            assert report["relative_ece_increase"] * 100 == pytest.approx(
                145.8, abs=0.05)


class TestMixManifests:
    def test_size_law(self, criterion):
        with criterion("mix manifests obey the L*n size law with unique ids"):
            rng = random.Random(33)
            codes = ("ar", "de", "el", "es", "hi", "ro", "ru", "th")
            for trial in range(100):
                num_langs = rng.randint(1, 6)
                langs = ("en",) + tuple(rng.sample(codes, num_langs - 1))
                n = rng.randint(1, 100)
                pool_size = num_langs * n + rng.randint(0, 20)
                entries = [ParallelCorpusEntry(f"x{i:05d}", lang,
                                               f"q{i}", f"c{i}", f"a{i}")
                           for i in range(pool_size) for lang in langs]
                corpus = Corpus(tuple(entries))

                def manifest(mode):
                    return build_mix_manifest(corpus, MixConfig(
                        mode=mode, subset_size=n, languages=langs,
                        seed=rng.randint(0, 10**6)))

                en = manifest("en")
                assert len(en) == n
                for mode in ("en_tr", "en_large", "mixed"):
                    assert len(manifest(mode)) == num_langs * n

                mixed = manifest("mixed")
                ids = [i for i, _ in mixed]
                assert len(set(ids)) == num_langs * n
                assert [lang for _, lang in mixed] == list(langs) * n


class TestExampleSelection:
    def test_matches_cosine_oracle(self, criterion):
        with criterion("adaptive selection equals a cosine oracle on 500 pools"):
            rng = random.Random(2718)

            def reference_rank(query, vecs, k):
                qn = math.sqrt(sum(v * v for v in query))
                sims = [sum(a * b for a, b in zip(query, vec))
                        / (qn * math.sqrt(sum(v * v for v in vec)))
                        for vec in vecs]
                return sorted(range(len(vecs)),
                              key=lambda i: (-sims[i], i))[:k]

            def nonzero(vec):
                if all(v == 0 for v in vec):
                    vec[rng.randrange(len(vec))] = 1.0
                return vec

            for trial in range(500):
                if trial < 300:
                    dim = rng.randint(1, 6)
                    draw = lambda: float(rng.randint(-3, 3))
                else:
                    dim = rng.randint(1, 64)
                    draw = lambda: rng.gauss(0, 1)
                size = rng.randint(1, 30)
                vecs = [nonzero([draw() for _ in range(dim)])
                        for _ in range(size)]
                query = nonzero([draw() for _ in range(dim)])
                pool = [extractive_record(qid=str(i), embedding=tuple(vec))
                        for i, vec in enumerate(vecs)]
                k = rng.randint(1, size)
                picked = select_icl_examples(query, pool, k)
                assert picked == [str(i) for i in reference_rank(query, vecs, k)]


class TestCorrelationStatistics:
    def test_pearson_properties(self, criterion):
        with criterion("pearson: symmetry, affine invariance, hand value 0.5"):
            assert pearson([1.0, 2.0, 3.0], [1.0, 3.0, 2.0]) == pytest.approx(
                0.5, abs=1e-12)
            rng = random.Random(1123)
            for trial in range(100):
                n = rng.randint(3, 30)
                x = [rng.uniform(-5, 5) for _ in range(n)]
                y = [rng.uniform(-5, 5) for _ in range(n)]
                base = pearson(x, y)
                assert pearson(y, x) == pytest.approx(base, abs=1e-14)
                a, b = rng.uniform(0.1, 5), rng.uniform(-9, 9)
                assert pearson([a * v + b for v in x], y) == pytest.approx(
                    base, abs=1e-12)
                assert pearson([-a * v + b for v in x], y) == pytest.approx(
                    -base, abs=1e-12)


class TestLabelSmoothing:
    def test_formula_vector_and_distribution(self, criterion):
        with criterion("smoothing vector exact for C=4, gold=2, alpha=0.1"):
            assert smooth_targets(4, 2, 0.1).tolist() == [0.025, 0.025,
                                                          0.925, 0.025]
            rng = random.Random(64)
            for trial in range(200):
                c = rng.randint(2, 30)
                gold = rng.randrange(c)
                alpha = rng.random()
                vec = smooth_targets(c, gold, alpha)
                assert vec.min() >= 0.0
                assert vec.sum() == pytest.approx(1.0, abs=1e-12)
                assert vec[gold] == (1.0 - alpha) + alpha / c
                if alpha < 1.0:
                    assert int(np.argmax(vec)) == gold


class TestCommandLinePipeline:
    def test_fit_pipeline_reduces_ece(self, criterion, tmp_path):
        with criterion("CLI fit pipeline cuts ECE, keeps EM, reruns identical"):
            started = time.perf_counter()
            rng = random.Random(7)
            span_path = tmp_path / "spans.jsonl"
            with open(span_path, "w", encoding="utf-8") as fh:
                for i in range(200):
                    gold = 0 if rng.random() < 0.6 else 1
                    fh.write(json.dumps({
                        "qid": f"q{i}", "language": "en",
                        "start_logits": [4.0, 0.0], "end_logits": [4.0, 0.0],
                        "context_mask": [True, True],
                        "token_offsets": [[0, 3], [4, 9]],
                        "context_text": "the quick",
                        "gold_start": gold, "gold_end": gold,
                    }) + "\n")

            preds = tmp_path / "preds.jsonl"
            temps = tmp_path / "temps.json"
            before = tmp_path / "before.csv"
            after = tmp_path / "after.csv"

            def run_all():
                assert main(["extract-candidates", str(span_path),
                             "--dataset", "xquad", "--out", str(preds)]) == 0
                assert main(["evaluate", str(preds), "--format", "csv",
                             "--out", str(before)]) == 0
                assert main(["fit-temperature", str(span_path),
                             "--family", "extractive",
                             "--out", str(temps)]) == 0
                assert main(["evaluate", str(preds), "--format", "csv",
                             "--temperature", str(temps),
                             "--out", str(after)]) == 0
                return (preds.read_bytes(), before.read_bytes(),
                        temps.read_bytes(), after.read_bytes())

            first = run_all()
            assert run_all() == first

            def en_row(path):
                for line in path.read_text(encoding="utf-8").splitlines()[1:]:
                    cells = line.split(",")
                    if cells[0] == "en":
                        return cells
                raise AssertionError("no en row")

            row_before, row_after = en_row(before), en_row(after)
            assert row_before[2] == row_after[2]
            assert float(row_after[3]) < float(row_before[3])
            assert time.perf_counter() - started < 10.0
