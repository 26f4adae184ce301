import io
import math

import numpy as np
import pytest

from xafcm import (
    Alphabet,
    AlphabetMismatch,
    ClassModelSet,
    DuplicateLabel,
    EmptyReference,
    ModelParams,
    SymbolSequence,
    UnknownLabel,
    classify_segment,
    compress_bits,
    learn,
    parse_raw,
    split_segments,
    train_class_models,
)
from xafcm.classify import evaluate, write_confusion_csv, write_report_csv

ALPH = Alphabet("ABCDEF")


def markov_sequence(rng, transitions, length, burn=50):
    """Order-2 Markov sampler used as the synthetic class source."""
    size = transitions.shape[0]
    out = np.empty(length + burn, dtype=np.uint8)
    out[0] = rng.integers(0, size)
    out[1] = rng.integers(0, size)
    cum = np.cumsum(transitions, axis=-1)
    u = rng.random(length + burn)
    for i in range(2, length + burn):
        out[i] = np.searchsorted(cum[out[i - 2], out[i - 1]], u[i])
    return SymbolSequence(ALPH, out[burn:])


def make_sources(rng, classes, concentration=0.15):
    return [rng.dirichlet(np.full(6, concentration), size=(6, 6))
            for _ in range(classes)]


class TestTrainClassModels:
    def test_basic(self):
        params = ModelParams(alphabet=ALPH, k=2, d=1, alpha=0.1)
        refs = [("a", parse_raw("AAABBB", ALPH)), ("b", parse_raw("CCCDDD", ALPH))]
        models = train_class_models(refs, params)
        assert models.labels == ["a", "b"]
        assert all(m.params == params for _, m in models.entries)

    def test_duplicate_label(self):
        params = ModelParams(alphabet=ALPH, k=2, d=1, alpha=0.1)
        refs = [("a", parse_raw("AAABBB", ALPH)), ("a", parse_raw("CCC", ALPH))]
        with pytest.raises(DuplicateLabel):
            train_class_models(refs, params)

    def test_empty_reference_names_label(self):
        params = ModelParams(alphabet=ALPH, k=2, d=1, alpha=0.1)
        refs = [("good", parse_raw("AAABBB", ALPH)),
                ("bad", SymbolSequence(ALPH, []))]
        with pytest.raises(EmptyReference, match="bad"):
            train_class_models(refs, params)

    def test_cohort_of_25(self):
        rng = np.random.default_rng(89)
        params = ModelParams(alphabet=ALPH, k=2, d=2, alpha=0.1)
        refs = [(f"p{i:02d}", SymbolSequence(ALPH, rng.integers(0, 6, 300)))
                for i in range(25)]
        models = train_class_models(refs, params)
        assert len(models.entries) == 25


class TestSplitSegments:
    def test_exact_split(self):
        seq = SymbolSequence(ALPH, np.zeros(6000, dtype=np.uint8))
        segments, dropped = split_segments(seq, 2000)
        assert len(segments) == 3
        assert dropped == 0
        assert all(len(s) == 2000 for s in segments)

    def test_remainder_dropped(self):
        seq = SymbolSequence(ALPH, np.zeros(6100, dtype=np.uint8))
        segments, dropped = split_segments(seq, 2000)
        assert len(segments) == 3
        assert dropped == 100

    def test_segment_longer_than_target(self):
        seq = SymbolSequence(ALPH, np.zeros(100, dtype=np.uint8))
        segments, dropped = split_segments(seq, 2000)
        assert segments == []
        assert dropped == 100

    def test_overlapping_stride(self):
        seq = SymbolSequence(ALPH, np.arange(10) % 6)
        segments, dropped = split_segments(seq, 4, stride=2)
        assert len(segments) == 4
        assert dropped == 0
        assert segments[1].data.tolist() == (np.arange(2, 6) % 6).tolist()

    def test_segments_are_consecutive(self):
        rng = np.random.default_rng(97)
        seq = SymbolSequence(ALPH, rng.integers(0, 6, 50))
        segments, _ = split_segments(seq, 7)
        rebuilt = np.concatenate([s.data for s in segments])
        assert np.array_equal(rebuilt, seq.data[:49])


class TestClassifySegment:
    def test_self_reference_wins(self):
        rng = np.random.default_rng(101)
        params = ModelParams(alphabet=ALPH, k=2, d=1, alpha=0.1)
        refs = [(label, SymbolSequence(ALPH, rng.integers(0, 6, 400)))
                for label in ("a", "b", "c")]
        models = train_class_models(refs, params)
        for label, seq in refs:
            got, values = classify_segment(seq, models)
            assert got == label
            assert len(values) == 3
            assert np.all(values >= 0)

    def test_markov_source_segment(self):
        rng = np.random.default_rng(103)
        sources = make_sources(rng, 2)
        params = ModelParams(alphabet=ALPH, k=4, d=1, alpha="auto")
        refs = [("a", markov_sequence(rng, sources[0], 5000)),
                ("b", markov_sequence(rng, sources[1], 5000))]
        models = train_class_models(refs, params)
        probe = markov_sequence(rng, sources[0], 1500)
        label, _ = classify_segment(probe, models)
        assert label == "a"

    def test_tie_breaks_lexicographic(self):
        seq = parse_raw("ABABAB", ALPH)
        params = ModelParams(alphabet=ALPH, k=1, d=1, alpha=0.1)
        model = learn(seq, params)
        models = ClassModelSet((("zeta", model), ("alpha", model)))
        label, values = classify_segment(seq, models)
        assert values[0] == values[1]
        assert label == "alpha"

    def test_alphabet_mismatch(self):
        params = ModelParams(alphabet=ALPH, k=1, d=1, alpha=0.1)
        models = train_class_models([("a", parse_raw("ABAB", ALPH)),
                                     ("b", parse_raw("CDCD", ALPH))], params)
        with pytest.raises(AlphabetMismatch):
            classify_segment(parse_raw("ACGT", Alphabet("ACGT")), models)


class TestEvaluate:
    def test_perfect_separation(self):
        rng = np.random.default_rng(107)
        sources = make_sources(rng, 3)
        params = ModelParams(alphabet=ALPH, k=4, d=2, alpha="auto")
        refs = [(f"c{i}", markov_sequence(rng, s, 6000))
                for i, s in enumerate(sources)]
        models = train_class_models(refs, params)
        test = [(f"c{i}", markov_sequence(rng, s, 4000))
                for i, s in enumerate(sources)]
        report = evaluate(test, models, segment_len=1000)
        assert report.accuracy == 1.0
        assert np.array_equal(report.confusion, np.diag([4, 4, 4]))

    def test_single_class_trivially_correct(self):
        rng = np.random.default_rng(109)
        params = ModelParams(alphabet=ALPH, k=2, d=1, alpha=0.1)
        seq = SymbolSequence(ALPH, rng.integers(0, 6, 3000))
        models = train_class_models([("only", seq)], params)
        report = evaluate([("only", seq)], models, segment_len=500)
        assert report.accuracy == 1.0

    def test_no_segments_reports_no_data(self):
        rng = np.random.default_rng(113)
        params = ModelParams(alphabet=ALPH, k=2, d=1, alpha=0.1)
        seq = SymbolSequence(ALPH, rng.integers(0, 6, 300))
        models = train_class_models([("a", seq)], params)
        report = evaluate([("a", seq)], models, segment_len=5000)
        assert report.accuracy is None
        assert len(report.decisions) == 0
        buf = io.StringIO()
        write_report_csv(report, buf)
        assert buf.getvalue().splitlines()[-1] == "accuracy,no-data"

    def test_unknown_label(self):
        rng = np.random.default_rng(127)
        params = ModelParams(alphabet=ALPH, k=2, d=1, alpha=0.1)
        seq = SymbolSequence(ALPH, rng.integers(0, 6, 300))
        models = train_class_models([("a", seq)], params)
        with pytest.raises(UnknownLabel):
            evaluate([("mystery", seq)], models, segment_len=100)

    def test_accuracy_equals_confusion_trace(self):
        rng = np.random.default_rng(131)
        sources = make_sources(rng, 3, concentration=1.5)  # deliberately hard
        params = ModelParams(alphabet=ALPH, k=3, d=1, alpha=1.0)
        refs = [(f"c{i}", markov_sequence(rng, s, 3000))
                for i, s in enumerate(sources)]
        models = train_class_models(refs, params)
        test = [(f"c{i}", markov_sequence(rng, s, 2500))
                for i, s in enumerate(sources)]
        report = evaluate(test, models, segment_len=400)
        assert report.accuracy == pytest.approx(
            np.trace(report.confusion) / report.confusion.sum())

    def test_decision_invariance_bits_vs_nrc(self):
        rng = np.random.default_rng(137)
        sources = make_sources(rng, 3)
        params = ModelParams(alphabet=ALPH, k=4, d=2, alpha="auto")
        refs = [(f"c{i}", markov_sequence(rng, s, 5000))
                for i, s in enumerate(sources)]
        models = train_class_models(refs, params)
        probe = markov_sequence(rng, sources[1], 2000)
        label, values = classify_segment(probe, models)
        bits = [compress_bits(probe, m).total_bits for _, m in models.entries]
        assert int(np.argmin(bits)) == int(np.argmin(values))

    def test_parallel_matches_serial(self):
        rng = np.random.default_rng(139)
        sources = make_sources(rng, 2)
        params = ModelParams(alphabet=ALPH, k=4, d=1, alpha="auto")
        refs = [(f"c{i}", markov_sequence(rng, s, 4000))
                for i, s in enumerate(sources)]
        models = train_class_models(refs, params)
        test = [(f"c{i}", markov_sequence(rng, s, 3000))
                for i, s in enumerate(sources)]
        serial = evaluate(test, models, segment_len=600, workers=1)
        parallel = evaluate(test, models, segment_len=600, workers=4)
        assert serial.accuracy == parallel.accuracy
        assert [d.predicted_label for d in serial.decisions] == \
               [d.predicted_label for d in parallel.decisions]


class TestReportOutput:
    def _small_report(self):
        rng = np.random.default_rng(149)
        params = ModelParams(alphabet=ALPH, k=2, d=1, alpha=0.1)
        refs = [("a", SymbolSequence(ALPH, rng.integers(0, 6, 1000))),
                ("b", SymbolSequence(ALPH, rng.integers(0, 6, 1000)))]
        models = train_class_models(refs, params)
        test = [("a", refs[0][1]), ("b", refs[1][1])]
        return evaluate(test, models, segment_len=250)

    def test_report_csv_shape(self):
        report = self._small_report()
        buf = io.StringIO()
        write_report_csv(report, buf)
        lines = buf.getvalue().splitlines()
        assert lines[0] == "segment_id,true_label,predicted_label,nrc_a,nrc_b"
        assert len(lines) == 1 + 8 + 1  # header, 8 segments, summary
        assert lines[-1].startswith("accuracy,")

    def test_confusion_csv_shape(self):
        report = self._small_report()
        buf = io.StringIO()
        write_confusion_csv(report, buf)
        lines = buf.getvalue().splitlines()
        assert lines[0] == "true\\predicted,a,b"
        assert len(lines) == 3

    def test_deterministic_output(self):
        a, b = io.StringIO(), io.StringIO()
        write_report_csv(self._small_report(), a)
        write_report_csv(self._small_report(), b)
        assert a.getvalue() == b.getvalue()
