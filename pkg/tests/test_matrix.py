import io

import numpy as np
import pytest

import xafcm.matrix as matrix_mod
from xafcm import (
    Alphabet,
    AlphabetMismatch,
    DuplicateLabel,
    ModelParams,
    SymbolSequence,
    XafcmError,
    parse_raw,
    pairwise_nrc,
    write_matrix_csv,
)

ABC = Alphabet("ABC")
DNA = Alphabet("ACGT")


def mutate(rng, seq, rate):
    """Point substitutions at the given rate (synthetic homology oracle)."""
    data = seq.data.copy()
    hit = rng.random(len(data)) < rate
    data[hit] = (data[hit] + rng.integers(1, seq.alphabet.size, hit.sum())) \
        % seq.alphabet.size
    return SymbolSequence(seq.alphabet, data)


def homology_trio(rng, n=50_000):
    ref = SymbolSequence(DNA, rng.integers(0, 4, n))
    return ref, mutate(rng, ref, 0.10), SymbolSequence(DNA, rng.integers(0, 4, n))


class TestPairwiseNrc:
    def test_single_cell_worked_example(self):
        params = ModelParams(alphabet=ABC, k=2, d=2, alpha=0.01)
        seq = parse_raw("AAABCC", ABC)
        result = pairwise_nrc([("x", seq)], [("x", seq)], params)
        assert result.values.shape == (1, 1)
        assert result.values[0, 0] == pytest.approx(0.1334, abs=5e-4)

    @pytest.mark.parametrize("d", [1, 4])
    def test_homology_ordering(self, d):
        rng = np.random.default_rng(151)
        ref, mutated, random_seq = homology_trio(rng)
        params = ModelParams(alphabet=DNA, k=10, d=d, alpha=1.0 / 4**d)
        result = pairwise_nrc(
            [("ref", ref)],
            [("self", ref), ("mut", mutated), ("rand", random_seq)],
            params)
        self_v, mut_v, rand_v = result.values[0]
        assert self_v < mut_v < rand_v
        assert rand_v == pytest.approx(1.0, abs=0.05)

    def test_argmin_consistent_across_depths(self):
        rng = np.random.default_rng(157)
        refs = [(f"r{i}", SymbolSequence(DNA, rng.integers(0, 4, 20_000)))
                for i in range(3)]
        targets = [(f"t{i}", mutate(rng, seq, 0.10)) for i, (_, seq) in
                   enumerate(refs)]
        argmins = {}
        for d in (1, 4):
            params = ModelParams(alphabet=DNA, k=8, d=d, alpha=1.0 / 4**d)
            result = pairwise_nrc(refs, targets, params)
            argmins[d] = list(np.argmin(result.values, axis=0))
        assert argmins[1] == argmins[4] == [0, 1, 2]

    def test_permutation_equivariance(self):
        rng = np.random.default_rng(163)
        refs = [(f"r{i}", SymbolSequence(ABC, rng.integers(0, 3, 500)))
                for i in range(3)]
        targets = [(f"t{i}", SymbolSequence(ABC, rng.integers(0, 3, 400)))
                   for i in range(2)]
        params = ModelParams(alphabet=ABC, k=3, d=2, alpha=0.1)
        base = pairwise_nrc(refs, targets, params)
        perm_r = [2, 0, 1]
        perm_t = [1, 0]
        permuted = pairwise_nrc([refs[i] for i in perm_r],
                                [targets[j] for j in perm_t], params)
        assert np.array_equal(permuted.values,
                              base.values[np.ix_(perm_r, perm_t)])

    def test_each_reference_learned_once(self, monkeypatch):
        calls = []
        real_learn = matrix_mod.learn

        def counting_learn(seq, params):
            calls.append(1)
            return real_learn(seq, params)

        monkeypatch.setattr(matrix_mod, "learn", counting_learn)
        rng = np.random.default_rng(167)
        refs = [(f"r{i}", SymbolSequence(ABC, rng.integers(0, 3, 300)))
                for i in range(4)]
        targets = [(f"t{i}", SymbolSequence(ABC, rng.integers(0, 3, 200)))
                   for i in range(5)]
        pairwise_nrc(refs, targets, ModelParams(alphabet=ABC, k=2, d=1,
                                                alpha=0.1))
        assert len(calls) == 4

    def test_validation(self):
        params = ModelParams(alphabet=ABC, k=2, d=1, alpha=0.1)
        seq = parse_raw("AAABCC", ABC)
        with pytest.raises(ValueError):
            pairwise_nrc([("x", seq)], [], params)
        with pytest.raises(ValueError):
            pairwise_nrc([], [("x", seq)], params)
        with pytest.raises(DuplicateLabel):
            pairwise_nrc([("x", seq), ("x", seq)], [("t", seq)], params)
        with pytest.raises(AlphabetMismatch):
            pairwise_nrc([("x", seq)], [("t", parse_raw("ACGT", DNA))], params)

    def test_error_identifies_pair(self):
        params = ModelParams(alphabet=ABC, k=2, d=1, alpha=0.1)
        seq = parse_raw("AAABCC", ABC)
        empty = SymbolSequence(ABC, [])
        with pytest.raises(XafcmError, match="'bad'"):
            pairwise_nrc([("ref", seq)], [("ok", seq), ("bad", empty)], params)


class TestJournal:
    def test_resume_skips_completed_cells(self, tmp_path, monkeypatch):
        rng = np.random.default_rng(173)
        refs = [(f"r{i}", SymbolSequence(ABC, rng.integers(0, 3, 400)))
                for i in range(2)]
        targets = [(f"t{i}", SymbolSequence(ABC, rng.integers(0, 3, 300)))
                   for i in range(3)]
        params = ModelParams(alphabet=ABC, k=2, d=2, alpha=0.1)
        journal = tmp_path / "cells.journal"

        first = pairwise_nrc(refs, targets, params, journal_path=journal)
        assert journal.exists()
        assert len(journal.read_text().splitlines()) == 6

        # With every cell journaled, a rerun must not learn or compress.
        def exploding_learn(*a, **kw):
            raise AssertionError("learn called despite complete journal")

        monkeypatch.setattr(matrix_mod, "learn", exploding_learn)
        second = pairwise_nrc(refs, targets, params, journal_path=journal)
        assert np.array_equal(first.values, second.values)

    def test_partial_journal_computes_only_missing(self, tmp_path):
        rng = np.random.default_rng(179)
        refs = [(f"r{i}", SymbolSequence(ABC, rng.integers(0, 3, 400)))
                for i in range(2)]
        targets = [(f"t{i}", SymbolSequence(ABC, rng.integers(0, 3, 300)))
                   for i in range(2)]
        params = ModelParams(alphabet=ABC, k=2, d=1, alpha=0.1)
        journal = tmp_path / "cells.journal"

        full = pairwise_nrc(refs, targets, params)
        # Seed the journal with two of the four cells at full precision.
        with open(journal, "w") as fh:
            fh.write(f"r0,t0,{full.values[0, 0]!r}\n")
            fh.write(f"r1,t1,{full.values[1, 1]!r}\n")
        resumed = pairwise_nrc(refs, targets, params, journal_path=journal)
        assert np.array_equal(resumed.values, full.values)
        assert len(journal.read_text().splitlines()) == 4

    def test_unknown_journal_labels_ignored(self, tmp_path):
        rng = np.random.default_rng(181)
        refs = [("r0", SymbolSequence(ABC, rng.integers(0, 3, 300)))]
        targets = [("t0", SymbolSequence(ABC, rng.integers(0, 3, 200)))]
        params = ModelParams(alphabet=ABC, k=2, d=1, alpha=0.1)
        journal = tmp_path / "cells.journal"
        journal.write_text("ghost,t0,0.5\nnot a row\n")
        result = pairwise_nrc(refs, targets, params, journal_path=journal)
        assert np.isfinite(result.values).all()


class TestModelCache:
    def test_cache_reused_across_runs(self, tmp_path, monkeypatch):
        rng = np.random.default_rng(191)
        refs = [("r0", SymbolSequence(ABC, rng.integers(0, 3, 500)))]
        targets = [("t0", SymbolSequence(ABC, rng.integers(0, 3, 400)))]
        params = ModelParams(alphabet=ABC, k=3, d=2, alpha=0.1)
        cache = tmp_path / "models"

        first = pairwise_nrc(refs, targets, params, cache_dir=cache)
        cached_files = list(cache.glob("*.xaf"))
        assert len(cached_files) == 1

        def exploding_learn(*a, **kw):
            raise AssertionError("learn called despite cached model")

        monkeypatch.setattr(matrix_mod, "learn", exploding_learn)
        second = pairwise_nrc(refs, targets, params, cache_dir=cache)
        assert np.array_equal(first.values, second.values)

    def test_cache_key_depends_on_params(self, tmp_path):
        rng = np.random.default_rng(193)
        seq = SymbolSequence(ABC, rng.integers(0, 3, 500))
        refs = [("r0", seq)]
        targets = [("t0", seq)]
        cache = tmp_path / "models"
        pairwise_nrc(refs, targets,
                     ModelParams(alphabet=ABC, k=2, d=1, alpha=0.1),
                     cache_dir=cache)
        pairwise_nrc(refs, targets,
                     ModelParams(alphabet=ABC, k=2, d=2, alpha=0.1),
                     cache_dir=cache)
        assert len(list(cache.glob("*.xaf"))) == 2


class TestWorkers:
    def test_parallel_matches_serial(self, tmp_path):
        rng = np.random.default_rng(197)
        refs = [(f"r{i}", SymbolSequence(ABC, rng.integers(0, 3, 600)))
                for i in range(3)]
        targets = [(f"t{i}", SymbolSequence(ABC, rng.integers(0, 3, 500)))
                   for i in range(3)]
        params = ModelParams(alphabet=ABC, k=3, d=2, alpha=0.1)
        serial = pairwise_nrc(refs, targets, params)
        journal = tmp_path / "cells.journal"
        parallel = pairwise_nrc(refs, targets, params, workers=4,
                                journal_path=journal)
        assert np.array_equal(serial.values, parallel.values)
        assert len(journal.read_text().splitlines()) == 9


class TestCsvOutput:
    def test_shape_and_precision(self):
        rng = np.random.default_rng(199)
        refs = [(f"r{i}", SymbolSequence(ABC, rng.integers(0, 3, 300)))
                for i in range(2)]
        targets = [(f"t{i}", SymbolSequence(ABC, rng.integers(0, 3, 200)))
                   for i in range(3)]
        params = ModelParams(alphabet=ABC, k=2, d=1, alpha=0.1)
        result = pairwise_nrc(refs, targets, params)
        buf = io.StringIO()
        write_matrix_csv(result, buf)
        lines = buf.getvalue().splitlines()
        assert lines[0] == ",t0,t1,t2"
        assert len(lines) == 3
        row = lines[1].split(",")
        assert row[0] == "r0"
        for cell in row[1:]:
            assert len(cell.split(".")[1]) == 6
