"""Pairwise NRC similarity matrices over sequence collections.

One model is learned per reference (exactly once per run) and every target
is compressed against it. Long runs can persist models in a digest-keyed
cache directory and journal completed cells to a file; a rerun with the same
journal recomputes only missing cells.
"""

from __future__ import annotations

import csv
import hashlib
import os
import tempfile
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import SymbolSequence
from .errors import AlphabetMismatch, DuplicateLabel, XafcmError
from .model import ModelParams, XaModel, learn, load_model, save_model
from .nrc import nrc


@dataclass(frozen=True)
class SimilarityMatrix:
    """NRC of every target against every reference model.

    values[i, j] is NRC(target_j || model(reference_i)). The matrix need not
    be square; labels keep their input order.
    """

    reference_labels: tuple
    target_labels: tuple
    values: np.ndarray
    params: ModelParams


def model_cache_key(seq: SymbolSequence, params: ModelParams) -> str:
    """Digest identifying a learned model: reference content plus parameters."""
    h = hashlib.sha256()
    h.update(params.alphabet.symbols.encode("ascii"))
    h.update(f"|k={params.k}|d={params.d}|alpha={params.alpha!r}|".encode("ascii"))
    h.update(seq.data.tobytes())
    return h.hexdigest()


def _cached_model(seq: SymbolSequence, params: ModelParams,
                  cache_dir) -> XaModel:
    if cache_dir is None:
        return learn(seq, params)
    cache_dir = Path(cache_dir)
    cache_dir.mkdir(parents=True, exist_ok=True)
    path = cache_dir / (model_cache_key(seq, params) + ".xaf")
    if path.exists():
        return load_model(path)
    model = learn(seq, params)
    fd, tmp = tempfile.mkstemp(dir=cache_dir, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            save_model(model, fh)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return model


def _read_journal(path) -> dict:
    done = {}
    if path is None or not os.path.exists(path):
        return done
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if len(row) != 3:
                continue
            try:
                done[(row[0], row[1])] = float(row[2])
            except ValueError:
                continue
    return done


def pairwise_nrc(references, targets, params: ModelParams, *,
                 cache_dir=None, journal_path=None,
                 workers: int = 1) -> SimilarityMatrix:
    """NRC matrix of all targets against models of all references."""
    references = list(references)
    targets = list(targets)
    if not references:
        raise ValueError("references must be non-empty")
    if not targets:
        raise ValueError("targets must be non-empty")
    ref_labels = [label for label, _ in references]
    tgt_labels = [label for label, _ in targets]
    if len(set(ref_labels)) != len(ref_labels):
        raise DuplicateLabel("duplicate reference label")
    if len(set(tgt_labels)) != len(tgt_labels):
        raise DuplicateLabel("duplicate target label")
    for label, seq in references + targets:
        if seq.alphabet != params.alphabet:
            raise AlphabetMismatch(
                f"sequence {label!r} is not over the model alphabet")

    values = np.full((len(references), len(targets)), np.nan)
    done = _read_journal(journal_path)
    for (rl, tl), v in done.items():
        if rl in ref_labels and tl in tgt_labels:
            values[ref_labels.index(rl), tgt_labels.index(tl)] = v

    pending = [(i, j) for i in range(len(references))
               for j in range(len(targets)) if np.isnan(values[i, j])]
    if pending:
        models = {}
        for i in sorted({i for i, _ in pending}):
            models[i] = _cached_model(references[i][1], params, cache_dir)

        def cell(i, j):
            try:
                return nrc(targets[j][1], models[i])
            except XafcmError as exc:
                raise XafcmError(
                    f"reference {ref_labels[i]!r} / target {tgt_labels[j]!r}: {exc}"
                ) from exc

        journal_fh = open(journal_path, "a", newline="") if journal_path else None
        try:
            writer = csv.writer(journal_fh, lineterminator="\n") if journal_fh else None
            if workers > 1 and len(pending) > 1:
                with ThreadPoolExecutor(max_workers=workers) as pool:
                    futures = {pool.submit(cell, i, j): (i, j) for i, j in pending}
                    for fut in as_completed(futures):
                        i, j = futures[fut]
                        values[i, j] = fut.result()
                        if writer:
                            writer.writerow([ref_labels[i], tgt_labels[j],
                                             repr(values[i, j])])
                            journal_fh.flush()
            else:
                for i, j in pending:
                    values[i, j] = cell(i, j)
                    if writer:
                        writer.writerow([ref_labels[i], tgt_labels[j],
                                         repr(values[i, j])])
                        journal_fh.flush()
        finally:
            if journal_fh:
                journal_fh.close()

    values.setflags(write=False)
    return SimilarityMatrix(tuple(ref_labels), tuple(tgt_labels), values, params)


def write_matrix_csv(matrix: SimilarityMatrix, fh) -> None:
    """Header row of target labels, leading column of reference labels,
    six fractional digits per value."""
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow([""] + list(matrix.target_labels))
    for i, label in enumerate(matrix.reference_labels):
        writer.writerow([label] + [f"{v:.6f}" for v in matrix.values[i]])
