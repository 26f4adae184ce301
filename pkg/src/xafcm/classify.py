"""Nearest-model classification.

One model is learned per class from reference material; a target is cut into
fixed-size segments and each segment is assigned the label whose model
compresses it best (lowest normalized relative compression). Since every
model shares the same parameters, ranking by raw bits and ranking by NRC
agree; NRC is reported because it is comparable across segment lengths.
"""

from __future__ import annotations

import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .core import SymbolSequence
from .errors import AlphabetMismatch, DuplicateLabel, EmptyReference, UnknownLabel
from .model import ModelParams, XaModel, learn
from .nrc import compress_bits


@dataclass(frozen=True)
class ClassModelSet:
    """Labeled frozen models sharing one parameter set."""

    entries: tuple

    def __post_init__(self):
        if not self.entries:
            raise ValueError("need at least one class model")
        labels = [label for label, _ in self.entries]
        if len(set(labels)) != len(labels):
            raise DuplicateLabel("class labels must be unique")
        params = self.entries[0][1].params
        for label, m in self.entries:
            if m.params != params:
                raise ValueError(
                    f"model for {label!r} does not share the common parameters")
        object.__setattr__(self, "entries", tuple(self.entries))

    @property
    def labels(self) -> list[str]:
        return [label for label, _ in self.entries]

    @property
    def params(self) -> ModelParams:
        return self.entries[0][1].params


def train_class_models(references, params: ModelParams,
                       workers: int = 1) -> ClassModelSet:
    """Learn one model per (label, sequence) pair."""
    refs = list(references)
    labels = [label for label, _ in refs]
    if len(set(labels)) != len(labels):
        raise DuplicateLabel("duplicate label in training references")
    for label, seq in refs:
        if len(seq) == 0:
            raise EmptyReference(f"empty reference for label {label!r}")
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            models = list(pool.map(lambda r: learn(r[1], params), refs))
    else:
        models = [learn(seq, params) for _, seq in refs]
    return ClassModelSet(tuple((label, m) for (label, _), m in zip(refs, models)))


def split_segments(target: SymbolSequence, segment_len: int,
                   stride: int | None = None):
    """Cut a sequence into segments of exactly segment_len symbols.

    Returns (segments, dropped) where dropped is the number of trailing
    symbols not covered by any segment. The default stride equals
    segment_len (non-overlapping); a smaller stride yields overlapping
    segments.
    """
    if segment_len < 1:
        raise ValueError("segment_len must be >= 1")
    step = segment_len if stride is None else stride
    if step < 1:
        raise ValueError("stride must be >= 1")
    n = len(target)
    segments = []
    start = 0
    while start + segment_len <= n:
        segments.append(SymbolSequence(target.alphabet,
                                       target.data[start:start + segment_len]))
        start += step
    covered = (start - step + segment_len) if segments else 0
    return segments, n - covered


def classify_segment(segment: SymbolSequence, models: ClassModelSet):
    """NRC against every class model; the lowest wins.

    Returns (label, nrc_vector) with the vector in model-set order. Exact
    ties go to the lexicographically smallest label, which keeps runs
    deterministic.
    """
    if segment.alphabet != models.params.alphabet:
        raise AlphabetMismatch("segment alphabet differs from model alphabet")
    values = np.array([compress_bits(segment, m).nrc for _, m in models.entries])
    best = values.min()
    label = min(lbl for lbl, v in zip(models.labels, values) if v == best)
    return label, values


@dataclass(frozen=True)
class SegmentDecision:
    segment_id: int
    true_label: str | None
    predicted_label: str
    nrc_values: np.ndarray


@dataclass(frozen=True)
class ClassificationReport:
    """Per-segment decisions plus aggregate accuracy and confusion counts.

    accuracy is None when no segments were produced (reported downstream as
    the sentinel "no-data"). confusion rows are true labels, columns
    predicted labels, both in model-set order; dropped_symbols counts
    remainder symbols discarded during splitting.
    """

    labels: tuple
    decisions: tuple
    accuracy: float | None
    confusion: np.ndarray
    dropped_symbols: int


def evaluate(test, models: ClassModelSet, segment_len: int,
             workers: int = 1) -> ClassificationReport:
    """Split every labeled test sequence, classify each segment, aggregate."""
    labels = models.labels
    index = {label: i for i, label in enumerate(labels)}
    test = list(test)
    for true_label, _ in test:
        if true_label not in index:
            raise UnknownLabel(f"test label {true_label!r} has no model")

    jobs = []
    dropped_total = 0
    for true_label, seq in test:
        segments, dropped = split_segments(seq, segment_len)
        dropped_total += dropped
        jobs.extend((true_label, seg) for seg in segments)

    def run(job):
        true_label, seg = job
        return true_label, classify_segment(seg, models)

    if workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(run, jobs))
    else:
        outcomes = [run(j) for j in jobs]

    decisions = []
    confusion = np.zeros((len(labels), len(labels)), dtype=np.int64)
    correct = 0
    for seg_id, (true_label, (predicted, values)) in enumerate(outcomes):
        decisions.append(SegmentDecision(seg_id, true_label, predicted, values))
        confusion[index[true_label], index[predicted]] += 1
        if predicted == true_label:
            correct += 1
    accuracy = correct / len(decisions) if decisions else None
    return ClassificationReport(tuple(labels), tuple(decisions), accuracy,
                                confusion, dropped_total)


def write_report_csv(report: ClassificationReport, fh) -> None:
    """Per-segment rows, then a trailing accuracy summary line."""
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["segment_id", "true_label", "predicted_label"]
                    + [f"nrc_{label}" for label in report.labels])
    for d in report.decisions:
        writer.writerow([d.segment_id, d.true_label or "", d.predicted_label]
                        + [f"{v:.6f}" for v in d.nrc_values])
    acc = "no-data" if report.accuracy is None else f"{report.accuracy:.6f}"
    writer.writerow(["accuracy", acc])


def write_confusion_csv(report: ClassificationReport, fh) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["true\\predicted"] + list(report.labels))
    for i, label in enumerate(report.labels):
        writer.writerow([label] + [int(v) for v in report.confusion[i]])
