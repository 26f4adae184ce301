"""Command-line surface.

Subcommands: learn, nrc, profile, matrix, quantize, classify, alpha.
Exit codes: 0 success, 1 usage error, 2 data error. All output is
deterministic for identical inputs and flags.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import tempfile
import time
from pathlib import Path

from .core import Alphabet, concat_sequences, read_sequence
from .classify import (evaluate, train_class_models, write_confusion_csv,
                       write_report_csv)
from .errors import XafcmError
from .matrix import pairwise_nrc, write_matrix_csv
from .model import ModelParams, learn, load_model, save_model, solve_alpha
from .nrc import compress_bits, information_profile
from .quantize import AnnotatedSignal, SaxConfig, quantize_signal

ALPHABET_PRESETS = {"dna": "ACGT", "sax6": "ABCDEF"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _alphabet(spec: str) -> Alphabet:
    try:
        return Alphabet(ALPHABET_PRESETS.get(spec, spec))
    except ValueError as exc:
        raise UsageError(f"bad alphabet {spec!r}: {exc}") from None


def _alpha_flag(text: str):
    if text == "auto":
        return "auto"
    try:
        value = float(text)
    except ValueError:
        raise UsageError(f"alpha must be a decimal or 'auto', got {text!r}") from None
    if not value > 0:
        raise UsageError("alpha must be > 0")
    return value


def _params(args) -> ModelParams:
    try:
        return ModelParams(alphabet=_alphabet(args.alphabet), k=args.k,
                           d=args.d, alpha=_alpha_flag(args.alpha))
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _positive(args, **named):
    for name, value in named.items():
        if value is not None and value < 1:
            raise UsageError(f"{name} must be >= 1")


def _write_atomic(path, data: bytes):
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _emit_timings(args, **fields):
    if getattr(args, "timings", False):
        print(json.dumps(fields, sort_keys=True), file=sys.stderr)


def _load_labeled(pairs, alphabet, kind, policy):
    """Parse 'label=path[,path...]' flags into (label, sequence) pairs."""
    out = []
    for item in pairs:
        label, sep, paths = item.partition("=")
        if not sep or not label or not paths:
            raise UsageError(f"expected label=path, got {item!r}")
        seqs = [read_sequence(p, alphabet, kind, policy).sequence
                for p in paths.split(",")]
        out.append((label, seqs[0] if len(seqs) == 1 else concat_sequences(seqs)))
    return out


# -- subcommands ---------------------------------------------------------


def cmd_learn(args) -> int:
    _positive(args, k=args.k, d=args.d)
    params = _params(args)
    t0 = time.perf_counter()
    seq = read_sequence(args.reference, params.alphabet, args.format,
                        args.unknown).sequence
    model = learn(seq, params)
    elapsed = time.perf_counter() - t0
    import io

    buf = io.BytesIO()
    save_model(model, buf)
    _write_atomic(args.output, buf.getvalue())
    _emit_timings(args, learn_seconds=elapsed, trained_on=model.trained_on)
    return 0


def cmd_nrc(args) -> int:
    model = load_model(args.model)
    seq = read_sequence(args.target, model.params.alphabet, args.format,
                        args.unknown).sequence
    t0 = time.perf_counter()
    result = compress_bits(seq, model)
    elapsed = time.perf_counter() - t0
    print(f"{result.nrc:.6f}")
    _emit_timings(args, compress_seconds=elapsed, query_count=result.query_count,
                  total_bits=result.total_bits)
    return 0


def cmd_profile(args) -> int:
    _positive(args, window=args.window)
    model = load_model(args.model)
    seq = read_sequence(args.target, model.params.alphabet, args.format,
                        args.unknown).sequence
    t0 = time.perf_counter()
    positions, values = information_profile(seq, model, args.window)
    elapsed = time.perf_counter() - t0
    rows = "".join(f"{p}\t{v:.6f}\n" for p, v in zip(positions, values))
    if args.output:
        _write_atomic(args.output, rows.encode("ascii"))
    else:
        sys.stdout.write(rows)
    _emit_timings(args, compress_seconds=elapsed, query_count=len(positions))
    return 0


def cmd_matrix(args) -> int:
    _positive(args, k=args.k, d=args.d, workers=args.workers)
    params = _params(args)
    references = [(Path(p).stem, read_sequence(p, params.alphabet, args.format,
                                               args.unknown).sequence)
                  for p in args.references]
    targets = [(Path(p).stem, read_sequence(p, params.alphabet, args.format,
                                            args.unknown).sequence)
               for p in args.targets]
    t0 = time.perf_counter()
    matrix = pairwise_nrc(references, targets, params,
                          cache_dir=args.cache_dir,
                          journal_path=args.journal,
                          workers=args.workers)
    elapsed = time.perf_counter() - t0
    import io

    buf = io.StringIO()
    write_matrix_csv(matrix, buf)
    _write_atomic(args.output, buf.getvalue().encode("ascii"))
    _emit_timings(args, total_seconds=elapsed,
                  cells=len(matrix.reference_labels) * len(matrix.target_labels))
    return 0


def cmd_quantize(args) -> int:
    _positive(args, symbols_per_segment=args.symbols_per_segment)
    try:
        config = SaxConfig(symbols_per_segment=args.symbols_per_segment,
                           alphabet_size=args.alphabet_size)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    samples = _read_samples(args.signal, args.csv_column)
    peaks = _read_peaks(args.peaks)
    try:
        signal = AnnotatedSignal(samples, peaks,
                                 expected_period=args.symbols_per_segment)
    except ValueError as exc:
        raise XafcmError(str(exc)) from None
    seq = quantize_signal(signal, config)
    text = seq.text() + "\n"
    if args.output:
        _write_atomic(args.output, text.encode("ascii"))
    else:
        sys.stdout.write(text)
    return 0


def cmd_classify(args) -> int:
    _positive(args, k=args.k, d=args.d, segment_len=args.segment_len,
              workers=args.workers)
    params = _params(args)
    train = _load_labeled(args.train, params.alphabet, args.format, args.unknown)
    test = _load_labeled(args.test, params.alphabet, args.format, args.unknown)
    t0 = time.perf_counter()
    models = train_class_models(train, params)
    t1 = time.perf_counter()
    report = evaluate(test, models, args.segment_len, workers=args.workers)
    t2 = time.perf_counter()
    import io

    buf = io.StringIO()
    write_report_csv(report, buf)
    _write_atomic(args.output, buf.getvalue().encode("ascii"))
    if args.confusion:
        buf = io.StringIO()
        write_confusion_csv(report, buf)
        _write_atomic(args.confusion, buf.getvalue().encode("ascii"))
    _emit_timings(args, learn_seconds=t1 - t0, compress_seconds=t2 - t1,
                  segments=len(report.decisions))
    return 0


def cmd_alpha(args) -> int:
    _positive(args, d=args.d)
    if not 0 < args.p < 1:
        raise UsageError("p must be strictly between 0 and 1")
    if args.alphabet_size < 1:
        raise UsageError("alphabet-size must be >= 1")
    print(f"{solve_alpha(args.alphabet_size, args.d, args.p):.10g}")
    return 0


# -- argument wiring -------------------------------------------------------


def _add_io_flags(p):
    p.add_argument("--format", choices=["auto", "raw", "fasta"], default="auto",
                   help="input kind; auto sniffs a leading '>'")
    p.add_argument("--unknown", choices=["reject", "drop"], default="reject",
                   help="policy for symbols outside the alphabet (fasta only)")


def _add_model_flags(p):
    p.add_argument("-k", type=int, required=True, help="context order (symbols)")
    p.add_argument("-d", type=int, default=1, help="block depth (symbols)")
    p.add_argument("--alpha", default="auto",
                   help="smoothing weight, a decimal or 'auto' (default)")
    p.add_argument("--alphabet", required=True,
                   help="inline symbols, or preset 'dna'/'sax6'")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="xafcm",
                     description="Extended-alphabet finite-context models and "
                                 "normalized relative compression.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("learn", help="learn a model from a reference sequence")
    _add_model_flags(p)
    _add_io_flags(p)
    p.add_argument("reference", help="reference sequence file")
    p.add_argument("-o", "--output", required=True, help="model file to write")
    p.add_argument("--timings", action="store_true")
    p.set_defaults(func=cmd_learn)

    p = sub.add_parser("nrc", help="normalized relative compression of a target")
    _add_io_flags(p)
    p.add_argument("model", help="model file")
    p.add_argument("target", help="target sequence file")
    p.add_argument("--timings", action="store_true")
    p.set_defaults(func=cmd_nrc)

    p = sub.add_parser("profile", help="per-block information content profile")
    _add_io_flags(p)
    p.add_argument("model")
    p.add_argument("target")
    p.add_argument("--window", type=int, default=1,
                   help="moving average width in blocks")
    p.add_argument("-o", "--output", help="TSV output path (default stdout)")
    p.add_argument("--timings", action="store_true")
    p.set_defaults(func=cmd_profile)

    p = sub.add_parser("matrix", help="pairwise NRC matrix")
    _add_model_flags(p)
    _add_io_flags(p)
    p.add_argument("--references", nargs="+", required=True, metavar="FILE")
    p.add_argument("--targets", nargs="+", required=True, metavar="FILE")
    p.add_argument("-o", "--output", required=True, help="matrix CSV path")
    p.add_argument("--journal", help="journal file for resumable runs")
    p.add_argument("--cache-dir", help="directory for persisted models")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--timings", action="store_true")
    p.set_defaults(func=cmd_matrix)

    p = sub.add_parser("quantize", help="quantize a sampled signal into symbols")
    p.add_argument("signal", help="samples, one decimal per line (or CSV)")
    p.add_argument("--peaks", required=True,
                   help="segment boundaries, one ascending index per line")
    p.add_argument("--symbols-per-segment", type=int, default=200)
    p.add_argument("--alphabet-size", type=int, default=6)
    p.add_argument("--csv-column", type=int,
                   help="treat the signal file as CSV and read this column")
    p.add_argument("-o", "--output", help="symbol text output (default stdout)")
    p.set_defaults(func=cmd_quantize)

    p = sub.add_parser("classify", help="nearest-model segment classification")
    _add_model_flags(p)
    _add_io_flags(p)
    p.add_argument("--train", nargs="+", required=True, metavar="LABEL=FILE",
                   help="training material; repeat paths with commas to concatenate")
    p.add_argument("--test", nargs="+", required=True, metavar="LABEL=FILE")
    p.add_argument("--segment-len", type=int, required=True,
                   help="segment length in symbols")
    p.add_argument("-o", "--output", required=True, help="report CSV path")
    p.add_argument("--confusion", help="confusion matrix CSV path")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--timings", action="store_true")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("alpha", help="print the auto-solved smoothing weight")
    p.add_argument("--alphabet-size", "-A", type=int, required=True)
    p.add_argument("-d", type=int, default=1)
    p.add_argument("-p", type=float, default=0.9,
                   help="per-symbol confidence (default 0.9)")
    p.set_defaults(func=cmd_alpha)

    return parser


def _read_samples(path, csv_column):
    with open(path, newline="") as fh:
        if csv_column is None:
            values = []
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    values.append(float(line))
                except ValueError:
                    raise XafcmError(
                        f"{path}:{lineno}: not a decimal sample: {line!r}") from None
            return values
        values = []
        for rowno, row in enumerate(csv.reader(fh)):
            if csv_column >= len(row):
                raise XafcmError(f"{path}: row {rowno + 1} has no column "
                                 f"{csv_column}")
            cell = row[csv_column].strip()
            try:
                values.append(float(cell))
            except ValueError:
                if rowno == 0:
                    continue  # tolerate a single header row
                raise XafcmError(
                    f"{path}: row {rowno + 1}: not a decimal sample: {cell!r}"
                ) from None
        return values


def _read_peaks(path):
    peaks = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                peaks.append(int(line))
            except ValueError:
                raise XafcmError(
                    f"{path}:{lineno}: not an integer index: {line!r}") from None
    return peaks


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"xafcm: {exc}", file=sys.stderr)
        return 1
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"xafcm: {exc}", file=sys.stderr)
        return 1
    except (XafcmError, OSError, ValueError) as exc:
        print(f"xafcm: {exc}", file=sys.stderr)
        return 2


def entry():
    sys.exit(main())


if __name__ == "__main__":
    entry()
