"""Extended-alphabet finite-context models (xaFCM) and the normalized
relative compression (NRC) dissimilarity for symbolic sequences.

An order-k, depth-d model predicts the next d symbols from the previous k;
with d = 1 it reduces to a plain finite-context model. Compressing a target
of m symbols against a learned model takes ceil(m / d) lookups, which is
what makes large depths fast. Submodules: core (alphabets, sequences,
parsing), model (learning, probabilities, serialization), nrc (compression
and profiles), quantize (SAX), classify (nearest-model identification),
matrix (pairwise similarity), cli.
"""

from .core import (
    Alphabet,
    FastaParse,
    SymbolSequence,
    circular_window,
    concat_sequences,
    parse_fasta,
    parse_raw,
    read_sequence,
)
from .errors import (
    AlphabetMismatch,
    DuplicateLabel,
    EmptyInput,
    EmptyReference,
    EmptySegment,
    EmptyTarget,
    FormatError,
    LengthMismatch,
    NoSolution,
    TooFewPeaks,
    UnknownLabel,
    UnknownSymbol,
    VersionMismatch,
    XafcmError,
)
from .model import (
    ModelParams,
    XaModel,
    learn,
    load_model,
    model_stats,
    save_model,
    solve_alpha,
)
from .nrc import CompressionResult, compress_bits, information_profile, nrc
from .quantize import (
    AnnotatedSignal,
    SaxConfig,
    normal_breakpoints,
    paa,
    quantize_signal,
    sax_alphabet,
    symbolize,
)
from .classify import (
    ClassificationReport,
    ClassModelSet,
    classify_segment,
    split_segments,
    train_class_models,
)
from .matrix import SimilarityMatrix, model_cache_key, pairwise_nrc, write_matrix_csv

__version__ = "0.1.0"

__all__ = [
    "Alphabet",
    "AlphabetMismatch",
    "AnnotatedSignal",
    "ClassModelSet",
    "ClassificationReport",
    "CompressionResult",
    "DuplicateLabel",
    "EmptyInput",
    "EmptyReference",
    "EmptySegment",
    "EmptyTarget",
    "FastaParse",
    "FormatError",
    "LengthMismatch",
    "ModelParams",
    "NoSolution",
    "SaxConfig",
    "SimilarityMatrix",
    "SymbolSequence",
    "TooFewPeaks",
    "UnknownLabel",
    "UnknownSymbol",
    "VersionMismatch",
    "XaModel",
    "XafcmError",
    "circular_window",
    "classify_segment",
    "compress_bits",
    "concat_sequences",
    "information_profile",
    "learn",
    "load_model",
    "model_cache_key",
    "model_stats",
    "normal_breakpoints",
    "nrc",
    "paa",
    "pairwise_nrc",
    "parse_fasta",
    "parse_raw",
    "quantize_signal",
    "read_sequence",
    "sax_alphabet",
    "save_model",
    "solve_alpha",
    "split_segments",
    "symbolize",
    "train_class_models",
    "write_matrix_csv",
]
