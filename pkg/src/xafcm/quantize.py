"""Symbolic quantization of sampled signals (SAX).

A one-dimensional signal plus segment boundaries (for ECG work: R-peak
sample indices) is turned into a symbol sequence in three steps, applied per
segment: piecewise aggregate approximation down to a fixed number of values,
z-normalization, and discretization against standard-normal quantile
breakpoints. Normalizing per segment makes the output invariant to affine
transforms of each segment, which is what lets shapes recorded at different
gains or offsets quantize identically.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.stats import norm

from .core import Alphabet, SymbolSequence
from .errors import EmptySegment, TooFewPeaks

_SAX_SYMBOLS = "ABCDEFGHIJKLMNOPQRST"


def sax_alphabet(alphabet_size: int) -> Alphabet:
    """Output alphabet for SAX symbols: the first `alphabet_size` uppercase
    letters."""
    if not 3 <= alphabet_size <= 20:
        raise ValueError("alphabet_size must be in [3, 20]")
    return Alphabet(_SAX_SYMBOLS[:alphabet_size])


def normal_breakpoints(alphabet_size: int) -> np.ndarray:
    """Standard-normal quantiles at i/|A|, i = 1..|A|-1, rounded to 10
    decimal places so configurations reproduce bit-exactly."""
    qs = np.arange(1, alphabet_size) / alphabet_size
    breaks = np.round(norm.ppf(qs), 10)
    breaks.setflags(write=False)
    return breaks


@dataclass(frozen=True)
class SaxConfig:
    """Quantization parameters: values per segment and output alphabet size."""

    symbols_per_segment: int = 200
    alphabet_size: int = 6
    breakpoints: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if self.symbols_per_segment < 1:
            raise ValueError("symbols_per_segment must be >= 1")
        if not 3 <= self.alphabet_size <= 20:
            raise ValueError("alphabet_size must be in [3, 20]")
        if self.breakpoints is None:
            object.__setattr__(self, "breakpoints",
                               normal_breakpoints(self.alphabet_size))
        else:
            bp = np.asarray(self.breakpoints, dtype=float)
            if bp.shape != (self.alphabet_size - 1,):
                raise ValueError("need alphabet_size - 1 breakpoints")
            if not np.all(bp[:-1] < bp[1:]):
                raise ValueError("breakpoints must be strictly ascending")
            bp.setflags(write=False)
            object.__setattr__(self, "breakpoints", bp)

    @property
    def alphabet(self) -> Alphabet:
        return sax_alphabet(self.alphabet_size)

    def __eq__(self, other):
        return (isinstance(other, SaxConfig)
                and self.symbols_per_segment == other.symbols_per_segment
                and self.alphabet_size == other.alphabet_size
                and np.array_equal(self.breakpoints, other.breakpoints))


@dataclass(frozen=True)
class AnnotatedSignal:
    """Sampled signal with ascending segment-boundary indices.

    Boundaries are half-open: segment i covers samples
    [peak_indices[i], peak_indices[i+1]). expected_period is carried along as
    metadata (symbols per segment after quantization) and not interpreted
    here.
    """

    samples: np.ndarray
    peak_indices: np.ndarray
    expected_period: int | None = None

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=float)
        peaks = np.asarray(self.peak_indices, dtype=np.int64)
        if samples.ndim != 1:
            raise ValueError("samples must be one-dimensional")
        if peaks.ndim != 1:
            raise ValueError("peak_indices must be one-dimensional")
        if peaks.size and not np.all(peaks[:-1] < peaks[1:]):
            raise ValueError("peak_indices must be strictly ascending")
        if peaks.size and (peaks[0] < 0 or peaks[-1] > samples.shape[0]):
            raise ValueError("peak_indices out of sample range")
        samples.setflags(write=False)
        peaks.setflags(write=False)
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "peak_indices", peaks)


def segment(signal: AnnotatedSignal) -> list[np.ndarray]:
    """Half-open segments [peak_i, peak_{i+1}); samples before the first and
    after the last peak are discarded."""
    peaks = signal.peak_indices
    if peaks.shape[0] < 2:
        raise TooFewPeaks("need at least 2 peaks to form a segment")
    return [signal.samples[peaks[i]:peaks[i + 1]]
            for i in range(peaks.shape[0] - 1)]


def paa(values, out_len: int) -> np.ndarray:
    """Piecewise aggregate approximation with proportional weighting.

    Output j is the mean of the input over the frame
    [j*L/out_len, (j+1)*L/out_len); samples straddling a frame boundary
    contribute proportionally, so the mean of the output equals the mean of
    the input exactly.
    """
    x = np.asarray(values, dtype=float)
    length = x.shape[0]
    if length == 0:
        raise EmptySegment("cannot resample an empty segment")
    if out_len < 1:
        raise ValueError("out_len must be >= 1")
    if out_len == length:
        return x.copy()
    csum = np.concatenate([[0.0], np.cumsum(x)])
    # Frame boundary j sits at j*length/out_len; split it exactly into an
    # integer sample index and a fractional remainder.
    j = np.arange(out_len + 1, dtype=np.int64)
    whole, frac_num = np.divmod(j * length, out_len)
    upto = csum[whole] + x[np.minimum(whole, length - 1)] * (frac_num / out_len)
    return (upto[1:] - upto[:-1]) * (out_len / length)


def symbolize(values, config: SaxConfig) -> SymbolSequence:
    """z-normalize, then map each value to its breakpoint interval.

    A zero-variance input maps every value to the middle symbol rather than
    failing; flat stretches are common in real recordings.
    """
    x = np.asarray(values, dtype=float)
    if x.shape[0] == 0:
        raise EmptySegment("cannot symbolize an empty segment")
    alphabet = config.alphabet
    std = x.std()
    if std == 0.0:
        mid = config.alphabet_size // 2
        return SymbolSequence(alphabet, np.full(x.shape[0], mid, dtype=np.uint8))
    z = (x - x.mean()) / std
    codes = np.digitize(z, config.breakpoints)
    return SymbolSequence(alphabet, codes.astype(np.uint8))


def quantize_signal(signal: AnnotatedSignal, config: SaxConfig) -> SymbolSequence:
    """Full pipeline: segment, resample each segment to
    symbols_per_segment values, symbolize, concatenate."""
    parts = [symbolize(paa(seg, config.symbols_per_segment), config)
             for seg in segment(signal)]
    data = np.concatenate([p.data for p in parts])
    return SymbolSequence(config.alphabet, data)
