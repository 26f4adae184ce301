"""Relative compression and the normalized relative compression measure.

A target is processed in blocks of d symbols. Block i covers target
positions [i*d, (i+1)*d) and is conditioned on the k symbols immediately
before it, both taken circularly from the target itself. The cost of a block
is -log2 of the model's probability estimate; the total over all blocks is
the relative compression C(target || reference) in bits. No bitstream is
produced, only its size.

When the target length is not a multiple of d, the final block wraps
circularly to a full d symbols and its cost is scaled by (m mod d) / d, so
totals always account for exactly m symbols (and a model with no relevant
counts yields exactly m * log2 |A| bits).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import SymbolSequence
from .errors import AlphabetMismatch, EmptyTarget
from .model import XaModel, _window_codes


@dataclass(frozen=True)
class CompressionResult:
    """Outcome of compressing one target against one model.

    block_bits holds the per-block costs (the final entry already scaled for
    a partial block); query_count is the number of model lookups performed,
    ceil(m / d).
    """

    total_bits: float
    block_bits: np.ndarray
    query_count: int
    target_length: int
    alphabet_size: int

    @property
    def nrc(self) -> float:
        return self.total_bits / (self.target_length * math.log2(self.alphabet_size))


def compress_bits(target: SymbolSequence, model: XaModel) -> CompressionResult:
    """Bits needed to represent `target` using only `model`'s counts."""
    m = len(target)
    if m == 0:
        raise EmptyTarget("cannot compress an empty target")
    params = model.params
    if target.alphabet != params.alphabet:
        raise AlphabetMismatch("target alphabet differs from model alphabet")
    size = params.alphabet.size
    ext_size = params.extended_size
    k, d = params.k, params.d
    blocks = -(-m // d)
    starts = np.arange(blocks, dtype=np.int64) * d
    ctx_codes = _window_codes(target.data, size, starts, k, k)
    word_codes = _window_codes(target.data, size, starts, 0, d)
    vc, vw = model._lookup_codes(ctx_codes, word_codes)
    alpha = params.alpha
    probs = np.where(vc == 0, 1.0 / ext_size, (vw + alpha) / (vc + alpha * ext_size))
    bits = -np.log2(probs)
    rem = m % d
    if rem:
        bits[-1] *= rem / d
    total = math.fsum(bits)
    bits.setflags(write=False)
    return CompressionResult(total, bits, blocks, m, size)


def nrc(target: SymbolSequence, model: XaModel) -> float:
    """Normalized relative compression: C(x||y) / (m * log2 |A|).

    Close to 0 when the target is efficiently described by the model, close
    to 1 when the model carries no information about it.
    """
    return compress_bits(target, model).nrc


def information_profile(target: SymbolSequence, model: XaModel,
                        window: int = 1):
    """Per-block information content along the target, in bits per symbol.

    Returns (positions, values): positions are block start offsets i*d and
    values the block costs divided by d, smoothed with a centered circular
    moving average of `window` blocks. Output length equals the block count.
    """
    if window < 1:
        raise ValueError("window must be >= 1")
    result = compress_bits(target, model)
    d = model.params.d
    per_symbol = result.block_bits / d
    blocks = per_symbol.shape[0]
    positions = np.arange(blocks, dtype=np.int64) * d
    if window == 1:
        return positions, per_symbol
    # Window j covers blocks j - (window-1)//2 ... j + window//2, circularly.
    lead = (window - 1) // 2
    full_rounds, rest = divmod(window, blocks)
    csum = np.concatenate([[0.0], np.cumsum(np.concatenate([per_symbol, per_symbol]))])
    start = (np.arange(blocks) - lead) % blocks
    sums = full_rounds * per_symbol.sum() + csum[start + rest] - csum[start]
    return positions, sums / window
