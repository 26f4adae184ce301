"""Extended-alphabet finite-context models.

A model of order k and depth d maps each k-symbol context seen in a circular
reference to the d-symbol blocks that followed it, with occurrence counts.
Counting is performed symbol by symbol (one context/block pair per reference
position), so blocks overlap during learning even though compression later
steps through a target d symbols at a time.

Contexts and blocks are packed into base-|A| integer codes and kept in sorted
arrays; lookups are binary searches. This keeps the sparse table compact and
lets learning and querying run as vectorized passes.
"""

from __future__ import annotations

import io
import math
import os
from dataclasses import dataclass

import numpy as np

from .core import Alphabet, SymbolSequence
from .errors import (
    AlphabetMismatch,
    EmptyReference,
    FormatError,
    LengthMismatch,
    NoSolution,
    UnknownSymbol,
    VersionMismatch,
)

_MAX_EXTENDED = 2**31 - 1
_INT64_MAX = 2**63 - 1

_FILE_MAGIC = "xafcm"
_FILE_VERSION = "1"


def solve_alpha(alphabet_size: int, d: int, p: float = 0.9) -> float:
    """Smoothing weight alpha such that a block seen exactly once in a
    context seen exactly once is predicted with probability p**d.

    Closed form: alpha = (1 - p**d) / (p**d * |A|**d - 1). Raises NoSolution
    when p**d * |A|**d <= 1, where the defining equation has no positive
    root.
    """
    if alphabet_size < 1:
        raise ValueError("alphabet_size must be >= 1")
    if d < 1:
        raise ValueError("d must be >= 1")
    if not 0.0 < p < 1.0:
        raise ValueError("p must be strictly between 0 and 1")
    pd = p**d
    denom = pd * alphabet_size**d - 1.0
    if denom <= 0.0:
        raise NoSolution(
            f"no positive alpha for alphabet_size={alphabet_size}, d={d}, p={p}"
        )
    return (1.0 - pd) / denom


@dataclass(frozen=True)
class ModelParams:
    """Model configuration: alphabet, context order k, depth d, smoothing.

    alpha may be a positive number or the string "auto", which resolves to
    solve_alpha(|A|, d, p=0.9) at construction time; the resolved value is
    what gets stored, compared and serialized.
    """

    alphabet: Alphabet
    k: int
    d: int
    alpha: float | str = "auto"

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.d < 1:
            raise ValueError("d must be >= 1")
        size = self.alphabet.size
        if size**self.d >= _MAX_EXTENDED:
            raise ValueError(
                f"extended alphabet size {size}**{self.d} exceeds {_MAX_EXTENDED}; "
                f"lower d"
            )
        if size**self.k > _INT64_MAX:
            raise ValueError(
                f"context codes for k={self.k} over {size} symbols do not fit "
                f"64 bits; lower k"
            )
        a = self.alpha
        if isinstance(a, str):
            if a != "auto":
                raise ValueError(f"alpha must be a positive number or 'auto', got {a!r}")
            a = solve_alpha(size, self.d, 0.9)
        a = float(a)
        if not (math.isfinite(a) and a > 0.0):
            raise ValueError("alpha must be finite and > 0")
        object.__setattr__(self, "alpha", a)

    @property
    def extended_size(self) -> int:
        """Number of length-d blocks, |A|**d."""
        return self.alphabet.size**self.d


def _window_codes(data: np.ndarray, base: int, starts: np.ndarray,
                  back: int, width: int) -> np.ndarray:
    """Base-`base` codes of circular windows of `width` symbols, each window
    starting `back` positions before the corresponding entry of `starts`."""
    n = data.shape[0]
    codes = np.zeros(starts.shape[0], dtype=np.int64)
    if 0 < n and back <= n and width <= n:
        # Pad once so per-symbol gathers need no modulo.
        ext = np.concatenate([data[n - back:] if back else data[:0], data, data[:width]])
        ext = ext.astype(np.int64)
        for t in range(width):
            codes *= base
            codes += ext[starts + t]
    else:
        s64 = data.astype(np.int64)
        for t in range(width):
            codes *= base
            codes += s64[(starts - back + t) % n]
    return codes


def learn(reference: SymbolSequence, params: ModelParams) -> XaModel:
    """Count context/block pairs over every position of a circular reference."""
    n = len(reference)
    if n == 0:
        raise EmptyReference("cannot learn from an empty reference")
    if reference.alphabet != params.alphabet:
        raise AlphabetMismatch("reference alphabet differs from model alphabet")
    size = params.alphabet.size
    ext_size = params.extended_size
    if n >= _INT64_MAX // ext_size:
        raise ValueError("reference too long for this depth")
    starts = np.arange(n, dtype=np.int64)
    ctx_codes = _window_codes(reference.data, size, starts, params.k, params.k)
    word_codes = _window_codes(reference.data, size, starts, 0, params.d)
    contexts, inv = np.unique(ctx_codes, return_inverse=True)
    totals = np.bincount(inv, minlength=contexts.shape[0]).astype(np.int64)
    keys = inv.astype(np.int64) * ext_size + word_codes
    entry_keys, entry_counts = np.unique(keys, return_counts=True)
    return XaModel(params, contexts, totals, entry_keys,
                   entry_counts.astype(np.int64), n)


class XaModel:
    """Frozen sparse count table of (context -> block -> count).

    Instances come from learn(), load_model() or XaModel.empty() and are
    immutable afterwards; probability queries and stats are safe to run
    concurrently. Internally: `contexts` is the sorted array of distinct
    context codes, `totals` its per-context event counts, and entries are
    kept as sorted keys rank(context) * |A|**d + block_code with parallel
    counts.
    """

    def __init__(self, params: ModelParams, contexts: np.ndarray,
                 totals: np.ndarray, entry_keys: np.ndarray,
                 entry_counts: np.ndarray, trained_on: int):
        self.params = params
        self._contexts = contexts
        self._totals = totals
        self._entry_keys = entry_keys
        self._entry_counts = entry_counts
        self.trained_on = int(trained_on)
        for arr in (contexts, totals, entry_keys, entry_counts):
            arr.setflags(write=False)

    @classmethod
    def empty(cls, params: ModelParams) -> "XaModel":
        """A model with no observations: every prediction is uniform."""
        z = np.zeros(0, dtype=np.int64)
        return cls(params, z, z.copy(), z.copy(), z.copy(), 0)

    # -- scalar queries ----------------------------------------------------

    def _encode_fixed(self, text: str, width: int, what: str) -> int:
        if len(text) != width:
            raise LengthMismatch(f"{what} must have exactly {width} symbols, "
                                 f"got {len(text)}")
        alphabet = self.params.alphabet
        code = 0
        for ch in text:
            code = code * alphabet.size + alphabet.index(ch)
        return code

    def _find_context(self, ctx_code: int) -> int:
        """Index of ctx_code in the sorted context array, or -1."""
        i = int(np.searchsorted(self._contexts, ctx_code))
        if i < self._contexts.shape[0] and int(self._contexts[i]) == ctx_code:
            return i
        return -1

    def total(self, context: str) -> int:
        """v(c): number of events counted within this context."""
        i = self._find_context(self._encode_fixed(context, self.params.k, "context"))
        return 0 if i < 0 else int(self._totals[i])

    def count(self, context: str, word: str) -> int:
        """v(w|c): number of times block `word` followed `context`."""
        c = self._encode_fixed(context, self.params.k, "context")
        w = self._encode_fixed(word, self.params.d, "word")
        i = self._find_context(c)
        if i < 0:
            return 0
        key = i * self.params.extended_size + w
        j = int(np.searchsorted(self._entry_keys, key))
        if j < self._entry_keys.shape[0] and int(self._entry_keys[j]) == key:
            return int(self._entry_counts[j])
        return 0

    def probability(self, context: str, word: str) -> float:
        """(v(w|c) + alpha) / (v(c) + alpha * |A|**d), in (0, 1].

        For an unseen context the smoothing cancels and the estimate is
        exactly uniform, 1 / |A|**d.
        """
        c = self._encode_fixed(context, self.params.k, "context")
        w = self._encode_fixed(word, self.params.d, "word")
        ext_size = self.params.extended_size
        i = self._find_context(c)
        if i < 0:
            return 1.0 / ext_size
        vc = int(self._totals[i])
        key = i * ext_size + w
        j = int(np.searchsorted(self._entry_keys, key))
        vw = 0
        if j < self._entry_keys.shape[0] and int(self._entry_keys[j]) == key:
            vw = int(self._entry_counts[j])
        a = self.params.alpha
        return (vw + a) / (vc + a * ext_size)

    # -- bulk queries (used by compression) ---------------------------------

    def _lookup_codes(self, ctx_codes: np.ndarray, word_codes: np.ndarray):
        """Vectorized (v(c), v(w|c)) for arrays of packed codes."""
        n_ctx = self._contexts.shape[0]
        ext_size = self.params.extended_size
        if n_ctx == 0:
            zeros = np.zeros(ctx_codes.shape[0], dtype=np.int64)
            return zeros, zeros.copy()
        idx = np.searchsorted(self._contexts, ctx_codes)
        idx_c = np.minimum(idx, n_ctx - 1)
        seen = self._contexts[idx_c] == ctx_codes
        vc = np.where(seen, self._totals[idx_c], 0)
        keys = idx_c * ext_size + word_codes
        n_ent = self._entry_keys.shape[0]
        j = np.searchsorted(self._entry_keys, keys)
        j_c = np.minimum(j, n_ent - 1)
        hit = seen & (self._entry_keys[j_c] == keys)
        vw = np.where(hit, self._entry_counts[j_c], 0)
        return vc, vw

    # -- inspection ----------------------------------------------------------

    @property
    def context_count(self) -> int:
        return int(self._contexts.shape[0])

    @property
    def entry_count(self) -> int:
        return int(self._entry_keys.shape[0])

    def stats(self) -> dict:
        payload = sum(int(a.nbytes) for a in
                      (self._contexts, self._totals,
                       self._entry_keys, self._entry_counts))
        return {
            "context_count": self.context_count,
            "entry_count": self.entry_count,
            "trained_on": self.trained_on,
            "estimated_bytes": payload,
        }

    def _decode_batch(self, codes: np.ndarray, width: int) -> list[str]:
        alphabet = self.params.alphabet
        sym = np.frombuffer(alphabet.symbols.encode("ascii"), dtype=np.uint8)
        out = np.empty((codes.shape[0], width), dtype=np.uint8)
        for t in range(width):
            power = alphabet.size ** (width - 1 - t)
            out[:, t] = sym[(codes // power) % alphabet.size]
        raw = out.tobytes()
        return [raw[i : i + width].decode("ascii")
                for i in range(0, len(raw), width)]

    def _char_ranks(self) -> np.ndarray | None:
        """Symbol-index -> lexicographic rank, or None when the alphabet is
        already in ascending character order (packed order == string order)."""
        chars = np.frombuffer(self.params.alphabet.symbols.encode("ascii"),
                              dtype=np.uint8)
        if np.all(chars[:-1] < chars[1:]):
            return None
        ranks = np.empty(chars.shape[0], dtype=np.int64)
        ranks[np.argsort(chars, kind="stable")] = np.arange(chars.shape[0])
        return ranks

    def _repack(self, codes: np.ndarray, width: int, ranks: np.ndarray) -> np.ndarray:
        size = self.params.alphabet.size
        out = np.zeros_like(codes)
        for t in range(width):
            power = size ** (width - 1 - t)
            out = out * size + ranks[(codes // power) % size]
        return out

    def _emission_order(self) -> np.ndarray:
        """Entry order for serialization: context string, then block string."""
        ext_size = self.params.extended_size
        ranks = self._char_ranks()
        if ranks is None:
            return np.arange(self._entry_keys.shape[0])
        ctx_idx = self._entry_keys // ext_size
        words = self._entry_keys % ext_size
        ctx_lex = self._repack(self._contexts, self.params.k, ranks)
        lexpos = np.empty(ctx_lex.shape[0], dtype=np.int64)
        lexpos[np.argsort(ctx_lex, kind="stable")] = np.arange(ctx_lex.shape[0])
        word_lex = self._repack(words, self.params.d, ranks)
        return np.lexsort((word_lex, lexpos[ctx_idx]))

    def items(self, chunk: int = 1 << 16):
        """Yield (context, block, count) triples, contexts in lexicographic
        order and blocks sorted within each context."""
        order = self._emission_order()
        ext_size = self.params.extended_size
        ctx_strings = self._decode_batch(self._contexts, self.params.k)
        for lo in range(0, order.shape[0], chunk):
            sel = order[lo : lo + chunk]
            keys = self._entry_keys[sel]
            words = self._decode_batch(keys % ext_size, self.params.d)
            counts = self._entry_counts[sel]
            for ci, w, c in zip(keys // ext_size, words, counts):
                yield ctx_strings[ci], w, int(c)

    def to_nested_dict(self) -> dict:
        """counts as {context: {block: count}}; intended for small models."""
        nested: dict = {}
        for ctx, word, cnt in self.items():
            nested.setdefault(ctx, {})[word] = cnt
        return nested

    def totals_dict(self) -> dict:
        return dict(zip(self._decode_batch(self._contexts, self.params.k),
                        (int(t) for t in self._totals)))

    def __eq__(self, other):
        return (
            isinstance(other, XaModel)
            and self.params == other.params
            and self.trained_on == other.trained_on
            and np.array_equal(self._contexts, other._contexts)
            and np.array_equal(self._totals, other._totals)
            and np.array_equal(self._entry_keys, other._entry_keys)
            and np.array_equal(self._entry_counts, other._entry_counts)
        )

    def __repr__(self):
        p = self.params
        return (f"XaModel(k={p.k}, d={p.d}, alpha={p.alpha!r}, "
                f"|A|={p.alphabet.size}, contexts={self.context_count}, "
                f"entries={self.entry_count}, trained_on={self.trained_on})")


def model_stats(model: XaModel) -> dict:
    return model.stats()


# -- serialization -----------------------------------------------------------
#
# Text format, versioned. Header:
#   xafcm 1 <alphabet symbols> <k> <d> <alpha as decimal> <trained_on>
# then one line per (context, block) pair, tab separated:
#   <context>\t<block>\t<count>
# Contexts are sorted lexicographically and blocks sorted within each
# context, so identical models serialize byte-identically.


def save_model(model: XaModel, sink) -> None:
    close = False
    if isinstance(sink, (str, os.PathLike)):
        sink = open(sink, "wb")
        close = True
    text_mode = isinstance(sink, io.TextIOBase)
    try:
        p = model.params
        header = (f"{_FILE_MAGIC} {_FILE_VERSION} {p.alphabet.symbols} "
                  f"{p.k} {p.d} {p.alpha!r} {model.trained_on}\n")
        buf = [header]
        for ctx, word, cnt in model.items():
            buf.append(f"{ctx}\t{word}\t{cnt}\n")
            if len(buf) >= 8192:
                chunk = "".join(buf)
                sink.write(chunk if text_mode else chunk.encode("ascii"))
                buf = []
        chunk = "".join(buf)
        sink.write(chunk if text_mode else chunk.encode("ascii"))
    finally:
        if close:
            sink.close()


def load_model(source) -> XaModel:
    close = False
    if isinstance(source, (str, os.PathLike)):
        source = open(source, "rb")
        close = True
    try:
        raw = source.read()
    finally:
        if close:
            source.close()
    if isinstance(raw, bytes):
        try:
            raw = raw.decode("ascii")
        except UnicodeDecodeError as exc:
            raise FormatError(1, f"not a text model file: {exc}") from None

    lines = raw.split("\n")
    if not lines or not lines[0].strip():
        raise FormatError(1, "missing header")
    head = lines[0].split(" ")
    if len(head) != 7 or head[0] != _FILE_MAGIC:
        raise FormatError(1, "malformed header")
    if head[1] != _FILE_VERSION:
        raise VersionMismatch(f"unsupported model file version {head[1]!r}")
    try:
        alphabet = Alphabet(head[2])
        k, d = int(head[3]), int(head[4])
        alpha = float(head[5])
        trained_on = int(head[6])
        params = ModelParams(alphabet=alphabet, k=k, d=d, alpha=alpha)
    except (ValueError, NoSolution) as exc:
        raise FormatError(1, str(exc)) from None
    if trained_on < 0:
        raise FormatError(1, "trained_on must be >= 0")

    ctx_codes, word_codes, counts, line_nos = [], [], [], []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line:
            continue
        fields = line.split("\t")
        if len(fields) != 3:
            raise FormatError(lineno, "expected context<TAB>block<TAB>count")
        ctx, word, cnt_text = fields
        if len(ctx) != k:
            raise FormatError(lineno, f"context must have {k} symbols")
        if len(word) != d:
            raise FormatError(lineno, f"block must have {d} symbols")
        try:
            ctx_codes.append(_encode_str(ctx, alphabet))
            word_codes.append(_encode_str(word, alphabet))
        except UnknownSymbol as exc:
            raise FormatError(lineno, str(exc)) from None
        try:
            cnt = int(cnt_text)
        except ValueError:
            raise FormatError(lineno, f"bad count {cnt_text!r}") from None
        if cnt < 1:
            raise FormatError(lineno, "counts must be >= 1")
        counts.append(cnt)
        line_nos.append(lineno)

    ctx_arr = np.asarray(ctx_codes, dtype=np.int64)
    word_arr = np.asarray(word_codes, dtype=np.int64)
    cnt_arr = np.asarray(counts, dtype=np.int64)
    contexts, inv = np.unique(ctx_arr, return_inverse=True)
    totals = np.zeros(contexts.shape[0], dtype=np.int64)
    np.add.at(totals, inv, cnt_arr)
    keys = inv.astype(np.int64) * params.extended_size + word_arr
    order = np.argsort(keys, kind="stable")
    sorted_keys = keys[order]
    dup = np.nonzero(sorted_keys[1:] == sorted_keys[:-1])[0]
    if dup.size:
        bad = int(order[dup[0] + 1])
        raise FormatError(line_nos[bad], "duplicate (context, block) entry")
    total_events = int(cnt_arr.sum())
    if total_events != trained_on:
        raise FormatError(
            1, f"entry counts sum to {total_events} but header says {trained_on}")
    return XaModel(params, contexts, totals, sorted_keys,
                   cnt_arr[order], trained_on)


def _encode_str(text: str, alphabet: Alphabet) -> int:
    code = 0
    for ch in text:
        code = code * alphabet.size + alphabet.index(ch)
    return code
