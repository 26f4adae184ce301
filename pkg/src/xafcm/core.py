"""Alphabets, validated symbol sequences and sequence ingestion.

Symbols are single ASCII characters at the ingestion boundary; internally a
sequence is a dense array of symbol indices so that genome-sized inputs stay
compact and scans stay cache friendly. All indexing into a sequence is
circular: position i resolves to i mod n.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .errors import EmptyInput, UnknownSymbol

# Sentinels used in the 256-entry byte translation tables.
_UNKNOWN = 0xFF
_WS = 0xFE

_WHITESPACE = b" \t\n\r\x0b\x0c"


class Alphabet:
    """Ordered set of distinct single-character symbols.

    The position of a symbol in the ordering is its index; everything
    downstream works on indices. At least two symbols are required (a
    one-symbol alphabet carries zero bits per symbol).
    """

    def __init__(self, symbols):
        syms = list(symbols)
        if len(syms) < 2:
            raise ValueError("alphabet needs at least 2 symbols")
        if len(syms) > 256:
            raise ValueError("alphabets larger than 256 symbols are not supported")
        if len(set(syms)) != len(syms):
            raise ValueError("alphabet symbols must be distinct")
        for s in syms:
            if not isinstance(s, str) or len(s) != 1:
                raise ValueError(f"alphabet symbols must be single characters, got {s!r}")
            if ord(s) > 127 or s.isspace():
                raise ValueError(f"alphabet symbols must be non-whitespace ASCII, got {s!r}")
        self.symbols = "".join(syms)
        self.size = len(syms)
        self._index = {s: i for i, s in enumerate(syms)}

        # Byte -> index tables for bulk parsing.
        lut = np.full(256, _UNKNOWN, dtype=np.uint8)
        for b in _WHITESPACE:
            lut[b] = _WS
        for i, s in enumerate(syms):
            lut[ord(s)] = i
        self._lut = lut
        # FASTA bodies are uppercased before lookup, so route every byte
        # through its uppercase form.
        fasta = lut.copy()
        for c in range(ord("a"), ord("z") + 1):
            fasta[c] = lut[c - 32]
        self._lut_fasta = fasta
        lut.setflags(write=False)
        fasta.setflags(write=False)

    def index(self, symbol: str) -> int:
        try:
            return self._index[symbol]
        except KeyError:
            raise UnknownSymbol(0, symbol) from None

    def symbol(self, index: int) -> str:
        return self.symbols[index]

    def encode(self, text: str) -> np.ndarray:
        """Strict symbol-by-symbol encoding (no whitespace skipping)."""
        arr = np.frombuffer(text.encode("ascii", errors="replace"), dtype=np.uint8)
        out = self._lut[arr]
        bad = out >= _WS
        if bad.any():
            pos = int(np.argmax(bad))
            raise UnknownSymbol(pos, text[pos])
        return out

    def decode(self, indices) -> str:
        return "".join(self.symbols[i] for i in indices)

    def __len__(self):
        return self.size

    def __contains__(self, symbol):
        return symbol in self._index

    def __eq__(self, other):
        return isinstance(other, Alphabet) and self.symbols == other.symbols

    def __hash__(self):
        return hash(self.symbols)

    def __repr__(self):
        return f"Alphabet({self.symbols!r})"


class SymbolSequence:
    """Immutable sequence of symbol indices over an alphabet.

    Integer indexing is circular and therefore defined for any integer
    position (including negatives) as long as the sequence is non-empty.
    """

    def __init__(self, alphabet: Alphabet, indices):
        arr = np.asarray(indices, dtype=np.uint8).copy()
        if arr.ndim != 1:
            raise ValueError("indices must be one-dimensional")
        if arr.size and int(arr.max()) >= alphabet.size:
            raise ValueError("symbol index out of range for alphabet")
        arr.setflags(write=False)
        self.alphabet = alphabet
        self._data = arr

    @classmethod
    def from_text(cls, alphabet: Alphabet, text: str) -> "SymbolSequence":
        return cls(alphabet, alphabet.encode(text))

    @property
    def data(self) -> np.ndarray:
        return self._data

    def __len__(self):
        return self._data.shape[0]

    def __getitem__(self, i: int) -> int:
        n = self._data.shape[0]
        if n == 0:
            raise EmptyInput("circular access on an empty sequence")
        return int(self._data[i % n])

    def __iter__(self):
        return iter(self._data.tolist())

    def text(self) -> str:
        return self.alphabet.decode(self._data)

    def rotated(self, shift: int) -> "SymbolSequence":
        return SymbolSequence(self.alphabet, np.roll(self._data, -shift))

    def __eq__(self, other):
        return (
            isinstance(other, SymbolSequence)
            and self.alphabet == other.alphabet
            and np.array_equal(self._data, other._data)
        )

    def __repr__(self):
        head = self.text() if len(self) <= 24 else self.text()[:24] + "..."
        return f"SymbolSequence({head!r}, n={len(self)})"


class FastaParse(NamedTuple):
    sequence: SymbolSequence
    dropped: int


def _as_bytes(text) -> bytes:
    if isinstance(text, bytes):
        return text
    if isinstance(text, str):
        return text.encode("ascii", errors="replace")
    return bytes(text)


def parse_raw(text, alphabet: Alphabet) -> SymbolSequence:
    """Parse raw symbol text. Whitespace is ignored; anything else must
    belong to the alphabet."""
    data = _as_bytes(text)
    arr = np.frombuffer(data, dtype=np.uint8)
    mapped = alphabet._lut[arr]
    bad = mapped == _UNKNOWN
    if bad.any():
        pos = int(np.argmax(bad))
        raise UnknownSymbol(pos, chr(data[pos]))
    out = mapped[mapped != _WS]
    if out.size == 0:
        raise EmptyInput("no symbols in input")
    return SymbolSequence(alphabet, out)


def parse_fasta(text, alphabet: Alphabet, policy: str = "reject") -> FastaParse:
    """Parse FASTA input (or plain sequence text) into a single sequence.

    Header lines (leading '>') are skipped and record bodies are
    concatenated in order. Bodies are uppercased before alphabet lookup.
    With policy="drop", symbols outside the alphabet are removed and
    counted; with policy="reject" the first one raises UnknownSymbol with
    its byte offset in the input.
    """
    if policy not in ("reject", "drop"):
        raise ValueError(f"policy must be 'reject' or 'drop', got {policy!r}")
    data = _as_bytes(text)
    lut = alphabet._lut_fasta
    chunks = []
    dropped = 0
    offset = 0
    for line in data.split(b"\n"):
        if line.startswith(b">"):
            offset += len(line) + 1
            continue
        arr = np.frombuffer(line, dtype=np.uint8)
        mapped = lut[arr]
        bad = mapped == _UNKNOWN
        if bad.any():
            if policy == "reject":
                pos = int(np.argmax(bad))
                raise UnknownSymbol(offset + pos, chr(line[pos]))
            dropped += int(bad.sum())
        keep = mapped < _WS
        if keep.any():
            chunks.append(mapped[keep])
        offset += len(line) + 1
    if not chunks:
        raise EmptyInput("no symbols in input")
    return FastaParse(SymbolSequence(alphabet, np.concatenate(chunks)), dropped)


def circular_window(seq: SymbolSequence, start: int, length: int) -> SymbolSequence:
    """Symbols seq[start], ..., seq[start+length-1], all indices mod n."""
    n = len(seq)
    if n == 0:
        raise EmptyInput("circular access on an empty sequence")
    if length < 0:
        raise ValueError("window length must be >= 0")
    idx = (start + np.arange(length, dtype=np.int64)) % n
    return SymbolSequence(seq.alphabet, seq.data[idx])


def concat_sequences(seqs) -> SymbolSequence:
    seqs = list(seqs)
    if not seqs:
        raise EmptyInput("nothing to concatenate")
    alphabet = seqs[0].alphabet
    for s in seqs[1:]:
        if s.alphabet != alphabet:
            raise ValueError("cannot concatenate sequences over different alphabets")
    return SymbolSequence(alphabet, np.concatenate([s.data for s in seqs]))


def read_sequence(path, alphabet: Alphabet, kind: str = "auto",
                  policy: str = "reject") -> FastaParse:
    """Load a sequence file. kind is 'raw', 'fasta' or 'auto' (sniff the
    leading '>')."""
    with open(path, "rb") as fh:
        data = fh.read()
    if kind == "auto":
        kind = "fasta" if data.lstrip()[:1] == b">" else "raw"
    if kind == "fasta":
        return parse_fasta(data, alphabet, policy)
    if kind == "raw":
        return FastaParse(parse_raw(data, alphabet), 0)
    raise ValueError(f"unknown input kind {kind!r}")
