"""One-time-pad over a finite alphabet and prefix-free binary codebooks.

Bitstrings are plain '0'/'1' strings so equality is bit-exact and transcripts
are directly printable. Packed binary output uses big-endian bit order within
bytes with the final partial byte zero-padded; slot bit-lengths travel in a
header so the padding is unambiguous.
"""

from __future__ import annotations

import heapq
import struct
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Mapping, Sequence

from .errors import ValidationError

FIXED = "fixed"
ENTROPY = "entropy"


@dataclass(frozen=True)
class PadKey:
    """A shared secret symbol drawn uniformly from {0..modulus-1}."""

    value: int
    modulus: int

    def __post_init__(self) -> None:
        if self.modulus < 1:
            raise ValidationError(f"modulus must be >= 1, got {self.modulus}")
        if not 0 <= self.value < self.modulus:
            raise ValidationError(f"key value {self.value} outside [0, {self.modulus})")


def otp_encrypt(x: int, key: PadKey) -> int:
    """(x + key) mod m: uniform and independent of x for a uniform key."""
    if not 0 <= x < key.modulus:
        raise ValidationError(f"symbol {x} outside [0, {key.modulus})")
    return (x + key.value) % key.modulus


def otp_decrypt(xt: int, key: PadKey) -> int:
    if not 0 <= xt < key.modulus:
        raise ValidationError(f"symbol {xt} outside [0, {key.modulus})")
    return (xt - key.value) % key.modulus


@dataclass(frozen=True)
class Codebook:
    """Prefix-free binary code for one finite alphabet.

    `words` maps symbol -> bitstring; symbols absent from the map cannot be
    encoded (zero-probability symbols of an entropy code). A one-symbol
    alphabet gets the empty codeword.
    """

    words: Mapping[int, str]
    mode: str

    def __post_init__(self) -> None:
        for s, w in self.words.items():
            if set(w) - {"0", "1"}:
                raise ValidationError(f"word for symbol {s} is not binary: {w!r}")
        if len(set(self.words.values())) != len(self.words):
            raise ValidationError("codewords must be distinct")
        if not verify_prefix_free(self):
            raise ValidationError("codebook is not prefix-free")

    @cached_property
    def _reverse(self) -> dict[str, int]:
        return {w: s for s, w in self.words.items()}

    def encode(self, symbol: int) -> str:
        if symbol not in self.words:
            raise ValidationError(f"symbol {symbol} has no codeword")
        return self.words[symbol]

    def decode_one(self, bits: str, pos: int = 0) -> tuple[int, int]:
        """Read one codeword starting at `pos`; returns (symbol, new pos)."""
        if len(self.words) == 1:
            (sym,) = self.words
            return sym, pos + len(self.words[sym])
        rev = self._reverse
        end = pos
        while end <= len(bits):
            cand = bits[pos:end]
            if cand in rev:
                return rev[cand], end
            end += 1
        raise ValidationError(f"undecodable bitstring at offset {pos}: {bits[pos:]!r}")

    def decode_all(self, bits: str) -> list[int]:
        out = []
        pos = 0
        if len(self.words) == 1 and next(iter(self.words.values())) == "":
            raise ValidationError("cannot stream-decode a zero-bit codebook")
        while pos < len(bits):
            sym, pos = self.decode_one(bits, pos)
            out.append(sym)
        return out

    def expected_length(self, dist: Mapping[int, Fraction]) -> Fraction:
        total = Fraction(0)
        for s, p in dist.items():
            if p > 0:
                total += p * len(self.encode(s))
        return total

    def kraft_sum(self) -> Fraction:
        return sum((Fraction(1, 2 ** len(w)) for w in self.words.values()), Fraction(0))


def verify_prefix_free(codebook: Codebook) -> bool:
    """True iff no codeword is a proper prefix of another."""
    words = sorted(codebook.words.values())
    for a, b in zip(words, words[1:]):
        if b.startswith(a):
            return False
    return True


def fixed_length_codebook(size: int) -> Codebook:
    """ceil(log2 size)-bit words for symbols 0..size-1; empty word at size 1."""
    if size < 1:
        raise ValidationError(f"alphabet size must be >= 1, got {size}")
    width = (size - 1).bit_length()
    return Codebook({s: format(s, f"0{width}b") if width else "" for s in range(size)}, FIXED)


def entropy_codebook(dist: Mapping[int, Fraction] | Sequence[Fraction]) -> Codebook:
    """Canonical Huffman code over the positive support of `dist`.

    Ties break by ascending symbol index, then codeword lengths are laid out
    canonically, so identical inputs always yield identical books. Expected
    length is within [H, H+1) of the design distribution.
    """
    if not isinstance(dist, Mapping):
        dist = dict(enumerate(dist))
    support = sorted(s for s, p in dist.items() if p > 0)
    if not support:
        raise ValidationError("distribution has empty support")
    if any(dist[s] < 0 for s in dist):
        raise ValidationError("negative probability")
    if len(support) == 1:
        return Codebook({support[0]: ""}, ENTROPY)

    heap: list[tuple[Fraction, int, list[int]]] = []
    for tie, s in enumerate(support):
        heap.append((Fraction(dist[s]), tie, [s]))
    heapq.heapify(heap)
    tie = len(support)
    depth = {s: 0 for s in support}
    while len(heap) > 1:
        pa, _, ga = heapq.heappop(heap)
        pb, _, gb = heapq.heappop(heap)
        for s in ga + gb:
            depth[s] += 1
        heapq.heappush(heap, (pa + pb, tie, ga + gb))
        tie += 1

    code = 0
    prev = None
    words: dict[int, str] = {}
    for length, s in sorted((depth[s], s) for s in support):
        if prev is not None:
            code = (code + 1) << (length - prev)
        words[s] = format(code, f"0{length}b")
        prev = length
    return Codebook(words, ENTROPY)


# ---------------------------------------------------------------------------
# Packed transcript file format: magic, slot count, per-slot label and bit
# length, then one continuous big-endian bit stream zero-padded to a byte.
# ---------------------------------------------------------------------------

_MAGIC = b"PSQ1"


def pack_slots(slots: Sequence[tuple[str, str]]) -> bytes:
    head = bytearray(_MAGIC)
    head += struct.pack(">H", len(slots))
    stream = []
    for label, bits in slots:
        raw = label.encode("ascii")
        if len(raw) > 255:
            raise ValidationError("slot label too long")
        head += struct.pack(">B", len(raw)) + raw + struct.pack(">I", len(bits))
        stream.append(bits)
    allbits = "".join(stream)
    body = bytearray()
    for i in range(0, len(allbits), 8):
        chunk = allbits[i:i + 8].ljust(8, "0")
        body.append(int(chunk, 2))
    return bytes(head) + bytes(body)


def unpack_slots(data: bytes) -> list[tuple[str, str]]:
    if data[:4] != _MAGIC:
        raise ValidationError("not a packed transcript (bad magic)")
    pos = 4
    (count,) = struct.unpack_from(">H", data, pos)
    pos += 2
    meta = []
    for _ in range(count):
        (llen,) = struct.unpack_from(">B", data, pos)
        pos += 1
        label = data[pos:pos + llen].decode("ascii")
        pos += llen
        (blen,) = struct.unpack_from(">I", data, pos)
        pos += 4
        meta.append((label, blen))
    total = sum(b for _, b in meta)
    body = data[pos:]
    if len(body) != (total + 7) // 8:
        raise ValidationError("packed payload length disagrees with the header")
    allbits = "".join(format(byte, "08b") for byte in body)[:total]
    out = []
    at = 0
    for label, blen in meta:
        out.append((label, allbits[at:at + blen]))
        at += blen
    return out
