"""Multi-part sequential encoder/decoder and exact transcript auditing.

A session transcript is one pad slot carrying the one-time-padded private
symbol followed by one prefix-free slot per demand, each encoding the stage's
auxiliary variable. Distribution-level objects never sample: the exact joint
of (transcript, private symbol, key) is built by full enumeration, so the
zero-leakage audit is a rational product test, not a float comparison.
"""

from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Mapping, Protocol, Sequence

from . import bounds as bounds_mod
from .coding import (
    ENTROPY,
    FIXED,
    Codebook,
    PadKey,
    entropy_codebook,
    fixed_length_codebook,
    otp_decrypt,
    otp_encrypt,
    pack_slots,
    unpack_slots,
)
from .errors import LimitError, ValidationError
from .frl import MechanismChain, build_chain
from .probability import Alphabet, JointDist, ZERO

DEFAULT_STATE_LIMIT = 10_000_000


@dataclass(frozen=True)
class Transcript:
    """Delivered message: ordered (label, bitstring) slots."""

    slots: tuple[tuple[str, str], ...]

    @property
    def total_length(self) -> int:
        return sum(len(bits) for _, bits in self.slots)

    @property
    def bitstrings(self) -> tuple[str, ...]:
        return tuple(bits for _, bits in self.slots)

    def pack(self) -> bytes:
        return pack_slots(self.slots)

    @classmethod
    def unpack(cls, data: bytes) -> "Transcript":
        return cls(tuple(unpack_slots(data)))


class Draws(Protocol):
    def pick(self, slot: int, conditional: Mapping[int, Fraction]) -> int: ...


class RandomDraws:
    """Seeded coupling randomness; identical seeds give identical sessions."""

    def __init__(self, seed: int):
        self._rng = random.Random(seed)

    def pick(self, slot: int, conditional: Mapping[int, Fraction]) -> int:
        r = Fraction(self._rng.getrandbits(53), 1 << 53)
        acc = ZERO
        last = None
        for u in sorted(conditional):
            acc += conditional[u]
            last = u
            if r < acc:
                return u
        return last


class FixedDraws:
    """Forces an explicit auxiliary value per slot; used by enumeration."""

    def __init__(self, choices: Sequence[int]):
        self._choices = tuple(choices)

    def pick(self, slot: int, conditional: Mapping[int, Fraction]) -> int:
        u = self._choices[slot]
        if u not in conditional:
            raise ValidationError(f"forced draw {u} outside the slot-{slot} support")
        return u


def demand_vector(p: JointDist, demands: Sequence[int],
                  allow_empty: bool = False) -> tuple[int, ...]:
    """Validate a demand vector: distinct 1-based file indices."""
    demands = tuple(int(d) for d in demands)
    n_files = len(p.variables) - 1
    if not demands and not allow_empty:
        raise ValidationError("empty demand vector")
    if len(set(demands)) != len(demands):
        raise ValidationError(f"demands must be pairwise distinct: {demands}")
    for d in demands:
        if not 1 <= d <= n_files:
            raise ValidationError(f"demand {d} outside 1..{n_files}")
    return demands


def session_chain(p: JointDist, demands: Sequence[int],
                  search_budget: int | None = None) -> MechanismChain:
    """Build the mechanism chain for a demand vector over database joint `p`."""
    demands = demand_vector(p, demands)
    names = bounds_mod.demand_names(p, demands)
    base = p.marginalize([p.variables[0].name, *names])
    return build_chain(base, p.variables[0].name, names, search_budget=search_budget)


def chain_private_size(chain: MechanismChain) -> int:
    return chain.joint.variables[chain.joint.names.index(chain.private)].size


def session_codebooks(chain: MechanismChain, mode: str) -> tuple[Codebook, list[Codebook]]:
    """Pad-slot book plus one book per stage, derived deterministically."""
    x_size = chain_private_size(chain)
    pad = fixed_length_codebook(x_size)
    books = []
    for stage in chain.stages:
        if mode == FIXED:
            books.append(fixed_length_codebook(stage.mechanism.u_size))
        elif mode == ENTROPY:
            books.append(entropy_codebook(dict(enumerate(stage.mechanism.p_u))))
        else:
            raise ValidationError(f"unknown coding mode {mode!r}")
    return pad, books


def _check_chain_matches(p: JointDist, demands: Sequence[int], chain: MechanismChain) -> None:
    names = tuple(bounds_mod.demand_names(p, demands))
    if chain.targets != names:
        raise ValidationError(f"chain targets {chain.targets} do not match demands {names}")
    if chain.private != p.variables[0].name:
        raise ValidationError("chain private variable does not match the database joint")


def encode_session(p: JointDist, realization: Sequence[int], demands: Sequence[int],
                   key: PadKey, chain: MechanismChain, draws: Draws,
                   mode: str = FIXED,
                   books: tuple[Codebook, list[Codebook]] | None = None) -> Transcript:
    """Produce the multi-part transcript for one realized database row.

    Slot 0 is the fixed-length code of the padded private symbol; slot i
    encodes the stage-i auxiliary sampled from its exact conditional given
    (x, u_1..u_{i-1}, y at demand i). Only the current demand's file is read
    at each step. Callers looping over many realizations can pass
    precomputed `books` from session_codebooks.
    """
    demands = demand_vector(p, demands)
    _check_chain_matches(p, demands, chain)
    realization = tuple(realization)
    if p.prob(realization) == 0:
        raise ValidationError(f"realization {realization} outside the support")
    x = realization[0]
    x_size = p.variables[0].size
    if key.modulus != x_size:
        raise ValidationError(f"pad key modulus {key.modulus} != |X| = {x_size}")

    pad_book, stage_books = books or session_codebooks(chain, mode)
    slots = [("pad", pad_book.encode(otp_encrypt(x, key)))]
    prefix: tuple[int, ...] = ()
    for i, stage in enumerate(chain.stages):
        y = realization[demands[i]]
        cond = stage.conditional_u(x, prefix, y)
        u = draws.pick(i, cond)
        if u not in cond:
            raise ValidationError(f"draw {u} outside the slot-{i} support")
        slots.append((f"u{i + 1}", stage_books[i].encode(u)))
        prefix += (u,)
    return Transcript(tuple(slots))


def decode_session(transcript: Transcript, key: PadKey, demands: Sequence[int],
                   chain: MechanismChain, mode: str = FIXED,
                   books: tuple[Codebook, list[Codebook]] | None = None
                   ) -> tuple[int, tuple[int, ...]]:
    """Recover the private symbol and every demanded file from a transcript."""
    pad_book, stage_books = books or session_codebooks(chain, mode)
    if len(transcript.slots) != len(chain.stages) + 1:
        raise ValidationError(
            f"transcript has {len(transcript.slots)} slots, expected {len(chain.stages) + 1}"
        )
    pad_bits = transcript.slots[0][1]
    xt, used = pad_book.decode_one(pad_bits)
    if used != len(pad_bits):
        raise ValidationError("trailing bits in the pad slot")
    x = otp_decrypt(xt, key)

    ys = []
    prefix: tuple[int, ...] = ()
    for i, stage in enumerate(chain.stages):
        bits = transcript.slots[i + 1][1]
        u, used = stage_books[i].decode_one(bits)
        if used != len(bits):
            raise ValidationError(f"trailing bits in slot {i + 1}")
        ys.append(stage.decode(x, prefix, u))
        prefix += (u,)
    return x, tuple(ys)


@dataclass(frozen=True)
class TranscriptDistribution:
    """Exact joint of (transcript index, private symbol, key symbol)."""

    joint: JointDist  # variables C, X, W
    transcripts: tuple[Transcript, ...]
    lengths: tuple[int, ...]
    parts: tuple[tuple[int, tuple[int, ...]], ...] | None = None  # (padded x, u vector)

    @property
    def key_size(self) -> int:
        return self.joint.variables[2].size


def transcript_distribution(p: JointDist, demands: Sequence[int], chain: MechanismChain,
                            key_size: int, mode: str = FIXED,
                            limit: int = DEFAULT_STATE_LIMIT) -> TranscriptDistribution:
    """Enumerate the exact joint (C, X, W) with rational weights.

    The chain's joint already couples (x, demanded files, auxiliaries); each
    of its cells fans out over the uniform key. An empty target list is
    allowed here (a fully cached delivery wraps zero blocks).
    """
    demands = demand_vector(p, demands, allow_empty=True)
    _check_chain_matches(p, demands, chain)
    x_size = p.variables[0].size
    if key_size != x_size:
        raise ValidationError(f"the multi-part scheme needs key size |X|={x_size}, got {key_size}")
    states = len(chain.joint.table) * key_size
    if states > limit:
        raise LimitError(f"{states} weighted states exceed the limit {limit}")

    pad_book, stage_books = session_codebooks(chain, mode)
    ncols = len(chain.joint.variables)
    k = len(chain.stages)
    x_axis = chain.joint.names.index(chain.private)
    u_axes = list(range(ncols - k, ncols))

    by_key: dict[tuple[int, tuple[int, ...]], int] = {}
    transcripts: list[Transcript] = []
    lengths: list[int] = []
    parts: list[tuple[int, tuple[int, ...]]] = []
    table: dict[tuple[int, int, int], Fraction] = {}
    w_frac = Fraction(1, key_size)
    for cell, prob in chain.joint.items():
        x = cell[x_axis]
        u_vec = tuple(cell[a] for a in u_axes)
        for w in range(key_size):
            xt = (x + w) % x_size
            part = (xt, u_vec)
            idx = by_key.get(part)
            if idx is None:
                slots = [("pad", pad_book.encode(xt))]
                slots += [(f"u{i + 1}", stage_books[i].encode(u)) for i, u in enumerate(u_vec)]
                t = Transcript(tuple(slots))
                idx = len(transcripts)
                by_key[part] = idx
                transcripts.append(t)
                lengths.append(t.total_length)
                parts.append(part)
            key = (idx, x, w)
            table[key] = table.get(key, ZERO) + prob * w_frac

    c_alpha = Alphabet("C", len(transcripts))
    joint = JointDist([c_alpha, Alphabet("X", x_size), Alphabet("W", key_size)], table)
    return TranscriptDistribution(joint, tuple(transcripts), tuple(lengths), tuple(parts))


@dataclass(frozen=True)
class LeakageReport:
    exact_zero: bool
    bits: float


def leakage_audit(td: TranscriptDistribution) -> LeakageReport:
    """Rational product test of transcript-vs-private independence."""
    exact = td.joint.is_independent(["C"], ["X"])
    bits = td.joint.mutual_information(["C"], ["X"])
    return LeakageReport(exact_zero=exact, bits=bits)


@dataclass(frozen=True)
class ExpectedLength:
    per_w: tuple[float, ...]
    max_over_w: float


def expected_length(td: TranscriptDistribution) -> ExpectedLength:
    """E[len(C) | W=w] for each key value; exact fractions, reported as floats."""
    totals = [ZERO] * td.key_size
    mass = [ZERO] * td.key_size
    for (c, _x, w), p in td.joint.items():
        totals[w] += p * td.lengths[c]
        mass[w] += p
    per_w = tuple(float(t / m) if m else 0.0 for t, m in zip(totals, mass))
    return ExpectedLength(per_w=per_w, max_over_w=max(per_w))


@dataclass(frozen=True)
class Outcome:
    x: int
    files: tuple[int, ...]  # demanded files, in demand order
    w: int
    u_vec: tuple[int, ...]
    prob: Fraction
    transcript: Transcript


def enumerate_outcomes(p: JointDist, demands: Sequence[int], chain: MechanismChain,
                       key_size: int, mode: str = FIXED) -> Iterator[Outcome]:
    """Yield every (realization, coupling, key) outcome with its exact weight.

    Walks the full database table and every auxiliary choice in the support,
    encoding each through the real encoder, so downstream checks exercise the
    same code path a sampled session would.
    """
    demands = demand_vector(p, demands)
    books = session_codebooks(chain, mode)
    w_frac = Fraction(1, key_size)
    for cell, prob in p.items():
        x = cell[0]
        stack: list[tuple[tuple[int, ...], Fraction]] = [((), prob)]
        for i, stage in enumerate(chain.stages):
            nxt = []
            for prefix, q in stack:
                cond = stage.conditional_u(x, prefix, cell[demands[i]])
                for u, qu in cond.items():
                    nxt.append((prefix + (u,), q * qu))
            stack = nxt
        for u_vec, q in stack:
            for w in range(key_size):
                t = encode_session(p, cell, demands, PadKey(w, key_size), chain,
                                   FixedDraws(u_vec), mode, books=books)
                yield Outcome(x=x, files=tuple(cell[d] for d in demands), w=w,
                              u_vec=u_vec, prob=q * w_frac, transcript=t)


def plaintext_baseline(p: JointDist, demand: int) -> TranscriptDistribution:
    """Uncoded single-demand baseline: the file symbol itself is the message.

    Exists to document what the audit reports when the scheme is bypassed.
    """
    (demand,) = demand_vector(p, [demand])
    y_alpha = p.variables[demand]
    book = fixed_length_codebook(y_alpha.size)
    pair = p.marginalize([p.variables[0].name, y_alpha.name])
    transcripts = tuple(Transcript((("y", book.encode(y)),)) for y in y_alpha.symbols())
    table = {}
    for (x, y), q in pair.items():
        table[(y, x, 0)] = q
    joint = JointDist(
        [Alphabet("C", y_alpha.size), Alphabet("X", p.variables[0].size), Alphabet("W", 1)],
        table,
    )
    lengths = tuple(t.total_length for t in transcripts)
    return TranscriptDistribution(joint, transcripts, lengths, None)


@dataclass(frozen=True)
class SweepRow:
    demands: tuple[int, ...]
    expected_len: float
    per_w: tuple[float, ...]
    lower: float
    upper_cardinality: int
    upper_entropy_estimate: int
    leakage_exact_zero: bool
    leakage_bits: float
    u_sizes: tuple[int, ...]


@dataclass(frozen=True)
class SweepResult:
    rows: tuple[SweepRow, ...]
    worst: SweepRow  # maximizes expected length


def worst_case_sweep(p: JointDist, k: int, mode: str = FIXED,
                     limit: int = DEFAULT_STATE_LIMIT) -> SweepResult:
    """Evaluate every length-k demand vector and report the maximizer."""
    n_files = len(p.variables) - 1
    if not 1 <= k <= n_files:
        raise ValidationError(f"k must be in 1..{n_files}")
    count = math.perm(n_files, k)
    if count > limit:
        raise LimitError(f"{count} demand vectors exceed the limit {limit}")
    x_size = p.variables[0].size
    rows = []
    for demands in itertools.permutations(range(1, n_files + 1), k):
        chain = session_chain(p, demands)
        td = transcript_distribution(p, demands, chain, x_size, mode, limit)
        el = expected_length(td)
        leak = leakage_audit(td)
        y_sizes = [p.variables[d].size for d in demands]
        rows.append(SweepRow(
            demands=demands,
            expected_len=el.max_over_w,
            per_w=el.per_w,
            lower=bounds_mod.lower_bound(p, demands),
            upper_cardinality=bounds_mod.upper_bound_cardinality(x_size, y_sizes),
            upper_entropy_estimate=bounds_mod.upper_bound_entropy_estimate(chain),
            leakage_exact_zero=leak.exact_zero,
            leakage_bits=leak.bits,
            u_sizes=chain.u_sizes(),
        ))
    worst = max(rows, key=lambda r: r.expected_len)
    return SweepResult(rows=tuple(rows), worst=worst)
