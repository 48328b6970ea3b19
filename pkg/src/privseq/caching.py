"""Coded-caching placement/delivery with a privacy wrap on the block stream.

Placement splits each file into equal subfiles indexed by p-subsets of the
user set; delivery XORs, per (p+1)-subset, the subfiles each member misses.
The resulting block stream is then fed one block at a time through the
sequential private encoder, so the shared link and the public cache carry
nothing correlated with the private variable.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from . import pipeline
from .bounds import upper_bound_cardinality
from .coding import PadKey, otp_decrypt, otp_encrypt
from .errors import LimitError, ValidationError
from .frl import MechanismChain, build_chain
from .probability import Alphabet, JointDist, ZERO

DEFAULT_STATE_LIMIT = 10_000_000


def subsets_colex(k: int, r: int) -> tuple[tuple[int, ...], ...]:
    """All r-subsets of {1..k} in colexicographic order."""
    combos = itertools.combinations(range(1, k + 1), r)
    return tuple(sorted(combos, key=lambda c: c[::-1]))


@dataclass(frozen=True)
class CacheConfig:
    """System shape: N files of F bits, K users with M files of cache each.

    Requires p = KM/N to be an integer (no memory sharing) and F divisible by
    C(K, p) so subfiles and delivery blocks have exact bit sizes.
    """

    n_files: int
    k_users: int
    cache_files: int
    file_bits: int

    def __post_init__(self) -> None:
        n, k, m, f = self.n_files, self.k_users, self.cache_files, self.file_bits
        if min(n, k, f) < 1:
            raise ValidationError("n_files, k_users and file_bits must be >= 1")
        if not 1 <= m <= n:
            raise ValidationError(f"cache size {m} outside 1..{n} files")
        if (k * m) % n != 0:
            raise ValidationError(
                f"KM/N = {k}*{m}/{n} is not an integer; memory sharing is unsupported"
            )
        if f % self.subfile_count != 0:
            raise ValidationError(
                f"file size {f} not divisible by {self.subfile_count} subfiles"
            )

    @property
    def p(self) -> int:
        return (self.k_users * self.cache_files) // self.n_files

    @property
    def subfile_count(self) -> int:
        return math.comb(self.k_users, self.p)

    @property
    def block_count(self) -> int:
        return math.comb(self.k_users, self.p + 1)

    @property
    def block_bits(self) -> int:
        return self.file_bits // self.subfile_count

    @property
    def subfile_subsets(self) -> tuple[tuple[int, ...], ...]:
        return subsets_colex(self.k_users, self.p)

    @property
    def block_subsets(self) -> tuple[tuple[int, ...], ...]:
        return subsets_colex(self.k_users, self.p + 1)


def _subfile(cfg: CacheConfig, file_value: int, position: int) -> int:
    """Chunk `position` of a file, MSB-first, each chunk block_bits wide."""
    shift = cfg.file_bits - (position + 1) * cfg.block_bits
    return (file_value >> shift) & ((1 << cfg.block_bits) - 1)


@dataclass(frozen=True)
class UserCache:
    user: int
    contents: Mapping[tuple[int, tuple[int, ...]], int]  # (file, subset) -> chunk


def placement(cfg: CacheConfig, database: Sequence[int]) -> list[UserCache]:
    """Fill each user's cache with every subfile whose subset contains it."""
    if len(database) != cfg.n_files:
        raise ValidationError(f"expected {cfg.n_files} files, got {len(database)}")
    for y in database:
        if not 0 <= y < 2 ** cfg.file_bits:
            raise ValidationError(f"file value {y} outside [0, 2^{cfg.file_bits})")
    positions = {sub: i for i, sub in enumerate(cfg.subfile_subsets)}
    caches = []
    for k in range(1, cfg.k_users + 1):
        contents = {}
        for n in range(1, cfg.n_files + 1):
            for sub in cfg.subfile_subsets:
                if k in sub:
                    contents[(n, sub)] = _subfile(cfg, database[n - 1], positions[sub])
        caches.append(UserCache(user=k, contents=contents))
    return caches


def cache_bits(cfg: CacheConfig, cache: UserCache) -> int:
    return len(cache.contents) * cfg.block_bits


@dataclass(frozen=True)
class BlockStream:
    """Delivery blocks, one per (p+1)-subset, each block_bits wide."""

    subsets: tuple[tuple[int, ...], ...]
    blocks: tuple[int, ...]
    block_bits: int


def delivery_blocks(cfg: CacheConfig, database: Sequence[int],
                    demands: Sequence[int]) -> BlockStream:
    """XOR, over each (p+1)-subset, the subfile its members miss but want."""
    demands = _user_demands(cfg, demands)
    positions = {sub: i for i, sub in enumerate(cfg.subfile_subsets)}
    blocks = []
    for gamma in cfg.block_subsets:
        acc = 0
        for j in gamma:
            rest = tuple(u for u in gamma if u != j)
            acc ^= _subfile(cfg, database[demands[j - 1] - 1], positions[rest])
        blocks.append(acc)
    return BlockStream(subsets=cfg.block_subsets, blocks=tuple(blocks),
                       block_bits=cfg.block_bits)


def _user_demands(cfg: CacheConfig, demands: Sequence[int]) -> tuple[int, ...]:
    demands = tuple(int(d) for d in demands)
    if len(demands) != cfg.k_users:
        raise ValidationError(f"need one demand per user ({cfg.k_users}), got {len(demands)}")
    for d in demands:
        if not 1 <= d <= cfg.n_files:
            raise ValidationError(f"demand {d} outside 1..{cfg.n_files}")
    return demands


def block_joint(cfg: CacheConfig, database_dist: JointDist, demands: Sequence[int],
                limit: int = DEFAULT_STATE_LIMIT) -> JointDist:
    """Exact joint of (X, delivery blocks) induced by the database joint."""
    demands = _user_demands(cfg, demands)
    if len(database_dist.variables) != cfg.n_files + 1:
        raise ValidationError("database joint must cover X plus every file")
    if len(database_dist.table) * max(1, cfg.block_count) > limit:
        raise LimitError("block-joint enumeration exceeds the state limit")
    x_alpha = database_dist.variables[0]
    b_alphas = [Alphabet(f"B{i + 1}", 2 ** cfg.block_bits) for i in range(cfg.block_count)]
    table: dict[tuple[int, ...], Fraction] = {}
    for cell, prob in database_dist.items():
        stream = delivery_blocks(cfg, cell[1:], demands)
        key = (cell[0],) + stream.blocks
        table[key] = table.get(key, ZERO) + prob
    return JointDist([x_alpha] + b_alphas, table)


@dataclass(frozen=True)
class PublicCache:
    """Append-only log of the emitted auxiliary slots; adversary-readable."""

    entries: tuple[str, ...]


@dataclass(frozen=True)
class CacheSession:
    """Everything both endpoints can precompute from public information."""

    cfg: CacheConfig
    demands: tuple[int, ...]
    blocks_dist: JointDist
    chain: MechanismChain
    mode: str


def make_cache_session(cfg: CacheConfig, database_dist: JointDist, demands: Sequence[int],
                       mode: str = "fixed", limit: int = DEFAULT_STATE_LIMIT) -> CacheSession:
    demands = _user_demands(cfg, demands)
    bj = block_joint(cfg, database_dist, demands, limit)
    targets = [a.name for a in bj.variables[1:]]
    chain = build_chain(bj, bj.variables[0].name, targets)
    return CacheSession(cfg=cfg, demands=demands, blocks_dist=bj, chain=chain, mode=mode)


def private_wrap(session: CacheSession, stream: Iterable[int], x: int, key: PadKey,
                 draws: pipeline.Draws) -> tuple[pipeline.Transcript, PublicCache]:
    """Pad the private symbol, then wrap blocks one at a time.

    `stream` is consumed lazily: the slot for block i is emitted before block
    i+1 is read, matching a one-block encoder buffer. Each emitted slot is
    appended to the public cache, which is what lets later stages condition
    on the earlier auxiliaries.
    """
    cfg = session.cfg
    pad_book, stage_books = pipeline.session_codebooks(session.chain, session.mode)
    x_size = pipeline.chain_private_size(session.chain)
    if key.modulus != x_size:
        raise ValidationError(f"pad key modulus {key.modulus} != |X| = {x_size}")
    slots = [("pad", pad_book.encode(otp_encrypt(x, key)))]
    log: list[str] = []
    prefix: tuple[int, ...] = ()
    it = iter(stream)
    for i, stage in enumerate(session.chain.stages):
        try:
            block = next(it)
        except StopIteration:
            raise ValidationError(f"block stream ended early at block {i + 1}") from None
        if not 0 <= block < 2 ** cfg.block_bits:
            raise ValidationError(f"block value {block} outside [0, 2^{cfg.block_bits})")
        cond = stage.conditional_u(x, prefix, block)
        u = draws.pick(i, cond)
        if u not in cond:
            raise ValidationError(f"draw {u} outside the slot-{i} support")
        word = stage_books[i].encode(u)
        slots.append((f"u{i + 1}", word))
        log.append(word)
        prefix += (u,)
    return pipeline.Transcript(tuple(slots)), PublicCache(tuple(log))


def decode_blocks(session: CacheSession, transcript: pipeline.Transcript,
                  key: PadKey) -> tuple[int, tuple[int, ...]]:
    """Recover (x, all delivery blocks) from a wrapped transcript."""
    pad_book, stage_books = pipeline.session_codebooks(session.chain, session.mode)
    if len(transcript.slots) != len(session.chain.stages) + 1:
        raise ValidationError("slot count does not match the session")
    xt, used = pad_book.decode_one(transcript.slots[0][1])
    if used != len(transcript.slots[0][1]):
        raise ValidationError("trailing bits in the pad slot")
    x = otp_decrypt(xt, key)
    blocks = []
    prefix: tuple[int, ...] = ()
    for i, stage in enumerate(session.chain.stages):
        bits = transcript.slots[i + 1][1]
        u, used = stage_books[i].decode_one(bits)
        if used != len(bits):
            raise ValidationError(f"trailing bits in slot {i + 1}")
        blocks.append(stage.decode(x, prefix, u))
        prefix += (u,)
    return x, tuple(blocks)


def user_decode(session: CacheSession, user: int, transcript: pipeline.Transcript,
                cache: UserCache, key: PadKey) -> int:
    """Rebuild the user's demanded file from the transcript plus its cache."""
    cfg = session.cfg
    if not 1 <= user <= cfg.k_users:
        raise ValidationError(f"user {user} outside 1..{cfg.k_users}")
    if cache.user != user:
        raise ValidationError(f"cache belongs to user {cache.user}, not {user}")
    _x, blocks = decode_blocks(session, transcript, key)
    by_subset = dict(zip(cfg.block_subsets, blocks))
    demand = session.demands[user - 1]

    chunks: dict[tuple[int, ...], int] = {}
    for omega in cfg.subfile_subsets:
        if user in omega:
            chunks[omega] = cache.contents[(demand, omega)]
        else:
            gamma = tuple(sorted(omega + (user,)))
            value = by_subset[gamma]
            for j in gamma:
                if j == user:
                    continue
                rest = tuple(u for u in gamma if u != j)
                value ^= cache.contents[(session.demands[j - 1], rest)]
            chunks[omega] = value

    out = 0
    for omega in cfg.subfile_subsets:
        out = (out << cfg.block_bits) | chunks[omega]
    return out


def adversary_view_distribution(session: CacheSession, key_size: int,
                                limit: int = DEFAULT_STATE_LIMIT) -> pipeline.TranscriptDistribution:
    """Exact joint of ((transcript, public cache), X, W) for leakage audits.

    The public cache replays the auxiliary slots verbatim, so the view symbol
    is the transcript slots concatenated with the log entries.
    """
    td = pipeline.transcript_distribution(
        session.blocks_dist, tuple(range(1, session.cfg.block_count + 1)),
        session.chain, key_size, session.mode, limit,
    )
    views = []
    for t in td.transcripts:
        log = tuple(bits for label, bits in t.slots[1:])
        views.append(pipeline.Transcript(t.slots + tuple(
            (f"cache{i + 1}", bits) for i, bits in enumerate(log)
        )))
    return pipeline.TranscriptDistribution(td.joint, tuple(views),
                                           tuple(v.total_length for v in views), td.parts)


def delivery_bound(cfg: CacheConfig, x_size: int) -> int:
    """Achievable bits for the wrapped stream: caps over the block alphabet."""
    return upper_bound_cardinality(x_size, [2 ** cfg.block_bits] * cfg.block_count)
