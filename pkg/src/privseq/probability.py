"""Exact finite probability distributions with rational arithmetic.

Probabilities are `fractions.Fraction` throughout, so independence and
normalization checks are exact equalities, never float comparisons.
Entropy-style functionals are the only place floats appear, and they are
always in bits (log base 2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, Mapping, Sequence

from .errors import ValidationError

ZERO = Fraction(0)
ONE = Fraction(1)


@dataclass(frozen=True)
class Alphabet:
    """A named finite alphabet; symbols are the integers 0..size-1."""

    name: str
    size: int

    def __post_init__(self) -> None:
        if not self.name:
            raise ValidationError("alphabet needs a nonempty name")
        if self.size < 1:
            raise ValidationError(f"alphabet {self.name!r}: size must be >= 1, got {self.size}")

    def symbols(self) -> range:
        return range(self.size)


def _log2(f: Fraction) -> float:
    # log2 of a Fraction without converting tiny values through a single float
    return math.log2(f.numerator) - math.log2(f.denominator)


class JointDist:
    """Exact joint distribution over an ordered tuple of alphabets.

    The table keeps positive entries only (zero cells are implicit) and is
    required to sum to exactly 1. Instances are immutable; every operation
    returns a new distribution.
    """

    __slots__ = ("variables", "table")

    def __init__(self, variables: Sequence[Alphabet], table: Mapping[tuple[int, ...], Fraction]):
        variables = tuple(variables)
        names = [v.name for v in variables]
        if len(set(names)) != len(names):
            raise ValidationError(f"duplicate variable names: {names}")
        if not variables:
            raise ValidationError("a distribution needs at least one variable")
        clean: dict[tuple[int, ...], Fraction] = {}
        total = ZERO
        for cell, p in table.items():
            cell = tuple(cell)
            if len(cell) != len(variables):
                raise ValidationError(f"cell {cell} does not index every variable")
            for s, var in zip(cell, variables):
                if not 0 <= s < var.size:
                    raise ValidationError(f"symbol {s} out of range for {var.name!r} (size {var.size})")
            p = Fraction(p)
            if p < 0:
                raise ValidationError(f"negative probability {p} at {cell}")
            total += p
            if p > 0:
                if cell in clean:
                    raise ValidationError(f"duplicate cell {cell}")
                clean[cell] = p
        if total != 1:
            raise ValidationError(f"probabilities sum to {total}, expected exactly 1")
        self.variables = variables
        self.table = {cell: clean[cell] for cell in sorted(clean)}

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(v.name for v in self.variables)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, JointDist):
            return NotImplemented
        return self.variables == other.variables and self.table == other.table

    __hash__ = None  # mutable-looking container semantics; not hashable

    def __repr__(self) -> str:
        vs = ",".join(f"{v.name}:{v.size}" for v in self.variables)
        return f"JointDist({vs}; {len(self.table)} cells)"

    def _axes(self, names: Iterable[str]) -> tuple[int, ...]:
        lookup = {v.name: i for i, v in enumerate(self.variables)}
        axes = []
        for n in names:
            if n not in lookup:
                raise ValidationError(f"unknown variable {n!r}; have {list(lookup)}")
            axes.append(lookup[n])
        if len(set(axes)) != len(axes):
            raise ValidationError(f"repeated variable in {list(names)}")
        return tuple(axes)

    def prob(self, cell: Sequence[int]) -> Fraction:
        return self.table.get(tuple(cell), ZERO)

    def items(self) -> Iterator[tuple[tuple[int, ...], Fraction]]:
        return iter(self.table.items())

    def marginalize(self, keep: Sequence[str]) -> "JointDist":
        """Sum out everything but `keep`; result variables follow `keep` order."""
        axes = self._axes(keep)
        if not axes:
            raise ValidationError("keep at least one variable")
        out: dict[tuple[int, ...], Fraction] = {}
        for cell, p in self.table.items():
            key = tuple(cell[a] for a in axes)
            out[key] = out.get(key, ZERO) + p
        return JointDist([self.variables[a] for a in axes], out)

    def condition(self, name: str, symbol: int) -> "JointDist":
        """Exact conditional given `name == symbol`; the variable is dropped."""
        (axis,) = self._axes([name])
        if len(self.variables) == 1:
            raise ValidationError("cannot condition away the only variable")
        mass = ZERO
        rows: dict[tuple[int, ...], Fraction] = {}
        for cell, p in self.table.items():
            if cell[axis] == symbol:
                mass += p
                rows[cell[:axis] + cell[axis + 1:]] = p
        if mass == 0:
            raise ValidationError(f"conditioning on zero-probability event {name}={symbol}")
        rest = self.variables[:axis] + self.variables[axis + 1:]
        return JointDist(rest, {c: p / mass for c, p in rows.items()})

    def entropy(self, of: Sequence[str] | None = None) -> float:
        """Shannon entropy in bits of the (marginal) distribution."""
        d = self if of is None else self.marginalize(of)
        return -sum(float(p) * _log2(p) for p in d.table.values())

    def conditional_entropy(self, target: Sequence[str], given: Sequence[str]) -> float:
        """H(target | given) in bits; `given` may be empty."""
        target = list(target)
        given = list(given)
        if set(target) & set(given):
            raise ValidationError("target and given must be disjoint")
        if not given:
            return self.entropy(target)
        marg = self.marginalize(given + target)
        ng = len(given)
        by_g: dict[tuple[int, ...], Fraction] = {}
        for cell, p in marg.table.items():
            g = cell[:ng]
            by_g[g] = by_g.get(g, ZERO) + p
        h = 0.0
        for cell, p in marg.table.items():
            pg = by_g[cell[:ng]]
            h += float(p) * (_log2(pg) - _log2(p))
        return max(0.0, h)

    def mutual_information(self, a: Sequence[str], b: Sequence[str]) -> float:
        """I(a; b) in bits, clamped at 0 against float dust."""
        a = list(a)
        b = list(b)
        if set(a) & set(b):
            raise ValidationError("variable sets must be disjoint")
        v = self.entropy(a) + self.entropy(b) - self.entropy(a + b)
        return max(0.0, v)

    def is_independent(self, a: Sequence[str], b: Sequence[str]) -> bool:
        """Exact rational test of P(a,b) == P(a)P(b) on every cell.

        An empty set on either side is vacuously independent.
        """
        a = list(a)
        b = list(b)
        if set(a) & set(b):
            raise ValidationError("variable sets must be disjoint")
        if not a or not b:
            return True
        joint = self.marginalize(a + b)
        pa = joint.marginalize(a)
        pb = joint.marginalize(b)
        for ca, qa in pa.table.items():
            for cb, qb in pb.table.items():
                if joint.prob(ca + cb) != qa * qb:
                    return False
        return True

    def product_extend(self, fresh: Alphabet, marginal: Sequence[Fraction]) -> "JointDist":
        """Append a new variable exactly independent of all existing ones."""
        if fresh.name in self.names:
            raise ValidationError(f"variable {fresh.name!r} already present")
        marginal = [Fraction(q) for q in marginal]
        if len(marginal) != fresh.size:
            raise ValidationError(f"marginal needs {fresh.size} entries, got {len(marginal)}")
        if any(q < 0 for q in marginal) or sum(marginal) != 1:
            raise ValidationError("marginal must be nonnegative and sum to exactly 1")
        out = {}
        for cell, p in self.table.items():
            for s, q in enumerate(marginal):
                if q > 0:
                    out[cell + (s,)] = p * q
        return JointDist(self.variables + (fresh,), out)


def uniform(alphabet: Alphabet) -> JointDist:
    q = Fraction(1, alphabet.size)
    return JointDist([alphabet], {(s,): q for s in alphabet.symbols()})


def point_mass(alphabet: Alphabet, symbol: int) -> JointDist:
    return JointDist([alphabet], {(symbol,): ONE})


# ---------------------------------------------------------------------------
# Distribution-spec text format
#
#   # comment
#   var X 2
#   var Y1 2
#   p 0 0 3/4
#   p 1 1 1/4
#
# One `var` line per variable, in order; one `p` line per positive cell with
# the probability as an integer or num/den pair. Omitted cells are zero and
# the listed entries must sum to exactly 1.
# ---------------------------------------------------------------------------


def parse_dist(text: str) -> JointDist:
    variables: list[Alphabet] = []
    table: dict[tuple[int, ...], Fraction] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        kind = parts[0]
        if kind == "var":
            if table:
                raise ValidationError(f"line {lineno}: var lines must precede p lines")
            if len(parts) != 3:
                raise ValidationError(f"line {lineno}: expected 'var NAME SIZE'")
            try:
                size = int(parts[2])
            except ValueError:
                raise ValidationError(f"line {lineno}: bad size {parts[2]!r}") from None
            variables.append(Alphabet(parts[1], size))
        elif kind == "p":
            if not variables:
                raise ValidationError(f"line {lineno}: p line before any var line")
            if len(parts) != len(variables) + 2:
                raise ValidationError(
                    f"line {lineno}: expected {len(variables)} symbols and one probability"
                )
            try:
                cell = tuple(int(s) for s in parts[1:-1])
            except ValueError:
                raise ValidationError(f"line {lineno}: bad symbol in {parts[1:-1]}") from None
            try:
                prob = Fraction(parts[-1])
            except (ValueError, ZeroDivisionError):
                raise ValidationError(f"line {lineno}: bad probability {parts[-1]!r}") from None
            if cell in table:
                raise ValidationError(f"line {lineno}: duplicate cell {cell}")
            table[cell] = prob
        else:
            raise ValidationError(f"line {lineno}: unknown directive {kind!r}")
    if not variables:
        raise ValidationError("no variables declared")
    return JointDist(variables, table)


def load_dist(path: str) -> JointDist:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_dist(fh.read())


def format_dist(d: JointDist) -> str:
    lines = [f"var {v.name} {v.size}" for v in d.variables]
    lines += [f"p {' '.join(str(s) for s in cell)} {p}" for cell, p in d.items()]
    return "\n".join(lines) + "\n"
