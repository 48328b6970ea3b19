"""Achievable and converse bounds on the average transcript length.

The cardinality route is pure integer arithmetic over the recursive
auxiliary-alphabet caps, so it evaluates cheaply at any file size. The
entropy route sums ceilinged construction entropies, which only upper-bound
the best feasible per-stage entropies; every report labels it an estimate.
The converse is the largest conditional entropy of the demanded files given
a private realization.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .errors import LimitError, ValidationError
from .frl import MechanismChain
from .probability import Alphabet, JointDist

DEFAULT_STATE_LIMIT = 10_000_000


def ceil_log2(n: int) -> int:
    if n < 1:
        raise ValidationError(f"need a positive integer, got {n}")
    return (n - 1).bit_length()


def demand_names(p: JointDist, demands: Sequence[int]) -> list[str]:
    """Map 1-based file indices onto variable names (first variable is private)."""
    n_files = len(p.variables) - 1
    for d in demands:
        if not 1 <= d <= n_files:
            raise ValidationError(f"demand {d} outside 1..{n_files}")
    return [p.variables[d].name for d in demands]


def cardinality_caps(x_size: int, y_sizes: Sequence[int]) -> list[int]:
    """Recursive per-stage caps: cap_i = |X| * cap_1*..*cap_{i-1} * (|Y_i|-1) + 1."""
    if x_size < 1 or any(y < 1 for y in y_sizes):
        raise ValidationError("alphabet sizes must be >= 1")
    caps = []
    prod = x_size
    for y in y_sizes:
        cap = prod * (y - 1) + 1
        caps.append(cap)
        prod *= cap
    return caps


def upper_bound_cardinality(x_size: int, y_sizes: Sequence[int]) -> int:
    """Achievable bits via fixed-length slots at the cardinality caps."""
    caps = cardinality_caps(x_size, y_sizes)
    return sum(ceil_log2(c) for c in caps) + ceil_log2(x_size)


def upper_bound_entropy_estimate(chain: MechanismChain) -> int:
    """Achievable-bits estimate from constructed-stage entropies.

    The per-stage entropies are surrogates (>= the true minima), so this is
    an estimate of the entropy-route bound, not the bound itself. It never
    exceeds the cardinality bound.
    """
    x_size = chain.joint.variables[chain.joint.names.index(chain.private)].size
    total = ceil_log2(x_size)
    for stage in chain.stages:
        # round before ceiling so float dust cannot bump an exact integer up
        total += math.ceil(round(stage.mechanism.entropy(), 9))
    return total


def lower_bound(p: JointDist, demands: Sequence[int]) -> float:
    """Converse: max over private realizations of H(demanded files | X=x)."""
    names = demand_names(p, demands)
    x_name = p.variables[0].name
    px = p.marginalize([x_name])
    best = 0.0
    for (x,), _ in px.items():
        h = p.condition(x_name, x).entropy(names)
        best = max(best, h)
    return best


@dataclass(frozen=True)
class BoundReport:
    lower: float
    upper_cardinality: int
    upper_entropy_estimate: int  # surrogate-based; >= nothing is claimed vs true optimum
    measured: float | None = None

    def sandwich_ok(self, tol: float = 1e-9) -> bool:
        if self.measured is None:
            return self.lower <= self.upper_cardinality + tol
        return (self.lower <= self.measured + tol
                and self.measured <= self.upper_cardinality + tol)


# ---------------------------------------------------------------------------
# The Bernoulli-AND database family: X ~ Bern(p) masks i.i.d. fair bits, so
# every file is all-zero when X=0 and uniform when X=1.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Example1Params:
    p: Fraction
    n_files: int
    k_demands: int
    file_bits: int

    def __post_init__(self) -> None:
        if not 0 < self.p < 1:
            raise ValidationError(f"p must lie strictly in (0,1), got {self.p}")
        if self.n_files < 1 or self.file_bits < 1:
            raise ValidationError("need at least one file and one bit per file")
        if not 1 <= self.k_demands <= self.n_files:
            raise ValidationError("demand count must lie in 1..n_files")


def example1_build(params: Example1Params, limit: int = DEFAULT_STATE_LIMIT) -> JointDist:
    """Joint over (X, Y_1..Y_N) with Y bits = independent fair bits AND X."""
    p, n, f = params.p, params.n_files, params.file_bits
    size = 2 ** f
    cells = size ** n + 1
    if cells > limit:
        raise LimitError(f"{cells} cells exceed the limit {limit}")
    variables = [Alphabet("X", 2)] + [Alphabet(f"Y{j}", size) for j in range(1, n + 1)]
    table: dict[tuple[int, ...], Fraction] = {(0,) + (0,) * n: 1 - p}
    unit = p / Fraction(size ** n)
    for files in _product_range(size, n):
        table[(1,) + files] = table.get((1,) + files, Fraction(0)) + unit
    return JointDist(variables, table)


def _product_range(size: int, n: int):
    if n == 0:
        yield ()
        return
    for head in range(size):
        for tail in _product_range(size, n - 1):
            yield (head,) + tail


def example1_ratio(k: int, f: int) -> float:
    """Cardinality upper bound over the k*f converse, by closed formula.

    Decreases toward (k+1)/2 as the file size grows; no mechanism is built,
    so arbitrarily large f is cheap.
    """
    if k < 1 or f < 1:
        raise ValidationError("need k >= 1 and f >= 1")
    return upper_bound_cardinality(2, [2 ** f] * k) / (k * f)
