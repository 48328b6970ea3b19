"""Constructive functional representation mechanisms.

Given a pair (X, Y), lay the conditional P(Y|X=x) of every x out as a
partition of [0,1) into rational-length segments, take the common refinement
of all the partitions, and let U be the refinement atom that a uniform point
lands in. By construction U is exactly independent of X, Y is a deterministic
function of (U, X), and the number of atoms is at most |X|(|Y|-1)+1.

The same construction extends sequentially: to attach a target Y_next to an
existing collection U_1..U_k, treat the compound (X, U_1..U_k) as the private
variable and run the pair construction again. Independence of the whole
prefix from X is preserved exactly and is re-verified on every extension.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

from .errors import InvariantError, LimitError, ValidationError
from .probability import Alphabet, JointDist, ZERO, ONE, _log2

# Per-x permutation of the positive-support y symbols, fixing how segments
# are laid on [0,1). Guarantees hold for any ordering; H(U) does not.
OrderingPolicy = Mapping[int, Sequence[int]]


@dataclass(frozen=True)
class Segment:
    start: Fraction
    end: Fraction
    label: int  # y symbol carried by this stretch of [0,1)

    @property
    def length(self) -> Fraction:
        return self.end - self.start


@dataclass(frozen=True)
class IntervalPartition:
    """Partition of [0,1) for one x: segment lengths are P(Y=y|X=x)."""

    owner: int
    segments: tuple[Segment, ...]

    @property
    def cuts(self) -> tuple[Fraction, ...]:
        return tuple(s.end for s in self.segments[:-1])

    def label_at(self, point: Fraction) -> int:
        for s in self.segments:
            if s.start <= point < s.end:
                return s.label
        raise ValidationError(f"point {point} outside [0,1)")


@dataclass(frozen=True)
class FrlMechanism:
    """The constructed auxiliary variable U for one (X, Y) pair.

    atoms   -- common-refinement intervals [a, b) covering [0,1)
    p_u     -- atom lengths; exactly the marginal of U
    g       -- (atom index, x) -> y on the positive support
    joint   -- exact JointDist over (U, X, Y)
    """

    x_alphabet: Alphabet
    y_alphabet: Alphabet
    u_alphabet: Alphabet
    atoms: tuple[tuple[Fraction, Fraction], ...]
    p_u: tuple[Fraction, ...]
    g: Mapping[tuple[int, int], int]
    partitions: Mapping[int, IntervalPartition]
    dropped_x: tuple[int, ...]
    joint: JointDist

    @property
    def u_size(self) -> int:
        return len(self.atoms)

    def entropy(self) -> float:
        """H(U) in bits; an upper-bound surrogate for the best feasible U."""
        return -sum(float(p) * _log2(p) for p in self.p_u if p > 0)

    def apply(self, u: int, x: int) -> int:
        key = (u, x)
        if key not in self.g:
            raise ValidationError(f"(u={u}, x={x}) outside the positive support")
        return self.g[key]

    def conditional_u(self, x: int, y: int) -> dict[int, Fraction]:
        """Exact P(U=u | X=x, Y=y): atom length over segment length."""
        part = self.partitions.get(x)
        if part is None:
            raise ValidationError(f"x={x} has zero mass (dropped)")
        seg = next((s for s in part.segments if s.label == y), None)
        if seg is None:
            raise ValidationError(f"(x={x}, y={y}) outside the positive support")
        out = {}
        for u, (a, b) in enumerate(self.atoms):
            if seg.start <= a and b <= seg.end:
                out[u] = (b - a) / seg.length
        return out


def canonical_ordering(pxy: JointDist) -> dict[int, tuple[int, ...]]:
    """Default policy: ascending y index per x, positive-support only."""
    supports: dict[int, list[int]] = {}
    for (x, y), _ in pxy.items():
        supports.setdefault(x, []).append(y)
    return {x: tuple(sorted(ys)) for x, ys in supports.items()}


def frl_construct(pxy: JointDist, policy: OrderingPolicy | None = None,
                  u_name: str = "U") -> FrlMechanism:
    """Build the interval mechanism for a pair distribution (X, Y).

    Zero-mass x symbols are dropped (recorded in `dropped_x`); zero-mass
    (x, y) pairs produce no segment. All invariants are verified exactly
    before returning.
    """
    if len(pxy.variables) != 2:
        raise ValidationError(f"need a pair distribution, got variables {pxy.names}")
    x_alpha, y_alpha = pxy.variables

    px: dict[int, Fraction] = {}
    for (x, y), p in pxy.items():
        px[x] = px.get(x, ZERO) + p
    dropped = tuple(x for x in x_alpha.symbols() if x not in px)

    if policy is None:
        policy = canonical_ordering(pxy)

    partitions: dict[int, IntervalPartition] = {}
    cutset: set[Fraction] = set()
    for x in sorted(px):
        support = {y for (xx, y) in pxy.table if xx == x}
        order = tuple(policy.get(x, ()))
        if sorted(order) != sorted(support):
            raise ValidationError(
                f"policy for x={x} must permute the positive-support y symbols {sorted(support)}"
            )
        segs = []
        pos = ZERO
        for y in order:
            w = pxy.prob((x, y)) / px[x]
            segs.append(Segment(pos, pos + w, y))
            pos += w
        if pos != 1:
            raise InvariantError(f"segments for x={x} cover {pos}, expected 1")
        partitions[x] = IntervalPartition(x, tuple(segs))
        cutset.update(s.end for s in segs[:-1])

    bounds = [ZERO] + sorted(cutset) + [ONE]
    atoms = tuple((bounds[i], bounds[i + 1]) for i in range(len(bounds) - 1))
    p_u = tuple(b - a for a, b in atoms)

    g: dict[tuple[int, int], int] = {}
    for u, (a, b) in enumerate(atoms):
        for x, part in partitions.items():
            y = part.label_at(a)
            seg = next(s for s in part.segments if s.label == y)
            if not (seg.start <= a and b <= seg.end):
                raise InvariantError("refinement atom crosses a segment boundary")
            g[(u, x)] = y

    u_alpha = Alphabet(u_name, len(atoms))
    table = {}
    for u in range(len(atoms)):
        for x, mass in px.items():
            table[(u, x, g[(u, x)])] = p_u[u] * mass
    joint = JointDist([u_alpha, x_alpha, y_alpha], table)

    mech = FrlMechanism(
        x_alphabet=x_alpha, y_alphabet=y_alpha, u_alphabet=u_alpha,
        atoms=atoms, p_u=p_u, g=g, partitions=partitions,
        dropped_x=dropped, joint=joint,
    )
    _verify_mechanism(mech, pxy)
    return mech


def _verify_mechanism(mech: FrlMechanism, pxy: JointDist) -> None:
    x_name, y_name = pxy.names
    if not mech.joint.is_independent([mech.u_alphabet.name], [x_name]):
        raise InvariantError("constructed U is not exactly independent of X")
    seen: dict[tuple[int, int], int] = {}
    for (u, x, y), p in mech.joint.items():
        if seen.setdefault((u, x), y) != y:
            raise InvariantError(f"Y not a function of (U, X) at u={u}, x={x}")
    cap = cardinality_bound(mech.x_alphabet.size, [], mech.y_alphabet.size)
    if mech.u_size > cap:
        raise InvariantError(f"|U|={mech.u_size} exceeds the cardinality bound {cap}")
    if mech.joint.marginalize([x_name, y_name]) != pxy.marginalize([x_name, y_name]):
        raise InvariantError("mechanism joint does not reproduce the input pair")


def mechanism_entropy(mech: FrlMechanism) -> float:
    return mech.entropy()


def cardinality_bound(x_size: int, u_sizes: Sequence[int], y_size: int) -> int:
    """|X| * |U_1| * ... * |U_k| * (|Y|-1) + 1."""
    if x_size < 1 or y_size < 1 or any(s < 1 for s in u_sizes):
        raise ValidationError("alphabet sizes must be >= 1")
    prod = x_size
    for s in u_sizes:
        prod *= s
    return prod * (y_size - 1) + 1


def min_entropy_search(pxy: JointDist, budget: int = 10_000) -> tuple[dict[int, tuple[int, ...]], float]:
    """Exhaust all segment orderings and return the one minimizing H(U).

    Explores the interval-construction subfamily only, so the reported value
    upper-bounds the true minimum over all feasible auxiliaries.
    """
    supports: dict[int, list[int]] = {}
    for (x, y), p in pxy.items():
        supports.setdefault(x, []).append(y)
    xs = sorted(supports)
    count = 1
    for x in xs:
        count *= math.factorial(len(supports[x]))
        if count > budget:
            raise LimitError(
                f"{count}+ orderings exceed budget {budget}; use the canonical ordering surrogate"
            )
    best_policy = None
    best_h = math.inf
    for combo in itertools.product(*(itertools.permutations(sorted(supports[x])) for x in xs)):
        policy = {x: perm for x, perm in zip(xs, combo)}
        h = frl_construct(pxy, policy).entropy()
        if h < best_h - 1e-12:
            best_h = h
            best_policy = policy
    return best_policy, best_h


# ---------------------------------------------------------------------------
# Sequential extension
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ChainStage:
    """One extension step: a mechanism over the compound private variable.

    `compound` lists the positive-support tuples (x, u_1, ..., u_{k-1}) in
    sorted order; the mechanism's x axis indexes into it.
    """

    target: str
    mechanism: FrlMechanism
    compound: tuple[tuple[int, ...], ...]
    index: Mapping[tuple[int, ...], int] = field(compare=False)

    @property
    def u_name(self) -> str:
        return self.mechanism.u_alphabet.name

    def decode(self, x: int, u_prefix: Sequence[int], u: int) -> int:
        key = (x, *u_prefix)
        if key not in self.index:
            raise ValidationError(f"compound state {key} has zero mass")
        return self.mechanism.apply(u, self.index[key])

    def conditional_u(self, x: int, u_prefix: Sequence[int], y: int) -> dict[int, Fraction]:
        key = (x, *u_prefix)
        if key not in self.index:
            raise ValidationError(f"compound state {key} has zero mass")
        return self.mechanism.conditional_u(self.index[key], y)


@dataclass(frozen=True)
class MechanismChain:
    """A sequence of mechanisms sharing one exact joint.

    `joint` covers the private variable, every base variable it was created
    with, and one U variable per stage. The whole U prefix is exactly
    independent of the private variable at every length.
    """

    private: str
    joint: JointDist
    stages: tuple[ChainStage, ...] = ()

    @property
    def u_names(self) -> tuple[str, ...]:
        return tuple(s.u_name for s in self.stages)

    @property
    def targets(self) -> tuple[str, ...]:
        return tuple(s.target for s in self.stages)

    def u_sizes(self) -> tuple[int, ...]:
        return tuple(s.mechanism.u_size for s in self.stages)


def new_chain(base: JointDist, private: str) -> MechanismChain:
    base._axes([private])  # validates the variable exists
    return MechanismChain(private=private, joint=base, stages=())


def _extend(chain: MechanismChain, target: str, policy: OrderingPolicy | None,
            search_budget: int | None = None) -> MechanismChain:
    k = len(chain.stages)
    u_names = list(chain.u_names)
    if target == chain.private or target in u_names:
        raise ValidationError(f"cannot target {target!r}")
    chain.joint._axes([target])

    if k and not chain.joint.is_independent(u_names, [chain.private]):
        raise InvariantError("chain hypothesis violated: U prefix is not independent of the private variable")

    sub = chain.joint.marginalize([chain.private, *u_names, target])
    comp_marg = sub.marginalize([chain.private, *u_names])
    states = tuple(sorted(comp_marg.table))
    index = {s: i for i, s in enumerate(states)}
    comp_alpha = Alphabet(f"_XU{k}", len(states))
    y_alpha = sub.variables[-1]
    pair = JointDist(
        [comp_alpha, y_alpha],
        {(index[c[:-1]], c[-1]): p for c, p in sub.items()},
    )

    u_name = f"U{k + 1}"
    if u_name in chain.joint.names:
        raise ValidationError(f"variable name {u_name!r} already taken in the base joint")
    if search_budget is not None:
        policy, _ = min_entropy_search(pair, search_budget)
    mech = frl_construct(pair, policy, u_name=u_name)

    u_alpha = mech.u_alphabet
    axes = chain.joint._axes([chain.private, *u_names, target])
    table: dict[tuple[int, ...], Fraction] = {}
    for cell, p in chain.joint.items():
        state = tuple(cell[a] for a in axes[:-1])
        y = cell[axes[-1]]
        for u, q in mech.conditional_u(index[state], y).items():
            table[cell + (u,)] = p * q
    joint = JointDist(chain.joint.variables + (u_alpha,), table)

    stage = ChainStage(target=target, mechanism=mech, compound=states, index=index)
    out = MechanismChain(private=chain.private, joint=joint, stages=chain.stages + (stage,))
    _verify_chain(out)
    return out


def _verify_chain(chain: MechanismChain) -> None:
    u_names = list(chain.u_names)
    for i in range(1, len(u_names) + 1):
        if not chain.joint.is_independent(u_names[:i], [chain.private]):
            raise InvariantError(f"U_1..U_{i} not exactly independent of {chain.private}")
    for i, stage in enumerate(chain.stages):
        cond = [chain.private] + u_names[: i + 1]
        seen: dict[tuple[int, ...], int] = {}
        marg = chain.joint.marginalize(cond + [stage.target])
        for cell, p in marg.items():
            if seen.setdefault(cell[:-1], cell[-1]) != cell[-1]:
                raise InvariantError(f"{stage.target} not a function of ({', '.join(cond)})")
        x_size = chain.joint.variables[chain.joint._axes([chain.private])[0]].size
        prev = [chain.stages[j].mechanism.u_size for j in range(i)]
        y_size = chain.joint.variables[chain.joint._axes([stage.target])[0]].size
        cap = cardinality_bound(x_size, prev, y_size)
        if stage.mechanism.u_size > cap:
            raise InvariantError(
                f"stage {i + 1}: |U|={stage.mechanism.u_size} exceeds the recursive bound {cap}"
            )


def frl_extend(chain: MechanismChain, pnext: JointDist,
               policy: OrderingPolicy | None = None) -> MechanismChain:
    """Extend a chain by one stage.

    `pnext` must be the exact joint of (private, U_1..U_k, next target); it is
    checked against the chain's own joint, and the independence hypothesis is
    checked before any construction happens.
    """
    expected = {chain.private, *chain.u_names}
    got = set(pnext.names)
    extra = got - expected
    if len(extra) != 1 or not expected <= got:
        raise ValidationError(
            f"pnext must cover {sorted(expected)} plus exactly one target, got {sorted(got)}"
        )
    (target,) = extra
    order = [chain.private, *chain.u_names, target]
    reordered = pnext.marginalize(order)
    if reordered != chain.joint.marginalize(order):
        raise ValidationError("pnext disagrees with the chain's joint on the shared variables")
    if not reordered.is_independent(list(chain.u_names), [chain.private]):
        raise InvariantError("extension hypothesis violated: I(U prefix; private) != 0")
    return _extend(chain, target, policy)


def build_chain(base: JointDist, private: str, targets: Sequence[str],
                search_budget: int | None = None) -> MechanismChain:
    """Run the sequential construction over `targets` in order.

    Stage i only reads the marginal over (private, U_1..U_{i-1}, targets[i]),
    so the first i stages are identical for any continuation of the target
    list. A repeated target yields a constant (zero-entropy) stage. With
    `search_budget` set, every stage exhausts segment orderings to shrink
    H(U); otherwise the canonical ascending order is used.
    """
    chain = new_chain(base, private)
    for t in targets:
        chain = _extend(chain, t, None, search_budget)
    return chain
