import random
from fractions import Fraction

import pytest

from privseq.probability import Alphabet, JointDist


def random_database(rng: random.Random, x_size: int, n_files: int, file_bits: int,
                    sparse: bool = False) -> JointDist:
    """Random exact-rational joint over (X, Y_1..Y_N); weights sum to the denominator."""
    sizes = [x_size] + [2 ** file_bits] * n_files
    variables = [Alphabet("X", x_size)] + [Alphabet(f"Y{i}", 2 ** file_bits)
                                           for i in range(1, n_files + 1)]
    cells = [()]
    for s in sizes:
        cells = [c + (v,) for c in cells for v in range(s)]
    weights = {}
    for c in cells:
        w = rng.randint(0, 6) if sparse else rng.randint(1, 9)
        if w:
            weights[c] = w
    if not weights:
        weights[cells[0]] = 1
    total = sum(weights.values())
    return JointDist(variables, {c: Fraction(w, total) for c, w in weights.items()})


def random_pair(rng: random.Random, x_size: int, y_size: int, sparse: bool = False) -> JointDist:
    variables = [Alphabet("X", x_size), Alphabet("Y", y_size)]
    weights = {}
    for x in range(x_size):
        for y in range(y_size):
            w = rng.randint(0, 5) if sparse else rng.randint(1, 9)
            if w:
                weights[(x, y)] = w
    if not weights:
        weights[(0, 0)] = 1
    total = sum(weights.values())
    return JointDist(variables, {c: Fraction(w, total) for c, w in weights.items()})


@pytest.fixture
def designed_2x2() -> JointDist:
    # conditionals (1/2,1/2) and (1/4,3/4): cut sets {1/2} and {1/4} are
    # disjoint, so the refinement meets the 2*(2-1)+1 atom cap with equality
    F = Fraction
    return JointDist(
        [Alphabet("X", 2), Alphabet("Y", 2)],
        {(0, 0): F(1, 4), (0, 1): F(1, 4), (1, 0): F(1, 8), (1, 1): F(3, 8)},
    )
