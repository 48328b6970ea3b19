import math
import random
from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from privseq.errors import ValidationError
from privseq.probability import (
    Alphabet,
    JointDist,
    format_dist,
    parse_dist,
    point_mass,
    uniform,
)
from privseq.bounds import Example1Params, example1_build

from conftest import random_database


def pair(px00, px01, px10, px11):
    return JointDist(
        [Alphabet("A", 2), Alphabet("B", 2)],
        {(0, 0): px00, (0, 1): px01, (1, 0): px10, (1, 1): px11},
    )


UNIFORM_PAIR = pair(F(1, 4), F(1, 4), F(1, 4), F(1, 4))


class TestConstruction:
    def test_rejects_bad_sum(self):
        with pytest.raises(ValidationError, match="sum"):
            JointDist([Alphabet("A", 2)], {(0,): F(1, 2), (1,): F(1, 3)})

    def test_rejects_negative(self):
        with pytest.raises(ValidationError, match="negative"):
            JointDist([Alphabet("A", 2)], {(0,): F(3, 2), (1,): F(-1, 2)})

    def test_rejects_out_of_range_symbol(self):
        with pytest.raises(ValidationError, match="out of range"):
            JointDist([Alphabet("A", 2)], {(2,): F(1)})

    def test_zero_cells_dropped(self):
        d = JointDist([Alphabet("A", 2)], {(0,): F(1), (1,): F(0)})
        assert (1,) not in d.table
        assert d.prob((1,)) == 0


class TestMarginalize:
    def test_uniform_pair_keep_first(self):
        m = UNIFORM_PAIR.marginalize(["A"])
        assert m.table == {(0,): F(1, 2), (1,): F(1, 2)}

    def test_point_mass_keep_second(self):
        d = JointDist([Alphabet("A", 2), Alphabet("B", 2)], {(1, 0): F(1)})
        assert d.marginalize(["B"]).table == {(0,): F(1)}

    def test_masked_bit_marginal(self):
        # one fair bit masked by X~Bern(1/2): P(Y=0) = 1/2 + 1/2*1/2 = 3/4
        d = example1_build(Example1Params(F(1, 2), 1, 1, 1))
        assert d.marginalize(["Y1"]).table == {(0,): F(3, 4), (1,): F(1, 4)}

    def test_unknown_variable(self):
        with pytest.raises(ValidationError, match="unknown"):
            UNIFORM_PAIR.marginalize(["Z"])


class TestCondition:
    def test_uniform_pair(self):
        c = UNIFORM_PAIR.condition("A", 0)
        assert c.table == {(0,): F(1, 2), (1,): F(1, 2)}
        assert c.names == ("B",)

    def test_masked_bit_given_x(self):
        d = example1_build(Example1Params(F(1, 2), 1, 1, 1))
        assert d.condition("X", 0).table == {(0,): F(1)}
        assert d.condition("X", 1).table == {(0,): F(1, 2), (1,): F(1, 2)}

    def test_zero_probability_event(self):
        d = JointDist([Alphabet("A", 2), Alphabet("B", 2)], {(0, 0): F(1)})
        with pytest.raises(ValidationError, match="zero-probability"):
            d.condition("A", 1)


class TestEntropy:
    def test_uniform_four(self):
        assert uniform(Alphabet("A", 4)).entropy() == 2.0

    def test_point_mass(self):
        assert point_mass(Alphabet("A", 5), 3).entropy() == 0.0

    def test_quarter_quarter_half(self):
        d = JointDist([Alphabet("A", 3)], {(0,): F(1, 4), (1,): F(1, 4), (2,): F(1, 2)})
        assert d.entropy() == pytest.approx(1.5, abs=1e-12)

    def test_bounded_by_log_support(self):
        rng = random.Random(7)
        for _ in range(20):
            d = random_database(rng, 2, 1, 1, sparse=True)
            assert -1e-12 <= d.entropy() <= math.log2(len(d.table)) + 1e-12


class TestConditionalEntropy:
    def test_independent_uniform(self):
        assert UNIFORM_PAIR.conditional_entropy(["B"], ["A"]) == pytest.approx(1.0)

    def test_function_of_given(self):
        d = JointDist([Alphabet("A", 2), Alphabet("B", 2)],
                      {(0, 0): F(1, 2), (1, 1): F(1, 2)})
        assert d.conditional_entropy(["B"], ["A"]) == 0.0

    def test_masked_two_bit_file(self):
        d = example1_build(Example1Params(F(1, 2), 1, 1, 2))
        cond = d.condition("X", 1)
        assert cond.entropy(["Y1"]) == 2.0

    def test_overlap_rejected(self):
        with pytest.raises(ValidationError):
            UNIFORM_PAIR.conditional_entropy(["A"], ["A"])


class TestMutualInformation:
    def test_independent(self):
        assert UNIFORM_PAIR.mutual_information(["A"], ["B"]) == 0.0

    def test_identical_uniform_bit(self):
        d = JointDist([Alphabet("A", 2), Alphabet("B", 2)],
                      {(0, 0): F(1, 2), (1, 1): F(1, 2)})
        assert d.mutual_information(["A"], ["B"]) == pytest.approx(1.0)

    def test_masked_bit_value(self):
        # h(1/4) - 1/2, the leakage of sending the masked bit uncoded
        d = example1_build(Example1Params(F(1, 2), 1, 1, 1))
        expect = -(0.75 * math.log2(0.75) + 0.25 * math.log2(0.25)) - 0.5
        assert d.mutual_information(["X"], ["Y1"]) == pytest.approx(expect, abs=1e-12)
        assert expect == pytest.approx(0.3113, abs=5e-5)


class TestIndependence:
    def test_product(self):
        assert UNIFORM_PAIR.is_independent(["A"], ["B"])

    def test_identical(self):
        d = JointDist([Alphabet("A", 2), Alphabet("B", 2)],
                      {(0, 0): F(1, 2), (1, 1): F(1, 2)})
        assert not d.is_independent(["A"], ["B"])

    def test_empty_side_vacuous(self):
        assert UNIFORM_PAIR.is_independent([], ["A"])

    @given(st.integers(0, 10 ** 6))
    @settings(max_examples=60, deadline=None)
    def test_mi_zero_iff_exact(self, seed):
        d = random_database(random.Random(seed), 2, 2, 1, sparse=True)
        mi = d.mutual_information(["X"], ["Y1"])
        assert (mi < 1e-12) == d.is_independent(["X"], ["Y1"])


class TestProductExtend:
    def test_attached_uniform_is_independent(self):
        d = example1_build(Example1Params(F(1, 2), 1, 1, 1))
        ext = d.product_extend(Alphabet("W", 2), [F(1, 2), F(1, 2)])
        assert ext.is_independent(["W"], ["X", "Y1"])
        assert ext.mutual_information(["W"], ["X", "Y1"]) == 0.0

    def test_point_mass_keeps_entropy(self):
        d = example1_build(Example1Params(F(1, 2), 1, 1, 1))
        ext = d.product_extend(Alphabet("W", 3), [F(0), F(1), F(0)])
        assert ext.entropy() == pytest.approx(d.entropy(), abs=1e-12)

    def test_uniform_marginal(self):
        d = example1_build(Example1Params(F(1, 2), 1, 1, 1))
        ext = d.product_extend(Alphabet("W", 2), [F(1, 2), F(1, 2)])
        assert ext.marginalize(["W"]).table == {(0,): F(1, 2), (1,): F(1, 2)}

    def test_name_collision(self):
        with pytest.raises(ValidationError):
            UNIFORM_PAIR.product_extend(Alphabet("A", 2), [F(1, 2), F(1, 2)])


@given(st.integers(0, 10 ** 6))
@settings(max_examples=40, deadline=None)
def test_marginal_entropy_monotone(seed):
    d = random_database(random.Random(seed), 3, 2, 1, sparse=True)
    whole = d.entropy()
    assert d.entropy(["X", "Y1"]) <= whole + 1e-9
    assert d.entropy(["X"]) <= d.entropy(["X", "Y1"]) + 1e-9


@given(st.integers(0, 10 ** 6))
@settings(max_examples=40, deadline=None)
def test_conditional_entropy_zero_iff_function(seed):
    d = random_database(random.Random(seed), 2, 1, 1, sparse=True)
    h = d.conditional_entropy(["Y1"], ["X"])
    marg = d.marginalize(["X", "Y1"])
    functional = True
    seen = {}
    for (x, y), _ in marg.items():
        functional &= seen.setdefault(x, y) == y
    assert (h < 1e-12) == functional


class TestDistFile:
    def test_roundtrip(self):
        d = example1_build(Example1Params(F(1, 2), 2, 2, 1))
        again = parse_dist(format_dist(d))
        assert again == d

    def test_sum_must_be_exact(self):
        text = "var X 2\np 0 99/100\np 1 0\n"
        with pytest.raises(ValidationError, match="sum"):
            parse_dist(text)

    def test_bad_fraction(self):
        with pytest.raises(ValidationError, match="probability"):
            parse_dist("var X 1\np 0 one\n")

    def test_comments_and_blanks(self):
        d = parse_dist("# header\n\nvar X 2  # two symbols\np 0 1/2\np 1 1/2\n")
        assert d.table == {(0,): F(1, 2), (1,): F(1, 2)}

    def test_duplicate_cell(self):
        with pytest.raises(ValidationError, match="duplicate"):
            parse_dist("var X 2\np 0 1/2\np 0 1/2\n")
