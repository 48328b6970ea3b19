import random
from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from privseq.coding import (
    Codebook,
    PadKey,
    entropy_codebook,
    fixed_length_codebook,
    otp_decrypt,
    otp_encrypt,
    pack_slots,
    unpack_slots,
    verify_prefix_free,
)
from privseq.errors import ValidationError
from privseq.probability import Alphabet, JointDist


class TestPad:
    def test_identity_key(self):
        assert otp_encrypt(0, PadKey(0, 4)) == 0

    def test_wraparound(self):
        assert otp_encrypt(2, PadKey(3, 4)) == 1
        assert otp_decrypt(1, PadKey(3, 4)) == 2

    def test_roundtrip_all(self):
        for mod in (1, 2, 3, 4, 5):
            for x in range(mod):
                for w in range(mod):
                    key = PadKey(w, mod)
                    assert otp_decrypt(otp_encrypt(x, key), key) == x

    def test_out_of_range(self):
        with pytest.raises(ValidationError):
            otp_encrypt(4, PadKey(0, 4))
        with pytest.raises(ValidationError):
            PadKey(4, 4)

    @pytest.mark.parametrize("mod", [2, 3, 4, 5])
    def test_uniform_and_independent(self, mod):
        # joint over (X, W, padded) with any X prior and a uniform key
        rng = random.Random(mod)
        weights = [rng.randint(1, 5) for _ in range(mod)]
        total = sum(weights)
        px = JointDist([Alphabet("X", mod)], {(x,): F(w, total) for x, w in enumerate(weights)})
        ext = px.product_extend(Alphabet("W", mod), [F(1, mod)] * mod)
        table = {}
        for (x, w), p in ext.items():
            table[(x, w, otp_encrypt(x, PadKey(w, mod)))] = p
        full = JointDist(list(ext.variables) + [Alphabet("P", mod)], table)
        padded = full.marginalize(["P"])
        assert padded.table == {(s,): F(1, mod) for s in range(mod)}
        assert full.is_independent(["P"], ["X"])


class TestFixedLength:
    def test_four_symbols_two_bits(self):
        cb = fixed_length_codebook(4)
        assert sorted(cb.words.values()) == ["00", "01", "10", "11"]

    def test_five_symbols_three_bits(self):
        cb = fixed_length_codebook(5)
        assert all(len(w) == 3 for w in cb.words.values())

    def test_singleton_empty_word(self):
        cb = fixed_length_codebook(1)
        assert cb.words == {0: ""}

    def test_prefix_free(self):
        for n in range(1, 9):
            assert verify_prefix_free(fixed_length_codebook(n))


class TestEntropyCodebook:
    def test_uniform_two(self):
        cb = entropy_codebook([F(1, 2), F(1, 2)])
        assert sorted(cb.words.values()) == ["0", "1"]

    def test_dyadic_matches_entropy(self):
        dist = {0: F(1, 2), 1: F(1, 4), 2: F(1, 4)}
        cb = entropy_codebook(dist)
        assert cb.expected_length(dist) == F(3, 2)

    def test_point_mass_zero_bits(self):
        cb = entropy_codebook({0: F(0), 1: F(1)})
        assert cb.words == {1: ""}

    def test_deterministic(self):
        dist = {0: F(1, 4), 1: F(1, 4), 2: F(1, 2)}
        assert entropy_codebook(dist).words == entropy_codebook(dist).words

    def test_expected_length_within_one_of_entropy(self):
        rng = random.Random(11)
        for _ in range(30):
            weights = [rng.randint(0, 9) for _ in range(rng.randint(1, 8))]
            if not sum(weights):
                weights[0] = 1
            total = sum(weights)
            dist = {s: F(w, total) for s, w in enumerate(weights)}
            cb = entropy_codebook(dist)
            pos = JointDist([Alphabet("S", len(weights))],
                            {(s,): p for s, p in dist.items() if p > 0})
            h = pos.entropy()
            el = float(cb.expected_length(dist))
            assert h - 1e-9 <= el <= h + 1


class TestPrefixFree:
    def test_good(self):
        assert verify_prefix_free(Codebook({0: "0", 1: "10", 2: "11"}, "fixed"))

    def test_bad_rejected_at_construction(self):
        with pytest.raises(ValidationError, match="prefix-free"):
            Codebook({0: "0", 1: "01"}, "fixed")

    @given(st.integers(0, 10 ** 6))
    @settings(max_examples=60, deadline=None)
    def test_constructors_always_prefix_free(self, seed):
        rng = random.Random(seed)
        n = rng.randint(1, 9)
        assert verify_prefix_free(fixed_length_codebook(n))
        weights = [rng.randint(0, 5) for _ in range(n)]
        if not sum(weights):
            weights[0] = 1
        total = sum(weights)
        cb = entropy_codebook({s: F(w, total) for s, w in enumerate(weights)})
        assert verify_prefix_free(cb)
        assert cb.kraft_sum() <= 1


class TestDecoding:
    @given(st.integers(0, 10 ** 6))
    @settings(max_examples=60, deadline=None)
    def test_concatenation_roundtrip(self, seed):
        rng = random.Random(seed)
        n = rng.randint(2, 8)
        weights = [rng.randint(1, 5) for _ in range(n)]
        total = sum(weights)
        cb = entropy_codebook({s: F(w, total) for s, w in enumerate(weights)})
        seq = [rng.randrange(n) for _ in range(rng.randint(0, 12))]
        bits = "".join(cb.encode(s) for s in seq)
        assert cb.decode_all(bits) == seq

    def test_undecodable(self):
        cb = Codebook({0: "00", 1: "01"}, "fixed")
        with pytest.raises(ValidationError, match="undecodable"):
            cb.decode_one("1")

    def test_zero_bit_decode(self):
        cb = fixed_length_codebook(1)
        assert cb.decode_one("", 0) == (0, 0)


class TestPacking:
    def test_roundtrip(self):
        slots = [("pad", "101"), ("u1", ""), ("u2", "0011010")]
        assert unpack_slots(pack_slots(slots)) == slots

    def test_padding_to_byte(self):
        data = pack_slots([("a", "1")])
        # header: magic + count + (label len, label, bitlen); payload one byte
        assert data[-1] == 0b10000000

    def test_bad_magic(self):
        with pytest.raises(ValidationError, match="magic"):
            unpack_slots(b"nope" + bytes(10))

    def test_truncated_payload(self):
        data = pack_slots([("a", "10101010101")])
        with pytest.raises(ValidationError, match="length"):
            unpack_slots(data[:-1])
