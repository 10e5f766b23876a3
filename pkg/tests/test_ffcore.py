import math
import random

import pytest

from tperiods.ffcore import (FqCtx, FFError, binom_mod_p, binom_mod_p_signed,
                             fq_arith, subfield_embedding)


def test_f2_add():
    F2 = FqCtx(2)
    assert (F2.one() + F2.one()).is_zero()


def test_f4_generator_relation():
    # F_4 = F_2[g]/(g^2 + g + 1): the lex-least irreducible forces g*g = g + 1
    F4 = FqCtx(2, 2)
    assert F4.modulus == (1, 1, 1)
    g = F4.gen()
    assert g * g == g + F4.one()


def test_f3_inverse():
    F3 = FqCtx(3)
    assert F3.from_int(2).inv() == F3.from_int(2)
    assert fq_arith(F3.from_int(2), None, "inv") == F3.from_int(2)


def test_division_by_zero_and_ctx_mismatch():
    F2, F3 = FqCtx(2), FqCtx(3)
    with pytest.raises(FFError):
        F2.zero().inv()
    with pytest.raises(FFError):
        fq_arith(F2.one(), F3.one(), "add")


def test_pow_q_is_frobenius():
    for ctx in (FqCtx(2, 3), FqCtx(3, 2), FqCtx(5)):
        for a in ctx.elements():
            assert a ** ctx.q == a  # x^q = x on F_q
            assert a ** ctx.p == a.frobenius()


def test_bad_modulus_rejected():
    with pytest.raises(FFError):
        FqCtx(2, 2, modulus=(0, 0, 1))  # x^2 is reducible
    with pytest.raises(FFError):
        FqCtx(4)  # not prime


def test_binom_examples():
    assert binom_mod_p(5, 2, 2) == 0       # C(5,2) = 10
    assert binom_mod_p(7, 7, 5) == 1
    assert binom_mod_p(4, 1, 3) == 1       # C(4,1) = 4
    assert binom_mod_p(3, 7, 2) == 0       # n > i


def test_binom_vs_factorial_oracle():
    for p in (2, 3, 5, 7):
        for i in range(65):
            for n in range(65):
                assert binom_mod_p(i, n, p) == math.comb(i, n) % p


def test_binom_signed_negative_upper():
    # C(-k, n) = (-1)^n C(k+n-1, n)
    for p in (2, 3, 5):
        for k in range(1, 6):
            for n in range(6):
                expect = ((-1) ** n * math.comb(k + n - 1, n)) % p
                assert binom_mod_p_signed(-k, n, p) == expect


def test_frobenius_additive_on_random_pairs():
    rng = random.Random(7)
    for ctx in (FqCtx(2, 3), FqCtx(3, 2)):
        els = list(ctx.elements())
        for _ in range(1000):
            a, b = rng.choice(els), rng.choice(els)
            assert (a + b).frobenius() == a.frobenius() + b.frobenius()


def test_vandermonde_identity_mod_p():
    rng = random.Random(11)
    for _ in range(60):
        p = rng.choice((2, 3, 5))
        i, split, n = rng.randrange(40), rng.randrange(1, 40), rng.randrange(40)
        lhs = binom_mod_p(i + split, n, p)
        rhs = sum(binom_mod_p(i, j, p) * binom_mod_p(split, n - j, p)
                  for j in range(n + 1)) % p
        assert lhs == rhs


def test_subfield_embedding_is_ring_hom():
    sub = FqCtx(2, 2)
    sup = FqCtx(2, 4)
    emb = subfield_embedding(sub, sup)
    els = list(sub.elements())
    for a in els:
        for b in els:
            assert emb(a * b) == emb(a) * emb(b)
            assert emb(a + b) == emb(a) + emb(b)
    assert emb(sub.one()) == sup.one()


def test_ctx_serialization_fields():
    ctx = FqCtx(3, 2)
    d = ctx.to_config()
    assert d["p"] == 3 and d["e"] == 2 and len(d["modulus"]) == 3
