import math
import random
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from fracapprox.coding import code_rational, intrinsic_denominator, pseudolength
from fracapprox.errors import InvalidArgument, NotInLimitSet
from fracapprox.ifs import AffineMap, EventuallyPeriodicWord, RationalIFS, eval_eventually_periodic, times_d_ifs
from fracapprox.timesd import TimesDSet, member

W = EventuallyPeriodicWord


def test_quarter(cantor):
    c = code_rational(cantor, Fraction(1, 4))
    assert c.word == W((), (0, 1))
    assert (c.q_int, c.q_red) == (8, 4)
    assert c.divides


def test_third(cantor):
    c = code_rational(cantor, Fraction(1, 3))
    assert c.word == W((0,), (1,))
    assert (c.q_int, c.q_red) == (6, 3)
    assert eval_eventually_periodic(cantor, c.word).value == Fraction(1, 3)


def test_gap_point(cantor):
    with pytest.raises(NotInLimitSet) as exc:
        code_rational(cantor, Fraction(1, 2))
    assert exc.value.partial_word == ()
    with pytest.raises(NotInLimitSet) as exc:
        code_rational(cantor, Fraction(1, 6))  # 0.0111...: leaves at the second step
    assert exc.value.partial_word == (0,)


def test_needs_strong_separation():
    with pytest.raises(InvalidArgument):
        code_rational(times_d_ifs(2, (0, 1)), Fraction(1, 3))


def test_intrinsic_denominator(cantor):
    assert intrinsic_denominator(cantor, W((), (0, 1))) == 8
    assert intrinsic_denominator(cantor, W((), (0, 1, 0, 1))) == 8
    assert eval_eventually_periodic(cantor, W((), (0, 1, 0, 1))).den == 80
    assert 80 % 8 == 0
    assert intrinsic_denominator(cantor, W((), (1,))) == 2


def test_pseudolength(cantor, tq):
    assert abs(pseudolength(cantor, (0, 1)) - 2 * math.log(3)) < 1e-15
    assert pseudolength(cantor, ()) == 0
    assert abs(pseudolength(tq, (0, 1)) - 2.4849066497880004) < 1e-12


short = st.lists(st.integers(0, 1), max_size=8).map(tuple)


@given(short, short, short)
def test_pseudolength_additive(w1, w2, _):
    ifs = RationalIFS((AffineMap(1, 3, 0), AffineMap(1, 4, 3)))
    assert abs(pseudolength(ifs, w1 + w2) - pseudolength(ifs, w1) - pseudolength(ifs, w2)) <= 1e-12


@pytest.mark.parametrize("name", ["cantor", "tq"])
@given(data=st.data())
def test_round_trip(name, data, cantor, tq):
    ifs = cantor if name == "cantor" else tq
    pre = data.draw(st.lists(st.integers(0, 1), max_size=8).map(tuple))
    per = data.draw(st.lists(st.integers(0, 1), min_size=1, max_size=8).map(tuple))
    w = W(pre, per)
    v = eval_eventually_periodic(ifs, w)
    c = code_rational(ifs, v.value)
    assert c.word == w.canonical()
    assert c.q_int == intrinsic_denominator(ifs, w)
    assert v.den % c.q_int == 0  # canonical q_int divides any other representation's
    assert c.q_int % c.q_red == 0


def test_membership_cross_oracle(cantor):
    C = TimesDSet(3, (0, 2))
    rng = random.Random(5)
    for _ in range(2000):
        q = rng.randint(1, 3000)
        x = Fraction(rng.randint(0, q), q)
        try:
            code_rational(cantor, x)
            coded = True
        except NotInLimitSet:
            coded = False
        assert coded == member(C, x), x
