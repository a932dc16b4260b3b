import math
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from fracapprox.errors import InvalidIFS, InvalidLetter, InvalidTolerance, NotContracting
from fracapprox.ifs import (
    AffineMap,
    EventuallyPeriodicWord,
    Interval,
    RationalIFS,
    compose,
    cylinder,
    dimension,
    eval_eventually_periodic,
    hutchinson_root,
    point_enclosure,
    times_d_ifs,
)
from fracapprox.streams import PeriodicStream

words = st.lists(st.integers(0, 1), max_size=12).map(tuple)


def test_compose_examples(cantor):
    u = compose(cantor, (0, 1))
    assert (u.p, u.q, u.r) == (1, 9, 2)
    u = compose(cantor, ())
    assert (u.p, u.q, u.r) == (1, 1, 0)
    u = compose(cantor, (1,))
    assert (u.p, u.q, u.r) == (1, 3, 2)


def test_compose_rejects_foreign_letter(cantor):
    with pytest.raises(InvalidLetter):
        compose(cantor, (0, 2))


@given(words, words)
def test_compose_is_homomorphism(w1, w2):
    ifs = RationalIFS((AffineMap(1, 3, 0), AffineMap(-1, 4, 4)))
    a, b = compose(ifs, w1), compose(ifs, w2)
    ab = compose(ifs, w1 + w2)
    assert (ab.p, ab.q, ab.r) == (a.p * b.p, a.q * b.q, a.p * b.r + a.r * b.q)
    t = Fraction(2, 7)
    assert ab(t) == a(b(t))


def test_hull_examples(cantor, tq):
    assert cantor.hull == Interval(Fraction(0), Fraction(1))
    assert tq.hull == Interval(Fraction(0), Fraction(1))
    shifted = RationalIFS((AffineMap(1, 3, 1), AffineMap(1, 3, 2)))
    assert shifted.hull == Interval(Fraction(1, 2), Fraction(1))


def test_hull_with_negative_slope():
    # t -> -t/3 + 1/3 and t -> t/3 + 2/3: hull [0, 1]
    ifs = RationalIFS((AffineMap(-1, 3, 1), AffineMap(1, 3, 2)))
    h = ifs.hull
    assert h == Interval(Fraction(0), Fraction(1))
    for u in ifs.maps:
        assert h.contains_interval(u.image(h.lo, h.hi))


@given(st.lists(st.tuples(st.integers(-4, 4), st.integers(2, 7), st.integers(-6, 6)), min_size=2, max_size=4))
def test_hull_invariant_and_minimal(raw):
    maps = [AffineMap(p, q, r) for p, q, r in raw if 0 < abs(p) < q]
    if len(maps) < 2:
        return
    ifs = RationalIFS(tuple(maps))
    h = ifs.hull
    images = [u.image(h.lo, h.hi) for u in ifs.maps]
    assert all(h.contains_interval(iv) for iv in images)
    # minimality: the images reach both endpoints
    assert min(iv.lo for iv in images) == h.lo
    assert max(iv.hi for iv in images) == h.hi


def test_not_contracting():
    with pytest.raises(NotContracting):
        RationalIFS((AffineMap(1, 3, 0), AffineMap(3, 3, 0)))
    with pytest.raises(InvalidIFS):
        RationalIFS((AffineMap(1, 3, 0),))


def test_dimension_cantor(cantor):
    delta, err = dimension(cantor)
    assert abs(delta - math.log(2) / math.log(3)) <= 1e-12
    assert err <= 1e-12


def test_dimension_third_quarter(tq):
    # Independent oracle: Newton iteration on (1/3)^s + (1/4)^s = 1.
    s = 0.5
    for _ in range(50):
        f = 3**-s + 4**-s - 1
        df = -math.log(3) * 3**-s - math.log(4) * 4**-s
        s -= f / df
    assert abs(tq.delta - s) <= 1e-11
    assert abs(tq.delta - 0.56) <= 0.01


@pytest.mark.parametrize("d,k", [(3, 2), (5, 3), (10, 7), (7, 2)])
def test_dimension_equal_ratios(d, k):
    ifs = times_d_ifs(d, range(k))
    assert abs(ifs.delta - math.log(k) / math.log(d)) <= 1e-12


def test_dimension_residual_and_tol():
    root, err, its = hutchinson_root([1 / 3, 1 / 4, 1 / 5], 1e-12)
    assert err <= 1e-12
    deriv = sum(math.log(1 / r) * r**root for r in (1 / 3, 1 / 4, 1 / 5))
    assert abs(sum(r**root for r in (1 / 3, 1 / 4, 1 / 5)) - 1) <= deriv * 1e-12 + 1e-15
    with pytest.raises(InvalidTolerance):
        hutchinson_root([0.5, 0.25], 0)


def test_gamma(cantor, tq):
    assert cantor.gamma == 0
    assert tq.gamma == 0
    ifs = RationalIFS((AffineMap(2, 5, 1), AffineMap(1, 3, 0)))
    assert abs(ifs.gamma - math.log(2) / math.log(5)) < 1e-15


def test_strong_separation(cantor):
    assert cantor.strong_separation
    # x3 with E = {0, 1}: hull [0, 1/2], images [0, 1/6] and [1/3, 1/2] are disjoint
    x3 = times_d_ifs(3, (0, 1))
    assert x3.hull == Interval(Fraction(0), Fraction(1, 2))
    assert not times_d_ifs(2, (0, 1)).strong_separation
    assert x3.strong_separation
    # touching images are not separated
    touching = RationalIFS((AffineMap(1, 3, 0), AffineMap(2, 3, 1)))  # [0,1/3] and [1/3,1]
    assert not touching.strong_separation


def test_eval_examples(cantor):
    v = eval_eventually_periodic(cantor, EventuallyPeriodicWord((), (0, 1)))
    assert (v.num, v.den) == (2, 8) and v.value == Fraction(1, 4)
    v = eval_eventually_periodic(cantor, EventuallyPeriodicWord((), (1,)))
    assert (v.num, v.den) == (2, 2) and v.value == 1
    v = eval_eventually_periodic(cantor, EventuallyPeriodicWord((0,), (1,)))
    assert (v.num, v.den) == (2, 6) and v.value == Fraction(1, 3)


@given(words, words.filter(bool))
def test_eval_properties(pre, per):
    ifs = RationalIFS((AffineMap(1, 3, 0), AffineMap(1, 4, 3)))
    w = EventuallyPeriodicWord(pre, per)
    v = eval_eventually_periodic(ifs, w)
    u1, u2 = compose(ifs, pre), compose(ifs, per)
    assert v.den == u1.q * (u2.q - u2.p)
    assert v.value in cylinder(ifs, pre)
    assert v.value in cylinder(ifs, pre + per)
    assert eval_eventually_periodic(ifs, w.canonical()).value == v.value


@given(words, words.filter(bool))
def test_canonical_form(pre, per):
    w = EventuallyPeriodicWord(pre, per).canonical()
    assert w.is_canonical
    m = w.m
    assert not any(m % k == 0 and w.per[:k] * (m // k) == w.per for k in range(1, m))
    assert not (w.pre and w.pre[-1] == w.per[-1])
    raw = EventuallyPeriodicWord(pre, per)
    assert all(raw[i] == w[i] for i in range(40))


def test_cylinder_examples(cantor):
    assert cylinder(cantor, (0,)) == Interval(Fraction(0), Fraction(1, 3))
    assert cylinder(cantor, (0, 1)) == Interval(Fraction(2, 9), Fraction(3, 9))
    assert cylinder(cantor, ()) == cantor.hull


@given(words, st.integers(0, 1))
def test_cylinder_nesting(w, a):
    ifs = RationalIFS((AffineMap(1, 3, 0), AffineMap(1, 4, 3)))
    outer, inner = cylinder(ifs, w), cylinder(ifs, w + (a,))
    assert outer.contains_interval(inner)
    assert outer.width == math.prod(Fraction(ifs.maps[b].p, ifs.maps[b].q) for b in w) * ifs.hull.width


def test_point_enclosure(cantor):
    iv = point_enclosure(cantor, PeriodicStream((), (0, 1)), 2)
    assert iv == Interval(Fraction(2, 9), Fraction(3, 9)) and Fraction(1, 4) in iv
    assert point_enclosure(cantor, PeriodicStream((), (0, 1)), 0) == cantor.hull
    assert point_enclosure(cantor, PeriodicStream((), (1,)), 5) == Interval(1 - Fraction(1, 3**5), Fraction(1))


def test_spec_file_roundtrip(tmp_path, cantor):
    text = "# middle thirds\nletters: 0 2\n1 3 0\n1 3 2  # right map\n"
    path = tmp_path / "c.ifs"
    path.write_text(text)
    ifs = RationalIFS.from_text(path.read_text())
    assert ifs == cantor
    assert RationalIFS.from_text(ifs.to_text()) == ifs
    assert ifs.parse_word("02") == (0, 1) == ifs.parse_word("0 2")
    with pytest.raises(InvalidIFS):
        RationalIFS.from_text("1 3\n1 3 2\n")
