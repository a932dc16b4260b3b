import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st

from fracapprox.errors import InvalidArgument, InvalidMeasure, UndefinedSeries
from fracapprox.ifs import AffineMap, RationalIFS
from fracapprox.khinchin import (
    CONVERGES,
    DIVERGES,
    FULL,
    ZERO,
    DimensionFunction,
    PsiFamily,
    classify_series_badly,
    classify_series_well,
    longest_previous_factor,
    lsv_series,
    max_excess_by_depth,
    mc_khinchin_experiment,
    mc_repeat_probability,
    natural_weights,
    repeat_scan_self,
    suffix_array,
)
from fracapprox.streams import PeriodicStream, RandomStream

DELTA = math.log(2) / math.log(3)


def test_psi_family():
    psi = PsiFamily(2.0, -1.0, 3.0)
    q = 50.0
    assert abs(psi(q) - 2 * q**-1 * math.log(q) ** 3) < 1e-15
    t = 4.0
    assert abs(psi.Psi(t) + math.log(psi(math.exp(t)))) < 1e-12
    assert abs(psi.Psi_d(5, 3) + math.log(psi(3.0**5), 3)) < 1e-12
    s = 1.5
    assert abs(PsiFamily.log_power(-s / DELTA).Psi(t) - s * math.log(t) / DELTA) < 1e-12
    assert PsiFamily(1, 0, -1).slowly_varying and PsiFamily(1, 0, -1).bounded
    assert not PsiFamily(1, 0.1, 0).bounded
    with pytest.raises(InvalidArgument):
        PsiFamily(0, 0, 0)


def test_badly_examples():
    assert classify_series_badly(PsiFamily.log_power(-(2 / DELTA + 0.1)), DELTA).verdict == CONVERGES
    assert classify_series_badly(PsiFamily.log_power(-2 / DELTA), DELTA).verdict == DIVERGES
    assert classify_series_badly(PsiFamily(1, -0.1, 0), DELTA).verdict == CONVERGES


def test_well_examples():
    assert classify_series_well(PsiFamily.log_power(-2 / DELTA), DELTA).verdict == DIVERGES
    assert classify_series_well(PsiFamily.log_power(-(2 / DELTA + 0.1)), DELTA).verdict == CONVERGES
    assert classify_series_well(PsiFamily(1, -0.1, 0), DELTA).verdict == CONVERGES
    with pytest.raises(UndefinedSeries):
        classify_series_well(PsiFamily(2, 0, 0), DELTA)
    with pytest.raises(InvalidArgument):
        classify_series_badly(PsiFamily(1, 0, 0), 1.5)


def _log_integral(c, e, u0, u1):
    """Integral of exp(c u) u**e over [u0, u1]: the series term integrated in u = log q."""
    return float(mpmath.quad(lambda u: mpmath.exp(c * u) * u**e, [u0, u1]))


@pytest.mark.parametrize("a", [-0.2, 0.0, 0.2])
@pytest.mark.parametrize("b", range(-6, 3))
def test_classifier_agrees_with_partial_sums(a, b):
    """Partial sums over 10^5 < q <= 10^6 are checked against the integral test."""
    psi = PsiFamily(1.0, a, float(b))
    res = classify_series_badly(psi, DELTA)
    sums = dict(res.trace)
    growth = sums[10**6] - sums[10**5]
    c, e = DELTA * a, 1 + DELTA * b  # term = q**(c - 1) * log(q)**e
    u5, u6 = math.log(10**5), math.log(10**6)
    first = math.log(10**5) * psi(10**5) ** DELTA / 10**5
    if res.verdict == CONVERGES:
        tail = _log_integral(c, e, u5, mpmath.inf)
        assert growth <= tail + first
    else:
        assert c > 0 or (c == 0 and e >= -1)  # integral diverges
        decade = _log_integral(c, e, u5, u6)
        assert abs(growth - decade) <= 0.02 * decade + 2 * first


def test_lsv_examples():
    f = DimensionFunction(DELTA)
    assert lsv_series(PsiFamily.log_power(-1 / DELTA), f, 3, DELTA).verdict == FULL
    assert lsv_series(PsiFamily.log_power(-1.1 / DELTA), f, 3, DELTA).verdict == ZERO
    assert lsv_series(PsiFamily(1, 0, 0), f, 3, DELTA).verdict == FULL
    res = lsv_series(PsiFamily(1, 0, 0), f, 3, DELTA)
    assert all(abs(s - n) < 1e-9 for n, s in res.trace)


def brute_lpf(s):
    n = len(s)
    out = []
    for j in range(n):
        best = 0
        for i in range(j):
            k = 0
            while j + k < n and s[i + k] == s[j + k]:
                k += 1
            best = max(best, k)
        out.append(best)
    return out


@given(st.lists(st.integers(0, 2), min_size=1, max_size=60))
def test_lpf_against_brute_force(s):
    lengths, sources = longest_previous_factor(np.array(s))
    assert list(lengths) == brute_lpf(s)
    for j, (L, i) in enumerate(zip(lengths, sources)):
        if L:
            assert i < j and s[i : i + L] == s[j : j + L]


@given(st.lists(st.integers(0, 3), min_size=1, max_size=80))
def test_suffix_array_sorted(s):
    sa = suffix_array(np.array(s))
    assert [s[i:] for i in sa] == sorted(s[i:] for i in range(len(s)))


def test_repeat_scan_constant_stream(cantor):
    psi = PsiFamily.log_power(-2 / DELTA)
    for K in (0.0, 10.0, 50.0):
        viol, best = repeat_scan_self(cantor, PeriodicStream((), (0,)), 100, psi, K)
        assert viol and best > K


def test_repeat_scan_no_long_repeats():
    # de Bruijn-like stream over 4 letters: every 3-block appears at most once
    ifs = RationalIFS(tuple(AffineMap(1, 5, e) for e in (0, 1, 3, 4)))
    seq = _de_bruijn(4, 3)
    stream = PeriodicStream(tuple(seq), (0,))
    psi = PsiFamily(1, 0, 0)
    L, _ = longest_previous_factor(np.array(seq))
    assert L.max() < 3
    viol, _ = repeat_scan_self(ifs, stream, len(seq), psi, 3 * math.log(5))
    assert viol == []


def _de_bruijn(k, n):
    a = [0] * k * n
    seq = []

    def db(t, p):
        if t > n:
            if n % p == 0:
                seq.extend(a[1 : p + 1])
        else:
            a[t] = a[t - p]
            db(t + 1, p)
            for j in range(a[t - p] + 1, k):
                a[t] = j
                db(t + 1, t)

    db(1, 1)
    return seq


def test_repeat_scan_monotone_in_depth(cantor):
    psi = PsiFamily.log_power(-1 / DELTA)
    w = RandomStream((0, 1), 5)
    v1, _ = repeat_scan_self(cantor, w, 500, psi, 2.0)
    v2, _ = repeat_scan_self(cantor, w, 2000, psi, 2.0)
    key2 = {(v.start, v.length) for v in v2}
    for v in v1:
        # the maximal repeat at a start can only grow with depth
        assert any(s == v.start and L >= v.length for s, L in key2)


def test_max_excess_by_depth_matches_direct(cantor):
    psi = PsiFamily.log_power(-(2 / DELTA + 0.5))
    w = RandomStream((0, 1), 8)
    letters = w.array(4096)
    depths = [64, 512, 4096]
    fast = max_excess_by_depth(cantor, letters, psi, depths)
    for D, v in zip(depths, fast):
        _, best = repeat_scan_self(cantor, PeriodicStream(tuple(letters[:D]), (0,)), D, psi, 0.0)
        assert abs(v - best) < 1e-9


def test_natural_weights(cantor, tq):
    assert np.allclose(natural_weights(cantor), [0.5, 0.5])
    w = natural_weights(tq)
    assert abs(w.sum() - 1) < 1e-12
    overlap = RationalIFS((AffineMap(1, 2, 0), AffineMap(1, 2, 1), AffineMap(1, 3, 0)))
    assert natural_weights(overlap).sum() == pytest.approx(1)
    # ratios summing above one are still normalized by the similarity dimension
    w = np.array(overlap.ratios) ** overlap.delta
    assert abs(w.sum() - 1) < 1e-9


def test_invalid_measure(monkeypatch, cantor):
    class Skewed:
        ratios = [0.5, 0.25]
        delta = 0.5

    with pytest.raises(InvalidMeasure):
        natural_weights(Skewed())


def test_sampling_law(tq):
    w = natural_weights(tq)
    x = RandomStream((0, 1), 17, weights=w).array(10**6)
    p1 = x.mean()
    se = math.sqrt(w[1] * w[0] / x.size)
    assert abs(p1 - w[1]) <= 4 * se


def test_mc_probability_examples(cantor):
    est = mc_repeat_probability(cantor, 0, 3, 4 * math.log(3), 10**5, 1)
    assert est.freq <= est.bound + 3 * est.stderr
    assert abs(est.bound - math.exp(-DELTA * 4 * math.log(3))) < 1e-12
    tiny = mc_repeat_probability(cantor, 0, 1, 1e-9, 1000, 1)
    assert tiny.bound == pytest.approx(1.0) and tiny.within
    huge = mc_repeat_probability(cantor, 2, 50, 400.0, 2000, 1)
    assert huge.freq == 0 and huge.within
    with pytest.raises(InvalidArgument):
        mc_repeat_probability(cantor, 0, 1, 1.0, 0, 1)


def test_mc_probability_exact_value(cantor):
    # For n=0, m=1 the event is w1 == w2 (r = 1 reaches l0 = log 3): probability 1/2.
    est = mc_repeat_probability(cantor, 0, 1, math.log(3), 10**5, 4)
    assert abs(est.freq - 0.5) <= 4 * est.stderr


def test_mc_experiment_shapes(cantor):
    psi = PsiFamily.log_power(-(2 / DELTA + 0.5))
    res = mc_khinchin_experiment(cantor, psi, 6, [256, 1024], 3)
    assert len(res["per_trial"]) == 12
    assert [r["depth"] for r in res["summary"]] == [256, 1024]
    assert mc_khinchin_experiment(cantor, psi, 0, [256], 3)["summary"] == []
    par = mc_khinchin_experiment(cantor, psi, 6, [256, 1024], 3, threads=3)
    assert par == res


def test_mc_experiment_trends(cantor):
    """Trend report: tight in the convergent regime, drifting up in the divergent one."""
    depths = [2**10, 2**12, 2**14]
    bad = mc_khinchin_experiment(cantor, PsiFamily.log_power(-(2 / DELTA + 0.5)), 40, depths, 1)
    well = mc_khinchin_experiment(cantor, PsiFamily.log_power(-1 / DELTA), 40, depths, 1)
    bad_med = [r["median"] for r in bad["summary"]]
    well_med = [r["median"] for r in well["summary"]]
    assert max(bad_med) - min(bad_med) <= 1.0
    assert well_med[0] < well_med[1] < well_med[2]
