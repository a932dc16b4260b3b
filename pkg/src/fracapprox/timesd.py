"""Sets of reals whose base-d digits lie in a fixed digit set.

Digit streams here carry actual digits (not letter indices).  A point ``y`` of
the translate ``J - x`` is always handled through the stream of ``x + y``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Callable, Iterator, Sequence

import numpy as np

from .arith import multiplicative_order
from .errors import InvalidArgument, InvalidTranslate, OutOfRange
from .ifs import Interval, RationalIFS, times_d_ifs


@dataclass(frozen=True)
class TimesDSet:
    d: int
    E: tuple

    def __post_init__(self):
        E = tuple(sorted(set(int(e) for e in self.E)))
        object.__setattr__(self, "E", E)
        if self.d < 2:
            raise InvalidArgument(f"base must be >= 2, got {self.d}")
        if not all(0 <= e < self.d for e in E):
            raise InvalidArgument(f"digits {E} out of range for base {self.d}")
        if not 1 < len(E) < self.d:
            raise InvalidArgument(f"need 1 < #E < d, got #E = {len(E)}, d = {self.d}")

    @classmethod
    def parse(cls, spec: str) -> "TimesDSet":
        """Parse ``d=3,E=0,2``."""
        head, _, digits = spec.partition(",E=")
        if not head.startswith("d=") or not digits:
            raise InvalidArgument(f"set spec must look like 'd=3,E=0,2', got {spec!r}")
        return cls(int(head[2:]), tuple(int(s) for s in digits.split(",")))

    def __str__(self):
        return f"d={self.d},E={','.join(map(str, self.E))}"

    @property
    def delta(self) -> float:
        return math.log(len(self.E)) / math.log(self.d)

    @property
    def d_prime(self) -> bool:
        return self.d > 1 and all(self.d % p for p in range(2, math.isqrt(self.d) + 1))

    @property
    def no_adjacent_digits(self) -> bool:
        return all(b - a > 1 for a, b in zip(self.E, self.E[1:])) and {0, self.d - 1} <= set(self.E)

    @property
    def contains_0_and_dm1(self) -> bool:
        return {0, self.d - 1} <= set(self.E)

    @cached_property
    def ifs(self) -> RationalIFS:
        return times_d_ifs(self.d, self.E)

    @property
    def hull(self) -> Interval:
        return Interval(Fraction(self.E[0], self.d - 1), Fraction(self.E[-1], self.d - 1))

    @property
    def tail_max(self) -> Fraction:
        """Largest value of ``sum_{i>=1} e_i d^-i`` with digits in E."""
        return Fraction(self.E[-1], self.d - 1)


@dataclass(frozen=True)
class BaseDExpansion:
    d: int
    pre: tuple
    per: tuple
    terminating: bool = False
    dual: "BaseDExpansion | None" = field(default=None, compare=False)

    @property
    def r(self) -> int:
        return len(self.pre)

    @property
    def m(self) -> int:
        return len(self.per)

    def value(self) -> Fraction:
        return digits_value(self.d, self.pre, self.per)

    def expansions(self):
        yield self
        if self.dual is not None:
            yield self.dual

    def digit(self, i: int) -> int:
        return self.pre[i] if i < self.r else self.per[(i - self.r) % self.m]

    def format(self) -> str:
        s = "".join(map(str, self.pre)) + "(" + "".join(map(str, self.per)) + ")"
        return s if self.dual is None else s + " = " + self.dual.format()


def digits_value(d: int, pre: Sequence[int], per: Sequence[int]) -> Fraction:
    """Value of ``0.pre(per)`` in base d."""
    a, b = _block(d, pre), _block(d, per)
    m, r = len(per), len(pre)
    return Fraction(a * (d**m - 1) + b, d**r * (d**m - 1))


def _block(d, digits):
    """Integer with base-d digits ``digits`` (most significant first)."""
    digits = tuple(digits)
    if len(digits) <= 64:
        v = 0
        for e in digits:
            v = v * d + e
        return v
    # split in halves so long blocks cost a few big multiplications
    half = len(digits) // 2
    return _block(d, digits[:half]) * d ** (len(digits) - half) + _block(d, digits[half:])


def split_denominator(d: int, q: int):
    """``(r, q_tilde)``: q_tilde is q stripped of primes dividing d, r minimal with q | d^r q_tilde."""
    qt = q
    g = math.gcd(qt, d)
    while g > 1:
        while qt % g == 0:
            qt //= g
        g = math.gcd(qt, d)
    rest, r = q // qt, 0
    while d**r % rest:
        r += 1
    return r, qt


def _check_range(x) -> Fraction:
    x = Fraction(x)
    if not 0 <= x <= 1:
        raise OutOfRange(f"{x} is outside [0, 1]")
    return x


def iter_digits(d: int, x: Fraction) -> Iterator[int]:
    """Long division digits of ``x`` in [0, 1)."""
    rem, q = x.numerator, x.denominator
    while True:
        rem *= d
        yield rem // q
        rem %= q


def period(d: int, x) -> tuple:
    """``(r, m)``: preperiod length and period length (``m = 1`` when terminating)."""
    x = _check_range(x)
    r, qt = split_denominator(d, x.denominator)
    return r, multiplicative_order(d, qt)


def expand_rational(d: int, x) -> BaseDExpansion:
    x = _check_range(x)
    if x == 0:
        return BaseDExpansion(d, (), (0,), terminating=True)
    if x == 1:
        return BaseDExpansion(d, (), (d - 1,), terminating=True)
    r, m = period(d, x)
    gen = iter_digits(d, x)
    digits = [next(gen) for _ in range(r + m)]
    pre, per = tuple(digits[:r]), tuple(digits[r:])
    if split_denominator(d, x.denominator)[1] == 1:
        dual = BaseDExpansion(d, pre[:-1] + (pre[-1] - 1,), (d - 1,), terminating=True)
        return BaseDExpansion(d, pre, (0,), terminating=True, dual=dual)
    return BaseDExpansion(d, pre, per)


def member(J: TimesDSet, x) -> bool:
    """Whether some base-d expansion of ``x`` uses only digits in ``J.E``."""
    x = _check_range(x)
    allowed = set(J.E)
    if x == 0:
        return 0 in allowed
    if x == 1:
        return J.d - 1 in allowed
    r, qt = split_denominator(J.d, x.denominator)
    if qt == 1:
        pre = list(_take(iter_digits(J.d, x), r))
        if all(e in allowed for e in pre[:-1]):
            if pre[-1] in allowed and 0 in allowed:
                return True
            if pre[-1] - 1 in allowed and J.d - 1 in allowed:
                return True
        return False
    # Periodic part starts after r digits and has length ord(d mod qt); check lazily.
    if any(e not in allowed for e in _take(iter_digits(J.d, x), r)):
        return False
    rem_start = _remainder_after(J.d, x, r)
    rem = rem_start
    q = x.denominator
    while True:
        rem *= J.d
        if rem // q not in allowed:
            return False
        rem %= q
        if rem == rem_start:
            return True


def _take(gen, n):
    for _ in range(n):
        yield next(gen)


def _remainder_after(d: int, x: Fraction, k: int) -> int:
    return x.numerator * pow(d, k, x.denominator) % x.denominator


def _stream_value_bounds(J: TimesDSet, stream, depth: int) -> Interval:
    """Enclosure of the point coded by the stream's digits, using ``depth`` digits."""
    digits = stream.take(0, depth)
    lo = Fraction(_block(J.d, digits), J.d**depth)
    return Interval(lo, lo + J.tail_max / J.d**depth)


def stream_value(J: TimesDSet, stream) -> Fraction | None:
    """Exact value of a periodic stream, else None."""
    w = getattr(stream, "exact_word", None)
    if w is None:
        return None
    return digits_value(J.d, w.pre, w.per)


def intersects_level(J: TimesDSet, iv: Interval, depth: int) -> bool:
    """Does ``iv`` meet some level-``depth`` cylinder of J (hull images under E^depth)?"""
    h = J.hull
    cands = [(Fraction(0), Fraction(1))]  # (offset, scale) of u_w(t) = offset + scale*t
    for _ in range(depth):
        nxt = []
        for off, sc in cands:
            sc2 = sc / J.d
            for e in J.E:
                off2 = off + sc * Fraction(e, J.d)
                if off2 + sc2 * h.lo <= iv.hi and iv.lo <= off2 + sc2 * h.hi:
                    nxt.append((off2, sc2))
        if not nxt:
            return False
        cands = nxt
    return bool(cands) and any(off + sc * h.lo <= iv.hi and iv.lo <= off + sc * h.hi for off, sc in cands)


def _digits_in_E(J: TimesDSet, c: int, k: int) -> bool:
    if not 0 <= c < J.d**k:
        return False
    allowed = set(J.E)
    for _ in range(k):
        c, e = divmod(c, J.d)
        if e not in allowed:
            return False
    return True


def _is_power_of(d: int, q: int):
    k = 0
    while q % d == 0:
        q //= d
        k += 1
    return k if q == 1 else None


def _e_expansion(J: TimesDSet, w: Fraction) -> BaseDExpansion | None:
    if not 0 <= w <= 1:
        return None
    for ex in expand_rational(J.d, w).expansions():
        if all(e in J.E for e in ex.pre + ex.per):
            return ex
    return None


@dataclass(frozen=True)
class TranslateResult:
    approx: Fraction
    denom_bound: int
    error_bound: Fraction
    n: int


def translate_approximant(J: TimesDSet, x, y, p0_q0, n: int, max_depth: int = 4096) -> TranslateResult:
    """Rational point of ``J - x`` within ``d**-n`` of ``y``.

    ``y`` is given as the digit stream of ``x + y`` (a point of J).  The
    approximant keeps the first ``n`` digits of ``x + y`` and the remaining
    digits of ``x + p0/q0``, then subtracts ``x``.
    """
    if n < 1:
        raise InvalidArgument("n must be >= 1")
    p0_q0 = Fraction(p0_q0)
    d, dn = J.d, J.d**n
    s_digits = y.take(0, n)
    if any(e not in J.E for e in s_digits):
        raise InvalidTranslate("digits of x + y leave E within the first n places")
    t_s = Fraction(_block(d, s_digits), dn)

    xv = stream_value(J, x)
    if xv is not None:
        ex = _e_expansion(J, xv + p0_q0)
        if ex is None:
            raise InvalidTranslate(f"x + {p0_q0} is not in J")
        w_digits = tuple(ex.digit(i) for i in range(n))
        t_w = Fraction(_block(d, w_digits), dn)
        w_tail = Interval(xv + p0_q0 - t_w, xv + p0_q0 - t_w)
    else:
        depth = n + 32
        while True:
            wiv = _stream_value_bounds(J, x, depth) + p0_q0
            lo_k, hi_k = math.floor(wiv.lo * dn), math.floor(wiv.hi * dn)
            if lo_k == hi_k and wiv.hi * dn != hi_k:
                break
            if depth >= max_depth:
                raise InvalidTranslate("cannot resolve the leading digits of x + p0/q0")
            depth *= 2
        if not _digits_in_E(J, lo_k, n):
            raise InvalidTranslate(f"x + {p0_q0} is not in J (leading digits)")
        t_w = Fraction(lo_k, dn)
        if not intersects_level(J, Interval(dn * (wiv.lo - t_w), dn * (wiv.hi - t_w)), 8):
            raise InvalidTranslate(f"x + {p0_q0} is not in J (tail digits)")
        w_tail = Interval(max(wiv.lo - t_w, Fraction(0)), min(wiv.hi - t_w, J.tail_max / dn))

    depth_s = n + 32
    s_iv = _stream_value_bounds(J, y, depth_s)
    s_tail = Interval(s_iv.lo - t_s, min(s_iv.hi - t_s, J.tail_max / dn))
    err = max(s_tail.hi - w_tail.lo, w_tail.hi - s_tail.lo, Fraction(0))
    approx = p0_q0 + t_s - t_w
    return TranslateResult(approx, p0_q0.denominator * dn, err, n)


@dataclass(frozen=True)
class ScanHit:
    p: int
    q: int
    status: str  # "confirmed" or "candidate"

    @property
    def value(self) -> Fraction:
        return Fraction(self.p, self.q)


def scan_translate_rationals(J: TimesDSet, x, q_bound: int, depth: int, guard: int = 8) -> list:
    """Reduced p/q with q <= q_bound such that the first ``depth`` digits of x + p/q can lie in E.

    Survivors are ``confirmed`` when membership of x + p/q in J is decided
    exactly: always for periodic x, and for random x when q is a power of d.
    Exactly refuted survivors are dropped.
    """
    if depth < 1:
        raise InvalidArgument("depth must be >= 1")
    xv = stream_value(J, x)
    xiv = Interval(xv, xv) if xv is not None else _stream_value_bounds(J, x, depth + guard)
    x_digits = None if xv is not None else x.take(0, depth + guard)
    h = J.hull
    out = []
    for q in range(1, q_bound + 1):
        p_lo = math.ceil((h.lo - xiv.hi) * q)
        p_hi = math.floor((h.hi - xiv.lo) * q)
        k = None if xv is not None else _is_power_of(J.d, q)
        for p in range(p_lo, p_hi + 1):
            if math.gcd(p, q) != 1:
                continue
            v = Fraction(p, q)
            if not intersects_level(J, xiv + v, depth):
                continue
            if xv is not None:
                if member(J, xv + v) if 0 <= xv + v <= 1 else False:
                    out.append(ScanHit(p, q, "confirmed"))
                continue
            if k is not None and k <= len(x_digits):
                c = _block(J.d, x_digits[:k]) + p * (J.d**k // q)
                if _digits_in_E(J, c, k):
                    out.append(ScanHit(p, q, "confirmed"))
                continue
            out.append(ScanHit(p, q, "candidate"))
    return out


def repeat_scan_pair(J: TimesDSet, omega, tau, depth: int, Psi: Callable[[int], float], K: float) -> list:
    """Maximal runs ``omega[n:n+r] == tau[n:n+r]`` (0-based n) with ``r > K + Psi(n)``."""
    if depth < 1:
        raise InvalidArgument("depth must be >= 1")
    return [(n, r) for n, r in matching_runs(omega.array(depth), tau.array(depth)) if r > K + Psi(n)]


def matching_runs(a: np.ndarray, b: np.ndarray) -> list:
    eq = np.concatenate(([False], np.asarray(a) == np.asarray(b), [False]))
    edges = np.flatnonzero(np.diff(eq.astype(np.int8)))
    starts, stops = edges[0::2], edges[1::2]
    return [(int(s), int(t - s)) for s, t in zip(starts, stops)]


def avoidance_dimension(J: TimesDSet, k: int) -> float:
    """Dimension of the codes avoiding a fixed letter in every k-th place."""
    if k < 1:
        raise InvalidArgument("k must be >= 1")
    nE = len(J.E)
    return ((k - 1) * math.log(nE) + math.log(nE - 1)) / (k * math.log(J.d))


def avoidance_block_offsets(J: TimesDSet, k: int, forbidden: int | None = None) -> list:
    """Digit-block values of the k-block system whose last digit avoids ``forbidden``."""
    forbidden = J.E[0] if forbidden is None else forbidden
    blocks = [0]
    for i in range(k):
        allowed = [e for e in J.E if not (i == k - 1 and e == forbidden)]
        blocks = [b * J.d + e for b in blocks for e in allowed]
    return blocks


def avoidance_ifs(J: TimesDSet, k: int) -> RationalIFS:
    return times_d_ifs(J.d**k, avoidance_block_offsets(J, k))
