"""Exact rational iterated function systems on the line.

A rational IFS is a finite family of contractions ``t -> (p*t + r)/q`` with
integer coefficients.  Words are tuples of letter indices into the IFS
alphabet; all fraction arithmetic is exact (:class:`fractions.Fraction`),
while the dimension and the exponent gamma are floats with explicit error.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

from .errors import InvalidIFS, InvalidLetter, InvalidTolerance, NotContracting

Word = tuple  # tuple[int, ...] of letter indices


@dataclass(frozen=True)
class AffineMap:
    """The map ``t -> (p*t + r)/q``.  Coefficients are kept unreduced."""

    p: int
    q: int
    r: int

    def __post_init__(self):
        if self.q < 1:
            raise InvalidIFS(f"denominator must be positive, got {self.q}")

    def __call__(self, t):
        return Fraction(self.p * t + self.r) / self.q

    @property
    def ratio(self) -> float:
        return abs(self.p) / self.q

    @property
    def is_contraction(self) -> bool:
        return 0 < abs(self.p) < self.q

    def compose(self, other: "AffineMap") -> "AffineMap":
        """``self o other``, coefficient-wise and without reduction."""
        return AffineMap(self.p * other.p, self.q * other.q, self.p * other.r + self.r * other.q)

    def inverse(self, x):
        return Fraction(self.q * x - self.r) / self.p

    def fixed_point(self) -> Fraction:
        return Fraction(self.r, self.q - self.p)

    def image(self, lo, hi) -> "Interval":
        a, b = self(lo), self(hi)
        return Interval(min(a, b), max(a, b))


IDENTITY = AffineMap(1, 1, 0)


@dataclass(frozen=True)
class Interval:
    lo: Fraction
    hi: Fraction

    def __post_init__(self):
        object.__setattr__(self, "lo", Fraction(self.lo))
        object.__setattr__(self, "hi", Fraction(self.hi))
        if self.lo > self.hi:
            raise ValueError(f"empty interval [{self.lo}, {self.hi}]")

    @property
    def width(self) -> Fraction:
        return self.hi - self.lo

    @property
    def mid(self) -> Fraction:
        return (self.lo + self.hi) / 2

    def __contains__(self, x) -> bool:
        return self.lo <= x <= self.hi

    def contains_interval(self, other: "Interval") -> bool:
        return self.lo <= other.lo and other.hi <= self.hi

    def intersects(self, other: "Interval") -> bool:
        return self.lo <= other.hi and other.lo <= self.hi

    def __add__(self, other):
        if isinstance(other, Interval):
            return Interval(self.lo + other.lo, self.hi + other.hi)
        return Interval(self.lo + other, self.hi + other)

    def __sub__(self, other):
        if isinstance(other, Interval):
            return Interval(self.lo - other.hi, self.hi - other.lo)
        return Interval(self.lo - other, self.hi - other)

    def abs(self) -> "Interval":
        if self.lo >= 0:
            return self
        if self.hi <= 0:
            return Interval(-self.hi, -self.lo)
        return Interval(Fraction(0), max(-self.lo, self.hi))

    def __str__(self):
        return f"[{self.lo}, {self.hi}]"


def distance_bounds(a: Interval, b: Interval) -> Interval:
    """Enclosure of ``|x - y|`` over ``x in a``, ``y in b``."""
    gap = max(a.lo - b.hi, b.lo - a.hi, Fraction(0))
    far = max(a.hi - b.lo, b.hi - a.lo)
    return Interval(gap, far)


@dataclass(frozen=True)
class Unreduced:
    """A fraction kept exactly as produced, e.g. 2/8 for the point 1/4."""

    num: int
    den: int

    @property
    def value(self) -> Fraction:
        return Fraction(self.num, self.den)

    def __str__(self):
        return f"{self.num}/{self.den}"


def _primitive_root(word: tuple) -> tuple:
    n = len(word)
    for k in range(1, n + 1):
        if n % k == 0 and word[:k] * (n // k) == word:
            return word[:k]
    return word


@dataclass(frozen=True)
class EventuallyPeriodicWord:
    """``pre + per + per + ...``; ``per`` is never empty."""

    pre: tuple
    per: tuple

    def __post_init__(self):
        object.__setattr__(self, "pre", tuple(self.pre))
        object.__setattr__(self, "per", tuple(self.per))
        if not self.per:
            raise ValueError("period word must be nonempty")

    @property
    def n(self) -> int:
        return len(self.pre)

    @property
    def m(self) -> int:
        return len(self.per)

    def canonical(self) -> "EventuallyPeriodicWord":
        per = _primitive_root(self.per)
        pre = self.pre
        while pre and pre[-1] == per[-1]:
            pre = pre[:-1]
            per = per[-1:] + per[:-1]
        return EventuallyPeriodicWord(pre, per)

    def is_canonical(self) -> bool:
        return self.canonical() == self

    def __getitem__(self, i: int) -> int:
        if i < self.n:
            return self.pre[i]
        return self.per[(i - self.n) % self.m]

    def prefix(self, length: int) -> tuple:
        return tuple(self[i] for i in range(length))

    def format(self, letters: Sequence[str] | None = None) -> str:
        show = (lambda w: "".join(letters[a] for a in w)) if letters else (lambda w: "".join(map(str, w)))
        return f"{show(self.pre)}({show(self.per)})^inf"


@dataclass(frozen=True)
class RationalIFS:
    maps: tuple
    letters: tuple = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "maps", tuple(self.maps))
        if len(self.maps) < 2:
            raise InvalidIFS("an IFS needs at least two maps")
        for i, u in enumerate(self.maps):
            if not u.is_contraction:
                raise NotContracting(f"map {i} ({u.p} t + {u.r})/{u.q} is not a contraction")
        letters = tuple(str(s) for s in self.letters) or tuple(str(i) for i in range(len(self.maps)))
        if len(letters) != len(self.maps) or len(set(letters)) != len(letters):
            raise InvalidIFS("letters header must name each map exactly once")
        object.__setattr__(self, "letters", letters)

    def __len__(self):
        return len(self.maps)

    @property
    def ratios(self) -> list:
        return [u.ratio for u in self.maps]

    @property
    def q_max(self) -> int:
        return max(u.q for u in self.maps)

    @cached_property
    def hull(self) -> Interval:
        return hull(self)

    @cached_property
    def delta(self) -> float:
        return dimension(self)[0]

    @cached_property
    def gamma(self) -> float:
        return gamma(self)

    @cached_property
    def strong_separation(self) -> bool:
        return check_strong_separation(self)

    @property
    def open_set_condition_checked(self) -> bool:
        # Necessary condition only; strong separation is the sufficient one we verify.
        return sum(self.ratios) <= 1

    def check_word(self, word: Iterable[int]) -> tuple:
        word = tuple(word)
        k = len(self.maps)
        for a in word:
            if not (isinstance(a, int) and 0 <= a < k):
                raise InvalidLetter(f"letter {a!r} not in alphabet of size {k}")
        return word

    def parse_word(self, text: str) -> tuple:
        """Turn display letters into indices.  Accepts ``"02"`` or ``"0 2"``/``"0,2"``."""
        text = text.strip()
        if not text:
            return ()
        lookup = {s: i for i, s in enumerate(self.letters)}
        tokens = re.split(r"[\s,]+", text) if re.search(r"[\s,]", text) else list(text)
        try:
            return tuple(lookup[t] for t in tokens)
        except KeyError as exc:
            raise InvalidLetter(f"letter {exc.args[0]!r} not in alphabet {self.letters}") from None

    def show_word(self, word: Iterable[int]) -> str:
        return "".join(self.letters[a] for a in word)

    def to_text(self) -> str:
        lines = []
        if self.letters != tuple(str(i) for i in range(len(self.maps))):
            lines.append("letters: " + " ".join(self.letters))
        lines += [f"{u.p} {u.q} {u.r}" for u in self.maps]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "RationalIFS":
        maps, letters = [], ()
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if line.lower().startswith("letters:"):
                letters = tuple(line.split(":", 1)[1].split())
                continue
            parts = line.split()
            if len(parts) != 3:
                raise InvalidIFS(f"line {lineno}: expected 'p q r', got {raw!r}")
            try:
                p, q, r = (int(s) for s in parts)
            except ValueError:
                raise InvalidIFS(f"line {lineno}: non-integer coefficient in {raw!r}") from None
            maps.append(AffineMap(p, q, r))
        return cls(tuple(maps), letters)


def times_d_ifs(d: int, digits: Sequence[int]) -> RationalIFS:
    """The IFS ``t -> (t + e)/d`` for each digit ``e``."""
    return RationalIFS(tuple(AffineMap(1, d, e) for e in digits), tuple(str(e) for e in digits))


BUILTIN = {
    "cantor": "cantor.ifs",
    "third-quarter": "third_quarter.ifs",
}


def load_ifs(source: str | Path) -> RationalIFS:
    """Load an IFS spec file; bare names in ``BUILTIN`` resolve to packaged files."""
    path = Path(source)
    if not path.exists() and str(source) in BUILTIN:
        text = resources.files("fracapprox.data").joinpath(BUILTIN[str(source)]).read_text()
    else:
        text = path.read_text()
    return RationalIFS.from_text(text)


def cantor_ifs() -> RationalIFS:
    return load_ifs("cantor")


def compose(ifs: RationalIFS, word: Iterable[int]) -> AffineMap:
    """Coefficients of ``u_{w1} o ... o u_{wn}`` exactly as multiplied out."""
    acc = IDENTITY
    for a in ifs.check_word(word):
        acc = acc.compose(ifs.maps[a])
    return acc


def _solve2(a11, a12, a21, a22, b1, b2):
    det = a11 * a22 - a12 * a21
    if det == 0:
        return None
    return Fraction(b1 * a22 - a12 * b2, det), Fraction(a11 * b2 - a21 * b1, det)


def hull(ifs: RationalIFS) -> Interval:
    """Smallest closed interval mapped into itself by every map.

    The left endpoint is attained by one map and the right endpoint by one map,
    so every (left map, right map) pair gives a 2x2 linear system; the unique
    solution that satisfies both extremal equations is the hull.
    """
    maps = ifs.maps
    for u in maps:
        if not u.is_contraction:
            raise NotContracting(f"({u.p} t + {u.r})/{u.q}")
    for a in maps:
        for b in maps:
            # c*q_a - p_a*(c if p_a > 0 else d) = r_a ; d*q_b - p_b*(d if p_b > 0 else c) = r_b
            a11, a12 = (a.q - a.p, 0) if a.p > 0 else (a.q, -a.p)
            a21, a22 = (0, b.q - b.p) if b.p > 0 else (-b.p, b.q)
            sol = _solve2(a11, a12, a21, a22, a.r, b.r)
            if sol is None:
                continue
            c, d = sol
            if c > d:
                continue
            images = [u.image(c, d) for u in maps]
            if min(iv.lo for iv in images) == c and max(iv.hi for iv in images) == d:
                return Interval(c, d)
    raise NotContracting("no invariant interval found")  # unreachable for contractions


def hutchinson_root(ratios: Sequence[float], tol: float = 1e-12):
    """Bisection for ``sum(r**s) = 1``.  Returns ``(root, error_bound, iterations)``."""
    if not tol > 0:
        raise InvalidTolerance(f"tolerance must be positive, got {tol}")
    ratios = list(ratios)
    if len(ratios) < 2:
        raise InvalidTolerance("need at least two ratios")

    def f(s):
        return math.fsum(r**s for r in ratios) - 1.0

    lo, hi = 0.0, 1.0
    while f(hi) > 0:
        lo, hi = hi, 2 * hi
    iterations = 0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if f(mid) > 0:
            lo = mid
        else:
            hi = mid
        iterations += 1
    return 0.5 * (lo + hi), 0.5 * (hi - lo), iterations


def dimension(ifs: RationalIFS, tol: float = 1e-12):
    """Similarity dimension ``(delta, err)``; equals the Hausdorff dimension under OSC."""
    delta, err, _ = hutchinson_root(ifs.ratios, tol)
    return delta, err


def gamma(ifs: RationalIFS) -> float:
    return max(math.log(abs(u.p)) / math.log(u.q) for u in ifs.maps)


def check_strong_separation(ifs: RationalIFS) -> bool:
    h = ifs.hull
    images = sorted((u.image(h.lo, h.hi) for u in ifs.maps), key=lambda iv: (iv.lo, iv.hi))
    return all(left.hi < right.lo for left, right in zip(images, images[1:]))


def eval_eventually_periodic(ifs: RationalIFS, w: EventuallyPeriodicWord) -> Unreduced:
    """Evaluate ``pre (per)^inf`` as ``u_pre(F)`` with ``F`` the fixed point of ``u_per``.

    Numerator and denominator are added "the usual way" and never reduced, so
    the denominator is ``q_pre * (q_per - p_per)``.
    """
    u1 = compose(ifs, w.pre)
    u2 = compose(ifs, w.per)
    f_den = u2.q - u2.p
    num = u1.p * u2.r + u1.r * f_den
    return Unreduced(num, u1.q * f_den)


def cylinder(ifs: RationalIFS, word: Iterable[int]) -> Interval:
    h = ifs.hull
    return compose(ifs, word).image(h.lo, h.hi)


def point_enclosure(ifs: RationalIFS, stream, depth: int) -> Interval:
    if depth < 0:
        raise ValueError("depth must be nonnegative")
    return cylinder(ifs, stream.take(0, depth))
