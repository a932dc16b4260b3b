"""Constructive Dirichlet-type approximation by rationals inside the limit set.

Given a point (as a symbol stream) and a denominator budget Q, look at the
orbit points pi(sigma^n omega), n = 0..N with N = floor(log_{q_max} Q), pick
the closest pair (n, n+m), and return the eventually periodic point
``omega_1^n (omega_{n+1}^{n+m})^inf``.  Its unreduced denominator never
exceeds Q.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable

from .errors import BudgetTooSmall, InvalidArgument
from .ifs import (
    EventuallyPeriodicWord,
    Interval,
    RationalIFS,
    Unreduced,
    compose,
    cylinder,
    distance_bounds,
    eval_eventually_periodic,
)

DEFAULT_LOOKAHEAD = 32
DEFAULT_CAP = 512


@dataclass(frozen=True)
class ApproximationResult:
    Q: int
    N: int
    word: EventuallyPeriodicWord
    unreduced: Unreduced
    error: Interval  # encloses |x - p/q|
    lookahead: int
    quality: float  # measured K, normalized by the unreduced q
    quality_Q: float  # same bound normalized by Q instead of q

    @property
    def approximant(self) -> Fraction:
        return self.unreduced.value

    @property
    def unreduced_q(self) -> int:
        return self.unreduced.den

    @property
    def n(self) -> int:
        return self.word.n

    @property
    def m(self) -> int:
        return self.word.m


def budget_depth(q_max: int, Q: int) -> int:
    """Largest N with q_max**N <= Q."""
    N, power = 0, q_max
    while power <= Q:
        N += 1
        power *= q_max
    return N


def _bound_scale(ifs: RationalIFS, q: int, Q: int) -> float:
    return q ** (ifs.gamma - 1.0) * math.log(Q) ** (-1.0 / ifs.delta)


def approximation_quality(res: ApproximationResult, ifs: RationalIFS) -> float:
    """Upper bound of |x - p/q| divided by ``q**(gamma-1) * log(Q)**(-1/delta)``."""
    if res.error.hi == 0:
        return 0.0
    return float(res.error.hi) / _bound_scale(ifs, res.unreduced_q, res.Q)


def _pair_denominator(ifs: RationalIFS, prefix: tuple, n: int, m: int) -> int:
    u1 = compose(ifs, prefix[:n])
    u2 = compose(ifs, prefix[n : n + m])
    return u1.q * (u2.q - u2.p)


def closest_pair(enclosures: list, allowed=None):
    """Pair ``(n, m)`` minimizing the distance upper bound; ties by smallest n then m.

    Returns ``(n, m, bounds, ambiguous)`` where ``ambiguous`` says another pair
    might still be truly closer.
    """
    best = None
    rows = []
    N = len(enclosures) - 1
    for n in range(N):
        for m in range(1, N - n + 1):
            if allowed is not None and not allowed(n, m):
                continue
            b = distance_bounds(enclosures[n], enclosures[n + m])
            rows.append((n, m, b))
            if best is None or b.hi < best[2].hi:
                best = (n, m, b)
    if best is None:
        return None
    ambiguous = any(b.lo < best[2].hi for n, m, b in rows if (n, m) != best[:2])
    return best[0], best[1], best[2], ambiguous


def dirichlet_approximate(
    ifs: RationalIFS,
    x,
    Q: int,
    lookahead: int = DEFAULT_LOOKAHEAD,
    cap: int = DEFAULT_CAP,
) -> ApproximationResult:
    if lookahead < 1:
        raise InvalidArgument("lookahead must be >= 1")
    if Q < ifs.q_max:
        raise BudgetTooSmall(f"Q = {Q} is below q_max = {ifs.q_max}")
    N = budget_depth(ifs.q_max, Q)
    prefix = tuple(x.take(0, N))
    # Negative slopes make q_(2) - p_(2) exceed q_(2); such pairs are screened exactly.
    needs_screen = any(u.p < 0 for u in ifs.maps)
    allowed = (lambda n, m: _pair_denominator(ifs, prefix, n, m) <= Q) if needs_screen else None

    L = lookahead
    while True:
        encl = [cylinder(ifs, x.take(n, n + L)) for n in range(N + 1)]
        found = closest_pair(encl, allowed)
        if found is None:
            raise BudgetTooSmall(f"no orbit pair has intrinsic denominator <= {Q}")
        n, m, _, ambiguous = found
        if not ambiguous or L >= cap:
            break
        L = min(2 * L, cap)

    word = EventuallyPeriodicWord(prefix[:n], prefix[n : n + m])
    value = eval_eventually_periodic(ifs, word)
    assert value.den <= Q
    exact = getattr(x, "exact_word", None)
    if exact is not None:
        xv = eval_eventually_periodic(ifs, exact).value
        d = abs(xv - value.value)
        err = Interval(d, d)
    else:
        err = distance_bounds(cylinder(ifs, x.take(0, N + L)), Interval(value.value, value.value))
    q = value.den
    quality = 0.0 if err.hi == 0 else float(err.hi) / _bound_scale(ifs, q, Q)
    quality_Q = 0.0 if err.hi == 0 else float(err.hi) / _bound_scale(ifs, Q, Q)
    return ApproximationResult(Q, N, word, value, err, L, quality, quality_Q)


def dirichlet_scan(ifs: RationalIFS, x, Q_list: Iterable[int], lookahead: int = DEFAULT_LOOKAHEAD) -> list:
    Q_list = list(Q_list)
    if any(a > b for a, b in zip(Q_list, Q_list[1:])):
        raise InvalidArgument("Q_list must be ascending")
    return [dirichlet_approximate(ifs, x, Q, lookahead) for Q in Q_list]


SCAN_COLUMNS = ["Q", "N", "n", "m", "p", "q", "p_red", "q_red", "err_lo", "err_hi", "K_q", "K_Q", "lookahead"]


def scan_rows(ifs: RationalIFS, results: Iterable[ApproximationResult]) -> list:
    rows = []
    for r in results:
        red = r.approximant
        rows.append(
            [
                r.Q, r.N, r.n, r.m, r.unreduced.num, r.unreduced.den, red.numerator, red.denominator,
                f"{float(r.error.lo):.17g}", f"{float(r.error.hi):.17g}",
                f"{r.quality:.17g}", f"{r.quality_Q:.17g}", r.lookahead,
            ]
        )
    return rows


def write_scan_csv(path, ifs: RationalIFS, results) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SCAN_COLUMNS)
        w.writerows(scan_rows(ifs, results))
