"""Symbolic coding of rationals, intrinsic denominators and pseudolength."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .errors import InvalidArgument, NotInLimitSet, PeriodicityUndetected
from .ifs import EventuallyPeriodicWord, RationalIFS, eval_eventually_periodic


@dataclass(frozen=True)
class CodedRational:
    value: Fraction
    word: EventuallyPeriodicWord
    q_int: int
    q_red: int
    orbit_length: int

    @property
    def divides(self) -> bool:
        return self.q_int % self.q_red == 0


def default_max_steps(x: Fraction) -> int:
    return 10 * Fraction(x).denominator + 1000


def code_rational(ifs: RationalIFS, x, max_steps: int | None = None) -> CodedRational:
    """Follow inverse branches from ``x`` until a state repeats.

    Each step picks the unique map whose hull image contains the current point
    and replaces the point by its preimage.  Requires strong separation so the
    branch is unambiguous.
    """
    if not ifs.strong_separation:
        raise InvalidArgument("symbolic coding requires the strong separation condition")
    x = Fraction(x)
    if max_steps is None:
        max_steps = default_max_steps(x)
    h = ifs.hull
    images = [u.image(h.lo, h.hi) for u in ifs.maps]
    seen: dict = {}
    letters: list = []
    state = x
    for step in range(max_steps + 1):
        if state in seen:
            i = seen[state]
            word = EventuallyPeriodicWord(letters[:i], letters[i:]).canonical()
            return CodedRational(x, word, intrinsic_denominator(ifs, word), x.denominator, len(seen))
        seen[state] = step
        branch = next((a for a, iv in enumerate(images) if state in iv), None)
        if branch is None:
            raise NotInLimitSet(f"{x} is not in the limit set (orbit left the images at step {step})", letters)
        letters.append(branch)
        state = ifs.maps[branch].inverse(state)
    raise PeriodicityUndetected(f"no repeated state for {x} within {max_steps} steps")


def intrinsic_denominator(ifs: RationalIFS, w: EventuallyPeriodicWord) -> int:
    return eval_eventually_periodic(ifs, w.canonical()).den


def pseudolength(ifs: RationalIFS, word) -> float:
    return math.fsum(math.log(ifs.maps[a].q) for a in ifs.check_word(word))
