from fractions import Fraction

import pytest
from hypothesis import settings

from fracapprox.ifs import AffineMap, RationalIFS, cantor_ifs, load_ifs

settings.register_profile("default", max_examples=150, deadline=None)
settings.load_profile("default")


@pytest.fixture(scope="session")
def cantor():
    return cantor_ifs()


@pytest.fixture(scope="session")
def tq():
    # u0 = t/3, u1 = t/4 + 3/4
    return load_ifs("third-quarter")


def ternary_digits(x: Fraction, count: int):
    """Long-division oracle: first ``count`` base-3 digits of x in [0, 1)."""
    out, num, den = [], x.numerator, x.denominator
    for _ in range(count):
        num *= 3
        out.append(num // den)
        num %= den
    return out
