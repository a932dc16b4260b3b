"""Integer factorization, divisor counts and multiplicative orders."""

from __future__ import annotations

import json
import math
import os
from functools import lru_cache
from pathlib import Path

from .errors import FactorizationIncomplete, InvalidArgument

TRIAL_LIMIT = 10**6
_MR_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41)
# The bases above are a deterministic Miller-Rabin witness set below this bound.
_MR_DETERMINISTIC = 3317044064679887385961981


def _small_primes(limit: int) -> list:
    sieve = bytearray([1]) * (limit + 1)
    sieve[0:2] = b"\x00\x00"
    for i in range(2, int(limit**0.5) + 1):
        if sieve[i]:
            sieve[i * i :: i] = bytearray(len(range(i * i, limit + 1, i)))
    return [i for i in range(limit + 1) if sieve[i]]


@lru_cache(maxsize=1)
def small_primes() -> list:
    return _small_primes(TRIAL_LIMIT)


def _strong_probable_prime(n: int, a: int) -> bool:
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    x = pow(a, d, n)
    if x in (1, n - 1):
        return True
    for _ in range(s - 1):
        x = x * x % n
        if x == n - 1:
            return True
    return False


def _jacobi(a: int, n: int) -> int:
    a %= n
    result = 1
    while a:
        while a % 2 == 0:
            a //= 2
            if n % 8 in (3, 5):
                result = -result
        a, n = n, a
        if a % 4 == 3 and n % 4 == 3:
            result = -result
        a %= n
    return result if n == 1 else 0


def _strong_lucas_probable_prime(n: int) -> bool:
    # Selfridge parameters: first D in 5, -7, 9, -11, ... with (D/n) = -1.
    if math.isqrt(n) ** 2 == n:
        return False
    D = 5
    while True:
        j = _jacobi(D, n)
        if j == -1:
            break
        if j == 0 and abs(D) != n:
            return False
        D = -D - 2 if D > 0 else -D + 2
    P, Q = 1, (1 - D) // 4
    d, s = n + 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    inv2 = (n + 1) // 2

    U, V, Qk = 1, P, Q % n
    for bit in bin(d)[3:]:
        U, V = U * V % n, (V * V - 2 * Qk) % n
        Qk = Qk * Qk % n
        if bit == "1":
            U, V = (P * U + V) * inv2 % n, (D * U + P * V) * inv2 % n
            Qk = Qk * Q % n
    if U == 0 or V == 0:
        return True
    for _ in range(s - 1):
        V = (V * V - 2 * Qk) % n
        Qk = Qk * Qk % n
        if V == 0:
            return True
    return False


def is_prime(n: int) -> bool:
    """Deterministic Miller-Rabin below 3.3e24, Baillie-PSW above."""
    if n < 2:
        return False
    for p in _MR_BASES:
        if n % p == 0:
            return n == p
    if n < _MR_DETERMINISTIC:
        return all(_strong_probable_prime(n, a) for a in _MR_BASES)
    return _strong_probable_prime(n, 2) and _strong_lucas_probable_prime(n)


def pollard_rho_brent(n: int, max_iter: int = 10**7) -> int | None:
    """A nontrivial factor of composite odd ``n``, or None if the budget runs out."""
    if n % 2 == 0:
        return 2
    spent = 0
    for c in range(1, 50):
        y, r, q, g = 2, 1, 1, 1
        m = 128
        x = ys = y
        while g == 1:
            x = y
            for _ in range(r):
                y = (y * y + c) % n
            k = 0
            while k < r and g == 1:
                ys = y
                for _ in range(min(m, r - k)):
                    y = (y * y + c) % n
                    q = q * abs(x - y) % n
                g = math.gcd(q, n)
                k += m
            r *= 2
            spent += r
            if spent > max_iter:
                return None
        if g == n:
            g = 1
            while g == 1:
                ys = (ys * ys + c) % n
                g = math.gcd(abs(x - ys), n)
        if g != n:
            return g
    return None


def factorize(n: int, max_iter: int = 10**7) -> dict:
    """Prime factorization ``{p: e}``; trial division to 1e6, then Pollard-Brent rho."""
    if n < 1:
        raise InvalidArgument(f"cannot factor {n}")
    factors: dict = {}
    for p in small_primes():
        if p * p > n:
            break
        while n % p == 0:
            factors[p] = factors.get(p, 0) + 1
            n //= p
    if n == 1:
        return dict(sorted(factors.items()))
    stack = [n]
    while stack:
        m = stack.pop()
        if m == 1:
            continue
        if m <= TRIAL_LIMIT * TRIAL_LIMIT or is_prime(m):
            # Anything left below 1e12 after trial division to 1e6 is prime.
            factors[m] = factors.get(m, 0) + 1
            continue
        f = pollard_rho_brent(m, max_iter)
        if f is None:
            rest = m
            for other in stack:
                rest *= other
            raise FactorizationIncomplete(f"Pollard rho budget exhausted on {m}", dict(sorted(factors.items())), rest)
        stack += [f, m // f]
    return dict(sorted(factors.items()))


def divisor_count(n: int, factors: dict | None = None) -> int:
    if n < 1:
        raise InvalidArgument(f"divisor count needs n >= 1, got {n}")
    factors = factors if factors is not None else factorize(n)
    return math.prod(e + 1 for e in factors.values())


def divisors(n: int, factors: dict | None = None) -> list:
    factors = factors if factors is not None else factorize(n)
    out = [1]
    for p, e in factors.items():
        out = [d * p**k for d in out for k in range(e + 1)]
    return sorted(out)


def ramanujan_ratio(n: int, tau: int | None = None) -> float:
    """``log tau(n) * log log n / log n``; its limsup is log 2."""
    if n <= math.e:
        raise InvalidArgument(f"log log n must be positive; got n = {n}")
    tau = tau if tau is not None else divisor_count(n)
    ln = math.log(n)
    return math.log(tau) * math.log(ln) / ln


def euler_phi(factors: dict) -> int:
    return math.prod((p - 1) * p ** (e - 1) for p, e in factors.items())


def carmichael_lambda(factors: dict) -> int:
    lam = 1
    for p, e in factors.items():
        if p == 2:
            v = 1 if e == 1 else 2 if e == 2 else 2 ** (e - 2)
        else:
            v = (p - 1) * p ** (e - 1)
        lam = lam * v // math.gcd(lam, v)
    return lam


def multiplicative_order(a: int, n: int) -> int:
    """Order of ``a`` modulo ``n`` (``n >= 1``, gcd(a, n) = 1); the order modulo 1 is 1."""
    if n < 1:
        raise InvalidArgument(f"modulus must be positive, got {n}")
    if n == 1:
        return 1
    if math.gcd(a, n) != 1:
        raise InvalidArgument(f"{a} is not invertible modulo {n}")
    order = carmichael_lambda(factorize(n))
    for p in factorize(order):
        while order % p == 0 and pow(a, order // p, n) == 1:
            order //= p
    return order


class FactorCache:
    """JSON-backed cache of factorizations of ``base**m - 1``."""

    def __init__(self, path: str | Path | None = None, base: int = 3):
        self.base = base
        self.path = Path(path) if path else None
        self._data: dict = {}
        if self.path and self.path.exists():
            raw = json.loads(self.path.read_text())
            self._data = {int(m): {int(p): e for p, e in f.items()} for m, f in raw.get(str(base), {}).items()}

    def factors(self, m: int) -> dict:
        if m not in self._data:
            self._data[m] = self._factor_cyclotomic(m)
            self._save()
        return self._data[m]

    def _factor_cyclotomic(self, m: int) -> dict:
        # base**m - 1 = prod over k | m of Phi_k(base); factor the pieces separately.
        out: dict = {}
        for k in divisors(m):
            for p, e in factorize(_cyclotomic_value(k, self.base)).items():
                out[p] = out.get(p, 0) + e
        return dict(sorted(out.items()))

    def _save(self):
        if not self.path:
            return
        self.path.parent.mkdir(parents=True, exist_ok=True)
        existing = {}
        if self.path.exists():
            existing = json.loads(self.path.read_text())
        existing[str(self.base)] = {str(m): {str(p): e for p, e in f.items()} for m, f in sorted(self._data.items())}
        tmp = self.path.with_suffix(".tmp")
        tmp.write_text(json.dumps(existing, sort_keys=True))
        os.replace(tmp, self.path)


def _mobius(n: int) -> int:
    f = factorize(n)
    if any(e > 1 for e in f.values()):
        return 0
    return -1 if len(f) % 2 else 1


@lru_cache(maxsize=None)
def _cyclotomic_value(k: int, base: int) -> int:
    # Phi_k(b) = prod_{d | k} (b**d - 1)**mu(k/d)
    num, den = 1, 1
    for d in divisors(k):
        mu = _mobius(k // d)
        if mu == 1:
            num *= base**d - 1
        elif mu == -1:
            den *= base**d - 1
    return num // den
