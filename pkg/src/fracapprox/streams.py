"""Seekable symbol streams standing for points of a limit set.

All randomness comes from numpy's PCG64 bit generator seeded through
``SeedSequence([seed, *keys])`` (tagged ``PRNG_NAME`` in run manifests).
Random streams draw fixed-size blocks so that symbol ``i`` depends only on
the seed, never on how the stream was read.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence

import numpy as np

from .ifs import EventuallyPeriodicWord

PRNG_NAME = "numpy-PCG64/SeedSequence-v1"
BLOCK = 4096


def make_rng(seed: int, *keys: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), *map(int, keys)])))


class DigitStream:
    """Infinite, restartable sequence of symbols; ``stream[i]`` is symbol i+1 of the word."""

    exact_word: EventuallyPeriodicWord | None = None

    def take(self, start: int, stop: int) -> tuple:
        raise NotImplementedError

    def __getitem__(self, i: int):
        return self.take(i, i + 1)[0]

    def array(self, length: int) -> np.ndarray:
        return np.asarray(self.take(0, length), dtype=np.int64)


class PeriodicStream(DigitStream):
    def __init__(self, pre: Sequence, per: Sequence):
        self.word = EventuallyPeriodicWord(tuple(pre), tuple(per))
        self.exact_word = self.word

    def take(self, start, stop):
        return tuple(self.word[i] for i in range(start, stop))

    def __repr__(self):
        return f"PeriodicStream({list(self.word.pre)}, {list(self.word.per)})"


class RandomStream(DigitStream):
    """I.i.d. symbols drawn from ``symbols`` (uniform unless ``weights`` given)."""

    def __init__(self, symbols: Sequence, seed: int, weights: Sequence[float] | None = None, key: int = 0):
        self.symbols = tuple(symbols)
        self.seed = int(seed)
        self.weights = None if weights is None else np.asarray(weights, dtype=float)
        self._rng = make_rng(self.seed, key)
        self._buf = np.empty(0, dtype=np.int64)
        self._lookup = np.asarray(self.symbols)

    def _extend(self, n: int):
        k = len(self.symbols)
        chunks = [self._buf]
        have = len(self._buf)
        while have < n:
            if self.weights is None:
                idx = self._rng.integers(0, k, size=BLOCK)
            else:
                idx = self._rng.choice(k, size=BLOCK, p=self.weights)
            chunks.append(self._lookup[idx])
            have += BLOCK
        self._buf = np.concatenate(chunks)

    def take(self, start, stop):
        if stop > len(self._buf):
            self._extend(stop)
        return tuple(int(s) for s in self._buf[start:stop])

    def array(self, length):
        if length > len(self._buf):
            self._extend(length)
        return self._buf[:length].copy()

    def __repr__(self):
        return f"RandomStream(symbols={list(self.symbols)}, seed={self.seed})"


def rational_stream(ifs, x) -> PeriodicStream:
    """Stream of the (unique) coding of a rational point of a strongly separated IFS."""
    from .coding import code_rational

    coded = code_rational(ifs, Fraction(x))
    return PeriodicStream(coded.word.pre, coded.word.per)


def parse_stream(spec: str, ifs) -> DigitStream:
    """``periodic:PRE:PER`` (display letters), ``rational:P/Q`` or ``random:SEED``."""
    kind, _, rest = spec.partition(":")
    if kind == "periodic":
        pre, sep, per = rest.partition(":")
        if not sep:
            raise ValueError(f"periodic stream needs PRE:PER, got {spec!r}")
        return PeriodicStream(ifs.parse_word(pre), ifs.parse_word(per))
    if kind == "rational":
        return rational_stream(ifs, Fraction(rest))
    if kind == "random":
        return RandomStream(range(len(ifs)), int(rest))
    raise ValueError(f"unknown stream spec {spec!r}")
