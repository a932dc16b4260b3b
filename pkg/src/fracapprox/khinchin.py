"""Series criteria and Monte Carlo experiments for Khinchin-type statements.

Approximation functions come from the family ``psi(q) = A * q**a * log(q)**b``
(defined for q >= 2; smaller arguments are clamped to 2), for which every
series here has a closed-form verdict.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import InvalidArgument, InvalidMeasure, UndefinedSeries
from .ifs import RationalIFS
from .streams import RandomStream, make_rng

CONVERGES, DIVERGES, UNDECIDED = "Converges", "Diverges", "Undecided"
ZERO, FULL = "Zero", "Full"
TRACE_POINTS = (10, 100, 1000, 10**4, 10**5, 10**6)


@dataclass(frozen=True)
class PsiFamily:
    A: float = 1.0
    a: float = 0.0
    b: float = 0.0

    def __post_init__(self):
        if not self.A > 0:
            raise InvalidArgument(f"A must be positive, got {self.A}")

    @classmethod
    def parse(cls, text: str) -> "PsiFamily":
        A, a, b = (float(s) for s in text.split(","))
        return cls(A, a, b)

    @classmethod
    def log_power(cls, s: float) -> "PsiFamily":
        """``psi(q) = log(q)**s``."""
        return cls(1.0, 0.0, s)

    def __call__(self, q):
        q = np.maximum(np.asarray(q, dtype=float), 2.0)
        return self.A * q**self.a * np.log(q) ** self.b

    def log_psi(self, q):
        q = np.maximum(np.asarray(q, dtype=float), 2.0)
        return math.log(self.A) + self.a * np.log(q) + self.b * np.log(np.log(q))

    def Psi(self, t):
        """``-log psi(e**t)`` with ``t`` clamped to ``log 2``."""
        t = np.maximum(np.asarray(t, dtype=float), math.log(2.0))
        return -(math.log(self.A) + self.a * t + self.b * np.log(t))

    def Psi_d(self, n, d: int):
        """``-log_d psi(d**n)``."""
        t = np.asarray(n, dtype=float) * math.log(d)
        return self.Psi(t) / math.log(d)

    @property
    def slowly_varying(self) -> bool:
        return self.a == 0

    @property
    def bounded(self) -> bool:
        return self.a < 0 or (self.a == 0 and self.b <= 0)

    @property
    def eventually_below_one(self) -> bool:
        return self.a < 0 or (self.a == 0 and (self.b < 0 or self.A < 1))

    def __str__(self):
        return f"{self.A:g}*q^{self.a:g}*log(q)^{self.b:g}"


@dataclass(frozen=True)
class DimensionFunction:
    s: float

    def __post_init__(self):
        if not self.s > 0:
            raise InvalidArgument("dimension function exponent must be positive")

    def __call__(self, t):
        return np.asarray(t, dtype=float) ** self.s


@dataclass(frozen=True)
class SeriesVerdict:
    verdict: str
    trace: tuple = field(default=())  # (index, partial sum)


def _trace(terms: np.ndarray, start: int, points) -> tuple:
    sums = np.cumsum(terms)
    return tuple((p, float(sums[p - start])) for p in points if p - start < len(sums))


def _partial_sums(term: Callable, q_max: int = 10**6) -> tuple:
    q = np.arange(2, q_max + 1, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        t = term(q)
    t = np.where(np.isfinite(t), t, 0.0)
    return _trace(t, 2, TRACE_POINTS)


def _badly_verdict(psi: PsiFamily, delta: float) -> str:
    # term ~ q**(delta*a - 1) * log(q)**(1 + delta*b)
    if delta * psi.a != 0:
        return CONVERGES if psi.a < 0 else DIVERGES
    return CONVERGES if 1 + delta * psi.b < -1 else DIVERGES


def classify_series_badly(psi, delta: float, q_max: int = 10**6) -> SeriesVerdict:
    """Convergence of ``sum log(q) psi(q)**delta / q``."""
    if not 0 < delta <= 1:
        raise InvalidArgument(f"delta must be in (0, 1], got {delta}")
    trace = _partial_sums(lambda q: np.log(q) * np.asarray(psi(q), dtype=float) ** delta / q, q_max)
    verdict = _badly_verdict(psi, delta) if isinstance(psi, PsiFamily) else UNDECIDED
    return SeriesVerdict(verdict, trace)


def classify_series_well(psi, delta: float, q_max: int = 10**6) -> SeriesVerdict:
    """Convergence of ``sum log(q) psi(q)**delta / (q |log psi(q)|)``."""
    if not 0 < delta <= 1:
        raise InvalidArgument(f"delta must be in (0, 1], got {delta}")
    if isinstance(psi, PsiFamily) and not psi.eventually_below_one:
        raise UndefinedSeries(f"log psi(q) is not eventually negative for psi = {psi}")

    def term(q):
        p = np.asarray(psi(q), dtype=float)
        return np.log(q) * p**delta / (q * np.abs(np.log(p)))

    trace = _partial_sums(term, q_max)
    if not isinstance(psi, PsiFamily):
        return SeriesVerdict(UNDECIDED, trace)
    if psi.a != 0:
        verdict = CONVERGES  # a < 0 here: polynomial decay
    elif psi.b == 0:
        verdict = DIVERGES  # constant psi < 1: terms ~ log(q)/q
    else:
        # term ~ log(q)**(1 + delta*b) / (q * |b| * log log q)
        verdict = CONVERGES if 1 + delta * psi.b < -1 else DIVERGES
    return SeriesVerdict(verdict, trace)


def lsv_series(psi: PsiFamily, f: DimensionFunction, d: int, delta: float, n_max: int = 100) -> SeriesVerdict:
    """``sum_n f(psi(d**n)/d**n) * d**(n*delta)``: Zero if it converges, Full if it diverges."""
    n = np.arange(1, n_max + 1, dtype=float)
    ln_d = math.log(d)
    # log of each term, to keep divergent cases finite
    logt = f.s * (psi.log_psi(np.exp(n * ln_d)) - n * ln_d) + n * delta * ln_d
    with np.errstate(over="ignore"):
        trace = _trace(np.exp(logt), 1, [k for k in (1, 10, 20, 50, 100) if k <= n_max])
    rate = psi.a * f.s - f.s + delta
    if rate != 0:
        verdict = ZERO if rate < 0 else FULL
    else:
        verdict = ZERO if psi.b * f.s < -1 else FULL
    return SeriesVerdict(verdict, trace)


# --- longest previous factor via suffix array -------------------------------


def suffix_array(s: np.ndarray) -> np.ndarray:
    """Prefix-doubling suffix array of an integer sequence."""
    s = np.asarray(s)
    n = len(s)
    if n == 0:
        return np.empty(0, dtype=np.int64)
    _, rank = np.unique(s, return_inverse=True)
    rank = rank.astype(np.int64)
    k = 1
    while True:
        second = np.full(n, -1, dtype=np.int64)
        second[: n - k] = rank[k:] if k < n else second[:0]
        sa = np.lexsort((second, rank))
        r1, r2 = rank[sa], second[sa]
        new = np.empty(n, dtype=np.int64)
        new[sa] = np.concatenate(([0], np.cumsum((r1[1:] != r1[:-1]) | (r2[1:] != r2[:-1]))))
        rank = new
        if rank.max() == n - 1 or k >= n:
            return sa
        k *= 2


def lcp_array(s, sa) -> list:
    """``lcp[r]`` = common prefix length of suffixes sa[r-1] and sa[r] (lcp[0] = 0)."""
    s = list(s)
    n = len(s)
    rank = [0] * n
    for r, p in enumerate(sa):
        rank[p] = r
    lcp = [0] * n
    h = 0
    for i in range(n):
        r = rank[i]
        if r > 0:
            j = sa[r - 1]
            while i + h < n and j + h < n and s[i + h] == s[j + h]:
                h += 1
            lcp[r] = h
            if h:
                h -= 1
        else:
            h = 0
    return lcp


def longest_previous_factor(s) -> tuple:
    """For each j, the longest L with ``s[i:i+L] == s[j:j+L]`` for some i < j, and that i.

    Occurrences may overlap.  Returns ``(lengths, sources)``; sources are -1 when L = 0.
    """
    s = np.asarray(s)
    n = len(s)
    sa = [int(p) for p in suffix_array(s)]
    lcp = lcp_array(s, sa)
    best_len = [0] * n
    best_src = [-1] * n
    for order, neighbor_lcp in ((range(n), lambda r: lcp[r]), (range(n - 1, -1, -1), lambda r: lcp[r + 1] if r + 1 < n else 0)):
        stack: list = []  # [text position, lcp with the entry above it]
        for r in order:
            p = sa[r]
            cur = neighbor_lcp(r) if stack else 0
            while stack and stack[-1][0] > p:
                stack.pop()
                if stack:
                    cur = min(cur, stack[-1][1])
            if stack:
                if cur > best_len[p] or (cur == best_len[p] and cur > 0 and stack[-1][0] < best_src[p]):
                    best_len[p], best_src[p] = cur, stack[-1][0]
                stack[-1][1] = cur
            stack.append([p, 0])
    return np.asarray(best_len, dtype=np.int64), np.asarray(best_src, dtype=np.int64)


@dataclass(frozen=True)
class Violation:
    start: int  # 0-based start of the later occurrence
    source: int  # 0-based start of an earlier occurrence
    length: int
    excess: float


def _excess_profile(ifs: RationalIFS, letters: np.ndarray, psi: PsiFamily):
    logq = np.log(np.array([u.q for u in ifs.maps], dtype=float))
    P = np.concatenate(([0.0], np.cumsum(logq[letters])))
    L, src = longest_previous_factor(letters)
    j = np.arange(len(letters))
    excess = P[j + L] - P[j] - psi.Psi(P[j])
    excess = np.where(L > 0, excess, -np.inf)
    return L, src, excess


def repeat_scan_self(ifs: RationalIFS, omega, depth: int, psi: PsiFamily, K: float):
    """Repeats in the first ``depth`` symbols whose pseudolength beats ``K + Psi``.

    For a repeat of length r whose later copy starts at j the excess is
    ``pseudolength(repeat) - Psi(pseudolength(omega[:j]))``; at fixed j it is
    largest for the longest previous factor, so one violation per start j is
    reported.  Returns ``(violations, max_excess)``.
    """
    if depth < 2:
        raise InvalidArgument("depth must be >= 2")
    letters = np.asarray(omega.take(0, depth), dtype=np.int64)
    L, src, excess = _excess_profile(ifs, letters, psi)
    hits = np.flatnonzero(excess > K)
    violations = [Violation(int(j), int(src[j]), int(L[j]), float(excess[j])) for j in hits]
    finite = excess[np.isfinite(excess)]
    return violations, (float(finite.max()) if finite.size else -math.inf)


def max_excess_by_depth(ifs: RationalIFS, letters: np.ndarray, psi: PsiFamily, depths) -> list:
    """Max excess for each prefix depth, from one scan at the largest depth."""
    L, _, _ = _excess_profile(ifs, letters, psi)
    logq = np.log(np.array([u.q for u in ifs.maps], dtype=float))
    P = np.concatenate(([0.0], np.cumsum(logq[letters])))
    out = []
    for D in depths:
        j = np.arange(D)
        Lt = np.minimum(L[:D], D - j)
        ex = np.where(Lt > 0, P[j + Lt] - P[j] - psi.Psi(P[j]), -np.inf)
        out.append(float(ex.max()) if np.isfinite(ex).any() else -math.inf)
    return out


# --- Monte Carlo ---------------------------------------------------------------


def natural_weights(ifs: RationalIFS) -> np.ndarray:
    """Letter probabilities ``ratio_a ** delta`` of the natural measure."""
    w = np.array(ifs.ratios) ** ifs.delta
    if abs(w.sum() - 1.0) > 1e-9:
        raise InvalidMeasure(f"letter weights sum to {w.sum():.12g}, not 1")
    return w / w.sum()


@dataclass(frozen=True)
class ProbabilityEstimate:
    freq: float
    bound: float
    stderr: float
    trials: int
    horizon: int

    @property
    def within(self) -> bool:
        return self.freq <= self.bound + 3 * self.stderr


def mc_repeat_probability(ifs: RationalIFS, n: int, m: int, l0: float, trials: int, seed: int, chunk: int = 100_000) -> ProbabilityEstimate:
    """Frequency of a repeat ``w[n:n+r] == w[n+m:n+m+r]`` with pseudolength >= l0."""
    if trials < 1:
        raise InvalidArgument("trials must be >= 1")
    if not l0 > 0 or m < 1 or n < 0:
        raise InvalidArgument("need l0 > 0, m >= 1, n >= 0")
    weights = natural_weights(ifs)
    logq = np.log(np.array([u.q for u in ifs.maps], dtype=float))
    r_max = math.ceil(l0 / logq.min() - 1e-12)
    horizon = n + m + r_max + 1
    rng = make_rng(seed, n, m, 0)
    hits = 0
    done = 0
    tol = 1e-9 * max(1.0, l0)
    while done < trials:
        size = min(chunk, trials - done)
        X = rng.choice(len(weights), size=(size, horizon), p=weights)
        a, b = X[:, n : n + r_max], X[:, n + m : n + m + r_max]
        matched = np.cumprod(a == b, axis=1).astype(bool)
        plen = np.cumsum(logq[a], axis=1)
        hits += int(np.any(matched & (plen >= l0 - tol), axis=1).sum())
        done += size
    freq = hits / trials
    return ProbabilityEstimate(freq, math.exp(-ifs.delta * l0), math.sqrt(freq * (1 - freq) / trials), trials, horizon)


def _trial_excess(args):
    ifs, psi, seed, i, depths = args
    stream = RandomStream(range(len(ifs)), seed, weights=natural_weights(ifs), key=i)
    letters = stream.array(max(depths))
    return max_excess_by_depth(ifs, letters, psi, depths)


def mc_khinchin_experiment(ifs: RationalIFS, psi: PsiFamily, trials: int, depths, seed: int, threads: int = 1) -> dict:
    """Max-excess distribution over seeded streams at each depth.

    Returns ``{"per_trial": [[trial, depth, max_excess], ...], "summary": [...]}``;
    summary rows hold quantiles and the change in median from the previous depth.
    """
    depths = sorted(int(d) for d in ([depths] if isinstance(depths, int) else depths))
    if not depths or depths[0] < 2:
        raise InvalidArgument("depths must be >= 2")
    jobs = [(ifs, psi, seed, i, depths) for i in range(trials)]
    if threads > 1 and trials > 1:
        with ProcessPoolExecutor(max_workers=threads) as ex:
            results = list(ex.map(_trial_excess, jobs, chunksize=max(1, trials // (4 * threads))))
    else:
        results = [_trial_excess(j) for j in jobs]
    per_trial = [[i, D, ex] for i, row in enumerate(results) for D, ex in zip(depths, row)]
    summary = []
    prev_median = None
    for k, D in enumerate(depths):
        vals = np.array([row[k] for row in results]) if results else np.array([])
        if vals.size == 0:
            continue
        q = np.quantile(vals, [0.0, 0.25, 0.5, 0.75, 1.0])
        median = float(q[2])
        summary.append(
            {
                "depth": D,
                "trials": int(vals.size),
                "min": float(q[0]),
                "q25": float(q[1]),
                "median": median,
                "q75": float(q[3]),
                "max": float(q[4]),
                "median_change": (median - prev_median) if prev_median is not None else 0.0,
            }
        )
        prev_median = median
    return {"per_trial": per_trial, "summary": summary}
