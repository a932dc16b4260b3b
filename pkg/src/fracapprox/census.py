"""Exhaustive enumeration of reduced rationals in the middle-thirds Cantor set.

Two independent enumerators:

* ``brute_census`` walks every reduced p/q in a denominator bucket
  ``3**(n-1) <= q < 3**n`` and tests ternary digits by long division;
* ``divisor_census`` builds rationals from digit blocks, using that a purely
  periodic block of primitive length m has reduced denominator dividing
  ``3**m - 1``.

Shards are independent and are merged in canonical (q, p) order, so output
never depends on the worker count.
"""

from __future__ import annotations

import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from datetime import datetime, timezone
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .arith import FactorCache, divisor_count, divisors, ramanujan_ratio
from .coding import code_rational
from .errors import InvalidArgument
from .ifs import EventuallyPeriodicWord, cantor_ifs
from .streams import make_rng
from .timesd import TimesDSet, member, period

CANTOR = TimesDSet(3, (0, 2))
HEURISTIC_K = 2 / math.log(1.5)
PREFILTER_DIGITS = 40
DEFAULT_SHARD = 729


@dataclass(frozen=True)
class CensusRecord:
    p: int
    q: int
    n: int
    r: int
    m: int
    q_int: int
    word: EventuallyPeriodicWord
    terminating: bool

    @property
    def value(self) -> Fraction:
        return Fraction(self.p, self.q)

    @property
    def ratio(self) -> float | None:
        return self.m / math.log(self.q) if self.q >= 2 else None

    def to_json(self) -> str:
        ratio = self.ratio
        return json.dumps(
            {
                "p": self.p,
                "q": self.q,
                "n": self.n,
                "r": self.r,
                "m": self.m,
                "q_int": self.q_int,
                "ratio": None if ratio is None else round(ratio, 12),
                "word": _show_word(self.word),
                "terminating": self.terminating,
            },
            separators=(",", ":"),
        )

    @classmethod
    def from_json(cls, line: str) -> "CensusRecord":
        d = json.loads(line)
        pre, per = d["word"].split("(")
        digit = {"0": 0, "2": 1}
        word = EventuallyPeriodicWord(tuple(digit[c] for c in pre), tuple(digit[c] for c in per.rstrip(")")))
        return cls(d["p"], d["q"], d["n"], d["r"], d["m"], d["q_int"], word, d["terminating"])


def _show_word(w: EventuallyPeriodicWord) -> str:
    show = lambda part: "".join("02"[a] for a in part)  # noqa: E731
    return f"{show(w.pre)}({show(w.per)})"


def bucket(q: int) -> int:
    """The n with ``3**(n-1) <= q < 3**n``."""
    n, power = 1, 3
    while q >= power:
        n += 1
        power *= 3
    return n


def make_record(p: int, q: int) -> CensusRecord:
    x = Fraction(p, q)
    r, m = period(3, x)
    coded = code_rational(cantor_ifs(), x)
    terminating = q == 3**r
    return CensusRecord(x.numerator, x.denominator, bucket(x.denominator), r, m, coded.q_int, coded.word, terminating)


# --- brute force ---------------------------------------------------------------


def _members_in_range(q_lo: int, q_hi: int) -> list:
    """Reduced p/q in the Cantor set with q_lo <= q < q_hi, sorted by (q, p)."""
    found = []
    if q_lo <= 1 < q_hi:
        found += [(0, 1), (1, 1)]
        q_lo = 2
    if q_lo >= q_hi:
        return found
    qs = np.arange(q_lo, q_hi, dtype=np.int64)
    counts = qs - 1
    q = np.repeat(qs, counts)
    starts = np.cumsum(counts) - counts
    p = np.arange(len(q), dtype=np.int64) - np.repeat(starts, counts) + 1
    keep = np.gcd(p, q) == 1
    p, q = p[keep], q[keep]
    rem = p.copy()
    decided = []
    for _ in range(PREFILTER_DIGITS):
        if p.size == 0:
            break
        rem *= 3
        digit = rem // q
        rem -= digit * q
        # a final digit 1 is fine: ...1 = ...0222...
        ok = (digit != 1) | (rem == 0)
        done = ok & (rem == 0)
        decided.append(np.stack([p[done], q[done]], axis=1))
        live = ok & ~done
        p, q, rem = p[live], q[live], rem[live]
    pairs = [tuple(map(int, row)) for block in decided for row in block]
    pairs += [(int(a), int(b)) for a, b in zip(p, q) if member(CANTOR, Fraction(int(a), int(b)))]
    return found + sorted(pairs, key=lambda t: (t[1], t[0]))


def _shard_job(args):
    q_lo, q_hi = args
    return [make_record(p, q).to_json() for p, q in _members_in_range(q_lo, q_hi)]


def bucket_shards(n: int, shard_size: int = DEFAULT_SHARD) -> list:
    lo, hi = 3 ** (n - 1), 3**n
    return [(a, min(a + shard_size, hi)) for a in range(lo, hi, shard_size)]


@dataclass
class CensusRun:
    records: list
    complete: bool
    shards_done: int
    shards_total: int


def _shard_name(n, q_lo, q_hi):
    return f"n{n:02d}-q{q_lo:08d}-{q_hi:08d}"


def _load_shard(directory: Path, name: str):
    ck = directory / f"{name}.json"
    data = directory / f"{name}.jsonl"
    if not (ck.exists() and data.exists()):
        return None
    meta = json.loads(ck.read_text())
    lines = data.read_text().splitlines()
    if not meta.get("complete") or meta.get("records") != len(lines):
        return None
    return lines


def _save_shard(directory: Path, name: str, n, q_lo, q_hi, lines):
    directory.mkdir(parents=True, exist_ok=True)
    (directory / f"{name}.jsonl").write_text("".join(line + "\n" for line in lines))
    meta = {
        "shard": {"n": n, "q_lo": q_lo, "q_hi": q_hi},
        "records": len(lines),
        "complete": True,
        "version": __version__,
        "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
    }
    (directory / f"{name}.json").write_text(json.dumps(meta, indent=1, sort_keys=True) + "\n")


def brute_census(
    n: int,
    threads: int = 1,
    checkpoint_dir: str | Path | None = None,
    resume_dir: str | Path | None = None,
    budget_seconds: float | None = None,
    shard_size: int = DEFAULT_SHARD,
) -> CensusRun:
    """All of S_n by exhaustive search, sharded over q-ranges.

    Completed shards found in ``resume_dir`` are reused; new shards are
    checkpointed to ``checkpoint_dir``.  When ``budget_seconds`` runs out the
    remaining shards are skipped and ``complete`` is False.
    """
    if n < 1:
        raise InvalidArgument("n must be >= 1")
    shards = bucket_shards(n, shard_size)
    results: dict = {}
    resume = Path(resume_dir) if resume_dir else None
    ckdir = Path(checkpoint_dir) if checkpoint_dir else None
    todo = []
    for q_lo, q_hi in shards:
        name = _shard_name(n, q_lo, q_hi)
        lines = _load_shard(resume, name) if resume else None
        if lines is not None:
            results[(q_lo, q_hi)] = lines
            if ckdir and ckdir != resume:
                _save_shard(ckdir, name, n, q_lo, q_hi, lines)
        else:
            todo.append((q_lo, q_hi))

    start = time.monotonic()

    def over_budget():
        return budget_seconds is not None and time.monotonic() - start > budget_seconds

    def record(shard, lines):
        results[shard] = lines
        if ckdir:
            _save_shard(ckdir, _shard_name(n, *shard), n, shard[0], shard[1], lines)

    if threads > 1 and len(todo) > 1:
        with ProcessPoolExecutor(max_workers=threads) as ex:
            futures = {}
            pending = list(todo)
            while pending or futures:
                while pending and len(futures) < threads and not over_budget():
                    shard = pending.pop(0)
                    futures[shard] = ex.submit(_shard_job, shard)
                if not futures:
                    break
                shard = next(iter(futures))
                record(shard, futures.pop(shard).result())
    else:
        for shard in todo:
            if over_budget():
                break
            record(shard, _shard_job(shard))

    lines = [line for shard in shards if shard in results for line in results[shard]]
    records = [CensusRecord.from_json(line) for line in lines]
    return CensusRun(records, len(results) == len(shards), len(results), len(shards))


# --- divisor / block enumeration ------------------------------------------------


def _ternary_block_ok(b: int, m: int) -> bool:
    for _ in range(m):
        b, e = divmod(b, 3)
        if e == 1:
            return False
    return True


def _primitive_divisors(m: int, cache: FactorCache, q_bound: int) -> list:
    """Divisors t <= q_bound of 3**m - 1 with multiplicative order of 3 mod t exactly m."""
    N = 3**m - 1
    ds = divisors(N, cache.factors(m))
    lower = [3 ** (m // p) - 1 for p in _prime_factors(m)]
    return [t for t in ds if t <= q_bound and all(L % t for L in lower) and (t > 1 or m == 1)]


def _prime_factors(m: int) -> list:
    out, k, p = [], m, 2
    while p * p <= k:
        if k % p == 0:
            out.append(p)
            while k % p == 0:
                k //= p
        p += 1
    if k > 1:
        out.append(k)
    return out


def periodic_blocks(m: int, q_bound: int, cache: FactorCache | None = None) -> list:
    """Blocks b in {0,2}-digits of primitive length m with ``b/(3**m-1)`` of denominator <= q_bound."""
    cache = cache or FactorCache()
    N = 3**m - 1
    out = []
    for t in _primitive_divisors(m, cache, q_bound):
        step = N // t
        ks = (0, 1) if t == 1 else (k for k in range(1, t) if math.gcd(k, t) == 1)
        out += [k * step for k in ks if _ternary_block_ok(k * step, m)]
    return sorted(out)


def _prefix_blocks(r: int) -> list:
    blocks = [0]
    for _ in range(r):
        blocks = [3 * a + e for a in blocks for e in (0, 2)]
    return blocks


def divisor_census(max_period: int, max_preperiod: int, q_bound: int, cache: FactorCache | None = None) -> list:
    """Cantor rationals of primitive period <= M and preperiod <= R with reduced q <= q_bound."""
    if max_period < 1 or max_preperiod < 0:
        raise InvalidArgument("need max_period >= 1 and max_preperiod >= 0")
    cache = cache or FactorCache()
    values = set()
    for m in range(1, max_period + 1):
        N = 3**m - 1
        bs = periodic_blocks(m, q_bound, cache)
        for r in range(max_preperiod + 1):
            den = 3**r * N
            for a in _prefix_blocks(r):
                for b in bs:
                    x = Fraction(a * N + b, den)
                    if x.denominator <= q_bound:
                        values.add(x)
    return [make_record(x.numerator, x.denominator) for x in sorted(values, key=lambda v: (v.denominator, v.numerator))]


def block_census(max_period: int, max_preperiod: int, q_bound: int) -> list:
    """Literal enumeration of all blocks in E^r x E^m; exponential, for cross-checks only."""
    values = set()
    for m in range(1, max_period + 1):
        N = 3**m - 1
        for b in _prefix_blocks(m):
            if _primitive_len(b, m) != m:
                continue
            for r in range(max_preperiod + 1):
                for a in _prefix_blocks(r):
                    x = Fraction(a * N + b, 3**r * N)
                    if x.denominator <= q_bound:
                        values.add(x)
    return sorted(values, key=lambda v: (v.denominator, v.numerator))


def _primitive_len(b: int, m: int) -> int:
    digits = []
    for _ in range(m):
        b, e = divmod(b, 3)
        digits.append(e)
    digits = tuple(reversed(digits))
    for k in range(1, m + 1):
        if m % k == 0 and digits[:k] * (m // k) == digits:
            return k
    return m


# --- diagnostics ----------------------------------------------------------------


@dataclass(frozen=True)
class SnK:
    count_SnK: int
    count_Sn: int
    exceptions: list


def census_SnK(records, K: float) -> SnK:
    """Split a bucket into period <= K log q and the exceptions.

    Denominator-1 entries (0 and 1) have no period constraint and always count.
    """
    inside, exceptions = 0, []
    for rec in records:
        if rec.q == 1 or rec.m <= K * math.log(rec.q):
            inside += 1
        else:
            exceptions.append(rec)
    return SnK(inside, len(records), exceptions)


SUMMARY_COLUMNS = [
    "n", "count", "count_without_endpoints", "log2_count_over_n", "max_ratio", "argmax",
    "K", "count_SnK", "exceptions",
]


def conjecture_diagnostics(records_by_n: dict, K: float = HEURISTIC_K) -> tuple:
    """Per-bucket growth, worst period ratio and exceptions at ``K``.

    Returns ``(rows, exceptions)``; ``exceptions`` maps n to its exception records.
    """
    rows, exceptions = [], {}
    for n in sorted(records_by_n):
        recs = records_by_n[n]
        snk = census_SnK(recs, K)
        ratios = [(rec.ratio, rec.q, rec.p) for rec in recs if rec.ratio is not None]
        best = max(ratios) if ratios else None
        count = len(recs)
        rows.append(
            {
                "n": n,
                "count": count,
                "count_without_endpoints": sum(1 for rec in recs if rec.q > 1),
                "log2_count_over_n": round(math.log2(count) / n, 12) if count else None,
                "max_ratio": round(best[0], 12) if best else None,
                "argmax": f"{best[2]}/{best[1]}" if best else None,
                "K": round(K, 12),
                "count_SnK": snk.count_SnK,
                "exceptions": len(snk.exceptions),
            }
        )
        exceptions[n] = snk.exceptions
    return rows, exceptions


def ramanujan_sweep(m_max: int, cache: FactorCache | None = None) -> list:
    """``(m, N, tau(N), ratio)`` for ``N = 3**m - 1``; ratio is None when log log N <= 0."""
    cache = cache or FactorCache()
    rows = []
    for m in range(1, m_max + 1):
        N = 3**m - 1
        tau = divisor_count(N, cache.factors(m))
        ratio = ramanujan_ratio(N, tau) if N > math.e else None
        rows.append((m, N, tau, ratio))
    return rows


def heuristic_model_sim(m_max: int, trials: int, seed: int, chunk: int = 250_000) -> list:
    """Frequency of uniform ternary blocks of length m avoiding the digit 1, vs (2/3)**m."""
    rows = []
    if trials < 1:
        return rows
    for m in range(1, m_max + 1):
        rng = make_rng(seed, m)
        hits, done = 0, 0
        while done < trials:
            size = min(chunk, trials - done)
            blocks = rng.integers(0, 3, size=(size, m), dtype=np.int8)
            hits += int(np.all(blocks != 1, axis=1).sum())
            done += size
        p = (2 / 3) ** m
        freq = hits / trials
        se = math.sqrt(p * (1 - p) / trials)
        z = (freq - p) / se
        rows.append({"m": m, "trials": trials, "freq": freq, "expected": p, "stderr": se, "z": z, "within_4sigma": abs(z) <= 4})
    return rows
