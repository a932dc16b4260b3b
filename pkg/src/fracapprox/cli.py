"""Command-line entry point: ``fracapprox <command> ...``.

Every command prints JSON (one object per line) to stdout.  With ``--out DIR``
the same results are also written as files together with ``manifest.json``.
Exit codes: 0 ok, 1 domain error (JSON on stderr), 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import os
import sys
from datetime import datetime, timezone
from fractions import Fraction
from pathlib import Path

from . import __version__, census, coding, dirichlet, khinchin, timesd
from .arith import FactorCache
from .errors import FracApproxError, InvalidArgument
from .ifs import load_ifs
from .streams import PRNG_NAME, RandomStream, parse_stream


def _jsonable(v):
    if isinstance(v, Fraction):
        return f"{v.numerator}/{v.denominator}"
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, float) and not math.isfinite(v):
        return str(v)
    return v


def _dumps(obj) -> str:
    return json.dumps(_jsonable(obj), sort_keys=True, separators=(",", ":"))


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


class Run:
    """Collects stdout lines and output files for one invocation."""

    def __init__(self, args, argv):
        self.args = args
        self.argv = list(argv)
        self.lines: list = []
        self.files: dict = {}  # path -> text
        self.ifs_text: str | None = None
        self.started = datetime.now(timezone.utc)

    def emit(self, obj):
        self.lines.append(_dumps(obj))

    def file(self, name: str, text: str):
        if self.args.out:
            self.files[str(Path(self.args.out) / name)] = text

    def extra_file(self, path, text: str):
        if path:
            self.files[str(path)] = text

    def ifs(self, source):
        ifs = load_ifs(source)
        self.ifs_text = ifs.to_text()
        return ifs

    def finish(self, stdout):
        for line in self.lines:
            print(line, file=stdout)
        digests = {}
        for path, text in self.files.items():
            p = Path(path)
            p.parent.mkdir(parents=True, exist_ok=True)
            p.write_text(text)
            digests[path] = hashlib.sha256(text.encode()).hexdigest()
        if self.args.out:
            manifest = {
                "version": __version__,
                "argv": self.argv,
                "seed": self.args.seed,
                "prng": PRNG_NAME,
                "threads": self.args.threads,
                "ifs_sha256": hashlib.sha256(self.ifs_text.encode()).hexdigest() if self.ifs_text else None,
                "started": self.started.isoformat(timespec="seconds"),
                "finished": datetime.now(timezone.utc).isoformat(timespec="seconds"),
                "outputs": digests,
            }
            out = Path(self.args.out)
            out.mkdir(parents=True, exist_ok=True)
            (out / "manifest.json").write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n")


# --- commands -------------------------------------------------------------------


def cmd_ifs_info(run: Run):
    ifs = run.ifs(run.args.ifs)
    info = {
        "maps": [[u.p, u.q, u.r] for u in ifs.maps],
        "letters": list(ifs.letters),
        "hull": [ifs.hull.lo, ifs.hull.hi],
        "delta": ifs.delta,
        "gamma": ifs.gamma,
        "q_max": ifs.q_max,
        "strong_separation": ifs.strong_separation,
        "open_set_condition_checked": ifs.open_set_condition_checked,
    }
    run.emit(info)
    run.file("ifs_info.json", _dumps(info) + "\n")


def cmd_dirichlet(run: Run):
    a = run.args
    ifs = run.ifs(a.ifs)
    stream = parse_stream(a.stream, ifs)
    results = dirichlet.dirichlet_scan(ifs, stream, a.Q, a.lookahead)
    rows = dirichlet.scan_rows(ifs, results)
    for res, row in zip(results, rows):
        d = dict(zip(dirichlet.SCAN_COLUMNS, row))
        d["word"] = res.word.format(ifs.letters)
        run.emit(d)
    text = _csv_text(dirichlet.SCAN_COLUMNS, rows)
    run.file("dirichlet.csv", text)
    run.extra_file(a.csv, text)


def cmd_code(run: Run):
    a = run.args
    ifs = run.ifs(a.ifs)
    c = coding.code_rational(ifs, a.rational, a.max_steps)
    out = {
        "x": c.value,
        "word": c.word.format(ifs.letters),
        "q_int": c.q_int,
        "q_red": c.q_red,
        "divides": c.divides,
        "orbit_length": c.orbit_length,
    }
    run.emit(out)
    run.file("code.json", _dumps(out) + "\n")


def cmd_expand(run: Run):
    a = run.args
    ex = timesd.expand_rational(a.d, a.rational)
    out = {"x": a.rational, "d": a.d, "expansion": ex.format(), "r": ex.r, "m": ex.m, "terminating": ex.terminating}
    if ex.dual is not None:
        out["dual"] = ex.dual.format()
    run.emit(out)
    run.file("expand.json", _dumps(out) + "\n")


def cmd_member(run: Run):
    a = run.args
    J = timesd.TimesDSet.parse(a.set)
    out = {"set": str(J), "x": a.rational, "member": timesd.member(J, a.rational)}
    run.emit(out)
    run.file("member.json", _dumps(out) + "\n")


def cmd_translate_scan(run: Run):
    a = run.args
    J = timesd.TimesDSet.parse(a.set)
    x = RandomStream(J.E, a.seed)
    hits = timesd.scan_translate_rationals(J, x, a.qbound, a.depth)
    rows = [[h.p, h.q, h.status] for h in hits]
    for h in hits:
        run.emit({"p": h.p, "q": h.q, "status": h.status})
    text = _csv_text(["p", "q", "status"], rows)
    run.file("translate_scan.csv", text)
    run.extra_file(a.csv, text)


def cmd_khinchin_classify(run: Run):
    a = run.args
    psi = khinchin.PsiFamily.parse(a.psi)
    out = {"psi": str(psi), "delta": a.delta}
    out["badly"] = khinchin.classify_series_badly(psi, a.delta).verdict
    try:
        out["well"] = khinchin.classify_series_well(psi, a.delta).verdict
    except FracApproxError as e:
        out["well"] = e.to_dict()
    if a.d is not None:
        out["lsv"] = khinchin.lsv_series(psi, khinchin.DimensionFunction(a.s), a.d, a.delta).verdict
    run.emit(out)
    run.file("classify.json", _dumps(out) + "\n")


def _depths(text: str) -> list:
    return [int(t) for t in text.split(",") if t]


def cmd_khinchin_mc(run: Run):
    a = run.args
    ifs = run.ifs(a.ifs)
    psi = khinchin.PsiFamily.parse(a.psi)
    res = khinchin.mc_khinchin_experiment(ifs, psi, a.trials, _depths(a.depth), a.seed, a.threads)
    for row in res["summary"]:
        run.emit(row)
    run.file("per_trial.csv", _csv_text(["trial", "depth", "max_excess"], res["per_trial"]))
    if res["summary"]:
        cols = list(res["summary"][0])
        text = _csv_text(cols, [[row[c] for c in cols] for row in res["summary"]])
        run.file("summary.csv", text)
        run.extra_file(a.csv, text)


def cmd_khinchin_prob(run: Run):
    a = run.args
    ifs = run.ifs(a.ifs)
    est = khinchin.mc_repeat_probability(ifs, a.n, a.m, a.l0, a.trials, a.seed)
    out = {
        "n": a.n, "m": a.m, "l0": a.l0, "trials": est.trials, "horizon": est.horizon,
        "freq": est.freq, "bound": est.bound, "stderr": est.stderr, "within": est.within,
    }
    run.emit(out)
    run.file("probability.json", _dumps(out) + "\n")


def _records_text(records) -> str:
    return "".join(rec.to_json() + "\n" for rec in records)


def cmd_census_brute(run: Run):
    a = run.args
    ckdir = Path(a.out) / "checkpoints" if a.out else None
    res = census.brute_census(a.n, a.threads, ckdir, a.resume, a.budget)
    run.file("records.jsonl", _records_text(res.records))
    summary = {
        "n": a.n, "count": len(res.records), "complete": res.complete,
        "shards_done": res.shards_done, "shards_total": res.shards_total,
    }
    run.emit(summary)
    if not res.complete:
        run.finish(sys.stdout)
        raise census_budget_error(summary)


def census_budget_error(summary):
    from .errors import BudgetExceeded

    return BudgetExceeded(f"budget exhausted after {summary['shards_done']} of {summary['shards_total']} shards")


def cmd_census_divisor(run: Run):
    a = run.args
    recs = census.divisor_census(a.max_period, a.max_preperiod, a.qbound, FactorCache(a.cache))
    run.file("records.jsonl", _records_text(recs))
    run.emit({"max_period": a.max_period, "max_preperiod": a.max_preperiod, "qbound": a.qbound, "count": len(recs)})


def cmd_census_diag(run: Run):
    a = run.args
    by_n = {n: census.brute_census(n, a.threads).records for n in range(1, a.n_max + 1)}
    rows, exceptions = census.conjecture_diagnostics(by_n, a.K)
    for row in rows:
        run.emit(row)
    cols = census.SUMMARY_COLUMNS
    run.file("summary.csv", _csv_text(cols, [[row[c] for c in cols] for row in rows]))
    run.file("exceptions.jsonl", "".join(rec.to_json() + "\n" for n in sorted(exceptions) for rec in exceptions[n]))
    run.file("records.jsonl", "".join(_records_text(by_n[n]) for n in sorted(by_n)))


def cmd_census_heuristic(run: Run):
    a = run.args
    rows = census.heuristic_model_sim(a.m_max, a.trials, a.seed)
    for row in rows:
        run.emit(row)
    if rows:
        cols = list(rows[0])
        run.file("heuristic.csv", _csv_text(cols, [[row[c] for c in cols] for row in rows]))


def cmd_census_ramanujan(run: Run):
    a = run.args
    rows = census.ramanujan_sweep(a.m_max, FactorCache(a.cache))
    for m, N, tau, ratio in rows:
        run.emit({"m": m, "N": str(N), "tau": tau, "ratio": ratio})
    run.file("ramanujan.csv", _csv_text(["m", "N", "tau", "ratio"], rows))


# --- parser ---------------------------------------------------------------------


def _rational(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as e:
        raise argparse.ArgumentTypeError(f"not a rational: {text!r}") from e


def _int_expr(text: str) -> int:
    """Integers, also written as ``b^e``."""
    base, caret, exp = text.partition("^")
    try:
        return int(base) ** int(exp) if caret else int(text)
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from e


def _int_list(text: str) -> list:
    return [_int_expr(t) for t in text.split(",") if t]


def _psi_float(text: str) -> float:
    # accepts plain floats and multiples of log 3 such as "4log3"
    if text.endswith("log3"):
        k = text[: -len("log3")] or "1"
        return float(k) * math.log(3)
    return float(text)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="64-bit seed for all randomness")
    common.add_argument("--out", help="directory for output files and manifest.json")
    common.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    common.add_argument("--config", help="JSON file of option defaults")

    parser = argparse.ArgumentParser(prog="fracapprox", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(subs, name, func, **kw):
        p = subs.add_parser(name, parents=[common], **kw)
        p.set_defaults(func=func)
        return p

    ifs_p = sub.add_parser("ifs", help="IFS properties")
    ifs_sub = ifs_p.add_subparsers(dest="action", required=True)
    p = add(ifs_sub, "info", cmd_ifs_info)
    p.add_argument("--ifs", required=True, help="IFS file or builtin name (cantor, third-quarter)")

    p = add(sub, "dirichlet", cmd_dirichlet, help="Dirichlet-type approximation of a stream")
    p.add_argument("--ifs", required=True)
    p.add_argument("--stream", required=True, help="periodic:PRE:PER | rational:P/Q | random:SEED")
    p.add_argument("--Q", type=_int_list, required=True, help="budget(s), comma separated, e.g. 3^5,3^6")
    p.add_argument("--lookahead", type=int, default=dirichlet.DEFAULT_LOOKAHEAD)
    p.add_argument("--csv")

    p = add(sub, "code", cmd_code, help="symbolic coding of a rational")
    p.add_argument("--ifs", required=True)
    p.add_argument("--rational", type=_rational, required=True)
    p.add_argument("--max-steps", type=int)

    p = add(sub, "expand", cmd_expand, help="base-d expansion of a rational")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--rational", type=_rational, required=True)

    p = add(sub, "member", cmd_member, help="membership in a times-d invariant set")
    p.add_argument("--set", required=True, help="e.g. d=3,E=0,2")
    p.add_argument("--rational", type=_rational, required=True)

    p = add(sub, "translate-scan", cmd_translate_scan, help="rationals in J - x for a seeded random x")
    p.add_argument("--set", required=True)
    p.add_argument("--qbound", type=int, required=True)
    p.add_argument("--depth", type=int, required=True)
    p.add_argument("--csv")

    kh = sub.add_parser("khinchin", help="Khinchin-type series and experiments")
    kh_sub = kh.add_subparsers(dest="action", required=True)
    p = add(kh_sub, "classify", cmd_khinchin_classify)
    p.add_argument("--psi", required=True, help="A,a,b for psi(q) = A q^a (log q)^b")
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--d", type=int, help="also classify the base-d Hausdorff-measure series")
    p.add_argument("--s", type=float, default=1.0, help="dimension function exponent for --d")
    p = add(kh_sub, "mc", cmd_khinchin_mc)
    p.add_argument("--ifs", required=True)
    p.add_argument("--psi", required=True)
    p.add_argument("--trials", type=int, required=True)
    p.add_argument("--depth", required=True, help="depth or comma separated depths")
    p.add_argument("--csv")
    p = add(kh_sub, "prob", cmd_khinchin_prob)
    p.add_argument("--ifs", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--l0", type=_psi_float, required=True, help="float, or a multiple like 4log3")
    p.add_argument("--trials", type=int, required=True)

    ce = sub.add_parser("census", help="rationals in the middle-thirds Cantor set")
    ce_sub = ce.add_subparsers(dest="action", required=True)
    p = add(ce_sub, "brute", cmd_census_brute)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--resume")
    p.add_argument("--budget", type=float, help="wall-clock seconds")
    p = add(ce_sub, "divisor", cmd_census_divisor)
    p.add_argument("--max-period", type=int, required=True)
    p.add_argument("--max-preperiod", type=int, required=True)
    p.add_argument("--qbound", type=_int_expr, required=True)
    p.add_argument("--cache", help="JSON factorization cache")
    p = add(ce_sub, "diag", cmd_census_diag)
    p.add_argument("--n-max", type=int, required=True)
    p.add_argument("--K", type=float, default=census.HEURISTIC_K)
    p = add(ce_sub, "heuristic", cmd_census_heuristic)
    p.add_argument("--m-max", type=int, required=True)
    p.add_argument("--trials", type=int, required=True)
    p = add(ce_sub, "ramanujan", cmd_census_ramanujan)
    p.add_argument("--m-max", type=int, required=True)
    p.add_argument("--cache")
    return parser


def _apply_config(parser, argv):
    """Options from ``--config`` (a JSON object) fill in flags missing from argv."""
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    config = pre.parse_known_args(argv)[0].config
    if not config:
        return parser.parse_args(argv)
    try:
        defaults = json.loads(Path(config).read_text())
    except (OSError, ValueError) as e:
        parser.error(f"cannot read config {config}: {e}")
    extra = []
    for key, value in defaults.items():
        flag = "--" + key.replace("_", "-")
        if key in ("Q", "K"):
            flag = "--" + key
        if any(a == flag or a.startswith(flag + "=") for a in argv):
            continue
        if isinstance(value, list):
            value = ",".join(map(str, value))
        extra += [flag, str(value)]
    return parser.parse_args(argv + extra)


def main(argv=None, stdout=None, stderr=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    if not argv:
        parser.print_usage(stderr)
        return 2
    try:
        args = _apply_config(parser, argv)
    except SystemExit as e:
        return int(e.code) if e.code is not None else 0
    if args.threads < 1:
        print(_dumps(InvalidArgument("threads must be >= 1").to_dict()), file=stderr)
        return 1
    run = Run(args, argv)
    try:
        args.func(run)
    except FracApproxError as e:
        print(_dumps(e.to_dict()), file=stderr)
        return 1
    except ValueError as e:
        print(_dumps({"error": "InvalidArgument", "message": str(e)}), file=stderr)
        return 1
    run.finish(stdout)
    return 0


if __name__ == "__main__":
    sys.exit(main())
