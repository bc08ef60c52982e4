"""Command-line front end.

    roommates exact --n 8 --route both
    roommates integral --type "2^1,4^1"
    roommates enumerate --n 12 --family even
    roommates verify --n 6 --mode mc --samples 1000000 --seed 1
    roommates mc --n 8 --samples 100000 --seed 7

Exit codes: 0 success, 2 usage error, 3 resource limit, 4 verification failure.
"""

from __future__ import annotations

import argparse
import datetime as dt
import logging
import sys
import time
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from . import __version__
from .cache import IntegralCache, default_cache_dir
from .cycletype import (
    CycleFamily,
    CycleType,
    count_permutations,
    even_cycle_sign_exponent,
    factor_count,
    family_members,
    family_size_predicted,
)
from .oracle import DEFAULT_SOLVABLE_MAX_N, exhaustive_p, mc_count
from .polyint import DEFAULT_TERM_LIMIT, ResourceLimitExceeded
from .report import (
    dumps_json,
    exact_value,
    per_type_csv,
    per_type_text,
    probability_report,
    term_record,
    to_decimal,
)
from .stability import ProbabilityError, RouteMismatch, compute_integral, p_n

log = logging.getLogger("roommates")

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_RESOURCE = 3
EXIT_CONTRADICTION = 4

DEFAULT_MAX_N = 12


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    n: int | None = None
    route: str = "direct"
    strategy: str = "auto"
    threads: int = 1
    cache_dir: Path | None = None
    term_limit: int = DEFAULT_TERM_LIMIT
    decimals: int = 20
    seed: int = 1
    samples: int = 100_000
    output_format: str = "text"
    cycle_type: str | None = None
    family: str | None = None
    mode: str = "exhaustive"
    sigma: float = 4.0
    max_n: int = DEFAULT_MAX_N
    allow_large_n: bool = False

    def __post_init__(self):
        if self.decimals < 1:
            raise UsageError("--decimals must be >= 1")
        if self.threads < 1:
            raise UsageError("--threads must be >= 1")
        if self.term_limit < 1:
            raise UsageError("--term-limit must be >= 1")

    def cache(self) -> IntegralCache | None:
        return None if self.cache_dir is None else IntegralCache(self.cache_dir)


def _now() -> str:
    return dt.datetime.now(dt.timezone.utc).isoformat(timespec="seconds")


def _emit(report: dict, text: str, rows: list[dict] | None, cfg: RunConfig, out) -> None:
    if cfg.output_format == "json":
        out.write(dumps_json(report))
    elif cfg.output_format == "csv":
        out.write(per_type_csv(rows or []))
    else:
        out.write(text)


def _check_exact_n(cfg: RunConfig) -> None:
    if cfg.n is None or cfg.n < 2:
        raise UsageError("--n must be at least 2")
    if cfg.n > cfg.max_n and not cfg.allow_large_n:
        raise UsageError(f"n={cfg.n} exceeds --max-n {cfg.max_n}; pass --allow-large-n to proceed")


def cmd_exact(cfg: RunConfig, out=sys.stdout) -> int:
    _check_exact_n(cfg)
    started = _now()
    code = EXIT_OK
    try:
        res = p_n(cfg.n, cfg.route, cache=cfg.cache(), strategy=cfg.strategy,
                  term_limit=cfg.term_limit, threads=cfg.threads)
    except RouteMismatch as exc:
        log.error("%s", exc)
        res, code = exc.partial, EXIT_CONTRADICTION
    except ProbabilityError as exc:
        log.error("%s", exc)
        res, code = exc.partial, EXIT_RESOURCE
    volatile = {
        "started": started,
        "finished": _now(),
        "elapsed_s": round(res.elapsed_s, 6),
        "cache_hits": [str(t.cycle_type) for t in res.per_type.values() if t.cached],
        "engine": __version__,
    }
    report = probability_report(res, cfg.decimals, volatile)
    if code == EXIT_RESOURCE:
        report["error"] = "resource limit exceeded; per_type holds the completed integrals"
        report["value"] = report["complement"] = None
    elif code == EXIT_CONTRADICTION:
        report["error"] = "direct and complement routes disagree"
    rows = report["per_type"]
    lines = [f"n = {cfg.n}  route = {res.route}"]
    if report["value"] is not None:
        lines += [
            f"p_{cfg.n} = {report['value']['fraction']}",
            f"      = {report['value']['decimal']}",
            f"1 - p_{cfg.n} = {report['complement']['fraction']}",
        ]
    else:
        lines.append("p_n not available: " + report["error"])
    text = "\n".join(lines) + "\n\n" + per_type_text(rows)
    text += f"\n# volatile: started {volatile['started']}  elapsed {volatile['elapsed_s']:.3f}s\n"
    _emit(report, text, rows, cfg, out)
    return code


def cmd_integral(cfg: RunConfig, out=sys.stdout) -> int:
    try:
        a = CycleType.parse(cfg.cycle_type or "", cfg.n)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    started = _now()
    try:
        term = compute_integral(a, cache=cfg.cache(), strategy=cfg.strategy, term_limit=cfg.term_limit)
    except ResourceLimitExceeded as exc:
        log.error("%s", exc)
        return EXIT_RESOURCE
    row = term_record(term, cfg.decimals)
    report = {
        "command": "integral",
        "n": a.n,
        "type": str(a),
        "value": row["P"],
        "per_type": [row],
        "volatile": {"started": started, "finished": _now(), "cached": term.cached, "engine": __version__},
    }
    text = (
        f"P([{a}]) = {row['P']['fraction']}\n"
        f"         = {row['P']['decimal']}\n"
        f"n = {a.n}  f = {row['f']}  c = {row['c']}  sign = {row['sign']:+d}  strategy = {row['strategy']}\n"
        f"# volatile: elapsed {term.elapsed_s:.3f}s{'  (cached)' if term.cached else ''}\n"
    )
    _emit(report, text, [row], cfg, out)
    return EXIT_OK


_FAMILY_ALIASES = {
    "even": CycleFamily.EVEN,
    "odd": CycleFamily.ODD,
    "one-fixed-even": CycleFamily.ONE_FIXED_EVEN,
    "odd-cycle": CycleFamily.ODD_CYCLE,
}


def cmd_enumerate(cfg: RunConfig, out=sys.stdout) -> int:
    if cfg.n is None or cfg.n < 1:
        raise UsageError("--n must be positive")
    family = _FAMILY_ALIASES[cfg.family or "even"]
    try:
        members = family_members(cfg.n, family)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    predicted = family_size_predicted(cfg.n, family)
    rows = [
        {"type": str(a), "c": count_permutations(a), "e": even_cycle_sign_exponent(a), "f": factor_count(a)}
        for a in members
    ]
    report = {
        "command": "enumerate",
        "n": cfg.n,
        "family": family.value,
        "members": rows,
        "count": len(rows),
        "predicted": predicted,
        "match": len(rows) == predicted,
    }
    if cfg.output_format == "json":
        out.write(dumps_json(report))
    elif cfg.output_format == "csv":
        out.write("type,c,e,f\n" + "".join(f"{r['type']},{r['c']},{r['e']},{r['f']}\n" for r in rows))
    else:
        width = max((len(r["type"]) for r in rows), default=4) + 4
        body = "".join(f"{'[' + r['type'] + ']':<{width}}{r['c']:>16}{r['e']:>4}{r['f']:>5}\n" for r in rows)
        out.write(
            f"{'type':<{width}}{'c':>16}{'e':>4}{'f':>5}\n{body}"
            f"# {len(rows)} types in {family.value} family for n={cfg.n}; "
            f"partition-number formula gives {predicted}: {'match' if report['match'] else 'MISMATCH'}\n"
        )
    return EXIT_OK if report["match"] else EXIT_CONTRADICTION


def cmd_verify(cfg: RunConfig, out=sys.stdout) -> int:
    if cfg.n is None or cfg.n < 2:
        raise UsageError("--n must be at least 2")
    if cfg.mode == "exhaustive" and cfg.n > 4:
        raise UsageError("exhaustive verification supports n <= 4")
    if cfg.mode == "mc":
        if cfg.samples < 1:
            raise UsageError("--samples must be positive")
        if cfg.n > DEFAULT_SOLVABLE_MAX_N:
            raise UsageError(f"Monte Carlo verification supports n <= {DEFAULT_SOLVABLE_MAX_N}")
    _check_exact_n(cfg)
    started = _now()
    try:
        exact = p_n(cfg.n, "direct", cache=cfg.cache(), strategy=cfg.strategy,
                    term_limit=cfg.term_limit, threads=cfg.threads).value
    except ProbabilityError as exc:
        log.error("%s", exc)
        return EXIT_RESOURCE
    report = {"command": "verify", "n": cfg.n, "mode": cfg.mode, "exact": exact_value(exact, cfg.decimals)}
    if cfg.mode == "exhaustive":
        oracle = exhaustive_p(cfg.n)
        ok = oracle == exact
        report.update(oracle=exact_value(oracle, cfg.decimals), agree=ok)
        text = (
            f"engine     p_{cfg.n} = {exact.numerator}/{exact.denominator}\n"
            f"exhaustive p_{cfg.n} = {oracle.numerator}/{oracle.denominator}\n"
            f"{'exact match' if ok else 'MISMATCH'}\n"
        )
    else:
        hits = mc_count(cfg.n, cfg.samples, cfg.seed, cfg.threads)
        est = hits / cfg.samples
        stderr = (est * (1 - est) / cfg.samples) ** 0.5
        if stderr > 0:
            dist = abs(est - float(exact)) / stderr
        else:
            dist = 0.0 if Fraction(hits, cfg.samples) == exact else float("inf")
        ok = dist <= cfg.sigma
        report.update(samples=cfg.samples, seed=cfg.seed, solvable=hits, estimate=est,
                      stderr=stderr, sigma_distance=dist, threshold=cfg.sigma, agree=ok)
        text = (
            f"engine p_{cfg.n} = {to_decimal(exact, cfg.decimals)}\n"
            f"monte carlo     = {est:.8f} +- {stderr:.8f}  ({hits}/{cfg.samples}, seed {cfg.seed})\n"
            f"distance        = {dist:.3f} sigma (threshold {cfg.sigma})\n"
            f"{'consistent' if ok else 'INCONSISTENT'}\n"
        )
    report["volatile"] = {"started": started, "finished": _now()}
    if cfg.output_format == "json":
        out.write(dumps_json(report))
    else:
        out.write(text)
    return EXIT_OK if ok else EXIT_CONTRADICTION


def cmd_mc(cfg: RunConfig, out=sys.stdout) -> int:
    if cfg.n is None or cfg.n < 2:
        raise UsageError("--n must be at least 2")
    if cfg.n > DEFAULT_SOLVABLE_MAX_N:
        raise UsageError(f"Monte Carlo supports n <= {DEFAULT_SOLVABLE_MAX_N}")
    if cfg.samples < 1:
        raise UsageError("--samples must be positive")
    t0 = time.perf_counter()
    hits = mc_count(cfg.n, cfg.samples, cfg.seed, cfg.threads)
    est = hits / cfg.samples
    stderr = (est * (1 - est) / cfg.samples) ** 0.5
    report = {
        "command": "mc", "n": cfg.n, "samples": cfg.samples, "seed": cfg.seed,
        "solvable": hits, "estimate": est, "stderr": stderr,
        "volatile": {"elapsed_s": round(time.perf_counter() - t0, 6)},
    }
    if cfg.output_format == "json":
        out.write(dumps_json(report))
    else:
        out.write(f"p_{cfg.n} ~ {est:.8f} +- {stderr:.8f}  ({hits}/{cfg.samples} solvable, seed {cfg.seed})\n")
    return EXIT_OK


COMMANDS = {
    "exact": cmd_exact,
    "integral": cmd_integral,
    "enumerate": cmd_enumerate,
    "verify": cmd_verify,
    "mc": cmd_mc,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="roommates", description="Exact solvability probabilities for random stable-roommates instances."
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", dest="output_format", choices=["text", "json", "csv"], default="text")
    common.add_argument("--decimals", type=int, default=20, help="digits after the decimal point (default 20)")
    common.add_argument("--threads", type=int, default=1, help="worker processes/threads (default 1)")
    common.add_argument("-v", "--verbose", action="store_true")

    engine = argparse.ArgumentParser(add_help=False)
    engine.add_argument("--strategy", choices=["early", "coeffwise", "auto"], default="auto")
    engine.add_argument("--term-limit", type=int, default=DEFAULT_TERM_LIMIT,
                        help="abort an integral whose live polynomial exceeds this many terms")
    engine.add_argument("--cache-dir", type=Path, default=None,
                        help="integral cache directory (default: $ROOMMATES_CACHE_DIR or ~/.cache/roommates)")
    engine.add_argument("--no-cache", action="store_true")
    engine.add_argument("--max-n", type=int, default=DEFAULT_MAX_N)
    engine.add_argument("--allow-large-n", action="store_true", help="acknowledge running beyond --max-n")

    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("exact", parents=[common, engine], help="exact p_n")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--route", choices=["direct", "complement", "both"], default="direct")

    p = sub.add_parser("integral", parents=[common, engine], help="exact P(a) for one cycle type")
    p.add_argument("--type", dest="cycle_type", required=True, help='cycle type such as "2^1,4^1"')
    p.add_argument("--n", type=int, default=None, help="optional size check")

    p = sub.add_parser("enumerate", parents=[common], help="list the cycle types of a family")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--family", choices=sorted(_FAMILY_ALIASES), default="even")

    p = sub.add_parser("verify", parents=[common, engine], help="compare the engine against an oracle")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--mode", choices=["exhaustive", "mc"], default="exhaustive")
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--sigma", type=float, default=4.0)

    p = sub.add_parser("mc", parents=[common], help="Monte Carlo estimate of p_n")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=1)
    return parser


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    fields = {k: v for k, v in vars(ns).items() if k in RunConfig.__dataclass_fields__}
    if getattr(ns, "no_cache", False) or ns.command in ("enumerate", "mc"):
        fields["cache_dir"] = None
    elif fields.get("cache_dir") is None:
        fields["cache_dir"] = default_cache_dir()
    return RunConfig(**fields)


def main(argv: list[str] | None = None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if ns.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = config_from_args(ns)
        return COMMANDS[cfg.command](cfg, out)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"roommates {ns.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
