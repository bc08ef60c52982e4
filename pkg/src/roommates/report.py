"""Rendering of exact results as text, JSON and CSV."""

from __future__ import annotations

import csv
import io
import json
from decimal import ROUND_HALF_EVEN, Decimal, localcontext
from fractions import Fraction

from .stability import ProbabilityResult, TypeTerm


def to_decimal(x: Fraction, digits: int = 20) -> str:
    """``x`` rounded half-even to ``digits`` places after the point."""
    if digits < 1:
        raise ValueError("digits must be >= 1")
    with localcontext() as ctx:
        ctx.prec = len(str(abs(x.numerator) // x.denominator)) + digits + 5
        q = Decimal(x.numerator) / Decimal(x.denominator)
        return format(q.quantize(Decimal(1).scaleb(-digits), rounding=ROUND_HALF_EVEN), "f")


def fraction_str(x: Fraction) -> str:
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def exact_value(x: Fraction, digits: int) -> dict:
    return {"fraction": fraction_str(x), "decimal": to_decimal(x, digits)}


def term_record(t: TypeTerm, digits: int) -> dict:
    return {
        "type": str(t.cycle_type),
        "family": t.family,
        "P": exact_value(t.P, digits),
        "c": t.c,
        "sign": t.sign,
        "f": t.f,
        "elapsed_s": round(t.elapsed_s, 6),
        "strategy": t.strategy,
    }


def probability_report(res: ProbabilityResult, digits: int, volatile: dict) -> dict:
    return {
        "command": "exact",
        "n": res.n,
        "route": res.route,
        "value": exact_value(res.value, digits),
        "complement": exact_value(res.complement, digits),
        "per_type": [term_record(t, digits) for t in res.per_type.values()],
        "volatile": volatile,
    }


def dumps_json(report: dict) -> str:
    return json.dumps(report, indent=2) + "\n"


CSV_FIELDS = ["type", "family", "P", "P_decimal", "c", "sign", "f", "elapsed_s", "strategy"]


def per_type_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_FIELDS)
    for r in rows:
        w.writerow([r["type"], r.get("family", ""), r["P"]["fraction"], r["P"]["decimal"],
                    r["c"], r["sign"], r["f"], r["elapsed_s"], r["strategy"]])
    return buf.getvalue()


def per_type_text(rows: list[dict]) -> str:
    if not rows:
        return ""
    width = max(len(r["type"]) for r in rows) + 4
    lines = [f"{'type':<{width}}{'family':<16}{'sign':>5}{'c':>14}{'f':>5}  {'P':<24}{'strategy':<11}elapsed_s"]
    for r in rows:
        lines.append(
            f"{'[' + r['type'] + ']':<{width}}{r.get('family', ''):<16}{r['sign']:>+5d}{r['c']:>14}{r['f']:>5}  "
            f"{r['P']['decimal']:<24}{r['strategy']:<11}{r['elapsed_s']:.3f}"
        )
        lines.append(f"{'':<{width}}  P = {r['P']['fraction']}")
    return "\n".join(lines) + "\n"
