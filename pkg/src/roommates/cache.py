"""On-disk cache of exact integral values, one JSON document per cycle type."""

from __future__ import annotations

import json
import logging
import os
import tempfile
from fractions import Fraction
from pathlib import Path

from .cycletype import CycleType

log = logging.getLogger(__name__)

ENGINE_VERSION = "1"
CACHE_ENV = "ROOMMATES_CACHE_DIR"


def default_cache_dir() -> Path:
    env = os.environ.get(CACHE_ENV)
    if env:
        return Path(env)
    base = os.environ.get("XDG_CACHE_HOME") or Path.home() / ".cache"
    return Path(base) / "roommates"


def parse_fraction(text: str) -> Fraction:
    num, _, den = text.partition("/")
    return Fraction(int(num), int(den or 1))


def format_fraction(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}"


class IntegralCache:
    """Directory of ``<stem>.json`` files; writes are atomic renames."""

    def __init__(self, directory: str | os.PathLike):
        self.directory = Path(directory)

    def path_for(self, a: CycleType) -> Path:
        return self.directory / f"{a.filename_stem()}.json"

    def get(self, a: CycleType) -> dict | None:
        """Cached record with ``value`` as a Fraction, or None if absent or untrustworthy."""
        path = self.path_for(a)
        try:
            record = json.loads(path.read_text())
        except FileNotFoundError:
            return None
        except (OSError, ValueError) as exc:
            log.warning("ignoring unreadable cache entry %s: %s", path, exc)
            return None
        try:
            if record.get("engine_version") != ENGINE_VERSION:
                return None
            if record["cycle_type"] != str(a) or int(record["n"]) != a.n:
                return None
            value = parse_fraction(record["fraction"])
        except (KeyError, TypeError, ValueError, ZeroDivisionError) as exc:
            log.warning("ignoring corrupt cache entry %s: %s", path, exc)
            return None
        if not 0 <= value <= 1:
            return None
        return {**record, "value": value}

    def put(self, a: CycleType, value: Fraction, strategy: str, elapsed: float) -> None:
        record = {
            "cycle_type": str(a),
            "n": a.n,
            "fraction": format_fraction(value),
            "strategy": strategy,
            "elapsed_s": elapsed,
            "engine_version": ENGINE_VERSION,
        }
        self.directory.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=self.directory, prefix=".tmp-", suffix=".json")
        try:
            with os.fdopen(fd, "w") as fh:
                json.dump(record, fh, indent=1)
            os.replace(tmp, self.path_for(a))
        except BaseException:
            try:
                os.unlink(tmp)
            except FileNotFoundError:
                pass
            raise
