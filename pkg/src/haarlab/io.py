"""Plain-text interval files and JSON helpers.

Interval files hold one ``level index`` pair per line (0-based index);
``#`` starts a comment and blank lines are ignored.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path
from typing import TextIO

from .collection import IntervalCollection
from .dyadic import DyadicInterval, HaarlabError


def parse_intervals(text: str) -> IntervalCollection:
    intervals = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        if len(fields) != 2:
            raise HaarlabError(f"line {lineno}: expected 'level index', got {raw!r}")
        try:
            m, k = int(fields[0]), int(fields[1])
        except ValueError:
            raise HaarlabError(f"line {lineno}: non-integer field in {raw!r}") from None
        intervals.append(DyadicInterval(m, k))
    return IntervalCollection(intervals)


def format_intervals(E: IntervalCollection, header: str | None = None) -> str:
    lines = [f"# {line}" for line in header.splitlines()] if header else []
    lines.extend(f"{I.level} {I.index}" for I in E)
    return "\n".join(lines) + "\n" if lines else ""


def read_intervals(source: str | Path | TextIO | None) -> IntervalCollection:
    """Read from a path, an open file, or stdin for ``None`` / ``"-"``."""
    if source is None or source == "-":
        return parse_intervals(sys.stdin.read())
    if hasattr(source, "read"):
        return parse_intervals(source.read())
    return parse_intervals(Path(source).read_text())


def write_intervals(E: IntervalCollection, path: str | Path, header: str | None = None) -> None:
    Path(path).write_text(format_intervals(E, header))


def dumps(obj) -> str:
    """Stable JSON: sorted keys, two-space indent, trailing newline."""
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"
