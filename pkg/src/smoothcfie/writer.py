"""Byte-stable JSON and CSV output writers."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np


def write_json(data: dict, path: str | Path) -> None:
    """Write *data* to *path* as byte-stable, POSIX-compliant JSON.

    Guarantees:
    - sort_keys=True  → eliminates dict ordering non-determinism
    - ensure_ascii=True → no locale-dependent unicode variation
    - newline="\\n"   → Unix line endings everywhere
    - Single trailing "\\n" → POSIX-compliant text file
    """
    serialized = json.dumps(data, sort_keys=True, indent=2, ensure_ascii=True)
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(serialized + "\n", encoding="utf-8", newline="\n")


def format_value(value) -> str:
    """Floats with 17 significant digits; integers, booleans and strings as written."""
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return "%.17g" % float(value)
    return str(value)


def write_csv(path: str | Path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    """Write a header line and comma-separated rows with ``\\n`` line endings."""
    lines = [",".join(header)]
    lines.extend(",".join(format_value(v) for v in row) for row in rows)
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")
