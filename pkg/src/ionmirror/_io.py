"""Deterministic CSV output shared by all modules."""
from __future__ import annotations

import io
import os
from typing import Iterable, Sequence

FLOAT_FORMAT = "%.12g"


def format_value(value) -> str:
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, (int,)) and not isinstance(value, bool):
        return str(value)
    if isinstance(value, complex):
        raise TypeError("split complex values into real and imaginary columns")
    if isinstance(value, str):
        return value
    return FLOAT_FORMAT % float(value)


def csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(format_value(v) for v in row) + "\n")
    return buf.getvalue()


def write_csv(target, header: Sequence[str], rows: Iterable[Sequence]) -> str:
    """Write rows to ``target`` (path or text stream); returns the text."""
    text = csv_text(header, rows)
    if target is None:
        return text
    if isinstance(target, (str, os.PathLike)):
        with open(target, "w", newline="") as fh:
            fh.write(text)
    else:
        target.write(text)
    return text
