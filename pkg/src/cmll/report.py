"""Tabular report emission: aligned text, RFC-4180 CSV, or JSON lines.

Column order is stable (explicit list or first-row insertion order) and
floats are printed with 6 significant digits in every format. Text mode
merges adjacent "mean"/"std" columns into a single mean±std cell.
"""

from __future__ import annotations

import csv
import io
import json

from .errors import InputError

FORMATS = ("text", "csv", "jsonl")


def _fmt_float(x: float) -> str:
    return f"{float(x):.6g}"


def _cell(value) -> str:
    if isinstance(value, bool):
        return str(value)
    if isinstance(value, float):
        return _fmt_float(value)
    return str(value)


def _columns(rows, columns):
    if columns is not None:
        return list(columns)
    if rows:
        return list(rows[0].keys())
    return []


def emit_report(rows, fmt: str, columns=None) -> bytes:
    """Render rows (mappings) as a table in the requested format."""
    if fmt not in FORMATS:
        raise InputError(f"unknown report format {fmt!r} (choose from {FORMATS})")
    cols = _columns(rows, columns)
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(cols)
        for row in rows:
            writer.writerow([_cell(row.get(c, "")) for c in cols])
        return buf.getvalue().encode("utf-8")
    if fmt == "jsonl":
        lines = []
        for row in rows:
            out = {}
            for c in cols:
                v = row.get(c)
                if isinstance(v, float) and not isinstance(v, bool):
                    v = float(_fmt_float(v))
                out[c] = v
            lines.append(json.dumps(out))
        return ("\n".join(lines) + "\n" if lines else "").encode("utf-8")

    # text: merge mean/std pairs into mean±std
    merged_cols = []
    skip = set()
    for i, c in enumerate(cols):
        if c in skip:
            continue
        if c == "mean" and i + 1 < len(cols) and cols[i + 1] == "std":
            merged_cols.append("mean±std")
            skip.add("std")
        else:
            merged_cols.append(c)

    def text_row(row):
        out = []
        for c in merged_cols:
            if c == "mean±std":
                out.append(f"{_cell(row.get('mean', ''))}±{_cell(row.get('std', ''))}")
            else:
                out.append(_cell(row.get(c, "")))
        return out

    body = [text_row(r) for r in rows]
    widths = [len(h) for h in merged_cols]
    for r in body:
        for i, cell in enumerate(r):
            widths[i] = max(widths[i], len(cell))
    lines = ["  ".join(h.ljust(w) for h, w in zip(merged_cols, widths)).rstrip()]
    for r in body:
        lines.append("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip())
    return ("\n".join(lines) + "\n").encode("utf-8")
