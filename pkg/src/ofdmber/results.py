"""Result-table rows and their CSV / JSON-lines persistence.

Numeric fields are written with 17 significant digits so export -> import ->
export reproduces files byte-for-byte.
"""

from __future__ import annotations

import csv
import json
import math
import os

__all__ = ["COLUMNS", "make_row", "row_key", "write_table", "read_table",
           "append_rows", "completed_keys"]

COLUMNS = (
    "method",      # "1", "2", or "sim"
    "channel",     # realization id, "mean", or "outageX"
    "ebn0_db",
    "sir_db",      # may be inf
    "position",    # interferer frequency in tone-spacing units
    "phase",       # phase index or -1 when averaged / absent
    "erasures",
    "ber",
    "errors",      # sim only
    "bits",        # sim only
    "flagged",     # sim only
)

_FLOAT_FIELDS = {"ebn0_db", "sir_db", "position", "ber"}
_INT_FIELDS = {"phase", "erasures", "errors", "bits"}


def make_row(method, channel, ebn0_db, ber, *, sir_db=math.inf, position=None,
             phase=-1, erasures=0, errors=None, bits=None, flagged=None) -> dict:
    return {
        "method": str(method),
        "channel": str(channel),
        "ebn0_db": float(ebn0_db),
        "sir_db": float(sir_db),
        "position": None if position is None else float(position),
        "phase": int(phase),
        "erasures": int(erasures),
        "ber": float(ber),
        "errors": None if errors is None else int(errors),
        "bits": None if bits is None else int(bits),
        "flagged": None if flagged is None else bool(flagged),
    }


def row_key(row: dict) -> tuple:
    """Identity of a grid cell, independent of its computed values."""
    return (
        row["method"],
        row["channel"],
        _fmt(row["ebn0_db"]),
        _fmt(row["sir_db"]),
        _fmt(row["position"]),
        str(row["phase"]),
        str(row["erasures"]),
    )


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return format(value, ".17g")
    return str(value)


def _parse(field: str, text: str):
    if text == "":
        return None
    if field in _FLOAT_FIELDS:
        return float(text)
    if field in _INT_FIELDS:
        return int(text)
    if field == "flagged":
        return text == "1"
    return text


def write_table(path, rows, fmt: str | None = None) -> None:
    fmt = fmt or _infer_format(path)
    if not rows:
        raise ValueError("refusing to write an empty result table")
    if fmt == "csv":
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(COLUMNS)
            for row in rows:
                w.writerow([_fmt(row[c]) for c in COLUMNS])
    elif fmt == "jsonl":
        with open(path, "w") as fh:
            for row in rows:
                fh.write(_jsonl_line(row))
    else:
        raise ValueError(f"unknown format {fmt!r}")


def _jsonl_line(row: dict) -> str:
    out = {}
    for c in COLUMNS:
        v = row[c]
        if v is None:
            continue
        out[c] = _fmt(v) if isinstance(v, float) else v
    return json.dumps(out, sort_keys=True) + "\n"


def read_table(path, fmt: str | None = None) -> list:
    fmt = fmt or _infer_format(path)
    rows = []
    if fmt == "csv":
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            if tuple(header) != COLUMNS:
                raise ValueError(f"unexpected header in {path}")
            for rec in reader:
                rows.append({c: _parse(c, rec[i]) for i, c in enumerate(COLUMNS)})
    elif fmt == "jsonl":
        with open(path) as fh:
            for line in fh:
                if not line.strip():
                    continue
                raw = json.loads(line)
                rows.append(
                    {c: _parse(c, str(raw[c])) if c in raw else None for c in COLUMNS}
                )
    else:
        raise ValueError(f"unknown format {fmt!r}")
    return rows


def _infer_format(path) -> str:
    ext = os.path.splitext(str(path))[1].lower()
    if ext in (".csv",):
        return "csv"
    if ext in (".jsonl", ".ndjson", ".json"):
        return "jsonl"
    raise ValueError(f"cannot infer table format from {path!r}")


def append_rows(path, rows) -> None:
    """Append completed rows, writing the header if the file is new (CSV)."""
    new = not os.path.exists(path) or os.path.getsize(path) == 0
    with open(path, "a", newline="") as fh:
        w = csv.writer(fh)
        if new:
            w.writerow(COLUMNS)
        for row in rows:
            w.writerow([_fmt(row[c]) for c in COLUMNS])
        fh.flush()


def completed_keys(path) -> set:
    if not os.path.exists(path) or os.path.getsize(path) == 0:
        return set()
    return {row_key(r) for r in read_table(path, "csv")}
