"""Deterministic report serialization: JSON, CSV trails and aligned text."""

from __future__ import annotations

import math
from pathlib import Path
from typing import Sequence

import numpy as np

from .identities import IdentityReport

FORMATS = ("json", "csv", "text")


def fmt_float(x: float) -> str:
    x = float(x)
    if math.isnan(x):
        return '"NaN"'
    if math.isinf(x):
        return '"Infinity"' if x > 0 else '"-Infinity"'
    return format(x, ".17g")


def _json(obj, indent: int = 0) -> str:
    pad = "  " * (indent + 1)
    end = "  " * indent
    if obj is None:
        return "null"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return fmt_float(obj)
    if isinstance(obj, str):
        return _json_string(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{_json_string(str(k))}: {_json(v, indent + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj)
        if not seq:
            return "[]"
        if all(isinstance(v, (int, float, np.number)) and not isinstance(v, bool) for v in seq):
            return "[" + ", ".join(_json(v) for v in seq) + "]"
        return "[\n" + ",\n".join(pad + _json(v, indent + 1) for v in seq) + "\n" + end + "]"
    return _json_string(str(obj))


def _json_string(s: str) -> str:
    import json
    return json.dumps(s, ensure_ascii=False)


def to_json(reports: Sequence[IdentityReport]) -> str:
    """One object for a single report, otherwise an array; floats carry 17 significant digits."""
    dicts = [r.as_dict() for r in reports]
    body = dicts[0] if len(dicts) == 1 else dicts
    return _json(body) + "\n"


def trail_rows(trail) -> list[tuple[int, float, float]]:
    rows = []
    prev = None
    for level, value in trail:
        delta = float("nan") if prev is None else value - prev
        rows.append((int(level), float(value), delta))
        prev = value
    return rows


def trail_csv(trail) -> str:
    lines = ["level,value,delta"]
    for level, value, delta in trail_rows(trail):
        d = "" if math.isnan(delta) else format(delta, ".17g")
        lines.append(f"{level},{format(value, '.17g')},{d}")
    return "\n".join(lines) + "\n"


def summary_csv(reports: Sequence[IdentityReport]) -> str:
    lines = ["name,status,lhs,rhs,residual,relResidual,tolerance"]
    for r in reports:
        vals = [r.lhs_value, r.rhs_value, r.residual, r.relResidual, r.tolerance]
        lines.append(",".join([r.name, r.status] + [format(float(v), ".17g") for v in vals]))
    return "\n".join(lines) + "\n"


def to_text(reports: Sequence[IdentityReport]) -> str:
    header = ("name", "status", "lhs", "rhs", "residual", "relResidual")
    rows = [header] + [(r.name, r.status.upper(), f"{r.lhs_value:.17g}", f"{r.rhs_value:.17g}",
                        f"{r.residual:.6e}", f"{r.relResidual:.6e}") for r in reports]
    widths = [max(len(row[k]) for row in rows) for k in range(len(header))]
    out = []
    for row in rows:
        cells = [c.ljust(w) if k < 2 else c.rjust(w) for k, (c, w) in enumerate(zip(row, widths))]
        out.append("  ".join(cells).rstrip())
    return "\n".join(out) + "\n"


def emit_report(reports: Sequence[IdentityReport], fmt: str, path: str | Path | None) -> list[Path]:
    """Write reports; returns the files written (stdout when ``path`` is None).

    CSV output is a summary table at ``path`` plus one ``level,value,delta``
    file per integral side next to it.
    """
    if fmt not in FORMATS:
        raise ValueError(f"format must be one of {FORMATS}")
    reports = list(reports)
    if fmt == "json":
        files = {None: to_json(reports) if reports else "[]\n"}
    elif fmt == "text":
        files = {None: to_text(reports)}
    else:
        files = {None: summary_csv(reports)}
        for k, r in enumerate(reports):
            for side, trail in _trails(r):
                files[f"{k:02d}-{r.name}-{side}"] = trail_csv(trail)
    if path is None:
        import sys
        for text in files.values():
            sys.stdout.write(text)
        return []
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    written = []
    for suffix, text in files.items():
        p = path if suffix is None else path.with_name(f"{path.stem}.{suffix}.csv")
        with open(p, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        written.append(p)
    return written


def _trails(r: IdentityReport):
    d = r.as_dict()["trails"]
    for side in ("lhs", "rhs"):
        if side in d:
            yield side, d[side]["refinementTrail"]
