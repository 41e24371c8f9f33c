"""Deterministic serialization of reports.

JSON objects have lexicographically sorted keys and floats are written
with 17 significant digits; non-finite floats become the strings
``"inf"``, ``"-inf"`` and ``"nan"``.  CSV uses ``\\n`` line endings and
always starts with a header row.  Nothing depends on the locale.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass

import numpy as np


@dataclass
class Table:
    """Header plus rows, the CSV-native report shape."""

    header: list[str]
    rows: list

    def to_dict(self):
        return {"header": list(self.header), "rows": [list(r) for r in self.rows]}


def fmt_float(x: float) -> str:
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if x == 0.0:
        return "0.0"  # also folds -0.0
    s = f"{x:.17g}"
    if "e" not in s and "." not in s:
        s += ".0"
    return s


def to_plain(obj):
    """Reduce reports, numpy values and dataclasses to JSON-ready builtins."""
    if hasattr(obj, "to_dict"):
        return to_plain(obj.to_dict())
    if hasattr(obj, "header") and callable(getattr(obj, "rows", None)):
        return to_plain(Table(obj.header(), obj.rows()))
    if isinstance(obj, dict):
        return {str(k): to_plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_plain(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    if obj is None or isinstance(obj, str):
        return obj
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _json(obj, indent, level):
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        s = fmt_float(obj)
        return s if math.isfinite(obj) else json.dumps(s)
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=False)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(k, ensure_ascii=False)}: {_json(obj[k], indent, level + 1)}"
                 for k in sorted(obj)]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, list):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list)) for v in obj):
            return "[" + ", ".join(_json(v, indent, level + 1) for v in obj) + "]"
        return "[\n" + ",\n".join(pad + _json(v, indent, level + 1) for v in obj) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def render_json(report, indent: int = 2) -> str:
    return _json(to_plain(report), indent, 0) + "\n"


def _cell(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return fmt_float(v)
    if v is None:
        return ""
    return str(v)


def _flatten(obj, prefix=""):
    if isinstance(obj, dict):
        for k in sorted(obj):
            yield from _flatten(obj[k], f"{prefix}.{k}" if prefix else str(k))
    elif isinstance(obj, list):
        for i, v in enumerate(obj):
            yield from _flatten(v, f"{prefix}[{i}]")
    else:
        yield prefix, obj


def as_table(report) -> Table:
    """Tabular view: native for tables, ``key,value`` pairs otherwise."""
    if isinstance(report, Table):
        return report
    if hasattr(report, "header") and hasattr(report, "rows") and callable(report.rows):
        return Table(report.header(), report.rows())
    return Table(["key", "value"], list(_flatten(to_plain(report))))


def render_csv(report) -> str:
    t = as_table(report)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(t.header)
    for row in t.rows:
        w.writerow([_cell(v) for v in row])
    return buf.getvalue()


def render_text(report) -> str:
    if isinstance(report, Table) or (hasattr(report, "rows") and callable(getattr(report, "rows", None))):
        t = as_table(report)
        lines = ["  ".join(t.header)]
        lines += ["  ".join(_cell(v) for v in row) for row in t.rows]
        return "\n".join(lines) + "\n"
    lines = [f"{k}: {_cell(v)}" for k, v in _flatten(to_plain(report))]
    return "\n".join(lines) + "\n"


RENDERERS = {"json": render_json, "csv": render_csv, "text": render_text}


def render_report(report, fmt: str = "json") -> bytes:
    """Serialize ``report`` as UTF-8 bytes in ``json``, ``csv`` or ``text``."""
    try:
        fn = RENDERERS[fmt]
    except KeyError:
        raise ValueError(f"unknown format {fmt!r}; expected one of {sorted(RENDERERS)}") from None
    return fn(report).encode("utf-8")
