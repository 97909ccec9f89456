"""Byte-stable JSON and CSV writers (floats always carry 17 significant digits)."""

from __future__ import annotations

import io
import json
import math

import numpy as np


def fmt_float(x) -> str:
    x = float(x)
    if math.isnan(x) or math.isinf(x):
        return json.dumps(x)  # NaN / Infinity, as the stdlib writes them
    return format(x, ".17g")


def _encode(obj, indent, level, out):
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, (bool, np.bool_)) or obj is None:
        out.write(json.dumps(bool(obj) if obj is not None else None))
    elif isinstance(obj, (int, np.integer)):
        out.write(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.write(fmt_float(obj))
    elif isinstance(obj, str):
        out.write(json.dumps(obj))
    elif isinstance(obj, dict):
        if not obj:
            out.write("{}")
            return
        out.write("{\n")
        for i, (k, v) in enumerate(obj.items()):
            out.write(f"{pad}{json.dumps(str(k))}: ")
            _encode(v, indent, level + 1, out)
            out.write(",\n" if i < len(obj) - 1 else "\n")
        out.write(end + "}")
    elif isinstance(obj, (list, tuple, np.ndarray)):
        items = list(obj)
        if not items:
            out.write("[]")
            return
        if all(isinstance(v, (int, float, np.number)) and not isinstance(v, bool) for v in items):
            out.write("[")
            for i, v in enumerate(items):
                if i:
                    out.write(", ")
                _encode(v, indent, level + 1, out)
            out.write("]")
            return
        out.write("[\n")
        for i, v in enumerate(items):
            out.write(pad)
            _encode(v, indent, level + 1, out)
            out.write(",\n" if i < len(items) - 1 else "\n")
        out.write(end + "]")
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps_json(obj, indent: int = 1) -> str:
    buf = io.StringIO()
    _encode(obj, indent, 0, buf)
    buf.write("\n")
    return buf.getvalue()


def loads_json(text: str):
    return json.loads(text)


def csv_text(header, rows, comments=()) -> str:
    """CSV with optional leading ``# key: value`` metadata lines."""
    buf = io.StringIO()
    for line in comments:
        buf.write(f"# {line}\n")
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(fmt_float(v) if isinstance(v, (float, np.floating)) else str(v) for v in row) + "\n")
    return buf.getvalue()
