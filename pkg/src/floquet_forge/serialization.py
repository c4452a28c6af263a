"""Deterministic machine-readable output.

Identical inputs must produce bit-identical files, so floats are always
rendered through one fixed 17-significant-digit format and JSON field order
is the insertion order of the dicts built by the callers (never sorted at
serialization time). Complex values become {"re": .., "im": ..} objects.
"""

from __future__ import annotations

import csv
from enum import Enum

import numpy as np

from .errors import ValidationError

__all__ = ["fmt_float", "json_text", "write_json", "write_csv", "bond_id", "offset_id"]


def fmt_float(x) -> str:
    x = float(x)
    if not np.isfinite(x):
        raise ValidationError(f"non-finite value {x!r} cannot be serialized")
    return "%.17g" % x


def _cell(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return fmt_float(value)
    raise ValidationError(f"cannot render {type(value).__name__} in a CSV cell")


def write_csv(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(list(header))
        for row in rows:
            writer.writerow([_cell(v) for v in row])


def _json_string(s: str) -> str:
    out = ['"']
    for ch in s:
        if ch == '"':
            out.append('\\"')
        elif ch == "\\":
            out.append("\\\\")
        elif ord(ch) < 0x20:
            out.append("\\u%04x" % ord(ch))
        else:
            out.append(ch)
    out.append('"')
    return "".join(out)


def _render(obj, indent: int, pad: str) -> str:
    nxt = pad + " " * indent
    if isinstance(obj, Enum):
        return _render(obj.value, indent, pad)
    if obj is None:
        return "null"
    if isinstance(obj, str):
        return _json_string(obj)
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return fmt_float(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        c = complex(obj)
        return "{" + f'"re": {fmt_float(c.real)}, "im": {fmt_float(c.imag)}' + "}"
    if isinstance(obj, np.ndarray):
        return _render(obj.tolist(), indent, pad)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [
            f"{nxt}{_json_string(str(k))}: {_render(v, indent, nxt)}" for k, v in obj.items()
        ]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        rendered = [_render(v, indent, nxt) for v in obj]
        if all(len(r) < 24 and "\n" not in r for r in rendered) and len(rendered) <= 16:
            return "[" + ", ".join(rendered) + "]"
        return "[\n" + ",\n".join(nxt + r for r in rendered) + "\n" + pad + "]"
    raise ValidationError(f"cannot serialize {type(obj).__name__} to JSON")


def json_text(obj, indent: int = 2) -> str:
    """Render to JSON with fixed float formatting and insertion field order."""
    return _render(obj, indent, "") + "\n"


def write_json(path, obj, indent: int = 2) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(json_text(obj, indent))


def offset_id(offset) -> str:
    """Comma-free offset tag for CSV cells, e.g. (1, -1) -> '1_-1'."""
    return "_".join(str(int(x)) for x in offset)


def bond_id(bond) -> str:
    """Comma-free bond tag: target<-source@offset."""
    return f"{bond.target_basis}<-{bond.source_basis}@{offset_id(bond.cell_offset)}"
