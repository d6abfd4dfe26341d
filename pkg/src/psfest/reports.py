"""CSV emission with bit-stable formatting."""

from __future__ import annotations

__all__ = ["emit_report", "format_value"]


def format_value(v):
    """17-significant-digit decimals for floats, so values reparse exactly."""
    if isinstance(v, float):
        return f"{v:.17g}"
    return str(v)


def emit_report(rows, path, columns):
    """Write one CSV: a header plus one row per mapping, in column order."""
    if not rows:
        raise ValueError("no report rows to emit")
    lines = [",".join(columns) + "\n"]
    for row in rows:
        lines.append(",".join(format_value(row[c]) for c in columns) + "\n")
    with open(path, "w", newline="\n") as fh:
        fh.writelines(lines)
