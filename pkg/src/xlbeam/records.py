"""Plain-text output: commented headers, delimited tables and YAML traces.

Every file starts with ``#`` lines that carry the resolved configuration and
seed as YAML, so a file's header is enough to regenerate it.
"""

from __future__ import annotations

import io
import math
from typing import Any, Iterable, Sequence

import numpy as np
import yaml

COMMENT = "# "


def fmt(value: Any) -> str:
    """Deterministic text for a table cell; floats use the shortest round-trip repr."""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return repr(v)
    return str(value)


def plain(value: Any) -> Any:
    """Convert numpy scalars, arrays and tuples to YAML-safe builtins."""
    if isinstance(value, dict):
        return {str(k): plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return [plain(v) for v in value.tolist()]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return float(value)
    return value


class _Dumper(yaml.SafeDumper):
    """Block-style mappings; lists without nested mappings go on one line."""


def _represent_list(dumper, data):
    flow = not any(isinstance(v, dict) for v in data)
    return dumper.represent_sequence("tag:yaml.org,2002:seq", data, flow_style=flow)


_Dumper.add_representer(list, _represent_list)


def dump_yaml(data: Any) -> str:
    return yaml.dump(plain(data), Dumper=_Dumper, sort_keys=False, default_flow_style=False, width=100)


def header_lines(meta: dict[str, Any]) -> list[str]:
    return [COMMENT + line for line in dump_yaml(meta).rstrip("\n").split("\n")]


def parse_header(text: str) -> dict[str, Any]:
    """Parse the leading comment block of text written by this package."""
    body = []
    for line in text.splitlines():
        if not line.startswith("#"):
            break
        body.append(line[len(COMMENT):] if line.startswith(COMMENT) else line[1:])
    return yaml.safe_load("\n".join(body)) or {}


def read_header(path: str) -> dict[str, Any]:
    with open(path, encoding="utf-8") as fh:
        return parse_header(fh.read())


def write_table(
    stream, columns: Sequence[str], rows: Iterable[Sequence[Any]], meta: dict[str, Any] | None = None
) -> None:
    if meta:
        for line in header_lines(meta):
            stream.write(line + "\n")
    stream.write(",".join(columns) + "\n")
    for row in rows:
        stream.write(",".join(fmt(v) for v in row) + "\n")


def table_text(columns, rows, meta=None) -> str:
    buf = io.StringIO()
    write_table(buf, columns, rows, meta)
    return buf.getvalue()


def read_table(path: str) -> tuple[list[str], list[list[str]]]:
    """Columns and raw string rows of a table file, skipping the header comments."""
    with open(path, encoding="utf-8") as fh:
        lines = [ln.rstrip("\n") for ln in fh if not ln.startswith("#")]
    columns = lines[0].split(",")
    return columns, [ln.split(",") for ln in lines[1:] if ln]


def write_document(stream, meta: dict[str, Any], body: dict[str, Any]) -> None:
    for line in header_lines(meta):
        stream.write(line + "\n")
    stream.write(dump_yaml(body))
