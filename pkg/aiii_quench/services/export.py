"""
Output writers.

Every file starts with the run metadata: `#` comment lines for CSV, OFF and
pulse text, a leading "metadata" object for JSON. Numbers are printed with
SIG_DIGITS significant digits. Files are written to a temporary sibling and
moved into place.
"""

import json
import logging
import os
from collections.abc import Iterable, Sequence
from pathlib import Path

import numpy as np
from pydantic import BaseModel

from aiii_quench.constants import SIG_DIGITS
from aiii_quench.schemas import OutputMetadata

logger = logging.getLogger(__name__)


def format_number(value: float) -> str:
    """
    Locale-free decimal with SIG_DIGITS significant digits.

    Examples:
        >>> format_number(0.1 + 0.2)
        '0.3'
        >>> format_number(-0.0)
        '0'
    """
    value = float(value)
    if value == 0.0:
        return "0"
    return f"{value:.{SIG_DIGITS}g}"


def _format_cell(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, str):
        return value
    return format_number(value)


def header_lines(metadata: OutputMetadata) -> list[str]:
    """Comment header echoed into every text output."""
    return [
        f"# tool: {metadata.tool}",
        f"# version: {metadata.version}",
        f"# config_sha256: {metadata.config_sha256}",
        f"# seed: {metadata.seed}",
        f"# config: {json.dumps(metadata.config, sort_keys=True, separators=(',', ':'))}",
    ]


def _atomic_write_text(path: Path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    try:
        with tmp.open("w", encoding="utf-8", newline="\n") as f:
            f.write(text)
        os.replace(tmp, path)
    except OSError as e:
        raise OSError(f"Cannot write {path}: {e.strerror or e}") from e
    logger.info(f"Wrote {path}")
    return path


def render_csv(metadata: OutputMetadata, columns: Sequence[str], rows: Iterable[Sequence]) -> str:
    lines = header_lines(metadata)
    lines.append(",".join(columns))
    for row in rows:
        if len(row) != len(columns):
            raise ValueError(f"Row has {len(row)} cells, expected {len(columns)}")
        lines.append(",".join(_format_cell(cell) for cell in row))
    return "\n".join(lines) + "\n"


def write_csv(path: Path, metadata: OutputMetadata, columns: Sequence[str], rows: Iterable[Sequence]) -> Path:
    return _atomic_write_text(path, render_csv(metadata, columns, rows))


def _sorted_keys(value):
    if isinstance(value, dict):
        return {key: _sorted_keys(value[key]) for key in sorted(value)}
    if isinstance(value, list):
        return [_sorted_keys(item) for item in value]
    return value


def render_json(metadata: OutputMetadata, report: BaseModel | dict) -> str:
    """Report keys sorted, preceded by the leading metadata object."""
    payload = report.model_dump(mode="json") if isinstance(report, BaseModel) else dict(report)
    payload.pop("metadata", None)
    document = {"metadata": _sorted_keys(metadata.model_dump(mode="json")), **_sorted_keys(payload)}
    return json.dumps(document, indent=2) + "\n"


def write_json(path: Path, metadata: OutputMetadata, report: BaseModel | dict) -> Path:
    return _atomic_write_text(path, render_json(metadata, report))


def render_off(metadata: OutputMetadata, vertices: np.ndarray, triangles: np.ndarray) -> str:
    """
    Object File Format mesh. Vertex coordinates are the canonical momenta in
    [-pi, pi); triangles that wrap around the zone keep their indices.
    """
    lines = header_lines(metadata)
    lines.append("OFF")
    lines.append(f"{len(vertices)} {len(triangles)} 0")
    lines.extend(" ".join(format_number(c) for c in vertex) for vertex in vertices)
    lines.extend("3 " + " ".join(str(int(i)) for i in tri) for tri in triangles)
    return "\n".join(lines) + "\n"


def write_off(path: Path, metadata: OutputMetadata, vertices: np.ndarray, triangles: np.ndarray) -> Path:
    return _atomic_write_text(path, render_off(metadata, vertices, triangles))


def write_text(path: Path, metadata: OutputMetadata, body: str) -> Path:
    """Plain text body (for example a pulse sequence) under the comment header."""
    return _atomic_write_text(path, "\n".join(header_lines(metadata)) + "\n" + body)
