"""Rendering of command results as self-describing CSV and JSON text."""

from __future__ import annotations

import csv
import io
import json
import math
from typing import Any, Iterable

import numpy as np
import scipy

import dunkl


def format_value(value: Any) -> str:
    """Format one CSV cell; floats keep 12 significant digits."""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        text = f"{value:.12g}"
        return "0" if text == "-0" else text
    return str(value)


def _plain(value: Any) -> Any:
    """Convert numpy scalars and arrays inside metadata to JSON types."""
    if isinstance(value, dict):
        return {str(key): _plain(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(item) for item in value]
    if isinstance(value, np.ndarray):
        return [_plain(item) for item in value.tolist()]
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    return value


def versions() -> dict[str, str]:
    return {
        "dunkl": dunkl.__version__,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
    }


def metadata_line(command: str, system, seed, params: dict, **extra) -> str:
    """First CSV line: '# ' followed by compact, key-sorted JSON."""
    meta = {
        "command": command,
        "system": system.descriptor() if system is not None else None,
        "seed": seed,
        "params": params,
        "versions": versions(),
        **extra,
    }
    return "# " + json.dumps(
        _plain(meta), sort_keys=True, separators=(",", ":")
    )


def render_csv(
    header: list[str], rows: Iterable[Iterable[Any]], meta_line: str
) -> str:
    """Render a metadata line, a header row and data rows."""
    buffer = io.StringIO()
    buffer.write(meta_line + "\n")
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_value(value) for value in row])
    return buffer.getvalue()


def render_reports(reports) -> str:
    """JSON array of validation reports, one object per check."""
    payload = [_plain(report.to_dict()) for report in reports]
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def split_csv(text: str) -> tuple[dict, list[list[str]]]:
    """Parse rendered CSV back into (metadata, rows including header)."""
    first, _, body = text.partition("\n")
    if not first.startswith("# "):
        raise ValueError("missing metadata line")
    rows = list(csv.reader(io.StringIO(body)))
    return json.loads(first[2:]), rows
