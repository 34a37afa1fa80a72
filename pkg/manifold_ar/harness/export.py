"""Export functionality for sweep results."""

import csv
import io
import json
import logging
import math
import sys
from pathlib import Path
from typing import List, Optional, Sequence, Union

from manifold_ar.config import OutputFormat
from manifold_ar.models import ResultRow
from manifold_ar.utils import format_float

logger = logging.getLogger(__name__)

FIELDS = [
    "manifold",
    "n",
    "k",
    "N",
    "sigma",
    "trial",
    "seed",
    "error",
    "final_cost",
    "iterations",
    "converged",
    "runtime_ms",
]


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format_float(value)
    return str(value)


def export_to_csv(rows: Sequence[ResultRow]) -> str:
    """Header line plus one line per row, floats with 17 significant digits."""
    stream = io.StringIO()
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(FIELDS)
    for row in rows:
        data = row.model_dump()
        writer.writerow([_cell(data[name]) for name in FIELDS])
    return stream.getvalue()


def _json_value(value) -> str:
    if isinstance(value, float) and math.isfinite(value):
        text = format_float(value)
        return text if "." in text or "e" in text else text + ".0"
    return json.dumps(value)


def export_to_json(rows: Sequence[ResultRow]) -> str:
    """Array of row objects, one per line, floats formatted as in the CSV."""
    if not rows:
        return "[]\n"
    lines = []
    for row in rows:
        data = row.model_dump(mode="json")
        fields = ", ".join(f'"{name}": {_json_value(data[name])}' for name in FIELDS)
        lines.append("  {" + fields + "}")
    return "[\n" + ",\n".join(lines) + "\n]\n"


def emit(
    rows: Sequence[ResultRow],
    format: OutputFormat = OutputFormat.CSV,
    path: Optional[Union[str, Path]] = None,
) -> None:
    """
    Write rows as CSV or JSON to `path`, or to stdout when no path is given.

    Raises:
        OSError: the file cannot be written; the message names the path.
    """
    if OutputFormat(format) == OutputFormat.CSV:
        text = export_to_csv(rows)
    else:
        text = export_to_json(rows)
    if path is None:
        sys.stdout.write(text)
        return
    try:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(text)
    except OSError as e:
        raise OSError(f"Failed to write results to {path}: {e}") from e
    logger.info("Wrote %d rows to %s", len(rows), path)


def _parse_csv_row(record: dict) -> ResultRow:
    data = {name: (record[name] if record[name] != "" else None) for name in FIELDS}
    data["converged"] = record["converged"] == "true"
    return ResultRow(**data)


def read_rows(
    path: Union[str, Path], format: Optional[OutputFormat] = None
) -> List[ResultRow]:
    """Parse a file written by `emit`; the format defaults to the file suffix."""
    path = Path(path)
    if format is None:
        format = OutputFormat.JSON if path.suffix.lower() == ".json" else OutputFormat.CSV
    try:
        text = path.read_text()
    except OSError as e:
        raise OSError(f"Failed to read results from {path}: {e}") from e
    if OutputFormat(format) == OutputFormat.JSON:
        return [ResultRow(**item) for item in json.loads(text)]
    return [_parse_csv_row(record) for record in csv.DictReader(io.StringIO(text))]
