"""Deterministic CSV / JSON table output."""
from __future__ import annotations

import csv
import io
import json
import math
import sys
import time
from pathlib import Path


def _cell(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return "nan" if math.isnan(v) else format(v, ".17g")
    return str(v)


def render_csv(rows: list[dict]) -> str:
    if not rows:
        return ""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    columns = list(rows[0])
    writer.writerow(columns)
    writer.writerows([_cell(row.get(c, "")) for c in columns] for row in rows)
    return buf.getvalue()


def _jsonable(v):
    if isinstance(v, float) and not math.isfinite(v):
        return repr(v)
    return v


def render_json(rows: list[dict], meta: dict | None = None) -> str:
    doc = {"meta": meta or {}, "rows": [{k: _jsonable(v) for k, v in r.items()} for r in rows]}
    return json.dumps(doc, indent=1, sort_keys=False) + "\n"


def write_table(rows: list[dict], path, fmt: str = "csv", meta: dict | None = None) -> Path:
    """Write a table and a sidecar ``.meta.json``; only the sidecar carries a timestamp."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    body = render_csv(rows) if fmt == "csv" else render_json(rows, meta)
    with open(path, "w", newline="\n") as fh:
        fh.write(body)
    sidecar = path.with_name(path.name + ".meta.json")
    info = {"written_at": time.strftime("%Y-%m-%dT%H:%M:%S%z"), "argv": sys.argv, **(meta or {})}
    sidecar.write_text(json.dumps(info, indent=1, default=str) + "\n")
    return path
