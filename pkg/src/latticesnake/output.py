"""CSV and JSON tables with a versioned schema line and a metadata block.

Floats are written with ``repr`` (shortest exact form) so identical runs give
identical bytes; no timestamps are recorded.
"""
from __future__ import annotations

import csv
import io
import json
import sys

import numpy as np

SCHEMA_VERSION = 1

SCHEMAS = {
    "eigen": ("kind", "m1", "m2", "family", "M", "re", "im", "abs", "residual"),
    "lambda": ("n", "normalized_term", "estimate"),
    "width": ("model", "kind", "m1", "m2", "s_hat", "eps", "lambda_abs", "width_scaled",
              "width"),
    "diagram": ("s_hat", "curve", "k", "L", "z0", "delta_r", "measure_proxy"),
    "branch": ("index", "r", "measure", "fold"),
    "rung": ("rung", "index", "r", "measure", "end"),
    "state": ("j", "z", "u"),
    "trajectory": ("t", "front_z"),
    "depin": ("side", "threshold", "delta_r", "analytic_half_width", "ratio"),
    "compare": ("model", "m1", "m2", "s_hat", "J", "width_numeric", "half_width_numeric",
                "width_analytic", "rel_err", "rel_err_half", "folds_used"),
}


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, np.integer):
        return int(v)
    return v


def _plain(v):
    """JSON-safe copy: numpy scalars and arrays become Python values."""
    if isinstance(v, dict):
        return {str(k): _plain(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    if isinstance(v, np.ndarray):
        return _plain(v.tolist())
    if isinstance(v, (np.floating, float)):
        f = float(v)
        return f if np.isfinite(f) else repr(f)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.bool_,)):
        return bool(v)
    if isinstance(v, complex):
        return [v.real, v.imag]
    return v


def render(schema: str, rows, meta: dict | None = None, fmt: str = "csv") -> str:
    cols = SCHEMAS[schema]
    meta = _plain(meta or {})
    rows = [tuple(r) for r in rows]
    for r in rows:
        if len(r) != len(cols):
            raise ValueError(f"{schema}: row has {len(r)} cells, schema has {len(cols)}")
    if fmt == "json":
        doc = {"schema": schema, "version": SCHEMA_VERSION, "meta": meta,
               "columns": list(cols), "rows": [[_plain(_cell_json(v)) for v in r] for r in rows]}
        return json.dumps(doc, sort_keys=True, indent=1) + "\n"
    buf = io.StringIO()
    buf.write(f"# schema={schema} version={SCHEMA_VERSION}\n")
    buf.write("# meta " + json.dumps(meta, sort_keys=True) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in rows:
        w.writerow([_cell(v) for v in r])
    return buf.getvalue()


def _cell_json(v):
    if isinstance(v, (np.floating, float)):
        return float(v)
    return v


def write(path: str | None, schema: str, rows, meta: dict | None = None,
          fmt: str = "csv") -> str:
    text = render(schema, rows, meta, fmt)
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    return text


def read_csv(path_or_text: str, is_text: bool = False) -> tuple:
    """(schema, meta, columns, rows as strings) from a CSV written by ``render``."""
    text = path_or_text if is_text else open(path_or_text, encoding="utf-8").read()
    lines = text.splitlines()
    head = dict(kv.split("=") for kv in lines[0][2:].split())
    meta = json.loads(lines[1][len("# meta "):])
    rdr = csv.reader(lines[2:])
    cols = next(rdr)
    return head["schema"], meta, cols, list(rdr)
