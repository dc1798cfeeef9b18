"""CSV series files with ``#`` metadata header lines.

Layout::

    # blochcusp quench
    # config: {...json...}
    # params: {...json...}
    t,t_over_T,P_i,...
    0,0,1,...

Floats are written with 17 significant digits so a read-back is exact.
Complex columns are split into ``re_<name>`` and ``im_<name>``.
"""

from __future__ import annotations

import csv
import json
import os
import tempfile
from pathlib import Path

import numpy as np

FLOAT_FMT = "{:.17g}"


def _flatten(columns: dict) -> dict[str, np.ndarray]:
    flat = {}
    for name, values in columns.items():
        arr = np.asarray(values)
        if np.iscomplexobj(arr):
            flat[f"re_{name}"] = arr.real
            flat[f"im_{name}"] = arr.imag
        else:
            flat[name] = arr.astype(float)
    return flat


def write_series_csv(path, columns: dict, meta: dict | None = None, title: str = "blochcusp"):
    """Write equal-length columns atomically (temp file + rename)."""
    flat = _flatten(columns)
    lengths = {v.size for v in flat.values()}
    if len(lengths) > 1:
        raise ValueError(f"columns differ in length: {sorted(lengths)}")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(f"# {title}\n")
            for key, value in (meta or {}).items():
                fh.write(f"# {key}: {json.dumps(value, sort_keys=True)}\n")
            writer = csv.writer(fh, lineterminator="\n")
            names = list(flat)
            writer.writerow(names)
            for row in zip(*(flat[n] for n in names)):
                writer.writerow([FLOAT_FMT.format(v) for v in row])
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def read_series_csv(path) -> tuple[dict, dict[str, np.ndarray]]:
    """Return ``(meta, columns)``; metadata values are parsed back from JSON."""
    meta: dict = {}
    body: list[str] = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.startswith("#"):
                key, sep, value = line[1:].strip().partition(": ")
                if sep:
                    try:
                        meta[key] = json.loads(value)
                    except json.JSONDecodeError:
                        meta[key] = value
            elif line.strip():
                body.append(line)
    if not body:
        raise ValueError(f"{path}: no data rows")
    reader = csv.reader(body)
    names = next(reader)
    rows = [[float(v) for v in row] for row in reader]
    data = np.array(rows, dtype=float).reshape(len(rows), len(names))
    return meta, {n: data[:, i] for i, n in enumerate(names)}


def column(columns: dict[str, np.ndarray], name: str) -> np.ndarray:
    """Fetch a real column, or rebuild a complex one from its re_/im_ parts."""
    if name in columns:
        return columns[name]
    if f"re_{name}" in columns and f"im_{name}" in columns:
        return columns[f"re_{name}"] + 1j * columns[f"im_{name}"]
    raise KeyError(f"no column {name!r}; available: {', '.join(columns)}")
