"""Report persistence: round-trip CSV, schema-checked JSON and a timestamped sidecar log.

Everything written by :func:`write_csv` and :func:`write_json` is a pure
function of its inputs so that re-running a command reproduces the files
byte for byte; wall-clock information goes to ``run.log`` only.
"""

from __future__ import annotations

import csv
import datetime as _dt
import json
import math
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

SCHEMA_VERSION = "1.0"
LOG_NAME = "run.log"


def fmt(x) -> str:
    """17 significant digits for floats, which round-trips every double."""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return format(x, ".17g")
    return "" if x is None else str(x)


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])
    return path


def to_jsonable(obj):
    """Convert numpy containers and scalars; non-finite floats become ``None``."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    return obj


@lru_cache(maxsize=None)
def load_schema(name: str) -> dict:
    text = resources.files("mgarch.schemas").joinpath(f"{name}.schema.json").read_text()
    return json.loads(text)


def validate(doc: dict, schema: str) -> None:
    import jsonschema

    jsonschema.validate(doc, load_schema(schema))


def envelope(command: str, seed, config: dict, result: dict) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "seed": seed,
        "config": config,
        "result": result,
    }


def write_json(path, doc: dict, schema: str | None = None) -> Path:
    doc = to_jsonable(doc)
    if schema is not None:
        validate(doc, schema)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, indent=2, sort_keys=True, allow_nan=False) + "\n")
    return path


def log_event(out_dir, message: str) -> None:
    """Append a timestamped line to the sidecar log of ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stamp = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
    with open(out / LOG_NAME, "a") as fh:
        fh.write(f"{stamp} {message}\n")
