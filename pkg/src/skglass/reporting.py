"""Deterministic CSV/JSON emission.

Output bytes are a pure function of the data: floats are serialized via
repr (shortest round-trip) in JSON and fixed 17-significant-digit '%.17g'
in CSV, dictionary keys are sorted, and no timestamps or host details are
recorded.  Re-running a command with the same config therefore reproduces
every file byte for byte.

Every file carries a metadata header with the tool version, a SHA-256
hash of the resolved config, and the base seed: the first line of a CSV
is '# ' followed by the canonical-JSON metadata, and JSON documents hold
it under "meta" next to a top-level "schema" version field.

Non-finite floats have no strict-JSON encoding, so they become null in
JSON; CSV writes them as the '%g' spellings nan/inf/-inf.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math

import numpy as np

from ._version import __version__
from .errors import ValidationError

SCHEMA_VERSION = 1

REQUIRED_META_KEYS = ("tool_version", "config_hash", "base_seed")


def to_plain(obj):
    """Recursively convert dataclasses/numpy/tuples to JSON-ready values."""
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: to_plain(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, np.ndarray):
        return to_plain(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, dict):
        return {str(k): to_plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, set, frozenset)):
        seq = sorted(obj) if isinstance(obj, (set, frozenset)) else obj
        return [to_plain(v) for v in seq]
    return obj


def canonical_json(obj):
    """Sorted-key, separator-free JSON; the hashing and header format."""
    return json.dumps(to_plain(obj), sort_keys=True, separators=(",", ":"), allow_nan=False)


def config_hash(mapping):
    """SHA-256 hex digest of the canonical JSON of a resolved config."""
    return hashlib.sha256(canonical_json(mapping).encode("ascii")).hexdigest()


def build_metadata(config_mapping, base_seed, **extra):
    """Standard file-header metadata for one resolved invocation."""
    meta = {
        "tool_version": __version__,
        "config_hash": config_hash(config_mapping),
        "base_seed": int(base_seed),
    }
    meta.update(extra)
    return meta


def _check_meta(meta):
    missing = [k for k in REQUIRED_META_KEYS if k not in meta]
    if missing:
        raise ValidationError(f"metadata header is missing required keys: {missing}")


def format_value(v):
    """One CSV cell: %.17g floats, plain ints, bare lowercase booleans."""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (np.floating, float)):
        return "%.17g" % float(v)
    if isinstance(v, (np.integer, int)):
        return str(int(v))
    s = str(v)
    if "," in s or "\n" in s or '"' in s:
        raise ValidationError(f"CSV cell {s!r} needs quoting, which this format forbids")
    return s


def write_csv(path, meta, header, rows):
    """CSV with a '# ' canonical-JSON metadata first line, then header, then rows."""
    _check_meta(meta)
    lines = ["# " + canonical_json(meta), ",".join(header)]
    for row in rows:
        if len(row) != len(header):
            raise ValidationError("CSV row width does not match the header")
        lines.append(",".join(format_value(v) for v in row))
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def write_json(path, meta, data):
    """JSON document {"schema": ..., "meta": ..., "data": ...}, sorted keys."""
    _check_meta(meta)
    doc = {"schema": SCHEMA_VERSION, "meta": to_plain(meta), "data": to_plain(data)}
    with open(path, "w", newline="\n") as fh:
        fh.write(json.dumps(doc, sort_keys=True, indent=2, allow_nan=False) + "\n")


def write_trace_csv(path, meta, trace):
    """Iterate trace as (k, i, value) rows under the standard metadata header.

    The metadata of a trace file additionally records n, seed, K, the
    preset tag, and the norm convention for the trace's norm column.
    """
    rows = []
    for k, vec in enumerate(trace.vectors):
        for i, v in enumerate(vec):
            rows.append((k, i, float(v)))
    write_csv(path, meta, ("k", "i", "value"), rows)
