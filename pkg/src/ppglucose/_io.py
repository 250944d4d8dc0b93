"""File plumbing: fixed float formatting and write-then-rename outputs."""

import json
import os
import tempfile
from pathlib import Path

import numpy as np

FLOAT_FMT = ".12g"


def fmt(x):
    """Format a number with 12 significant digits, the on-disk convention."""
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return format(float(x), FLOAT_FMT)


def _round_floats(obj):
    if isinstance(obj, dict):
        return {k: _round_floats(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round_floats(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _round_floats(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(format(float(obj), FLOAT_FMT))
    return obj


def dumps_json(obj):
    return json.dumps(_round_floats(obj), indent=2, sort_keys=True) + "\n"


def atomic_write_text(path, text):
    """Write ``text`` to ``path`` through a temporary sibling file and rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_bytes(path, data):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def parse_header(line, prefix="#"):
    """Parse a ``#key=value,key=value`` header line into a dict of strings."""
    body = line.strip()
    if not body.startswith(prefix):
        raise ValueError("missing header")
    body = body[len(prefix):].strip()
    out = {}
    for item in body.split(","):
        item = item.strip()
        if not item:
            continue
        key, sep, value = item.partition("=")
        if not sep:
            raise ValueError(f"bad header item {item!r}")
        out[key.strip()] = value.strip()
    return out
