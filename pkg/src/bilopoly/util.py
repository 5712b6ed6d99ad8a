"""Small shared helpers: deterministic serialization, hashing, parallel map."""

from __future__ import annotations

import hashlib
import json
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path


def write_json(obj, path) -> None:
    """Write JSON with sorted keys and a trailing newline (byte-stable)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def fmt_float(x) -> str:
    """Shortest round-trip decimal form of a float (repr), '' for None."""
    if x is None:
        return ""
    return repr(float(x))


def parallel_map(fn, items, threads: int | None = None):
    """Map preserving input order; threads=1 (or one item) runs inline."""
    items = list(items)
    if threads is not None and threads <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))
