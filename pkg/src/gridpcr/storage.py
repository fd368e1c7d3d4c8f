"""File formats: binary grids, CSV tables, JSON configs and run manifests.

Grid files ("HSG1") hold one float64 array of any rank: magic ``HSG1``, a
version byte (1), a rank byte, the extents as little-endian uint64, then the
values little-endian row-major. Round-trips are bitwise; trailing bytes and
truncation are format errors carrying the byte offset.

Tables are plain CSV: UTF-8, header row, ``\\n`` line endings, ``.`` decimal
separator regardless of locale, floats rendered with shortest round-trip
precision so reading recovers the exact values.

All writers are atomic (temp file then rename).
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import struct

import numpy as np

from .errors import ConformanceError, FormatError
from .util import atomic_write_bytes, atomic_write_text

GRID_MAGIC = b"HSG1"
GRID_VERSION = 1


def write_grid(path, values) -> None:
    """Write one array (element, sample stack, or any rank) as a grid file."""
    arr = np.asarray(values, dtype=float)
    if arr.ndim == 0:
        raise ConformanceError("grid payload must have at least one axis")
    if arr.ndim > 255:
        raise ConformanceError("grid rank exceeds the format limit of 255")
    if not np.all(np.isfinite(arr)):
        raise ConformanceError("grid payload contains non-finite values")
    header = GRID_MAGIC + bytes([GRID_VERSION, arr.ndim])
    header += struct.pack(f"<{arr.ndim}Q", *arr.shape)
    payload = np.ascontiguousarray(arr, dtype="<f8").tobytes()
    atomic_write_bytes(path, header + payload)


def read_grid(path) -> np.ndarray:
    """Read a grid file back into the array shape it was written with."""
    with open(path, "rb") as handle:
        blob = handle.read()
    if len(blob) < 6:
        raise FormatError("grid file shorter than its fixed header", offset=len(blob))
    if blob[:4] != GRID_MAGIC:
        raise FormatError(f"bad magic {blob[:4]!r}, expected {GRID_MAGIC!r}", offset=0)
    if blob[4] != GRID_VERSION:
        raise FormatError(f"unsupported grid version {blob[4]}", offset=4)
    ndim = blob[5]
    if ndim == 0:
        raise FormatError("grid rank must be positive", offset=5)
    dims_end = 6 + 8 * ndim
    if len(blob) < dims_end:
        raise FormatError("grid file truncated inside its extents", offset=len(blob))
    dims = struct.unpack(f"<{ndim}Q", blob[6:dims_end])
    count = 1
    for d in dims:
        if d == 0:
            raise FormatError(f"zero extent in dims {dims}", offset=6)
        count *= d
    expected_end = dims_end + 8 * count
    if len(blob) < expected_end:
        raise FormatError(
            f"grid file truncated: expected {expected_end} bytes, found {len(blob)}",
            offset=len(blob),
        )
    if len(blob) > expected_end:
        raise FormatError(
            f"{len(blob) - expected_end} trailing byte(s) after the payload",
            offset=expected_end,
        )
    flat = np.frombuffer(blob, dtype="<f8", count=count, offset=dims_end)
    return flat.reshape(dims).astype(float)


def format_cell(value) -> str:
    """Render one table cell; floats use shortest round-trip precision."""
    if isinstance(value, str):
        return value
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def write_table(path, header, rows) -> None:
    """Write a rectangular CSV table with a header row; atomic."""
    header = [str(h) for h in header]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for i, row in enumerate(rows):
        cells = list(row)
        if len(cells) != len(header):
            raise ConformanceError(
                f"row {i} has {len(cells)} cells, header has {len(header)}"
            )
        writer.writerow([format_cell(c) for c in cells])
    atomic_write_text(path, buf.getvalue())


def read_table(path):
    """Read a CSV table; returns (header, rows of strings), rectangular."""
    with open(path, "r", encoding="utf-8", newline="") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise FormatError("table file is empty", offset=0) from None
        rows = []
        for i, row in enumerate(reader):
            if len(row) != len(header):
                raise FormatError(
                    f"row {i + 1} has {len(row)} cells, header has {len(header)}",
                    offset=i + 1,
                )
            rows.append(row)
    return header, rows


def numeric_columns(header, rows, names) -> np.ndarray:
    """Parse named columns as floats; errors name the failing column and row."""
    idx = []
    for name in names:
        if name not in header:
            raise FormatError(f"column {name!r} not in header {header}")
        idx.append(header.index(name))
    out = np.empty((len(rows), len(idx)))
    for r, row in enumerate(rows):
        for c, col in enumerate(idx):
            try:
                out[r, c] = float(row[col])
            except ValueError:
                raise FormatError(
                    f"column {names[c]!r}, row {r + 1}: {row[col]!r} is not numeric",
                    offset=r + 1,
                ) from None
    return out


def file_sha256(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for chunk in iter(lambda: handle.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def read_config(path) -> dict:
    """Read a JSON configuration object."""
    with open(path, "r", encoding="utf-8") as handle:
        try:
            doc = json.load(handle)
        except json.JSONDecodeError as exc:
            raise FormatError(f"invalid JSON: {exc}", offset=exc.pos) from None
    if not isinstance(doc, dict):
        raise FormatError("configuration must be a JSON object")
    return doc


def make_manifest(command: str, config: dict, seed, outputs: dict, timing_s: float) -> dict:
    """Assemble the run manifest: config echo, seed, version, timing, checksums.

    ``outputs`` maps emitted file names to their sha256 hex digests. The
    timing field is the only entry expected to differ between identical
    seeded runs.
    """
    from . import __version__

    return {
        "command": command,
        "config": config,
        "seed": None if seed is None else int(seed),
        "version": __version__,
        "timing_seconds": float(timing_s),
        "outputs": dict(sorted(outputs.items())),
    }


def write_manifest(path, manifest: dict) -> None:
    atomic_write_text(path, json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def read_manifest(path) -> dict:
    return read_config(path)
