"""Binary matrix file formats and the singular-value CSV.

Two on-disk layouts, both row-major little-endian IEEE 754:

raw    headerless payload; rows, cols and dtype must be supplied by the
       caller (the lowest common denominator for interop with other tools).

spca   a 22-byte self-describing header followed by the same payload:
           bytes 0..3   magic "SPCA"
           byte  4      format version, currently 1
           bytes 5..12  u64 rows, little endian
           bytes 13..20 u64 cols, little endian
           byte  21     dtype code = element width in bytes (4 or 8)

Singular-value CSV: one line per value, "i,sigma" with 1-based i, no
header, values printed with 17 significant digits so they round-trip
float64 exactly.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import FormatError

MAGIC = b"SPCA"
VERSION = 1
HEADER_STRUCT = struct.Struct("<4sBQQB")
HEADER_BYTES = HEADER_STRUCT.size  # 22

_DTYPES = {4: np.dtype("<f4"), 8: np.dtype("<f8")}


@dataclass(frozen=True)
class FileLayout:
    """Physical layout of a matrix file: shape, element type, payload start."""

    rows: int
    cols: int
    dtype: np.dtype
    offset: int = 0

    @property
    def payload_bytes(self) -> int:
        return self.rows * self.cols * self.dtype.itemsize


def _check_dtype(dtype) -> np.dtype:
    dt = np.dtype(dtype).newbyteorder("<")
    if dt.itemsize not in _DTYPES or dt.kind != "f":
        raise FormatError(f"unsupported element type {dtype!r}; use float32 or float64")
    return dt


def write_header(fh, rows: int, cols: int, dtype) -> None:
    dt = _check_dtype(dtype)
    fh.write(HEADER_STRUCT.pack(MAGIC, VERSION, rows, cols, dt.itemsize))


def read_header(path) -> FileLayout:
    """Parse a self-describing header and validate it against the file size."""
    with open(path, "rb") as fh:
        blob = fh.read(HEADER_BYTES)
    if len(blob) < HEADER_BYTES:
        raise FormatError(f"{path}: too short to hold a header")
    magic, version, rows, cols, code = HEADER_STRUCT.unpack(blob)
    if magic != MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise FormatError(f"{path}: unsupported format version {version}")
    if code not in _DTYPES:
        raise FormatError(f"{path}: unknown dtype code {code}")
    layout = FileLayout(rows=rows, cols=cols, dtype=_DTYPES[code], offset=HEADER_BYTES)
    validate_size(path, layout)
    return layout


def raw_layout(path, rows: int, cols: int, dtype) -> FileLayout:
    """Layout for a headerless file with externally declared dimensions."""
    if rows < 1 or cols < 1:
        raise FormatError(f"{path}: declared dims must be positive, got {rows}x{cols}")
    layout = FileLayout(rows=rows, cols=cols, dtype=_check_dtype(dtype), offset=0)
    validate_size(path, layout)
    return layout


def validate_size(path, layout: FileLayout) -> None:
    import os

    actual = os.path.getsize(path)
    expect = layout.offset + layout.payload_bytes
    if actual != expect:
        raise FormatError(
            f"{path}: size {actual} bytes does not match declared "
            f"{layout.rows}x{layout.cols} {layout.dtype.name} layout ({expect} bytes)"
        )


def sniff_layout(path, rows=None, cols=None, dtype=None) -> FileLayout:
    """Detect the layout: self-describing header if magic and size agree,
    else raw with the caller's declared dimensions."""
    try:
        return read_header(path)
    except FormatError:
        pass
    if rows is None or cols is None or dtype is None:
        raise FormatError(
            f"{path}: no self-describing header; rows, cols and dtype are required"
        )
    return raw_layout(path, rows, cols, dtype)


def write_matrix(path, a: np.ndarray, dtype="float32", header: bool = True) -> None:
    """Write a 2-d array in one go. Streaming writers should use
    write_header plus incremental tofile instead."""
    dt = _check_dtype(dtype)
    a = np.ascontiguousarray(a)
    with open(path, "wb") as fh:
        if header:
            write_header(fh, a.shape[0], a.shape[1], dt)
        a.astype(dt, copy=False).tofile(fh)


def read_matrix(path, rows=None, cols=None, dtype=None) -> np.ndarray:
    """Read a whole matrix file into a float64 array."""
    layout = sniff_layout(path, rows, cols, dtype)
    with open(path, "rb") as fh:
        fh.seek(layout.offset)
        data = np.fromfile(fh, dtype=layout.dtype, count=layout.rows * layout.cols)
    if data.size != layout.rows * layout.cols:
        raise FormatError(f"{path}: truncated payload")
    return data.astype(np.float64).reshape(layout.rows, layout.cols)


def write_sigma_csv(path, values) -> None:
    values = np.asarray(values, dtype=np.float64).ravel()
    with open(path, "w", encoding="ascii") as fh:
        for i, v in enumerate(values, start=1):
            fh.write(f"{i},{v:.17g}\n")


def read_sigma_csv(path) -> np.ndarray:
    out = []
    with open(path, "r", encoding="ascii") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                idx_s, val_s = line.split(",")
                idx, val = int(idx_s), float(val_s)
            except ValueError as exc:
                raise FormatError(f"{path}:{lineno}: malformed line {line!r}") from exc
            if idx != len(out) + 1:
                raise FormatError(f"{path}:{lineno}: expected index {len(out) + 1}, got {idx}")
            out.append(val)
    return np.asarray(out, dtype=np.float64)
