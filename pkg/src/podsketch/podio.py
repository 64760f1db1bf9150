"""Reading and writing the on-disk formats.

Two binary formats are defined here:

* ``PODM`` — a dense matrix: magic ``PODM``, version (uint32 LE, currently
  1), rows (uint64 LE), cols (uint64 LE), then rows*cols float64 LE values
  in column-major order.
* ``PODF`` — a truncated factor: a PODM block holding U, then a uint64 mode
  count followed by that many float64 singular values, a uint8 flag, and —
  when the flag is 1 — a PODM block holding V.

CSV ingestion expects one matrix row per line with comma-separated decimal
literals; blank lines and ``#`` comments are skipped.  All parse failures
raise :class:`~podsketch.errors.FormatError` (the CLI maps it to exit 3).
"""

from __future__ import annotations

import contextlib
import struct

import numpy as np

from .errors import FormatError
from .matcore import TruncatedFactor, as_dense

MAGIC = b"PODM"
VERSION = 1
_HEADER = struct.Struct("<4sIQQ")  # magic, version, rows, cols
HEADER_BYTES = _HEADER.size


@contextlib.contextmanager
def _opened(path_or_file, mode):
    if hasattr(path_or_file, "read") or hasattr(path_or_file, "write"):
        yield path_or_file
    else:
        with open(path_or_file, mode) as f:
            yield f


def write_matrix_header(f, rows, cols):
    f.write(_HEADER.pack(MAGIC, VERSION, rows, cols))


def read_matrix_header(f, *, what="matrix"):
    """Parse a PODM header from the stream, returning ``(rows, cols)``."""
    raw = f.read(HEADER_BYTES)
    if len(raw) < HEADER_BYTES:
        raise FormatError(f"truncated {what} header ({len(raw)} of {HEADER_BYTES} bytes)")
    magic, version, rows, cols = _HEADER.unpack(raw)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}; not a PODM {what}")
    if version != VERSION:
        raise FormatError(f"unsupported PODM version {version} (expected {VERSION})")
    return rows, cols


def _write_block(f, a):
    a = np.asarray(a, dtype=np.float64)
    write_matrix_header(f, a.shape[0], a.shape[1])
    f.write(a.astype("<f8", copy=False).tobytes(order="F"))


def _read_block(f, *, what="matrix"):
    rows, cols = read_matrix_header(f, what=what)
    need = rows * cols * 8
    raw = f.read(need)
    if len(raw) < need:
        raise FormatError(
            f"truncated {what} payload ({len(raw)} of {need} bytes for {rows}x{cols})"
        )
    data = np.frombuffer(raw, dtype="<f8")
    return data.reshape((rows, cols), order="F")


def write_matrix(path_or_file, a):
    """Write a dense matrix as a PODM file."""
    a = as_dense(a)
    with _opened(path_or_file, "wb") as f:
        _write_block(f, a)


def read_matrix(path_or_file):
    """Read a PODM file into a validated read-only matrix."""
    with _opened(path_or_file, "rb") as f:
        data = _read_block(f)
    if data.size == 0:
        raise FormatError("PODM matrix has zero rows or columns")
    if not np.isfinite(data).all():
        raise FormatError("PODM matrix contains non-finite values")
    return as_dense(data)


def write_factor(path_or_file, factor):
    """Persist a :class:`TruncatedFactor` as a PODF file."""
    with _opened(path_or_file, "wb") as f:
        _write_block(f, factor.u)
        f.write(struct.pack("<Q", factor.nmodes))
        f.write(factor.sigma.astype("<f8", copy=False).tobytes())
        if factor.v is None:
            f.write(struct.pack("<B", 0))
        else:
            f.write(struct.pack("<B", 1))
            _write_block(f, factor.v)


def read_factor(path_or_file):
    """Load a PODF file back into a :class:`TruncatedFactor`."""
    with _opened(path_or_file, "rb") as f:
        u = _read_block(f, what="factor U")
        raw = f.read(8)
        if len(raw) < 8:
            raise FormatError("truncated factor: missing sigma count")
        (count,) = struct.unpack("<Q", raw)
        if count != u.shape[1]:
            raise FormatError(
                f"factor U has {u.shape[1]} columns but sigma count is {count}"
            )
        raw = f.read(8 * count)
        if len(raw) < 8 * count:
            raise FormatError("truncated factor: sigma vector cut short")
        sigma = np.frombuffer(raw, dtype="<f8").astype(np.float64)
        raw = f.read(1)
        if len(raw) < 1:
            raise FormatError("truncated factor: missing V flag")
        v = None
        if raw[0] == 1:
            v = _read_block(f, what="factor V")
        elif raw[0] != 0:
            raise FormatError(f"factor V flag must be 0 or 1, got {raw[0]}")
    try:
        u = np.array(u, dtype=np.float64, order="F")
        if v is not None:
            v = np.array(v, dtype=np.float64, order="F")
        return TruncatedFactor(u, sigma, v)
    except Exception as exc:
        raise FormatError(f"factor file violates invariants: {exc}") from exc


def read_csv_matrix(path_or_file):
    """Parse comma-separated text (one matrix row per line) into a matrix.

    Ragged rows and unparseable fields raise :class:`FormatError` naming the
    offending 1-based line number.
    """
    rows = []
    width = None
    with _opened(path_or_file, "r") as f:
        for lineno, line in enumerate(f, start=1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            fields = text.split(",")
            try:
                row = [float(x) for x in fields]
            except ValueError:
                raise FormatError(f"line {lineno}: unparseable numeric field") from None
            if width is None:
                width = len(row)
            elif len(row) != width:
                raise FormatError(
                    f"line {lineno}: expected {width} fields, got {len(row)}"
                )
            rows.append(row)
    if not rows:
        raise FormatError("CSV input contains no data rows")
    return as_dense(np.array(rows))
