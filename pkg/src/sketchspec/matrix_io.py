"""Read and write dense matrices.

Two formats are supported:

``mm``
    MatrixMarket dense array, ``%%MatrixMarket matrix array real general``.
    Entries are stored one per line in column-major order using ``repr``, so a
    round trip reproduces every float64 exactly.
``bin``
    Little-endian binary: the magic ``b"SKSP"``, ``u32 rows``, ``u32 cols``,
    then ``rows * cols`` float64 values in row-major order.
"""
import os
import struct

import numpy as np

from .errors import ParseError
from .linalg import as_matrix

MAGIC = b"SKSP"
_HEADER = struct.Struct("<4sII")
MM_BANNER = "%%MatrixMarket matrix array real general"


def _infer_format(path, fmt):
    if fmt is not None:
        if fmt not in ("mm", "bin"):
            raise ValueError(f"unknown matrix format {fmt!r}")
        return fmt
    ext = os.path.splitext(str(path))[1].lower()
    if ext == ".mtx":
        return "mm"
    if ext in (".bin", ".sksp"):
        return "bin"
    with open(path, "rb") as fh:
        head = fh.read(4)
    return "bin" if head == MAGIC else "mm"


def write_matrix(path, A, fmt=None):
    a = as_matrix(A)
    fmt = fmt or ("mm" if str(path).lower().endswith(".mtx") else "bin")
    if fmt == "bin":
        with open(path, "wb") as fh:
            fh.write(_HEADER.pack(MAGIC, a.shape[0], a.shape[1]))
            fh.write(np.ascontiguousarray(a, dtype="<f8").tobytes())
    elif fmt == "mm":
        lines = [MM_BANNER, f"{a.shape[0]} {a.shape[1]}"]
        lines.extend(repr(float(x)) for x in a.ravel(order="F"))
        with open(path, "w", encoding="ascii") as fh:
            fh.write("\n".join(lines) + "\n")
    else:
        raise ValueError(f"unknown matrix format {fmt!r}")


def read_matrix(path, fmt=None):
    fmt = _infer_format(path, fmt)
    if fmt == "bin":
        return _read_bin(path)
    return _read_mm(path)


def _read_bin(path):
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < _HEADER.size:
        raise ParseError("truncated header")
    magic, rows, cols = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise ParseError(f"bad magic {magic!r}")
    expected = _HEADER.size + 8 * rows * cols
    if len(data) != expected:
        raise ParseError(f"expected {expected} bytes for {rows}x{cols}, found {len(data)}")
    a = np.frombuffer(data, dtype="<f8", offset=_HEADER.size).reshape(rows, cols)
    return as_matrix(a.astype(np.float64))


def _read_mm(path):
    with open(path, encoding="ascii", errors="replace") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise ParseError("empty file", 1)
    banner = lines[0].split()
    if len(banner) != 5 or banner[0].lower() != "%%matrixmarket":
        raise ParseError("missing %%MatrixMarket banner", 1)
    obj, layout, field, symmetry = (tok.lower() for tok in banner[1:])
    if obj != "matrix":
        raise ParseError(f"unsupported object {obj!r}", 1)
    if layout != "array":
        raise ParseError(f"only dense 'array' layout is supported, got {layout!r}", 1)
    if field not in ("real", "integer", "double"):
        raise ParseError(f"unsupported field {field!r}", 1)
    if symmetry != "general":
        raise ParseError(f"unsupported symmetry {symmetry!r}", 1)

    body = ((i + 1, ln.strip()) for i, ln in enumerate(lines) if i > 0)
    body = [(no, ln) for no, ln in body if ln and not ln.startswith("%")]
    if not body:
        raise ParseError("missing size line", len(lines))
    size_no, size_line = body[0]
    parts = size_line.split()
    try:
        rows, cols = (int(p) for p in parts)
    except ValueError:
        raise ParseError(f"bad size line {size_line!r}", size_no) from None
    if rows < 1 or cols < 1:
        raise ParseError("dimensions must be positive", size_no)

    values = []
    for no, ln in body[1:]:
        for tok in ln.split():
            try:
                values.append(float(tok))
            except ValueError:
                raise ParseError(f"bad entry {tok!r}", no) from None
    if len(values) != rows * cols:
        raise ParseError(
            f"expected {rows * cols} entries, found {len(values)}",
            body[-1][0],
        )
    a = np.array(values, dtype=np.float64).reshape(cols, rows).T
    if not np.isfinite(a).all():
        raise ParseError("non-finite entry")
    return np.ascontiguousarray(a)
