"""Matrix Market ingestion and a bit-exact binary container for all storage formats."""

from __future__ import annotations

import dataclasses
import io
import os
import struct
from typing import NamedTuple

import numpy as np

from .argcsr import ArgCsrMatrix
from .core import CsrMatrix, csr_from_arrays
from .ellpack import EllpackMatrix, SlicedEllpackMatrix
from .errors import BoundsError, FormatError, ParseError, SparseFormatError, UnsupportedError

MAGIC = b"SPFMTBIN"
VERSION = 1

# Tag values are part of the on-disk format; never renumber.
FORMAT_TAGS = {CsrMatrix: 1, EllpackMatrix: 2, SlicedEllpackMatrix: 3, ArgCsrMatrix: 4}
_TAG_TO_FORMAT = {tag: cls for cls, tag in FORMAT_TAGS.items()}

_KNOWN_OBJECTS = {"matrix", "vector"}
_KNOWN_FORMATS = {"coordinate", "array"}
_KNOWN_FIELDS = {"real", "integer", "pattern", "complex", "double"}
_KNOWN_SYMMETRIES = {"general", "symmetric", "skew-symmetric", "hermitian"}


class MatrixMarketHeader(NamedTuple):
    object: str
    format: str
    field: str
    symmetry: str


def _read_text(source):
    if isinstance(source, (str, os.PathLike)):
        with open(source, "rb") as fh:
            data = fh.read()
    elif isinstance(source, (bytes, bytearray, memoryview)):
        data = bytes(source)
    else:
        data = source.read()
    if isinstance(data, bytes):
        data = data.decode("latin-1")
    return data


def parse_header(line: str) -> MatrixMarketHeader:
    tokens = line.strip().split()
    if len(tokens) != 5 or tokens[0].lower() != "%%matrixmarket":
        raise ParseError(f"not a Matrix Market banner: {line.strip()!r}")
    obj, fmt, field, sym = (t.lower() for t in tokens[1:])
    if obj not in _KNOWN_OBJECTS or fmt not in _KNOWN_FORMATS or field not in _KNOWN_FIELDS \
            or sym not in _KNOWN_SYMMETRIES:
        raise ParseError(f"unrecognised Matrix Market qualifiers: {line.strip()!r}")
    if field == "double":
        field = "real"
    header = MatrixMarketHeader(obj, fmt, field, sym)
    if obj != "matrix" or fmt != "coordinate":
        raise UnsupportedError(f"only 'matrix coordinate' files are supported, got '{obj} {fmt}'")
    if field == "complex" or sym == "hermitian":
        raise UnsupportedError("complex matrices are not supported")
    return header


def read_matrix_market(source) -> CsrMatrix:
    """Read a coordinate Matrix Market file into CSR.

    ``source`` may be a path, raw bytes, or a text/binary file object.
    Symmetric and skew-symmetric storage is expanded to general form and
    pattern files get value 1.0 for every entry.
    """
    lines = _read_text(source).splitlines()
    if not lines:
        raise ParseError("empty Matrix Market stream")
    header = parse_header(lines[0])
    body = [ln for ln in lines[1:] if ln.strip() and not ln.lstrip().startswith("%")]
    if not body:
        raise ParseError("missing size line")
    try:
        num_rows, num_cols, nnz = (int(t) for t in body[0].split())
    except ValueError:
        raise ParseError(f"malformed size line: {body[0]!r}") from None
    if num_rows < 1 or num_cols < 1 or nnz < 0:
        raise ParseError(f"invalid matrix size {num_rows}x{num_cols} with {nnz} entries")
    entries = body[1:]
    if len(entries) != nnz:
        raise ParseError(f"header declares {nnz} entries, found {len(entries)}")

    width = 2 if header.field == "pattern" else 3
    tokens = " ".join(entries).split()
    if len(tokens) != width * nnz:
        raise ParseError(f"each entry line must have {width} fields")
    try:
        rows = np.array(tokens[0::width]).astype(np.int64) - 1
        cols = np.array(tokens[1::width]).astype(np.int64) - 1
        if header.field == "pattern":
            values = np.ones(nnz)
        elif header.field == "integer":
            values = np.array(tokens[2::width]).astype(np.int64).astype(np.float64)
        else:
            values = np.array(tokens[2::width]).astype(np.float64)
    except ValueError as exc:
        raise ParseError(f"malformed entry: {exc}") from None
    if nnz and (rows.min() < 0 or rows.max() >= num_rows or cols.min() < 0 or cols.max() >= num_cols):
        raise BoundsError(f"entry index outside declared {num_rows}x{num_cols} bounds")

    if header.symmetry != "general":
        off = rows != cols
        mirrored = -values[off] if header.symmetry == "skew-symmetric" else values[off]
        rows, cols = np.concatenate((rows, cols[off])), np.concatenate((cols, rows[off]))
        values = np.concatenate((values, mirrored))
    return csr_from_arrays(num_rows, num_cols, rows, cols, values)


def write_matrix_market(A: CsrMatrix, sink, field: str = "real", comment: str | None = None):
    """Write ``A`` as a general coordinate file (1-based indexes)."""
    if field not in ("real", "integer", "pattern"):
        raise UnsupportedError(f"cannot write field {field!r}")
    out = [f"%%MatrixMarket matrix coordinate {field} general"]
    if comment:
        out.extend("%" + ln for ln in comment.splitlines())
    out.append(f"{A.num_rows} {A.num_cols} {A.nnz}")
    for r, c, v in zip(A.row_indices() + 1, A.columns + 1, A.values):
        if field == "pattern":
            out.append(f"{r} {c}")
        elif field == "integer":
            out.append(f"{r} {c} {int(v)}")
        else:
            out.append(f"{r} {c} {float(v)!r}")
    text = "\n".join(out) + "\n"
    if isinstance(sink, (str, os.PathLike)):
        with open(sink, "w", encoding="ascii") as fh:
            fh.write(text)
    elif isinstance(sink, io.TextIOBase):
        sink.write(text)
    else:
        sink.write(text.encode("ascii"))


def _array_dtype(name):
    return np.dtype("<f8") if name == "values" else np.dtype("<i8")


def to_bytes(fmt) -> bytes:
    """Serialize a format instance.

    Layout: magic, ``<H`` version, ``<B`` format tag, then each dataclass field
    in declaration order: integers as ``<q``, arrays as a ``<Q`` element count
    followed by little-endian ``f8`` (values) or ``i8`` (everything else).
    """
    tag = FORMAT_TAGS.get(type(fmt))
    if tag is None:
        raise FormatError(f"cannot serialize {type(fmt).__name__}")
    parts = [MAGIC, struct.pack("<HB", VERSION, tag)]
    for f in dataclasses.fields(fmt):
        value = getattr(fmt, f.name)
        if isinstance(value, np.ndarray):
            flat = value.reshape(-1).astype(_array_dtype(f.name), copy=False)
            parts.append(struct.pack("<Q", flat.size))
            parts.append(flat.tobytes())
        else:
            parts.append(struct.pack("<q", value))
    return b"".join(parts)


class _Reader:
    def __init__(self, data):
        self.data = memoryview(data)
        self.pos = 0

    def take(self, n):
        if self.pos + n > len(self.data):
            raise ParseError(f"truncated stream: need {n} bytes at offset {self.pos}")
        chunk = self.data[self.pos: self.pos + n]
        self.pos += n
        return chunk

    def unpack(self, fmt):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))


def from_bytes(data) -> object:
    r = _Reader(data)
    if len(r.data) < len(MAGIC) or bytes(r.data[: len(MAGIC)]) != MAGIC:
        raise FormatError("bad magic: not a spformats binary container")
    r.take(len(MAGIC))
    version, tag = r.unpack("<HB")
    if version != VERSION:
        raise FormatError(f"unsupported container version {version}")
    cls = _TAG_TO_FORMAT.get(tag)
    if cls is None:
        raise FormatError(f"unknown format tag {tag}")
    kwargs = {}
    for f in dataclasses.fields(cls):
        if f.type in ("int", int):
            (kwargs[f.name],) = r.unpack("<q")
        else:
            (count,) = r.unpack("<Q")
            dtype = _array_dtype(f.name)
            kwargs[f.name] = np.frombuffer(r.take(count * dtype.itemsize), dtype=dtype)
    if r.pos != len(r.data):
        raise ParseError(f"{len(r.data) - r.pos} trailing bytes after payload")
    try:
        return cls(**kwargs)
    except SparseFormatError as exc:
        raise ParseError(f"inconsistent {cls.__name__} payload: {exc}") from exc


def write_binary(fmt, sink):
    payload = to_bytes(fmt)
    if isinstance(sink, (str, os.PathLike)):
        with open(sink, "wb") as fh:
            fh.write(payload)
    else:
        sink.write(payload)


def read_binary(source):
    if isinstance(source, (str, os.PathLike)):
        with open(source, "rb") as fh:
            return from_bytes(fh.read())
    if isinstance(source, (bytes, bytearray, memoryview)):
        return from_bytes(source)
    return from_bytes(source.read())
