"""Readers and writers for matrices and reports.

Floats are always written with 17 significant digits so that every report
round-trips bit-exactly.
"""

from __future__ import annotations

import contextlib
import json
import math
import os
import shutil
import struct
import tempfile
from collections.abc import Iterator, Mapping, Sequence
from pathlib import Path

import numpy as np
from numpy.typing import NDArray

from .errors import InputError, ParseError

MAGIC = b"CSEV"
HEADER = struct.Struct("<4sIII")  # magic, n, p, reserved


def fmt_float(value: float) -> str:
    value = float(value)
    if math.isnan(value):
        return "nan"
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return f"{value:.17g}"


def _json_value(obj, indent: int, level: int) -> str:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if obj is None:
        return "null"
    if isinstance(obj, bool | np.bool_):
        return "true" if obj else "false"
    if isinstance(obj, int | np.integer):
        return str(int(obj))
    if isinstance(obj, float | np.floating):
        v = float(obj)
        if math.isnan(v):
            return "NaN"
        if math.isinf(v):
            return "Infinity" if v > 0 else "-Infinity"
        return f"{v:.17g}"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, Mapping):
        if not obj:
            return "{}"
        items = [
            f"{pad}{json.dumps(str(k))}: {_json_value(v, indent, level + 1)}"
            for k, v in obj.items()
        ]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, Sequence | np.ndarray):
        seq = list(obj)
        if not seq:
            return "[]"
        items = [f"{pad}{_json_value(v, indent, level + 1)}" for v in seq]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps_json(obj) -> str:
    """JSON text with 17-significant-digit floats; infinities as ``Infinity``."""
    return _json_value(obj, 2, 0) + "\n"


def write_json(obj, path: str | os.PathLike) -> None:
    Path(path).write_text(dumps_json(obj))


def read_json(path: str | os.PathLike):
    return json.loads(Path(path).read_text())


def write_tsv(path: str | os.PathLike, header: Sequence[str], rows: Iterator[Sequence]) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write("\t".join(header) + "\n")
        for row in rows:
            cells = [fmt_float(c) if isinstance(c, float | np.floating) else str(c) for c in row]
            fh.write("\t".join(cells) + "\n")


def read_tsv(path: str | os.PathLike) -> tuple[list[str], list[list[str]]]:
    with open(path) as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    if not lines:
        raise ParseError(None, "empty file", str(path))
    return lines[0].split("\t"), [ln.split("\t") for ln in lines[1:]]


def read_matrix_tsv(path: str | os.PathLike) -> tuple[NDArray[np.float64], list[str]]:
    """Read a TSV matrix: header row of variable names, one row per sample."""
    header, rows = read_tsv(path)
    p = len(header)
    out = np.empty((len(rows), p))
    for i, row in enumerate(rows, start=2):
        if len(row) != p:
            raise ParseError(i, f"expected {p} fields, found {len(row)}", str(path))
        try:
            out[i - 2] = [float(c) for c in row]
        except ValueError as exc:
            raise ParseError(i, str(exc), str(path)) from None
    return out, header


def write_matrix_tsv(path: str | os.PathLike, values: NDArray, names: Sequence[str] | None = None) -> None:
    values = np.asarray(values, dtype=np.float64)
    if names is None:
        names = [f"V{j + 1}" for j in range(values.shape[1])]
    write_tsv(path, names, (list(map(float, row)) for row in values))


def read_matrix_binary(path: str | os.PathLike) -> NDArray[np.float64]:
    """Read the ``CSEV`` binary format: 16-byte header then row-major little-endian doubles."""
    raw = Path(path).read_bytes()
    if len(raw) < HEADER.size:
        raise ParseError(None, "file shorter than the 16-byte header", str(path))
    magic, n, p, _ = HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise ParseError(None, f"bad magic {magic!r}", str(path))
    expected = HEADER.size + 8 * n * p
    if len(raw) != expected:
        raise ParseError(None, f"expected {expected} bytes for {n}x{p}, found {len(raw)}", str(path))
    return np.frombuffer(raw, dtype="<f8", offset=HEADER.size).reshape(n, p).astype(np.float64)


def write_matrix_binary(path: str | os.PathLike, values: NDArray) -> None:
    values = np.ascontiguousarray(values, dtype="<f8")
    if values.ndim != 2:
        raise InputError("binary matrix must be 2-D")
    n, p = values.shape
    with open(path, "wb") as fh:
        fh.write(HEADER.pack(MAGIC, n, p, 0))
        fh.write(values.tobytes())


def read_matrix(path: str | os.PathLike) -> tuple[NDArray[np.float64], list[str]]:
    """Read a matrix, sniffing the binary format by its magic bytes."""
    path = Path(path)
    if not path.is_file():
        raise InputError(f"no such file: {path}")
    with open(path, "rb") as fh:
        head = fh.read(4)
    if head == MAGIC:
        values = read_matrix_binary(path)
        return values, [f"V{j + 1}" for j in range(values.shape[1])]
    return read_matrix_tsv(path)


@contextlib.contextmanager
def atomic_output_dir(target: str | os.PathLike) -> Iterator[Path]:
    """Yield a scratch directory whose files land in ``target`` only on success."""
    target = Path(target)
    target.parent.mkdir(parents=True, exist_ok=True)
    scratch = Path(tempfile.mkdtemp(prefix=f".{target.name}.", dir=target.parent))
    # mkdtemp creates 0700; give the final directory ordinary permissions
    umask = os.umask(0)
    os.umask(umask)
    scratch.chmod(0o777 & ~umask)
    try:
        yield scratch
    except BaseException:
        shutil.rmtree(scratch, ignore_errors=True)
        raise
    if not target.exists():
        os.replace(scratch, target)
        return
    for item in sorted(scratch.iterdir()):
        dest = target / item.name
        if dest.is_dir() and not dest.is_symlink():
            shutil.rmtree(dest)
        os.replace(item, dest)
    shutil.rmtree(scratch, ignore_errors=True)
