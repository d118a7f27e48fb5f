"""Embedding corpus file formats.

Two interchangeable encodings of the same content:

* JSONL, one record per line: ``{"id": "...", "vectors": [[...], ...]}``
* binary container: magic ``CRSP``, format version (u16), dim (u32),
  record count (u64), then per record an id length (u16), the UTF-8 id,
  a row count (u32), and row-major little-endian float32 data.

Values are quantized to float32 at load time in both formats, so
JSONL -> binary -> JSONL round-trips bit for bit. All dims within a
file must match and ids must be unique.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .core import TokenMatrix, validate
from .errors import DimensionMismatch, ParseError

MAGIC = b"CRSP"
FORMAT_VERSION = 1


def _check_uniform(records: Sequence[TokenMatrix]) -> int:
    seen: set[str] = set()
    dim = None
    for rec in records:
        validate(rec)
        if rec.id in seen:
            raise ParseError(f"duplicate record id {rec.id!r}")
        seen.add(rec.id)
        if dim is None:
            dim = rec.d
        elif rec.d != dim:
            raise DimensionMismatch(f"record {rec.id!r} has d={rec.d}, expected {dim}")
    if dim is None:
        raise ParseError("no records to write")
    return dim


def read_jsonl(path: str | Path) -> list[TokenMatrix]:
    records: list[TokenMatrix] = []
    seen: set[str] = set()
    dim = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"{path}: line {lineno}: invalid JSON ({exc.msg})") from None
            if not isinstance(obj, dict) or "id" not in obj or "vectors" not in obj:
                raise ParseError(f"{path}: line {lineno}: record needs 'id' and 'vectors'")
            rec_id = obj["id"]
            if not isinstance(rec_id, str):
                raise ParseError(f"{path}: line {lineno}: id must be a string")
            if rec_id in seen:
                raise ParseError(f"{path}: line {lineno}: duplicate id {rec_id!r}")
            seen.add(rec_id)
            try:
                arr = np.asarray(obj["vectors"], dtype=np.float64)
            except (ValueError, TypeError):
                raise ParseError(f"{path}: line {lineno}: ragged or non-numeric vectors") from None
            if arr.ndim != 2 or arr.shape[0] == 0 or arr.shape[1] == 0:
                raise ParseError(f"{path}: line {lineno}: vectors must be a nonempty 2-d array")
            if not np.isfinite(arr).all():
                raise ParseError(f"{path}: line {lineno}: non-finite component")
            if dim is None:
                dim = arr.shape[1]
            elif arr.shape[1] != dim:
                raise ParseError(
                    f"{path}: line {lineno}: dim {arr.shape[1]} differs from {dim}"
                )
            # on-disk precision is float32; quantize on the way in
            records.append(TokenMatrix(rec_id, arr.astype(np.float32).astype(np.float64)))
    if not records:
        raise ParseError(f"{path}: no records")
    return records


def write_jsonl(records: Sequence[TokenMatrix], path: str | Path) -> None:
    _check_uniform(records)
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            rows = rec.rows.astype(np.float32)
            obj = {"id": rec.id, "vectors": [[float(v) for v in row] for row in rows]}
            fh.write(json.dumps(obj, separators=(",", ":")) + "\n")


def read_binary(path: str | Path) -> list[TokenMatrix]:
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:4] != MAGIC:
        raise ParseError(f"{path}: byte 0: bad magic, not an embedding container")
    try:
        version, dim = struct.unpack_from("<HI", data, 4)
        (count,) = struct.unpack_from("<Q", data, 10)
    except struct.error:
        raise ParseError(f"{path}: byte 4: truncated header") from None
    if version != FORMAT_VERSION:
        raise ParseError(f"{path}: unsupported format version {version}")
    if dim == 0:
        raise ParseError(f"{path}: dim is 0")
    offset = 18
    records: list[TokenMatrix] = []
    seen: set[str] = set()
    for i in range(count):
        try:
            (id_len,) = struct.unpack_from("<H", data, offset)
            offset += 2
            rec_id = data[offset : offset + id_len].decode("utf-8")
            offset += id_len
            (rows,) = struct.unpack_from("<I", data, offset)
            offset += 4
        except (struct.error, UnicodeDecodeError):
            raise ParseError(f"{path}: byte {offset}: truncated or invalid record {i}") from None
        if rows == 0:
            raise ParseError(f"{path}: record {rec_id!r} has no rows")
        if rec_id in seen:
            raise ParseError(f"{path}: duplicate id {rec_id!r}")
        seen.add(rec_id)
        nbytes = rows * dim * 4
        blob = data[offset : offset + nbytes]
        if len(blob) != nbytes:
            raise ParseError(f"{path}: byte {offset}: truncated vector data for {rec_id!r}")
        offset += nbytes
        arr = np.frombuffer(blob, dtype="<f4").reshape(rows, dim)
        records.append(TokenMatrix(rec_id, arr.astype(np.float64)))
    if offset != len(data):
        raise ParseError(f"{path}: byte {offset}: trailing bytes after last record")
    if not records:
        raise ParseError(f"{path}: no records")
    return records


def write_binary(records: Sequence[TokenMatrix], path: str | Path) -> None:
    dim = _check_uniform(records)
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<HIQ", FORMAT_VERSION, dim, len(records)))
        for rec in records:
            ident = rec.id.encode("utf-8")
            if len(ident) > 0xFFFF:
                raise ParseError(f"record id too long: {rec.id[:32]!r}...")
            fh.write(struct.pack("<H", len(ident)))
            fh.write(ident)
            fh.write(struct.pack("<I", rec.n))
            fh.write(rec.rows.astype("<f4").tobytes(order="C"))


def sniff_format(path: str | Path) -> str:
    """Return 'binary' or 'jsonl' by inspecting the leading bytes."""
    with open(path, "rb") as fh:
        head = fh.read(4)
    return "binary" if head == MAGIC else "jsonl"


def read_embeddings(path: str | Path) -> list[TokenMatrix]:
    if sniff_format(path) == "binary":
        return read_binary(path)
    return read_jsonl(path)


def write_embeddings(records: Sequence[TokenMatrix], path: str | Path, fmt: str) -> None:
    if fmt == "binary":
        write_binary(records, path)
    elif fmt == "jsonl":
        write_jsonl(records, path)
    else:
        raise ValueError(f"unknown format {fmt!r}")
