"""Binary snapshot container used for parameter checkpoints and buffer dumps.

Everything is little-endian:

    magic      8 bytes   b"UEROCL01"
    nsections  uint32
    section:
        tag    8 bytes   ASCII, right-padded with spaces
        nrec   uint64
        record:
            index  uint32
            ndim   uint32
            dims   uint64 * ndim
            data   float64 * prod(dims), row-major

Arrays round-trip bit-exactly: they are serialized as raw '<f8' bytes and
read back with the same dtype.
"""

from __future__ import annotations

import struct
from typing import Dict, List, Tuple

import numpy as np

MAGIC = b"UEROCL01"

Sections = Dict[str, List[Tuple[int, np.ndarray]]]


class ContainerFormatError(ValueError):
    pass


def write_container(path, sections: Sections) -> None:
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", len(sections)))
        for tag, records in sections.items():
            raw = tag.encode("ascii")
            if len(raw) > 8:
                raise ValueError(f"section tag {tag!r} longer than 8 bytes")
            fh.write(raw.ljust(8))
            fh.write(struct.pack("<Q", len(records)))
            for index, arr in records:
                # tobytes() below always emits row-major bytes, so no
                # contiguity normalization that would flatten 0-d arrays
                arr = np.asarray(arr, dtype=np.float64)
                fh.write(struct.pack("<II", int(index), arr.ndim))
                if arr.ndim:
                    fh.write(struct.pack(f"<{arr.ndim}Q", *arr.shape))
                fh.write(arr.astype("<f8", copy=False).tobytes())


def _take(buf: bytes, offset: int, n: int, what: str) -> tuple[bytes, int]:
    if offset + n > len(buf):
        raise ContainerFormatError(f"truncated container while reading {what}")
    return buf[offset : offset + n], offset + n


def read_container(path) -> Sections:
    with open(path, "rb") as fh:
        buf = fh.read()
    chunk, off = _take(buf, 0, 8, "magic")
    if chunk != MAGIC:
        raise ContainerFormatError(f"bad magic {chunk!r}, expected {MAGIC!r}")
    chunk, off = _take(buf, off, 4, "section count")
    (nsect,) = struct.unpack("<I", chunk)
    sections: Sections = {}
    for _ in range(nsect):
        chunk, off = _take(buf, off, 8, "section tag")
        tag = chunk.decode("ascii").rstrip(" ")
        chunk, off = _take(buf, off, 8, "record count")
        (nrec,) = struct.unpack("<Q", chunk)
        records: List[Tuple[int, np.ndarray]] = []
        for _ in range(nrec):
            chunk, off = _take(buf, off, 8, "record header")
            index, ndim = struct.unpack("<II", chunk)
            chunk, off = _take(buf, off, 8 * ndim, "record dims")
            dims = struct.unpack(f"<{ndim}Q", chunk) if ndim else ()
            count = 1
            for d in dims:
                count *= d
            chunk, off = _take(buf, off, 8 * count, "record data")
            arr = np.frombuffer(chunk, dtype="<f8").reshape(dims).copy()
            records.append((index, arr))
        sections[tag] = records
    if off != len(buf):
        raise ContainerFormatError(f"{len(buf) - off} trailing bytes after last section")
    return sections
