"""Binary key/value record files.

Layout::

    "CMSQ" 0x01                                   header (5 bytes)
    { u32 key_len, key, u32 value_len, value }*   records, big-endian lengths
    0xFFFFFFFFFFFFFFFF, u64 record_count          trailer

A key length of 0xFFFFFFFF can therefore never occur in a record.
"""

from __future__ import annotations

import mmap
import os
import struct
from pathlib import Path
from typing import Iterable, Iterator, NamedTuple, Tuple

MAGIC = b"CMSQ"
VERSION = 1
HEADER = MAGIC + bytes([VERSION])
TRAILER_MARK = b"\xff" * 8
MAX_LEN = 0xFFFFFFFF - 1

_U32 = struct.Struct(">I")
_U64 = struct.Struct(">Q")


class KVRecord(NamedTuple):
    key: bytes
    value: bytes


class SeqFileError(Exception):
    pass


class BadMagicError(SeqFileError):
    pass


class TruncatedRecordError(SeqFileError):
    def __init__(self, path, offset: int, what: str = "record"):
        super().__init__(f"{path}: truncated {what} at byte offset {offset}")
        self.offset = offset


class TrailerMismatchError(SeqFileError):
    pass


class SeqFileWriter:
    """Appends records; the trailer is written on ``close``."""

    def __init__(self, path):
        self.path = Path(path)
        self._fh = open(self.path, "wb")
        self._fh.write(HEADER)
        self.offset = len(HEADER)
        self.count = 0

    def append(self, key: bytes, value: bytes) -> int:
        """Write one record and return its byte offset."""
        if len(key) > MAX_LEN or len(value) > MAX_LEN:
            raise ValueError("record field too large")
        at = self.offset
        self._fh.write(_U32.pack(len(key)))
        self._fh.write(key)
        self._fh.write(_U32.pack(len(value)))
        self._fh.write(value)
        self.offset += 8 + len(key) + len(value)
        self.count += 1
        return at

    def close(self) -> None:
        if self._fh.closed:
            return
        self._fh.write(TRAILER_MARK)
        self._fh.write(_U64.pack(self.count))
        self._fh.close()

    def abort(self) -> None:
        self._fh.close()
        self.path.unlink(missing_ok=True)

    def __enter__(self) -> "SeqFileWriter":
        return self

    def __exit__(self, exc_type, exc, tb) -> None:
        if exc_type is None:
            self.close()
        else:
            self.abort()


def seq_write(path, records: Iterable[Tuple[bytes, bytes]]) -> int:
    with SeqFileWriter(path) as w:
        for key, value in records:
            w.append(key, value)
    return w.count


def check_header(buf, path) -> None:
    if len(buf) < len(HEADER) or bytes(buf[: len(MAGIC)]) != MAGIC:
        raise BadMagicError(f"{path}: not a record file (bad magic)")
    if buf[len(MAGIC)] != VERSION:
        raise BadMagicError(f"{path}: unsupported record file version {buf[len(MAGIC)]}")


def parse_records(buf, path="<buffer>", start: int = len(HEADER), count_from: int = 0) -> Iterator[Tuple[int, bytes, bytes]]:
    """Yield ``(offset, key, value)`` from ``start`` up to and including the
    trailer check.  ``count_from`` is the number of records before ``start``.
    """
    size = len(buf)
    pos = start
    n = count_from
    while True:
        if pos + 4 > size:
            raise TruncatedRecordError(path, pos, "record header" if pos < size else "file (no trailer)")
        (klen,) = _U32.unpack_from(buf, pos)
        if klen == 0xFFFFFFFF:
            if pos + 16 > size or bytes(buf[pos : pos + 8]) != TRAILER_MARK:
                raise TruncatedRecordError(path, pos, "trailer")
            (declared,) = _U64.unpack_from(buf, pos + 8)
            if declared != n:
                raise TrailerMismatchError(f"{path}: trailer declares {declared} records, found {n}")
            if pos + 16 != size:
                raise TrailerMismatchError(f"{path}: {size - pos - 16} stray bytes after trailer")
            return
        kstart = pos + 4
        if kstart + klen + 4 > size:
            raise TruncatedRecordError(path, pos)
        (vlen,) = _U32.unpack_from(buf, kstart + klen)
        vstart = kstart + klen + 4
        if vstart + vlen > size:
            raise TruncatedRecordError(path, pos)
        yield pos, bytes(buf[kstart : kstart + klen]), bytes(buf[vstart : vstart + vlen])
        n += 1
        pos = vstart + vlen


class MappedFile:
    """Read-only memory map of a record file, header already validated."""

    def __init__(self, path):
        self.path = Path(path)
        with open(self.path, "rb") as fh:
            size = os.fstat(fh.fileno()).st_size
            if size == 0:
                raise BadMagicError(f"{path}: empty file")
            self.buf = mmap.mmap(fh.fileno(), 0, access=mmap.ACCESS_READ)
        check_header(self.buf, path)

    def __len__(self) -> int:
        return len(self.buf)

    def close(self) -> None:
        self.buf.close()

    def read_at(self, offset: int) -> Tuple[bytes, bytes, int]:
        """Record at ``offset`` and the offset of the next one."""
        buf = self.buf
        (klen,) = _U32.unpack_from(buf, offset)
        kstart = offset + 4
        (vlen,) = _U32.unpack_from(buf, kstart + klen)
        vstart = kstart + klen + 4
        return buf[kstart : kstart + klen], buf[vstart : vstart + vlen], vstart + vlen

    def is_trailer(self, offset: int) -> bool:
        return self.buf[offset : offset + 8] == TRAILER_MARK


def iter_with_offsets(path) -> Iterator[Tuple[int, bytes, bytes]]:
    f = MappedFile(path)
    try:
        yield from parse_records(f.buf, path)
    finally:
        f.close()


def seq_read(path) -> Iterator[KVRecord]:
    for _, key, value in iter_with_offsets(path):
        yield KVRecord(key, value)


def count_records(path) -> int:
    """Record count from the trailer, after validating the whole file."""
    return sum(1 for _ in iter_with_offsets(path))
