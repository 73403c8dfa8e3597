"""Sorted record files with a sparse in-memory index.

A map file is a directory holding ``data`` (a record file sorted by key
bytes) and ``index`` (a record file of ``(key, u64 offset)`` pairs for
every K-th data record, starting with the first).
"""

from __future__ import annotations

import bisect
import heapq
import shutil
import struct
import tempfile
from itertools import islice
from pathlib import Path
from typing import Callable, Iterator, List, Optional, Tuple

from .seqfile import HEADER, KVRecord, MappedFile, SeqFileWriter, TrailerMismatchError, seq_read

DATA = "data"
INDEX = "index"
DEFAULT_INTERVAL = 128
DEFAULT_RUN_RECORDS = 200_000

_U64 = struct.Struct(">Q")


def _sorted_runs(unsorted, scratch: Path, run_records: int) -> List[Path]:
    runs = []
    it = iter(seq_read(unsorted))
    while True:
        chunk = list(islice(it, run_records))
        if not chunk:
            break
        chunk.sort(key=lambda r: r.key)  # list.sort is stable
        path = scratch / f"run-{len(runs):05d}"
        with SeqFileWriter(path) as w:
            for key, value in chunk:
                w.append(key, value)
        runs.append(path)
    return runs


def write_mapfile(records, out_dir, interval: int = DEFAULT_INTERVAL) -> int:
    """Write already-sorted ``(key, value)`` pairs as a map file."""
    if interval < 1:
        raise ValueError("index interval must be at least 1")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    prev = None
    with SeqFileWriter(out / DATA) as data, SeqFileWriter(out / INDEX) as index:
        for key, value in records:
            if prev is not None and key < prev:
                raise ValueError("map file records must be sorted by key")
            prev = key
            n = data.count
            offset = data.append(key, value)
            if n % interval == 0:
                index.append(key, _U64.pack(offset))
    return data.count


def mapfile_build(
    unsorted,
    out_dir,
    interval: int = DEFAULT_INTERVAL,
    scratch: Optional[str] = None,
    run_records: int = DEFAULT_RUN_RECORDS,
) -> "MapFileStore":
    """Stable external merge sort of a record file into a map file.

    Runs of ``run_records`` records are sorted in memory and spilled to
    ``scratch``; ``heapq.merge`` prefers earlier runs on equal keys, so
    records with equal keys keep their input order.
    """
    tmp = Path(tempfile.mkdtemp(prefix="mapfile-", dir=scratch))
    try:
        runs = _sorted_runs(unsorted, tmp, run_records)
        merged = heapq.merge(*(seq_read(r) for r in runs), key=lambda r: r.key)
        write_mapfile(merged, out_dir, interval)
    finally:
        shutil.rmtree(tmp, ignore_errors=True)
    return MapFileStore(out_dir)


class MapFileStore:
    def __init__(self, directory):
        self.dir = Path(directory)
        self.data = MappedFile(self.dir / DATA)
        self.index_keys: List[bytes] = []
        self.index_offsets: List[int] = []
        for key, value in seq_read(self.dir / INDEX):
            self.index_keys.append(key)
            self.index_offsets.append(_U64.unpack(value)[0])
        self._count = _U64.unpack(self.data.buf[-8:])[0]
        for key, off in zip(self.index_keys, self.index_offsets):
            if bytes(self.data.read_at(off)[0]) != key:
                raise TrailerMismatchError(f"{self.dir}: index entry for {key!r} points at the wrong record")

    def __len__(self) -> int:
        return self._count

    def close(self) -> None:
        self.data.close()

    def _records_from(self, offset: int) -> Iterator[Tuple[bytes, bytes]]:
        data = self.data
        while not data.is_trailer(offset):
            key, value, offset = data.read_at(offset)
            yield key, value

    def __iter__(self) -> Iterator[KVRecord]:
        for key, value in self._records_from(len(HEADER)):
            yield KVRecord(bytes(key), bytes(value))

    def _start_offset(self, key: bytes) -> int:
        # greatest sampled key strictly below ``key``: equal keys may also
        # sit just before a sample point
        i = bisect.bisect_left(self.index_keys, key) - 1
        return self.index_offsets[i] if i >= 0 else len(HEADER)

    def seek_scan(self, prefix: bytes, predicate: Optional[Callable[[bytes], bool]] = None) -> Iterator[KVRecord]:
        """Records from the first key >= ``prefix`` onwards, while
        ``predicate(key)`` holds (default: the key starts with ``prefix``).
        """
        if predicate is None:
            def predicate(k, _p=prefix):
                return k.startswith(_p)
        started = False
        for key, value in self._records_from(self._start_offset(prefix)):
            if not started:
                if key < prefix:
                    continue
                started = True
            key = bytes(key)
            if not predicate(key):
                return
            yield KVRecord(key, bytes(value))

    def get(self, key: bytes) -> List[bytes]:
        return [r.value for r in self.seek_scan(key, lambda k: k == key)]
