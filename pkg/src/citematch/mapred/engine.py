"""Single-machine map/reduce over record files.

A job reads its input record files, cuts them into contiguous splits and
runs the mapper over each split in a worker process.  Without a reducer
the job is map-only and the output is the map output in input order.
With a reducer, map output is partitioned by ``crc32(key) % partitions``,
sorted by key (stably, spilling sorted runs to scratch), merged per
partition in split order and reduced key by key; the output is the
reducer output of partition 0, then 1, and so on.

Because splits are contiguous and merged in split order, values reach the
reducer in global input order, and the output bytes depend only on the
input and the functions, never on ``workers``.

Mappers and reducers are plain callables (instances of picklable classes
when ``workers > 1``)::

    mapper(key: bytes, value: bytes) -> iterable of (key, value)
    reducer(key: bytes, values: iterator of bytes) -> iterable of (key, value)
"""

from __future__ import annotations

import heapq
import logging
import multiprocessing
import shutil
import tempfile
import time
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from itertools import groupby
from operator import itemgetter
from pathlib import Path
from typing import Callable, List, Optional, Sequence

from .seqfile import MappedFile, SeqFileWriter, iter_with_offsets, parse_records, seq_read

log = logging.getLogger(__name__)

DEFAULT_PARTITIONS = 4
DEFAULT_SPILL_RECORDS = 100_000


class JobError(RuntimeError):
    pass


@dataclass
class JobSpec:
    inputs: Sequence
    output: str
    mapper: Optional[Callable] = None
    reducer: Optional[Callable] = None
    workers: int = 1
    partitions: int = DEFAULT_PARTITIONS
    scratch: Optional[str] = None
    name: str = "job"
    spill_records: int = DEFAULT_SPILL_RECORDS

    def __post_init__(self):
        if self.workers < 1:
            raise ValueError("worker count must be at least 1")
        if self.partitions < 1:
            raise ValueError("partition count must be at least 1")


@dataclass
class JobResult:
    output: Path
    records_in: int
    records_out: int
    seconds: float
    counters: dict = field(default_factory=dict)


def identity_mapper(key: bytes, value: bytes):
    yield key, value


def partition_of(key: bytes, partitions: int) -> int:
    return zlib.crc32(key) % partitions


@dataclass(frozen=True)
class _Split:
    task: int
    path: str
    offset: int
    records: int
    before: int  # records preceding ``offset`` in the file


def _plan_splits(inputs: Sequence, n: int) -> List[_Split]:
    located = []
    for path in inputs:
        for k, (offset, _, _) in enumerate(iter_with_offsets(path)):
            located.append((str(path), offset, k))
    total = len(located)
    splits = []
    if not total:
        return splits
    n = min(n, total)
    bounds = [total * i // n for i in range(n + 1)]
    for t in range(n):
        lo, hi = bounds[t], bounds[t + 1]
        # a split never straddles two input files
        while lo < hi:
            path, offset, k = located[lo]
            end = lo
            while end < hi and located[end][0] == path:
                end += 1
            splits.append(_Split(len(splits), path, offset, end - lo, k))
            lo = end
    return splits


def _read_split(split: _Split):
    f = MappedFile(split.path)
    try:
        it = parse_records(f.buf, split.path, start=split.offset, count_from=split.before)
        for i, (_, key, value) in enumerate(it):
            if i >= split.records:
                break
            yield key, value
    finally:
        f.close()


def _apply_mapper(mapper, key, value):
    try:
        return list(mapper(key, value))
    except Exception as exc:
        raise JobError(f"map failed on key {key!r}: {exc!r}") from exc


def _map_task(split: _Split, mapper, shuffle: bool, partitions: int, scratch: str, spill_records: int):
    scratch = Path(scratch)
    mapper = mapper or identity_mapper
    n_in = n_out = 0
    if not shuffle:
        out = scratch / f"map-{split.task:05d}"
        with SeqFileWriter(out) as w:
            for key, value in _read_split(split):
                n_in += 1
                for k, v in _apply_mapper(mapper, key, value):
                    w.append(k, v)
                    n_out += 1
        return split.task, [str(out)], n_in, n_out

    buffers = [[] for _ in range(partitions)]
    buffered = 0
    runs: List[List[str]] = [[] for _ in range(partitions)]

    def spill():
        for p, buf in enumerate(buffers):
            if not buf:
                continue
            buf.sort(key=itemgetter(0))
            path = scratch / f"spill-{split.task:05d}-{len(runs[p]):04d}-p{p:03d}"
            with SeqFileWriter(path) as w:
                for k, v in buf:
                    w.append(k, v)
            runs[p].append(str(path))
            buf.clear()

    for key, value in _read_split(split):
        n_in += 1
        for k, v in _apply_mapper(mapper, key, value):
            buffers[partition_of(k, partitions)].append((k, v))
            buffered += 1
            n_out += 1
        if buffered >= spill_records:
            spill()
            buffered = 0
    spill()
    return split.task, runs, n_in, n_out


def _reduce_task(part: int, runs: List[str], reducer, scratch: str):
    out = Path(scratch) / f"reduce-{part:05d}"
    merged = heapq.merge(*(seq_read(r) for r in runs), key=itemgetter(0))
    n = 0
    with SeqFileWriter(out) as w:
        for key, group in groupby(merged, key=itemgetter(0)):
            values = (v for _, v in group)
            try:
                produced = list(reducer(key, values))
            except Exception as exc:
                raise JobError(f"reduce failed on key {key!r}: {exc!r}") from exc
            for k, v in produced:
                w.append(k, v)
                n += 1
    return part, str(out), n


def _concat(parts: List[str], output) -> int:
    with SeqFileWriter(output) as w:
        for p in parts:
            for k, v in seq_read(p):
                w.append(k, v)
    return w.count


def _executor(workers: int):
    if workers == 1:
        return None
    return ProcessPoolExecutor(max_workers=workers, mp_context=multiprocessing.get_context("fork"))


def run_job(spec: JobSpec) -> JobResult:
    t0 = time.perf_counter()
    Path(spec.output).parent.mkdir(parents=True, exist_ok=True)
    scratch = tempfile.mkdtemp(prefix=f"{spec.name}-", dir=spec.scratch)
    shuffle = spec.reducer is not None
    pool = _executor(spec.workers)
    try:
        splits = _plan_splits(spec.inputs, spec.workers)
        args = [(s, spec.mapper, shuffle, spec.partitions, scratch, spec.spill_records) for s in splits]
        if pool is None:
            mapped = [_map_task(*a) for a in args]
        else:
            mapped = list(pool.map(_map_task, *zip(*args))) if args else []
        mapped.sort(key=itemgetter(0))
        n_in = sum(m[2] for m in mapped)
        if not shuffle:
            parts = [m[1][0] for m in mapped]
        else:
            per_part = [[] for _ in range(spec.partitions)]
            for _, runs, _, _ in mapped:
                for p in range(spec.partitions):
                    per_part[p].extend(runs[p])
            rargs = [(p, per_part[p], spec.reducer, scratch) for p in range(spec.partitions)]
            if pool is None:
                reduced = [_reduce_task(*a) for a in rargs]
            else:
                reduced = list(pool.map(_reduce_task, *zip(*rargs)))
            reduced.sort(key=itemgetter(0))
            parts = [r[1] for r in reduced]
        n_out = _concat(parts, spec.output)
    finally:
        if pool is not None:
            pool.shutdown()
        shutil.rmtree(scratch, ignore_errors=True)
    elapsed = time.perf_counter() - t0
    log.info("%s: %d records in, %d out, %.2fs", spec.name, n_in, n_out, elapsed)
    return JobResult(Path(spec.output), n_in, n_out, elapsed)
