from .engine import JobError, JobResult, JobSpec, run_job
from .jobs import (
    PHASES,
    ingest_jsonl,
    job_build_index,
    job_match,
    match_reference,
    open_index,
    read_docs,
    write_docs,
)
from .mapfile import MapFileStore, mapfile_build
from .seqfile import (
    BadMagicError,
    KVRecord,
    SeqFileError,
    TrailerMismatchError,
    TruncatedRecordError,
    seq_read,
    seq_write,
)

__all__ = [
    "BadMagicError",
    "JobError",
    "JobResult",
    "JobSpec",
    "KVRecord",
    "MapFileStore",
    "PHASES",
    "SeqFileError",
    "TrailerMismatchError",
    "TruncatedRecordError",
    "ingest_jsonl",
    "job_build_index",
    "job_match",
    "mapfile_build",
    "match_reference",
    "open_index",
    "read_docs",
    "run_job",
    "seq_read",
    "seq_write",
    "write_docs",
]
