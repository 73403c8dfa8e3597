import random
import struct

import pytest
from hypothesis import given, settings, strategies as st

from citematch.mapred.mapfile import MapFileStore, mapfile_build, write_mapfile
from citematch.mapred.seqfile import (
    BadMagicError,
    KVRecord,
    TrailerMismatchError,
    TruncatedRecordError,
    count_records,
    seq_read,
    seq_write,
)


def random_records(rng, n, max_len=20):
    def blob():
        return bytes(rng.randrange(256) for _ in range(rng.randint(0, max_len)))
    return [(blob(), blob()) for _ in range(n)]


def test_empty_stream_is_header_and_trailer(tmp_path):
    p = tmp_path / "e.seq"
    assert seq_write(p, []) == 0
    assert p.read_bytes() == b"CMSQ\x01" + b"\xff" * 8 + struct.pack(">Q", 0)
    assert list(seq_read(p)) == []


def test_bit_exact_layout(tmp_path):
    p = tmp_path / "r.seq"
    seq_write(p, [(b"ab", b""), (b"", b"xyz")])
    expected = (
        b"CMSQ\x01"
        + struct.pack(">I", 2) + b"ab" + struct.pack(">I", 0)
        + struct.pack(">I", 0) + struct.pack(">I", 3) + b"xyz"
        + b"\xff" * 8 + struct.pack(">Q", 2)
    )
    assert p.read_bytes() == expected


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(st.binary(max_size=40), st.binary(max_size=40)), max_size=30))
def test_round_trip_property(tmp_path_factory, records):
    p = tmp_path_factory.mktemp("rt") / "r.seq"
    assert seq_write(p, records) == len(records)
    assert [tuple(r) for r in seq_read(p)] == records
    assert all(isinstance(r, KVRecord) for r in seq_read(p))


def test_bad_magic(tmp_path):
    p = tmp_path / "r.seq"
    seq_write(p, [(b"k", b"v")])
    data = bytearray(p.read_bytes())
    data[0] = ord("X")
    p.write_bytes(bytes(data))
    with pytest.raises(BadMagicError):
        list(seq_read(p))
    p.write_bytes(b"")
    with pytest.raises(BadMagicError):
        list(seq_read(p))


def test_truncation_reports_offset(tmp_path):
    rng = random.Random(5)
    p = tmp_path / "r.seq"
    records = random_records(rng, 50)
    seq_write(p, records)
    whole = p.read_bytes()
    # offsets of every record start, to know where truncation lands
    starts = [5]
    for k, v in records:
        starts.append(starts[-1] + 8 + len(k) + len(v))
    for _ in range(40):
        cut = rng.randrange(6, len(whole) - 1)
        p.write_bytes(whole[:cut])
        with pytest.raises(TruncatedRecordError) as info:
            list(seq_read(p))
        at = info.value.offset
        assert at in starts and at <= cut
        assert str(at) in str(info.value)


def test_trailer_mismatch(tmp_path):
    p = tmp_path / "r.seq"
    seq_write(p, [(b"a", b"1"), (b"b", b"2")])
    data = p.read_bytes()
    p.write_bytes(data[:-8] + struct.pack(">Q", 3))
    with pytest.raises(TrailerMismatchError):
        list(seq_read(p))
    p.write_bytes(data + b"x")
    with pytest.raises(TrailerMismatchError):
        list(seq_read(p))
    p.write_bytes(data)
    assert count_records(p) == 2


@pytest.mark.parametrize("interval", [1, 3, 128])
def test_mapfile_build_sorts_reverse_input(tmp_path, interval):
    keys = [f"k{i:04d}".encode() for i in range(1000)]
    src = tmp_path / "in.seq"
    seq_write(src, [(k, k[::-1]) for k in reversed(keys)])
    store = mapfile_build(src, tmp_path / "mf", interval=interval, run_records=97)
    assert [r.key for r in store] == sorted(keys)
    assert len(store) == 1000
    assert len(store.index_keys) == -(-1000 // interval)
    store.close()


def test_mapfile_build_is_stable(tmp_path):
    rng = random.Random(0)
    records = [(bytes([rng.randrange(4)]), str(i).encode()) for i in range(500)]
    src = tmp_path / "in.seq"
    seq_write(src, records)
    store = mapfile_build(src, tmp_path / "mf", interval=7, run_records=33)
    assert [tuple(r) for r in store] == sorted(records, key=lambda r: r[0])
    for key in {k for k, _ in records}:
        assert store.get(key) == [v for k, v in records if k == key]


def test_mapfile_sorted_input_unchanged_and_empty(tmp_path):
    src = tmp_path / "in.seq"
    seq_write(src, [(b"a", b"1"), (b"b", b"2")])
    assert [r.key for r in mapfile_build(src, tmp_path / "mf")] == [b"a", b"b"]
    seq_write(src, [])
    store = mapfile_build(src, tmp_path / "empty")
    assert len(store) == 0 and list(store.seek_scan(b"a")) == []


def test_write_mapfile_rejects_unsorted(tmp_path):
    with pytest.raises(ValueError):
        write_mapfile([(b"b", b""), (b"a", b"")], tmp_path / "mf")


def scan_oracle(records, prefix):
    return [r for r in sorted(records, key=lambda r: r[0]) if r[0] >= prefix and r[0].startswith(prefix)]


def random_store(tmp_path, rng, name):
    records = sorted(
        ((bytes(rng.choice(b"abc") for _ in range(rng.randint(0, 6))), bytes([rng.randrange(256)]))
         for _ in range(rng.randint(0, 300))),
        key=lambda r: r[0],
    )
    write_mapfile(records, tmp_path / name, interval=rng.randint(1, 20))
    return records, MapFileStore(tmp_path / name)


def test_seek_scan_matches_linear_oracle(tmp_path):
    rng = random.Random(7)
    for n in range(20):
        records, store = random_store(tmp_path, rng, f"s{n}")
        prefixes = [b"", b"a", b"ab", b"cc", b"cccccccc", b"d", b"b"] + [r[0][:2] for r in records[:5]]
        for prefix in prefixes:
            assert [tuple(r) for r in store.seek_scan(prefix)] == scan_oracle(records, prefix)
        store.close()


def test_seek_scan_predicate_and_edges(tmp_path):
    records = [(b"a", b"1"), (b"b", b"2"), (b"ba", b"3"), (b"c", b"4")]
    write_mapfile(records, tmp_path / "mf", interval=2)
    store = MapFileStore(tmp_path / "mf")
    assert list(store.seek_scan(b"z")) == []
    assert [r.key for r in store.seek_scan(b"b")] == [b"b", b"ba"]
    assert next(iter(store.seek_scan(b"ba"))).key == b"ba"
    # a predicate may continue past the prefix
    assert [r.key for r in store.seek_scan(b"b", lambda k: True)] == [b"b", b"ba", b"c"]
    assert store.get(b"c") == [b"4"] and store.get(b"bb") == []
