import random

import pytest

import oracles
from citematch.mapred.engine import JobError, JobSpec, run_job
from citematch.mapred.seqfile import seq_read, seq_write


class WordMapper:
    def __call__(self, key, value):
        for w in value.split():
            yield w, b"1"


class SumReducer:
    def __call__(self, key, values):
        yield key, str(sum(int(v) for v in values)).encode()


class ConcatReducer:
    """Keeps arrival order visible in the output."""

    def __call__(self, key, values):
        yield key, b",".join(values)


class FailOn:
    def __init__(self, bad):
        self.bad = bad

    def __call__(self, key, value):
        if key == self.bad:
            raise RuntimeError("boom")
        yield key, value


def text_records(rng, n):
    words = [b"alpha", b"beta", b"gamma", b"delta", b"eps"]
    return [(str(i).encode(), b" ".join(rng.choice(words) for _ in range(rng.randint(0, 6)))) for i in range(n)]


def test_identity_map_only(tmp_path):
    records = text_records(random.Random(0), 50)
    seq_write(tmp_path / "in.seq", records)
    res = run_job(JobSpec([tmp_path / "in.seq"], str(tmp_path / "out.seq")))
    assert [tuple(r) for r in seq_read(res.output)] == records
    assert res.records_in == res.records_out == 50


@pytest.mark.parametrize("workers", [1, 2, 8])
def test_word_count_equals_oracle(tmp_path, workers):
    records = text_records(random.Random(1), 300)
    seq_write(tmp_path / "in.seq", records)
    res = run_job(JobSpec([tmp_path / "in.seq"], str(tmp_path / "out.seq"), WordMapper(), SumReducer(),
                          workers=workers, spill_records=37))
    got = {k: int(v) for k, v in seq_read(res.output)}
    assert got == oracles.word_count(records)


def test_output_bytes_independent_of_workers(tmp_path):
    rng = random.Random(2)
    seq_write(tmp_path / "a.seq", text_records(rng, 120))
    seq_write(tmp_path / "b.seq", text_records(rng, 80))
    outputs = []
    for workers in (1, 2, 3, 8):
        out = tmp_path / f"out{workers}.seq"
        run_job(JobSpec([tmp_path / "a.seq", tmp_path / "b.seq"], str(out), WordMapper(), ConcatReducer(),
                        workers=workers, spill_records=50))
        outputs.append(out.read_bytes())
    assert len(set(outputs)) == 1


def test_reducer_sees_values_in_input_order(tmp_path):
    records = [(b"k", str(i).encode()) for i in range(40)]
    seq_write(tmp_path / "in.seq", records)
    for workers in (1, 4):
        out = tmp_path / f"o{workers}.seq"
        run_job(JobSpec([tmp_path / "in.seq"], str(out), None, ConcatReducer(), workers=workers, spill_records=3))
        assert list(seq_read(out))[0].value == b",".join(v for _, v in records)


def test_empty_input(tmp_path):
    seq_write(tmp_path / "in.seq", [])
    for reducer in (None, SumReducer()):
        res = run_job(JobSpec([tmp_path / "in.seq"], str(tmp_path / "out.seq"), WordMapper(), reducer, workers=2))
        assert list(seq_read(res.output)) == [] and res.records_out == 0


@pytest.mark.parametrize("workers", [1, 2])
def test_failing_mapper_names_key(tmp_path, workers):
    seq_write(tmp_path / "in.seq", [(b"ok", b""), (b"bad-key", b"")])
    with pytest.raises(JobError, match="bad-key"):
        run_job(JobSpec([tmp_path / "in.seq"], str(tmp_path / "out.seq"), FailOn(b"bad-key"), workers=workers))


def test_failing_reducer_names_key(tmp_path):
    class Bad:
        def __call__(self, key, values):
            raise ValueError("nope")
    seq_write(tmp_path / "in.seq", [(b"x", b"1")])
    with pytest.raises(JobError, match="reduce failed on key b'x'"):
        run_job(JobSpec([tmp_path / "in.seq"], str(tmp_path / "out.seq"), None, Bad()))


def test_spec_validation():
    with pytest.raises(ValueError):
        JobSpec([], "o", workers=0)
    with pytest.raises(ValueError):
        JobSpec([], "o", partitions=0)
