import csv
import io
import json

import numpy as np
import pytest

from corpus import e8, random_matrix, skew
from spformats import CorrectnessError, IoError, ParameterError, identity, write_matrix_market
from spformats import bench
from spformats.bench import CSV_COLUMNS, bundled_matrix, emit_report, main, run_benchmark, speedup_distribution


def quick(source, **kw):
    kw.setdefault("iterations", 3)
    kw.setdefault("warmup", 1)
    return run_benchmark(source, **kw)


def test_identity_records():
    recs = quick(identity(1000), formats=["csr", "argcsr"])
    assert [r.format for r in recs] == ["csr", "argcsr"]
    assert recs[0].speedup_vs_csr == 1.0
    assert recs[1].threads_per_group == 128 and recs[1].desired_chunk_size == 1


def test_e8_twelve_threads_chunk_two():
    (rec,) = quick(e8(), formats=["argcsr"], threads_per_group=12, desired_chunk_size=2)
    assert rec.stats.assigned_padded_slots == 7
    assert rec.stats.total_allocated_slots == 24


def test_gflops_identity():
    for rec in quick(random_matrix(np.random.default_rng(0), 120, 120)):
        assert rec.gflops * rec.wall_time_per_iteration * 1e9 == pytest.approx(2 * rec.nnz, rel=1e-12)
        assert rec.conversion_time >= 0


def test_loads_from_path():
    recs = quick(bundled_matrix("e8.mtx"), formats=["sliced"], slice_size=4)
    assert recs[0].matrix_name == "e8" and recs[0].slice_size == 4
    assert recs[0].stats.assigned_padded_slots == 21


def test_bad_arguments():
    with pytest.raises(ParameterError):
        quick(identity(3), formats=["coo"])
    with pytest.raises(ParameterError):
        quick(identity(3), iterations=0)


def test_correctness_gate(monkeypatch):
    def broken(M, x, workers=1):
        return np.zeros(M.num_rows)

    original = bench._converter

    def patched(fmt, *args):
        convert, kernel, params = original(fmt, *args)
        return convert, (broken if fmt == "ellpack" else kernel), params

    monkeypatch.setattr(bench, "_converter", patched)
    with pytest.raises(CorrectnessError):
        quick(e8(), formats=["csr", "ellpack"])


def records_for(names, formats=("csr", "argcsr")):
    out = []
    for name, A in names:
        out += quick(A, formats=list(formats), name=name)
    return out


def test_emit_single_record_csv():
    buf = io.StringIO()
    emit_report(quick(identity(5), formats=["csr"]), "csv", buf)
    lines = buf.getvalue().splitlines()
    assert len(lines) == 2
    assert lines[0] == ",".join(CSV_COLUMNS)


def test_emit_three_matrices_two_formats(tmp_path):
    recs = records_for([("e8", e8()), ("skew", skew(20)), ("id", identity(40))])
    out = tmp_path / "r.csv"
    table = emit_report(recs, "csv", out)
    assert len(out.read_text().splitlines()) == 7
    dist = list(csv.DictReader((tmp_path / "r.speedup.csv").open()))
    assert len(dist) == len(table)
    for fmt in ("csr", "argcsr"):
        counts = [int(row[fmt]) for row in dist]
        assert counts == sorted(counts, reverse=True)
        assert counts[0] <= 3


def test_emit_json(tmp_path):
    recs = records_for([("e8", e8())])
    out = tmp_path / "r.json"
    emit_report(recs, "json", out)
    rows = json.loads(out.read_text())
    assert isinstance(rows, list) and len(rows) == 2
    assert all(list(r) == list(CSV_COLUMNS) for r in rows)
    assert json.loads((tmp_path / "r.speedup.json").read_text())[0]["threshold"] == 2.0 ** -8


def test_emit_errors(tmp_path):
    with pytest.raises(ParameterError):
        emit_report([], "csv", io.StringIO())
    with pytest.raises(IoError):
        emit_report(records_for([("e8", e8())]), "csv", tmp_path / "missing" / "r.csv")


def test_distribution_counts_matrices():
    recs = records_for([("a", e8()), ("b", identity(30))], formats=["csr"])
    table = speedup_distribution(recs, thresholds=[0.5, 1.0, 1.5])
    assert [row["csr"] for row in table] == [2, 2, 0]


def test_cli_single_matrix(tmp_path):
    out = tmp_path / "out.csv"
    rc = main(["--matrix", str(bundled_matrix("e8.mtx")), "--formats", "csr,argcsr",
               "--threads-per-group", "12", "--desired-chunk-size", "2", "--iterations", "3",
               "--warmup", "1", "--output", str(out)])
    assert rc == 0
    rows = list(csv.DictReader(out.open()))
    assert [r["format"] for r in rows] == ["csr", "argcsr"]
    assert rows[1]["padded_slots"] == "7" and rows[1]["total_slots"] == "24"
    assert rows[1]["threadsPerGroup"] == "12" and rows[0]["threadsPerGroup"] == ""


def test_cli_batch_and_workers(tmp_path):
    d = tmp_path / "mtx"
    d.mkdir()
    write_matrix_market(e8(), d / "a.mtx")
    write_matrix_market(skew(9), d / "b.mtx")
    out = tmp_path / "out.json"
    rc = main(["--matrix-dir", str(d), "--iterations", "2", "--warmup", "0", "--workers", "2",
               "--style", "json", "--output", str(out)])
    assert rc == 0
    rows = json.loads(out.read_text())
    assert {r["matrix"] for r in rows} == {"a", "b"} and len(rows) == 8


def test_cli_stdout(capsys):
    rc = main(["--matrix", str(bundled_matrix("e8.mtx")), "--formats", "csr", "--iterations", "1",
               "--warmup", "0"])
    captured = capsys.readouterr()
    assert rc == 0
    assert captured.out.splitlines()[0] == ",".join(CSV_COLUMNS)
    assert captured.err.startswith("threshold,csr")


def test_cli_failures(tmp_path, monkeypatch):
    assert main(["--matrix-dir", str(tmp_path)]) == 1
    bad = tmp_path / "bad.mtx"
    bad.write_text("not a matrix\n")
    assert main(["--matrix", str(bad)]) == 1

    def fail(*a, **k):
        raise CorrectnessError("mismatch")

    monkeypatch.setattr(bench, "run_benchmark", fail)
    assert main(["--matrix", str(bundled_matrix("e8.mtx"))]) == 1
