import csv
import io
import json
import shutil
import subprocess

import numpy as np
import pytest

from sparse_fd.cli import main
from sparse_fd.formats import (
    FormatError,
    ForwardOnlyReader,
    open_stream,
    read_manifest,
    read_sketch,
    write_matrix_market,
)

from conftest import random_sparse


def rows_of(A):
    from sparse_fd import SparseRow
    return [SparseRow.from_dense(a) for a in A]


@pytest.fixture
def mm_file(tmp_path):
    A = random_sparse(120, 25, 0.2, 3)
    path = tmp_path / "a.mtx"
    write_matrix_market(rows_of(A), *A.shape, path)
    return path, A


class TestSketchCommand:
    def test_empty_stream_gives_zero_sketch(self, tmp_path):
        src = tmp_path / "empty.mtx"
        src.write_text("%%MatrixMarket matrix coordinate real general\n0 9 0\n")
        out = tmp_path / "B.csv"
        assert main(["sketch", "--input", str(src), "--ell", "4", "--output", str(out)]) == 0
        np.testing.assert_array_equal(read_sketch(out), np.zeros((4, 9)))

    @pytest.mark.parametrize("algo", ["fd", "sfd"])
    def test_same_seed_same_bytes(self, mm_file, tmp_path, algo):
        src, _ = mm_file
        outs = []
        for name in ("x.csv", "y.csv"):
            out = tmp_path / name
            assert main(["sketch", "--input", str(src), "--algo", algo, "--ell", "6",
                         "--seed", "4", "--output", str(out)]) == 0
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]

    def test_manifest_contents(self, mm_file, tmp_path):
        src, A = mm_file
        out = tmp_path / "B.csv"
        main(["sketch", "--input", str(src), "--ell", "5", "--seed", "2", "--output", str(out)])
        meta = read_manifest(f"{out}.manifest.json")
        assert meta["seed"] == 2 and meta["rows"] == A.shape[0] and meta["d"] == 25
        assert meta["config"]["algo"] == "sfd" and meta["verifier_calls"] >= 0
        assert meta["delta_spent"] < meta["config"]["delta"]

    def test_ell_above_d(self, mm_file, tmp_path):
        src, _ = mm_file
        assert main(["sketch", "--input", str(src), "--ell", "26", "--output", str(tmp_path / "B")]) == 1

    def test_missing_input(self, tmp_path):
        assert main(["sketch", "--input", str(tmp_path / "nope"), "--ell", "2",
                     "--output", str(tmp_path / "B")]) == 1

    def test_unordered_rows_rejected(self, tmp_path, capsys):
        src = tmp_path / "bad.mtx"
        src.write_text("%%MatrixMarket matrix coordinate real general\n3 3 2\n2 1 1.0\n1 1 1.0\n")
        assert main(["sketch", "--input", str(src), "--ell", "2", "--output", str(tmp_path / "B")]) == 1
        assert "non-decreasing" in capsys.readouterr().err

    def test_numerical_failure_exit_code(self, mm_file, tmp_path, monkeypatch):
        monkeypatch.setattr("sparse_fd.shrink.verify_spectral", lambda *a, **k: False)
        src, _ = mm_file
        assert main(["sketch", "--input", str(src), "--ell", "5", "--output", str(tmp_path / "B")]) == 2

    def test_bad_subcommand_exit_code(self):
        with pytest.raises(SystemExit) as exc:
            main(["frobnicate"])
        assert exc.value.code == 1


class TestFormats:
    def test_forward_only(self, mm_file):
        src, _ = mm_file
        reader = ForwardOnlyReader(open(src))
        reader.readline()
        assert not reader.seekable()
        with pytest.raises(io.UnsupportedOperation):
            reader.seek(0)
        reader.close()

    def test_missing_rows_are_empty(self, tmp_path):
        src = tmp_path / "gap.mtx"
        src.write_text("%%MatrixMarket matrix coordinate real general\n4 3 2\n1 1 2.0\n3 2 5.0\n")
        stream = open_stream(src)
        dense = np.array([r.to_dense(3) for r in stream.rows])
        np.testing.assert_array_equal(dense, [[2, 0, 0], [0, 0, 0], [0, 5, 0], [0, 0, 0]])

    def test_entry_count_mismatch(self, tmp_path):
        src = tmp_path / "short.mtx"
        src.write_text("%%MatrixMarket matrix coordinate real general\n2 2 3\n1 1 1.0\n")
        with pytest.raises(FormatError):
            list(open_stream(src).rows)

    def test_headerless_plain_needs_dim(self, tmp_path):
        src = tmp_path / "rows.txt"
        src.write_text("0:1 2:3\n1:4\n")
        with pytest.raises(FormatError):
            open_stream(src)
        dense = np.array([r.to_dense(3) for r in open_stream(src, d=3).rows])
        np.testing.assert_array_equal(dense, [[1, 0, 3], [0, 4, 0]])


class TestGenerateAndEval:
    def test_generate_full_rows(self, tmp_path):
        out = tmp_path / "g.rows"
        assert main(["generate", "--n", "7", "--d", "12", "--z", "12", "--seed", "1",
                     "--output", str(out)]) == 0
        lines = out.read_text().splitlines()
        assert lines[0].startswith("#") and len(lines) == 8
        assert all(len(line.split()) == 12 for line in lines[1:])

    def test_eval_identity_sketch(self, tmp_path, capsys):
        A = random_sparse(8, 20, 0.5, 1)
        src = tmp_path / "a.mtx"
        write_matrix_market(rows_of(A), *A.shape, src)
        sk = tmp_path / "B.csv"
        np.savetxt(sk, A, delimiter=",", fmt="%.17g")
        assert main(["eval", "--matrix", str(src), "--sketch", str(sk), "--k", "3"]) == 0
        row = next(csv.DictReader(io.StringIO(capsys.readouterr().out)))
        assert float(row["proj_err"]) == pytest.approx(1.0, abs=1e-9)
        assert float(row["cov_err"]) <= 1e-9

    def test_eval_column_mismatch(self, mm_file, tmp_path):
        src, _ = mm_file
        sk = tmp_path / "B.csv"
        sk.write_text("1,2,3\n")
        assert main(["eval", "--matrix", str(src), "--sketch", str(sk)]) == 1


def test_replay_reproduces_output(mm_file, tmp_path):
    src, _ = mm_file
    out = tmp_path / "B.csv"
    main(["sketch", "--input", str(src), "--ell", "6", "--seed", "9", "--output", str(out)])
    first = out.read_bytes()
    out.unlink()
    assert main(["replay", f"{out}.manifest.json"]) == 0
    assert out.read_bytes() == first


def test_bench_timing_only(tmp_path):
    out = tmp_path / "nnz.csv"
    assert main(["bench", "--sweep", "ell", "--scale", "0.01", "--no-metrics", "--fast-q",
                 "--out-csv", str(out)]) == 0
    rows = list(csv.DictReader(open(out)))
    assert {r["algo"] for r in rows} == {"fd", "sfd"}
    assert sorted({int(r["ell"]) for r in rows}) == [5, 10, 25, 50, 75, 100]
    assert all(r["proj_err"] == "nan" and float(r["wall_seconds"]) > 0 for r in rows)
    assert json.loads(open(f"{out}.manifest.json").read())["command"] == "bench"


@pytest.mark.skipif(shutil.which("sparse-fd") is None, reason="console script not installed")
def test_console_script_exit_codes(tmp_path):
    bad = subprocess.run(["sparse-fd", "sketch"], capture_output=True)
    assert bad.returncode == 1
    ok = subprocess.run(["sparse-fd", "--version"], capture_output=True, text=True)
    assert ok.returncode == 0 and ok.stdout.strip()
