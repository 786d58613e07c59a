import csv
import subprocess
import sys

import numpy as np
import pytest

from xcomp.cli import main, parse_sizes, read_vector, write_vector
from xcomp.errors import InvalidArgumentError


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr().out
    kv = dict(line.split("=", 1) for line in out.splitlines() if "=" in line)
    return code, kv


@pytest.fixture
def cheb_op(tmp_path, capsys):
    path = tmp_path / "op.xc"
    code, kv = run(capsys, "build", "--transform", "chebyshev", "--n", 1024, "--eps1", 1e-10,
                   "--eps2", 1e-3, "--out", path)
    assert code == 0
    return path, kv


def test_build_reports_sparsity(cheb_op):
    _, kv = cheb_op
    assert 0 < float(kv["sparsity"]) < 0.1
    for key in ("build_seconds", "bandwidth", "s", "zeta", "nnz"):
        assert key in kv
    assert 0.2 * 1024 <= int(kv["s"]) <= 0.3 * 1024


def test_build_without_out_is_usage_error(capsys):
    with pytest.raises(SystemExit) as info:
        main(["build", "--transform", "chebyshev", "--n", "64"])
    assert info.value.code == 2


def test_build_without_n(capsys, tmp_path):
    with pytest.raises(SystemExit) as info:
        main(["build", "--transform", "chebyshev", "--out", str(tmp_path / "x")])
    assert info.value.code == 2


@pytest.mark.parametrize("argv", [
    ["--transform", "bogus", "--n", "8"],
    ["--transform", "chebyshev", "--n", "8", "--eps1", "1e-2", "--eps2", "1e-3"],
    ["--transform", "chebyshev", "--n", "8", "--band-policy", "fixed"],
    ["--transform", "cos-power:x", "--n", "8"],
])
def test_invalid_combinations_exit_2(capsys, tmp_path, argv):
    assert main(["build", *argv, "--out", str(tmp_path / "x.xc")]) == 2


def test_numeric_failure_exit_3(capsys, tmp_path):
    code = main(["build", "--transform", "chebyshev", "--n", "4", "--eps1", "1e-15",
                 "--eps2", "0.9999999", "--out", str(tmp_path / "x.xc")])
    assert code == 3


def test_unwritable_output_exit_6(capsys, tmp_path):
    code = main(["build", "--transform", "chebyshev", "--n", "16",
                 "--out", str(tmp_path / "missing" / "x.xc")])
    assert code == 6


def test_legendre_block_widths(capsys, tmp_path):
    code, kv = run(capsys, "build", "--transform", "legendre", "--n", 128, "--eps1", 1e-10,
                   "--eps2", 1e-3, "--out", tmp_path / "leg.xc")
    assert code == 0
    widths = [int(w) for w in kv["widths"].split(",")]
    assert len(widths) == 2
    assert abs(widths[0] - 151) <= 0.2 * 151 and abs(widths[1] - 29) <= 0.2 * 29


def test_apply_zero_vector(cheb_op, tmp_path, capsys):
    path, _ = cheb_op
    write_vector(tmp_path / "in.txt", np.zeros(1024))
    assert main(["apply", "--op", str(path), "--in", str(tmp_path / "in.txt"),
                 "--out", str(tmp_path / "out.txt")]) == 0
    assert np.all(read_vector(tmp_path / "out.txt") == 0)


def test_apply_matches_direct_product(cheb_op, tmp_path, rng):
    path, _ = cheb_op
    x = rng.random(1024)
    (tmp_path / "in.txt").write_text("\n".join(repr(float(v)) for v in x) + "\n")
    assert main(["apply", "--op", str(path), "--in", str(tmp_path / "in.txt"),
                 "--out", str(tmp_path / "out.txt"), "--nodes", "chebyshev"]) == 0
    y = read_vector(tmp_path / "out.txt")
    th = np.pi * np.arange(1024) / 1023
    want = np.cos(np.outer(th, np.arange(1024))) @ x
    assert np.max(np.abs(y - want)) / np.max(np.abs(want)) <= 1e-7
    # deterministic output
    main(["apply", "--op", str(path), "--in", str(tmp_path / "in.txt"),
          "--out", str(tmp_path / "out2.txt")])
    assert (tmp_path / "out.txt").read_bytes() == (tmp_path / "out2.txt").read_bytes()


def test_apply_wrong_length(cheb_op, tmp_path, capsys):
    path, _ = cheb_op
    write_vector(tmp_path / "in.txt", np.zeros(1000))
    assert main(["apply", "--op", str(path), "--in", str(tmp_path / "in.txt"),
                 "--out", str(tmp_path / "o.txt")]) == 2


def test_apply_digest_mismatch(cheb_op, tmp_path, capsys):
    path, _ = cheb_op
    write_vector(tmp_path / "in.txt", np.zeros(1024))
    assert main(["apply", "--op", str(path), "--in", str(tmp_path / "in.txt"),
                 "--out", str(tmp_path / "o.txt"), "--nodes", "equispaced"]) == 4


def test_apply_missing_operator(tmp_path, capsys):
    write_vector(tmp_path / "in.txt", np.zeros(4))
    assert main(["apply", "--op", str(tmp_path / "none.xc"), "--in", str(tmp_path / "in.txt"),
                 "--out", str(tmp_path / "o.txt")]) == 6


def test_apply_wrong_direction(cheb_op, tmp_path, capsys):
    path, _ = cheb_op
    write_vector(tmp_path / "in.txt", np.zeros(1024))
    assert main(["apply", "--op", str(path), "--in", str(tmp_path / "in.txt"),
                 "--out", str(tmp_path / "o.txt"), "--direction", "forward"]) == 2


def test_verify_passes_at_config_tolerance(cheb_op, capsys):
    path, _ = cheb_op
    code, kv = run(capsys, "verify", "--op", path, "--tol", 1e-7, "--trials", 2, "--seed", 3)
    assert code == 0 and kv["pass"] == "1"
    assert float(kv["max_rel_inf"]) <= 1e-7


def test_verify_absurd_tolerance(cheb_op, capsys):
    path, _ = cheb_op
    code, kv = run(capsys, "verify", "--op", path, "--tol", 1e-30)
    assert code == 5 and kv["pass"] == "0"


def test_verify_is_deterministic(cheb_op, capsys):
    path, _ = cheb_op
    _, a = run(capsys, "verify", "--op", path, "--seed", 9)
    _, b = run(capsys, "verify", "--op", path, "--seed", 9)
    assert a == b


def test_verify_near_exact_small_operator(tmp_path, capsys):
    run(capsys, "build", "--transform", "cos", "--n", 16, "--eps1", 1e-15, "--eps2", 1e-2,
        "--out", tmp_path / "s.xc")
    code, kv = run(capsys, "verify", "--op", tmp_path / "s.xc", "--tol", 1e-12)
    assert code == 0 and float(kv["max_rel_inf"]) <= 1e-12


@pytest.mark.parametrize("transform,extra", [
    ("sin", []), ("exp", ["--nodes", "equispaced"]), ("cos-power:2", []),
    ("jacobi:1,1", []), ("laguerre-spectral", ["--eta", "2500", "--period", "4"]),
    ("laguerre-time", ["--eta", "100", "--eps1", "1e-13"]),
])
def test_every_transform_builds_and_verifies(tmp_path, capsys, transform, extra):
    path = tmp_path / "t.xc"
    code, _ = run(capsys, "build", "--transform", transform, "--n", 96, *extra, "--out", path)
    assert code == 0
    code, kv = run(capsys, "verify", "--op", path, "--tol", 1e-7)
    assert code == 0, kv


def test_jacobi_forward_direction(tmp_path, capsys):
    path = tmp_path / "j.xc"
    run(capsys, "build", "--transform", "legendre", "--n", 64, "--out", path)
    code, kv = run(capsys, "verify", "--op", path, "--direction", "forward", "--tol", 1e-7)
    assert code == 0 and kv["direction"] == "forward"


def test_forward_trig_operator(tmp_path, capsys):
    path = tmp_path / "f.xc"
    run(capsys, "build", "--transform", "chebyshev", "--n", 128, "--direction", "forward",
        "--out", path)
    code, kv = run(capsys, "verify", "--op", path, "--tol", 1e-7)
    assert code == 0 and kv["direction"] == "forward"


def test_file_nodes(tmp_path, capsys, rng):
    th = np.sort(rng.uniform(0, np.pi, 50))
    np.savetxt(tmp_path / "nodes.txt", th)
    path = tmp_path / "n.xc"
    code, _ = run(capsys, "build", "--transform", "cos", "--n", 50,
                  "--nodes", f"file:{tmp_path / 'nodes.txt'}", "--out", path)
    assert code == 0
    assert run(capsys, "verify", "--op", path)[0] == 0


def test_preset(tmp_path, capsys):
    code, kv = run(capsys, "build", "--transform", "chebyshev", "--n", 256,
                   "--preset", "trig-1e-15", "--out", tmp_path / "p.xc")
    assert code == 0 and kv["config"] == "fixed-bandwidth(24)"


def test_bench_smoke(tmp_path, capsys):
    out = tmp_path / "b.csv"
    code, kv = run(capsys, "bench", "--transform", "chebyshev", "--sizes", "64,128",
                   "--reps", 1, "--csv", out)
    assert code == 0
    rows = list(csv.DictReader(out.open(newline="")))
    assert int(kv["rows"]) == len(rows) == 8
    assert {r["stage"] for r in rows} == {"precompute-dense", "precompute-fast",
                                          "apply-compressed", "apply-direct"}
    for r in rows:
        assert float(r["seconds"]) >= 0
        if r["stage"] == "apply-compressed":
            assert float(r["max_rel_err"]) <= 1e-7


def test_bench_unwritable_csv(tmp_path, capsys):
    assert main(["bench", "--transform", "chebyshev", "--sizes", "32", "--reps", "1",
                 "--csv", str(tmp_path / "no" / "b.csv")]) == 6


def test_parse_sizes():
    assert parse_sizes("2^10..2^12") == [1024, 2048, 4096]
    assert parse_sizes("100,2^3") == [100, 8]
    with pytest.raises(InvalidArgumentError):
        parse_sizes("a..b")


def test_vector_format(tmp_path):
    (tmp_path / "v.txt").write_text("# header\n1.5\n\n2 -3\n")
    np.testing.assert_array_equal(read_vector(tmp_path / "v.txt"), [1.5, 2 - 3j])
    (tmp_path / "bad.txt").write_text("1 2 3\n")
    with pytest.raises(InvalidArgumentError):
        read_vector(tmp_path / "bad.txt")
    write_vector(tmp_path / "w.txt", np.array([0.1 + 0.2j]))
    assert (tmp_path / "w.txt").read_text() == "0.1 0.2\n"


def test_threads_flag_sets_environment(tmp_path, capsys, monkeypatch):
    monkeypatch.delenv("XCOMP_THREADS", raising=False)
    import os
    assert main(["build", "--transform", "chebyshev", "--n", "32", "--threads", "2",
                 "--out", str(tmp_path / "t.xc")]) == 0
    assert os.environ["XCOMP_THREADS"] == "2"


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "xcomp", "build", "--transform", "chebyshev",
                           "--n", "32", "--out", str(tmp_path / "m.xc")],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and "sparsity=" in proc.stdout
