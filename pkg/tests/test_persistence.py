import struct

import numpy as np
import pytest

from xcomp.blocks import Block2DOperator
from xcomp.compressor import CompressionConfig, compress_2d, compress_rows
from xcomp.errors import FormatError, IntegrityError
from xcomp.jacobi import JacobiBasis, JacobiTransform
from xcomp.laguerre import LaguerreBackward2D, LaguerreSpec, SpectralForward, SpectralGrid, time_grid
from xcomp.oracle import test_matrix_source as matrix_source
from xcomp.persistence import (
    CSV_HEADER,
    MAGIC,
    OperatorFile,
    export_csv,
    fnv1a64,
    load_operator,
    node_digest,
    read_csv,
    save_operator,
)
from xcomp.registry import apply
from xcomp.trig import TrigBasisSpec, chebyshev_thetas, equispaced_x_thetas, plan_trig_operator
from xcomp.window import KaiserParams

CFG = CompressionConfig(1e-10, 1e-3)


def same_operator(a, b):
    assert (a.rows, a.cols, a.side, a.window_len, a.line_axis) == \
        (b.rows, b.cols, b.side, b.window_len, b.line_axis)
    assert a.params == b.params and a.col_params == b.col_params
    assert a.max_abs == b.max_abs
    for f in ("run_line", "run_start", "run_len"):
        np.testing.assert_array_equal(getattr(a, f), getattr(b, f))
    assert a.values.tobytes() == b.values.tobytes()


def test_fnv_known_values():
    assert fnv1a64(b"") == 0xCBF29CE484222325
    assert fnv1a64(b"a") == 0xAF63DC4C8601EC8C
    assert fnv1a64(b"foobar") == 0x85944171F73967E8


def test_node_digest_uses_little_endian_f64():
    x = np.array([0.5, -1.25])
    assert node_digest(x) == fnv1a64(struct.pack("<2d", 0.5, -1.25))
    assert node_digest(x.astype(">f8")) == node_digest(x)


def test_small_operator_round_trip(tmp_path, rng):
    a = rng.standard_normal((16, 16)) + 1j * rng.standard_normal((16, 16))
    op = compress_rows(a, KaiserParams(8.0, 0, 1e-6, 1e-3), CompressionConfig(1e-6, 1e-3))
    path = tmp_path / "op.xc"
    save_operator(op, path, descriptor={"what": "random"})
    f = load_operator(path)
    same_operator(op, f.operator)
    assert f.descriptor == {"what": "random"} and f.nodes is None
    raw = path.read_bytes()
    assert raw[:8] == MAGIC and raw[8] == 1


def test_2d_operator_round_trip(tmp_path, rng):
    d = rng.standard_normal((12, 20))
    p1, p2 = KaiserParams(5.0, 1, 1e-8, 1e-3), KaiserParams(6.0, 2, 1e-8, 1e-3)
    op = compress_2d(d, p1, p2, CompressionConfig(1e-8, 1e-3))
    save_operator(op, tmp_path / "op2.xc")
    same_operator(op, load_operator(tmp_path / "op2.xc").operator)


def test_chebyshev_1024_applies_bit_for_bit(tmp_path, rng):
    th = chebyshev_thetas(1023)
    op = plan_trig_operator(TrigBasisSpec("cos", th, 1024), CFG)
    save_operator(op, tmp_path / "cheb.xc", descriptor={"transform": "chebyshev"}, nodes=th)
    f = load_operator(tmp_path / "cheb.xc")
    x = rng.random(1024)
    assert apply(op, x, "backward").tobytes() == apply(f.operator, x, "backward").tobytes()
    np.testing.assert_array_equal(f.nodes, th)
    f.check_nodes(th)
    with pytest.raises(IntegrityError):
        f.check_nodes(equispaced_x_thetas(1023))


@pytest.mark.parametrize("kind", ["jacobi", "spectral", "laguerre-time", "block2d"])
def test_bundles_round_trip(tmp_path, rng, kind):
    if kind == "jacobi":
        obj = JacobiTransform(JacobiBasis(1.0, 0.0), 200, CFG)
        x, direction = rng.random(200), "forward"
    elif kind == "spectral":
        obj = SpectralForward(LaguerreSpec(2500.0, 80), SpectralGrid(4.0, 100), CFG)
        x, direction = rng.random(100), "forward"
    elif kind == "laguerre-time":
        obj = LaguerreBackward2D(LaguerreSpec(100.0, 90), time_grid(100, 12.0), CFG)
        x, direction = rng.random(90), "backward"
    else:
        obj = Block2DOperator(matrix_source("a1"), 120, 120, CompressionConfig(1e-5, 0.1))
        x, direction = rng.random(120), "backward"
    save_operator(obj, tmp_path / "b.xc")
    back = load_operator(tmp_path / "b.xc").operator
    assert apply(obj, x, direction).tobytes() == apply(back, x, direction).tobytes()
    if direction == "forward" and kind == "jacobi":
        y = rng.random(200)
        assert apply(obj, y, "backward").tobytes() == apply(back, y, "backward").tobytes()


def test_operator_file_wrapper(tmp_path):
    op = compress_rows(np.eye(4), KaiserParams(1.0, 0, 1e-6, 1e-3), CompressionConfig(1e-6, 1e-3))
    nodes = np.linspace(0, 1, 4)
    save_operator(OperatorFile(op, {"k": 1}, nodes), tmp_path / "w.xc")
    f = load_operator(tmp_path / "w.xc")
    assert f.digest == node_digest(nodes)


@pytest.fixture
def saved(tmp_path):
    op = compress_rows(np.eye(8), KaiserParams(1.0, 0, 1e-6, 1e-3), CompressionConfig(1e-6, 1e-3))
    path = tmp_path / "s.xc"
    save_operator(op, path, nodes=np.arange(8.0))
    return path


def test_bad_magic(saved):
    raw = bytearray(saved.read_bytes())
    raw[0:8] = b"NOTANOP!"
    saved.write_bytes(bytes(raw))
    with pytest.raises(FormatError, match="magic"):
        load_operator(saved)


def test_version_mismatch_names_both_versions(saved):
    raw = bytearray(saved.read_bytes())
    raw[8] = 7
    saved.write_bytes(bytes(raw))
    with pytest.raises(FormatError) as info:
        load_operator(saved)
    assert info.value.found == 7 and info.value.expected == 1


@pytest.mark.parametrize("cut", [5, 13, 40, -1])
def test_truncation(saved, cut):
    raw = saved.read_bytes()
    saved.write_bytes(raw[:cut])
    with pytest.raises(FormatError):
        load_operator(saved)


def test_trailing_bytes_rejected(saved):
    saved.write_bytes(saved.read_bytes() + b"\0")
    with pytest.raises(FormatError, match="payload length"):
        load_operator(saved)


def test_tampered_nodes_detected(saved):
    raw = bytearray(saved.read_bytes())
    # the node section is written first; flip a byte of its first value
    hlen = struct.unpack("<I", bytes(raw[9:13]))[0]
    raw[13 + hlen + 8] ^= 0xFF
    saved.write_bytes(bytes(raw))
    with pytest.raises(IntegrityError):
        load_operator(saved)


def test_missing_file(tmp_path):
    with pytest.raises(OSError):
        load_operator(tmp_path / "absent.xc")


def test_csv_header_only(tmp_path):
    export_csv([], tmp_path / "e.csv")
    assert (tmp_path / "e.csv").read_bytes() == b"n,transform,config,stage,seconds,max_rel_err,sparsity\r\n"


def test_csv_round_trip(tmp_path):
    recs = [
        {"n": 1024, "transform": "chebyshev", "config": "threshold-only",
         "stage": "apply-compressed", "seconds": 0.00123456789, "max_rel_err": 1.1e-9,
         "sparsity": 0.031},
        {"n": 2048, "transform": "jacobi:1,2", "config": 'fixed, "quoted"',
         "stage": "apply-direct", "seconds": 0.5, "max_rel_err": float("nan"), "sparsity": 1.0},
    ]
    export_csv(recs[:1], tmp_path / "one.csv")
    assert len((tmp_path / "one.csv").read_bytes().split(b"\r\n")) == 3  # two lines plus the final break
    export_csv(recs, tmp_path / "r.csv")
    back = read_csv(tmp_path / "r.csv")
    assert back[0] == recs[0]
    assert back[1]["config"] == 'fixed, "quoted"' and np.isnan(back[1]["max_rel_err"])
    assert list(CSV_HEADER) == list(recs[0])


def test_csv_unwritable(tmp_path):
    with pytest.raises(OSError, match="cannot write CSV"):
        export_csv([], tmp_path / "no" / "such" / "dir.csv")
