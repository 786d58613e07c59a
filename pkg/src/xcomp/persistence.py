"""Binary operator files and CSV benchmark export.

File layout, all integers little-endian::

    magic        8 bytes   b"XCOMPOP1"
    version      u8
    header_len   u32
    header       header_len bytes of UTF-8 JSON
    payload      concatenated sections

The header carries the object kind, its scalar fields, the basis
descriptor, the node digest, the total payload length and a table of
sections ``(name, dtype, count)``. Compressed operators contribute four
sections: run line, run start and run length as u32, then the values as
interleaved real/imag f64. Floats in the header are written with ``repr``
so every scalar round-trips exactly.
"""
from __future__ import annotations

import csv
import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .blocks import Block, Block2DOperator, BlockPlan, BlockTransform, _Tile
from .compressor import CompressedOperator, CompressionConfig
from .errors import FormatError, IntegrityError, InvalidArgumentError
from .window import KaiserParams

__all__ = [
    "MAGIC",
    "VERSION",
    "CSV_HEADER",
    "OperatorFile",
    "fnv1a64",
    "node_digest",
    "save_operator",
    "load_operator",
    "export_csv",
    "read_csv",
]

MAGIC = b"XCOMPOP1"
VERSION = 1
CSV_HEADER = ("n", "transform", "config", "stage", "seconds", "max_rel_err", "sparsity")

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK = 2**64 - 1
_DTYPES = {"u32": np.dtype("<u4"), "f64": np.dtype("<f8"), "c128": np.dtype("<f8")}


def fnv1a64(data):
    """64-bit FNV-1a hash of a bytes-like object."""
    h = _FNV_OFFSET
    for b in bytes(data):
        h = ((h ^ b) * _FNV_PRIME) & _MASK
    return h


def node_digest(nodes):
    """FNV-1a over the little-endian f64 image of a node vector."""
    return fnv1a64(np.ascontiguousarray(nodes, dtype="<f8").tobytes())


@dataclass
class OperatorFile:
    """A loaded (or to-be-saved) operator with its basis descriptor."""

    operator: object
    descriptor: dict = field(default_factory=dict)
    nodes: np.ndarray = None

    @property
    def digest(self):
        return None if self.nodes is None else node_digest(self.nodes)

    def check_nodes(self, nodes):
        """Raise :class:`IntegrityError` unless ``nodes`` match the stored grid."""
        want = self.digest
        got = node_digest(nodes)
        if want is not None and got != want:
            raise IntegrityError(
                f"node digest mismatch: operator built for {want:016x}, got {got:016x}")


# scalar <-> header helpers

def _params_dict(p):
    return None if p is None else {"zeta": p.zeta, "s": p.s, "eps1": p.eps1, "eps2": p.eps2}


def _params_from(d):
    return None if d is None else KaiserParams(d["zeta"], d["s"], d["eps1"], d["eps2"])


def _config_dict(c):
    return {"eps1": c.eps1, "eps2": c.eps2, "band_policy": c.band_policy, "bw": c.bw}


def _plan_dict(plan):
    return {"n": plan.n, "dense_cutoff": plan.dense_cutoff,
            "blocks": [[b.k, b.s, _params_dict(b.params)] for b in plan.blocks]}


def _plan_from(d):
    blocks = tuple(Block(k, s, _params_from(p)) for k, s, p in d["blocks"])
    return BlockPlan(d["n"], blocks, d["dense_cutoff"])


class _Writer:
    def __init__(self):
        self.sections = []
        self.chunks = []

    def array(self, name, arr, dtype):
        arr = np.asarray(arr)
        if dtype == "u32":
            if arr.size and (arr.min() < 0 or arr.max() > 0xFFFFFFFF):
                raise InvalidArgumentError(f"section {name} does not fit u32")
            raw = arr.astype("<u4")
        elif dtype == "c128":
            raw = np.ascontiguousarray(arr, dtype=np.complex128).view(np.float64).astype("<f8")
        else:
            raw = np.ascontiguousarray(arr, dtype="<f8")
        self.sections.append([name, dtype, int(arr.size), list(arr.shape)])
        self.chunks.append(raw.tobytes())

    def operator(self, prefix, op):
        self.array(prefix + ".run_line", op.run_line, "u32")
        self.array(prefix + ".run_start", op.run_start, "u32")
        self.array(prefix + ".run_len", op.run_len, "u32")
        self.array(prefix + ".values", op.values, "c128")
        return {
            "rows": op.rows, "cols": op.cols, "side": op.side,
            "params": _params_dict(op.params), "window_len": op.window_len,
            "max_abs": op.max_abs, "line_axis": op.line_axis,
            "col_params": _params_dict(op.col_params), "col_window_len": op.col_window_len,
            "band_policy": op.band_policy,
            "meta": {k: v for k, v in op.meta.items() if isinstance(v, (str, int, float))},
        }


class _Reader:
    def __init__(self, sections, payload):
        self.arrays = {}
        pos = 0
        for name, dtype, count, shape in sections:
            width = 16 if dtype == "c128" else _DTYPES[dtype].itemsize
            raw = payload[pos : pos + width * count]
            pos += width * count
            arr = np.frombuffer(raw, dtype=_DTYPES[dtype])
            if dtype == "c128":
                arr = arr.astype(np.float64).view(np.complex128)
            elif dtype == "u32":
                arr = arr.astype(np.int64)
            else:
                arr = arr.astype(np.float64)
            self.arrays[name] = arr.reshape(shape)

    def operator(self, prefix, h):
        a = self.arrays
        return CompressedOperator(
            rows=h["rows"], cols=h["cols"], side=h["side"], params=_params_from(h["params"]),
            window_len=h["window_len"], max_abs=h["max_abs"], line_axis=h["line_axis"],
            run_line=a[prefix + ".run_line"], run_start=a[prefix + ".run_start"],
            run_len=a[prefix + ".run_len"], values=a[prefix + ".values"],
            col_params=_params_from(h["col_params"]), col_window_len=h["col_window_len"],
            band_policy=h["band_policy"], meta=dict(h["meta"]),
        )


# per-kind codecs

def _kind_of(obj):
    from .laguerre import SpectralForward
    from .trig import TrigOperator

    if isinstance(obj, CompressedOperator):
        return "operator"
    if isinstance(obj, TrigOperator):
        return "trig"
    if isinstance(obj, SpectralForward):
        return "spectral"
    if isinstance(obj, BlockTransform):
        return "blocks"
    if isinstance(obj, Block2DOperator):
        return "block2d"
    raise InvalidArgumentError(f"cannot save objects of type {type(obj).__name__}")


def _encode(obj, w):
    kind = _kind_of(obj)
    if kind == "operator":
        return {"op": w.operator("op", obj)}
    if kind == "trig":
        w.array("thetas", obj.spec.thetas, "f64")
        return {"op": w.operator("op", obj.compressed), "kind": obj.spec.kind, "p": obj.spec.p,
                "m_count": obj.spec.m_count, "s_extra": obj.s_extra,
                "direction": obj.direction}
    if kind == "spectral":
        w.array("scale", obj.scale, "c128")
        return {"eta": obj.spec.eta, "m_count": obj.spec.m_count,
                "period_l": obj.grid.period_l, "n_freq": obj.grid.n_freq,
                "trig": _encode(obj.op, w)}
    if kind == "blocks":
        w.array("dense", obj.dense, "c128" if np.iscomplexobj(obj.dense) else "f64")
        return {"n_rows": obj.n_rows, "plan": _plan_dict(obj.plan),
                "config": _config_dict(obj.config),
                "ops": [w.operator(f"op{i}", op) for i, op in enumerate(obj.ops)]}
    tiles = []
    for i, t in enumerate(obj.tiles):
        if t.kind == "dense":
            w.array(f"tile{i}", t.op, "c128" if np.iscomplexobj(t.op) else "f64")
            tiles.append([t.kind, t.row, t.col, None])
        else:
            tiles.append([t.kind, t.row, t.col, w.operator(f"tile{i}", t.op)])
    return {"n_rows": obj.n_rows, "n_cols": obj.n_cols, "row_plan": _plan_dict(obj.row_plan),
            "col_plan": _plan_dict(obj.col_plan), "reference": obj.reference, "tiles": tiles}


def _decode(kind, h, r):
    from .laguerre import LaguerreSpec, SpectralForward, SpectralGrid
    from .trig import TrigBasisSpec, TrigOperator

    if kind == "operator":
        return r.operator("op", h["op"])
    if kind == "trig":
        spec = TrigBasisSpec(h["kind"], r.arrays["thetas"], h["m_count"], h["p"])
        return TrigOperator(spec, h["s_extra"], r.operator("op", h["op"]), h["direction"])
    if kind == "spectral":
        obj = SpectralForward.__new__(SpectralForward)
        obj.spec = LaguerreSpec(h["eta"], h["m_count"])
        obj.grid = SpectralGrid(h["period_l"], h["n_freq"])
        obj.scale = r.arrays["scale"]
        obj.op = _decode("trig", h["trig"], r)
        return obj
    if kind == "blocks":
        obj = BlockTransform.__new__(BlockTransform)
        obj.source = None
        obj.n_rows = h["n_rows"]
        obj.plan = _plan_from(h["plan"])
        c = h["config"]
        obj.config = CompressionConfig(c["eps1"], c["eps2"], c["band_policy"], c["bw"])
        obj.ops = [r.operator(f"op{i}", oh) for i, oh in enumerate(h["ops"])]
        obj.dense = r.arrays["dense"]
        obj._forward_ops = None
        return obj
    if kind == "block2d":
        obj = Block2DOperator.__new__(Block2DOperator)
        obj.n_rows, obj.n_cols = h["n_rows"], h["n_cols"]
        obj.row_plan, obj.col_plan = _plan_from(h["row_plan"]), _plan_from(h["col_plan"])
        obj.reference = h["reference"]
        obj.tiles = []
        for i, (tk, row, col, oh) in enumerate(h["tiles"]):
            op = r.arrays[f"tile{i}"] if tk == "dense" else r.operator(f"tile{i}", oh)
            obj.tiles.append(_Tile(tk, row, col, op))
        return obj
    raise FormatError(f"unknown operator kind {kind!r}")


def save_operator(obj, path, descriptor=None, nodes=None):
    """Write ``obj`` (or an :class:`OperatorFile`) to ``path``."""
    if isinstance(obj, OperatorFile):
        obj, descriptor, nodes = obj.operator, obj.descriptor, obj.nodes
    w = _Writer()
    if nodes is not None:
        w.array("nodes", nodes, "f64")
    body = _encode(obj, w)
    payload = b"".join(w.chunks)
    header = {
        "kind": _kind_of(obj),
        "body": body,
        "descriptor": dict(descriptor or {}),
        "node_digest": None if nodes is None else f"{node_digest(nodes):016x}",
        "sections": w.sections,
        "payload_len": len(payload),
    }
    hb = json.dumps(header, sort_keys=True).encode("utf-8")
    try:
        with open(path, "wb") as fh:
            fh.write(MAGIC)
            fh.write(struct.pack("<BI", VERSION, len(hb)))
            fh.write(hb)
            fh.write(payload)
    except OSError as exc:
        raise OSError(f"cannot write operator file {path}: {exc}") from exc


def load_operator(path):
    """Read a file written by :func:`save_operator` into an :class:`OperatorFile`."""
    data = Path(path).read_bytes()
    if len(data) < 13:
        raise FormatError(f"{path}: truncated file ({len(data)} bytes)")
    if data[:8] != MAGIC:
        raise FormatError(f"{path}: bad magic", found=data[:8], expected=MAGIC)
    version, hlen = struct.unpack("<BI", data[8:13])
    if version != VERSION:
        raise FormatError(f"{path}: unsupported format version", found=version,
                          expected=VERSION)
    if len(data) < 13 + hlen:
        raise FormatError(f"{path}: truncated header")
    try:
        header = json.loads(data[13 : 13 + hlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatError(f"{path}: unreadable header: {exc}") from exc
    payload = data[13 + hlen :]
    if len(payload) != header["payload_len"]:
        raise FormatError(f"{path}: payload length mismatch", found=len(payload),
                          expected=header["payload_len"])
    declared = sum((16 if d == "c128" else 4 if d == "u32" else 8) * n
                   for _, d, n, _ in header["sections"])
    if declared != len(payload):
        raise FormatError(f"{path}: section table does not cover the payload",
                          found=declared, expected=len(payload))
    r = _Reader(header["sections"], payload)
    nodes = r.arrays.get("nodes")
    if nodes is not None and f"{node_digest(nodes):016x}" != header["node_digest"]:
        raise IntegrityError(f"{path}: stored nodes do not match their digest")
    return OperatorFile(_decode(header["kind"], header["body"], r), header["descriptor"], nodes)


def export_csv(records, path):
    """Write benchmark rows (mappings or sequences) under :data:`CSV_HEADER`."""
    try:
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh, lineterminator="\r\n")
            wr.writerow(CSV_HEADER)
            for rec in records:
                row = [rec[k] for k in CSV_HEADER] if isinstance(rec, dict) else list(rec)
                if len(row) != len(CSV_HEADER):
                    raise InvalidArgumentError(f"record has {len(row)} fields: {row!r}")
                wr.writerow([repr(float(v)) if isinstance(v, float) else v for v in row])
    except OSError as exc:
        raise OSError(f"cannot write CSV {path}: {exc}") from exc


def read_csv(path):
    """Parse a file written by :func:`export_csv` back into dicts."""
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    out = []
    for row in rows:
        out.append({
            "n": int(row["n"]), "transform": row["transform"], "config": row["config"],
            "stage": row["stage"], "seconds": float(row["seconds"]),
            "max_rel_err": float(row["max_rel_err"]), "sparsity": float(row["sparsity"]),
        })
    return out
