"""Transform descriptors shared by the CLI and the benchmark harness.

A descriptor is a flat dict (``transform``, ``n``, ``m``, ``nodes``,
``eps1``, ``eps2``, ``band_policy``, ``bw``, ``fast``, ``eta``, ``t_max``,
``period``, ``direction``) that fully determines the operator, its node
vector and the dense reference matrix.
"""
from __future__ import annotations

import numpy as np

from .blocks import Block2DOperator, BlockTransform
from .compressor import CompressedOperator, CompressionConfig, apply_backward, apply_forward
from .errors import InvalidArgumentError, InvalidStateError
from .jacobi import JacobiBasis, JacobiTransform, build_jacobi_matrix, gauss_jacobi
from .laguerre import (
    LaguerreBackward2D,
    LaguerreSpec,
    SpectralForward,
    SpectralGrid,
    build_spectral_matrix,
    build_time_matrix,
    time_grid,
)
from .trig import (
    TrigBasisSpec,
    TrigOperator,
    build_trig_matrix,
    chebyshev_thetas,
    equispaced_x_thetas,
    plan_trig_operator,
    trig_backward,
    trig_forward,
)

__all__ = ["parse_transform", "config_of", "nodes_of", "build", "dense_matrix", "apply",
           "reference", "directions", "input_length", "stats"]

TRIG = ("cos", "sin", "exp", "chebyshev")


def parse_transform(name):
    """Split a transform name into ``(family, params)``."""
    if name in TRIG:
        return "trig", {"kind": "cos" if name == "chebyshev" else name, "p": 1}
    if name.startswith("cos-power:"):
        try:
            p = int(name.split(":", 1)[1])
        except ValueError:
            raise InvalidArgumentError(f"bad cosine power in {name!r}") from None
        return "trig", {"kind": "cos", "p": p}
    if name == "legendre":
        return "jacobi", {"alpha": 0.0, "beta": 0.0}
    if name.startswith("jacobi:"):
        try:
            a, b = (float(v) for v in name.split(":", 1)[1].split(","))
        except ValueError:
            raise InvalidArgumentError(f"expected jacobi:a,b, got {name!r}") from None
        return "jacobi", {"alpha": a, "beta": b}
    if name in ("laguerre-spectral", "laguerre-time"):
        return name, {}
    raise InvalidArgumentError(f"unknown transform {name!r}")


def config_of(d):
    return CompressionConfig(d["eps1"], d["eps2"], d.get("band_policy", "threshold"),
                             d.get("bw"))


def _read_vector_file(path):
    try:
        return np.loadtxt(path, dtype=float, ndmin=1)
    except ValueError as exc:
        raise InvalidArgumentError(f"cannot parse node file {path}: {exc}") from exc


def _m(d):
    return d.get("m") or d["n"]


def nodes_of(d, nodes=None):
    """Node vector of a descriptor; ``nodes`` overrides ``d["nodes"]``.

    Trig transforms use node angles, Jacobi transforms Gauss-Jacobi nodes,
    the spectral Laguerre transform wavenumbers and the time transform times.
    """
    family, p = parse_transform(d["transform"])
    choice = nodes or d.get("nodes") or "chebyshev"
    n = d["n"]
    if family == "trig":
        if choice == "chebyshev":
            return chebyshev_thetas(n - 1)
        if choice == "equispaced":
            return equispaced_x_thetas(n - 1)
        if choice.startswith("file:"):
            return _read_vector_file(choice[5:])
        raise InvalidArgumentError(f"unknown node choice {choice!r}")
    if family == "jacobi":
        if choice.startswith("file:"):
            return _read_vector_file(choice[5:])
        return gauss_jacobi(JacobiBasis(p["alpha"], p["beta"]), n).nodes
    if family == "laguerre-spectral":
        return SpectralGrid(d["period"], n).k
    if choice.startswith("file:"):
        return _read_vector_file(choice[5:])
    return time_grid(n, d["t_max"]).t


def _trig_spec(d):
    _, p = parse_transform(d["transform"])
    return TrigBasisSpec(p["kind"], nodes_of(d), _m(d), p["p"])


def directions(d):
    family, _ = parse_transform(d["transform"])
    if family == "trig":
        return (d.get("direction", "backward"),)
    if family == "jacobi":
        return ("backward", "forward")
    if family == "laguerre-spectral":
        return ("forward",)
    return ("backward",)


def build(d, threads=None, fast=None):
    """Compressed operator for a descriptor."""
    family, p = parse_transform(d["transform"])
    cfg = config_of(d)
    fast = d.get("fast", False) if fast is None else fast
    if family == "trig":
        return plan_trig_operator(_trig_spec(d), cfg, d.get("direction", "backward"),
                                  fast=fast, threads=threads)
    if family == "jacobi":
        return JacobiTransform(JacobiBasis(p["alpha"], p["beta"]), d["n"], cfg, m_count=_m(d),
                               threads=threads)
    if family == "laguerre-spectral":
        return SpectralForward(LaguerreSpec(d["eta"], _m(d)), SpectralGrid(d["period"], d["n"]),
                               cfg, fast=fast)
    return LaguerreBackward2D(LaguerreSpec(d["eta"], _m(d)), time_grid(d["n"], d["t_max"]), cfg,
                              threads=threads)


def dense_matrix(d):
    """Dense matrix ``A`` whose product (or transpose product) the operator approximates."""
    family, p = parse_transform(d["transform"])
    if family == "trig":
        return build_trig_matrix(_trig_spec(d))
    if family == "jacobi":
        basis = JacobiBasis(p["alpha"], p["beta"])
        return build_jacobi_matrix(basis, gauss_jacobi(basis, d["n"]), _m(d))
    if family == "laguerre-spectral":
        return build_spectral_matrix(LaguerreSpec(d["eta"], _m(d)),
                                     SpectralGrid(d["period"], d["n"]))
    return build_time_matrix(LaguerreSpec(d["eta"], _m(d)), time_grid(d["n"], d["t_max"]))


def reference(a, x, direction):
    """Direct product matching :func:`apply`."""
    return a @ x if direction == "backward" else a.T @ x


def input_length(d, direction):
    return _m(d) if direction == "backward" else d["n"]


def apply(obj, x, direction):
    """Apply any compressed operator in the requested direction."""
    x = np.asarray(x)
    if isinstance(obj, TrigOperator):
        if direction != obj.direction:
            raise InvalidStateError(f"operator was built for the {obj.direction} direction")
        return trig_backward(obj, x) if direction == "backward" else trig_forward(obj, x)
    if isinstance(obj, BlockTransform):
        return obj.backward(x) if direction == "backward" else obj.forward(x)
    if isinstance(obj, Block2DOperator):
        if direction != "backward":
            raise InvalidStateError("2D block operators only evaluate the backward direction")
        return obj.matvec(x)
    if isinstance(obj, SpectralForward):
        if direction != "forward":
            raise InvalidStateError("the spectral Laguerre operator is forward only")
        return obj(x)
    if isinstance(obj, CompressedOperator):
        if obj.side == "rows":
            return apply_backward(obj, x, obj.params.s)
        if obj.side == "cols":
            return apply_forward(obj, x, obj.params.s)
    raise InvalidStateError(f"cannot apply {type(obj).__name__}")


def _ops(obj):
    if isinstance(obj, TrigOperator):
        return [obj.compressed]
    if isinstance(obj, SpectralForward):
        return [obj.op.compressed]
    if isinstance(obj, BlockTransform):
        return list(obj.ops)
    if isinstance(obj, Block2DOperator):
        return [t.op for t in obj.tiles if t.kind != "dense"]
    return [obj]


def stats(obj, d):
    """Summary numbers of a built operator: nnz, sparsity vs the N x M original, s, zeta."""
    from .compressor import bandwidth

    ops = _ops(obj)
    nnz = obj.nnz if isinstance(obj, (BlockTransform, Block2DOperator)) else sum(
        op.nnz for op in ops)
    out = {"nnz": int(nnz), "sparsity": nnz / float(d["n"] * _m(d))}
    out["zeta"] = ops[0].params.zeta if ops else 0.0
    if isinstance(obj, (TrigOperator, SpectralForward)):
        out["s"] = ops[0].params.s
        out["bandwidth"] = bandwidth(ops[0])
    elif isinstance(obj, BlockTransform):
        out["s"] = ",".join(str(b.s) for b in obj.plan.blocks) or "0"
        out["widths"] = ",".join(str(w) for w in obj.plan.widths) or "-"
        out["dense_width"] = obj.plan.dense_width
        out["bandwidth"] = float(np.median([bandwidth(op) for op in ops])) if ops else 0
    elif isinstance(obj, Block2DOperator):
        out["s"] = ",".join(str(b.s) for b in obj.col_plan.blocks) or "0"
        out["widths"] = ",".join(str(w) for w in obj.col_plan.widths) or "-"
        out["row_widths"] = ",".join(str(w) for w in obj.row_plan.widths) or "-"
        out["tiles"] = len(obj.tiles)
    return out
