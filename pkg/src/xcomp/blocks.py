"""Block extra-component operators for matrices that cannot be extended left.

A matrix is split into nested column blocks. Block i keeps columns
``s_i..k_i-1`` as data, treats the first ``s_i`` columns as its zero-padded
left margin and appends ``s_i`` columns on the right, so its window spans
``k_i + s_i`` samples. The deferred columns ``0..s_i-1`` form the next
block; once a block is narrow enough it is multiplied directly.

The same chain applied to rows gives the forward direction, and a chain on
each axis gives the two-dimensional tiling used for matrices that only
compress when windowed on both sides.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, List

import numpy as np
import scipy.fft as sfft

from .compressor import (
    CompressionConfig,
    compress_2d,
    compress_source,
    spectrum_2d,
    apply_backward,
    apply_forward,
)
from .errors import InvalidArgumentError
from .window import KaiserParams, kaiser_window, solve_block_extra, solve_zeta

__all__ = ["Block", "BlockPlan", "plan_blocks", "BlockTransform", "Block2DOperator"]

DENSE_CUTOFF = 16


@dataclass(frozen=True)
class Block:
    """One compressed block: data columns ``s..k-1`` inside a window of ``k + s``."""

    k: int
    s: int
    params: KaiserParams

    @property
    def width(self):
        return self.k + self.s

    @property
    def extra_right(self):
        return self.s


@dataclass(frozen=True)
class BlockPlan:
    n: int
    blocks: tuple
    dense_cutoff: int

    @property
    def dense_width(self):
        """Leading columns multiplied directly."""
        return self.blocks[-1].s if self.blocks else self.n

    @property
    def widths(self):
        return [b.width for b in self.blocks]

    def ranges(self):
        """Data column range ``(lo, hi)`` of every block, then the dense tail."""
        out = [(b.s, b.k) for b in self.blocks]
        out.append((0, self.dense_width))
        return out

    @property
    def max_width(self):
        return max([self.n] + self.widths)


def plan_blocks(n, config, dense_cutoff=DENSE_CUTOFF):
    """Chain of nested blocks for ``n`` columns.

    A block is compressed while it holds more than ``dense_cutoff`` columns;
    the remainder is multiplied directly.
    """
    if n < 1:
        raise InvalidArgumentError(f"n must be >= 1, got {n}")
    zeta = solve_zeta(config.eps1) if config.eps1 > 0 else 0.0
    blocks = []
    k = n
    while k > dense_cutoff:
        s = solve_block_extra(zeta, config.eps2, k)
        if s >= k:
            break
        blocks.append(Block(k, s, KaiserParams(zeta, s, config.eps1, config.eps2)))
        k = s
    return BlockPlan(n, tuple(blocks), dense_cutoff)


class BlockTransform:
    """Block operator for ``y = A x`` and ``x = A.T y`` of a rows x n matrix.

    ``source(r0, r1, c0, c1)`` returns the corresponding block of the
    matrix, where columns ``c >= n`` are the natural right extension.
    """

    def __init__(self, source, n_rows, plan, config, threads=None):
        self.source = source
        self.n_rows = n_rows
        self.plan = plan
        self.config = config
        self.ops = [
            compress_source(
                (lambda lo, hi, b=b: source(lo, hi, 0, b.width)),
                n_rows, b.width, b.params, config, threads=threads,
            )
            for b in plan.blocks
        ]
        self.dense = np.asarray(source(0, n_rows, 0, plan.dense_width))
        self._forward_ops = None

    @property
    def nnz(self):
        return sum(op.nnz for op in self.ops) + self.dense.size

    def backward(self, coeffs):
        coeffs = np.asarray(coeffs)
        if coeffs.shape != (self.plan.n,):
            raise InvalidArgumentError(f"expected {self.plan.n} coefficients, got {coeffs.shape}")
        y = self.dense @ coeffs[: self.plan.dense_width]
        y = y.astype(np.complex128)
        for b, op in zip(self.plan.blocks, self.ops):
            y += apply_backward(op, coeffs[b.s : b.k], b.s)
        return y

    def forward(self, values):
        values = np.asarray(values)
        if values.shape != (self.n_rows,):
            raise InvalidArgumentError(f"expected {self.n_rows} values, got {values.shape}")
        if self._forward_ops is None:
            self._forward_ops = [op.transpose() for op in self.ops]
        out = np.empty(self.plan.n, dtype=np.complex128)
        out[: self.plan.dense_width] = self.dense.T @ values
        for b, op in zip(self.plan.blocks, self._forward_ops):
            out[b.s : b.k] = apply_forward(op, values, b.s)
        return out


@dataclass
class _Tile:
    kind: str
    row: int
    col: int
    op: object


class Block2DOperator:
    """Two-sided block compression of ``y = D x``.

    Row and column chains are planned independently; every pair of a row
    range and a column range becomes one tile. Tiles whose both ranges are
    compressed blocks use ``F W D W F``; tiles touching a dense tail fall
    back to one-sided compression or to a plain dense block.
    ``source(r0, r1, c0, c1)`` must extend past the last row and column.
    """

    def __init__(self, source, n_rows, n_cols, config, dense_cutoff=DENSE_CUTOFF,
                 row_config=None, shared_threshold=True, threads=None):
        self.n_rows, self.n_cols = n_rows, n_cols
        self.row_plan = plan_blocks(n_rows, row_config or config, dense_cutoff)
        self.col_plan = plan_blocks(n_cols, config, dense_cutoff)
        rb = list(self.row_plan.blocks) + [None]
        cb = list(self.col_plan.blocks) + [None]
        rd, cd = self.row_plan.dense_width, self.col_plan.dense_width
        layout = []
        for i, r in enumerate(rb):
            for j, c in enumerate(cb):
                nr = r.width if r is not None else rd
                nc = c.width if c is not None else cd
                if nr == 0 or nc == 0:
                    continue
                kind = ("2d" if c is not None else "cols") if r is not None else (
                    "rows" if c is not None else "dense")
                layout.append((kind, i, j, r, c, np.asarray(source(0, nr, 0, nc))))
        reference = None
        if shared_threshold:
            # one scale for all tiles: a dropped entry then costs the same
            # absolute error whichever tile it sits in
            reference = max(self._spectrum_max(kind, r, c, d, threads)
                            for kind, _, _, r, c, d in layout)
        self.reference = reference
        self.tiles: List[_Tile] = []
        for kind, i, j, r, c, d in layout:
            if kind == "2d":
                op = compress_2d(d, r.params, c.params, config, threads=threads,
                                 reference=reference)
            elif kind == "cols":
                op = compress_source(lambda lo, hi, d=d: d[:, lo:hi].T, d.shape[1], d.shape[0],
                                     r.params, config, threads=threads,
                                     reference=reference).transpose()
            elif kind == "rows":
                op = compress_source(lambda lo, hi, d=d: d[lo:hi], d.shape[0], d.shape[1],
                                     c.params, config, threads=threads, reference=reference)
            else:
                op = d
            self.tiles.append(_Tile(kind, i, j, op))

    @staticmethod
    def _spectrum_max(kind, r, c, d, threads):
        if kind == "2d":
            return float(np.max(np.abs(spectrum_2d(d, r.params, c.params, threads))))
        if kind == "dense":
            return 0.0
        if kind == "cols":
            w = kaiser_window(r.params.zeta, d.shape[0] - 1)[:, None]
            return float(np.max(np.abs(sfft.fft(w * d, axis=0, norm="ortho"))))
        w = kaiser_window(c.params.zeta, d.shape[1] - 1)[None, :]
        return float(np.max(np.abs(sfft.fft(d * w, axis=1, norm="ortho"))))

    @property
    def nnz(self):
        return sum(t.op.size if t.kind == "dense" else t.op.nnz for t in self.tiles)

    def sparsity_ratio(self):
        return self.nnz / float(self.n_rows * self.n_cols)

    def matvec(self, x):
        x = np.asarray(x)
        if x.shape != (self.n_cols,):
            raise InvalidArgumentError(f"expected {self.n_cols} inputs, got {x.shape}")
        rb = list(self.row_plan.blocks)
        cb = list(self.col_plan.blocks)
        # column-side spectra are shared by every tile in the same column block
        spectra = {}
        for j, c in enumerate(cb):
            w = self.tiles_window(c)
            pad = np.zeros(c.width, dtype=np.complex128)
            pad[c.s : c.k] = x[c.s : c.k] / w[c.s : c.k]
            spectra[j] = sfft.ifft(pad, norm="ortho")
        y = np.zeros(self.n_rows, dtype=np.complex128)
        cd, rd = self.col_plan.dense_width, self.row_plan.dense_width
        for t in self.tiles:
            if t.kind == "2d":
                r = rb[t.row]
                h = sfft.ifft(t.op.matvec(spectra[t.col]), norm="ortho")
                w = t.op.window()
                y[r.s : r.k] += h[r.s : r.k] / w[r.s : r.k]
            elif t.kind == "cols":
                r = rb[t.row]
                y[r.s : r.k] += apply_forward(t.op, x[:cd], r.s)
            elif t.kind == "rows":
                c = cb[t.col]
                y[:rd] += apply_backward(t.op, x[c.s : c.k], c.s)
            else:
                y[:rd] += t.op @ x[:cd]
        return y

    @staticmethod
    def tiles_window(block):
        return kaiser_window(block.params.zeta, block.width - 1)
