"""Windowed-DFT compression of dense matrices into band-sparse operators.

A compressed operator stores the matrix ``A W F`` (rows compressed),
``F W A`` (columns compressed) or ``F W A W F`` (both), keeping only the
entries whose magnitude reaches ``eps1`` times the largest one. Each line of
the compressed matrix is stored as a handful of contiguous runs; applies go
through a CSR copy of the same values.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
import scipy.fft as sfft
import scipy.sparse as sps

from .dft import _workers
from .errors import InvalidArgumentError, InvalidStateError
from .window import KaiserParams, kaiser_window

__all__ = [
    "CompressionConfig",
    "CompressedOperator",
    "as_dense_operator",
    "compress_rows",
    "compress_cols",
    "compress_2d",
    "compress_source",
    "apply_backward",
    "apply_forward",
    "sparsity_ratio",
    "bandwidth",
    "retain",
]

SIDES = ("rows", "cols", "2d")

# rows per chunk when streaming a matrix through the row transform
_CHUNK_BYTES = 64 * 2**20


@dataclass(frozen=True)
class CompressionConfig:
    """Thresholds plus the rule deciding which compressed entries survive.

    ``band_policy`` is ``"threshold"`` (keep ``|a| >= eps1 * max|a|``) or
    ``"fixed"`` (keep the ``bw`` largest entries of every line).
    """

    eps1: float
    eps2: float
    band_policy: str = "threshold"
    bw: Optional[int] = None

    def __post_init__(self):
        if not (0 <= self.eps1 < self.eps2 < 1):
            raise InvalidArgumentError(
                f"need 0 <= eps1 < eps2 < 1, got eps1={self.eps1}, eps2={self.eps2}"
            )
        if self.band_policy not in ("threshold", "fixed"):
            raise InvalidArgumentError(f"unknown band policy {self.band_policy!r}")
        if self.band_policy == "fixed" and (self.bw is None or self.bw < 1):
            raise InvalidArgumentError("fixed band policy needs bw >= 1")

    def describe(self):
        if self.band_policy == "fixed":
            return f"fixed-bandwidth({self.bw})"
        return "threshold-only"

    def scaled(self, peaks):
        """Copy whose fixed bandwidth covers ``peaks`` spectral peaks per line."""
        if self.band_policy != "fixed" or peaks == 1:
            return self
        return dataclasses.replace(self, bw=self.bw * peaks)


# Named configurations. For the fixed policy ``bw`` counts entries per
# spectral peak; real rows carry two conjugate peaks.
PRESETS = {
    "trig-1e-8": CompressionConfig(1e-10, 1e-3),
    "trig-1e-15": CompressionConfig(1e-15, 1e-2, "fixed", 24),
    "jacobi-1e-6": CompressionConfig(1e-6, 1e-4, "fixed", 16),
    "jacobi-1e-10": CompressionConfig(1e-10, 1e-3, "fixed", 20),
    "laguerre-2d": CompressionConfig(1e-13, 1e-3),
    "matrix2d-1e-5": CompressionConfig(1e-5, 0.1),
    "matrix2d-1e-2": CompressionConfig(1e-3, 0.1),
}


def preset(name):
    try:
        return PRESETS[name]
    except KeyError:
        raise InvalidArgumentError(
            f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None


@dataclass(frozen=True, eq=False)
class CompressedOperator:
    """Immutable band-sparse compressed matrix.

    ``rows x cols`` is the shape of the compressed matrix itself. Runs are
    stored along ``line_axis`` (0: each run lies inside one row, 1: inside one
    column) sorted by line then start; ``values`` is the concatenation of the
    runs' entries. ``window_len`` is the number of window samples the DFT
    axis used; for two-dimensional operators ``col_window_len`` and
    ``col_params`` describe the second axis.
    """

    rows: int
    cols: int
    side: str
    params: KaiserParams
    window_len: int
    max_abs: float
    line_axis: int
    run_line: np.ndarray
    run_start: np.ndarray
    run_len: np.ndarray
    values: np.ndarray
    col_params: Optional[KaiserParams] = None
    col_window_len: Optional[int] = None
    band_policy: str = "threshold-only"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.side not in SIDES:
            raise InvalidArgumentError(f"unknown side {self.side!r}")
        for name in ("run_line", "run_start", "run_len", "values"):
            getattr(self, name).setflags(write=False)

    @property
    def nnz(self):
        return int(self.values.size)

    @property
    def shape(self):
        return (self.rows, self.cols)

    def n_lines(self):
        return self.rows if self.line_axis == 0 else self.cols

    def line_extent(self):
        return self.cols if self.line_axis == 0 else self.rows

    def bands(self, line):
        """``[(start, values), ...]`` for the runs stored in one line."""
        lo, hi = np.searchsorted(self.run_line, [line, line + 1])
        offsets = self._offsets()
        return [
            (int(self.run_start[r]), self.values[offsets[r] : offsets[r] + self.run_len[r]])
            for r in range(lo, hi)
        ]

    def _offsets(self):
        off = self.__dict__.get("_off")
        if off is None:
            off = np.concatenate(([0], np.cumsum(self.run_len, dtype=np.int64)))
            object.__setattr__(self, "_off", off)
        return off

    def window(self):
        w = self.__dict__.get("_window")
        if w is None:
            w = kaiser_window(self.params.zeta, self.window_len - 1)
            object.__setattr__(self, "_window", w)
        return w

    def col_window(self):
        w = self.__dict__.get("_col_window")
        if w is None:
            w = kaiser_window(self.col_params.zeta, self.col_window_len - 1)
            object.__setattr__(self, "_col_window", w)
        return w

    def matrix(self):
        """CSR form of the compressed matrix, built once and cached."""
        m = self.__dict__.get("_csr")
        if m is None:
            m = _runs_to_csr(self)
            object.__setattr__(self, "_csr", m)
        return m

    def todense(self):
        return self.matrix().toarray()

    def matvec(self, x):
        return self.matrix() @ x

    def transpose(self):
        """Same values viewed as the transposed matrix.

        Row compression of ``A`` and column compression of ``A.T`` give
        transposed matrices because the DFT matrix is symmetric.
        """
        flip = {"rows": "cols", "cols": "rows", "2d": "2d"}[self.side]
        op = CompressedOperator(
            rows=self.cols,
            cols=self.rows,
            side=flip,
            params=self.params if self.side != "2d" else self.col_params,
            window_len=self.window_len if self.side != "2d" else self.col_window_len,
            max_abs=self.max_abs,
            line_axis=1 - self.line_axis,
            run_line=self.run_line,
            run_start=self.run_start,
            run_len=self.run_len,
            values=self.values,
            col_params=self.col_params if self.side != "2d" else self.params,
            col_window_len=self.col_window_len if self.side != "2d" else self.window_len,
            band_policy=self.band_policy,
            meta=dict(self.meta),
        )
        return op


def _runs_to_csr(op):
    n_lines = op.n_lines()
    counts = np.bincount(op.run_line, weights=op.run_len, minlength=n_lines).astype(np.int64)
    indptr = np.concatenate(([0], np.cumsum(counts)))
    idx = _expand_runs(op.run_start, op.run_len)
    if op.line_axis == 0:
        return sps.csr_matrix((op.values, idx, indptr), shape=(op.rows, op.cols))
    return sps.csc_matrix((op.values, idx, indptr), shape=(op.rows, op.cols)).tocsr()


def _expand_runs(starts, lens):
    total = int(lens.sum())
    if total == 0:
        return np.zeros(0, dtype=np.int64)
    offsets = np.repeat(np.cumsum(lens) - lens, lens)
    return np.repeat(starts.astype(np.int64), lens) + (np.arange(total) - offsets)


def as_dense_operator(a, name="a"):
    """Validate a 2-D finite matrix; returns it as a numpy array."""
    arr = np.asarray(a)
    if arr.ndim != 2:
        raise InvalidArgumentError(f"{name} must be two-dimensional, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise InvalidArgumentError(f"{name} must be nonempty, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidArgumentError(f"{name} contains non-finite entries")
    return arr


def _keep_mask(block, thr, config):
    mag = np.abs(block)
    if config.band_policy == "fixed":
        bw = min(config.bw, block.shape[1])
        mask = np.zeros(block.shape, dtype=bool)
        top = np.argpartition(-mag, bw - 1, axis=1)[:, :bw]
        np.put_along_axis(mask, top, True, axis=1)
        return mask & (mag > 0)
    return (mag >= thr) & (mag > 0)


def _mask_runs(mask):
    """Run decomposition of a boolean (lines x extent) mask."""
    n, m = mask.shape
    padded = np.zeros((n, m + 2), dtype=np.int8)
    padded[:, 1:-1] = mask
    d = np.diff(padded, axis=1)
    sl, sc = np.nonzero(d == 1)
    el, ec = np.nonzero(d == -1)
    # np.nonzero returns row-major order, so starts and ends pair up
    return sl, sc, ec - sc


def retain(lines, config, max_abs=None, line_offset=0):
    """Threshold a dense block of compressed lines into runs.

    Returns ``(run_line, run_start, run_len, values)`` with line indices
    shifted by ``line_offset``.
    """
    if max_abs is None:
        max_abs = float(np.max(np.abs(lines))) if lines.size else 0.0
    mask = _keep_mask(lines, config.eps1 * max_abs, config)
    rl, rs, rn = _mask_runs(mask)
    vals = lines[mask]
    return rl + line_offset, rs, rn, vals


def _transform_lines(block, w, workers):
    return sfft.fft(block * w, axis=1, norm="ortho", workers=workers)


def compress_source(
    source: Callable[[int, int], np.ndarray],
    n_lines: int,
    extent: int,
    params: KaiserParams,
    config: CompressionConfig,
    *,
    line_axis=0,
    side="rows",
    threads=None,
    meta=None,
    reference=None,
):
    """Compress a matrix produced line-chunk by line-chunk.

    ``source(lo, hi)`` must return lines ``lo..hi-1`` as an array of shape
    ``(hi - lo, extent)``. Each chunk is windowed and transformed once;
    entries that could survive the global threshold are kept as candidates
    and filtered again once the global maximum is known. ``reference``
    replaces the maximum as the threshold scale, which lets several
    operators share one threshold.
    """
    workers = threads or _workers()
    w = kaiser_window(params.zeta, extent - 1)
    chunk = max(1, _CHUNK_BYTES // (16 * extent))
    parts = []
    max_abs = 0.0
    for lo in range(0, n_lines, chunk):
        hi = min(n_lines, lo + chunk)
        spec = _transform_lines(np.asarray(source(lo, hi)), w, workers)
        cmax = float(np.max(np.abs(spec))) if spec.size else 0.0
        max_abs = max(max_abs, cmax)
        parts.append(retain(spec, config, max_abs=cmax if reference is None else reference,
                            line_offset=lo))
    if reference is not None:
        max_abs = reference
    return _finish(parts, max_abs, params, config, n_lines, extent, line_axis, side, meta, extent)


def _finish(parts, max_abs, params, config, n_lines, extent, line_axis, side, meta,
            window_len, col_params=None, col_window_len=None):
    if parts:
        rl, rs, rn, vals = (np.concatenate(x) for x in zip(*parts))
    else:
        rl = rs = rn = np.zeros(0, dtype=np.int64)
        vals = np.zeros(0, dtype=np.complex128)
    if config.band_policy == "threshold" and vals.size:
        # candidates were cut against their chunk maximum; recut globally
        thr = config.eps1 * max_abs
        offsets = np.concatenate(([0], np.cumsum(rn)))
        keep = np.abs(vals) >= thr
        if not np.all(keep):
            rl, rs, rn, vals = _recut(rl, rs, rn, vals, keep, offsets)
    rows, cols = (n_lines, extent) if line_axis == 0 else (extent, n_lines)
    return CompressedOperator(
        rows=rows,
        cols=cols,
        side=side,
        params=params,
        window_len=window_len,
        max_abs=max_abs,
        line_axis=line_axis,
        run_line=rl.astype(np.int64),
        run_start=rs.astype(np.int64),
        run_len=rn.astype(np.int64),
        values=np.ascontiguousarray(vals, dtype=np.complex128),
        col_params=col_params,
        col_window_len=col_window_len,
        band_policy=config.describe(),
        meta=dict(meta or {}),
    )


def _recut(rl, rs, rn, vals, keep, offsets):
    line = np.repeat(rl, rn)
    col = _expand_runs(rs, rn)
    line, col, vals = line[keep], col[keep], vals[keep]
    if vals.size == 0:
        z = np.zeros(0, dtype=np.int64)
        return z, z, z, vals
    new_run = np.ones(vals.size, dtype=bool)
    new_run[1:] = (line[1:] != line[:-1]) | (col[1:] != col[:-1] + 1)
    starts = np.nonzero(new_run)[0]
    lens = np.diff(np.concatenate((starts, [vals.size])))
    return line[starts], col[starts], lens, vals


def compress_rows(a, params, config, *, threads=None, meta=None):
    """Compress every row: ``A W F`` with the window spanning ``a.shape[1]``.

    The window has ``cols`` samples, i.e. ``kaiser_window(zeta, cols - 1)``.
    """
    a = as_dense_operator(a)
    return compress_source(
        lambda lo, hi: a[lo:hi], a.shape[0], a.shape[1], params, config,
        line_axis=0, side="rows", threads=threads, meta=meta,
    )


def compress_cols(a, params, config, *, threads=None, meta=None):
    """Compress every column: ``F W A`` with the window spanning ``a.shape[0]``."""
    a = as_dense_operator(a)
    op = compress_source(
        lambda lo, hi: a[:, lo:hi].T, a.shape[1], a.shape[0], params, config,
        line_axis=0, side="rows", threads=threads, meta=meta,
    )
    return op.transpose()


def spectrum_2d(d, row_params, col_params, threads=None):
    """Dense ``F W_R D W_C F`` before thresholding."""
    d = as_dense_operator(d)
    wr = kaiser_window(row_params.zeta, d.shape[0] - 1)
    wc = kaiser_window(col_params.zeta, d.shape[1] - 1)
    return sfft.fft2(wr[:, None] * d * wc[None, :], norm="ortho", workers=threads or _workers())


def compress_2d(d, row_params, col_params, config, *, threads=None, meta=None, reference=None):
    """Two-sided compression ``F W_R D W_C F``.

    ``row_params`` windows the row index (length ``rows``), ``col_params``
    the column index. Runs are stored along rows of the result.
    ``reference`` overrides the maximum used as threshold scale.
    """
    d = as_dense_operator(d)
    dd = spectrum_2d(d, row_params, col_params, threads)
    max_abs = float(np.max(np.abs(dd))) if reference is None else reference
    part = retain(dd, config, max_abs=max_abs)
    return _finish([part], max_abs, row_params, config, d.shape[0], d.shape[1], 0, "2d", meta,
                   d.shape[0], col_params=col_params, col_window_len=d.shape[1])


def _check_side(op, side, what):
    if op.side != side:
        raise InvalidStateError(f"{what} needs a {side}-compressed operator, got {op.side!r}")


def apply_backward(op, f_hat, s):
    """``y = A f_hat`` through a rows-compressed operator.

    ``f_hat`` is padded with ``s`` zeros on both sides to the window length,
    divided by the window, inverse transformed and multiplied by the stored
    matrix. Padded positions are never divided.
    """
    _check_side(op, "rows", "apply_backward")
    f_hat = np.asarray(f_hat, dtype=np.complex128)
    if f_hat.ndim != 1 or f_hat.size + 2 * s != op.cols:
        raise InvalidArgumentError(
            f"input length {f_hat.size} + 2*{s} does not match operator width {op.cols}"
        )
    w = op.window()
    padded = np.zeros(op.cols, dtype=np.complex128)
    padded[s : op.cols - s] = f_hat / w[s : op.cols - s]
    g = sfft.ifft(padded, norm="ortho")
    return op.matvec(g)


def apply_forward(op, f, s):
    """``f_hat = A.T f`` through a cols-compressed operator.

    The stored matrix has one row per window sample; after the inverse
    transform only the interior samples are divided by the window and the
    first and last ``s`` are discarded.
    """
    _check_side(op, "cols", "apply_forward")
    f = np.asarray(f)
    if f.ndim != 1 or f.size != op.cols:
        raise InvalidArgumentError(f"input length {f.size} does not match operator width {op.cols}")
    h = sfft.ifft(op.matvec(f), norm="ortho")
    w = op.window()
    return h[s : op.rows - s] / w[s : op.rows - s]


def sparsity_ratio(op):
    """Fraction of compressed-matrix entries that are stored."""
    return op.nnz / float(op.rows * op.cols)


def bandwidth(op):
    """Median over lines of the longest stored run.

    A line of a real cosine matrix holds one run per conjugate spectral peak;
    the longest run is the width of a single peak, which is what the
    literature calls the number of stored diagonals.
    """
    if op.run_len.size == 0:
        return 0
    longest = np.zeros(op.n_lines(), dtype=np.int64)
    np.maximum.at(longest, op.run_line, op.run_len)
    return int(np.median(longest[longest > 0]))
