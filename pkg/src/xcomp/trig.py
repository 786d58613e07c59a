"""Trigonometric transformation matrices and their extra-component transforms.

Rows are indexed by nodes ``theta_n``, columns by frequencies ``m``. The
backward transform evaluates ``sum_m c_m phi(m theta_n)``; the forward
transform applies the transpose.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.fft as sfft

from .compressor import (
    CompressedOperator,
    CompressionConfig,
    _finish,
    apply_backward,
    apply_forward,
    compress_source,
    retain,
)
from .dft import next_fast_len
from .errors import InvalidArgumentError, InvalidStateError
from .window import KaiserParams, kaiser_window, solve_extra_count, solve_zeta

__all__ = [
    "TrigBasisSpec",
    "TrigOperator",
    "chebyshev_thetas",
    "equispaced_x_thetas",
    "build_trig_matrix",
    "plan_trig_operator",
    "trig_backward",
    "trig_forward",
    "closed_form_dft_row",
    "fast_precompute_rows",
]

KINDS = ("cos", "sin", "exp")


@dataclass(frozen=True, eq=False)
class TrigBasisSpec:
    """``kind`` is ``"cos"``, ``"sin"`` or ``"exp"``; ``p`` is the cosine power."""

    kind: str
    thetas: np.ndarray
    m_count: int
    p: int = 1

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidArgumentError(f"unknown trig kind {self.kind!r}")
        if self.p < 1 or (self.p != 1 and self.kind != "cos"):
            raise InvalidArgumentError("powers p >= 2 are only defined for the cos kind")
        th = np.asarray(self.thetas, dtype=float)
        if th.ndim != 1 or th.size == 0 or not np.all(np.isfinite(th)):
            raise InvalidArgumentError("thetas must be a nonempty finite vector")
        if self.m_count < 1:
            raise InvalidArgumentError("m_count must be >= 1")
        object.__setattr__(self, "thetas", th)

    @property
    def n_nodes(self):
        return self.thetas.size

    @property
    def peaks(self):
        """Distinct frequencies ``k theta`` a row of this basis contains."""
        if self.kind == "exp":
            return 1
        return self.p + 1 if self.kind == "cos" else 2

    def label(self):
        return f"cos-power:{self.p}" if self.kind == "cos" and self.p > 1 else self.kind


def chebyshev_thetas(n):
    """Angles ``n pi / N`` of the Chebyshev nodes ``x_n = cos(n pi / N)``, n = 0..N."""
    return np.pi * np.arange(n + 1) / n


def equispaced_x_thetas(n):
    """Angles of ``n + 1`` equispaced nodes on [-1, 1]."""
    return np.arccos(np.linspace(1.0, -1.0, n + 1))


def _entries(spec, thetas, m):
    arg = np.outer(thetas, m)
    if spec.kind == "exp":
        return np.exp(1j * arg)
    if spec.kind == "sin":
        return np.sin(arg)
    c = np.cos(arg)
    return c if spec.p == 1 else c**spec.p


def build_trig_matrix(spec, m_lo=0, m_hi=None):
    """Dense matrix with columns ``m = m_lo..m_hi`` (inclusive, may be negative)."""
    if m_hi is None:
        m_hi = spec.m_count - 1
    if m_lo > m_hi:
        raise InvalidArgumentError(f"empty frequency range {m_lo}..{m_hi}")
    return _entries(spec, spec.thetas, np.arange(m_lo, m_hi + 1))


@dataclass(frozen=True, eq=False)
class TrigOperator:
    spec: TrigBasisSpec
    s_extra: int
    compressed: CompressedOperator
    direction: str

    @property
    def params(self):
        return self.compressed.params


def _config_for(spec, config):
    return config.scaled(spec.peaks)


def plan_trig_operator(spec, config, direction="backward", *, fast=False, q=25,
                       friendly=False, threads=None):
    """Precompute the compressed extended matrix for one direction.

    The extended matrix spans ``m = -s..M+s``. With ``friendly`` the extra
    count grows until ``M + 1 + 2s`` is a fast DFT length. ``fast`` switches
    to the convolution path of :func:`fast_precompute_rows` for the cos,
    sin and exp kinds; cosine powers always take the dense path.
    """
    if direction not in ("backward", "forward"):
        raise InvalidArgumentError(f"unknown direction {direction!r}")
    m = spec.m_count - 1
    zeta = solve_zeta(config.eps1) if config.eps1 > 0 else 0.0
    s = solve_extra_count(zeta, config.eps2, max(m, 1))
    if friendly:
        while next_fast_len(m + 1 + 2 * s) != m + 1 + 2 * s:
            s += 1
    params = KaiserParams(zeta, s, config.eps1, config.eps2)
    meta = {"basis": spec.label(), "thetas": spec.thetas, "m_count": spec.m_count}
    if fast and spec.p == 1:
        op = fast_precompute_rows(spec, zeta, s, min(q, m + 1 + 2 * s), config, params=params,
                                  meta=meta)
    else:
        ext = np.arange(-s, m + s + 1)
        op = compress_source(
            lambda lo, hi: _entries(spec, spec.thetas[lo:hi], ext),
            spec.n_nodes, ext.size, params, _config_for(spec, config),
            threads=threads, meta=meta,
        )
    if direction == "forward":
        op = op.transpose()
    return TrigOperator(spec, s, op, direction)


def trig_backward(op, coeffs):
    """Values at the nodes from ``m_count`` coefficients."""
    if op.direction != "backward":
        raise InvalidStateError("operator was planned for the forward direction")
    coeffs = np.asarray(coeffs)
    if coeffs.shape != (op.spec.m_count,):
        raise InvalidArgumentError(f"expected {op.spec.m_count} coefficients, got {coeffs.shape}")
    return apply_backward(op.compressed, coeffs, op.s_extra)


def trig_forward(op, values):
    """Transpose transform: ``m_count`` outputs from node values."""
    if op.direction != "forward":
        raise InvalidStateError("operator was planned for the backward direction")
    values = np.asarray(values)
    if values.shape != (op.spec.n_nodes,):
        raise InvalidArgumentError(f"expected {op.spec.n_nodes} values, got {values.shape}")
    return apply_forward(op.compressed, values, op.s_extra)


def closed_form_dft_row(kind, theta, k, n):
    """Component k of the unitary DFT of ``phi(j theta)``, j = 0..n-1.

    Uses the closed geometric-sum forms with ``omega = exp(-2 pi i / n)``.
    Where the denominator vanishes (or nearly so) the sum is evaluated
    directly, which is the analytic limit.
    """
    if kind not in KINDS:
        raise InvalidArgumentError(f"unknown trig kind {kind!r}")
    if not (0 <= k < n):
        raise InvalidArgumentError(f"need 0 <= k < n, got k={k}, n={n}")
    om = np.exp(-2j * np.pi * k / n)
    ct = np.cos(theta)
    if kind == "exp":
        num, den = np.exp(1j * n * theta) - 1, np.exp(1j * theta) * om - 1
    else:
        # sums of cos(j theta) om^j and sin(j theta) om^j using om^n = 1
        den = 1 - 2 * om * ct + om * om
        if kind == "cos":
            num = 1 - om * ct - np.cos(n * theta) + om * np.cos((n - 1) * theta)
        else:
            num = om * np.sin(theta) - np.sin(n * theta) + om * np.sin((n - 1) * theta)
    if abs(den) < 1e-8:
        j = np.arange(n)
        phase = np.exp(-2j * np.pi * j * k / n)
        row = {"exp": np.exp(1j * j * theta), "cos": np.cos(j * theta), "sin": np.sin(j * theta)}[kind]
        return complex(np.sum(row * phase) / np.sqrt(n))
    return complex(num / den / np.sqrt(n))


def _shifted_exp_dft(theta, shift, k, n):
    """Unitary DFT of ``exp(i theta (j - shift))``, j = 0..n-1, at bins ``k``.

    Dirichlet-kernel form of the geometric sum. The offset from the peak is
    formed in bin units, ``r = n theta / (2 pi) - k``, and reduced modulo n
    before any trigonometric call, so bins next to the peak keep full
    relative accuracy. ``theta`` has shape ``(r, 1)``, ``k`` shape ``(r, c)``.
    """
    u = theta * (n / (2.0 * np.pi))
    # move k by multiples of n next to u first; the subtraction is then exact
    k = k - n * np.round((k - u) / n)
    r = u - k
    whole = np.round(r)
    sign = 1.0 - 2.0 * (np.abs(whole) % 2)
    num = sign * np.sin(np.pi * (r - whole))
    den = np.sin(np.pi * r / n)
    small = den == 0
    ratio = np.where(small, float(n), num / np.where(small, 1.0, den))
    phase = np.exp(1j * ((n - 1) * np.pi * r / n - theta * shift))
    return ratio * phase / np.sqrt(n)


def _row_dft(kind, theta, shift, k, n):
    if kind == "exp":
        return _shifted_exp_dft(theta, shift, k, n)
    e_pos = _shifted_exp_dft(theta, shift, k, n)
    e_neg = _shifted_exp_dft(-theta, shift, k, n)
    if kind == "cos":
        return 0.5 * (e_pos + e_neg)
    return (e_pos - e_neg) / 2j


def fast_precompute_rows(spec, zeta, s, q=25, config=None, *, params=None, meta=None,
                         chunk=2048):
    """Rows of the compressed extended matrix without forming the matrix.

    The window spectrum is computed once by FFT. Each row's compressed
    entries near its spectral peaks are obtained as truncated circular
    convolutions of the ``2q + 1`` central window coefficients with the
    closed-form row spectrum, i.e. ``O(L log L + N q)`` work in total.
    """
    if spec.kind == "cos" and spec.p != 1:
        raise InvalidArgumentError("no closed-form row spectrum for cosine powers")
    if config is None:
        raise InvalidArgumentError("a CompressionConfig is required")
    m = spec.m_count - 1
    n = m + 1 + 2 * s
    if q < 1 or q > n:
        raise InvalidArgumentError(f"q must lie in 1..{n}, got {q}")
    if params is None:
        params = KaiserParams(zeta, s, config.eps1, config.eps2)
    w = kaiser_window(zeta, n - 1)
    wt = sfft.fft(w, norm="ortho")
    if 2 * q + 1 >= n:
        d = np.arange(n) - n // 2
    else:
        d = np.arange(-q, q + 1)
    wd = wt[d % n]
    lo_d, hi_d = int(d[0]), int(d[-1])
    # the main lobe of the window spectrum spans about zeta/pi bins per side;
    # beyond it the spectrum sits at the eps1 level
    hw = int(np.ceil(zeta / np.pi)) + 3
    width = 2 * hw + 2
    span = np.arange(width + hi_d - lo_d)
    parts, max_abs = [], 0.0
    cfg = _config_for(spec, config)
    for lo in range(0, spec.n_nodes, chunk):
        th = spec.thetas[lo : lo + chunk][:, None]
        ks, vs = [], []
        for f in _peak_freqs(spec):
            k0 = np.floor(f * th * n / (2 * np.pi)).astype(np.int64) - hw
            # spectrum of the unwindowed row on k0 - hi_d .. k0 + width - 1 - lo_d
            row = _row_dft(spec.kind, th, s, k0 - hi_d + span, n)
            win = np.lib.stride_tricks.sliding_window_view(row, hi_d - lo_d + 1, axis=1)
            vs.append(win @ wd[::-1])
            ks.append((k0 + np.arange(width)) % n)
        k = np.concatenate(ks, axis=1)
        vals = np.concatenate(vs, axis=1) / np.sqrt(n)
        order = np.argsort(k, axis=1, kind="stable")
        k = np.take_along_axis(k, order, axis=1)
        vals = np.take_along_axis(vals, order, axis=1)
        # overlapping peaks compute some bins twice
        dup = np.zeros(k.shape, dtype=bool)
        dup[:, 1:] = k[:, 1:] == k[:, :-1]
        vals[dup] = 0
        cmax = float(np.max(np.abs(vals))) if vals.size else 0.0
        max_abs = max(max_abs, cmax)
        parts.append(_retain_sparse(k, vals, cfg, cmax, lo))
    return _finish(parts, max_abs, params, config, spec.n_nodes, n, 0, "rows", meta, n)


def _peak_freqs(spec):
    if spec.kind == "exp":
        return (1.0,)
    return (1.0, -1.0)


def _retain_sparse(k, vals, config, cmax, offset):
    """Threshold candidates given as sorted column indices per row."""
    mag = np.abs(vals)
    if config.band_policy == "fixed":
        bw = min(config.bw, vals.shape[1])
        keep = np.zeros(vals.shape, dtype=bool)
        top = np.argpartition(-mag, bw - 1, axis=1)[:, :bw]
        np.put_along_axis(keep, top, True, axis=1)
        keep &= mag > 0
    else:
        keep = (mag >= config.eps1 * cmax) & (mag > 0)
    line = np.broadcast_to(np.arange(k.shape[0])[:, None], k.shape)[keep]
    col, v = k[keep], vals[keep]
    if v.size == 0:
        z = np.zeros(0, dtype=np.int64)
        return z, z, z, v
    new_run = np.ones(v.size, dtype=bool)
    new_run[1:] = (line[1:] != line[:-1]) | (col[1:] != col[:-1] + 1)
    starts = np.nonzero(new_run)[0]
    lens = np.diff(np.concatenate((starts, [v.size])))
    return line[starts] + offset, col[starts], lens, v
