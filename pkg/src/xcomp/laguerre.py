"""Laguerre functions, the spectral forward transform and the 2D backward transform.

A function on ``t >= 0`` is expanded as ``f(t) = eta * sum_m fbar_m l_m(eta t)``
with ``l_m(t) = exp(-t/2) L_m(t)``. The spectral matrix maps Fourier
coefficients on a period ``L`` to Laguerre coefficients; it is a pure phase
rotation per order and compresses like an exponential trig matrix.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import fftconvolve

from .blocks import DENSE_CUTOFF, Block2DOperator
from .errors import InvalidArgumentError
from .trig import TrigBasisSpec, plan_trig_operator, trig_forward

__all__ = [
    "LaguerreSpec",
    "SpectralGrid",
    "TimeGrid",
    "time_grid",
    "laguerre_fn",
    "laguerre_table",
    "phase_phi",
    "build_spectral_matrix",
    "SpectralForward",
    "spectral_forward",
    "conjugation",
    "conjugation_direct",
    "build_time_matrix",
    "time_source",
    "LaguerreBackward2D",
    "laguerre_backward_2d",
]

_BIG = 1e150


@dataclass(frozen=True)
class LaguerreSpec:
    eta: float
    m_count: int

    def __post_init__(self):
        if not self.eta > 0:
            raise InvalidArgumentError(f"eta must be positive, got {self.eta}")
        if self.m_count < 1:
            raise InvalidArgumentError(f"m_count must be >= 1, got {self.m_count}")


@dataclass(frozen=True)
class SpectralGrid:
    period_l: float
    n_freq: int

    def __post_init__(self):
        if not self.period_l > 0 or self.n_freq < 1:
            raise InvalidArgumentError("period must be positive and n_freq >= 1")

    @property
    def k(self):
        return 2 * np.pi * np.arange(self.n_freq) / self.period_l


@dataclass(frozen=True, eq=False)
class TimeGrid:
    t: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        if t.ndim != 1 or t.size == 0 or np.any(t < 0) or np.any(np.diff(t) <= 0):
            raise InvalidArgumentError("times must be a nonnegative strictly increasing vector")
        object.__setattr__(self, "t", t)

    def __len__(self):
        return self.t.size


def time_grid(n, t_max):
    """``n`` equispaced times ``t_i = t_max i / (n - 1)``."""
    if n < 2 or not t_max > 0:
        raise InvalidArgumentError("need n >= 2 and t_max > 0")
    return TimeGrid(t_max * np.arange(n) / (n - 1))


def laguerre_table(m_max, x):
    """``l_m(x)`` for ``m = 0..m_max``; shape ``(len(x), m_max + 1)``.

    The polynomial recurrence runs on a rescaled pair so neither ``L_m``
    overflows nor ``exp(-x/2)`` underflows for large ``x``; the scale is
    carried in the log domain and applied once per column.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(x < 0):
        raise InvalidArgumentError("Laguerre functions need t >= 0")
    out = np.empty((x.size, m_max + 1))
    logs = -0.5 * x
    prev = np.zeros_like(x)
    cur = np.ones_like(x)
    out[:, 0] = np.exp(logs)
    for n in range(m_max):
        prev, cur = cur, ((2 * n + 1 - x) * cur - n * prev) / (n + 1)
        big = np.abs(cur) > _BIG
        if np.any(big):
            f = np.where(big, np.abs(cur), 1.0)
            cur, prev = cur / f, prev / f
            logs = logs + np.log(f)
        out[:, n + 1] = cur * np.exp(logs)
    return out


def laguerre_fn(n, t):
    """Laguerre function ``l_n(t) = exp(-t/2) L_n(t)``."""
    if n < 0 or int(n) != n:
        raise InvalidArgumentError(f"order must be a nonnegative integer, got {n}")
    if not t >= 0:
        raise InvalidArgumentError(f"t must be >= 0, got {t}")
    return float(laguerre_table(int(n), [t])[0, -1])


def phase_phi(k, eta):
    """``arctan2(-k, eta/2) - arctan2(-k, -eta/2)`` elementwise."""
    if not eta > 0:
        raise InvalidArgumentError(f"eta must be positive, got {eta}")
    # +0.0 turns -0.0 into 0.0 so k = 0 lands on the principal branch value -pi
    nk = -np.asarray(k, dtype=float) + 0.0
    return np.arctan2(nk, eta / 2) - np.arctan2(nk, -eta / 2)


def _spectral_scale(spec, k):
    return 1j / (spec.eta / 2 - 1j * k)


def build_spectral_matrix(spec, grid):
    """Dense ``C`` with ``C[j, m] = i exp(-i m phi(k_j)) / (eta/2 - i k_j)``."""
    k = grid.k
    phi = phase_phi(k, spec.eta)
    m = np.arange(spec.m_count)
    return _spectral_scale(spec, k)[:, None] * np.exp(-1j * np.outer(phi, m))


class SpectralForward:
    """Compressed ``C.T`` for one (spec, grid) pair.

    ``C.T f`` equals the transpose of an exponential trig matrix with angles
    ``-phi(k_j)`` applied to ``f`` scaled by the per-row factor.
    """

    def __init__(self, spec, grid, config, fast=False, q=25):
        self.spec, self.grid = spec, grid
        k = grid.k
        self.scale = _spectral_scale(spec, k)
        tspec = TrigBasisSpec("exp", -phase_phi(k, spec.eta), spec.m_count)
        self.op = plan_trig_operator(tspec, config, "forward", fast=fast, q=q)

    @property
    def nnz(self):
        return self.op.compressed.nnz

    def __call__(self, f_tilde):
        f_tilde = np.asarray(f_tilde)
        if f_tilde.shape != (self.grid.n_freq,):
            raise InvalidArgumentError(
                f"expected {self.grid.n_freq} Fourier coefficients, got {f_tilde.shape}")
        return trig_forward(self.op, self.scale * f_tilde)


def spectral_forward(spec, grid, f_tilde, config, fast=False):
    """Laguerre coefficients ``C.T f_tilde`` through the compressed operator."""
    return SpectralForward(spec, grid, config, fast=fast)(f_tilde)


def _conjugation_inputs(v_bar, tau, spec, out_len):
    v = np.asarray(v_bar)
    if v.ndim != 1 or v.size == 0 or not np.all(np.isfinite(v)):
        raise InvalidArgumentError("v_bar must be a nonempty finite vector")
    if not tau > 0:
        raise InvalidArgumentError(f"tau must be positive, got {tau}")
    if out_len < 1:
        raise InvalidArgumentError(f"out_len must be >= 1, got {out_len}")
    dv = np.diff(v, prepend=0)
    lvals = laguerre_table(v.size + out_len - 2, [spec.eta * tau])[0]
    return dv, lvals


def conjugation(v_bar, tau, spec, out_len):
    """``Q_j = sum_m (v_m - v_{m-1}) l_{m+j}(eta tau)`` for ``j < out_len``.

    Evaluated as a linear correlation through the FFT.
    """
    dv, lvals = _conjugation_inputs(v_bar, tau, spec, out_len)
    full = fftconvolve(lvals, dv[::-1])
    return full[dv.size - 1 : dv.size - 1 + out_len]


def conjugation_direct(v_bar, tau, spec, out_len):
    """Double-loop evaluation of :func:`conjugation`."""
    dv, lvals = _conjugation_inputs(v_bar, tau, spec, out_len)
    out = np.zeros(out_len, dtype=np.result_type(dv, float))
    for j in range(out_len):
        for m in range(dv.size):
            out[j] += dv[m] * lvals[m + j]
    return out


def time_source(spec, grid):
    """Block source of ``eta l_m(eta t_i)`` extended past the last time and order.

    Extra rows continue the equispaced time step of the grid.
    """
    t = grid.t
    step = t[-1] - t[-2] if t.size > 1 else 1.0

    def times(r0, r1):
        i = np.arange(r0, r1)
        inside = i < t.size
        return np.where(inside, t[np.minimum(i, t.size - 1)], t[-1] + (i - t.size + 1) * step)

    def source(r0, r1, c0, c1):
        tab = laguerre_table(c1 - 1, spec.eta * times(r0, r1))
        return spec.eta * tab[:, c0:c1]

    return source


def build_time_matrix(spec, grid):
    """Dense ``D[i, m] = eta l_m(eta t_i)``."""
    return time_source(spec, grid)(0, len(grid), 0, spec.m_count)


class LaguerreBackward2D(Block2DOperator):
    """2D block compression of the time matrix ``D``."""

    def __init__(self, spec, grid, config, dense_cutoff=DENSE_CUTOFF, shared_threshold=True,
                 threads=None):
        self.spec, self.grid = spec, grid
        super().__init__(time_source(spec, grid), len(grid), spec.m_count, config,
                         dense_cutoff=dense_cutoff, shared_threshold=shared_threshold,
                         threads=threads)

    def __call__(self, coeffs):
        return self.matvec(coeffs)


def laguerre_backward_2d(spec, grid, coeffs, config):
    """Series values at ``grid.t`` via a freshly built 2D block operator."""
    return LaguerreBackward2D(spec, grid, config)(coeffs)
