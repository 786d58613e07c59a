"""Kaiser window and the solvers for its shape and the extra-component count."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError, NumericFailureError

__all__ = [
    "KaiserParams",
    "bessel_i0",
    "bessel_i1",
    "bessel_i0e",
    "kaiser_window",
    "solve_zeta",
    "solve_extra_count",
    "solve_block_extra",
    "make_params",
]

_SERIES_LIMIT = 30.0
_SERIES_TERMS = 110
_ASYMPTOTIC_TERMS = 40


def _check_arg(x):
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)) or np.any(x < 0):
        raise InvalidArgumentError("Bessel argument must be finite and nonnegative")
    return x


def _scaled_series(nu, x):
    # exp(-x) * sum_k (x/2)^(2k+nu) / (k! (k+nu)!), terms all positive
    q = 0.25 * x * x
    term = np.ones_like(x) if nu == 0 else 0.5 * x
    total = term.copy()
    for k in range(1, _SERIES_TERMS):
        term = term * q / (k * (k + nu))
        total += term
    return total * np.exp(-x)


def _scaled_asymptotic(nu, x):
    mu = 4.0 * nu * nu
    term = np.ones_like(x)
    total = term.copy()
    for k in range(1, _ASYMPTOTIC_TERMS):
        term = -term * (mu - (2 * k - 1) ** 2) / (k * 8.0 * x)
        total += term
    return total / np.sqrt(2.0 * np.pi * x)


def _bessel_scaled(nu, x):
    x = _check_arg(x)
    scalar = x.ndim == 0
    x = np.atleast_1d(x)
    out = np.empty_like(x)
    small = x <= _SERIES_LIMIT
    out[small] = _scaled_series(nu, x[small])
    out[~small] = _scaled_asymptotic(nu, x[~small])
    return out[0] if scalar else out


def bessel_i0e(x):
    """Exponentially scaled ``exp(-x) * I0(x)``; safe for any finite x >= 0."""
    return _bessel_scaled(0, x)


def bessel_i0(x):
    """Modified Bessel function of the first kind, order zero.

    Power series up to x = 30 (all terms positive, so no cancellation) and
    the Hankel asymptotic expansion beyond. Values overflow to ``inf`` for
    x above ~713, the float64 limit of ``exp(x)``.
    """
    x = _check_arg(x)
    with np.errstate(over="ignore"):
        return bessel_i0e(x) * np.exp(x)


def bessel_i1(x):
    """Modified Bessel function of the first kind, order one."""
    x = _check_arg(x)
    with np.errstate(over="ignore"):
        return _bessel_scaled(1, x) * np.exp(x)


def _log_i0(z):
    return math.log(float(bessel_i0e(z))) + z


def kaiser_window(zeta, n_points):
    """Kaiser window ``w_n = I0(zeta sqrt(1 - (2n/N - 1)^2)) / I0(zeta)``.

    Returns ``n_points + 1`` samples, n = 0..N. ``n_points = 0`` yields the
    single edge value ``1/I0(zeta)``.
    """
    if not (np.isfinite(zeta) and zeta >= 0):
        raise InvalidArgumentError(f"zeta must be finite and >= 0, got {zeta}")
    if int(n_points) != n_points or n_points < 0:
        raise InvalidArgumentError(f"n_points must be a nonnegative integer, got {n_points}")
    n_points = int(n_points)
    if n_points == 0:
        return np.array([1.0 / float(bessel_i0(zeta))])
    u = 2.0 * np.arange(n_points + 1) / n_points - 1.0
    arg = zeta * np.sqrt(np.clip(1.0 - u * u, 0.0, 1.0))
    return bessel_i0e(arg) / bessel_i0e(zeta) * np.exp(arg - zeta)


def solve_zeta(eps1, zeta0=50.0, maxiter=100):
    """Shape parameter with ``1/I0(zeta) = eps1``.

    Newton's method from ``zeta0 = 50`` applied to ``log I0(zeta) + log eps1``;
    the log form has the same root and a derivative ``I1/I0`` close to one,
    where the raw equation's derivative vanishes like ``1/I0``.
    """
    if not (0 < eps1 <= 1):
        raise InvalidArgumentError(f"eps1 must lie in (0, 1), got {eps1}")
    if eps1 == 1:
        return 0.0
    target = -math.log(eps1)
    z = float(zeta0)
    for _ in range(maxiter):
        ratio = float(_bessel_scaled(1, z) / bessel_i0e(z))
        step = (_log_i0(z) - target) / ratio
        z_new = z - step
        if z_new <= 0:
            z_new = 0.5 * z
        if abs(z_new - z) <= 1e-14 * max(1.0, z):
            z = z_new
            break
        z = z_new
    else:
        raise NumericFailureError(f"solve_zeta did not converge for eps1={eps1}")
    if abs(1.0 / float(bessel_i0(z)) - eps1) > 1e-3 * eps1:
        raise NumericFailureError(f"solve_zeta converged to an inaccurate root for eps1={eps1}")
    return z


def _edge_search(zeta, eps2, m, lengths, limit):
    s = np.arange(limit + 1)
    n = lengths(s)
    with np.errstate(invalid="ignore", divide="ignore"):
        u = np.where(n > 0, 2.0 * s / np.maximum(n, 1) - 1.0, -1.0)
    arg = zeta * np.sqrt(np.clip(1.0 - u * u, 0.0, 1.0))
    w = bessel_i0e(arg) / bessel_i0e(zeta) * np.exp(arg - zeta)
    ok = np.nonzero(w >= eps2)[0]
    if ok.size == 0:
        raise NumericFailureError(
            f"no extra-component count <= {limit} reaches eps2={eps2} (zeta={zeta}, m={m})"
        )
    return int(ok[0])


def solve_extra_count(zeta, eps2, m):
    """Smallest s >= 0 whose window of length m + 2s has ``w_s >= eps2``.

    Index s is the first genuine data sample once s zeros are padded on each
    side, so ``1/w_s <= 1/eps2`` bounds the amplification of compression
    error by the inverse window. The search scans s = 0, 1, 2, ... and gives
    up past ``4 m``.
    """
    if not (np.isfinite(zeta) and zeta >= 0):
        raise InvalidArgumentError(f"zeta must be finite and >= 0, got {zeta}")
    if not (0 < eps2 < 1):
        raise InvalidArgumentError(f"eps2 must lie in (0, 1), got {eps2}")
    if m < 1:
        raise InvalidArgumentError(f"m must be >= 1, got {m}")
    return _edge_search(zeta, eps2, m, lambda s: m + 2 * s, 4 * m)


def solve_block_extra(zeta, eps2, k):
    """Extra count for a block of k columns that can only grow to the right.

    The first s columns become the zero-padded left margin and s new
    columns are appended, giving a window of k + s samples whose value at
    index s is at least eps2.
    """
    if k < 1:
        raise InvalidArgumentError(f"block width must be >= 1, got {k}")
    if not (0 < eps2 < 1):
        raise InvalidArgumentError(f"eps2 must lie in (0, 1), got {eps2}")
    return _edge_search(zeta, eps2, k, lambda s: k + s - 1, 4 * k)


@dataclass(frozen=True)
class KaiserParams:
    """Window shape, extra-component count and the two thresholds."""

    zeta: float
    s: int
    eps1: float
    eps2: float

    def __post_init__(self):
        if self.zeta < 0 or self.s < 0:
            raise InvalidArgumentError("zeta and s must be nonnegative")
        if not (0 <= self.eps1 < 1 and 0 < self.eps2 < 1):
            raise InvalidArgumentError("eps1 must lie in [0, 1) and eps2 in (0, 1)")
        if self.eps1 >= self.eps2:
            raise InvalidArgumentError(f"eps1={self.eps1} must be below eps2={self.eps2}")


def make_params(eps1, eps2, m):
    """Solve both parameters for a frequency axis of ``m + 1`` samples."""
    zeta = solve_zeta(eps1)
    return KaiserParams(zeta, solve_extra_count(zeta, eps2, m), eps1, eps2)
