"""Direct reference products, error metrics and test matrices."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gamma

from .errors import InvalidArgumentError

__all__ = [
    "ErrorReport",
    "direct_matvec",
    "error_report",
    "lambda_ratio",
    "test_matrix_a1",
    "test_matrix_a2",
    "test_matrix_a3",
    "test_matrix_source",
    "TEST_MATRICES",
]


def direct_matvec(a, x):
    """Dense ``a @ x`` accumulated column by column.

    Each output entry is summed strictly left to right, so results do not
    depend on the BLAS blocking.
    """
    a = np.asarray(a)
    x = np.asarray(x)
    if a.ndim != 2 or x.ndim != 1 or a.shape[1] != x.size:
        raise InvalidArgumentError(f"cannot multiply {a.shape} by {x.shape}")
    y = np.zeros(a.shape[0], dtype=np.result_type(a, x, float))
    for j in range(a.shape[1]):
        y += a[:, j] * x[j]
    return y


@dataclass(frozen=True)
class ErrorReport:
    """``max_rel_inf = |a-b|_inf / |b|_inf`` and ``rel_l2 = |a-b|_2 / |b|_2``.

    When the reference is all zeros the fields hold absolute norms and
    ``absolute`` is set.
    """

    max_rel_inf: float
    rel_l2: float
    n: int
    absolute: bool = False

    def worst(self, other):
        return ErrorReport(max(self.max_rel_inf, other.max_rel_inf),
                           max(self.rel_l2, other.rel_l2), self.n,
                           self.absolute or other.absolute)


def error_report(got, want):
    got = np.asarray(got)
    want = np.asarray(want)
    if got.shape != want.shape or got.ndim != 1:
        raise InvalidArgumentError(f"shape mismatch {got.shape} vs {want.shape}")
    diff = got - want
    dinf, d2 = float(np.max(np.abs(diff), initial=0.0)), float(np.linalg.norm(diff))
    winf, w2 = float(np.max(np.abs(want), initial=0.0)), float(np.linalg.norm(want))
    if winf == 0.0:
        return ErrorReport(dinf, d2, got.size, absolute=True)
    return ErrorReport(dinf / winf, d2 / w2, got.size)


_LAMBDA_SWITCH = 150.0


def lambda_ratio(z):
    """``Gamma(z + 1/2) / Gamma(z + 1)`` for ``z >= 0``.

    Below z = 150 the two Gamma values are divided directly; above, the
    expansion ``w^(-1/2) (1 - 1/(64 w^2) + 21/(8192 w^4))`` with ``w = z + 1/4``
    is accurate to rounding. A difference of log-Gamma values would lose
    about ``eps * log Gamma(z)`` relative accuracy.
    """
    z = np.asarray(z, dtype=float)
    small = z < _LAMBDA_SWITCH
    zs = np.where(small, z, 0.0)
    w = np.where(small, 1.0, z) + 0.25
    w2 = 1.0 / (w * w)
    large = (1.0 - w2 / 64.0 + 21.0 / 8192.0 * w2 * w2) / np.sqrt(w)
    out = np.where(small, gamma(zs + 0.5) / gamma(zs + 1.0), large)
    return out[()] if out.ndim == 0 else out


def _check_n(n):
    if n < 1:
        raise InvalidArgumentError(f"n must be >= 1, got {n}")


def _grid(i, j):
    return (np.asarray(i, dtype=np.int64)[:, None], np.asarray(j, dtype=np.int64)[None, :])


def a1_entries(i, j):
    """Entries of the ``Lambda`` product matrix at index vectors ``i`` x ``j``."""
    i, j = _grid(i, j)
    upper = i <= j
    a = np.where(upper, 2 / np.pi * lambda_ratio(np.where(upper, j - i, 0))
                 * lambda_ratio(j + i), 0.0)
    return np.where(upper & (i == 0), lambda_ratio(j) / np.pi, a)


def a2_entries(i, j):
    """Entries ``(i cos(log i^2) - j cos(log j^2)) / (i - j)^2``, zero on the diagonal."""
    i, j = _grid(i, j)

    def g(k):
        k = k.astype(float)
        # k cos(log k^2) tends to 0 as k -> 0
        return np.where(k > 0, k * np.cos(np.log(np.where(k > 0, k * k, 1.0))), 0.0)

    diff = (i - j).astype(float)
    same = diff == 0
    return np.where(same, 0.0, (g(i) - g(j)) / np.where(same, 1.0, diff) ** 2)


def a3_entries(i, j):
    """Entries ``1 / (i - j + cos(i j) / 2)``, zero on the diagonal."""
    i, j = _grid(i, j)
    den = (i - j) + 0.5 * np.cos((i * j).astype(float))
    same = i == j
    return np.where(same, 0.0, 1.0 / np.where(same, 1.0, den))


TEST_MATRICES = {"a1": a1_entries, "a2": a2_entries, "a3": a3_entries}


def test_matrix_source(name):
    """Block source ``(r0, r1, c0, c1)`` of a test matrix, defined for any extent."""
    entries = TEST_MATRICES[name]
    return lambda r0, r1, c0, c1: entries(np.arange(r0, r1), np.arange(c0, c1))


def test_matrix_a1(n):
    """Upper triangular ``Lambda`` product matrix."""
    _check_n(n)
    return a1_entries(np.arange(n), np.arange(n))


def test_matrix_a2(n):
    """Cosine-log kernel with zero diagonal."""
    _check_n(n)
    return a2_entries(np.arange(n), np.arange(n))


def test_matrix_a3(n):
    """Shifted reciprocal kernel with zero diagonal."""
    _check_n(n)
    return a3_entries(np.arange(n), np.arange(n))
