"""Jacobi polynomials, Gauss-Jacobi quadrature and block transforms."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .blocks import DENSE_CUTOFF, BlockPlan, BlockTransform, plan_blocks
from .errors import InvalidArgumentError, NumericFailureError

__all__ = [
    "JacobiBasis",
    "QuadratureRule",
    "jacobi_eval",
    "jacobi_table",
    "jacobi_norm",
    "gauss_jacobi",
    "build_jacobi_matrix",
    "jacobi_source",
    "plan_blocks",
    "BlockPlan",
    "JacobiTransform",
    "block_backward",
    "block_forward",
]


@dataclass(frozen=True)
class JacobiBasis:
    alpha: float = 0.0
    beta: float = 0.0

    def __post_init__(self):
        if not (self.alpha > -1 and self.beta > -1):
            raise InvalidArgumentError(
                f"alpha and beta must exceed -1, got ({self.alpha}, {self.beta})")

    def weight(self, x):
        x = np.asarray(x, dtype=float)
        return (1 - x) ** self.alpha * (1 + x) ** self.beta

    def total_mass(self):
        """Integral of the weight over [-1, 1]."""
        a, b = self.alpha, self.beta
        return math.exp((a + b + 1) * math.log(2) + math.lgamma(a + 1) + math.lgamma(b + 1)
                        - math.lgamma(a + b + 2))


@dataclass(frozen=True)
class QuadratureRule:
    nodes: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        if self.nodes.shape != self.weights.shape or self.nodes.ndim != 1:
            raise InvalidArgumentError("nodes and weights must be 1-D of equal length")

    def __len__(self):
        return self.nodes.size

    def integrate(self, values):
        return float(np.dot(self.weights, values))


def _recurrence(a, b, n):
    """Coefficients of ``J_{n+1} = (c1 x + c0) J_n - c2 J_{n-1}`` for n >= 1."""
    s = 2 * n + a + b
    den = 2 * (n + 1) * (n + a + b + 1) * s
    c1 = (s + 1) * (s + 2) * s / den
    c0 = (s + 1) * (a * a - b * b) / den
    c2 = 2 * (n + a) * (n + b) * (s + 2) / den
    return c1, c0, c2


def jacobi_table(basis, m_max, x):
    """Values ``J_m(x)`` for ``m = 0..m_max``; shape ``(len(x), m_max + 1)``."""
    x = np.asarray(x, dtype=float)
    a, b = basis.alpha, basis.beta
    out = np.empty((x.size, m_max + 1))
    out[:, 0] = 1.0
    if m_max >= 1:
        out[:, 1] = 0.5 * (a - b) + 0.5 * (a + b + 2) * x
    for n in range(1, m_max):
        c1, c0, c2 = _recurrence(a, b, n)
        out[:, n + 1] = (c1 * x + c0) * out[:, n] - c2 * out[:, n - 1]
    return out


def _jacobi_last(a, b, n, x):
    """``J_n(x)`` for a vector of points using O(n) memory."""
    if n == 0:
        return np.ones_like(x)
    prev, cur = np.ones_like(x), 0.5 * (a - b) + 0.5 * (a + b + 2) * x
    for k in range(1, n):
        c1, c0, c2 = _recurrence(a, b, k)
        prev, cur = cur, (c1 * x + c0) * cur - c2 * prev
    return cur


def jacobi_eval(basis, m, x):
    """Degree-``m`` Jacobi polynomial at ``x`` in [-1, 1]."""
    if m < 0 or int(m) != m:
        raise InvalidArgumentError(f"degree must be a nonnegative integer, got {m}")
    x = float(x)
    if not -1.0 <= x <= 1.0:
        raise InvalidArgumentError(f"x must lie in [-1, 1], got {x}")
    return float(_jacobi_last(basis.alpha, basis.beta, int(m), np.array([x]))[0])


def _log_norm(a, b, m):
    if m == 0:
        return ((a + b + 1) * math.log(2) + math.lgamma(a + 1) + math.lgamma(b + 1)
                - math.lgamma(a + b + 2))
    return ((a + b + 1) * math.log(2) - math.log(2 * m + a + b + 1)
            + math.lgamma(m + a + 1) + math.lgamma(m + b + 1)
            - math.lgamma(m + a + b + 1) - math.lgamma(m + 1))


def jacobi_norm(basis, m):
    """Squared weighted norm of ``J_m``."""
    if m < 0:
        raise InvalidArgumentError(f"m must be >= 0, got {m}")
    return math.exp(_log_norm(basis.alpha, basis.beta, int(m)))


def gauss_jacobi(basis, n, tol=1e-15, maxiter=100):
    """Gauss-Jacobi nodes (increasing) and weights by Newton iteration.

    Newton runs on all roots at once, started from the asymptotic cosine
    guesses; the derivative comes from ``J_n' = (n+a+b+1)/2 J_{n-1}^(a+1,b+1)``.
    """
    if n < 1:
        raise InvalidArgumentError(f"n must be >= 1, got {n}")
    a, b = basis.alpha, basis.beta
    k = np.arange(1, n + 1)
    theta = (4 * k - 1 + 2 * a) * np.pi / (4 * n + 2 * a + 2 * b + 2)
    x = np.cos(theta)[::-1].copy()
    scale = 0.5 * (n + a + b + 1)
    for _ in range(maxiter):
        p = _jacobi_last(a, b, n, x)
        dp = scale * _jacobi_last(a + 1, b + 1, n - 1, x)
        step = p / dp
        x = x - step
        if np.max(np.abs(step)) <= tol * 4:
            break
    else:
        raise NumericFailureError(f"Gauss-Jacobi Newton did not converge for n={n}")
    if not (np.all(np.diff(x) > 0) and x[0] > -1 and x[-1] < 1):
        raise NumericFailureError(f"Gauss-Jacobi nodes collided for n={n}")
    dp = scale * _jacobi_last(a + 1, b + 1, n - 1, x)
    logc = ((a + b + 1) * math.log(2) + math.lgamma(n + a + 1) + math.lgamma(n + b + 1)
            - math.lgamma(n + a + b + 1) - math.lgamma(n + 1))
    w = np.exp(logc) / ((1 - x) * (1 + x) * dp * dp)
    return QuadratureRule(x, w)


def jacobi_source(basis, rule, normalized=True):
    """Block source ``(r0, r1, c0, c1)`` of the right-extended Jacobi matrix."""
    x, w = rule.nodes, rule.weights
    cache = {}

    def source(r0, r1, c0, c1):
        table = cache.get(c1)
        if table is None:
            table = jacobi_table(basis, c1 - 1, x)
            if normalized:
                lognorm = np.array([_log_norm(basis.alpha, basis.beta, m) for m in range(c1)])
                table *= np.sqrt(w)[:, None] * np.exp(-0.5 * lognorm)[None, :]
            cache.clear()
            cache[c1] = table
        return table[r0:r1, c0:c1]

    return source


def build_jacobi_matrix(basis, rule, m_count, normalized=True):
    """Dense matrix with entries ``sqrt(w_n / chi_m) J_m(x_n)``.

    With ``normalized=False`` the entries are the plain values ``J_m(x_n)``.
    """
    if m_count < 1:
        raise InvalidArgumentError(f"m_count must be >= 1, got {m_count}")
    return jacobi_source(basis, rule, normalized)(0, len(rule), 0, m_count).copy()


class JacobiTransform(BlockTransform):
    """Block extra-component transform for an orthonormal Jacobi matrix.

    A fixed bandwidth in ``config`` is per spectral peak; real rows have two.
    """

    def __init__(self, basis, n, config, m_count=None, rule=None, dense_cutoff=DENSE_CUTOFF,
                 normalized=True, threads=None):
        self.basis = basis
        self.rule = rule if rule is not None else gauss_jacobi(basis, n)
        m_count = n if m_count is None else m_count
        plan = plan_blocks(m_count, config, dense_cutoff)
        super().__init__(jacobi_source(self.basis, self.rule, normalized), len(self.rule),
                         plan, config.scaled(2), threads=threads)


def block_backward(transform, coeffs):
    """Values at the quadrature nodes from coefficients."""
    return transform.backward(coeffs)


def block_forward(transform, values):
    """Coefficients from values at the quadrature nodes (``B.T @ values``)."""
    return transform.forward(values)
