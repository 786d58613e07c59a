"""Unitary DFT of arbitrary length and the matching circular convolution.

Every transform here uses the symmetric ``1/sqrt(N)`` normalisation,

    y_k = 1/sqrt(N) * sum_j x_j exp(-2 pi i j k / N),

so that the forward matrix is unitary and the inverse is its conjugate
transpose. The numerical work is delegated to :mod:`scipy.fft` (pocketfft),
which handles any length through mixed-radix and Bluestein passes.
"""
from __future__ import annotations

import os
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.fft as sfft

from .errors import InvalidArgumentError

__all__ = [
    "DftPlan",
    "get_plan",
    "dft_forward",
    "dft_inverse",
    "circular_convolve",
    "next_fast_len",
]


def _workers():
    n = os.environ.get("XCOMP_THREADS")
    return int(n) if n else 1


def as_complex_vector(x, name="x"):
    """Validate ``x`` as a nonempty finite 1-D complex vector."""
    arr = np.asarray(x)
    if arr.ndim != 1:
        raise InvalidArgumentError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if arr.size == 0:
        raise InvalidArgumentError(f"{name} must be nonempty")
    arr = arr.astype(np.complex128, copy=False)
    if not np.all(np.isfinite(arr)):
        raise InvalidArgumentError(f"{name} contains non-finite values")
    return arr


@dataclass(frozen=True)
class DftPlan:
    """Immutable description of a unitary transform of fixed size.

    Plans carry no scratch state, so one plan may be executed from several
    threads at once. ``axis`` selects the transformed axis of 2-D input.
    """

    size: int
    direction: str = "forward"

    def __post_init__(self):
        if self.size < 1:
            raise InvalidArgumentError(f"DFT size must be positive, got {self.size}")
        if self.direction not in ("forward", "inverse"):
            raise InvalidArgumentError(f"unknown direction {self.direction!r}")

    def execute(self, x, axis=-1, workers=None):
        x = np.asarray(x)
        if x.shape[axis] != self.size:
            raise InvalidArgumentError(
                f"plan size {self.size} does not match input length {x.shape[axis]}"
            )
        w = _workers() if workers is None else workers
        if self.direction == "forward":
            return sfft.fft(x, axis=axis, norm="ortho", workers=w)
        return sfft.ifft(x, axis=axis, norm="ortho", workers=w)


@lru_cache(maxsize=256)
def get_plan(size, direction="forward"):
    """Return the cached plan for ``(size, direction)``."""
    return DftPlan(int(size), direction)


def dft_forward(x):
    """Unitary forward DFT of a 1-D vector of any length."""
    x = as_complex_vector(x)
    return get_plan(x.size, "forward").execute(x)


def dft_inverse(x):
    """Conjugate transpose of :func:`dft_forward`."""
    x = as_complex_vector(x)
    return get_plan(x.size, "inverse").execute(x)


def circular_convolve(xt, yt):
    """Circular convolution with the unitary scaling.

    ``z_n = 1/sqrt(N) * sum_m xt_m * yt_{(n - m) mod N}``. With this scaling
    ``dft_forward(u * v) == circular_convolve(dft_forward(u), dft_forward(v))``.
    """
    xt = as_complex_vector(xt, "xt")
    yt = as_complex_vector(yt, "yt")
    if xt.size != yt.size:
        raise InvalidArgumentError(f"length mismatch: {xt.size} != {yt.size}")
    n = xt.size
    # ifft(norm="backward") carries 1/N; multiply back to leave 1/sqrt(N)
    z = sfft.ifft(sfft.fft(xt) * sfft.fft(yt))
    return z / np.sqrt(n)


def next_fast_len(n):
    """Smallest length >= n whose DFT factors into small primes."""
    return sfft.next_fast_len(int(n))
