"""Band-sparse compression of special-function transform matrices.

Rows (or columns) of a dense transform matrix are multiplied by a Kaiser
window and Fourier transformed once; the result is nearly band-limited, so
only a few entries per line are kept. Extra padding components keep the
division by the window away from the data, and applying the stored operator
costs one FFT plus a sparse product.
"""
from .compressor import (
    PRESETS,
    CompressedOperator,
    CompressionConfig,
    apply_backward,
    apply_forward,
    bandwidth,
    compress_2d,
    compress_cols,
    compress_rows,
    preset,
    sparsity_ratio,
)
from .dft import dft_forward, dft_inverse
from .errors import (
    FormatError,
    IntegrityError,
    InvalidArgumentError,
    InvalidStateError,
    NumericFailureError,
    XCompError,
)
from .window import KaiserParams, kaiser_window, make_params, solve_extra_count, solve_zeta

__version__ = "0.1.0"
