import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.special import i0 as scipy_i0

from xcomp.errors import InvalidArgumentError, NumericFailureError
from xcomp.window import (
    KaiserParams,
    bessel_i0,
    bessel_i0e,
    bessel_i1,
    kaiser_window,
    make_params,
    solve_block_extra,
    solve_extra_count,
    solve_zeta,
)

mpmath.mp.dps = 40


def series_i0(x, terms=60):
    """Power series sum_k (x/2)^(2k) / (k!)^2 in extended precision."""
    x = mpmath.mpf(x)
    return mpmath.fsum((x / 2) ** (2 * k) / mpmath.factorial(k) ** 2 for k in range(terms + 1))


def bisect_zeta(eps1, lo=0.0, hi=100.0, tol=1e-12):
    f = lambda z: 1 / mpmath.besseli(0, z) - eps1
    lo, hi = mpmath.mpf(lo), mpmath.mpf(hi)
    while hi - lo > tol:
        mid = (lo + hi) / 2
        if f(mid) > 0:
            lo = mid
        else:
            hi = mid
    return float((lo + hi) / 2)


def window_value(zeta, n_points, n):
    u = 2 * n / n_points - 1
    return scipy_i0(zeta * np.sqrt(max(0.0, 1 - u * u))) / scipy_i0(zeta)


def scan_extra(zeta, eps2, m):
    s = 0
    while window_value(zeta, m + 2 * s, s) < eps2:
        s += 1
    return s


def test_i0_at_zero():
    assert bessel_i0(0.0) == 1.0


def test_i0_matches_series_at_25():
    want = series_i0(25)
    assert abs(float((mpmath.mpf(float(bessel_i0(25.0))) - want) / want)) <= 1e-14


@pytest.mark.parametrize("x", np.linspace(0, 30, 61))
def test_i0_relative_error_on_series_range(x):
    want = mpmath.besseli(0, x)
    assert abs(float((mpmath.mpf(float(bessel_i0(x))) - want) / want)) <= 1e-14


@pytest.mark.parametrize("x", [31.0, 50.0, 120.0, 400.0, 700.0])
def test_i0_relative_error_asymptotic_range(x):
    want = mpmath.besseli(0, x)
    assert abs(float((mpmath.mpf(float(bessel_i0(x))) - want) / want)) <= 1e-12


@pytest.mark.parametrize("x", [0.5, 30.0, 713.0, 1000.0])
def test_scaled_i0_up_to_1000(x):
    want = mpmath.besseli(0, x) * mpmath.e ** (-x)
    assert abs(float((mpmath.mpf(float(bessel_i0e(x))) - want) / want)) <= 1e-12


@pytest.mark.parametrize("x", [0.1, 5.0, 29.9, 30.1, 200.0])
def test_i1(x):
    want = mpmath.besseli(1, x)
    assert abs(float((mpmath.mpf(float(bessel_i1(x))) - want) / want)) <= 1e-13


def test_i0_monotone_and_at_least_one():
    xs = np.linspace(0, 700, 5001)
    v = bessel_i0(xs)
    assert np.all(v >= 1)
    assert np.all(np.diff(v) > 0)


@pytest.mark.parametrize("bad", [-1.0, np.nan, np.inf])
def test_i0_rejects_bad_argument(bad):
    with pytest.raises(InvalidArgumentError):
        bessel_i0(bad)


@pytest.mark.parametrize("zeta,n_points", [(3.0, 10), (38.0, 1023), (22.0, 1)])
def test_window_edge_value(zeta, n_points):
    w = kaiser_window(zeta, n_points)
    assert w.size == n_points + 1
    assert w[0] == pytest.approx(1 / float(bessel_i0(zeta)), rel=1e-12)


def test_window_center_is_one():
    assert kaiser_window(17.0, 64)[32] == pytest.approx(1.0, abs=1e-15)


def test_zero_shape_gives_ones():
    np.testing.assert_array_equal(kaiser_window(0.0, 20), np.ones(21))


def test_single_sample_window():
    np.testing.assert_allclose(kaiser_window(5.0, 0), [1 / float(bessel_i0(5.0))])


@given(zeta=st.floats(0, 60), n_points=st.integers(1, 400))
def test_window_definition_symmetry_and_bounds(zeta, n_points):
    w = kaiser_window(zeta, n_points)
    assert np.all(w > 0) and np.all(w <= 1 + 1e-15)
    np.testing.assert_allclose(w, w[::-1], rtol=1e-13)
    n = np.arange(n_points + 1)
    u = 2 * n / n_points - 1
    want = scipy_i0(zeta * np.sqrt(np.clip(1 - u * u, 0, 1))) / scipy_i0(zeta)
    np.testing.assert_allclose(w, want, rtol=1e-12)


@pytest.mark.parametrize("zeta,n", [(-1.0, 4), (np.nan, 4), (1.0, -1), (1.0, 2.5)])
def test_window_rejects_bad_input(zeta, n):
    with pytest.raises(InvalidArgumentError):
        kaiser_window(zeta, n)


def test_zeta_for_unit_eps1():
    assert solve_zeta(1.0) == 0.0


@pytest.mark.parametrize("eps1", [1e-10, 1e-6])
def test_zeta_matches_bisection(eps1):
    z = solve_zeta(eps1)
    assert abs(z - bisect_zeta(eps1)) <= 1e-6
    assert abs(1 / float(bessel_i0(z)) - eps1) <= 1e-3 * eps1


@given(st.floats(1e-15, 0.9))
def test_zeta_residual(eps1):
    z = solve_zeta(eps1)
    assert abs(1 / float(bessel_i0(z)) - eps1) <= 1e-3 * eps1


@pytest.mark.parametrize("eps1", [0.0, -1e-3, 1.5])
def test_zeta_rejects_bad_eps1(eps1):
    with pytest.raises(InvalidArgumentError):
        solve_zeta(eps1)


def test_zeta_nonconvergence_is_reported():
    with pytest.raises(NumericFailureError):
        solve_zeta(1e-10, maxiter=1)


def test_extra_count_matches_exhaustive_scan():
    zeta = solve_zeta(1e-10)
    assert solve_extra_count(zeta, 1e-3, 1024) == scan_extra(zeta, 1e-3, 1024)


def test_extra_count_zero_when_edge_already_large():
    zeta = solve_zeta(1e-3)
    # w_0 = 1/I0(zeta) = 1e-3 >= eps2
    assert solve_extra_count(zeta, 5e-4, 100) == 0


def test_extra_count_zero_shape():
    # an all-ones window satisfies any eps2 < 1 immediately
    assert solve_extra_count(0.0, 0.5, 64) == 0


def test_extra_count_gives_up_past_cap():
    with pytest.raises(NumericFailureError):
        solve_extra_count(38.0, 1 - 1e-6, 4)


@given(zeta=st.floats(1, 40), eps2=st.floats(1e-6, 0.5), m=st.integers(1, 300))
def test_extra_count_definition(zeta, eps2, m):
    try:
        s = solve_extra_count(zeta, eps2, m)
    except NumericFailureError:
        assert scan_extra_capped(zeta, eps2, m) is None
        return
    assert kaiser_window(zeta, m + 2 * s)[s] >= eps2
    if s > 0:
        assert kaiser_window(zeta, m + 2 * (s - 1))[s - 1] < eps2


def scan_extra_capped(zeta, eps2, m):
    for s in range(4 * m + 1):
        if window_value(zeta, m + 2 * s, s) >= eps2:
            return s
    return None


@given(zeta=st.floats(1, 40), m=st.integers(8, 300),
       e=st.lists(st.floats(1e-6, 0.3), min_size=2, max_size=2))
def test_extra_count_monotone_in_eps2(zeta, m, e):
    lo, hi = sorted(e)
    # a larger bound on the first data sample needs at least as many extras
    assert solve_extra_count(zeta, lo, m) <= solve_extra_count(zeta, hi, m)


@pytest.mark.parametrize("args", [(-1.0, 0.1, 5), (1.0, 0.0, 5), (1.0, 1.0, 5), (1.0, 0.1, 0)])
def test_extra_count_rejects_bad_input(args):
    with pytest.raises(InvalidArgumentError):
        solve_extra_count(*args)


@given(zeta=st.floats(1, 40), eps2=st.floats(1e-6, 0.3), k=st.integers(2, 2000))
def test_block_extra_definition(zeta, eps2, k):
    s = solve_block_extra(zeta, eps2, k)
    assert kaiser_window(zeta, k + s - 1)[s] >= eps2
    if s > 0:
        assert kaiser_window(zeta, k + s - 2)[s - 1] < eps2


def test_make_params():
    p = make_params(1e-10, 1e-3, 1024)
    assert isinstance(p, KaiserParams)
    assert p.s == solve_extra_count(p.zeta, 1e-3, 1024)
    with pytest.raises(InvalidArgumentError):
        KaiserParams(1.0, 2, 1e-3, 1e-4)
