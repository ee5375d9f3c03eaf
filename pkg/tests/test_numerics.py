import cmath
import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import special

from floquet_well.errors import ConditioningError, ConvergenceError, DomainError
from floquet_well.numerics import (MAX_BESSEL_ORDER, RootFindSettings, bessel_jn, bessel_jn_table,
                                   branch_sqrt, branch_sqrt_array, find_root, periodic_average,
                                   solve_linear)


# Bessel functions -----------------------------------------------------------

@pytest.mark.parametrize("n", [0, 1, 2, 5, 10, 20])
@pytest.mark.parametrize("x", [0.0, 1e-6, 0.3, 1.0, 3.9, 4.1, 7.5, 12.0, 25.0])
def test_bessel_against_scipy(n, x):
    assert bessel_jn(n, x) == pytest.approx(special.jv(n, x), abs=1e-13)


@pytest.mark.parametrize("n, x", [(0, 2.4048255576957727), (3, 0.5), (8, 9.0), (1, 30.0)])
def test_bessel_against_mpmath(n, x):
    exact = float(mpmath.besselj(n, x))
    assert bessel_jn(n, x) == pytest.approx(exact, abs=1e-14)


def test_bessel_zero_argument():
    assert bessel_jn(0, 0.0) == 1.0
    assert bessel_jn(3, 0.0) == 0.0
    assert bessel_jn(-2, 0.0) == 0.0


@given(n=st.integers(1, 30), x=st.floats(0.01, 40.0))
@settings(max_examples=60, deadline=None)
def test_negative_order_symmetry(n, x):
    assert bessel_jn(-n, x) == pytest.approx((-1) ** n * bessel_jn(n, x), abs=1e-10)


@given(x=st.floats(0.05, 30.0))
@settings(max_examples=40, deadline=None)
def test_three_term_recurrence(x):
    J = bessel_jn_table(12, x)
    for m in range(-11, 12):
        lhs = J[m - 1 + 12] + J[m + 1 + 12]
        assert lhs == pytest.approx(2 * m / x * J[m + 12], abs=1e-10)


def test_table_layout_and_sum_rule():
    J = bessel_jn_table(30, 2.7)
    assert J.shape == (61,)
    assert J[30] == pytest.approx(special.jv(0, 2.7), abs=1e-14)
    assert J[30 - 4] == pytest.approx(special.jv(-4, 2.7), abs=1e-14)
    # sum_m J_m(x)^2 = 1
    assert np.sum(J ** 2) == pytest.approx(1.0, abs=1e-13)


def test_bessel_rejects_bad_input():
    with pytest.raises(DomainError):
        bessel_jn(MAX_BESSEL_ORDER + 1, 1.0)
    with pytest.raises(DomainError):
        bessel_jn(1, math.nan)
    with pytest.raises(DomainError):
        bessel_jn(1, -1.0)


# Square roots ---------------------------------------------------------------

@pytest.mark.parametrize("z", [4.0, -4.0, 3 - 4j, 3 + 4j, -3 + 1e-3j, -3 - 1e-3j, 2j, -2j])
def test_branch_sqrt_squares_back(z):
    for convention in ("decay", "outgoing", "principal"):
        w = branch_sqrt(z, convention)
        assert w * w == pytest.approx(z, abs=1e-14)


def test_decay_branch_is_principal():
    assert branch_sqrt(-4.0) == 2j
    assert branch_sqrt(-3 - 1e-3j).real > 0
    assert branch_sqrt(1 - 1j, "principal") == cmath.sqrt(1 - 1j)


def test_outgoing_branch():
    # open channel: outgoing wave, Re > 0
    assert branch_sqrt(4 - 0.1j, "outgoing").real > 0
    # closed channel either side of the real axis: decaying, Im > 0
    above = branch_sqrt(-4 + 1e-9j, "outgoing")
    below = branch_sqrt(-4 - 1e-9j, "outgoing")
    assert above.imag > 0 and below.imag > 0
    assert abs(above - below) < 1e-8


def test_branch_sqrt_array_matches_scalar():
    z = np.array([4, -4, 3 - 4j, -3 - 1e-3j, -2j])
    for convention in ("decay", "outgoing"):
        expected = [branch_sqrt(v, convention) for v in z]
        np.testing.assert_allclose(branch_sqrt_array(z, convention), expected, atol=1e-15)


def test_branch_sqrt_rejects_unknown_convention():
    with pytest.raises(ValueError):
        branch_sqrt(1.0, "sideways")


# Linear systems -------------------------------------------------------------

def test_solve_linear_residual():
    rng = np.random.default_rng(3)
    A = rng.normal(size=(12, 12)) + 1j * rng.normal(size=(12, 12))
    b = rng.normal(size=(12, 2)) + 0j
    x, cond = solve_linear(A, b, return_condition=True)
    assert np.linalg.norm(A @ x - b) <= 1e-10 * (np.linalg.norm(A) * np.linalg.norm(x) + np.linalg.norm(b))
    assert cond >= 1.0


def test_solve_linear_singular():
    A = np.array([[1.0, 2.0], [2.0, 4.0]])
    with pytest.raises(ConditioningError) as info:
        solve_linear(A, np.array([1.0, 0.0]))
    assert info.value.condition > 1e14


# Root finding ---------------------------------------------------------------

def test_find_root_complex_polynomial():
    f = lambda z: z ** 3 - 1
    root = find_root(f, complex(-0.4, 0.9))
    assert abs(root - cmath.exp(2j * math.pi / 3)) < 1e-10


def test_find_root_transcendental():
    # x tan x = 1 has its first root near 0.8603335890
    root = find_root(lambda z: z * cmath.tan(z) - 1, 0.7 + 0.05j)
    assert root.real == pytest.approx(0.86033358901937976, abs=1e-10)
    assert abs(root.imag) < 1e-10


def test_find_root_reports_best_iterate():
    with pytest.raises(ConvergenceError) as info:
        find_root(lambda z: z * z + 1.0 + abs(z), 0.5, RootFindSettings(max_iters=5))
    assert info.value.residual > 0


def test_root_settings_validation():
    with pytest.raises(DomainError):
        RootFindSettings(residual_tol=-1)
    with pytest.raises(DomainError):
        RootFindSettings(max_iters=0)


# Periodic average -----------------------------------------------------------

def test_periodic_average_trig():
    T = 2 * math.pi / 9.3
    avg = periodic_average(lambda t: math.cos(9.3 * t) ** 2 + 0.25 * math.sin(18.6 * t), T)
    assert avg == pytest.approx(0.5, abs=1e-14)


def test_periodic_average_doubling_converges():
    T = 0.7
    g = lambda t: math.exp(0.3 * math.cos(2 * math.pi * t / T))
    assert periodic_average(g, T, 128) == pytest.approx(periodic_average(g, T, 256), abs=1e-12)
    assert periodic_average(g, T) == pytest.approx(float(mpmath.besseli(0, 0.3)), abs=1e-12)


def test_periodic_average_validation():
    with pytest.raises(DomainError):
        periodic_average(math.cos, 0.0)
    with pytest.raises(DomainError):
        periodic_average(math.cos, 1.0, samples=8)
