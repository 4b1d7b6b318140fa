import math

import pytest

from fpcert.core import BallDomain, CoreError, NormKind, OperatorSpec, Vector
from fpcert.estimate import (SAFETY_FACTOR, estimate_lipschitz_K,
                             estimate_lipschitz_M, with_safety)


def scalar_op(f, df=None):
    deriv = None
    if df is not None:
        def deriv(x, h):
            return Vector([df(x[0]) * h[0]])
    return OperatorSpec(dim=1, evaluator=lambda x: Vector([f(x[0])]), derivative=deriv)


def unit_ball(center=0.0, radius=1.0):
    return BallDomain(Vector([center]), radius, NormKind.SUP)


def test_with_safety():
    assert with_safety(2.0) == pytest.approx(2.0 * SAFETY_FACTOR, rel=1e-15)
    assert with_safety(2.0, 1.5) == 3.0
    with pytest.raises(CoreError):
        with_safety(1.0, 0.9)


def test_linear_map_is_estimated_exactly():
    # difference quotients of an affine map all equal the slope
    op = scalar_op(lambda t: 0.5 * t + 1.0)
    assert estimate_lipschitz_M(op, unit_ball()) == pytest.approx(0.5, rel=1e-12)


def test_estimate_is_a_lower_bound_for_cos():
    # sup |sin| on [0.54, 1.0] is sin(1); sampling approaches it from below
    ball = BallDomain(Vector([0.77]), 0.23, NormKind.SUP)
    est = estimate_lipschitz_M(scalar_op(math.cos), ball, samples=500, seed=1)
    assert est <= math.sin(1.0)
    assert est >= math.sin(0.54)  # any pair ratio already clears the infimum slope


def test_estimate_deterministic_and_monotone_in_samples():
    op = scalar_op(math.cos)
    ball = unit_ball(0.5, 0.4)
    a = estimate_lipschitz_M(op, ball, samples=100, seed=3)
    b = estimate_lipschitz_M(op, ball, samples=100, seed=3)
    c = estimate_lipschitz_M(op, ball, samples=400, seed=3)
    assert a == b
    assert c >= a


def test_estimate_sample_floor():
    with pytest.raises(CoreError):
        estimate_lipschitz_M(scalar_op(math.cos), unit_ball(), samples=9)
    with pytest.raises(CoreError):
        estimate_lipschitz_K(scalar_op(math.cos, df=lambda t: -math.sin(t)),
                             unit_ball(), samples=5)


def test_derivative_lipschitz_of_square_is_two():
    # A(x) = x^2 has A'(x)h = 2xh, so the derivative is 2-Lipschitz exactly
    op = scalar_op(lambda t: t * t, df=lambda t: 2.0 * t)
    assert estimate_lipschitz_K(op, unit_ball()) == pytest.approx(2.0, rel=1e-12)


def test_derivative_lipschitz_lower_bound_for_cos():
    # A''(x) = -cos(x): sup on [-0.5, 0.5] is cos(0) = 1
    op = scalar_op(math.cos, df=lambda t: -math.sin(t))
    est = estimate_lipschitz_K(op, unit_ball(0.0, 0.5), samples=300, seed=2)
    assert 0.9 <= est <= 1.0


def test_multidim_matrix_map():
    mat = [[0.3, 0.1], [0.0, 0.2]]
    op = OperatorSpec(
        dim=2,
        evaluator=lambda x: Vector([0.3 * x[0] + 0.1 * x[1], 0.2 * x[1]]))
    ball = BallDomain(Vector([0.0, 0.0]), 1.0, NormKind.SUP)
    # induced sup norm of the matrix is its max row sum
    assert estimate_lipschitz_M(op, ball, samples=500) == pytest.approx(0.4, abs=0.02)
    assert estimate_lipschitz_M(op, ball, samples=500) <= 0.4 + 1e-12
