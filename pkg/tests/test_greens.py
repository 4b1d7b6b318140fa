import math

import numpy as np
import pytest

from fpcert.core import OperatorSpec, Vector
from fpcert.greens import (GreensError, GridFunction, KernelSpec,
                           apply_integral_operator, bound_propagate,
                           build_volterra_kernel, kernel_from_expression,
                           run_integral_iteration)
from fpcert.majorant import ProblemConstants
from fpcert.schemes import SchemeKind, StopRule


def pointwise(f):
    return OperatorSpec(dim=1, evaluator=lambda x: Vector([f(x[0])]))


# -- grid functions -------------------------------------------------------


def test_uniform_grid():
    g = GridFunction.uniform(1.0, 4, fill=2.0)
    assert np.array_equal(g.nodes, [0.0, 0.25, 0.5, 0.75, 1.0])
    assert np.all(g.values == 2.0)
    assert g.sup_norm() == 2.0


def test_grid_validation():
    with pytest.raises(GreensError):
        GridFunction([0.5, 1.0], [0.0, 0.0])       # must start at 0
    with pytest.raises(GreensError):
        GridFunction([0.0, 1.0, 0.5], [0.0] * 3)   # must increase
    with pytest.raises(GreensError):
        GridFunction([0.0], [0.0])                 # too short
    with pytest.raises(GreensError):
        GridFunction([0.0, 1.0], [0.0, math.inf])  # finite values only
    with pytest.raises(GreensError):
        GridFunction.uniform(0.0, 4)


def test_grid_is_read_only():
    g = GridFunction.uniform(1.0, 4)
    with pytest.raises(ValueError):
        g.values[0] = 1.0


def test_sup_distance_requires_same_nodes():
    a = GridFunction.uniform(1.0, 4)
    b = GridFunction.uniform(1.0, 5)
    with pytest.raises(GreensError):
        a.sup_distance(b)
    c = a.with_values(a.values + 0.3)
    assert a.sup_distance(c) == pytest.approx(0.3)


# -- kernels ---------------------------------------------------------------


def test_volterra_kernel_is_the_indicator():
    k = build_volterra_kernel(1.0)
    assert k.evaluate(0.5, 0.3) == 1.0
    assert k.evaluate(0.5, 0.5) == 1.0
    assert k.evaluate(0.5, 0.7) == 0.0


def test_expression_kernel_evaluates():
    k = kernel_from_expression("exp(t - s)", 1.0)
    assert k.evaluate(0.7, 0.2) == pytest.approx(math.exp(0.5), rel=1e-15)


def test_expression_kernel_domain_error_names_the_point():
    k = kernel_from_expression("log(t - s)", 1.0)
    with pytest.raises(GreensError) as exc:
        k.evaluate(0.5, 0.5)
    assert "t=0.5" in str(exc.value)


def test_kernel_spec_validation():
    with pytest.raises(GreensError):
        KernelSpec("fredholm", 1.0)
    with pytest.raises(GreensError):
        KernelSpec("volterra_unit", 0.0)
    with pytest.raises(GreensError):
        KernelSpec("expression", 1.0)


# -- quadrature -------------------------------------------------------------


def test_volterra_apply_exact_on_linear_integrand():
    # trapezoid integrates piecewise-linear integrands exactly: for x(s) = s
    # and identity A the image is t^2/2 at every node
    g = GridFunction.uniform(1.0, 50)
    x = g.with_values(g.nodes.copy())
    out = apply_integral_operator(build_volterra_kernel(1.0), pointwise(lambda u: u), x)
    assert np.allclose(out.values, 0.5 * g.nodes ** 2, atol=1e-15)


def test_expression_kernel_integrates_over_the_whole_interval():
    # G = 1 over [0, 1]: the image of any x is the constant mean of A(x)
    g = GridFunction.uniform(1.0, 40)
    x = g.with_values(g.nodes.copy())
    out = apply_integral_operator(kernel_from_expression("1", 1.0),
                                  pointwise(lambda u: u), x)
    assert np.allclose(out.values, 0.5, atol=1e-15)


def test_quadrature_error_is_second_order():
    # integrating s -> exp(s) up to t = 1: trapezoid error falls by 4x per
    # mesh halving
    k = build_volterra_kernel(1.0)
    errs = []
    for m in (50, 100, 200):
        g = GridFunction.uniform(1.0, m)
        x = g.with_values(np.exp(g.nodes))
        out = apply_integral_operator(k, pointwise(lambda u: u), x)
        errs.append(abs(out.values[-1] - (math.e - 1.0)))
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.05)
    assert errs[1] / errs[2] == pytest.approx(4.0, rel=0.05)


# -- iteration ---------------------------------------------------------------


def exp_growth_setup(m):
    """x = T(x) with (Tx)(t) = int_0^t (1 + x(s)) ds, solution e^t - 1."""
    k = build_volterra_kernel(1.0)
    A = pointwise(lambda u: 1.0 + u)
    return k, A, GridFunction.uniform(1.0, m)


def test_picard_converges_to_discrete_solution():
    k, A, x0 = exp_growth_setup(200)
    trace = run_integral_iteration(k, A, x0,
                                   stop=StopRule(max_n=80, residual_tol=1e-12))
    assert trace.stop_reason == "residual_tol"
    exact = np.exp(x0.nodes) - 1.0
    err = float(np.max(np.abs(trace.grids[-1].values - exact)))
    assert err < 5e-5  # trapezoid is second order: ~h^2 territory at m = 200
    assert trace.residual[-1] <= 1e-12


def test_mesh_refinement_shrinks_the_error_quadratically():
    errs = []
    for m in (100, 200, 400):
        k, A, x0 = exp_growth_setup(m)
        trace = run_integral_iteration(k, A, x0,
                                       stop=StopRule(max_n=80, residual_tol=1e-12))
        exact = np.exp(x0.nodes) - 1.0
        errs.append(float(np.max(np.abs(trace.grids[-1].values - exact))))
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.1)
    assert errs[1] / errs[2] == pytest.approx(4.0, rel=0.1)


def test_non_contraction_guard_catches_flat_steps():
    # G = 1 with A(u) = u + 1 shifts any constant function up by one forever
    k = kernel_from_expression("1", 1.0)
    trace = run_integral_iteration(k, pointwise(lambda u: u + 1.0),
                                   GridFunction.uniform(1.0, 10),
                                   stop=StopRule(max_n=100))
    assert trace.stop_reason == "non_contraction"
    assert all(v == pytest.approx(1.0, rel=1e-12) for v in trace.r)


def test_divergence_guard():
    # squaring outruns the guard radius well before ten flat steps accumulate
    k = kernel_from_expression("1", 1.0)
    trace = run_integral_iteration(k, pointwise(lambda u: u * u),
                                   GridFunction.uniform(1.0, 10, fill=2.0),
                                   stop=StopRule(max_n=100))
    assert trace.stop_reason == "diverged"
    assert trace.steps < 10


def test_grid_kernel_domain_mismatch():
    k = build_volterra_kernel(1.0)
    with pytest.raises(GreensError):
        run_integral_iteration(k, pointwise(lambda u: u), GridFunction.uniform(2.0, 10))


def test_step_function_is_nodewise_difference():
    k, A, x0 = exp_growth_setup(20)
    trace = run_integral_iteration(k, A, x0, stop=StopRule(max_n=5))
    sf = trace.step_function(2)
    want = np.abs(trace.grids[3].values - trace.grids[2].values)
    assert np.array_equal(sf.values, want)
    assert sf.sup_norm() == pytest.approx(trace.r[2], rel=1e-15)


# -- propagated bound ---------------------------------------------------------


def test_bound_propagate_accepts_true_picard_steps():
    # for the contraction scheme with M = 1 (A = 1 + u is 1-Lipschitz) the
    # inequality r_n(t) <= int_0^t [M r_{n-1}](s) ds holds exactly in the
    # continuum; the discrete margins must sit inside the quadrature slack
    k, A, x0 = exp_growth_setup(100)
    trace = run_integral_iteration(k, A, x0, stop=StopRule(max_n=12))
    c = ProblemConstants(M=1.0, M_star=0.0)
    for n in range(1, 6):
        rep = bound_propagate(k, c, trace.step_function(n - 1),
                              trace.step_function(n), SchemeKind.CONTRACTION, n)
        assert rep.ok
        assert rep.min_margin >= -rep.slack
        assert rep.margins.shape == x0.nodes.shape


def test_bound_propagate_rejects_understated_lipschitz():
    k, A, x0 = exp_growth_setup(100)
    trace = run_integral_iteration(k, A, x0, stop=StopRule(max_n=12))
    c = ProblemConstants(M=0.05, M_star=0.0)
    rep = bound_propagate(k, c, trace.step_function(0),
                          trace.step_function(1), SchemeKind.CONTRACTION, 1)
    assert not rep.ok


def test_bound_propagate_validates_grids_and_scheme():
    k, A, x0 = exp_growth_setup(10)
    other = GridFunction.uniform(1.0, 11)
    c = ProblemConstants(M=1.0, M_star=0.0)
    with pytest.raises(GreensError):
        bound_propagate(k, c, x0, other, SchemeKind.CONTRACTION, 1)
    with pytest.raises(GreensError):
        bound_propagate(k, c, x0, x0, SchemeKind.MODIFIED_NEWTON, 1)
