"""Integral reformulation x(t) = int_0^T G(t,s) A(x(s)) ds on a 1-D grid.

The built-in kernel is the Volterra unit kernel (G = 1 for s <= t, else 0),
the Green's function of d/dt with x(0) = 0.  Its iterations converge by
factorial decay even when M * T_end > 1, i.e. without any contraction
assumption; run_integral_iteration exists to exercise exactly that, plus the
nodewise bound-propagation inequality.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .core import OperatorSpec, Vector
from .exprparse import EvalDomainError, Expr, eval_expr, parse_expr
from .majorant import ProblemConstants
from .schemes import SchemeKind, StopRule


class GreensError(ValueError):
    pass


@dataclass(frozen=True)
class GridFunction:
    """Values on a strictly increasing node set starting at t = 0."""

    nodes: np.ndarray
    values: np.ndarray

    def __init__(self, nodes, values):
        nodes = np.asarray(nodes, dtype=float)
        values = np.asarray(values, dtype=float)
        if nodes.ndim != 1 or nodes.size < 2:
            raise GreensError("need at least 2 grid nodes")
        if nodes[0] != 0.0:
            raise GreensError("grid must start at t = 0, got %r" % nodes[0])
        if not np.all(np.diff(nodes) > 0):
            raise GreensError("grid nodes must be strictly increasing")
        if values.shape != nodes.shape:
            raise GreensError("values shape %r does not match nodes %r"
                              % (values.shape, nodes.shape))
        if not np.all(np.isfinite(values)):
            raise GreensError("grid values must be finite")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "values", values)
        self.nodes.setflags(write=False)
        self.values.setflags(write=False)

    @staticmethod
    def uniform(T_end: float, m: int, fill: float = 0.0) -> "GridFunction":
        """m intervals (m+1 nodes) on [0, T_end], constant fill value."""
        if T_end <= 0:
            raise GreensError("T_end must be positive")
        if m < 1:
            raise GreensError("need at least 1 interval")
        nodes = np.linspace(0.0, float(T_end), m + 1)
        return GridFunction(nodes, np.full(m + 1, float(fill)))

    def with_values(self, values) -> "GridFunction":
        return GridFunction(self.nodes, values)

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))

    def sup_distance(self, other: "GridFunction") -> float:
        if not np.array_equal(self.nodes, other.nodes):
            raise GreensError("grid functions live on different node sets")
        return float(np.max(np.abs(self.values - other.values)))


@dataclass(frozen=True)
class KernelSpec:
    kind: str                      # "volterra_unit" | "expression"
    T_end: float
    expr: Optional[Expr] = field(default=None, compare=False)

    def __post_init__(self):
        if self.kind not in ("volterra_unit", "expression"):
            raise GreensError("kernel kind must be volterra_unit or expression")
        if self.T_end <= 0:
            raise GreensError("T_end must be positive")
        if self.kind == "expression" and self.expr is None:
            raise GreensError("expression kernel needs a parsed expression")

    def evaluate(self, t: float, s: float) -> float:
        if self.kind == "volterra_unit":
            return 1.0 if s <= t else 0.0
        try:
            return eval_expr(self.expr, {"t": t, "s": s})
        except EvalDomainError as exc:
            raise GreensError("kernel failed at (t=%r, s=%r): %s" % (t, s, exc)) from exc


def build_volterra_kernel(T_end: float) -> KernelSpec:
    return KernelSpec("volterra_unit", float(T_end))


def kernel_from_expression(text: str, T_end: float) -> KernelSpec:
    return KernelSpec("expression", float(T_end), expr=parse_expr(text, {"t", "s"}))


def _pointwise(A: OperatorSpec, values: np.ndarray) -> np.ndarray:
    if A.dim != 1:
        raise GreensError("integral iteration uses pointwise scalar operators (dim 1)")
    return np.array([A.apply(Vector([v]))[0] for v in values])


def _cumtrap(nodes: np.ndarray, f: np.ndarray) -> np.ndarray:
    """Composite trapezoid of f over [0, t_i] for every node, half-weight at t_i."""
    out = np.empty_like(f)
    out[0] = 0.0
    np.cumsum(0.5 * (f[1:] + f[:-1]) * np.diff(nodes), out=out[1:])
    return out


def _kernel_quadrature(k: KernelSpec, nodes: np.ndarray, f: np.ndarray,
                       absolute: bool = False) -> np.ndarray:
    """Trapezoid values of s -> G(t_i, s) f(s) (optionally |G|) at every node."""
    if k.kind == "volterra_unit":
        return _cumtrap(nodes, f)
    n = nodes.size
    gmat = np.empty((n, n))
    for i, t in enumerate(nodes):
        for j, s in enumerate(nodes):
            gmat[i, j] = k.evaluate(float(t), float(s))
    if absolute:
        np.abs(gmat, out=gmat)
    w = np.empty(n)
    dn = np.diff(nodes)
    w[0] = 0.5 * dn[0]
    w[-1] = 0.5 * dn[-1]
    w[1:-1] = 0.5 * (dn[1:] + dn[:-1])
    return gmat @ (w * f)


def apply_integral_operator(k: KernelSpec, A: OperatorSpec, x: GridFunction) -> GridFunction:
    """Trapezoidal quadrature of s -> G(t_i, s) A(x(s)) at every node t_i."""
    return x.with_values(_kernel_quadrature(k, x.nodes, _pointwise(A, x.values)))


@dataclass
class IntegralTrace:
    grids: List[GridFunction]
    r: List[float]            # sup node distance between consecutive iterates
    r_tilde: List[float]
    residual: List[float]     # sup |T(x_n) - x_n| per iterate
    stop_reason: str

    @property
    def steps(self) -> int:
        return len(self.grids) - 1

    def step_function(self, n: int) -> GridFunction:
        """Nodewise |x_{n+1} - x_n| as a grid function (r_n pointwise)."""
        a, b = self.grids[n], self.grids[n + 1]
        return a.with_values(np.abs(b.values - a.values))


def run_integral_iteration(k: KernelSpec, A: OperatorSpec, x0: GridFunction,
                           stop: Optional[StopRule] = None) -> IntegralTrace:
    """Picard iteration x <- T(x); only the contraction scheme is wired here.

    Besides the usual divergence guard there is a non-contraction guard: ten
    consecutive non-decreasing step norms above tolerance stop the run, which
    is how a kernel without the Volterra property announces itself.
    """
    stop = stop or StopRule(max_n=60)
    if abs(x0.nodes[-1] - k.T_end) > 1e-12 * (1.0 + k.T_end):
        raise GreensError("grid ends at %r but kernel domain ends at %r"
                          % (float(x0.nodes[-1]), k.T_end))
    trace = IntegralTrace(grids=[x0], r=[], r_tilde=[0.0], residual=[], stop_reason="max_n")
    guard_radius = 1e6 * (1.0 + x0.sup_norm())
    floor = max(stop.r_tol, stop.residual_tol, 1e-13)
    flat = 0
    x = x0
    for _ in range(stop.max_n):
        y = apply_integral_operator(k, A, x)
        rn = y.sup_distance(x)
        trace.grids.append(y)
        trace.r.append(rn)
        trace.r_tilde.append(y.sup_distance(x0))
        trace.residual.append(rn)  # residual of x_n: T(x_n) - x_n = y - x
        if y.sup_norm() > guard_radius:
            trace.stop_reason = "diverged"
            x = y
            break
        flat = flat + 1 if (trace.r[-2:-1] and rn >= trace.r[-2] * (1.0 - 1e-12)
                            and rn > floor) else 0
        if flat >= 10:
            trace.stop_reason = "non_contraction"
            x = y
            break
        if stop.r_tol > 0.0 and rn <= stop.r_tol:
            trace.stop_reason = "r_tol"
            x = y
            break
        if stop.residual_tol > 0.0 and rn <= stop.residual_tol:
            trace.stop_reason = "residual_tol"
            x = y
            break
        x = y
    else:
        x = trace.grids[-1]
    final = apply_integral_operator(k, A, x)
    trace.residual.append(final.sup_distance(x))
    return trace


@dataclass
class BoundReport:
    n: int
    scheme: SchemeKind
    margins: np.ndarray
    min_margin: float
    slack: float
    ok: bool


def bound_propagate(k: KernelSpec, constants: ProblemConstants, r_prev: GridFunction,
                    r_cur: GridFunction, scheme: SchemeKind, n: int,
                    slack_coeff: float = 1.0) -> BoundReport:
    """Nodewise check of r_n(t) <= int |G(t,s)| (step-inequality integrand) ds.

    The integrand follows the scheme's step inequality (Lipschitz form for
    contraction/custom, curvature form for newton); margins below
    -slack_coeff * h^2 fail, anything inside the quadrature slack passes.
    """
    if not np.array_equal(r_prev.nodes, r_cur.nodes):
        raise GreensError("grid functions live on different node sets")
    eps = constants.eps_seq
    if scheme in (SchemeKind.CONTRACTION, SchemeKind.CUSTOM):
        integrand = (constants.m_at(n) * r_cur.values
                     + (constants.M + constants.m_at(n - 1)) * r_prev.values
                     + eps(n - 1) + eps(n))
    elif scheme is SchemeKind.NEWTON:
        integrand = (constants.m_at(n) * r_cur.values
                     + 0.5 * (constants.K + constants.k_at(n - 1)) * r_prev.values ** 2
                     + constants.sigma_seq(n - 1) * r_prev.values
                     + eps(n - 1) + eps(n))
    else:
        raise GreensError("bound propagation is not wired for scheme %r" % scheme)
    rhs = _kernel_quadrature(k, r_cur.nodes, integrand, absolute=True)
    margins = rhs - r_cur.values
    h = float(np.max(np.diff(r_cur.nodes)))
    slack = slack_coeff * h * h
    mn = float(np.min(margins))
    return BoundReport(n=n, scheme=scheme, margins=margins, min_margin=mn,
                       slack=slack, ok=mn >= -slack)
