"""Outer iteration schemes: x_n solves x = B_{n-1}(x) for varying B.

Index convention used throughout: the step producing x_n (n >= 1) uses the
operator B_{n-1} built at x_{n-1}; its value-inexactness budget is eps(n-1),
its derivative budgets sigma(n-1) (at x_{n-1}) and gamma(n-1) (at x_0).
r_n = ||x_{n+1} - x_n||, r_tilde_n = ||x_n - x_0||.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Tuple

import numpy as np

from .core import (BallDomain, NormKind, OperatorSpec, Vector, matrix_of,
                   norm_of)
from .sequences import ScalarSequence


class SchemeError(ValueError):
    pass


class SingularLinearSystemError(SchemeError):
    """The inner linear system I - D is singular or numerically hopeless."""

    def __init__(self, msg: str, x: Optional[Vector] = None):
        super().__init__(msg)
        self.x = x


class InnerDivergenceError(SchemeError):
    """The inner fixed-point solve for a custom B failed to settle."""

    def __init__(self, msg: str, last_defect: float = math.nan):
        super().__init__(msg)
        self.last_defect = last_defect


class StepFailure(SchemeError):
    """Wraps any step error with the failing outer step index."""

    def __init__(self, step: int, cause: Exception):
        super().__init__("step %d failed: %s" % (step, cause))
        self.step = step
        self.cause = cause


class SchemeKind(enum.Enum):
    CONTRACTION = "contraction"
    MODIFIED_NEWTON = "modified_newton"
    NEWTON = "newton"
    CUSTOM = "custom"

    @staticmethod
    def parse(name: str) -> "SchemeKind":
        for kind in SchemeKind:
            if kind.value == name:
                return kind
        raise SchemeError("unknown scheme %r" % name)


class InjectionMode(enum.Enum):
    NONE = "none"
    DETERMINISTIC = "additive-deterministic"
    RANDOM = "additive-seeded-random"

    @staticmethod
    def parse(name: str) -> "InjectionMode":
        for kind in InjectionMode:
            if kind.value == name:
                return kind
        raise SchemeError("unknown perturbation mode %r" % name)


@dataclass(frozen=True)
class PerturbationPlan:
    """Declared inexactness budgets plus how to exercise them.

    eps0 is a declared bound for ||A(x0) - x0|| (0 means "use the measured
    residual").  eps, sigma, gamma are per-step budgets; injection draws
    perturbations of exactly the budgeted size (deterministic mode points the
    additive noise against the current step direction, the worst case for a
    contraction; random mode uses the seeded generator).
    """

    eps0: float = 0.0
    eps: ScalarSequence = field(default_factory=ScalarSequence.zero)
    sigma: ScalarSequence = field(default_factory=ScalarSequence.zero)
    gamma: ScalarSequence = field(default_factory=ScalarSequence.zero)
    mode: InjectionMode = InjectionMode.NONE
    seed: int = 0

    @staticmethod
    def exact() -> "PerturbationPlan":
        return PerturbationPlan()


@dataclass(frozen=True)
class StopRule:
    max_n: int = 50
    r_tol: float = 0.0
    residual_tol: float = 0.0

    def __post_init__(self):
        if self.max_n < 1:
            raise SchemeError("max_n must be >= 1")
        if self.r_tol < 0 or self.residual_tol < 0:
            raise SchemeError("tolerances must be >= 0")


@dataclass
class IterationTrace:
    """Everything a run produced, index-aligned as documented in the module."""

    iterates: List[Vector]
    r: List[float]                 # r[n] = ||x_{n+1} - x_n||, n = 0..steps-1
    r_tilde: List[float]           # r_tilde[n] = ||x_n - x_0||, n = 0..steps
    residual: List[float]          # ||A(x_n) - x_n||, n = 0..steps
    inner_defect: List[float]      # defect of the step producing x_n, n = 1..steps
    injected: List[float]          # additive noise norm of that step, n = 1..steps
    stop_reason: str
    norm: NormKind
    scheme: SchemeKind
    seed: int

    @property
    def steps(self) -> int:
        return len(self.iterates) - 1

    def partial_sums(self) -> List[float]:
        """R_n = sum_{k<=n} r_k."""
        out, acc = [], 0.0
        for v in self.r:
            acc += v
            out.append(acc)
        return out


def _unit(vec: np.ndarray, kind: NormKind) -> Optional[np.ndarray]:
    n = norm_of(Vector(vec), kind) if np.any(vec) else 0.0
    if n == 0.0:
        return None
    return vec / n


def _additive_noise(dim: int, amount: float, direction_hint: np.ndarray,
                    mode: InjectionMode, kind: NormKind,
                    rng: np.random.Generator) -> np.ndarray:
    if amount <= 0.0 or mode is InjectionMode.NONE:
        return np.zeros(dim)
    if mode is InjectionMode.DETERMINISTIC:
        # oppose the step direction: pushes the iterate back toward where it
        # came from, the worst case for a contraction (stagnation at eps/(1-q))
        u = _unit(direction_hint, kind)
        if u is None:
            u = np.zeros(dim)
            u[0] = 1.0
        return -amount * u
    g = rng.standard_normal(dim)
    u = _unit(g, kind)
    if u is None:  # absurdly unlikely; keep the draw count fixed anyway
        u = np.zeros(dim)
        u[0] = 1.0
    return amount * u


def _rank_one(dim: int, amount: float, mode: InjectionMode,
              rng: np.random.Generator) -> np.ndarray:
    """Matrix c * e_i e_j^T: induced norm is exactly c in sup/euclidean/one."""
    E = np.zeros((dim, dim))
    if amount <= 0.0 or mode is InjectionMode.NONE:
        return E
    if mode is InjectionMode.DETERMINISTIC:
        i = j = 0
        sign = 1.0
    else:
        i = int(rng.integers(dim))
        j = int(rng.integers(dim))
        sign = 1.0 if rng.integers(2) else -1.0
    E[i, j] = sign * amount
    return E


def _derivative_matrix(A: OperatorSpec, x: Vector) -> np.ndarray:
    return matrix_of(lambda h: A.derivative_at(x, h), A.dim)


def _solve_affine(D: np.ndarray, rhs: np.ndarray, kind: NormKind,
                  inner_tol: float) -> Tuple[np.ndarray, float]:
    """Solve (I - D) x = rhs with a defect check and one refinement pass."""
    S = np.eye(D.shape[0]) - D
    try:
        x = np.linalg.solve(S, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularLinearSystemError("I - D is singular: %s" % exc)
    defect = norm_of(Vector(rhs - S @ x), kind)
    if defect > inner_tol:
        try:
            x = x + np.linalg.solve(S, rhs - S @ x)
        except np.linalg.LinAlgError as exc:
            raise SingularLinearSystemError("I - D is singular: %s" % exc)
        defect = norm_of(Vector(rhs - S @ x), kind)
        if defect > inner_tol and not np.all(np.isfinite(x)):
            raise SingularLinearSystemError("inner solve produced non-finite iterate")
        if defect > inner_tol:
            raise SingularLinearSystemError(
                "inner defect %.3e above inner_tol %.3e after refinement" % (defect, inner_tol))
    return x, defect


def step_contraction(A: OperatorSpec, x_prev: Vector, n: int, plan: PerturbationPlan,
                     norm: NormKind, rng: np.random.Generator) -> Tuple[Vector, float, float]:
    """x_n = A(x_{n-1}) + noise; B_{n-1} is the constant map, defect is 0."""
    base = A.apply(x_prev)
    e = _additive_noise(A.dim, plan.eps(n - 1), base.coords - x_prev.coords,
                        plan.mode, norm, rng)
    return Vector(base.coords + e), 0.0, norm_of(Vector(e), norm)


def step_newton(A: OperatorSpec, x_prev: Vector, n: int, plan: PerturbationPlan,
                norm: NormKind, inner_tol: float,
                rng: np.random.Generator) -> Tuple[Vector, float, float]:
    """Solve x = D x - D x_{n-1} + A(x_{n-1}) + noise with D ~ A'(x_{n-1})."""
    D = _derivative_matrix(A, x_prev)
    D = D + _rank_one(A.dim, plan.sigma(n - 1), plan.mode, rng)
    fx = A.apply(x_prev)
    e = _additive_noise(A.dim, plan.eps(n - 1), fx.coords - x_prev.coords,
                        plan.mode, norm, rng)
    rhs = fx.coords + e - D @ x_prev.coords
    x, defect = _solve_affine(D, rhs, norm, inner_tol)
    return Vector(x), defect, norm_of(Vector(e), norm)


def step_modified_newton(A: OperatorSpec, x_prev: Vector, n: int, D0: np.ndarray,
                         plan: PerturbationPlan, norm: NormKind, inner_tol: float,
                         rng: np.random.Generator) -> Tuple[Vector, float, float]:
    """Same affine solve with the derivative frozen at x_0."""
    D = D0 + _rank_one(D0.shape[0], plan.gamma(n - 1), plan.mode, rng)
    fx = A.apply(x_prev)
    e = _additive_noise(A.dim, plan.eps(n - 1), fx.coords - x_prev.coords,
                        plan.mode, norm, rng)
    rhs = fx.coords + e - D @ x_prev.coords
    x, defect = _solve_affine(D, rhs, norm, inner_tol)
    return Vector(x), defect, norm_of(Vector(e), norm)


def step_custom(B: OperatorSpec, x_prev: Vector, noise: np.ndarray, norm: NormKind,
                inner_tol: float, max_inner: int = 5000) -> Tuple[Vector, float]:
    """Solve x = B(x) + noise by inner fixed-point iteration from x_prev."""
    guard = 1e6 * (1.0 + norm_of(x_prev, norm))
    y = x_prev
    defect = math.inf
    for _ in range(max_inner):
        by = Vector(B.apply(y).coords + noise)
        defect = norm_of(by - y, norm)
        y = by
        if defect <= inner_tol:
            return y, defect
        if norm_of(y, norm) > guard:
            raise InnerDivergenceError(
                "inner iterate left the guard ball (defect %.3e)" % defect, defect)
    raise InnerDivergenceError(
        "inner solve did not reach %.1e in %d iterations (defect %.3e)"
        % (inner_tol, max_inner, defect), defect)


def run_outer(A: OperatorSpec, scheme: SchemeKind, x0: Vector,
              plan: Optional[PerturbationPlan] = None,
              stop: Optional[StopRule] = None,
              norm: NormKind = NormKind.SUP,
              inner_tol: float = 1e-12,
              custom_factory: Optional[Callable[[int, Vector, Vector], OperatorSpec]] = None,
              ) -> IterationTrace:
    """Drive the outer iteration and record the full trace.

    custom_factory(n, x_prev, x0) must return the operator B_{n-1} for the
    step producing x_n; required iff scheme is CUSTOM.  Raises StepFailure
    (with .step) if a step errors out; divergence is not an exception but a
    stop_reason, so callers can still inspect the partial trace.
    """
    plan = plan or PerturbationPlan.exact()
    stop = stop or StopRule()
    if scheme is SchemeKind.CUSTOM and custom_factory is None:
        raise SchemeError("custom scheme needs a custom_factory")
    rng = np.random.default_rng(plan.seed)

    def resid(x: Vector) -> float:
        return norm_of(A.apply(x) - x, norm)

    trace = IterationTrace(iterates=[x0], r=[], r_tilde=[0.0], residual=[resid(x0)],
                           inner_defect=[], injected=[], stop_reason="max_n",
                           norm=norm, scheme=scheme, seed=plan.seed)
    guard_radius = 1e6 * (1.0 + norm_of(x0, norm))

    D0 = None
    if scheme is SchemeKind.MODIFIED_NEWTON:
        try:
            D0 = _derivative_matrix(A, x0)
        except Exception as exc:
            raise StepFailure(1, exc) from exc

    if stop.residual_tol > 0.0 and trace.residual[0] <= stop.residual_tol:
        trace.stop_reason = "residual_tol"
        return trace

    x_prev = x0
    for n in range(1, stop.max_n + 1):
        try:
            if scheme is SchemeKind.CONTRACTION:
                x, defect, injected = step_contraction(A, x_prev, n, plan, norm, rng)
            elif scheme is SchemeKind.NEWTON:
                x, defect, injected = step_newton(A, x_prev, n, plan, norm, inner_tol, rng)
            elif scheme is SchemeKind.MODIFIED_NEWTON:
                x, defect, injected = step_modified_newton(A, x_prev, n, D0, plan,
                                                           norm, inner_tol, rng)
            else:
                B = custom_factory(n, x_prev, x0)
                fx = A.apply(x_prev)
                noise = _additive_noise(A.dim, plan.eps(n - 1),
                                        fx.coords - x_prev.coords, plan.mode, norm, rng)
                x, defect = step_custom(B, x_prev, noise, norm, inner_tol)
                injected = norm_of(Vector(noise), norm)
        except StepFailure:
            raise
        except Exception as exc:
            raise StepFailure(n, exc) from exc

        budget = plan.eps(n - 1)
        assert injected <= budget * (1.0 + 1e-12) + 1e-300, \
            "injected noise %r exceeds declared budget %r at step %d" % (injected, budget, n)

        trace.iterates.append(x)
        trace.r.append(norm_of(x - x_prev, norm))
        trace.r_tilde.append(norm_of(x - x0, norm))
        trace.residual.append(resid(x))
        trace.inner_defect.append(defect)
        trace.injected.append(injected)

        if norm_of(x, norm) > guard_radius:
            trace.stop_reason = "diverged"
            return trace
        if stop.r_tol > 0.0 and trace.r[-1] <= stop.r_tol:
            trace.stop_reason = "r_tol"
            return trace
        if stop.residual_tol > 0.0 and trace.residual[-1] <= stop.residual_tol:
            trace.stop_reason = "residual_tol"
            return trace
        x_prev = x

    trace.stop_reason = "max_n"
    return trace
