"""Vectors, norms, ball domains, operators and directional derivatives."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np


class CoreError(ValueError):
    pass


class OperatorEvaluationError(CoreError):
    """Operator evaluation failed or returned a non-finite / wrong-shape value."""


class NormKind(enum.Enum):
    SUP = "sup"
    EUCLIDEAN = "euclidean"
    ONE = "one"

    @staticmethod
    def parse(name: str) -> "NormKind":
        for kind in NormKind:
            if kind.value == name:
                return kind
        raise CoreError("unknown norm %r (expected sup|euclidean|one)" % name)


@dataclass(frozen=True)
class Vector:
    """Immutable finite point in R^d, d >= 1."""

    coords: np.ndarray

    def __init__(self, coords: Union[Sequence[float], np.ndarray]):
        arr = np.asarray(coords, dtype=float)
        if arr.ndim != 1 or arr.size < 1:
            raise CoreError("vector must be one-dimensional with d >= 1, got shape %r" % (arr.shape,))
        if not np.all(np.isfinite(arr)):
            raise CoreError("vector entries must be finite, got %r" % (arr,))
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "coords", arr)

    @property
    def dim(self) -> int:
        return self.coords.size

    def __getitem__(self, i: int) -> float:
        return float(self.coords[i])

    def __add__(self, other: "Vector") -> "Vector":
        return Vector(self.coords + other.coords)

    def __sub__(self, other: "Vector") -> "Vector":
        return Vector(self.coords - other.coords)

    def scale(self, a: float) -> "Vector":
        return Vector(a * self.coords)

    def __eq__(self, other) -> bool:
        return isinstance(other, Vector) and np.array_equal(self.coords, other.coords)

    def __repr__(self) -> str:
        return "Vector(%s)" % np.array2string(self.coords, separator=", ")


def norm_of(v: Vector, kind: NormKind) -> float:
    a = v.coords
    if kind is NormKind.SUP:
        return float(np.max(np.abs(a)))
    if kind is NormKind.EUCLIDEAN:
        return float(np.linalg.norm(a))
    if kind is NormKind.ONE:
        return float(np.sum(np.abs(a)))
    raise CoreError("unknown norm kind %r" % kind)


def _vec_norm(a: np.ndarray, kind: NormKind) -> float:
    if kind is NormKind.SUP:
        return float(np.max(np.abs(a)))
    if kind is NormKind.EUCLIDEAN:
        return float(np.linalg.norm(a))
    return float(np.sum(np.abs(a)))


@dataclass(frozen=True)
class BallDomain:
    """Closed ball around center with given radius in a chosen norm."""

    center: Vector
    radius: float
    norm: NormKind

    def __post_init__(self):
        if self.radius < 0 or not math.isfinite(self.radius):
            raise CoreError("ball radius must be finite and >= 0, got %r" % self.radius)

    def contains(self, x: Vector, slack: float = 0.0) -> bool:
        return norm_of(x - self.center, self.norm) <= self.radius + slack


@dataclass(frozen=True)
class OperatorSpec:
    """An operator A: R^d -> R^d with an optional analytic derivative.

    evaluator maps Vector -> Vector; derivative, when present, maps
    (x, h) -> directional derivative A'(x)h.  When absent, derivative_at
    falls back to a central finite difference.
    """

    dim: int
    evaluator: Callable[[Vector], Vector] = field(compare=False)
    derivative: Optional[Callable[[Vector, Vector], Vector]] = field(default=None, compare=False)
    name: str = ""

    def __post_init__(self):
        if self.dim < 1:
            raise CoreError("operator dim must be >= 1")

    def apply(self, x: Vector) -> Vector:
        if x.dim != self.dim:
            raise OperatorEvaluationError(
                "operator %s expects dim %d, got %d" % (self.name or "?", self.dim, x.dim))
        try:
            out = self.evaluator(x)
        except (ArithmeticError, CoreError) as exc:
            raise OperatorEvaluationError(
                "operator %s failed at %r: %s" % (self.name or "?", x, exc)) from exc
        if not isinstance(out, Vector):
            out = Vector(out)
        if out.dim != self.dim:
            raise OperatorEvaluationError(
                "operator %s returned dim %d, expected %d" % (self.name or "?", out.dim, self.dim))
        return out

    def derivative_at(self, x: Vector, h: Vector, step: Optional[float] = None) -> Vector:
        if self.derivative is not None:
            out = self.derivative(x, h)
            if not isinstance(out, Vector):
                out = Vector(out)
            return out
        return gateaux_fd(self, x, h, step=step)


def gateaux_fd(op: OperatorSpec, x: Vector, h: Vector, step: Optional[float] = None) -> Vector:
    """Central-difference directional derivative (A(x+t h) - A(x-t h)) / 2t.

    Exact for affine operators up to rounding; O(step^2) error otherwise.
    """
    if step is None:
        step = 1e-6 * (1.0 + float(np.max(np.abs(x.coords))))
    if step <= 0:
        raise CoreError("finite-difference step must be positive")
    plus = op.apply(Vector(x.coords + step * h.coords))
    minus = op.apply(Vector(x.coords - step * h.coords))
    return Vector((plus.coords - minus.coords) / (2.0 * step))


def matrix_of(linmap: Callable[[Vector], Vector], dim: int) -> np.ndarray:
    """Materialize a linear map column by column from coordinate directions."""
    cols = []
    for j in range(dim):
        e = np.zeros(dim)
        e[j] = 1.0
        out = linmap(Vector(e))
        if not isinstance(out, Vector):
            out = Vector(out)
        cols.append(out.coords)
    return np.column_stack(cols)


def matrix_norm(mat: np.ndarray, kind: NormKind) -> float:
    """Exact induced norm of an explicit matrix."""
    if kind is NormKind.SUP:
        return float(np.max(np.sum(np.abs(mat), axis=1)))
    if kind is NormKind.ONE:
        return float(np.max(np.sum(np.abs(mat), axis=0)))
    return float(np.linalg.norm(mat, 2))


def operator_norm_estimate(linmap: Callable[[Vector], Vector], dim: int,
                           kind: NormKind, samples: int = 0) -> float:
    """Induced-norm estimate of a linear map, never exceeding the true norm
    by more than rounding.

    The map is materialized from the coordinate directions (so sup/one norms
    are exact via row/column sums, euclidean via the spectral norm); extra
    random unit directions, when requested, can only confirm the bound from
    below and are kept as a cross-check against a non-linear `linmap`.
    """
    if samples and samples < dim:
        raise CoreError("samples must be >= dim when given (got %d < %d)" % (samples, dim))
    mat = matrix_of(linmap, dim)
    best = matrix_norm(mat, kind)
    if samples:
        rng = np.random.default_rng(0)
        for _ in range(samples):
            g = rng.standard_normal(dim)
            denom = _vec_norm(g, kind)
            if denom == 0.0:
                continue
            u = g / denom
            val = _vec_norm(np.asarray(linmap(Vector(u)).coords, dtype=float), kind)
            if val > best:
                best = val
    return best


def identity_operator(dim: int) -> OperatorSpec:
    return OperatorSpec(dim=dim, evaluator=lambda x: x,
                        derivative=lambda x, h: h, name="identity")
