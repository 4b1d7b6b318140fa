"""Nonnegative scalar sequences n -> value with closed-form tail sums.

Perturbation schedules and majorant coefficients are all sequences of this
shape.  Closed forms (constant, geometric, power) know their own tail sums
and summability; tables and raw callables fall back to scanning, and their
infinite tails are reported as unknown rather than guessed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence


class SequenceError(ValueError):
    pass


@dataclass(frozen=True)
class ScalarSequence:
    """A map n -> float for n >= 0, with optional tail analytics.

    kind is one of: zero, constant, geometric, power, table, func,
    affine (scale*base + offset), pairsum (scale*(base(n) + base(n+1))).
    """

    kind: str
    c: float = 0.0
    ratio: float = 0.0
    p: float = 0.0
    entries: tuple = ()
    func: Optional[Callable[[int], float]] = field(default=None, compare=False)
    base: Optional["ScalarSequence"] = None
    scale: float = 1.0
    offset: float = 0.0

    # -- constructors -------------------------------------------------

    @staticmethod
    def zero() -> "ScalarSequence":
        return ScalarSequence("zero")

    @staticmethod
    def constant(c: float) -> "ScalarSequence":
        if c < 0:
            raise SequenceError("constant sequence must be nonnegative, got %r" % c)
        return ScalarSequence("constant", c=float(c))

    @staticmethod
    def geometric(c: float, ratio: float) -> "ScalarSequence":
        """c * ratio**n."""
        if c < 0 or ratio < 0:
            raise SequenceError("geometric sequence needs c >= 0 and ratio >= 0")
        return ScalarSequence("geometric", c=float(c), ratio=float(ratio))

    @staticmethod
    def power(c: float, p: float) -> "ScalarSequence":
        """c * n**(-p) for n >= 1; the value at n = 0 is c."""
        if c < 0:
            raise SequenceError("power sequence must be nonnegative")
        return ScalarSequence("power", c=float(c), p=float(p))

    @staticmethod
    def from_table(values: Sequence[float]) -> "ScalarSequence":
        vals = tuple(float(v) for v in values)
        if not vals:
            raise SequenceError("table sequence needs at least one entry")
        if any(v < 0 for v in vals):
            raise SequenceError("table entries must be nonnegative")
        return ScalarSequence("table", entries=vals)

    @staticmethod
    def from_func(f: Callable[[int], float]) -> "ScalarSequence":
        return ScalarSequence("func", func=f)

    def affine(self, scale: float, offset: float) -> "ScalarSequence":
        """scale * self(n) + offset, both nonnegative."""
        if scale < 0 or offset < 0:
            raise SequenceError("affine combinator needs nonnegative scale/offset")
        return ScalarSequence("affine", base=self, scale=float(scale), offset=float(offset))

    @staticmethod
    def pair_sum(base: "ScalarSequence", scale: float) -> "ScalarSequence":
        """scale * (base(n) + base(n+1))."""
        if scale < 0:
            raise SequenceError("pair_sum scale must be nonnegative")
        return ScalarSequence("pairsum", base=base, scale=float(scale))

    # -- evaluation ---------------------------------------------------

    def __call__(self, n: int) -> float:
        if n < 0:
            raise SequenceError("sequence index must be >= 0, got %d" % n)
        k = self.kind
        if k == "zero":
            return 0.0
        if k == "constant":
            return self.c
        if k == "geometric":
            return self.c * self.ratio ** n
        if k == "power":
            return self.c if n == 0 else self.c * float(n) ** (-self.p)
        if k == "table":
            # constant extension beyond the table end
            return self.entries[min(n, len(self.entries) - 1)]
        if k == "func":
            v = float(self.func(n))
            if not math.isfinite(v) or v < 0:
                raise SequenceError("sequence callable returned %r at n=%d" % (v, n))
            return v
        if k == "affine":
            return self.scale * self.base(n) + self.offset
        if k == "pairsum":
            return self.scale * (self.base(n) + self.base(n + 1))
        raise SequenceError("unknown sequence kind %r" % k)

    def values(self, n0: int, n1: int) -> list:
        return [self(n) for n in range(n0, n1 + 1)]

    def sup_over(self, n0: int, n1: int) -> float:
        if n1 < n0:
            raise SequenceError("empty index range")
        return max(self(n) for n in range(n0, n1 + 1))

    def nonincreasing_on(self, n0: int, n1: int) -> bool:
        prev = self(n0)
        for n in range(n0 + 1, n1 + 1):
            cur = self(n)
            if cur > prev:
                return False
            prev = cur
        return True

    # -- tail analytics -----------------------------------------------

    def sup_tail(self, n0: int) -> float:
        """Upper bound for sup_{k >= n0} of the sequence; math.inf if unbounded.

        Raises SequenceError for raw callables (no closed form to trust).
        """
        k = self.kind
        if k == "zero":
            return 0.0
        if k == "constant":
            return self.c
        if k == "geometric":
            if self.c == 0.0:
                return 0.0
            return self.c * self.ratio ** n0 if self.ratio <= 1.0 else math.inf
        if k == "power":
            if self.c == 0.0:
                return 0.0
            if self.p < 0.0:
                return math.inf
            return self.c if n0 == 0 else self.c * float(n0) ** (-self.p)
        if k == "table":
            return max(self.entries[min(n0, len(self.entries) - 1):])
        if k == "affine":
            return self.scale * self.base.sup_tail(n0) + self.offset
        if k == "pairsum":
            return self.scale * (self.base.sup_tail(n0) + self.base.sup_tail(n0 + 1))
        raise SequenceError("tail sup unavailable for sequence kind %r" % k)

    def tail_sum(self, n0: int) -> float:
        """Upper bound for sum_{k >= n0} of the sequence; math.inf if divergent.

        Raises SequenceError for raw callables (no closed form to trust).
        """
        k = self.kind
        if k == "zero":
            return 0.0
        if k == "constant":
            return 0.0 if self.c == 0.0 else math.inf
        if k == "geometric":
            if self.c == 0.0:
                return 0.0
            if self.ratio >= 1.0:
                return math.inf
            return self.c * self.ratio ** n0 / (1.0 - self.ratio)
        if k == "power":
            if self.c == 0.0:
                return 0.0
            if self.p <= 1.0:
                return math.inf
            # integral test: sum_{k>=m} k^-p <= m^-p + m^(1-p)/(p-1) for m >= 1
            m = max(n0, 1)
            bound = self.c * (float(m) ** (-self.p) + float(m) ** (1.0 - self.p) / (self.p - 1.0))
            if n0 == 0:
                bound += self.c
            return bound
        if k == "table":
            tail_beyond = 0.0 if self.entries[-1] == 0.0 else math.inf
            head = sum(self.entries[n] for n in range(n0, len(self.entries)))
            return head + tail_beyond
        if k == "affine":
            if self.offset > 0.0:
                return math.inf
            return self.scale * self.base.tail_sum(n0)
        if k == "pairsum":
            return self.scale * (self.base.tail_sum(n0) + self.base.tail_sum(n0 + 1))
        raise SequenceError("tail sum unavailable for sequence kind %r" % k)

    def is_summable(self) -> Optional[bool]:
        """True/False when decidable from the closed form, None otherwise."""
        k = self.kind
        if k in ("zero",):
            return True
        if k == "constant":
            return self.c == 0.0
        if k == "geometric":
            return self.c == 0.0 or self.ratio < 1.0
        if k == "power":
            return self.c == 0.0 or self.p > 1.0
        if k == "table":
            return self.entries[-1] == 0.0
        if k == "affine":
            if self.offset > 0.0:
                return False
            return self.base.is_summable()
        if k == "pairsum":
            return self.base.is_summable()
        return None


def sequence_from_config(cfg) -> ScalarSequence:
    """Build a sequence from problem-file config.

    Accepts a bare number (constant) or a mapping with a 'kind' key:
    {kind: constant, c}, {kind: geometric, c, ratio}, {kind: power, c, p}.
    """
    if cfg is None:
        return ScalarSequence.zero()
    if isinstance(cfg, (int, float)):
        return ScalarSequence.constant(float(cfg))
    if not isinstance(cfg, dict):
        raise SequenceError("sequence config must be a number or mapping, got %r" % (cfg,))
    kind = cfg.get("kind")
    if kind == "constant":
        return ScalarSequence.constant(_num(cfg, "c"))
    if kind == "geometric":
        return ScalarSequence.geometric(_num(cfg, "c"), _num(cfg, "ratio"))
    if kind == "power":
        return ScalarSequence.power(_num(cfg, "c"), _num(cfg, "p"))
    if kind == "zero":
        return ScalarSequence.zero()
    raise SequenceError("unknown sequence kind %r (expected constant|geometric|power|zero)" % kind)


def _num(cfg: dict, key: str) -> float:
    if key not in cfg:
        raise SequenceError("sequence config missing %r: %r" % (key, cfg))
    v = cfg[key]
    if not isinstance(v, (int, float)):
        raise SequenceError("sequence field %r must be a number, got %r" % (key, v))
    return float(v)
