"""Tiny arithmetic expression language for operators and kernels.

Grammar (binding tightest to loosest): ^ (right associative), unary minus,
* /, + -.  Atoms are decimal literals, variables (x1..xd, t, s), calls of
sin, cos, exp, log, sqrt, abs, and parenthesized expressions.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, List, Optional, Tuple, Union


class ExprError(ValueError):
    def __init__(self, msg: str, pos: int = -1):
        super().__init__(msg if pos < 0 else "%s (at position %d)" % (msg, pos))
        self.pos = pos


class ExprSyntaxError(ExprError):
    pass


class UnknownVariableError(ExprError):
    def __init__(self, name: str, pos: int):
        super().__init__("unknown variable %r" % name, pos)
        self.name = name


class EvalDomainError(ExprError):
    pass


FUNCTIONS = ("sin", "cos", "exp", "log", "sqrt", "abs")


@dataclass(frozen=True)
class Lit:
    value: float
    pos: int = field(default=-1, compare=False)


@dataclass(frozen=True)
class Var:
    name: str
    pos: int = field(default=-1, compare=False)


@dataclass(frozen=True)
class Neg:
    operand: "Expr"
    pos: int = field(default=-1, compare=False)


@dataclass(frozen=True)
class Bin:
    op: str  # + - * / ^
    left: "Expr"
    right: "Expr"
    pos: int = field(default=-1, compare=False)


@dataclass(frozen=True)
class Call:
    fn: str
    arg: "Expr"
    pos: int = field(default=-1, compare=False)


Expr = Union[Lit, Var, Neg, Bin, Call]


class _Tokenizer:
    def __init__(self, text: str):
        self.text = text
        self.i = 0
        self.tokens: List[Tuple[str, str, int]] = []  # (kind, value, pos)
        self._scan()
        self.k = 0

    def _scan(self):
        text, n = self.text, len(self.text)
        i = 0
        while i < n:
            ch = text[i]
            if ch.isspace():
                i += 1
                continue
            if ch.isdigit() or (ch == "." and i + 1 < n and text[i + 1].isdigit()):
                j = i
                while j < n and (text[j].isdigit() or text[j] == "."):
                    j += 1
                if j < n and text[j] in "eE":
                    k = j + 1
                    if k < n and text[k] in "+-":
                        k += 1
                    if k < n and text[k].isdigit():
                        j = k
                        while j < n and text[j].isdigit():
                            j += 1
                lexeme = text[i:j]
                try:
                    float(lexeme)
                except ValueError:
                    raise ExprSyntaxError("bad number literal %r" % lexeme, i)
                self.tokens.append(("num", lexeme, i))
                i = j
                continue
            if ch.isalpha() or ch == "_":
                j = i
                while j < n and (text[j].isalnum() or text[j] == "_"):
                    j += 1
                self.tokens.append(("name", text[i:j], i))
                i = j
                continue
            if ch in "+-*/^()":
                self.tokens.append((ch, ch, i))
                i += 1
                continue
            raise ExprSyntaxError("unexpected character %r" % ch, i)
        self.tokens.append(("end", "", n))

    def peek(self) -> Tuple[str, str, int]:
        return self.tokens[self.k]

    def next(self) -> Tuple[str, str, int]:
        tok = self.tokens[self.k]
        self.k += 1
        return tok


class _Parser:
    def __init__(self, text: str, allowed_vars: FrozenSet[str]):
        self.toks = _Tokenizer(text)
        self.vars = allowed_vars

    def parse(self) -> Expr:
        e = self.expr()
        kind, _, pos = self.toks.peek()
        if kind != "end":
            raise ExprSyntaxError("trailing input", pos)
        return e

    def expr(self) -> Expr:
        e = self.term()
        while True:
            kind, _, pos = self.toks.peek()
            if kind in ("+", "-"):
                self.toks.next()
                e = Bin(kind, e, self.term(), pos)
            else:
                return e

    def term(self) -> Expr:
        e = self.unary()
        while True:
            kind, _, pos = self.toks.peek()
            if kind in ("*", "/"):
                self.toks.next()
                e = Bin(kind, e, self.unary(), pos)
            else:
                return e

    def unary(self) -> Expr:
        kind, _, pos = self.toks.peek()
        if kind == "-":
            self.toks.next()
            return Neg(self.unary(), pos)
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        kind, _, pos = self.toks.peek()
        if kind == "^":
            self.toks.next()
            # right associative; exponent may carry a unary minus (2^-3)
            return Bin("^", base, self.unary(), pos)
        return base

    def atom(self) -> Expr:
        kind, value, pos = self.toks.next()
        if kind == "num":
            return Lit(float(value), pos)
        if kind == "(":
            e = self.expr()
            k2, _, p2 = self.toks.next()
            if k2 != ")":
                raise ExprSyntaxError("expected ')'", p2)
            return e
        if kind == "name":
            if value in FUNCTIONS:
                k2, _, p2 = self.toks.next()
                if k2 != "(":
                    raise ExprSyntaxError("function %r needs parentheses" % value, p2)
                arg = self.expr()
                k3, _, p3 = self.toks.next()
                if k3 != ")":
                    raise ExprSyntaxError("expected ')' after argument of %r" % value, p3)
                return Call(value, arg, pos)
            if value in self.vars:
                return Var(value, pos)
            raise UnknownVariableError(value, pos)
        raise ExprSyntaxError("expected a value", pos)


def parse_expr(text: str, allowed_vars) -> Expr:
    """Parse text into an expression tree over the given variable names."""
    if not isinstance(text, str) or not text.strip():
        raise ExprSyntaxError("empty expression", 0)
    return _Parser(text, frozenset(allowed_vars)).parse()


def eval_expr(e: Expr, bindings: Dict[str, float]) -> float:
    """Evaluate a tree on finite bindings; domain trouble raises EvalDomainError."""
    v = _eval(e, bindings)
    if not math.isfinite(v):
        raise EvalDomainError("non-finite result %r" % v, getattr(e, "pos", -1))
    return v


def _eval(e: Expr, b: Dict[str, float]) -> float:
    if isinstance(e, Lit):
        return e.value
    if isinstance(e, Var):
        try:
            return b[e.name]
        except KeyError:
            raise UnknownVariableError(e.name, e.pos)
    if isinstance(e, Neg):
        return -_eval(e.operand, b)
    if isinstance(e, Call):
        x = _eval(e.arg, b)
        try:
            if e.fn == "sin":
                return math.sin(x)
            if e.fn == "cos":
                return math.cos(x)
            if e.fn == "exp":
                return math.exp(x)
            if e.fn == "log":
                if x <= 0.0:
                    raise EvalDomainError("log of nonpositive value %r" % x, e.pos)
                return math.log(x)
            if e.fn == "sqrt":
                if x < 0.0:
                    raise EvalDomainError("sqrt of negative value %r" % x, e.pos)
                return math.sqrt(x)
            if e.fn == "abs":
                return abs(x)
        except OverflowError:
            raise EvalDomainError("overflow in %s(%r)" % (e.fn, x), e.pos)
        raise ExprError("unknown function %r" % e.fn, e.pos)
    if isinstance(e, Bin):
        l = _eval(e.left, b)
        r = _eval(e.right, b)
        try:
            if e.op == "+":
                return l + r
            if e.op == "-":
                return l - r
            if e.op == "*":
                return l * r
            if e.op == "/":
                if r == 0.0:
                    raise EvalDomainError("division by zero", e.pos)
                return l / r
            if e.op == "^":
                if l == 0.0 and r < 0.0:
                    raise EvalDomainError("zero raised to negative power", e.pos)
                if l < 0.0 and r != int(r):
                    raise EvalDomainError("negative base with non-integer exponent", e.pos)
                return math.pow(l, r)
        except OverflowError:
            raise EvalDomainError("overflow in %r operation" % e.op, e.pos)
        raise ExprError("unknown operator %r" % e.op, e.pos)
    raise ExprError("unknown node %r" % (e,))


_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "neg": 3, "^": 4}


def to_text(e: Expr) -> str:
    """Render a tree back to source; parse(to_text(e)) is structurally e."""
    return _render(e, 0)


def _render(e: Expr, parent_prec: int) -> str:
    if isinstance(e, Lit):
        s = repr(e.value)
        # a bare negative literal needs the same care as unary minus
        if e.value < 0 and parent_prec > _PREC["neg"]:
            return "(" + s + ")"
        if e.value < 0 and parent_prec == _PREC["neg"]:
            return "(" + s + ")"
        return s
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Call):
        return "%s(%s)" % (e.fn, _render(e.arg, 0))
    if isinstance(e, Neg):
        inner = _render(e.operand, _PREC["neg"])
        s = "-" + inner
        return "(" + s + ")" if parent_prec > _PREC["neg"] else s
    if isinstance(e, Bin):
        prec = _PREC[e.op]
        if e.op == "^":
            # right associative; left side must bind tighter than ^
            left = _render(e.left, prec + 1)
            right = _render(e.right, _PREC["neg"])  # exponent admits unary minus
            s = left + "^" + right
        else:
            left = _render(e.left, prec)
            right = _render(e.right, prec + 1)
            s = "%s %s %s" % (left, e.op, right)
        return "(" + s + ")" if prec < parent_prec else s
    raise ExprError("unknown node %r" % (e,))


def free_variables(e: Expr) -> FrozenSet[str]:
    if isinstance(e, Var):
        return frozenset((e.name,))
    if isinstance(e, Neg):
        return free_variables(e.operand)
    if isinstance(e, Call):
        return free_variables(e.arg)
    if isinstance(e, Bin):
        return free_variables(e.left) | free_variables(e.right)
    return frozenset()
