"""Coefficient expressions: parsing, evaluation, exact differentiation.

Grammar (whitespace ignored)::

    expr   := term (('+' | '-') term)*
    term   := factor (('*' | '/') factor)*
    factor := number | ident | func '(' expr ')' | '(' expr ')' | '-' factor
    func   := 'sin' | 'cos' | 'exp' | 'tanh'

Identifiers are the coordinate names of the algebra (lower-cased basis
labels, e.g. ``x, y, t`` on the Heisenberg group) plus the reserved
constants ``i`` (imaginary unit) and ``pi``.  Coordinates are real, so
complex conjugation only touches constants.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

__all__ = [
    "Expr",
    "Const",
    "Var",
    "Add",
    "Mul",
    "Div",
    "Func",
    "ExprSyntaxError",
    "parse_expr",
    "const",
    "add",
    "mul",
    "div",
    "func",
    "interval",
]

FUNCS = ("sin", "cos", "exp", "tanh")


class ExprSyntaxError(ValueError):
    def __init__(self, message, pos, source=""):
        super().__init__(f"{message} at position {pos}" + (f" in {source!r}" if source else ""))
        self.pos = pos
        self.source = source


class Expr:
    """Immutable expression node; build with :func:`add`, :func:`mul` etc."""

    __slots__ = ()

    def evaluate(self, points):
        """Evaluate at ``points`` of shape ``(..., d)``; returns real or complex array."""
        pts = np.asarray(points, dtype=float)
        return np.asarray(self._eval(pts))

    def __call__(self, points):
        return self.evaluate(points)

    @property
    def is_const(self) -> bool:
        return isinstance(self, Const)

    def __add__(self, other):
        return add(self, _wrap(other))

    def __radd__(self, other):
        return add(_wrap(other), self)

    def __sub__(self, other):
        return add(self, mul(const(-1), _wrap(other)))

    def __rsub__(self, other):
        return add(_wrap(other), mul(const(-1), self))

    def __mul__(self, other):
        return mul(self, _wrap(other))

    def __rmul__(self, other):
        return mul(_wrap(other), self)

    def __truediv__(self, other):
        return div(self, _wrap(other))

    def __neg__(self):
        return mul(const(-1), self)

    def variables(self) -> set:
        out: set = set()
        self._vars(out)
        return out

    def _vars(self, out):
        pass


def _wrap(x):
    if isinstance(x, Expr):
        return x
    return const(x)


@dataclass(frozen=True)
class Const(Expr):
    value: complex

    def _eval(self, pts):
        v = self.value
        shape = pts.shape[:-1]
        if v.imag == 0:
            return np.full(shape, v.real)
        return np.full(shape, v, dtype=complex)

    def diff(self, i):
        return ZERO

    def conjugate(self):
        return Const(self.value.conjugate())

    def __str__(self):
        v = self.value
        if v.imag == 0:
            r = v.real
            return repr(int(r)) if r == int(r) and abs(r) < 1e15 else repr(r)
        if v.real == 0:
            return f"{_num(v.imag)}*i"
        return f"({_num(v.real)}+{_num(v.imag)}*i)"


def _num(r):
    return repr(int(r)) if r == int(r) and abs(r) < 1e15 else repr(r)


@dataclass(frozen=True)
class Var(Expr):
    index: int
    name: str

    def _eval(self, pts):
        return pts[..., self.index]

    def diff(self, i):
        return ONE if i == self.index else ZERO

    def conjugate(self):
        return self

    def _vars(self, out):
        out.add(self.index)

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class Add(Expr):
    args: tuple

    def _eval(self, pts):
        out = self.args[0]._eval(pts)
        for a in self.args[1:]:
            out = out + a._eval(pts)
        return out

    def diff(self, i):
        return add(*(a.diff(i) for a in self.args))

    def conjugate(self):
        return add(*(a.conjugate() for a in self.args))

    def _vars(self, out):
        for a in self.args:
            a._vars(out)

    def __str__(self):
        return "(" + " + ".join(str(a) for a in self.args) + ")"


@dataclass(frozen=True)
class Mul(Expr):
    args: tuple

    def _eval(self, pts):
        out = self.args[0]._eval(pts)
        for a in self.args[1:]:
            out = out * a._eval(pts)
        return out

    def diff(self, i):
        terms = []
        for k, a in enumerate(self.args):
            da = a.diff(i)
            if da is ZERO:
                continue
            terms.append(mul(*self.args[:k], da, *self.args[k + 1:]))
        return add(*terms)

    def conjugate(self):
        return mul(*(a.conjugate() for a in self.args))

    def _vars(self, out):
        for a in self.args:
            a._vars(out)

    def __str__(self):
        return "*".join(str(a) for a in self.args)


@dataclass(frozen=True)
class Div(Expr):
    num: Expr
    den: Expr

    def _eval(self, pts):
        d = self.den._eval(pts)
        if np.any(d == 0):
            raise ZeroDivisionError(f"denominator {self.den} vanishes at an evaluation point")
        return self.num._eval(pts) / d

    def diff(self, i):
        dn = self.num.diff(i)
        dd = self.den.diff(i)
        first = div(dn, self.den)
        if dd is ZERO:
            return first
        return add(first, mul(const(-1), self.num, dd, div(ONE, mul(self.den, self.den))))

    def conjugate(self):
        return div(self.num.conjugate(), self.den.conjugate())

    def _vars(self, out):
        self.num._vars(out)
        self.den._vars(out)

    def __str__(self):
        return f"({self.num})/({self.den})"


_NP = {"sin": np.sin, "cos": np.cos, "exp": np.exp, "tanh": np.tanh}


@dataclass(frozen=True)
class Func(Expr):
    name: str
    arg: Expr

    def _eval(self, pts):
        return _NP[self.name](self.arg._eval(pts))

    def diff(self, i):
        da = self.arg.diff(i)
        if da is ZERO:
            return ZERO
        if self.name == "sin":
            outer = func("cos", self.arg)
        elif self.name == "cos":
            outer = mul(const(-1), func("sin", self.arg))
        elif self.name == "exp":
            outer = self
        else:
            outer = add(ONE, mul(const(-1), self, self))
        return mul(outer, da)

    def conjugate(self):
        return func(self.name, self.arg.conjugate())

    def _vars(self, out):
        self.arg._vars(out)

    def __str__(self):
        return f"{self.name}({self.arg})"


ZERO = Const(0j)
ONE = Const(1 + 0j)


def const(v) -> Const:
    v = complex(v)
    if v == 0:
        return ZERO
    if v == 1:
        return ONE
    return Const(v)


def add(*args) -> Expr:
    flat = []
    total = 0j
    for a in args:
        if isinstance(a, Add):
            items = a.args
        else:
            items = (a,)
        for b in items:
            if isinstance(b, Const):
                total += b.value
            else:
                flat.append(b)
    if total != 0 or not flat:
        flat.append(const(total))
    if len(flat) == 1:
        return flat[0]
    return Add(tuple(flat))


def mul(*args) -> Expr:
    flat = []
    coef = 1 + 0j
    for a in args:
        items = a.args if isinstance(a, Mul) else (a,)
        for b in items:
            if isinstance(b, Const):
                coef *= b.value
            else:
                flat.append(b)
    if coef == 0:
        return ZERO
    if not flat:
        return const(coef)
    if coef != 1:
        flat.insert(0, const(coef))
    if len(flat) == 1:
        return flat[0]
    return Mul(tuple(flat))


def div(num, den) -> Expr:
    if isinstance(den, Const):
        if den.value == 0:
            raise ZeroDivisionError("division by constant zero")
        return mul(const(1 / den.value), num)
    if num is ZERO:
        return ZERO
    return Div(num, den)


def func(name, arg) -> Expr:
    if name not in FUNCS:
        raise ValueError(f"unknown function {name!r}")
    if isinstance(arg, Const):
        v = arg.value
        return const(complex(_NP[name](v)) if v.imag else float(_NP[name](v.real)))
    return Func(name, arg)


# --------------------------------------------------------------------------
# parser


_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<id>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>[-+*/()]))"
)


def _tokenize(src):
    pos = 0
    out = []
    n = len(src)
    while pos < n:
        if src[pos:].strip() == "":
            break
        m = _TOKEN.match(src, pos)
        if not m:
            start = pos + (len(src[pos:]) - len(src[pos:].lstrip()))
            raise ExprSyntaxError(f"unexpected character {src[start]!r}", start, src)
        kind = m.lastgroup
        start = m.start(kind)
        out.append((kind, m.group(kind), start))
        pos = m.end()
    out.append(("end", "", len(src)))
    return out


class _Parser:
    def __init__(self, src, names):
        self.src = src
        self.names = {n: k for k, n in enumerate(names)}
        self.toks = _tokenize(src)
        self.k = 0

    def peek(self):
        return self.toks[self.k]

    def take(self):
        tok = self.toks[self.k]
        self.k += 1
        return tok

    def expect(self, value):
        kind, val, pos = self.take()
        if val != value:
            found = "end of input" if kind == "end" else repr(val)
            raise ExprSyntaxError(f"expected {value!r}, found {found}", pos, self.src)

    def parse(self):
        e = self.expr()
        kind, val, pos = self.peek()
        if kind != "end":
            raise ExprSyntaxError(f"unexpected {val!r}", pos, self.src)
        return e

    def expr(self):
        e = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            rhs = self.term()
            e = add(e, rhs) if op == "+" else add(e, mul(const(-1), rhs))
        return e

    def term(self):
        e = self.factor()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            rhs = self.factor()
            e = mul(e, rhs) if op == "*" else div(e, rhs)
        return e

    def factor(self):
        kind, val, pos = self.take()
        if kind == "num":
            return const(float(val))
        if kind == "op" and val == "-":
            return mul(const(-1), self.factor())
        if kind == "op" and val == "(":
            e = self.expr()
            self.expect(")")
            return e
        if kind == "id":
            if val in FUNCS:
                self.expect("(")
                e = self.expr()
                self.expect(")")
                return func(val, e)
            if val in self.names:
                return Var(self.names[val], val)
            if val == "i":
                return const(1j)
            if val == "pi":
                return const(math.pi)
            raise ExprSyntaxError(f"unknown identifier {val!r}", pos, self.src)
        found = "end of input" if kind == "end" else repr(val)
        raise ExprSyntaxError(f"unexpected {found}", pos, self.src)


def parse_expr(src: str, names) -> Expr:
    """Parse ``src`` over coordinate ``names`` (sequence of identifiers)."""
    if not isinstance(src, str):
        return const(src)
    return _Parser(src, tuple(names)).parse()


# --------------------------------------------------------------------------
# interval bounds


def _imul(a, b):
    cands = []
    for x in a:
        for y in b:
            if (x == 0 and math.isinf(y)) or (y == 0 and math.isinf(x)):
                cands.append(0.0)
            else:
                cands.append(x * y)
    return (min(cands), max(cands))


def _ipow(r, k):
    lo, hi = r
    if k == 1:
        return r
    ends = [lo**k, hi**k]
    if k % 2 == 0 and lo <= 0 <= hi:
        return (0.0, max(ends))
    return (min(ends), max(ends))


def _periodic_range(f, lo, hi, crit):
    if not (math.isfinite(lo) and math.isfinite(hi)) or hi - lo >= 2 * math.pi:
        return (-1.0, 1.0)
    vals = [f(lo), f(hi)]
    k0 = math.floor((lo - crit) / math.pi)
    for k in range(k0, k0 + 4):
        c = crit + k * math.pi
        if lo <= c <= hi:
            vals.append(f(c))
    return (min(vals), max(vals))


def interval(e: Expr, box) -> tuple | None:
    """Enclosure ``(lo, hi)`` of a real expression over ``box`` (list of (lo, hi)).

    Returns ``None`` for complex-valued expressions.  Infinite endpoints are
    allowed; ``box=None`` means all of R^d.
    """
    if isinstance(e, Const):
        if e.value.imag != 0:
            return None
        return (e.value.real, e.value.real)
    if isinstance(e, Var):
        if box is None:
            return (-math.inf, math.inf)
        return tuple(map(float, box[e.index]))
    if isinstance(e, Add):
        lo = hi = 0.0
        for a in e.args:
            r = interval(a, box)
            if r is None:
                return None
            lo += r[0]
            hi += r[1]
        return (lo, hi)
    if isinstance(e, Mul):
        # group repeated factors so that x*x is bounded below by 0
        counts: dict = {}
        for a in e.args:
            counts[a] = counts.get(a, 0) + 1
        acc = (1.0, 1.0)
        for a, k in counts.items():
            r = interval(a, box)
            if r is None:
                return None
            acc = _imul(acc, _ipow(r, k))
        return acc
    if isinstance(e, Div):
        n = interval(e.num, box)
        d = interval(e.den, box)
        if n is None or d is None:
            return None
        if d[0] <= 0 <= d[1]:
            return (-math.inf, math.inf)
        return _imul(n, (1 / d[1], 1 / d[0]))
    if isinstance(e, Func):
        r = interval(e.arg, box)
        if r is None:
            return None
        lo, hi = r
        if e.name == "sin":
            return _periodic_range(math.sin, lo, hi, math.pi / 2)
        if e.name == "cos":
            return _periodic_range(math.cos, lo, hi, 0.0)
        if e.name == "exp":
            return (math.exp(lo) if lo > -math.inf else 0.0, math.exp(hi) if hi < 700 else math.inf)
        return (math.tanh(lo), math.tanh(hi))
    raise TypeError(f"unknown node {type(e).__name__}")
