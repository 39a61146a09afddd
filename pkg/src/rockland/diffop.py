"""Variable-coefficient differential operators ``P = sum M_a X^alpha``.

Coefficients are :class:`~rockland.expr.Expr` trees over exponential
coordinates.  Vector fields act through the left-translation flow,
``X u(g) = d/ds u(exp(-sX) g)|_{s=0}``, which is computed symbolically from
the linear-in-``s`` part of the BCH product.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import comb, factorial
from pathlib import Path

import numpy as np

from . import expr as ex
from .lie import GradedLieAlgebra, load_algebra
from .uea import UEAElement, Word, normal_order, top_part

__all__ = [
    "DiffOp",
    "OperatorSpecError",
    "parse_coeff",
    "flow_field",
    "vector_field_apply",
    "apply_word",
    "freeze",
    "top_at",
    "formal_adjoint",
    "compose",
    "commutator_with_mult",
    "coefficient_bounds",
    "load_operator",
    "heisenberg_family",
]


class OperatorSpecError(ValueError):
    """Malformed operator description."""


def parse_coeff(src, alg: GradedLieAlgebra) -> ex.Expr:
    return ex.parse_expr(src, alg.coord_names)


# --------------------------------------------------------------------------
# vector fields


@lru_cache(maxsize=None)
def _bernoulli(n: int) -> Fraction:
    # convention B_1 = -1/2
    if n == 0:
        return Fraction(1)
    return -sum(comb(n + 1, k) * _bernoulli(k) for k in range(n)) / (n + 1)


def _poly_to_expr(poly, alg) -> ex.Expr:
    terms = []
    for mono, c in sorted(poly.items()):
        if c == 0:
            continue
        factors = [ex.const(c)]
        for i, k in enumerate(mono):
            factors.extend([ex.Var(i, alg.coord_names[i])] * k)
        terms.append(ex.mul(*factors))
    return ex.add(*terms)


_flow_cache: dict = {}


def flow_field(alg: GradedLieAlgebra, j: int) -> tuple:
    """Components of the vector field of basis element ``j`` as expressions.

    The field is ``-(ad_g / (e^{ad_g} - 1)) e_j = -sum_n B_n/n! ad_g^n e_j``,
    the s-derivative of ``log(exp(-s e_j) exp(g))`` at ``s = 0``; the series
    stops at the top degree of the grading.
    """
    key = (alg, j)
    if key in _flow_cache:
        return _flow_cache[key]
    d = alg.dim
    zero = (0,) * d
    # polynomials: dict exps -> complex coefficient
    w = [dict() for _ in range(d)]
    w[j][zero] = 1.0
    total = [dict() for _ in range(d)]
    C = alg.structure
    for n in range(alg.step + 1):
        b = _bernoulli(n) / factorial(n)
        if b != 0:
            for k in range(d):
                for mono, c in w[k].items():
                    total[k][mono] = total[k].get(mono, 0) - float(b) * c
        # w <- [g, w]
        nw = [dict() for _ in range(d)]
        for a in range(d):
            unit = tuple(1 if i == a else 0 for i in range(d))
            for bb in range(d):
                if not w[bb]:
                    continue
                for k in range(d):
                    c_abk = C[a, bb, k]
                    if c_abk == 0:
                        continue
                    for mono, c in w[bb].items():
                        m2 = tuple(x + y for x, y in zip(mono, unit))
                        nw[k][m2] = nw[k].get(m2, 0) + c_abk * c
        w = nw
    out = []
    for k in range(d):
        poly = {m: (complex(c).real if complex(c).imag == 0 else complex(c)) for m, c in total[k].items() if abs(c) > 1e-15}
        out.append(_poly_to_expr(poly, alg))
    out = tuple(out)
    _flow_cache[key] = out
    return out


def vector_field_apply(alg: GradedLieAlgebra, j: int, a: ex.Expr) -> ex.Expr:
    """Exact derivative of ``a`` along basis element ``j`` (left-translation flow)."""
    field = flow_field(alg, j)
    terms = []
    for i, comp in enumerate(field):
        if comp is ex.ZERO:
            continue
        da = a.diff(i)
        if da is ex.ZERO:
            continue
        terms.append(ex.mul(comp, da))
    return ex.add(*terms)


_word_cache: dict = {}


def apply_word(alg: GradedLieAlgebra, letters, a: ex.Expr) -> ex.Expr:
    """``X^beta a`` for ``beta = letters`` (rightmost letter acts first)."""
    letters = tuple(letters)
    if not letters:
        return a
    key = (alg, letters, a)
    hit = _word_cache.get(key)
    if hit is not None:
        return hit
    inner = apply_word(alg, letters[1:], a)
    out = vector_field_apply(alg, letters[0], inner) if inner is not ex.ZERO else ex.ZERO
    if len(_word_cache) > 200_000:
        _word_cache.clear()
    _word_cache[key] = out
    return out


# --------------------------------------------------------------------------
# operators


@dataclass(frozen=True, eq=False)
class DiffOp:
    """``sum_k M_{coeff_k} X^{word_k}``; words are tuples of basis indices."""

    alg: GradedLieAlgebra
    terms: tuple  # of (Expr, tuple[int, ...])
    declared_order: int | None = None

    def __post_init__(self):
        merged: dict = {}
        order = []
        for c, w in self.terms:
            w = tuple(int(x) for x in (w.letters if isinstance(w, Word) else w))
            if not isinstance(c, ex.Expr):
                c = ex.const(c)
            if w in merged:
                merged[w] = ex.add(merged[w], c)
            else:
                merged[w] = c
                order.append(w)
        clean = tuple((merged[w], w) for w in order if merged[w] is not ex.ZERO)
        object.__setattr__(self, "terms", clean)

    def weighted_length(self, word) -> int:
        return sum(self.alg.degrees[i] for i in word)

    @property
    def order(self) -> int:
        if self.declared_order is not None:
            return self.declared_order
        return max((self.weighted_length(w) for _, w in self.terms), default=0)

    @property
    def computed_order(self) -> int:
        return max((self.weighted_length(w) for _, w in self.terms), default=0)

    @classmethod
    def identity(cls, alg):
        return cls(alg, ((ex.ONE, ()),), 0)

    @classmethod
    def multiplier(cls, alg, a):
        return cls(alg, ((a if isinstance(a, ex.Expr) else parse_coeff(a, alg), ()),), 0)

    @classmethod
    def from_uea(cls, element: UEAElement, order=None):
        terms = [(ex.const(c), element.monomial_word(m)) for m, c in element.terms.items()]
        return cls(element.alg, tuple(terms), order)

    @classmethod
    def from_dict(cls, spec: dict, alg: GradedLieAlgebra | None = None):
        if alg is None:
            alg = load_algebra(spec.get("algebra", "heisenberg1"))
        terms = []
        for n, t in enumerate(spec.get("terms", [])):
            try:
                coeff = parse_coeff(str(t["coeff"]), alg)
                word = Word.parse(str(t.get("word", "")), alg, generators_only=False)
            except KeyError as exc:
                raise OperatorSpecError(f"terms[{n}] missing field {exc}") from None
            except ex.ExprSyntaxError as exc:
                raise OperatorSpecError(f"terms[{n}].coeff: {exc}") from None
            except ValueError as exc:
                raise OperatorSpecError(f"terms[{n}].word: {exc}") from None
            terms.append((coeff, word.letters))
        order = spec.get("order")
        op = cls(alg, tuple(terms), int(order) if order is not None else None)
        if order is not None and op.computed_order > int(order):
            raise OperatorSpecError(f"declared order {order} is below the weighted length {op.computed_order} of a term")
        return op

    def to_dict(self) -> dict:
        return {
            "algebra": self.alg.name or self.alg.to_dict(),
            "order": self.order,
            "terms": [
                {"coeff": str(c), "word": "".join(self.alg.labels[i] for i in w)} for c, w in self.terms
            ],
        }

    def __add__(self, other):
        _same(self, other)
        order = max(self.order, other.order)
        return DiffOp(self.alg, self.terms + other.terms, order)

    def __neg__(self):
        return self.scale(-1)

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c):
        c = ex.const(c) if not isinstance(c, ex.Expr) else c
        return DiffOp(self.alg, tuple((ex.mul(c, a), w) for a, w in self.terms), self.declared_order)

    def __matmul__(self, other):
        return compose(self, other)

    def uses_variables(self) -> set:
        out: set = set()
        for a, _ in self.terms:
            out |= a.variables()
        return out

    def __str__(self):
        if not self.terms:
            return "0"
        return " + ".join(f"M[{a}]·{''.join(self.alg.labels[i] for i in w) or '1'}" for a, w in self.terms)


def _same(P, Q):
    if not P.alg.same_as(Q.alg):
        raise ValueError("operators belong to different algebras")


def freeze(P: DiffOp, g) -> UEAElement:
    """Constant-coefficient operator ``P_g = sum a(g) X^alpha`` in PBW form."""
    g = np.asarray(g, dtype=float)
    out = UEAElement(P.alg)
    for a, w in P.terms:
        c = complex(a.evaluate(g))
        if c != 0:
            out = out + c * normal_order(P.alg, w)
    return out


def top_at(P: DiffOp, g) -> UEAElement:
    return top_part(freeze(P, g), P.order)


def _split(word, mask):
    sel = tuple(x for k, x in enumerate(word) if mask >> k & 1)
    rest = tuple(x for k, x in enumerate(word) if not mask >> k & 1)
    return sel, rest


def _leibniz(alg, word, f):
    """Yield ``(X^{word_S} f, word_{S^c})`` for every subset S of positions."""
    n = len(word)
    for mask in range(1 << n):
        sel, rest = _split(word, mask)
        df = apply_word(alg, sel, f)
        if df is not ex.ZERO:
            yield mask, df, rest


def formal_adjoint(P: DiffOp) -> DiffOp:
    """``P^dagger = sum (X^alpha)^dagger M_{conj a}``, Leibniz-normalized to M X form."""
    terms = []
    for a, w in P.terms:
        sign = -1 if len(w) % 2 else 1
        abar = a.conjugate()
        for _, df, rest in _leibniz(P.alg, w[::-1], abar):
            terms.append((ex.mul(ex.const(sign), df), rest))
    return DiffOp(P.alg, tuple(terms), P.order)


def compose(P: DiffOp, Q: DiffOp) -> DiffOp:
    _same(P, Q)
    terms = []
    for a, alpha in P.terms:
        for b, beta in Q.terms:
            for _, db, rest in _leibniz(P.alg, alpha, b):
                terms.append((ex.mul(a, db), rest + beta))
    return DiffOp(P.alg, tuple(terms), P.order + Q.order)


def commutator_with_mult(P: DiffOp, psi) -> DiffOp:
    """``[P, M_psi] = P M_psi - M_psi P``; weighted order drops by at least one."""
    if not isinstance(psi, ex.Expr):
        psi = parse_coeff(psi, P.alg)
    terms = []
    for a, alpha in P.terms:
        for mask, dpsi, rest in _leibniz(P.alg, alpha, psi):
            if mask == 0:
                continue
            terms.append((ex.mul(a, dpsi), rest))
    return DiffOp(P.alg, tuple(terms), max(P.order - 1, 0))


def _words_up_to(alg, k):
    gens = alg.generators
    out = [()]
    frontier = [()]
    while frontier:
        nxt = []
        for w in frontier:
            for j in gens:
                w2 = w + (j,)
                if sum(alg.degrees[i] for i in w2) <= k:
                    nxt.append(w2)
        out.extend(nxt)
        frontier = nxt
    return out


def _is_polynomial(e) -> bool:
    if isinstance(e, (ex.Const, ex.Var)):
        return True
    if isinstance(e, (ex.Add, ex.Mul)):
        return all(_is_polynomial(a) for a in e.args)
    return False


def coefficient_bounds(P: DiffOp, k: int, box, n_samples: int = 2000, seed: int = 0) -> list:
    """Sampled ``||a||_{k,b}`` for each coefficient plus boundedness flags.

    ``certified_bounded`` means interval arithmetic bounds every ``X^beta a``
    (``len(beta) <= k``) on all of G.  ``provably_unbounded`` means some such
    derivative is a non-constant polynomial.  Otherwise only the sampled sup
    over ``box`` is known.
    """
    rng = np.random.default_rng(seed)
    box = np.asarray(box, dtype=float)
    pts = rng.uniform(box[:, 0], box[:, 1], size=(n_samples, P.alg.dim))
    report = []
    for a, w in P.terms:
        sup = 0.0
        certified = True
        unbounded = False
        for beta in _words_up_to(P.alg, k):
            d = apply_word(P.alg, beta, a)
            vals = np.abs(d.evaluate(pts))
            sup = max(sup, float(np.max(vals)) if vals.size else 0.0)
            if _is_polynomial(d) and not isinstance(d, ex.Const):
                unbounded = True
            re_iv = ex.interval(d, None)
            if re_iv is None:
                # complex: bound real and imaginary parts separately
                parts = [ex.interval(ex.mul(ex.const(0.5), ex.add(d, d.conjugate())), None),
                         ex.interval(ex.mul(ex.const(-0.5j), ex.add(d, ex.mul(ex.const(-1), d.conjugate()))), None)]
                if any(p is None or not all(np.isfinite(p)) for p in parts):
                    certified = False
            elif not all(np.isfinite(re_iv)):
                certified = False
        report.append(
            {
                "coeff": str(a),
                "word": "".join(P.alg.labels[i] for i in w),
                "sampled_sup": sup,
                "certified_bounded": certified and not unbounded,
                "provably_unbounded": unbounded,
            }
        )
    return report


def load_operator(source, alg: GradedLieAlgebra | None = None) -> DiffOp:
    path = Path(str(source))
    try:
        text = path.read_text()
    except OSError as exc:
        raise OperatorSpecError(f"{path}: cannot read ({exc.strerror})") from None
    try:
        spec = json.loads(text)
    except json.JSONDecodeError as exc:
        raise OperatorSpecError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    try:
        return DiffOp.from_dict(spec, alg)
    except (OperatorSpecError, ValueError) as exc:
        raise OperatorSpecError(f"{path}: {exc}") from None


def heisenberg_family(f, alg: GradedLieAlgebra | None = None) -> DiffOp:
    """``-X^2 - Y^2 + i M_f T`` on the Heisenberg group."""
    from .lie import builtin

    alg = alg or builtin("heisenberg1")
    fe = f if isinstance(f, ex.Expr) else parse_coeff(str(f), alg)
    X, Y, T = 0, 1, 2
    return DiffOp(alg, ((ex.const(-1), (X, X)), (ex.const(-1), (Y, Y)), (ex.mul(ex.const(1j), fe), (T,))), 2)


def random_operator(alg, rng, max_len=3, n_terms=3, pool=None) -> DiffOp:
    """Random operator with smooth bounded coefficients (test and benchmark helper)."""
    names = alg.coord_names
    pool = pool or [
        "1", "2", "-1", "i",
        "sin({v})", "cos({v})", "2+sin({v})", "tanh({v})",
        "exp(-1*{v}*{v})", "cos({v})*sin({w})", "(1+i)*tanh({v})",
    ]
    gens = alg.generators
    terms = []
    order = 0
    for _ in range(n_terms):
        tmpl = pool[rng.integers(len(pool))]
        src = tmpl.format(v=names[rng.integers(len(names))], w=names[rng.integers(len(names))])
        length = int(rng.integers(0, max_len + 1))
        word = tuple(int(gens[rng.integers(len(gens))]) for _ in range(length))
        terms.append((parse_coeff(src, alg), word))
        order = max(order, sum(alg.degrees[i] for i in word))
    return DiffOp(alg, tuple(terms), order)


def random_points(alg, rng, n, scale=2.0):
    return rng.uniform(-scale, scale, size=(n, alg.dim))

