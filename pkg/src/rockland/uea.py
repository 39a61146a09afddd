"""Universal enveloping algebra arithmetic in PBW normal form.

Elements are sparse maps from PBW exponent vectors ``(k_1, ..., k_d)`` (over
the ordered basis of the algebra) to complex coefficients.  Because the basis
is ordered by degree and the structure constants respect the grading, the
weighted degree ``sum k_i deg(e_i)`` of a monomial is a genuine grading of
U(g) and :func:`top_part` is a plain filter on monomials.
"""
from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from ._kernels import Straightener
from .lie import GradedLieAlgebra

__all__ = [
    "Word",
    "UEAElement",
    "normal_order",
    "multiply",
    "adjoint_const",
    "top_part",
    "dilate_uea",
    "rockland_laplacian",
    "parse_element",
]

PRUNE = 1e-14

_straighteners: dict = {}


def straightener(alg: GradedLieAlgebra):
    s = _straighteners.get(alg)
    if s is None:
        s = Straightener(alg.bracket_table(), alg.dim)
        _straighteners[alg] = s
    return s


@dataclass(frozen=True)
class Word:
    """A word in basis letters; ``weighted_length`` sums the letter degrees."""

    letters: tuple
    alg: GradedLieAlgebra

    @property
    def weighted_length(self) -> int:
        return sum(self.alg.degrees[i] for i in self.letters)

    def __len__(self):
        return len(self.letters)

    def __str__(self):
        return "".join(self.alg.labels[i] for i in self.letters) or "1"

    def reversed(self) -> "Word":
        return Word(self.letters[::-1], self.alg)

    @classmethod
    def parse(cls, text, alg: GradedLieAlgebra, generators_only: bool = True) -> "Word":
        """Parse ``"XYX"`` (greedy longest label match) or a sequence of labels/indices."""
        allowed = alg.generators if generators_only else range(alg.dim)
        if not isinstance(text, str):
            letters = []
            for x in text:
                i = alg.index(x) if isinstance(x, str) else int(x)
                letters.append(i)
        else:
            labels = sorted(((alg.labels[i], i) for i in allowed), key=lambda p: -len(p[0]))
            s = text.replace(" ", "").replace("*", "").replace("·", "")
            letters = []
            pos = 0
            while pos < len(s):
                for lab, i in labels:
                    if s.startswith(lab, pos):
                        letters.append(i)
                        pos += len(lab)
                        break
                else:
                    raise ValueError(f"cannot parse word {text!r} at position {pos}")
        for i in letters:
            if i not in allowed:
                raise ValueError(f"letter {alg.labels[i] if 0 <= i < alg.dim else i!r} is not an allowed generator")
        return cls(tuple(letters), alg)


class UEAElement:
    """Element of U(g) in PBW normal form."""

    __slots__ = ("alg", "terms")

    def __init__(self, alg: GradedLieAlgebra, terms=None):
        self.alg = alg
        clean = {}
        if terms:
            for mono, c in terms.items():
                c = complex(c)
                if abs(c) > PRUNE:
                    clean[tuple(int(k) for k in mono)] = c
        self.terms = clean

    # construction helpers
    @classmethod
    def scalar(cls, alg, c=1.0):
        return cls(alg, {(0,) * alg.dim: c})

    @classmethod
    def basis(cls, alg, i, power=1):
        exps = [0] * alg.dim
        exps[i] = power
        return cls(alg, {tuple(exps): 1.0})

    @classmethod
    def from_word(cls, word):
        return normal_order(word.alg, word)

    # structure
    def mono_degree(self, mono) -> int:
        return sum(k * d for k, d in zip(mono, self.alg.degrees))

    @property
    def degree(self) -> int:
        """Maximal weighted degree over terms; -1 for the zero element."""
        if not self.terms:
            return -1
        return max(self.mono_degree(m) for m in self.terms)

    def is_zero(self, tol=1e-10) -> bool:
        return all(abs(c) <= tol for c in self.terms.values())

    def coefficient(self, mono) -> complex:
        return self.terms.get(tuple(mono), 0j)

    def _check(self, other):
        if not isinstance(other, UEAElement):
            raise TypeError(f"expected UEAElement, got {type(other).__name__}")
        if not self.alg.same_as(other.alg):
            raise ValueError("elements belong to different algebras")

    # arithmetic
    def __add__(self, other):
        if isinstance(other, (int, float, complex)):
            other = UEAElement.scalar(self.alg, other)
        self._check(other)
        out = dict(self.terms)
        for m, c in other.terms.items():
            out[m] = out.get(m, 0) + c
        return UEAElement(self.alg, out)

    __radd__ = __add__

    def __neg__(self):
        return UEAElement(self.alg, {m: -c for m, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, float, complex, np.number)):
            return UEAElement(self.alg, {m: c * other for m, c in self.terms.items()})
        return multiply(self, other)

    def __rmul__(self, other):
        if isinstance(other, (int, float, complex, np.number)):
            return UEAElement(self.alg, {m: other * c for m, c in self.terms.items()})
        return NotImplemented

    def __pow__(self, n: int):
        out = UEAElement.scalar(self.alg)
        for _ in range(n):
            out = out * self
        return out

    def is_close(self, other, tol=1e-10) -> bool:
        self._check(other)
        keys = set(self.terms) | set(other.terms)
        return all(abs(self.terms.get(k, 0) - other.terms.get(k, 0)) <= tol for k in keys)

    def max_abs_diff(self, other) -> float:
        self._check(other)
        keys = set(self.terms) | set(other.terms)
        return max((abs(self.terms.get(k, 0) - other.terms.get(k, 0)) for k in keys), default=0.0)

    def __eq__(self, other):
        return isinstance(other, UEAElement) and self.alg.same_as(other.alg) and self.is_close(other, 0.0)

    __hash__ = None

    def monomial_word(self, mono) -> tuple:
        word = []
        for i, k in enumerate(mono):
            word.extend([i] * k)
        return tuple(word)

    def __str__(self):
        return render(self)

    def __repr__(self):
        return f"UEAElement({render(self)!r})"


def normal_order(alg: GradedLieAlgebra, word) -> UEAElement:
    """Straighten a word of basis letters into PBW normal form."""
    letters = word.letters if isinstance(word, Word) else tuple(word)
    return UEAElement(alg, straightener(alg).normal_form(letters))


def multiply(a: UEAElement, b: UEAElement) -> UEAElement:
    a._check(b)
    s = straightener(a.alg)
    out: dict = {}
    for ma, ca in a.terms.items():
        wa = a.monomial_word(ma)
        for mb, cb in b.terms.items():
            c = ca * cb
            for m, cm in s.normal_form(wa + b.monomial_word(mb)).items():
                out[m] = out.get(m, 0) + c * cm
    return UEAElement(a.alg, out)


def adjoint_const(a: UEAElement) -> UEAElement:
    """Formal adjoint: anti-linear anti-homomorphism with e_i -> -e_i."""
    s = straightener(a.alg)
    out: dict = {}
    for mono, c in a.terms.items():
        word = a.monomial_word(mono)
        sign = -1 if len(word) % 2 else 1
        cc = sign * c.conjugate()
        for m, cm in s.normal_form(word[::-1]).items():
            out[m] = out.get(m, 0) + cc * cm
    return UEAElement(a.alg, out)


def top_part(a: UEAElement, m: int) -> UEAElement:
    return UEAElement(a.alg, {mono: c for mono, c in a.terms.items() if a.mono_degree(mono) == m})


def dilate_uea(a: UEAElement, t: float) -> UEAElement:
    if not t > 0:
        raise ValueError(f"dilation parameter must be positive, got {t}")
    return UEAElement(a.alg, {mono: c * float(t) ** a.mono_degree(mono) for mono, c in a.terms.items()})


def rockland_laplacian(alg: GradedLieAlgebra) -> UEAElement:
    """Delta_G = -sum_j (-1)^(v/v_j) X_j^(2v/v_j) with v the lcm of generator degrees."""
    if not alg.generators:
        raise ValueError("algebra has no preferred generators")
    v = alg.lcm_generator_degree
    out = UEAElement(alg)
    for j in alg.generators:
        r = v // alg.degrees[j]
        out = out - (-1) ** r * UEAElement.basis(alg, j, 2 * r)
    return out


# --------------------------------------------------------------------------
# text form: "c · e1^k1 e2^k2 + c · ..."


def _fmt_coeff(c: complex) -> str:
    c = complex(c)
    return repr(c.real) if c.imag == 0 else repr(c)


def render(a: UEAElement) -> str:
    if not a.terms:
        return "0"
    parts = []
    for mono in sorted(a.terms, key=lambda m: (a.mono_degree(m), m)):
        factors = []
        for i, k in enumerate(mono):
            if k == 1:
                factors.append(a.alg.labels[i])
            elif k > 1:
                factors.append(f"{a.alg.labels[i]}^{k}")
        parts.append(f"{_fmt_coeff(a.terms[mono])} · {' '.join(factors) or '1'}")
    return " + ".join(parts)


_TERM_SPLIT = re.compile(r"\s\+\s")


def parse_element(text: str, alg: GradedLieAlgebra) -> UEAElement:
    """Inverse of :func:`render` (monomials need not be in PBW order)."""
    text = text.strip()
    if text == "0":
        return UEAElement(alg)
    out = UEAElement(alg)
    for part in _TERM_SPLIT.split(text):
        if "·" in part:
            coef_s, mono_s = part.split("·", 1)
        else:
            coef_s, mono_s = "1", part
        coef = complex(coef_s.strip())
        word = []
        for factor in mono_s.split():
            if factor == "1":
                continue
            lab, _, power = factor.partition("^")
            if lab not in alg.labels:
                raise ValueError(f"unknown basis label {lab!r} in {part!r}")
            word.extend([alg.index(lab)] * (int(power) if power else 1))
        out = out + coef * normal_order(alg, tuple(word))
    return out

