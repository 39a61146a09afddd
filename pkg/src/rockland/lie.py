"""Graded nilpotent Lie algebras and exponential-coordinate group arithmetic.

Group elements are plain ``numpy`` arrays holding exponential coordinates
``xi`` of ``exp(sum_i xi_i e_i)``; the inverse of ``xi`` is ``-xi``.  All
functions accept either a single ``(d,)`` vector or a batch ``(n, d)``.
"""
from __future__ import annotations

import itertools
import json
import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from pathlib import Path

import numpy as np

__all__ = [
    "GradedLieAlgebra",
    "Violation",
    "AlgebraSpecError",
    "validate",
    "homogeneous_dimension",
    "dilate",
    "bch_multiply",
    "inverse",
    "builtin",
    "load_algebra",
    "algebra_from_dict",
]

TOL = 1e-10


class AlgebraSpecError(ValueError):
    """Malformed algebra description."""


@dataclass(frozen=True)
class Violation:
    kind: str
    indices: tuple  # 1-based basis indices
    detail: str = ""

    def __str__(self):
        idx = ",".join(str(i) for i in self.indices)
        return f"{self.kind} at ({idx})" + (f": {self.detail}" if self.detail else "")


@dataclass(frozen=True, eq=False)
class GradedLieAlgebra:
    """Finite-dimensional graded Lie algebra with a fixed ordered basis.

    Parameters
    ----------
    labels : tuple of str
        Basis names, e.g. ``("X", "Y", "T")``.
    degrees : tuple of int
        Degree of each basis vector; the basis is reordered on construction
        so that degrees are nondecreasing (stable order within a degree).
    structure : ndarray, shape (d, d, d)
        ``structure[i, j, k]`` is the coefficient of ``e_k`` in ``[e_i, e_j]``.
    generators : tuple of int
        Basis indices of the preferred generators.
    """

    labels: tuple
    degrees: tuple
    structure: np.ndarray = field(repr=False)
    generators: tuple
    name: str = ""

    def __post_init__(self):
        d = len(self.labels)
        C = np.asarray(self.structure, dtype=complex)
        if C.shape != (d, d, d):
            raise AlgebraSpecError(f"structure table has shape {C.shape}, expected {(d, d, d)}")
        if len(self.degrees) != d:
            raise AlgebraSpecError("one degree per basis vector is required")
        if any(int(k) < 1 for k in self.degrees):
            raise AlgebraSpecError("degrees must be positive integers")
        for j in self.generators:
            if not 0 <= j < d:
                raise AlgebraSpecError(f"generator index {j} out of range")
        if len(set(self.labels)) != d:
            raise AlgebraSpecError("basis labels must be distinct")

        order = sorted(range(d), key=lambda i: self.degrees[i])
        if order != list(range(d)):
            inv = {old: new for new, old in enumerate(order)}
            C = C[np.ix_(order, order, order)]
            object.__setattr__(self, "labels", tuple(self.labels[i] for i in order))
            object.__setattr__(self, "degrees", tuple(self.degrees[i] for i in order))
            object.__setattr__(self, "generators", tuple(inv[j] for j in self.generators))
        C.setflags(write=False)
        object.__setattr__(self, "structure", C)
        object.__setattr__(self, "degrees", tuple(int(k) for k in self.degrees))
        object.__setattr__(self, "labels", tuple(str(s) for s in self.labels))
        object.__setattr__(self, "generators", tuple(int(j) for j in self.generators))
        flat = C.reshape(d * d, d)
        if not np.any(flat.imag):
            flat = flat.real.copy()
        flat.setflags(write=False)
        object.__setattr__(self, "_flat", flat)

    @property
    def dim(self) -> int:
        return len(self.labels)

    @property
    def step(self) -> int:
        return max(self.degrees)

    @property
    def coord_names(self) -> tuple:
        return tuple(s.lower() for s in self.labels)

    @property
    def degree_array(self) -> np.ndarray:
        return np.asarray(self.degrees, dtype=float)

    @property
    def lcm_generator_degree(self) -> int:
        return math.lcm(*(self.degrees[j] for j in self.generators))

    def index(self, label: str) -> int:
        return self.labels.index(label)

    def bracket(self, u, v) -> np.ndarray:
        """Lie bracket of coefficient vectors (broadcasts over leading axes)."""
        u = np.asarray(u)
        v = np.asarray(v)
        u, v = np.broadcast_arrays(u, v)
        d = self.dim
        outer = (u[..., :, None] * v[..., None, :]).reshape(u.shape[:-1] + (d * d,))
        out = outer @ self._flat
        if np.iscomplexobj(out) and not (np.iscomplexobj(u) or np.iscomplexobj(v)):
            out = out.real
        return out

    def bracket_table(self):
        """``table[a][b]`` is a tuple of ``(k, c)`` with ``[e_a, e_b] = sum c e_k``."""
        d = self.dim
        table = []
        for a in range(d):
            row = []
            for b in range(d):
                ks = np.nonzero(np.abs(self.structure[a, b]) > 0)[0]
                row.append(tuple((int(k), complex(self.structure[a, b, k])) for k in ks))
            table.append(tuple(row))
        return tuple(table)

    def same_as(self, other: "GradedLieAlgebra") -> bool:
        return (
            self is other
            or (
                self.labels == other.labels
                and self.degrees == other.degrees
                and self.generators == other.generators
                and np.array_equal(self.structure, other.structure)
            )
        )

    def __eq__(self, other):
        return isinstance(other, GradedLieAlgebra) and self.same_as(other)

    def __hash__(self):
        return hash((self.labels, self.degrees, self.generators, self.structure.tobytes()))

    def to_dict(self) -> dict:
        brackets = []
        for i in range(self.dim):
            for j in range(i + 1, self.dim):
                coeffs = {}
                for k in range(self.dim):
                    c = complex(self.structure[i, j, k])
                    if c != 0:
                        coeffs[self.labels[k]] = c.real if c.imag == 0 else [c.real, c.imag]
                if coeffs:
                    brackets.append({"i": self.labels[i], "j": self.labels[j], "coeffs": coeffs})
        return {
            "basis": list(self.labels),
            "degrees": list(self.degrees),
            "brackets": brackets,
            "generators": [self.labels[j] for j in self.generators],
        }


def _from_brackets(labels, degrees, brackets, generators, name=""):
    d = len(labels)
    C = np.zeros((d, d, d), dtype=complex)
    for (i, j), coeffs in brackets.items():
        for k, c in coeffs.items():
            C[i, j, k] += c
            C[j, i, k] -= c
    return GradedLieAlgebra(tuple(labels), tuple(degrees), C, tuple(generators), name)


# --------------------------------------------------------------------------
# validation


def _span_rank(vectors) -> int:
    if not vectors:
        return 0
    return int(np.linalg.matrix_rank(np.array(vectors), tol=1e-9))


def validate(alg: GradedLieAlgebra) -> list:
    """Return the list of violated Lie/grading/generator axioms (empty if valid)."""
    C = alg.structure
    d = alg.dim
    out = []
    for i, j, k in itertools.product(range(d), repeat=3):
        if abs(C[i, j, k] + C[j, i, k]) > TOL:
            if i <= j:
                out.append(Violation("antisymmetry", (i + 1, j + 1, k + 1)))
    for i, j, k in itertools.product(range(d), repeat=3):
        if abs(C[i, j, k]) > TOL and alg.degrees[k] != alg.degrees[i] + alg.degrees[j]:
            if i < j or abs(C[j, i, k]) <= TOL:
                out.append(
                    Violation(
                        "grading",
                        (i + 1, j + 1, k + 1),
                        f"deg {alg.degrees[k]} != {alg.degrees[i]}+{alg.degrees[j]}",
                    )
                )
    # Jacobi: [e_i,[e_j,e_k]] + [e_j,[e_k,e_i]] + [e_k,[e_i,e_j]] = 0
    jac = (
        np.einsum("jkm,iml->ijkl", C, C)
        + np.einsum("kim,jml->ijkl", C, C)
        + np.einsum("ijm,kml->ijkl", C, C)
    )
    for i, j, k in itertools.combinations(range(d), 3):
        if np.max(np.abs(jac[i, j, k])) > TOL:
            out.append(Violation("jacobi", (i + 1, j + 1, k + 1)))
    gens = list(alg.generators)
    if len(set(gens)) != len(gens):
        out.append(Violation("generators", tuple(j + 1 for j in gens), "repeated generator"))
    # iterated brackets of generators must span g
    eye = np.eye(d)
    span = [eye[j] for j in gens]
    layer = list(span)
    for _ in range(alg.step):
        new = []
        for u in layer:
            for j in gens:
                w = alg.bracket(eye[j].astype(complex), u.astype(complex))
                if np.max(np.abs(w)) > TOL:
                    new.append(w)
        layer = new
        span.extend(new)
        if not layer:
            break
    if _span_rank(span) < d:
        missing = []
        for k in range(d):
            if _span_rank(span + [eye[k]]) > _span_rank(span):
                missing.append(k + 1)
        out.append(Violation("generators", tuple(missing), "not generated by preferred generators"))
    return out


def homogeneous_dimension(alg: GradedLieAlgebra) -> int:
    return int(sum(alg.degrees))


def dilate(alg: GradedLieAlgebra, t: float, v):
    """Apply the dilation ``delta_t`` (scale the V_j component by ``t**j``)."""
    if not t > 0:
        raise ValueError(f"dilation parameter must be positive, got {t}")
    v = np.asarray(v)
    return v * float(t) ** alg.degree_array


def inverse(g):
    return -np.asarray(g)


# --------------------------------------------------------------------------
# Baker-Campbell-Hausdorff via the Dynkin series


@lru_cache(maxsize=None)
def _dynkin_terms(order: int):
    """Coefficients of right-nested brackets in log(e^X e^Y) up to ``order``.

    Returns a tuple of ``(word, coefficient)`` where ``word`` is a tuple over
    {0: X, 1: Y} read as [w1,[w2,[...,w_k]]].
    """
    acc: dict = {}
    pairs = [(r, s) for r in range(order + 1) for s in range(order + 1) if 0 < r + s <= order]
    for n in range(1, order + 1):
        for seq in itertools.product(pairs, repeat=n):
            total = sum(r + s for r, s in seq)
            if total > order:
                continue
            denom = total
            for r, s in seq:
                denom *= math.factorial(r) * math.factorial(s)
            coef = Fraction((-1) ** (n - 1), n * denom)
            word = []
            for r, s in seq:
                word.extend([0] * r + [1] * s)
            word = tuple(word)
            if len(word) > 1 and word[-1] == word[-2]:
                continue  # innermost bracket vanishes
            acc[word] = acc.get(word, 0) + coef
    return tuple((w, float(c)) for w, c in sorted(acc.items()) if c != 0)


def _nested(alg, word, X, Y):
    vecs = (X, Y)
    out = vecs[word[-1]]
    for letter in reversed(word[:-1]):
        out = alg.bracket(vecs[letter], out)
    return out


def bch_multiply(alg: GradedLieAlgebra, g1, g2):
    """Group product in exponential coordinates, ``log(exp(g1) exp(g2))``.

    The Dynkin series is truncated at the top degree of the grading, which is
    exact because brackets of more than ``step`` elements vanish.
    """
    X = np.asarray(g1, dtype=float)
    Y = np.asarray(g2, dtype=float)
    X, Y = np.broadcast_arrays(X, Y)
    out = np.zeros(X.shape, dtype=float)
    for word, coef in _dynkin_terms(alg.step):
        out = out + coef * _nested(alg, word, X, Y)
    return out


# --------------------------------------------------------------------------
# builtins and JSON spec files


def _heisenberg1():
    return _from_brackets(("X", "Y", "T"), (1, 1, 2), {(0, 1): {2: 1}}, (0, 1), "heisenberg1")


def _engel():
    return _from_brackets(
        ("X1", "X2", "X3", "X4"),
        (1, 1, 2, 3),
        {(0, 1): {2: 1}, (0, 2): {3: 1}},
        (0, 1),
        "engel",
    )


def _abelian(d, degrees):
    if len(degrees) != d:
        raise AlgebraSpecError(f"abelian({d}, ...) needs {d} degrees")
    labels = tuple(f"X{i + 1}" for i in range(d))
    return _from_brackets(labels, tuple(degrees), {}, tuple(range(d)), f"abelian({d},{tuple(degrees)})")


_ABELIAN_RE = re.compile(r"^abelian\(\s*(\d+)\s*(?:,\s*\(?([\d,\s]*)\)?\s*)?\)$")


def builtin(name: str) -> GradedLieAlgebra:
    """Built-in algebras: heisenberg1, engel, anisotropic_plane, abelian(d,(k1,..))."""
    key = name.strip().lower()
    if key in ("heisenberg1", "heisenberg", "h1"):
        return _heisenberg1()
    if key == "engel":
        return _engel()
    if key == "anisotropic_plane":
        alg = _abelian(2, (1, 2))
        object.__setattr__(alg, "name", "anisotropic_plane")
        return alg
    m = _ABELIAN_RE.match(key)
    if m:
        d = int(m.group(1))
        if m.group(2) and m.group(2).strip():
            degrees = tuple(int(s) for s in m.group(2).split(",") if s.strip())
        else:
            degrees = (1,) * d
        return _abelian(d, degrees)
    raise AlgebraSpecError(f"unknown builtin algebra {name!r}")


def _parse_coeff(c):
    if isinstance(c, (list, tuple)):
        if len(c) != 2:
            raise AlgebraSpecError(f"complex coefficient must be [re, im], got {c!r}")
        return complex(float(c[0]), float(c[1]))
    if isinstance(c, str):
        return complex(c.replace(" ", ""))
    return complex(c)


def algebra_from_dict(spec: dict, name: str = "") -> GradedLieAlgebra:
    """Build an algebra from the JSON layout.

    Bracket and generator references may be basis labels or 0-based indices.
    """
    try:
        labels = [str(s) for s in spec["basis"]]
        degrees = [int(k) for k in spec["degrees"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise AlgebraSpecError(f"missing or malformed 'basis'/'degrees': {exc}") from None
    d = len(labels)

    def ref(x, what):
        if isinstance(x, str) and x in labels:
            return labels.index(x)
        if isinstance(x, int) and not isinstance(x, bool) and 0 <= x < d:
            return x
        raise AlgebraSpecError(f"{what} refers to unknown basis element {x!r}")

    table: dict = {}
    for n, entry in enumerate(spec.get("brackets", [])):
        try:
            i = ref(entry["i"], f"brackets[{n}].i")
            j = ref(entry["j"], f"brackets[{n}].j")
            coeffs = {ref(k, f"brackets[{n}].coeffs"): _parse_coeff(c) for k, c in entry["coeffs"].items()}
        except (KeyError, TypeError) as exc:
            raise AlgebraSpecError(f"brackets[{n}] malformed: {exc}") from None
        if i == j and any(c != 0 for c in coeffs.values()):
            raise AlgebraSpecError(f"brackets[{n}]: [e,e] must vanish (antisymmetry)")
        table.setdefault((i, j), {})
        for k, c in coeffs.items():
            table[(i, j)][k] = table[(i, j)].get(k, 0) + c
    for (i, j), coeffs in table.items():
        if (j, i) in table and i < j:
            other = table[(j, i)]
            keys = set(coeffs) | set(other)
            if any(abs(coeffs.get(k, 0) + other.get(k, 0)) > TOL for k in keys):
                raise AlgebraSpecError(
                    f"brackets for ({labels[i]},{labels[j]}) and ({labels[j]},{labels[i]}) are not antisymmetric"
                )
    C = np.zeros((d, d, d), dtype=complex)
    for (i, j), coeffs in table.items():
        for k, c in coeffs.items():
            C[i, j, k] = c
            C[j, i, k] = -c
    gens = [ref(g, "generators") for g in spec.get("generators", [])]
    return GradedLieAlgebra(tuple(labels), tuple(degrees), C, tuple(gens), name or spec.get("name", ""))


def load_algebra(source) -> GradedLieAlgebra:
    """Load from a JSON file path, or fall back to a builtin name."""
    path = Path(str(source))
    if path.suffix == ".json" or path.exists():
        try:
            text = path.read_text()
        except OSError as exc:
            raise AlgebraSpecError(f"{path}: cannot read ({exc.strerror})") from None
        try:
            spec = json.loads(text)
        except json.JSONDecodeError as exc:
            raise AlgebraSpecError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
        try:
            return algebra_from_dict(spec, name=path.stem)
        except AlgebraSpecError as exc:
            raise AlgebraSpecError(f"{path}: {exc}") from None
    return builtin(str(source))
