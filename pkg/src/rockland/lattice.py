"""Finite-difference discretisation on a coordinate torus.

A generator ``e_j`` acts on grid functions through the left-translation
flow, ``X_j u(g) ~ (u(exp(-s e_j) g) - u(exp(s e_j) g)) / 2s``, with the
off-grid values obtained by periodic multilinear interpolation.  On the
Heisenberg group and on abelian algebras the interpolation matrix of a
flow by ``delta`` is the transpose of the one for ``-delta``, so every
discrete field is exactly skew-symmetric and ``-Delta_h`` is positive
semidefinite.

Fields never depend on the top-degree (central) coordinates.  Operators
whose coefficients do not either commute with translations along those
axes, and a discrete Fourier transform along them splits every such
matrix into independent blocks.  :class:`SpectralCalculus` uses this to
diagonalise ``1 - Delta_h`` at desk scale.
"""
from __future__ import annotations

import csv
import io
import itertools
import json
import logging
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.sparse as sp

from . import expr as ex
from .covering import PartitionOfUnity
from .diffop import DiffOp
from .lie import GradedLieAlgebra, bch_multiply
from .uea import UEAElement, rockland_laplacian

log = logging.getLogger(__name__)

__all__ = [
    "Grid",
    "DiscreteOp",
    "FlowLeavesBox",
    "vector_field_op",
    "build_operator",
    "CentralFourier",
    "SpectralCalculus",
    "sobolev_norm",
    "integer_sobolev_norm",
    "interpolation_check",
    "bump_tests",
    "smooth_bump",
    "ProbeReport",
    "estimate_probe",
    "resolvent_probe",
    "scan_shift",
    "reports_to_csv",
]

SNAP = 1e-10


class FlowLeavesBox(ValueError):
    """A flow step lands outside a non-periodic grid."""


@dataclass(frozen=True, eq=False)
class Grid:
    """Uniform grid ``lo + h k`` (``k = 0 .. n-1``) on each axis of a box."""

    alg: GradedLieAlgebra
    box: np.ndarray
    shape: tuple
    periodic: bool = True

    def __post_init__(self):
        box = np.asarray(self.box, dtype=float)
        shape = tuple(int(n) for n in np.broadcast_to(self.shape, (self.alg.dim,)))
        if box.shape != (self.alg.dim, 2) or np.any(box[:, 1] <= box[:, 0]):
            raise ValueError("box must be a (dim, 2) array of increasing intervals")
        if min(shape) < 2:
            raise ValueError("need at least two points per axis")
        object.__setattr__(self, "box", box)
        object.__setattr__(self, "shape", shape)

    @classmethod
    def cube(cls, alg, half_width: float, n: int, periodic=True):
        return cls(alg, np.tile([-half_width, half_width], (alg.dim, 1)), (n,) * alg.dim, periodic)

    @property
    def h(self) -> np.ndarray:
        n = np.asarray(self.shape, dtype=float)
        span = self.box[:, 1] - self.box[:, 0]
        return span / n if self.periodic else span / (n - 1)

    @property
    def n_pts(self) -> int:
        return int(np.prod(self.shape))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.h))

    def axes(self):
        return [lo + h * np.arange(n) for (lo, _), h, n in zip(self.box, self.h, self.shape)]

    def points(self) -> np.ndarray:
        mesh = np.meshgrid(*self.axes(), indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    def sample(self, f) -> np.ndarray:
        """Grid samples of an :class:`Expr`, a string expression or a callable."""
        if isinstance(f, str):
            f = ex.parse_expr(f, self.alg.coord_names)
        P = self.points()
        vals = f.evaluate(P) if isinstance(f, ex.Expr) else f(P)
        return np.broadcast_to(np.asarray(vals, dtype=complex), (len(P),)).copy()

    def inner(self, u, w) -> complex:
        return complex(np.vdot(u, w) * self.cell_volume)

    def norm(self, u) -> float:
        return float(np.linalg.norm(u) * np.sqrt(self.cell_volume))

    def describe(self) -> dict:
        return {"box": self.box.tolist(), "shape": list(self.shape), "periodic": self.periodic}


@dataclass(frozen=True, eq=False)
class DiscreteOp:
    grid: Grid
    matrix: sp.csr_matrix
    order: int = 0

    def __call__(self, u):
        return self.matrix @ u

    def __matmul__(self, other):
        if isinstance(other, DiscreteOp):
            return DiscreteOp(self.grid, (self.matrix @ other.matrix).tocsr(), self.order + other.order)
        return self.matrix @ other

    def __add__(self, other):
        return DiscreteOp(self.grid, (self.matrix + other.matrix).tocsr(), max(self.order, other.order))

    def shifted(self, c: complex) -> "DiscreteOp":
        """``self + c``."""
        eye = sp.identity(self.grid.n_pts, dtype=complex, format="csr")
        return DiscreteOp(self.grid, (self.matrix + c * eye).tocsr(), self.order)

    def adjoint(self) -> "DiscreteOp":
        return DiscreteOp(self.grid, self.matrix.conj().T.tocsr(), self.order)

    def hermitian_deviation(self) -> float:
        D = self.matrix - self.matrix.conj().T
        return float(abs(D).max()) if D.nnz else 0.0

    def symmetrized(self) -> "DiscreteOp":
        return DiscreteOp(self.grid, (0.5 * (self.matrix + self.matrix.conj().T)).tocsr(), self.order)

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()


def _interpolation_matrix(grid: Grid, targets: np.ndarray) -> sp.csr_matrix:
    """Rows interpolate grid values multilinearly at ``targets``."""
    n_pts, d = targets.shape
    shape = np.asarray(grid.shape)
    pos = (targets - grid.box[:, 0]) / grid.h
    base = np.floor(pos)
    frac = pos - base
    near_up = frac > 1.0 - SNAP
    base[near_up] += 1
    frac[near_up] = 0.0
    frac[frac < SNAP] = 0.0
    base = base.astype(np.int64)
    if grid.periodic:
        base %= shape
    elif np.any(base < 0) or np.any(base + (frac > 0) > shape - 1):
        raise FlowLeavesBox("flow step leaves the grid box; use a periodic grid or a smaller region")

    rows, cols, vals = [], [], []
    strides = np.cumprod((list(shape[1:]) + [1])[::-1])[::-1]
    row_idx = np.arange(n_pts)
    for corner in itertools.product((0, 1), repeat=d):
        c = np.asarray(corner)
        w = np.prod(np.where(c == 1, frac, 1.0 - frac), axis=1)
        keep = w != 0.0
        idx = base[keep] + c
        if grid.periodic:
            idx %= shape
        rows.append(row_idx[keep])
        cols.append(idx @ strides)
        vals.append(w[keep])
    M = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n_pts, n_pts)
    )
    return M.tocsr()


def vector_field_op(alg: GradedLieAlgebra, grid: Grid, j: int, step: float | None = None) -> DiscreteOp:
    """Central difference of ``u(exp(-s e_j) g)`` at ``s = 0``; the default step is the grid spacing on axis ``j``."""
    s = float(grid.h[j]) if step is None else float(step)
    P = grid.points()
    e = np.zeros(alg.dim)
    e[j] = s
    back = _interpolation_matrix(grid, bch_multiply(alg, -e, P))
    fwd = _interpolation_matrix(grid, bch_multiply(alg, e, P))
    M = ((back - fwd) / (2.0 * s)).astype(complex)
    M.eliminate_zeros()
    return DiscreteOp(grid, M.tocsr(), alg.degrees[j])


def _field_cache(grid):
    # one cache per grid object
    cache = grid.__dict__.get("_fields")
    if cache is None:
        cache = {}
        object.__setattr__(grid, "_fields", cache)
    return cache


def _field(grid: Grid, j: int) -> sp.csr_matrix:
    cache = _field_cache(grid)
    if j not in cache:
        cache[j] = vector_field_op(grid.alg, grid, j).matrix
    return cache[j]


def build_operator(P, grid: Grid) -> DiscreteOp:
    """Realise ``sum M_a X^alpha`` as a sparse matrix (rightmost letter acts first)."""
    if isinstance(P, UEAElement):
        P = DiffOp.from_uea(P)
    if not P.alg.same_as(grid.alg):
        raise ValueError("operator and grid use different algebras")
    pts = grid.points()
    n = grid.n_pts
    total = sp.csr_matrix((n, n), dtype=complex)
    words: dict = {(): sp.identity(n, dtype=complex, format="csr")}

    def word_matrix(w):
        if w not in words:
            words[w] = (_field(grid, w[0]) @ word_matrix(w[1:])).tocsr()
        return words[w]

    for a, w in P.terms:
        coeff = np.broadcast_to(np.asarray(a.evaluate(pts), dtype=complex), (n,))
        total = total + sp.diags(coeff) @ word_matrix(tuple(w))
    total = total.tocsr()
    total.eliminate_zeros()
    return DiscreteOp(grid, total, P.order)


# --------------------------------------------------------------------------
# block diagonalisation along central axes


class CentralFourier:
    """Discrete Fourier transform along the top-degree axes of a periodic grid."""

    def __init__(self, grid: Grid):
        self.grid = grid
        top = max(grid.alg.degrees)
        axes = [i for i, k in enumerate(grid.alg.degrees) if k == top] if grid.periodic else []
        if len(axes) == grid.alg.dim:
            axes = axes[1:]  # keep at least one axis inside the blocks
        self.axes = tuple(axes)
        self.outer_shape = tuple(n for i, n in enumerate(grid.shape) if i not in self.axes)
        self.central_shape = tuple(grid.shape[i] for i in self.axes)
        self.P = int(np.prod(self.outer_shape))
        self.K = int(np.prod(self.central_shape)) if self.axes else 1

    def _order(self):
        rest = [i for i in range(self.grid.alg.dim) if i not in self.axes]
        return rest + list(self.axes)

    def forward(self, u) -> np.ndarray:
        """Grid function -> ``(K, P)`` array of Fourier coefficients (unitary)."""
        U = np.asarray(u, dtype=complex).reshape(self.grid.shape).transpose(self._order())
        U = U.reshape((self.P,) + self.central_shape)
        if self.axes:
            U = np.fft.fftn(U, axes=tuple(range(1, U.ndim)), norm="ortho")
        return U.reshape(self.P, self.K).T.copy()

    def inverse(self, U) -> np.ndarray:
        U = np.asarray(U).T.reshape((self.P,) + self.central_shape)
        if self.axes:
            U = np.fft.ifftn(U, axes=tuple(range(1, U.ndim)), norm="ortho")
        shape_perm = [self.grid.shape[i] for i in self._order()]
        U = U.reshape(shape_perm)
        return U.transpose(np.argsort(self._order())).reshape(-1)

    def commutes(self, A, seed=0, tol=1e-10) -> bool:
        """Whether ``A`` commutes with the unit translation along every central axis."""
        if not self.axes:
            return True
        M = A.matrix if isinstance(A, DiscreteOp) else A
        rng = np.random.default_rng(seed)
        u = rng.standard_normal(self.grid.n_pts) + 0j
        scale = max(float(np.linalg.norm(M @ u)), 1.0)
        for ax in self.axes:
            def shift(v):
                return np.roll(v.reshape(self.grid.shape), 1, axis=ax).reshape(-1)

            if np.linalg.norm(shift(M @ u) - M @ shift(u)) > tol * scale:
                return False
        return True

    def blocks(self, A) -> np.ndarray:
        """``(K, P, P)`` blocks with ``(A u)^_k = A_k u^_k``."""
        M = A.matrix if isinstance(A, DiscreteOp) else A
        M = sp.csr_matrix(M)
        perm = self._permutation()
        M = M[perm][:, perm]
        if not self.axes:
            return M.toarray()[None]
        K = self.K
        rows = np.arange(self.P) * K  # central multi-index 0 for every outer index
        R = M[rows].toarray().reshape((self.P, self.P) + self.central_shape)
        caxes = tuple(range(2, R.ndim))
        B = np.fft.ifftn(R, axes=caxes) * K  # sum_r a(r) e^{+2 pi i k.r/n}
        return np.moveaxis(B.reshape(self.P, self.P, K), 2, 0)

    def _permutation(self):
        idx = np.arange(self.grid.n_pts).reshape(self.grid.shape).transpose(self._order())
        return idx.reshape(-1)


class SpectralCalculus:
    """Spectral functions of ``A = 1 - Delta_h`` on a grid.

    ``power(u, a)`` applies ``A^a``; the Sobolev norm of order ``s`` is
    ``||A^{s/2v} u||`` with ``2v`` the degree of the Rockland operator.
    """

    def __init__(self, grid: Grid, laplacian: DiscreteOp | None = None):
        alg = grid.alg
        self.grid = grid
        self.v = alg.lcm_generator_degree
        lap = laplacian if laplacian is not None else build_operator(rockland_laplacian(alg), grid)
        self.laplacian = lap
        self.A = DiscreteOp(grid, (sp.identity(grid.n_pts, dtype=complex, format="csr") - lap.matrix).tocsr(), 0)
        self.fourier = CentralFourier(grid)
        if not self.fourier.commutes(self.A):
            log.info("1 - Delta_h does not commute with central translations; using one dense block")
            self.fourier.axes = ()
            self.fourier.outer_shape = grid.shape
            self.fourier.central_shape = ()
            self.fourier.P, self.fourier.K = grid.n_pts, 1
        blocks = self.fourier.blocks(self.A)
        blocks = 0.5 * (blocks + np.conj(np.swapaxes(blocks, 1, 2)))
        self.eigvals, self.eigvecs = np.linalg.eigh(blocks)
        self._eigvecs_h = np.ascontiguousarray(np.conj(np.swapaxes(self.eigvecs, 1, 2)))
        if np.min(self.eigvals) < 1.0 - 1e-8:
            raise ValueError(f"1 - Delta_h is not >= 1 (least eigenvalue {np.min(self.eigvals):.3e})")

    @property
    def mu(self) -> np.ndarray:
        """Eigenvalues of ``-Delta_h`` (all blocks, flattened)."""
        return (self.eigvals - 1.0).ravel()

    def apply(self, u, f) -> np.ndarray:
        """``f(A) u`` for a vectorised scalar function ``f``."""
        U = self.fourier.forward(u)
        coef = self._coefficients(U)
        out = np.matmul(self.eigvecs, (f(self.eigvals) * coef)[..., None])[..., 0]
        return self.fourier.inverse(out)

    def _coefficients(self, U):
        return np.matmul(self._eigvecs_h, U[..., None])[..., 0]

    def power(self, u, a: float) -> np.ndarray:
        if a == 0:
            return np.array(u, dtype=complex, copy=True)
        return self.apply(u, lambda w: w**a)

    def spectral_weights(self, u) -> tuple:
        """Eigenvalues of ``A`` and ``|<phi, u>|^2 * cell volume`` (the spectral measure of ``u``)."""
        U = self.fourier.forward(u)
        coef = self._coefficients(U)
        return self.eigvals.ravel(), (np.abs(coef) ** 2).ravel() * self.grid.cell_volume

    def sobolev_norm(self, u, s: float) -> float:
        w, m = self.spectral_weights(u)
        return float(np.sqrt(np.sum(m * w ** (s / self.v))))

    def block_operator(self, op: DiscreteOp) -> np.ndarray:
        if not self.fourier.commutes(op):
            raise ValueError("operator does not commute with central translations; no block form")
        return self.fourier.blocks(op)

    def sigma_min(self, op: DiscreteOp, left: float, right: float) -> float:
        """``sigma_min(A^{left} op A^{right})`` via the blocks."""
        B = self.block_operator(op)
        V, w = self.eigvecs, self.eigvals
        VH = np.conj(np.swapaxes(V, 1, 2))
        inner = VH @ B @ V
        S = (w[:, :, None] ** left) * inner * (w[:, None, :] ** right)
        return float(min(np.linalg.svd(Sk, compute_uv=False)[-1] for Sk in S))


def sobolev_norm(calc: SpectralCalculus, u, s: float, variant: str = "spectral") -> float:
    if variant == "spectral":
        return calc.sobolev_norm(u, s)
    if variant == "integer":
        return integer_sobolev_norm(calc.grid, u, s)
    raise ValueError(f"unknown Sobolev variant {variant!r}")


def _generator_words(alg, max_len):
    words = [()]
    frontier = [()]
    while frontier:
        nxt = []
        for w in frontier:
            for j in alg.generators:
                ww = w + (j,)
                if sum(alg.degrees[i] for i in ww) <= max_len:
                    nxt.append(ww)
        words.extend(nxt)
        frontier = nxt
    return words


def integer_sobolev_norm(grid: Grid, u, s: float) -> float:
    """``(sum_{len(alpha) <= s} ||X^alpha u||^2)^{1/2}`` over generator words; ``s`` must be a multiple of ``2v``."""
    v = grid.alg.lcm_generator_degree
    if s < 0 or s != int(s) or int(s) % (2 * v):
        raise ValueError(f"integer Sobolev order must be a nonnegative multiple of {2 * v}, got {s}")
    cache = {(): np.asarray(u, dtype=complex)}
    total = 0.0
    for w in _generator_words(grid.alg, int(s)):
        if w not in cache:
            cache[w] = _field(grid, w[0]) @ cache[w[1:]]
        total += grid.norm(cache[w]) ** 2
    return float(np.sqrt(total))


def interpolation_check(calc: SpectralCalculus, u, s0: float, s1: float, theta: float, rtol: float = 1e-12) -> bool:
    """``||u||_{s_theta} <= ||u||_{s0}^{1-theta} ||u||_{s1}^theta`` with ``s_theta = (1-theta)s0 + theta s1``."""
    if not 0 < theta < 1:
        raise ValueError("theta must lie strictly between 0 and 1")
    st = (1 - theta) * s0 + theta * s1
    lhs = calc.sobolev_norm(u, st)
    rhs = calc.sobolev_norm(u, s0) ** (1 - theta) * calc.sobolev_norm(u, s1) ** theta
    return bool(lhs <= rhs * (1 + rtol))


# --------------------------------------------------------------------------
# probes


def smooth_bump(z):
    """``exp(1 - 1/(1 - z))`` for ``z < 1`` and 0 beyond: equal to 1 at the centre, C-infinity at the edge."""
    z = np.asarray(z, dtype=float)
    inside = z < 1.0
    with np.errstate(divide="ignore", over="ignore"):
        return np.where(inside, np.exp(1.0 - 1.0 / np.where(inside, 1.0 - z, 1.0)), 0.0)


def bump_tests(grid: Grid, n: int, seed: int = 0, support=None, n_bumps: int = 3, radius=(1.5, 2.5)) -> list:
    """Random combinations of smooth compactly supported bumps.

    Each bump is :func:`smooth_bump` of ``sum ((g - c)/r)^2`` with a random
    centre, per-axis radii drawn from ``radius`` and a complex amplitude.
    ``support`` (a ``(dim, 2)`` box) defaults to the middle three quarters
    of the grid box on every axis, which keeps every bump away from the
    periodic seam; radii are clipped so each bump fits inside it.
    """
    rng = np.random.default_rng(seed)
    box = grid.box
    if support is None:
        mid = box.mean(axis=1)
        half = 0.375 * (box[:, 1] - box[:, 0])
        support = np.stack([mid - half, mid + half], axis=1)
    support = np.asarray(support, dtype=float)
    P = grid.points()
    tests = []
    for _ in range(n):
        u = np.zeros(grid.n_pts, dtype=complex)
        for _ in range(n_bumps):
            r = rng.uniform(*radius, size=grid.alg.dim)
            r = np.minimum(r, 0.5 * (support[:, 1] - support[:, 0]))
            c = rng.uniform(support[:, 0] + r, support[:, 1] - r)
            z = np.sum(((P - c) / r) ** 2, axis=1)
            amp = rng.standard_normal() + 1j * rng.standard_normal()
            u += amp * smooth_bump(z)
        tests.append(u)
    return tests


@dataclass
class ProbeReport:
    mode: str
    s: float
    c: float | None
    grid: list
    min_ratio: float
    max_ratio: float
    seed: int
    witnesses: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    def row(self) -> dict:
        return {
            "mode": self.mode,
            "s": self.s,
            "c": "" if self.c is None else self.c,
            "grid": "x".join(str(n) for n in self.grid),
            "min_ratio": f"{self.min_ratio:.12g}",
            "max_ratio": f"{self.max_ratio:.12g}",
        }

    def to_dict(self) -> dict:
        return asdict(self)


CSV_FIELDS = ["mode", "s", "c", "grid", "min_ratio", "max_ratio"]


def reports_to_csv(reports) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CSV_FIELDS, lineterminator="\n")
    w.writeheader()
    for r in reports:
        w.writerow(r.row())
    return buf.getvalue()


def _hermitian(op: DiscreteOp, mode: str):
    dev = op.hermitian_deviation()
    if dev > 0:
        log.info("%s probe: symmetrising operator (max |P - P^H| = %.3e)", mode, dev)
        op = op.symmetrized()
    return op, dev


def estimate_probe(
    mode: str,
    P,
    calc: SpectralCalculus,
    s: float = 0.0,
    c: float | None = None,
    partition: PartitionOfUnity | None = None,
    tests=None,
    seed: int = 0,
    n_tests: int = 20,
    grid_bound: bool = False,
) -> ProbeReport:
    """Empirical constants of the forward, backward and localisation estimates.

    forward
        ``||(P_h + ic) u||_{W^s} / ||u||_{W^{s+m}}``
    backward
        ``||(P_h + ic) u||_{W^{s-m}} / ||u||_{W^s}``
    localization
        ``(sum_n ||psi_n u||_{W^s}^2)^{1/2} / ||u||_{W^s}``

    The minimum and maximum over the test set are reported together with
    the index of the test attaining each.  With ``grid_bound`` the forward
    and backward modes also report the smallest singular value of the
    whole-grid operator in the matching weighted norms.
    """
    grid = calc.grid
    if tests is None:
        tests = bump_tests(grid, n_tests, seed)
    extra: dict = {}
    if mode in ("forward", "backward"):
        if c is None:
            raise ValueError(f"{mode} probe needs a shift c")
        op = P if isinstance(P, DiscreteOp) else build_operator(P, grid)
        op, dev = _hermitian(op, mode)
        extra["hermitian_deviation"] = dev
        m = op.order
        shifted = op.shifted(1j * c)
        if mode == "forward":
            s_out, s_in = s, s + m
        else:
            s_out, s_in = s - m, s
        ratios = np.array([calc.sobolev_norm(shifted(u), s_out) / calc.sobolev_norm(u, s_in) for u in tests])
        if grid_bound:
            v2 = 2 * calc.v
            extra["grid_sigma_min"] = calc.sigma_min(shifted, s_out / v2, -s_in / v2)
    elif mode == "localization":
        if partition is None:
            raise ValueError("localization probe needs a partition of unity")
        psi = partition.psi(grid.points(), strict=False)
        ratios = []
        for u in tests:
            loc = np.sqrt(sum(calc.sobolev_norm(psi[:, n] * u, s) ** 2 for n in range(psi.shape[1]) if np.any(psi[:, n] * u)))
            ratios.append(loc / calc.sobolev_norm(u, s))
        ratios = np.array(ratios)
        extra["constant"] = float(max(np.max(ratios), 1.0 / np.min(ratios)))
    else:
        raise ValueError(f"unknown probe mode {mode!r}")
    return ProbeReport(
        mode=mode,
        s=float(s),
        c=None if c is None else float(c),
        grid=list(grid.shape),
        min_ratio=float(np.min(ratios)),
        max_ratio=float(np.max(ratios)),
        seed=int(seed),
        witnesses={"argmin": int(np.argmin(ratios)), "argmax": int(np.argmax(ratios))},
        extra=extra,
    )


def scan_shift(mode: str, P, calc: SpectralCalculus, c_values, target: float, **kwargs) -> tuple:
    """Run ``estimate_probe`` over shifts ``c_values`` and find the smallest admissible one.

    A shift is admissible when the probe's ``min_ratio`` is at least
    ``target`` for it and for every larger shift in the scan.  Returns the
    reports (in increasing ``c``) and that shift, or ``None``.  This is an
    empirical threshold on one grid and test set, not a bound on the true
    one.
    """
    cs = sorted(float(c) for c in c_values)
    reports = [estimate_probe(mode, P, calc, c=c, **kwargs) for c in cs]
    admissible = None
    for c, r in zip(reversed(cs), reversed(reports)):
        if r.min_ratio < target:
            break
        admissible = c
    return reports, admissible


def resolvent_probe(P, c: float, b, calc: SpectralCalculus, rcond: float = 1e-12) -> dict:
    """Solve ``(P_h + ic) x = b`` blockwise and report ``||x||_{W^m} / ||b||``."""
    grid = calc.grid
    op = P if isinstance(P, DiscreteOp) else build_operator(P, grid)
    op, dev = _hermitian(op, "resolvent")
    shifted = op.shifted(1j * c)
    B = calc.block_operator(shifted)
    rhs = calc.fourier.forward(b)
    sol = np.empty_like(rhs)
    worst = np.inf
    for k in range(B.shape[0]):
        sv = np.linalg.svd(B[k], compute_uv=False)
        worst = min(worst, sv[-1] / sv[0])
        if sv[-1] <= rcond * sv[0]:
            raise np.linalg.LinAlgError(f"P_h + ic is singular to tolerance in block {k}; |c| is too small")
        sol[k] = np.linalg.solve(B[k], rhs[k])
    x = calc.fourier.inverse(sol)
    nb = grid.norm(b)
    ratio = 0.0 if nb == 0 else calc.sobolev_norm(x, op.order) / nb
    return {
        "c": float(c),
        "ratio": float(ratio),
        "residual": float(grid.norm(shifted(x) - b)),
        "hermitian_deviation": dev,
        "min_block_condition_inverse": float(worst),
        "solution": x,
    }


def report_json(reports, config: dict) -> str:
    return json.dumps({"config": config, "reports": [r.to_dict() for r in reports]}, indent=2, sort_keys=True)
