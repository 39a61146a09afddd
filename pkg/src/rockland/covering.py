"""Homogeneous norm, greedy epsilon-nets and a squared partition of unity.

The norm is the even-power block gauge

    |g| = (sum_j ||g_j||_2^(M/j))^(1/M),   M = 2 lcm(1, ..., step),

where ``g_j`` collects the exponential coordinates of degree ``j``.  Every
exponent ``M/j`` is even, so ``|g|^M`` is a polynomial and the bump built on
it is smooth.  Inversion in exponential coordinates is ``g -> -g``, which
makes the norm symmetric for free.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import reduce

import numpy as np

from .lie import GradedLieAlgebra, bch_multiply, homogeneous_dimension, inverse

__all__ = [
    "BudgetExceeded",
    "OutsideCoveredRegion",
    "norm_exponent",
    "homogeneous_norm",
    "dist",
    "greedy_net",
    "overlap_counts",
    "smooth_step",
    "bump",
    "PartitionOfUnity",
    "build_partition",
    "load_partition",
]


class BudgetExceeded(ValueError):
    """The candidate lattice for a net would exceed the configured size."""


class OutsideCoveredRegion(ValueError):
    """A partition was evaluated where no centre is within ``eps``."""


def norm_exponent(alg: GradedLieAlgebra) -> int:
    return 2 * reduce(math.lcm, range(1, alg.step + 1), 1)


def _norm_power(alg: GradedLieAlgebra, g) -> np.ndarray:
    """``|g|^M`` as a polynomial in the coordinates (batched over leading axes)."""
    g = np.asarray(g, dtype=float)
    M = norm_exponent(alg)
    deg = alg.degree_array
    total = np.zeros(g.shape[:-1])
    for j in sorted(set(alg.degrees)):
        block = g[..., deg == j]
        sq = np.sum(block * block, axis=-1)
        total = total + sq ** (M // (2 * j))
    return total


def homogeneous_norm(alg: GradedLieAlgebra, g) -> np.ndarray | float:
    out = _norm_power(alg, g) ** (1.0 / norm_exponent(alg))
    return float(out) if np.ndim(out) == 0 else out


def dist(alg: GradedLieAlgebra, g1, g2):
    """Right-invariant distance ``|g1 g2^{-1}|``."""
    return homogeneous_norm(alg, bch_multiply(alg, g1, inverse(g2)))


def _as_box(alg, box):
    box = np.asarray(box, dtype=float)
    if box.shape != (alg.dim, 2):
        raise ValueError(f"box must have shape ({alg.dim}, 2), got {box.shape}")
    if np.any(box[:, 1] < box[:, 0]):
        raise ValueError("box has an empty side")
    return box


def _lattice(box, pitch):
    axes = []
    for lo, hi in box:
        n = int(math.floor((hi - lo) / pitch + 1e-9)) + 1
        axes.append(lo + pitch * np.arange(n))
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=-1)


def greedy_net(
    alg: GradedLieAlgebra,
    box,
    eps: float,
    seed: int = 0,
    budget: int = 500_000,
    repair_samples: int = 200_000,
    max_repair_rounds: int = 10,
) -> np.ndarray:
    """Maximal ``eps``-separated set of points in ``box``.

    Candidates are the lattice of pitch ``eps/4`` in the box, visited in a
    seeded random order; a candidate is kept when it is at distance
    ``>= eps`` from every kept point.  The lattice alone can leave small
    gaps, because a lattice point within ``eps`` of a centre says little
    about its off-lattice neighbours along the sheared top-degree axes.
    Gaps are filled from a lattice of half the pitch and then from rounds
    of fresh uniform samples, each followed by a hill climb of the distance
    to the nearest centre started from the samples closest to the edge of
    the union of balls; the rounds stop after the first that finds no gap.  Every added point is farther than ``eps`` from all centres, so
    the separation is kept.
    """
    if not eps > 0:
        raise ValueError(f"eps must be positive, got {eps}")
    box = _as_box(alg, box)
    pitch = eps / 4.0
    counts = np.floor((box[:, 1] - box[:, 0]) / pitch + 1e-9) + 1
    n_cand = float(np.prod(counts))
    if n_cand > budget:
        raise BudgetExceeded(f"{int(n_cand)} candidates exceed the budget of {budget}; increase eps or budget")
    rng = np.random.default_rng(seed)
    cand = _lattice(box, pitch)
    cand = cand[rng.permutation(len(cand))]

    first = np.flatnonzero(alg.degree_array == 1)
    offsets = [np.array(o) - 1 for o in np.ndindex(*(3,) * len(first))]
    cells: dict = {}
    centers = np.empty((len(cand), alg.dim))
    n = 0

    def try_add(p):
        nonlocal n
        key = np.floor(p[first] / eps).astype(int)
        near = []
        for o in offsets:
            near.extend(cells.get(tuple(key + o), ()))
        if near and np.min(dist(alg, centers[near], p)) < eps:
            return
        if n == len(centers):
            centers.resize((2 * n, alg.dim), refcheck=False)
        centers[n] = p
        cells.setdefault(tuple(key), []).append(n)
        n += 1

    def fill(points):
        gaps = np.flatnonzero(_nearest_within(alg, points, centers[:n], eps) >= eps)
        for k in gaps:
            try_add(points[k])
        return gaps.size

    for p in cand:
        try_add(p)
    if n_cand * 2 ** len(box) <= budget:
        fill(_lattice(box, pitch / 2))
    for _ in range(max_repair_rounds if repair_samples else 0):
        samples = box[:, 0] + (box[:, 1] - box[:, 0]) * rng.random((repair_samples, alg.dim))
        d = _nearest_within(alg, samples, centers[:n], eps)
        found = fill(samples[d >= eps])
        # holes left between balls are local maxima of the distance to the
        # nearest centre; climb from the samples closest to the edge
        near_edge = np.argsort(-np.where(d < eps, d, -np.inf))[: max(1, repair_samples // 50)]
        found += fill(_climb(alg, box, samples[near_edge], centers[:n], eps, rng))
        if found == 0:
            break
    return centers[:n].copy()


def _climb(alg, box, starts, centers, eps, rng, iters=40):
    """Stochastic hill climb of the distance to the nearest centre, inside ``box``."""
    x = np.array(starts, dtype=float)
    fx = _nearest_within(alg, x, centers, eps)
    step = 0.2 * eps
    deg = alg.degree_array
    for _ in range(iters):
        z = rng.standard_normal(x.shape) * step**deg
        y = np.clip(x + z, box[:, 0], box[:, 1])
        fy = _nearest_within(alg, y, centers, eps)
        up = fy > fx
        x[up], fx[up] = y[up], fy[up]
        step *= 0.85
    return x


def _nearest_within(alg, points, centers, radius: float) -> np.ndarray:
    """Distance from each point to its nearest centre, exact whenever it is below ``radius``.

    The degree-one block of ``g c^{-1}`` is ``g_1 - c_1`` and
    ``|g| >= ||g_1||``, so only centres whose degree-one coordinates fall in
    neighbouring ``radius``-cells can be closer than ``radius``; points
    with no such centre get ``inf``.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    out = np.full(len(points), np.inf)
    if not len(centers):
        return out
    first = np.flatnonzero(alg.degree_array == 1)
    offsets = [np.array(o) - 1 for o in np.ndindex(*(3,) * len(first))]
    buckets: dict = {}
    for i, key in enumerate(map(tuple, np.floor(centers[:, first] / radius).astype(int))):
        buckets.setdefault(key, []).append(i)
    keys, inv = np.unique(np.floor(points[:, first] / radius).astype(int), axis=0, return_inverse=True)
    inv = inv.ravel()
    order = np.argsort(inv, kind="stable")
    bounds = np.searchsorted(inv[order], np.arange(len(keys) + 1))
    inv_centers = inverse(centers)
    for u, key in enumerate(keys):
        near = [i for o in offsets for i in buckets.get(tuple(key + o), ())]
        if not near:
            continue
        idx = order[bounds[u] : bounds[u + 1]]
        for s in range(0, len(idx), 8192):
            chunk = idx[s : s + 8192]
            g = bch_multiply(alg, points[chunk, None, :], inv_centers[None, near, :])
            out[chunk] = np.min(homogeneous_norm(alg, g), axis=1)
    return out


def overlap_counts(alg: GradedLieAlgebra, centers, radius: float) -> np.ndarray:
    """For each centre, how many balls ``B(g_m, radius)`` (itself included) meet ``B(g_n, radius)``.

    Two balls are counted as meeting when their centres are closer than
    ``2 * radius``.
    """
    centers = np.asarray(centers, dtype=float)
    counts = np.zeros(len(centers), dtype=int)
    for n, c in enumerate(centers):
        counts[n] = int(np.count_nonzero(dist(alg, centers, c) < 2.0 * radius))
    return counts


# --------------------------------------------------------------------------
# bumps


def _glue(x):
    with np.errstate(divide="ignore", over="ignore"):
        return np.where(x > 0, np.exp(-1.0 / np.where(x > 0, x, 1.0)), 0.0)


def smooth_step(x):
    """C-infinity step: 0 for ``x <= 0``, 1 for ``x >= 1``."""
    x = np.asarray(x, dtype=float)
    a = _glue(x)
    b = _glue(1.0 - x)
    return a / (a + b)


def bump(alg: GradedLieAlgebra, g, eps: float, N: float):
    """Flat-top bump: 1 on ``|g| <= eps``, 0 on ``|g| >= N eps``."""
    if not N > 1:
        raise ValueError("the support factor N must exceed 1")
    M = norm_exponent(alg)
    r = _norm_power(alg, g)
    lo, hi = eps**M, (N * eps) ** M
    return 1.0 - smooth_step((r - lo) / (hi - lo))


@dataclass
class PartitionOfUnity:
    """Functions ``psi_n = psi(g g_n^{-1}) / sqrt(theta)`` with ``theta = sum_k psi(g g_k^{-1})^2``.

    ``theta_sq`` returns ``theta`` itself, the sum of squared bumps, which
    lies in ``[1, (4N+1)^{d_hom}]`` on the covered region.
    """

    alg: GradedLieAlgebra
    centers: np.ndarray
    eps: float
    N: float = 2.0
    box: np.ndarray | None = None
    stats: dict = field(default_factory=dict)

    def __post_init__(self):
        self.centers = np.atleast_2d(np.asarray(self.centers, dtype=float))
        if self.box is not None:
            self.box = _as_box(self.alg, self.box)

    def __len__(self):
        return len(self.centers)

    def raw(self, points) -> np.ndarray:
        """Unnormalised bumps, shape ``(n_points, n_centers)``."""
        P = np.atleast_2d(np.asarray(points, dtype=float))
        out = np.empty((len(P), len(self.centers)))
        for n, c in enumerate(self.centers):
            out[:, n] = bump(self.alg, bch_multiply(self.alg, P, inverse(c)), self.eps, self.N)
        return out

    def theta_sq(self, points) -> np.ndarray:
        return np.sum(self.raw(points) ** 2, axis=1)

    def covered(self, points) -> np.ndarray:
        """Mask of points within ``eps`` of some centre."""
        P = np.atleast_2d(np.asarray(points, dtype=float))
        return _nearest_within(self.alg, P, self.centers, self.eps) < self.eps

    def psi(self, points, strict: bool = True) -> np.ndarray:
        """Normalised ``psi_n`` at ``points``, shape ``(n_points, n_centers)``.

        With ``strict`` a point where every bump vanishes raises; otherwise
        its row is zero.
        """
        R = self.raw(points)
        th = np.sum(R * R, axis=1)
        if strict and np.any(th <= 0):
            bad = np.atleast_2d(np.asarray(points, dtype=float))[np.argmax(th <= 0)]
            raise OutsideCoveredRegion(f"no bump is supported at {bad.tolist()}")
        scale = np.where(th > 0, 1.0 / np.sqrt(np.where(th > 0, th, 1.0)), 0.0)
        return R * scale[:, None]

    def bound(self) -> float:
        return float((4 * self.N + 1) ** homogeneous_dimension(self.alg))

    def verify(self, n_samples: int = 10_000, seed: int = 0, margin: float | None = None) -> dict:
        """Check the identities on uniform samples of the interior of the box.

        ``margin`` (default ``N * eps`` on degree-one axes, its power on the
        others) is trimmed from each side so that every centre whose bump can
        reach a sample is in the net.
        """
        if self.box is None:
            raise ValueError("partition has no box to sample")
        rng = np.random.default_rng(seed)
        deg = self.alg.degree_array
        m = self.N * self.eps if margin is None else margin
        inner = self.box.copy()
        trim = np.minimum(m**deg, 0.45 * (inner[:, 1] - inner[:, 0]))
        inner[:, 0] += trim
        inner[:, 1] -= trim
        P = inner[:, 0] + (inner[:, 1] - inner[:, 0]) * rng.random((n_samples, self.alg.dim))
        cov = self.covered(P)
        th = self.theta_sq(P)
        S = np.sum(self.psi(P[cov]) ** 2, axis=1) if cov.any() else np.ones(0)
        stats = {
            "n_samples": int(n_samples),
            "n_centers": int(len(self.centers)),
            "coverage": float(np.mean(cov)),
            "max_identity_error": float(np.max(np.abs(S - 1.0), initial=0.0)),
            "theta_sq_min": float(np.min(th[cov], initial=np.inf)),
            "theta_sq_max": float(np.max(th[cov], initial=0.0)),
            "theta_sq_bound": self.bound(),
            "seed": int(seed),
        }
        stats["ok"] = bool(
            stats["coverage"] == 1.0
            and stats["max_identity_error"] < 1e-10
            and stats["theta_sq_min"] >= 1.0 - 1e-12
            and stats["theta_sq_max"] <= stats["theta_sq_bound"]
        )
        self.stats = stats
        return stats

    def to_dict(self) -> dict:
        return {
            "algebra": self.alg.to_dict(),
            "eps": self.eps,
            "N": self.N,
            "box": None if self.box is None else self.box.tolist(),
            "centers": self.centers.tolist(),
            "stats": self.stats,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def build_partition(alg: GradedLieAlgebra, centers, eps: float, N: float = 2.0, box=None) -> PartitionOfUnity:
    if not N > 1:
        raise ValueError("the support factor N must exceed 1")
    return PartitionOfUnity(alg, centers, float(eps), float(N), box)


def load_partition(path) -> PartitionOfUnity:
    from .lie import algebra_from_dict

    with open(path) as fh:
        d = json.load(fh)
    alg = algebra_from_dict(d["algebra"])
    p = PartitionOfUnity(alg, d["centers"], d["eps"], d["N"], d.get("box"))
    p.stats = d.get("stats", {})
    return p
