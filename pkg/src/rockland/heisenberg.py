"""Schrodinger representations of the Heisenberg group in the Hermite basis.

``pi_+(X) = i p``, ``pi_+(Y) = i q``, ``pi_+(T) = i`` and
``pi_-(X) = i p``, ``pi_-(Y) = -i q``, ``pi_-(T) = -i``, with
``q = (a + a^dagger)/sqrt 2`` and ``p = (a - a^dagger)/(i sqrt 2)`` so that
``p^2 + q^2 = 2 a^dagger a + 1`` has spectrum ``1, 3, 5, ...``.

Representations ``pi_lambda`` with ``|lambda| != 1`` are unitarily equivalent
to ``pi_{sign lambda}`` composed with the dilation ``delta_{sqrt|lambda|}``.
For a degree-m homogeneous ``D`` that dilation multiplies both ``pi(D)`` and
``pi((-Delta)^{m/2})`` by ``|lambda|^{m/2}``, so the Rockland ratio only needs
``lambda = +-1`` plus the one-dimensional characters.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .diffop import DiffOp, top_at
from .lie import GradedLieAlgebra
from .uea import UEAElement, adjoint_const, dilate_uea

__all__ = [
    "HermiteOperator",
    "RocklandReport",
    "check_heisenberg",
    "ladder",
    "rep_matrix",
    "rep_matrix_rect",
    "character_value",
    "rockland_constant",
    "heisenberg_ellipticity",
    "positivity_transfer_check",
]


def check_heisenberg(alg: GradedLieAlgebra):
    """Raise unless ``alg`` is the Heisenberg algebra with [e0, e1] = e2."""
    C = np.zeros((3, 3, 3))
    C[0, 1, 2] = 1
    C[1, 0, 2] = -1
    if alg.dim != 3 or alg.degrees != (1, 1, 2) or not np.allclose(alg.structure, C, atol=0):
        raise ValueError("Schrodinger representations are implemented for the Heisenberg algebra only")


def ladder(size: int) -> np.ndarray:
    """Truncated lowering operator, ``a |n> = sqrt(n) |n-1>``."""
    return np.diag(np.sqrt(np.arange(1, size, dtype=float)), k=1).astype(complex)


@dataclass
class HermiteOperator:
    size: int
    entries: np.ndarray = field(repr=False)
    pad: int = 0

    def is_hermitian(self, tol=1e-10) -> bool:
        return bool(np.max(np.abs(self.entries - self.entries.conj().T), initial=0.0) <= tol)

    def eigenvalues(self) -> np.ndarray:
        H = 0.5 * (self.entries + self.entries.conj().T)
        return np.linalg.eigvalsh(H)


def _generator_images(sign: int, size: int):
    a = ladder(size)
    ad = a.conj().T
    q = (a + ad) / np.sqrt(2)
    p = (a - ad) / (1j * np.sqrt(2))
    eye = np.eye(size, dtype=complex)
    return (1j * p, sign * 1j * q, sign * 1j * eye)


def _max_word_length(D: UEAElement) -> int:
    return max((sum(m) for m in D.terms), default=0)


def _rep_full(D: UEAElement, sign: int, size: int) -> np.ndarray:
    check_heisenberg(D.alg)
    gens = _generator_images(sign, size)
    out = np.zeros((size, size), dtype=complex)
    cache: dict = {}

    def power(i, k):
        key = (i, k)
        if key not in cache:
            cache[key] = np.linalg.matrix_power(gens[i], k)
        return cache[key]

    for mono, c in D.terms.items():
        M = np.eye(size, dtype=complex)
        for i, k in enumerate(mono):
            if k:
                M = M @ power(i, k)
        out += c * M
    return out


def _parse_sign(sign) -> int:
    if sign in ("+", 1, "+1", "plus"):
        return 1
    if sign in ("-", -1, "-1", "minus"):
        return -1
    raise ValueError(f"sign must be '+' or '-', got {sign!r}")


def rep_matrix(D: UEAElement, sign, N: int, pad: int | None = None) -> HermiteOperator:
    """``pi_+-(D)`` on the first ``N`` Hermite functions.

    Built at size ``N + pad`` and cropped, so the returned block equals the
    compression of the infinite matrix exactly.
    """
    s = _parse_sign(sign)
    L = _max_word_length(D)
    pad = 2 * L if pad is None else pad
    full = _rep_full(D, s, N + pad)
    return HermiteOperator(N, full[:N, :N].copy(), pad)


def rep_matrix_rect(D: UEAElement, sign, n_cols: int) -> np.ndarray:
    """Exact ``pi(D)`` restricted to the first ``n_cols`` levels, all output rows kept.

    Rows run over levels ``0 .. n_cols + L - 1`` where ``L`` is the longest
    PBW word of ``D``; no image component is lost.
    """
    s = _parse_sign(sign)
    L = _max_word_length(D)
    rows = n_cols + L
    full = _rep_full(D, s, rows + L)
    return full[:rows, :n_cols]


def character_value(Dtop: UEAElement, xi: float, eta: float) -> complex:
    """One-dimensional representation ``X -> i xi, Y -> i eta, T -> 0``."""
    check_heisenberg(Dtop.alg)
    vals = (1j * xi, 1j * eta, 0.0)
    total = 0j
    for mono, c in Dtop.terms.items():
        term = c
        for v, k in zip(vals, mono):
            if k:
                term *= v**k
        total += term
    return complex(total)


@dataclass
class RocklandReport:
    c_P: float
    elliptic: bool
    witnesses: list
    tail_ok: bool
    threshold: float = 1e-8
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "c_P": self.c_P,
            "elliptic": self.elliptic,
            "witnesses": self.witnesses,
            "tail_ok": self.tail_ok,
            "threshold": self.threshold,
            **self.details,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _laplacian_levels(n: int, m: int) -> np.ndarray:
    # pi(-Delta) = p^2 + q^2 is diagonal with entries 2n+1 in the Hermite basis.
    return (2.0 * np.arange(n) + 1.0) ** (m / 2.0)


def _level_ratios(A: np.ndarray, weights: np.ndarray) -> np.ndarray:
    return np.linalg.norm(A, axis=0) / weights


def rockland_constant(
    P: DiffOp,
    points,
    n_max: int = 200,
    N: int | None = None,
    n_angles: int = 256,
    threshold: float = 1e-8,
    scale: float = 1.0,
) -> RocklandReport:
    """Sampled Rockland constant ``inf_g inf_pi ||pi(P_g^top) v|| / ||pi((-Delta)^{m/2}) v||``.

    For each sample point the top part is frozen and represented under
    ``pi_+``, ``pi_-`` on levels ``0 .. n_max-1`` (rows kept complete) and under
    the characters on ``n_angles`` directions.  ``scale != 1`` represents
    through ``pi_+- o delta_scale``; the constant does not depend on it.
    ``N`` (default ``2 n_max``) only bounds the levels examined for the tail
    check.
    """
    alg = P.alg
    check_heisenberg(alg)
    m = P.order
    n_tail = N if N is not None else n_max
    points = np.atleast_2d(np.asarray(points, dtype=float))
    weights = _laplacian_levels(n_max, m) * scale**m
    best = np.inf
    witnesses = []
    tail_ok = True
    tail_dev = 0.0
    angles = np.linspace(0.0, 2 * np.pi, n_angles, endpoint=False)
    for g in points:
        top = top_at(P, g)
        if scale != 1.0:
            top = dilate_uea(top, scale)
        for sign in ("+", "-"):
            A = rep_matrix_rect(top, sign, n_max)
            B = A / weights[None, :]
            _, S, Vh = np.linalg.svd(B, full_matrices=False)
            smin = float(S[-1])
            level = int(np.argmax(np.abs(Vh[-1])))
            ratios = _level_ratios(A, weights)
            half = n_max // 2
            tail = ratios[half:]
            if tail.size:
                ref = tail[-1]
                dev = float(np.max(np.abs(tail - ref)) / max(abs(ref), 1e-300))
                tail_dev = max(tail_dev, dev)
                if dev >= 0.05:
                    tail_ok = False
            if smin < best - 1e-15:
                best = smin
                witnesses = [{"rep": "pi" + sign, "level": level, "ratio": smin, "point": g.tolist()}]
            elif abs(smin - best) <= 1e-15 and not any(
                w["rep"] == "pi" + sign and w["level"] == level for w in witnesses
            ):
                witnesses.append({"rep": "pi" + sign, "level": level, "ratio": smin, "point": g.tolist()})
        # characters: homogeneous of degree m, so the unit circle suffices
        num = np.array([abs(character_value(top, np.cos(a), np.sin(a))) for a in angles])
        ratio = num / scale**m
        k = int(np.argmin(ratio))
        if ratio[k] < best - 1e-15:
            best = float(ratio[k])
            witnesses = [{"rep": "character", "level": float(angles[k]), "ratio": best, "point": g.tolist()}]
    best = float(max(best, 0.0))
    return RocklandReport(
        c_P=best,
        elliptic=best > threshold,
        witnesses=witnesses,
        tail_ok=tail_ok,
        threshold=threshold,
        details={"n_max": n_max, "n_points": int(len(points)), "tail_deviation": tail_dev, "order": m, "n_tail": n_tail},
    )


def heisenberg_ellipticity(f_values):
    """``(margin > 0, margin)`` with ``margin = inf dist(f, 2Z + 1)`` over the samples."""
    f = np.asarray(list(f_values) if not isinstance(f_values, np.ndarray) else f_values, dtype=float).ravel()
    if f.size == 0:
        raise ValueError("need at least one sample of f")
    nearest_odd = 2.0 * np.round((f - 1.0) / 2.0) + 1.0
    margin = float(np.min(np.abs(f - nearest_odd)))
    return margin > 0, margin


def positivity_transfer_check(D: UEAElement, N: int, lattice_op, tol: float = 1e-10) -> dict:
    """Compare positivity of ``D`` on grid functions with positivity of ``pi_+-(D)``.

    ``lattice_op`` is the discretized ``D`` (a matrix or ``DiscreteOp``).  The
    group side is the least eigenvalue of its Hermitian part, the minimum of
    ``Re<u, D_h u>/||u||^2``; the rep side is the least eigenvalue of the
    Hermitian part of ``pi_+-(D)`` on ``N`` levels.
    """
    if not adjoint_const(D).is_close(D, 1e-10):
        raise ValueError("positivity transfer requires an adjoint-symmetric element")
    M = getattr(lattice_op, "matrix", lattice_op)
    M = M.toarray() if hasattr(M, "toarray") else np.asarray(M)
    H = 0.5 * (M + M.conj().T)
    group_min = float(np.linalg.eigvalsh(H)[0])
    rep = {}
    for sign in ("+", "-"):
        rep[sign] = float(rep_matrix(D, sign, N).eigenvalues()[0])
    rep_min = min(rep.values())
    group_pos = group_min >= -tol
    rep_pos = rep_min >= -tol
    return {
        "group_side_min": group_min,
        "rep_side_min": rep_min,
        "rep_side_min_by_sign": rep,
        "group_positive": group_pos,
        "rep_positive": rep_pos,
        "consistent": not (group_pos and not rep_pos),
    }

