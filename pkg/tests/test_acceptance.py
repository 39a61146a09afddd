"""Acceptance criteria, one test each, at the stated tolerances.

Every test records a PASS or FAIL line that is repeated in the pytest
terminal summary under "acceptance criteria".
"""
import numpy as np
import pytest

from rockland.covering import build_partition, dist, greedy_net, homogeneous_norm, overlap_counts
from rockland.diffop import DiffOp, compose, formal_adjoint, heisenberg_family, parse_coeff, random_operator, top_at
from rockland.heisenberg import positivity_transfer_check, rep_matrix, rockland_constant
from rockland.lattice import Grid, SpectralCalculus, build_operator, bump_tests, estimate_probe, interpolation_check
from rockland.lie import bch_multiply, builtin, dilate, homogeneous_dimension
from rockland.uea import UEAElement, adjoint_const, normal_order, parse_element, rockland_laplacian

pytestmark = pytest.mark.acceptance

H1 = builtin("heisenberg1")
BOX = [(-4.0, 4.0)] * 3


def op_b():
    return DiffOp(
        H1,
        ((parse_coeff("-1", H1), (0, 0)), (parse_coeff("-1", H1), (1, 1)), (parse_coeff("2+sin(x)", H1), ())),
        2,
    )


@pytest.fixture(scope="module")
def net():
    return greedy_net(H1, BOX, 1.0, seed=0)


@pytest.fixture(scope="module")
def calculi():
    return {n: SpectralCalculus(Grid.cube(H1, 4.0, n)) for n in (16, 24)}


def _random_word(alg, rng, budget):
    word = []
    while True:
        j = int(rng.integers(alg.dim))
        if sum(alg.degrees[i] for i in word) + alg.degrees[j] > budget or rng.random() < 0.15:
            return tuple(word)
        word.append(j)


def test_1_pbw_soundness(verdict):
    worst = {"assoc": 0.0, "adjoint": 0.0}
    grading_ok = True
    for name in ("heisenberg1", "engel"):
        alg = builtin(name)
        rng = np.random.default_rng(1)
        for _ in range(500):
            # three words whose concatenation has weighted degree <= 8
            w1 = _random_word(alg, rng, 4)
            w2 = _random_word(alg, rng, 8 - sum(alg.degrees[i] for i in w1))
            w3 = _random_word(alg, rng, 8 - sum(alg.degrees[i] for i in w1 + w2))
            c = rng.standard_normal(3) + 1j * rng.standard_normal(3)
            a, b, d = (ci * normal_order(alg, w) for ci, w in zip(c, (w1, w2, w3)))
            worst["assoc"] = max(worst["assoc"], ((a * b) * d).max_abs_diff(a * (b * d)))
            worst["adjoint"] = max(worst["adjoint"], adjoint_const(a * b).max_abs_diff(adjoint_const(b) * adjoint_const(a)))
            prod = normal_order(alg, w1 + w2 + w3)
            deg = sum(alg.degrees[i] for i in w1 + w2 + w3)
            grading_ok &= all(prod.mono_degree(m) == deg for m in prod.terms)
    ok = worst["assoc"] < 1e-10 and worst["adjoint"] < 1e-10 and grading_ok
    verdict("1 PBW soundness", ok, f"assoc {worst['assoc']:.1e}, adjoint {worst['adjoint']:.1e}, grading {grading_ok}")


def test_2_symbol_lemmas(verdict):
    rng = np.random.default_rng(2)
    worst_c = worst_a = 0.0
    for _ in range(100):
        P, Q = random_operator(H1, rng, 3, 3), random_operator(H1, rng, 3, 3)
        PQ, Pd = compose(P, Q), formal_adjoint(P)
        for g in rng.uniform(-2, 2, (10, 3)):
            tP = top_at(P, g)
            worst_c = max(worst_c, top_at(PQ, g).max_abs_diff(tP * top_at(Q, g)))
            worst_a = max(worst_a, top_at(Pd, g).max_abs_diff(adjoint_const(tP)))
    ok = worst_c < 1e-10 and worst_a < 1e-10
    verdict("2 symbol lemmas", ok, f"composition {worst_c:.1e}, adjoint {worst_a:.1e}")


def test_3_rockland_constants(verdict):
    pts = np.random.default_rng(3).uniform(-2, 2, (5, 3))
    got = {f: rockland_constant(heisenberg_family(f), pts, n_max=200) for f in ("0", "2", "1")}
    w = got["2"].witnesses[0]
    ok = (
        abs(got["0"].c_P - 1) < 1e-9
        and abs(got["2"].c_P - 1 / 3) < 1e-9
        and (w["rep"], w["level"]) == ("pi+", 1)
        and got["1"].c_P < 1e-9
        and not got["1"].elliptic
        and got["0"].elliptic
        and got["2"].elliptic
    )
    detail = ", ".join(f"f={f}: c_P={r.c_P:.12f}" for f, r in got.items()) + f", witness {w['rep']} n={w['level']}"
    verdict("3 Rockland constants", ok, detail)


def test_4_oscillator_spectrum(verdict):
    ev = rep_matrix(parse_element("-1 · X^2 + -1 · Y^2", H1), "+", 50).eigenvalues()
    err = float(np.max(np.abs(ev[:46] - (2 * np.arange(46) + 1))))
    verdict("4 harmonic-oscillator spectrum", err < 1e-8, f"max |lambda_n - (2n+1)| = {err:.1e} for n < 46")


def test_5_covering_bounds(verdict, net):
    part = build_partition(H1, net, 1.0, 2.0, BOX)
    samples = np.random.default_rng(5).uniform(-4, 4, (10_000, 3))
    coverage = float(np.mean(part.covered(samples)))
    d = homogeneous_dimension(H1)
    o1 = int(overlap_counts(H1, net, 1.0).max())
    o2 = int(overlap_counts(H1, net, 2.0).max())
    ok = coverage == 1.0 and o1 <= 5**d and o2 <= 9**d
    verdict("5 covering bounds", ok, f"{len(net)} centres, coverage {coverage}, overlap N=1 {o1} <= 625, N=2 {o2} <= 6561")


def test_6_partition_identity(verdict, net):
    part = build_partition(H1, net, 1.0, 2.0, BOX)
    st = part.verify(n_samples=10_000, seed=6)
    ok = st["coverage"] == 1.0 and st["max_identity_error"] < 1e-10 and 1 <= st["theta_sq_min"] and st["theta_sq_max"] <= 9**4
    detail = f"max |sum psi^2 - 1| = {st['max_identity_error']:.1e}, theta^2 in [{st['theta_sq_min']:.3f}, {st['theta_sq_max']:.3f}]"
    verdict("6 partition identity", ok, detail)


def test_7_interpolation(verdict, calculi):
    calc = calculi[16]
    rng = np.random.default_rng(7)
    n = calc.grid.n_pts
    results = []
    for k in range(100):
        if k % 2:
            u = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        else:
            u = bump_tests(calc.grid, 1, seed=k)[0]
        s0, s1 = np.sort(rng.uniform(-4, 4, 2))
        results.append(interpolation_check(calc, u, s0, s1, rng.uniform(0.01, 0.99)))
    verdict("7 interpolation", all(results), f"{sum(results)}/100 cases hold on 16^3")


def test_8_localization(verdict, calculi):
    eps = 1.5
    box = np.tile([-4.0, 4.0], (3, 1))
    part = build_partition(H1, greedy_net(H1, box, eps, seed=0), eps, 2.0, box)
    C = {}
    exact = 0.0
    for n, calc in calculi.items():
        for s in (0, 2):
            rep = estimate_probe("localization", None, calc, s=s, partition=part, seed=8, n_tests=6)
            C[(n, s)] = rep.extra["constant"]
            if s == 0:
                exact = max(exact, abs(rep.min_ratio - 1), abs(rep.max_ratio - 1))
    bounded = all(v <= 10 for v in C.values())
    stable = all(max(C[(16, s)], C[(24, s)]) / min(C[(16, s)], C[(24, s)]) < 2 for s in (0, 2))
    ok = bounded and stable and exact < 1e-8
    detail = ", ".join(f"C(n={n},s={s})={v:.4f}" for (n, s), v in sorted(C.items())) + f", s=0 deviation {exact:.1e}"
    verdict("8 localization", ok, detail)


def test_9_forward_backward(verdict, calculi):
    ratios = {}
    for n, calc in calculi.items():
        for mode in ("forward", "backward"):
            for c in (10.0, 50.0):
                ratios[(mode, c, n)] = estimate_probe(mode, op_b(), calc, s=0, c=c, seed=9, n_tests=10).min_ratio
    positive = all(r > 0 for r in ratios.values())
    drift = max(
        abs(ratios[(m, c, 24)] - ratios[(m, c, 16)]) / ratios[(m, c, 16)] for m in ("forward", "backward") for c in (10.0, 50.0)
    )
    calc = calculi[16]
    control = estimate_probe("forward", DiffOp.from_uea(-1 * rockland_laplacian(H1)), calc, c=10.0, n_tests=2, grid_bound=True)
    mu = calc.mu
    oracle = float(np.min(np.sqrt(mu**2 + 100.0) / (1 + mu)))
    control_err = abs(control.extra["grid_sigma_min"] - oracle)
    ok = positive and drift <= 0.2 and control_err < 1e-8
    detail = (
        ", ".join(f"{m[0]} c={c:g} n={n}: {r:.4f}" for (m, c, n), r in sorted(ratios.items()))
        + f"; max drift {drift:.3f}; control |sigma - oracle| = {control_err:.1e}"
    )
    verdict("9 forward/backward probes", ok, detail)


def test_10_positivity(verdict):
    grid = Grid.cube(H1, 4.0, 8)
    lap = -1 * rockland_laplacian(H1)
    r1 = positivity_transfer_check(lap, 50, build_operator(lap, grid))
    iT = 1j * UEAElement.basis(H1, 2)
    r2 = positivity_transfer_check(iT, 50, build_operator(iT, grid))
    ok = (
        r1["group_side_min"] >= -1e-10
        and r1["rep_side_min"] >= 1 - 1e-8
        and not r2["group_positive"]
        and not r2["rep_positive"]
        and r1["consistent"]
        and r2["consistent"]
    )
    detail = (
        f"-Delta: group {r1['group_side_min']:.1e}, rep {r1['rep_side_min']:.6f}; "
        f"iT: group {r2['group_side_min']:.3f}, rep {r2['rep_side_min']:.3f}"
    )
    verdict("10 positivity transfer", ok, detail)


def test_11_homogeneity(verdict):
    rng = np.random.default_rng(11)
    worst_h = worst_r = 0.0
    for name in ("heisenberg1", "engel"):
        alg = builtin(name)
        g = rng.uniform(-3, 3, (1000, alg.dim))
        g2 = rng.uniform(-3, 3, (1000, alg.dim))
        h = rng.uniform(-3, 3, (1000, alg.dim))
        t = rng.uniform(0.05, 20, 1000)
        n = homogeneous_norm(alg, g)
        scaled = np.array([homogeneous_norm(alg, dilate(alg, ti, gi)) for ti, gi in zip(t, g)])
        worst_h = max(worst_h, float(np.max(np.abs(scaled - t * n) / np.maximum(t * n, 1))))
        d0 = dist(alg, g, g2)
        d1 = dist(alg, bch_multiply(alg, g, h), bch_multiply(alg, g2, h))
        worst_r = max(worst_r, float(np.max(np.abs(d1 - d0) / np.maximum(d0, 1))))
    ok = worst_h < 1e-10 and worst_r < 1e-10
    verdict("11 homogeneity and right-invariance", ok, f"dilation {worst_h:.1e}, right-invariance {worst_r:.1e}")
