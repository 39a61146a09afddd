import csv
import io
import json

import numpy as np
import pytest

from rockland.covering import build_partition, greedy_net
from rockland.diffop import DiffOp, formal_adjoint, heisenberg_family, parse_coeff, vector_field_apply
from rockland.lattice import (
    CentralFourier,
    FlowLeavesBox,
    Grid,
    SpectralCalculus,
    build_operator,
    bump_tests,
    estimate_probe,
    integer_sobolev_norm,
    interpolation_check,
    report_json,
    reports_to_csv,
    resolvent_probe,
    scan_shift,
    sobolev_norm,
    vector_field_op,
)
from rockland.lie import builtin
from rockland.uea import UEAElement, rockland_laplacian

H1 = builtin("heisenberg1")


@pytest.fixture(scope="module")
def grid12():
    return Grid.cube(H1, 4.0, 12)


@pytest.fixture(scope="module")
def calc12(grid12):
    return SpectralCalculus(grid12)


def op_b():
    return DiffOp(
        H1,
        ((parse_coeff("-1", H1), (0, 0)), (parse_coeff("-1", H1), (1, 1)), (parse_coeff("2+sin(x)", H1), ())),
        2,
    )


def neg_laplacian():
    return DiffOp.from_uea(-1 * rockland_laplacian(H1))


def interior(grid, margin=1):
    """Mask of points at least ``margin`` cells away from every face."""
    idx = np.stack(np.meshgrid(*[np.arange(n) for n in grid.shape], indexing="ij"), -1).reshape(-1, grid.alg.dim)
    shape = np.asarray(grid.shape)
    return np.all((idx >= margin) & (idx < shape - margin), axis=1)


def test_grid_basics(grid12):
    assert grid12.n_pts == 12**3
    assert np.allclose(grid12.h, 8 / 12)
    assert grid12.points().shape == (12**3, 3)
    u = grid12.sample("1")
    assert grid12.norm(u) == pytest.approx(np.sqrt(8.0**3))
    assert json.dumps(grid12.describe())
    with pytest.raises(ValueError):
        Grid(H1, [[0, 1], [0, 1], [1, 0]], 4)


@pytest.mark.parametrize("j", [0, 1, 2])
def test_fields_are_skew(grid12, j):
    X = vector_field_op(H1, grid12, j)
    assert abs(X.matrix + X.matrix.conj().T).max() < 1e-8
    assert X.order == H1.degrees[j]


def test_field_examples(grid12):
    pts = grid12.points()
    X = vector_field_op(H1, grid12, 0)
    inner = interior(grid12)
    assert np.max(np.abs(X(grid12.sample("x"))[inner] + 1)) < 1e-10
    # X t = -y/2 wherever the flow, which moves t by h|y|/2, avoids the seam
    Xt = X(grid12.sample("t"))
    h = grid12.h[0]
    deep = inner & (np.abs(pts[:, 2]) + h * np.abs(pts[:, 1]) / 2 <= 4 - h - 1e-9)
    assert np.max(np.abs(Xt[deep] + pts[deep, 1] / 2)) < 1e-10
    for j in range(3):
        assert np.max(np.abs(vector_field_op(H1, grid12, j)(grid12.sample("3")))) < 1e-12


@pytest.mark.parametrize("j", [0, 1, 2])
def test_richardson_ratio(j):
    u = parse_coeff("exp(-1*(x*x+y*y+t*t)/4)", H1)
    errs = []
    for n in (16, 32, 64):
        g = Grid.cube(H1, 6.0, n)
        exact = vector_field_apply(H1, j, u).evaluate(g.points())
        errs.append(np.max(np.abs(vector_field_op(H1, g, j)(g.sample(u)) - exact)))
    assert 3.5 <= errs[1] / errs[2] <= 4.5


def test_flow_leaves_non_periodic_box():
    g = Grid.cube(H1, 2.0, 6, periodic=False)
    with pytest.raises(FlowLeavesBox):
        vector_field_op(H1, g, 0)


def test_laplacian_symmetric_nonpositive(grid12):
    L = build_operator(rockland_laplacian(H1), grid12)
    assert L.hermitian_deviation() < 1e-8
    assert np.max(np.linalg.eigvalsh(L.symmetrized().toarray())) < 1e-10


def test_identity_operator(grid12):
    I = build_operator(UEAElement.scalar(H1), grid12)
    assert abs(I.matrix - np.eye(grid12.n_pts)).max() == 0


def test_op_b_hermitian(grid12):
    assert build_operator(op_b(), grid12).hermitian_deviation() < 10 * grid12.h[0] ** 2


def test_operator_algebra_mismatch(grid12):
    with pytest.raises(ValueError):
        build_operator(rockland_laplacian(builtin("engel")), grid12)


def test_adjoint_consistency():
    P = DiffOp(
        H1,
        ((parse_coeff("sin(x)", H1), (0, 1)), (parse_coeff("cos(t)", H1), (2,)), (parse_coeff("1+i*y", H1), (0,))),
        2,
    )
    Pd = formal_adjoint(P)
    for n in (12, 16):
        g = Grid.cube(H1, 4.0, n)
        A, B = build_operator(P, g), build_operator(Pd, g)
        for u, w in zip(*[iter(bump_tests(g, 6, seed=n))] * 2):
            gap = abs(g.inner(w, A(u)) - g.inner(B(w), u))
            assert gap <= 10 * g.h[0] ** 2 * g.norm(u) * g.norm(w)


def test_central_fourier_round_trip(grid12, rng):
    F = CentralFourier(grid12)
    assert F.axes == (2,)
    u = rng.standard_normal(grid12.n_pts) + 1j * rng.standard_normal(grid12.n_pts)
    U = F.forward(u)
    assert np.allclose(F.inverse(U), u)
    assert np.linalg.norm(U) == pytest.approx(np.linalg.norm(u))
    L = build_operator(rockland_laplacian(H1), grid12)
    B = F.blocks(L)
    assert np.allclose(F.inverse(np.einsum("kpq,kq->kp", B, U)), L(u))


def negated(op):
    return type(op)(op.grid, -op.matrix, op.order)


def test_non_commuting_operator_falls_back_to_one_block(rng):
    g = Grid.cube(H1, 3.0, 6)
    lap = build_operator(rockland_laplacian(H1), g)
    bumpy = build_operator(DiffOp.multiplier(H1, "sin(t)*sin(t)"), g)
    calc = SpectralCalculus(g, lap + negated(bumpy))
    assert calc.fourier.K == 1
    u = rng.standard_normal(g.n_pts)
    assert calc.sobolev_norm(u, 0) == pytest.approx(g.norm(u))


def test_spectral_identities(calc12, grid12, rng):
    u = rng.standard_normal(grid12.n_pts) + 1j * rng.standard_normal(grid12.n_pts)
    assert np.array_equal(calc12.power(u, 0), u)
    assert sobolev_norm(calc12, u, 0) == pytest.approx(grid12.norm(u), rel=1e-12)
    for a, b in [(0.5, 0.7), (-1.0, 2.5), (1.3, -0.4)]:
        lhs = calc12.power(calc12.power(u, a), b)
        rhs = calc12.power(u, a + b)
        assert np.linalg.norm(lhs - rhs) <= 1e-8 * np.linalg.norm(rhs)
    A_u = u - build_operator(rockland_laplacian(H1), grid12)(u)
    assert np.allclose(calc12.power(u, 1.0), A_u)
    assert np.min(calc12.mu) > -1e-10


def eigenvector(calc, k, i):
    U = np.zeros((calc.fourier.K, calc.fourier.P), dtype=complex)
    U[k] = calc.eigvecs[k][:, i]
    return calc.fourier.inverse(U), calc.eigvals[k][i]


def test_sobolev_norm_of_eigenvector(calc12, grid12):
    for k, i in [(0, 0), (3, 17), (7, 140)]:
        phi, lam = eigenvector(calc12, k, i)
        for s in (-1.0, 0.5, 2.0, 3.0):
            assert calc12.sobolev_norm(phi, s) == pytest.approx(lam ** (s / 2) * grid12.norm(phi), rel=1e-10)


def test_integer_variant(calc12, grid12, rng):
    u = rng.standard_normal(grid12.n_pts)
    assert sobolev_norm(calc12, u, 0, "integer") == pytest.approx(grid12.norm(u))
    with pytest.raises(ValueError):
        integer_sobolev_norm(grid12, u, 1)
    with pytest.raises(ValueError):
        sobolev_norm(calc12, u, 2, "bogus")
    # s = 2: words (), X, Y, XX, XY, YX, YY
    X, Y = (vector_field_op(H1, grid12, j) for j in (0, 1))
    manual = sum(grid12.norm(v) ** 2 for v in [u, X(u), Y(u), X(X(u)), X(Y(u)), Y(X(u)), Y(Y(u))])
    assert integer_sobolev_norm(grid12, u, 2) == pytest.approx(np.sqrt(manual))


def test_sobolev_equivalence_stable_across_grids():
    constants = []
    for n in (12, 16):
        g = Grid.cube(H1, 4.0, n)
        calc = SpectralCalculus(g)
        r = np.array([calc.sobolev_norm(u, 2) / integer_sobolev_norm(g, u, 2) for u in bump_tests(g, 50, seed=2)])
        constants.append(max(r.max(), 1 / r.min()))
    assert max(constants) / min(constants) < 2


def test_interpolation(calc12, grid12, rng):
    u = rng.standard_normal(grid12.n_pts)
    assert interpolation_check(calc12, u, 0, 2, 0.5)
    for _ in range(20):
        s0, s1 = rng.uniform(-3, 4, 2)
        assert interpolation_check(calc12, rng.standard_normal(grid12.n_pts), s0, s1, rng.uniform(0.01, 0.99))
    with pytest.raises(ValueError):
        interpolation_check(calc12, u, 0, 2, 1.0)


def test_interpolation_equality_for_eigenvector(calc12):
    phi, _ = eigenvector(calc12, 5, 33)
    s0, s1, th = -1.0, 3.0, 0.3
    lhs = calc12.sobolev_norm(phi, (1 - th) * s0 + th * s1)
    rhs = calc12.sobolev_norm(phi, s0) ** (1 - th) * calc12.sobolev_norm(phi, s1) ** th
    assert abs(lhs / rhs - 1) < 1e-12


def test_forward_control_matches_diagonalisation(calc12):
    c = 10.0
    rep = estimate_probe("forward", neg_laplacian(), calc12, s=0, c=c, grid_bound=True, n_tests=5)
    mu = calc12.mu
    oracle = np.min(np.sqrt(mu**2 + c**2) / (1 + mu))
    assert abs(rep.extra["grid_sigma_min"] - oracle) < 1e-8
    assert rep.min_ratio >= oracle - 1e-10


@pytest.mark.parametrize("mode", ["forward", "backward"])
@pytest.mark.parametrize("c", [10.0, 50.0])
def test_probes_positive(calc12, mode, c):
    rep = estimate_probe(mode, op_b(), calc12, s=0, c=c, n_tests=6)
    assert rep.min_ratio > 0 and rep.max_ratio >= rep.min_ratio
    assert rep.extra["hermitian_deviation"] < 1e-8


def test_probe_errors(calc12):
    with pytest.raises(ValueError, match="shift"):
        estimate_probe("forward", op_b(), calc12)
    with pytest.raises(ValueError, match="partition"):
        estimate_probe("localization", op_b(), calc12)
    with pytest.raises(ValueError, match="unknown"):
        estimate_probe("sideways", op_b(), calc12, c=1)


def test_localization_exact_at_s0(calc12, grid12):
    box = grid12.box.tolist()
    P = build_partition(H1, greedy_net(H1, box, 1.5, seed=0), 1.5, 2.0, box)
    rep = estimate_probe("localization", None, calc12, s=0, partition=P, n_tests=4)
    assert abs(rep.min_ratio - 1) < 1e-8 and abs(rep.max_ratio - 1) < 1e-8
    rep2 = estimate_probe("localization", None, calc12, s=2, partition=P, n_tests=4)
    assert 1 / 10 <= rep2.min_ratio <= rep2.max_ratio <= 10


def test_resolvent(calc12, grid12, rng):
    c = 10.0
    zero = resolvent_probe(neg_laplacian(), c, np.zeros(grid12.n_pts), calc12)
    assert np.all(zero["solution"] == 0) and zero["ratio"] == 0
    b = rng.standard_normal(grid12.n_pts)
    out = resolvent_probe(neg_laplacian(), c, b, calc12)
    mu = calc12.mu
    c_hat = np.min(np.sqrt(mu**2 + c**2) / (1 + mu))
    assert out["ratio"] <= 1 / c_hat + 1e-12
    assert out["residual"] < 1e-10 * grid12.norm(b)


def test_resolvent_singular():
    g = Grid.cube(H1, 3.0, 6)
    calc = SpectralCalculus(g)
    with pytest.raises(np.linalg.LinAlgError):
        resolvent_probe(neg_laplacian(), 0.0, np.ones(g.n_pts), calc)


def test_reports_csv_and_json(calc12):
    reps = [estimate_probe("forward", op_b(), calc12, c=c, n_tests=3, seed=4) for c in (10.0, 50.0)]
    text = reports_to_csv(reps)
    rows = list(csv.DictReader(io.StringIO(text)))
    assert [r["c"] for r in rows] == ["10.0", "50.0"] and rows[0]["grid"] == "12x12x12"
    again = reports_to_csv([estimate_probe("forward", op_b(), calc12, c=c, n_tests=3, seed=4) for c in (10.0, 50.0)])
    assert again == text
    payload = json.loads(report_json(reps, {"seed": 4}))
    assert payload["config"]["seed"] == 4 and payload["reports"][0]["seed"] == 4


def test_scan_shift_finds_threshold(calc12):
    cs = np.geomspace(0.1, 100, 7)
    reps, c_adm = scan_shift("forward", op_b(), calc12, cs[::-1], 2.0, n_tests=3)
    ratios = [r.min_ratio for r in reps]
    assert [r.c for r in reps] == sorted(cs)
    assert c_adm is not None and all(m >= 2.0 for r, m in zip(reps, ratios) if r.c >= c_adm)
    below = [m for r, m in zip(reps, ratios) if r.c < c_adm]
    assert below and below[-1] < 2.0
    assert scan_shift("forward", op_b(), calc12, [0.1], 1e6, n_tests=2)[1] is None


def test_bump_tests_supported_in_middle(grid12):
    inside = np.all(np.abs(grid12.points()) <= 3.0 + 1e-12, axis=1)
    for u in bump_tests(grid12, 5, seed=1):
        assert np.all(u[~inside] == 0) and np.any(u != 0)


def test_heisenberg_family_operator_builds(grid12):
    op = build_operator(heisenberg_family("0"), grid12)
    assert op.order == 2 and op.hermitian_deviation() < 1e-8
