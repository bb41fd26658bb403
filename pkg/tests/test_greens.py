"""Green's functions: finite-volume solves, Fourier inversion, symbol bounds."""

import numpy as np
import pytest

from interface_lab import (
    Coefficients,
    DomainSpec,
    QuadratureNotConverged,
    QuadratureSpec,
    discretize,
    dirichlet_solve,
    green_column,
    green_infinite,
    mu_sandwich_check,
    precision,
)
from interface_lab.greens import (
    LinearSolver,
    MU_BOUND_CONSTANT,
    calibrate_mu_bound_constant,
    export_green_column_csv,
    green_diagonal,
    green_infinite_diagnostics,
)


def interval_domain(n_interior, K=2):
    return discretize(DomainSpec.interval(), n_interior + 2 * K - 1, K)


def tridiag_green(n, i, j):
    """Analytic inverse of the pure-gradient precision: 2 i (n+1-j)/(n+1), i <= j."""
    i, j = min(i, j), max(i, j)
    return 2.0 * i * (n + 1 - j) / (n + 1)


def test_green_matches_tridiagonal_inverse():
    n = 9
    dom = interval_domain(n, K=1)
    op = precision(dom, Coefficients((1.0,)))
    first = int(dom.interior.min())
    for i in (1, 4, 7):
        col = green_column(op, (first + i - 1,))
        for j in range(1, n + 1):
            assert col.values[j - 1] == pytest.approx(tridiag_green(n, i, j), rel=1e-12)


def test_green_single_node():
    dom = discretize(DomainSpec.unit_box(2), 2, 1)
    op = precision(dom, Coefficients((1.0,)))
    col = green_column(op, dom.interior[0])
    assert col.values == pytest.approx([1.0])


def test_mixed_diagonal_below_gradient_value():
    # n=5 interior, center value of the gradient model is 2*3*3/6 = 3
    dom = interval_domain(5, K=2)
    op = precision(dom, Coefficients((1.0, 1.0)))
    center = dom.interior[2]
    col = green_column(op, center)
    assert col.values[2] < 3.0


def test_dirichlet_solve_roundtrip_and_delta():
    dom = discretize(DomainSpec.unit_box(2), 8, 2)
    op = precision(dom, Coefficients((1.0, 0.5)))
    rng = np.random.default_rng(0)
    g = rng.standard_normal(dom.size)
    f = op.matrix @ g
    assert dirichlet_solve(op, f) == pytest.approx(g, rel=1e-9)
    assert np.allclose(dirichlet_solve(op, np.zeros(dom.size)), 0.0)
    rhs = np.zeros(dom.size)
    rhs[5] = 1.0
    assert dirichlet_solve(op, rhs) == pytest.approx(
        green_column(op, dom.interior[5]).values, rel=1e-12)


def test_green_symmetry_and_positive_diagonal():
    rng = np.random.default_rng(1)
    for spec, N in ((DomainSpec.interval(), 16), (DomainSpec.unit_box(2), 10),
                    (DomainSpec.ball(2, 1.0), 8)):
        dom = discretize(spec, N, 2)
        op = precision(dom, Coefficients((1.0, float(rng.uniform(0, 2)))))
        G = np.linalg.inv(op.to_dense())
        assert np.abs(G - G.T).max() <= 1e-10
        assert np.diag(G).min() > 0


def test_brascamp_lieb_domination_small():
    for spec, N in ((DomainSpec.interval(), 24), (DomainSpec.unit_box(2), 12)):
        dom = discretize(spec, N, 2)
        mixed = green_diagonal(precision(dom, Coefficients((1.0, 1.0))))
        pure = green_diagonal(precision(dom, Coefficients((1.0,))))
        assert (pure - mixed).min() >= -1e-10


def test_increment_bound_one_dimensional():
    # E[(phi_x - phi_y)^2] <= 2|x-y|; equality pattern for the gradient model
    dom = interval_domain(13, K=2)
    nodes = dom.interior.ravel()
    n = dom.size
    for kappa in ((1.0,), (1.0, 1.0)):
        G = np.linalg.inv(precision(dom, Coefficients(kappa)).to_dense())
        for a in range(n):
            for b in range(a + 1, n):
                incr = G[a, a] + G[b, b] - 2 * G[a, b]
                assert incr <= 2 * abs(int(nodes[b]) - int(nodes[a])) + 1e-12


def test_pinned_walk_variance_formula_exact():
    # gradient-model increment variance: 2(j-i)[1 - (j-i)/(N-2)] on {2..N-2}
    N = 16
    dom = discretize(DomainSpec.interval(), N, 2)
    G = np.linalg.inv(precision(dom, Coefficients((1.0,))).to_dense())
    nodes = dom.interior.ravel()
    for ai in (0, 2, 5):
        for bi in (6, 9, 12):
            i, j = int(nodes[ai]), int(nodes[bi])
            expect = 2 * (j - i) * (1 - (j - i) / (N - 2))
            got = G[ai, ai] + G[bi, bi] - 2 * G[ai, bi]
            assert got == pytest.approx(expect, rel=1e-12)


def folded_torus_green(M, kappa, x=(0, 0, 0)):
    """Torus covariance by direct symbol summation (zero mode dropped)."""
    k = np.arange(M // 2 + 1)
    w1 = np.where((k == 0) | (k == M // 2), 1.0, 2.0)
    mu_ax = 2 * np.sin(np.pi * k / M) ** 2
    c = [np.cos(2 * np.pi * k * xi / M) for xi in x]
    total = 0.0
    for i3 in range(M // 2 + 1):
        mu = (mu_ax[:, None] + mu_ax[None, :] + mu_ax[i3]) / 3.0
        W = kappa[0] * mu + kappa[1] * mu * mu
        if i3 == 0:
            W[0, 0] = np.inf
        total += w1[i3] * c[2][i3] * ((w1[:, None] * w1[None, :]
                                       * c[0][:, None] * c[1][None, :]) / W).sum()
    return total / M**3


@pytest.mark.slow
def test_green_infinite_against_torus_oracle():
    # Richardson in 1/M removes the leading finite-torus offset
    for kappa in ((1.0, 0.0), (1.0, 1.0)):
        t256 = folded_torus_green(256, kappa)
        t512 = folded_torus_green(512, kappa)
        oracle = 2 * t512 - t256
        val = green_infinite((0, 0, 0), kappa, 3)
        assert val == pytest.approx(oracle, rel=1e-4)


def test_green_infinite_symmetry():
    a = green_infinite((2, 1, 0), (1.0, 1.0), 3)
    b = green_infinite((-2, -1, 0), (1.0, 1.0), 3)
    assert a == pytest.approx(b, rel=1e-10)


def test_green_infinite_requires_d3_and_positive_kappa1():
    with pytest.raises(ValueError):
        green_infinite((1, 1), (1.0, 1.0), 2)
    with pytest.raises(ValueError):
        green_infinite((1, 1, 1), (0.0, 1.0), 3)


def test_green_infinite_not_converged():
    with pytest.raises(QuadratureNotConverged):
        green_infinite((0, 0, 0), (1.0, 1.0), 3,
                       QuadratureSpec(origin_refinement_levels=3, rel_tol=1e-10))


def test_green_infinite_diagnostics_json(tmp_path):
    import json

    diag = green_infinite_diagnostics((0, 0, 0), (1.0, 1.0), 3)
    text = json.dumps(diag)
    back = json.loads(text)
    assert back["shells"][0]["level"] == 0
    assert diag["value"] == pytest.approx(
        green_infinite((0, 0, 0), (1.0, 1.0), 3), rel=1e-4)


def test_mu_sandwich_triple_and_special_points():
    rng = np.random.default_rng(2)
    for d in (1, 2, 3):
        for N in (8, 16, 32):
            theta = rng.uniform(-N * np.pi, N * np.pi, size=(500, d))
            theta = theta[np.linalg.norm(theta, axis=1) > 1e-6]
            lower, value, upper = mu_sandwich_check(theta, N)
            assert np.all(lower <= value * (1 + 1e-12))
            assert np.all(value <= upper * (1 + 1e-12))
    # theta = (N pi) in d=1: mu = 2 so the scaled value is 1/(6 N^2)
    _, value, _ = mu_sandwich_check(np.array([16 * np.pi]), 16)
    assert value == pytest.approx(1.0 / (6 * 16**2), rel=1e-12)


def test_mu_sandwich_small_theta_limit():
    theta = np.array([0.3, -0.2, 0.1])
    _, value, _ = mu_sandwich_check(theta, 16)
    assert value == pytest.approx(2 * 3 / (theta @ theta), rel=0.01)


def test_mu_lower_bound_tight_as_N_grows():
    theta = np.array([1.0, 2.0, -0.5])
    gaps = []
    for N in (8, 16, 32, 64):
        lower, value, _ = mu_sandwich_check(theta, N)
        gaps.append(float((value - lower) / value))
    assert all(b < a for a, b in zip(gaps, gaps[1:]))
    assert gaps[-1] < gaps[0] / 10


def test_calibrated_constants_have_headroom():
    for d in (1, 2, 3):
        measured = calibrate_mu_bound_constant(d, samples=50_000)
        assert measured < MU_BOUND_CONSTANT[d]


def test_export_green_column_csv(tmp_path):
    dom = interval_domain(5, K=1)
    op = precision(dom, Coefficients((1.0,)))
    col = green_column(op, dom.interior[2])
    path = tmp_path / "col.csv"
    export_green_column_csv(path, op, col)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "x0,value"
    assert len(lines) == 6


def test_cg_path_matches_direct():
    import interface_lab.greens as greens

    dom = discretize(DomainSpec.unit_box(2), 10, 1)
    op = precision(dom, Coefficients((1.0,)))
    direct = LinearSolver(op)
    rhs = np.zeros(dom.size)
    rhs[7] = 1.0
    x_direct = direct.solve(rhs)
    old = greens.DIRECT_SOLVER_MAX_N
    greens.DIRECT_SOLVER_MAX_N = 1  # force the CG branch
    try:
        x_cg = LinearSolver(op).solve(rhs)
    finally:
        greens.DIRECT_SOLVER_MAX_N = old
    assert x_cg == pytest.approx(x_direct, rel=1e-8)
