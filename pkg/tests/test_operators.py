"""Operator assembly: Laplacian, precision powers, scaling identity, symbol."""

import numpy as np
import pytest

from interface_lab import (
    Coefficients,
    CoefficientSignError,
    DimensionMismatch,
    DomainSpec,
    apply,
    discretize,
    laplacian_normalized,
    precision,
    scaled_operator_Lh,
    symbol_mu,
)
from interface_lab.operators import periodic_precision_dense


def interval_domain(n_interior, K=1):
    # interval with K-erosion: interior {K,..,N-K}, so N = n + 2K - 1
    N = n_interior + 2 * K - 1
    return discretize(DomainSpec.interval(), N, K)


def site_sum_quadform(domain, kappa, phi, pad=4):
    """<phi, (k1 (-Delta) + k2 Delta^2) phi> over the whole lattice, directly."""
    d = domain.dimension
    lo = domain.interior.min(0) - pad
    hi = domain.interior.max(0) + pad
    F = np.zeros(tuple(hi - lo + 1))
    for p, v in zip(domain.interior, phi):
        F[tuple(p - lo)] = v

    def lap(G):
        out = -2 * d * G.copy()
        for ax in range(d):
            out += np.roll(G, 1, axis=ax) + np.roll(G, -1, axis=ax)
        return out / (2 * d)

    L1, L2 = lap(F), lap(lap(F))
    return float(kappa[0] * np.sum(F * (-L1)) + kappa[1] * np.sum(F * L2))


def test_laplacian_tridiagonal():
    dom = interval_domain(3)
    M = laplacian_normalized(dom).to_dense()
    expect = np.array([[1.0, -0.5, 0.0], [-0.5, 1.0, -0.5], [0.0, -0.5, 1.0]])
    assert np.allclose(M, expect, atol=0)


def test_laplacian_single_node_2d():
    dom = discretize(DomainSpec.unit_box(2), 2, 1)
    assert dom.size == 1
    assert np.allclose(laplacian_normalized(dom).to_dense(), [[1.0]], atol=0)


def test_laplacian_smallest_eigenvalue_five_nodes():
    # analytic spectrum of the Dirichlet tridiagonal: 1 - cos(k pi / (n+1))
    dom = interval_domain(5)
    ev = np.linalg.eigvalsh(laplacian_normalized(dom).to_dense())
    assert ev[0] == pytest.approx(1 - np.cos(np.pi / 6), abs=1e-12)


def test_precision_single_coefficient_is_laplacian():
    dom = discretize(DomainSpec.unit_box(2), 6, 1)
    J = precision(dom, Coefficients((1.0,))).to_dense()
    assert np.allclose(J, laplacian_normalized(dom).to_dense(), atol=0)


def test_precision_mixed_matches_dense_extended_product():
    # dense oracle: extend by the layer, square, restrict
    dom = interval_domain(3, K=2)
    J = precision(dom, Coefficients((1.0, 1.0))).to_dense()
    ext = np.arange(dom.interior.min() - 2, dom.interior.max() + 3)
    n = len(ext)
    M = np.eye(n)
    for i in range(n - 1):
        M[i, i + 1] = M[i + 1, i] = -0.5
    sel = [int(np.where(ext == v)[0][0]) for v in dom.interior.ravel()]
    oracle = (M + M @ M)[np.ix_(sel, sel)]
    assert np.allclose(J, oracle, atol=1e-14)
    assert J[0, 0] == pytest.approx(2.5, abs=1e-14)


def test_precision_pure_bilaplacian_single_node():
    # whole-lattice kernel of Delta^2 at coinciding points in d=1 is 3/2
    # (site-sum oracle: ||Delta phi||^2 = phi^2 (1 + 1/4 + 1/4))
    dom = interval_domain(1, K=2)
    J = precision(dom, Coefficients((0.0, 1.0))).to_dense()
    assert np.allclose(J, [[1.5]], atol=1e-14)
    qf = site_sum_quadform(dom, (0.0, 1.0), np.array([1.0]))
    assert qf == pytest.approx(1.5, abs=1e-14)


def test_precision_requires_depth():
    dom = interval_domain(3, K=1)
    with pytest.raises(ValueError):
        precision(dom, Coefficients((1.0, 1.0)))


def test_quadratic_form_matches_site_sum():
    rng = np.random.default_rng(1)
    for spec, N in ((DomainSpec.interval(), 12), (DomainSpec.unit_box(2), 8)):
        dom = discretize(spec, N, 2)
        kappa = (1.3, 0.7)
        J = precision(dom, Coefficients(kappa)).matrix
        for _ in range(3):
            phi = rng.standard_normal(dom.size)
            assert float(phi @ (J @ phi)) == pytest.approx(
                site_sum_quadform(dom, kappa, phi), rel=1e-12)


def test_site_sum_normalization_of_gradient_hamiltonian():
    # sum_x (k1 |grad phi|^2 + k2 (Delta phi)^2) = <phi,(4d k1(-Delta)+2 k2 Delta^2)phi>/2
    rng = np.random.default_rng(2)
    dom = discretize(DomainSpec.unit_box(2), 7, 2)
    d = 2
    k1, k2 = 0.9, 0.4
    M1 = precision(dom, Coefficients((1.0,))).matrix
    M2 = precision(dom, Coefficients((0.0, 1.0))).matrix
    pad = 4
    lo = dom.interior.min(0) - pad
    hi = dom.interior.max(0) + pad
    for _ in range(3):
        phi = rng.standard_normal(dom.size)
        F = np.zeros(tuple(hi - lo + 1))
        for p, v in zip(dom.interior, phi):
            F[tuple(p - lo)] = v
        grad_sq = 0.0
        for ax in range(d):
            grad_sq += ((np.roll(F, -1, axis=ax) - F) ** 2).sum()
        lap = (-2 * d * F + sum(np.roll(F, s, axis=ax)
                                for ax in range(d) for s in (1, -1))) / (2 * d)
        site = k1 * grad_sq + k2 * (lap ** 2).sum()
        matrix_form = 0.5 * (4 * d * k1 * float(phi @ (M1 @ phi))
                             + 2 * k2 * float(phi @ (M2 @ phi)))
        assert site == pytest.approx(matrix_form, rel=1e-10)


def test_scaled_operator_identity_and_values():
    dom = interval_domain(3, K=1)  # N=4, h=1/4
    Lh = scaled_operator_Lh(dom, Coefficients((1.0,))).to_dense()
    expect = np.array([[32.0, -16.0, 0.0], [-16.0, 32.0, -16.0], [0.0, -16.0, 32.0]])
    assert np.allclose(Lh, expect, atol=1e-12)

    dom1 = interval_domain(1, K=1)  # N=2, h=1/2
    Lh1 = scaled_operator_Lh(dom1, Coefficients((1.0,))).to_dense()
    assert np.allclose(Lh1, [[8.0]], atol=1e-12)

    dom2 = discretize(DomainSpec.unit_box(2), 8, 2)
    coeffs = Coefficients((1.0, 1.0))
    Lh2 = scaled_operator_Lh(dom2, coeffs)
    J2 = precision(dom2, coeffs)
    h = dom2.h
    diff = Lh2.matrix - (2 * 2 / h**2) * J2.matrix
    assert np.abs(diff.toarray()).max() <= 1e-12 * (2 * 2 / h**2)


def test_symbol_values():
    assert symbol_mu(np.zeros(3)) == 0.0
    assert symbol_mu(np.full(4, np.pi)) == pytest.approx(2.0, abs=1e-15)
    assert symbol_mu((np.pi / 2, np.pi / 3)) == pytest.approx(0.75, abs=1e-15)
    assert 0.0 <= symbol_mu((1.1, -2.2, 0.3)) <= 2.0


def test_apply_and_dimension_mismatch():
    dom = interval_domain(4)
    op = laplacian_normalized(dom)
    e1 = np.zeros(4)
    e1[1] = 1.0
    assert np.allclose(apply(op, e1), op.to_dense()[:, 1])
    assert np.allclose(apply(op, np.zeros(4)), 0.0)
    with pytest.raises(DimensionMismatch):
        apply(op, np.zeros(5))


def test_random_admissible_coefficients_spd():
    rng = np.random.default_rng(3)
    for _ in range(8):
        kappa = (float(rng.uniform(0.2, 2.0)), float(rng.uniform(0.0, 2.0)))
        spec = DomainSpec.interval() if rng.random() < 0.5 else DomainSpec.unit_box(2)
        dom = discretize(spec, int(rng.integers(8, 13)), 2)
        J = precision(dom, Coefficients(kappa)).to_dense()
        assert np.allclose(J, J.T, atol=0)
        np.linalg.cholesky(J)  # raises if not positive definite
        phi = rng.standard_normal(dom.size)
        assert phi @ (J @ phi) >= 0


def test_coefficient_sign_error():
    with pytest.raises(CoefficientSignError):
        Coefficients((0.0, 0.0))
    with pytest.raises(CoefficientSignError):
        Coefficients((1.0, -1.0))  # symbol r - r^2 < 0 near r = 2
    Coefficients((0.0, 1.0))  # pure bilaplacian is admissible


def test_torus_symbol_consistency():
    # periodic J eigenvalues are exactly the symbol values over the frequency grid
    for d in (1, 2, 3):
        shape = (8,) * d
        kappa = (1.0, 0.5)
        J = periodic_precision_dense(shape, Coefficients(kappa))
        ev = np.sort(np.linalg.eigvalsh(J))
        ks = np.meshgrid(*[2 * np.pi * np.arange(8) / 8] * d, indexing="ij")
        mu = sum(1 - np.cos(k) for k in ks).ravel() / d
        sym = np.sort(kappa[0] * mu + kappa[1] * mu**2)
        assert np.abs(ev - sym).max() < 1e-10


def test_odd_power_gradient_identity_periodic():
    # <phi, (-Delta)^3 phi> = (1/2d) sum_j ||nabla_j (-Delta) phi||^2 on the torus
    rng = np.random.default_rng(4)
    shape = (6, 6)
    d = 2
    n = 36
    J3 = periodic_precision_dense(shape, Coefficients((0.0, 0.0, 1.0)))
    minus_lap = periodic_precision_dense(shape, Coefficients((1.0,)))
    idx = np.arange(n).reshape(shape)
    for _ in range(3):
        phi = rng.standard_normal(n)
        lhs = float(phi @ (J3 @ phi))
        w = minus_lap @ phi
        rhs = 0.0
        for ax in range(d):
            shifted = w.reshape(shape)
            rhs += ((np.roll(shifted, -1, axis=ax) - shifted) ** 2).sum()
        assert lhs == pytest.approx(rhs / (2 * d), rel=1e-10)


def test_triplet_dump(tmp_path):
    dom = interval_domain(3)
    op = laplacian_normalized(dom)
    path = tmp_path / "op.txt"
    op.dump_triplets(path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "row,col,value"
    assert lines[1] == "0,0,1"
    assert len(lines) == 1 + 7  # tridiagonal 3x3 has 7 entries
