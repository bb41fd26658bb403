"""Acceptance suite: one test per criterion, one printed verdict line each.

Run with `pytest -s tests/test_acceptance.py` to see the verdict lines.

Criteria 4 and 8 are asserted exactly as stated and are expected to fail
for verified model-level reasons (see README, "Acceptance status"):
the spectral-gap tolerance is unreachable at h = 1/64 for
the mixed model under the normative geometry, and the rescaled-variance
statistic spans a factor ~lambda^2 by exact scaling, so its grid max/min
cannot be <= 10.  They carry the `spec_defect` marker; deselect with
`pytest -m "not spec_defect"` for the attainable set.
"""

import numpy as np
import pytest
from scipy import stats

from interface_lab import (
    Coefficients,
    DomainSpec,
    QuadratureSpec,
    TestFunction,
    besov_scaling_statistic,
    bridge_covariance,
    discretize,
    discrete_variance_fourier,
    green_infinite,
    green_interp_sup_distance_1d,
    interpolate_path_1d,
    limit_variance_finite,
    limit_variance_infinite,
    mu_sandwich_check,
    path_max_1d,
    precision,
    sample,
    variance_pairing_exact,
)
from interface_lab.experiments import bridge_max_oracle
from interface_lab.fdm import ball_solution, spectral_gap_values, thomee_error_table
from interface_lab.greens import green_diagonal


def verdict(num, ok, detail):
    line = f"[criterion {num:2d}] {'PASS' if ok else 'FAIL'}  {detail}"
    print(line)
    return line


def test_criterion_01_infinite_volume_gff_limit():
    # d=3, kappa=(1,1), bump f: discrete symbol-side variance vs the
    # Parseval oracle; <= 10% at N=32 and strictly decreasing over {8,16,32}
    f = TestFunction.bump(3, radius=0.4)
    quad = QuadratureSpec()
    limit = limit_variance_infinite(f, 3, quad)
    rels = []
    for N in (8, 16, 32):
        v = discrete_variance_fourier(f, N, 3, (1.0, 1.0), quad)
        rels.append(abs(v - limit) / limit)
    ok = rels[-1] <= 0.10 and all(b < a for a, b in zip(rels, rels[1:]))
    line = verdict(1, ok, f"rel errs {[f'{r:.4f}' for r in rels]} vs limit {limit:.6e}")
    assert ok, line


def test_criterion_02_finite_volume_gff_limit():
    # d=2 ball, kappa=(1,1), bump f: exact lattice variance vs the continuum
    # Dirichlet functional; <= 5% at N=64, decreasing over {16,32,64}
    spec = DomainSpec.ball(2, 1.0)
    f = TestFunction.bump(2, radius=0.5)
    limit = limit_variance_finite(spec, f, 1 / 128)
    coeffs = Coefficients((1.0, 1.0))
    rels = []
    for N in (16, 32, 64):
        dom = discretize(spec, N, 2)
        op = precision(dom, coeffs)
        v = variance_pairing_exact(op, f)
        rels.append(abs(v - limit) / limit)
    ok = rels[-1] <= 0.05 and all(b < a for a, b in zip(rels, rels[1:]))
    line = verdict(2, ok, f"rel errs {[f'{r:.4f}' for r in rels]} vs limit {limit:.6e}")
    assert ok, line


def test_criterion_03_thomee_error_bound():
    # ball d=2, manufactured solution, kappa=(1,1): log-log slope >= 0.45 over
    # h in {1/16..1/128}; calibrated-constant bound holds at all finer h
    spec = DomainSpec.ball(2, 1.0)
    ms = ball_solution(spec)
    table = thomee_error_table(spec, ms, Coefficients((1.0, 1.0)),
                               [1 / 16, 1 / 32, 1 / 64, 1 / 128])
    ok = table.slope() >= 0.45 and table.bound_holds()
    line = verdict(3, ok, f"slope {table.slope():.3f}, "
                          f"errors {[f'{e:.2e}' for e in table.errors]}")
    assert ok, line


@pytest.mark.spec_defect
def test_criterion_04_spectral_gap():
    # interval and box, kappa=(1,1): |h^-2 mu_1 - lambda_1|/lambda_1 <= 2%
    # at h = 1/64.  The boundary collar of the depth-2 layer shifts the
    # eigenvalue by O(h) (~ +9% here), so this tolerance is not attainable
    # at this h; the convergence trend and the first-order extrapolation are
    # asserted separately below and pass.
    coeffs = Coefficients((1.0, 1.0))
    hs = [1 / 16, 1 / 32, 1 / 64]
    results = {}
    for spec, lam1 in ((DomainSpec.interval(), np.pi**2),
                       (DomainSpec.unit_box(2), 2 * np.pi**2)):
        rows = spectral_gap_values(spec, coeffs, hs)
        rels = [abs(r[2] - lam1) / lam1 for r in rows]
        extrap = 2 * rows[-1][2] - rows[-2][2]
        results[spec.shape] = (rels, extrap, lam1)
        assert all(b < a for a, b in zip(rels, rels[1:])), "trend toward lambda_1"
        assert abs(extrap - lam1) / lam1 <= 0.02, "extrapolated value within 2%"
    ok = all(rels[-1] <= 0.02 for rels, _, _ in results.values())
    detail = "; ".join(
        f"{shape}: rel err at h=1/64 {rels[-1]:.4f} (extrapolated {ex:.3f} vs {lam:.3f})"
        for shape, (rels, ex, lam) in results.items())
    line = verdict(4, ok, detail)
    assert ok, line + "  [known-red criterion: O(h) collar shift; README, Acceptance status]"


def test_criterion_05_bridge_one_dimensional():
    # mixed kappa=(1,1): Green interpolation sup <= 0.05 at N=256 and
    # decreasing; Var[psi(1/2)] within 4 stderr of 1/4 at 1e4 samples;
    # mean node maximum within 5% of the dense-bridge oracle on the same grid
    coeffs = Coefficients((1.0, 1.0))
    sups = []
    for N in (32, 64, 128, 256):
        dom = discretize(DomainSpec.interval(), N, 2)
        op = precision(dom, coeffs)
        sups.append(green_interp_sup_distance_1d(op))
    sup_ok = sups[-1] <= 0.05 and all(b < a for a, b in zip(sups, sups[1:]))

    N = 256
    count = 10_000
    dom = discretize(DomainSpec.interval(), N, 2)
    op = precision(dom, coeffs)
    batch = sample(op, count, seed=42)
    paths = [interpolate_path_1d(dom, s) for s in batch.samples]
    mids = np.array([p(0.5) for p in paths])
    target = bridge_covariance(0.5, 0.5)
    stderr = np.sqrt(2.0 / count) * target
    var_ok = abs(mids.var(ddof=1) - target) <= 4 * stderr

    maxima = np.array([path_max_1d(p) for p in paths])
    oracle = bridge_max_oracle(N, 4 * count, seed=1042)
    max_ok = abs(maxima.mean() - oracle) / oracle <= 0.05

    ok = sup_ok and var_ok and max_ok
    line = verdict(5, ok, f"sup {sups[-1]:.4f}, var(mid) {mids.var(ddof=1):.4f} "
                          f"vs 0.25, mean max {maxima.mean():.4f} vs oracle {oracle:.4f}")
    assert ok, line


def test_criterion_06_brascamp_lieb_domination():
    # every diagonal Green value of the mixed model is dominated by the
    # pure-gradient value (deterministic solves, d=1 N=256 and d=2 N=32)
    worst = np.inf
    for spec, N in ((DomainSpec.interval(), 256), (DomainSpec.unit_box(2), 32)):
        dom = discretize(spec, N, 2)
        mixed = green_diagonal(precision(dom, Coefficients((1.0, 1.0))))
        pure = green_diagonal(precision(dom, Coefficients((1.0,))))
        worst = min(worst, float((pure - mixed).min()))
    ok = worst >= -1e-10
    line = verdict(6, ok, f"min margin pure - mixed = {worst:.3e}")
    assert ok, line


def test_criterion_07_symbol_sandwich():
    # lower <= value <= upper on a 10^4-point (theta, N) grid per dimension
    rng = np.random.default_rng(7)
    checked = 0
    for d in (1, 2, 3):
        for N in (4, 8, 16, 32, 64):
            theta = rng.uniform(-N * np.pi, N * np.pi, size=(700, d))
            theta = theta[np.linalg.norm(theta, axis=1) > 1e-9]
            lower, value, upper = mu_sandwich_check(theta, N)
            assert np.all(lower <= value * (1 + 1e-12))
            assert np.all(value <= upper * (1 + 1e-12))
            checked += len(theta)
    ok = checked >= 10_000
    line = verdict(7, ok, f"{checked} nodes checked across d in {{1,2,3}}")
    assert ok, line


@pytest.mark.spec_defect
def test_criterion_08_besov_scaling_statistic():
    # lambda^d Var[(Psi_N, f_lambda)] over lambda in {1,...,1/8}, N in {16,32}:
    # stated grid max/min <= 10.  The statistic equals lambda^2 times the
    # Parseval norm up to lattice corrections, so the grid ratio is ~80 and
    # the stated bound is unattainable; boundedness (max at lambda = 1) and
    # uniformity across N are asserted separately and pass.
    f = TestFunction.bump(3, radius=0.4)
    lambdas = (1.0, 0.5, 0.25, 0.125)
    values = {}
    for N in (16, 32):
        for lam, stat in besov_scaling_statistic(f, lambdas, N, d=3,
                                                 coeffs=(1.0, 1.0)):
            values[(N, lam)] = stat
    arr = np.array(list(values.values()))
    joint_ratio = float(arr.max() / arr.min())
    lam1_max = max(values[(N, 1.0)] for N in (16, 32))
    assert arr.max() <= lam1_max * (1 + 1e-9), "statistic bounded by lambda=1 value"
    across = max(
        max(values[(N, lam)] for N in (16, 32)) / min(values[(N, lam)] for N in (16, 32))
        for lam in lambdas)
    assert across <= 10.0, "uniformity across N at fixed lambda"
    ok = joint_ratio <= 10.0
    line = verdict(8, ok, f"grid max/min {joint_ratio:.1f}, across-N ratio {across:.2f}")
    assert ok, line + "  [known-red criterion: exact lambda^2 scaling; README, Acceptance status]"


def test_criterion_09_green_decay():
    # d=3 kappa=(1,1): log G(0,(r,0,0)) vs log r slope in -1 +- 0.15
    rs = np.arange(4, 17)
    vals = np.array([green_infinite((int(r), 0, 0), (1.0, 1.0), 3) for r in rs])
    slope = float(np.polyfit(np.log(rs), np.log(vals), 1)[0])
    ok = abs(slope - (-1.0)) <= 0.15
    line = verdict(9, ok, f"decay slope {slope:.4f}")
    assert ok, line


def test_criterion_10_sampler_correctness():
    # empirical covariances within 4 stderr for >= 99% of pairs (d=1 and
    # d=2, 1e4 samples); KS test of standardized marginals at level 0.01
    count = 10_000
    total, hits = 0, 0
    pvals = []
    for spec, N, seed in ((DomainSpec.interval(), 64, 5),
                          (DomainSpec.unit_box(2), 32, 6)):
        dom = discretize(spec, N, 2)
        op = precision(dom, Coefficients((1.0, 1.0)))
        G = np.linalg.inv(op.to_dense())
        batch = sample(op, count, seed=seed)
        S = batch.samples - batch.samples.mean(axis=0)
        n = dom.size
        rng = np.random.default_rng(seed)
        pairs = [(i, i) for i in rng.integers(0, n, 150)]
        pairs += [tuple(rng.integers(0, n, 2)) for _ in range(150)]
        for i, j in pairs:
            est = float((S[:, i] * S[:, j]).sum() / (count - 1))
            sd = np.sqrt((G[i, i] * G[j, j] + G[i, j] ** 2) / count)
            hits += abs(est - G[i, j]) <= 4 * sd
            total += 1
        node = n // 2
        z = batch.samples[:, node] / np.sqrt(G[node, node])
        pvals.append(float(stats.kstest(z, "norm").pvalue))
    frac = hits / total
    ok = frac >= 0.99 and all(p > 0.01 for p in pvals)
    line = verdict(10, ok, f"pair fraction {frac:.4f}, KS p-values "
                           f"{[f'{p:.3f}' for p in pvals]}")
    assert ok, line
