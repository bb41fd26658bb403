"""Rescaled field functionals and their continuum limits.

The rescaled field pairs with a test function f through

    (Psi_N, f) = k N^{-(d+2)/2} sum_x phi_{Nx} f(x),     k = 1/sqrt(2d),

summing over the rescaled lattice.  Its variance admits three routes:

* exact finite volume: k^2 N^{-(d+2)} v^T J^{-1} v with v the node values
  of f (one Dirichlet solve, no Monte Carlo);
* exact infinite volume (d >= 3): the symbol-side integral
  k^2 N^{-2} (2pi)^{-d} int_{[-N pi, N pi]^d} (k1 mu + k2 mu^2)^{-1}(theta/N)
  |N^{-d} sum_x f(x) e^{-i<x,theta>}|^2 dtheta, with the lattice Fourier sum
  evaluated exactly over the support of f;
* continuum limits: the Parseval integral int |theta|^{-2} |fhat|^2 dtheta in
  infinite volume, and int_D u f with -Delta_c u = f in finite volume.

The one-dimensional path machinery (linear interpolation psi_N, the
piecewise-constant Green comparison against x ^ y - xy, node maxima) and
the box eigenbasis tooling for negative Sobolev norms and the spectral
series of the limit field live here as well.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import NamedTuple

import numpy as np

from .continuum import dirichlet_functional_extrapolated
from .domains import DomainSpec, LatticeDomain
from .errors import DimensionMismatch, QuadratureNotConverged
from .greens import LinearSolver, mu_bound_pair
from .operators import SparseSymOperator
from .quadrature import QuadratureSpec, panel_rule, shell_boxes_full


def scaling_constant(d: int) -> float:
    """k = 1/sqrt(2d)."""
    return 1.0 / np.sqrt(2.0 * d)


# ---------------------------------------------------------------------------
# test functions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TestFunction:
    """Smooth compactly supported test function.

    kind 'bump': amplitude * exp(1 - 1/(1 - |x-center|^2/radius^2)) inside
    the ball of `radius` around `center`, zero outside; smooth on R^d.

    kind 'product_sine': 2^{d/2} prod_i sin(m_i pi x_i) on the unit box
    (the box Dirichlet eigenfunctions), zero outside.

    The dilation f_lambda(x) = lambda^{-d} f(x/lambda) stays in the bump
    family with scaled center, radius and amplitude.
    """

    __test__ = False  # not a pytest collection target

    kind: str
    dimension: int
    center: tuple = ()
    radius: float = 0.0
    amplitude: float = 1.0
    modes: tuple = ()

    @staticmethod
    def bump(d: int, center=None, radius: float = 0.4, amplitude: float = 1.0):
        center = tuple(center) if center is not None else (0.0,) * d
        if radius <= 0:
            raise ValueError("bump radius must be positive")
        return TestFunction("bump", d, center=center, radius=radius,
                            amplitude=amplitude)

    @staticmethod
    def product_sine(modes) -> "TestFunction":
        modes = tuple(int(m) for m in modes)
        if any(m < 1 for m in modes):
            raise ValueError("sine modes must be positive integers")
        return TestFunction("product_sine", len(modes), modes=modes)

    def __call__(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if self.kind == "bump":
            t2 = ((x - np.asarray(self.center)) ** 2).sum(axis=-1) / self.radius**2
            out = np.zeros(t2.shape)
            m = t2 < 1.0
            out[m] = self.amplitude * np.exp(1.0 - 1.0 / (1.0 - t2[m]))
            return out
        inside = np.all((x > 0.0) & (x < 1.0), axis=-1)
        vals = 2.0 ** (self.dimension / 2) * np.prod(
            np.sin(np.asarray(self.modes) * np.pi * x), axis=-1)
        return np.where(inside, vals, 0.0)

    def dilated(self, lam: float) -> "TestFunction":
        """f_lambda(x) = lambda^{-d} f(x / lambda)."""
        if self.kind != "bump":
            raise ValueError("dilation is defined for bump test functions")
        if not 0 < lam <= 1:
            raise ValueError("lambda must lie in (0, 1]")
        return replace(
            self,
            center=tuple(lam * c for c in self.center),
            radius=lam * self.radius,
            amplitude=self.amplitude * lam ** (-self.dimension),
        )

    def support_box(self):
        """Per-axis (lo, hi) bounds of the support."""
        if self.kind == "bump":
            return [(c - self.radius, c + self.radius) for c in self.center]
        return [(0.0, 1.0)] * self.dimension

    def fourier_radial(self, rho, points: int = 400) -> np.ndarray:
        """|fhat| profile F(rho) for radial bumps via the Hankel reduction.

        fhat(theta) = exp(-i<theta, center>) F(|theta|) with
        F(rho) = rho^{1-d/2} int_0^r g(s) J_{d/2-1}(s rho) s^{d/2} ds.
        """
        if self.kind != "bump":
            raise ValueError("radial transform requires a bump")
        from scipy.special import gamma, jv

        d = self.dimension
        nu = d / 2.0 - 1.0
        s, w = panel_rule(0.0, self.radius, points, "tensor_gauss")
        t2 = (s / self.radius) ** 2
        g = self.amplitude * np.exp(1.0 - 1.0 / (1.0 - t2))
        rho = np.atleast_1d(np.asarray(rho, dtype=float))
        out = np.empty_like(rho)
        small = np.abs(rho) < 1e-9
        if np.any(~small):
            r = rho[~small][:, None]
            kern = jv(nu, r * s[None, :]) * r ** (1.0 - d / 2.0)
            out[~small] = (kern * (g * s ** (d / 2.0) * w)[None, :]).sum(axis=1)
        if np.any(small):
            out[small] = (g * s ** (d - 1) * w).sum() / (2.0**nu * gamma(nu + 1.0))
        return out

    def fourier(self, theta, points: int = 400) -> np.ndarray:
        """fhat(theta) with the (2pi)^{-d/2} e^{-i<theta,x>} convention."""
        theta = np.atleast_2d(np.asarray(theta, dtype=float))
        if self.kind == "bump":
            rho = np.linalg.norm(theta, axis=-1)
            phase = np.exp(-1j * theta @ np.asarray(self.center))
            return self.fourier_radial(rho, points) * phase
        out = np.ones(theta.shape[0], dtype=complex) * 2.0 ** (self.dimension / 2)
        for i, m in enumerate(self.modes):
            t = theta[:, i]
            mp = m * np.pi
            sing = np.abs(np.abs(t) - mp) < 1e-9
            safe = np.where(sing, t + 1.0, t)
            main = mp * (1.0 - (-1.0) ** m * np.exp(-1j * safe)) / (mp**2 - safe**2)
            # removable point theta = +-m pi: integral equals -+ i/2
            lim = -0.5j * np.sign(t)
            out *= (2 * np.pi) ** (-0.5) * np.where(sing, lim, main)
        return out


# ---------------------------------------------------------------------------
# pairings and exact variances
# ---------------------------------------------------------------------------

def field_pairing(domain: LatticeDomain, phi: np.ndarray, f: TestFunction) -> float:
    """(Psi_N, f) = k N^{-(d+2)/2} sum phi_{Nx} f(x) over the interior."""
    phi = np.asarray(phi, dtype=float)
    if phi.shape != (domain.size,):
        raise DimensionMismatch("field length does not match the domain interior")
    d = domain.dimension
    v = f(domain.coordinates())
    return float(scaling_constant(d) * domain.N ** (-(d + 2) / 2.0) * (phi * v).sum())


def variance_pairing_exact(op: SparseSymOperator, f: TestFunction,
                           solver: LinearSolver = None) -> float:
    """Var[(Psi_N, f)] = k^2 N^{-(d+2)} v^T J^{-1} v via one Dirichlet solve."""
    if op.meta != "precision":
        raise ValueError("exact variance requires the precision operator")
    domain = op.domain
    d = domain.dimension
    v = f(domain.coordinates())
    solver = solver or LinearSolver(op)
    g = solver.solve(v)
    return float(scaling_constant(d) ** 2 * domain.N ** (-(d + 2.0)) * (v @ g))


def limit_variance_infinite(f: TestFunction, d: int,
                            quad: QuadratureSpec = QuadratureSpec()) -> float:
    """Parseval form of the limit variance: int |theta|^{-2} |fhat|^2 dtheta.

    Radial reduction S_{d-1} int rho^{d-3} F(rho)^2 drho for bump test
    functions; requires d >= 3 for integrability at the origin.
    """
    if d < 3:
        raise ValueError("the infinite-volume limit needs d >= 3")
    if f.kind != "bump":
        raise ValueError("implemented for bump test functions")
    from math import gamma, pi

    surface = 2 * pi ** (d / 2.0) / gamma(d / 2.0)
    total = 0.0
    panel = max(quad.points_per_axis, 24)
    width = max(4.0 / f.radius, 8.0)
    lo = 0.0
    quiet = 0
    for _ in range(quad.origin_refinement_levels + 200):
        x, w = panel_rule(lo, lo + width, panel, quad.scheme)
        F = f.fourier_radial(x)
        part = float((w * x ** (d - 3) * F * F).sum())
        total += part
        lo += width
        if abs(part) <= quad.rel_tol * max(abs(total), 1e-300):
            quiet += 1
            if quiet >= 3:
                return surface * total
        else:
            quiet = 0
    raise QuadratureNotConverged("radial tail did not settle below rel_tol")


def lattice_fourier_sum(f: TestFunction, N: int, thetas: np.ndarray) -> np.ndarray:
    """S(theta) = N^{-d} sum_x f(x) e^{-i<x,theta>} over x in (1/N) Z^d."""
    d = f.dimension
    thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
    offsets, fgrid = _support_grid(f, N)
    out = np.zeros(thetas.shape[0], dtype=complex)
    flat = fgrid.ravel()  # fgrid already carries the N^{-d} weight
    coords = np.stack(np.meshgrid(*offsets, indexing="ij"), -1).reshape(-1, d)
    for row, th in enumerate(thetas):
        out[row] = (flat * np.exp(-1j * (coords / N) @ th)).sum()
    return out


def _support_grid(f: TestFunction, N: int):
    """Integer offsets per axis covering supp(f) at resolution N, and f/N^d."""
    offsets = []
    for lo, hi in f.support_box():
        offsets.append(np.arange(int(np.ceil(lo * N)), int(np.floor(hi * N)) + 1))
    grids = np.meshgrid(*offsets, indexing="ij")
    X = np.stack(grids, -1).astype(float) / N
    vals = f(X.reshape(-1, f.dimension)).reshape(X.shape[:-1])
    return offsets, vals / N**f.dimension


def discrete_variance_fourier(f: TestFunction, N: int, d: int, coeffs,
                              quad: QuadratureSpec = QuadratureSpec(),
                              check_bounds: bool = None) -> float:
    """Exact infinite-volume variance of (Psi_N, f) on the symbol side.

    After substituting phi = theta/N the integral runs over [-pi, pi]^d
    against |P(phi)|^2 with the trigonometric polynomial
    P(phi) = N^{-d} sum_m f(m/N) e^{-i<m, phi>}; dyadic shells handle the
    mu^{-1} origin singularity and panel resolution follows the
    oscillation scale of P on outer shells.
    """
    if d < 3:
        raise ValueError("infinite-volume variance requires d >= 3")
    kappa1, kappa2 = (float(c) for c in coeffs)
    if kappa1 <= 0:
        raise ValueError("kappa1 must be positive")
    if check_bounds is None:
        from .greens import MU_BOUND_CONSTANT

        check_bounds = (kappa1 == 1.0 and kappa2 == 1.0 and d in MU_BOUND_CONSTANT)
    offsets, fgrid = _support_grid(f, N)
    if fgrid.size == 0 or np.abs(fgrid).max() == 0.0:
        return 0.0
    mspan = max(max(abs(int(o[0])), abs(int(o[-1]))) for o in offsets)
    abs_sum = float(np.abs(fgrid).sum())
    from math import gamma, pi as mpi

    surface = 2 * mpi ** (d / 2.0) / gamma(d / 2.0)
    prefactor = scaling_constant(d) ** 2 * N ** (d - 2.0) / (2 * np.pi) ** d

    total = 0.0
    a = np.pi
    converged = False
    for _ in range(quad.origin_refinement_levels):
        phase = mspan * a
        p = quad.points_per_axis if phase <= 3.0 else int(
            min(56, max(quad.points_per_axis, 0.8 * phase + 10)))
        for box in shell_boxes_full(a, d):
            axes = [panel_rule(lo, hi, p, quad.scheme) for lo, hi in box]
            T = fgrid.astype(complex)
            for (x, _), off in zip(axes, offsets):
                E = np.exp(-1j * np.outer(x, off))
                T = np.tensordot(T, E, axes=([0], [1]))
            P2 = (T.real**2 + T.imag**2)
            mu = np.zeros(tuple(len(x) for x, _ in axes))
            nsq = np.zeros_like(mu)
            for i, (x, _) in enumerate(axes):
                shape = [1] * d
                shape[i] = len(x)
                mu = mu + (2 * np.sin(x / 2) ** 2).reshape(shape)
                nsq = nsq + (x * x).reshape(shape)
            mu /= d
            W = 1.0 / (kappa1 * mu + kappa2 * mu * mu)
            if check_bounds:
                lower, upper = mu_bound_pair(nsq * N * N, d, N)
                Wn = W / (N * N)
                if np.any(Wn < lower * (1 - 1e-12)) or np.any(Wn > upper * (1 + 1e-12)):
                    raise AssertionError("symbol sandwich violated at a quadrature node")
            vals = W * P2
            for (x, w) in reversed(axes):
                vals = np.tensordot(vals, w, axes=([vals.ndim - 1], [0]))
            total += float(vals)
        a *= 0.5
        core = (d * np.pi**2 / (2 * kappa1)) * surface * (a * np.sqrt(d)) ** (d - 2) \
            / (d - 2) * abs_sum**2
        if core <= quad.rel_tol * max(abs(total), 1e-300):
            converged = True
            break
    if not converged:
        raise QuadratureNotConverged("origin refinement exhausted before rel_tol")
    return prefactor * total


def limit_variance_finite(spec: DomainSpec, f: TestFunction, h_ref: float) -> float:
    """Finite-volume limit int_D u f with -Delta_c u = f, u = 0 on the boundary.

    Solved by second-order finite differences at spacings h_ref and h_ref/2
    with Richardson extrapolation of the functional.
    """
    M = round(1.0 / h_ref)
    if abs(M * h_ref - 1.0) > 1e-12:
        raise ValueError("h_ref must be 1/M for an integer M")
    return dirichlet_functional_extrapolated(spec, f, M)


def besov_scaling_statistic(f: TestFunction, lambdas, N: int, d: int = None,
                            coeffs=None, op: SparseSymOperator = None,
                            quad: QuadratureSpec = QuadratureSpec()) -> list:
    """Rescaled variances [(lambda, lambda^d Var[(Psi_N, f_lambda)])].

    Infinite-volume route when `coeffs` is given (d >= 3, symbol side);
    finite-volume route when `op` is given (exact solve per lambda).
    """
    out = []
    for lam in lambdas:
        flam = f.dilated(float(lam))
        if coeffs is not None:
            var = discrete_variance_fourier(flam, N, d, coeffs, quad)
            dim = d
        elif op is not None:
            if op.domain.N != N:
                raise ValueError("op resolution does not match N")
            var = variance_pairing_exact(op, flam)
            dim = op.domain.dimension
        else:
            raise ValueError("need either coeffs (infinite) or op (finite volume)")
        out.append((float(lam), float(lam) ** dim * var))
    return out


# ---------------------------------------------------------------------------
# box eigenbasis: negative Sobolev norms and the spectral series of the limit
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EigenData:
    """Dirichlet eigendata of -Delta_c on the unit box, sorted by eigenvalue.

    modes[j] is the integer frequency vector m of u_j(x) = 2^{d/2}
    prod_i sin(m_i pi x_i); lam[j] = pi^2 |m|^2.
    """

    dimension: int
    modes: np.ndarray
    lam: np.ndarray = field(repr=False)

    @property
    def truncation(self) -> int:
        return len(self.lam)

    def eigenfunction(self, j: int, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        m = self.modes[j]
        return 2.0 ** (self.dimension / 2) * np.prod(np.sin(m * np.pi * x), axis=-1)

    def weyl_ratios(self) -> np.ndarray:
        """lam_j / j^{2/d}, bounded above and below for a sane truncation."""
        j = np.arange(1, self.truncation + 1, dtype=float)
        return self.lam / j ** (2.0 / self.dimension)


def box_eigendata(d: int, count: int) -> EigenData:
    side = int(np.ceil(count ** (1.0 / d))) + 3
    g = np.arange(1, side + 1)
    modes = np.stack(np.meshgrid(*([g] * d), indexing="ij"), -1).reshape(-1, d)
    lam = np.pi**2 * (modes**2).sum(axis=1).astype(float)
    order = np.lexsort((*(modes.T[::-1]), lam))
    modes, lam = modes[order], lam[order]
    return EigenData(dimension=d, modes=modes[:count], lam=lam[:count])


def eigen_coefficients(eig: EigenData, f: TestFunction, points: int = 80) -> np.ndarray:
    """<f, u_j> for all truncated modes (analytic for product_sine)."""
    if f.kind == "product_sine":
        out = np.zeros(eig.truncation)
        for j, m in enumerate(eig.modes):
            if tuple(m) == f.modes:
                out[j] = 1.0
        return out
    axes = [panel_rule(max(lo, 0.0), min(hi, 1.0), points, "tensor_gauss")
            for lo, hi in f.support_box()]
    grids = np.meshgrid(*[x for x, _ in axes], indexing="ij")
    X = np.stack(grids, -1)
    vals = f(X.reshape(-1, eig.dimension)).reshape(X.shape[:-1])
    out = np.empty(eig.truncation)
    for j, m in enumerate(eig.modes):
        term = vals * 2.0 ** (eig.dimension / 2)
        for i, (x, w) in enumerate(axes):
            shape = [1] * (eig.dimension - i)
            shape[0] = len(x)
            term = np.tensordot(np.sin(m[i] * np.pi * x) * w, term, axes=([0], [0]))
        out[j] = float(term)
    return out


class SobolevNorm(NamedTuple):
    value: float
    tail_bound: float


def sobolev_norm_neg(coefvec: np.ndarray, s: float, eig: EigenData) -> SobolevNorm:
    """Squared H^{-s} norm sum lam_j^{-s} c_j^2 with a Weyl tail bound."""
    c = np.asarray(coefvec, dtype=float)
    if c.shape != (eig.truncation,):
        raise ValueError("coefficient vector length must match the truncation")
    value = float((eig.lam ** (-s) * c * c).sum())
    d = eig.dimension
    J = eig.truncation
    c_weyl = float(np.min(eig.weyl_ratios()))
    if 2 * s / d > 1:
        tail = float(np.max(c * c) * c_weyl ** (-s)
                     * J ** (1 - 2 * s / d) / (2 * s / d - 1))
    else:
        tail = np.inf
    return SobolevNorm(value=value, tail_bound=tail)


def gff_series_sample(eig: EigenData, J: int, seed: int) -> np.ndarray:
    """Truncated spectral series coefficients lam_j^{-1/2} xi_j, xi_j iid N(0,1)."""
    if not 1 <= J <= eig.truncation:
        raise ValueError("J must lie within the truncation")
    rng = np.random.default_rng(np.random.SeedSequence((int(seed), 0)))
    xi = rng.standard_normal(J)
    return eig.lam[:J] ** (-0.5) * xi


def series_pairing(coefvec: np.ndarray, fcoef: np.ndarray) -> float:
    """(Psi_D, f) from series coefficients and <f, u_j>."""
    n = min(len(coefvec), len(fcoef))
    return float(np.dot(coefvec[:n], fcoef[:n]))


# ---------------------------------------------------------------------------
# one-dimensional paths
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PathFunction1d:
    """Piecewise-linear path on [0, 1] with values at t = i/N."""

    values: np.ndarray = field(repr=False)

    @property
    def N(self) -> int:
        return len(self.values) - 1

    def __call__(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        pos = np.clip(t * self.N, 0.0, self.N)
        j = np.minimum(pos.astype(int), self.N - 1)
        frac = pos - j
        return (1 - frac) * self.values[j] + frac * self.values[j + 1]


def interpolate_path_1d(domain: LatticeDomain, phi: np.ndarray) -> PathFunction1d:
    """psi_N(t) = k N^{-1/2} [phi_{[Nt]} + (Nt - [Nt])(phi_{[Nt]+1} - phi_{[Nt]})]."""
    if domain.dimension != 1:
        raise ValueError("path interpolation is one-dimensional")
    phi = np.asarray(phi, dtype=float)
    if phi.shape != (domain.size,):
        raise DimensionMismatch("field length does not match the domain interior")
    N = domain.N
    full = np.zeros(N + 1)
    full[domain.interior[:, 0]] = phi
    return PathFunction1d(values=scaling_constant(1) / np.sqrt(N) * full)


def path_max_1d(path: PathFunction1d) -> float:
    """Maximum over [0, 1]; attained at a node for piecewise-linear paths."""
    return float(path.values.max())


def bridge_covariance(x: float, y: float):
    """G_D(x, y) = min(x, y) - x y on the unit interval."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return np.minimum(x, y) - x * y


def green_interp_sup_distance_1d(op: SparseSymOperator, refine: int = 4) -> float:
    """sup over [0,1]^2 of |G^I_{1/N} - G_D| for the piecewise-constant
    interpolation of G_{1/N}(x, y) = (k^2/N) G(Nx, Ny)."""
    domain = op.domain
    if domain.dimension != 1:
        raise ValueError("one-dimensional comparison")
    N = domain.N
    G = np.linalg.inv(op.to_dense())
    full = np.zeros((N + 1, N + 1))
    ix = domain.interior[:, 0]
    full[np.ix_(ix, ix)] = scaling_constant(1) ** 2 / N * G
    t = np.arange(refine * N + 1) / (refine * N)
    cell = np.minimum((t * N).astype(int), N)
    GI = full[np.ix_(cell, cell)]
    TT, SS = np.meshgrid(t, t, indexing="ij")
    return float(np.abs(GI - bridge_covariance(TT, SS)).max())
