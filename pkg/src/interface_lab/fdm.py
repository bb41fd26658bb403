"""Quantitative finite-difference error and spectral-gap experiments.

Manufactured solutions u vanish on the ball boundary by construction,
u(x) = (R^2 - |x|^2)^2 g(x) with polynomial g, so f = -Delta_c u and every
derivative sup-norm is exact (polynomial calculus plus a dense-grid sup).
The discrete problem solves L_h u_h = f on R_h with u_h = 0 on B_h and the
reported error is the weighted norm ||R_h e_h||_h, e_h = u - u_h, with

    ||f||_h^2 = h^d sum f(xi)^2.

The truncated operator L_{h,1} equals L_h on R_h*, h L_h on the collar
B_h*, and zero outside R_h; its residual split diagnoses the two error
sources (interior Taylor remainder vs boundary collar).  The spectral-gap
experiment tracks h^{-2} mu_1(h^2 L_h) against the smallest Dirichlet
eigenvalue of -Delta_c.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product as iter_product

import numpy as np

from .continuum import continuum_lambda1
from .domains import DomainSpec, ThomeePartition, discretize
from .errors import DimensionMismatch, NoConvergence, SolveFailure
from .greens import LinearSolver
from .operators import Coefficients, SparseSymOperator, scaled_operator_Lh


class Poly:
    """Multivariate polynomial as {exponent tuple: coefficient}."""

    def __init__(self, terms: dict, dimension: int):
        self.dimension = dimension
        self.terms = {tuple(k): float(v) for k, v in terms.items() if v != 0.0}

    @staticmethod
    def constant(c: float, dimension: int) -> "Poly":
        return Poly({(0,) * dimension: c}, dimension)

    @staticmethod
    def coordinate(axis: int, dimension: int) -> "Poly":
        e = [0] * dimension
        e[axis] = 1
        return Poly({tuple(e): 1.0}, dimension)

    def __add__(self, other: "Poly") -> "Poly":
        out = dict(self.terms)
        for k, v in other.terms.items():
            out[k] = out.get(k, 0.0) + v
        return Poly(out, self.dimension)

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            return Poly({k: v * other for k, v in self.terms.items()}, self.dimension)
        out = {}
        for ka, va in self.terms.items():
            for kb, vb in other.terms.items():
                k = tuple(a + b for a, b in zip(ka, kb))
                out[k] = out.get(k, 0.0) + va * vb
        return Poly(out, self.dimension)

    __rmul__ = __mul__

    def diff(self, axis: int) -> "Poly":
        out = {}
        for k, v in self.terms.items():
            if k[axis] == 0:
                continue
            kk = list(k)
            kk[axis] -= 1
            out[tuple(kk)] = out.get(tuple(kk), 0.0) + v * k[axis]
        return Poly(out, self.dimension)

    def laplacian(self) -> "Poly":
        out = Poly({}, self.dimension)
        for axis in range(self.dimension):
            out = out + self.diff(axis).diff(axis)
        return out

    def __call__(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        out = np.zeros(x.shape[0])
        for k, v in self.terms.items():
            term = np.full(x.shape[0], v)
            for axis, power in enumerate(k):
                if power:
                    term = term * x[:, axis] ** power
            out += term
        return out


@dataclass(frozen=True)
class ManufacturedSolution:
    """Analytic Dirichlet solution with exact rhs and derivative sup-norms.

    M_k = sum over multi-indices |alpha| <= k of sup_D |D^alpha u|.
    """

    name: str
    u: Poly
    f: Poly = field(repr=False)
    M1: float
    M3: float


def _derivative_sup(u: Poly, spec: DomainSpec, order: int, grid: int = 161) -> float:
    """sum_{|alpha| <= order} sup over a dense domain grid of |D^alpha u|.

    The grid includes the exact boundary (sups of boundary-attained
    derivatives would otherwise be clipped by the membership filter).
    """
    d = spec.dimension
    if spec.shape == "Ball":
        c = np.asarray(spec.center)
        axes = [np.linspace(ci - spec.radius, ci + spec.radius, grid) for ci in c]
        pts = np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, d)
        pts = pts[((pts - c) ** 2).sum(axis=1) <= spec.radius**2]
        if d == 2:
            theta = np.linspace(0.0, 2 * np.pi, 1024, endpoint=False)
            ring = c + spec.radius * np.stack([np.cos(theta), np.sin(theta)], -1)
            pts = np.vstack([pts, ring])
    else:
        axes = [np.linspace(0.0, 1.0, grid)] * d
        pts = np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, d)
    total = 0.0
    for k in range(order + 1):
        for alpha in iter_product(range(k + 1), repeat=d):
            if sum(alpha) != k:
                continue
            da = u
            for axis, times in enumerate(alpha):
                for _ in range(times):
                    da = da.diff(axis)
            total += float(np.abs(da(pts)).max()) if da.terms else 0.0
    return total


def ball_solution(spec: DomainSpec, g: Poly = None, name: str = "radial-quartic"
                  ) -> ManufacturedSolution:
    """u = (R^2 - |x - c|^2)^2 g(x): zero boundary value and normal derivative."""
    if spec.shape != "Ball":
        raise ValueError("manufactured solutions are built on ball domains")
    d = spec.dimension
    if g is None:
        g = Poly.constant(1.0, d)
    shell = Poly.constant(spec.radius**2, d)
    c = spec.center
    for axis in range(d):
        xi = Poly.coordinate(axis, d) + Poly.constant(-c[axis], d)
        shell = shell + (-1.0) * (xi * xi)
    u = shell * shell * g
    f = u.laplacian() * (-1.0)
    M1 = _derivative_sup(u, spec, 1)
    M3 = _derivative_sup(u, spec, 3)
    return ManufacturedSolution(name=name, u=u, f=f, M1=M1, M3=M3)


def grid_norm(values: np.ndarray, h: float, d: int) -> float:
    """Weighted grid norm ||f||_h = sqrt(h^d sum f^2)."""
    values = np.asarray(values, dtype=float)
    return float(np.sqrt(h**d * (values * values).sum()))


def thomee_solve(spec: DomainSpec, ms: ManufacturedSolution, coeffs: Coefficients,
                 h: float):
    """Solve L_h u_h = f on R_h with zero collar; return (domain, op, u_h, e_h)."""
    N = round(1.0 / h)
    if abs(N * h - 1.0) > 1e-12:
        raise ValueError("h must be 1/N for an integer N")
    domain = discretize(spec, N, coeffs.order)
    op = scaled_operator_Lh(domain, coeffs)
    rhs = ms.f(domain.coordinates())
    u_h = LinearSolver(op).solve(rhs)
    e_h = ms.u(domain.coordinates()) - u_h
    return domain, op, u_h, e_h


def thomee_error(spec: DomainSpec, ms: ManufacturedSolution, coeffs: Coefficients,
                 h: float) -> float:
    """||R_h e_h||_h for the truncated-boundary discrete Dirichlet problem."""
    domain, _, _, e_h = thomee_solve(spec, ms, coeffs, h)
    return grid_norm(e_h, h, spec.dimension)


def error_bound_bracket(ms: ManufacturedSolution, h: float) -> float:
    """The h-dependent bracket M3^2 h^2 + h (M3^2 h^4 + M1^2) of the bound."""
    return ms.M3**2 * h**2 + h * (ms.M3**2 * h**4 + ms.M1**2)


@dataclass(frozen=True)
class ErrorTable:
    """Rows (h, ||R_h e_h||_h, bound bracket) plus the calibrated constant."""

    hs: tuple
    errors: tuple
    brackets: tuple
    calibrated_C: float

    def slope(self) -> float:
        return float(np.polyfit(np.log(self.hs), np.log(self.errors), 1)[0])

    def bound_holds(self) -> bool:
        return all(e * e <= self.calibrated_C * b * (1 + 1e-12)
                   for e, b in zip(self.errors, self.brackets))


def thomee_error_table(spec: DomainSpec, ms: ManufacturedSolution,
                       coeffs: Coefficients, hs) -> ErrorTable:
    """Error sweep with the constant calibrated at the coarsest spacing."""
    hs = sorted((float(h) for h in hs), reverse=True)
    errors = [thomee_error(spec, ms, coeffs, h) for h in hs]
    brackets = [error_bound_bracket(ms, h) for h in hs]
    C = errors[0] ** 2 / brackets[0]
    return ErrorTable(hs=tuple(hs), errors=tuple(errors),
                      brackets=tuple(brackets), calibrated_C=float(C))


def truncated_residual(partition: ThomeePartition, op: SparseSymOperator,
                       e: np.ndarray, h: float):
    """Split ||L_{h,1} R_h e||_h into the R_h* part and the damped B_h* part.

    `op` must be the L_h operator on the partition's R_h ordering; `e` is a
    grid function on R_h.
    """
    e = np.asarray(e, dtype=float)
    if e.shape != (len(partition.R_h),):
        raise DimensionMismatch("residual input must live on R_h")
    w = op.matrix @ e
    d = partition.spec.dimension
    star_keys = {tuple(int(v) for v in p) for p in partition.R_h_star}
    in_star = np.array([tuple(int(v) for v in p) in star_keys for p in partition.R_h])
    interior_part = grid_norm(np.where(in_star, w, 0.0), h, d)
    collar_part = grid_norm(np.where(~in_star, h * w, 0.0), h, d)
    return interior_part, collar_part


def smallest_eigenvalue(op: SparseSymOperator, tol: float = 1e-10,
                        max_iterations: int = 400) -> float:
    """Smallest eigenvalue by inverse power iteration on one factorization.

    Convergence is declared when the Rayleigh quotient is stationary to the
    relative tolerance; NoConvergence signals ill-conditioning.
    """
    n = op.n
    if n == 1:
        return float(op.matrix[0, 0])
    solver = LinearSolver(op)
    x = np.ones(n) / np.sqrt(n)
    lam = None
    for _ in range(max_iterations):
        y = solver.solve(x)
        norm = np.linalg.norm(y)
        if not np.isfinite(norm) or norm == 0.0:
            raise SolveFailure("inverse iteration produced a degenerate vector")
        y /= norm
        lam_new = float(y @ (op.matrix @ y))
        if lam is not None and abs(lam_new - lam) <= tol * abs(lam_new):
            return lam_new
        lam = lam_new
        x = y
    raise NoConvergence(f"inverse iteration stalled after {max_iterations} steps")


def spectral_gap_values(spec: DomainSpec, coeffs: Coefficients, h_list,
                        tol: float = 1e-10):
    """Rows (h, mu_1 of h^2 L_h, h^{-2} mu_1) for a decreasing h grid."""
    rows = []
    for h in h_list:
        N = round(1.0 / float(h))
        domain = discretize(spec, N, coeffs.order)
        op = scaled_operator_Lh(domain, coeffs)
        A = SparseSymOperator(matrix=(h * h) * op.matrix, domain=domain,
                              h=op.h, meta="A_h", coeffs=coeffs)
        mu1 = smallest_eigenvalue(A, tol)
        rows.append((float(h), mu1, mu1 / (h * h)))
    return rows


def spectral_gap_convergence(spec: DomainSpec, coeffs: Coefficients, h_list):
    """Spectral-gap sweep against the continuum eigenvalue.

    Returns a dict with the value rows, the reference (analytic for the
    interval and box, finite-difference extrapolation for the ball), the
    relative errors, and a first-order Richardson extrapolation of the two
    finest rows as a diagnostic.
    """
    h_list = sorted((float(h) for h in h_list), reverse=True)
    rows = spectral_gap_values(spec, coeffs, h_list)
    lam1, provenance = continuum_lambda1(spec)
    rel = [abs(r[2] - lam1) / lam1 for r in rows]
    extrapolated = None
    if len(rows) >= 2:
        extrapolated = 2 * rows[-1][2] - rows[-2][2]
    return {
        "rows": rows,
        "lambda1": lam1,
        "lambda1_provenance": provenance,
        "relative_errors": rel,
        "extrapolated": extrapolated,
    }
