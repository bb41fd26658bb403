"""Discrete operators of the interface models.

The normalized lattice Laplacian is

    Delta f(x) = (1/2d) sum_i (f(x+e_i) + f(x-e_i) - 2 f(x)),

and the precision operator of the model with coefficients kappa is
J = sum_i kappa_i (-Delta)^i acting on functions that vanish outside the
interior.  Powers are formed on the node set extended by the boundary
layer, so that walks of the stencil through exterior nodes (where the field
is pinned to zero) are counted exactly; the result is then restricted to
interior rows and columns.  The finite-difference operator at spacing h,

    L_h = sum_i kappa_i (h^2/2d)^(i-1) (-Delta_h)^i,   Delta_h = (2d/h^2) Delta,

coincides with (2d/h^2) J; both assemblies are compared entrywise at build
time.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .domains import LatticeDomain, _PointSet, l1_dilate
from .errors import CoefficientSignError, DimensionMismatch

SYMBOL_GRID_POINTS = 10_000


@dataclass(frozen=True)
class Coefficients:
    """Coefficient vector (kappa_1, ..., kappa_K) of the powers of -Delta."""

    kappa: tuple

    def __post_init__(self):
        kap = tuple(float(k) for k in np.atleast_1d(np.asarray(self.kappa, dtype=float)))
        object.__setattr__(self, "kappa", kap)
        if len(kap) < 1:
            raise CoefficientSignError("need at least one coefficient")
        self.validate()

    @property
    def order(self) -> int:
        return len(self.kappa)

    def symbol(self, r):
        """sum_i kappa_i r^i for r in [0, 2] (the symbol in terms of mu)."""
        r = np.asarray(r, dtype=float)
        out = np.zeros_like(r)
        for k in reversed(self.kappa):
            out = (out + k) * r
        return out

    def validate(self):
        """Positivity of the symbol on (0, 2), checked on a 10^4-point grid."""
        r = np.linspace(0.0, 2.0, SYMBOL_GRID_POINTS + 2)[1:-1]
        if np.min(self.symbol(r)) <= 0.0:
            raise CoefficientSignError(
                f"symbol sum_i kappa_i r^i is not positive on (0,2) for kappa={self.kappa}"
            )


@dataclass(frozen=True)
class SparseSymOperator:
    """Symmetric positive-definite operator over the interior index set."""

    matrix: sp.csr_matrix = field(repr=False)
    domain: LatticeDomain
    h: float
    meta: str
    coeffs: Coefficients = None

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    def apply(self, f: np.ndarray) -> np.ndarray:
        return apply(self, f)

    def to_dense(self) -> np.ndarray:
        return self.matrix.toarray()

    def dump_triplets(self, path):
        """Text sparse-triplet dump (row, col, value with 17 significant digits)."""
        coo = self.matrix.tocoo()
        order = np.lexsort((coo.col, coo.row))
        with open(path, "w") as fh:
            fh.write("row,col,value\n")
            for r, c, v in zip(coo.row[order], coo.col[order], coo.data[order]):
                fh.write(f"{r},{c},{v:.17g}\n")


def _neighbor_matrix(nodes: np.ndarray, d: int) -> sp.csr_matrix:
    """Matrix of the normalized -Delta on `nodes` with zero Dirichlet outside."""
    n = len(nodes)
    ps = _PointSet(nodes, nodes.min(0) - 1, nodes.max(0) + 1)
    key_order = np.argsort((nodes - ps.lo) @ ps.strides)
    inv = np.empty(n, dtype=np.int64)
    inv[key_order] = np.arange(n)

    def locate(pts):
        keys = (pts - ps.lo) @ ps.strides
        pos = np.searchsorted(ps.keys, keys)
        pos = np.minimum(pos, n - 1)
        return pos

    rows = [np.arange(n)]
    cols = [np.arange(n)]
    vals = [np.ones(n)]
    for axis in range(d):
        for sign in (1, -1):
            shift = nodes.copy()
            shift[:, axis] += sign
            hit = ps.contains(shift)
            src = np.nonzero(hit)[0]
            dst = inv[locate(shift[hit])]
            rows.append(src)
            cols.append(dst)
            vals.append(np.full(len(src), -1.0 / (2 * d)))
    M = sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n, n),
    )
    return M


def laplacian_normalized(domain: LatticeDomain) -> SparseSymOperator:
    """Matrix of -Delta restricted to functions vanishing outside the interior."""
    M = _neighbor_matrix(domain.interior, domain.dimension)
    return SparseSymOperator(matrix=M, domain=domain, h=domain.h,
                             meta="minus_laplacian", coeffs=Coefficients((1.0,)))


def _precision_matrix(domain: LatticeDomain, coeffs: Coefficients) -> sp.csr_matrix:
    """J over the interior via powers on the extended node set.

    Walks of (-Delta)^i between interior points excurse at most floor(i/2)
    steps outside, so a padding of the boundary layer of depth
    ceil(order/2) reproduces the whole-lattice kernel exactly.
    """
    pad = max(1, (coeffs.order + 1) // 2)
    ext = l1_dilate(domain.interior, pad)
    M = _neighbor_matrix(ext, domain.dimension)
    ps = _PointSet(ext, ext.min(0) - 1, ext.max(0) + 1)
    # ext is lexicographically sorted, so its encoded keys are ascending
    keys_ext = (ext - ps.lo) @ ps.strides
    keys_int = (domain.interior - ps.lo) @ ps.strides
    sel = np.searchsorted(keys_ext, keys_int)
    acc = None
    power = sp.identity(len(ext), format="csr")
    for i, kap in enumerate(coeffs.kappa, start=1):
        power = (M @ power).tocsr()
        if kap != 0.0:
            acc = kap * power if acc is None else acc + kap * power
    J = acc[sel][:, sel].tocsr()
    # exact symmetry: the kernel is symmetric, products preserve it up to fp order
    J = ((J + J.T) * 0.5).tocsr()
    return J


def precision(domain: LatticeDomain, coeffs: Coefficients) -> SparseSymOperator:
    """Precision operator J = sum_i kappa_i (-Delta)^i with zero exterior.

    The domain's boundary layer depth should be at least the coefficient
    order so that the pinned collar matches the stencil reach.
    """
    if domain.depth < coeffs.order:
        raise ValueError(
            f"domain depth {domain.depth} is smaller than coefficient order {coeffs.order}"
        )
    J = _precision_matrix(domain, coeffs)
    return SparseSymOperator(matrix=J, domain=domain, h=domain.h,
                             meta="precision", coeffs=coeffs)


def scaled_operator_Lh(domain: LatticeDomain, coeffs: Coefficients) -> SparseSymOperator:
    """Finite-difference operator L_h assembled from the unnormalized Delta_h.

    Asserts the exact identity L_h = (2d/h^2) J entrywise at assembly time.
    """
    if domain.depth < coeffs.order:
        raise ValueError(
            f"domain depth {domain.depth} is smaller than coefficient order {coeffs.order}"
        )
    d = domain.dimension
    h = domain.h
    # independent assembly: scale each power of (-Delta_h) = (2d/h^2)(-Delta)
    scaled = Coefficients(tuple(
        kap * (h * h / (2 * d)) ** (i - 1) * (2 * d / (h * h)) ** i
        for i, kap in enumerate(coeffs.kappa, start=1)
    ))
    Lh = _precision_matrix(domain, scaled)
    ref = (2 * d / (h * h)) * _precision_matrix(domain, coeffs)
    diff = (Lh - ref)
    scale = np.abs(ref.data).max() if ref.nnz else 1.0
    if diff.nnz and np.abs(diff.data).max() > 1e-12 * scale:
        raise AssertionError("L_h deviates from (2d/h^2) J beyond rounding")
    return SparseSymOperator(matrix=Lh, domain=domain, h=h,
                             meta="L_h", coeffs=coeffs)


def symbol_mu(theta) -> float:
    """Fourier symbol mu(theta) = (1/d) sum_i (1 - cos theta_i), in [0, 2]."""
    theta = np.asarray(theta, dtype=float)
    if theta.ndim == 1:
        return float(np.mean(2.0 * np.sin(theta / 2.0) ** 2))
    return np.mean(2.0 * np.sin(theta / 2.0) ** 2, axis=-1)


def apply(op: SparseSymOperator, f: np.ndarray) -> np.ndarray:
    """Matrix-vector product; raises DimensionMismatch on wrong length."""
    f = np.asarray(f, dtype=float)
    if f.shape[0] != op.n:
        raise DimensionMismatch(f"operator size {op.n}, grid function length {f.shape[0]}")
    return op.matrix @ f


def periodic_precision_dense(shape: tuple, coeffs: Coefficients) -> np.ndarray:
    """Dense J on a periodic box (diagnostic; eigenvalues are symbol values)."""
    d = len(shape)
    n = int(np.prod(shape))
    idx = np.arange(n).reshape(shape)
    M = np.zeros((n, n))
    np.fill_diagonal(M, 1.0)
    for axis in range(d):
        for sign in (1, -1):
            rolled = np.roll(idx, sign, axis=axis).ravel()
            M[np.arange(n), rolled] += -1.0 / (2 * d)
    acc = np.zeros((n, n))
    power = np.eye(n)
    for kap in coeffs.kappa:
        power = M @ power
        acc += kap * power
    return acc
