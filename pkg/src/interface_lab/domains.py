"""Lattice discretizations of intervals, boxes and balls.

A domain D (open, bounded) is blown up by the resolution N and intersected
with the integer lattice: P = N*closure(D) intersect Z^d.  The interior is
the largest subset whose depth-K boundary layer stays inside P, i.e. the
L1-erosion of P by K; the boundary layer is the set of complement nodes
within graph distance K of the interior.  Points exactly on the boundary of
the blown-up closure are kept (closure convention).

The same erosion yields the two-level partition used by the truncated
finite-difference operator: D_h = R_h + B_h and R_h = R_h* + B_h*, with
R_h (resp. R_h*) the maximal subset whose K-layer stays inside D_h
(resp. R_h).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product

import numpy as np

from .errors import EmptyInterior

_SHAPES = ("Interval", "UnitBox", "Ball")


@dataclass(frozen=True)
class DomainSpec:
    """Continuum domain: Interval (0,1), UnitBox (0,1)^d, or Ball(center, radius)."""

    shape: str
    dimension: int
    radius: float = 1.0
    center: tuple = ()

    def __post_init__(self):
        if self.shape not in _SHAPES:
            raise ValueError(f"unknown shape {self.shape!r}; expected one of {_SHAPES}")
        if self.dimension < 1:
            raise ValueError("dimension must be >= 1")
        if self.shape == "Interval" and self.dimension != 1:
            raise ValueError("Interval is one-dimensional")
        if self.shape == "Ball":
            if self.radius <= 0:
                raise ValueError("Ball radius must be positive")
            if not self.center:
                object.__setattr__(self, "center", (0.0,) * self.dimension)
            elif len(self.center) != self.dimension:
                raise ValueError("center length must equal dimension")

    @staticmethod
    def interval() -> "DomainSpec":
        return DomainSpec("Interval", 1)

    @staticmethod
    def unit_box(d: int) -> "DomainSpec":
        return DomainSpec("UnitBox", d)

    @staticmethod
    def ball(d: int, radius: float = 1.0, center: tuple = ()) -> "DomainSpec":
        return DomainSpec("Ball", d, radius, center)

    def contains(self, x) -> bool:
        """Open-set membership of a continuum point."""
        x = np.asarray(x, dtype=float)
        if self.shape in ("Interval", "UnitBox"):
            return bool(np.all(x > 0.0) and np.all(x < 1.0))
        c = np.asarray(self.center)
        return bool(((x - c) ** 2).sum() < self.radius**2)

    def boundary_distance(self, x) -> float:
        """Euclidean distance from x to the complement of the open domain."""
        x = np.asarray(x, dtype=float)
        if self.shape in ("Interval", "UnitBox"):
            return float(min(np.min(x), np.min(1.0 - x)))
        c = np.asarray(self.center)
        return float(self.radius - np.sqrt(((x - c) ** 2).sum()))

    def diameter(self) -> float:
        if self.shape == "Interval":
            return 1.0
        if self.shape == "UnitBox":
            return float(np.sqrt(self.dimension))
        return 2.0 * self.radius

    def volume(self) -> float:
        """Lebesgue volume (1d: pi*r^2 degenerates to 2r etc. via gamma)."""
        if self.shape in ("Interval", "UnitBox"):
            return 1.0
        from math import gamma, pi

        d = self.dimension
        return pi ** (d / 2) / gamma(d / 2 + 1) * self.radius**d

    def lattice_points(self, N: int) -> np.ndarray:
        """Integer points of N*closure(D), lexicographically sorted."""
        if N < 1:
            raise ValueError("N must be >= 1")
        d = self.dimension
        if self.shape in ("Interval", "UnitBox"):
            g = np.arange(0, N + 1, dtype=np.int64)
            pts = np.stack(np.meshgrid(*([g] * d), indexing="ij"), -1).reshape(-1, d)
            return pts
        c = np.asarray(self.center, dtype=float) * N
        r = self.radius * N
        ranges = [
            np.arange(int(np.floor(ci - r)), int(np.floor(ci + r)) + 1, dtype=np.int64)
            for ci in c
        ]
        pts = np.stack(np.meshgrid(*ranges, indexing="ij"), -1).reshape(-1, d)
        keep = ((pts - c) ** 2).sum(axis=1) <= r * r + 1e-9
        return pts[keep]


def graph_distance(a, b) -> int:
    """Graph distance on Z^d with nearest-neighbor edges (L1 distance)."""
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    return int(np.abs(a - b).sum())


def l1_ball_offsets(K: int, d: int) -> np.ndarray:
    """All integer offsets with L1 norm <= K, lexicographically sorted."""
    g = range(-K, K + 1)
    offs = [o for o in product(g, repeat=d) if sum(abs(v) for v in o) <= K]
    return np.array(offs, dtype=np.int64)


class _PointSet:
    """Sorted encoded integer point set with vectorized membership tests."""

    def __init__(self, points: np.ndarray, lo: np.ndarray, hi: np.ndarray):
        self.lo = lo
        span = (hi - lo + 1).astype(np.int64)
        strides = np.ones(len(span), dtype=np.int64)
        for i in range(len(span) - 2, -1, -1):
            strides[i] = strides[i + 1] * span[i + 1]
        self.strides = strides
        self.span = span
        self.keys = np.sort(self._encode(points))

    def _encode(self, pts: np.ndarray) -> np.ndarray:
        rel = pts - self.lo
        return rel @ self.strides

    def contains(self, pts: np.ndarray) -> np.ndarray:
        rel = pts - self.lo
        inside_box = np.all((rel >= 0) & (rel < self.span), axis=1)
        keys = rel @ self.strides
        pos = np.searchsorted(self.keys, keys)
        pos = np.minimum(pos, len(self.keys) - 1)
        hit = self.keys[pos] == keys
        return inside_box & hit


def _sort_lex(points: np.ndarray) -> np.ndarray:
    if len(points) == 0:
        return points
    order = np.lexsort(points.T[::-1])
    return points[order]


def l1_erode(points: np.ndarray, K: int) -> np.ndarray:
    """Maximal subset whose L1 K-neighborhood stays inside `points`."""
    if len(points) == 0:
        return points
    d = points.shape[1]
    lo = points.min(axis=0) - K - 1
    hi = points.max(axis=0) + K + 1
    ps = _PointSet(points, lo, hi)
    keep = np.ones(len(points), dtype=bool)
    for off in l1_ball_offsets(K, d):
        if not np.any(off):
            continue
        keep &= ps.contains(points + off)
        if not keep.any():
            break
    return points[keep]


def l1_dilate(points: np.ndarray, K: int) -> np.ndarray:
    """All nodes within L1 distance K of `points` (includes `points`)."""
    d = points.shape[1]
    offs = l1_ball_offsets(K, d)
    allp = (points[:, None, :] + offs[None, :, :]).reshape(-1, d)
    return _sort_lex(np.unique(allp, axis=0))


@dataclass(frozen=True)
class LatticeDomain:
    """Interior nodes, their depth-K boundary layer, and the index bijection.

    Nodes are integer coordinates at resolution N (spacing h = 1/N after
    rescaling).  `interior` and `boundary_layer` are lexicographically
    sorted; `index` maps interior node tuples to contiguous row indices.
    """

    spec: DomainSpec
    N: int
    depth: int
    interior: np.ndarray
    boundary_layer: np.ndarray
    index: dict = field(repr=False)

    @property
    def h(self) -> float:
        return 1.0 / self.N

    @property
    def size(self) -> int:
        return len(self.interior)

    @property
    def dimension(self) -> int:
        return self.spec.dimension

    def coordinates(self) -> np.ndarray:
        """Interior nodes as continuum coordinates (divided by N)."""
        return self.interior.astype(float) / self.N

    def node_index(self, node) -> int:
        key = tuple(int(v) for v in np.asarray(node).ravel())
        if key not in self.index:
            raise KeyError(f"node {key} is not an interior node")
        return self.index[key]

    def grid_values(self, func) -> np.ndarray:
        """Evaluate a continuum function at the interior nodes."""
        return np.asarray(func(self.coordinates()), dtype=float)


def discretize(spec: DomainSpec, N: int, K: int) -> LatticeDomain:
    """Build the maximal interior whose depth-K layer stays inside N*closure(D).

    Raises EmptyInterior when the erosion removes every node.
    """
    if K < 1:
        raise ValueError("layer depth K must be >= 1")
    P = _sort_lex(spec.lattice_points(N))
    interior = _sort_lex(l1_erode(P, K))
    if len(interior) == 0:
        raise EmptyInterior(f"{spec.shape} d={spec.dimension} has no interior at N={N}, K={K}")
    layer = l1_dilate(interior, K)
    ips = _PointSet(interior, interior.min(0) - 1, interior.max(0) + 1)
    layer = layer[~ips.contains(layer)]
    index = {tuple(int(v) for v in p): i for i, p in enumerate(interior)}
    return LatticeDomain(spec=spec, N=N, depth=K, interior=interior,
                         boundary_layer=_sort_lex(layer), index=index)


@dataclass(frozen=True)
class ThomeePartition:
    """Two-level grid partition D_h = R_h + B_h, R_h = R_h* + B_h*."""

    spec: DomainSpec
    h: float
    depth: int
    D_h: np.ndarray
    R_h: np.ndarray
    B_h: np.ndarray
    R_h_star: np.ndarray
    B_h_star: np.ndarray


def thomee_partition(spec: DomainSpec, h: float, K: int) -> ThomeePartition:
    """Partition the grid of spacing h for the depth-K truncated operator.

    h must be 1/N for an integer N.  R_h coincides with
    discretize(spec, N, K).interior after rescaling.
    """
    N = round(1.0 / h)
    if abs(N * h - 1.0) > 1e-12 or N < 1:
        raise ValueError("h must equal 1/N for a positive integer N")
    D_h = _sort_lex(spec.lattice_points(N))
    R_h = _sort_lex(l1_erode(D_h, K))
    if len(R_h) == 0:
        raise EmptyInterior(f"no R_h nodes for {spec.shape} at h={h}, K={K}")
    rset = _PointSet(R_h, R_h.min(0) - 1, R_h.max(0) + 1)
    B_h = D_h[~rset.contains(D_h)]
    R_h_star = _sort_lex(l1_erode(R_h, K))
    if len(R_h_star):
        sset = _PointSet(R_h_star, R_h_star.min(0) - 1, R_h_star.max(0) + 1)
        B_h_star = R_h[~sset.contains(R_h)]
    else:
        B_h_star = R_h
    return ThomeePartition(spec=spec, h=1.0 / N, depth=K, D_h=D_h, R_h=R_h,
                           B_h=_sort_lex(B_h), R_h_star=R_h_star,
                           B_h_star=_sort_lex(B_h_star))


def dump_nodes_csv(path, domain: LatticeDomain, partition: ThomeePartition = None):
    """Debug dump of node lists: one row per node, coordinates then role."""
    rows = []
    for p in domain.interior:
        rows.append((p, "interior"))
    for p in domain.boundary_layer:
        rows.append((p, "boundary"))
    if partition is not None:
        for p in partition.B_h_star:
            rows.append((p, "bstar"))
    d = domain.dimension
    with open(path, "w") as fh:
        fh.write(",".join(f"x{i}" for i in range(d)) + ",role\n")
        for p, role in rows:
            fh.write(",".join(str(int(v)) for v in p) + f",{role}\n")
