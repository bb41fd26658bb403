"""Tensor-product panel quadrature with dyadic refinement toward the origin.

The symbol integrands handled here behave like ``|theta|^-2`` near zero,
which is integrable in d >= 3 but destroys uniform grids.  The cube
``[-a, a]^d`` is therefore split into dyadic shells ``C_l \\ C_{l+1}`` with
``C_l = [-a 2^-l, a 2^-l]^d`` and each shell is covered by tensor
Gauss-Legendre (or trapezoid) panels that stay away from the singularity.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import product

import numpy as np

from .errors import QuadratureNotConverged


@dataclass(frozen=True)
class QuadratureSpec:
    """Knobs for the singular symbol integrals.

    scheme: 'tensor_gauss' or 'tensor_trapezoid'.
    points_per_axis: base panel resolution (>= 8).
    origin_refinement_levels: maximal number of dyadic shells toward 0.
    rel_tol: requested relative accuracy; the unresolved-core bound is
        checked against it.
    """

    scheme: str = "tensor_gauss"
    points_per_axis: int = 24
    origin_refinement_levels: int = 48
    rel_tol: float = 1e-6

    def __post_init__(self):
        if self.scheme not in ("tensor_gauss", "tensor_trapezoid"):
            raise ValueError(f"unknown quadrature scheme {self.scheme!r}")
        if self.points_per_axis < 8:
            raise ValueError("points_per_axis must be >= 8")
        if self.rel_tol <= 0:
            raise ValueError("rel_tol must be positive")


@lru_cache(maxsize=128)
def _leggauss(p: int):
    return np.polynomial.legendre.leggauss(p)


def panel_rule(a: float, b: float, p: int, scheme: str = "tensor_gauss"):
    """Nodes and weights integrating over [a, b] with p points."""
    if scheme == "tensor_trapezoid":
        x = np.linspace(a, b, p)
        w = np.full(p, (b - a) / (p - 1))
        w[0] *= 0.5
        w[-1] *= 0.5
        return x, w
    x, w = _leggauss(p)
    return 0.5 * (b - a) * x + 0.5 * (a + b), 0.5 * (b - a) * w


def shell_boxes_octant(a: float, dim: int):
    """Boxes covering [0,a]^dim minus [0,a/2]^dim (2^dim - 1 boxes)."""
    seg = [(0.0, a / 2), (a / 2, a)]
    boxes = []
    for pattern in product((0, 1), repeat=dim):
        if all(s == 0 for s in pattern):
            continue
        boxes.append(tuple(seg[s] for s in pattern))
    return boxes


def shell_boxes_full(a: float, dim: int):
    """Boxes covering [-a,a]^dim minus [-a/2,a/2]^dim (3^dim - 1 boxes)."""
    seg = [(-a, -a / 2), (-a / 2, a / 2), (a / 2, a)]
    boxes = []
    for pattern in product((0, 1, 2), repeat=dim):
        if all(s == 1 for s in pattern):
            continue
        boxes.append(tuple(seg[s] for s in pattern))
    return boxes


def tensor_integrate(box, p, scheme, integrand):
    """Integrate integrand over a tensor-product box.

    integrand receives per-axis node arrays and must return the value array
    of shape ``(p, ..., p)``; the contraction with the weight outer product
    is done here.
    """
    axes = [panel_rule(lo, hi, p, scheme) for lo, hi in box]
    vals = integrand([x for x, _ in axes])
    for x, w in reversed(axes):
        vals = vals @ w if vals.ndim == 1 else np.tensordot(vals, w, axes=([vals.ndim - 1], [0]))
    return float(vals)


def dyadic_shell_integrate(dim, outer, integrand, spec, panel_points,
                           core_bound, folded=True, value_scale=None):
    """Sum shell contributions until the unresolved core is negligible.

    Parameters
    ----------
    dim, outer : cube half-width `outer` in `dim` dimensions.
    integrand : callable(list of per-axis node arrays) -> value array.
    spec : QuadratureSpec; `origin_refinement_levels` caps the shell count.
    panel_points : callable(level, half_width) -> points per axis.
    core_bound : callable(half_width) -> rigorous bound on the remaining
        integral over the innermost cube.
    folded : integrate over the positive octant only (integrand must already
        contain the 2^dim symmetry factor).
    value_scale : optional magnitude estimate used for the stopping test in
        place of the accumulated value (useful when the result is a small
        difference of large shells).

    Raises QuadratureNotConverged when the level budget is exhausted before
    the core bound drops below rel_tol times the value magnitude.
    """
    boxes_of = shell_boxes_octant if folded else shell_boxes_full
    total = 0.0
    a = outer
    for level in range(spec.origin_refinement_levels):
        p = panel_points(level, a)
        for box in boxes_of(a, dim):
            total += tensor_integrate(box, p, spec.scheme, integrand)
        a *= 0.5
        scale = abs(total) if value_scale is None else value_scale
        if core_bound(a) <= spec.rel_tol * max(scale, 1e-300):
            return total, core_bound(a)
    raise QuadratureNotConverged(
        f"core bound {core_bound(a):.3e} above rel_tol after "
        f"{spec.origin_refinement_levels} refinement levels"
    )
