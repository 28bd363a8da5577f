"""Pointwise convexity indices from Hessian eigenvalues, and the 1-D index.

At a point x with Hessian eigenvalues lam_i:

    LOC  = sum_i max(-lam_i, 0)
    NLOC = LOC / sum_i |lam_i|
    CONV = sum_i max(lam_i, 0) / sum_i |lam_i|

A zero Hessian is reported as convex (LOC = NLOC = 0, CONV = 1) with the
``degenerate`` flag set.
"""
from __future__ import annotations

from dataclasses import dataclass
import math

import numpy as np

from .errors import InputError
from .field import ScalarField
from .hessian import DEFAULT_FD, FdConfig, hessian_fd_batch
from .symcore import canonical_split, eigenvalues_batch, nuclear_norm

DEGENERATE_TOL_1D = 1e-14
NOISE_FACTOR = 16.0


@dataclass(frozen=True)
class ConvexityReport:
    point: tuple
    eigenvalues: tuple
    loc: float
    nloc: float
    conv: float
    degenerate: bool

    def to_dict(self) -> dict:
        return {
            "point": list(self.point),
            "eigenvalues": list(self.eigenvalues),
            "loc": self.loc,
            "nloc": self.nloc,
            "conv": self.conv,
            "degenerate": self.degenerate,
        }


@dataclass(frozen=True)
class IndexArrays:
    """Lattice-shaped counterpart of ConvexityReport."""

    points: np.ndarray
    eigenvalues: np.ndarray
    loc: np.ndarray
    nloc: np.ndarray
    conv: np.ndarray
    degenerate: np.ndarray
    positive_mass: np.ndarray
    total_mass: np.ndarray

    def report(self, k: int) -> ConvexityReport:
        return ConvexityReport(
            point=tuple(float(v) for v in self.points[k]),
            eigenvalues=tuple(float(v) for v in self.eigenvalues[k]),
            loc=float(self.loc[k]),
            nloc=float(self.nloc[k]),
            conv=float(self.conv[k]),
            degenerate=bool(self.degenerate[k]),
        )

    def __len__(self):
        return self.points.shape[0]


def indices_from_eigenvalues(points, lam) -> IndexArrays:
    lam = np.asarray(lam, dtype=float)
    pos = np.maximum(lam, 0.0).sum(axis=-1)
    neg = np.maximum(-lam, 0.0).sum(axis=-1)
    total = pos + neg
    degenerate = total == 0.0
    safe = np.where(degenerate, 1.0, total)
    nloc = np.where(degenerate, 0.0, neg / safe)
    conv = np.where(degenerate, 1.0, pos / safe)
    return IndexArrays(np.asarray(points, dtype=float), lam, neg, nloc, conv, degenerate, pos, total)


def indices_batch(f: ScalarField, points, cfg: FdConfig = DEFAULT_FD) -> IndexArrays:
    points = np.atleast_2d(np.asarray(points, dtype=float))
    lam = eigenvalues_batch(hessian_fd_batch(f, points, cfg))
    return indices_from_eigenvalues(points, lam)


def pointwise_indices(f: ScalarField, point, cfg: FdConfig = DEFAULT_FD) -> ConvexityReport:
    x = np.asarray(point, dtype=float).reshape(1, -1)
    if x.shape[1] != f.dimension:
        raise InputError(f"point has length {x.shape[1]}, field dimension is {f.dimension}")
    return indices_batch(f, x, cfg).report(0)


def norm_form_indices(hessian) -> tuple:
    """(LOC, NLOC, CONV) through nuclear norms of the canonical parts.

    Independent route to the same numbers: re-diagonalizes H+ and H- instead
    of reading eigenvalue signs.
    """
    split = canonical_split(hessian)
    minus = nuclear_norm(split.minus)
    plus = nuclear_norm(split.plus)
    total = nuclear_norm(hessian)
    if total == 0.0:
        return minus, 0.0, 1.0
    return minus, minus / total, plus / total


# --------------------------------------------------------------------------
# one dimension


@dataclass(frozen=True)
class IncreaseResult:
    value: float
    degenerate: bool
    positive_integral: float
    absolute_integral: float
    interval: tuple


def index_of_increase_1d(
    f: ScalarField,
    interval,
    grid_nodes: int = 2001,
    cfg: FdConfig = DEFAULT_FD,
    rescale: bool = False,
) -> IncreaseResult:
    """Ratio of int (h'')+ to int |h''| over an interval, for d = 1.

    h'' comes from central differences on a uniform grid and both integrals
    use composite Simpson. The grid spans ``[a + s, b - s]`` where s is the
    larger finite-difference step of the two ends, so no stencil leaves
    (a, b); the shrunk interval is reported. ``rescale`` scales both integrals back to
    the full interval length, which leaves the ratio unchanged.
    """
    from .quadrature import simpson_weights

    if f.dimension != 1:
        raise InputError("index_of_increase_1d needs a one-dimensional field")
    a, b = (float(v) for v in interval)
    if not a < b:
        raise InputError(f"need a < b, got ({a}, {b})")
    if grid_nodes < 3 or grid_nodes % 2 == 0:
        raise InputError(f"grid_nodes must be odd and >= 3, got {grid_nodes}")

    # one trim width for both ends: the larger of the two end steps
    trim = cfg.base_step * (max(1.0, abs(a), abs(b)) if cfg.relative else 1.0)
    lo, hi = a + trim, b - trim
    if not lo < hi:
        raise InputError("interval is narrower than the finite-difference stencil")
    xs = np.linspace(lo, hi, grid_nodes)
    second = hessian_fd_batch(f, xs[:, None], cfg)[:, 0, 0]
    w = simpson_weights(lo, hi, grid_nodes)
    pos = math.fsum(w * np.maximum(second, 0.0))
    tot = math.fsum(w * np.abs(second))
    # rounding floor of the 3-point stencil: an affine h yields |h''| of this
    # size, which must count as zero curvature
    h = (xs + cfg.base_step * (np.maximum(1.0, np.abs(xs)) if cfg.relative else 1.0)) - xs
    noise = math.fsum(w * NOISE_FACTOR * np.finfo(float).eps * np.abs(f(xs[:, None])) / (h * h))
    if rescale:
        ratio = (b - a) / (hi - lo)
        pos *= ratio
        tot *= ratio
    if tot < max(DEGENERATE_TOL_1D, noise):
        return IncreaseResult(1.0, True, pos, tot, (lo, hi))
    return IncreaseResult(pos / tot, False, pos, tot, (lo, hi))
