"""Global convexity index over boxes, expanding-square sweeps, region maps.

The global index is the ratio of two integrals over the box G,

    CONV(f, G) = int_G sum_i lam_i^+ dx / int_G sum_i |lam_i| dx,

both taken with the same tensor-product composite Simpson rule on a shared
lattice so their discretization errors stay correlated. A lattice point
with a zero Hessian adds nothing to either integral.

Lattice Hessians may be computed by several threads; chunks are fixed in
size and reassembled in lattice order, and reductions use ``math.fsum``, so
results do not depend on the thread count.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
import logging
import math
from typing import List, Optional, Sequence

import numpy as np

from .errors import DomainError, InputError
from .field import ScalarField
from .hessian import DEFAULT_FD, FdConfig, step_sizes
from .indices import NOISE_FACTOR, ConvexityReport, IndexArrays, indices_batch, indices_from_eigenvalues

log = logging.getLogger(__name__)

DEFAULT_NODES = 201
CHUNK = 4096


@dataclass(frozen=True)
class HyperRect:
    lo: tuple
    hi: tuple

    def __post_init__(self):
        lo = tuple(float(v) for v in np.atleast_1d(self.lo))
        hi = tuple(float(v) for v in np.atleast_1d(self.hi))
        if len(lo) != len(hi) or not lo:
            raise InputError("lo and hi must have the same non-zero length")
        if not all(a < b for a, b in zip(lo, hi)):
            raise InputError(f"need lo < hi on every axis, got {lo} and {hi}")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def dim(self) -> int:
        return len(self.lo)

    @property
    def volume(self) -> float:
        return math.prod(b - a for a, b in zip(self.lo, self.hi))


@dataclass(frozen=True)
class Square:
    center: tuple
    half_width: float

    def __post_init__(self):
        if not self.half_width > 0:
            raise InputError(f"half width must be positive, got {self.half_width}")
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))

    def rect(self) -> HyperRect:
        a = self.half_width
        return HyperRect(tuple(c - a for c in self.center), tuple(c + a for c in self.center))


@dataclass(frozen=True)
class GlobalIndex:
    value: float
    degenerate: bool
    degenerate_fraction: float
    positive_integral: float
    absolute_integral: float
    nodes: int


@dataclass(frozen=True)
class SweepRecord:
    a: float
    conv: float
    degenerate_fraction: float


@dataclass(frozen=True)
class SweepResult:
    center: tuple
    records: tuple
    nodes: int

    @property
    def a(self) -> np.ndarray:
        return np.array([r.a for r in self.records])

    @property
    def conv(self) -> np.ndarray:
        return np.array([r.conv for r in self.records])


@dataclass(frozen=True)
class RegionMap:
    axes: tuple
    values: IndexArrays

    @property
    def shape(self) -> tuple:
        return tuple(len(ax) for ax in self.axes)

    @property
    def reports(self) -> List[ConvexityReport]:
        return [self.values.report(k) for k in range(len(self.values))]

    def report_at(self, *index) -> ConvexityReport:
        return self.values.report(int(np.ravel_multi_index(index, self.shape)))


def simpson_weights(lo: float, hi: float, n: int) -> np.ndarray:
    """Composite Simpson weights on ``n`` (odd) equally spaced nodes."""
    if n < 3 or n % 2 == 0:
        raise InputError(f"Simpson needs an odd node count >= 3, got {n}")
    h = (hi - lo) / (n - 1)
    w = np.ones(n)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return w * (h / 3.0)


def lattice(region: HyperRect, nodes: int):
    axes = tuple(np.linspace(a, b, nodes) for a, b in zip(region.lo, region.hi))
    mesh = np.meshgrid(*axes, indexing="ij")
    return axes, np.stack([m.ravel() for m in mesh], axis=-1)


def check_region(f: ScalarField, region: HyperRect, cfg: FdConfig = DEFAULT_FD):
    """Raise DomainError unless the box plus one stencil step fits the domain hint."""
    if region.dim != f.dimension:
        raise InputError(f"region has dimension {region.dim}, field has {f.dimension}")
    if f.domain_hint is None:
        return

    def step(v):
        return cfg.base_step * (max(1.0, abs(v)) if cfg.relative else 1.0)

    dlo, dhi = f.domain_hint
    for i in range(region.dim):
        lo, hi = region.lo[i], region.hi[i]
        if lo - step(lo) < dlo[i] or hi + step(hi) > dhi[i]:
            raise DomainError(
                f"{f.name}: region [{lo}, {hi}] on axis {i} leaves the domain "
                f"[{dlo[i]}, {dhi[i]}] minus one finite-difference step"
            )


def lattice_indices(f: ScalarField, points: np.ndarray, cfg: FdConfig = DEFAULT_FD,
                    workers: int = 1) -> IndexArrays:
    chunks = [points[k:k + CHUNK] for k in range(0, points.shape[0], CHUNK)]
    if workers > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda c: indices_batch(f, c, cfg).eigenvalues, chunks))
    else:
        parts = [indices_batch(f, c, cfg).eigenvalues for c in chunks]
    return indices_from_eigenvalues(points, np.concatenate(parts, axis=0))


def _noise_floor(f, points, weights, cfg):
    # integral of the rounding error bound of the Hessian stencil; curvature
    # below it (e.g. an affine field) is indistinguishable from zero
    h = (points + step_sizes(f, points, cfg)) - points
    scale = np.sum(1.0 / h, axis=1) ** 2
    return math.fsum(weights * NOISE_FACTOR * np.finfo(float).eps * np.abs(f(points)) * scale)


def global_convexity_index(
    f: ScalarField,
    region: HyperRect,
    nodes: int = DEFAULT_NODES,
    cfg: FdConfig = DEFAULT_FD,
    workers: int = 1,
) -> GlobalIndex:
    """L1 global convexity index of ``f`` over a box."""
    if nodes < 3 or nodes % 2 == 0:
        raise InputError(f"nodes per axis must be odd and >= 3, got {nodes}")
    check_region(f, region, cfg)
    if region.dim >= 3:
        log.warning("tensor rule on %d dimensions: %d Hessian evaluations",
                    region.dim, nodes ** region.dim)
    _, points = lattice(region, nodes)
    idx = lattice_indices(f, points, cfg, workers)
    weights = simpson_weights(region.lo[0], region.hi[0], nodes)
    for i in range(1, region.dim):
        weights = np.multiply.outer(weights, simpson_weights(region.lo[i], region.hi[i], nodes))
    weights = weights.ravel()
    num = math.fsum(weights * idx.positive_mass)
    den = math.fsum(weights * idx.total_mass)
    frac = float(np.count_nonzero(idx.degenerate)) / len(idx)
    if den < max(1e-14 * region.volume, _noise_floor(f, points, weights, cfg)):
        return GlobalIndex(1.0, True, frac, num, den, nodes)
    return GlobalIndex(min(1.0, max(0.0, num / den)), False, frac, num, den, nodes)


def sweep_conv_a(
    f: ScalarField,
    center: Sequence[float],
    a_max: float,
    steps: int,
    nodes: int = DEFAULT_NODES,
    cfg: FdConfig = DEFAULT_FD,
    workers: int = 1,
) -> SweepResult:
    """Global index over squares around ``center`` with half widths a_max*k/steps."""
    if steps < 1:
        raise InputError(f"steps must be >= 1, got {steps}")
    if not a_max > 0:
        raise InputError(f"a_max must be positive, got {a_max}")
    widths = [a_max * k / steps for k in range(1, steps + 1)]
    for a in widths:
        try:
            check_region(f, Square(center, a).rect(), cfg)
        except DomainError as exc:
            raise DomainError(f"square of half width a={a!r} escapes the domain: {exc}") from exc
    records = []
    for a in widths:
        g = global_convexity_index(f, Square(center, a).rect(), nodes, cfg, workers)
        records.append(SweepRecord(a, g.value, g.degenerate_fraction))
    return SweepResult(tuple(float(c) for c in center), tuple(records), nodes)


def region_map(
    f: ScalarField,
    region: HyperRect,
    nodes: int,
    cfg: FdConfig = DEFAULT_FD,
    workers: int = 1,
) -> RegionMap:
    """Pointwise reports on a ``nodes``-per-axis lattice, first axis slowest."""
    if nodes < 2:
        raise InputError(f"nodes per axis must be >= 2, got {nodes}")
    check_region(f, region, cfg)
    axes, points = lattice(region, nodes)
    return RegionMap(axes, lattice_indices(f, points, cfg, workers))
