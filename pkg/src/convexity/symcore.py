"""Symmetric eigendecomposition and the positive/negative canonical split.

Every symmetric matrix H factors as H = Q diag(lam) Q^T. Splitting the
eigenvalues into positive and negative parts gives H = H+ - H-, both
positive semidefinite, and the nuclear norm ||H||_* = sum |lam_i| splits
the same way. ||H-||_* is the nuclear distance from H to the PSD cone,
which is what the lack-of-convexity indices measure.

The eigensolver is a cyclic Jacobi iteration written against stacks of
matrices, so region sweeps can diagonalize thousands of Hessians at once.
Each matrix in a stack follows exactly the same floating point path it
would follow alone, which keeps results bit-stable under any chunking.
"""
from __future__ import annotations

from dataclasses import dataclass, field
import logging

import numpy as np

from .errors import InputError, PreconditionError, UnsupportedError

log = logging.getLogger(__name__)

JACOBI_TOL = 1e-13
JACOBI_MAX_SWEEPS = 100
PSD_TOL = 1e-10


class SymmetricMatrix:
    """Immutable dense real symmetric matrix.

    The stored entries are ``(A + A.T) / 2`` of whatever was passed in, so
    the exact-symmetry invariant holds by construction.
    """

    __slots__ = ("_data",)

    def __init__(self, entries):
        a = np.array(entries, dtype=float)
        if a.ndim == 0:
            a = a.reshape(1, 1)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
            raise InputError(f"expected a square matrix, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise InputError("matrix has non-finite entries")
        a = 0.5 * (a + a.T)
        a.setflags(write=False)
        self._data = a

    @classmethod
    def _trusted(cls, a: np.ndarray) -> "SymmetricMatrix":
        # caller guarantees a is finite and exactly symmetric
        obj = cls.__new__(cls)
        a = np.array(a, dtype=float)
        a.setflags(write=False)
        obj._data = a
        return obj

    @property
    def dim(self) -> int:
        return self._data.shape[0]

    @property
    def entries(self) -> np.ndarray:
        return self._data

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self._data.copy()
        return self._data.astype(dtype)

    def __neg__(self):
        return SymmetricMatrix._trusted(-self._data)

    def __mul__(self, alpha):
        return SymmetricMatrix(alpha * self._data)

    __rmul__ = __mul__

    def __sub__(self, other):
        return SymmetricMatrix(self._data - np.asarray(other, dtype=float))

    def __add__(self, other):
        return SymmetricMatrix(self._data + np.asarray(other, dtype=float))

    def __eq__(self, other):
        if not isinstance(other, SymmetricMatrix):
            return NotImplemented
        return np.array_equal(self._data, other._data)

    def __hash__(self):
        return hash(self._data.tobytes())

    def __repr__(self):
        return f"SymmetricMatrix({self._data.tolist()!r})"

    def frobenius(self) -> float:
        return float(np.linalg.norm(self._data))


def as_symmetric(m) -> SymmetricMatrix:
    return m if isinstance(m, SymmetricMatrix) else SymmetricMatrix(m)


@dataclass(frozen=True)
class EigenDecomposition:
    """Eigenvalues sorted descending, with eigenvectors as matching columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    sweeps: int = 0

    def reconstruct(self) -> np.ndarray:
        q = self.eigenvectors
        return (q * self.eigenvalues) @ q.T


@dataclass(frozen=True)
class CanonicalSplit:
    plus: SymmetricMatrix
    minus: SymmetricMatrix
    nuclear_plus: float
    nuclear_minus: float
    nuclear_total: float
    eigenvalues: np.ndarray = field(repr=False, default=None)


@dataclass(frozen=True)
class PsdIndexReport:
    lops: float
    nlops: float
    ps: float
    degenerate: bool
    eigenvalues: np.ndarray = field(repr=False, default=None)


# --------------------------------------------------------------------------
# Jacobi eigensolver


def _off_norm(a: np.ndarray) -> np.ndarray:
    d = a.shape[-1]
    off = a * (1.0 - np.eye(d))
    return np.sqrt(np.sum(off * off, axis=(-2, -1)))


def jacobi_eigh(stack, tol: float = JACOBI_TOL, max_sweeps: int = JACOBI_MAX_SWEEPS):
    """Cyclic Jacobi on a stack of symmetric matrices.

    Parameters
    ----------
    stack : array_like, shape (n, d, d)
        Symmetric matrices. Only the symmetric part is used.
    tol : float
        A matrix is converged once its off-diagonal Frobenius norm drops
        below ``tol * ||A||_F`` (never looser than ``tol * max(1, ||A||_F)``).
    max_sweeps : int
        Hard cap on full sweeps over the (p, q) pairs.

    Returns
    -------
    eigenvalues : ndarray, shape (n, d)
        Sorted descending.
    eigenvectors : ndarray, shape (n, d, d)
        Orthogonal; column k belongs to ``eigenvalues[:, k]``.
    sweeps : ndarray of int, shape (n,)
        Number of sweeps each matrix needed.
    """
    a = np.array(stack, dtype=float)
    if a.ndim != 3 or a.shape[1] != a.shape[2]:
        raise InputError(f"expected a stack of square matrices, got shape {a.shape}")
    a = 0.5 * (a + np.swapaxes(a, 1, 2))
    n, d, _ = a.shape
    v = np.broadcast_to(np.eye(d), (n, d, d)).copy()
    sweeps = np.zeros(n, dtype=int)
    # exact power-of-two rescaling to max |a_ij| in [0.5, 1): the stopping
    # rule becomes relative to ||A||_F and small matrices cannot underflow
    _, expo = np.frexp(np.max(np.abs(a), axis=(1, 2)) if d else np.zeros(n))
    scale = np.ldexp(1.0, expo)
    a = a / scale[:, None, None]
    threshold = tol * np.sqrt(np.sum(a * a, axis=(1, 2)))

    for _ in range(max_sweeps):
        active = np.flatnonzero(_off_norm(a) > threshold)
        if active.size == 0:
            break
        sweeps[active] += 1
        aa = a[active]
        vv = v[active]
        for p in range(d - 1):
            for q in range(p + 1, d):
                apq = aa[:, p, q]
                rot = apq != 0.0
                if not np.any(rot):
                    continue
                safe = np.where(rot, apq, 1.0)
                # huge theta overflows to inf and correctly gives t = 0
                with np.errstate(over="ignore"):
                    theta = (aa[:, q, q] - aa[:, p, p]) / (2.0 * safe)
                    t = np.where(theta >= 0.0, 1.0, -1.0) / (np.abs(theta) + np.hypot(theta, 1.0))
                t = np.where(rot, t, 0.0)
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                c_ = c[:, None]
                s_ = s[:, None]
                # A <- A P, then A <- P^T A, with P the (p, q) plane rotation
                colp = aa[:, :, p].copy()
                colq = aa[:, :, q]
                aa[:, :, p] = c_ * colp - s_ * colq
                aa[:, :, q] = s_ * colp + c_ * colq
                rowp = aa[:, p, :].copy()
                rowq = aa[:, q, :]
                aa[:, p, :] = c_ * rowp - s_ * rowq
                aa[:, q, :] = s_ * rowp + c_ * rowq
                aa[rot, p, q] = 0.0
                aa[rot, q, p] = 0.0
                vp = vv[:, :, p].copy()
                vq = vv[:, :, q]
                vv[:, :, p] = c_ * vp - s_ * vq
                vv[:, :, q] = s_ * vp + c_ * vq
        a[active] = aa
        v[active] = vv

    lam = np.diagonal(a, axis1=1, axis2=2) * scale[:, None]
    order = np.argsort(-lam, axis=1, kind="stable")
    lam = np.take_along_axis(lam, order, axis=1)
    v = np.take_along_axis(v, order[:, None, :], axis=2)
    return lam, v, sweeps


def eigendecompose(m) -> EigenDecomposition:
    m = as_symmetric(m)
    lam, q, sweeps = jacobi_eigh(m.entries[None])
    return EigenDecomposition(lam[0], q[0], int(sweeps[0]))


def eigenvalues_batch(stack) -> np.ndarray:
    """Descending eigenvalues for each matrix in ``stack``."""
    lam, _, _ = jacobi_eigh(stack)
    return lam


# --------------------------------------------------------------------------
# canonical split and indices


def _parts(lam: np.ndarray, zero_threshold: float):
    lam = np.asarray(lam, dtype=float)
    if zero_threshold > 0:
        lam = np.where(np.abs(lam) <= zero_threshold, 0.0, lam)
    return np.maximum(lam, 0.0), np.maximum(-lam, 0.0)


def canonical_split(m, zero_threshold: float = 0.0) -> CanonicalSplit:
    """Split ``m`` into ``plus - minus`` in its own eigenbasis.

    ``zero_threshold`` snaps eigenvalues with ``|lam| <= zero_threshold`` to
    zero before splitting. The default of 0 keeps the exact split.
    """
    eig = eigendecompose(m)
    pos, neg = _parts(eig.eigenvalues, zero_threshold)
    q = eig.eigenvectors
    plus = (q * pos) @ q.T
    minus = (q * neg) @ q.T
    nuclear_plus = float(np.sum(pos))
    nuclear_minus = float(np.sum(neg))
    return CanonicalSplit(
        plus=SymmetricMatrix(plus),
        minus=SymmetricMatrix(minus),
        nuclear_plus=nuclear_plus,
        nuclear_minus=nuclear_minus,
        nuclear_total=nuclear_plus + nuclear_minus,
        eigenvalues=eig.eigenvalues,
    )


def nuclear_norm(m) -> float:
    return float(np.sum(np.abs(eigendecompose(m).eigenvalues)))


def psd_indices_from_eigenvalues(lam, zero_threshold: float = 0.0) -> PsdIndexReport:
    pos, neg = _parts(lam, zero_threshold)
    lops = float(np.sum(neg))
    total = float(np.sum(pos)) + lops
    if total == 0.0:
        return PsdIndexReport(0.0, 0.0, 1.0, True, np.asarray(lam))
    return PsdIndexReport(lops, lops / total, float(np.sum(pos)) / total, False, np.asarray(lam))


def psd_indices(m, zero_threshold: float = 0.0) -> PsdIndexReport:
    """LOPS, NLOPS and PS of a symmetric matrix.

    A zero matrix is reported as PSD: ``lops = nlops = 0``, ``ps = 1`` with
    ``degenerate=True``.
    """
    return psd_indices_from_eigenvalues(eigendecompose(m).eigenvalues, zero_threshold)


def is_psd(m, tol: float = PSD_TOL) -> bool:
    m = as_symmetric(m)
    lam = eigendecompose(m).eigenvalues
    return bool(lam[-1] >= -tol * max(1.0, m.frobenius()))


def trace_bound_check(h1, h2, tol: float = 1e-9) -> bool:
    """Check tr(H+) <= tr(h1) and tr(H-) <= tr(h2) for H = h1 - h2.

    Both arguments must be positive semidefinite.
    """
    h1 = as_symmetric(h1)
    h2 = as_symmetric(h2)
    if h1.dim != h2.dim:
        raise InputError(f"dimension mismatch: {h1.dim} vs {h2.dim}")
    for name, h in (("h1", h1), ("h2", h2)):
        if not is_psd(h):
            raise PreconditionError(f"{name} is not positive semidefinite")
    split = canonical_split(SymmetricMatrix(h1.entries - h2.entries))
    tr_plus = float(np.trace(split.plus.entries))
    tr_minus = float(np.trace(split.minus.entries))
    return bool(
        tr_plus <= float(np.trace(h1.entries)) + tol
        and tr_minus <= float(np.trace(h2.entries)) + tol
    )


# --------------------------------------------------------------------------
# brute-force distance oracle


@dataclass(frozen=True)
class OracleBudget:
    grid_steps: int = 50
    perturbations: int = 200
    random_samples: int = 2000
    refine_rounds: int = 40
    refine_batch: int = 32
    seed: int = 0


def _nuclear_stack(stack: np.ndarray) -> np.ndarray:
    # independent of the Jacobi solver on purpose
    d = stack.shape[-1]
    if d == 1:
        return np.abs(stack[:, 0, 0])
    if d == 2:
        p = stack[:, 0, 0]
        s = stack[:, 1, 1]
        r = stack[:, 0, 1]
        mid = 0.5 * (p + s)
        rad = np.hypot(0.5 * (p - s), r)
        return np.abs(mid + rad) + np.abs(mid - rad)
    return np.sum(np.abs(np.linalg.eigvalsh(stack)), axis=-1)


def _project_psd(stack: np.ndarray) -> np.ndarray:
    stack = 0.5 * (stack + np.swapaxes(stack, -1, -2))
    w, u = np.linalg.eigh(stack)
    return (u * np.maximum(w, 0.0)[..., None, :]) @ np.swapaxes(u, -1, -2)


def _grid_candidates(d: int, scale: float, steps: int) -> np.ndarray:
    axis = np.linspace(0.0, scale, steps)
    if d == 1:
        return axis.reshape(-1, 1, 1)
    if d != 2:
        return np.empty((0, d, d))
    a, c = np.meshgrid(axis, axis, indexing="ij")
    a = a.ravel()
    c = c.ravel()
    frac = np.linspace(-1.0, 1.0, steps)
    bmax = np.sqrt(a * c)
    b = bmax[:, None] * frac[None, :]
    out = np.empty((a.size, steps, 2, 2))
    out[:, :, 0, 0] = a[:, None]
    out[:, :, 1, 1] = c[:, None]
    out[:, :, 0, 1] = b
    out[:, :, 1, 0] = b
    return out.reshape(-1, 2, 2)


def nuclear_distance_to_psd_oracle(m, budget: OracleBudget = OracleBudget()) -> float:
    """Brute-force estimate of min over PSD M of ||m - M||_*.

    Searches H+ itself, a lattice over 2x2 PSD matrices, random PSD
    matrices, projected random perturbations of H+, and finally a
    shrinking random local search around the best point found. Only meant
    for checking the canonical split on small matrices.
    """
    m = as_symmetric(m)
    d = m.dim
    if d > 3:
        raise UnsupportedError(f"distance oracle supports dim <= 3, got {d}")
    h = m.entries
    scale = m.frobenius()
    if scale == 0.0:
        return 0.0
    rng = np.random.default_rng(budget.seed)

    def score(cands):
        return _nuclear_stack(h[None] - cands)

    plus = canonical_split(m).plus.entries
    pools = [plus[None], _grid_candidates(d, 2.0 * scale, budget.grid_steps)]

    if budget.random_samples:
        f = rng.standard_normal((budget.random_samples, d, d))
        rand = f @ np.swapaxes(f, 1, 2)
        rand *= (scale * rng.uniform(0.0, 2.0, budget.random_samples) / d)[:, None, None]
        pools.append(rand)

    if budget.perturbations:
        noise = rng.standard_normal((budget.perturbations, d, d))
        sigma = scale * np.logspace(-4, 0, budget.perturbations)
        pools.append(_project_psd(plus[None] + sigma[:, None, None] * noise))

    best = None
    best_val = np.inf
    for cands in pools:
        if cands.shape[0] == 0:
            continue
        vals = score(cands)
        k = int(np.argmin(vals))
        if vals[k] < best_val:
            best_val = float(vals[k])
            best = cands[k]

    step = 0.1 * scale
    for _ in range(budget.refine_rounds):
        noise = rng.standard_normal((budget.refine_batch, d, d))
        cands = _project_psd(best[None] + step * noise)
        vals = score(cands)
        k = int(np.argmin(vals))
        if vals[k] < best_val:
            best_val = float(vals[k])
            best = cands[k]
        else:
            step *= 0.5
    return best_val


def load_matrix_csv(path) -> SymmetricMatrix:
    """Read a square matrix from a comma-separated text file.

    Blank lines and lines starting with '#' are skipped. The matrix is
    symmetrized, with a warning logged if it was noticeably asymmetric.
    """
    rows = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            try:
                rows.append([float(tok) for tok in line.split(",")])
            except ValueError as exc:
                raise InputError(f"{path}:{lineno}: {exc}") from None
    if not rows or any(len(r) != len(rows) for r in rows):
        raise InputError(f"{path}: matrix must be square and non-empty")
    a = np.array(rows)
    asym = float(np.max(np.abs(a - a.T))) if a.size else 0.0
    if asym > 1e-8:
        log.warning("%s: matrix asymmetric by %.3g, symmetrizing", path, asym)
    return SymmetricMatrix(a)
