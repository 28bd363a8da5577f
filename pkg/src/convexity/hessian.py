"""Central finite-difference Hessians, plus closed forms for corpus fields.

All stencil points for a batch of base points are gathered into one array
and the field is evaluated once, so the cost of a lattice Hessian is a
single vectorized call.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .errors import BoundaryError, DomainError, InputError, UnsupportedError
from .field import ScalarField, builtin
from .symcore import SymmetricMatrix

MAX_SHRINK = 8


@dataclass(frozen=True)
class FdConfig:
    """Step control for central differences.

    With ``relative=True`` the step on axis i is ``base_step * max(1, |x_i|)``.
    ``boundary_mode="shrink"`` halves a step (at most 8 times) until the
    stencil fits inside the field's domain hint; ``"reject"`` raises instead.
    """

    base_step: float = 1e-4
    relative: bool = True
    boundary_mode: str = "shrink"

    def __post_init__(self):
        if not 0.0 < self.base_step <= 0.1:
            raise InputError(f"base_step must lie in (0, 0.1], got {self.base_step}")
        if self.boundary_mode not in ("shrink", "reject"):
            raise InputError(f"unknown boundary mode {self.boundary_mode!r}")


DEFAULT_FD = FdConfig()


def step_sizes(f: ScalarField, x: np.ndarray, cfg: FdConfig = DEFAULT_FD) -> np.ndarray:
    """Per-point, per-axis steps that keep the stencil inside the domain hint."""
    h = cfg.base_step * (np.maximum(1.0, np.abs(x)) if cfg.relative else np.ones_like(x))
    if f.domain_hint is None:
        return h
    lo, hi = f.domain_hint
    outside = (x < lo) | (x > hi)
    if np.any(outside):
        k = int(np.argmax(outside.any(axis=-1)))
        raise BoundaryError(f"{f.name}: point {x[k].tolist()} lies outside the domain")
    for _ in range(MAX_SHRINK + 1):
        bad = (x - h < lo) | (x + h > hi)
        if not np.any(bad) or cfg.boundary_mode == "reject":
            break
        h = np.where(bad, 0.5 * h, h)
    bad = (x - h < lo) | (x + h > hi)
    if np.any(bad):
        k = int(np.argmax(bad.any(axis=-1)))
        raise BoundaryError(
            f"{f.name}: stencil at {x[k].tolist()} does not fit inside the domain"
        )
    return h


def hessian_fd_batch(f: ScalarField, points, cfg: FdConfig = DEFAULT_FD) -> np.ndarray:
    """Finite-difference Hessians at each row of ``points`` (shape (n, d))."""
    x = np.atleast_2d(np.asarray(points, dtype=float))
    n, d = x.shape
    if d != f.dimension:
        raise InputError(f"points have dimension {d}, field has {f.dimension}")
    h = step_sizes(f, x, cfg)
    # make x + h exactly representable so the step matches the stencil
    h = (x + h) - x

    pairs = [(i, j) for i in range(d) for j in range(i + 1, d)]
    k = 1 + 2 * d + 4 * len(pairs)
    stencil = np.repeat(x[:, None, :], k, axis=1)
    col = 1
    for i in range(d):
        stencil[:, col, i] += h[:, i]
        stencil[:, col + 1, i] -= h[:, i]
        col += 2
    for i, j in pairs:
        for si, sj in ((1, 1), (1, -1), (-1, 1), (-1, -1)):
            stencil[:, col, i] += si * h[:, i]
            stencil[:, col, j] += sj * h[:, j]
            col += 1
    try:
        vals = f(stencil)
    except DomainError as exc:
        raise BoundaryError(f"stencil evaluation failed: {exc}") from exc

    out = np.empty((n, d, d))
    f0 = vals[:, 0]
    col = 1
    for i in range(d):
        out[:, i, i] = (vals[:, col] - 2.0 * f0 + vals[:, col + 1]) / (h[:, i] * h[:, i])
        col += 2
    for i, j in pairs:
        pp, pm, mp, mm = (vals[:, col + s] for s in range(4))
        out[:, i, j] = out[:, j, i] = ((pp - pm) - (mp - mm)) / (4.0 * h[:, i] * h[:, j])
        col += 4
    return out


def hessian_fd(f: ScalarField, point, cfg: FdConfig = DEFAULT_FD) -> SymmetricMatrix:
    x = np.asarray(point, dtype=float).reshape(1, -1)
    return SymmetricMatrix(hessian_fd_batch(f, x, cfg)[0])


# --------------------------------------------------------------------------
# closed forms


def _h_beta_hessian(spec, x):
    from .risk import line_loss_derivatives, line_total_loss, BETA_EPS

    w = np.asarray(spec.weights)
    beta = spec.beta
    d = w.size
    g = np.array([float(line_total_loss(l, x[i])) for i, l in enumerate(spec.lines)])
    der = [line_loss_derivatives(l, x[i]) for i, l in enumerate(spec.lines)]
    g1 = np.array([float(a) for a, _ in der])
    g2 = np.array([float(b) for _, b in der])
    H = np.empty((d, d))
    if abs(beta) < BETA_EPS:
        m = float(np.exp(np.sum(w * np.log(g))))
        r = w * g1 / g
        H[:] = m * np.outer(r, r)
        H[np.diag_indices(d)] += m * w * (g2 / g - (g1 / g) ** 2)
        return H
    s = float(np.sum(w * g ** beta))
    u = w * g ** (beta - 1.0) * g1
    H[:] = (1.0 - beta) * s ** (1.0 / beta - 2.0) * np.outer(u, u)
    H[np.diag_indices(d)] += s ** (1.0 / beta - 1.0) * w * (
        (beta - 1.0) * g ** (beta - 2.0) * g1 ** 2 + g ** (beta - 1.0) * g2
    )
    return H


def _closed_form(name: str, x: np.ndarray, params: dict) -> np.ndarray:
    if name == "h_cos":
        return np.diag([np.cos(x[0]), np.cos(x[1])])
    if name == "cubic_1d":
        return np.array([[6.0 * x[0]]])
    if name == "neg_cos_1d":
        return np.array([[np.cos(x[0])]])
    if name == "quadratic":
        a = np.asarray(params["matrix"], dtype=float)
        return 0.5 * (a + a.T)
    if name == "g_risk":
        from .risk import LineSpec, UNIFORM01, line_loss_derivatives

        line = LineSpec(UNIFORM01, p=params.get("p", 0.99), alpha=params.get("alpha", 0.25),
                        penalty="power")
        return np.array([[float(line_loss_derivatives(line, x[0])[1])]])
    if name.startswith("h_beta"):
        spec = params.get("spec")
        if spec is None:
            spec = builtin("h_beta", params).params["spec"]
        return _h_beta_hessian(spec, x)
    raise UnsupportedError(f"no closed-form Hessian registered for {name!r}")


def analytic_hessian(name: Union[str, ScalarField], point, params: Optional[dict] = None) -> SymmetricMatrix:
    """Exact Hessian of a corpus field, by name or by field object."""
    if isinstance(name, ScalarField):
        params = {**name.params, **(params or {})}
        name = name.name
    x = np.asarray(point, dtype=float).reshape(-1)
    return SymmetricMatrix(_closed_form(name, x, params or {}))
